use clap::{Args, Parser, Subcommand};
use hawkes_granger::{
    basis, eval, experiment, io,
    learn::{self, LearnConfig},
    model, simulate,
};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hawkes-granger",
    about = "Simulate multivariate Hawkes processes, learn their impact functions, and recover the Granger causality graph",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample synthetic event sequences from the 5-type study generator
    Simulate(SimulateArgs),
    /// Select the Gaussian basis family from data
    SelectBasis(SelectBasisArgs),
    /// Fit a model by regularized EM
    Fit(FitArgs),
    /// Evaluate a fitted model against a ground truth on held-out data
    Evaluate(EvaluateArgs),
    /// Run the multi-trial study and write CSV/JSON summaries
    Experiment(ExperimentArgs),
    /// Profile held-out likelihood along one regularization weight
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Kernel family: sine | pwc
    #[arg(long, default_value = "sine")]
    family: String,
    #[arg(long = "num-seq")]
    num_seq: usize,
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset (JSON Lines)
    #[arg(long)]
    out: PathBuf,
    /// Output ground-truth file (JSON)
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SelectBasisArgs {
    #[arg(long)]
    data: PathBuf,
    /// Residual budget as a fraction of the zero-cutoff tail bound
    #[arg(long, default_value_t = 0.01)]
    rho: f64,
    /// Absolute residual budget (overrides --rho)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Basis support horizon; defaults to the longest sequence horizon
    #[arg(long)]
    horizon: Option<f64>,
    /// Write the basis JSON here as well as to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Basis JSON produced by select-basis; selected from the data if absent
    #[arg(long)]
    basis: Option<PathBuf>,
    #[arg(long = "alpha-s", default_value_t = 0.0)]
    alpha_s: f64,
    #[arg(long = "alpha-g", default_value_t = 0.0)]
    alpha_g: f64,
    #[arg(long = "alpha-p", default_value_t = 0.0)]
    alpha_p: f64,
    /// Cluster file (JSON, 1-based); required when --alpha-p > 0
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "inner-max", default_value_t = 100)]
    inner_max: usize,
    #[arg(long = "outer-max", default_value_t = 50)]
    outer_max: usize,
    #[arg(long = "inner-tol", default_value_t = 1e-5)]
    inner_tol: f64,
    #[arg(long = "outer-tol", default_value_t = 1e-5)]
    outer_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Output fit report with the objective trace (JSON)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Integration horizon for the kernel error; defaults to the basis support
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long = "grid-step")]
    grid_step: Option<f64>,
    /// Graph-extraction tolerance on the group norm
    #[arg(long = "graph-tol", default_value_t = model::GRAPH_EXTRACTION_TOL)]
    graph_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan file (JSON); flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated training sizes, e.g. 50,100,150,200,250
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "test-size")]
    test_size: Option<usize>,
    /// Comma-separated methods from MLE, MLE-S, MLE-GL, MLE-SGL, MLE-SGLP
    #[arg(long)]
    methods: Option<String>,
    #[arg(long = "master-seed")]
    master_seed: Option<u64>,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Which weight to vary: alpha-s | alpha-g | alpha-p
    #[arg(long)]
    param: String,
    /// Training data; generated from --seed when absent
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Kernel family when generating data
    #[arg(long, default_value = "sine")]
    family: String,
    #[arg(long = "num-train", default_value_t = 250)]
    num_train: usize,
    #[arg(long = "num-test", default_value_t = 250)]
    num_test: usize,
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "grid-points", default_value_t = 7)]
    grid_points: usize,
    #[arg(long = "grid-lo", default_value_t = 1e-2)]
    grid_lo: f64,
    #[arg(long = "grid-hi", default_value_t = 1e4)]
    grid_hi: f64,
    /// Fixed weights for the parameters not being swept
    #[arg(long = "alpha-s", default_value_t = 10.0)]
    alpha_s: f64,
    #[arg(long = "alpha-g", default_value_t = 100.0)]
    alpha_g: f64,
    #[arg(long = "alpha-p", default_value_t = 1000.0)]
    alpha_p: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HG_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = json!({"error": {"message": err.to_string()}});
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> hawkes_granger::Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let family: simulate::KernelFamily = args.family.parse()?;
            let config = simulate::SyntheticConfig {
                num_sequences: args.num_seq,
                horizon: args.horizon,
                family,
                seed: args.seed,
                verbatim_window: false,
            };
            let (data, truth) = simulate::make_synthetic(&config)?;
            io::write_dataset(&args.out, &data)?;
            if let Some(path) = args.truth {
                io::write_truth(&path, &truth)?;
            }
            eprintln!(
                "wrote {} sequences ({} events) to {}",
                data.sequences.len(),
                data.total_events(),
                args.out.display()
            );
            Ok(())
        }
        Command::SelectBasis(args) => {
            let data = io::read_dataset(&args.data, None)?;
            let horizon = args.horizon.unwrap_or_else(|| data.max_horizon());
            let basis_cfg = match args.epsilon {
                Some(eps) => basis::select_basis(&data, eps, horizon)?,
                None => basis::select_basis_rho(&data, args.rho, horizon)?,
            };
            let dto = json!({
                "omega0": basis_cfg.omega0(),
                "sigma": basis_cfg.sigma(),
                "centers": basis_cfg.centers(),
            });
            println!("{}", serde_json::to_string_pretty(&dto)?);
            if let Some(path) = args.out {
                io::write_json(&path, &dto)?;
            }
            Ok(())
        }
        Command::Fit(args) => {
            let data = io::read_dataset(&args.data, None)?;
            let basis_cfg = match &args.basis {
                Some(path) => {
                    // model files and bare basis files share the basis object
                    let value: serde_json::Value = io::read_json(path)?;
                    let omega0 = value["omega0"].as_f64().ok_or_else(|| {
                        hawkes_granger::HawkesError::InvalidConfig(format!(
                            "{} is not a basis JSON",
                            path.display()
                        ))
                    })?;
                    let sigma = value["sigma"].as_f64().unwrap_or(1.0 / omega0);
                    let centers: Vec<f64> = serde_json::from_value(value["centers"].clone())?;
                    let m = centers.len();
                    let support = if m >= 2 {
                        (centers[0] + (centers[1] - centers[0]) * m as f64).max(centers[m - 1])
                    } else {
                        std::f64::consts::PI / omega0
                    };
                    basis::BasisConfig::from_parts(omega0, sigma, centers, support)?
                }
                None => basis::select_basis_rho(&data, 0.01, data.max_horizon())?,
            };
            let clusters = match &args.clusters {
                Some(path) => Some(io::read_clusters(path, data.num_types)?),
                None => None,
            };
            let cfg = LearnConfig {
                alpha_s: args.alpha_s,
                alpha_g: args.alpha_g,
                alpha_p: args.alpha_p,
                clusters,
                eta: args.eta,
                inner_max: args.inner_max,
                outer_max: args.outer_max,
                inner_tol: args.inner_tol,
                outer_tol: args.outer_tol,
                seed: args.seed,
            };
            let (params, report) = learn::fit(&data, &basis_cfg, &cfg)?;
            io::write_model(&args.out, &params, &basis_cfg)?;
            if let Some(path) = args.report {
                io::write_json(&path, &report)?;
            }
            eprintln!(
                "fit: loglik {:.4}, {} zero groups, converged: {}",
                report.final_log_likelihood, report.zero_groups, report.converged
            );
            Ok(())
        }
        Command::Evaluate(args) => {
            let (params, basis_cfg) = io::read_model(&args.model)?;
            let truth = io::read_truth(&args.truth)?;
            let test = io::read_dataset(&args.test, Some(params.num_types()))?;
            let horizon = args.horizon.unwrap_or_else(|| basis_cfg.support_horizon());
            let grid_step = args
                .grid_step
                .unwrap_or_else(|| eval::default_grid_step(horizon));
            let report = eval::evaluate(
                &params,
                &basis_cfg,
                &truth,
                &test,
                horizon,
                grid_step,
                args.graph_tol,
            )?;
            io::write_json(&args.out, &report)?;
            eprintln!(
                "loglike {:.4}, e_mu {:.4}, e_phi {:.4}, absent f1 {:.3}",
                report.loglike_test, report.e_mu, report.e_phi, report.absent_f1
            );
            Ok(())
        }
        Command::Experiment(args) => {
            let mut plan = match &args.config {
                Some(path) => io::read_json(path)?,
                None => experiment::ExperimentPlan::standard(
                    simulate::KernelFamily::SineLike,
                    &["MLE", "MLE-S", "MLE-GL", "MLE-SGL", "MLE-SGLP"],
                    0,
                )?,
            };
            if let Some(family) = &args.family {
                plan.family = family.parse()?;
            }
            if let Some(sizes) = &args.sizes {
                plan.training_sizes = parse_list(sizes)?;
            }
            if let Some(trials) = args.trials {
                plan.num_trials = trials;
            }
            if let Some(test_size) = args.test_size {
                plan.test_size = test_size;
            }
            if let Some(methods) = &args.methods {
                plan.methods = methods
                    .split(',')
                    .map(|name| {
                        experiment::MethodSpec::standard(name.trim()).ok_or_else(|| {
                            hawkes_granger::HawkesError::InvalidConfig(format!(
                                "unknown method '{name}'"
                            ))
                        })
                    })
                    .collect::<hawkes_granger::Result<Vec<_>>>()?;
            }
            if let Some(seed) = args.master_seed {
                plan.master_seed = seed;
            }
            let outcome = experiment::run_experiment(&plan, &args.out_dir)?;
            eprintln!(
                "wrote {} trial rows and {} summary rows to {}",
                outcome.trials.len(),
                outcome.summary.rows.len(),
                args.out_dir.display()
            );
            Ok(())
        }
        Command::Sweep(args) => {
            let param: experiment::SweepParam = args.param.parse()?;
            let (train, test, clusters) = match (&args.data, &args.test) {
                (Some(train_path), Some(test_path)) => {
                    let train = io::read_dataset(train_path, None)?;
                    let test = io::read_dataset(test_path, Some(train.num_types))?;
                    (train, test, None)
                }
                _ => {
                    let family: simulate::KernelFamily = args.family.parse()?;
                    let (pool, _) = simulate::make_synthetic(&simulate::SyntheticConfig {
                        num_sequences: args.num_train + args.num_test,
                        horizon: args.horizon,
                        family,
                        seed: args.seed,
                        verbatim_window: false,
                    })?;
                    let train = hawkes_granger::Dataset::new(
                        pool.sequences[..args.num_train].to_vec(),
                        pool.num_types,
                    )?;
                    let test = hawkes_granger::Dataset::new(
                        pool.sequences[args.num_train..].to_vec(),
                        pool.num_types,
                    )?;
                    let clusters = hawkes_granger::ClusterStructure::new(
                        vec![vec![0, 1, 2], vec![3, 4]],
                        5,
                    )?;
                    (train, test, Some(clusters))
                }
            };
            let basis_cfg = basis::select_basis_rho(&train, 0.01, train.max_horizon())?;
            let grid = experiment::log_grid(args.grid_lo, args.grid_hi, args.grid_points);
            let rows = experiment::sweep_profile(
                &train,
                &test,
                &basis_cfg,
                clusters.as_ref(),
                param,
                &grid,
                (args.alpha_s, args.alpha_g, args.alpha_p),
                &experiment::LearnSettings::default(),
                args.seed,
            )?;
            experiment::write_sweep_csv(&args.out, &rows)?;
            eprintln!("wrote {} sweep rows to {}", rows.len(), args.out.display());
            Ok(())
        }
    }
}

fn parse_list(s: &str) -> hawkes_granger::Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim().parse::<usize>().map_err(|_| {
                hawkes_granger::HawkesError::InvalidConfig(format!("bad size '{x}'"))
            })
        })
        .collect()
}
