//! Multi-trial experiment harness and hyperparameter sweeps.
//!
//! A plan regenerates its synthetic pool per trial (independent trials),
//! splits it into a training prefix and a fixed test block, selects the
//! basis on the training split, fits every method, and evaluates against
//! the generating truth. Outputs are plot-ready CSVs plus a JSON summary;
//! every row carries the seeds and config hash needed to regenerate it.

use crate::basis;
use crate::error::{HawkesError, Result};
use crate::eval;
use crate::learn::{fit, LearnConfig};
use crate::simulate::{make_synthetic, KernelFamily, SyntheticConfig};
use crate::types::{ClusterStructure, Dataset};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One method row of a plan: a name plus its regularization weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub alpha_s: f64,
    pub alpha_g: f64,
    pub alpha_p: f64,
    #[serde(default)]
    pub use_clusters: bool,
}

impl MethodSpec {
    /// The named variants at the study's weights (lasso 10, group 100,
    /// similarity 1000).
    pub fn standard(name: &str) -> Option<Self> {
        let (alpha_s, alpha_g, alpha_p, use_clusters) = match name {
            "MLE" => (0.0, 0.0, 0.0, false),
            "MLE-S" => (10.0, 0.0, 0.0, false),
            "MLE-GL" => (0.0, 100.0, 0.0, false),
            "MLE-SGL" => (10.0, 100.0, 0.0, false),
            "MLE-SGLP" => (10.0, 100.0, 1000.0, true),
            _ => return None,
        };
        Some(Self {
            name: name.to_string(),
            alpha_s,
            alpha_g,
            alpha_p,
            use_clusters,
        })
    }
}

/// Iteration policy shared by every fit in a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnSettings {
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_inner_max")]
    pub inner_max: usize,
    #[serde(default = "default_outer_max")]
    pub outer_max: usize,
    #[serde(default = "default_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_tol")]
    pub outer_tol: f64,
}

fn default_inner_max() -> usize {
    100
}
fn default_outer_max() -> usize {
    50
}
fn default_tol() -> f64 {
    1e-5
}

impl Default for LearnSettings {
    fn default() -> Self {
        Self {
            eta: None,
            inner_max: default_inner_max(),
            outer_max: default_outer_max(),
            inner_tol: default_tol(),
            outer_tol: default_tol(),
        }
    }
}

/// The study shape: per trial, a fresh pool of `max(training_sizes) +
/// test_size` sequences; training prefixes of each size; a fixed test block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub family: KernelFamily,
    pub training_sizes: Vec<usize>,
    pub num_trials: usize,
    pub test_size: usize,
    pub methods: Vec<MethodSpec>,
    /// 1-based type clusters, as in cluster files.
    #[serde(default)]
    pub clusters: Vec<Vec<usize>>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub learn: LearnSettings,
}

fn default_horizon() -> f64 {
    50.0
}
fn default_rho() -> f64 {
    0.01
}

impl ExperimentPlan {
    /// The paper-shaped study: sizes 50..250, 10 trials, 250 test sequences,
    /// clusters {1,2,3} and {4,5}.
    pub fn standard(family: KernelFamily, methods: &[&str], master_seed: u64) -> Result<Self> {
        let methods = methods
            .iter()
            .map(|name| {
                MethodSpec::standard(name).ok_or_else(|| {
                    HawkesError::InvalidConfig(format!("unknown method '{name}'"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family,
            training_sizes: vec![50, 100, 150, 200, 250],
            num_trials: 10,
            test_size: 250,
            methods,
            clusters: vec![vec![1, 2, 3], vec![4, 5]],
            horizon: default_horizon(),
            rho: default_rho(),
            master_seed,
            learn: LearnSettings::default(),
        })
    }

    fn validate(&self) -> Result<()> {
        if self.training_sizes.is_empty() || self.training_sizes.iter().any(|&c| c == 0) {
            return Err(HawkesError::InvalidConfig(
                "training sizes must be nonempty and positive".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(HawkesError::InvalidConfig("methods must be nonempty".into()));
        }
        if self.num_trials == 0 || self.test_size == 0 {
            return Err(HawkesError::InvalidConfig(
                "num_trials and test_size must be positive".into(),
            ));
        }
        if self.methods.iter().any(|m| m.use_clusters) && self.clusters.is_empty() {
            return Err(HawkesError::InvalidConfig(
                "a clustered method requires the plan to carry clusters".into(),
            ));
        }
        Ok(())
    }

    fn cluster_structure(&self, num_types: usize) -> Result<Option<ClusterStructure>> {
        if self.clusters.is_empty() {
            return Ok(None);
        }
        let zero_based = self
            .clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&u| {
                        u.checked_sub(1).ok_or_else(|| {
                            HawkesError::InvalidConfig("cluster indices are 1-based".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(ClusterStructure::new(zero_based, num_types)?))
    }
}

/// SplitMix64; used to derive independent stream seeds from the master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// FNV-1a over the serialized plan; a provenance id, not a cryptographic one.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

/// One (method, size, trial) result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRow {
    pub method: String,
    pub training_size: usize,
    pub trial: usize,
    pub alpha_s: f64,
    pub alpha_g: f64,
    pub alpha_p: f64,
    pub sim_seed: u64,
    pub fit_seed: u64,
    pub config_hash: String,
    pub status: String,
    pub loglike_test: Option<f64>,
    pub e_mu: Option<f64>,
    pub e_phi: Option<f64>,
    pub edge_precision: Option<f64>,
    pub edge_recall: Option<f64>,
    pub edge_f1: Option<f64>,
    pub absent_precision: Option<f64>,
    pub absent_recall: Option<f64>,
    pub absent_f1: Option<f64>,
    pub absent_recovered: Option<usize>,
    pub zero_groups: Option<usize>,
    pub converged: Option<bool>,
    pub outer_iterations: Option<usize>,
    pub inner_iterations: Option<usize>,
}

/// Mean/std aggregate over the successful trials of one (method, size).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub training_size: usize,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub mean_loglike: f64,
    pub std_loglike: f64,
    pub mean_e_mu: f64,
    pub std_e_mu: f64,
    pub mean_e_phi: f64,
    pub std_e_phi: f64,
    pub mean_edge_f1: f64,
    pub std_edge_f1: f64,
    pub mean_absent_f1: f64,
    pub std_absent_f1: f64,
    pub mean_absent_recovered: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub plan: ExperimentPlan,
    pub config_hash: String,
    pub rows: Vec<SummaryRow>,
}

/// In-memory results plus the files written to `out_dir`:
/// `trials.csv`, `summary.csv`, `summary.json`.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trials: Vec<TrialRow>,
    pub summary: ExperimentSummary,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_single_fit(
    method: &MethodSpec,
    train: &Dataset,
    test: &Dataset,
    basis_cfg: &basis::BasisConfig,
    truth: &crate::simulate::GroundTruth,
    clusters: Option<&ClusterStructure>,
    settings: &LearnSettings,
    horizon: f64,
    fit_seed: u64,
) -> Result<(eval::EvalReport, crate::learn::FitReport)> {
    let cfg = LearnConfig {
        alpha_s: method.alpha_s,
        alpha_g: method.alpha_g,
        alpha_p: method.alpha_p,
        clusters: if method.use_clusters {
            clusters.cloned()
        } else {
            None
        },
        eta: settings.eta,
        inner_max: settings.inner_max,
        outer_max: settings.outer_max,
        inner_tol: settings.inner_tol,
        outer_tol: settings.outer_tol,
        seed: fit_seed,
    };
    let (params, report) = fit(train, basis_cfg, &cfg)?;
    let eval_report = eval::evaluate(
        &params,
        basis_cfg,
        truth,
        test,
        horizon,
        eval::default_grid_step(horizon),
        crate::model::GRAPH_EXTRACTION_TOL,
    )?;
    Ok((eval_report, report))
}

fn run_trial(plan: &ExperimentPlan, trial: usize, hash: &str) -> Result<Vec<TrialRow>> {
    let max_train = *plan.training_sizes.iter().max().unwrap();
    let pool_size = max_train + plan.test_size;
    let sim_seed = derive_seed(plan.master_seed, trial as u64);
    let (pool, truth) = make_synthetic(&SyntheticConfig {
        num_sequences: pool_size,
        horizon: plan.horizon,
        family: plan.family,
        seed: sim_seed,
        verbatim_window: false,
    })?;
    let clusters = plan.cluster_structure(pool.num_types)?;
    let test = Dataset::new(pool.sequences[max_train..].to_vec(), pool.num_types)?;
    let mut rows = Vec::new();
    for &size in &plan.training_sizes {
        let train = Dataset::new(pool.sequences[..size].to_vec(), pool.num_types)?;
        let basis_cfg = basis::select_basis_rho(&train, plan.rho, plan.horizon)?;
        for (mi, method) in plan.methods.iter().enumerate() {
            let fit_seed = derive_seed(
                plan.master_seed,
                0x1000_0000u64
                    + trial as u64 * 0x10000
                    + size as u64 * 0x100
                    + mi as u64,
            );
            let mut row = TrialRow {
                method: method.name.clone(),
                training_size: size,
                trial,
                alpha_s: method.alpha_s,
                alpha_g: method.alpha_g,
                alpha_p: method.alpha_p,
                sim_seed,
                fit_seed,
                config_hash: hash.to_string(),
                status: "ok".into(),
                loglike_test: None,
                e_mu: None,
                e_phi: None,
                edge_precision: None,
                edge_recall: None,
                edge_f1: None,
                absent_precision: None,
                absent_recall: None,
                absent_f1: None,
                absent_recovered: None,
                zero_groups: None,
                converged: None,
                outer_iterations: None,
                inner_iterations: None,
            };
            match run_single_fit(
                method,
                &train,
                &test,
                &basis_cfg,
                &truth,
                clusters.as_ref(),
                &plan.learn,
                plan.horizon,
                fit_seed,
            ) {
                Ok((eval_report, fit_report)) => {
                    row.loglike_test = Some(eval_report.loglike_test);
                    row.e_mu = Some(eval_report.e_mu);
                    row.e_phi = Some(eval_report.e_phi);
                    row.edge_precision = Some(eval_report.edge_precision);
                    row.edge_recall = Some(eval_report.edge_recall);
                    row.edge_f1 = Some(eval_report.edge_f1);
                    row.absent_precision = Some(eval_report.absent_precision);
                    row.absent_recall = Some(eval_report.absent_recall);
                    row.absent_f1 = Some(eval_report.absent_f1);
                    row.absent_recovered = Some(eval_report.absent_edges_recovered);
                    row.zero_groups = Some(fit_report.zero_groups);
                    row.converged = Some(fit_report.converged);
                    row.outer_iterations = Some(fit_report.outer_iterations);
                    row.inner_iterations = Some(fit_report.inner_iterations);
                }
                // Individual fit failures become rows so sweeps complete.
                Err(err) => row.status = format!("error: {err}"),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn summarize(plan: &ExperimentPlan, hash: &str, trials: &[TrialRow]) -> ExperimentSummary {
    let mut rows = Vec::new();
    for method in &plan.methods {
        for &size in &plan.training_sizes {
            let group: Vec<&TrialRow> = trials
                .iter()
                .filter(|r| r.method == method.name && r.training_size == size)
                .collect();
            let ok: Vec<&TrialRow> = group
                .iter()
                .copied()
                .filter(|r| r.status == "ok")
                .collect();
            let collect = |f: fn(&TrialRow) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|r| f(r)).collect()
            };
            let (mean_loglike, std_loglike) = mean_std(&collect(|r| r.loglike_test));
            let (mean_e_mu, std_e_mu) = mean_std(&collect(|r| r.e_mu));
            let (mean_e_phi, std_e_phi) = mean_std(&collect(|r| r.e_phi));
            let (mean_edge_f1, std_edge_f1) = mean_std(&collect(|r| r.edge_f1));
            let (mean_absent_f1, std_absent_f1) = mean_std(&collect(|r| r.absent_f1));
            let (mean_absent_recovered, _) =
                mean_std(&collect(|r| r.absent_recovered.map(|v| v as f64)));
            rows.push(SummaryRow {
                method: method.name.clone(),
                training_size: size,
                trials_ok: ok.len(),
                trials_failed: group.len() - ok.len(),
                mean_loglike,
                std_loglike,
                mean_e_mu,
                std_e_mu,
                mean_e_phi,
                std_e_phi,
                mean_edge_f1,
                std_edge_f1,
                mean_absent_f1,
                std_absent_f1,
                mean_absent_recovered,
            });
        }
    }
    ExperimentSummary {
        plan: plan.clone(),
        config_hash: hash.to_string(),
        rows,
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Runs the plan and writes `trials.csv`, `summary.csv`, and `summary.json`
/// into `out_dir`. Trials run in parallel (one rayon task per trial);
/// outputs are merged in trial order so results are independent of the
/// thread count.
pub fn run_experiment(plan: &ExperimentPlan, out_dir: &Path) -> Result<ExperimentOutcome> {
    plan.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(plan);
    let per_trial: Vec<Result<Vec<TrialRow>>> = (0..plan.num_trials)
        .into_par_iter()
        .map(|trial| run_trial(plan, trial, &hash))
        .collect();
    let mut trials = Vec::new();
    for result in per_trial {
        trials.extend(result?);
    }
    trials.sort_by(|a, b| {
        (
            &a.method,
            a.training_size,
            a.trial,
        )
            .cmp(&(&b.method, b.training_size, b.trial))
    });
    let summary = summarize(plan, &hash, &trials);
    write_csv(&out_dir.join("trials.csv"), &trials)?;
    write_csv(&out_dir.join("summary.csv"), &summary.rows)?;
    crate::io::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(ExperimentOutcome { trials, summary })
}

/// Which regularization weight a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    AlphaS,
    AlphaG,
    AlphaP,
}

impl std::str::FromStr for SweepParam {
    type Err = HawkesError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha-s" | "alpha_s" => Ok(Self::AlphaS),
            "alpha-g" | "alpha_g" => Ok(Self::AlphaG),
            "alpha-p" | "alpha_p" => Ok(Self::AlphaP),
            other => Err(HawkesError::InvalidConfig(format!(
                "unknown sweep parameter '{other}'"
            ))),
        }
    }
}

/// Log-spaced grid covering `[lo, hi]` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub alpha_s: f64,
    pub alpha_g: f64,
    pub alpha_p: f64,
    pub fit_seed: u64,
    pub status: String,
    pub loglike_test: Option<f64>,
    pub converged: Option<bool>,
}

/// One-dimensional profile: vary one weight over `grid`, fix the others at
/// `base = (alpha_s, alpha_g, alpha_p)`, fit on `train`, record held-out
/// likelihood on `test`.
pub fn sweep_profile(
    train: &Dataset,
    test: &Dataset,
    basis_cfg: &basis::BasisConfig,
    clusters: Option<&ClusterStructure>,
    param: SweepParam,
    grid: &[f64],
    base: (f64, f64, f64),
    settings: &LearnSettings,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(HawkesError::InvalidConfig("sweep grid is empty".into()));
    }
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let (mut alpha_s, mut alpha_g, mut alpha_p) = base;
            match param {
                SweepParam::AlphaS => alpha_s = value,
                SweepParam::AlphaG => alpha_g = value,
                SweepParam::AlphaP => alpha_p = value,
            }
            let fit_seed = derive_seed(master_seed, 0x2000_0000 + i as u64);
            let cfg = LearnConfig {
                alpha_s,
                alpha_g,
                alpha_p,
                clusters: if alpha_p > 0.0 { clusters.cloned() } else { None },
                eta: settings.eta,
                inner_max: settings.inner_max,
                outer_max: settings.outer_max,
                inner_tol: settings.inner_tol,
                outer_tol: settings.outer_tol,
                seed: fit_seed,
            };
            let mut row = SweepRow {
                param,
                value,
                alpha_s,
                alpha_g,
                alpha_p,
                fit_seed,
                status: "ok".into(),
                loglike_test: None,
                converged: None,
            };
            match fit(train, basis_cfg, &cfg)
                .and_then(|(params, report)| {
                    eval::loglike_test(&params, basis_cfg, test).map(|ll| (ll, report))
                }) {
                Ok((ll, report)) => {
                    row.loglike_test = Some(ll);
                    row.converged = Some(report.converged);
                }
                Err(err) => row.status = format!("error: {err}"),
            }
            row
        })
        .collect();
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv(path, rows)
}
