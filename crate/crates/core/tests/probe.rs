// Temporary performance/recovery probe; removed before release.
use hawkes_granger::*;

#[test]
#[ignore]
fn probe_sglp_recovery() {
    let t0 = std::time::Instant::now();
    let (pool, truth) = make_synthetic(&SyntheticConfig::new(500, KernelFamily::SineLike, 12345)).unwrap();
    println!(
        "simulated 500 seqs, {} events in {:?}",
        pool.total_events(),
        t0.elapsed()
    );
    let train = Dataset::new(pool.sequences[..250].to_vec(), 5).unwrap();
    let test = Dataset::new(pool.sequences[250..].to_vec(), 5).unwrap();
    let t0 = std::time::Instant::now();
    let basis_cfg = select_basis_rho(&train, 0.01, 12.5).unwrap();
    println!(
        "basis: M={} omega0={:.4} sigma={:.4} in {:?}",
        basis_cfg.num_bases(),
        basis_cfg.omega0(),
        basis_cfg.sigma(),
        t0.elapsed()
    );
    let clusters = ClusterStructure::new(vec![vec![0, 1, 2], vec![3, 4]], 5).unwrap();
    for (name, a_s, a_g, a_p, cl) in [
        ("MLE", 0.0, 0.0, 0.0, false),
        ("MLE-SGLP", 10.0, 100.0, 1000.0, true),
    ] {
        let cfg = LearnConfig {
            alpha_s: a_s,
            alpha_g: a_g,
            alpha_p: a_p,
            clusters: if cl { Some(clusters.clone()) } else { None },
            seed: 7,
            ..LearnConfig::default()
        };
        let t0 = std::time::Instant::now();
        let (params, report) = fit(&train, &basis_cfg, &cfg).unwrap();
        let dt = t0.elapsed();
        let est_graph = extract_graph(&params, 1e-7);
        let score = score_graph(&est_graph, &truth.true_graph()).unwrap();
        let ll = eval::loglike_test(&params, &basis_cfg, &test).unwrap();
        let phi = relative_error_phi(&params, &basis_cfg, &truth, 50.0, 0.025).unwrap();
        println!(
            "{name}: {dt:?}, inner {} outer {} conv {} zero_groups {} | absent f1 {:.3} (rec {}/{}) e_phi {:.3} e_mu {:.3} loglik {:.1}",
            report.inner_iterations,
            report.outer_iterations,
            report.converged,
            report.zero_groups,
            score.absent.f1,
            score.absent_recovered,
            score.absent_true,
            phi.mean,
            relative_error_mu(params.mu(), &truth.mu).unwrap(),
            ll
        );
        // group norms per pair
        for u in 0..5 {
            let row: Vec<String> = (0..5)
                .map(|u2| format!("{:.4}", params.group_norm(u, u2)))
                .collect();
            println!("  norms[{u}] = {}", row.join(" "));
        }
    }
}

#[test]
#[ignore]
fn probe_inner_dynamics() {
    let (pool, _truth) = make_synthetic(&SyntheticConfig::new(250, KernelFamily::SineLike, 12345)).unwrap();
    let train = Dataset::new(pool.sequences[..250].to_vec(), 5).unwrap();
    let basis_cfg = select_basis_rho(&train, 0.01, 12.5).unwrap();
    let clusters = ClusterStructure::new(vec![vec![0, 1, 2], vec![3, 4]], 5).unwrap();
    let cfg = LearnConfig {
        alpha_s: 10.0,
        alpha_g: 100.0,
        alpha_p: 1000.0,
        clusters: Some(clusters),
        seed: 7,
        inner_max: 200,
        outer_max: 1,
        inner_tol: 0.0,
        ..LearnConfig::default()
    };
    let (params, report) = fit(&train, &basis_cfg, &cfg).unwrap();
    for rec in report.trace.iter().take(30) {
        println!(
            "inner {:3}: loglik {:14.2} F_before {:14.2} F_after {:14.2}",
            rec.inner, rec.log_likelihood, rec.surrogate_before, rec.surrogate_after
        );
    }
    println!("...");
    for rec in report.trace.iter().skip(report.trace.len() - 5) {
        println!(
            "inner {:3}: loglik {:14.2} F_before {:14.2} F_after {:14.2}",
            rec.inner, rec.log_likelihood, rec.surrogate_before, rec.surrogate_after
        );
    }
    println!("norm(0,1) = {:.4}, norm(0,3) = {:.4}, norm(4,0) = {:.4}, mu = {:?}",
        params.group_norm(0, 1), params.group_norm(0, 3), params.group_norm(4, 0), params.mu());
}

#[test]
#[ignore]
fn probe_edge_effect() {
    let (pool, _truth) = make_synthetic(&SyntheticConfig::new(250, KernelFamily::SineLike, 12345)).unwrap();
    let train = Dataset::new(pool.sequences[..250].to_vec(), 5).unwrap();
    let basis_cfg = select_basis_rho(&train, 0.01, 12.5).unwrap();
    let clusters = ClusterStructure::new(vec![vec![0, 1, 2], vec![3, 4]], 5).unwrap();
    let cfg = LearnConfig {
        alpha_s: 10.0, alpha_g: 100.0, alpha_p: 1000.0,
        clusters: Some(clusters), seed: 7,
        inner_max: 200, outer_max: 1, inner_tol: 0.0,
        ..LearnConfig::default()
    };
    let (params, _) = fit(&train, &basis_cfg, &cfg).unwrap();
    // compensator weight per basis for source type 3
    let resp = e_step(&params, &basis_cfg, &train).unwrap();
    let _ = resp;
    println!("centers: {:?}", basis_cfg.centers().iter().map(|c| (c*10.0).round()/10.0).collect::<Vec<_>>());
    let m = basis_cfg.num_bases();
    // recompute D for types 0 and 3 directly
    for u2 in [0usize, 3] {
        let mut d = vec![0.0; m];
        for seq in &train.sequences {
            for e in seq.events() {
                if e.type_idx == u2 {
                    for (mi, dv) in d.iter_mut().enumerate() {
                        *dv += basis_cfg.kernel_cumulative(mi, seq.horizon() - e.time).unwrap();
                    }
                }
            }
        }
        println!("D[u2={u2}]  = {:?}", d.iter().map(|x| x.round()).collect::<Vec<_>>());
    }
    println!("a(0,3,m) = {:?}", params.group(0, 3).iter().map(|x| (x*1000.0).round()/1000.0).collect::<Vec<_>>());
    println!("a(0,1,m) = {:?}", params.group(0, 1).iter().map(|x| (x*1000.0).round()/1000.0).collect::<Vec<_>>());
    println!("a(4,0,m) = {:?}", params.group(4, 0).iter().map(|x| (x*1000.0).round()/1000.0).collect::<Vec<_>>());
}

#[test]
#[ignore]
fn probe_prox_per_iteration() {
    let (pool, truth) = make_synthetic(&SyntheticConfig::new(500, KernelFamily::SineLike, 12345)).unwrap();
    let train = Dataset::new(pool.sequences[..250].to_vec(), 5).unwrap();
    let test = Dataset::new(pool.sequences[250..].to_vec(), 5).unwrap();
    let clusters = ClusterStructure::new(vec![vec![0, 1, 2], vec![3, 4]], 5).unwrap();
    for support in [50.0, 12.5] {
        let basis_cfg = select_basis_rho(&train, 0.01, support).unwrap();
        for (inner_max, outer_max) in [(1usize, 600usize), (5, 200)] {
            let cfg = LearnConfig {
                alpha_s: 10.0, alpha_g: 100.0, alpha_p: 1000.0,
                clusters: Some(clusters.clone()), seed: 7,
                inner_max, outer_max,
                ..LearnConfig::default()
            };
            let t0 = std::time::Instant::now();
            let (params, report) = fit(&train, &basis_cfg, &cfg).unwrap();
            let est_graph = extract_graph(&params, 1e-7);
            let score = score_graph(&est_graph, &truth.true_graph()).unwrap();
            let ll = eval::loglike_test(&params, &basis_cfg, &test).unwrap();
            let phi = relative_error_phi(&params, &basis_cfg, &truth, support, support/2000.0).unwrap();
            println!(
                "T={support} inner_max={inner_max}: {:?} inner {} outer {} conv {} zero {} | absent f1 {:.3} ({}/{}) e_phi {:.3} e_mu {:.3} ll {:.1} mu0 {:.3}",
                t0.elapsed(), report.inner_iterations, report.outer_iterations, report.converged,
                report.zero_groups, score.absent.f1, score.absent_recovered, score.absent_true,
                phi.mean, relative_error_mu(params.mu(), &truth.mu).unwrap(), ll, params.mu()[0]
            );
        }
    }
}
