//! Evaluation measurements: held-out likelihood, relative parameter errors,
//! and causality-graph recovery scores.

use crate::basis::BasisConfig;
use crate::error::{HawkesError, Result};
use crate::model::{self, ModelParams};
use crate::simulate::GroundTruth;
use crate::types::{Dataset, GrangerGraph};
use serde::{Deserialize, Serialize};

/// Held-out log-likelihood; same contract as the training likelihood.
pub fn loglike_test(params: &ModelParams, basis: &BasisConfig, test_data: &Dataset) -> Result<f64> {
    model::log_likelihood(params, basis, test_data)
}

/// Euclidean relative error of the base rates.
pub fn relative_error_mu(est: &[f64], truth: &[f64]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(HawkesError::DimensionMismatch(format!(
            "mu vectors of length {} and {}",
            est.len(),
            truth.len()
        )));
    }
    let truth_norm = truth.iter().map(|x| x * x).sum::<f64>().sqrt();
    if truth_norm == 0.0 {
        return Err(HawkesError::InvalidConfig(
            "relative error undefined for a zero truth vector".into(),
        ));
    }
    let diff = est
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / truth_norm)
}

/// Per-pair relative kernel errors on a grid, averaged over pairs with
/// nonzero true mass. Pairs whose true kernel has zero mass are excluded
/// from the average and reported separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiError {
    pub mean: f64,
    /// `per_pair[u][u2]` is None for zero-mass truth pairs.
    pub per_pair: Vec<Vec<Option<f64>>>,
    pub zero_mass_pairs: usize,
}

/// Grid version over arbitrary kernel evaluators: both integrals use the
/// trapezoidal rule on the same uniform grid over `[0, horizon]`.
pub fn phi_relative_error_grid(
    est: impl Fn(usize, usize, f64) -> f64,
    truth: impl Fn(usize, usize, f64) -> f64,
    num_types: usize,
    horizon: f64,
    grid_step: f64,
) -> Result<PhiError> {
    if !(grid_step > 0.0) || !(horizon > 0.0) {
        return Err(HawkesError::InvalidConfig(
            "horizon and grid step must be positive".into(),
        ));
    }
    let steps = (horizon / grid_step).ceil() as usize;
    let mut per_pair = vec![vec![None; num_types]; num_types];
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut zero_mass = 0usize;
    for u in 0..num_types {
        for u2 in 0..num_types {
            let mut err_integral = 0.0;
            let mut mass_integral = 0.0;
            for k in 0..=steps {
                let t = (k as f64 * grid_step).min(horizon);
                let weight = if k == 0 || k == steps { 0.5 } else { 1.0 };
                let tv = truth(u, u2, t);
                let ev = est(u, u2, t);
                err_integral += weight * (ev - tv).abs() * grid_step;
                mass_integral += weight * tv * grid_step;
            }
            if mass_integral > 0.0 {
                let rel = err_integral / mass_integral;
                per_pair[u][u2] = Some(rel);
                total += rel;
                counted += 1;
            } else {
                zero_mass += 1;
            }
        }
    }
    let mean = if counted > 0 { total / counted as f64 } else { 0.0 };
    Ok(PhiError {
        mean,
        per_pair,
        zero_mass_pairs: zero_mass,
    })
}

/// Relative kernel error of a fitted basis-expansion model against a ground
/// truth, integrated over `[0, horizon]`.
pub fn relative_error_phi(
    est_params: &ModelParams,
    est_basis: &BasisConfig,
    truth: &GroundTruth,
    horizon: f64,
    grid_step: f64,
) -> Result<PhiError> {
    let num_types = truth.num_types();
    if est_params.num_types() != num_types {
        return Err(HawkesError::DimensionMismatch(format!(
            "model has {} types, truth has {num_types}",
            est_params.num_types()
        )));
    }
    phi_relative_error_grid(
        |u, u2, t| model::impact_function(est_params, est_basis, u, u2, t).unwrap_or(0.0),
        |u, u2, t| truth.kernel_value(u, u2, t),
        num_types,
        horizon,
        grid_step,
    )
}

/// Default evaluation grid: `horizon / 2000`.
pub fn default_grid_step(horizon: f64) -> f64 {
    horizon / 2000.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn precision_recall(true_pos: usize, false_pos: usize, false_neg: usize) -> PrecisionRecall {
    let precision = if true_pos + false_pos > 0 {
        true_pos as f64 / (true_pos + false_pos) as f64
    } else {
        1.0
    };
    let recall = if true_pos + false_neg > 0 {
        true_pos as f64 / (true_pos + false_neg) as f64
    } else {
        1.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    PrecisionRecall {
        precision,
        recall,
        f1,
    }
}

/// Graph recovery scores: confusion-matrix scores with present edges as
/// positives, the same with absent edges as positives, and the absent-edge
/// recovery count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphScore {
    pub present: PrecisionRecall,
    pub absent: PrecisionRecall,
    pub absent_true: usize,
    pub absent_recovered: usize,
}

pub fn score_graph(est: &GrangerGraph, truth: &GrangerGraph) -> Result<GraphScore> {
    let n = truth.num_types();
    if est.num_types() != n {
        return Err(HawkesError::DimensionMismatch(format!(
            "graphs over {} and {n} types",
            est.num_types()
        )));
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for u in 0..n {
        for u2 in 0..n {
            match (est.has_edge(u, u2), truth.has_edge(u, u2)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    Ok(GraphScore {
        present: precision_recall(tp, fp, fn_),
        // absent edges as positives: true positives are the jointly absent
        absent: precision_recall(tn, fn_, fp),
        absent_true: tn + fp,
        absent_recovered: tn,
    })
}

/// Flat evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub loglike_test: f64,
    pub e_mu: f64,
    pub e_phi: f64,
    pub edge_precision: f64,
    pub edge_recall: f64,
    pub edge_f1: f64,
    pub absent_precision: f64,
    pub absent_recall: f64,
    pub absent_f1: f64,
    pub absent_edges_true: usize,
    pub absent_edges_recovered: usize,
    pub zero_mass_pairs: usize,
    pub per_pair_phi_error: Vec<Vec<Option<f64>>>,
}

/// Full evaluation of a fitted model against the generating truth.
pub fn evaluate(
    params: &ModelParams,
    basis: &BasisConfig,
    truth: &GroundTruth,
    test_data: &Dataset,
    horizon: f64,
    grid_step: f64,
    graph_tol: f64,
) -> Result<EvalReport> {
    let loglike = loglike_test(params, basis, test_data)?;
    let e_mu = relative_error_mu(params.mu(), &truth.mu)?;
    let phi = relative_error_phi(params, basis, truth, horizon, grid_step)?;
    let est_graph = model::extract_graph(params, graph_tol);
    let score = score_graph(&est_graph, &truth.true_graph())?;
    Ok(EvalReport {
        loglike_test: loglike,
        e_mu,
        e_phi: phi.mean,
        edge_precision: score.present.precision,
        edge_recall: score.present.recall,
        edge_f1: score.present.f1,
        absent_precision: score.absent.precision,
        absent_recall: score.absent.recall,
        absent_f1: score.absent.f1,
        absent_edges_true: score.absent_true,
        absent_edges_recovered: score.absent_recovered,
        zero_mass_pairs: phi.zero_mass_pairs,
        per_pair_phi_error: phi.per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::EventSequence;

    #[test]
    fn e_mu_examples() {
        assert_eq!(relative_error_mu(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        let v = relative_error_mu(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-14);
        let v = relative_error_mu(&[3.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 0.8).abs() < 1e-14);
        assert!(relative_error_mu(&[1.0], &[0.0]).is_err());
        assert!(relative_error_mu(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn phi_error_rectangles() {
        // truth: height 1 on [0,1]; est: height 0.5 -> error 0.5
        let err = phi_relative_error_grid(
            |_, _, t| if t <= 1.0 { 0.5 } else { 0.0 },
            |_, _, t| if t <= 1.0 { 1.0 } else { 0.0 },
            1,
            2.0,
            0.0005,
        )
        .unwrap();
        assert!((err.mean - 0.5).abs() < 1e-3);

        // est == truth -> 0
        let err = phi_relative_error_grid(
            |_, _, t| (-t).exp(),
            |_, _, t| (-t).exp(),
            2,
            3.0,
            0.001,
        )
        .unwrap();
        assert_eq!(err.mean, 0.0);

        // est == 0, all pairs nonzero -> 1
        let err = phi_relative_error_grid(
            |_, _, _| 0.0,
            |_, _, t| if t <= 1.0 { 0.7 } else { 0.0 },
            3,
            2.0,
            0.001,
        )
        .unwrap();
        assert!((err.mean - 1.0).abs() < 1e-12);
        assert_eq!(err.zero_mass_pairs, 0);
    }

    #[test]
    fn phi_error_excludes_zero_mass_pairs() {
        let err = phi_relative_error_grid(
            |_, _, t| if t <= 1.0 { 0.5 } else { 0.0 },
            |u, u2, t| {
                if u == 0 && u2 == 0 && t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            },
            2,
            2.0,
            0.0005,
        )
        .unwrap();
        assert_eq!(err.zero_mass_pairs, 3);
        assert!(err.per_pair[0][1].is_none());
        assert!((err.mean - 0.5).abs() < 1e-3);
    }

    #[test]
    fn score_graph_examples() {
        let truth = {
            // 6 absent edges out of 25: the (u,4) and (4,v) blocks for u,v < 3
            let adjacency = (0..5)
                .map(|u| {
                    (0..5)
                        .map(|u2| !((u < 3 && u2 == 4) || (u == 4 && u2 < 3)))
                        .collect()
                })
                .collect();
            GrangerGraph::new(adjacency).unwrap()
        };
        let complete = GrangerGraph::new(vec![vec![true; 5]; 5]).unwrap();
        let empty = GrangerGraph::new(vec![vec![false; 5]; 5]).unwrap();

        let s = score_graph(&truth, &truth).unwrap();
        assert_eq!(s.present.f1, 1.0);
        assert_eq!(s.absent.f1, 1.0);
        assert_eq!(s.absent_recovered, 6);

        let s = score_graph(&complete, &truth).unwrap();
        assert_eq!(s.present.recall, 1.0);
        assert!((s.present.precision - 19.0 / 25.0).abs() < 1e-14);
        assert_eq!(s.absent_recovered, 0);

        let s = score_graph(&empty, &truth).unwrap();
        assert_eq!(s.present.recall, 0.0);
        assert_eq!(s.absent_recovered, 6);
    }

    #[test]
    fn score_graph_invariant_under_relabeling() {
        let truth = GrangerGraph::new(vec![
            vec![true, false, true],
            vec![true, true, false],
            vec![false, false, true],
        ])
        .unwrap();
        let est = GrangerGraph::new(vec![
            vec![true, true, false],
            vec![false, true, true],
            vec![false, true, true],
        ])
        .unwrap();
        let perm = [2usize, 0, 1];
        let relabel = |g: &GrangerGraph| {
            let adjacency = (0..3)
                .map(|u| (0..3).map(|u2| g.has_edge(perm[u], perm[u2])).collect())
                .collect();
            GrangerGraph::new(adjacency).unwrap()
        };
        let a = score_graph(&est, &truth).unwrap();
        let b = score_graph(&relabel(&est), &relabel(&truth)).unwrap();
        assert_eq!(a.present.f1, b.present.f1);
        assert_eq!(a.absent.f1, b.absent.f1);
    }

    #[test]
    fn loglike_test_empty_set_is_compensator_only() {
        let basis = BasisConfig::from_parts(1.0, 1.0, vec![0.0], 10.0).unwrap();
        let mut params = ModelParams::zeros(2, 1);
        params.mu_mut().copy_from_slice(&[0.3, 0.2]);
        let data = Dataset::new(vec![EventSequence::empty(4.0).unwrap()], 2).unwrap();
        let ll = loglike_test(&params, &basis, &data).unwrap();
        assert!((ll - (-(0.5) * 4.0)).abs() < 1e-12);
    }
}
