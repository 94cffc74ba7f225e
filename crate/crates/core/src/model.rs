//! Model parameters and the conditional-intensity / likelihood machinery.
//!
//! A model is a base-rate vector `mu` plus a nonnegative coefficient tensor
//! `A` of shape U x U x M over a Gaussian basis: the impact function of type
//! u2 on type u is `phi_{u,u2}(t) = sum_m A[u][u2][m] kappa_m(t)`. The edge
//! u2 -> u of the Granger causality graph is present exactly when that
//! impact function is not identically zero, i.e. when the coefficient group
//! `A[u][u2][..]` has nonzero norm.

use crate::basis::BasisConfig;
use crate::error::{HawkesError, Result};
use crate::types::{Dataset, EventSequence, GrangerGraph};

/// Default tolerance on the group 2-norm when reading the causality graph
/// off the coefficient tensor. The prox step produces exact zeros; the
/// tolerance only guards round-off from file round trips.
pub const GRAPH_EXTRACTION_TOL: f64 = 1e-7;

/// Base rates and basis coefficients. Coefficients are stored flat in
/// `(u, u2, m)` row-major order; `group(u, u2)` views one impact function.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    mu: Vec<f64>,
    coeffs: Vec<f64>,
    num_types: usize,
    num_bases: usize,
}

impl ModelParams {
    pub fn zeros(num_types: usize, num_bases: usize) -> Self {
        Self {
            mu: vec![0.0; num_types],
            coeffs: vec![0.0; num_types * num_types * num_bases],
            num_types,
            num_bases,
        }
    }

    pub fn new(mu: Vec<f64>, coeffs: Vec<f64>, num_types: usize, num_bases: usize) -> Result<Self> {
        if mu.len() != num_types || coeffs.len() != num_types * num_types * num_bases {
            return Err(HawkesError::DimensionMismatch(format!(
                "expected mu len {num_types} and coeffs len {}, got {} and {}",
                num_types * num_types * num_bases,
                mu.len(),
                coeffs.len()
            )));
        }
        if let Some((i, &x)) = mu
            .iter()
            .chain(coeffs.iter())
            .enumerate()
            .find(|(_, &x)| x < 0.0 || !x.is_finite())
        {
            return Err(HawkesError::InvalidConfig(format!(
                "model parameters must be nonnegative and finite (entry {i} = {x}, {} mu entries)",
                mu.len()
            )));
        }
        Ok(Self {
            mu,
            coeffs,
            num_types,
            num_bases,
        })
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn num_bases(&self) -> usize {
        self.num_bases
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mu_mut(&mut self) -> &mut [f64] {
        &mut self.mu
    }

    #[inline]
    fn group_start(&self, u: usize, u2: usize) -> usize {
        (u * self.num_types + u2) * self.num_bases
    }

    /// Coefficient group `a_{u u2}` (the impact of u2 on u).
    #[inline]
    pub fn group(&self, u: usize, u2: usize) -> &[f64] {
        let s = self.group_start(u, u2);
        &self.coeffs[s..s + self.num_bases]
    }

    #[inline]
    pub fn group_mut(&mut self, u: usize, u2: usize) -> &mut [f64] {
        let s = self.group_start(u, u2);
        &mut self.coeffs[s..s + self.num_bases]
    }

    pub fn coeff(&self, u: usize, u2: usize, m: usize) -> f64 {
        self.coeffs[self.group_start(u, u2) + m]
    }

    pub fn set_coeff(&mut self, u: usize, u2: usize, m: usize, value: f64) {
        let s = self.group_start(u, u2);
        self.coeffs[s + m] = value;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn group_norm(&self, u: usize, u2: usize) -> f64 {
        self.group(u, u2).iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub(crate) fn check_indices(&self, u: usize, u2: usize) -> Result<()> {
        if u >= self.num_types || u2 >= self.num_types {
            return Err(HawkesError::IndexOutOfRange(format!(
                "type pair ({u}, {u2}) with {} types",
                self.num_types
            )));
        }
        Ok(())
    }

    fn check_basis(&self, basis: &BasisConfig) -> Result<()> {
        if basis.num_bases() != self.num_bases {
            return Err(HawkesError::DimensionMismatch(format!(
                "model has {} bases, basis config has {}",
                self.num_bases,
                basis.num_bases()
            )));
        }
        Ok(())
    }
}

/// `phi_{u,u2}(t) = sum_m a_{u u2}^m kappa_m(t)`.
pub fn impact_function(
    params: &ModelParams,
    basis: &BasisConfig,
    u: usize,
    u2: usize,
    t: f64,
) -> Result<f64> {
    params.check_indices(u, u2)?;
    params.check_basis(basis)?;
    if t < 0.0 {
        return Err(HawkesError::InvalidConfig(format!(
            "impact function defined for t >= 0, got {t}"
        )));
    }
    let group = params.group(u, u2);
    let mut value = 0.0;
    for (m, &a) in group.iter().enumerate() {
        if a != 0.0 {
            value += a * basis.kernel(m, t)?;
        }
    }
    Ok(value)
}

/// Conditional intensity `lambda_u(t)`: base rate plus the impact of strictly
/// earlier events (events at exactly `t` do not contribute).
pub fn intensity(
    params: &ModelParams,
    basis: &BasisConfig,
    seq: &EventSequence,
    u: usize,
    t: f64,
) -> Result<f64> {
    params.check_indices(u, u)?;
    params.check_basis(basis)?;
    if t < 0.0 || t > seq.horizon() {
        return Err(HawkesError::OutsideHorizon {
            t,
            horizon: seq.horizon(),
        });
    }
    let mut lambda = params.mu()[u];
    for e in seq.events() {
        if e.time >= t {
            break;
        }
        lambda += impact_function(params, basis, u, e.type_idx, t - e.time)?;
    }
    Ok(lambda)
}

/// Log-likelihood of the dataset under the model:
///
/// `sum_c { sum_i log lambda_{u_i}(t_i) - sum_u [ T_c mu_u +
/// sum_i sum_m a_{u,u_i}^m K_m(T_c - t_i) ] }`
///
/// The event term at index i uses events j < i in the canonical
/// `(time, type)` order, so simultaneous events of distinct types excite
/// each other in type order. A zero intensity at an observed event yields
/// negative infinity rather than an error.
pub fn log_likelihood(params: &ModelParams, basis: &BasisConfig, data: &Dataset) -> Result<f64> {
    if data.num_types != params.num_types() {
        return Err(HawkesError::DimensionMismatch(format!(
            "dataset has {} types, model has {}",
            data.num_types,
            params.num_types()
        )));
    }
    params.check_basis(basis)?;
    let mut total = 0.0;
    for seq in &data.sequences {
        total += sequence_log_likelihood(params, basis, seq)?;
        if total == f64::NEG_INFINITY {
            return Ok(total);
        }
    }
    Ok(total)
}

fn sequence_log_likelihood(
    params: &ModelParams,
    basis: &BasisConfig,
    seq: &EventSequence,
) -> Result<f64> {
    let events = seq.events();
    let num_types = params.num_types();
    let mut event_term = 0.0;
    for (i, e) in events.iter().enumerate() {
        let mut lambda = params.mu()[e.type_idx];
        for prior in &events[..i] {
            lambda += impact_function(params, basis, e.type_idx, prior.type_idx, e.time - prior.time)?;
        }
        if lambda <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        event_term += lambda.ln();
    }
    let mut compensator = seq.horizon() * params.mu().iter().sum::<f64>();
    for e in events {
        let remaining = seq.horizon() - e.time;
        for m in 0..basis.num_bases() {
            let k = basis.kernel_cumulative(m, remaining)?;
            if k == 0.0 {
                continue;
            }
            for u in 0..num_types {
                compensator += params.coeff(u, e.type_idx, m) * k;
            }
        }
    }
    Ok(event_term - compensator)
}

/// Reads the causality graph off the coefficient tensor: edge u2 -> u is
/// present iff `||a_{u u2}||_2 > tol`.
pub fn extract_graph(params: &ModelParams, tol: f64) -> GrangerGraph {
    let n = params.num_types();
    let adjacency = (0..n)
        .map(|u| (0..n).map(|u2| params.group_norm(u, u2) > tol).collect())
        .collect();
    GrangerGraph::new(adjacency).expect("square by construction")
}

/// Integrated-kernel (infectivity) matrix `B[u][u2] = int_0^inf phi_{u,u2}`
/// together with its spectral radius; the process is stationary when the
/// radius is below 1.
pub fn branching_matrix(params: &ModelParams, basis: &BasisConfig) -> Result<(Vec<Vec<f64>>, f64)> {
    params.check_basis(basis)?;
    let n = params.num_types();
    let masses: Vec<f64> = (0..basis.num_bases())
        .map(|m| basis.kernel_total_mass(m))
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0; n]; n];
    for u in 0..n {
        for u2 in 0..n {
            matrix[u][u2] = params
                .group(u, u2)
                .iter()
                .zip(&masses)
                .map(|(a, k)| a * k)
                .sum();
        }
    }
    let radius = spectral_radius(&matrix);
    Ok((matrix, radius))
}

/// Spectral radius of a nonnegative square matrix by power iteration.
pub fn spectral_radius(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut radius = 0.0;
    for _ in 0..500 {
        let mut next = vec![0.0; n];
        for (i, row) in matrix.iter().enumerate() {
            next[i] = row.iter().zip(&v).map(|(a, x)| a * x).sum();
        }
        let norm: f64 = next.iter().map(|x| x.abs()).sum();
        if norm == 0.0 {
            return 0.0;
        }
        let prev = radius;
        radius = norm;
        for x in &mut next {
            *x /= norm;
        }
        // Keep the iterate strictly positive so reducible matrices still
        // converge to the Perron root.
        for x in &mut next {
            *x += 1e-12;
        }
        v = next;
        if (radius - prev).abs() <= 1e-13 * radius.max(1.0) {
            break;
        }
    }
    radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisConfig;
    use crate::types::EventSequence;

    fn basis_sigma1(centers: Vec<f64>, horizon: f64) -> BasisConfig {
        BasisConfig::from_parts(1.0, 1.0, centers, horizon).unwrap()
    }

    #[test]
    fn impact_zero_coeffs() {
        let basis = basis_sigma1(vec![0.0, 1.0], 10.0);
        let params = ModelParams::zeros(2, 2);
        for t in [0.0, 0.3, 7.0] {
            assert_eq!(impact_function(&params, &basis, 1, 0, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn impact_single_and_double_kernel() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        let mut params = ModelParams::zeros(1, 1);
        params.set_coeff(0, 0, 0, 2.0);
        assert!((impact_function(&params, &basis, 0, 0, 0.0).unwrap() - 2.0).abs() < 1e-15);

        let basis = basis_sigma1(vec![0.0, 1.0], 10.0);
        let mut params = ModelParams::zeros(1, 2);
        params.set_coeff(0, 0, 0, 1.0);
        params.set_coeff(0, 0, 1, 1.0);
        let v = impact_function(&params, &basis, 0, 0, 0.5).unwrap();
        assert!((v - 1.7649938051691907).abs() < 1e-12);
        assert!(impact_function(&params, &basis, 0, 2, 0.5).is_err());
        assert!(impact_function(&params, &basis, 0, 0, -0.5).is_err());
    }

    #[test]
    fn intensity_cases() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        // no history
        let mut params = ModelParams::zeros(1, 1);
        params.mu_mut()[0] = 0.5;
        let seq = EventSequence::empty(10.0).unwrap();
        assert_eq!(intensity(&params, &basis, &seq, 0, 3.0).unwrap(), 0.5);

        // zero kernels, arbitrary history
        let mut params = ModelParams::zeros(1, 1);
        params.mu_mut()[0] = 0.3;
        let seq = EventSequence::new(vec![(1.0, 0), (2.0, 0)], 10.0).unwrap();
        assert_eq!(intensity(&params, &basis, &seq, 0, 5.0).unwrap(), 0.3);

        // one event, Gaussian kernel
        let mut params = ModelParams::zeros(1, 1);
        params.mu_mut()[0] = 0.1;
        params.set_coeff(0, 0, 0, 0.5);
        let seq = EventSequence::new(vec![(1.0, 0)], 10.0).unwrap();
        let v = intensity(&params, &basis, &seq, 0, 2.0).unwrap();
        assert!((v - 0.4032653298563167).abs() < 1e-12);

        // events at exactly t do not contribute
        let at = intensity(&params, &basis, &seq, 0, 1.0).unwrap();
        assert_eq!(at, 0.1);
        assert!(intensity(&params, &basis, &seq, 0, 11.0).is_err());
    }

    #[test]
    fn intensity_never_below_mu() {
        let basis = basis_sigma1(vec![0.0, 1.5], 10.0);
        let mut params = ModelParams::zeros(2, 2);
        params.mu_mut().copy_from_slice(&[0.2, 0.4]);
        params.set_coeff(0, 1, 0, 0.3);
        params.set_coeff(1, 1, 1, 0.7);
        let seq = EventSequence::new(vec![(0.5, 1), (2.0, 0), (4.4, 1)], 10.0).unwrap();
        for i in 0..40 {
            let t = i as f64 * 0.25;
            for u in 0..2 {
                assert!(intensity(&params, &basis, &seq, u, t).unwrap() >= params.mu()[u]);
            }
        }
    }

    #[test]
    fn loglik_homogeneous_poisson() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        let mut params = ModelParams::zeros(1, 1);
        params.mu_mut()[0] = 1.0;
        let seq = EventSequence::new(vec![(0.5, 0)], 1.0).unwrap();
        let data = Dataset::new(vec![seq], 1).unwrap();
        let ll = log_likelihood(&params, &basis, &data).unwrap();
        assert!((ll - (-1.0)).abs() < 1e-12);

        // void probability: no events, mu = 2, T = 3
        let mut params = ModelParams::zeros(1, 1);
        params.mu_mut()[0] = 2.0;
        let data = Dataset::new(vec![EventSequence::empty(3.0).unwrap()], 1).unwrap();
        let ll = log_likelihood(&params, &basis, &data).unwrap();
        assert!((ll - (-6.0)).abs() < 1e-12);
    }

    #[test]
    fn loglik_zero_intensity_is_neg_infinity() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        let params = ModelParams::zeros(1, 1);
        let seq = EventSequence::new(vec![(0.5, 0)], 1.0).unwrap();
        let data = Dataset::new(vec![seq], 1).unwrap();
        assert_eq!(
            log_likelihood(&params, &basis, &data).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn loglik_event_at_horizon_adds_nothing_to_compensator() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        let mut params = ModelParams::zeros(1, 1);
        params.mu_mut()[0] = 1.0;
        params.set_coeff(0, 0, 0, 0.5);
        let seq = EventSequence::new(vec![(2.0, 0)], 2.0).unwrap();
        let data = Dataset::new(vec![seq], 1).unwrap();
        let ll = log_likelihood(&params, &basis, &data).unwrap();
        // log lambda(2) = log mu, compensator = 2 mu + a K(0) = 2
        assert!((ll - (0.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn loglik_dimension_mismatch_errors() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        let params = ModelParams::zeros(2, 1);
        let data = Dataset::new(vec![EventSequence::empty(1.0).unwrap()], 1).unwrap();
        assert!(log_likelihood(&params, &basis, &data).is_err());
    }

    #[test]
    fn extract_graph_reads_support() {
        let mut params = ModelParams::zeros(2, 2);
        // edge 0 -> 1 present (group a_{1,0}), edge 1 -> 0 absent
        params.set_coeff(1, 0, 0, 0.4);
        let graph = extract_graph(&params, 0.0);
        assert!(graph.has_edge(1, 0));
        assert!(!graph.has_edge(0, 1));
        assert!(!graph.has_edge(0, 0));
        assert_eq!(extract_graph(&ModelParams::zeros(3, 2), 0.0).num_edges(), 0);
    }

    #[test]
    fn branching_matrix_values() {
        let basis = basis_sigma1(vec![0.0], 10.0);
        let params = ModelParams::zeros(2, 1);
        let (matrix, radius) = branching_matrix(&params, &basis).unwrap();
        assert_eq!(matrix, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(radius, 0.0);

        let mut params = ModelParams::zeros(1, 1);
        params.set_coeff(0, 0, 0, 1.0);
        let (matrix, radius) = branching_matrix(&params, &basis).unwrap();
        let half = (std::f64::consts::PI / 2.0).sqrt();
        assert!((matrix[0][0] - half).abs() < 1e-12);
        assert!((radius - half).abs() < 1e-10);
    }

    #[test]
    fn spectral_radius_known_matrix() {
        // [[0.2, 0.3], [0.1, 0.4]]: eigenvalues (0.6 +- sqrt(0.16))/2 -> 0.5
        let m = vec![vec![0.2, 0.3], vec![0.1, 0.4]];
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-9);
    }
}
