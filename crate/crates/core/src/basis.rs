//! Gaussian basis kernels, their cumulative integrals, and adaptive
//! selection of the basis family from data.
//!
//! The basis is a bank of unit-peak Gaussians `kappa_m(t) = exp(-(t - t_m)^2
//! / (2 sigma^2))` with evenly spaced centers `t_m = (m-1) T / M` and width
//! `sigma = 1 / omega0`, where `omega0` is the cut-off angular frequency of
//! the low-pass sampling filter. `select_basis` picks `omega0` as the
//! smallest cutoff whose spectral tail, bounded through a Gaussian kernel
//! density estimate of the total intensity, is below a residual budget.

use crate::error::{HawkesError, Result};
use crate::types::Dataset;
use serde::{Deserialize, Serialize};
use crate::special::{erf, erfc};

/// Gaussian basis family.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisConfig {
    omega0: f64,
    sigma: f64,
    centers: Vec<f64>,
    support_horizon: f64,
}

impl BasisConfig {
    /// The regular family: `M` centers `(m-1) T / M` on `[0, T)`, width
    /// `sigma = 1 / omega0`.
    pub fn uniform(num_bases: usize, support_horizon: f64, omega0: f64) -> Result<Self> {
        if num_bases == 0 {
            return Err(HawkesError::InvalidConfig("need at least one basis".into()));
        }
        if !(omega0 > 0.0) || !(support_horizon > 0.0) {
            return Err(HawkesError::InvalidConfig(
                "omega0 and support horizon must be positive".into(),
            ));
        }
        let m = num_bases as f64;
        let centers = (0..num_bases)
            .map(|i| i as f64 * support_horizon / m)
            .collect();
        Ok(Self {
            omega0,
            sigma: 1.0 / omega0,
            centers,
            support_horizon,
        })
    }

    /// Explicit centers; `sigma` must equal `1 / omega0`.
    pub fn from_parts(omega0: f64, sigma: f64, centers: Vec<f64>, support_horizon: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(HawkesError::InvalidConfig("need at least one basis".into()));
        }
        if !(omega0 > 0.0) || !(sigma > 0.0) {
            return Err(HawkesError::InvalidConfig(
                "omega0 and sigma must be positive".into(),
            ));
        }
        if (sigma * omega0 - 1.0).abs() > 1e-9 {
            return Err(HawkesError::InvalidConfig(format!(
                "sigma must be 1/omega0 (got sigma={sigma}, omega0={omega0})"
            )));
        }
        if centers.windows(2).any(|w| w[1] < w[0]) {
            return Err(HawkesError::InvalidConfig(
                "centers must be nondecreasing".into(),
            ));
        }
        if centers.iter().any(|&c| c < 0.0 || c > support_horizon) {
            return Err(HawkesError::InvalidConfig(
                "centers must lie in [0, support horizon]".into(),
            ));
        }
        Ok(Self {
            omega0,
            sigma,
            centers,
            support_horizon,
        })
    }

    pub fn num_bases(&self) -> usize {
        self.centers.len()
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn support_horizon(&self) -> f64 {
        self.support_horizon
    }

    /// `kappa_m(t)`, 0-based `m`.
    pub fn kernel(&self, m: usize, t: f64) -> Result<f64> {
        let center = self.center(m)?;
        Ok(gaussian_peak1(t - center, self.sigma))
    }

    /// `K_m(t) = int_0^t kappa_m(s) ds` for `t >= 0`.
    ///
    /// Closed form: `sigma sqrt(pi/2) [erf((t - t_m)/(sqrt(2) sigma)) +
    /// erf(t_m/(sqrt(2) sigma))]`.
    pub fn kernel_cumulative(&self, m: usize, t: f64) -> Result<f64> {
        let center = self.center(m)?;
        if t < 0.0 {
            return Err(HawkesError::InvalidConfig(format!(
                "cumulative basis integral needs t >= 0, got {t}"
            )));
        }
        Ok(gaussian_cumulative(t, center, self.sigma))
    }

    /// `K_m(inf) = sigma sqrt(pi/2) (1 + erf(t_m/(sqrt(2) sigma)))`.
    pub fn kernel_total_mass(&self, m: usize) -> Result<f64> {
        let center = self.center(m)?;
        let root_half_pi = (std::f64::consts::PI / 2.0).sqrt();
        Ok(self.sigma * root_half_pi * (1.0 + erf(center / (std::f64::consts::SQRT_2 * self.sigma))))
    }

    fn center(&self, m: usize) -> Result<f64> {
        self.centers
            .get(m)
            .copied()
            .ok_or_else(|| HawkesError::IndexOutOfRange(format!("basis index {m}")))
    }
}

pub(crate) fn gaussian_peak1(dt: f64, sigma: f64) -> f64 {
    (-dt * dt / (2.0 * sigma * sigma)).exp()
}

pub(crate) fn gaussian_cumulative(t: f64, center: f64, sigma: f64) -> f64 {
    let root_half_pi = (std::f64::consts::PI / 2.0).sqrt();
    let s = std::f64::consts::SQRT_2 * sigma;
    sigma * root_half_pi * (erf((t - center) / s) + erf(center / s))
}

/// Spectral side of Algorithm-2 style basis selection: the KDE bandwidth,
/// event count, and residual budget defining the tail bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub bandwidth: f64,
    pub total_events: usize,
    pub residual_bound: f64,
}

/// Which closed form bounds the spectral tail integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailBound {
    /// `pi * N * erfc(omega0 h / sqrt(2))`: the exact integral of the
    /// Gaussian spectral envelope `N sqrt(2 pi h^2) exp(-omega^2 h^2 / 2)`
    /// over `[omega0, inf)`. Decays to 0, so any residual budget is feasible.
    #[default]
    Decaying,
    /// `pi * N * (1 - erf(omega0 h) / sqrt(2))`: tends to
    /// `pi N (1 - 1/sqrt(2))` as omega0 grows, so small budgets are
    /// infeasible. Kept selectable for comparison.
    NonDecaying,
}

/// Silverman plug-in bandwidth `h = (4 sigma_hat^5 / (3 N))^(1/5)` over the
/// pooled event timestamps. `sigma_hat` is the population (divide-by-N)
/// standard deviation.
pub fn silverman_bandwidth(data: &Dataset) -> Result<f64> {
    let times: Vec<f64> = data
        .sequences
        .iter()
        .flat_map(|s| s.events().iter().map(|e| e.time))
        .collect();
    let n = times.len();
    if n < 2 {
        return Err(HawkesError::InsufficientData(format!(
            "silverman bandwidth needs at least 2 events, got {n}"
        )));
    }
    let mean = times.iter().sum::<f64>() / n as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(HawkesError::InsufficientData(
            "silverman bandwidth needs nonzero time spread".into(),
        ));
    }
    let sigma_hat = var.sqrt();
    Ok((4.0 * sigma_hat.powi(5) / (3.0 * n as f64)).powf(0.2))
}

/// Spectral tail bound at cutoff `omega0` for `total_events` pooled events
/// and KDE bandwidth `h`.
pub fn spectral_tail(bound: TailBound, total_events: usize, h: f64, omega0: f64) -> f64 {
    let n = total_events as f64;
    match bound {
        TailBound::Decaying => {
            std::f64::consts::PI * n * erfc(omega0 * h / std::f64::consts::SQRT_2)
        }
        TailBound::NonDecaying => {
            std::f64::consts::PI * n * (1.0 - erf(omega0 * h) / std::f64::consts::SQRT_2)
        }
    }
}

/// Smallest `omega0 >= 0` with `spectral_tail(bound, n, h, omega0) <=
/// epsilon`, to 1e-10 relative precision. Returns `Ok(None)` when even
/// `omega0 = 0` satisfies the budget (degenerate: a single basis suffices).
pub fn solve_cutoff(
    bound: TailBound,
    total_events: usize,
    h: f64,
    epsilon: f64,
) -> Result<Option<f64>> {
    if !(epsilon > 0.0) {
        return Err(HawkesError::InvalidConfig("epsilon must be positive".into()));
    }
    if !(h > 0.0) {
        return Err(HawkesError::InvalidConfig("bandwidth must be positive".into()));
    }
    if spectral_tail(bound, total_events, h, 0.0) <= epsilon {
        return Ok(None);
    }
    // Bracket the root on [0, hi], growing hi from the robust default.
    let mut hi = 100.0 / h;
    let mut grow = 0;
    while spectral_tail(bound, total_events, h, hi) > epsilon {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(HawkesError::InvalidConfig(
                "residual bound unattainable for the selected tail bound".into(),
            ));
        }
    }
    let mut lo = 0.0_f64;
    // The tail is strictly decreasing in omega0, so bisection converges to
    // the smallest feasible cutoff.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spectral_tail(bound, total_events, h, mid) <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
    }
    Ok(Some(hi))
}

/// Adaptive basis selection: Silverman bandwidth, smallest feasible cutoff
/// for the residual budget `epsilon`, then `M = ceil(T omega0 / pi)` evenly
/// spaced centers with `sigma = 1/omega0`.
///
/// Degenerate case (budget satisfied at omega0 = 0): one basis at 0 with
/// `omega0 = pi / T`, the largest cutoff that still yields M = 1.
pub fn select_basis(data: &Dataset, epsilon: f64, horizon: f64) -> Result<BasisConfig> {
    select_basis_with(data, epsilon, horizon, TailBound::Decaying)
}

/// `epsilon` given as a fraction `rho` of the tail bound at omega0 = 0,
/// i.e. `epsilon = rho * pi * total_events`.
pub fn select_basis_rho(data: &Dataset, rho: f64, horizon: f64) -> Result<BasisConfig> {
    if !(rho > 0.0) {
        return Err(HawkesError::InvalidConfig("rho must be positive".into()));
    }
    let epsilon = rho * std::f64::consts::PI * data.total_events() as f64;
    select_basis(data, epsilon, horizon)
}

pub fn select_basis_with(
    data: &Dataset,
    epsilon: f64,
    horizon: f64,
    bound: TailBound,
) -> Result<BasisConfig> {
    if !(horizon > 0.0) {
        return Err(HawkesError::InvalidConfig("horizon must be positive".into()));
    }
    let h = silverman_bandwidth(data)?;
    let omega0 = solve_cutoff(bound, data.total_events(), h, epsilon)?;
    match omega0 {
        None => BasisConfig::uniform(1, horizon, std::f64::consts::PI / horizon),
        Some(omega0) => {
            let m = (horizon * omega0 / std::f64::consts::PI).ceil() as usize;
            BasisConfig::uniform(m.max(1), horizon, omega0)
        }
    }
}

/// The spectral estimate underlying `select_basis`, for reporting.
pub fn spectral_estimate(data: &Dataset, epsilon: f64) -> Result<SpectralEstimate> {
    Ok(SpectralEstimate {
        bandwidth: silverman_bandwidth(data)?,
        total_events: data.total_events(),
        residual_bound: epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::EventSequence;

    fn dataset_from_times(times: &[f64], horizon: f64) -> Dataset {
        let seq =
            EventSequence::new(times.iter().map(|&t| (t, 0)).collect(), horizon).unwrap();
        Dataset::new(vec![seq], 1).unwrap()
    }

    #[test]
    fn kernel_peak_and_tail() {
        let basis = BasisConfig::uniform(2, 10.0, 1.0).unwrap();
        // centers 0 and 5, sigma 1
        assert_eq!(basis.kernel(0, 0.0).unwrap(), 1.0);
        assert!((basis.kernel(1, 6.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!(basis.kernel(0, 50.0).unwrap() < 1e-300);
        assert!(basis.kernel(2, 0.0).is_err());
    }

    #[test]
    fn cumulative_matches_closed_form_values() {
        let basis = BasisConfig::from_parts(1.0, 1.0, vec![0.0, 1.0], 10.0).unwrap();
        assert_eq!(basis.kernel_cumulative(0, 0.0).unwrap(), 0.0);
        // half-Gaussian mass
        let half = (std::f64::consts::PI / 2.0).sqrt();
        assert!((basis.kernel_cumulative(0, 40.0).unwrap() - half).abs() < 1e-12);
        assert!((basis.kernel_total_mass(0).unwrap() - half).abs() < 1e-12);
        // center 1, sigma 1, t = 1: sqrt(pi/2) * erf(1/sqrt(2))
        let expect = half * erf(1.0 / std::f64::consts::SQRT_2);
        assert!((basis.kernel_cumulative(1, 1.0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.8556243918921487).abs() < 1e-13);
        assert!(basis.kernel_cumulative(0, -1.0).is_err());
    }

    #[test]
    fn cumulative_monotone() {
        let basis = BasisConfig::uniform(3, 9.0, 0.5).unwrap();
        let mut prev = 0.0;
        for i in 0..200 {
            let t = i as f64 * 0.1;
            let v = basis.kernel_cumulative(2, t).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn silverman_two_points() {
        // population sigma of {0, 2} is 1, so h = (4/6)^(1/5)
        let data = dataset_from_times(&[0.0, 2.0], 3.0);
        let h = silverman_bandwidth(&data).unwrap();
        assert!((h - (2.0f64 / 3.0).powf(0.2)).abs() < 1e-14);
        assert!((h - 0.9221079114817278).abs() < 1e-12);
    }

    #[test]
    fn silverman_scales_with_time() {
        let data = dataset_from_times(&[0.5, 1.25, 2.0, 4.0], 5.0);
        let scaled = dataset_from_times(&[1.5, 3.75, 6.0, 12.0], 15.0);
        let h = silverman_bandwidth(&data).unwrap();
        let h3 = silverman_bandwidth(&scaled).unwrap();
        assert!((h3 / h - 3.0).abs() < 1e-12);
    }

    #[test]
    fn silverman_rejects_degenerate() {
        let data = dataset_from_times(&[1.0], 2.0);
        assert!(silverman_bandwidth(&data).is_err());
        let seq = EventSequence::new(vec![(1.0, 0), (1.0, 1)], 2.0).unwrap();
        let data = Dataset::new(vec![seq], 2).unwrap();
        assert!(silverman_bandwidth(&data).is_err());
    }

    #[test]
    fn cutoff_matches_inverse_erfc_value() {
        // h=1, N=100, epsilon=pi: erfc(omega0/sqrt(2)) = 0.01
        let omega0 = solve_cutoff(TailBound::Decaying, 100, 1.0, std::f64::consts::PI)
            .unwrap()
            .unwrap();
        assert!((omega0 - 2.5758293035489004).abs() < 1e-8);
        let tail = spectral_tail(TailBound::Decaying, 100, 1.0, omega0);
        assert!(tail <= std::f64::consts::PI);
        // smallest-cutoff property
        let below = spectral_tail(TailBound::Decaying, 100, 1.0, omega0 * (1.0 - 1e-6));
        assert!(below > std::f64::consts::PI);
    }

    #[test]
    fn cutoff_monotone_in_epsilon() {
        let mut last = f64::INFINITY;
        for i in 0..10 {
            let eps = 0.05 * 10f64.powf(i as f64 * 0.3);
            let omega0 = solve_cutoff(TailBound::Decaying, 100, 1.0, eps)
                .unwrap()
                .map_or(0.0, |w| w);
            assert!(omega0 <= last + 1e-12);
            last = omega0;
        }
    }

    #[test]
    fn ceiling_rule_and_spacing() {
        let basis = BasisConfig::uniform(50, 50.0, std::f64::consts::PI).unwrap();
        assert_eq!(basis.num_bases(), 50);
        assert!((basis.centers()[1] - basis.centers()[0] - 1.0).abs() < 1e-12);
        // selection path: omega0 = pi at T = 50 gives exactly M = 50
        let m = (50.0 * std::f64::consts::PI / std::f64::consts::PI).ceil() as usize;
        assert_eq!(m, 50);
    }

    #[test]
    fn degenerate_budget_gives_single_basis() {
        let data = dataset_from_times(&[0.0, 1.0, 2.0], 3.0);
        // budget above pi * N means omega0 = 0 is already feasible
        let eps = std::f64::consts::PI * 3.0 * 2.0;
        let basis = select_basis(&data, eps, 3.0).unwrap();
        assert_eq!(basis.num_bases(), 1);
        assert_eq!(basis.centers()[0], 0.0);
    }

    #[test]
    fn nondecaying_bound_floors_out() {
        // limit is pi * N * (1 - 1/sqrt(2)); a budget below that has no cutoff
        let n = 10;
        let floor = std::f64::consts::PI * n as f64 * (1.0 - 1.0 / std::f64::consts::SQRT_2);
        assert!(solve_cutoff(TailBound::NonDecaying, n, 1.0, floor * 0.5).is_err());
        assert!(solve_cutoff(TailBound::NonDecaying, n, 1.0, floor * 1.5)
            .unwrap()
            .is_some());
    }
}

