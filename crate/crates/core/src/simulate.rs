//! Exact sampling of multivariate Hawkes processes by thinning, plus the
//! synthetic ground-truth generators used in the experiments.
//!
//! Sampling uses Ogata-style thinning with a local dominating bound: the sum
//! of the base rates and, for every past event, the supremum of its kernel
//! over the remaining support. The bound is nonincreasing between events, so
//! accepting with probability `lambda(t*) / bound` is exact. All randomness
//! comes from a counter-based ChaCha8 stream seeded per sequence, so a seed
//! pins the sequence byte-for-byte.

use crate::basis::BasisConfig;
use crate::error::{HawkesError, Result};
use crate::model::{spectral_radius, ModelParams};
use crate::types::{Dataset, EventSequence, GrangerGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sine-bump kernel parameters for one directed pair:
/// `phi(t) = b (1 - cos(omega t - pi s))` on the support window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinePairParams {
    pub amplitude: f64,
    pub omega: f64,
    /// Phase shift s in {0, 1}.
    pub shift: u8,
}

/// Kernel family of a synthetic ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    SineLike,
    PiecewiseConstant,
    BasisExpansion,
}

impl std::str::FromStr for KernelFamily {
    type Err = HawkesError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" | "sine_like" => Ok(Self::SineLike),
            "pwc" | "piecewise_constant" => Ok(Self::PiecewiseConstant),
            "basis" | "basis_expansion" => Ok(Self::BasisExpansion),
            other => Err(HawkesError::InvalidConfig(format!(
                "unknown kernel family '{other}' (expected sine|pwc|basis)"
            ))),
        }
    }
}

/// Kernels of a ground-truth process.
#[derive(Debug, Clone)]
pub enum TruthKernels {
    /// Per-pair sine bumps (or their piecewise-constant truncations);
    /// `pairs[u][v]` parameterizes the impact of v on u, `None` meaning an
    /// identically zero kernel.
    Sine {
        pairs: Vec<Vec<Option<SinePairParams>>>,
        piecewise: bool,
        /// Use the degenerate printed support `[0, (2-s)/(4 pi omega)]`
        /// instead of the continuous `[0, (2-s) pi / omega]`.
        verbatim_window: bool,
    },
    /// A basis-expansion model reused as ground truth.
    Basis {
        params: ModelParams,
        basis: BasisConfig,
    },
}

/// Ground-truth generating process: base rates plus kernels.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub mu: Vec<f64>,
    pub kernels: TruthKernels,
}

fn sine_support(p: &SinePairParams, verbatim: bool) -> f64 {
    let s = p.shift as f64;
    if verbatim {
        (2.0 - s) / (4.0 * std::f64::consts::PI * p.omega)
    } else {
        (2.0 - s) * std::f64::consts::PI / p.omega
    }
}

fn sine_value(p: &SinePairParams, t: f64) -> f64 {
    p.amplitude * (1.0 - (p.omega * t - std::f64::consts::PI * p.shift as f64).cos())
}

/// Window `[lo, hi]` on which the piecewise-constant truncation equals the
/// amplitude: the upper half of the sine bump, `phi_sine >= b`.
fn pwc_window(p: &SinePairParams, verbatim: bool) -> (f64, f64) {
    let support = sine_support(p, verbatim);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let (lo, hi) = if p.shift == 0 {
        (half_pi / p.omega, 3.0 * half_pi / p.omega)
    } else {
        (0.0, half_pi / p.omega)
    };
    (lo.min(support), hi.min(support))
}

impl GroundTruth {
    pub fn sine(
        mu: Vec<f64>,
        pairs: Vec<Vec<Option<SinePairParams>>>,
        piecewise: bool,
        verbatim_window: bool,
    ) -> Result<Self> {
        let n = mu.len();
        if pairs.len() != n || pairs.iter().any(|row| row.len() != n) {
            return Err(HawkesError::DimensionMismatch(
                "sine parameter table must be U x U".into(),
            ));
        }
        if mu.iter().any(|&m| m < 0.0) {
            return Err(HawkesError::InvalidConfig("mu must be nonnegative".into()));
        }
        for p in pairs.iter().flatten().flatten() {
            if p.amplitude < 0.0 || !(p.omega > 0.0) || p.shift > 1 {
                return Err(HawkesError::InvalidConfig(
                    "sine pair needs amplitude >= 0, omega > 0, shift in {0,1}".into(),
                ));
            }
        }
        Ok(Self {
            mu,
            kernels: TruthKernels::Sine {
                pairs,
                piecewise,
                verbatim_window,
            },
        })
    }

    pub fn from_model(mu: Vec<f64>, params: ModelParams, basis: BasisConfig) -> Result<Self> {
        if mu.len() != params.num_types() {
            return Err(HawkesError::DimensionMismatch(
                "mu length must match model".into(),
            ));
        }
        Ok(Self {
            mu,
            kernels: TruthKernels::Basis { params, basis },
        })
    }

    pub fn num_types(&self) -> usize {
        self.mu.len()
    }

    pub fn family(&self) -> KernelFamily {
        match &self.kernels {
            TruthKernels::Sine { piecewise, .. } => {
                if *piecewise {
                    KernelFamily::PiecewiseConstant
                } else {
                    KernelFamily::SineLike
                }
            }
            TruthKernels::Basis { .. } => KernelFamily::BasisExpansion,
        }
    }

    /// `phi_{uv}(t)`: the impact of a past type-v event on type-u intensity.
    pub fn kernel_value(&self, u: usize, v: usize, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kernels {
            TruthKernels::Sine {
                pairs,
                piecewise,
                verbatim_window,
            } => match &pairs[u][v] {
                None => 0.0,
                Some(p) => {
                    if *piecewise {
                        let (lo, hi) = pwc_window(p, *verbatim_window);
                        if t >= lo && t <= hi {
                            p.amplitude
                        } else {
                            0.0
                        }
                    } else if t <= sine_support(p, *verbatim_window) {
                        sine_value(p, t)
                    } else {
                        0.0
                    }
                }
            },
            TruthKernels::Basis { params, basis } => {
                crate::model::impact_function(params, basis, u, v, t).unwrap_or(0.0)
            }
        }
    }

    /// `sup_{x >= delta} phi_{uv}(x)`; an upper bound suffices for thinning
    /// and the basis family uses the sum of per-kernel sups.
    pub fn kernel_tail_sup(&self, u: usize, v: usize, delta: f64) -> f64 {
        let delta = delta.max(0.0);
        match &self.kernels {
            TruthKernels::Sine {
                pairs,
                piecewise,
                verbatim_window,
            } => match &pairs[u][v] {
                None => 0.0,
                Some(p) => {
                    if *piecewise {
                        let (_, hi) = pwc_window(p, *verbatim_window);
                        if delta <= hi {
                            p.amplitude
                        } else {
                            0.0
                        }
                    } else {
                        let support = sine_support(p, *verbatim_window);
                        if delta > support {
                            return 0.0;
                        }
                        // interior max 2b at omega t - pi s = pi
                        let peak_at =
                            std::f64::consts::PI * (1.0 + p.shift as f64) / p.omega;
                        let mut sup = sine_value(p, delta).max(sine_value(p, support));
                        if peak_at >= delta && peak_at <= support {
                            sup = sup.max(2.0 * p.amplitude);
                        }
                        sup
                    }
                }
            },
            TruthKernels::Basis { params, basis } => {
                let group = params.group(u, v);
                let mut sup = 0.0;
                for (m, &a) in group.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let center = basis.centers()[m];
                    sup += if delta <= center {
                        a
                    } else {
                        a * basis.kernel(m, delta).unwrap()
                    };
                }
                sup
            }
        }
    }

    /// `int_0^x phi_{uv}(s) ds`, the kernel's contribution to the compensator.
    pub fn kernel_cumulative(&self, u: usize, v: usize, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kernels {
            TruthKernels::Sine {
                pairs,
                piecewise,
                verbatim_window,
            } => match &pairs[u][v] {
                None => 0.0,
                Some(p) => {
                    if *piecewise {
                        let (lo, hi) = pwc_window(p, *verbatim_window);
                        p.amplitude * (x.min(hi) - lo).max(0.0)
                    } else {
                        let support = sine_support(p, *verbatim_window);
                        let x = x.min(support);
                        // int_0^x b(1 - cos(omega t - pi s)) dt, sin(pi s) = 0
                        let s = std::f64::consts::PI * p.shift as f64;
                        p.amplitude * (x - (p.omega * x - s).sin() / p.omega)
                    }
                }
            },
            TruthKernels::Basis { params, basis } => {
                let group = params.group(u, v);
                group
                    .iter()
                    .enumerate()
                    .map(|(m, &a)| {
                        if a == 0.0 {
                            0.0
                        } else {
                            a * basis.kernel_cumulative(m, x).unwrap()
                        }
                    })
                    .sum()
            }
        }
    }

    /// `int_0^inf phi_{uv}`.
    pub fn kernel_mass(&self, u: usize, v: usize) -> f64 {
        match &self.kernels {
            TruthKernels::Sine { pairs, verbatim_window, .. } => match &pairs[u][v] {
                None => 0.0,
                Some(p) => self.kernel_cumulative(u, v, sine_support(p, *verbatim_window)),
            },
            TruthKernels::Basis { params, basis } => params
                .group(u, v)
                .iter()
                .enumerate()
                .map(|(m, &a)| a * basis.kernel_total_mass(m).unwrap())
                .sum(),
        }
    }

    /// Integrated-kernel matrix and its spectral radius.
    pub fn branching(&self) -> (Vec<Vec<f64>>, f64) {
        let n = self.num_types();
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|u| (0..n).map(|v| self.kernel_mass(u, v)).collect())
            .collect();
        let radius = spectral_radius(&matrix);
        (matrix, radius)
    }

    /// True causality graph: edge v -> u present iff `phi_{uv}` has mass.
    pub fn true_graph(&self) -> GrangerGraph {
        let n = self.num_types();
        let adjacency = (0..n)
            .map(|u| (0..n).map(|v| self.kernel_mass(u, v) > 0.0).collect())
            .collect();
        GrangerGraph::new(adjacency).expect("square by construction")
    }

    /// Compensator `Lambda_u(t) = mu_u t + sum_{t_j < t} int_0^{t-t_j}
    /// phi_{u,v_j}`, used for time-rescaling goodness-of-fit.
    pub fn compensator(&self, seq: &EventSequence, u: usize, t: f64) -> f64 {
        let mut value = self.mu[u] * t;
        for e in seq.events() {
            if e.time >= t {
                break;
            }
            value += self.kernel_cumulative(u, e.type_idx, t - e.time);
        }
        value
    }
}

fn exponential_wait(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // inverse transform on (0, 1]
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// Draws one realization on `[0, horizon]` by thinning. Refuses
/// nonstationary ground truths (spectral radius >= 1). Deterministic in the
/// seed.
pub fn sample(gt: &GroundTruth, horizon: f64, seed: u64) -> Result<EventSequence> {
    let (_, radius) = gt.branching();
    if radius >= 1.0 {
        return Err(HawkesError::NonStationary { radius });
    }
    let num_types = gt.num_types();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu_total: f64 = gt.mu.iter().sum();
    let mut events: Vec<(f64, usize)> = Vec::new();
    let mut lambdas = vec![0.0; num_types];
    let mut t = 0.0_f64;
    while t < horizon {
        let mut bound = mu_total;
        for &(tj, vj) in &events {
            for u in 0..num_types {
                bound += gt.kernel_tail_sup(u, vj, t - tj);
            }
        }
        if bound <= 0.0 {
            break;
        }
        let t_star = t + exponential_wait(&mut rng, bound);
        if t_star > horizon || !t_star.is_finite() {
            break;
        }
        let mut total = 0.0;
        for (u, slot) in lambdas.iter_mut().enumerate() {
            let mut lam = gt.mu[u];
            for &(tj, vj) in &events {
                lam += gt.kernel_value(u, vj, t_star - tj);
            }
            *slot = lam;
            total += lam;
        }
        // The dominating bound must hold at every proposal or the draw is
        // not from the target process.
        assert!(
            total <= bound * (1.0 + 1e-9),
            "thinning bound violated: lambda {total} > bound {bound}"
        );
        let d: f64 = rng.gen::<f64>() * bound;
        if d < total {
            let mut acc = 0.0;
            let mut chosen = num_types - 1;
            for (u, &lam) in lambdas.iter().enumerate() {
                acc += lam;
                if d < acc {
                    chosen = u;
                    break;
                }
            }
            events.push((t_star, chosen));
        }
        t = t_star;
    }
    EventSequence::new(events, horizon)
}

/// Configuration of the synthetic study generator (the 5-type sine /
/// piecewise-constant ground truth with uniformly drawn base rates).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_sequences: usize,
    pub horizon: f64,
    pub family: KernelFamily,
    pub seed: u64,
    #[serde(default)]
    pub verbatim_window: bool,
}

impl SyntheticConfig {
    pub fn new(num_sequences: usize, family: KernelFamily, seed: u64) -> Self {
        Self {
            num_sequences,
            horizon: 50.0,
            family,
            seed,
            verbatim_window: false,
        }
    }
}

pub const SYNTHETIC_NUM_TYPES: usize = 5;

/// The 5-type parameter table: `(0.05, 0.6 pi, 1)` within {1,2,3},
/// `(0.05, 0.4 pi, 0)` within {4,5}, `(0.02, 0.2 pi, 0)` between type 4 and
/// {1,2,3}, and identically zero between type 5 and {1,2,3} (the six absent
/// edges). Indices here are 0-based.
pub fn synthetic_pair_table() -> Vec<Vec<Option<SinePairParams>>> {
    let pi = std::f64::consts::PI;
    let low = [0usize, 1, 2];
    let mut pairs = vec![vec![None; SYNTHETIC_NUM_TYPES]; SYNTHETIC_NUM_TYPES];
    for u in 0..SYNTHETIC_NUM_TYPES {
        for v in 0..SYNTHETIC_NUM_TYPES {
            let p = if low.contains(&u) && low.contains(&v) {
                Some(SinePairParams {
                    amplitude: 0.05,
                    omega: 0.6 * pi,
                    shift: 1,
                })
            } else if (u == 3 || u == 4) && (v == 3 || v == 4) {
                Some(SinePairParams {
                    amplitude: 0.05,
                    omega: 0.4 * pi,
                    shift: 0,
                })
            } else if (u == 3 && low.contains(&v)) || (v == 3 && low.contains(&u)) {
                Some(SinePairParams {
                    amplitude: 0.02,
                    omega: 0.2 * pi,
                    shift: 0,
                })
            } else {
                None
            };
            pairs[u][v] = p;
        }
    }
    pairs
}

/// Draws the ground truth (base rates from `U[0, 1/U]`) and `C` sequences.
/// Sequence `i` uses seed `seed + 1 + i`; the truth draw uses `seed` itself.
pub fn make_synthetic(config: &SyntheticConfig) -> Result<(Dataset, GroundTruth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let u = SYNTHETIC_NUM_TYPES;
    let mu: Vec<f64> = (0..u).map(|_| rng.gen::<f64>() / u as f64).collect();
    let piecewise = match config.family {
        KernelFamily::SineLike => false,
        KernelFamily::PiecewiseConstant => true,
        KernelFamily::BasisExpansion => {
            return Err(HawkesError::InvalidConfig(
                "synthetic generator supports sine and piecewise-constant families".into(),
            ))
        }
    };
    let gt = GroundTruth::sine(mu, synthetic_pair_table(), piecewise, config.verbatim_window)?;
    let mut sequences = Vec::with_capacity(config.num_sequences);
    for i in 0..config.num_sequences {
        sequences.push(sample(&gt, config.horizon, config.seed + 1 + i as u64)?);
    }
    Ok((Dataset::new(sequences, u)?, gt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_truth(piecewise: bool) -> GroundTruth {
        GroundTruth::sine(vec![0.1; 5], synthetic_pair_table(), piecewise, false).unwrap()
    }

    #[test]
    fn sine_kernel_values() {
        let gt = GroundTruth::sine(
            vec![0.0],
            vec![vec![Some(SinePairParams {
                amplitude: 0.05,
                omega: 0.4 * std::f64::consts::PI,
                shift: 0,
            })]],
            false,
            false,
        )
        .unwrap();
        assert_eq!(gt.kernel_value(0, 0, 0.0), 0.0);
        // omega t = pi/2 at t = 1.25
        assert!((gt.kernel_value(0, 0, 1.25) - 0.05).abs() < 1e-12);
        // support ends at 2 pi / omega = 5
        assert!(gt.kernel_value(0, 0, 5.0).abs() < 1e-12);
        assert_eq!(gt.kernel_value(0, 0, 5.1), 0.0);
        // mass = 2 pi b / omega = 0.25
        assert!((gt.kernel_mass(0, 0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn shifted_sine_starts_at_peak_and_vanishes_at_end() {
        let gt = GroundTruth::sine(
            vec![0.0],
            vec![vec![Some(SinePairParams {
                amplitude: 0.05,
                omega: 0.6 * std::f64::consts::PI,
                shift: 1,
            })]],
            false,
            false,
        )
        .unwrap();
        assert!((gt.kernel_value(0, 0, 0.0) - 0.1).abs() < 1e-12);
        let support = std::f64::consts::PI / (0.6 * std::f64::consts::PI);
        assert!(gt.kernel_value(0, 0, support).abs() < 1e-12);
        // mass = pi b / omega
        assert!((gt.kernel_mass(0, 0) - 0.05 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn verbatim_window_is_narrow() {
        let p = SinePairParams {
            amplitude: 0.05,
            omega: 0.6 * std::f64::consts::PI,
            shift: 1,
        };
        let narrow = sine_support(&p, true);
        let wide = sine_support(&p, false);
        assert!(narrow < 0.05 && wide > 1.0);
    }

    #[test]
    fn pwc_is_level_threshold_of_sine() {
        let gt = table_truth(true);
        let sine = table_truth(false);
        // pair within {4,5} block (0-based 3,4): shift 0, omega 0.4 pi
        for i in 0..200 {
            let t = i as f64 * 0.03;
            let pw = gt.kernel_value(3, 4, t);
            let sv = sine.kernel_value(3, 4, t);
            if pw > 0.0 {
                assert!((pw - 0.05).abs() < 1e-15);
                assert!(sv >= 0.05 - 1e-12);
            } else {
                assert!(sv < 0.05 + 1e-12);
            }
        }
    }

    #[test]
    fn table_absent_pairs_are_zero() {
        let gt = table_truth(false);
        for v in 0..3 {
            for t in [0.0, 0.5, 2.0, 10.0] {
                assert_eq!(gt.kernel_value(4, v, t), 0.0);
                assert_eq!(gt.kernel_value(v, 4, t), 0.0);
            }
        }
        let graph = gt.true_graph();
        assert_eq!(graph.num_absent(), 6);
        for v in 0..3 {
            assert!(!graph.has_edge(v, 4)); // edge 5 -> v absent
            assert!(!graph.has_edge(4, v)); // edge v -> 5 absent
        }
        assert!(graph.has_edge(0, 1));
        assert!(graph.has_edge(3, 4));
    }

    #[test]
    fn table_truth_is_stationary() {
        let (_, radius) = table_truth(false).branching();
        assert!(radius < 1.0, "radius {radius}");
        let (_, radius_pwc) = table_truth(true).branching();
        assert!(radius_pwc < 1.0);
    }

    #[test]
    fn sampler_refuses_nonstationary() {
        let gt = GroundTruth::sine(
            vec![0.5],
            vec![vec![Some(SinePairParams {
                amplitude: 0.5,
                omega: 0.4 * std::f64::consts::PI,
                shift: 0,
            })]],
            false,
            false,
        )
        .unwrap();
        // mass = 2 pi 0.5 / (0.4 pi) = 2.5 >= 1
        assert!(matches!(
            sample(&gt, 10.0, 1),
            Err(HawkesError::NonStationary { .. })
        ));
    }

    #[test]
    fn zero_mu_yields_empty_sequence() {
        let gt = GroundTruth::sine(
            vec![0.0, 0.0],
            vec![
                vec![
                    Some(SinePairParams {
                        amplitude: 0.02,
                        omega: 1.0,
                        shift: 0,
                    }),
                    None,
                ],
                vec![None, None],
            ],
            false,
            false,
        )
        .unwrap();
        let seq = sample(&gt, 100.0, 7).unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn sampling_is_reproducible() {
        let config = SyntheticConfig::new(3, KernelFamily::SineLike, 42);
        let (data_a, _) = make_synthetic(&config).unwrap();
        let (data_b, _) = make_synthetic(&config).unwrap();
        assert_eq!(data_a.sequences, data_b.sequences);
        let (data_c, _) =
            make_synthetic(&SyntheticConfig::new(3, KernelFamily::SineLike, 43)).unwrap();
        assert_ne!(data_a.sequences, data_c.sequences);
    }

    #[test]
    fn empty_config_gives_empty_dataset() {
        let (data, gt) = make_synthetic(&SyntheticConfig::new(0, KernelFamily::SineLike, 5)).unwrap();
        assert!(data.sequences.is_empty());
        assert_eq!(gt.num_types(), 5);
    }

    #[test]
    fn sampled_sequences_are_valid() {
        let (data, _) = make_synthetic(&SyntheticConfig::new(5, KernelFamily::SineLike, 11)).unwrap();
        for seq in &data.sequences {
            assert!(!seq.is_empty());
            for w in seq.events().windows(2) {
                assert!(w[0].time <= w[1].time);
            }
            assert!(seq.events().iter().all(|e| e.time <= seq.horizon()));
        }
    }

    #[test]
    fn compensator_matches_quadrature_of_kernel() {
        let gt = table_truth(false);
        let seq = EventSequence::new(vec![(1.0, 0), (2.5, 3)], 50.0).unwrap();
        for u in 0..5 {
            let t = 6.0;
            // midpoint rule on the intensity
            let steps = 200_000;
            let dt = t / steps as f64;
            let mut acc = 0.0;
            for k in 0..steps {
                let s = (k as f64 + 0.5) * dt;
                let mut lam = gt.mu[u];
                for e in seq.events() {
                    if e.time < s {
                        lam += gt.kernel_value(u, e.type_idx, s - e.time);
                    }
                }
                acc += lam * dt;
            }
            let exact = gt.compensator(&seq, u, t);
            assert!(
                (acc - exact).abs() < 1e-6 * exact.max(1.0),
                "u={u}: {acc} vs {exact}"
            );
        }
    }
}
