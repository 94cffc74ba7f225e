//! Multivariate Hawkes processes with basis-expansion impact functions:
//! simulation by thinning, EM learning with sparse-group-lasso and
//! pairwise-similarity regularization, and Granger causality graph
//! recovery from the group-sparsity pattern of the learned coefficients.
//!
//! The conditional intensity of type u is
//!
//! ```text
//! lambda_u(t) = mu_u + sum_{t_i < t} phi_{u, u_i}(t - t_i),
//! phi_{u,u2}(t) = sum_m a_{u u2}^m kappa_m(t),
//! ```
//!
//! with unit-peak Gaussian bases `kappa_m`. Past type-u2 events influence
//! type-u events exactly when `phi_{u,u2}` is not identically zero, so the
//! causality graph is the support pattern of the coefficient groups
//! `a_{u u2}`; the learner drives truly inactive groups to exact zeros.

pub mod basis;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod learn;
pub mod model;
pub mod simulate;
pub mod special;
pub mod types;

pub use basis::{select_basis, select_basis_rho, silverman_bandwidth, BasisConfig};
pub use error::{HawkesError, Result};
pub use eval::{relative_error_mu, relative_error_phi, score_graph, EvalReport};
pub use learn::{e_step, fit, prox_group, update_a, update_mu, FitReport, LearnConfig};
pub use model::{
    branching_matrix, extract_graph, impact_function, intensity, log_likelihood, ModelParams,
};
pub use simulate::{make_synthetic, sample, GroundTruth, KernelFamily, SyntheticConfig};
pub use types::{ClusterStructure, Dataset, Event, EventSequence, GrangerGraph};
