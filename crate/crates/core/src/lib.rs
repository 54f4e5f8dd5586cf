//! Network psychometrics for intensive longitudinal data: Ising and
//! multidimensional IRT equivalence, Gaussian graphical models, temporal and
//! contemporaneous VAR networks, idiographic latent-topology models, and
//! recurrence quantification.

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod dataset;
pub mod export;
pub mod ggm;
pub mod graph;
pub mod idiographic;
pub mod ising;
pub mod linalg;
pub mod pmf;
pub mod quadrature;
pub mod recurrence;
pub mod rng;
pub mod serde_matrix;
pub mod var;
