//! Spectrum and power allocation for D2D-based vehicular networks.
//!
//! V2V links are clustered by a greedy MAX N-CUT on their mutual
//! interference, every (V2I link, resource block, cluster) pattern gets
//! closed-form power control under a Rayleigh outage constraint, and the
//! resulting capacities are matched with an LP-rounding 2-approximation for
//! weighted 3-dimensional matching. A seeded Monte-Carlo harness evaluates the
//! allocator on a multi-lane freeway drop model.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`.

pub mod channel;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod lp;
pub mod matching;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod power;
pub mod real;
pub mod scenario;

pub use error::{Error, Result};
pub use eval::{run_monte_carlo, CdfData, EmpiricalCdf};
pub use matching::{match_3d, Edge, Hypergraph3, Matching3D};
pub use pipeline::{allocate, Allocation};
pub use real::Real;
pub use scenario::{ScenarioConfig, Topology};

pub type Allocation64 = pipeline::Allocation<f64>;
pub type BasicSolution64 = lp::BasicSolution<f64>;
pub type ChannelState64 = channel::ChannelState<f64>;
pub type Hypergraph64 = matching::Hypergraph3<f64>;
pub type InterferenceGraph64 = partition::InterferenceGraph<f64>;
pub type LinearProgram64 = lp::LinearProgram<f64>;
pub type Matching64 = matching::Matching3D<f64>;
pub type PowerProblem64 = power::PowerProblem<f64>;
pub type PowerSolution64 = power::PowerSolution<f64>;
