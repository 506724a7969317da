//! Nearest-neighbor heading averaging over switching neighbor graphs.
//!
//! The crate simulates agents whose headings move to the mean of their own and
//! their neighbors' headings, with the neighbor graph chosen at each step by a
//! [`SwitchingSignal`](signals::SwitchingSignal) or by inter-agent distance. It
//! also checks, on the recorded runs, the properties that drive consensus:
//! monotone envelopes, the separation dichotomy, and convergence per connected
//! component of the limit graph.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix it to double precision, which the scenario runner uses.

pub mod analysis;
pub mod dynamics;
pub mod graph;
pub mod library;
pub mod runner;
pub mod scalar;
pub mod scenario;
pub mod signals;

pub use graph::{Edge, Exactness, NeighborGraph, VertexPartition, VertexSet};
pub use scalar::Scalar;
pub use signals::{GraphSource, JointConnectivity, SwitchingSignal};

pub type HeadingState64 = dynamics::HeadingState<f64>;
pub type PlanarState64 = dynamics::PlanarState<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type LeaderConfig64 = dynamics::LeaderConfig<f64>;
pub type Mode64 = dynamics::Mode<f64>;
pub type EnvelopeSeries64 = analysis::EnvelopeSeries<f64>;
pub type ConvergenceReport64 = analysis::ConvergenceReport<f64>;
pub type SeparationScenario64 = analysis::SeparationScenario<f64>;

pub type HeadingState32 = dynamics::HeadingState<f32>;
pub type PlanarState32 = dynamics::PlanarState<f32>;
pub type Trajectory32 = dynamics::Trajectory<f32>;
pub type ConvergenceReport32 = analysis::ConvergenceReport<f32>;
