//! Distance-based flocking and target interception for teams of
//! nonholonomic unicycle robots.
//!
//! The formation shape is specified by a minimally and infinitesimally rigid
//! framework. Each robot runs a gradient shape controller on squared-distance
//! errors to its neighbors, turns the resulting planar velocity into unicycle
//! commands through a heading-error transformation, and estimates the signals
//! it cannot see (the flocking velocity, or the target's velocity and the
//! interception error) with a signum consensus observer.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x > 0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flocking;
pub mod geometry;
pub mod graph;
pub mod interception;
pub mod linalg;
pub mod observers;
pub mod output;
pub mod rigidity;
pub mod scalar;
pub mod scenario;
pub mod simulator;
pub mod trajectory;
pub mod unicycle;

pub use error::{Error, Result};
pub use graph::{Edge, Graph};
pub use rigidity::RigidityReport;
pub use scalar::Real;
pub use scenario::{load_scenario, Scenario, ScenarioError, ScenarioFile};
pub use simulator::{AccelSource, Task, TaskKind};
pub use trajectory::{TargetPath, VelocityProfile};

pub type Vec2 = geometry::Vec2<f64>;
pub type Mat2 = geometry::Mat2<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type Framework = rigidity::Framework<f64>;
pub type TargetFormation = rigidity::TargetFormation<f64>;
pub type Pose = unicycle::Pose<f64>;
pub type VelocityCommand = unicycle::VelocityCommand<f64>;
pub type ObserverBank = observers::ObserverBank<f64>;
pub type FlockingGains = flocking::FlockingGains<f64>;
pub type InterceptionGains = interception::InterceptionGains<f64>;
pub type TargetState = interception::TargetState<f64>;
pub type SimConfig = simulator::SimConfig<f64>;
pub type WorldState = simulator::WorldState<f64>;
pub type Simulation = simulator::Simulation<f64>;
pub type TrajectoryLog = simulator::TrajectoryLog<f64>;
pub type Summary = output::Summary;
