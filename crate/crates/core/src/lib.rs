//! Simulation of a species-survival ecosystem and its scaling limits.
//!
//! Each step draws an integer increment `I` from an [`IncrementLaw`]. A positive
//! increment adds that many species with independent uniform fitnesses; a
//! negative one removes the least fit species. The crate tracks the living
//! population, its random-walk representation, and the Gaussian limit
//! processes, together with the statistics used to compare them.

pub mod ecosystem;
pub mod error;
pub mod increments;
pub mod limitproc;
pub mod multiset;
pub mod noise;
pub mod replicas;
pub mod stats;
pub mod walkrep;
pub mod zeta;

pub use ecosystem::{run_trajectory, BirthMode, EcosystemState, Snapshot, SnapshotPlan, Trajectory};
pub use error::{Error, Result};
pub use increments::{IncrementLaw, LawSpec, LimitParams, MarginalForm, Moment, MomentSet};
pub use limitproc::{sample_joint_limit, JointLimitSample, PathGrid};
pub use noise::{derive_stream, NoiseStream};
pub use replicas::{run_replicas, run_replicas_sequential};
pub use walkrep::{psi, walk_trace, OnlineWalk, WalkTrace};
