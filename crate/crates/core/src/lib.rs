//! Coagulation with limited aggregations.
//!
//! The deterministic side ([`detsolve`]) evaluates closed-form solutions of the
//! multiplicative and arm-multiplicative Smoluchowski systems and integrates
//! their truncated versions. The microscopic side ([`stochsim`]) simulates the
//! corresponding Marcus–Lushnikov coalescents and random configuration
//! multigraphs. [`branching`] holds the probability arithmetic both sides
//! share, and [`harness`] runs reproducible experiments and compares the two.

pub mod branching;
pub mod detsolve;
pub mod harness;
pub mod numeric;
pub mod stochsim;

pub use branching::{ArmMeasure, BranchingError, OffspringLaw, Pmf};
pub use detsolve::{ConcentrationField, MonoField, SolveError, Trajectory};
pub use harness::{ComparisonReport, ExperimentConfig, HarnessError};
pub use stochsim::{ClusterCensus, ConfigGraph, DegreeSequence, ParticleSystem, SolutionTrace};
