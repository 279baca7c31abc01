//! Microscopic side: Marcus–Lushnikov coalescents, the configuration model
//! and cluster statistics.
//!
//! Every random routine takes the generator explicitly. [`rng_from_seed`]
//! gives the reproducible ChaCha8 stream used throughout; replica `i` of an
//! experiment with seed `s` uses seed `s ^ i`.

mod census;
mod coalescent;
mod config_model;
mod degrees;
mod fenwick;
mod mono;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use census::{
    census, edge_rooted_size_law, empirical_concentrations, replica_mean, ClusterCensus,
    ClusterRecord, Clustered, EdgeRootedLaw, EdgeSampling, Estimate,
};
pub use coalescent::{
    coalesce_limited, coalesce_threshold, soc_statistic, LimitedCoalescent, Particle,
    ParticleSystem, SolutionTrace, Step, TracePoint, REJECTION_CAP,
};
pub use config_model::{random_configuration, ConfigGraph};
pub use degrees::{sample_degrees, DegreeSampling, DegreeSequence};
pub use mono::{coalesce_mono, MonoCoalescent};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("threshold must be macroscopic-excluding (alpha = {alpha}, n = {n})")]
    ThresholdTooLarge { alpha: u64, n: u64 },
    #[error("graph has no edges")]
    NoEdges,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of replica `index`.
pub fn replica_seed(seed: u64, index: u32) -> u64 {
    seed ^ index as u64
}

/// Recommended gel threshold `ceil(n^(2/3))`.
pub fn default_threshold(n: u64) -> u64 {
    let mut alpha = (n as f64).powf(2.0 / 3.0).round() as u64;
    // exact integer ceiling of the cube-root power
    while alpha.pow(3) < n * n {
        alpha += 1;
    }
    while alpha > 1 && (alpha - 1).pow(3) >= n * n {
        alpha -= 1;
    }
    alpha
}
