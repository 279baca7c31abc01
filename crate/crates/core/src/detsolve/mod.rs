//! Deterministic coagulation: closed-form solutions, gelation times and
//! truncated integrators of the multiplicative and arm-multiplicative
//! Smoluchowski systems.

mod closed_form;
mod field;
mod integrate;
mod weak_form;

use thiserror::Error;

use crate::branching::BranchingError;

pub use closed_form::{
    kokholm, limited_closed_form, limited_closed_form_zero_arms, limiting_concentration,
    limiting_concentrations, ln_mcleod, mcleod, merle_normand_limits, terminal_mass_identity,
    tgel_limited, tgel_multiplicative, LimitedClosedForm, MassIdentity, MerleNormandLimits,
};
pub use field::{ConcentrationField, MonoField, Trajectory};
pub use integrate::{
    integrate_limited, integrate_limited_fixed, integrate_mono, integrate_mono_fixed, StepControl,
};
pub use weak_form::{
    arm_multiplicative, multiplicative, weak_form_rate, weak_form_residual, CoagulationField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("use kokholm past gelation (t = {t} >= 1)")]
    PastGelation { t: f64 },
    #[error("post-gelation formula needs t >= 1, got {t}")]
    BeforeGelation { t: f64 },
    #[error("closed form valid pre-gelation only (t = {t}, gelation time {tgel})")]
    ClosedFormPreGelOnly { t: f64, tgel: f64 },
    #[error("integration horizon {t_end} reaches the gelation time {tgel}")]
    BeyondGelation { t_end: f64, tgel: f64 },
    #[error("zero-arm polymers need m >= 2, got {m}")]
    ZeroArmMonomer { m: u32 },
    #[error("zero concentration field")]
    ZeroField,
    #[error("terminal mass identity only holds without gelation")]
    GellingRegime,
    #[error("solution-phase limits are trivial without gelation")]
    NonGellingRegime,
    #[error("instability, reduce step (concentration {value} at t = {t})")]
    Instability { t: f64, value: f64 },
    #[error("step halving did not reach tolerance {tolerance} after {halvings} halvings (last gap {gap})")]
    NotConverged {
        tolerance: f64,
        halvings: u32,
        gap: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Branching(#[from] BranchingError),
}
