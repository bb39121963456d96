//! Stationary analysis: mean-field level profiles and an exact small-`n` oracle.

pub mod exact;
mod stationary;

pub use exact::{exact_stationary_small, ExactChain};
pub use stationary::{
    detect_probability, stationary_false_negative, stationary_false_positive,
    stationary_no_leak, theorem_bounds, FalseNegativeProfile, FalsePositiveProfiles,
    ProfileMode, ProfileParams, StationaryProfile, TheoremBounds,
};

use thiserror::Error;

use crate::sim::LeakError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("population size must be positive")]
    EmptyPopulation,
    #[error("number of levels must be at least 1")]
    NoLevels,
    #[error("k = {k} exceeds n = {n}")]
    TooManyDetected { k: u64, n: u64 },
    #[error("false-negative analysis needs k >= 1")]
    NoDetected,
    #[error("leak parameter beta must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("profile does not match protocol levels: {0}")]
    LevelMismatch(String),
    #[error("configuration space has {0} states, above the supported maximum")]
    StateSpaceTooLarge(f64),
    #[error("power iteration did not converge in {0} iterations")]
    NotConverged(usize),
    #[error(transparent)]
    Leak(#[from] LeakError),
}
