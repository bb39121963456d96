//! Discrete-step stochastic scheduler for population protocols with leaks.
//!
//! Each step is a leak with probability `beta / n`; otherwise an ordered pair
//! of distinct molecules is drawn uniformly and the protocol's rule (if any)
//! is applied. Time is counted in interactions; parallel time is `t / n`.

mod batch;
mod engine;
pub mod export;
mod leak;

pub use batch::{run_batch, run_many, BatchStats};
pub use engine::{
    draw_scheduled_step, rng_for, run, step, Event, EventKind, ExecutionMode, Intervention,
    LoggedEvent, MoleculePopulation, ScheduledStep, SimParams, SimRng, Snapshot, Trajectory,
};
pub use leak::{LeakError, LeakModel, LeakStrategy, ResolvedLeak};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Output, Protocol, SpeciesId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Leak(#[from] LeakError),
    #[error("configuration has {got} species, protocol has {expected}")]
    SpeciesMismatch { got: usize, expected: usize },
    #[error("record_every must be at least 1")]
    ZeroRecordInterval,
    #[error("run count must be at least 1")]
    NoRuns,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("cannot set D count to {k_new}: population holds {n} molecules")]
    DCountOutOfRange { k_new: u64, n: u64 },
    #[error("protocol has no detected species (level 0) or neutral species")]
    NotDetectionProtocol,
}

/// Count vector over species; the total is fixed for the lifetime of a run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    counts: Vec<u64>,
    n: u64,
}

impl Configuration {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u64] {
        &mut self.counts
    }

    #[inline]
    pub fn count(&self, id: SpeciesId) -> u64 {
        self.counts[id.index()]
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn detect_fraction(&self, detect_mask: &[bool]) -> f64 {
        detect_fraction(&self.counts, detect_mask, self.n)
    }
}

pub(crate) fn detect_fraction(counts: &[u64], mask: &[bool], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let detect: u64 = counts
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&c, _)| c)
        .sum();
    detect as f64 / n as f64
}

/// `D` and neutral species of a detection protocol.
pub(crate) fn detection_roles(p: &Protocol) -> Result<(SpeciesId, SpeciesId), SimError> {
    let d = p.find_level(0).ok_or(SimError::NotDetectionProtocol)?;
    let neutral = p
        .species()
        .iter()
        .filter(|s| s.output == Output::Nondetect && s.level.is_some())
        .max_by_key(|s| s.level)
        .map(|s| s.id)
        .ok_or(SimError::NotDetectionProtocol)?;
    Ok((d, neutral))
}

/// Changes the number of `D` molecules to `k_new`. Removed `D` become neutral;
/// added `D` are taken from the neutral species first, then from the alert
/// levels in increasing order.
pub fn set_d_count(
    config: &Configuration,
    p: &Protocol,
    k_new: u64,
) -> Result<Configuration, SimError> {
    let (d, neutral) = detection_roles(p)?;
    let mut next = config.clone();
    apply_d_change(next.counts_mut(), p, d, neutral, k_new, config.n)?;
    Ok(next)
}

/// Returns the ordered list of species consumed when adding `D`.
pub(crate) fn d_donor_order(p: &Protocol, d: SpeciesId, neutral: SpeciesId) -> Vec<SpeciesId> {
    let mut rest: Vec<_> = p
        .species()
        .iter()
        .filter(|s| s.id != d && s.id != neutral)
        .map(|s| (s.level.unwrap_or(u32::MAX), s.id))
        .collect();
    rest.sort();
    std::iter::once(neutral)
        .chain(rest.into_iter().map(|(_, id)| id))
        .collect()
}

fn apply_d_change(
    counts: &mut [u64],
    p: &Protocol,
    d: SpeciesId,
    neutral: SpeciesId,
    k_new: u64,
    n: u64,
) -> Result<(), SimError> {
    if k_new > n {
        return Err(SimError::DCountOutOfRange { k_new, n });
    }
    let k_old = counts[d.index()];
    if k_new <= k_old {
        counts[d.index()] = k_new;
        counts[neutral.index()] += k_old - k_new;
        return Ok(());
    }
    let mut need = k_new - k_old;
    for donor in d_donor_order(p, d, neutral) {
        let take = need.min(counts[donor.index()]);
        counts[donor.index()] -= take;
        need -= take;
        if need == 0 {
            break;
        }
    }
    counts[d.index()] = k_new;
    Ok(())
}

/// Tally of a majority-vote readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    pub output: Output,
    pub detect: u64,
    pub nondetect: u64,
}

/// Draws `m` molecules uniformly with replacement and reports the majority
/// output. Ties go to `nondetect`.
pub fn sample_output<R: Rng + ?Sized>(
    config: &Configuration,
    p: &Protocol,
    m: u64,
    rng: &mut R,
) -> Result<SampleResult, SimError> {
    if m == 0 {
        return Err(SimError::NoSamples);
    }
    if config.len() != p.len() {
        return Err(SimError::SpeciesMismatch {
            got: config.len(),
            expected: p.len(),
        });
    }
    let mask = p.detect_mask();
    let f = config.detect_fraction(&mask);
    let detect = (0..m).filter(|_| rng.random_bool(f)).count() as u64;
    let nondetect = m - detect;
    let output = if detect > nondetect {
        Output::Detect
    } else {
        Output::Nondetect
    };
    Ok(SampleResult {
        output,
        detect,
        nondetect,
    })
}
