use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Protocol, SpeciesId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeakError {
    #[error("leak parameter beta must be finite and non-negative, got {0}")]
    NegativeBeta(f64),
    #[error("leak probability beta/n = {0} exceeds 1")]
    ProbabilityAboveOne(f64),
    #[error("leak strategy `{0}` needs a protocol with alert levels")]
    NoLevels(&'static str),
    #[error("unknown species `{0}` in leak mapping")]
    UnknownSpecies(String),
    #[error("leak mapping touches catalytic species `{0}`")]
    CatalyticTarget(String),
}

/// How a leaked molecule is transformed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakStrategy {
    /// Leak steps happen but leave the molecule unchanged.
    None,
    /// Every leak produces the first alert level.
    WorstFalsePositive,
    /// Every leak produces the neutral species.
    WorstFalseNegative,
    /// Species-to-species mapping by name; unmapped species are left unchanged.
    Custom(Vec<(String, String)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakModel {
    pub beta: f64,
    pub strategy: LeakStrategy,
}

impl LeakModel {
    pub fn none() -> Self {
        Self {
            beta: 0.0,
            strategy: LeakStrategy::None,
        }
    }

    pub fn new(beta: f64, strategy: LeakStrategy) -> Self {
        Self { beta, strategy }
    }

    /// Per-step leak probability for a population of `n`.
    pub fn probability(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.beta / n as f64
        }
    }

    /// Binds the strategy to a protocol's species ids.
    pub fn resolve(&self, p: &Protocol, n: u64) -> Result<ResolvedLeak, LeakError> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(LeakError::NegativeBeta(self.beta));
        }
        let prob = self.probability(n);
        if prob > 1.0 {
            return Err(LeakError::ProbabilityAboveOne(prob));
        }
        let catalytic = p.classify_catalytic().mask(p.len());
        let mut targets: Vec<Option<SpeciesId>> = vec![None; p.len()];
        let mut fill_all = |to: SpeciesId| {
            for (i, t) in targets.iter_mut().enumerate() {
                if !catalytic[i] && i != to.index() {
                    *t = Some(to);
                }
            }
        };
        match &self.strategy {
            LeakStrategy::None => {}
            LeakStrategy::WorstFalsePositive => {
                let x1 = p.find_level(1).ok_or(LeakError::NoLevels("fp"))?;
                fill_all(x1);
            }
            LeakStrategy::WorstFalseNegative => {
                let neutral = p
                    .species()
                    .iter()
                    .filter(|s| s.level.is_some() && !catalytic[s.id.index()])
                    .max_by_key(|s| s.level)
                    .map(|s| s.id)
                    .ok_or(LeakError::NoLevels("fn"))?;
                fill_all(neutral);
            }
            LeakStrategy::Custom(pairs) => {
                let index: HashMap<&str, SpeciesId> =
                    p.species().iter().map(|s| (s.name.as_str(), s.id)).collect();
                for (from, to) in pairs {
                    let lookup = |name: &String| {
                        index
                            .get(name.as_str())
                            .copied()
                            .ok_or_else(|| LeakError::UnknownSpecies(name.clone()))
                    };
                    let (a, b) = (lookup(from)?, lookup(to)?);
                    for x in [a, b] {
                        if catalytic[x.index()] {
                            return Err(LeakError::CatalyticTarget(
                                p.species_by_id(x).name.clone(),
                            ));
                        }
                    }
                    targets[a.index()] = (a != b).then_some(b);
                }
            }
        }
        Ok(ResolvedLeak { prob, targets })
    }
}

/// Leak model bound to a protocol: per-step probability and per-species target
/// (`None` means the leak leaves that molecule unchanged).
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLeak {
    pub prob: f64,
    pub targets: Vec<Option<SpeciesId>>,
}

impl ResolvedLeak {
    pub fn disabled(species: usize) -> Self {
        Self {
            prob: 0.0,
            targets: vec![None; species],
        }
    }

    #[inline]
    pub fn target(&self, from: SpeciesId) -> Option<SpeciesId> {
        self.targets[from.index()]
    }
}
