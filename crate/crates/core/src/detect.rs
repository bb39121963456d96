//! Generators for the leak-robust detection protocol and its initial
//! configurations.
//!
//! Species are `D` (the molecule to detect, catalytic), alert levels
//! `X1..Xs` and the neutral `N`. Two alert-level molecules meeting both move
//! to `min(i, j) + 1`; anything pushed past level `s` becomes `N`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Output, Protocol, Reaction, SpeciesDecl, SpeciesId};
use crate::sim::Configuration;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DetectError {
    #[error("number of alert levels must be at least 1, got {0}")]
    NoLevels(u32),
    #[error("k = {k} exceeds population size n = {n}")]
    TooManyDetected { k: u64, n: u64 },
    #[error("custom counts have {got} entries, protocol has {expected} species")]
    CountLength { got: usize, expected: usize },
    #[error("custom counts sum to {sum}, expected n = {n}")]
    CountSum { sum: u64, n: u64 },
    #[error("custom counts put {got} molecules in D, expected k = {k}")]
    DetectedMismatch { got: u64, k: u64 },
    #[error("protocol has no species at level {0}")]
    MissingLevel(u32),
}

/// Population size, number of `D` molecules and number of alert levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectParams {
    pub n: u64,
    pub k: u64,
    pub s: u32,
}

impl DetectParams {
    pub fn new(n: u64, k: u64, s: u32) -> Result<Self, DetectError> {
        if s < 1 {
            return Err(DetectError::NoLevels(s));
        }
        if k > n {
            return Err(DetectError::TooManyDetected { k, n });
        }
        Ok(Self { n, k, s })
    }

    /// `s = ceil(log2 n)`, at least 1.
    pub fn with_default_levels(n: u64, k: u64) -> Result<Self, DetectError> {
        Self::new(n, k, default_levels(n))
    }
}

pub fn default_levels(n: u64) -> u32 {
    if n <= 2 {
        1
    } else {
        64 - (n - 1).leading_zeros()
    }
}

fn detection_species(s: u32, neutral_name: &str) -> Vec<SpeciesDecl> {
    let mut decls = Vec::with_capacity(s as usize + 2);
    decls.push(SpeciesDecl::new("D", Output::Detect).with_level(0));
    for i in 1..=s {
        decls.push(SpeciesDecl::new(format!("X{i}"), Output::Detect).with_level(i));
    }
    decls.push(SpeciesDecl::new(neutral_name, Output::Nondetect).with_level(s + 1));
    decls
}

/// Level `i` lives at species id `i` in generated protocols (D = 0, N = s + 1).
fn id(level: u32) -> SpeciesId {
    SpeciesId(level)
}

/// The detection protocol with `s` alert levels, written family by family.
pub fn build_robust_detect(s: u32) -> Result<Protocol, DetectError> {
    if s < 1 {
        return Err(DetectError::NoLevels(s));
    }
    let d = id(0);
    let n = id(s + 1);
    let x = id;
    let mut rules = Vec::new();
    // D + Xi -> D + X1 for i in 2..=s; D + X1 is null.
    for i in 2..=s {
        rules.push(Reaction::new(d, x(i), d, x(1)));
    }
    rules.push(Reaction::new(d, n, d, x(1)));
    rules.push(Reaction::new(x(s), x(s), n, n));
    rules.push(Reaction::new(x(s), n, n, n));
    // Xi + Xj -> X(min+1) + X(min+1) for i, j < s. Xi + Xs (i < s) is null.
    for i in 1..s {
        for j in i..s {
            let m = x(i + 1);
            rules.push(Reaction::new(x(i), x(j), m, m));
        }
    }
    for i in 1..s {
        rules.push(Reaction::new(x(i), n, x(i + 1), x(i + 1)));
    }
    Ok(Protocol::new(detection_species(s, "N"), &rules).expect("generated rules are consistent"))
}

/// Unbounded-level variant truncated at `cap`: every level above `cap` is one
/// absorbing label `Xinf`. Rules are generated uniformly from
/// `D + Xi -> D + X1` and `Xi + Xj -> X(min+1) + X(min+1)`.
///
/// Matches [`build_robust_detect`]`(cap)` under `N <-> Xinf` on every pair
/// except `Xi + Xcap` with `i < cap`, which the finite protocol leaves null.
pub fn build_truncated_ideal(cap: u32) -> Result<Protocol, DetectError> {
    if cap < 1 {
        return Err(DetectError::NoLevels(cap));
    }
    let top = cap + 1;
    let clip = |l: u32| id(l.min(top));
    let mut rules = Vec::new();
    for i in 1..=top {
        let r = Reaction::new(id(0), id(i), id(0), id(1));
        if r.products != r.reactants {
            rules.push(r);
        }
    }
    for i in 1..=top {
        for j in i..=top {
            let m = clip(i.min(j) + 1);
            let r = Reaction::new(id(i), id(j), m, m);
            if r.products != r.reactants {
                rules.push(r);
            }
        }
    }
    Ok(Protocol::new(detection_species(cap, "Xinf"), &rules)
        .expect("generated rules are consistent"))
}

/// Starting point for a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialState {
    /// `k` molecules in `D`, the rest neutral.
    AllNeutral,
    /// Explicit per-species counts (indexed by species id).
    Custom(Vec<u64>),
}

/// Builds the initial configuration for a detection protocol. The protocol
/// must carry levels (0 for `D`, `s + 1` for the neutral species).
pub fn initial_configuration(
    p: &Protocol,
    params: DetectParams,
    init: &InitialState,
) -> Result<Configuration, DetectError> {
    if params.k > params.n {
        return Err(DetectError::TooManyDetected {
            k: params.k,
            n: params.n,
        });
    }
    let d = p.find_level(0).ok_or(DetectError::MissingLevel(0))?;
    match init {
        InitialState::AllNeutral => {
            let neutral = p
                .species()
                .iter()
                .filter(|s| s.output == Output::Nondetect)
                .max_by_key(|s| s.level)
                .map(|s| s.id)
                .ok_or(DetectError::MissingLevel(params.s + 1))?;
            let mut counts = vec![0; p.len()];
            counts[d.index()] = params.k;
            counts[neutral.index()] += params.n - params.k;
            Ok(Configuration::from_counts(counts))
        }
        InitialState::Custom(counts) => {
            if counts.len() != p.len() {
                return Err(DetectError::CountLength {
                    got: counts.len(),
                    expected: p.len(),
                });
            }
            let sum: u64 = counts.iter().sum();
            if sum != params.n {
                return Err(DetectError::CountSum { sum, n: params.n });
            }
            if counts[d.index()] != params.k {
                return Err(DetectError::DetectedMismatch {
                    got: counts[d.index()],
                    k: params.k,
                });
            }
            Ok(Configuration::from_counts(counts.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(p: &Protocol, name: &str) -> SpeciesId {
        p.find(name).unwrap()
    }

    #[test]
    fn default_levels_is_ceil_log2() {
        assert_eq!(default_levels(10_000), 14);
        assert_eq!(default_levels(1024), 10);
        assert_eq!(default_levels(1025), 11);
        assert_eq!(default_levels(2), 1);
        assert_eq!(default_levels(1), 1);
    }

    #[test]
    fn s1_rules() {
        let p = build_robust_detect(1).unwrap();
        assert_eq!(p.names().collect::<Vec<_>>(), ["D", "X1", "N"]);
        let (d, x1, n) = (sp(&p, "D"), sp(&p, "X1"), sp(&p, "N"));
        assert_eq!(p.apply(d, x1), None);
        assert_eq!(p.apply(d, n), Some((d, x1)));
        assert_eq!(p.apply(x1, x1), Some((n, n)));
        assert_eq!(p.apply(x1, n), Some((n, n)));
        assert_eq!(p.reactions().len(), 3);
    }

    #[test]
    fn level_rules() {
        let p = build_robust_detect(3).unwrap();
        assert_eq!(
            p.apply(sp(&p, "X1"), sp(&p, "N")),
            Some((sp(&p, "X2"), sp(&p, "X2")))
        );
        assert_eq!(
            p.apply(sp(&p, "D"), sp(&p, "N")),
            Some((sp(&p, "D"), sp(&p, "X1")))
        );
        assert_eq!(p.apply(sp(&p, "N"), sp(&p, "N")), None);
        assert_eq!(p.apply(sp(&p, "D"), sp(&p, "D")), None);
        let p = build_robust_detect(6).unwrap();
        let x3 = sp(&p, "X3");
        assert_eq!(p.apply(sp(&p, "X2"), sp(&p, "X5")), Some((x3, x3)));
    }

    #[test]
    fn rule_count_and_top_level_pairs() {
        for s in 1..=17u32 {
            let p = build_robust_detect(s).unwrap();
            let pairs = (s - 1) * s / 2;
            assert_eq!(p.reactions().len() as u32, (s - 1) + 3 + pairs + (s - 1), "s={s}");
        }
        let p = build_robust_detect(4).unwrap();
        for i in 1..4 {
            assert_eq!(p.apply(sp(&p, &format!("X{i}")), sp(&p, "X4")), None);
        }
    }

    #[test]
    fn detect_is_only_catalyst() {
        for s in [1, 2, 14] {
            let p = build_robust_detect(s).unwrap();
            let part = p.classify_catalytic();
            assert_eq!(part.catalytic_names(&p), ["D"]);
            assert_eq!(part.non_catalytic.len(), s as usize + 1);
        }
    }

    #[test]
    fn levels_assigned() {
        let p = build_robust_detect(4).unwrap();
        let levels: Vec<_> = p.species().iter().map(|s| s.level.unwrap()).collect();
        assert_eq!(levels, [0, 1, 2, 3, 4, 5]);
        assert_eq!(p.species_by_id(sp(&p, "N")).output, Output::Nondetect);
    }

    #[test]
    fn zero_levels_rejected() {
        assert_eq!(build_robust_detect(0).unwrap_err(), DetectError::NoLevels(0));
        assert_eq!(build_truncated_ideal(0).unwrap_err(), DetectError::NoLevels(0));
        assert!(DetectParams::new(5, 6, 3).is_err());
    }

    #[test]
    fn truncated_ideal_examples() {
        let p = build_truncated_ideal(2).unwrap();
        let top = sp(&p, "Xinf");
        assert_eq!(p.apply(sp(&p, "X2"), sp(&p, "X2")), Some((top, top)));
        let p = build_truncated_ideal(4).unwrap();
        assert_eq!(
            p.apply(sp(&p, "D"), sp(&p, "X3")),
            Some((sp(&p, "D"), sp(&p, "X1")))
        );
    }

    #[test]
    fn initial_configurations() {
        let p = build_robust_detect(14).unwrap();
        let params = DetectParams::new(10_000, 1, 14).unwrap();
        let c = initial_configuration(&p, params, &InitialState::AllNeutral).unwrap();
        assert_eq!(c.count(sp(&p, "D")), 1);
        assert_eq!(c.count(sp(&p, "N")), 9999);
        assert_eq!(c.n(), 10_000);

        let p = build_robust_detect(2).unwrap();
        let c = initial_configuration(
            &p,
            DetectParams::new(4, 0, 2).unwrap(),
            &InitialState::AllNeutral,
        )
        .unwrap();
        assert_eq!(c.counts(), [0, 0, 0, 4]);

        let p = build_robust_detect(10).unwrap();
        let mut counts = vec![0; p.len()];
        counts[1] = 1000;
        let params = DetectParams::new(1000, 0, 10).unwrap();
        let c = initial_configuration(&p, params, &InitialState::Custom(counts.clone())).unwrap();
        assert_eq!(c.count(sp(&p, "X1")), 1000);

        counts[1] = 999;
        assert_eq!(
            initial_configuration(&p, params, &InitialState::Custom(counts.clone())).unwrap_err(),
            DetectError::CountSum { sum: 999, n: 1000 }
        );
        counts[0] = 1;
        let err = initial_configuration(&p, params, &InitialState::Custom(counts)).unwrap_err();
        assert_eq!(err, DetectError::DetectedMismatch { got: 1, k: 0 });
    }
}
