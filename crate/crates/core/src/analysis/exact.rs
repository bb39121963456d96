//! Brute-force Markov chain over configurations for small populations.
//!
//! The transition matrix is exactly the scheduler's one-step distribution
//! (leak with probability `beta / n`, otherwise a uniform ordered pair of
//! distinct molecules). The long-run distribution is computed from the
//! initial configuration, which covers both irreducible chains (the
//! stationary distribution) and chains with absorbing states (the absorption
//! distribution).

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use super::AnalysisError;
use crate::model::{Protocol, SpeciesId};
use crate::sim::{Configuration, LeakModel, ResolvedLeak};

/// Cap on the number of configurations (multisets of size `n`).
pub const MAX_STATES: f64 = 1e6;
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct ExactChain {
    pub species: Vec<String>,
    pub n: u64,
    /// Reachable configurations; `states[initial]` is the starting point.
    pub states: Vec<Vec<u64>>,
    pub initial: usize,
    /// Sparse rows: `(target state, probability)`.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Long-run distribution over `states`.
    pub stationary: Vec<f64>,
    /// States that never leave themselves.
    pub absorbing: Vec<usize>,
    pub iterations: usize,
    /// `max |pi P - pi|` at termination.
    pub residual: f64,
    /// Long-run expected fraction of molecules in each species.
    pub marginals: Vec<f64>,
    /// Long-run probability that a sampled molecule outputs `detect`.
    pub detect_marginal: f64,
}

/// Number of multisets of size `n` over `q` species, `C(n + q - 1, q - 1)`.
pub fn configuration_space_size(n: u64, q: usize) -> f64 {
    if q == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let r = (q - 1) as u64;
    (1..=r).fold(1.0, |acc, i| acc * (n + i) as f64 / i as f64)
}

fn transitions(
    counts: &[u64],
    p: &Protocol,
    leak: &ResolvedLeak,
    n: u64,
) -> Vec<(Vec<u64>, f64)> {
    let mut out: Vec<(Vec<u64>, f64)> = Vec::new();
    let nf = n as f64;
    let lambda = leak.prob;
    if lambda > 0.0 && n > 0 {
        for (a, &ca) in counts.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            let w = lambda * ca as f64 / nf;
            let mut next = counts.to_vec();
            if let Some(t) = leak.target(SpeciesId::from(a)) {
                next[a] -= 1;
                next[t.index()] += 1;
            }
            out.push((next, w));
        }
    } else if lambda > 0.0 {
        out.push((counts.to_vec(), lambda));
    }
    let regular = 1.0 - lambda;
    if n < 2 {
        out.push((counts.to_vec(), regular));
        return out;
    }
    let pairs = nf * (nf - 1.0);
    for (a, &ca) in counts.iter().enumerate() {
        for (b, &cb) in counts.iter().enumerate() {
            let cb = if a == b { cb.saturating_sub(1) } else { cb };
            if ca == 0 || cb == 0 {
                continue;
            }
            let w = regular * (ca * cb) as f64 / pairs;
            let mut next = counts.to_vec();
            if let Some((c, d)) = p.apply(SpeciesId::from(a), SpeciesId::from(b)) {
                next[a] -= 1;
                next[b] -= 1;
                next[c.index()] += 1;
                next[d.index()] += 1;
            }
            out.push((next, w));
        }
    }
    out
}

impl ExactChain {
    /// Builds the chain reachable from `init` and solves for its long-run distribution.
    pub fn build(p: &Protocol, leak: &LeakModel, init: &Configuration) -> Result<Self, AnalysisError> {
        let n = init.n();
        let size = configuration_space_size(n, p.len());
        if size > MAX_STATES {
            return Err(AnalysisError::StateSpaceTooLarge(size));
        }
        if init.len() != p.len() {
            return Err(AnalysisError::LevelMismatch(format!(
                "configuration has {} species, protocol has {}",
                init.len(),
                p.len()
            )));
        }
        let resolved = leak.resolve(p, n)?;

        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut states = vec![init.counts().to_vec()];
        index.insert(states[0].clone(), 0);
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        // FIFO order expands states in index order, so rows line up with `states`.
        while let Some(si) = queue.pop_front() {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for (next, w) in transitions(&states[si], p, &resolved, n) {
                let ti = match index.get(&next) {
                    Some(&ti) => ti,
                    None => {
                        let ti = states.len();
                        index.insert(next.clone(), ti);
                        states.push(next);
                        queue.push_back(ti);
                        ti
                    }
                };
                *merged.entry(ti).or_default() += w;
            }
            debug_assert_eq!(rows.len(), si);
            rows.push(merged.into_iter().collect());
        }
        let absorbing = rows
            .iter()
            .enumerate()
            .filter(|(i, r)| r.iter().all(|&(t, w)| t == *i || w == 0.0))
            .map(|(i, _)| i)
            .collect();

        let (stationary, iterations, residual) = long_run(&rows, 0)?;
        let nf = n.max(1) as f64;
        let mut marginals = vec![0.0; p.len()];
        for (st, &pi) in states.iter().zip(&stationary) {
            for (m, &c) in marginals.iter_mut().zip(st) {
                *m += pi * c as f64 / nf;
            }
        }
        let detect_marginal = marginals
            .iter()
            .zip(p.detect_mask())
            .filter(|(_, d)| *d)
            .map(|(m, _)| m)
            .sum();
        Ok(Self {
            species: p.names().map(str::to_owned).collect(),
            n,
            states,
            initial: 0,
            rows,
            stationary,
            absorbing,
            iterations,
            residual,
            marginals,
            detect_marginal,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Long-run probability of each configuration, keyed by count vector.
    pub fn distribution(&self) -> HashMap<&[u64], f64> {
        self.states
            .iter()
            .map(Vec::as_slice)
            .zip(self.stationary.iter().copied())
            .collect()
    }

    /// Total-variation distance to an empirical histogram of configurations.
    pub fn tv_to_histogram(&self, hist: &HashMap<Vec<u64>, u64>) -> f64 {
        let total: u64 = hist.values().sum();
        let total = total.max(1) as f64;
        let mut tv = 0.0;
        for (st, &pi) in self.states.iter().zip(&self.stationary) {
            let emp = hist.get(st).copied().unwrap_or(0) as f64 / total;
            tv += (pi - emp).abs();
        }
        // Mass on configurations the chain never reaches.
        for (st, &c) in hist {
            if !self.states.iter().any(|s| s == st) {
                tv += c as f64 / total;
            }
        }
        tv / 2.0
    }

    /// Long-run distribution of the number of `detect` molecules.
    pub fn detect_count_distribution(&self, detect_mask: &[bool]) -> Vec<f64> {
        let mut dist = vec![0.0; self.n as usize + 1];
        for (st, &pi) in self.states.iter().zip(&self.stationary) {
            let d: u64 = st
                .iter()
                .zip(detect_mask)
                .filter(|(_, m)| **m)
                .map(|(c, _)| c)
                .sum();
            dist[d as usize] += pi;
        }
        dist
    }
}

/// Lazy power iteration `pi <- (pi + pi P) / 2` from a point mass; stops when
/// `max |pi P - pi| < POWER_TOL`.
fn long_run(rows: &[Vec<(usize, f64)>], start: usize) -> Result<(Vec<f64>, usize, f64), AnalysisError> {
    let m = rows.len();
    let mut pi = vec![0.0; m];
    pi[start] = 1.0;
    let mut next = vec![0.0; m];
    for it in 0..POWER_MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in rows.iter().enumerate() {
            let w = pi[i];
            if w == 0.0 {
                continue;
            }
            for &(j, pij) in row {
                next[j] += w * pij;
            }
        }
        let residual = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < POWER_TOL {
            return Ok((pi, it, residual));
        }
        for (a, b) in pi.iter_mut().zip(&next) {
            *a = 0.5 * (*a + b);
        }
    }
    Err(AnalysisError::NotConverged(POWER_MAX_ITERS))
}

/// Oracle for a detection protocol started with `k` molecules of `D` and the
/// rest neutral.
pub fn exact_stationary_small(
    p: &Protocol,
    n: u64,
    leak: &LeakModel,
    k: u64,
) -> Result<ExactChain, AnalysisError> {
    let s = p
        .species()
        .iter()
        .filter_map(|sp| sp.level)
        .max()
        .ok_or_else(|| AnalysisError::LevelMismatch("protocol has no levels".into()))?;
    let params = crate::detect::DetectParams::new(n, k, s.saturating_sub(1).max(1))
        .map_err(|e| AnalysisError::LevelMismatch(e.to_string()))?;
    let init = crate::detect::initial_configuration(p, params, &crate::detect::InitialState::AllNeutral)
        .map_err(|e| AnalysisError::LevelMismatch(e.to_string()))?;
    ExactChain::build(p, leak, &init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::build_robust_detect;
    use crate::sim::LeakStrategy;

    #[test]
    fn space_size() {
        assert_eq!(configuration_space_size(2, 3), 6.0);
        assert_eq!(configuration_space_size(5, 5), 126.0);
        assert_eq!(configuration_space_size(0, 4), 1.0);
    }

    #[test]
    fn absent_d_absorbs_in_all_neutral() {
        let p = build_robust_detect(1).unwrap();
        let chain = exact_stationary_small(&p, 2, &LeakModel::none(), 0).unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain.detect_marginal, 0.0);
        assert_eq!(chain.absorbing, [0]);
    }

    #[test]
    fn single_d_pair_gap_to_mean_field() {
        let p = build_robust_detect(1).unwrap();
        let chain = exact_stationary_small(&p, 2, &LeakModel::none(), 1).unwrap();
        // {D, N} -> {D, X1}, and D + X1 is null.
        assert_eq!(chain.len(), 2);
        assert!((chain.detect_marginal - 1.0).abs() < 1e-9);
        let mean_field = crate::analysis::stationary_no_leak(2, 1, 1).unwrap();
        assert!((mean_field.detect_probability() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn chain_invariants() {
        let p = build_robust_detect(2).unwrap();
        let leak = LeakModel::new(0.5, LeakStrategy::WorstFalsePositive);
        let chain = exact_stationary_small(&p, 4, &leak, 0).unwrap();
        assert!(chain.max_row_error() < 1e-12);
        assert!(chain.residual < 1e-10);
        assert!((chain.stationary.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(chain.detect_marginal > 0.0 && chain.detect_marginal < 1.0);
        assert!(chain.absorbing.is_empty());
    }

    #[test]
    fn too_large() {
        let p = build_robust_detect(14).unwrap();
        let err = exact_stationary_small(&p, 1000, &LeakModel::none(), 1).unwrap_err();
        assert!(matches!(err, AnalysisError::StateSpaceTooLarge(_)));
    }
}
