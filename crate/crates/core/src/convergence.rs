//! Convergence experiments: potential decay without `D`, distance of simulated
//! level distributions to a stationary profile, convergence-time estimates
//! and self-stabilization after the `D` count changes.
//!
//! Each alert-level molecule `Xi` carries potential `3^-i`; the neutral
//! species carries 0. Every non-null interaction between two non-`D`
//! molecules removes at least a third of the pair's potential, so without
//! `D` and leaks the expected total shrinks by `1 - 2/(3n)` per interaction.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::StationaryProfile;
use crate::model::{Protocol, SpeciesId};
use crate::sim::{
    self, rng_for, run_many, BatchStats, Configuration, Intervention, LeakModel, SimError,
    SimParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergenceError {
    #[error("decay experiment requires a leak-free run")]
    LeaksEnabled,
    #[error("decay experiment requires no D molecules, found {0}")]
    DetectedPresent(u64),
    #[error("vectors have different lengths ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("species `{0}` has no alert level")]
    MissingLevel(String),
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("never converged within the horizon; final gap {final_gap:.4}")]
    NotConverged { final_gap: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Per-species potential weights: `3^-level` for detecting alert levels,
/// zero for `D`, the neutral species and unlevelled species.
pub fn potential_weights(p: &Protocol) -> Vec<f64> {
    p.species()
        .iter()
        .map(|s| match s.level {
            Some(l) if l >= 1 && s.output == crate::model::Output::Detect => 3f64.powi(-(l as i32)),
            _ => 0.0,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub value: f64,
    /// Set when `D` molecules are present; they contribute nothing.
    pub detected_present: bool,
}

pub fn potential(config: &Configuration, p: &Protocol) -> Potential {
    let value = potential_of(config.counts(), &potential_weights(p));
    let detected_present = p
        .find_level(0)
        .is_some_and(|d| config.count(d) > 0);
    Potential {
        value,
        detected_present,
    }
}

fn potential_of(counts: &[u64], weights: &[f64]) -> f64 {
    counts.iter().zip(weights).map(|(&c, w)| c as f64 * w).sum()
}

/// Largest ratio `potential(products) / potential(reactants)` over all
/// ordered pairs not involving level-0 species and with positive potential.
/// Null interactions count as ratio 1.
pub fn max_pair_contraction(p: &Protocol) -> f64 {
    let w = potential_weights(p);
    let ids: Vec<SpeciesId> = p
        .species()
        .iter()
        .filter(|s| s.level != Some(0))
        .map(|s| s.id)
        .collect();
    let mut worst = 0.0f64;
    for &a in &ids {
        for &b in &ids {
            let before = w[a.index()] + w[b.index()];
            if before == 0.0 {
                continue;
            }
            let after = p
                .apply(a, b)
                .map_or(before, |(c, d)| w[c.index()] + w[d.index()]);
            worst = worst.max(after / before);
        }
    }
    worst
}

/// `ceil(1.5 n ln(n * 3^s * n))`: interactions after which all levels up to
/// `s` are clear with probability at least `1 - 1/n`.
pub fn clearing_bound(n: u64, s: u32) -> u64 {
    let nf = n as f64;
    (1.5 * nf * (2.0 * nf.ln() + s as f64 * 3f64.ln())).ceil() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSeries {
    /// `(t, mean potential across runs)`
    pub samples: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub n: u64,
    pub runs: usize,
    pub t_star: u64,
    /// First interaction count with no alert-level molecule, per run.
    pub clearing_times: Vec<Option<u64>>,
    pub cleared_by_t_star: usize,
    pub fraction_cleared: f64,
    /// Sample mean of `phi(t+1) / phi(t)` over steps with `phi(t) > 0`.
    pub mean_step_ratio: f64,
    pub step_ratio_std_error: f64,
    /// `1 - 2/(3n)`
    pub step_ratio_bound: f64,
    pub series: PotentialSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub protocol: Protocol,
    pub init: Configuration,
    pub leak: LeakModel,
    pub runs: usize,
    pub seed: u64,
    /// Levels cleared by the bound; defaults to the protocol's alert levels.
    pub levels: u32,
    /// Runs stop at `horizon_factor * t_star` if not cleared.
    pub horizon_factor: u64,
    pub record_every: u64,
}

impl DecayConfig {
    pub fn new(protocol: Protocol, init: Configuration, runs: usize, seed: u64) -> Self {
        let levels = protocol
            .species()
            .iter()
            .filter(|s| s.output == crate::model::Output::Detect)
            .filter_map(|s| s.level)
            .max()
            .unwrap_or(0);
        let record_every = init.n().max(1);
        Self {
            protocol,
            init,
            leak: LeakModel::none(),
            runs,
            seed,
            levels,
            horizon_factor: 4,
            record_every,
        }
    }
}

struct RunDecay {
    clearing: Option<u64>,
    phi: Vec<f64>,
    ratio_sum: f64,
    ratio_sq: f64,
    ratio_count: u64,
}

pub fn decay_experiment(cfg: &DecayConfig) -> Result<DecayReport, ConvergenceError> {
    use rayon::prelude::*;

    let p = &cfg.protocol;
    let n = cfg.init.n();
    if cfg.leak.beta != 0.0 {
        return Err(ConvergenceError::LeaksEnabled);
    }
    if let Some(d) = p.find_level(0) {
        if cfg.init.count(d) > 0 {
            return Err(ConvergenceError::DetectedPresent(cfg.init.count(d)));
        }
    }
    if cfg.runs == 0 {
        return Err(SimError::NoRuns.into());
    }
    if cfg.record_every == 0 {
        return Err(SimError::ZeroRecordInterval.into());
    }
    let leak = cfg.leak.resolve(p, n).map_err(SimError::from)?;
    let weights = potential_weights(p);
    let t_star = clearing_bound(n, cfg.levels);
    let horizon = t_star.saturating_mul(cfg.horizon_factor.max(1));
    let slots = (horizon / cfg.record_every) as usize + 1;

    let per_run: Vec<RunDecay> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = rng_for(cfg.seed, run);
            let mut c = cfg.init.clone();
            let mut phi_t = potential_of(c.counts(), &weights);
            let mut out = RunDecay {
                clearing: (phi_t == 0.0).then_some(0),
                phi: vec![0.0; slots],
                ratio_sum: 0.0,
                ratio_sq: 0.0,
                ratio_count: 0,
            };
            out.phi[0] = phi_t;
            let mut t = 0;
            while t < horizon && out.clearing.is_none() {
                sim::step(&mut c, p, &leak, &mut rng);
                t += 1;
                let phi_next = potential_of(c.counts(), &weights);
                let r = phi_next / phi_t;
                out.ratio_sum += r;
                out.ratio_sq += r * r;
                out.ratio_count += 1;
                phi_t = phi_next;
                if t % cfg.record_every == 0 {
                    out.phi[(t / cfg.record_every) as usize] = phi_t;
                }
                if phi_t == 0.0 {
                    out.clearing = Some(t);
                }
            }
            out
        })
        .collect();

    let clearing_times: Vec<Option<u64>> = per_run.iter().map(|r| r.clearing).collect();
    let cleared_by_t_star = clearing_times
        .iter()
        .filter(|c| c.is_some_and(|t| t <= t_star))
        .count();
    let count: u64 = per_run.iter().map(|r| r.ratio_count).sum();
    let sum: f64 = per_run.iter().map(|r| r.ratio_sum).sum();
    let sq: f64 = per_run.iter().map(|r| r.ratio_sq).sum();
    let (mean_step_ratio, step_ratio_std_error) = if count > 1 {
        let mean = sum / count as f64;
        let var = (sq - count as f64 * mean * mean) / (count - 1) as f64;
        (mean, (var.max(0.0) / count as f64).sqrt())
    } else {
        (0.0, 0.0)
    };
    let samples = (0..slots)
        .map(|i| {
            let mean = per_run.iter().map(|r| r.phi[i]).sum::<f64>() / cfg.runs as f64;
            (i as u64 * cfg.record_every, mean)
        })
        .collect();

    Ok(DecayReport {
        n,
        runs: cfg.runs,
        t_star,
        clearing_times,
        cleared_by_t_star,
        fraction_cleared: cleared_by_t_star as f64 / cfg.runs as f64,
        mean_step_ratio,
        step_ratio_std_error,
        step_ratio_bound: 1.0 - 2.0 / (3.0 * n as f64),
        series: PotentialSeries { samples },
    })
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(empirical: &[f64], analytic: &[f64]) -> Result<f64, ConvergenceError> {
    if empirical.len() != analytic.len() {
        return Err(ConvergenceError::DimensionMismatch(
            empirical.len(),
            analytic.len(),
        ));
    }
    Ok(0.5
        * empirical
            .iter()
            .zip(analytic)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistance {
    pub tv: f64,
    /// `max_c |p_leq_c(t) - p*_leq_c|` over `c = 0..=s`.
    pub cumulative_gap: f64,
}

/// Compares per-species fractions of a detection protocol with a profile.
pub fn distance_to_profile(
    empirical: &[f64],
    p: &Protocol,
    profile: &StationaryProfile,
) -> Result<ProfileDistance, ConvergenceError> {
    let analytic = profile
        .species_fractions(p)
        .map_err(|_| ConvergenceError::MissingLevel("profile".into()))?;
    let tv = tv_distance(empirical, &analytic)?;
    let s = profile.levels() as usize;
    let mut by_level = vec![0.0; s + 1];
    for sp in p.species() {
        let l = sp
            .level
            .ok_or_else(|| ConvergenceError::MissingLevel(sp.name.clone()))? as usize;
        if l <= s {
            by_level[l] += empirical[sp.id.index()];
        }
    }
    let mut acc = 0.0;
    let mut gap = 0.0f64;
    for (c, f) in by_level.iter().enumerate() {
        acc += f;
        gap = gap.max((acc - profile.p_leq[c]).abs());
    }
    Ok(ProfileDistance {
        tv,
        cumulative_gap: gap,
    })
}

/// Draws a configuration from the profile: `k` molecules in `D`, the others
/// independently by level probability conditioned on not being `D`.
pub fn sample_stationary_configuration<R: Rng + ?Sized>(
    p: &Protocol,
    profile: &StationaryProfile,
    n: u64,
    k: u64,
    rng: &mut R,
) -> Result<Configuration, ConvergenceError> {
    let fractions = profile
        .species_fractions(p)
        .map_err(|_| ConvergenceError::MissingLevel("profile".into()))?;
    let d = p
        .find_level(0)
        .ok_or_else(|| ConvergenceError::MissingLevel("D".into()))?;
    let others: Vec<(usize, f64)> = fractions
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != d.index())
        .map(|(i, &f)| (i, f.max(0.0)))
        .collect();
    let total: f64 = others.iter().map(|(_, f)| f).sum();
    let mut counts = vec![0u64; p.len()];
    counts[d.index()] = k;
    for _ in 0..n.saturating_sub(k) {
        let mut u = rng.random::<f64>() * total;
        let mut chosen = others.last().map(|(i, _)| *i).unwrap_or(d.index());
        for &(i, f) in &others {
            if u < f {
                chosen = i;
                break;
            }
            u -= f;
        }
        counts[chosen] += 1;
    }
    Ok(Configuration::from_counts(counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub n: u64,
    pub runs: usize,
    pub epsilon: f64,
    /// Smallest recorded parallel time after which the gap stays below epsilon.
    pub parallel_time: f64,
    /// `parallel_time / log2(n)`: the constant in `t = C n log2 n` interactions.
    pub fitted_c: f64,
    /// `(parallel time, cumulative gap)` of the run-averaged trajectory.
    pub gap_series: Vec<(f64, f64)>,
}

/// Estimates when the run-averaged level distribution settles within
/// `epsilon` (cumulative gap) of `profile` for good.
pub fn estimate_convergence_time(
    params: &SimParams,
    profile: &StationaryProfile,
    epsilon: f64,
    runs: usize,
) -> Result<ConvergenceEstimate, ConvergenceError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ConvergenceError::InvalidEpsilon(epsilon));
    }
    let trs = run_many(params, runs)?;
    let stats = BatchStats::from_trajectories(&trs);
    estimate_from_stats(&stats, &params.protocol, profile, epsilon)
}

/// `(parallel time, cumulative gap)` of the run-averaged level distribution.
pub fn gap_series(
    stats: &BatchStats,
    p: &Protocol,
    profile: &StationaryProfile,
) -> Result<Vec<(f64, f64)>, ConvergenceError> {
    stats
        .mean_fraction
        .iter()
        .zip(stats.parallel_times())
        .map(|(f, pt)| Ok((pt, distance_to_profile(f, p, profile)?.cumulative_gap)))
        .collect()
}

pub fn estimate_from_stats(
    stats: &BatchStats,
    p: &Protocol,
    profile: &StationaryProfile,
    epsilon: f64,
) -> Result<ConvergenceEstimate, ConvergenceError> {
    let series = gap_series(stats, p, profile)?;
    estimate_from_gaps(stats.n, stats.runs, series, epsilon)
}

/// Applies the "stays below epsilon until the horizon" rule to a gap series.
pub fn estimate_from_gaps(
    n: u64,
    runs: usize,
    gap_series: Vec<(f64, f64)>,
    epsilon: f64,
) -> Result<ConvergenceEstimate, ConvergenceError> {
    let last_bad = gap_series.iter().rposition(|&(_, g)| g >= epsilon);
    let idx = match last_bad {
        None => 0,
        Some(i) if i + 1 < gap_series.len() => i + 1,
        Some(_) => {
            return Err(ConvergenceError::NotConverged {
                final_gap: gap_series.last().map_or(f64::NAN, |g| g.1),
            })
        }
    };
    let parallel_time = gap_series[idx].0;
    let log_n = (n.max(2) as f64).log2();
    Ok(ConvergenceEstimate {
        n,
        runs,
        epsilon,
        parallel_time,
        fitted_c: parallel_time / log_n,
        gap_series,
    })
}

/// Least-squares fit of `y = intercept + slope * ln(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_log_trend(xs: &[u64], ys: &[f64]) -> Option<LogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|&x| (x as f64).ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Per-run outcome of removing and re-adding `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationRun {
    /// Parallel time from removal until the detect fraction first drops below the low threshold.
    pub drop_time: Option<f64>,
    /// Parallel time from re-adding until it first exceeds the high threshold.
    pub recover_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub remove_at: f64,
    pub readd_at: Option<f64>,
    pub window: f64,
    pub low: f64,
    pub high: f64,
    pub runs: Vec<StabilizationRun>,
    /// Runs meeting every deadline.
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationConfig {
    pub params: SimParams,
    pub k: u64,
    /// Parallel times.
    pub remove_at: f64,
    pub readd_at: Option<f64>,
    pub window: f64,
    pub low: f64,
    pub high: f64,
    pub runs: usize,
}

/// Removes all `D` at `remove_at`, optionally restores `k` of them at
/// `readd_at`, and measures how fast the detect fraction follows.
pub fn stabilization_experiment(
    cfg: &StabilizationConfig,
) -> Result<StabilizationReport, ConvergenceError> {
    let n = cfg.params.n();
    let to_t = |pt: f64| (pt * n as f64).round() as u64;
    let mut params = cfg.params.clone();
    params.interventions = std::iter::once(Intervention {
        at: to_t(cfg.remove_at),
        k: 0,
    })
    .chain(cfg.readd_at.map(|pt| Intervention {
        at: to_t(pt),
        k: cfg.k,
    }))
    .collect();
    let end = cfg.readd_at.unwrap_or(cfg.remove_at) + cfg.window;
    params.t_max = params.t_max.max(to_t(end));

    let trs = run_many(&params, cfg.runs)?;
    let first_after = |tr: &sim::Trajectory, from: f64, pred: &dyn Fn(f64) -> bool| {
        tr.snapshots
            .iter()
            .zip(tr.detect_fractions())
            .map(|(s, d)| (tr.parallel_time(s.t), d))
            .find(|&(pt, d)| pt >= from && pt <= from + cfg.window && pred(d))
            .map(|(pt, _)| pt - from)
    };
    let runs: Vec<StabilizationRun> = trs
        .iter()
        .map(|tr| StabilizationRun {
            drop_time: first_after(tr, cfg.remove_at, &|d| d < cfg.low),
            recover_time: cfg
                .readd_at
                .and_then(|at| first_after(tr, at, &|d| d > cfg.high)),
        })
        .collect();
    let successes = runs
        .iter()
        .filter(|r| r.drop_time.is_some() && (cfg.readd_at.is_none() || r.recover_time.is_some()))
        .count();
    Ok(StabilizationReport {
        remove_at: cfg.remove_at,
        readd_at: cfg.readd_at,
        window: cfg.window,
        low: cfg.low,
        high: cfg.high,
        runs,
        successes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{build_robust_detect, build_truncated_ideal};

    #[test]
    fn potential_examples() {
        let p = build_robust_detect(4).unwrap();
        let all_n = Configuration::from_counts(vec![0, 0, 0, 0, 0, 10]);
        assert_eq!(potential(&all_n, &p).value, 0.0);
        let one = Configuration::from_counts(vec![0, 1, 0, 0, 0, 9]);
        assert!((potential(&one, &p).value - 1.0 / 3.0).abs() < 1e-15);
        let before = Configuration::from_counts(vec![0, 2, 0, 0, 0, 0]);
        let after = Configuration::from_counts(vec![0, 0, 2, 0, 0, 0]);
        let (b, a) = (potential(&before, &p).value, potential(&after, &p).value);
        assert!((b - 2.0 / 3.0).abs() < 1e-15 && (a - 2.0 / 9.0).abs() < 1e-15);
        let with_d = Configuration::from_counts(vec![1, 1, 0, 0, 0, 0]);
        let r = potential(&with_d, &p);
        assert!(r.detected_present);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pair_contraction_on_tables() {
        for s in [1, 2, 5, 10, 14] {
            assert!(max_pair_contraction(&build_truncated_ideal(s).unwrap()) <= 2.0 / 3.0 + 1e-12);
        }
        // Xi + Xs is null in the finite protocol, so some pairs keep their potential.
        assert_eq!(max_pair_contraction(&build_robust_detect(5).unwrap()), 1.0);
        assert!(max_pair_contraction(&build_robust_detect(1).unwrap()) <= 2.0 / 3.0);
    }

    #[test]
    fn clearing_bound_values() {
        // 1.5 * 1000 * ln(1000 * 3^10 * 1000)
        assert_eq!(clearing_bound(1000, 10), 37_203);
        assert!(clearing_bound(1000, 11) > clearing_bound(1000, 10));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn decay_rejects_leaks_and_detected() {
        let p = build_robust_detect(3).unwrap();
        let init = Configuration::from_counts(vec![0, 10, 0, 0, 0]);
        let mut cfg = DecayConfig::new(p.clone(), init, 2, 1);
        cfg.leak = LeakModel::new(0.1, crate::sim::LeakStrategy::WorstFalsePositive);
        assert_eq!(decay_experiment(&cfg).unwrap_err(), ConvergenceError::LeaksEnabled);
        let cfg = DecayConfig::new(p, Configuration::from_counts(vec![1, 9, 0, 0, 0]), 2, 1);
        assert_eq!(
            decay_experiment(&cfg).unwrap_err(),
            ConvergenceError::DetectedPresent(1)
        );
    }

    #[test]
    fn decay_all_neutral_is_immediately_clear() {
        let p = build_robust_detect(3).unwrap();
        let cfg = DecayConfig::new(p, Configuration::from_counts(vec![0, 0, 0, 0, 50]), 3, 1);
        let r = decay_experiment(&cfg).unwrap();
        assert_eq!(r.clearing_times, [Some(0); 3]);
        assert_eq!(r.cleared_by_t_star, 3);
    }

    #[test]
    fn log_fit_recovers_line() {
        let xs = [10u64, 100, 1000];
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 + 3.0 * (x as f64).ln()).collect();
        let fit = fit_log_trend(&xs, &ys).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_log_trend(&[5], &[1.0]).is_none());
    }

    #[test]
    fn stays_below_rule() {
        let series = vec![(0.0, 0.5), (1.0, 0.01), (2.0, 0.03), (3.0, 0.01), (4.0, 0.0)];
        let e = estimate_from_gaps(1024, 1, series, 0.02).unwrap();
        assert_eq!(e.parallel_time, 3.0);
        assert!((e.fitted_c - 0.3).abs() < 1e-12);
        let e = estimate_from_gaps(1024, 1, vec![(0.0, 0.01), (1.0, 0.0)], 0.02).unwrap();
        assert_eq!(e.parallel_time, 0.0);
        let err = estimate_from_gaps(1024, 1, vec![(0.0, 0.01), (1.0, 0.05)], 0.02).unwrap_err();
        assert_eq!(err, ConvergenceError::NotConverged { final_gap: 0.05 });
    }

    #[test]
    fn invalid_epsilon() {
        let p = build_robust_detect(3).unwrap();
        let params = SimParams::new(
            p,
            Configuration::from_counts(vec![1, 0, 0, 0, 9]),
            LeakModel::none(),
            0,
        );
        let prof = crate::analysis::stationary_no_leak(10, 1, 3).unwrap();
        assert!(matches!(
            estimate_convergence_time(&params, &prof, 1.5, 1),
            Err(ConvergenceError::InvalidEpsilon(_))
        ));
    }
}
