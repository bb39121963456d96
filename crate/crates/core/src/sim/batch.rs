use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::run_stream;
use super::{SimError, SimParams, Trajectory};

/// Runs `runs` independent trajectories in parallel. Run `i` uses ChaCha
/// stream `i` of `params.seed`, so run 0 equals [`super::run`].
pub fn run_many(params: &SimParams, runs: usize) -> Result<Vec<Trajectory>, SimError> {
    if runs == 0 {
        return Err(SimError::NoRuns);
    }
    (0..runs as u64)
        .into_par_iter()
        .map(|i| run_stream(params, i))
        .collect()
}

pub fn run_batch(params: &SimParams, runs: usize) -> Result<BatchStats, SimError> {
    Ok(BatchStats::from_trajectories(&run_many(params, runs)?))
}

/// Per-snapshot mean and variance across runs. Variances use the unbiased
/// estimator and are zero for a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub species: Vec<String>,
    pub n: u64,
    pub runs: usize,
    pub times: Vec<u64>,
    /// `[snapshot][species]`
    pub mean_fraction: Vec<Vec<f64>>,
    pub var_fraction: Vec<Vec<f64>>,
    pub mean_detect: Vec<f64>,
    pub var_detect: Vec<f64>,
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let k = xs.clone().count();
    let mean = xs.clone().sum::<f64>() / k as f64;
    let var = if k > 1 {
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64
    } else {
        0.0
    };
    (mean, var)
}

impl BatchStats {
    /// Aggregates trajectories recorded on the same snapshot grid.
    pub fn from_trajectories(trs: &[Trajectory]) -> Self {
        let first = &trs[0];
        let n = first.n;
        let nf = n.max(1) as f64;
        let q = first.species.len();
        let times: Vec<u64> = first.snapshots.iter().map(|s| s.t).collect();
        let detect: Vec<Vec<f64>> = trs.iter().map(Trajectory::detect_fractions).collect();
        let mut mean_fraction = Vec::with_capacity(times.len());
        let mut var_fraction = Vec::with_capacity(times.len());
        let mut mean_detect = Vec::with_capacity(times.len());
        let mut var_detect = Vec::with_capacity(times.len());
        for (si, _) in times.iter().enumerate() {
            let (m, v): (Vec<f64>, Vec<f64>) = (0..q)
                .map(|j| mean_var(trs.iter().map(|tr| tr.snapshots[si].counts[j] as f64 / nf)))
                .unzip();
            mean_fraction.push(m);
            var_fraction.push(v);
            let (m, v) = mean_var(detect.iter().map(|d| d[si]));
            mean_detect.push(m);
            var_detect.push(v);
        }
        Self {
            species: first.species.clone(),
            n,
            runs: trs.len(),
            times,
            mean_fraction,
            var_fraction,
            mean_detect,
            var_detect,
        }
    }

    pub fn parallel_times(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.times.iter().map(|&t| t as f64 / n).collect()
    }

    /// Mean detect fraction over snapshots with parallel time in `[from, to]`.
    pub fn mean_detect_between(&self, from: f64, to: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .parallel_times()
            .into_iter()
            .zip(&self.mean_detect)
            .filter(|(pt, _)| (from..=to).contains(pt))
            .map(|(_, &d)| d)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}
