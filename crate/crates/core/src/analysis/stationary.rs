//! Mean-field stationary level probabilities.
//!
//! `p_leq[i]` is the stationary probability that a uniformly chosen molecule
//! is in `D` or one of `X1..Xi`; `p[i]` are the first differences. These are
//! self-consistency equations that treat a molecule's interaction partner as
//! an independent stationary draw, so they deviate from the exact finite-`n`
//! chain by roughly `O(1/n)` (see [`super::exact`]).

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    NoLeak,
    FalsePositive,
    FalsePositiveApprox,
    FalseNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub n: u64,
    pub k: u64,
    pub beta: f64,
    pub s: u32,
    pub mode: ProfileMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    /// Cumulative probabilities for levels `0..=s`.
    pub p_leq: Vec<f64>,
    /// Per-level probabilities for levels `0..=s`.
    pub p: Vec<f64>,
    pub params: ProfileParams,
}

impl StationaryProfile {
    fn from_cumulative(p_leq: Vec<f64>, params: ProfileParams) -> Self {
        let p = p_leq
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == 0 { c } else { c - p_leq[i - 1] })
            .collect();
        Self { p_leq, p, params }
    }

    pub fn levels(&self) -> u32 {
        self.params.s
    }

    /// Probability that a sampled molecule outputs `detect`.
    pub fn detect_probability(&self) -> f64 {
        *self.p_leq.last().expect("profiles have at least level 0")
    }

    /// Per-species fractions for a detection protocol, indexed by species id:
    /// level `i <= s` gets `p[i]`, everything above gets `1 - p_leq[s]`.
    pub fn species_fractions(&self, protocol: &Protocol) -> Result<Vec<f64>, AnalysisError> {
        let s = self.params.s;
        let mut out = vec![0.0; protocol.len()];
        let mut tail_slot = None;
        for sp in protocol.species() {
            match sp.level {
                Some(l) if l <= s => out[sp.id.index()] = self.p[l as usize],
                Some(l) if l == s + 1 => tail_slot = Some(sp.id.index()),
                _ => return Err(AnalysisError::LevelMismatch(sp.name.clone())),
            }
        }
        let tail = tail_slot.ok_or_else(|| AnalysisError::LevelMismatch("neutral".into()))?;
        out[tail] = 1.0 - self.detect_probability();
        Ok(out)
    }

    /// CSV with header `i,p_leq,p`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "p_leq", "p"])?;
        for (i, (c, p)) in self.p_leq.iter().zip(&self.p).enumerate() {
            w.write_record([i.to_string(), c.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_n_s(n: u64, s: u32) -> Result<(), AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::EmptyPopulation);
    }
    if s < 1 {
        return Err(AnalysisError::NoLevels);
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), AnalysisError> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidBeta(beta))
    }
}

/// `1 - exp(e * ln_base)` without cancellation: `1 - base^e`.
fn one_minus_pow(ln_base: f64, exponent: f64) -> f64 {
    -(exponent * ln_base).exp_m1()
}

/// No leaks: `p_leq[i] = 1 - (1 - k/n)^(2^i)`.
pub fn stationary_no_leak(n: u64, k: u64, s: u32) -> Result<StationaryProfile, AnalysisError> {
    check_n_s(n, s)?;
    if k > n {
        return Err(AnalysisError::TooManyDetected { k, n });
    }
    let x = k as f64 / n as f64;
    let ln_base = (-x).ln_1p();
    let p_leq = (0..=s)
        .map(|i| {
            if k == n {
                1.0
            } else if i == 0 {
                x
            } else {
                one_minus_pow(ln_base, (i as f64).exp2())
            }
        })
        .collect();
    Ok(StationaryProfile::from_cumulative(
        p_leq,
        ProfileParams {
            n,
            k,
            beta: 0.0,
            s,
            mode: ProfileMode::NoLeak,
        },
    ))
}

/// False-positive profiles (`k = 0`, every leak produces `X1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsePositiveProfiles {
    /// `1 - p_leq[i] = (1 - b/n) / (1 - b/2n) * (1 - p_leq[i-1])^2`, `p_leq[0] = 0`.
    pub exact: StationaryProfile,
    /// `p_leq[i] = 1 - (1 - b/2n)^(2^i - 1)`.
    pub approx: StationaryProfile,
    pub max_discrepancy: f64,
}

pub fn stationary_false_positive(
    n: u64,
    beta: f64,
    s: u32,
) -> Result<FalsePositiveProfiles, AnalysisError> {
    check_n_s(n, s)?;
    check_beta(beta)?;
    let nf = n as f64;
    let ln_ratio = (-beta / nf).ln_1p() - (-beta / (2.0 * nf)).ln_1p();
    let params = ProfileParams {
        n,
        k: 0,
        beta,
        s,
        mode: ProfileMode::FalsePositive,
    };

    // Iterate ln(1 - p_leq[i]) = ln_ratio + 2 ln(1 - p_leq[i-1]).
    let mut ln_q = 0.0f64;
    let mut exact = vec![0.0];
    for _ in 1..=s {
        ln_q = ln_ratio + 2.0 * ln_q;
        exact.push(-ln_q.exp_m1());
    }

    let ln_half = (-beta / (2.0 * nf)).ln_1p();
    let approx: Vec<f64> = (0..=s)
        .map(|i| one_minus_pow(ln_half, (i as f64).exp2() - 1.0))
        .collect();

    let max_discrepancy = exact
        .iter()
        .zip(&approx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(FalsePositiveProfiles {
        exact: StationaryProfile::from_cumulative(exact, params),
        approx: StationaryProfile::from_cumulative(
            approx,
            ProfileParams {
                mode: ProfileMode::FalsePositiveApprox,
                ..params
            },
        ),
        max_discrepancy,
    })
}

/// False-negative profile (`k >= 1`, every leak produces the neutral species).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalseNegativeProfile {
    /// `p_leq[i] = (1 - b/2n) * (1 - (1 - p_leq[i-1])^2)`, `p_leq[0] = k/n`.
    pub profile: StationaryProfile,
    /// `(1 - 1/e) * (1 - b/2n)^(log2 n)`.
    pub detection_lower_bound: f64,
}

pub fn stationary_false_negative(
    n: u64,
    k: u64,
    beta: f64,
    s: u32,
) -> Result<FalseNegativeProfile, AnalysisError> {
    check_n_s(n, s)?;
    check_beta(beta)?;
    if k < 1 {
        return Err(AnalysisError::NoDetected);
    }
    if k > n {
        return Err(AnalysisError::TooManyDetected { k, n });
    }
    let nf = n as f64;
    let damp = 1.0 - beta / (2.0 * nf);
    let mut p_leq = Vec::with_capacity(s as usize + 1);
    let mut prev = k as f64 / nf;
    p_leq.push(prev);
    for _ in 1..=s {
        // 1 - (1 - x)^2 = x (2 - x)
        prev = damp * prev * (2.0 - prev);
        p_leq.push(prev);
    }
    let detection_lower_bound = (1.0 - (-1.0f64).exp()) * damp.powf(nf.log2());
    Ok(FalseNegativeProfile {
        profile: StationaryProfile::from_cumulative(
            p_leq,
            ProfileParams {
                n,
                k,
                beta,
                s,
                mode: ProfileMode::FalseNegative,
            },
        ),
        detection_lower_bound,
    })
}

pub fn detect_probability(profile: &StationaryProfile) -> f64 {
    profile.detect_probability()
}

/// Reported error bounds: false positive `1 - e^-b` and false negative
/// `1/e + b log2(n) / n`, with the hidden constant taken as 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    pub fp_bound: f64,
    pub fn_bound: f64,
}

pub fn theorem_bounds(n: u64, beta: f64) -> Result<TheoremBounds, AnalysisError> {
    check_beta(beta)?;
    if n == 0 {
        return Err(AnalysisError::EmptyPopulation);
    }
    let nf = n as f64;
    Ok(TheoremBounds {
        fp_bound: -(-beta).exp_m1(),
        fn_bound: (-1.0f64).exp() + beta * nf.log2() / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation of the no-leak formula with `powi` on small exponents.
    fn naive_no_leak(n: u64, k: u64, i: u32) -> f64 {
        1.0 - (1.0 - k as f64 / n as f64).powf(2f64.powi(i as i32))
    }

    #[test]
    fn no_leak_values() {
        let prof = stationary_no_leak(10_000, 0, 14).unwrap();
        assert!(prof.p_leq.iter().all(|&v| v == 0.0));
        for k in [1, 7, 100] {
            let prof = stationary_no_leak(10_000, k, 14).unwrap();
            assert!((prof.p_leq[0] - k as f64 / 1e4).abs() < 1e-15);
        }
        let prof = stationary_no_leak(10_000, 1, 14).unwrap();
        // Frozen from a 50-digit evaluation of 1 - (1 - 1e-4)^16384.
        assert!((prof.p_leq[14] - 0.805_725_257_9).abs() < 1e-9, "{}", prof.p_leq[14]);
        assert!(prof.detect_probability() >= 1.0 - (-1.0f64).exp());
        for i in 0..=10 {
            assert!((prof.p_leq[i] - naive_no_leak(10_000, 1, i as u32)).abs() < 1e-12);
        }
        let all = stationary_no_leak(5, 5, 3).unwrap();
        assert!(all.p_leq.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn false_positive_values() {
        let fp = stationary_false_positive(10_000, 0.0, 14).unwrap();
        let zero = stationary_no_leak(10_000, 0, 14).unwrap();
        assert_eq!(fp.exact.p_leq, zero.p_leq);
        assert_eq!(fp.approx.p_leq, zero.p_leq);

        let fp = stationary_false_positive(10_000, 0.1, 14).unwrap();
        // Frozen from iterating the recurrence in 50-digit arithmetic.
        assert!((fp.exact.p_leq[14] - 0.078_650_295_9).abs() < 1e-9, "{}", fp.exact.p_leq[14]);
        assert!(fp.exact.detect_probability() <= -(-0.1f64).exp_m1());
        assert!(fp.max_discrepancy <= 10.0 * (0.1f64 / 1e4).powi(2) * 2f64.powi(14));
        assert!(stationary_false_positive(10, -1.0, 3).is_err());
    }

    #[test]
    fn false_negative_values() {
        let fneg = stationary_false_negative(10_000, 1, 0.0, 14).unwrap();
        let nl = stationary_no_leak(10_000, 1, 14).unwrap();
        for (a, b) in fneg.profile.p_leq.iter().zip(&nl.p_leq) {
            assert!((a - b).abs() < 1e-12);
        }
        let fneg = stationary_false_negative(10_000, 1, 0.1, 14).unwrap();
        let v = fneg.profile.detect_probability();
        // Frozen from a 50-digit iteration; rounds to 0.8057.
        assert!((v - 0.805_698_948_3).abs() < 1e-9, "{v}");
        assert!(nl.detect_probability() - v < 1e-4);
        let bound = fneg.detection_lower_bound;
        assert!(bound < 1.0 - (-1.0f64).exp() && bound > 0.6320);
        assert_eq!(
            stationary_false_negative(10, 0, 0.1, 3).unwrap_err(),
            AnalysisError::NoDetected
        );
    }

    #[test]
    fn bounds() {
        let b = theorem_bounds(10_000, 0.0).unwrap();
        assert_eq!(b.fp_bound, 0.0);
        assert!((b.fn_bound - (-1.0f64).exp()).abs() < 1e-15);
        assert!((theorem_bounds(10_000, 0.1).unwrap().fp_bound - 0.095_162_58).abs() < 1e-8);
        assert!((theorem_bounds(10_000, 0.01).unwrap().fp_bound - 0.009_950_17).abs() < 1e-8);
    }

    #[test]
    fn csv_export() {
        let prof = stationary_no_leak(4, 1, 2).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("i,p_leq,p"));
        assert_eq!(text.lines().nth(1), Some("0,0.25,0.25"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn high_levels_do_not_underflow() {
        let prof = stationary_no_leak(1 << 40, 1, 64).unwrap();
        assert!(prof.p_leq.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert!(prof.p_leq[1] > 0.0);
        assert_eq!(prof.p_leq[64], 1.0);
    }
}
