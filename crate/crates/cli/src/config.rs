//! Resolves command-line flags and presets into validated per-condition
//! parameter records.

use std::path::Path;

use clap::ValueEnum;
use popleak::detect::default_levels;
use popleak::parser::parse_leak_map;
use popleak::LeakStrategy;
use serde::Serialize;

use crate::{CliError, ExperimentArgs, Format};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// n = 10^4, s = 14: one D without leaks; no D with fp leaks at beta 0.01 and 0.1.
    Figure1,
    /// n = 10^4, s = 14: one D without leaks; no D with fp leaks at beta 0.1.
    Figure2a,
    /// n = 10^4, s = 17: one D without leaks; no D with fp leaks at beta 0.01.
    Figure2b,
}

impl Preset {
    fn levels(self) -> u32 {
        match self {
            Preset::Figure1 | Preset::Figure2a => 14,
            Preset::Figure2b => 17,
        }
    }

    /// `(k, beta, strategy)` per condition.
    fn conditions(self) -> Vec<(u64, f64, StrategyArg)> {
        let base = (1, 0.0, StrategyArg::None);
        match self {
            Preset::Figure1 => vec![
                base,
                (0, 0.01, StrategyArg::Fp),
                (0, 0.1, StrategyArg::Fp),
            ],
            Preset::Figure2a => vec![base, (0, 0.1, StrategyArg::Fp)],
            Preset::Figure2b => vec![base, (0, 0.01, StrategyArg::Fp)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    None,
    Fp,
    Fn,
    Custom(String),
}

impl StrategyArg {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "none" => Ok(StrategyArg::None),
            "fp" => Ok(StrategyArg::Fp),
            "fn" => Ok(StrategyArg::Fn),
            _ => match s.strip_prefix("custom:") {
                Some(path) if !path.is_empty() => Ok(StrategyArg::Custom(path.to_owned())),
                _ => Err(CliError::Validation(format!(
                    "unknown strategy `{s}` (expected none, fp, fn or custom:<file>)"
                ))),
            },
        }
    }

    /// Worst case for the error the condition can make.
    fn default_for(k: u64, beta: f64) -> Self {
        match (k, beta > 0.0) {
            (_, false) => StrategyArg::None,
            (0, true) => StrategyArg::Fp,
            _ => StrategyArg::Fn,
        }
    }

    pub fn label(&self) -> String {
        match self {
            StrategyArg::None => "none".into(),
            StrategyArg::Fp => "fp".into(),
            StrategyArg::Fn => "fn".into(),
            StrategyArg::Custom(p) => format!("custom:{p}"),
        }
    }

    pub fn to_strategy(&self) -> Result<LeakStrategy, CliError> {
        Ok(match self {
            StrategyArg::None => LeakStrategy::None,
            StrategyArg::Fp => LeakStrategy::WorstFalsePositive,
            StrategyArg::Fn => LeakStrategy::WorstFalseNegative,
            StrategyArg::Custom(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let map = parse_leak_map(&text).map_err(|err| CliError::Parse {
                    path: path.clone(),
                    err,
                })?;
                LeakStrategy::Custom(map)
            }
        })
    }
}

/// Parameters of one experimental condition, echoed into JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: &'static str,
    pub preset: Option<Preset>,
    pub label: String,
    pub n: u64,
    pub k: u64,
    pub s: u32,
    pub beta: f64,
    #[serde(serialize_with = "strategy_label")]
    pub strategy: StrategyArg,
    pub seed: u64,
    pub runs: usize,
    /// Horizon in parallel time.
    pub time: f64,
    /// Horizon in interactions, `round(time * n)`.
    pub interactions: u64,
    pub record_every: f64,
    pub record_every_interactions: u64,
    pub format: Format,
}

fn strategy_label<S: serde::Serializer>(s: &StrategyArg, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&s.label())
}

/// Per-command fallbacks for flags the user and preset left unset.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub n: u64,
    pub k: u64,
    pub s: Option<u32>,
    pub runs: usize,
    pub time: f64,
    pub record_every: f64,
}

impl ExperimentConfig {
    pub fn interactions_for(&self, parallel: f64) -> u64 {
        (parallel * self.n as f64).round() as u64
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.n == 0 {
            return bad("--n must be at least 1".into());
        }
        if self.k > self.n {
            return bad(format!("--k {} exceeds --n {}", self.k, self.n));
        }
        if self.s == 0 {
            return bad("--s must be at least 1".into());
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("--beta must be a non-negative number, got {}", self.beta));
        }
        if self.beta > self.n as f64 {
            return bad(format!("leak probability beta/n = {} exceeds 1", self.beta / self.n as f64));
        }
        if self.runs == 0 {
            return bad("--runs must be at least 1".into());
        }
        if !(self.time.is_finite() && self.time >= 0.0) {
            return bad(format!("--time must be non-negative, got {}", self.time));
        }
        if !(self.record_every.is_finite() && self.record_every > 0.0) {
            return bad(format!("--record-every must be positive, got {}", self.record_every));
        }
        Ok(())
    }
}

/// Expands flags and preset into one validated config per condition.
pub fn resolve(
    command: &'static str,
    args: &ExperimentArgs,
    defaults: Defaults,
) -> Result<Vec<ExperimentConfig>, CliError> {
    let strategy_flag = args.strategy.as_deref().map(StrategyArg::parse).transpose()?;
    let n = args.n.unwrap_or(match args.preset {
        Some(_) => 10_000,
        None => defaults.n,
    });
    let levels: Vec<u32> = if !args.s.is_empty() {
        args.s.clone()
    } else if let Some(p) = args.preset {
        vec![p.levels()]
    } else {
        vec![defaults.s.unwrap_or_else(|| default_levels(n))]
    };
    let base: Vec<(u64, f64, Option<StrategyArg>)> = match args.preset {
        Some(p) => p
            .conditions()
            .into_iter()
            .map(|(k, b, st)| (args.k.unwrap_or(k), args.beta.unwrap_or(b), Some(st)))
            .collect(),
        None => vec![(args.k.unwrap_or(defaults.k), args.beta.unwrap_or(0.0), None)],
    };
    let time = args.time.unwrap_or(defaults.time);
    let record_every = args.record_every.unwrap_or(defaults.record_every);
    let multi = levels.len() * base.len() > 1;

    let mut out = Vec::new();
    for &s in &levels {
        for (k, beta, preset_strategy) in &base {
            let strategy = strategy_flag
                .clone()
                .or_else(|| preset_strategy.clone())
                .unwrap_or_else(|| StrategyArg::default_for(*k, *beta));
            let label = if multi || args.preset.is_some() {
                format!("k{k}_beta{beta}_s{s}")
            } else {
                command.to_owned()
            };
            let cfg = ExperimentConfig {
                command,
                preset: args.preset,
                label,
                n,
                k: *k,
                s,
                beta: *beta,
                strategy,
                seed: args.seed.unwrap_or(DEFAULT_SEED),
                runs: args.runs.unwrap_or(defaults.runs),
                time,
                interactions: (time * n as f64).round() as u64,
                record_every,
                record_every_interactions: ((record_every * n as f64).round() as u64).max(1),
                format: args.format,
            };
            cfg.validate()?;
            out.push(cfg);
        }
    }
    Ok(out)
}

/// Extension for the chosen format.
pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
