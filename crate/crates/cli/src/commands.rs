use std::io::Write;
use std::path::Path;

use popleak::analysis::{
    stationary_false_negative, stationary_false_positive, stationary_no_leak, theorem_bounds,
};
use popleak::convergence::{
    decay_experiment, estimate_from_gaps, fit_log_trend, gap_series, max_pair_contraction,
    stabilization_experiment, ConvergenceError, DecayConfig, StabilizationConfig,
};
use popleak::detect::{build_robust_detect, build_truncated_ideal, default_levels};
use popleak::sim::export::{batch_csv, batch_json, trajectory_csv, trajectory_json};
use popleak::sim::{run, run_batch, ExecutionMode};
use popleak::{
    initial_configuration, parse, serialize, Configuration, DetectParams, InitialState, LeakModel,
    Protocol, SimParams, StationaryProfile,
};
use serde_json::json;

use crate::config::{display, resolve, Defaults, ExperimentConfig, StrategyArg};
use crate::output::{emit, to_json, Rendered};
use crate::{CleanArgs, CleanInit, CliError, MixArgs, SimulateArgs, StabilizeArgs};

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn experiment(e: impl std::fmt::Display) -> CliError {
    CliError::Experiment(e.to_string())
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn validate(path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(display(path), e))?;
    let p = parse(&text).map_err(|err| CliError::Parse {
        path: display(path),
        err,
    })?;
    if p.is_empty() {
        writeln!(stderr, "warning: {} declares no species", display(path)).map_err(out_err)?;
    }
    let part = p.classify_catalytic();
    let names = |set: &std::collections::BTreeSet<popleak::SpeciesId>| {
        let v: Vec<&str> = set.iter().map(|&id| p.species_by_id(id).name.as_str()).collect();
        if v.is_empty() {
            "(none)".to_owned()
        } else {
            v.join(", ")
        }
    };
    writeln!(stdout, "species: {}", p.len()).map_err(out_err)?;
    writeln!(stdout, "reactions: {}", p.reactions().len()).map_err(out_err)?;
    writeln!(stdout, "catalytic: {}", names(&part.catalytic)).map_err(out_err)?;
    writeln!(stdout, "non-catalytic: {}", names(&part.non_catalytic)).map_err(out_err)?;
    Ok(())
}

pub fn generate(
    s: u32,
    ideal: bool,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let p = if ideal {
        build_truncated_ideal(s)
    } else {
        build_robust_detect(s)
    }
    .map_err(validation)?;
    let text = serialize(&p);
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(display(path), e)),
        None => stdout.write_all(text.as_bytes()).map_err(out_err),
    }
}

/// Closed-form profile matching the condition, if one exists.
fn profile_for(cfg: &ExperimentConfig) -> Result<(StationaryProfile, serde_json::Value), CliError> {
    let leaking = cfg.beta > 0.0;
    let extra;
    let profile = match (cfg.k, leaking, &cfg.strategy) {
        (_, false, _) | (_, true, StrategyArg::None) => {
            extra = json!({});
            stationary_no_leak(cfg.n, cfg.k, cfg.s).map_err(validation)?
        }
        (0, true, StrategyArg::Fp) => {
            let fp = stationary_false_positive(cfg.n, cfg.beta, cfg.s).map_err(validation)?;
            extra = json!({ "approx_p_leq": fp.approx.p_leq, "max_discrepancy": fp.max_discrepancy });
            fp.exact
        }
        (k, true, StrategyArg::Fn) if k >= 1 => {
            let fneg = stationary_false_negative(cfg.n, cfg.k, cfg.beta, cfg.s).map_err(validation)?;
            extra = json!({ "detection_lower_bound": fneg.detection_lower_bound });
            fneg.profile
        }
        _ => {
            return Err(CliError::Validation(format!(
                "no stationary profile for k = {} with {} leaks",
                cfg.k,
                cfg.strategy.label()
            )))
        }
    };
    Ok((profile, extra))
}

pub fn steady(args: &crate::ExperimentArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let defaults = Defaults {
        n: 10_000,
        k: 1,
        s: None,
        runs: 1,
        time: 0.0,
        record_every: 1.0,
    };
    let configs = resolve("steady", args, defaults)?;
    let mut items = Vec::new();
    for cfg in &configs {
        let (profile, extra) = profile_for(cfg)?;
        let bounds = theorem_bounds(cfg.n, cfg.beta).map_err(validation)?;
        let levels: Vec<_> = profile
            .p_leq
            .iter()
            .zip(&profile.p)
            .enumerate()
            .map(|(i, (c, p))| json!({ "i": i, "p_leq": c, "p": p }))
            .collect();
        let doc = json!({
            "params": cfg,
            "mode": profile.params.mode,
            "levels": levels,
            "detect_probability": profile.detect_probability(),
            "bounds": bounds,
            "extra": extra,
        });
        items.push(Rendered::new(&cfg.label, doc, |buf| profile.write_csv(buf))?);
    }
    emit(&items, &configs, args.out.as_deref(), args.format, stdout)
}

fn sim_params(cfg: &ExperimentConfig, p: &Protocol) -> Result<SimParams, CliError> {
    let init = initial_configuration(
        p,
        DetectParams::new(cfg.n, cfg.k, cfg.s).map_err(validation)?,
        &InitialState::AllNeutral,
    )
    .map_err(validation)?;
    let leak = LeakModel::new(cfg.beta, cfg.strategy.to_strategy()?);
    leak.resolve(p, cfg.n).map_err(validation)?;
    Ok(SimParams::new(p.clone(), init, leak, cfg.seed)
        .horizon(cfg.interactions, cfg.record_every_interactions))
}

pub fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let defaults = Defaults {
        n: 10_000,
        k: 1,
        s: None,
        runs: 1,
        time: 100.0,
        record_every: 0.5,
    };
    let configs = resolve("simulate", &args.common, defaults)?;
    let mut items = Vec::new();
    for cfg in &configs {
        let p = build_robust_detect(cfg.s).map_err(validation)?;
        let mut params = sim_params(cfg, &p)?;
        if args.molecules {
            params = params.mode(ExecutionMode::Molecules);
        }
        params.log_events = args.events;
        let item = if cfg.runs == 1 {
            let tr = run(&params).map_err(experiment)?;
            let mut buf = Vec::new();
            trajectory_json(&tr, cfg, &mut buf).map_err(experiment)?;
            let doc = serde_json::from_slice(&buf).map_err(experiment)?;
            Rendered::new(&cfg.label, doc, |b| trajectory_csv(&tr, b))?
        } else {
            let stats = run_batch(&params, cfg.runs).map_err(experiment)?;
            let mut buf = Vec::new();
            batch_json(&stats, cfg, &mut buf).map_err(experiment)?;
            let doc = serde_json::from_slice(&buf).map_err(experiment)?;
            Rendered::new(&cfg.label, doc, |b| batch_csv(&stats, b))?
        };
        items.push(item);
    }
    emit(&items, &configs, args.common.out.as_deref(), args.common.format, stdout)
}

pub fn mix(args: &MixArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(args.epsilon > 0.0 && args.epsilon < 1.0) {
        return Err(CliError::Validation(format!(
            "--epsilon must lie in (0, 1), got {}",
            args.epsilon
        )));
    }
    if args.common.preset.is_some() {
        return Err(CliError::Validation("mix takes no preset".into()));
    }
    let sizes = if args.sizes.is_empty() {
        vec![args.common.n.unwrap_or(10_000)]
    } else {
        args.sizes.clone()
    };
    let mut configs = Vec::new();
    let mut results = Vec::new();
    let mut rows: Vec<[String; 6]> = Vec::new();
    let mut fit_points = (Vec::new(), Vec::new());
    let mut failures = Vec::new();
    for &n in &sizes {
        let mut common = args.common.clone();
        common.n = Some(n);
        let log_n = (n.max(2) as f64).log2();
        let defaults = Defaults {
            n,
            k: 1,
            s: Some(default_levels(n)),
            runs: 20,
            time: (20.0 * log_n).ceil(),
            record_every: 0.5,
        };
        let cfg = resolve("mix", &common, defaults)?.remove(0);
        let (profile, _) = profile_for(&cfg)?;
        let p = build_robust_detect(cfg.s).map_err(validation)?;
        let params = sim_params(&cfg, &p)?;
        let stats = run_batch(&params, cfg.runs).map_err(experiment)?;
        let series = gap_series(&stats, &p, &profile).map_err(experiment)?;
        let final_gap = series.last().map_or(f64::NAN, |g| g.1);
        let (estimate, fitted_c) = match estimate_from_gaps(n, cfg.runs, series.clone(), args.epsilon) {
            Ok(e) => {
                fit_points.0.push(n);
                fit_points.1.push(e.parallel_time);
                (Some(e.parallel_time), Some(e.fitted_c))
            }
            Err(ConvergenceError::NotConverged { final_gap }) => {
                failures.push(format!("n = {n}: gap {final_gap:.4} at the horizon"));
                (None, None)
            }
            Err(e) => return Err(experiment(e)),
        };
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        rows.push([
            n.to_string(),
            cfg.s.to_string(),
            estimate.is_some().to_string(),
            fmt(estimate),
            fmt(fitted_c),
            final_gap.to_string(),
        ]);
        results.push(json!({
            "params": cfg,
            "converged": estimate.is_some(),
            "parallel_time": estimate,
            "fitted_c": fitted_c,
            "final_gap": final_gap,
            "gap_series": series,
        }));
        configs.push(cfg);
    }
    let fit = fit_log_trend(&fit_points.0, &fit_points.1);
    let doc = json!({ "epsilon": args.epsilon, "results": results, "log_fit": fit });
    let item = Rendered::new("mix", doc, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["n", "s", "converged", "parallel_time", "fitted_c", "final_gap"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    emit(&[item], &configs[..1], args.common.out.as_deref(), args.common.format, stdout)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Experiment(format!(
            "did not converge within epsilon {}: {}",
            args.epsilon,
            failures.join("; ")
        )))
    }
}

pub fn clean(args: &CleanArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.common.preset.is_some() {
        return Err(CliError::Validation("clean takes no preset".into()));
    }
    let defaults = Defaults {
        n: 1000,
        k: 0,
        s: Some(10),
        runs: 100,
        time: 0.0,
        record_every: 1.0,
    };
    let cfg = resolve("clean", &args.common, defaults)?.remove(0);
    if cfg.beta > 0.0 {
        return Err(validation(ConvergenceError::LeaksEnabled));
    }
    let p = build_truncated_ideal(cfg.s).map_err(validation)?;
    let start = match args.init {
        CleanInit::X1 => 1,
        CleanInit::Top => cfg.s,
    };
    let mut counts = vec![0u64; p.len()];
    counts[0] = cfg.k;
    counts[start as usize] += cfg.n - cfg.k;
    let mut decay = DecayConfig::new(p.clone(), Configuration::from_counts(counts), cfg.runs, cfg.seed);
    decay.record_every = cfg.record_every_interactions;
    let report = decay_experiment(&decay).map_err(|e| match e {
        ConvergenceError::DetectedPresent(_) | ConvergenceError::LeaksEnabled => validation(e),
        e => experiment(e),
    })?;
    let doc = json!({
        "params": cfg,
        "max_pair_contraction": max_pair_contraction(&p),
        "report": to_json(&report),
    });
    let item = Rendered::new("clean", doc, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["t", "parallel_time", "phi"])?;
        for &(t, phi) in &report.series.samples {
            w.write_record([t.to_string(), (t as f64 / cfg.n as f64).to_string(), phi.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    emit(&[item], std::slice::from_ref(&cfg), args.common.out.as_deref(), args.common.format, stdout)
}

pub fn stabilize(args: &StabilizeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.common.preset.is_some() {
        return Err(CliError::Validation("stabilize takes no preset".into()));
    }
    let defaults = Defaults {
        n: 10_000,
        k: 1,
        s: None,
        runs: 20,
        time: 0.0,
        record_every: 0.1,
    };
    let cfg = resolve("stabilize", &args.common, defaults)?.remove(0);
    if cfg.k == 0 {
        return Err(CliError::Validation("--k must be at least 1 to remove detected molecules".into()));
    }
    let times = [Some(args.remove_at), args.readd_at, Some(args.window)];
    if times.iter().flatten().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(CliError::Validation("times must be non-negative".into()));
    }
    if args.readd_at.is_some_and(|t| t < args.remove_at) {
        return Err(CliError::Validation("--readd-at must not precede --remove-at".into()));
    }
    let p = build_robust_detect(cfg.s).map_err(validation)?;
    let params = sim_params(&cfg, &p)?;
    let report = stabilization_experiment(&StabilizationConfig {
        params,
        k: cfg.k,
        remove_at: args.remove_at,
        readd_at: args.readd_at,
        window: args.window,
        low: args.low,
        high: args.high,
        runs: cfg.runs,
    })
    .map_err(experiment)?;
    let doc = json!({ "params": cfg, "report": to_json(&report) });
    let item = Rendered::new("stabilize", doc, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["run", "drop_time", "recover_time"])?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (i, r) in report.runs.iter().enumerate() {
            w.write_record([i.to_string(), fmt(r.drop_time), fmt(r.recover_time)])?;
        }
        w.flush()?;
        Ok(())
    })?;
    emit(&[item], std::slice::from_ref(&cfg), args.common.out.as_deref(), args.common.format, stdout)
}
