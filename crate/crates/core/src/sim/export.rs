//! CSV and JSON writers for trajectories and batch aggregates.
//!
//! CSV header: `t,parallel_time,<species...>,detect_fraction`. Batch CSVs use
//! the same columns with per-species mean counts.

use std::io::Write;

use serde::Serialize;

use super::{BatchStats, Trajectory};

fn header(species: &[String]) -> Vec<String> {
    let mut h = vec!["t".to_owned(), "parallel_time".to_owned()];
    h.extend(species.iter().cloned());
    h.push("detect_fraction".to_owned());
    h
}

pub fn trajectory_csv<W: Write>(tr: &Trajectory, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(&tr.species))?;
    for (snap, d) in tr.snapshots.iter().zip(tr.detect_fractions()) {
        let mut rec = vec![snap.t.to_string(), tr.parallel_time(snap.t).to_string()];
        rec.extend(snap.counts.iter().map(u64::to_string));
        rec.push(d.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Row<'a, C: Serialize> {
    t: u64,
    parallel_time: f64,
    counts: &'a C,
    detect_fraction: f64,
}

#[derive(Serialize)]
struct TrajectoryDoc<'a, P: Serialize> {
    params: &'a P,
    species: &'a [String],
    n: u64,
    snapshots: Vec<Row<'a, Vec<u64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<&'a Vec<super::LoggedEvent>>,
}

pub fn trajectory_json<W: Write, P: Serialize>(
    tr: &Trajectory,
    params: &P,
    out: W,
) -> serde_json::Result<()> {
    let detect = tr.detect_fractions();
    let doc = TrajectoryDoc {
        params,
        species: &tr.species,
        n: tr.n,
        snapshots: tr
            .snapshots
            .iter()
            .zip(detect)
            .map(|(s, d)| Row {
                t: s.t,
                parallel_time: tr.parallel_time(s.t),
                counts: &s.counts,
                detect_fraction: d,
            })
            .collect(),
        events: tr.events.as_ref(),
    };
    serde_json::to_writer_pretty(out, &doc)
}

pub fn batch_csv<W: Write>(stats: &BatchStats, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(&stats.species))?;
    let n = stats.n as f64;
    for (i, (&t, pt)) in stats.times.iter().zip(stats.parallel_times()).enumerate() {
        let mut rec = vec![t.to_string(), pt.to_string()];
        rec.extend(stats.mean_fraction[i].iter().map(|f| (f * n).to_string()));
        rec.push(stats.mean_detect[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BatchDoc<'a, P: Serialize> {
    params: &'a P,
    #[serde(flatten)]
    stats: &'a BatchStats,
    parallel_time: Vec<f64>,
}

pub fn batch_json<W: Write, P: Serialize>(
    stats: &BatchStats,
    params: &P,
    out: W,
) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(
        out,
        &BatchDoc {
            params,
            stats,
            parallel_time: stats.parallel_times(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{build_robust_detect, initial_configuration, DetectParams, InitialState};
    use crate::sim::{run, run_batch, LeakModel, SimParams};

    fn params() -> SimParams {
        let p = build_robust_detect(2).unwrap();
        let c = initial_configuration(
            &p,
            DetectParams::new(10, 1, 2).unwrap(),
            &InitialState::AllNeutral,
        )
        .unwrap();
        SimParams::new(p, c, LeakModel::none(), 1).horizon(30, 10)
    }

    #[test]
    fn csv_header_and_rows() {
        let tr = run(&params()).unwrap();
        let mut buf = Vec::new();
        trajectory_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,parallel_time,D,X1,X2,N,detect_fraction"));
        assert_eq!(lines.next(), Some("0,0,1,0,0,9,0.1"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn json_echoes_params() {
        let p = params();
        let tr = run(&p).unwrap();
        let mut buf = Vec::new();
        trajectory_json(&tr, &serde_json::json!({"seed": 1}), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["params"]["seed"], 1);
        assert_eq!(v["snapshots"].as_array().unwrap().len(), 4);
        assert_eq!(v["snapshots"][0]["detect_fraction"], 0.1);

        let stats = run_batch(&p, 2).unwrap();
        let mut buf = Vec::new();
        batch_csv(&stats, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t,parallel_time,D,X1,X2,N,detect_fraction\n"));
        let mut buf = Vec::new();
        batch_json(&stats, &serde_json::json!({}), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["runs"], 2);
    }
}
