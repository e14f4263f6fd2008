use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::run::{RunOutput, RunRecord, ScanRow, TraceRow, TrialSummary};
use super::HarnessError;
use crate::sterngerlach::{absorption_profile, SGConfig};
use crate::zeeman::HyperfineState;

/// Fixed header of `trace.csv`.
pub const TRACE_HEADER: [&str; 14] = [
    "t_ms",
    "delta0_MHz",
    "I",
    "Q",
    "A",
    "p_2_2",
    "p_2_1",
    "p_2_0",
    "p_2_-1",
    "p_2_-2",
    "p_1_1",
    "p_1_0",
    "p_1_-1",
    "lost",
];

const PROFILE_POINTS: usize = 1201;

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn trace_rows(trace: &[TraceRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    trace.iter().map(|r| {
        let mut row = vec![r.t_ms, r.delta0_mhz, r.i, r.q, r.a];
        row.extend(r.p);
        row.push(r.lost);
        row.into_iter().map(|x| x.to_string()).collect()
    })
}

fn states(s: &[HyperfineState]) -> String {
    s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn record_summary(r: &RunRecord) -> serde_json::Value {
    json!({
        "scenario": r.scenario,
        "seed": r.seed,
        "field_gauss": r.field_gauss,
        "initial_state": r.initial_state,
        "target_state": r.target_state,
        "pulses": r.pulses,
        "edges": r.edges,
        "stopped": r.stopped,
        "stop_time_ms": r.stop_time_ms,
        "final_majority": r.final_majority,
        "target_purity": r.target_purity,
        "f2_fraction": r.final_populations.f2_fraction(),
        "lost": r.final_populations.lost,
        "dominant_bin_mm": r.histogram.as_ref().and_then(|h| h.dominant()).map(|b| b.position_mm),
    })
}

fn write_histogram(dir: &Path, r: &RunRecord, sg: &SGConfig, files: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let Some(h) = &r.histogram else {
        return Ok(());
    };
    let path = dir.join("histogram.csv");
    write_csv(
        &path,
        &["position_mm", "occupation", "states"],
        h.bins
            .iter()
            .map(|b| vec![b.position_mm.to_string(), b.occupation.to_string(), states(&b.states)]),
    )?;
    files.push(path);
    let path = dir.join("profile.csv");
    write_csv(
        &path,
        &["y_mm", "density"],
        absorption_profile(h, sg, PROFILE_POINTS)
            .into_iter()
            .map(|(y, d)| vec![y.to_string(), d.to_string()]),
    )?;
    files.push(path);
    Ok(())
}

fn trial_rows(trials: &[TrialSummary]) -> impl Iterator<Item = Vec<String>> + '_ {
    trials.iter().map(|t| {
        vec![
            t.trial.to_string(),
            t.seed.to_string(),
            t.field_gauss.to_string(),
            t.edges.to_string(),
            t.stopped.to_string(),
            opt(t.stop_time_ms),
            t.majority.to_string(),
            opt(t.purity),
            t.success.to_string(),
        ]
    })
}

fn scan_rows(rows: &[ScanRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        vec![
            r.rabi_khz.to_string(),
            r.rate_mhz_per_ms.to_string(),
            r.gamma.to_string(),
            r.p_lz.to_string(),
            opt(r.p_ode),
            opt(r.abs_diff),
            opt(r.norm_drift),
            r.ode_steps.map_or_else(String::new, |s| s.to_string()),
        ]
    })
}

/// Write `trace.csv`, `record.json`, `summary.json` and any scenario
/// extras into `dir`. Returns the files written.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let trace_path = dir.join("trace.csv");
    let record_path = dir.join("record.json");
    let summary_path = dir.join("summary.json");
    match out {
        RunOutput::Single(r) => {
            write_csv(&trace_path, &TRACE_HEADER, trace_rows(&r.trace))?;
            write_json(&record_path, r)?;
            write_json(&summary_path, &record_summary(r))?;
            files.extend([trace_path, record_path, summary_path]);
            write_histogram(dir, r, &r.config.stern_gerlach, &mut files)?;
        }
        RunOutput::MonteCarlo {
            summary,
            trials,
            example,
        } => {
            write_csv(&trace_path, &TRACE_HEADER, trace_rows(&example.trace))?;
            write_json(
                &record_path,
                &json!({ "summary": summary, "trials": trials, "example": example }),
            )?;
            write_json(&summary_path, summary)?;
            let trials_path = dir.join("trials.csv");
            write_csv(
                &trials_path,
                &[
                    "trial",
                    "seed",
                    "field_gauss",
                    "edges",
                    "stopped",
                    "stop_time_ms",
                    "majority",
                    "purity",
                    "success",
                ],
                trial_rows(trials),
            )?;
            files.extend([trace_path, record_path, summary_path, trials_path]);
        }
        RunOutput::Scan { seed, config, rows } => {
            write_csv(&trace_path, &TRACE_HEADER, std::iter::empty())?;
            write_json(&record_path, &json!({ "seed": seed, "config": config, "rows": rows }))?;
            let max = |f: fn(&ScanRow) -> Option<f64>| rows.iter().filter_map(f).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            write_json(
                &summary_path,
                &json!({
                    "points": rows.len(),
                    "max_abs_diff": max(|r| r.abs_diff),
                    "max_norm_drift": max(|r| r.norm_drift),
                }),
            )?;
            let scan_path = dir.join("scan.csv");
            write_csv(
                &scan_path,
                &["rabi_kHz", "rate_MHz_per_ms", "gamma", "p_lz", "p_ode", "abs_diff", "norm_drift", "ode_steps"],
                scan_rows(rows),
            )?;
            files.extend([trace_path, record_path, summary_path, scan_path]);
        }
    }
    Ok(files)
}
