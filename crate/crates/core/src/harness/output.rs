//! Persistence. Output bytes depend only on the experiment result, never on
//! timing or scheduling.
//!
//! Layout under the output directory:
//!
//! * `runs/<run_id>.jsonl`: one record per evaluation with keys `eval`,
//!   `theta_deg`, `cost`, `best`, `event`.
//! * `events/<run_id>.jsonl`: hidden-offset changes (perturbation runs only).
//! * `summary.csv`: one row per run.
//! * `curves.csv`: mean best-so-far cost and its standard error per
//!   algorithm (engineer, compare).
//! * `sweep.csv`: evaluations-to-threshold per walk length (sweep).
//! * `ratios.csv`: fidelity recovery per perturbation instant (perturb).
//! * `metadata.json`: config, config hash, seeds and version.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::experiments::ExperimentResult;
use crate::error::{Error, Result};
use crate::trace::{IterationRecord, RunStatus, Trace};

#[derive(Debug, Clone, Default)]
pub struct OutputFiles {
    pub traces: Vec<PathBuf>,
    pub events: Vec<PathBuf>,
    pub tables: Vec<PathBuf>,
    pub metadata: PathBuf,
}

impl OutputFiles {
    pub fn all(&self) -> Vec<PathBuf> {
        let mut v = self.traces.clone();
        v.extend(self.events.iter().cloned());
        v.extend(self.tables.iter().cloned());
        v.push(self.metadata.clone());
        v
    }
}

pub fn write_trace_jsonl(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in &trace.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_jsonl(path: &Path) -> Result<Vec<IterationRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn status_str(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "completed".into(),
        RunStatus::Aborted(m) => format!("aborted: {m}"),
    }
}

#[derive(Serialize)]
struct EventLine {
    evaluation: u64,
    step: usize,
    angle: usize,
    offset_deg: f64,
}

fn write_summary(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "run_id",
        "algorithm",
        "steps",
        "n_par",
        "state",
        "repeat",
        "target",
        "evaluations",
        "best_cost",
        "best_fidelity",
        "best_exact_fidelity",
        "reached_at",
        "stall_restarts",
        "degradation_restarts",
        "perturbations",
        "probability",
        "threshold",
        "status",
    ])?;
    for r in &result.runs {
        let s = &r.trace.summary;
        w.write_record([
            r.run_id.clone(),
            r.algorithm.as_str().into(),
            r.steps.to_string(),
            crate::walk::param_count(r.steps).to_string(),
            r.state.to_string(),
            r.repeat.to_string(),
            r.target.clone(),
            r.trace.len().to_string(),
            opt(s.best_cost),
            opt(s.best_cost.map(|c| 1.0 - c)),
            opt(s.best_exact_fidelity),
            r.reached_at.map(|e| e.to_string()).unwrap_or_default(),
            r.stall_restarts.to_string(),
            r.degradation_restarts.to_string(),
            r.events.len().to_string(),
            opt(r.probability),
            opt(r.threshold),
            status_str(&s.status),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_curves(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["eval".to_string()];
    for (a, _) in &result.curves {
        header.push(format!("{}_mean", a.as_str()));
        header.push(format!("{}_sem", a.as_str()));
    }
    w.write_record(&header)?;
    let len = result.curves.iter().map(|(_, c)| c.mean.len()).max().unwrap_or(0);
    for i in 0..len {
        let mut row = vec![(i + 1).to_string()];
        for (_, c) in &result.curves {
            row.push(c.mean[i].to_string());
            row.push(c.sem[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_sweep(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["steps", "n_par", "runs", "failures", "mean_evaluations", "std_error"])?;
    for r in &result.sweep {
        w.write_record([
            r.steps.to_string(),
            r.n_par.to_string(),
            r.runs.to_string(),
            r.failures.to_string(),
            opt(r.mean_evaluations),
            opt(r.std_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ratios(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run_id", "evaluation", "f_best_before", "f_best_after", "ratio"])?;
    for r in &result.ratios {
        w.write_record([
            r.run_id.clone(),
            r.evaluation.to_string(),
            r.before.to_string(),
            r.after.to_string(),
            r.ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_metadata(path: &Path, result: &ExperimentResult) -> Result<()> {
    let runs: Vec<_> = result
        .runs
        .iter()
        .map(|r| {
            json!({
                "run_id": r.run_id,
                "algorithm": r.algorithm.as_str(),
                "steps": r.steps,
                "state": r.state,
                "repeat": r.repeat,
                "target": r.target,
                "seeds": r.seeds,
                "oracle_evaluations": r.oracle_evaluations,
            })
        })
        .collect();
    let mut meta = json!({
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": result.config.kind.as_str(),
        "config_hash": result.config.hash(),
        "master_seed": result.config.seed,
        "config": result.config,
        "restart_seeding": "restart designs continue the optimizer stream of the run",
        "runs": runs,
    });
    if result.config.kind == super::ExperimentKind::Perturb {
        meta["runs_without_perturbation"] = result.runs_without_perturbation.into();
        meta["mean_ratio"] = result.mean_ratio().into();
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &meta)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes every output of `result` under `dir`. Stops at the first I/O
/// failure; files written before it are left in place.
pub fn write_experiment(dir: &Path, result: &ExperimentResult) -> Result<OutputFiles> {
    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::Io(format!("{}: {e}", runs_dir.display())))?;
    let mut files = OutputFiles::default();
    for r in &result.runs {
        let p = runs_dir.join(format!("{}.jsonl", r.run_id));
        write_trace_jsonl(&p, &r.trace)?;
        files.traces.push(p);
    }
    if result.config.kind == super::ExperimentKind::Perturb {
        let events_dir = dir.join("events");
        fs::create_dir_all(&events_dir)?;
        for r in &result.runs {
            let p = events_dir.join(format!("{}.jsonl", r.run_id));
            let mut w = BufWriter::new(File::create(&p)?);
            for e in &r.events {
                let line = EventLine {
                    evaluation: e.evaluation,
                    step: e.handle.step,
                    angle: e.handle.angle,
                    offset_deg: e.offset.to_degrees(),
                };
                serde_json::to_writer(&mut w, &line)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            files.events.push(p);
        }
    }
    let summary = dir.join("summary.csv");
    write_summary(&summary, result)?;
    files.tables.push(summary);
    if !result.curves.is_empty() {
        let p = dir.join("curves.csv");
        write_curves(&p, result)?;
        files.tables.push(p);
    }
    if !result.sweep.is_empty() {
        let p = dir.join("sweep.csv");
        write_sweep(&p, result)?;
        files.tables.push(p);
    }
    if result.config.kind == super::ExperimentKind::Perturb {
        let p = dir.join("ratios.csv");
        write_ratios(&p, result)?;
        files.tables.push(p);
    }
    files.metadata = dir.join("metadata.json");
    write_metadata(&files.metadata, result)?;
    Ok(files)
}
