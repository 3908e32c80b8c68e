//! Experiment orchestration: the degradation-check protocol, the four
//! experiment families, curve aggregation and persistence.

mod config;
mod experiments;
mod output;
mod seeds;
mod targets;

pub use config::{
    Algorithm, ExperimentConfig, ExperimentKind, ForcedOffset, PerturbationSettings,
    PowellSettings, ProjectionAxis, RbfSettings,
};
pub use experiments::{
    perturbation_ratios, run_comparison, run_engineering, run_experiment, run_perturbation,
    run_sweep, ExperimentResult, PerturbationRatio, RunOutcome, SweepRow,
};
pub use output::{read_trace_jsonl, write_experiment, write_trace_jsonl, OutputFiles};
pub use seeds::{derive_seed, RunSeeds};
pub use targets::{perturbation_defaults, TargetSpec, PERTURBATION_TABLE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Restart,
}

/// Restart iff `c_new > c_sampled + t`.
pub fn check_degradation(c_new: f64, c_sampled: f64, t: f64) -> Decision {
    if c_new > c_sampled + t {
        Decision::Restart
    } else {
        Decision::Continue
    }
}

/// Mean curve and standard error across states.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
}

/// `states[s][r]` is the best-so-far curve of repeat `r` on state `s`.
/// Repeats are averaged within each state first, then the per-state curves
/// are averaged; the spread is the standard error of that mean.
pub fn aggregate(states: &[Vec<Vec<f64>>]) -> Result<AggregateCurve> {
    let len = states
        .iter()
        .flatten()
        .map(Vec::len)
        .next()
        .ok_or_else(|| Error::InvalidArgument("no traces to aggregate".into()))?;
    if states.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("state without repeats".into()));
    }
    for c in states.iter().flatten() {
        if c.len() != len {
            return Err(Error::LengthMismatch(len, c.len()));
        }
    }
    let per_state: Vec<Vec<f64>> = states
        .iter()
        .map(|reps| {
            (0..len)
                .map(|i| reps.iter().map(|c| c[i]).sum::<f64>() / reps.len() as f64)
                .collect()
        })
        .collect();
    let s = per_state.len() as f64;
    let mut mean = vec![0.0; len];
    let mut sem = vec![0.0; len];
    for i in 0..len {
        let m = per_state.iter().map(|c| c[i]).sum::<f64>() / s;
        mean[i] = m;
        if per_state.len() > 1 {
            let var = per_state.iter().map(|c| (c[i] - m).powi(2)).sum::<f64>() / (s - 1.0);
            sem[i] = (var / s).sqrt();
        }
    }
    Ok(AggregateCurve { mean, sem })
}

/// Extends a best-so-far curve to `len` with its last value.
pub fn pad_curve(curve: &[f64], len: usize) -> Vec<f64> {
    let mut c = curve.to_vec();
    if let Some(&last) = curve.last() {
        c.resize(len.max(curve.len()), last);
    }
    c
}
