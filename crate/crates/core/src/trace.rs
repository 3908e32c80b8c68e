//! Per-evaluation log shared by every optimizer and the experiment harness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    None,
    LhdInit,
    Global,
    Local,
    Refine,
    StallRestart,
    DegradationCheck,
    DegradationRestart,
    Perturbation,
}

impl EventTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EventTag::None => "none",
            EventTag::LhdInit => "lhd_init",
            EventTag::Global => "global",
            EventTag::Local => "local",
            EventTag::Refine => "refine",
            EventTag::StallRestart => "stall_restart",
            EventTag::DegradationCheck => "degradation_check",
            EventTag::DegradationRestart => "degradation_restart",
            EventTag::Perturbation => "perturbation",
        }
    }

    // higher wins when several things happen on one evaluation
    fn precedence(self) -> u8 {
        match self {
            EventTag::DegradationRestart => 6,
            EventTag::DegradationCheck => 5,
            EventTag::StallRestart => 4,
            EventTag::Perturbation => 3,
            EventTag::None => 0,
            _ => 1,
        }
    }

    /// The tag to keep when `other` also applies to the same evaluation.
    pub fn merge(self, other: EventTag) -> EventTag {
        if other.precedence() > self.precedence() {
            other
        } else {
            self
        }
    }
}

/// One true-cost evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based evaluation index.
    pub eval: u64,
    /// Free parameters in the optimizer's units (degrees for walk runs).
    #[serde(rename = "theta_deg")]
    pub theta: Vec<f64>,
    pub cost: f64,
    pub best: f64,
    pub event: EventTag,
    /// Seconds since the run started. Kept out of serialized traces so that
    /// reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub best_theta: Option<Vec<f64>>,
    pub best_cost: Option<f64>,
    pub best_exact_fidelity: Option<f64>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub records: Vec<IterationRecord>,
    pub summary: TraceSummary,
}

impl Trace {
    pub fn new(optimizer: &str, seed: u64) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("optimizer".into(), optimizer.into());
        metadata.insert("seed".into(), seed.into());
        Self {
            metadata,
            records: Vec::new(),
            summary: TraceSummary {
                best_theta: None,
                best_cost: None,
                best_exact_fidelity: None,
                status: RunStatus::Completed,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best).collect()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best)
    }

    pub fn is_completed(&self) -> bool {
        self.summary.status == RunStatus::Completed
    }
}

/// Appends records while tracking the best value and its point.
#[derive(Debug)]
pub(crate) struct TraceRecorder {
    pub trace: Trace,
    best: Option<(Vec<f64>, f64)>,
    started: std::time::Instant,
}

impl TraceRecorder {
    pub fn new(trace: Trace) -> Self {
        Self {
            trace,
            best: None,
            started: std::time::Instant::now(),
        }
    }

    pub fn record(&mut self, theta: &[f64], cost: f64, event: EventTag) {
        if self.best.as_ref().is_none_or(|(_, b)| cost < *b) {
            self.best = Some((theta.to_vec(), cost));
        }
        let best = self.best.as_ref().map_or(cost, |(_, b)| *b);
        let eval = self.trace.records.len() as u64 + 1;
        self.trace.records.push(IterationRecord {
            eval,
            theta: theta.to_vec(),
            cost,
            best,
            event,
            wall_time: self.started.elapsed().as_secs_f64(),
        });
    }

    /// Records an evaluation that must not move the best-so-far value.
    pub fn record_passive(&mut self, theta: &[f64], cost: f64, event: EventTag) {
        let best = self.best.as_ref().map_or(cost, |(_, b)| *b);
        let eval = self.trace.records.len() as u64 + 1;
        self.trace.records.push(IterationRecord {
            eval,
            theta: theta.to_vec(),
            cost,
            best,
            event,
            wall_time: self.started.elapsed().as_secs_f64(),
        });
    }

    /// Forgets the best record; the next evaluation starts a new one.
    pub fn reset_best(&mut self) {
        self.best = None;
    }

    /// Tags the latest record with `event` as well.
    pub fn merge_last(&mut self, event: EventTag) {
        if let Some(r) = self.trace.records.last_mut() {
            r.event = r.event.merge(event);
        }
    }

    pub fn finish(mut self, status: RunStatus) -> Trace {
        if let Some((theta, cost)) = self.best {
            self.trace.summary.best_theta = Some(theta);
            self.trace.summary.best_cost = Some(cost);
        }
        self.trace.summary.status = status;
        self.trace
    }
}
