//! RBF surrogate global optimizer over a box.
//!
//! The optimizer is an ask/tell state machine so that callers can interleave
//! their own evaluations (degradation checks) and force restarts. [`run`]
//! drives it against a plain cost function for a fixed budget.
//!
//! Each restart segment starts with a latin hypercube batch. After that the
//! proposals cycle through `num_global_searches` weighted global steps and
//! one local step; every `refinement_frequency` cycle positions a
//! trust-region step is inserted. A segment is abandoned after more than
//! `max_stalled_iterations` evaluations without a strict improvement of the
//! best value.

mod lhd;
mod model;
mod rbf;
mod refine;
mod search;
mod selection;

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use lhd::{latin_hypercube, MAXIMIN_CANDIDATES};
pub use model::{fit_surrogate, loo_residuals, SurrogateModel};
pub use rbf::{rbf_value, Kernel, RbfKind, DEFAULT_GAMMA};
pub use refine::{box_minimizer, RefineProposal, TrustRegion};
pub use search::{propose_global, propose_local, SearchSettings};
pub use selection::{select_model_loo, LOO_WINDOW};

use crate::error::{Error, Result};
use crate::trace::{EventTag, RunStatus, Trace, TraceRecorder};

pub const DEFAULT_GLOBAL_WEIGHTS: [f64; 5] = [0.95, 0.75, 0.5, 0.3, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub bounds: Vec<(f64, f64)>,
    pub init_points: usize,
    pub num_global_searches: usize,
    pub global_weights: Vec<f64>,
    pub max_stalled_iterations: usize,
    pub refinement_frequency: usize,
    pub budget: usize,
    pub min_distance: f64,
    pub ridge: f64,
    pub candidate_pool: usize,
    pub model_reselect_period: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(bounds: Vec<(f64, f64)>, budget: usize, seed: u64) -> Self {
        let n = bounds.len();
        Self {
            init_points: 2 * (n + 1),
            num_global_searches: 5,
            global_weights: DEFAULT_GLOBAL_WEIGHTS.to_vec(),
            max_stalled_iterations: 100,
            refinement_frequency: 3,
            budget,
            min_distance: 1e-6,
            ridge: 1e-8,
            candidate_pool: (500 * n).min(20_000),
            model_reselect_period: 25,
            gamma: DEFAULT_GAMMA,
            seed,
            bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.bounds.is_empty() {
            return bad("bounds must not be empty");
        }
        if self.bounds.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return bad("every bound must satisfy lo < hi");
        }
        if self.init_points == 0 {
            return bad("init_points must be positive");
        }
        if self.budget < self.init_points {
            return bad("budget must be at least init_points");
        }
        if self.num_global_searches > 0 && self.global_weights.is_empty() {
            return bad("global_weights must not be empty");
        }
        if self.global_weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return bad("global weights must lie in [0, 1]");
        }
        if self.refinement_frequency == 0 || self.model_reselect_period == 0 {
            return bad("refinement_frequency and model_reselect_period must be positive");
        }
        if !(self.min_distance > 0.0) || !(self.ridge >= 0.0) || !(self.gamma > 0.0) {
            return bad("min_distance and gamma must be positive, ridge nonnegative");
        }
        if self.candidate_pool < 2 {
            return bad("candidate_pool must be at least 2");
        }
        Ok(())
    }

    fn settings(&self) -> SearchSettings {
        SearchSettings::new(self.candidate_pool, self.min_distance)
    }
}

/// A point the optimizer wants evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    /// In the caller's units.
    pub point: Vec<f64>,
    pub scaled: Vec<f64>,
    pub tag: EventTag,
}

/// Best evaluation seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub point: Vec<f64>,
    pub value: f64,
    /// 1-based index of the evaluation that produced it.
    pub evaluation: u64,
}

pub struct SurrogateOptimizer {
    config: OptimizerConfig,
    rng: ChaCha8Rng,
    // current restart segment
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    pending: VecDeque<(Vec<f64>, EventTag)>,
    kernel: Kernel,
    evals_since_selection: Option<usize>,
    cycle_position: usize,
    positions_done: usize,
    refine_due: bool,
    trust_region: TrustRegion,
    // persists across stall restarts
    incumbent: Option<Incumbent>,
    stall: usize,
    stall_restarts: usize,
    evaluations: u64,
    awaiting: Option<Proposal>,
    fit_failures: usize,
}

impl SurrogateOptimizer {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let dim = config.dim();
        let mut opt = Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            points: Vec::new(),
            values: Vec::new(),
            pending: VecDeque::new(),
            kernel: Kernel {
                kind: RbfKind::Cubic,
                gamma: config.gamma,
            },
            evals_since_selection: None,
            cycle_position: 0,
            positions_done: 0,
            refine_due: false,
            trust_region: TrustRegion::new(dim),
            incumbent: None,
            stall: 0,
            stall_restarts: 0,
            evaluations: 0,
            awaiting: None,
            fit_failures: 0,
            config,
        };
        opt.start_segment(EventTag::LhdInit);
        Ok(opt)
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn incumbent(&self) -> Option<&Incumbent> {
        self.incumbent.as_ref()
    }

    pub fn stall_counter(&self) -> usize {
        self.stall
    }

    pub fn stall_restarts(&self) -> usize {
        self.stall_restarts
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn trust_region(&self) -> &TrustRegion {
        &self.trust_region
    }

    /// Scaled points of the current segment.
    pub fn segment_points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn start_segment(&mut self, first_tag: EventTag) {
        self.points.clear();
        self.values.clear();
        self.pending.clear();
        self.evals_since_selection = None;
        self.cycle_position = 0;
        self.positions_done = 0;
        self.refine_due = false;
        self.trust_region.reset();
        let batch = latin_hypercube(self.config.init_points, self.config.dim(), &mut self.rng);
        for (i, p) in batch.into_iter().enumerate() {
            let tag = if i == 0 { first_tag } else { EventTag::LhdInit };
            self.pending.push_back((p, tag));
        }
    }

    /// Discards all model state and the best record and starts over with a
    /// fresh design. Used when the objective itself has changed.
    pub fn hard_restart(&mut self) {
        self.incumbent = None;
        self.stall = 0;
        self.awaiting = None;
        self.start_segment(EventTag::LhdInit);
    }

    fn unscale(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.config.bounds)
            .map(|(&s, &(lo, hi))| (lo + s * (hi - lo)).clamp(lo, hi))
            .collect()
    }

    fn segment_best(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            if best.is_none_or(|b| *v < self.values[b]) {
                best = Some(i);
            }
        }
        best
    }

    fn fit(&mut self) -> Option<SurrogateModel> {
        let n = self.config.dim();
        let reselect = match self.evals_since_selection {
            None => true,
            Some(c) => c >= self.config.model_reselect_period,
        };
        if reselect {
            self.kernel = select_model_loo(
                &self.points,
                &self.values,
                &RbfKind::ALL,
                self.kernel,
                self.config.ridge,
            );
            self.evals_since_selection = Some(0);
        }
        let mut order = vec![self.kernel.kind];
        order.extend(RbfKind::ALL.iter().filter(|&&k| k != self.kernel.kind));
        for kind in order {
            if self.points.len() < kind.poly_dim(n) {
                continue;
            }
            let kernel = Kernel {
                kind,
                gamma: self.config.gamma,
            };
            let mut ridge = self.config.ridge;
            for _ in 0..3 {
                match fit_surrogate(&self.points, &self.values, kernel, ridge) {
                    Ok(m) => return Some(m),
                    Err(_) => ridge = (ridge * 1e3).max(1e-8),
                }
            }
        }
        self.fit_failures += 1;
        None
    }

    /// Next point to evaluate. Repeated calls without [`tell`](Self::tell)
    /// return the same proposal.
    pub fn ask(&mut self) -> Proposal {
        if let Some(p) = &self.awaiting {
            return p.clone();
        }
        let (scaled, tag) = self.next_scaled();
        let proposal = Proposal {
            point: self.unscale(&scaled),
            scaled,
            tag,
        };
        self.awaiting = Some(proposal.clone());
        proposal
    }

    fn next_scaled(&mut self) -> (Vec<f64>, EventTag) {
        if let Some(p) = self.pending.pop_front() {
            return p;
        }
        let settings = self.config.settings();
        let best_idx = self.segment_best().expect("segment has points after its design");

        if self.refine_due {
            self.refine_due = false;
            if self.points.len() > self.config.dim() {
                if let RefineProposal::Step(x) = self.trust_region.propose(
                    &self.points,
                    &self.values,
                    best_idx,
                    self.config.min_distance,
                ) {
                    return (x, EventTag::Refine);
                }
            }
        }

        let best = self.points[best_idx].clone();
        let Some(model) = self.fit() else {
            let p = propose_global_without_model(&self.points, &settings, &mut self.rng);
            return (p, EventTag::Global);
        };
        if self.cycle_position < self.config.num_global_searches {
            let w = self.config.global_weights[self.cycle_position % self.config.global_weights.len()];
            let p = propose_global(&model, &self.points, &best, w, &settings, &mut self.rng);
            (p, EventTag::Global)
        } else {
            let p = propose_local(&model, &self.points, &best, &settings, &mut self.rng);
            (p, EventTag::Local)
        }
    }

    /// Reports the cost of the last asked point. Returns `true` when this
    /// evaluation triggered a stall restart.
    pub fn tell(&mut self, value: f64) -> Result<bool> {
        let proposal = self
            .awaiting
            .take()
            .ok_or_else(|| Error::InvalidArgument("tell without a pending ask".into()))?;
        if !value.is_finite() {
            return Err(Error::CostFailure(format!("non-finite cost {value}")));
        }
        self.evaluations += 1;
        if let Some(c) = self.evals_since_selection.as_mut() {
            *c += 1;
        }

        if self.incumbent.as_ref().is_none_or(|b| value < b.value) {
            self.incumbent = Some(Incumbent {
                point: proposal.point.clone(),
                value,
                evaluation: self.evaluations,
            });
        }
        // stall is judged against the current segment, whose state a restart
        // discards; the incumbent only feeds the reported best
        let segment_best = self.segment_best().map(|i| self.values[i]);
        if segment_best.is_none_or(|b| value < b) {
            self.stall = 0;
        } else {
            self.stall += 1;
        }

        match proposal.tag {
            EventTag::Refine => {
                self.trust_region
                    .update(segment_best.is_none_or(|b| value < b));
            }
            EventTag::Global | EventTag::Local => {
                self.cycle_position = (self.cycle_position + 1) % (self.config.num_global_searches + 1);
                self.positions_done += 1;
                if self.positions_done % self.config.refinement_frequency == 0 {
                    self.refine_due = true;
                }
            }
            _ => {}
        }

        let min_d2 = self.config.min_distance * self.config.min_distance;
        let distinct = self
            .points
            .iter()
            .all(|p| model::squared_distance(p, &proposal.scaled) >= min_d2);
        if distinct {
            self.points.push(proposal.scaled);
            self.values.push(value);
        }

        if self.stall > self.config.max_stalled_iterations {
            self.stall = 0;
            self.stall_restarts += 1;
            self.start_segment(EventTag::StallRestart);
            return Ok(true);
        }
        Ok(false)
    }
}

fn propose_global_without_model(
    history: &[Vec<f64>],
    settings: &SearchSettings,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    use rand::Rng;
    let dim = history.first().map_or(0, Vec::len);
    let mut p: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    for _ in 0..100 {
        let ok = history
            .iter()
            .all(|h| model::squared_distance(h, &p) >= settings.min_distance * settings.min_distance);
        if ok {
            break;
        }
        p = (0..dim).map(|_| rng.random::<f64>()).collect();
    }
    p
}

/// Runs the optimizer for `config.budget` evaluations of `cost`.
pub fn run<F>(config: OptimizerConfig, mut cost: F) -> Result<Trace>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let budget = config.budget;
    let seed = config.seed;
    let mut opt = SurrogateOptimizer::new(config)?;
    let mut recorder = TraceRecorder::new(Trace::new("rbf", seed));
    while (opt.evaluations() as usize) < budget {
        let proposal = opt.ask();
        let value = match cost(&proposal.point) {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                return Ok(recorder.finish(RunStatus::Aborted(format!("non-finite cost {v}"))));
            }
            Err(e) => return Ok(recorder.finish(RunStatus::Aborted(e.to_string()))),
        };
        recorder.record(&proposal.point, value, proposal.tag);
        opt.tell(value)?;
    }
    Ok(recorder.finish(RunStatus::Completed))
}
