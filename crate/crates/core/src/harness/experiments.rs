//! The four experiment families. Every run owns its oracle and RNG streams,
//! so runs can execute on the rayon pool in any order and still produce
//! the same outputs.

use rayon::prelude::*;
use serde_json::json;

use super::config::{Algorithm, ExperimentConfig, ExperimentKind, ForcedOffset};
use super::seeds::RunSeeds;
use super::targets::{perturbation_defaults, TargetSpec};
use super::{aggregate, check_degradation, pad_curve, AggregateCurve, Decision};
use crate::baselines::{powell, random_search, BaselineConfig};
use crate::error::Result;
use crate::oracle::{
    Handle, NoiseModel, Oracle, OracleConfig, PerturbationConfig, PerturbationEvent,
};
use crate::surrogate::{OptimizerConfig, SurrogateOptimizer};
use crate::trace::{EventTag, RunStatus, Trace, TraceRecorder};
use crate::walk::{param_count, TargetState};

/// One finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub steps: usize,
    pub state: usize,
    pub repeat: usize,
    pub target: String,
    pub seeds: RunSeeds,
    pub trace: Trace,
    /// Hidden-offset changes, for post-hoc analysis only.
    pub events: Vec<PerturbationEvent>,
    pub oracle_evaluations: u64,
    /// Perturbation probability and restart threshold in force.
    pub probability: Option<f64>,
    pub threshold: Option<f64>,
    /// Sweep: evaluation at which the noisy fidelity first reached the level.
    pub reached_at: Option<u64>,
    pub stall_restarts: usize,
    pub degradation_restarts: usize,
}

impl RunOutcome {
    pub fn best_curve(&self) -> Vec<f64> {
        self.trace.best_curve()
    }
}

/// Fidelity recovery around one perturbation instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRatio {
    pub run_id: String,
    /// Evaluation after which the kick happened.
    pub evaluation: u64,
    pub before: f64,
    pub after: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub steps: usize,
    pub n_par: usize,
    pub runs: usize,
    /// Runs that hit the budget cap; excluded from the mean.
    pub failures: usize,
    pub mean_evaluations: Option<f64>,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
    /// Mean best-so-far cost per algorithm.
    pub curves: Vec<(Algorithm, AggregateCurve)>,
    pub sweep: Vec<SweepRow>,
    pub ratios: Vec<PerturbationRatio>,
    pub runs_without_perturbation: usize,
}

impl ExperimentResult {
    fn new(config: &ExperimentConfig, runs: Vec<RunOutcome>) -> Self {
        Self {
            config: config.clone(),
            runs,
            curves: Vec::new(),
            sweep: Vec::new(),
            ratios: Vec::new(),
            runs_without_perturbation: 0,
        }
    }

    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.trace.is_completed())
    }

    pub fn mean_ratio(&self) -> Option<f64> {
        (!self.ratios.is_empty())
            .then(|| self.ratios.iter().map(|r| r.ratio).sum::<f64>() / self.ratios.len() as f64)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.kind {
        ExperimentKind::Engineer => run_engineering(config),
        ExperimentKind::Perturb => run_perturbation(config),
        ExperimentKind::Sweep => run_sweep(config),
        ExperimentKind::Compare => run_comparison(config),
    }
}

struct Job {
    algorithm: Algorithm,
    steps: usize,
    state: usize,
    repeat: usize,
    spec: TargetSpec,
    seeds: RunSeeds,
}

impl Job {
    fn run_id(&self, kind: ExperimentKind) -> String {
        let mut id = format!("{}_n{}_s{:03}_r{:03}", kind.as_str(), self.steps, self.state, self.repeat);
        if kind == ExperimentKind::Compare {
            id.push('_');
            id.push_str(self.algorithm.as_str());
        }
        id
    }

    fn target_label(&self) -> String {
        match self.spec {
            TargetSpec::Random { .. } => format!("random[{}]", self.seeds.target),
            _ => self.spec.to_string(),
        }
    }
}

fn jobs(config: &ExperimentConfig, steps_list: &[usize], algorithms: &[Algorithm]) -> Vec<Job> {
    let mut out = Vec::new();
    for &steps in steps_list {
        let mut state = 0;
        for spec in &config.targets {
            for _ in 0..spec.count() {
                for repeat in 0..config.repeats {
                    let seeds = RunSeeds::derive(config.seed, config.kind.id(), steps, state, repeat);
                    for &algorithm in algorithms {
                        out.push(Job {
                            algorithm,
                            steps,
                            state,
                            repeat,
                            spec: spec.clone(),
                            seeds,
                        });
                    }
                }
                state += 1;
            }
        }
    }
    out
}

fn execute<F>(config: &ExperimentConfig, jobs: Vec<Job>, f: F) -> Result<Vec<RunOutcome>>
where
    F: Fn(&Job) -> Result<RunOutcome> + Sync,
{
    if config.parallel {
        jobs.par_iter().map(&f).collect()
    } else {
        jobs.iter().map(&f).collect()
    }
}

fn noise_model(config: &ExperimentConfig) -> NoiseModel {
    if config.noiseless {
        NoiseModel::noiseless()
    } else {
        NoiseModel::poisson(config.noise_lambda)
    }
}

fn to_radians(theta_deg: &[f64]) -> Vec<f64> {
    theta_deg.iter().map(|d| d.to_radians()).collect()
}

fn bounds(config: &ExperimentConfig, steps: usize) -> Vec<(f64, f64)> {
    config.bounds(steps)
}

fn rbf_config(config: &ExperimentConfig, job: &Job) -> OptimizerConfig {
    config
        .rbf
        .build(bounds(config, job.steps), config.budget, job.seeds.optimizer)
}

struct CheckProtocol {
    threshold: f64,
    period: usize,
}

#[derive(Default)]
struct DriveOptions<'a> {
    protocol: Option<CheckProtocol>,
    stop_cost: Option<f64>,
    forced: &'a [ForcedOffset],
}

struct Driven {
    trace: Trace,
    reached_at: Option<u64>,
    stall_restarts: usize,
    degradation_restarts: usize,
}

/// Applies the forced offsets due after the oracle's current evaluation.
fn apply_forced(
    oracle: &mut Oracle,
    forced: &[ForcedOffset],
    next: &mut usize,
    recorder: &mut TraceRecorder,
) -> Result<()> {
    while *next < forced.len() && forced[*next].after_eval <= oracle.evaluations() {
        let f = &forced[*next];
        oracle.inject_offset(Handle::new(f.step, f.angle), f.offset_deg.to_radians())?;
        recorder.merge_last(EventTag::Perturbation);
        *next += 1;
    }
    Ok(())
}

/// Runs the surrogate optimizer against `oracle` until `budget` oracle
/// evaluations have been spent, interleaving degradation checks when a
/// protocol is given.
fn drive_rbf(
    oracle: &mut Oracle,
    opt_config: OptimizerConfig,
    budget: usize,
    options: DriveOptions<'_>,
    mut recorder: TraceRecorder,
) -> Result<Driven> {
    let mut opt = SurrogateOptimizer::new(opt_config)?;
    let mut forced = options.forced.to_vec();
    forced.sort_by_key(|f| f.after_eval);
    let mut next_forced = 0;
    let mut since_check = 0;
    let mut degradation_restarts = 0;
    let mut reached_at = None;
    let mut status = RunStatus::Completed;

    while (oracle.evaluations() as usize) < budget {
        let events_before = oracle.perturbation_events().len();
        let due = options
            .protocol
            .as_ref()
            .filter(|p| since_check >= p.period)
            .and_then(|p| opt.incumbent().map(|inc| (p.threshold, inc.clone())));
        if let Some((threshold, incumbent)) = due {
            since_check = 0;
            let c_new = match oracle.cost(&to_radians(&incumbent.point)) {
                Ok(c) => c,
                Err(e) => {
                    status = RunStatus::Aborted(e.to_string());
                    break;
                }
            };
            let restart = check_degradation(c_new, incumbent.value, threshold) == Decision::Restart;
            let tag = if restart {
                EventTag::DegradationRestart
            } else {
                EventTag::DegradationCheck
            };
            recorder.record_passive(&incumbent.point, c_new, tag);
            if oracle.perturbation_events().len() > events_before {
                recorder.merge_last(EventTag::Perturbation);
            }
            if restart {
                degradation_restarts += 1;
                opt.hard_restart();
                recorder.reset_best();
            }
            apply_forced(oracle, &forced, &mut next_forced, &mut recorder)?;
            continue;
        }

        let proposal = opt.ask();
        let value = match oracle.cost(&to_radians(&proposal.point)) {
            Ok(c) => c,
            Err(e) => {
                status = RunStatus::Aborted(e.to_string());
                break;
            }
        };
        recorder.record(&proposal.point, value, proposal.tag);
        if oracle.perturbation_events().len() > events_before {
            recorder.merge_last(EventTag::Perturbation);
        }
        if let Err(e) = opt.tell(value) {
            status = RunStatus::Aborted(e.to_string());
            break;
        }
        since_check += 1;
        apply_forced(oracle, &forced, &mut next_forced, &mut recorder)?;
        if options.stop_cost.is_some_and(|s| value <= s) {
            reached_at = Some(oracle.evaluations());
            break;
        }
    }
    let trace = recorder.finish(status);
    Ok(Driven {
        trace,
        reached_at,
        stall_restarts: opt.stall_restarts(),
        degradation_restarts,
    })
}

fn base_trace(config: &ExperimentConfig, job: &Job, run_id: &str) -> Trace {
    let seed = match job.algorithm {
        Algorithm::Rbf | Algorithm::RandomSearch => job.seeds.optimizer,
        Algorithm::Powell => job.seeds.oracle,
    };
    let mut t = Trace::new(job.algorithm.as_str(), seed);
    let m = &mut t.metadata;
    m.insert("run_id".into(), run_id.into());
    m.insert("experiment".into(), config.kind.as_str().into());
    m.insert("target".into(), job.target_label().into());
    m.insert("target_spec".into(), serde_json::to_value(&job.spec).unwrap_or_default());
    m.insert("steps".into(), job.steps.into());
    m.insert("state".into(), job.state.into());
    m.insert("repeat".into(), job.repeat.into());
    m.insert("seeds".into(), serde_json::to_value(job.seeds).unwrap_or_default());
    m.insert("master_seed".into(), config.seed.into());
    m.insert("config_hash".into(), config.hash().into());
    t
}

fn resolve_target(job: &Job) -> Result<TargetState> {
    job.spec.resolve(job.steps, job.seeds.target)
}

fn finalize(
    oracle: &Oracle,
    job: &Job,
    run_id: String,
    mut trace: Trace,
) -> Result<RunOutcome> {
    if let Some(theta) = &trace.summary.best_theta {
        trace.summary.best_exact_fidelity = Some(oracle.evaluate_exact(&to_radians(theta))?);
    }
    Ok(RunOutcome {
        run_id,
        algorithm: job.algorithm,
        steps: job.steps,
        state: job.state,
        repeat: job.repeat,
        target: job.target_label(),
        seeds: job.seeds,
        trace,
        events: oracle.perturbation_events().to_vec(),
        oracle_evaluations: oracle.evaluations(),
        probability: None,
        threshold: None,
        reached_at: None,
        stall_restarts: 0,
        degradation_restarts: 0,
    })
}

fn oracle_config(config: &ExperimentConfig, job: &Job, target: TargetState) -> Result<OracleConfig> {
    let mut oc = OracleConfig::new(job.steps, target, job.seeds.oracle);
    oc.noise = noise_model(config);
    oc.projection_axis = config.projection_axis.vector()?;
    Ok(oc)
}

fn plain_oracle(config: &ExperimentConfig, job: &Job) -> Result<Oracle> {
    Oracle::new(oracle_config(config, job, resolve_target(job)?)?)
}

fn engineering_run(config: &ExperimentConfig, job: &Job, stop_cost: Option<f64>) -> Result<RunOutcome> {
    let kind = config.kind;
    let run_id = job.run_id(kind);
    let mut oracle = plain_oracle(config, job)?;
    let recorder = TraceRecorder::new(base_trace(config, job, &run_id));
    let driven = drive_rbf(
        &mut oracle,
        rbf_config(config, job),
        config.budget,
        DriveOptions {
            stop_cost,
            ..DriveOptions::default()
        },
        recorder,
    )?;
    let mut out = finalize(&oracle, job, run_id, driven.trace)?;
    out.reached_at = driven.reached_at;
    out.stall_restarts = driven.stall_restarts;
    Ok(out)
}

fn curve_for(runs: &[RunOutcome], algorithm: Algorithm, len: usize) -> Result<AggregateCurve> {
    let mut states: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut current: Option<usize> = None;
    for r in runs.iter().filter(|r| r.algorithm == algorithm) {
        if current != Some(r.state) {
            states.push(Vec::new());
            current = Some(r.state);
        }
        states
            .last_mut()
            .expect("pushed above")
            .push(pad_curve(&r.best_curve(), len));
    }
    aggregate(&states)
}

/// Surrogate optimization of every (target, repeat) pair without drift.
pub fn run_engineering(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let jobs = jobs(config, &[config.steps], &[Algorithm::Rbf]);
    let runs = execute(config, jobs, |job| engineering_run(config, job, None))?;
    let mut result = ExperimentResult::new(config, runs);
    if result.all_completed() {
        result.curves = vec![(Algorithm::Rbf, curve_for(&result.runs, Algorithm::Rbf, config.budget)?)];
    }
    Ok(result)
}

/// Optimization under hidden drift with periodic degradation checks.
pub fn run_perturbation(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let jobs = jobs(config, &[config.steps], &[Algorithm::Rbf]);
    let runs = execute(config, jobs, |job| {
        let run_id = job.run_id(config.kind);
        let target = resolve_target(job)?;
        let (q_default, t_default) = perturbation_defaults(&target);
        let q = config.perturbation.probability.unwrap_or(q_default);
        let t = config.restart_threshold.unwrap_or(t_default);
        let mut oc = oracle_config(config, job, target)?;
        oc.perturbation = PerturbationConfig {
            probability: q,
            offset_mean: config.perturbation.mean_deg.to_radians(),
            offset_std: config.perturbation.std_deg.to_radians(),
            handles: config.perturbation.handles(),
            enabled: q > 0.0,
        };
        let mut oracle = Oracle::new(oc)?;
        let mut trace = base_trace(config, job, &run_id);
        trace.metadata.insert("probability".into(), q.into());
        trace.metadata.insert("threshold".into(), t.into());
        trace
            .metadata
            .insert("restart_seeding".into(), "continues optimizer stream".into());
        let recorder = TraceRecorder::new(trace);
        let driven = drive_rbf(
            &mut oracle,
            rbf_config(config, job),
            config.budget,
            DriveOptions {
                protocol: Some(CheckProtocol {
                    threshold: t,
                    period: config.check_period,
                }),
                stop_cost: None,
                forced: &config.perturbation.forced,
            },
            recorder,
        )?;
        let mut out = finalize(&oracle, job, run_id, driven.trace)?;
        out.probability = Some(q);
        out.threshold = Some(t);
        out.stall_restarts = driven.stall_restarts;
        out.degradation_restarts = driven.degradation_restarts;
        Ok(out)
    })?;
    let mut result = ExperimentResult::new(config, runs);
    for r in &result.runs {
        let ratios = perturbation_ratios(&r.run_id, &r.trace, &r.events);
        if ratios.is_empty() {
            result.runs_without_perturbation += 1;
        }
        result.ratios.extend(ratios);
    }
    Ok(result)
}

/// `F_best` after each perturbation instant over `F_best` just before it.
/// "After" is the best reached before the next perturbation instant, or by
/// the end of the run.
pub fn perturbation_ratios(
    run_id: &str,
    trace: &Trace,
    events: &[PerturbationEvent],
) -> Vec<PerturbationRatio> {
    let n = trace.len() as u64;
    let mut instants: Vec<u64> = events
        .iter()
        .map(|e| e.evaluation)
        .filter(|&e| e >= 1 && e <= n)
        .collect();
    instants.dedup();
    let best_at = |e: u64| 1.0 - trace.records[(e - 1) as usize].best;
    instants
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let before = best_at(e);
            let after = best_at(instants.get(i + 1).copied().unwrap_or(n));
            let ratio = if before > 0.0 { after / before } else { f64::NAN };
            PerturbationRatio {
                run_id: run_id.to_string(),
                evaluation: e,
                before,
                after,
                ratio,
            }
        })
        .filter(|r| r.ratio.is_finite())
        .collect()
}

/// Evaluations needed to reach the noisy fidelity level, per walk length.
pub fn run_sweep(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let stop = 1.0 - config.sweep_fidelity;
    let jobs = jobs(config, &config.sweep_steps, &[Algorithm::Rbf]);
    let runs = execute(config, jobs, |job| {
        let mut out = engineering_run(config, job, Some(stop))?;
        out.trace
            .metadata
            .insert("sweep_fidelity".into(), json!(config.sweep_fidelity));
        Ok(out)
    })?;
    let mut result = ExperimentResult::new(config, runs);
    for &steps in &config.sweep_steps {
        let group: Vec<&RunOutcome> = result.runs.iter().filter(|r| r.steps == steps).collect();
        let hits: Vec<f64> = group.iter().filter_map(|r| r.reached_at).map(|e| e as f64).collect();
        let k = hits.len() as f64;
        let mean = (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / k);
        let std_error = mean.map(|m| {
            if hits.len() < 2 {
                0.0
            } else {
                (hits.iter().map(|h| (h - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            }
        });
        result.sweep.push(SweepRow {
            steps,
            n_par: param_count(steps),
            runs: group.len(),
            failures: group.len() - hits.len(),
            mean_evaluations: mean,
            std_error,
        });
    }
    Ok(result)
}

/// Surrogate, random search and Powell on identical targets and oracle seeds.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let jobs = jobs(config, &[config.steps], &config.algorithms);
    let runs = execute(config, jobs, |job| {
        if job.algorithm == Algorithm::Rbf {
            return engineering_run(config, job, None);
        }
        let run_id = job.run_id(config.kind);
        let mut oracle = plain_oracle(config, job)?;
        let mut bc = BaselineConfig::new(bounds(config, job.steps), config.budget, job.seeds.optimizer);
        bc.line_tolerance = config.powell.line_tolerance;
        bc.max_line_evals = config.powell.max_line_evals;
        let cost = |theta: &[f64]| oracle.cost(&to_radians(theta));
        let mut trace = match job.algorithm {
            Algorithm::RandomSearch => random_search(cost, &bc)?,
            Algorithm::Powell => powell(cost, &bc)?,
            Algorithm::Rbf => unreachable!("handled above"),
        };
        let base = base_trace(config, job, &run_id);
        for (k, v) in base.metadata {
            trace.metadata.entry(k).or_insert(v);
        }
        finalize(&oracle, job, run_id, trace)
    })?;
    let mut result = ExperimentResult::new(config, runs);
    if result.all_completed() {
        for &a in &config.algorithms {
            result.curves.push((a, curve_for(&result.runs, a, config.budget)?));
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::for_kind(kind);
        c.targets = vec![TargetSpec::Basis(1)];
        c.repeats = 2;
        c.budget = 40;
        c.seed = 11;
        c
    }

    #[test]
    fn engineering_traces_have_budget_records() {
        let r = run_engineering(&small(ExperimentKind::Engineer)).unwrap();
        assert_eq!(r.runs.len(), 2);
        for run in &r.runs {
            assert_eq!(run.trace.len(), 40);
            assert_eq!(run.oracle_evaluations, 40);
            let e: Vec<u64> = run.trace.records.iter().map(|r| r.eval).collect();
            assert!(e.windows(2).all(|w| w[1] == w[0] + 1));
        }
        assert_eq!(r.curves[0].1.mean.len(), 40);
    }

    #[test]
    fn comparison_pairs_targets_and_seeds() {
        let mut c = small(ExperimentKind::Compare);
        c.targets = vec![TargetSpec::Random { count: 2 }];
        c.repeats = 1;
        let r = run_comparison(&c).unwrap();
        assert_eq!(r.runs.len(), 6);
        for chunk in r.runs.chunks(3) {
            assert!(chunk.iter().all(|x| x.target == chunk[0].target && x.seeds == chunk[0].seeds));
        }
        for (_, curve) in &r.curves {
            assert!(curve.mean.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn perturbation_checks_consume_evaluations() {
        let mut c = small(ExperimentKind::Perturb);
        c.budget = 60;
        c.perturbation.probability = Some(0.05);
        let r = run_perturbation(&c).unwrap();
        for run in &r.runs {
            assert_eq!(run.trace.len(), 60);
            assert_eq!(run.oracle_evaluations, 60);
            let checks = run
                .trace
                .records
                .iter()
                .filter(|x| {
                    matches!(x.event, EventTag::DegradationCheck | EventTag::DegradationRestart)
                })
                .count();
            assert!(checks >= 3, "only {checks} checks");
        }
    }

    #[test]
    fn ratio_uses_best_before_next_instant() {
        let mut t = Trace::new("x", 0);
        for (i, b) in [0.5, 0.2, 0.6, 0.1].iter().enumerate() {
            t.records.push(crate::trace::IterationRecord {
                eval: i as u64 + 1,
                theta: vec![],
                cost: *b,
                best: *b,
                event: EventTag::None,
                wall_time: 0.0,
            });
        }
        let ev = |e| PerturbationEvent {
            evaluation: e,
            handle: Handle::new(2, 2),
            offset: 0.1,
        };
        let r = perturbation_ratios("x", &t, &[ev(2), ev(2), ev(3)]);
        assert_eq!(r.len(), 2);
        assert!((r[0].before - 0.8).abs() < 1e-12 && (r[0].after - 0.4).abs() < 1e-12);
        assert!((r[1].after - 0.9).abs() < 1e-12);
    }
}
