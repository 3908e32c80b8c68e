//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure (outputs
//! written so far are kept).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qwopt::harness::{
    aggregate, pad_curve, read_trace_jsonl, run_experiment, write_experiment, ExperimentConfig,
    ExperimentKind, ExperimentResult, ProjectionAxis, TargetSpec,
};
use qwopt::oracle::{NoiseModel, Oracle, OracleConfig};
use qwopt::walk::param_count;
use qwopt::Error;

#[derive(Parser)]
#[command(name = "qwopt", version, about = "Surrogate optimization of quantum-walk state engineering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Engineer target states with the surrogate optimizer.
    Engineer(RunArgs),
    /// Engineering under hidden drift with degradation checks.
    Perturb(RunArgs),
    /// Evaluations to reach the fidelity level versus walk length.
    Sweep(RunArgs),
    /// Surrogate versus random search versus Powell.
    Compare(RunArgs),
    /// Score one explicit parameter vector.
    Eval(EvalArgs),
    /// Aggregate the traces of an existing output directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    noiseless: bool,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Target preset (`|1>`, `SR_1^-1`, `SC_3^-3`, `random:5`); repeatable.
    #[arg(long = "target")]
    targets: Vec<String>,
    /// Run one run at a time.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    target: String,
    /// Comma-separated free angles in degrees.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    noiseless: bool,
    #[arg(long, default_value_t = 1e4)]
    lambda: f64,
    /// Coin projection: up, down or horizontal.
    #[arg(long, default_value = "horizontal")]
    axis: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of an earlier run.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Engineer(a) => run(ExperimentKind::Engineer, a),
        Command::Perturb(a) => run(ExperimentKind::Perturb, a),
        Command::Sweep(a) => run(ExperimentKind::Sweep, a),
        Command::Compare(a) => run(ExperimentKind::Compare, a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn build_config(kind: ExperimentKind, a: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut c = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::for_kind(kind),
    };
    if c.kind != kind {
        return Err(Failure::Config(format!(
            "config is for `{}` but the `{}` command was used",
            c.kind.as_str(),
            kind.as_str()
        )));
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if a.noiseless {
        c.noiseless = true;
    }
    if let Some(s) = a.steps {
        c.steps = s;
        if kind == ExperimentKind::Sweep {
            c.sweep_steps = vec![s];
        }
    }
    if let Some(b) = a.budget {
        c.budget = b;
    }
    if let Some(r) = a.repeats {
        c.repeats = r;
    }
    if !a.targets.is_empty() {
        c.targets = a
            .targets
            .iter()
            .map(|t| t.parse::<TargetSpec>())
            .collect::<Result<_, _>>()?;
    }
    if a.serial {
        c.parallel = false;
    }
    c.validate()?;
    Ok(c)
}

fn run(kind: ExperimentKind, a: RunArgs) -> Result<(), Failure> {
    let config = build_config(kind, &a)?;
    let out = a
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.as_str()));
    let result = run_experiment(&config)?;
    write_experiment(&out, &result)?;
    print_summary(&result, &out);
    if !result.all_completed() {
        return Err(Failure::Runtime("one or more runs aborted; see summary.csv".into()));
    }
    Ok(())
}

fn print_summary(result: &ExperimentResult, out: &Path) {
    println!("{} runs written to {}", result.runs.len(), out.display());
    for (a, c) in &result.curves {
        if let (Some(m), Some(s)) = (c.mean.last(), c.sem.last()) {
            println!("{:>14}: final mean best fidelity {:.4} ± {:.4}", a.as_str(), 1.0 - m, s);
        }
    }
    for r in &result.sweep {
        match (r.mean_evaluations, r.std_error) {
            (Some(m), Some(s)) => println!(
                "steps {} (N_par {}): {:.1} ± {:.1} evaluations, {} of {} runs hit the cap",
                r.steps, r.n_par, m, s, r.failures, r.runs
            ),
            _ => println!("steps {} (N_par {}): no run reached the level", r.steps, r.n_par),
        }
    }
    if let Some(m) = result.mean_ratio() {
        println!(
            "mean F_best after/before: {m:.4} over {} perturbations ({} runs without perturbation)",
            result.ratios.len(),
            result.runs_without_perturbation
        );
    }
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let theta: Vec<f64> = a
        .theta
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Config(format!("bad --theta: {e}")))?;
    if theta.len() != param_count(a.steps) {
        return Err(Failure::Config(format!(
            "expected {} angles for {} steps, got {}",
            param_count(a.steps),
            a.steps,
            theta.len()
        )));
    }
    let spec: TargetSpec = a.target.parse()?;
    let target = spec
        .resolve(a.steps, a.seed)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let axis = match a.axis.as_str() {
        "up" => ProjectionAxis::Up,
        "down" => ProjectionAxis::Down,
        "horizontal" => ProjectionAxis::Horizontal,
        other => return Err(Failure::Config(format!("unknown axis `{other}`"))),
    };
    let mut oc = OracleConfig::new(a.steps, target, a.seed);
    oc.projection_axis = axis.vector()?;
    oc.noise = if a.noiseless {
        NoiseModel::noiseless()
    } else {
        NoiseModel::poisson(a.lambda)
    };
    let mut oracle = Oracle::new(oc).map_err(|e| Failure::Config(e.to_string()))?;
    let radians: Vec<f64> = theta.iter().map(|d| d.to_radians()).collect();
    let (cost, est) = oracle.cost_detailed(&radians)?;
    let out = json!({
        "theta_deg": theta,
        "cost": cost,
        "fidelity": est.fidelity,
        "exact_fidelity": est.exact,
        "success_probability": est.success_probability,
        "counts": est.counts,
        "null_projection": est.null_projection,
    });
    println!("{out}");
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let meta_path = a.out.join("metadata.json");
    let text = std::fs::read_to_string(&meta_path)
        .map_err(|e| Failure::Config(format!("{}: {e}", meta_path.display())))?;
    let meta: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let runs = meta["runs"]
        .as_array()
        .ok_or_else(|| Failure::Config("metadata has no run list".into()))?;
    // algorithm -> state -> curves
    let mut groups: BTreeMap<String, BTreeMap<u64, Vec<Vec<f64>>>> = BTreeMap::new();
    let mut len = 0;
    for r in runs {
        let id = r["run_id"].as_str().unwrap_or_default();
        let alg = r["algorithm"].as_str().unwrap_or("rbf").to_string();
        let state = r["state"].as_u64().unwrap_or(0);
        let records = read_trace_jsonl(&a.out.join("runs").join(format!("{id}.jsonl")))?;
        let curve: Vec<f64> = records.iter().map(|x| x.best).collect();
        len = len.max(curve.len());
        groups.entry(alg).or_default().entry(state).or_default().push(curve);
    }
    let mut curves = Vec::new();
    for (alg, states) in &groups {
        let states: Vec<Vec<Vec<f64>>> = states
            .values()
            .map(|cs| cs.iter().map(|c| pad_curve(c, len)).collect())
            .collect();
        curves.push((alg.clone(), aggregate(&states)?));
    }
    let mut header = vec!["eval".to_string()];
    for (alg, _) in &curves {
        header.push(format!("{alg}_mean"));
        header.push(format!("{alg}_sem"));
    }
    println!("{}", header.join(","));
    for i in 0..len {
        let mut row = vec![(i + 1).to_string()];
        for (_, c) in &curves {
            row.push(c.mean[i].to_string());
            row.push(c.sem[i].to_string());
        }
        println!("{}", row.join(","));
    }
    Ok(())
}
