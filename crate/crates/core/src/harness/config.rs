//! Experiment configuration. Mirrors the JSON config file; all angles are in
//! degrees and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::targets::TargetSpec;
use crate::error::{Error, Result};
use crate::oracle::Handle;
use crate::walk::{param_count, CoinVector, C64, COIN_DOWN, COIN_UP};
use crate::surrogate::{OptimizerConfig, DEFAULT_GAMMA, DEFAULT_GLOBAL_WEIGHTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Engineer,
    Perturb,
    Sweep,
    Compare,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Engineer => "engineer",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Compare => "compare",
        }
    }

    pub(crate) fn id(self) -> u64 {
        match self {
            ExperimentKind::Engineer => 1,
            ExperimentKind::Perturb => 2,
            ExperimentKind::Sweep => 3,
            ExperimentKind::Compare => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rbf,
    RandomSearch,
    Powell,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Rbf => "rbf",
            Algorithm::RandomSearch => "random_search",
            Algorithm::Powell => "powell",
        }
    }
}

/// Coin state onto which the walk output is projected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionAxis {
    Up,
    Down,
    /// `(|↑⟩ + |↓⟩)/√2`, the input polarization.
    Horizontal,
    /// `(re, im)` pairs for `↑` and `↓`, normalized on use.
    Custom([(f64, f64); 2]),
}

impl ProjectionAxis {
    pub fn vector(&self) -> Result<CoinVector> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Ok(match self {
            ProjectionAxis::Up => COIN_UP,
            ProjectionAxis::Down => COIN_DOWN,
            ProjectionAxis::Horizontal => [C64::new(h, 0.0), C64::new(h, 0.0)],
            ProjectionAxis::Custom([(a, b), (c, d)]) => {
                let v = [C64::new(*a, *b), C64::new(*c, *d)];
                let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                if !(norm > 1e-12) || !norm.is_finite() {
                    return Err(Error::Config("projection axis must be a nonzero vector".into()));
                }
                [v[0] / norm, v[1] / norm]
            }
        })
    }
}

/// A deterministic kick applied after a given number of evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedOffset {
    /// Applied once this many evaluations have been spent.
    pub after_eval: u64,
    pub step: usize,
    pub angle: usize,
    pub offset_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSettings {
    /// Per-evaluation, per-handle kick probability; table value when absent.
    pub probability: Option<f64>,
    pub mean_deg: f64,
    pub std_deg: f64,
    /// `(step, angle)` pairs, both 1-based.
    pub handles: Vec<(usize, usize)>,
    pub forced: Vec<ForcedOffset>,
}

impl Default for PerturbationSettings {
    fn default() -> Self {
        Self {
            probability: None,
            mean_deg: -30.0,
            std_deg: 5.0,
            handles: vec![(2, 2), (3, 1)],
            forced: Vec::new(),
        }
    }
}

impl PerturbationSettings {
    pub fn handles(&self) -> Vec<Handle> {
        self.handles.iter().map(|&(s, a)| Handle::new(s, a)).collect()
    }
}

/// Surrogate optimizer knobs; unset fields take the optimizer defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSettings {
    pub init_points: Option<usize>,
    pub num_global_searches: Option<usize>,
    pub global_weights: Option<Vec<f64>>,
    pub max_stalled_iterations: Option<usize>,
    pub refinement_frequency: Option<usize>,
    pub min_distance: Option<f64>,
    pub ridge: Option<f64>,
    pub candidate_pool: Option<usize>,
    pub model_reselect_period: Option<usize>,
    pub gamma: Option<f64>,
}

impl RbfSettings {
    pub fn build(&self, bounds: Vec<(f64, f64)>, budget: usize, seed: u64) -> OptimizerConfig {
        let mut c = OptimizerConfig::new(bounds, budget, seed);
        if let Some(v) = self.init_points {
            c.init_points = v;
        }
        c.init_points = c.init_points.min(budget.max(1));
        if let Some(v) = self.num_global_searches {
            c.num_global_searches = v;
        }
        c.global_weights = self
            .global_weights
            .clone()
            .unwrap_or_else(|| DEFAULT_GLOBAL_WEIGHTS.to_vec());
        if let Some(v) = self.max_stalled_iterations {
            c.max_stalled_iterations = v;
        }
        if let Some(v) = self.refinement_frequency {
            c.refinement_frequency = v;
        }
        if let Some(v) = self.min_distance {
            c.min_distance = v;
        }
        if let Some(v) = self.ridge {
            c.ridge = v;
        }
        if let Some(v) = self.candidate_pool {
            c.candidate_pool = v;
        }
        if let Some(v) = self.model_reselect_period {
            c.model_reselect_period = v;
        }
        c.gamma = self.gamma.unwrap_or(DEFAULT_GAMMA);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowellSettings {
    pub line_tolerance: f64,
    pub max_line_evals: usize,
}

impl Default for PowellSettings {
    fn default() -> Self {
        Self {
            line_tolerance: 1e-6,
            max_line_evals: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub steps: usize,
    /// Walk lengths for the scaling sweep.
    pub sweep_steps: Vec<usize>,
    pub targets: Vec<TargetSpec>,
    pub repeats: usize,
    pub budget: usize,
    pub noise_lambda: f64,
    pub noiseless: bool,
    pub projection_axis: ProjectionAxis,
    pub perturbation: PerturbationSettings,
    /// Degradation threshold `t`; table value when absent.
    pub restart_threshold: Option<f64>,
    pub check_period: usize,
    /// Noisy-fidelity stopping level of the sweep.
    pub sweep_fidelity: f64,
    pub algorithms: Vec<Algorithm>,
    /// Box for every angle, degrees. When absent each angle spans one
    /// period: 180° for θ₁ and θ₃, 90° for θ₂ (a 90° turn of θ₂ only flips
    /// the sign of the coin).
    pub bounds_deg: Option<(f64, f64)>,
    pub rbf: RbfSettings,
    pub powell: PowellSettings,
    pub seed: u64,
    /// Output location and scheduling do not affect results, so they are
    /// left out of the hash and the metadata.
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Run independent runs on the rayon pool.
    #[serde(skip_serializing)]
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Engineer,
            steps: 3,
            sweep_steps: vec![3, 5, 7, 9],
            targets: vec![TargetSpec::Random { count: 10 }],
            repeats: 10,
            budget: 1000,
            noise_lambda: 1e4,
            noiseless: false,
            projection_axis: ProjectionAxis::Horizontal,
            perturbation: PerturbationSettings::default(),
            restart_threshold: None,
            check_period: 10,
            sweep_fidelity: 0.98,
            algorithms: vec![Algorithm::Rbf, Algorithm::RandomSearch, Algorithm::Powell],
            bounds_deg: None,
            rbf: RbfSettings::default(),
            powell: PowellSettings::default(),
            seed: 0,
            out_dir: None,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c = Self {
            kind,
            ..Self::default()
        };
        match kind {
            ExperimentKind::Engineer => {}
            ExperimentKind::Perturb => {
                c.targets = vec![TargetSpec::Basis(1)];
                c.repeats = 5;
                c.budget = 800;
            }
            ExperimentKind::Sweep => {
                c.repeats = 1;
                c.budget = 5000;
            }
            ExperimentKind::Compare => {}
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        if self.kind == ExperimentKind::Sweep && self.sweep_steps.iter().any(|&s| s == 0) {
            return bad("sweep steps must be positive".into());
        }
        if self.targets.is_empty() || self.targets.iter().all(|t| t.count() == 0) {
            return bad("at least one target is required".into());
        }
        if self.repeats == 0 || self.budget == 0 {
            return bad("repeats and budget must be positive".into());
        }
        if !self.noiseless && !(self.noise_lambda > 0.0) {
            return bad("noise_lambda must be positive".into());
        }
        if self.restart_threshold.is_some_and(|t| !(t >= 0.0)) {
            return bad("restart_threshold must be nonnegative".into());
        }
        if self.perturbation.probability.is_some_and(|q| !(0.0..=1.0).contains(&q)) {
            return bad("perturbation probability must lie in [0, 1]".into());
        }
        if !(self.perturbation.std_deg >= 0.0) {
            return bad("perturbation std must be nonnegative".into());
        }
        self.projection_axis.vector()?;
        if self.check_period == 0 {
            return bad("check_period must be positive".into());
        }
        if self.bounds_deg.is_some_and(|(lo, hi)| !(lo < hi)) {
            return bad("bounds_deg must satisfy lo < hi".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        let walk_steps: Vec<usize> = if self.kind == ExperimentKind::Sweep {
            self.sweep_steps.clone()
        } else {
            vec![self.steps]
        };
        for steps in walk_steps {
            for t in &self.targets {
                if !matches!(t, TargetSpec::Random { .. }) {
                    t.resolve(steps, 0)
                        .map_err(|e| Error::Config(format!("target {t}: {e}")))?;
                }
            }
            let handles: Vec<(usize, usize)> = if self.kind == ExperimentKind::Perturb {
                let forced = self.perturbation.forced.iter().map(|f| (f.step, f.angle));
                self.perturbation.handles.iter().copied().chain(forced).collect()
            } else {
                Vec::new()
            };
            for (s, a) in handles {
                if crate::walk::handle_index(s, a, true)
                    .is_none_or(|i| i >= param_count(steps))
                {
                    return bad(format!("handle ({s}, {a}) is not a free parameter"));
                }
            }
        }
        let probe = self.rbf.build(vec![(0.0, 1.0); 2], self.budget, 0);
        if self.rbf.init_points.is_some_and(|p| p == 0) {
            return bad("init_points must be positive".into());
        }
        probe
            .validate()
            .or_else(|e| if self.budget < probe.init_points { Ok(()) } else { Err(e) })?;
        Ok(())
    }

    /// Per-parameter box in degrees for an `steps`-step walk.
    pub fn bounds(&self, steps: usize) -> Vec<(f64, f64)> {
        (0..param_count(steps))
            .map(|i| match self.bounds_deg {
                Some(b) => b,
                // free layout is θ₂¹, θ₃¹, then θ₁ θ₂ θ₃ per step
                None if i % 3 == 0 => (0.0, 90.0),
                None => (0.0, 180.0),
            })
            .collect()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
