//! The black box seen by the optimizers: a walk configuration, a target and a
//! simulated photon-counting measurement in a Gram–Schmidt basis of the
//! target, plus hidden waveplate offsets that drift under random kicks.
//!
//! Every cost query draws fresh counts and may perturb the device afterwards.
//! The offsets are never exposed through the cost interface.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{
    evolve, fidelity, gram_schmidt_basis, handle_index, param_count, project_coin, CoinVector,
    MeasurementBasis, TargetState, WalkParams, WalkState, COIN_UP,
};

const COUNT_STREAM: u64 = 0;
const PERTURBATION_STREAM: u64 = 1;

/// Photon-count model: per basis projection `N ~ Poisson(λ)`, then
/// `c ~ Binomial(N, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub lambda: f64,
    pub enabled: bool,
}

impl NoiseModel {
    pub fn poisson(lambda: f64) -> Self {
        Self {
            lambda,
            enabled: true,
        }
    }

    pub fn noiseless() -> Self {
        Self {
            lambda: 1e4,
            enabled: false,
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::poisson(1e4)
    }
}

/// A perturbable waveplate: angle `angle` (1..=3) of walk step `step` (1..=n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Handle {
    pub step: usize,
    pub angle: usize,
}

impl Handle {
    pub const fn new(step: usize, angle: usize) -> Self {
        Self { step, angle }
    }
}

/// Random permanent kicks on selected waveplates. Angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    pub probability: f64,
    pub offset_mean: f64,
    pub offset_std: f64,
    pub handles: Vec<Handle>,
    pub enabled: bool,
}

impl PerturbationConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::with_probability(0.0)
        }
    }

    /// `N(−30°, 5°)` kicks on the second-step HWP and the third-step first QWP.
    pub fn with_probability(probability: f64) -> Self {
        Self {
            probability,
            offset_mean: (-30.0f64).to_radians(),
            offset_std: 5.0f64.to_radians(),
            handles: vec![Handle::new(2, 2), Handle::new(3, 1)],
            enabled: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::InvalidArgument(format!(
                "perturbation probability {} outside [0, 1]",
                self.probability
            )));
        }
        if !(self.offset_std >= 0.0) || !self.offset_mean.is_finite() {
            return Err(Error::InvalidArgument(
                "perturbation offset must have finite mean and nonnegative std".into(),
            ));
        }
        Ok(())
    }
}

/// One change of a hidden offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationEvent {
    /// 1-based index of the cost query after which the kick happened; 0 for
    /// kicks injected before any query.
    pub evaluation: u64,
    pub handle: Handle,
    /// Radians.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct DeviceState {
    hidden_offsets: Vec<f64>,
    events: Vec<PerturbationEvent>,
}

/// Everything needed to build an [`Oracle`].
#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub steps: usize,
    pub target: TargetState,
    pub input: Option<WalkState>,
    pub projection_axis: CoinVector,
    pub noise: NoiseModel,
    pub perturbation: PerturbationConfig,
    pub seed: u64,
}

impl OracleConfig {
    pub fn new(steps: usize, target: TargetState, seed: u64) -> Self {
        Self {
            steps,
            target,
            input: None,
            projection_axis: COIN_UP,
            noise: NoiseModel::default(),
            perturbation: PerturbationConfig::disabled(),
            seed,
        }
    }
}

/// Outcome of one simulated measurement round.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityEstimate {
    /// `c₁ / Σⱼ cⱼ`, or `p₁` when noise is disabled.
    pub fidelity: f64,
    /// Noiseless `p₁` for the same (offset) parameters.
    pub exact: f64,
    pub success_probability: f64,
    pub counts: Vec<u64>,
    pub null_projection: bool,
}

pub struct Oracle {
    steps: usize,
    input: WalkState,
    axis: CoinVector,
    basis: MeasurementBasis,
    noise: NoiseModel,
    perturbation: PerturbationConfig,
    offset_indices: Vec<usize>,
    device: DeviceState,
    count_rng: ChaCha8Rng,
    perturbation_rng: ChaCha8Rng,
    evaluations: u64,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Result<Self> {
        let OracleConfig {
            steps,
            target,
            input,
            projection_axis,
            noise,
            perturbation,
            seed,
        } = config;
        if steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        if target.half_width() != steps {
            return Err(Error::DimensionMismatch {
                expected: steps + 1,
                actual: target.dim(),
            });
        }
        if noise.enabled && !(noise.lambda > 0.0) {
            return Err(Error::InvalidArgument("noise lambda must be positive".into()));
        }
        perturbation.validate()?;
        let input = input.unwrap_or_else(|| WalkState::default_input(steps));
        if input.half_width() != steps {
            return Err(Error::DimensionMismatch {
                expected: steps,
                actual: input.half_width(),
            });
        }
        let axis_norm = projection_axis.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (axis_norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("projection axis must be normalized".into()));
        }
        let active: &[Handle] = if perturbation.enabled {
            &perturbation.handles
        } else {
            &[]
        };
        let offset_indices = active
            .iter()
            .map(|h| {
                handle_index(h.step, h.angle, true)
                    .filter(|&i| i < param_count(steps))
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "handle (step {}, angle {}) is not a free parameter",
                            h.step, h.angle
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut count_rng = ChaCha8Rng::seed_from_u64(seed);
        count_rng.set_stream(COUNT_STREAM);
        let mut perturbation_rng = ChaCha8Rng::seed_from_u64(seed);
        perturbation_rng.set_stream(PERTURBATION_STREAM);

        Ok(Self {
            steps,
            input,
            axis: projection_axis,
            basis: gram_schmidt_basis(&target),
            noise,
            perturbation,
            offset_indices,
            device: DeviceState {
                hidden_offsets: vec![0.0; param_count(steps)],
                events: Vec::new(),
            },
            count_rng,
            perturbation_rng,
            evaluations: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        param_count(self.steps)
    }

    pub fn target(&self) -> &TargetState {
        self.basis.target()
    }

    pub fn basis(&self) -> &MeasurementBasis {
        &self.basis
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Number of cost queries so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Post-hoc view of the device drift. Not part of the black-box interface.
    pub fn hidden_offsets(&self) -> &[f64] {
        &self.device.hidden_offsets
    }

    pub fn perturbation_events(&self) -> &[PerturbationEvent] {
        &self.device.events
    }

    /// Adds a deterministic offset to one handle, as if a kick happened now.
    pub fn inject_offset(&mut self, handle: Handle, offset: f64) -> Result<()> {
        let i = handle_index(handle.step, handle.angle, true)
            .filter(|&i| i < self.dim())
            .ok_or_else(|| Error::InvalidArgument("handle is not a free parameter".into()))?;
        self.device.hidden_offsets[i] += offset;
        self.device.events.push(PerturbationEvent {
            evaluation: self.evaluations,
            handle,
            offset,
        });
        Ok(())
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::ParameterCount {
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        Ok(())
    }

    fn applied(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.device.hidden_offsets)
            .map(|(t, o)| t + o)
            .collect()
    }

    /// Basis probabilities of the projected output, or `None` on a null
    /// projection. Offsets are not applied here.
    fn outcome_probabilities(&self, applied: &[f64]) -> Result<(Option<Vec<f64>>, f64)> {
        let params = WalkParams::from_free(self.steps, applied, true)?;
        let out = evolve(&params, &self.input)?;
        let projection = project_coin(&out, &self.axis);
        match projection.state {
            Some(state) => Ok((
                Some(self.basis.probabilities(&state)?),
                projection.success_probability,
            )),
            None => Ok((None, projection.success_probability)),
        }
    }

    /// Noiseless fidelity with the current hidden offsets applied.
    pub fn evaluate_exact(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let (probs, _) = self.outcome_probabilities(&self.applied(theta))?;
        Ok(probs.map_or(0.0, |p| p[0]))
    }

    /// Noiseless fidelity with no offsets applied.
    pub fn evaluate_nominal(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let (probs, _) = self.outcome_probabilities(theta)?;
        Ok(probs.map_or(0.0, |p| p[0]))
    }

    /// One measurement round. Does not advance the evaluation counter.
    pub fn estimate_fidelity(&mut self, theta: &[f64]) -> Result<FidelityEstimate> {
        self.check_len(theta)?;
        let (probs, success_probability) = self.outcome_probabilities(&self.applied(theta))?;
        let Some(probs) = probs else {
            return Ok(FidelityEstimate {
                fidelity: 0.0,
                exact: 0.0,
                success_probability,
                counts: vec![0; self.basis.len()],
                null_projection: true,
            });
        };
        let exact = probs[0];
        if !self.noise.enabled {
            return Ok(FidelityEstimate {
                fidelity: exact,
                exact,
                success_probability,
                counts: Vec::new(),
                null_projection: false,
            });
        }
        let counts = simulate_counts(&probs, &self.noise, &mut self.count_rng)?;
        let total: u64 = counts.iter().sum();
        let fidelity = if total == 0 {
            0.0
        } else {
            counts[0] as f64 / total as f64
        };
        Ok(FidelityEstimate {
            fidelity,
            exact,
            success_probability,
            counts,
            null_projection: false,
        })
    }

    /// `1 − f̂`. Counts the query and then lets the device drift.
    pub fn cost(&mut self, theta: &[f64]) -> Result<f64> {
        self.cost_detailed(theta).map(|(c, _)| c)
    }

    pub fn cost_detailed(&mut self, theta: &[f64]) -> Result<(f64, FidelityEstimate)> {
        let estimate = self.estimate_fidelity(theta)?;
        self.evaluations += 1;
        if self.perturbation.enabled {
            self.perturb_step();
        }
        Ok((1.0 - estimate.fidelity, estimate))
    }

    /// Independently for each handle, with probability `q` adds a
    /// `N(μ, σ)` kick to its hidden offset. Returns the new events.
    pub fn perturb_step(&mut self) -> Vec<PerturbationEvent> {
        let PerturbationConfig {
            probability,
            offset_mean,
            offset_std,
            ..
        } = self.perturbation;
        let normal = Normal::new(offset_mean, offset_std).expect("validated std");
        let mut fired = Vec::new();
        for (&handle, &index) in self.perturbation.handles.iter().zip(&self.offset_indices) {
            if self.perturbation_rng.random::<f64>() < probability {
                let offset = normal.sample(&mut self.perturbation_rng);
                self.device.hidden_offsets[index] += offset;
                fired.push(PerturbationEvent {
                    evaluation: self.evaluations,
                    handle,
                    offset,
                });
            }
        }
        self.device.events.extend_from_slice(&fired);
        fired
    }
}

/// Draws one count per basis element: `Nⱼ ~ Poisson(λ)`, `cⱼ ~ Binomial(Nⱼ, pⱼ)`.
pub fn simulate_counts<R: Rng + ?Sized>(
    probabilities: &[f64],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if !(noise.lambda > 0.0) || !noise.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {}",
            noise.lambda
        )));
    }
    let total: f64 = probabilities.iter().sum();
    if total > 1.0 + 1e-9 || probabilities.iter().any(|p| !(-1e-12..=1.0 + 1e-12).contains(p)) {
        return Err(Error::InvalidArgument("probabilities out of range".into()));
    }
    let poisson = Poisson::new(noise.lambda).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    probabilities
        .iter()
        .map(|&p| {
            let n = poisson.sample(rng) as u64;
            let binomial = Binomial::new(n, p.clamp(0.0, 1.0))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(binomial.sample(rng))
        })
        .collect()
}

/// Exact fidelity of the composed pipeline, without an oracle.
pub fn exact_fidelity(
    steps: usize,
    theta: &[f64],
    target: &TargetState,
    input: &WalkState,
    axis: &CoinVector,
) -> Result<f64> {
    let params = WalkParams::from_free(steps, theta, true)?;
    let out = evolve(&params, input)?;
    match project_coin(&out, axis).state {
        Some(s) => fidelity(target, &s),
        None => Ok(0.0),
    }
}
