//! Discrete-time quantum walk on a walker register (OAM value) coupled to a
//! two-level coin (polarization).
//!
//! Walker positions run over the full band `{-n, ..., n}` for an `n`-step
//! walk. The coin basis is `|↑⟩, |↓⟩`, identified with the circular
//! polarizations `|R⟩, |L⟩` so that the shift operator coincides with the
//! q-plate action. All angles here are radians.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A 2×2 complex matrix acting on the coin register, row-major.
pub type CoinMatrix = [[C64; 2]; 2];

/// A coin-register vector `(⟨↑|, ⟨↓|)`.
pub type CoinVector = [C64; 2];

pub const COIN_UP: CoinVector = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
pub const COIN_DOWN: CoinVector = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];

const NULL_PROJECTION_THRESHOLD: f64 = 1e-12;
const GRAM_SCHMIDT_SKIP: f64 = 1e-10;

/// Waveplate angles of one coin operation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoinAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl CoinAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self {
            theta1,
            theta2,
            theta3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite() && self.theta3.is_finite()
    }

    /// Angles reduced to `[0, 2π)`.
    pub fn reduced(&self) -> Self {
        let r = |a: f64| {
            let v = a.rem_euclid(TAU);
            // rem_euclid can round up to exactly TAU for tiny negative inputs
            if v >= TAU {
                0.0
            } else {
                v
            }
        };
        Self::new(r(self.theta1), r(self.theta2), r(self.theta3))
    }
}

/// The coin unitary for angles `(θ₁, θ₂, θ₃)`, with `β = θ₁ − θ₃`,
/// `η = θ₁ − 2θ₂ + θ₃` and `μ = θ₁ + θ₃`.
pub fn coin_matrix(angles: &CoinAngles) -> CoinMatrix {
    let CoinAngles {
        theta1,
        theta2,
        theta3,
    } = *angles;
    let beta = theta1 - theta3;
    let eta = theta1 - 2.0 * theta2 + theta3;
    let mu = theta1 + theta3;
    let (sin_eta, cos_eta) = eta.sin_cos();
    let (sin_mu, cos_mu) = mu.sin_cos();
    [
        [
            C64::from_polar(cos_eta, -beta),
            C64::new(cos_mu * sin_eta, sin_mu * sin_eta),
        ],
        [
            C64::new(-cos_mu * sin_eta, sin_mu * sin_eta),
            C64::from_polar(cos_eta, beta),
        ],
    ]
}

/// Number of free parameters of an `steps`-step walk whose first coin has
/// only two waveplates (0 for a zero-step walk).
pub fn param_count(steps: usize) -> usize {
    (3 * steps).saturating_sub(1)
}

/// The full control vector of an `n`-step walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkParams {
    coins: Vec<CoinAngles>,
    first_coin_constrained: bool,
}

impl WalkParams {
    pub fn new(coins: Vec<CoinAngles>, first_coin_constrained: bool) -> Result<Self> {
        if coins.is_empty() {
            return Err(Error::InvalidArgument("a walk needs at least one step".into()));
        }
        if coins.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coin angles must be finite".into()));
        }
        let mut coins = coins;
        if first_coin_constrained {
            coins[0].theta1 = 0.0;
        }
        Ok(Self {
            coins,
            first_coin_constrained,
        })
    }

    /// Builds the parameters from a flat free-parameter vector laid out as
    /// `(θ₂¹, θ₃¹, θ₁², θ₂², θ₃², …)` when constrained, or `(θ₁¹, θ₂¹, θ₃¹, …)`
    /// otherwise.
    pub fn from_free(steps: usize, free: &[f64], first_coin_constrained: bool) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("a walk needs at least one step".into()));
        }
        let expected = free_count(steps, first_coin_constrained);
        if free.len() != expected {
            return Err(Error::ParameterCount {
                expected,
                actual: free.len(),
            });
        }
        let mut full = Vec::with_capacity(3 * steps);
        if first_coin_constrained {
            full.push(0.0);
        }
        full.extend_from_slice(free);
        let coins = full
            .chunks_exact(3)
            .map(|c| CoinAngles::new(c[0], c[1], c[2]))
            .collect();
        Self::new(coins, first_coin_constrained)
    }

    pub fn steps(&self) -> usize {
        self.coins.len()
    }

    pub fn coins(&self) -> &[CoinAngles] {
        &self.coins
    }

    pub fn first_coin_constrained(&self) -> bool {
        self.first_coin_constrained
    }

    pub fn free_count(&self) -> usize {
        free_count(self.steps(), self.first_coin_constrained)
    }

    pub fn free_params(&self) -> Vec<f64> {
        let skip = usize::from(self.first_coin_constrained);
        self.coins
            .iter()
            .flat_map(|c| [c.theta1, c.theta2, c.theta3])
            .skip(skip)
            .collect()
    }
}

fn free_count(steps: usize, constrained: bool) -> usize {
    if constrained {
        param_count(steps)
    } else {
        3 * steps
    }
}

/// Flat free-parameter index of angle `angle` (1..=3) of step `step` (1..=n).
pub fn handle_index(step: usize, angle: usize, first_coin_constrained: bool) -> Option<usize> {
    if step == 0 || !(1..=3).contains(&angle) {
        return None;
    }
    let raw = 3 * (step - 1) + (angle - 1);
    if first_coin_constrained {
        if step == 1 && angle == 1 {
            None
        } else {
            Some(raw - 1)
        }
    } else {
        Some(raw)
    }
}

/// Joint walker ⊗ coin state over the band `{-n, ..., n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    half_width: usize,
    // index 2·(k + n) + c, c = 0 for ↑ and 1 for ↓
    amplitudes: Vec<C64>,
}

impl WalkState {
    pub fn zeros(half_width: usize) -> Self {
        Self {
            half_width,
            amplitudes: vec![C64::new(0.0, 0.0); 2 * (2 * half_width + 1)],
        }
    }

    /// Walker localized at `position` with coin state `coin`.
    pub fn localized(half_width: usize, position: i64, coin: CoinVector) -> Result<Self> {
        let mut s = Self::zeros(half_width);
        let i = s.index(position, 0).ok_or(Error::BandOverflow {
            position,
            half_width,
        })?;
        s.amplitudes[i] = coin[0];
        s.amplitudes[i + 1] = coin[1];
        Ok(s)
    }

    /// Walker at 0, coin `(|↑⟩ + |↓⟩)/√2`.
    pub fn default_input(half_width: usize) -> Self {
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::localized(half_width, 0, [a, a]).expect("position 0 is always in band")
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    fn index(&self, position: i64, coin: usize) -> Option<usize> {
        let n = self.half_width as i64;
        if position < -n || position > n {
            return None;
        }
        Some(2 * (position + n) as usize + coin)
    }

    /// Amplitude of `|position, coin⟩`; zero outside the band.
    pub fn amplitude(&self, position: i64, coin: usize) -> C64 {
        self.index(position, coin)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    pub fn set_amplitude(&mut self, position: i64, coin: usize, value: C64) -> Result<()> {
        let i = self.index(position, coin).ok_or(Error::BandOverflow {
            position,
            half_width: self.half_width,
        })?;
        self.amplitudes[i] = value;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn positions(&self) -> impl Iterator<Item = i64> {
        let n = self.half_width as i64;
        -n..=n
    }
}

/// Applies the same coin unitary at every walker position.
pub fn apply_coin(state: &mut WalkState, coin: &CoinMatrix) {
    for pair in state.amplitudes.chunks_exact_mut(2) {
        let (up, down) = (pair[0], pair[1]);
        pair[0] = coin[0][0] * up + coin[0][1] * down;
        pair[1] = coin[1][0] * up + coin[1][1] * down;
    }
}

/// Conditional shift: `|k,↑⟩ → |k−1,↓⟩`, `|k,↓⟩ → |k+1,↑⟩`.
pub fn apply_shift(state: &WalkState) -> Result<WalkState> {
    let mut out = WalkState::zeros(state.half_width);
    for k in state.positions() {
        let up = state.amplitude(k, 0);
        let down = state.amplitude(k, 1);
        if up != C64::default() {
            out.set_amplitude(k - 1, 1, up)?;
        }
        if down != C64::default() {
            out.set_amplitude(k + 1, 0, down)?;
        }
    }
    Ok(out)
}

/// Applies `∏ Ŝ Ĉ(θ⁽ⁱ⁾)`: coin then shift for each step in order.
pub fn evolve(params: &WalkParams, input: &WalkState) -> Result<WalkState> {
    let mut state = input.clone();
    for angles in params.coins() {
        apply_coin(&mut state, &coin_matrix(angles));
        state = apply_shift(&state)?;
    }
    Ok(state)
}

/// Normalized state of the walker register on the band `{-n, -n+2, …, n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    half_width: usize,
    amplitudes: Vec<C64>,
}

impl TargetState {
    /// Normalizes `amplitudes` (indexed `-n, -n+2, …, n`, so `n = len − 1`).
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("empty target".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            half_width: amplitudes.len() - 1,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// The band basis vector `|position⟩`.
    pub fn basis(half_width: usize, position: i64) -> Result<Self> {
        let i = band_index(half_width, position).ok_or(Error::BandOverflow {
            position,
            half_width,
        })?;
        let mut amps = vec![C64::default(); half_width + 1];
        amps[i] = C64::new(1.0, 0.0);
        Self::from_amplitudes(amps)
    }

    /// Normalized superposition `Σ cᵢ |mᵢ⟩` on the band.
    pub fn superposition(half_width: usize, terms: &[(i64, C64)]) -> Result<Self> {
        let mut amps = vec![C64::default(); half_width + 1];
        for &(position, c) in terms {
            let i = band_index(half_width, position).ok_or(Error::BandOverflow {
                position,
                half_width,
            })?;
            amps[i] += c;
        }
        Self::from_amplitudes(amps)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Band positions in storage order.
    pub fn positions(&self) -> Vec<i64> {
        let n = self.half_width as i64;
        (0..=self.half_width as i64).map(|i| -n + 2 * i).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &TargetState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

fn band_index(half_width: usize, position: i64) -> Option<usize> {
    let n = half_width as i64;
    if position < -n || position > n || (position + n) % 2 != 0 {
        return None;
    }
    Some(((position + n) / 2) as usize)
}

/// Result of projecting the coin onto a fixed polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinProjection {
    /// Renormalized walker state, `None` for a null projection.
    pub state: Option<TargetState>,
    pub success_probability: f64,
}

impl CoinProjection {
    pub fn is_null(&self) -> bool {
        self.state.is_none()
    }
}

/// Projects the coin onto `axis` and keeps the walker amplitudes on the
/// reachable band `{-n, -n+2, …, n}`.
pub fn project_coin(state: &WalkState, axis: &CoinVector) -> CoinProjection {
    let n = state.half_width as i64;
    let amps: Vec<C64> = (0..=n)
        .map(|i| {
            let k = -n + 2 * i;
            axis[0].conj() * state.amplitude(k, 0) + axis[1].conj() * state.amplitude(k, 1)
        })
        .collect();
    let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if p < NULL_PROJECTION_THRESHOLD {
        return CoinProjection {
            state: None,
            success_probability: p,
        };
    }
    let norm = p.sqrt();
    CoinProjection {
        state: Some(TargetState {
            half_width: state.half_width,
            amplitudes: amps.into_iter().map(|a| a / norm).collect(),
        }),
        success_probability: p,
    }
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &TargetState, b: &TargetState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Orthonormal basis of the band whose first element is the target.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<TargetState>,
}

impl MeasurementBasis {
    pub fn vectors(&self) -> &[TargetState] {
        &self.vectors
    }

    pub fn target(&self) -> &TargetState {
        &self.vectors[0]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Outcome probabilities `|⟨ψⱼ|state⟩|²` in basis order.
    pub fn probabilities(&self, state: &TargetState) -> Result<Vec<f64>> {
        self.vectors.iter().map(|v| fidelity(v, state)).collect()
    }
}

/// Gram–Schmidt completion of `target` with the band basis vectors taken in
/// order `-n, -n+2, …, n`.
pub fn gram_schmidt_basis(target: &TargetState) -> MeasurementBasis {
    let dim = target.dim();
    let mut vectors: Vec<Vec<C64>> = vec![target.amplitudes.clone()];
    for seed in 0..dim {
        if vectors.len() == dim {
            break;
        }
        let mut v = vec![C64::default(); dim];
        v[seed] = C64::new(1.0, 0.0);
        // two passes of modified Gram–Schmidt keep orthogonality near machine precision
        for _ in 0..2 {
            for u in &vectors {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < GRAM_SCHMIDT_SKIP {
            continue;
        }
        vectors.push(v.into_iter().map(|a| a / norm).collect());
    }
    MeasurementBasis {
        vectors: vectors
            .into_iter()
            .map(|amplitudes| TargetState {
                half_width: target.half_width,
                amplitudes,
            })
            .collect(),
    }
}

/// Haar-random state of dimension `band_dim` from a seeded generator.
pub fn random_target(band_dim: usize, seed: u64) -> Result<TargetState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_target_with(band_dim, &mut rng)
}

pub fn random_target_with<R: Rng + ?Sized>(band_dim: usize, rng: &mut R) -> Result<TargetState> {
    if band_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "band dimension must be at least 2, got {band_dim}"
        )));
    }
    loop {
        let amps: Vec<C64> = (0..band_dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(t) = TargetState::from_amplitudes(amps) {
            return Ok(t);
        }
    }
}
