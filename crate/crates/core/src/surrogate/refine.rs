//! Trust-region refinement around the incumbent: an affine least-squares model
//! on nearby points, minimized over a box around the incumbent.

use nalgebra::{DMatrix, DVector};

use super::model::squared_distance;

const RADIUS_FLOOR: f64 = 1e-4;
const INITIAL_RADIUS_FACTOR: f64 = 0.1;
const MAX_RADIUS_FACTOR: f64 = 0.5;
const RANK_TOLERANCE: f64 = 1e-10;

/// Trust-region state in scaled units. The radius is Euclidean; the step box
/// has half-width `radius / √N`, so it fits inside the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegion {
    dim: usize,
    radius: f64,
}

/// What a refinement attempt produced.
#[derive(Debug, Clone, PartialEq)]
pub enum RefineProposal {
    /// Evaluate this point and report with [`TrustRegion::update`].
    Step(Vec<f64>),
    /// The radius sits at its floor.
    AtFloor,
    /// Too few points or a flat/rank-deficient affine fit; radius contracted.
    Degenerate,
}

impl TrustRegion {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            radius: INITIAL_RADIUS_FACTOR * (dim as f64).sqrt(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.dim);
    }

    pub fn at_floor(&self) -> bool {
        self.radius <= RADIUS_FLOOR
    }

    fn contract(&mut self) {
        self.radius = (self.radius * 0.5).max(RADIUS_FLOOR);
    }

    /// Doubles the radius (capped) after an improvement, halves it otherwise.
    pub fn update(&mut self, improved: bool) {
        if improved {
            self.radius = (self.radius * 2.0).min(MAX_RADIUS_FACTOR * (self.dim as f64).sqrt());
        } else {
            self.contract();
        }
    }

    /// Builds the next refinement point around `points[center]`.
    pub fn propose(
        &mut self,
        points: &[Vec<f64>],
        values: &[f64],
        center: usize,
        min_distance: f64,
    ) -> RefineProposal {
        if self.at_floor() {
            return RefineProposal::AtFloor;
        }
        let c = &points[center];
        let n = self.dim;
        let r2 = self.radius * self.radius;
        let mut near: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (squared_distance(p, c), i))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // the ball, topped up with the nearest outside points when it holds
        // fewer than an affine fit needs
        let inside = near.iter().take_while(|&&(d2, _)| d2 <= r2).count();
        near.truncate(inside.max(n + 1).min(4 * (n + 1)));
        if near.len() < n + 1 {
            self.contract();
            return RefineProposal::Degenerate;
        }

        let Some(gradient) = affine_gradient(points, values, &near, c) else {
            self.contract();
            return RefineProposal::Degenerate;
        };
        if gradient.iter().all(|&g| g == 0.0) {
            self.contract();
            return RefineProposal::Degenerate;
        }

        let half = self.radius / (n as f64).sqrt();
        let step = box_minimizer(c, &gradient, half);
        let too_close = points
            .iter()
            .any(|p| squared_distance(p, &step) < min_distance * min_distance);
        if too_close {
            self.contract();
            return RefineProposal::Degenerate;
        }
        RefineProposal::Step(step)
    }
}

/// Minimizer of `gᵀx` over `{x : |xᵢ − cᵢ| ≤ h} ∩ [0,1]^N`, coordinate-wise.
pub fn box_minimizer(center: &[f64], gradient: &[f64], half_width: f64) -> Vec<f64> {
    center
        .iter()
        .zip(gradient)
        .map(|(&c, &g)| {
            let x = if g > 0.0 {
                c - half_width
            } else if g < 0.0 {
                c + half_width
            } else {
                c
            };
            x.clamp(0.0, 1.0)
        })
        .collect()
}

/// Least-squares gradient of an affine model in coordinates centred at `c`.
fn affine_gradient(
    points: &[Vec<f64>],
    values: &[f64],
    near: &[(f64, usize)],
    c: &[f64],
) -> Option<Vec<f64>> {
    let n = c.len();
    let a = DMatrix::from_fn(near.len(), n + 1, |row, col| {
        if col == 0 {
            1.0
        } else {
            points[near[row].1][col - 1] - c[col - 1]
        }
    });
    let b = DVector::from_iterator(near.len(), near.iter().map(|&(_, i)| values[i]));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= RANK_TOLERANCE * smax {
        return None;
    }
    let coef = svd.solve(&b, RANK_TOLERANCE * smax).ok()?;
    let g: Vec<f64> = coef.iter().skip(1).copied().collect();
    g.iter().all(|v| v.is_finite()).then_some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_minimizer_moves_against_gradient() {
        let x = box_minimizer(&[0.5, 0.5, 0.95], &[1.0, -2.0, -1.0], 0.1);
        assert!((x[0] - 0.4).abs() < 1e-15);
        assert!((x[1] - 0.6).abs() < 1e-15);
        assert_eq!(x[2], 1.0);
    }

    #[test]
    fn radius_schedule() {
        let mut tr = TrustRegion::new(4);
        assert!((tr.radius() - 0.2).abs() < 1e-15);
        for _ in 0..5 {
            tr.update(true);
        }
        assert!((tr.radius() - 1.0).abs() < 1e-15);
        for _ in 0..40 {
            tr.update(false);
        }
        assert!(tr.at_floor());
        let pts = vec![vec![0.5; 4]; 1];
        assert_eq!(tr.propose(&pts, &[0.0], 0, 1e-6), RefineProposal::AtFloor);
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let mut tr = TrustRegion::new(2);
        let r0 = tr.radius();
        let pts = vec![vec![0.5, 0.5], vec![0.55, 0.5]];
        assert_eq!(tr.propose(&pts, &[0.0, 1.0], 0, 1e-6), RefineProposal::Degenerate);
        assert!(tr.radius() < r0);
    }
}
