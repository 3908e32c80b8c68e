//! RBF interpolant with polynomial tail:
//! `s(x) = Σᵢ λᵢ φ(‖x − xᵢ‖) + Σⱼ cⱼ p̂ⱼ(x)` with `Σᵢ λᵢ p̂ⱼ(xᵢ) = 0`.

use nalgebra::{DMatrix, DVector};

use super::rbf::{poly_basis, Kernel};
use crate::error::{Error, Result};

const REFINEMENT_STEPS: usize = 3;
// relative residual beyond which the solve is reported as ill-conditioned
const MAX_RELATIVE_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    dim: usize,
    kernel: Kernel,
    nodes: Vec<f64>,
    values: Vec<f64>,
    lambda: Vec<f64>,
    poly: Vec<f64>,
}

impl SurrogateModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rbf_coefficients(&self) -> &[f64] {
        &self.lambda
    }

    pub fn poly_coefficients(&self) -> &[f64] {
        &self.poly
    }

    /// Surrogate value at a scaled point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with_min_distance(x).0
    }

    /// Surrogate value and the distance to the nearest node, sharing one
    /// pass over the nodes.
    pub fn eval_with_min_distance(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let mut s = 0.0;
        let mut min_d2 = f64::INFINITY;
        for (node, &l) in self.nodes.chunks_exact(self.dim).zip(&self.lambda) {
            let d2 = squared_distance(x, node);
            min_d2 = min_d2.min(d2);
            s += l * self.kernel.value(d2.sqrt());
        }
        if !self.poly.is_empty() {
            s += self.poly[0];
            for (c, xi) in self.poly[1..].iter().zip(x) {
                s += c * xi;
            }
        }
        (s, min_d2.sqrt())
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_inputs(nodes: &[Vec<f64>], values: &[f64], kernel: Kernel) -> Result<usize> {
    if nodes.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            actual: values.len(),
        });
    }
    let dim = nodes.first().map(Vec::len).ok_or_else(|| {
        Error::InvalidArgument("a surrogate needs at least one node".into())
    })?;
    if let Some(bad) = nodes.iter().find(|n| n.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    if nodes.len() < kernel.kind.poly_dim(dim) {
        return Err(Error::InvalidArgument(format!(
            "{} nodes cannot determine a {}-term polynomial tail",
            nodes.len(),
            kernel.kind.poly_dim(dim)
        )));
    }
    Ok(dim)
}

/// Saddle-point matrix `[Φ + ρI, P; Pᵀ, 0]`.
fn system_matrix(nodes: &[Vec<f64>], kernel: Kernel, ridge: f64) -> DMatrix<f64> {
    let k = nodes.len();
    let dim = nodes[0].len();
    let m = kernel.kind.poly_dim(dim);
    let mut a = DMatrix::<f64>::zeros(k + m, k + m);
    for i in 0..k {
        a[(i, i)] = kernel.value(0.0) + ridge;
        for j in 0..i {
            let v = kernel.value(squared_distance(&nodes[i], &nodes[j]).sqrt());
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut p = vec![0.0; m];
    for (i, node) in nodes.iter().enumerate() {
        poly_basis(node, m, &mut p);
        for (j, &pj) in p.iter().enumerate() {
            a[(i, k + j)] = pj;
            a[(k + j, i)] = pj;
        }
    }
    a
}

/// Solves the interpolation system. Fails when it is numerically singular.
pub fn fit_surrogate(
    nodes: &[Vec<f64>],
    values: &[f64],
    kernel: Kernel,
    ridge: f64,
) -> Result<SurrogateModel> {
    let dim = check_inputs(nodes, values, kernel)?;
    let k = nodes.len();
    let m = kernel.kind.poly_dim(dim);
    let a = system_matrix(nodes, kernel, ridge);
    let mut rhs = DVector::<f64>::zeros(k + m);
    rhs.rows_mut(0, k).copy_from_slice(values);

    let lu = a.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    for _ in 0..REFINEMENT_STEPS {
        let r = &rhs - &a * &x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let residual = (&rhs - &a * &x).amax();
    let scale = rhs.amax().max(1.0);
    if residual > MAX_RELATIVE_RESIDUAL * scale {
        return Err(Error::SingularSystem);
    }

    Ok(SurrogateModel {
        dim,
        kernel,
        nodes: nodes.iter().flatten().copied().collect(),
        values: values.to_vec(),
        lambda: x.rows(0, k).iter().copied().collect(),
        poly: x.rows(k, m).iter().copied().collect(),
    })
}

/// Leave-one-out residuals `vᵢ − s₋ᵢ(xᵢ)` for every node, from one inverse
/// of the full system: the residual equals `λᵢ / (A⁻¹)ᵢᵢ`.
pub fn loo_residuals(
    nodes: &[Vec<f64>],
    values: &[f64],
    kernel: Kernel,
    ridge: f64,
) -> Result<Vec<f64>> {
    let dim = check_inputs(nodes, values, kernel)?;
    let k = nodes.len();
    let m = kernel.kind.poly_dim(dim);
    if k < m + 2 {
        return Err(Error::InvalidArgument(
            "too few nodes for leave-one-out".into(),
        ));
    }
    let a = system_matrix(nodes, kernel, ridge);
    let inv = a.try_inverse().ok_or(Error::SingularSystem)?;
    let mut rhs = DVector::<f64>::zeros(k + m);
    rhs.rows_mut(0, k).copy_from_slice(values);
    let coeffs = &inv * rhs;
    let out: Vec<f64> = (0..k).map(|i| coeffs[i] / inv[(i, i)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::rbf::RbfKind;

    #[test]
    fn linear_two_nodes_by_hand() {
        let nodes = vec![vec![0.0], vec![1.0]];
        let m = fit_surrogate(&nodes, &[0.0, 1.0], Kernel::new(RbfKind::Linear), 0.0).unwrap();
        // [0 1 1; 1 0 1; 1 1 0] [λ₁ λ₂ c]ᵀ = [0 1 0]ᵀ
        assert!((m.rbf_coefficients()[0] - 0.5).abs() < 1e-12);
        assert!((m.rbf_coefficients()[1] + 0.5).abs() < 1e-12);
        assert!((m.poly_coefficients()[0] - 0.5).abs() < 1e-12);
        assert!((m.eval(&[0.5]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_single_node_closed_form() {
        let nodes = vec![vec![0.2, 0.4]];
        let m = fit_surrogate(&nodes, &[1.0], Kernel::new(RbfKind::Gaussian), 0.0).unwrap();
        for x in [[0.0, 0.0], [1.0, 1.0], [0.2, 0.9]] {
            let d2 = squared_distance(&x, &nodes[0]);
            assert!((m.eval(&x) - (-0.1 * d2).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_nodes_for_tail() {
        let nodes = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(fit_surrogate(&nodes, &[0.0, 1.0], Kernel::new(RbfKind::Cubic), 0.0).is_err());
    }

    #[test]
    fn duplicate_nodes_are_singular() {
        let nodes = vec![vec![0.3], vec![0.3], vec![0.9]];
        let r = fit_surrogate(&nodes, &[0.0, 1.0, 0.5], Kernel::new(RbfKind::Linear), 0.0);
        assert_eq!(r, Err(Error::SingularSystem));
    }
}
