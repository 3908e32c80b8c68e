use serde::{Deserialize, Serialize};

/// Default shape parameter for the multiquadric and gaussian kernels.
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Radial basis function family. Each kind fixes the degree of its
/// polynomial tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbfKind {
    Linear,
    Cubic,
    Multiquadric,
    ThinPlate,
    Gaussian,
}

impl RbfKind {
    /// Table order, also the tie-break order for model selection.
    pub const ALL: [RbfKind; 5] = [
        RbfKind::Linear,
        RbfKind::Cubic,
        RbfKind::Multiquadric,
        RbfKind::ThinPlate,
        RbfKind::Gaussian,
    ];

    /// Polynomial tail degree; `-1` means no tail.
    pub fn poly_degree(self) -> i32 {
        match self {
            RbfKind::Linear | RbfKind::Multiquadric => 0,
            RbfKind::Cubic | RbfKind::ThinPlate => 1,
            RbfKind::Gaussian => -1,
        }
    }

    /// Dimension of the polynomial space in `dim` variables.
    pub fn poly_dim(self, dim: usize) -> usize {
        match self.poly_degree() {
            -1 => 0,
            0 => 1,
            _ => dim + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RbfKind::Linear => "linear",
            RbfKind::Cubic => "cubic",
            RbfKind::Multiquadric => "multiquadric",
            RbfKind::ThinPlate => "thin_plate",
            RbfKind::Gaussian => "gaussian",
        }
    }
}

/// A kernel kind together with its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: RbfKind,
    pub gamma: f64,
}

impl Kernel {
    pub fn new(kind: RbfKind) -> Self {
        Self {
            kind,
            gamma: DEFAULT_GAMMA,
        }
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        rbf_value(self.kind, self.gamma, r)
    }
}

/// `φ(r)` for the given kernel. The thin-plate spline takes its limit 0 at
/// the origin.
#[inline]
pub fn rbf_value(kind: RbfKind, gamma: f64, r: f64) -> f64 {
    match kind {
        RbfKind::Linear => r,
        RbfKind::Cubic => r * r * r,
        RbfKind::Multiquadric => (r * r + gamma * gamma).sqrt(),
        RbfKind::ThinPlate => {
            if r > 0.0 {
                r * r * r.ln()
            } else {
                0.0
            }
        }
        RbfKind::Gaussian => (-gamma * r * r).exp(),
    }
}

/// Monomial basis `1, x₁, …, x_N` truncated to `poly_dim` terms.
#[inline]
pub(crate) fn poly_basis(point: &[f64], poly_dim: usize, out: &mut [f64]) {
    if poly_dim == 0 {
        return;
    }
    out[0] = 1.0;
    for j in 1..poly_dim {
        out[j] = point[j - 1];
    }
}
