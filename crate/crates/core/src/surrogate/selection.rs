use super::model::loo_residuals;
use super::rbf::{Kernel, RbfKind};

/// Only the most recent points take part in cross-validation.
pub const LOO_WINDOW: usize = 50;
const TIE_TOLERANCE: f64 = 1e-12;

/// Picks the kernel with the smallest total absolute leave-one-out error over
/// the last [`LOO_WINDOW`] points. Returns `current` when there are too few
/// points or no candidate can be fitted. Ties go to the earlier candidate.
pub fn select_model_loo(
    nodes: &[Vec<f64>],
    values: &[f64],
    candidates: &[RbfKind],
    current: Kernel,
    ridge: f64,
) -> Kernel {
    let Some(dim) = nodes.first().map(Vec::len) else {
        return current;
    };
    let needed = candidates.iter().map(|k| k.poly_dim(dim)).max().unwrap_or(0) + 2;
    if nodes.len() < needed {
        return current;
    }
    let start = nodes.len().saturating_sub(LOO_WINDOW);
    let (nodes, values) = (&nodes[start..], &values[start..]);

    let mut best: Option<(Kernel, f64)> = None;
    for &kind in candidates {
        let kernel = Kernel {
            kind,
            gamma: current.gamma,
        };
        let Ok(residuals) = loo_residuals(nodes, values, kernel, ridge) else {
            continue;
        };
        let err: f64 = residuals.iter().map(|r| r.abs()).sum();
        let better = match best {
            None => true,
            Some((_, b)) => err < b - TIE_TOLERANCE * b.abs().max(1.0),
        };
        if better {
            best = Some((kernel, err));
        }
    }
    best.map_or(current, |(k, _)| k)
}
