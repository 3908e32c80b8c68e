use rand::seq::SliceRandom;
use rand::Rng;

use super::model::squared_distance;

/// Number of random designs compared by the maximin criterion.
pub const MAXIMIN_CANDIDATES: usize = 50;

/// Latin hypercube of `count` points in `[0,1]^dim`: in every coordinate each
/// of the `count` equal bins holds exactly one point. Among
/// [`MAXIMIN_CANDIDATES`] random designs the one with the largest minimum
/// pairwise distance is kept.
pub fn latin_hypercube<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    if count == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..MAXIMIN_CANDIDATES {
        let design = random_design(count, dim, rng);
        let score = min_pairwise_distance(&design);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, design));
        }
        if count == 1 {
            break;
        }
    }
    best.map(|(_, d)| d).unwrap_or_default()
}

fn random_design<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; count];
    let mut bins: Vec<usize> = (0..count).collect();
    for d in 0..dim {
        bins.shuffle(rng);
        for (p, &b) in points.iter_mut().zip(&bins) {
            p[d] = (b as f64 + rng.random::<f64>()) / count as f64;
        }
    }
    points
}

pub(crate) fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            m = m.min(squared_distance(&points[i], &points[j]));
        }
    }
    m.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let design = latin_hypercube(4, 2, &mut rng);
        assert_eq!(design.len(), 4);
        for d in 0..2 {
            let mut bins: Vec<usize> = design.iter().map(|p| (p[d] * 4.0) as usize).collect();
            bins.sort_unstable();
            assert_eq!(bins, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn single_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let design = latin_hypercube(1, 3, &mut rng);
        assert_eq!(design.len(), 1);
        assert!(design[0].iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn seeded_designs_repeat() {
        let a = latin_hypercube(10, 3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = latin_hypercube(10, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn maximin_beats_a_typical_design() {
        let chosen = min_pairwise_distance(&latin_hypercube(12, 3, &mut ChaCha8Rng::seed_from_u64(4)));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let best = (0..MAXIMIN_CANDIDATES)
            .map(|_| min_pairwise_distance(&random_design(12, 3, &mut rng)))
            .fold(0.0, f64::max);
        assert_eq!(chosen, best);
    }
}
