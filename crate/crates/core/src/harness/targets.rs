//! Named target presets and their resolution into band states.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{fidelity, random_target, TargetState, C64};

/// How a target is specified in a config file or on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `|m⟩`.
    Basis(i64),
    /// `(|m₁⟩ − |m₂⟩)/√2`.
    Sr(i64, i64),
    /// `(|m₁⟩ − i|m₂⟩)/√2`.
    Sc(i64, i64),
    /// `(|m₁⟩ + e^{iφ}|m₂⟩)/√2` with φ in degrees.
    Pair { m1: i64, m2: i64, phase_deg: f64 },
    /// Explicit `(re, im)` amplitudes on `-n, -n+2, …, n`, normalized on use.
    Amplitudes(Vec<(f64, f64)>),
    /// `count` Haar-random states.
    Random { count: usize },
}

impl TargetSpec {
    /// Number of concrete targets this spec expands to.
    pub fn count(&self) -> usize {
        match self {
            TargetSpec::Random { count } => *count,
            _ => 1,
        }
    }

    /// Resolves one concrete state on the band of an `steps`-step walk.
    /// `random_seed` is only used by [`TargetSpec::Random`].
    pub fn resolve(&self, steps: usize, random_seed: u64) -> Result<TargetState> {
        let one = C64::new(1.0, 0.0);
        match self {
            TargetSpec::Basis(m) => TargetState::basis(steps, *m),
            TargetSpec::Sr(a, b) => TargetState::superposition(steps, &[(*a, one), (*b, -one)]),
            TargetSpec::Sc(a, b) => {
                TargetState::superposition(steps, &[(*a, one), (*b, C64::new(0.0, -1.0))])
            }
            TargetSpec::Pair { m1, m2, phase_deg } => TargetState::superposition(
                steps,
                &[(*m1, one), (*m2, C64::from_polar(1.0, phase_deg.to_radians()))],
            ),
            TargetSpec::Amplitudes(a) => {
                if a.len() != steps + 1 {
                    return Err(Error::DimensionMismatch {
                        expected: steps + 1,
                        actual: a.len(),
                    });
                }
                TargetState::from_amplitudes(a.iter().map(|&(re, im)| C64::new(re, im)).collect())
            }
            TargetSpec::Random { .. } => random_target(steps + 1, random_seed),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Basis(m) => write!(f, "|{m}>"),
            TargetSpec::Sr(a, b) => write!(f, "SR_{a}^{b}"),
            TargetSpec::Sc(a, b) => write!(f, "SC_{a}^{b}"),
            TargetSpec::Pair { m1, m2, phase_deg } => write!(f, "pair_{m1}_{m2}_{phase_deg}"),
            TargetSpec::Amplitudes(a) => write!(f, "amplitudes[{}]", a.len()),
            TargetSpec::Random { count } => write!(f, "random:{count}"),
        }
    }
}

/// Parses `|1>`, `1`, `SR_1^-1`, `SC_3^-3`, `random:5`.
impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse target `{s}`"));
        if let Some(rest) = s.strip_prefix("random:") {
            let count = rest.parse().map_err(|_| bad())?;
            return Ok(TargetSpec::Random { count });
        }
        for (prefix, real) in [("SR_", true), ("SC_", false)] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let (a, b) = rest.split_once('^').ok_or_else(bad)?;
                let a = a.parse().map_err(|_| bad())?;
                let b = b.parse().map_err(|_| bad())?;
                return Ok(if real {
                    TargetSpec::Sr(a, b)
                } else {
                    TargetSpec::Sc(a, b)
                });
            }
        }
        let inner = s
            .strip_prefix('|')
            .and_then(|r| r.strip_suffix('>'))
            .unwrap_or(s);
        inner.parse().map(TargetSpec::Basis).map_err(|_| bad())
    }
}

/// Perturbation probability `q` and restart threshold `t` used for each
/// engineered state in the perturbation study (three-step walk).
pub const PERTURBATION_TABLE: [(&str, f64, f64); 6] = [
    ("|1>", 0.0015, 0.02),
    ("|3>", 0.0015, 0.02),
    ("(|-1>+|1>)/sqrt2", 0.008, 0.02),
    ("(|-1>+i|1>)/sqrt2", 0.004, 0.02),
    ("(|-3>+|3>)/sqrt2", 0.0015, 0.05),
    ("random", 0.0015, 0.02),
];

fn table_states() -> Result<Vec<TargetState>> {
    let one = C64::new(1.0, 0.0);
    Ok(vec![
        TargetState::basis(3, 1)?,
        TargetState::basis(3, 3)?,
        TargetState::superposition(3, &[(-1, one), (1, one)])?,
        TargetState::superposition(3, &[(-1, one), (1, C64::new(0.0, 1.0))])?,
        TargetState::superposition(3, &[(-3, one), (3, one)])?,
    ])
}

/// `(q, t)` for a target: the matching table row, or the random-state row
/// for anything not in the table.
pub fn perturbation_defaults(target: &TargetState) -> (f64, f64) {
    if target.half_width() == 3 {
        if let Ok(states) = table_states() {
            for (state, row) in states.iter().zip(PERTURBATION_TABLE.iter()) {
                if fidelity(state, target).is_ok_and(|f| (f - 1.0).abs() < 1e-9) {
                    return (row.1, row.2);
                }
            }
        }
    }
    let row = PERTURBATION_TABLE[5];
    (row.1, row.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_presets() {
        assert_eq!("|1>".parse::<TargetSpec>().unwrap(), TargetSpec::Basis(1));
        assert_eq!("-3".parse::<TargetSpec>().unwrap(), TargetSpec::Basis(-3));
        assert_eq!("SR_1^-1".parse::<TargetSpec>().unwrap(), TargetSpec::Sr(1, -1));
        assert_eq!("SC_3^-3".parse::<TargetSpec>().unwrap(), TargetSpec::Sc(3, -3));
        assert_eq!(
            "random:7".parse::<TargetSpec>().unwrap(),
            TargetSpec::Random { count: 7 }
        );
        assert!("SR_1".parse::<TargetSpec>().is_err());
    }

    #[test]
    fn complex_superposition_phase() {
        let sc = TargetSpec::Sc(1, -1).resolve(3, 0).unwrap();
        let a = sc.amplitudes();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[2] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!((a[1] - C64::new(0.0, -h)).norm() < 1e-12);
    }

    #[test]
    fn table_lookup() {
        assert_eq!(perturbation_defaults(&TargetState::basis(3, 1).unwrap()), (0.0015, 0.02));
        let s = TargetSpec::Pair {
            m1: -3,
            m2: 3,
            phase_deg: 0.0,
        }
        .resolve(3, 0)
        .unwrap();
        assert_eq!(perturbation_defaults(&s).1, 0.05);
        let s = TargetSpec::Pair {
            m1: -1,
            m2: 1,
            phase_deg: 90.0,
        }
        .resolve(3, 0)
        .unwrap();
        assert_eq!(perturbation_defaults(&s).0, 0.004);
        let r = TargetSpec::Random { count: 1 }.resolve(3, 9).unwrap();
        assert_eq!(perturbation_defaults(&r), (0.0015, 0.02));
    }
}
