//! Counter-based seed fan-out: a run's streams depend only on the master seed
//! and the run's coordinates, never on how many other runs exist.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TARGET_COMPONENT: u64 = 0;
pub const ORACLE_COMPONENT: u64 = 1;
pub const OPTIMIZER_COMPONENT: u64 = 2;

/// First 8 bytes (little endian) of SHA-256 over `master` and `path`, each
/// as u64 LE.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in path {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_le_bytes(b)
}

/// The three streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub target: u64,
    pub oracle: u64,
    pub optimizer: u64,
}

impl RunSeeds {
    /// Seeds for `(experiment, steps, state, repeat)`. The target stream
    /// ignores the repeat so every repeat of a state sees the same target.
    pub fn derive(master: u64, experiment: u64, steps: usize, state: usize, repeat: usize) -> Self {
        let base = [experiment, steps as u64, state as u64];
        let run = [experiment, steps as u64, state as u64, repeat as u64];
        let with = |p: &[u64], c: u64| {
            let mut v = p.to_vec();
            v.push(c);
            derive_seed(master, &v)
        };
        Self {
            target: with(&base, TARGET_COMPONENT),
            oracle: with(&run, ORACLE_COMPONENT),
            optimizer: with(&run, OPTIMIZER_COMPONENT),
        }
    }
}
