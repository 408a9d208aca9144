//! Counter-based random streams.
//!
//! A stream is keyed by `(seed, substream)`; the underlying ChaCha8 block
//! counter plays the role of the draw index, so any trial can be regenerated
//! independently of every other trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub substream: u64,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        RngStream { seed, substream }
    }

    /// A derived stream for a sub-task; distinct keys give distinct substreams.
    pub fn child(&self, key: u64) -> RngStream {
        RngStream { seed: self.seed, substream: mix64(self.substream ^ mix64(key)) }
    }

    /// Convenience for nested keys such as `(tag, M, trial)`.
    pub fn child_path(&self, keys: &[u64]) -> RngStream {
        keys.iter().fold(*self, |s, &k| s.child(k))
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        rng
    }
}

/// Parses a seed given in decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        t.parse::<u64>()
    };
    parsed.map_err(|_| Error::invalid(format!("cannot parse seed {text:?}")))
}
