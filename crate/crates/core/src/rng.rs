use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Root of all randomness in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    /// Child seed for an independent stream. Injective in `stream_id` for a
    /// fixed parent, so distinct streams never share a seed.
    pub fn split(self, stream_id: u64) -> RngSeed {
        let z = self
            .0
            .wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream_id.wrapping_add(1)));
        RngSeed(mix64(z))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

pub fn split_rng(seed: RngSeed, stream_id: u64) -> RngSeed {
    seed.split(stream_id)
}
