//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_index)`. The pair is mixed
//! with SplitMix64 into a 256-bit ChaCha8 key, so two streams with different
//! indices are statistically independent and every platform replays the same
//! sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    let mut s = a;
    let ha = splitmix64(&mut s);
    let mut t = b ^ ha;
    splitmix64(&mut t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// Stream whose index is derived from several keys, e.g. `(trial, n_index)`.
    pub fn keyed(master_seed: u64, keys: &[u64]) -> Self {
        let stream_index = keys.iter().fold(0x5EED_u64, |acc, &k| mix(acc, k));
        RngStream::new(master_seed, stream_index)
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = mix(self.master_seed, self.stream_index);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
