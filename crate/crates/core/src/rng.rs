//! Keyed random streams.
//!
//! Every Monte Carlo replicate draws from its own ChaCha8 stream addressed by
//! `(seed, stream)`. Results therefore depend only on the replicate index and
//! never on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Address of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// A family of streams sharing one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Key for replicate `index`.
    pub fn key(&self, index: u64) -> StreamKey {
        StreamKey::new(self.seed, index)
    }

    /// An independent family, e.g. one per objective call of an optimizer.
    pub fn child(&self, index: u64) -> Streams {
        Streams::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }
}

/// SplitMix64 finalizer; used only to derive child seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
