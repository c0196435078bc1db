use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A (master seed, stream) pair naming one independent random stream.
///
/// The master seed is expanded into a ChaCha key; the stream index selects
/// one of its 2^64 streams, so every replication owns a stream that does not
/// depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// A different key for a different purpose (noise vs. reference samples,
    /// one ε vs. another). Labels are hashed, not added.
    pub fn derive(self, label: u64) -> Self {
        Self {
            master: splitmix64(self.master ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream: self.stream,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
