//! Named random substreams derived from one master seed.
//!
//! Every draw purpose ("mpc.lifetime", "noise", ...) owns an independent
//! ChaCha stream, so adding draws for one purpose never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A generator on stream 0 of `seed`.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Streams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, purpose: &str) -> StreamRng {
        self.stream_id(fnv1a(purpose.as_bytes()))
    }

    /// Stream for item `index` of `purpose`, e.g. the noise of one set.
    pub fn indexed(&self, purpose: &str, index: u64) -> StreamRng {
        self.stream_id(splitmix(fnv1a(purpose.as_bytes()) ^ splitmix(index)))
    }

    fn stream_id(&self, id: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(id);
        rng
    }
}

/// `n` draws from `spec` on the default stream of `seed`.
pub fn sample(spec: &super::dist::DistSpec, n: usize, seed: u64) -> Vec<f64> {
    spec.sample_n(n, &mut seeded(seed))
}
