//! Deterministic seeding helpers.
//!
//! Every run draws all of its randomness from a single u64 seed. Independent
//! substreams (batch sampling, weight init, sweep z-sets, embedding layout)
//! are derived by mixing a stream label into the seed, so adding draws to one
//! stream never shifts another.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// splitmix64 finalizer. Decorrelates derived seeds.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Named substreams of a run seed.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    WeightInit,
    TrainBatch,
    SweepSamples,
    Dataset,
    Split,
    EmbedInit,
    Palette,
    Other(u64),
}

impl Stream {
    fn label(self) -> u64 {
        match self {
            Stream::WeightInit => 1,
            Stream::TrainBatch => 2,
            Stream::SweepSamples => 3,
            Stream::Dataset => 4,
            Stream::Split => 5,
            Stream::EmbedInit => 6,
            Stream::Palette => 7,
            Stream::Other(n) => 0x100 + n,
        }
    }
}

/// RNG for a named substream of `seed`.
pub fn stream(seed: u64, s: Stream) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed ^ mix(s.label())))
}

/// RNG keyed by both a substream and a per-item key (e.g. a point id), so the
/// draw for one item is independent of how many items precede it.
pub fn keyed(seed: u64, s: Stream, key: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(mix(seed ^ mix(s.label())) ^ mix(key)))
}

/// Stable FNV-1a hash of a string, for keying points by id across runs
/// (std's hasher is not stable across releases).
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// `n` standard normal draws.
pub fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}
