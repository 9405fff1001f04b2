//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own `(purpose, scope)` stream
//! so that changing how many values one subsystem consumes cannot perturb the
//! sequences seen by another. Streams are ChaCha8 generators keyed from the
//! run seed, which makes every draw reproducible across runs and platforms.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// What a stream is consumed for. The discriminant participates in stream
/// key derivation, so reordering variants changes every seeded result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StreamPurpose {
    /// CBR start-time jitter, one stream per source node.
    Traffic = 0,
    /// Contention backoff draws, one stream per interface.
    Backoff = 1,
    /// Shadowing process, one stream per transmitting node.
    Shadowing = 2,
    /// Frame reception Bernoulli trials, one stream per receiving node.
    Reception = 3,
    /// Body jitter, one stream per body.
    Mobility = 4,
    /// Waypoint selection, one stream per group.
    Waypoint = 5,
    /// Flood-forwarding jitter, one stream per node.
    FloodJitter = 6,
}

/// Stream address: a purpose tag plus a scope index (node, interface, body
/// or group id depending on the purpose).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StreamId {
    pub purpose: StreamPurpose,
    pub scope: u32,
}

impl StreamId {
    pub const fn new(purpose: StreamPurpose, scope: u32) -> Self {
        Self { purpose, scope }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_key(seed: u64, id: StreamId) -> [u8; 32] {
    let mut state = seed
        ^ (id.purpose as u64).wrapping_mul(0xA076_1D64_78BD_642F)
        ^ u64::from(id.scope).wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Registry of lazily-created random streams for one simulation run.
pub struct RandomStreams {
    seed: u64,
    streams: BTreeMap<(u8, u32), ChaCha8Rng>,
}

impl RandomStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed, streams: BTreeMap::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&mut self, id: StreamId) -> &mut ChaCha8Rng {
        let seed = self.seed;
        self.streams
            .entry((id.purpose as u8, id.scope))
            .or_insert_with(|| ChaCha8Rng::from_seed(derive_key(seed, id)))
    }

    /// Uniform value in `[0, 1)`, built from the top 53 bits of one u64.
    pub fn next_f64(&mut self, id: StreamId) -> f64 {
        (self.rng(id).next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform value in `[lo, hi)`; `lo == hi` returns `lo` without a draw.
    pub fn uniform(&mut self, id: StreamId, lo: f64, hi: f64) -> f64 {
        assert!(lo <= hi, "uniform bounds inverted: [{lo}, {hi})");
        if lo == hi {
            return lo;
        }
        lo + self.next_f64(id) * (hi - lo)
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn uniform_u32(&mut self, id: StreamId, lo: u32, hi: u32) -> u32 {
        assert!(lo <= hi);
        let span = u64::from(hi - lo) + 1;
        lo + (self.rng(id).next_u64() % span) as u32
    }

    /// Standard normal via Box-Muller, scaled to `(mean, std)`.
    pub fn normal(&mut self, id: StreamId, mean: f64, std: f64) -> f64 {
        let u1 = (1.0 - self.next_f64(id)).max(f64::MIN_POSITIVE); // (0, 1]
        let u2 = self.next_f64(id);
        mean + std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
