//! Deterministic, counter-based random streams.
//!
//! Every stochastic quantity in the simulator is drawn from a stream
//! addressed by `(master seed, domain label, counter)`. Streams are
//! independent of evaluation order, so Monte Carlo loops can be run
//! sequentially or in parallel (rayon) with bit-identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; used to expand seed material.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a hash of a domain label.
fn hash_domain(domain: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in domain.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A stream address: master seed plus a domain label plus a counter.
///
/// The same address always yields the same generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub master: u64,
    pub domain: u64,
    pub counter: u64,
}

impl StreamKey {
    pub fn new(master: u64, domain: &str, counter: u64) -> Self {
        StreamKey {
            master,
            domain: hash_domain(domain),
            counter,
        }
    }

    /// Derive a sub-stream, e.g. per shot within an experiment stream.
    pub fn substream(&self, counter: u64) -> Self {
        let mut s = self.domain ^ self.counter.rotate_left(17);
        let mixed = splitmix64(&mut s);
        StreamKey {
            master: self.master,
            domain: mixed,
            counter,
        }
    }

    /// Materialize the generator for this address.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self
            .master
            .wrapping_add(self.domain.rotate_left(32))
            .wrapping_add(self.counter.wrapping_mul(0xA24B_AED4_963E_E407));
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Convenience: generator for `(master, domain, counter)`.
pub fn stream(master: u64, domain: &str, counter: u64) -> ChaCha8Rng {
    StreamKey::new(master, domain, counter).rng()
}
