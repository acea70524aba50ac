//! Counter-based splittable random numbers.
//!
//! Every Gaussian draw is a pure function of `(seed, replica, mode, step,
//! lane)`, so ensembles parallelize deterministically: replica r drawn on 8
//! threads is bit-identical to replica r drawn on 1 thread.

/// splitmix64 step. Returns (random, new state).
#[inline]
pub fn splitmix64(state: u64) -> (u64, u64) {
    let next = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = next;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31), next)
}

#[inline]
fn mix(x: u64) -> u64 {
    splitmix64(x).0
}

/// Stateless counter RNG keyed by a seed and a replica id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, replica: u64) -> Self {
        // Two mixing rounds decorrelate nearby (seed, replica) pairs.
        CounterRng {
            key: mix(mix(seed) ^ mix(replica.wrapping_mul(0xa076_1d64_78bd_642f))),
        }
    }

    #[inline]
    fn word(&self, mode: u64, step: u64, lane: u64) -> u64 {
        let c = self
            .key
            .wrapping_add(mix(mode.wrapping_add(0x1000_0000_0000_0001u64.wrapping_mul(step))))
            .wrapping_add(mix(lane ^ 0x9e6c_63d0_876a_9a4d));
        mix(c)
    }

    /// Uniform in (0, 1), never exactly 0 or 1.
    #[inline]
    pub fn uniform(&self, mode: u64, step: u64, lane: u64) -> f64 {
        let bits = self.word(mode, step, lane);
        ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller on lanes (2*lane, 2*lane+1).
    #[inline]
    pub fn normal(&self, mode: u64, step: u64, lane: u64) -> f64 {
        let u1 = self.uniform(mode, step, 2 * lane);
        let u2 = self.uniform(mode, step, 2 * lane + 1);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
