use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Fx;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed derivation: a SplitMix64 chain over `parts`.
///
/// The mixing constants are part of the reproducibility contract; changing
/// them changes every published number.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Seedable, splittable random stream.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `stream`; does not advance `self`.
    pub fn split(&self, stream: u64) -> RngState {
        RngState::new(derive_seed(&[self.seed, stream]))
    }

    /// Uniform over the representable values in `[a, b]`.
    pub fn uniform(&mut self, a: Fx, b: Fx) -> Fx {
        debug_assert!(a <= b);
        Fx::from_raw(self.inner.random_range(a.raw()..=b.raw()))
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> Fx {
        Fx::from_raw(self.inner.random_range(0..Fx::ONE.raw()))
    }

    /// Uniform in `(0, 1)`.
    pub fn open_unit(&mut self) -> Fx {
        Fx::from_raw(self.inner.random_range(1..Fx::ONE.raw()))
    }

    /// `true` with probability `p` (a `unit()` draw below `p`).
    pub fn chance(&mut self, p: Fx) -> bool {
        self.unit() < p
    }

    pub fn coin(&mut self) -> bool {
        self.inner.random()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Double-precision draw in `[0, 1)`, for simulator-side decisions.
    pub fn real(&mut self) -> f64 {
        self.inner.random()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }
}

pub fn rand_uniform(rng: &mut RngState, a: Fx, b: Fx) -> Fx {
    rng.uniform(a, b)
}
