use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// A privacy budget `epsilon > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PrivacyBudget(f64);

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(PrivacyBudget(epsilon))
        } else {
            Err(Error::invalid(format!("epsilon must be positive and finite, got {epsilon}")))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }
}

/// Source of uniform draws on the open interval `(-0.5, 0.5)`.
pub trait UniformSource {
    fn centered_uniform(&mut self) -> f64;
}

/// Anything that can hand out zero-mean Laplace noise at a requested scale.
pub trait NoiseSource {
    fn laplace(&mut self, scale: f64) -> f64;
}

/// ChaCha20-backed uniform source. The same seed always yields the same
/// stream.
#[derive(Debug, Clone)]
pub struct SeededUniform {
    rng: ChaCha20Rng,
}

impl SeededUniform {
    pub fn new(seed: u64) -> Self {
        SeededUniform {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }
}

impl UniformSource for SeededUniform {
    fn centered_uniform(&mut self) -> f64 {
        loop {
            // [0, 1) shifted to [-0.5, 0.5); the lower endpoint is rejected.
            let x: f64 = self.rng.random();
            if x > 0.0 {
                return x - 0.5;
            }
        }
    }
}

impl NoiseSource for SeededUniform {
    fn laplace(&mut self, scale: f64) -> f64 {
        laplace_from_uniform(scale, self.centered_uniform())
    }
}

/// Inverse-CDF transform of `u` in `(-0.5, 0.5)` to a `Lap(0, scale)` draw.
pub fn laplace_from_uniform(scale: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Laplace distribution centred at zero with a fixed scale.
#[derive(Debug, Clone)]
pub struct LaplaceSampler<U = SeededUniform> {
    scale: f64,
    source: U,
}

impl LaplaceSampler<SeededUniform> {
    pub fn seeded(scale: f64, seed: u64) -> Result<Self> {
        Self::new(scale, SeededUniform::new(seed))
    }
}

impl<U: UniformSource> LaplaceSampler<U> {
    pub fn new(scale: f64, source: U) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("laplace scale must be positive, got {scale}")));
        }
        Ok(LaplaceSampler { scale, source })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample(&mut self) -> f64 {
        laplace_from_uniform(self.scale, self.source.centered_uniform())
    }
}

/// Replays a fixed list of noise values, cycling when exhausted and
/// ignoring the requested scale. Used to pin noise in tests and to run the
/// mechanisms with noise switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedNoise {
    values: Vec<f64>,
    next: usize,
}

impl ScriptedNoise {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "scripted noise needs at least one value");
        ScriptedNoise { values, next: 0 }
    }

    pub fn zeros() -> Self {
        Self::new(vec![0.0])
    }
}

impl NoiseSource for ScriptedNoise {
    fn laplace(&mut self, _scale: f64) -> f64 {
        let v = self.values[self.next];
        self.next = (self.next + 1) % self.values.len();
        v
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a root seed and a path of stream
/// identifiers, e.g. `(party, round)`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &id| splitmix64(acc ^ splitmix64(id.wrapping_add(0x632B_E59B_D9B4_E019))))
}
