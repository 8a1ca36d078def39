//! Seeded, order-independent perturbation streams supported on `[-1, nu]`.
//!
//! The generator is counter based: the `k`-th raw word of trajectory `i` is
//!
//! ```text
//! key_i  = mix64(seed ^ mix64(i * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03))
//! word_k = mix64(key_i + (k + 1) * 0x9E3779B97F4A7C15)
//! ```
//!
//! (wrapping `u64` arithmetic), where `mix64` is the SplitMix64 finaliser
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z ^ (z >> 31)
//! ```
//!
//! so any sample is a pure function of `(seed, trajectory, step)` and streams
//! can be consumed in parallel in any order. Words become doubles on `[0, 1)`
//! through their top 53 bits.

use thiserror::Error;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const INDEX_OFFSET: u64 = 0xD1B5_4A32_D192_ED03;
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// Default base seed when the configuration does not name one.
pub const DEFAULT_SEED: u64 = 20_180_117;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("noise nu = {0} is invalid: the log-skewed law needs nu >= 1")]
    InvalidNu(f64),
    #[error("stream law is {actual:?}, requested {requested:?}")]
    WrongLaw { requested: NoiseLaw, actual: NoiseLaw },
}

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLaw {
    /// `xi = 2u - 1`, `u ~ U[0, 1)`; `nu = 1`.
    UniformSymmetric,
    /// `xi = exp(ln(nu + 1) ln(2 zeta) / ln 2) - 1`, `zeta ~ U(0, 1)`.
    LogSkewed,
}

/// An iid perturbation law plus the base seed of its streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    law: NoiseLaw,
    nu: f64,
    base_seed: u64,
}

impl NoiseSpec {
    pub fn uniform(base_seed: u64) -> Self {
        Self {
            law: NoiseLaw::UniformSymmetric,
            nu: 1.0,
            base_seed,
        }
    }

    pub fn skewed(nu: f64, base_seed: u64) -> Result<Self, NoiseError> {
        if !(nu >= 1.0) || !nu.is_finite() {
            return Err(NoiseError::InvalidNu(nu));
        }
        Ok(Self {
            law: NoiseLaw::LogSkewed,
            nu,
            base_seed,
        })
    }

    pub fn law(&self) -> NoiseLaw {
        self.law
    }

    /// Right end of the support.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    /// Independent substream for trajectory `index`.
    pub fn derive_stream(&self, index: u64) -> SampleStream {
        let key = mix64(self.base_seed ^ mix64(index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(INDEX_OFFSET)));
        SampleStream {
            key,
            counter: 0,
            law: self.law,
            nu: self.nu,
        }
    }
}

/// Maps `zeta` in `(0, 1)` to the log-skewed law on `[-1, nu]`.
/// `zeta = 1/2` maps to exactly 0.
pub fn skewed_from_uniform(zeta: f64, nu: f64) -> f64 {
    let xi = ((nu + 1.0).ln() * (2.0 * zeta).ln() / std::f64::consts::LN_2).exp() - 1.0;
    xi.clamp(-1.0, nu)
}

/// A deterministic sequence of samples owned by one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    key: u64,
    counter: u64,
    law: NoiseLaw,
    nu: f64,
}

impl SampleStream {
    /// Raw word at position `counter`, independent of the stream position.
    #[inline]
    pub fn word_at(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        let w = self.word_at(self.counter);
        self.counter += 1;
        w
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * UNIT
    }

    /// Number of words consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    pub fn law(&self) -> NoiseLaw {
        self.law
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sample_uniform(&mut self) -> Result<f64, NoiseError> {
        if self.law != NoiseLaw::UniformSymmetric {
            return Err(NoiseError::WrongLaw {
                requested: NoiseLaw::UniformSymmetric,
                actual: self.law,
            });
        }
        Ok(2.0 * self.next_unit() - 1.0)
    }

    pub fn sample_skewed(&mut self) -> Result<f64, NoiseError> {
        if self.law != NoiseLaw::LogSkewed {
            return Err(NoiseError::WrongLaw {
                requested: NoiseLaw::LogSkewed,
                actual: self.law,
            });
        }
        // zeta on the open interval keeps ln(2 zeta) finite
        let zeta = self.next_unit().clamp(UNIT, 1.0 - UNIT);
        Ok(skewed_from_uniform(zeta, self.nu))
    }

    /// Next sample of whichever law the stream was built for.
    #[inline]
    pub fn sample(&mut self) -> f64 {
        match self.law {
            NoiseLaw::UniformSymmetric => 2.0 * self.next_unit() - 1.0,
            NoiseLaw::LogSkewed => {
                let zeta = self.next_unit().clamp(UNIT, 1.0 - UNIT);
                skewed_from_uniform(zeta, self.nu)
            }
        }
    }
}

impl Iterator for SampleStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.sample())
    }
}
