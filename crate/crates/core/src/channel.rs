//! Seeded additive white Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::link::{Link, LinkConfig};
use crate::scalar::Real;
use crate::signal::Waveform;

/// Identifier of the Gaussian generator, recorded with every result:
/// ChaCha8 stream seeded from a `u64`, ziggurat normals from `rand_distr`.
pub const GENERATOR_ID: &str = "chacha8-ziggurat";

/// Per-trial seed: `master_seed XOR index`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    master_seed ^ index
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    sigma_n: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma_n: f64, seed: u64) -> Result<Self> {
        if !(sigma_n >= 0.0 && sigma_n.is_finite()) {
            return Err(invalid(format!(
                "noise deviation {sigma_n} must be finite and ≥ 0"
            )));
        }
        Ok(Self { sigma_n, seed })
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> NoiseSource {
        NoiseSource {
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            sigma_n: self.sigma_n,
        }
    }
}

/// Stateful noise stream; consecutive calls continue the same sequence, so
/// chunked generation equals one-shot generation.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    sigma_n: f64,
}

impl NoiseSource {
    /// Adds the next `buf.len()` noise samples to `buf`.
    pub fn add_to<T: Real>(&mut self, buf: &mut [T]) {
        if self.sigma_n == 0.0 {
            return;
        }
        for v in buf {
            let g: f64 = StandardNormal.sample(&mut self.rng);
            *v += T::lit(self.sigma_n * g);
        }
    }
}

pub fn add_awgn<T: Real>(x: &Waveform<T>, spec: NoiseSpec) -> Result<Waveform<T>> {
    let mut out = x.samples().to_vec();
    spec.source().add_to(&mut out);
    Waveform::new(out, x.sample_rate())
}

/// Noise deviation that puts the matched-filter output of `config`'s link
/// at `target_snr_db`. The seed is `config.master_seed`.
pub fn calibrate_sigma(config: &LinkConfig, target_snr_db: f64) -> Result<NoiseSpec> {
    let link = Link::new(config.clone())?;
    let sigma = link.calibration().sigma_for(target_snr_db)?;
    NoiseSpec::new(sigma, config.master_seed)
}
