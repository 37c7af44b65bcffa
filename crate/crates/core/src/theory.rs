//! Closed-form detection and SNR predictions.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
pub use crate::special::{erfc, erfc_inv};

/// Asymptotic PAPR slope of a ±1 RC pulse train with β = ½, per `n_p/n_s`.
pub const PAPR_SLOPE: f64 = 1.143;

/// Smallest `n_p/n_s` for which [`papr_model`] is accepted.
pub const PAPR_MODEL_MIN_RATIO: f64 = 8.0;

/// Probability that Gaussian noise of deviation `sigma_n` flips the sign of
/// a pulse of magnitude `a_abs`: `½·erfc(|A|/(σ_n√2))`.
pub fn ber_for_amplitude(a_abs: f64, sigma_n: f64) -> Result<f64> {
    if !(sigma_n > 0.0) {
        return Err(invalid(format!(
            "noise deviation {sigma_n} must be positive"
        )));
    }
    Ok(0.5 * erfc(a_abs.abs() / (sigma_n * SQRT_2)))
}

/// `1.143 · n_p / n_s`.
pub fn papr_model(n_p: usize, n_s: usize) -> Result<f64> {
    if n_s == 0 {
        return Err(invalid("n_s must be positive"));
    }
    let ratio = n_p as f64 / n_s as f64;
    if ratio < PAPR_MODEL_MIN_RATIO {
        return Err(Error::ModelRange(format!(
            "n_p/n_s = {ratio} below {PAPR_MODEL_MIN_RATIO}"
        )));
    }
    Ok(PAPR_SLOPE * ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaprSource {
    Model,
    Measured(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrLimitQuery {
    n_p: usize,
    n_s: usize,
    target_ber: f64,
    papr_source: PaprSource,
}

impl SnrLimitQuery {
    pub fn new(n_p: usize, n_s: usize, target_ber: f64, papr_source: PaprSource) -> Result<Self> {
        if n_s == 0 || n_p < n_s {
            return Err(invalid(format!(
                "need n_p ≥ n_s > 0, got n_p={n_p}, n_s={n_s}"
            )));
        }
        if !(target_ber > 0.0 && target_ber < 0.5) {
            return Err(invalid(format!("target BER {target_ber} outside (0, ½)")));
        }
        if let PaprSource::Measured(p) = papr_source {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(invalid(format!("measured PAPR {p} must be finite and ≥ 1")));
            }
        }
        Ok(Self {
            n_p,
            n_s,
            target_ber,
            papr_source,
        })
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn target_ber(&self) -> f64 {
        self.target_ber
    }

    pub fn papr_source(&self) -> PaprSource {
        self.papr_source
    }

    fn papr(&self) -> Result<f64> {
        match self.papr_source {
            PaprSource::Model => papr_model(self.n_p, self.n_s),
            PaprSource::Measured(p) => Ok(p),
        }
    }
}

/// `2·[erfc⁻¹(2·BER)]²`: the peak SNR needed for the target error rate.
pub fn snr_numerator(target_ber: f64) -> Result<f64> {
    let q = erfc_inv(2.0 * target_ber)?;
    Ok(2.0 * q * q)
}

/// Minimum mean SNR (linear) for the query's target BER.
pub fn snr_limit_linear(query: &SnrLimitQuery) -> Result<f64> {
    Ok(snr_numerator(query.target_ber)? / query.papr()?)
}

/// Minimum mean SNR in dB.
pub fn snr_limit(query: &SnrLimitQuery) -> Result<f64> {
    Ok(to_db(snr_limit_linear(query)?))
}

/// Closed form for β = ½ RC trains, `(2/1.143)·[erfc⁻¹(2·BER)]²·n_s/n_p`,
/// linear.
pub fn snr_limit_rc_half(n_p: usize, n_s: usize, target_ber: f64) -> Result<f64> {
    let q = erfc_inv(2.0 * target_ber)?;
    Ok(2.0 / PAPR_SLOPE * q * q * n_s as f64 / n_p as f64)
}

/// Smallest SNR (dB) at which a channel of bandwidth `F_s/(2 n_s)` carries
/// one bit per pulse period: `2^(2 n_s/n_p) − 1`.
pub fn shannon_snr_floor(n_p: usize, n_s: usize) -> Result<f64> {
    if n_s == 0 || n_p < n_s {
        return Err(invalid(format!(
            "need n_p ≥ n_s > 0, got n_p={n_p}, n_s={n_s}"
        )));
    }
    Ok(to_db((2.0 * n_s as f64 / n_p as f64).exp2() - 1.0))
}

/// Wideband AWGN capacity `P̄/(N₀ ln 2)` in bits/s.
pub fn power_limited_capacity(p_bar: f64, n0: f64) -> Result<f64> {
    if !(p_bar > 0.0 && n0 > 0.0) {
        return Err(invalid(format!(
            "need positive power and noise density, got {p_bar}, {n0}"
        )));
    }
    Ok(p_bar / (n0 * LN_2))
}

/// Pulse rate (per sample) below which RC pulses do not pile up,
/// `1/(4 n_s)`, i.e. at least four symbol periods between pulses.
pub fn max_pileup_free_rate(n_s: usize) -> Result<f64> {
    if n_s == 0 {
        return Err(invalid("n_s must be positive"));
    }
    Ok(1.0 / (4.0 * n_s as f64))
}

pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One row of the SNR-limit comparison curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryPoint {
    pub n_p: usize,
    pub ber_target: f64,
    pub snr_limit_db: f64,
    pub shannon_floor_db: f64,
}

/// Model-mode SNR limit and Shannon floor for every `(n_p, ber)` pair.
pub fn theory_curves(n_p: &[usize], n_s: usize, bers: &[f64]) -> Result<Vec<TheoryPoint>> {
    let mut out = Vec::with_capacity(n_p.len() * bers.len());
    for &ber in bers {
        for &np in n_p {
            let q = SnrLimitQuery::new(np, n_s, ber, PaprSource::Model)?;
            out.push(TheoryPoint {
                n_p: np,
                ber_target: ber,
                snr_limit_db: snr_limit(&q)?,
                shannon_floor_db: shannon_snr_floor(np, n_s)?,
            });
        }
    }
    Ok(out)
}
