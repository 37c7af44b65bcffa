//! End-to-end link: transmit, AWGN, despread and matched filter, sync,
//! detection and BER bookkeeping. Everything here runs on `f64`.

mod stream;
pub mod sync;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, NoiseSpec, GENERATOR_ID};
use crate::error::{invalid, Error, Result};
use crate::metrics::{mean_power, SupportInterval};
use crate::report::config_hash;
use crate::shaping::{build_spreading_kernel, make_allpass_chain, rrc_kernel, ShapingPair};
use crate::signal::{delta_train_from_bits, render_train, Waveform};
use crate::theory::{ber_for_amplitude, from_db, to_db};

pub use stream::{AcquisitionOutcome, SyncTrace};
pub use sync::{mma_update, mpa_update, Averaging, SyncState};

/// Receiver timing recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMode {
    /// Sample at the known offset plus the exact filter delay.
    Ideal,
    /// Modulo power averaging.
    Mpa,
    /// Modulo magnitude averaging.
    Mma,
}

impl SyncMode {
    pub fn averaging(self) -> Option<Averaging> {
        match self {
            SyncMode::Ideal => None,
            SyncMode::Mpa => Some(Averaging::Power),
            SyncMode::Mma => Some(Averaging::Magnitude),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SyncMode::Ideal => "ideal",
            SyncMode::Mpa => "mpa",
            SyncMode::Mma => "mma",
        }
    }
}

impl std::str::FromStr for SyncMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(SyncMode::Ideal),
            "mpa" => Ok(SyncMode::Mpa),
            "mma" => Ok(SyncMode::Mma),
            _ => Err(invalid(format!(
                "unknown sync mode {s:?} (ideal, mpa, mma)"
            ))),
        }
    }
}

/// Link parameters. Serialized field order is fixed; it feeds the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Samples per symbol period.
    pub n_s: usize,
    /// Samples between consecutive pulses.
    pub n_p: usize,
    /// RRC roll-off.
    pub beta: f64,
    /// Seed half length in symbol periods.
    pub half_len_symbols: usize,
    /// Number of allpass sections.
    pub k_sections: usize,
    pub pole_radius: f64,
    /// Spreading-kernel truncation threshold relative to its peak.
    pub eta: f64,
    /// Sync averaging constant.
    pub m: usize,
    pub snr_db: f64,
    pub n_bits: usize,
    pub master_seed: u64,
    pub sync_mode: SyncMode,
    /// Index of the first transmitted pulse.
    pub true_offset: usize,
    /// Pulse amplitude.
    pub amplitude: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            n_s: 2,
            n_p: 32,
            beta: 0.5,
            half_len_symbols: 16,
            k_sections: 32,
            pole_radius: 0.9,
            eta: 1e-5,
            m: 8,
            snr_db: 0.0,
            n_bits: 10_000,
            master_seed: 1,
            sync_mode: SyncMode::Ideal,
            true_offset: 5,
            amplitude: 1.0,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(invalid(format!("M = {} must exceed 1", self.m)));
        }
        if self.n_p < 4 * self.n_s {
            return Err(invalid(format!(
                "n_p = {} below 4·n_s = {}; pulses would pile up",
                self.n_p,
                4 * self.n_s
            )));
        }
        if self.n_bits == 0 {
            return Err(invalid("n_bits must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("target SNR must be finite"));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(invalid(format!(
                "amplitude {} must be positive",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// 64-bit FNV-1a of the canonical JSON, 16 lowercase hex digits.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// Sync warm-up in pulse periods: `8·M`.
pub fn warmup_pulses(m: usize) -> usize {
    8 * m
}

const CALIBRATION_PULSES: usize = 2048;
const CALIBRATION_SEED: u64 = 0x5EED_CA11_B8A7_E000;
const BITS_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Noiseless measurements at the matched-filter output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    /// Mean signal power over the PAPR support.
    pub signal_power: f64,
    /// Peak signal power over the same support.
    pub peak_power: f64,
    pub papr: f64,
    /// Energy of the receive chain's impulse response (white-noise gain).
    pub noise_gain: f64,
    /// Length of the calibration waveform and its support edge.
    pub(crate) len: usize,
    pub(crate) edge: usize,
}

impl Calibration {
    /// `σ_n` placing the matched-filter SNR at `snr_db`.
    pub fn sigma_for(&self, snr_db: f64) -> Result<f64> {
        if !(self.signal_power > 0.0) {
            return Err(Error::Calibration("zero signal power".into()));
        }
        Ok((self.signal_power / (self.noise_gain * from_db(snr_db))).sqrt())
    }
}

/// Transmit waveform plus its timing.
#[derive(Debug, Clone)]
pub struct Transmitted {
    pub waveform: Waveform<f64>,
    /// Index of the first pulse arrival.
    pub first_arrival: usize,
    /// Samples from an arrival to its peak after [`crate::shaping::matched_receive`].
    pub receive_delay: usize,
}

/// A configured link with its filters built and calibrated.
#[derive(Debug, Clone)]
pub struct Link {
    config: LinkConfig,
    pair: ShapingPair<f64>,
    calibration: Calibration,
}

impl Link {
    pub fn new(config: LinkConfig) -> Result<Self> {
        config.validate()?;
        let seed = rrc_kernel::<f64>(config.beta, config.n_s, config.half_len_symbols)?;
        let chain = make_allpass_chain(config.k_sections, config.pole_radius)?;
        let pair = build_spreading_kernel(&seed, &chain, config.eta)?;
        let calibration = calibrate(&config, &pair)?;
        Ok(Self {
            config,
            pair,
            calibration,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn pair(&self) -> &ShapingPair<f64> {
        &self.pair
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    /// Index of pulse `j`'s peak at the matched-filter output.
    pub fn peak_index(&self, j: usize) -> usize {
        self.config.true_offset + self.pair.receive_delay() + j * self.config.n_p
    }

    /// Correct sync phase, `peak_index(0) mod n_p`.
    pub fn true_phase(&self) -> usize {
        self.peak_index(0) % self.config.n_p
    }

    pub fn transmit(&self, bits: &[bool]) -> Result<Transmitted> {
        let train = delta_train_from_bits(
            bits,
            self.config.n_p,
            self.config.true_offset,
            self.config.amplitude,
        )?;
        Ok(Transmitted {
            waveform: render_train(&train, self.pair.spreading(), 1.0)?,
            first_arrival: self.config.true_offset,
            receive_delay: self.pair.receive_delay(),
        })
    }

    /// Noise stream matching the configured target SNR.
    pub fn noise_spec(&self, snr_db: f64, seed: u64) -> Result<NoiseSpec> {
        NoiseSpec::new(self.calibration.sigma_for(snr_db)?, seed)
    }

    /// SNR (dB) measured on a noise-only pass through the receiver with
    /// `noise`, against the calibrated signal power.
    pub fn measured_snr(&self, noise: NoiseSpec) -> Result<f64> {
        let mut x = vec![0.0; self.calibration.len - self.pair.seed().len() + 1];
        noise.source().add_to(&mut x);
        let mut rx = self.pair.receiver();
        let mut y = Vec::new();
        rx.process(&mut x, &mut y);
        y.resize(self.calibration.len, 0.0);
        let pn =
            mean_power(&y[self.calibration.edge..self.calibration.len - self.calibration.edge]);
        Ok(if pn == 0.0 {
            f64::INFINITY
        } else {
            to_db(self.calibration.signal_power / pn)
        })
    }
}

fn calibrate(config: &LinkConfig, pair: &ShapingPair<f64>) -> Result<Calibration> {
    let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
    let bits: Vec<bool> = (0..CALIBRATION_PULSES).map(|_| rng.random()).collect();
    let train = delta_train_from_bits(&bits, config.n_p, config.true_offset, config.amplitude)?;
    let tx = render_train(&train, pair.spreading(), 1.0)?;
    let rx = crate::shaping::matched_receive(&tx, pair)?.waveform;
    let edge = pair.spreading().len() + pair.seed().len();
    let support = SupportInterval::trimmed(&rx, edge)
        .map_err(|_| Error::Calibration("calibration waveform shorter than the filters".into()))?;
    let y = &rx.samples()[support.start()..=support.end()];
    let signal_power = mean_power(y);
    if !(signal_power > 0.0) {
        return Err(Error::Calibration(
            "zero signal power at matched-filter output".into(),
        ));
    }
    let peak_power = y.iter().fold(0.0f64, |m, v| m.max(v * v));
    let noise_gain = pair.receive_impulse_response()?.energy();
    Ok(Calibration {
        signal_power,
        peak_power,
        papr: peak_power / signal_power,
        noise_gain,
        len: rx.len(),
        edge,
    })
}

/// Bit decisions from matched-filter samples: `y ≥ 0` → 1.
pub fn detect_bits(y: &Waveform<f64>, indices: &[usize]) -> Result<Vec<bool>> {
    indices
        .iter()
        .map(|&k| {
            y.samples().get(k).map(|&v| v >= 0.0).ok_or_else(|| {
                Error::Contract(format!("sample index {k} beyond waveform of {}", y.len()))
            })
        })
        .collect()
}

/// Seeded uniform random bits.
pub fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ BITS_SEED_MIX);
    (0..n).map(|_| rng.random()).collect()
}

/// Result of one link simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub n_p: usize,
    pub sync_mode: SyncMode,
    pub m: usize,
    pub snr_db_target: f64,
    pub snr_db_measured: f64,
    pub n_bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    /// `½·erfc(√(SNR·PAPR/2))` with the measured PAPR.
    pub ber_analytic: f64,
    pub papr_measured: f64,
    pub sync_failures: usize,
    pub config_hash: String,
    pub seed: u64,
    pub generator: String,
    pub status: String,
}

/// Simulates `config` with its own `master_seed` as the trial seed.
pub fn run_link(config: &LinkConfig) -> Result<BerRecord> {
    run_link_seeded(config, config.master_seed)
}

/// Simulates `config` with an explicit trial seed (noise and bits).
pub fn run_link_seeded(config: &LinkConfig, seed: u64) -> Result<BerRecord> {
    let link = Link::new(config.clone())?;
    link.run(seed)
}

impl Link {
    /// Full BER trial: `n_bits` counted bits after any sync warm-up.
    pub fn run(&self, seed: u64) -> Result<BerRecord> {
        let cfg = &self.config;
        let warmup = match cfg.sync_mode {
            SyncMode::Ideal => 0,
            _ => warmup_pulses(cfg.m),
        };
        let bits = random_bits(cfg.n_bits + warmup, seed);
        let noise = self.noise_spec(cfg.snr_db, seed)?;
        let out = stream::simulate(self, &bits, noise, cfg.sync_mode.averaging(), warmup, None)?;
        let bit_errors = bits[warmup..]
            .iter()
            .zip(&out.decisions[warmup..])
            .filter(|(b, d)| d.is_none_or(|d| d != **b))
            .count();
        let snr_lin = from_db(cfg.snr_db);
        let cal = &self.calibration;
        Ok(BerRecord {
            n_p: cfg.n_p,
            sync_mode: cfg.sync_mode,
            m: cfg.m,
            snr_db_target: cfg.snr_db,
            snr_db_measured: self.measured_snr(noise)?,
            n_bits: cfg.n_bits,
            bit_errors,
            ber: bit_errors as f64 / cfg.n_bits as f64,
            ber_analytic: ber_for_amplitude((snr_lin * cal.papr).sqrt(), 1.0)?,
            papr_measured: cal.papr,
            sync_failures: out.sync_failures,
            config_hash: cfg.hash(),
            seed,
            generator: GENERATOR_ID.to_string(),
            status: "ok".to_string(),
        })
    }

    /// Runs `averaging` for `8·M` pulse periods after the first pulse
    /// reaches the receiver output and reports the phase estimate then.
    pub fn acquisition_trial(
        &self,
        averaging: Averaging,
        snr_db: f64,
        seed: u64,
    ) -> Result<AcquisitionOutcome> {
        let warmup = warmup_pulses(self.config.m);
        let bits = random_bits(warmup + 2, seed);
        let noise = self.noise_spec(snr_db, seed)?;
        let out = stream::simulate(self, &bits, noise, Some(averaging), warmup, None)?;
        Ok(AcquisitionOutcome {
            i_max: out.i_max_at_warmup_end,
            true_phase: self.true_phase(),
        })
    }

    /// Bins after every update for `n_pulses` pulses at `snr_db`.
    pub fn sync_trace(
        &self,
        averaging: Averaging,
        snr_db: f64,
        n_pulses: usize,
        seed: u64,
    ) -> Result<SyncTrace> {
        if n_pulses == 0 {
            return Err(invalid("need at least one pulse"));
        }
        let bits = random_bits(n_pulses, seed);
        let noise = if snr_db.is_infinite() && snr_db > 0.0 {
            NoiseSpec::new(0.0, seed)?
        } else {
            self.noise_spec(snr_db, seed)?
        };
        let mut trace = SyncTrace {
            true_phase: self.true_phase(),
            first_peak: self.peak_index(0),
            steps: Vec::new(),
        };
        stream::simulate(self, &bits, noise, Some(averaging), 0, Some(&mut trace))?;
        Ok(trace)
    }
}

/// Axes of a sweep; the Cartesian product is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub snr_db: Vec<f64>,
    pub n_p: Vec<usize>,
    pub m: Vec<usize>,
    pub sync: Vec<SyncMode>,
}

/// One point of a sweep: base config with overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: LinkConfig,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty()
            || self.n_p.is_empty()
            || self.m.is_empty()
            || self.sync.is_empty()
        {
            return Err(invalid("every sweep axis needs at least one value"));
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(invalid("SNR grid values must be finite"));
        }
        Ok(())
    }

    /// Points in canonical order `(n_p, sync_mode, snr_db, m)`. Grids are
    /// sorted and deduplicated, and ideal sync ignores the `M` axis, so
    /// permuted or repeated grids produce the same points. Point `i` gets
    /// seed `master_seed XOR i`.
    pub fn points(&self, base: &LinkConfig) -> Result<Vec<SweepPoint>> {
        self.validate()?;
        let mut snr = self.snr_db.clone();
        snr.sort_by(f64::total_cmp);
        snr.dedup();
        let mut n_p = self.n_p.clone();
        n_p.sort_unstable();
        n_p.dedup();
        let mut m = self.m.clone();
        m.sort_unstable();
        m.dedup();
        let mut sync = self.sync.clone();
        sync.sort_unstable();
        sync.dedup();

        let mut out = Vec::new();
        for &np in &n_p {
            for &mode in &sync {
                for &s in &snr {
                    let ms: &[usize] = if mode == SyncMode::Ideal { &m[..1] } else { &m };
                    for &mm in ms {
                        let config = LinkConfig {
                            n_p: np,
                            sync_mode: mode,
                            snr_db: s,
                            m: mm,
                            ..base.clone()
                        };
                        let seed = derive_seed(base.master_seed, out.len() as u64);
                        out.push(SweepPoint { config, seed });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Runs every sweep point in parallel. A failing point yields a row with
/// its error in `status`; the sweep continues.
pub fn run_sweep(base: &LinkConfig, spec: &SweepSpec) -> Result<Vec<BerRecord>> {
    let points = spec.points(base)?;
    Ok(points
        .par_iter()
        .map(|p| run_link_seeded(&p.config, p.seed).unwrap_or_else(|e| failed_record(p, &e)))
        .collect())
}

fn failed_record(p: &SweepPoint, e: &Error) -> BerRecord {
    let c = &p.config;
    BerRecord {
        n_p: c.n_p,
        sync_mode: c.sync_mode,
        m: c.m,
        snr_db_target: c.snr_db,
        snr_db_measured: f64::NAN,
        n_bits: c.n_bits,
        bit_errors: 0,
        ber: f64::NAN,
        ber_analytic: f64::NAN,
        papr_measured: f64::NAN,
        sync_failures: 0,
        config_hash: c.hash(),
        seed: p.seed,
        generator: GENERATOR_ID.to_string(),
        status: format!("error: {e}"),
    }
}
