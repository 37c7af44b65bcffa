//! Sampled-signal types and the pulse-train rendering convolution.
//!
//! Time is discrete: arrivals are integer sample indices and every
//! convolution is "full" (output length `n + taps - 1`). Delays are never
//! compensated silently; kernels carry the index of their peak tap so callers
//! can do the bookkeeping themselves.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Ideal pulse train: signed impulses at integer arrival indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain<T> {
    arrivals: Vec<usize>,
    amplitudes: Vec<T>,
    total_len: usize,
}

impl<T: Real> PulseTrain<T> {
    pub fn new(arrivals: Vec<usize>, amplitudes: Vec<T>, total_len: usize) -> Result<Self> {
        if arrivals.len() != amplitudes.len() {
            return Err(invalid(format!(
                "{} arrivals but {} amplitudes",
                arrivals.len(),
                amplitudes.len()
            )));
        }
        if arrivals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("arrivals must be strictly increasing"));
        }
        if let Some(&last) = arrivals.last() {
            if last >= total_len {
                return Err(invalid(format!(
                    "arrival {last} outside canvas of {total_len} samples"
                )));
            }
        }
        if amplitudes.iter().any(|a| !a.is_finite() || a.is_zero()) {
            return Err(invalid("amplitudes must be finite and nonzero"));
        }
        Ok(Self {
            arrivals,
            amplitudes,
            total_len,
        })
    }

    pub fn arrivals(&self) -> &[usize] {
        &self.arrivals
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(
            self.arrivals.clone(),
            self.amplitudes.iter().map(|&a| a * c).collect(),
            self.total_len,
        )
    }

    /// Union of two trains with disjoint arrival sets.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut pairs: Vec<(usize, T)> = self
            .arrivals
            .iter()
            .copied()
            .zip(self.amplitudes.iter().copied())
            .chain(
                other
                    .arrivals
                    .iter()
                    .copied()
                    .zip(other.amplitudes.iter().copied()),
            )
            .collect();
        pairs.sort_by_key(|p| p.0);
        let (arrivals, amplitudes) = pairs.into_iter().unzip();
        Self::new(arrivals, amplitudes, self.total_len.max(other.total_len))
    }
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    samples: Vec<T>,
    sample_rate: f64,
}

impl<T: Real> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("waveform must hold at least one sample"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![T::zero(); len], sample_rate)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> T {
        self.samples.iter().map(|&s| s * s).sum()
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|&s| s * c).collect(),
            self.sample_rate,
        )
    }

    /// Elementwise sum; the shorter operand is zero-extended.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.len().max(other.len());
        let at = |v: &[T], i: usize| v.get(i).copied().unwrap_or_else(T::zero);
        Self::new(
            (0..n)
                .map(|i| at(&self.samples, i) + at(&other.samples, i))
                .collect(),
            self.sample_rate,
        )
    }

    /// Writes header-less little-endian `f64` samples plus a JSON sidecar at
    /// `<path>.json`.
    pub fn write_raw(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for s in &self.samples {
            out.write_all(&s.as_f64().to_le_bytes())?;
        }
        out.flush()?;
        let sidecar = RawSidecar {
            sample_rate: self.sample_rate,
            length: self.samples.len(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_vec(&sidecar)?)?;
        Ok(())
    }

    pub fn read_raw(path: &Path) -> Result<Self> {
        let sidecar: RawSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)?;
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        if bytes.len() != sidecar.length * 8 {
            return Err(invalid(format!(
                "raw file holds {} bytes, sidecar declares {} samples",
                bytes.len(),
                sidecar.length
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect();
        Self::new(samples, sidecar.sample_rate)
    }
}

/// JSON sidecar of a raw waveform file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSidecar {
    pub sample_rate: f64,
    pub length: usize,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// Design parameters a kernel was built from. Carried through the kernel
/// exchange format; all fields optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_s: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k_sections: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

/// Finite impulse response with the index of its largest-magnitude tap.
#[derive(Debug, Clone, PartialEq)]
pub struct FirKernel<T> {
    taps: Vec<T>,
    peak_index: usize,
    meta: KernelMeta,
}

impl<T: Real> FirKernel<T> {
    pub fn new(taps: Vec<T>) -> Result<Self> {
        Self::with_meta(taps, KernelMeta::default())
    }

    pub fn with_meta(taps: Vec<T>, meta: KernelMeta) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("kernel must have at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("kernel taps must be finite"));
        }
        let peak_index = peak_position(&taps);
        if taps[peak_index].is_zero() {
            return Err(invalid("kernel must have a nonzero tap"));
        }
        Ok(Self {
            taps,
            peak_index,
            meta,
        })
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    pub fn peak(&self) -> T {
        self.taps[self.peak_index]
    }

    pub fn meta(&self) -> &KernelMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> T {
        self.taps.iter().map(|&t| t * t).sum()
    }

    /// Kernel as a waveform at the given rate.
    pub fn to_waveform(&self, sample_rate: f64) -> Result<Waveform<T>> {
        Waveform::new(self.taps.clone(), sample_rate)
    }

    pub fn to_record(&self) -> KernelRecord {
        KernelRecord {
            taps: self.taps.iter().map(|t| t.as_f64()).collect(),
            peak_index: self.peak_index,
            meta: self.meta.clone(),
        }
    }

    pub fn from_record(record: &KernelRecord) -> Result<Self> {
        let kernel = Self::with_meta(
            record.taps.iter().map(|&t| T::lit(t)).collect(),
            record.meta.clone(),
        )?;
        if kernel.peak_index != record.peak_index {
            return Err(invalid(format!(
                "declared peak_index {} but largest tap is at {}",
                record.peak_index, kernel.peak_index
            )));
        }
        Ok(kernel)
    }
}

/// Kernel exchange record. `serde_json` prints shortest round-trip decimals
/// and parses them correctly rounded, so `f64` taps survive bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRecord {
    pub taps: Vec<f64>,
    pub peak_index: usize,
    #[serde(default)]
    pub meta: KernelMeta,
}

impl KernelRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// First index of the maximum magnitude.
pub(crate) fn peak_position<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// BPSK mapping of bits onto a regular train: bit 1 → `+amplitude`,
/// bit 0 → `-amplitude`, pulse `j` at `offset + j * n_p`.
pub fn delta_train_from_bits<T: Real>(
    bits: &[bool],
    n_p: usize,
    offset: usize,
    amplitude: T,
) -> Result<PulseTrain<T>> {
    if bits.is_empty() {
        return Err(invalid("bit sequence is empty"));
    }
    if n_p == 0 {
        return Err(invalid("n_p must be at least 1"));
    }
    if !(amplitude.is_finite() && amplitude > T::zero()) {
        return Err(invalid("amplitude must be positive"));
    }
    let arrivals = (0..bits.len()).map(|j| offset + j * n_p).collect();
    let amplitudes = bits
        .iter()
        .map(|&b| if b { amplitude } else { -amplitude })
        .collect();
    PulseTrain::new(arrivals, amplitudes, offset + (bits.len() - 1) * n_p + 1)
}

/// `out[n] = Σ_k a_k · taps[n - t_k]`, length `total_len + taps - 1`.
pub fn render_train<T: Real>(
    train: &PulseTrain<T>,
    kernel: &FirKernel<T>,
    sample_rate: f64,
) -> Result<Waveform<T>> {
    let taps = kernel.taps();
    let mut out = vec![T::zero(); train.total_len() + taps.len() - 1];
    for (&t, &a) in train.arrivals().iter().zip(train.amplitudes()) {
        for (o, &h) in out[t..t + taps.len()].iter_mut().zip(taps) {
            *o += a * h;
        }
    }
    Waveform::new(out, sample_rate)
}

/// Full linear convolution, output length `len(x) + len(taps) - 1`.
pub fn convolve_full<T: Real>(x: &Waveform<T>, kernel: &FirKernel<T>) -> Result<Waveform<T>> {
    Waveform::new(convolve_slices(x.samples(), kernel.taps()), x.sample_rate())
}

pub(crate) fn convolve_slices<T: Real>(x: &[T], h: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len() + h.len() - 1];
    // Iterate the shorter operand in the outer loop.
    let (long, short) = if x.len() >= h.len() { (x, h) } else { (h, x) };
    for (j, &s) in short.iter().enumerate() {
        if s.is_zero() {
            continue;
        }
        for (o, &l) in out[j..j + long.len()].iter_mut().zip(long) {
            *o += s * l;
        }
    }
    out
}

/// Reverses the taps; `peak_index` maps to `len - 1 - peak_index` unless the
/// reversed kernel has an earlier tap of equal magnitude.
pub fn time_reverse<T: Real>(kernel: &FirKernel<T>) -> FirKernel<T> {
    let taps: Vec<T> = kernel.taps().iter().rev().copied().collect();
    let peak_index = peak_position(&taps);
    FirKernel {
        taps,
        peak_index,
        meta: kernel.meta.clone(),
    }
}

/// Streaming FIR filter; concatenated outputs equal the leading samples of
/// [`convolve_full`] on the concatenated inputs.
#[derive(Debug, Clone)]
pub struct FirStream<T> {
    taps: Vec<T>,
    history: Vec<T>,
}

impl<T: Real> FirStream<T> {
    pub fn new(kernel: &FirKernel<T>) -> Self {
        Self {
            taps: kernel.taps().to_vec(),
            history: vec![T::zero(); kernel.len() - 1],
        }
    }

    /// Filters `input` into `output` (cleared first, same length as input).
    pub fn process(&mut self, input: &[T], output: &mut Vec<T>) {
        let l = self.taps.len();
        let h = l - 1;
        let mut ext = std::mem::take(&mut self.history);
        ext.extend_from_slice(input);
        output.clear();
        output.reserve(input.len());
        // ext[n + h] is input[n]; y[n] = Σ_j taps[j] · ext[n + h - j].
        for n in 0..input.len() {
            let window = &ext[n..n + l];
            let mut acc = T::zero();
            for (&x, &t) in window.iter().rev().zip(&self.taps) {
                acc += x * t;
            }
            output.push(acc);
        }
        let keep_from = ext.len() - h;
        self.history = ext.split_off(keep_from);
    }
}

/// Overlap-add renderer: the streaming counterpart of [`render_train`].
#[derive(Debug, Clone)]
pub struct TrainStream<T> {
    taps: Vec<T>,
    pending: std::collections::VecDeque<T>,
    emitted: usize,
}

impl<T: Real> TrainStream<T> {
    pub fn new(kernel: &FirKernel<T>) -> Self {
        Self {
            taps: kernel.taps().to_vec(),
            pending: Default::default(),
            emitted: 0,
        }
    }

    /// Index of the next sample [`TrainStream::emit`] will produce.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// Adds a pulse at absolute index `at`; pulses before the emit cursor are
    /// a contract error.
    pub fn add_pulse(&mut self, at: usize, amplitude: T) -> Result<()> {
        if at < self.emitted {
            return Err(Error::Contract(format!(
                "pulse at {at} precedes emitted sample {}",
                self.emitted
            )));
        }
        let rel = at - self.emitted;
        let needed = rel + self.taps.len();
        if self.pending.len() < needed {
            self.pending.resize(needed, T::zero());
        }
        for (j, &h) in self.taps.iter().enumerate() {
            self.pending[rel + j] += amplitude * h;
        }
        Ok(())
    }

    /// Appends samples up to (excluding) absolute index `upto` to `out`.
    pub fn emit(&mut self, upto: usize, out: &mut Vec<T>) {
        while self.emitted < upto {
            out.push(self.pending.pop_front().unwrap_or_else(T::zero));
            self.emitted += 1;
        }
    }
}
