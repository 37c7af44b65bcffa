//! PAPR, TBP ratio, SNR, kurtosis and spectral comparisons.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::signal::{FirKernel, Waveform};
use crate::special::erfc_inv;

/// Inclusive index range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportInterval {
    start: usize,
    end: usize,
}

impl SupportInterval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(invalid(format!("support start {start} after end {end}")));
        }
        Ok(Self { start, end })
    }

    /// Whole waveform.
    pub fn full<T: Real>(x: &Waveform<T>) -> Result<Self> {
        if x.is_empty() {
            return Err(invalid("empty waveform has no support"));
        }
        Self::new(0, x.len() - 1)
    }

    /// Whole waveform minus `edge` samples at each end.
    pub fn trimmed<T: Real>(x: &Waveform<T>, edge: usize) -> Result<Self> {
        if x.len() <= 2 * edge {
            return Err(invalid(format!(
                "waveform of {} samples too short to trim {edge} at each end",
                x.len()
            )));
        }
        Self::new(edge, x.len() - 1 - edge)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn slice<'a, T>(&self, x: &'a [T]) -> Result<&'a [T]> {
        if self.end >= x.len() {
            return Err(invalid(format!(
                "support end {} beyond waveform of {} samples",
                self.end,
                x.len()
            )));
        }
        Ok(&x[self.start..=self.end])
    }
}

/// Peak power over mean power on `support`.
pub fn papr<T: Real>(x: &Waveform<T>, support: SupportInterval) -> Result<f64> {
    let s = support.slice(x.samples())?;
    let (mut peak, mut sum) = (0.0f64, 0.0f64);
    for &v in s {
        let p = v.as_f64() * v.as_f64();
        peak = peak.max(p);
        sum += p;
    }
    if peak == 0.0 {
        return Err(Error::UndefinedPapr);
    }
    Ok((peak * s.len() as f64 / sum).max(1.0))
}

/// Tolerance on the magnitude-spectrum match required by [`tbp_ratio`].
pub const SPECTRAL_TOLERANCE: f64 = 0.01;

/// `max(w²) / max(g²)`, the ratio of the two kernels' PAPRs over any common
/// support, valid only when they share a magnitude spectrum.
pub fn tbp_ratio<T: Real>(g: &FirKernel<T>, w: &FirKernel<T>) -> Result<f64> {
    let deviation = spectral_deviation(w.taps(), g.taps());
    if !(deviation <= SPECTRAL_TOLERANCE) {
        return Err(Error::IncomparableKernels { deviation });
    }
    let pg = g.peak().as_f64();
    let pw = w.peak().as_f64();
    if pg == 0.0 || pw == 0.0 {
        return Err(Error::UndefinedPapr);
    }
    Ok((pw * pw) / (pg * pg))
}

fn magnitude_spectrum<T: Real>(x: &[T], n: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v.as_f64(), 0.0)).collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(n).process(&mut buf);
    buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// `max_f ||A(f)| - |B(f)|| / max_f |A(f)|` on a common zero-padded FFT grid
/// fine enough to resolve both sequences.
pub fn spectral_deviation<T: Real>(a: &[T], b: &[T]) -> f64 {
    let n = (4 * a.len().max(b.len())).next_power_of_two().max(64);
    let mut planner = FftPlanner::new();
    let ma = magnitude_spectrum(a, n, &mut planner);
    let mb = magnitude_spectrum(b, n, &mut planner);
    let peak = ma.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return if mb.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
    }
    ma.iter()
        .zip(&mb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / peak
}

/// Averaged periodogram: `x` is cut into non-overlapping segments of
/// `nfft` samples, each is transformed, and the squared magnitudes are
/// averaged. Returns `nfft/2 + 1` bins from DC to Nyquist.
pub fn averaged_periodogram<T: Real>(x: &[T], nfft: usize) -> Result<Vec<f64>> {
    if nfft < 2 || x.len() < nfft {
        return Err(invalid(format!(
            "need at least one segment of {nfft} samples, have {}",
            x.len()
        )));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nfft);
    let mut acc = vec![0.0; nfft / 2 + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let segments = x.len() / nfft;
    for seg in x.chunks_exact(nfft) {
        for (b, v) in buf.iter_mut().zip(seg) {
            *b = Complex::new(v.as_f64(), 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (segments as f64 * nfft as f64);
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok(acc)
}

/// Periodogram of the whole of `x`, zero-padded to `nfft`, averaged over
/// `bands` equal-width bands from DC to Nyquist. Two signals that differ
/// only by an allpass filter give identical results up to truncation.
pub fn band_averaged_psd<T: Real>(x: &[T], nfft: usize, bands: usize) -> Result<Vec<f64>> {
    if nfft < x.len() || bands == 0 || bands > nfft / 2 {
        return Err(invalid(format!(
            "nfft {nfft} must cover {} samples and leave at least one bin per band",
            x.len()
        )));
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v.as_f64(), 0.0)).collect();
    buf.resize(nfft, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(nfft).process(&mut buf);
    let half = nfft / 2;
    let scale = 1.0 / x.len().max(1) as f64;
    Ok((0..bands)
        .map(|b| {
            let lo = b * half / bands;
            let hi = (b + 1) * half / bands;
            buf[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>() * scale / (hi - lo) as f64
        })
        .collect())
}

pub const MIN_KURTOSIS_SAMPLES: usize = 1000;

/// Fourth central moment over squared variance, minus 3.
pub fn excess_kurtosis<T: Real>(x: &Waveform<T>) -> Result<f64> {
    let s = x.samples();
    if s.len() < MIN_KURTOSIS_SAMPLES {
        return Err(invalid(format!(
            "kurtosis needs at least {MIN_KURTOSIS_SAMPLES} samples, have {}",
            s.len()
        )));
    }
    let n = s.len() as f64;
    let mean = s.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in s {
        let d = v.as_f64() - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if !(m2 > 0.0) || m2 <= f64::EPSILON * mean * mean {
        return Err(Error::DegenerateVariance);
    }
    let k = m4 / (m2 * m2) - 3.0;
    assert!(
        k >= -2.0 - 1e-9,
        "excess kurtosis {k} below the distributional bound"
    );
    Ok(k)
}

/// `10·log10(mean(signal²) / mean(noise²))` over `support`, in dB.
/// Zero noise power gives `+∞`.
pub fn measure_snr<T: Real>(
    signal_only: &Waveform<T>,
    noise_only: &Waveform<T>,
    support: SupportInterval,
) -> Result<f64> {
    if signal_only.len() != noise_only.len() {
        return Err(invalid(format!(
            "signal has {} samples, noise {}",
            signal_only.len(),
            noise_only.len()
        )));
    }
    let ps = mean_power(support.slice(signal_only.samples())?);
    let pn = mean_power(support.slice(noise_only.samples())?);
    if pn == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ps / pn).log10())
}

pub(crate) fn mean_power<T: Real>(x: &[T]) -> f64 {
    x.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>() / x.len() as f64
}

/// Sorted standardized samples paired with standard-normal quantiles at
/// plotting positions `(i + ½)/n`, thinned to at most `max_points` pairs.
/// A normal probability plot of the data is a scatter of these pairs.
pub fn normal_quantile_pairs<T: Real>(
    x: &Waveform<T>,
    max_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let s = x.samples();
    if s.len() < 2 || max_points == 0 {
        return Err(invalid("need at least two samples and one output point"));
    }
    let n = s.len() as f64;
    let mean = s.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let var = s.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let sd = var.sqrt();
    let mut sorted: Vec<f64> = s.iter().map(|v| (v.as_f64() - mean) / sd).collect();
    sorted.sort_by(f64::total_cmp);
    let step = sorted.len().div_ceil(max_points);
    (0..sorted.len())
        .step_by(step.max(1))
        .map(|i| {
            let p = (i as f64 + 0.5) / n;
            Ok((normal_quantile(p)?, sorted[i]))
        })
        .collect()
}

/// Standard-normal quantile function.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            value: p,
            domain: "(0, 1)",
        });
    }
    Ok(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)?)
}
