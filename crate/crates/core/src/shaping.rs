//! Seed pulses, allpass spreading and the transmit/receive filter pair.
//!
//! A small-TBP seed `w` is spread by a cascade of real second-order allpass
//! sections, truncated once it has decayed, and time-reversed to give the
//! transmit pulse `g`. Running the same cascade in the receiver turns every
//! transmitted `g` back into `w(-t)`, after which a matched seed filter
//! yields an RC-shaped pulse.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::metrics::spectral_deviation;
use crate::scalar::Real;
use crate::signal::{
    convolve_full, convolve_slices, peak_position, time_reverse, FirKernel, FirStream, KernelMeta,
    Waveform,
};

fn check_pulse_params(beta: f64, n_s: usize, half_len_symbols: usize) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("roll-off {beta} outside (0, 1]")));
    }
    if n_s < 2 {
        return Err(invalid(format!(
            "n_s = {n_s}, need at least 2 samples per symbol"
        )));
    }
    if half_len_symbols == 0 {
        return Err(invalid("half length must be at least one symbol"));
    }
    Ok(())
}

fn symbol_times(n_s: usize, half_len_symbols: usize) -> impl Iterator<Item = f64> {
    let half = (half_len_symbols * n_s) as isize;
    (-half..=half).map(move |n| n as f64 / n_s as f64)
}

/// Root-raised-cosine value at `t` symbol periods (unnormalized).
fn rrc_at(beta: f64, t: f64) -> f64 {
    const EPS: f64 = 1e-12;
    if t.abs() < EPS {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if (t.abs() - 1.0 / (4.0 * beta)).abs() < EPS {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// Raised-cosine value at `t` symbol periods; 1 at the origin.
fn rc_at(beta: f64, t: f64) -> f64 {
    const EPS: f64 = 1e-12;
    let sinc = |x: f64| {
        if x.abs() < EPS {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        }
    };
    if (t.abs() - 1.0 / (2.0 * beta)).abs() < EPS {
        return PI / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    sinc(t) * (PI * beta * t).cos() / (1.0 - (2.0 * beta * t).powi(2))
}

/// Unit-energy RRC pulse with `2 * half_len_symbols * n_s + 1` taps.
pub fn rrc_kernel<T: Real>(beta: f64, n_s: usize, half_len_symbols: usize) -> Result<FirKernel<T>> {
    check_pulse_params(beta, n_s, half_len_symbols)?;
    let raw: Vec<f64> = symbol_times(n_s, half_len_symbols)
        .map(|t| rrc_at(beta, t))
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    FirKernel::with_meta(
        raw.iter().map(|v| T::lit(v / norm)).collect(),
        KernelMeta {
            beta: Some(beta),
            n_s: Some(n_s),
            ..Default::default()
        },
    )
}

/// RC pulse with unit centre tap and exact zeros at nonzero symbol multiples.
pub fn rc_kernel<T: Real>(beta: f64, n_s: usize, half_len_symbols: usize) -> Result<FirKernel<T>> {
    check_pulse_params(beta, n_s, half_len_symbols)?;
    let taps = symbol_times(n_s, half_len_symbols)
        .enumerate()
        .map(|(i, t)| {
            // Force the closed-form zeros; sin(π k) is only ~1e-16 in floating point.
            let off = i as isize - (half_len_symbols * n_s) as isize;
            if off != 0 && off % n_s as isize == 0 && (t.abs() - 1.0 / (2.0 * beta)).abs() > 1e-12 {
                T::zero()
            } else {
                T::lit(rc_at(beta, t))
            }
        })
        .collect();
    FirKernel::with_meta(
        taps,
        KernelMeta {
            beta: Some(beta),
            n_s: Some(n_s),
            ..Default::default()
        },
    )
}

/// Unit-energy Gaussian pulse with bandwidth-time product `bt` (3 dB
/// bandwidth times symbol period). Alternative seed; not used by the link
/// defaults.
pub fn gaussian_kernel<T: Real>(
    bt: f64,
    n_s: usize,
    half_len_symbols: usize,
) -> Result<FirKernel<T>> {
    if !(bt > 0.0 && bt.is_finite()) {
        return Err(invalid(format!(
            "bandwidth-time product {bt} must be positive"
        )));
    }
    check_pulse_params(1.0, n_s, half_len_symbols)?;
    let a = 2.0 * PI * PI * bt * bt / 2f64.ln();
    let raw: Vec<f64> = symbol_times(n_s, half_len_symbols)
        .map(|t| (-a * t * t).exp())
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    FirKernel::with_meta(
        raw.iter().map(|v| T::lit(v / norm)).collect(),
        KernelMeta {
            n_s: Some(n_s),
            ..Default::default()
        },
    )
}

/// Real second-order allpass section with poles at `radius · e^{±j angle}`:
///
/// `H(z) = (a2 + a1 z⁻¹ + z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`,
/// `a1 = -2 r cos θ`, `a2 = r²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllpassSection {
    radius: f64,
    angle: f64,
    a1: f64,
    a2: f64,
}

impl AllpassSection {
    pub fn new(radius: f64, angle: f64) -> Result<Self> {
        if !(radius < 1.0) {
            return Err(Error::Stability { radius });
        }
        if !(radius > 0.0) {
            return Err(invalid(format!("pole radius {radius} must be positive")));
        }
        if !(angle > 0.0 && angle < PI) {
            return Err(invalid(format!("pole angle {angle} outside (0, π)")));
        }
        Ok(Self {
            radius,
            angle,
            a1: -2.0 * radius * angle.cos(),
            a2: radius * radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Complex response at normalized angular frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> (f64, f64) {
        // e^{-jω}, e^{-j2ω}
        let (c1, s1) = (omega.cos(), -omega.sin());
        let (c2, s2) = ((2.0 * omega).cos(), -(2.0 * omega).sin());
        let num = (self.a2 + self.a1 * c1 + c2, self.a1 * s1 + s2);
        let den = (
            1.0 + self.a1 * c1 + self.a2 * c2,
            self.a1 * s1 + self.a2 * s2,
        );
        let d = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / d,
            (num.1 * den.0 - num.0 * den.1) / d,
        )
    }
}

/// Cascade of allpass sections ("spreader"). Zero sections is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AllpassChain {
    sections: Vec<AllpassSection>,
}

impl AllpassChain {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_sections(sections: Vec<AllpassSection>) -> Self {
        Self { sections }
    }

    pub fn sections(&self) -> &[AllpassSection] {
        &self.sections
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// Complex response of the whole cascade at `omega`.
    pub fn response(&self, omega: f64) -> (f64, f64) {
        self.sections.iter().fold((1.0, 0.0), |acc, s| {
            let h = s.response(omega);
            (acc.0 * h.0 - acc.1 * h.1, acc.0 * h.1 + acc.1 * h.0)
        })
    }

    pub fn state<T: Real>(&self) -> ChainState<T> {
        ChainState {
            coeffs: self
                .sections
                .iter()
                .map(|s| (T::lit(s.a1), T::lit(s.a2)))
                .collect(),
            s1: vec![T::zero(); self.sections.len()],
            s2: vec![T::zero(); self.sections.len()],
        }
    }

    /// Runs the cascade over a waveform; the output has the input's length.
    pub fn apply<T: Real>(&self, x: &Waveform<T>) -> Result<Waveform<T>> {
        let mut buf = x.samples().to_vec();
        self.state().process(&mut buf);
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(Error::Instability("non-finite output".into()));
        }
        Waveform::new(buf, x.sample_rate())
    }

    /// Runs the cascade over a kernel, extending the output until its
    /// trailing envelope (running max of `|y|` over `window` samples) and the
    /// filter state have both fallen below `eta` times the peak magnitude,
    /// then trims the sub-threshold tail.
    pub fn spread<T: Real>(
        &self,
        kernel: &FirKernel<T>,
        eta: f64,
        window: usize,
    ) -> Result<FirKernel<T>> {
        check_eta(eta)?;
        if self.is_empty() {
            return Ok(kernel.clone());
        }
        const MAX_LEN: usize = 1 << 24;
        const BLOCK: usize = 1024;
        let window = window.max(1);
        let eta_t = T::lit(eta);
        let mut state = self.state::<T>();
        let mut out = kernel.taps().to_vec();
        state.process(&mut out);
        let mut peak = out.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut quiet = out
            .iter()
            .rev()
            .take_while(|v| v.abs() < eta_t * peak)
            .count();
        loop {
            let thr = eta_t * peak;
            if quiet >= window && state.max_abs() < thr {
                break;
            }
            if out.len() >= MAX_LEN {
                return Err(Error::Instability(format!(
                    "response still above {eta:e} of peak after {MAX_LEN} samples"
                )));
            }
            let start = out.len();
            out.resize(start + BLOCK, T::zero());
            state.process(&mut out[start..]);
            for &v in &out[start..] {
                if !v.is_finite() {
                    return Err(Error::Instability("non-finite output".into()));
                }
                peak = peak.max(v.abs());
                if v.abs() < eta_t * peak {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
            }
        }
        let thr = eta_t * peak;
        let last = out.iter().rposition(|v| v.abs() >= thr).unwrap_or(0);
        out.truncate(last + 1);
        let mut meta = kernel.meta().clone();
        meta.k_sections = Some(self.len());
        meta.r = self.sections.first().map(|s| s.radius);
        meta.eta = Some(eta);
        FirKernel::with_meta(out, meta)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1e-2) {
        return Err(invalid(format!(
            "truncation threshold {eta} outside (0, 1e-2]"
        )));
    }
    Ok(())
}

/// `k_sections` sections of pole radius `pole_radius`, angles
/// `θ_k = π·sqrt((k + ½)/K)`.
///
/// The square-root spacing makes pole density grow linearly with frequency,
/// so the cascade's group delay is roughly a linear ramp across the band
/// (a chirp). Uniform spacing with overlapping sections instead sums to an
/// almost flat group delay, which is a plain delay with no spreading.
pub fn make_allpass_chain(k_sections: usize, pole_radius: f64) -> Result<AllpassChain> {
    if !(pole_radius < 1.0) {
        return Err(Error::Stability {
            radius: pole_radius,
        });
    }
    let sections = (0..k_sections)
        .map(|k| {
            let angle = PI * ((k as f64 + 0.5) / k_sections as f64).sqrt();
            AllpassSection::new(pole_radius, angle)
        })
        .collect::<Result<_>>()?;
    Ok(AllpassChain { sections })
}

/// Runs the cascade over a waveform, output length unchanged.
pub fn apply_chain<T: Real>(x: &Waveform<T>, chain: &AllpassChain) -> Result<Waveform<T>> {
    chain.apply(x)
}

/// Recursive state of an [`AllpassChain`] (transposed direct form II).
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    coeffs: Vec<(T, T)>,
    s1: Vec<T>,
    s2: Vec<T>,
}

impl<T: Real> ChainState<T> {
    /// Filters `buf` in place, continuing from the current state.
    pub fn process(&mut self, buf: &mut [T]) {
        let n = self.coeffs.len();
        for v in buf.iter_mut() {
            let mut x = *v;
            for k in 0..n {
                let (a1, a2) = self.coeffs[k];
                let y = a2 * x + self.s1[k];
                self.s1[k] = a1 * (x - y) + self.s2[k];
                self.s2[k] = x - a2 * y;
                x = y;
            }
            *v = x;
        }
    }

    fn max_abs(&self) -> T {
        self.s1
            .iter()
            .chain(&self.s2)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Seed/transmit pulse pair sharing one magnitude spectrum.
#[derive(Debug, Clone)]
pub struct ShapingPair<T> {
    seed: FirKernel<T>,
    spreading: FirKernel<T>,
    chain: AllpassChain,
    eta: f64,
    receive_delay: usize,
    spectral_deviation: f64,
}

impl<T: Real> ShapingPair<T> {
    pub fn seed(&self) -> &FirKernel<T> {
        &self.seed
    }

    /// Transmit pulse `g`.
    pub fn spreading(&self) -> &FirKernel<T> {
        &self.spreading
    }

    pub fn chain(&self) -> &AllpassChain {
        &self.chain
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Samples between a transmitted arrival and its recovered peak at the
    /// output of [`matched_receive`].
    pub fn receive_delay(&self) -> usize {
        self.receive_delay
    }

    /// Max over frequency of `||G| - |W|| / max|W|`.
    pub fn spectral_deviation(&self) -> f64 {
        self.spectral_deviation
    }

    /// Streaming receiver with the same response as [`matched_receive`].
    pub fn receiver(&self) -> Receiver<T> {
        Receiver {
            chain: self.chain.state(),
            matched: FirStream::new(&time_reverse(&self.seed)),
        }
    }

    /// Impulse response of the receive chain (cascade then matched seed),
    /// truncated at `eta`.
    pub fn receive_impulse_response(&self) -> Result<FirKernel<T>> {
        let window = self.seed.meta().n_s.unwrap_or(1);
        self.chain
            .spread(&time_reverse(&self.seed), self.eta, window)
    }
}

/// Spreads `seed` with `chain`, truncates at `eta` and time-reverses.
pub fn build_spreading_kernel<T: Real>(
    seed: &FirKernel<T>,
    chain: &AllpassChain,
    eta: f64,
) -> Result<ShapingPair<T>> {
    let window = seed.meta().n_s.unwrap_or(1);
    let spread = chain.spread(seed, eta, window)?;
    let spreading = time_reverse(&spread);
    let seed_rev = time_reverse(seed);
    let composite = convolve_slices(seed_rev.taps(), seed_rev.taps());
    let receive_delay = spreading.len() - seed.len() + peak_position(&composite);
    let spectral_deviation = spectral_deviation(seed.taps(), spreading.taps());
    Ok(ShapingPair {
        seed: seed.clone(),
        spreading,
        chain: chain.clone(),
        eta,
        receive_delay,
        spectral_deviation,
    })
}

/// Output of [`matched_receive`]: the recovered waveform and the delay of
/// each recovered peak relative to its transmit arrival.
#[derive(Debug, Clone)]
pub struct Received<T> {
    pub waveform: Waveform<T>,
    pub delay: usize,
}

/// Applies the cascade and then the matched seed filter.
pub fn matched_receive<T: Real>(x: &Waveform<T>, pair: &ShapingPair<T>) -> Result<Received<T>> {
    let despread = pair.chain.apply(x)?;
    let waveform = convolve_full(&despread, &time_reverse(&pair.seed))?;
    Ok(Received {
        waveform,
        delay: pair.receive_delay,
    })
}

/// Streaming form of [`matched_receive`].
#[derive(Debug, Clone)]
pub struct Receiver<T> {
    chain: ChainState<T>,
    matched: FirStream<T>,
}

impl<T: Real> Receiver<T> {
    /// Consumes `input` (overwritten) and writes the same number of output
    /// samples to `output`.
    pub fn process(&mut self, input: &mut [T], output: &mut Vec<T>) {
        self.chain.process(input);
        self.matched.process(input, output);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{papr, tbp_ratio, SupportInterval};
    use crate::signal::render_train;
    use crate::signal::PulseTrain;

    #[test]
    fn rrc_is_symmetric_and_unit_energy() {
        for &(beta, n_s, h) in &[(0.5, 2, 8), (0.35, 4, 6), (1.0, 3, 5), (0.25, 8, 10)] {
            let k = rrc_kernel::<f64>(beta, n_s, h).unwrap();
            let t = k.taps();
            assert_eq!(t.len(), 2 * h * n_s + 1);
            for i in 0..t.len() {
                assert_eq!(t[i], t[t.len() - 1 - i]);
            }
            assert!((k.energy() - 1.0).abs() < 1e-12);
            assert_eq!(k.peak_index(), h * n_s);
        }
    }

    #[test]
    fn rrc_singular_points_are_continuous() {
        // t = 1/(4β) lands on the grid for β = 0.25, n_s = 4 (t = 1).
        let beta = 0.25;
        let limit = rrc_at(beta, 1.0);
        let near = (rrc_at(beta, 1.0 - 1e-7) + rrc_at(beta, 1.0 + 1e-7)) / 2.0;
        assert!((limit - near).abs() < 1e-6);
        let near0 = rrc_at(beta, 1e-9);
        assert!((rrc_at(beta, 0.0) - near0).abs() < 1e-6);
        let rc_lim = rc_at(0.5, 1.0);
        let rc_near = (rc_at(0.5, 1.0 - 1e-7) + rc_at(0.5, 1.0 + 1e-7)) / 2.0;
        assert!((rc_lim - rc_near).abs() < 1e-6);
    }

    #[test]
    fn rrc_matched_pair_has_nyquist_zeros() {
        let (n_s, h) = (2, 16);
        let w = rrc_kernel::<f64>(0.5, n_s, h).unwrap();
        let c = convolve_slices(w.taps(), time_reverse(&w).taps());
        let centre = c.len() / 2;
        let peak = c[centre];
        for k in (n_s..=centre).step_by(n_s) {
            assert!(
                c[centre + k].abs() <= 1e-3 * peak,
                "lag {k}: {}",
                c[centre + k]
            );
        }
    }

    #[test]
    fn rc_normalization_and_zeros() {
        let (n_s, h) = (4, 8);
        let rc = rc_kernel::<f64>(0.5, n_s, h).unwrap();
        let c = h * n_s;
        assert_eq!(rc.taps()[c], 1.0);
        for k in 1..=h {
            assert!(rc.taps()[c + k * n_s].abs() < 1e-12);
            assert!(rc.taps()[c - k * n_s].abs() < 1e-12);
        }
    }

    #[test]
    fn rc_matches_rrc_autoconvolution() {
        // Long RRC so truncation does not dominate the comparison.
        let (n_s, h) = (4, 64);
        let w = rrc_kernel::<f64>(0.5, n_s, h).unwrap();
        let mut c = convolve_slices(w.taps(), time_reverse(&w).taps());
        let centre = c.len() / 2;
        let peak = c[centre];
        c.iter_mut().for_each(|v| *v /= peak);
        let hr = 8;
        let rc = rc_kernel::<f64>(0.5, n_s, hr).unwrap();
        let max_diff = rc
            .taps()
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - c[centre - hr * n_s + i]).abs())
            .fold(0.0, f64::max);
        assert!(max_diff <= 1e-6, "max diff {max_diff:e}");
    }

    #[test]
    fn pulse_parameter_errors() {
        assert!(rrc_kernel::<f64>(0.0, 2, 8).is_err());
        assert!(rrc_kernel::<f64>(1.5, 2, 8).is_err());
        assert!(rrc_kernel::<f64>(0.5, 1, 8).is_err());
        assert!(rc_kernel::<f64>(0.5, 2, 0).is_err());
        assert!(gaussian_kernel::<f64>(0.0, 2, 4).is_err());
    }

    #[test]
    fn gaussian_seed_contract() {
        let g = gaussian_kernel::<f64>(0.3, 4, 4).unwrap();
        assert!((g.energy() - 1.0).abs() < 1e-12);
        assert_eq!(g.peak_index(), 16);
    }

    #[test]
    fn chain_construction() {
        let c = make_allpass_chain(16, 0.9).unwrap();
        assert_eq!(c.len(), 16);
        assert!(c
            .sections()
            .iter()
            .all(|s| s.angle() > 0.0 && s.angle() < PI));
        assert!(c.sections().windows(2).all(|w| w[0].angle() < w[1].angle()));
        assert!(matches!(
            make_allpass_chain(4, 1.0),
            Err(Error::Stability { .. })
        ));
        assert!(make_allpass_chain(4, 0.0).is_err());
        assert!(make_allpass_chain(0, 0.9).unwrap().is_empty());
    }

    #[test]
    fn identity_chain_is_exact() {
        let chain = make_allpass_chain(0, 0.9).unwrap();
        let x = Waveform::new(vec![0.1, -2.0, 3.5, 0.0, 1e-9], 1.0).unwrap();
        assert_eq!(chain.apply(&x).unwrap(), x);
        let seed = rrc_kernel::<f64>(0.5, 2, 8).unwrap();
        let pair = build_spreading_kernel(&seed, &chain, 1e-5).unwrap();
        assert_eq!(pair.spreading(), &time_reverse(&seed));
    }

    #[test]
    fn magnitude_response_is_unity() {
        for &(k, r) in &[(1, 0.5), (8, 0.9), (32, 0.95), (64, 0.99)] {
            let chain = make_allpass_chain(k, r).unwrap();
            for i in 0..100 {
                let omega = PI * (i as f64 + 0.5) / 100.0;
                let (re, im) = chain.response(omega);
                let mag = (re * re + im * im).sqrt();
                assert!((mag - 1.0).abs() < 1e-9, "K={k} r={r} ω={omega}: {mag}");
            }
        }
    }

    #[test]
    fn spread_impulse_keeps_energy() {
        let chain = make_allpass_chain(16, 0.9).unwrap();
        let impulse = FirKernel::new(vec![1.0f64]).unwrap();
        let g = chain.spread(&impulse, 1e-5, 2).unwrap();
        assert!((g.energy() - 1.0).abs() <= 1e-6, "energy {}", g.energy());
        let support = |n: usize| SupportInterval::new(0, n - 1).unwrap();
        let n = g.len();
        let padded = |k: &FirKernel<f64>| {
            let mut v = k.taps().to_vec();
            v.resize(n, 0.0);
            Waveform::new(v, 1.0).unwrap()
        };
        assert!(
            papr(&padded(&g), support(n)).unwrap() < papr(&padded(&impulse), support(n)).unwrap()
        );
    }

    #[test]
    fn spreading_increases_with_sections() {
        let seed = rrc_kernel::<f64>(0.5, 2, 16).unwrap();
        let tbp = |k: usize| {
            let chain = make_allpass_chain(k, 0.9).unwrap();
            let g = chain.spread(&seed, 1e-5, 2).unwrap();
            tbp_ratio(&g, &seed).unwrap()
        };
        let (t0, t8, t32) = (tbp(0), tbp(8), tbp(32));
        assert_eq!(t0, 1.0);
        assert!(t8 > t0 && t32 > t8, "{t0} {t8} {t32}");
    }

    #[test]
    fn spreading_pair_properties() {
        let seed = rrc_kernel::<f64>(0.5, 2, 16).unwrap();
        for k in [8, 16, 32] {
            let chain = make_allpass_chain(k, 0.9).unwrap();
            let pair = build_spreading_kernel(&seed, &chain, 1e-5).unwrap();
            assert!(
                pair.spectral_deviation() <= 1e-3,
                "K={k}: {}",
                pair.spectral_deviation()
            );
            let n = pair.spreading().len();
            let pad = |t: &[f64]| {
                let mut v = t.to_vec();
                v.resize(n, 0.0);
                Waveform::new(v, 1.0).unwrap()
            };
            let s = SupportInterval::new(0, n - 1).unwrap();
            let p_seed = papr(&pad(seed.taps()), s).unwrap();
            let p_spread = papr(&pad(pair.spreading().taps()), s).unwrap();
            assert!(p_spread < p_seed, "K={k}: {p_spread} vs {p_seed}");
        }
    }

    #[test]
    fn round_trip_recovers_rc_pulse() {
        let seed = rrc_kernel::<f64>(0.5, 2, 16).unwrap();
        let chain = make_allpass_chain(32, 0.9).unwrap();
        let pair = build_spreading_kernel(&seed, &chain, 1e-5).unwrap();
        let train = PulseTrain::new(vec![0], vec![1.0], 1).unwrap();
        let tx = render_train(&train, pair.spreading(), 1.0).unwrap();
        let rx = matched_receive(&tx, &pair).unwrap();
        let y = rx.waveform.samples();
        assert_eq!(peak_position(y), rx.delay);
        assert!((y[rx.delay] - 1.0).abs() <= 1e-3);

        let rc = rc_kernel::<f64>(0.5, 2, 16).unwrap();
        let h = rc.len() / 2;
        let seg = &y[rx.delay - h..=rx.delay + h];
        let dot: f64 = seg.iter().zip(rc.taps()).map(|(a, b)| a * b).sum();
        let corr = dot / (seg.iter().map(|a| a * a).sum::<f64>() * rc.energy()).sqrt();
        assert!(corr >= 0.999, "correlation {corr}");
    }

    #[test]
    fn zero_in_zero_out() {
        let seed = rrc_kernel::<f64>(0.5, 2, 8).unwrap();
        let pair =
            build_spreading_kernel(&seed, &make_allpass_chain(8, 0.9).unwrap(), 1e-5).unwrap();
        let rx = matched_receive(&Waveform::zeros(300, 1.0).unwrap(), &pair).unwrap();
        assert!(rx.waveform.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn streaming_receiver_matches_batch() {
        let seed = rrc_kernel::<f64>(0.5, 2, 8).unwrap();
        let pair =
            build_spreading_kernel(&seed, &make_allpass_chain(8, 0.9).unwrap(), 1e-5).unwrap();
        let x: Vec<f64> = (0..700)
            .map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0)
            .collect();
        let batch = matched_receive(&Waveform::new(x.clone(), 1.0).unwrap(), &pair).unwrap();
        let mut rx = pair.receiver();
        let mut got = Vec::new();
        let mut out = Vec::new();
        for chunk in x.chunks(97) {
            let mut c = chunk.to_vec();
            rx.process(&mut c, &mut out);
            got.extend_from_slice(&out);
        }
        for (a, b) in got.iter().zip(batch.waveform.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_domain() {
        let seed = rrc_kernel::<f64>(0.5, 2, 8).unwrap();
        let chain = make_allpass_chain(4, 0.9).unwrap();
        assert!(build_spreading_kernel(&seed, &chain, 0.0).is_err());
        assert!(build_spreading_kernel(&seed, &chain, 0.1).is_err());
    }

    #[test]
    fn single_precision_chain() {
        let seed = rrc_kernel::<f32>(0.5, 2, 8).unwrap();
        let pair =
            build_spreading_kernel(&seed, &make_allpass_chain(8, 0.9).unwrap(), 1e-4).unwrap();
        assert!((pair.spreading().energy() - 1.0).abs() < 1e-4);
    }
}
