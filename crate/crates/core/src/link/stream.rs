//! Block-streaming simulation: transmit, noise and receive run in chunks so
//! long trials need memory proportional to the filters, not the bit count.

use std::collections::VecDeque;

use serde::Serialize;

use super::sync::{argmax_first, Averaging, SyncState};
use super::Link;
use crate::channel::NoiseSpec;
use crate::error::Result;
use crate::signal::TrainStream;

const BLOCK: usize = 1 << 14;

/// Phase estimate after the sync warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AcquisitionOutcome {
    pub i_max: Option<usize>,
    pub true_phase: usize,
}

impl AcquisitionOutcome {
    pub fn acquired(&self) -> bool {
        self.i_max == Some(self.true_phase)
    }
}

/// Sync bins after each update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncTrace {
    pub true_phase: usize,
    /// Matched-output index of the first pulse peak.
    pub first_peak: usize,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    /// Last sample index of the averaging window.
    pub window_end: usize,
    pub i_max: usize,
    pub bins: Vec<f64>,
}

pub(crate) struct SimOutput {
    /// Decision per transmitted pulse, `None` if it was never sampled.
    pub decisions: Vec<Option<bool>>,
    pub sync_failures: usize,
    pub i_max_at_warmup_end: Option<usize>,
}

/// Receiver-side bookkeeping over the matched-filter output stream.
struct Consumer<'a> {
    link: &'a Link,
    n_pulses: usize,
    decisions: Vec<Option<bool>>,
    sync: Option<SyncState>,
    // Ideal: next pulse to sample. Sync: next averaging step p ≥ 1.
    step: usize,
    i_max: usize,
    warmup_end: usize,
    past_warmup: bool,
    sync_failures: usize,
    i_max_at_warmup_end: Option<usize>,
    trace: Option<&'a mut SyncTrace>,
}

impl Consumer<'_> {
    fn record(&mut self, k: usize, y: f64) {
        let origin = self.link.peak_index(0) as f64;
        let j = ((k as f64 - origin) / self.link.config.n_p as f64).round();
        if j >= 0.0 && (j as usize) < self.n_pulses {
            let slot = &mut self.decisions[j as usize];
            if slot.is_none() {
                *slot = Some(y >= 0.0);
            }
        }
    }

    /// Consumes whatever `buf` (starting at absolute index `base`) allows.
    /// `done` marks the end of the stream. Returns how many leading samples
    /// may be dropped.
    fn advance(&mut self, buf: &VecDeque<f64>, base: usize, done: bool) -> Result<usize> {
        let n_p = self.link.config.n_p;
        let end = base + buf.len();
        let Some(mut state) = self.sync.take() else {
            while self.step < self.n_pulses {
                let k = self.link.peak_index(self.step);
                if k >= end {
                    break;
                }
                let y = buf[k - base];
                self.decisions[self.step] = Some(y >= 0.0);
                self.step += 1;
            }
            let next = self.link.peak_index(self.step.min(self.n_pulses));
            return Ok(next.saturating_sub(base).min(buf.len()));
        };
        let wl = state.averaging().window_len(n_p);
        loop {
            let p = self.step;
            let e = self.i_max + p * n_p;
            // The next sample index is at most (p + 2)·n_p − 1.
            if !done && (p + 2) * n_p > end {
                break;
            }
            if e >= end {
                break;
            }
            let start = e + 1 - wl;
            let window: Vec<f64> = buf.range(start - base..=e - base).copied().collect();
            if let Err(err) = state.update(&window, e) {
                self.sync = Some(state);
                return Err(err);
            }
            let new = argmax_first(state.bins());
            if self.past_warmup {
                if new != self.i_max {
                    self.sync_failures += 1;
                }
            } else if e >= self.warmup_end {
                self.past_warmup = true;
                self.i_max_at_warmup_end = Some(new);
                if new != self.link.true_phase() {
                    self.sync_failures += 1;
                }
            }
            self.i_max = new;
            if let Some(t) = self.trace.as_deref_mut() {
                t.steps.push(TraceStep {
                    window_end: e,
                    i_max: new,
                    bins: state.bins().to_vec(),
                });
            }
            let k = new + (p + 1) * n_p;
            if k < end {
                let y = buf[k - base];
                self.record(k, y);
            }
            self.step += 1;
        }
        self.sync = Some(state);
        // Next window starts at or after (step − 1)·n_p.
        let keep_from = (self.step.saturating_sub(1) * n_p).max(base);
        Ok((keep_from - base).min(buf.len()))
    }
}

/// Transmits `bits`, adds `noise`, receives, and samples either at the
/// exact peaks (`averaging = None`) or where the sync estimate points.
pub(crate) fn simulate(
    link: &Link,
    bits: &[bool],
    noise: NoiseSpec,
    averaging: Option<Averaging>,
    warmup: usize,
    trace: Option<&mut SyncTrace>,
) -> Result<SimOutput> {
    let cfg = &link.config;
    let pair = &link.pair;
    let n = bits.len();
    let total =
        cfg.true_offset + (n - 1) * cfg.n_p + pair.spreading().len() + pair.seed().len() - 1;

    let sync = averaging
        .map(|a| SyncState::new(cfg.n_p, a, cfg.m))
        .transpose()?;
    let mut consumer = Consumer {
        link,
        n_pulses: n,
        decisions: vec![None; n],
        sync,
        step: if averaging.is_some() { 1 } else { 0 },
        i_max: 0,
        warmup_end: link.peak_index(warmup),
        past_warmup: false,
        sync_failures: 0,
        i_max_at_warmup_end: None,
        trace,
    };

    let mut tx = TrainStream::new(pair.spreading());
    let mut src = noise.source();
    let mut rx = pair.receiver();
    let mut next_pulse = 0;
    let mut chunk = Vec::with_capacity(BLOCK);
    let mut out = Vec::with_capacity(BLOCK);
    let mut buf: VecDeque<f64> = VecDeque::new();
    let mut base = 0;
    let mut pos = 0;
    while pos < total {
        let upto = (pos + BLOCK).min(total);
        while next_pulse < n {
            let at = cfg.true_offset + next_pulse * cfg.n_p;
            if at >= upto {
                break;
            }
            let a = if bits[next_pulse] {
                cfg.amplitude
            } else {
                -cfg.amplitude
            };
            tx.add_pulse(at, a)?;
            next_pulse += 1;
        }
        chunk.clear();
        tx.emit(upto, &mut chunk);
        src.add_to(&mut chunk);
        rx.process(&mut chunk, &mut out);
        buf.extend(&out);
        pos = upto;
        let drop = consumer.advance(&buf, base, pos >= total)?;
        buf.drain(..drop);
        base += drop;
    }
    Ok(SimOutput {
        decisions: consumer.decisions,
        sync_failures: consumer.sync_failures,
        i_max_at_warmup_end: consumer.i_max_at_warmup_end,
    })
}
