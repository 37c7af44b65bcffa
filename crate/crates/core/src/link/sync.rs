//! Modulo power / magnitude averaging for pulse-phase acquisition.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// What the sync bins accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// `x²` over `n_p + 1` samples (both window endpoints).
    Power,
    /// `|x|` over the last `n_p` samples.
    Magnitude,
    /// `|x|` over `n_p + 1` samples. Kept only to demonstrate why the extra
    /// point must be dropped.
    MagnitudeExtraPoint,
}

impl Averaging {
    pub fn window_len(self, n_p: usize) -> usize {
        match self {
            Averaging::Power | Averaging::MagnitudeExtraPoint => n_p + 1,
            Averaging::Magnitude => n_p,
        }
    }

    fn measure(self, x: f64) -> f64 {
        match self {
            Averaging::Power => x * x,
            Averaging::Magnitude | Averaging::MagnitudeExtraPoint => x.abs(),
        }
    }
}

/// Exponentially averaged per-phase statistics, one bin per sample index
/// modulo `n_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncState {
    bins: Vec<f64>,
    averaging: Averaging,
    m: usize,
    pulses_seen: u64,
}

impl SyncState {
    pub fn new(n_p: usize, averaging: Averaging, m: usize) -> Result<Self> {
        if n_p == 0 {
            return Err(invalid("n_p must be positive"));
        }
        if m < 2 {
            return Err(invalid(format!("averaging constant M = {m} must exceed 1")));
        }
        Ok(Self {
            bins: vec![0.0; n_p],
            averaging,
            m,
            pulses_seen: 0,
        })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn n_p(&self) -> usize {
        self.bins.len()
    }

    pub fn averaging(&self) -> Averaging {
        self.averaging
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pulses_seen(&self) -> u64 {
        self.pulses_seen
    }

    /// One averaging step with the window whose last sample has absolute
    /// index `end_index`.
    pub fn update(&mut self, window: &[f64], end_index: usize) -> Result<()> {
        let n_p = self.bins.len();
        let want = self.averaging.window_len(n_p);
        if window.len() != want {
            return Err(Error::Contract(format!(
                "{:?} window needs {want} samples, got {}",
                self.averaging,
                window.len()
            )));
        }
        if end_index + 1 < want {
            return Err(Error::Contract(format!(
                "window ending at {end_index} would start before sample 0"
            )));
        }
        let m = self.m as f64;
        let decay = (m - 1.0) / m;
        self.bins.iter_mut().for_each(|b| *b *= decay);
        let start = end_index + 1 - want;
        let mut bin = start % n_p;
        for &x in window {
            self.bins[bin] += self.averaging.measure(x) / m;
            bin += 1;
            if bin == n_p {
                bin = 0;
            }
        }
        self.pulses_seen += 1;
        Ok(())
    }

    /// Phase with the largest bin; the smallest index wins ties.
    pub fn estimate(&self) -> Result<usize> {
        if self.pulses_seen == 0 {
            return Err(Error::Contract("no pulses averaged yet".into()));
        }
        Ok(argmax_first(&self.bins))
    }

    /// Sample index of pulse `j`: `i_max + j·n_p`.
    pub fn next_sample_index(&self, j: usize) -> Result<usize> {
        Ok(self.estimate()? + j * self.bins.len())
    }
}

pub(crate) fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &b) in v.iter().enumerate() {
        if b > v[best] {
            best = i;
        }
    }
    best
}

/// Power-averaging step; `state` must be in [`Averaging::Power`] mode.
pub fn mpa_update(state: &mut SyncState, window: &[f64], end_index: usize) -> Result<()> {
    if state.averaging != Averaging::Power {
        return Err(Error::Contract(
            "state is not in power-averaging mode".into(),
        ));
    }
    state.update(window, end_index)
}

/// Magnitude-averaging step; `state` must be in a magnitude mode.
pub fn mma_update(state: &mut SyncState, window: &[f64], end_index: usize) -> Result<()> {
    if state.averaging == Averaging::Power {
        return Err(Error::Contract(
            "state is not in magnitude-averaging mode".into(),
        ));
    }
    state.update(window, end_index)
}
