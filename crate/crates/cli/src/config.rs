//! Experiment file schema and command-line overrides.

use std::path::Path;

use pileup_core::link::{LinkConfig, SweepSpec, SyncMode};
use pileup_core::report::config_hash;
use serde::{Deserialize, Serialize};

/// Everything a command reads. Each section is optional in the file and
/// falls back to the defaults below; unknown keys are rejected at every level.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub link: LinkConfig,
    pub sweep: SweepAxes,
    pub analysis: Analysis,
    pub sync_demo: SyncDemo,
    pub theory: TheoryAxes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub snr_db: Vec<f64>,
    pub n_p: Vec<usize>,
    pub m: Vec<usize>,
    pub sync: Vec<SyncMode>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            snr_db: (0..=8).map(|i| -20.0 + 2.0 * i as f64).collect(),
            n_p: vec![32, 256],
            m: vec![2, 8],
            sync: vec![SyncMode::Ideal, SyncMode::Mpa],
        }
    }
}

impl SweepAxes {
    pub fn spec(&self) -> SweepSpec {
        SweepSpec {
            snr_db: self.snr_db.clone(),
            n_p: self.n_p.clone(),
            m: self.m.clone(),
            sync: self.sync.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Analysis {
    /// Bits in the transmit trains whose statistics are measured.
    pub n_bits: usize,
    /// Points in the normal quantile table.
    pub quantile_points: usize,
    /// `n_p/n_s` values of the PAPR-versus-rate table.
    pub papr_ratios: Vec<usize>,
    /// Bits per train in the PAPR-versus-rate table.
    pub papr_bits: usize,
}

impl Default for Analysis {
    fn default() -> Self {
        Self {
            n_bits: 20_000,
            quantile_points: 201,
            papr_ratios: vec![4, 8, 16, 32, 64, 128, 256],
            papr_bits: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncDemo {
    pub snr_db: f64,
    /// Averaging constant; the link's own `m` is not used here.
    pub m: usize,
    pub n_pulses: usize,
}

impl Default for SyncDemo {
    fn default() -> Self {
        Self {
            snr_db: -20.0,
            m: 32,
            n_pulses: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryAxes {
    pub n_p: Vec<usize>,
    pub ber: Vec<f64>,
}

impl Default for TheoryAxes {
    fn default() -> Self {
        Self {
            n_p: (4..=11).map(|e| 1usize << e).collect(),
            ber: vec![1e-2, 1e-3, 1e-4, 1e-5],
        }
    }
}

/// Values given on the command line. Lists replace sweep and theory axes;
/// a single value also sets the matching link field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snr: Option<Vec<f64>>,
    pub n_p: Option<Vec<usize>>,
    pub m: Option<Vec<usize>>,
    pub sync: Option<SyncMode>,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), String> {
        if let Some(seed) = o.seed {
            self.link.master_seed = seed;
        }
        if let Some(snr) = &o.snr {
            if let [v] = snr[..] {
                self.link.snr_db = v;
                self.sync_demo.snr_db = v;
            }
            self.sweep.snr_db = snr.clone();
        }
        if let Some(n_p) = &o.n_p {
            if let [v] = n_p[..] {
                self.link.n_p = v;
            }
            self.sweep.n_p = n_p.clone();
            self.theory.n_p = n_p.clone();
        }
        if let Some(m) = &o.m {
            if let [v] = m[..] {
                self.link.m = v;
                self.sync_demo.m = v;
            }
            self.sweep.m = m.clone();
        }
        if let Some(mode) = o.sync {
            self.link.sync_mode = mode;
            self.sweep.sync = vec![mode];
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), String> {
        let s = &self.sweep;
        if s.snr_db.is_empty() || s.n_p.is_empty() || s.m.is_empty() || s.sync.is_empty() {
            return Err("sweep axes must not be empty".into());
        }
        if self.theory.n_p.is_empty() || self.theory.ber.is_empty() {
            return Err("theory axes must not be empty".into());
        }
        if self.analysis.papr_ratios.is_empty() {
            return Err("analysis.papr_ratios must not be empty".into());
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let e: Experiment = serde_json::from_str("{}").unwrap();
        assert_eq!(e, Experiment::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<Experiment>(r#"{"lnk": {}}"#).is_err());
        assert!(serde_json::from_str::<Experiment>(r#"{"link": {"np": 3}}"#).is_err());
        assert!(serde_json::from_str::<Experiment>(r#"{"sweep": {"snr": [1]}}"#).is_err());
    }

    #[test]
    fn single_values_reach_the_link() {
        let mut e = Experiment::default();
        let o = Overrides {
            seed: Some(9),
            snr: Some(vec![-7.0]),
            n_p: Some(vec![64]),
            m: Some(vec![4]),
            sync: Some(SyncMode::Mma),
        };
        e.apply(&o).unwrap();
        assert_eq!(
            (e.link.master_seed, e.link.snr_db, e.link.n_p, e.link.m),
            (9, -7.0, 64, 4)
        );
        assert_eq!(e.link.sync_mode, SyncMode::Mma);
        assert_eq!(e.sweep.sync, vec![SyncMode::Mma]);
        assert_eq!((e.sync_demo.snr_db, e.sync_demo.m), (-7.0, 4));
    }

    #[test]
    fn lists_replace_axes() {
        let mut e = Experiment::default();
        e.apply(&Overrides {
            snr: Some(vec![-4.0, -8.0]),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(e.sweep.snr_db, vec![-4.0, -8.0]);
        assert_eq!(e.link.snr_db, LinkConfig::default().snr_db);
    }
}
