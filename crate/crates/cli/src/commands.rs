//! One function per subcommand. Each writes its artifacts into `out` and
//! stamps them with the experiment hash and master seed.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pileup_core::link::{
    random_bits, run_link, run_sweep, Averaging, BerRecord, Link, LinkConfig, SyncMode,
};
use pileup_core::metrics::{
    band_averaged_psd, excess_kurtosis, normal_quantile_pairs, papr, tbp_ratio, SupportInterval,
};
use pileup_core::report::{write_ber_csv, write_metrics_csv, write_table, Cell, MetricRow};
use pileup_core::shaping::rc_kernel;
use pileup_core::signal::{delta_train_from_bits, render_train, FirKernel, KernelRecord, Waveform};
use pileup_core::theory::{max_pileup_free_rate, papr_model, theory_curves};
use serde::Serialize;

use crate::config::Experiment;

pub type CmdResult = Result<(), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Output directory plus the stamp every artifact carries.
pub struct Out {
    dir: PathBuf,
    hash: String,
    seed: u64,
}

impl Out {
    pub fn new(dir: &Path, exp: &Experiment) -> Result<Self, String> {
        fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
        let out = Self {
            dir: dir.to_path_buf(),
            hash: exp.hash(),
            seed: exp.link.master_seed,
        };
        out.write_config(&out.hash, exp)?;
        Ok(out)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, String> {
        let p = self.path(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| format!("creating {}: {e}", p.display()))
    }

    fn write_json<S: Serialize>(&self, name: &str, value: &S) -> CmdResult {
        let mut text = serde_json::to_string_pretty(value).map_err(err)?;
        text.push('\n');
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| format!("writing {}: {e}", p.display()))
    }

    /// `config_<hash>.json`, so every hash in a CSV resolves to a file.
    fn write_config<S: Serialize>(&self, hash: &str, value: &S) -> CmdResult {
        self.write_json(&format!("config_{hash}.json"), value)
    }

    fn metrics(&self, name: &str, rows: &[(&str, f64)]) -> CmdResult {
        let rows: Vec<MetricRow> = rows
            .iter()
            .map(|(n, v)| MetricRow {
                metric_name: n.to_string(),
                value: *v,
                config_hash: self.hash.clone(),
                seed: self.seed,
            })
            .collect();
        write_metrics_csv(self.create(name)?, &rows).map_err(err)
    }

    /// Writes `rows` with `config_hash` and `seed` columns appended.
    fn table(&self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> CmdResult {
        let mut h = header.to_vec();
        h.extend(["config_hash", "seed"]);
        let rows: Vec<Vec<Cell>> = rows
            .into_iter()
            .map(|mut r| {
                r.push(self.hash.clone().into());
                r.push(Cell::Text(self.seed.to_string()));
                r
            })
            .collect();
        write_table(self.create(name)?, &h, &rows).map_err(err)
    }

    fn ber(&self, name: &str, records: &[BerRecord], configs: &[LinkConfig]) -> CmdResult {
        for c in configs {
            self.write_config(&c.hash(), c)?;
        }
        write_ber_csv(self.create(name)?, records).map_err(err)
    }
}

#[derive(Serialize)]
struct StampedKernel<'a> {
    config_hash: &'a str,
    seed: u64,
    kernel: KernelRecord,
}

fn kernel_papr(k: &FirKernel<f64>) -> Result<f64, String> {
    let w = k.to_waveform(1.0).map_err(err)?;
    papr(&w, SupportInterval::full(&w).map_err(err)?).map_err(err)
}

pub fn design(exp: &Experiment, out: &Out) -> CmdResult {
    let link = Link::new(exp.link.clone()).map_err(err)?;
    let pair = link.pair();
    for (name, k) in [
        ("seed.json", pair.seed()),
        ("spreading.json", pair.spreading()),
    ] {
        out.write_json(
            name,
            &StampedKernel {
                config_hash: &out.hash,
                seed: out.seed,
                kernel: k.to_record(),
            },
        )?;
    }
    let cal = link.calibration();
    out.metrics(
        "design_diagnostics.csv",
        &[
            ("seed_taps", pair.seed().len() as f64),
            ("spreading_taps", pair.spreading().len() as f64),
            ("receive_delay", pair.receive_delay() as f64),
            ("seed_kernel_papr", kernel_papr(pair.seed())?),
            ("spreading_kernel_papr", kernel_papr(pair.spreading())?),
            (
                "tbp_ratio",
                tbp_ratio(pair.spreading(), pair.seed()).map_err(err)?,
            ),
            ("spectral_deviation", pair.spectral_deviation()),
            ("matched_output_papr", cal.papr),
            ("noise_gain", cal.noise_gain),
        ],
    )
}

fn body(x: &Waveform<f64>, edge: usize) -> Result<Waveform<f64>, String> {
    if x.len() <= 2 * edge {
        return Err(format!(
            "train of {} samples too short to trim {edge} at each end",
            x.len()
        ));
    }
    Waveform::new(x.samples()[edge..x.len() - edge].to_vec(), x.sample_rate()).map_err(err)
}

pub fn analyze(exp: &Experiment, out: &Out) -> CmdResult {
    let cfg = &exp.link;
    let a = &exp.analysis;
    let link = Link::new(cfg.clone()).map_err(err)?;
    let pair = link.pair();
    let bits = random_bits(a.n_bits, cfg.master_seed);
    let train = delta_train_from_bits(&bits, cfg.n_p, 0, cfg.amplitude).map_err(err)?;
    let edge = pair.spreading().len();
    let xs = body(&render_train(&train, pair.seed(), 1.0).map_err(err)?, edge)?;
    let xg = body(
        &render_train(&train, pair.spreading(), 1.0).map_err(err)?,
        edge,
    )?;
    let full = |x: &Waveform<f64>| SupportInterval::full(x).map_err(err);

    let nfft = xg.len().next_power_of_two();
    let bands = 256;
    let ps = band_averaged_psd(xs.samples(), nfft, bands).map_err(err)?;
    let pg = band_averaged_psd(xg.samples(), nfft, bands).map_err(err)?;
    let floor = 1e-2 * ps.iter().cloned().fold(0.0, f64::max);
    let psd_dev = ps
        .iter()
        .zip(&pg)
        .take(bands * 3 / 4)
        .filter(|(s, _)| **s >= floor)
        .map(|(s, g)| (g / s - 1.0).abs())
        .fold(0.0, f64::max);

    out.metrics(
        "metrics.csv",
        &[
            ("pulse_rate", 1.0 / cfg.n_p as f64),
            (
                "pileup_free_rate",
                max_pileup_free_rate(cfg.n_s).map_err(err)?,
            ),
            ("seed_train_papr", papr(&xs, full(&xs)?).map_err(err)?),
            ("spread_train_papr", papr(&xg, full(&xg)?).map_err(err)?),
            (
                "seed_train_excess_kurtosis",
                excess_kurtosis(&xs).map_err(err)?,
            ),
            (
                "spread_train_excess_kurtosis",
                excess_kurtosis(&xg).map_err(err)?,
            ),
            (
                "tbp_ratio",
                tbp_ratio(pair.spreading(), pair.seed()).map_err(err)?,
            ),
            ("inband_psd_max_deviation", psd_dev),
            ("matched_output_papr", link.calibration().papr),
            ("noise_gain", link.calibration().noise_gain),
        ],
    )?;

    let qs = normal_quantile_pairs(&xs, a.quantile_points).map_err(err)?;
    let qg = normal_quantile_pairs(&xg, a.quantile_points).map_err(err)?;
    if qs.len() != qg.len() {
        return Err("quantile tables differ in length".into());
    }
    let rows = qs
        .iter()
        .zip(&qg)
        .map(|((q, s), (_, g))| vec![Cell::from(*q), (*s).into(), (*g).into()])
        .collect();
    out.table(
        "fig4_quantiles.csv",
        &["normal_quantile", "seed_train", "spread_train"],
        rows,
    )?;

    let rc = rc_kernel::<f64>(cfg.beta, cfg.n_s, cfg.half_len_symbols).map_err(err)?;
    let mut rows = Vec::new();
    for (i, &ratio) in a.papr_ratios.iter().enumerate() {
        let n_p = ratio * cfg.n_s;
        let bits = random_bits(a.papr_bits, cfg.master_seed ^ (i as u64 + 1));
        let x = render_train(
            &delta_train_from_bits(&bits, n_p, 0, 1.0).map_err(err)?,
            &rc,
            1.0,
        )
        .map_err(err)?;
        let measured =
            papr(&x, SupportInterval::trimmed(&x, rc.len()).map_err(err)?).map_err(err)?;
        let model = papr_model(n_p, cfg.n_s).map_or(Cell::Text(String::new()), Cell::Float);
        rows.push(vec![ratio.into(), n_p.into(), measured.into(), model]);
    }
    out.table(
        "fig5.csv",
        &["n_p_over_n_s", "n_p", "papr_measured", "papr_model"],
        rows,
    )
}

pub fn run(exp: &Experiment, out: &Out) -> CmdResult {
    let r = run_link(&exp.link).map_err(err)?;
    println!(
        "n_p={} sync={} snr={} dB: {} errors in {} bits (BER {:.3e}, analytic {:.3e})",
        r.n_p,
        r.sync_mode.as_str(),
        exp.link.snr_db,
        r.bit_errors,
        r.n_bits,
        r.ber,
        r.ber_analytic
    );
    out.ber(
        "run.csv",
        std::slice::from_ref(&r),
        std::slice::from_ref(&exp.link),
    )
}

/// Fails after writing if any point errored.
pub fn sweep(exp: &Experiment, out: &Out) -> CmdResult {
    let spec = exp.sweep.spec();
    let points = spec.points(&exp.link).map_err(err)?;
    let records = run_sweep(&exp.link, &spec).map_err(err)?;
    let configs: Vec<LinkConfig> = points.into_iter().map(|p| p.config).collect();
    out.ber("fig8.csv", &records, &configs)?;
    let failed: Vec<String> = records
        .iter()
        .filter(|r| r.status != "ok")
        .map(|r| {
            format!(
                "n_p={} {} M={} snr={}: {}",
                r.n_p,
                r.sync_mode.as_str(),
                r.m,
                r.snr_db_target,
                r.status
            )
        })
        .collect();
    println!("{} sweep points, {} failed", records.len(), failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(failed.join("\n"))
    }
}

pub fn sync_demo(exp: &Experiment, out: &Out) -> CmdResult {
    let d = &exp.sync_demo;
    let link = Link::new(LinkConfig {
        m: d.m,
        ..exp.link.clone()
    })
    .map_err(err)?;
    let averaging = match exp.link.sync_mode {
        SyncMode::Mma => Averaging::Magnitude,
        SyncMode::Ideal | SyncMode::Mpa => Averaging::Power,
    };
    let trace = link
        .sync_trace(averaging, d.snr_db, d.n_pulses, exp.link.master_seed)
        .map_err(err)?;
    let mut rows = Vec::new();
    for (p, step) in trace.steps.iter().enumerate() {
        for (bin, &v) in step.bins.iter().enumerate() {
            rows.push(vec![
                (p + 1).into(),
                step.window_end.into(),
                bin.into(),
                v.into(),
                step.i_max.into(),
                trace.true_phase.into(),
            ]);
        }
    }
    out.table(
        "fig7_bins.csv",
        &[
            "update",
            "window_end",
            "bin",
            "value",
            "i_max",
            "true_phase",
        ],
        rows,
    )?;
    if let Some(last) = trace.steps.last() {
        println!(
            "{} updates; final i_max {} (true phase {})",
            trace.steps.len(),
            last.i_max,
            trace.true_phase
        );
    }
    Ok(())
}

pub fn theory(exp: &Experiment, out: &Out) -> CmdResult {
    let pts = theory_curves(&exp.theory.n_p, exp.link.n_s, &exp.theory.ber).map_err(err)?;
    let rows = pts
        .iter()
        .map(|p| {
            vec![
                p.n_p.into(),
                p.ber_target.into(),
                p.snr_limit_db.into(),
                p.shannon_floor_db.into(),
            ]
        })
        .collect();
    out.table(
        "fig6.csv",
        &["n_p", "ber_target", "snr_limit_db", "shannon_floor_db"],
        rows,
    )
}
