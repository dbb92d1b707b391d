//! Parallel (g, N) sweeps with an append-only manifest.
//!
//! Workers only compute (through the run cache); the calling thread is the
//! single writer of the manifest and appends each finished point as one
//! line. A restarted sweep skips every point already in the manifest.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::contour::{ContourRow, ContourTable};
use crate::csvio::{self, num, opt};
use crate::error::{DriverError, Result};
use crate::pipeline::{base_provenance, estimate_seconds, run_experiment, RunSummary};

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// refuse to start when the estimate exceeds this many seconds
    pub budget_seconds: Option<f64>,
    /// stop after this many newly computed points
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub g: f64,
    pub n_particles: usize,
    pub outcome: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub table: ContourTable,
    pub failures: Vec<(f64, usize, String)>,
    pub computed: usize,
    pub skipped: usize,
    pub estimate_seconds: f64,
    pub manifest: PathBuf,
}

const MANIFEST_HEADER: [&str; 10] =
    ["g", "n_particles", "status", "engine", "frequency", "sigma", "cm", "relative", "meta", "error"];

/// Identifies a sweep: the base run plus its grids.
pub fn sweep_key(config: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(config.cache_key());
    for g in &config.sweep.g {
        h.update(num(*g));
        h.update(",");
    }
    h.update(";");
    for n in &config.sweep.n {
        h.update(n.to_string());
        h.update(",");
    }
    hex::encode(h.finalize())
}

pub fn manifest_path(config: &ExperimentConfig) -> PathBuf {
    config.output.dir.join(format!("sweep-{}.csv", &sweep_key(config)[..16]))
}

/// Grid points in sweep order: g outer, N inner.
pub fn points(config: &ExperimentConfig) -> Vec<(f64, usize)> {
    config.sweep.g.iter().flat_map(|&g| config.sweep.n.iter().map(move |&n| (g, n))).collect()
}

pub fn estimate(config: &ExperimentConfig) -> f64 {
    points(config).iter().map(|&(g, n)| estimate_seconds(&config.at_point(g, n))).sum()
}

pub fn sweep(config: &ExperimentConfig, opts: &SweepOptions) -> Result<SweepReport> {
    config.validate()?;
    let all = points(config);
    if all.is_empty() {
        return Err(DriverError::config("sweep.g", "sweep needs non-empty sweep.g and sweep.n"));
    }
    let estimate_seconds = estimate(config);
    if let Some(b) = opts.budget_seconds {
        if estimate_seconds > b {
            return Err(DriverError::config(
                "sweep",
                format!("estimated {estimate_seconds:.0} s exceeds the budget of {b:.0} s; shrink the grids"),
            ));
        }
    }
    let manifest = manifest_path(config);
    std::fs::create_dir_all(&config.output.dir).map_err(|e| DriverError::io(&config.output.dir, e))?;
    let done = load_manifest(&manifest)?;
    let seen: HashSet<(u64, usize)> = done.iter().map(|r| (r.g.to_bits(), r.n_particles)).collect();
    let mut todo: Vec<(f64, usize)> = all.iter().copied().filter(|(g, n)| !seen.contains(&(g.to_bits(), *n))).collect();
    let skipped = all.len() - todo.len();
    if let Some(m) = opts.max_points {
        todo.truncate(m);
    }
    info!(
        "sweep: {} points, {skipped} already done, {} to run, estimate {estimate_seconds:.0} s",
        all.len(),
        todo.len()
    );

    if manifest.is_file() {
        drop_torn_line(&manifest)?;
    } else {
        let mut prov = base_provenance(config);
        prov.push(("sweep_key".into(), sweep_key(config)));
        csvio::write(&manifest, &prov, &MANIFEST_HEADER, &[])?;
    }
    let mut file = OpenOptions::new().append(true).open(&manifest).map_err(|e| DriverError::io(&manifest, e))?;

    let jobs = if config.sweep.jobs == 0 { rayon::current_num_threads() } else { config.sweep.jobs };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| DriverError::config("sweep.jobs", e.to_string()))?;
    let (tx, rx) = mpsc::channel::<PointRecord>();
    let mut computed = 0;
    let mut write_err = None;
    pool.in_place_scope(|s| {
        for &(g, n) in &todo {
            let tx = tx.clone();
            let point = config.at_point(g, n);
            s.spawn(move |_| {
                let outcome = run_experiment(&point).map(|r| r.summary).map_err(|e| e.to_string());
                let _ = tx.send(PointRecord { g, n_particles: n, outcome });
            });
        }
        drop(tx);
        for rec in rx {
            computed += 1;
            if let Err(e) = &rec.outcome {
                warn!("point g={} N={} failed: {e}", rec.g, rec.n_particles);
            }
            if let Err(e) = append(&mut file, &rec) {
                write_err.get_or_insert(DriverError::io(&manifest, e));
            }
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }

    let records = load_manifest(&manifest)?;
    let mut table = ContourTable::default();
    let mut failures = Vec::new();
    for &(g, n) in &all {
        let Some(rec) = records.iter().rev().find(|r| r.g.to_bits() == g.to_bits() && r.n_particles == n) else {
            continue;
        };
        match &rec.outcome {
            Ok(s) => match (s.frequency, s.sigma) {
                (Some(f), Some(sigma)) => table.insert(ContourRow {
                    g,
                    n_particles: n,
                    engine: s.engine,
                    frequency: f,
                    sigma,
                    meta: s.meta.clone(),
                }),
                _ => failures.push((g, n, "no breathing line identified".to_string())),
            },
            Err(e) => failures.push((g, n, e.clone())),
        }
    }
    for r in table.implausible() {
        warn!("g={} N={}: frequency {} outside the expected window", r.g, r.n_particles, r.frequency);
    }
    Ok(SweepReport { table, failures, computed, skipped, estimate_seconds, manifest })
}

/// Cut a partial last line left by a killed run so new records start clean.
fn drop_torn_line(path: &Path) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| DriverError::io(path, e))?;
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let f = OpenOptions::new().write(true).open(path).map_err(|e| DriverError::io(path, e))?;
        f.set_len(keep as u64).map_err(|e| DriverError::io(path, e))?;
    }
    Ok(())
}

fn append(file: &mut std::fs::File, rec: &PointRecord) -> std::io::Result<()> {
    let fields = match &rec.outcome {
        Ok(s) => vec![
            num(rec.g),
            rec.n_particles.to_string(),
            "ok".into(),
            s.engine.to_string(),
            opt(s.frequency),
            opt(s.sigma),
            opt(s.cm),
            opt(s.relative),
            s.meta.clone(),
            String::new(),
        ],
        Err(e) => {
            let mut v = vec![num(rec.g), rec.n_particles.to_string(), "failed".into()];
            v.extend(std::iter::repeat_n(String::new(), 6));
            v.push(e.replace(['\n', '\r'], " "));
            v
        }
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(&fields)?;
    let line = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    file.write_all(&line)?;
    file.flush()
}

/// Completed points; a torn last line from a killed run is ignored.
pub fn load_manifest(path: &Path) -> Result<Vec<PointRecord>> {
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let mut text = std::fs::read_to_string(path).map_err(|e| DriverError::io(path, e))?;
    if !text.ends_with('\n') {
        let cut = text.rfind('\n').map_or(0, |i| i + 1);
        text.truncate(cut);
    }
    let t = csvio::parse(&text).map_err(|source| DriverError::Csv { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for r in &t.rows {
        let (Ok(g), Ok(n)) = (r[0].parse::<f64>(), r[1].parse::<usize>()) else { continue };
        let outcome = if r[2] == "ok" {
            let mut summary_row = vec![r[0].clone(), r[1].clone()];
            summary_row.extend(r[3..9].iter().cloned());
            match RunSummary::parse_row(&summary_row) {
                Some(s) => Ok(s),
                None => continue,
            }
        } else {
            Err(r[9].clone())
        };
        out.push(PointRecord { g, n_particles: n, outcome });
    }
    Ok(out)
}
