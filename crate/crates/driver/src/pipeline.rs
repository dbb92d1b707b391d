//! engine → ⟨X̂²⟩(t) → spectrum → peaks → files, cached by config hash.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use breathing::busch::{band_spectrum, breathing_signal_analytic, BandSpectrum};
use breathing::fewbody::{fock_dimension, run_ed_quench, PropagatorKind, DENSE_LIMIT};
use breathing::meanfield::mf_breathing_frequency;
use breathing::spectral::{peaks_from_spectrum, power_spectrum, BreathingLines, PeakSet, Spectrum};
use breathing::TimeSeries;
use log::info;
use serde::Serialize;

use crate::config::{EngineKind, ExperimentConfig};
use crate::csvio::{self, num, opt, Provenance};
use crate::error::{DriverError, Result};

/// Files of one run, in publication order.
pub const RUN_FILES: [&str; 5] = ["series.csv", "spectrum.csv", "peaks.csv", "summary.csv", "config.toml"];
pub const BANDS_FILE: &str = "bands.csv";
pub const MANIFEST: &str = "manifest.toml";

pub struct EngineOutcome {
    pub series: TimeSeries,
    pub spectrum: Spectrum,
    pub peaks: PeakSet,
    pub lines: BreathingLines,
    /// breathing frequency and uncertainty, units of Ω_post
    pub breathing: Option<(f64, f64)>,
    pub meta: String,
    pub extra: Provenance,
    pub bands: Option<BandSpectrum>,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub g: f64,
    pub n_particles: usize,
    pub engine: EngineKind,
    pub frequency: Option<f64>,
    pub sigma: Option<f64>,
    pub cm: Option<f64>,
    pub relative: Option<f64>,
    pub meta: String,
}

impl RunSummary {
    pub const HEADER: [&'static str; 8] =
        ["g", "n_particles", "engine", "frequency", "sigma", "cm", "relative", "meta"];

    fn row(&self) -> Vec<String> {
        vec![
            num(self.g),
            self.n_particles.to_string(),
            self.engine.to_string(),
            opt(self.frequency),
            opt(self.sigma),
            opt(self.cm),
            opt(self.relative),
            self.meta.clone(),
        ]
    }

    pub fn parse_row(r: &[String]) -> Option<Self> {
        let f = |s: &String| if s.is_empty() { None } else { s.parse().ok() };
        let engine = match r.get(2)?.as_str() {
            "analytic" => EngineKind::Analytic,
            "ed" => EngineKind::Ed,
            "gp" => EngineKind::Gp,
            _ => return None,
        };
        Some(Self {
            g: r.first()?.parse().ok()?,
            n_particles: r.get(1)?.parse().ok()?,
            engine,
            frequency: f(r.get(3)?),
            sigma: f(r.get(4)?),
            cm: f(r.get(5)?),
            relative: f(r.get(6)?),
            meta: r.get(7)?.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub key: String,
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub cached: bool,
}

/// Run the configured engine and spectral pipeline without touching disk.
pub fn run_engine(config: &ExperimentConfig) -> Result<EngineOutcome> {
    config.validate()?;
    let q = config.quench();
    let peak_opts = config.peak_options();
    let per_period = config.run.samples_per_period;
    let count = (config.run.periods * per_period as f64).round() as usize;
    let dt = q.post_period() / per_period as f64;
    let (series, breathing_fit, meta, extra, bands) = match config.engine.kind {
        EngineKind::Analytic => {
            let signal = breathing_signal_analytic(&q, config.analytic.max_quanta, 0.0, dt, count)?;
            let bands = band_spectrum(&q, config.analytic.max_quanta)?;
            let extra = vec![
                ("expansion_lines".into(), signal.lines.len().to_string()),
                ("discarded_weight".into(), num(signal.discarded_weight)),
            ];
            (signal.series, None, format!("max_quanta={}", config.analytic.max_quanta), extra, Some(bands))
        }
        EngineKind::Ed => {
            let run = run_ed_quench(&q, &config.ed_settings())?;
            let t = &run.trajectory;
            let method = match t.method {
                PropagatorKind::Dense => "dense",
                PropagatorKind::Krylov => "krylov",
                PropagatorKind::Auto => "auto",
            };
            let extra = vec![
                ("ground_energy".into(), num(run.ground_energy)),
                ("max_norm_drift".into(), num(t.max_norm_drift)),
                ("max_energy_drift".into(), num(t.max_energy_drift)),
                ("propagator".into(), method.into()),
            ];
            (run.trajectory.series, None, format!("M={}", config.ed.n_orbitals), extra, None)
        }
        EngineKind::Gp => {
            let settings = config.gp_settings();
            let r = mf_breathing_frequency(&q, &settings)?;
            let nodes = r.series.provenance_value("grid_nodes").unwrap_or("").to_string();
            let half = r.series.provenance_value("grid_half_width").unwrap_or("").to_string();
            let extra = vec![("lambda".into(), num(r.lambda)), ("frequency_method".into(), r.method.into())];
            (r.series, Some((r.frequency, r.sigma)), format!("nodes={nodes};half_width={half}"), extra, None)
        }
    };
    let spectrum = power_spectrum(&series, &peak_opts.spectrum);
    let peaks = peaks_from_spectrum(&spectrum, &peak_opts)?;
    let lines = BreathingLines::identify(&peaks, q.omega_post);
    let breathing = breathing_fit.or_else(|| {
        let p = lines.relative.or(lines.cm)?;
        Some((p.center / q.omega_post, p.sigma / q.omega_post))
    });
    Ok(EngineOutcome { series, spectrum, peaks, lines, breathing, meta, extra, bands })
}

/// `engine`, config key, crate version, and every result-relevant setting.
pub fn base_provenance(config: &ExperimentConfig) -> Provenance {
    let mut p = vec![
        ("tool".to_string(), format!("breathe {}", env!("CARGO_PKG_VERSION"))),
        ("config_key".to_string(), config.cache_key()),
    ];
    #[derive(Serialize)]
    struct View<'a> {
        quench: &'a crate::config::QuenchSection,
        engine: &'a crate::config::EngineSection,
        run: &'a crate::config::RunSection,
        analytic: &'a crate::config::AnalyticSection,
        ed: &'a crate::config::EdSection,
        gp: &'a crate::config::GpSection,
        spectral: &'a crate::config::SpectralSection,
    }
    let view = View {
        quench: &config.quench,
        engine: &config.engine,
        run: &config.run,
        analytic: &config.analytic,
        ed: &config.ed,
        gp: &config.gp,
        spectral: &config.spectral,
    };
    if let Ok(toml::Value::Table(t)) = toml::Value::try_from(&view) {
        for (section, v) in t {
            if let toml::Value::Table(inner) = v {
                for (k, v) in inner {
                    let text = match v {
                        toml::Value::String(s) => s,
                        toml::Value::Float(f) => num(f),
                        other => other.to_string(),
                    };
                    p.push((format!("{section}.{k}"), text));
                }
            }
        }
    }
    p
}

fn render_files(config: &ExperimentConfig, out: &EngineOutcome) -> Vec<(&'static str, Vec<u8>)> {
    let q = config.quench();
    let mut prov = base_provenance(config);
    prov.extend(out.extra.iter().cloned());
    let w = q.omega_post;
    let series_rows: Vec<Vec<String>> =
        out.series.times().zip(&out.series.samples).map(|(t, x)| vec![num(t), num(*x)]).collect();
    let spectrum_rows: Vec<Vec<String>> = out
        .spectrum
        .omega
        .iter()
        .zip(&out.spectrum.magnitude)
        .map(|(o, m)| vec![num(*o), num(o / w), num(*m)])
        .collect();
    let role = |center: f64| {
        if out.lines.cm.is_some_and(|p| p.center == center) {
            "cm"
        } else if out.lines.relative.is_some_and(|p| p.center == center) {
            "relative"
        } else if out.lines.band.iter().any(|p| p.center == center) {
            "band"
        } else {
            "other"
        }
    };
    let peak_rows: Vec<Vec<String>> = out
        .peaks
        .by_frequency()
        .iter()
        .map(|p| {
            vec![
                num(p.center),
                num(p.center / w),
                num(p.width),
                num(p.amplitude),
                num(p.sigma),
                num(p.residual),
                p.flagged.to_string(),
                role(p.center).to_string(),
            ]
        })
        .collect();
    let summary = summarize(config, out);
    let mut peak_prov = prov.clone();
    peak_prov.push(("resolution".into(), num(out.peaks.resolution)));
    let mut files = vec![
        ("series.csv", csvio::render(&prov, &["t", "x2"], &series_rows)),
        ("spectrum.csv", csvio::render(&prov, &["omega", "omega_over_post", "magnitude"], &spectrum_rows)),
        (
            "peaks.csv",
            csvio::render(
                &peak_prov,
                &["center", "center_over_post", "width", "amplitude", "sigma", "residual", "flagged", "role"],
                &peak_rows,
            ),
        ),
        ("summary.csv", csvio::render(&prov, &RunSummary::HEADER, &[summary.row()])),
        ("config.toml", keyed_config(config).to_toml().into_bytes()),
    ];
    if let Some(b) = &out.bands {
        files.push((BANDS_FILE, csvio::render(&prov, &BAND_HEADER, &band_rows(b))));
    }
    files
}

/// The config without output locations or sweep grids, so cached bytes
/// depend on the cache key alone.
fn keyed_config(config: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig { output: Default::default(), sweep: Default::default(), ..config.clone() }
}

pub const BAND_HEADER: [&str; 4] = ["frequency", "kind", "upper", "lower"];

pub fn band_rows(b: &BandSpectrum) -> Vec<Vec<String>> {
    b.entries
        .iter()
        .map(|l| vec![num(l.frequency), l.kind.label().to_string(), l.upper.to_string(), l.lower.to_string()])
        .collect()
}

pub fn summarize(config: &ExperimentConfig, out: &EngineOutcome) -> RunSummary {
    // a mean-field cloud has one breathing line and no CM/relative split
    let split = config.engine.kind != EngineKind::Gp;
    RunSummary {
        g: config.quench.g,
        n_particles: config.quench.n_particles,
        engine: config.engine.kind,
        frequency: out.breathing.map(|b| b.0),
        sigma: out.breathing.map(|b| b.1),
        cm: out.lines.cm_frequency().filter(|_| split),
        relative: out.lines.relative_frequency().filter(|_| split),
        meta: out.meta.clone(),
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Run with caching: results live in `cache_dir/<key>/`; an existing complete
/// directory is reused untouched.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let key = config.cache_key();
    let root = &config.output.cache_dir;
    let dir = root.join(&key);
    if dir.join(MANIFEST).is_file() {
        info!("cache hit {key}");
        let summary = read_summary(&dir)?;
        return Ok(RunResult { key, dir, summary, cached: true });
    }
    let out = run_engine(config)?;
    let files = render_files(config, &out);
    std::fs::create_dir_all(root).map_err(|e| DriverError::io(root, e))?;
    let tmp = root.join(format!(".tmp-{key}-{}-{}", std::process::id(), TMP_COUNTER.fetch_add(1, Ordering::Relaxed)));
    std::fs::create_dir_all(&tmp).map_err(|e| DriverError::io(&tmp, e))?;
    for (name, bytes) in &files {
        let p = tmp.join(name);
        std::fs::write(&p, bytes).map_err(|e| DriverError::io(&p, e))?;
    }
    let manifest = manifest_text(&key, config, &files);
    let p = tmp.join(MANIFEST);
    std::fs::write(&p, manifest).map_err(|e| DriverError::io(&p, e))?;
    publish(&tmp, &dir)?;
    let summary = read_summary(&dir)?;
    Ok(RunResult { key, dir, summary, cached: false })
}

fn manifest_text(key: &str, config: &ExperimentConfig, files: &[(&str, Vec<u8>)]) -> String {
    let mut t = toml::Table::new();
    t.insert("key".into(), key.into());
    t.insert("engine".into(), config.engine.kind.label().into());
    t.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let names: Vec<toml::Value> = files.iter().map(|(n, _)| toml::Value::from(*n)).collect();
    t.insert("files".into(), toml::Value::Array(names));
    toml::to_string(&t).expect("manifest serializes")
}

/// Rename a finished temporary directory into place. When another worker
/// won the race the existing copy stays and ours is dropped.
fn publish(tmp: &Path, dir: &Path) -> Result<()> {
    match std::fs::rename(tmp, dir) {
        Ok(()) => Ok(()),
        Err(_) if dir.join(MANIFEST).is_file() => {
            let _ = std::fs::remove_dir_all(tmp);
            Ok(())
        }
        Err(e) => {
            // a stale incomplete directory from a killed run
            if dir.exists() && !dir.join(MANIFEST).is_file() {
                std::fs::remove_dir_all(dir).map_err(|e| DriverError::io(dir, e))?;
                return std::fs::rename(tmp, dir).map_err(|e| DriverError::io(dir, e));
            }
            Err(DriverError::io(dir, e))
        }
    }
}

fn read_summary(dir: &Path) -> Result<RunSummary> {
    let p = dir.join("summary.csv");
    let t = csvio::read(&p)?;
    t.rows
        .first()
        .and_then(|r| RunSummary::parse_row(r))
        .ok_or_else(|| DriverError::io(&p, std::io::Error::new(std::io::ErrorKind::InvalidData, "malformed summary")))
}

/// Copy a cached run into `dest`.
pub fn export(result: &RunResult, dest: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dest).map_err(|e| DriverError::io(dest, e))?;
    let mut copied = Vec::new();
    for name in RUN_FILES.iter().chain(std::iter::once(&BANDS_FILE)) {
        let src = result.dir.join(name);
        if src.is_file() {
            let dst = dest.join(name);
            std::fs::copy(&src, &dst).map_err(|e| DriverError::io(&dst, e))?;
            copied.push(dst);
        }
    }
    Ok(copied)
}

/// Rough wall-clock estimate in seconds, for budgeting sweeps.
pub fn estimate_seconds(config: &ExperimentConfig) -> f64 {
    let samples = config.run.periods * config.run.samples_per_period as f64;
    match config.engine.kind {
        EngineKind::Analytic => 0.05 + 2e-6 * samples * config.analytic.max_quanta as f64,
        EngineKind::Ed => {
            let d = fock_dimension(config.quench.n_particles, config.ed.n_orbitals) as f64;
            let m = config.ed.n_orbitals as f64;
            if d <= DENSE_LIMIT as f64 {
                5e-9 * d.powi(3) + samples * (4e-9 * d * d + 2e-8 * d * m * config.quench.n_particles as f64)
            } else {
                samples * d * (m * m * 1e-7 + config.ed.krylov_dim as f64 * 2e-8)
            }
        }
        EngineKind::Gp => {
            let steps = config.run.periods / config.gp.max_step_periods;
            let n = config.gp.nodes as f64;
            5e-8 * steps * n * n.log2().max(1.0) / 10.0 + 1.0
        }
    }
}
