//! Experiment configuration.
//!
//! Files are TOML: `key = value` lines grouped in `[section]` tables. Every
//! field has a default, so an empty file is a valid two-particle analytic run
//! of the standard quench. Command-line overrides use the same dotted keys,
//! e.g. `--set quench.g=2.5`.
//!
//! ```toml
//! [quench]
//! g = 1.0
//! n_particles = 2
//! # omega_pre = 1.0
//! # omega_post = 0.9486832980505138   (√0.9 when omitted)
//!
//! [engine]
//! kind = "ed"            # analytic | ed | gp
//!
//! [run]
//! periods = 200
//! samples_per_period = 32
//!
//! [ed]
//! n_orbitals = 11
//!
//! [sweep]
//! g = [0.2, 0.4, 0.8]
//! n = [10, 20, 40]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use breathing::fewbody::{fock_dimension, EdSettings, PropagationOptions, PropagatorKind, DEFAULT_BASIS_CAP};
use breathing::meanfield::{EvolveOptions, GpGrid, ImaginaryTimeOptions, MeanFieldSettings};
use breathing::spectral::{PeakOptions, SpectrumOptions, Window};
use breathing::QuenchSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DriverError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Analytic,
    Ed,
    Gp,
}

impl EngineKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::Ed => "ed",
            Self::Gp => "gp",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuenchSection {
    pub omega_pre: f64,
    pub omega_post: f64,
    pub g: f64,
    pub n_particles: usize,
}

impl Default for QuenchSection {
    fn default() -> Self {
        let q = QuenchSpec::default();
        Self { omega_pre: q.omega_pre, omega_post: q.omega_post, g: q.g, n_particles: q.n_particles }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub kind: EngineKind,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self { kind: EngineKind::Analytic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// run length in post-quench trap periods
    pub periods: f64,
    pub samples_per_period: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { periods: 200.0, samples_per_period: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticSection {
    /// highest relative-motion quantum number kept in the expansion
    pub max_quanta: usize,
}

impl Default for AnalyticSection {
    fn default() -> Self {
        Self { max_quanta: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagator {
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdSection {
    pub n_orbitals: usize,
    pub basis_cap: usize,
    pub propagator: Propagator,
    pub krylov_tol: f64,
    pub krylov_dim: usize,
}

impl Default for EdSection {
    fn default() -> Self {
        let p = PropagationOptions::default();
        Self {
            n_orbitals: 11,
            basis_cap: DEFAULT_BASIS_CAP,
            propagator: Propagator::Auto,
            krylov_tol: p.krylov_tol,
            krylov_dim: p.krylov_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSection {
    pub nodes: usize,
    /// box half width; sized from the Thomas–Fermi radius when omitted
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub max_step_periods: f64,
    pub imaginary_tolerance: f64,
}

impl Default for GpSection {
    fn default() -> Self {
        Self {
            nodes: GpGrid::DEFAULT_NODES,
            half_width: None,
            max_step_periods: EvolveOptions::default().max_step_periods,
            imaginary_tolerance: ImaginaryTimeOptions::default().tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    None,
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSection {
    pub window: WindowKind,
    pub zero_pad_factor: usize,
    pub min_prominence: f64,
    pub window_bins: usize,
    pub max_peaks: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        let p = PeakOptions::default();
        Self {
            window: WindowKind::Hann,
            zero_pad_factor: p.spectrum.zero_pad_factor,
            min_prominence: p.min_prominence,
            window_bins: p.window_bins,
            max_peaks: p.max_peaks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// where result files are copied after a run
    pub dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), cache_dir: PathBuf::from(".breathe-cache") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct SweepSection {
    pub g: Vec<f64>,
    pub n: Vec<usize>,
    /// worker threads; 0 picks the number of cores
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub quench: QuenchSection,
    pub engine: EngineSection,
    pub run: RunSection,
    pub analytic: AnalyticSection,
    pub ed: EdSection,
    pub gp: GpSection,
    pub spectral: SpectralSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
}

/// Sections that change results; output locations and sweep grids do not.
#[derive(Serialize)]
struct CacheKeyView<'a> {
    version: &'static str,
    quench: &'a QuenchSection,
    engine: &'a EngineSection,
    run: &'a RunSection,
    analytic: &'a AnalyticSection,
    ed: &'a EdSection,
    gp: &'a GpSection,
    spectral: &'a SpectralSection,
}

impl ExperimentConfig {
    /// Parse a file, apply `section.key=value` overrides, validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| DriverError::io(p, e))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| DriverError::config(p.display().to_string(), e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            DriverError::config(offending_key(&e.to_string()).unwrap_or("config"), e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| DriverError::config("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn quench(&self) -> QuenchSpec {
        let q = &self.quench;
        QuenchSpec { omega_pre: q.omega_pre, omega_post: q.omega_post, g: q.g, n_particles: q.n_particles }
    }

    /// The same experiment at another (g, N).
    pub fn at_point(&self, g: f64, n: usize) -> Self {
        let mut c = self.clone();
        c.quench.g = g;
        c.quench.n_particles = n;
        c
    }

    /// SHA-256 over the canonical serialization of the result-relevant sections.
    pub fn cache_key(&self) -> String {
        let view = CacheKeyView {
            version: env!("CARGO_PKG_VERSION"),
            quench: &self.quench,
            engine: &self.engine,
            run: &self.run,
            analytic: &self.analytic,
            ed: &self.ed,
            gp: &self.gp,
            spectral: &self.spectral,
        };
        let text = toml::to_string(&view).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let q = &self.quench;
        positive("quench.omega_pre", q.omega_pre)?;
        positive("quench.omega_post", q.omega_post)?;
        if !(q.g >= 0.0 && q.g.is_finite()) {
            return Err(DriverError::config("quench.g", format!("must be finite and >= 0, got {}", q.g)));
        }
        if q.n_particles == 0 {
            return Err(DriverError::config("quench.n_particles", "must be at least 1"));
        }
        positive("run.periods", self.run.periods)?;
        if self.run.samples_per_period < 4 {
            return Err(DriverError::config("run.samples_per_period", "need at least 4 samples per period"));
        }
        let samples = self.run.periods * self.run.samples_per_period as f64;
        if samples < breathing::spectral::MIN_SAMPLES as f64 {
            return Err(DriverError::config(
                "run.periods",
                format!("{samples} samples is below the minimum of {}", breathing::spectral::MIN_SAMPLES),
            ));
        }
        if self.spectral.zero_pad_factor == 0 {
            return Err(DriverError::config("spectral.zero_pad_factor", "must be at least 1"));
        }
        if self.spectral.window_bins < 5 {
            return Err(DriverError::config("spectral.window_bins", "must be at least 5"));
        }
        if !(self.spectral.min_prominence >= 0.0 && self.spectral.min_prominence < 1.0) {
            return Err(DriverError::config("spectral.min_prominence", "must lie in [0, 1)"));
        }
        match self.engine.kind {
            EngineKind::Analytic => self.validate_analytic(q.n_particles)?,
            EngineKind::Ed => self.validate_ed(q.n_particles)?,
            EngineKind::Gp => self.validate_gp()?,
        }
        self.validate_sweep()
    }

    fn validate_analytic(&self, n: usize) -> Result<()> {
        if n != 2 {
            return Err(DriverError::config("quench.n_particles", "the analytic engine covers exactly two particles"));
        }
        let m = self.analytic.max_quanta;
        if m < 2 || !m.is_multiple_of(2) {
            return Err(DriverError::config("analytic.max_quanta", format!("must be even and >= 2, got {m}")));
        }
        Ok(())
    }

    fn validate_ed(&self, n: usize) -> Result<()> {
        let ed = &self.ed;
        if ed.n_orbitals == 0 {
            return Err(DriverError::config("ed.n_orbitals", "must be at least 1"));
        }
        if ed.n_orbitals > breathing::trap_model::ORBITAL_INDEX_LIMIT {
            return Err(DriverError::config(
                "ed.n_orbitals",
                format!("orbitals above {} are not evaluated stably", breathing::trap_model::ORBITAL_INDEX_LIMIT),
            ));
        }
        let dim = fock_dimension(n, ed.n_orbitals);
        if dim > ed.basis_cap as u128 {
            return Err(DriverError::config(
                "ed.n_orbitals",
                format!("N={n}, M={} gives {dim} Fock states, above ed.basis_cap = {}", ed.n_orbitals, ed.basis_cap),
            ));
        }
        if ed.krylov_dim < 4 {
            return Err(DriverError::config("ed.krylov_dim", "must be at least 4"));
        }
        positive("ed.krylov_tol", ed.krylov_tol)
    }

    fn validate_gp(&self) -> Result<()> {
        if self.gp.nodes < 16 {
            return Err(DriverError::config("gp.nodes", "must be at least 16"));
        }
        if let Some(w) = self.gp.half_width {
            positive("gp.half_width", w)?;
        }
        positive("gp.max_step_periods", self.gp.max_step_periods)?;
        positive("gp.imaginary_tolerance", self.gp.imaginary_tolerance)
    }

    fn validate_sweep(&self) -> Result<()> {
        if let Some(g) = self.sweep.g.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(DriverError::config("sweep.g", format!("entries must be finite and >= 0, got {g}")));
        }
        if self.sweep.n.contains(&0) {
            return Err(DriverError::config("sweep.n", "particle numbers must be at least 1"));
        }
        if self.engine.kind == EngineKind::Ed {
            for &n in &self.sweep.n {
                self.validate_ed(n).map_err(|e| match e {
                    DriverError::Config { reason, .. } => DriverError::config("sweep.n", reason),
                    other => other,
                })?;
            }
        }
        if self.engine.kind == EngineKind::Analytic && self.sweep.n.iter().any(|&n| n != 2) {
            return Err(DriverError::config("sweep.n", "the analytic engine covers exactly two particles"));
        }
        Ok(())
    }

    pub fn ed_settings(&self) -> EdSettings {
        let kind = match self.ed.propagator {
            Propagator::Auto => PropagatorKind::Auto,
            Propagator::Dense => PropagatorKind::Dense,
            Propagator::Krylov => PropagatorKind::Krylov,
        };
        EdSettings {
            n_orbitals: self.ed.n_orbitals,
            periods: self.run.periods,
            samples_per_period: self.run.samples_per_period,
            basis_cap: self.ed.basis_cap,
            propagation: PropagationOptions { kind, krylov_tol: self.ed.krylov_tol, krylov_dim: self.ed.krylov_dim },
            peaks: self.peak_options(),
        }
    }

    pub fn gp_settings(&self) -> MeanFieldSettings {
        let q = self.quench();
        let evolve = EvolveOptions { max_step_periods: self.gp.max_step_periods };
        let grid = if self.gp.nodes != GpGrid::DEFAULT_NODES || self.gp.half_width.is_some() {
            let base = GpGrid::for_lambda(q.gp_parameter(), q.omega_pre.min(q.omega_post));
            let period = q.post_period();
            let dt = period / self.run.samples_per_period as f64;
            let h = dt / (dt / (evolve.max_step_periods * period)).ceil();
            Some(
                GpGrid {
                    n: self.gp.nodes,
                    half_width: self.gp.half_width.unwrap_or(base.half_width),
                    band_limit: None,
                }
                .with_step(h),
            )
        } else {
            None
        };
        MeanFieldSettings {
            periods: self.run.periods,
            samples_per_period: self.run.samples_per_period,
            grid,
            imaginary: ImaginaryTimeOptions {
                tolerance: self.gp.imaginary_tolerance,
                ..ImaginaryTimeOptions::default()
            },
            evolve,
        }
    }

    pub fn peak_options(&self) -> PeakOptions {
        let s = &self.spectral;
        PeakOptions {
            spectrum: SpectrumOptions {
                window: match s.window {
                    WindowKind::None => Window::None,
                    WindowKind::Hann => Window::Hann,
                },
                zero_pad_factor: s.zero_pad_factor,
            },
            min_prominence: s.min_prominence,
            window_bins: s.window_bins,
            max_peaks: s.max_peaks,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DriverError::config(key, format!("must be positive and finite, got {v}")))
    }
}

/// `section.key=value`; the value is read as TOML and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) =
        spec.split_once('=').ok_or_else(|| DriverError::config(spec, "override must look like section.key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = path.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| DriverError::config(path, "empty key"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| DriverError::config(path, format!("`{p}` is not a section")))?;
    }
    cur.insert(leaf.to_string(), value);
    Ok(())
}

fn offending_key(message: &str) -> Option<&str> {
    // toml reports "unknown field `x`" or "invalid type ... for key `section.x`"
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_standard_analytic_run() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c.quench(), QuenchSpec::default());
        assert_eq!(c.engine.kind, EngineKind::Analytic);
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::default();
        c.engine.kind = EngineKind::Gp;
        c.quench.n_particles = 20;
        c.sweep.g = vec![0.1, 0.2];
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "quench.g=2.5").unwrap();
        apply_override(&mut t, "engine.kind=ed").unwrap();
        apply_override(&mut t, "sweep.n=[2, 3]").unwrap();
        let c: ExperimentConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(c.quench.g, 2.5);
        assert_eq!(c.engine.kind, EngineKind::Ed);
        assert_eq!(c.sweep.n, vec![2, 3]);
    }

    #[test]
    fn cache_key_tracks_physics_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("elsewhere");
        b.sweep.g = vec![1.0];
        assert_eq!(a.cache_key(), b.cache_key());
        b.quench.g = 1e-9;
        assert_ne!(a.cache_key(), b.cache_key());
        let mut c = a.clone();
        c.spectral.window_bins = 9;
        assert_ne!(a.cache_key(), c.cache_key());
    }

    #[test]
    fn ed_cap_checked_before_running() {
        let mut c = ExperimentConfig::default();
        c.engine.kind = EngineKind::Ed;
        c.quench.n_particles = 8;
        c.ed.n_orbitals = 30;
        match c.validate() {
            Err(DriverError::Config { key, .. }) => assert_eq!(key, "ed.n_orbitals"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn analytic_needs_two_particles() {
        let mut c = ExperimentConfig::default();
        c.quench.n_particles = 3;
        assert!(matches!(c.validate(), Err(DriverError::Config { .. })));
    }
}
