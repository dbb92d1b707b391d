use std::path::{Path, PathBuf};
use std::process::ExitCode;

use breathing::busch::{band_spectrum, relative_breathing_frequency, relative_coupling, RelSpectrum};
use breathing::spectral::{peaks_from_spectrum, power_spectrum, BreathingLines, TimeSeries};
use breathing::QuenchSpec;
use breathing_driver::config::{EngineKind, ExperimentConfig};
use breathing_driver::contour::{gp_hyperbola_overlay, ContourTable};
use breathing_driver::csvio::{self, num, opt};
use breathing_driver::error::{DriverError, Result};
use breathing_driver::pipeline::{self, band_rows, base_provenance, estimate_seconds, BAND_HEADER};
use breathing_driver::sweep::{self, SweepOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "breathe", version, about = "Breathing-mode quench experiments for trapped 1D bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment file
    #[arg(long)]
    config: Option<PathBuf>,
    /// override any config key, e.g. --set ed.n_orbitals=9 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// particle number
    #[arg(long, short = 'n')]
    n: Option<usize>,
    #[arg(long)]
    omega_post: Option<f64>,
    #[arg(long)]
    periods: Option<f64>,
    /// ED orbital number M
    #[arg(long, short = 'm')]
    orbitals: Option<usize>,
    /// result directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl Common {
    fn overrides(&self, engine: Option<EngineKind>) -> Vec<String> {
        let mut o = Vec::new();
        if let Some(e) = engine {
            o.push(format!("engine.kind=\"{e}\""));
        }
        if let Some(g) = self.g {
            o.push(format!("quench.g={}", num(g)));
        }
        if let Some(n) = self.n {
            o.push(format!("quench.n_particles={n}"));
        }
        if let Some(w) = self.omega_post {
            o.push(format!("quench.omega_post={}", num(w)));
        }
        if let Some(p) = self.periods {
            o.push(format!("run.periods={}", num(p)));
        }
        if let Some(m) = self.orbitals {
            o.push(format!("ed.n_orbitals={m}"));
        }
        if let Some(d) = &self.out {
            o.push(format!("output.dir={}", toml_string(d)));
        }
        if let Some(d) = &self.cache_dir {
            o.push(format!("output.cache_dir={}", toml_string(d)));
        }
        o.extend(self.set.iter().cloned());
        o
    }

    fn load(&self, engine: Option<EngineKind>) -> Result<ExperimentConfig> {
        ExperimentConfig::load(self.config.as_deref(), &self.overrides(engine))
    }
}

fn toml_string(p: &Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}

#[derive(Subcommand)]
enum Command {
    /// Analytic two-body tables
    Busch {
        #[command(subcommand)]
        what: BuschCommand,
    },
    /// Exact-diagonalization quench
    EdQuench(Common),
    /// Gross–Pitaevskii quench
    GpQuench(Common),
    /// Spectrum and fitted peaks of a t,x2 CSV
    Spectrum {
        /// series CSV with columns t and x2
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the engine named in the config
    Run(Common),
    /// (g, N) sweep into a contour table
    Sweep {
        #[command(flatten)]
        common: Common,
        /// refuse to start above this estimated runtime in seconds
        #[arg(long)]
        budget: Option<f64>,
        /// stop after this many new points
        #[arg(long)]
        max_points: Option<usize>,
    },
    /// Constant g(N−1) lines over a contour table
    Overlay {
        /// contour.csv from a sweep
        table: PathBuf,
        /// contour levels, ω/Ω_post
        #[arg(long, value_delimiter = ',', required = true)]
        anchors: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum BuschCommand {
    /// Relative-motion levels and 2 − Δ₂,₀ over a g grid
    Levels(BuschArgs),
    /// All breathing lines of the two-body band spectrum over a g grid
    Bands(BuschArgs),
}

#[derive(Args)]
struct BuschArgs {
    /// couplings; defaults to a log grid from 0.01 to 1000
    #[arg(long, value_delimiter = ',')]
    g: Vec<f64>,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    omega_pre: f64,
    #[arg(long, default_value_t = 0.9f64.sqrt())]
    omega_post: f64,
    /// levels for `levels`, highest quantum number for `bands`
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// write here instead of stdout
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

impl BuschArgs {
    fn grid(&self) -> Vec<f64> {
        if !self.g.is_empty() {
            return self.g.clone();
        }
        let n = self.points.max(2);
        (0..n).map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / (n - 1) as f64)).collect()
    }

    fn quench(&self, g: f64) -> Result<QuenchSpec> {
        Ok(QuenchSpec::new(self.omega_pre, self.omega_post, g, 2)?)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("breathe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Busch { what } => busch(what),
        Command::EdQuench(c) => run(&c.load(Some(EngineKind::Ed))?),
        Command::GpQuench(c) => run(&c.load(Some(EngineKind::Gp))?),
        Command::Run(c) => run(&c.load(None)?),
        Command::Spectrum { input, common } => {
            // frequencies are labelled in units of --omega-post (√0.9 by default)
            let config = common.load(None)?;
            spectrum(&input, config.quench.omega_post, &config)
        }
        Command::Sweep { common, budget, max_points } => {
            run_sweep(&common.load(None)?, &SweepOptions { budget_seconds: budget, max_points })
        }
        Command::Overlay { table, anchors, out } => overlay(&table, &anchors, &out),
    }
}

fn emit(output: Option<&Path>, bytes: Vec<u8>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, bytes).map_err(|e| DriverError::io(p, e)),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|e| DriverError::io("<stdout>", e))
        }
    }
}

fn busch(what: BuschCommand) -> Result<()> {
    match what {
        BuschCommand::Levels(a) => {
            let prov = busch_provenance(&a, "levels");
            let mut header: Vec<String> =
                vec!["g".into(), "g_rel".into(), "breathing_relative".into(), "delta_2_0".into()];
            header.extend((0..a.levels).map(|k| format!("e{}", 2 * k)));
            let mut rows = Vec::new();
            for g in a.grid() {
                let q = a.quench(g)?;
                let s = RelSpectrum::compute(g, q.omega_post, a.levels.max(2))?;
                let f = relative_breathing_frequency(&q)?;
                let mut r = vec![num(g), num(relative_coupling(g)), num(f), num(2.0 - f)];
                r.extend(s.levels.iter().take(a.levels).map(|e| num(*e)));
                rows.push(r);
            }
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            emit(a.output.as_deref(), csvio::render(&prov, &h, &rows))
        }
        BuschCommand::Bands(a) => {
            let prov = busch_provenance(&a, "bands");
            let quanta = a.levels + a.levels % 2;
            let mut rows = Vec::new();
            for g in a.grid() {
                let b = band_spectrum(&a.quench(g)?, quanta.max(2))?;
                for r in band_rows(&b) {
                    let mut row = vec![num(g)];
                    row.extend(r);
                    rows.push(row);
                }
            }
            let mut header = vec!["g"];
            header.extend(BAND_HEADER);
            emit(a.output.as_deref(), csvio::render(&prov, &header, &rows))
        }
    }
}

fn busch_provenance(a: &BuschArgs, table: &str) -> Vec<(String, String)> {
    vec![
        ("tool".into(), format!("breathe {}", env!("CARGO_PKG_VERSION"))),
        ("table".into(), format!("busch {table}")),
        ("omega_pre".into(), num(a.omega_pre)),
        ("omega_post".into(), num(a.omega_post)),
        ("levels".into(), a.levels.to_string()),
        (
            "units".into(),
            "energies in pre-quench oscillator units at the post-quench trap; frequencies in Ω_post".into(),
        ),
    ]
}

fn run(config: &ExperimentConfig) -> Result<()> {
    eprintln!("estimated runtime {:.1} s", estimate_seconds(config));
    let r = pipeline::run_experiment(config)?;
    let files = pipeline::export(&r, &config.output.dir)?;
    let s = &r.summary;
    eprintln!(
        "{} {}: frequency {} ± {} (cm {}, relative {})",
        s.engine,
        if r.cached { "(cached)" } else { "" },
        opt(s.frequency),
        opt(s.sigma),
        opt(s.cm),
        opt(s.relative)
    );
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn spectrum(input: &Path, omega_post: f64, config: &ExperimentConfig) -> Result<()> {
    let t = csvio::read(input)?;
    let bad = |r: &str| DriverError::config(input.display().to_string(), r.to_string());
    let (ct, cx) = (
        t.column("t").ok_or_else(|| bad("missing column t"))?,
        t.column("x2").ok_or_else(|| bad("missing column x2"))?,
    );
    let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("not a number: {s}")));
    let times = t.rows.iter().map(|r| parse(&r[ct])).collect::<Result<Vec<_>>>()?;
    let samples = t.rows.iter().map(|r| parse(&r[cx])).collect::<Result<Vec<_>>>()?;
    if times.len() < 2 {
        return Err(bad("need at least two samples"));
    }
    let dt = times[1] - times[0];
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
        return Err(bad("samples must be uniformly spaced"));
    }
    let series = TimeSeries::new(times[0], dt, samples)?;
    let opts = config.peak_options();
    let spec = power_spectrum(&series, &opts.spectrum);
    let peaks = peaks_from_spectrum(&spec, &opts)?;
    let lines = BreathingLines::identify(&peaks, omega_post);
    let mut prov = t.provenance.clone();
    prov.push(("source".into(), input.display().to_string()));
    prov.push(("omega_post".into(), num(omega_post)));
    prov.push(("resolution".into(), num(peaks.resolution)));
    let dir = &config.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| DriverError::io(dir, e))?;
    let rows: Vec<Vec<String>> =
        spec.omega.iter().zip(&spec.magnitude).map(|(o, m)| vec![num(*o), num(o / omega_post), num(*m)]).collect();
    csvio::write(&dir.join("spectrum.csv"), &prov, &["omega", "omega_over_post", "magnitude"], &rows)?;
    let rows: Vec<Vec<String>> = peaks
        .by_frequency()
        .iter()
        .map(|p| {
            let role = if lines.cm.is_some_and(|c| c.center == p.center) {
                "cm"
            } else if lines.relative.is_some_and(|c| c.center == p.center) {
                "relative"
            } else {
                "other"
            };
            vec![
                num(p.center),
                num(p.center / omega_post),
                num(p.width),
                num(p.amplitude),
                num(p.sigma),
                p.flagged.to_string(),
                role.into(),
            ]
        })
        .collect();
    csvio::write(
        &dir.join("peaks.csv"),
        &prov,
        &["center", "center_over_post", "width", "amplitude", "sigma", "flagged", "role"],
        &rows,
    )?;
    println!("{}", dir.join("spectrum.csv").display());
    println!("{}", dir.join("peaks.csv").display());
    Ok(())
}

fn run_sweep(config: &ExperimentConfig, opts: &SweepOptions) -> Result<()> {
    eprintln!(
        "sweep over {} points, estimated {:.0} s of compute",
        sweep::points(config).len(),
        sweep::estimate(config)
    );
    let report = sweep::sweep(config, opts)?;
    eprintln!("{} computed, {} already done, {} failed", report.computed, report.skipped, report.failures.len());
    for (g, n, e) in &report.failures {
        eprintln!("  g={g} N={n}: {e}");
    }
    let mut table = report.table;
    table.sort();
    let path = config.output.dir.join("contour.csv");
    let mut prov = base_provenance(config);
    prov.push(("sweep_manifest".into(), report.manifest.display().to_string()));
    table.write(&path, &prov)?;
    println!("{}", path.display());
    Ok(())
}

fn overlay(table: &Path, anchors: &[f64], out: &Path) -> Result<()> {
    let t = ContourTable::read(table)?;
    let o = gp_hyperbola_overlay(&t, anchors)?;
    std::fs::create_dir_all(out).map_err(|e| DriverError::io(out, e))?;
    let prov = vec![
        ("tool".to_string(), format!("breathe {}", env!("CARGO_PKG_VERSION"))),
        ("table".to_string(), table.display().to_string()),
        ("anchors".to_string(), anchors.iter().map(|a| num(*a)).collect::<Vec<_>>().join(",")),
    ];
    let (h, d) = (out.join("overlay_hyperbolas.csv"), out.join("overlay_deviation.csv"));
    o.write(&h, &d, &prov)?;
    for n in &o.notes {
        eprintln!("{n}");
    }
    println!("{}\n{}", h.display(), d.display());
    Ok(())
}
