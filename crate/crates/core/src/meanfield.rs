//! Gross–Pitaevskii mean field: −½ψ″ + ½ω²x²ψ + Λ|ψ|²ψ = μψ with ∫|ψ|² = 1
//! and Λ = g(N−1).
//!
//! Time stepping is Strang splitting with the kinetic factor applied in
//! momentum space.

use std::f64::consts::PI;
use std::sync::Arc;

use log::{debug, warn};
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::spectral::{extract_peaks, fit_sine, PeakOptions, TimeSeries};
use crate::trap_model::QuenchSpec;

type C64 = Complex<f64>;

/// Density at the box edge above this fraction of the peak is an error.
pub const BOUNDARY_LIMIT: f64 = 1e-8;

/// Thomas–Fermi chemical potential and radius for nonlinearity Λ in a trap ω.
///
/// From μ = Λ n(x) + ½ω²x² and ∫n = 1: μ = (3Λω/(4√2))^{2/3}, R = √(2μ)/ω.
pub fn thomas_fermi(lambda: f64, omega: f64) -> (f64, f64) {
    let mu = (3.0 * lambda * omega / (4.0 * std::f64::consts::SQRT_2)).powf(2.0 / 3.0);
    (mu, (2.0 * mu).sqrt() / omega)
}

/// Uniform periodic grid on [−L, L), x_k = −L + k·dx.
///
/// `band_limit` removes Fourier modes with |k| above it at every step. Strang
/// splitting with a nonlinear term is unstable for modes near k²h/2 = π, so
/// the limit must sit below √(2π/h) when the step h is long.
#[derive(Debug, Clone, PartialEq)]
pub struct GpGrid {
    pub n: usize,
    pub half_width: f64,
    pub band_limit: Option<f64>,
}

impl GpGrid {
    pub const DEFAULT_NODES: usize = 1024;

    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 {
            return Err(invalid("grid nodes", format!("need at least 16, got {n}")));
        }
        if !(half_width > 0.0) {
            return Err(invalid("grid half width", "must be positive"));
        }
        Ok(Self { n, half_width, band_limit: None })
    }

    /// ±max(12, 3·R_TF) oscillator lengths of the softer trap, 1024 nodes.
    pub fn for_lambda(lambda: f64, omega_min: f64) -> Self {
        let length = 1.0 / omega_min.sqrt();
        let (_, r_tf) = thomas_fermi(lambda, omega_min);
        Self { n: Self::DEFAULT_NODES, half_width: (12.0 * length).max(3.0 * r_tf), band_limit: None }
    }

    /// Band limit that keeps a Strang step `h` stable.
    pub fn with_step(mut self, h: f64) -> Self {
        self.band_limit = Some(stable_band_limit(h));
        self
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.dx()
    }

    /// Largest |k| carried by the grid.
    pub fn k_max(&self) -> f64 {
        let nyquist = PI / self.dx();
        self.band_limit.map_or(nyquist, |b| b.min(nyquist))
    }

    fn wavenumbers(&self) -> Vec<f64> {
        let dk = PI / self.half_width;
        (0..self.n).map(|j| if j <= self.n / 2 { j as f64 * dk } else { (j as f64 - self.n as f64) * dk }).collect()
    }
}

/// |k| up to which a Strang step `h` keeps the kinetic phase below 0.8π.
pub fn stable_band_limit(h: f64) -> f64 {
    (1.6 * PI / h.abs()).sqrt()
}

/// Mean-field order parameter on a grid.
#[derive(Debug, Clone)]
pub struct GpField {
    pub grid: GpGrid,
    pub psi: Vec<C64>,
    pub lambda: f64,
}

impl GpField {
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }

    /// ∫x²|ψ|²dx
    pub fn x2(&self) -> f64 {
        let dx = self.grid.dx();
        self.psi.iter().enumerate().map(|(k, c)| self.grid.x(k).powi(2) * c.norm_sqr()).sum::<f64>() * dx
    }

    /// Edge density relative to the peak density.
    pub fn boundary_ratio(&self) -> f64 {
        let d = self.density();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        let edge = d[0].max(d[1]).max(d[d.len() - 1]).max(d[d.len() - 2]);
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }

    fn check_boundary(&self) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio > BOUNDARY_LIMIT {
            return Err(Error::BoxTooSmall { ratio });
        }
        Ok(())
    }
}

struct SplitStep {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
    mask: Vec<bool>,
    x2: Vec<f64>,
    dx: f64,
    scratch: Vec<C64>,
}

impl SplitStep {
    fn new(grid: &GpGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n);
        let inv = planner.plan_fft_inverse(grid.n);
        let scratch = vec![C64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        let k = grid.wavenumbers();
        let limit = grid.band_limit.unwrap_or(f64::INFINITY);
        Self {
            fwd,
            inv,
            mask: k.iter().map(|k| k.abs() <= limit).collect(),
            k2: k.iter().map(|k| k * k).collect(),
            x2: (0..grid.n).map(|k| grid.x(k).powi(2)).collect(),
            dx: grid.dx(),
            scratch,
        }
    }

    fn kinetic(&mut self, psi: &mut [C64], factor: impl Fn(f64) -> C64) {
        let n = psi.len() as f64;
        self.fwd.process_with_scratch(psi, &mut self.scratch);
        for ((c, k2), keep) in psi.iter_mut().zip(&self.k2).zip(&self.mask) {
            *c = if *keep { *c * factor(*k2) / n } else { C64::new(0.0, 0.0) };
        }
        self.inv.process_with_scratch(psi, &mut self.scratch);
    }

    /// ∫ [½|ψ'|² + ½ω²x²|ψ|² + ½Λ|ψ|⁴] dx
    fn energy(&mut self, psi: &[C64], omega: f64, lambda: f64, dx: f64) -> f64 {
        let n = psi.len();
        let mut buf = psi.to_vec();
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        // Parseval: ∫|ψ'|² dx = dx/n Σ k²|ψ̂|²
        let kinetic = 0.5 * dx / n as f64 * buf.iter().zip(&self.k2).map(|(c, k2)| k2 * c.norm_sqr()).sum::<f64>();
        let pot: f64 = psi
            .iter()
            .zip(&self.x2)
            .map(|(c, x2)| {
                let d = c.norm_sqr();
                0.5 * omega * omega * x2 * d + 0.5 * lambda * d * d
            })
            .sum::<f64>()
            * dx;
        kinetic + pot
    }

    fn imaginary_step(&mut self, psi: &mut [C64], omega: f64, lambda: f64, dtau: f64, dx: f64) {
        let half = |psi: &mut [C64], x2: &[f64]| {
            for (c, x2) in psi.iter_mut().zip(x2) {
                let v = 0.5 * omega * omega * x2 + lambda * c.norm_sqr();
                *c *= (-0.5 * v * dtau).exp();
            }
        };
        let x2 = std::mem::take(&mut self.x2);
        half(psi, &x2);
        self.kinetic(psi, |k2| C64::new((-0.5 * k2 * dtau).exp(), 0.0));
        half(psi, &x2);
        self.x2 = x2;
        let norm = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).sqrt();
        psi.iter_mut().for_each(|c| *c /= norm);
    }

    fn real_step(&mut self, psi: &mut [C64], omega: f64, lambda: f64, dt: f64) {
        let half = |psi: &mut [C64], x2: &[f64]| {
            for (c, x2) in psi.iter_mut().zip(x2) {
                let v = 0.5 * omega * omega * x2 + lambda * c.norm_sqr();
                *c *= C64::from_polar(1.0, -0.5 * v * dt);
            }
        };
        let x2 = std::mem::take(&mut self.x2);
        half(psi, &x2);
        self.kinetic(psi, |k2| C64::from_polar(1.0, -0.5 * k2 * dt));
        half(psi, &x2);
        self.x2 = x2;
    }
}

fn width(psi: &[C64], x2: &[f64], dx: f64) -> f64 {
    psi.iter().zip(x2).map(|(c, x2)| x2 * c.norm_sqr()).sum::<f64>() * dx
}

/// Drop modes outside the band limit and normalize.
fn project(stepper: &mut SplitStep, psi: &mut [C64]) {
    stepper.kinetic(psi, |_| C64::new(1.0, 0.0));
    let dx = stepper.dx;
    let norm = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).sqrt();
    psi.iter_mut().for_each(|c| *c /= norm);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImaginaryTimeOptions {
    /// imaginary-time steps, coarse to fine; each stage runs to convergence
    pub schedule: Vec<f64>,
    /// relative energy change per unit imaginary time
    pub tolerance: f64,
    /// relative ⟨x²⟩ change per unit imaginary time; the energy is quadratic
    /// in the remaining error and settles long before the state does
    pub width_tolerance: f64,
    pub check_interval: f64,
    pub max_time_per_stage: f64,
}

impl Default for ImaginaryTimeOptions {
    fn default() -> Self {
        Self {
            schedule: vec![1e-2, 1e-3, 1e-4],
            tolerance: 1e-12,
            width_tolerance: 1e-10,
            check_interval: 0.5,
            max_time_per_stage: 400.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpGroundState {
    pub field: GpField,
    pub energy: f64,
    /// energy at each convergence check, in order
    pub energy_history: Vec<f64>,
    /// index into `energy_history` where each stage of the schedule ends
    pub stage_ends: Vec<usize>,
    pub omega: f64,
}

/// Stationary state by imaginary-time propagation from a Gaussian or
/// Thomas–Fermi guess.
pub fn gp_ground_state(lambda: f64, omega: f64, grid: &GpGrid, opts: &ImaginaryTimeOptions) -> Result<GpGroundState> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be positive"));
    }
    if opts.schedule.is_empty() {
        return Err(invalid("schedule", "needs at least one imaginary-time step"));
    }
    let dx = grid.dx();
    let (_, r_tf) = thomas_fermi(lambda, omega);
    let mut stepper = SplitStep::new(grid);
    // a Gaussian somewhat wider than both limits; never an exact fixed point
    let width2 = 1.2 * (0.5 / omega).max(r_tf * r_tf / 5.0);
    let mut psi: Vec<C64> = (0..grid.n).map(|k| C64::new((-grid.x(k).powi(2) / (4.0 * width2)).exp(), 0.0)).collect();
    project(&mut stepper, &mut psi);
    let norm = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).sqrt();
    psi.iter_mut().for_each(|c| *c /= norm);
    debug!("gp ground state: lambda={lambda}, R_TF={r_tf:.3}, half_width={}", grid.half_width);

    let mut history = vec![stepper.energy(&psi, omega, lambda, dx)];
    let mut last_rate = f64::INFINITY;
    let mut stage_ends = Vec::with_capacity(opts.schedule.len());
    for &dtau in &opts.schedule {
        let steps_per_check = (opts.check_interval / dtau).round().max(1.0) as usize;
        let interval = steps_per_check as f64 * dtau;
        let max_checks = (opts.max_time_per_stage / interval).ceil() as usize;
        let mut e_prev = *history.last().unwrap();
        let mut w_prev = width(&psi, &stepper.x2, dx);
        let mut converged = false;
        for _ in 0..max_checks {
            for _ in 0..steps_per_check {
                stepper.imaginary_step(&mut psi, omega, lambda, dtau, dx);
            }
            let e = stepper.energy(&psi, omega, lambda, dx);
            history.push(e);
            let w = width(&psi, &stepper.x2, dx);
            last_rate = (e - e_prev).abs() / e.abs().max(1e-300) / interval;
            let width_rate = (w - w_prev).abs() / w / interval;
            e_prev = e;
            w_prev = w;
            if last_rate < opts.tolerance && width_rate < opts.width_tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                solver: "imaginary-time GP",
                iterations: max_checks * steps_per_check,
                residual: last_rate,
            });
        }
        stage_ends.push(history.len() - 1);
    }
    let field = GpField { grid: grid.clone(), psi, lambda };
    field.check_boundary()?;
    let energy = *history.last().unwrap();
    Ok(GpGroundState { field, energy, energy_history: history, stage_ends, omega })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// largest Strang step, in post-quench trap periods
    pub max_step_periods: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { max_step_periods: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct GpEvolution {
    pub series: TimeSeries,
    pub field: GpField,
    pub max_norm_drift: f64,
    /// max relative deviation of the post-quench GP energy from its initial value
    pub max_energy_drift: f64,
    pub step: f64,
}

/// Real-time evolution in the trap `omega_post`; ⟨x̂²⟩ at every sample of `count` spaced `dt`.
///
/// A negative `dt` runs backwards in time.
pub fn gp_evolve(field: &GpField, omega_post: f64, dt: f64, count: usize, opts: &EvolveOptions) -> Result<GpEvolution> {
    if !(omega_post > 0.0) {
        return Err(invalid("omega_post", "must be positive"));
    }
    if dt == 0.0 || !dt.is_finite() {
        return Err(invalid("dt", "must be non-zero"));
    }
    let period = 2.0 * PI / omega_post;
    let max_step = opts.max_step_periods * period;
    let stable = 1.6 * PI / field.grid.k_max().powi(2) * (1.0 + 1e-12);
    let substeps = (dt.abs() / max_step.min(stable)).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let dx = field.grid.dx();
    let lambda = field.lambda;
    let mut stepper = SplitStep::new(&field.grid);
    let mut psi = field.psi.clone();
    let n0 = field.norm();
    let e0 = stepper.energy(&psi, omega_post, lambda, dx);
    let mut samples = Vec::with_capacity(count);
    let mut max_norm_drift: f64 = 0.0;
    let mut max_energy_drift: f64 = 0.0;
    let mut current = GpField { grid: field.grid.clone(), psi: Vec::new(), lambda };
    for k in 0..count {
        if k > 0 {
            for _ in 0..substeps {
                stepper.real_step(&mut psi, omega_post, lambda, h);
            }
        }
        current.psi = std::mem::take(&mut psi);
        samples.push(current.x2());
        max_norm_drift = max_norm_drift.max((current.norm() - n0).abs());
        if k % 32 == 0 || k + 1 == count {
            current.check_boundary()?;
            let e = stepper.energy(&current.psi, omega_post, lambda, dx);
            max_energy_drift = max_energy_drift.max((e - e0).abs() / e0.abs());
        }
        psi = std::mem::take(&mut current.psi);
    }
    current.psi = psi;
    let mut series = TimeSeries::new(0.0, dt.abs(), samples)?;
    series.provenance = vec![
        ("engine".into(), "gp".into()),
        ("lambda".into(), lambda.to_string()),
        ("omega_post".into(), omega_post.to_string()),
        ("grid_nodes".into(), field.grid.n.to_string()),
        ("grid_half_width".into(), field.grid.half_width.to_string()),
        ("band_limit".into(), field.grid.k_max().to_string()),
        ("strang_step".into(), h.abs().to_string()),
    ];
    Ok(GpEvolution { series, field: current, max_norm_drift, max_energy_drift, step: h })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSettings {
    pub periods: f64,
    pub samples_per_period: usize,
    /// grid override; defaults to [`GpGrid::for_lambda`]
    pub grid: Option<GpGrid>,
    pub imaginary: ImaginaryTimeOptions,
    pub evolve: EvolveOptions,
}

impl Default for MeanFieldSettings {
    fn default() -> Self {
        Self {
            periods: 200.0,
            samples_per_period: 32,
            grid: None,
            imaginary: ImaginaryTimeOptions::default(),
            evolve: EvolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeanFieldResult {
    pub lambda: f64,
    /// ω/Ω_post
    pub frequency: f64,
    /// max(fit error, Δω), units of Ω_post
    pub sigma: f64,
    pub series: TimeSeries,
    pub method: &'static str,
}

/// Breathing frequency of the mean-field quench in units of Ω_post.
pub fn mf_breathing_frequency(quench: &QuenchSpec, settings: &MeanFieldSettings) -> Result<MeanFieldResult> {
    quench.validate()?;
    let lambda = quench.gp_parameter();
    let period = quench.post_period();
    let dt = period / settings.samples_per_period as f64;
    let h = dt / (dt / (settings.evolve.max_step_periods * period)).ceil();
    let grid = settings
        .grid
        .clone()
        .unwrap_or_else(|| GpGrid::for_lambda(lambda, quench.omega_pre.min(quench.omega_post)).with_step(h));
    let ground = gp_ground_state(lambda, quench.omega_pre, &grid, &settings.imaginary)?;
    let count = (settings.periods * settings.samples_per_period as f64).round() as usize;
    let evo = gp_evolve(&ground.field, quench.omega_post, dt, count, &settings.evolve)?;
    let resolution = evo.series.resolution() / quench.omega_post;
    let (frequency, sigma, method) = match fit_sine(&evo.series) {
        Ok(fit) => (fit.frequency / quench.omega_post, (fit.sigma / quench.omega_post).max(resolution), "sine"),
        Err(Error::SineFitRejected { residual, .. }) => {
            warn!(
                "sine fit rejected for lambda = {lambda} (residual {residual:.3e}); using the strongest spectral peak"
            );
            let peaks = extract_peaks(&evo.series, &PeakOptions::default())?;
            let p = peaks.peaks.first().ok_or(Error::SineFitRejected { residual, threshold: 0.0 })?;
            (p.center / quench.omega_post, p.sigma / quench.omega_post, "lorentzian")
        }
        Err(e) => return Err(e),
    };
    let mut series = evo.series;
    series.provenance.extend([
        ("g".into(), quench.g.to_string()),
        ("n_particles".into(), quench.n_particles.to_string()),
        ("omega_pre".into(), quench.omega_pre.to_string()),
    ]);
    Ok(MeanFieldResult { lambda, frequency, sigma, series, method })
}
