//! Frequency extraction from sampled ⟨X̂²⟩(t).
//!
//! All frequencies are angular and in the units of the time axis. Callers
//! divide by Ω_post for reporting.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::lm::levenberg_marquardt;

pub const MIN_SAMPLES: usize = 64;

/// Uniformly sampled real signal with a key/value provenance record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    pub provenance: Vec<(String, String)>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if samples.len() < MIN_SAMPLES {
            return Err(Error::SeriesTooShort { count: samples.len(), min: MIN_SAMPLES });
        }
        Ok(Self { t0, dt, samples, provenance: Vec::new() })
    }

    pub fn from_fn(t0: f64, dt: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(t0, dt, (0..count).map(|k| f(t0 + k as f64 * dt)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Δω = 2π/(count·dt)
    pub fn resolution(&self) -> f64 {
        2.0 * PI / (self.len() as f64 * self.dt)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn provenance_value(&self, key: &str) -> Option<&str> {
        self.provenance.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    None,
    Hann,
}

impl Window {
    fn weight(self, k: usize, n: usize) -> f64 {
        match self {
            Window::None => 1.0,
            Window::Hann => {
                if n < 2 {
                    1.0
                } else {
                    0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos()
                }
            }
        }
    }
}

/// One-sided magnitude spectrum |dt·X(ωₖ)| on ωₖ = k·2π/(n_fft·dt).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// bin spacing of the (padded) transform
    pub bin_width: f64,
    /// Δω of the unpadded record
    pub resolution: f64,
    n_fft: usize,
}

impl Spectrum {
    /// Build from already-sampled values on a uniform axis starting at zero.
    pub fn from_parts(omega: Vec<f64>, magnitude: Vec<f64>, resolution: f64) -> Result<Self> {
        if omega.len() != magnitude.len() || omega.len() < 2 {
            return Err(invalid("magnitude", "axis and values must match and hold at least two bins"));
        }
        let bin_width = omega[1] - omega[0];
        let n_fft = 2 * (omega.len() - 1);
        Ok(Self { omega, magnitude, bin_width, resolution, n_fft })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn power(&self, k: usize) -> f64 {
        self.magnitude[k] * self.magnitude[k]
    }

    /// (dω/2π) Σ |X|² over the two-sided transform; equals Σ x² dt of the
    /// transformed (detrended, windowed, padded) samples.
    pub fn energy(&self) -> f64 {
        let last = self.len() - 1;
        let nyquist_present = self.n_fft.is_multiple_of(2);
        let total: f64 = (0..self.len())
            .map(|k| {
                let w = if k == 0 || (k == last && nyquist_present) { 1.0 } else { 2.0 };
                w * self.power(k)
            })
            .sum();
        total * self.bin_width / (2.0 * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub window: Window,
    pub zero_pad_factor: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { window: Window::Hann, zero_pad_factor: 4 }
    }
}

pub fn power_spectrum(series: &TimeSeries, opts: &SpectrumOptions) -> Spectrum {
    let n = series.len();
    let pad = opts.zero_pad_factor.max(1);
    let n_fft = n * pad;
    let mean = series.mean();
    let mut buf: Vec<Complex<f64>> = series
        .samples
        .iter()
        .enumerate()
        .map(|(k, x)| Complex::new((x - mean) * opts.window.weight(k, n), 0.0))
        .collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let bin_width = 2.0 * PI / (n_fft as f64 * series.dt);
    let half = n_fft / 2 + 1;
    Spectrum {
        omega: (0..half).map(|k| k as f64 * bin_width).collect(),
        magnitude: buf[..half].iter().map(|c| c.norm() * series.dt).collect(),
        bin_width,
        resolution: series.resolution(),
        n_fft,
    }
}

/// Indices of local maxima whose topographic prominence exceeds
/// `min_prominence` times the spectrum maximum, strongest first.
pub fn find_peaks(spectrum: &Spectrum, min_prominence: f64) -> Result<Vec<usize>> {
    if !(min_prominence > 0.0 && min_prominence < 1.0) {
        return Err(invalid("min_prominence", format!("must lie in (0, 1), got {min_prominence}")));
    }
    let m = &spectrum.magnitude;
    let top = m.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Ok(Vec::new());
    }
    // ignore numerical dust left by the detrend
    let floor = top * 1e-12;
    let mut peaks: Vec<usize> = Vec::new();
    let mut k = 1;
    while k + 1 < m.len() {
        if m[k] > m[k - 1] && m[k] > floor {
            // walk across a plateau
            let mut r = k;
            while r + 1 < m.len() && m[r + 1] == m[k] {
                r += 1;
            }
            if r + 1 < m.len() && m[r + 1] < m[k] {
                let centre = (k + r) / 2;
                if prominence(m, centre) >= min_prominence * top {
                    peaks.push(centre);
                }
            }
            k = r + 1;
        } else {
            k += 1;
        }
    }
    peaks.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));
    Ok(peaks)
}

fn prominence(m: &[f64], k: usize) -> f64 {
    let h = m[k];
    let left_base = m[..k].iter().rev().take_while(|&&v| v <= h).cloned().fold(h, f64::min);
    let right_base = m[k + 1..].iter().take_while(|&&v| v <= h).cloned().fold(h, f64::min);
    h - left_base.max(right_base)
}

/// Fitted spectral line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub center: f64,
    /// Lorentzian half-width at half maximum of the power line shape
    pub width: f64,
    /// peak magnitude (square root of the fitted power maximum)
    pub amplitude: f64,
    /// rms misfit relative to the fitted height
    pub residual: f64,
    /// max(standard error of the centre, Δω)
    pub sigma: f64,
    pub flagged: bool,
}

pub const LORENTZ_RESIDUAL_LIMIT: f64 = 0.1;

/// Least-squares Lorentzian on the power spectrum around bin `peak`.
pub fn fit_lorentzian(spectrum: &Spectrum, peak: usize, window_bins: usize) -> Result<Peak> {
    if window_bins < 5 {
        return Err(invalid("window_bins", format!("must be at least 5, got {window_bins}")));
    }
    if peak >= spectrum.len() {
        return Err(invalid("peak", "index outside the spectrum"));
    }
    let half = window_bins / 2;
    let lo = peak.saturating_sub(half);
    let hi = (peak + half).min(spectrum.len() - 1);
    let xs: Vec<f64> = spectrum.omega[lo..=hi].to_vec();
    let ys: Vec<f64> = (lo..=hi).map(|k| spectrum.power(k)).collect();
    let height = spectrum.power(peak);
    if !(height > 0.0) {
        return Err(invalid("peak", "bin has zero power"));
    }
    let bw = spectrum.bin_width;
    // fit in bin-scaled coordinates for conditioning
    let x0 = spectrum.omega[peak];
    let u: Vec<f64> = xs.iter().map(|x| (x - x0) / bw).collect();
    let y: Vec<f64> = ys.iter().map(|v| v / height).collect();
    let n = u.len();
    let start = [0.0, 1.0, (half as f64 * 0.5).max(1.0), 0.0];
    let fit = levenberg_marquardt(&start, 200, |p| {
        let (c, a, w, b) = (p[0], p[1], p[2], p[3]);
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 4);
        for i in 0..n {
            let z = (u[i] - c) / w;
            let den = 1.0 + z * z;
            let l = 1.0 / den;
            r[i] = a * l + b - y[i];
            let dl_dz = -2.0 * z / (den * den);
            j[(i, 0)] = a * dl_dz * (-1.0 / w);
            j[(i, 1)] = l;
            j[(i, 2)] = a * dl_dz * (-z / w);
            j[(i, 3)] = 1.0;
        }
        (r, j)
    });
    let (c, a, w, b) = (fit.params[0], fit.params[1], fit.params[2], fit.params[3]);
    let peak_height = (a + b).max(1e-300);
    let residual = (fit.cost / n as f64).sqrt() / peak_height;
    let center = x0 + c * bw;
    let se = fit.std_error(0).map(|s| s * bw).unwrap_or(f64::INFINITY);
    let inside = center.is_finite() && center >= xs[0] && center <= xs[n - 1];
    let flagged = residual > LORENTZ_RESIDUAL_LIMIT || !inside || !(w.abs() > 0.0);
    if flagged {
        warn!(
            "Lorentzian fit near omega = {:.6} flagged (residual {:.3e}, centre inside window: {inside})",
            x0, residual
        );
    }
    Ok(Peak {
        center: if inside { center } else { x0 },
        width: (w.abs() * bw).max(f64::MIN_POSITIVE),
        amplitude: (peak_height * height).sqrt(),
        residual,
        sigma: if se.is_finite() { se.max(spectrum.resolution) } else { spectrum.resolution },
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    /// strongest first
    pub peaks: Vec<Peak>,
    pub resolution: f64,
}

impl PeakSet {
    pub fn by_frequency(&self) -> Vec<Peak> {
        let mut v = self.peaks.clone();
        v.sort_by(|a, b| a.center.total_cmp(&b.center));
        v
    }

    /// Peaks whose centres fall in `[lo, hi]`.
    pub fn in_range(&self, lo: f64, hi: f64) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(move |p| p.center >= lo && p.center <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    pub spectrum: SpectrumOptions,
    pub min_prominence: f64,
    pub window_bins: usize,
    pub max_peaks: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { spectrum: SpectrumOptions::default(), min_prominence: 0.04, window_bins: 7, max_peaks: 16 }
    }
}

/// Full pipeline: spectrum, peak candidates, Lorentzian refinement.
pub fn extract_peaks(series: &TimeSeries, opts: &PeakOptions) -> Result<PeakSet> {
    let spectrum = power_spectrum(series, &opts.spectrum);
    peaks_from_spectrum(&spectrum, opts)
}

pub fn peaks_from_spectrum(spectrum: &Spectrum, opts: &PeakOptions) -> Result<PeakSet> {
    let peaks = find_peaks(spectrum, opts.min_prominence)?
        .into_iter()
        .take(opts.max_peaks)
        .map(|k| fit_lorentzian(spectrum, k, opts.window_bins))
        .collect::<Result<Vec<_>>>()?;
    Ok(PeakSet { peaks, resolution: spectrum.resolution })
}

/// Breathing lines in the band just below 2Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct BreathingLines {
    pub omega_post: f64,
    /// highest-frequency significant peak of the band (flagged fits are ignored)
    pub cm: Option<Peak>,
    /// strongest of the remaining band peaks
    pub relative: Option<Peak>,
    /// all significant band peaks, ascending in frequency
    pub band: Vec<Peak>,
}

impl BreathingLines {
    pub const BAND: (f64, f64) = (1.5, 2.6);
    pub const SIGNIFICANCE: f64 = 0.05;

    pub fn identify(peaks: &PeakSet, omega_post: f64) -> Self {
        let (lo, hi) = Self::BAND;
        let in_band: Vec<Peak> =
            peaks.in_range(lo * omega_post, hi * omega_post).filter(|p| !p.flagged).copied().collect();
        let strongest = in_band.iter().map(|p| p.amplitude).fold(0.0, f64::max);
        let mut band: Vec<Peak> =
            in_band.into_iter().filter(|p| p.amplitude >= Self::SIGNIFICANCE * strongest).collect();
        band.sort_by(|a, b| a.center.total_cmp(&b.center));
        let cm = band.last().copied();
        let relative =
            band[..band.len().saturating_sub(1)].iter().max_by(|a, b| a.amplitude.total_cmp(&b.amplitude)).copied();
        Self { omega_post, cm, relative, band }
    }

    /// CM line centre in units of Ω_post
    pub fn cm_frequency(&self) -> Option<f64> {
        self.cm.map(|p| p.center / self.omega_post)
    }

    /// relative line centre in units of Ω_post
    pub fn relative_frequency(&self) -> Option<f64> {
        self.relative.map(|p| p.center / self.omega_post)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFit {
    pub frequency: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    /// rms misfit relative to the rms of the detrended signal
    pub residual: f64,
    pub sigma: f64,
}

pub const SINE_RESIDUAL_LIMIT: f64 = 0.05;

/// offset + amplitude·cos(ω(t − t₀) + phase), seeded from the strongest spectral bin.
pub fn fit_sine(series: &TimeSeries) -> Result<SineFit> {
    let n = series.len();
    let spectrum = power_spectrum(series, &SpectrumOptions { window: Window::Hann, zero_pad_factor: 8 });
    let seed_bin =
        spectrum.magnitude.iter().enumerate().skip(1).max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(1);
    let mut omega = spectrum.omega[seed_bin];
    if seed_bin + 1 < spectrum.len() {
        // parabolic refinement on log magnitude
        let (a, b, c) = (
            spectrum.magnitude[seed_bin - 1].max(1e-300).ln(),
            spectrum.magnitude[seed_bin].max(1e-300).ln(),
            spectrum.magnitude[seed_bin + 1].max(1e-300).ln(),
        );
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            omega += 0.5 * (a - c) / den * spectrum.bin_width;
        }
    }
    let t: Vec<f64> = (0..n).map(|k| k as f64 * series.dt).collect();
    let y = &series.samples;
    let mean = series.mean();
    let scale = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(scale > 0.0) {
        return Err(Error::SineFitRejected { residual: f64::INFINITY, threshold: SINE_RESIDUAL_LIMIT });
    }
    let (c0, a0, b0) = linear_sinusoid(&t, y, omega);
    let fit = levenberg_marquardt(&[c0, a0, b0, omega], 100, |p| {
        let (c, a, b, w) = (p[0], p[1], p[2], p[3]);
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 4);
        for i in 0..n {
            let (s, co) = (w * t[i]).sin_cos();
            r[i] = (c + a * co + b * s - y[i]) / scale;
            j[(i, 0)] = 1.0 / scale;
            j[(i, 1)] = co / scale;
            j[(i, 2)] = s / scale;
            j[(i, 3)] = t[i] * (b * co - a * s) / scale;
        }
        (r, j)
    });
    let (c, a, b, w) = (fit.params[0], fit.params[1], fit.params[2], fit.params[3]);
    let residual = (fit.cost / n as f64).sqrt();
    if !(residual <= SINE_RESIDUAL_LIMIT) {
        return Err(Error::SineFitRejected { residual, threshold: SINE_RESIDUAL_LIMIT });
    }
    let sigma = fit.std_error(3).unwrap_or(0.0);
    Ok(SineFit { frequency: w, amplitude: a.hypot(b), phase: (-b).atan2(a), offset: c, residual, sigma })
}

fn linear_sinusoid(t: &[f64], y: &[f64], w: f64) -> (f64, f64, f64) {
    let design = DMatrix::from_fn(t.len(), 3, |i, k| match k {
        0 => 1.0,
        1 => (w * t[i]).cos(),
        _ => (w * t[i]).sin(),
    });
    let rhs = DVector::from_column_slice(y);
    let normal = design.transpose() * &design;
    let proj = design.transpose() * rhs;
    match normal.lu().solve(&proj) {
        Some(x) => (x[0], x[1], x[2]),
        None => (0.0, 0.0, 0.0),
    }
}
