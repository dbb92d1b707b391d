//! wasm-bindgen bindings for the analytic two-body tools.
//!
//! Frequencies are returned in units of the post-quench trap frequency.

use breathing::busch::{band_spectrum, breathing_signal_analytic, relative_breathing_frequency, LineKind};
use breathing::spectral::{extract_peaks, power_spectrum, BreathingLines, PeakOptions};
use breathing::QuenchSpec;
use wasm_bindgen::prelude::*;

fn quench(g: f64, omega_pre: f64, omega_post: f64) -> Result<QuenchSpec, JsError> {
    QuenchSpec::new(omega_pre, omega_post, g, 2).map_err(|e| JsError::new(&e.to_string()))
}

/// Relative breathing frequency 2 − Δ₂,₀(g) for each coupling in `g`.
#[wasm_bindgen]
pub fn relative_curve(g: &[f64], omega_pre: f64, omega_post: f64) -> Result<Vec<f64>, JsError> {
    g.iter()
        .map(|&g| {
            relative_breathing_frequency(&quench(g, omega_pre, omega_post)?).map_err(|e| JsError::new(&e.to_string()))
        })
        .collect()
}

/// Band lines flattened as (frequency, is_cm, upper, lower) quadruples.
#[wasm_bindgen]
pub fn band_lines(g: f64, omega_pre: f64, omega_post: f64, max_quanta: usize) -> Result<Vec<f64>, JsError> {
    let b = band_spectrum(&quench(g, omega_pre, omega_post)?, max_quanta).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(b.entries
        .iter()
        .flat_map(|l| {
            let cm = if l.kind == LineKind::CenterOfMass { 1.0 } else { 0.0 };
            [l.frequency, cm, l.upper as f64, l.lower as f64]
        })
        .collect())
}

/// ⟨X̂²⟩(t) with its spectrum and fitted peaks.
#[wasm_bindgen]
pub struct SignalAnalysis {
    t: Vec<f64>,
    x2: Vec<f64>,
    omega: Vec<f64>,
    magnitude: Vec<f64>,
    peaks: Vec<f64>,
    cm: Option<f64>,
    relative: Option<f64>,
}

#[wasm_bindgen]
impl SignalAnalysis {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn x2(&self) -> Vec<f64> {
        self.x2.clone()
    }
    /// frequency axis in units of Ω_post
    #[wasm_bindgen(getter)]
    pub fn omega(&self) -> Vec<f64> {
        self.omega.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn magnitude(&self) -> Vec<f64> {
        self.magnitude.clone()
    }
    /// (centre, amplitude, sigma) triples, strongest first
    #[wasm_bindgen(getter)]
    pub fn peaks(&self) -> Vec<f64> {
        self.peaks.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn cm(&self) -> Option<f64> {
        self.cm
    }
    #[wasm_bindgen(getter)]
    pub fn relative(&self) -> Option<f64> {
        self.relative
    }
}

#[wasm_bindgen]
pub fn analyze_signal(
    g: f64,
    omega_pre: f64,
    omega_post: f64,
    periods: f64,
    max_quanta: usize,
) -> Result<SignalAnalysis, JsError> {
    let err = |e: breathing::Error| JsError::new(&e.to_string());
    let q = quench(g, omega_pre, omega_post)?;
    let per_period = 32;
    let dt = q.post_period() / per_period as f64;
    let count = (periods.max(4.0) * per_period as f64).round() as usize;
    let signal = breathing_signal_analytic(&q, max_quanta, 0.0, dt, count).map_err(err)?;
    let opts = PeakOptions::default();
    let spectrum = power_spectrum(&signal.series, &opts.spectrum);
    let peaks = extract_peaks(&signal.series, &opts).map_err(err)?;
    let lines = BreathingLines::identify(&peaks, omega_post);
    Ok(SignalAnalysis {
        t: signal.series.times().collect(),
        x2: signal.series.samples.clone(),
        omega: spectrum.omega.iter().map(|w| w / omega_post).collect(),
        magnitude: spectrum.magnitude.clone(),
        peaks: peaks.peaks.iter().flat_map(|p| [p.center / omega_post, p.amplitude, p.sigma / omega_post]).collect(),
        cm: lines.cm_frequency(),
        relative: lines.relative_frequency(),
    })
}
