//! Analytic two-body solution.
//!
//! Two bosons in a harmonic trap separate into a centre-of-mass oscillator in
//! `R = (x₁ + x₂)/√2` and a relative oscillator in `r = (x₁ − x₂)/√2` carrying
//! the contact term. In these coordinates `δ(x₁ − x₂) = δ(r)/√2`, so the
//! relative problem sees the coupling `g/√2`.
//!
//! For a unit-frequency relative oscillator with coupling `γ` the even levels
//! are the roots of
//!
//! ```text
//! γ = −2 Γ(¾ − E/2) / Γ(¼ − E/2)
//! ```
//!
//! one in each interval (2n + ½, 2n + 3/2). Other trap frequencies Ω map onto
//! this with `γ = g_rel / √Ω` and energies scaled by Ω.

use std::f64::consts::{PI, SQRT_2};

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::special::{digamma, gamma, rgamma};
use crate::spectral::TimeSeries;
use crate::trap_model::{x2_matrix_element, QuenchSpec};
use crate::tridiag;

const BRACKET_MARGIN: f64 = 1e-12;

/// Coupling felt by the relative coordinate for lab coupling `g_lab`.
pub fn relative_coupling(g_lab: f64) -> f64 {
    g_lab / SQRT_2
}

fn relation(energy: f64, coupling: f64) -> f64 {
    coupling + 2.0 * gamma(0.75 - 0.5 * energy) * rgamma(0.25 - 0.5 * energy)
}

fn relation_derivative(energy: f64) -> f64 {
    let a = 0.75 - 0.5 * energy;
    let b = 0.25 - 0.5 * energy;
    let ratio = gamma(a) * rgamma(b);
    -ratio * (digamma(a) - digamma(b))
}

/// φ₂ₙ(0)² for the unit oscillator.
fn even_orbital_at_origin_sq(n: usize) -> f64 {
    // (2n)! / (4ⁿ (n!)²) / √π, built as a running product
    let mut c = 1.0;
    for k in 1..=n {
        c *= (2 * k - 1) as f64 / (2 * k) as f64;
    }
    c / PI.sqrt()
}

/// Energy of the `n`-th even level of the unit-frequency relative oscillator
/// with contact coupling `coupling`.
pub fn even_level_energy(coupling: f64, n: usize) -> Result<f64> {
    if !(coupling >= 0.0) || !coupling.is_finite() {
        return Err(invalid("coupling", format!("must be finite and >= 0, got {coupling}")));
    }
    let base = 2.0 * n as f64 + 0.5;
    if coupling == 0.0 {
        return Ok(base);
    }
    if coupling < 1e-9 {
        return Ok(base + coupling * even_orbital_at_origin_sq(n));
    }
    let mut lo = base + BRACKET_MARGIN;
    let mut hi = base + 1.0 - BRACKET_MARGIN;
    let (flo, fhi) = (relation(lo, coupling), relation(hi, coupling));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::RootNotBracketed { level: n, coupling });
    }
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if relation(mid, coupling) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut e = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = relation_derivative(e);
        if !d.is_finite() || d == 0.0 {
            break;
        }
        let next = e - relation(e, coupling) / d;
        if !(next > base && next < base + 1.0) || (next - e).abs() > hi - lo + 1e-12 {
            break;
        }
        e = next;
    }
    Ok(e)
}

/// Even relative-motion levels at lab coupling `g_lab` in a trap of frequency `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelSpectrum {
    pub g_lab: f64,
    pub omega: f64,
    /// E^rel_{2j}, ascending
    pub levels: Vec<f64>,
    /// ε_{2j} = E^rel_{2j}(g) − E^rel_{2j}(0)
    pub shifts: Vec<f64>,
}

impl RelSpectrum {
    pub fn compute(g_lab: f64, omega: f64, n_levels: usize) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(invalid("omega", "must be positive"));
        }
        let coupling = relative_coupling(g_lab) / omega.sqrt();
        let mut levels = Vec::with_capacity(n_levels);
        let mut shifts = Vec::with_capacity(n_levels);
        for n in 0..n_levels {
            let e = even_level_energy(coupling, n)?;
            levels.push(omega * e);
            shifts.push(omega * (e - (2.0 * n as f64 + 0.5)));
        }
        Ok(Self { g_lab, omega, levels, shifts })
    }
}

/// Δ_{2i,2j}(g) = (ε_{2j} − ε_{2i})/Ω in the post-quench trap.
pub fn delta_shift(i: usize, j: usize, quench: &QuenchSpec) -> Result<f64> {
    if i <= j {
        return Err(invalid("i", format!("need i > j, got i = {i}, j = {j}")));
    }
    let coupling = relative_coupling(quench.g) / quench.omega_post.sqrt();
    let eps = |n: usize| -> Result<f64> { Ok(even_level_energy(coupling, n)? - (2.0 * n as f64 + 0.5)) };
    Ok(eps(j)? - eps(i)?)
}

/// Frequency of the dominant relative-motion line, Ω[2 − Δ₂,₀], in units of Ω.
pub fn relative_breathing_frequency(quench: &QuenchSpec) -> Result<f64> {
    Ok(2.0 - delta_shift(1, 0, quench)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    CenterOfMass,
    Relative,
}

impl LineKind {
    pub fn label(self) -> &'static str {
        match self {
            LineKind::CenterOfMass => "cm",
            LineKind::Relative => "relative",
        }
    }
}

/// One line of the breathing spectrum.
///
/// `upper`/`lower` are oscillator quantum numbers (2i, 2j) of the coupled
/// states: relative-motion states for relative lines, CM states for the CM line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLine {
    /// In units of Ω_post.
    pub frequency: f64,
    pub kind: LineKind,
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSpectrum {
    pub entries: Vec<BandLine>,
}

impl BandSpectrum {
    pub fn cm_line(&self) -> Option<&BandLine> {
        self.entries.iter().find(|l| l.kind == LineKind::CenterOfMass)
    }

    /// Lines whose quantum numbers differ by `2·band` (band 1 lies near 2Ω).
    pub fn band(&self, band: usize) -> impl Iterator<Item = &BandLine> {
        self.entries.iter().filter(move |l| l.upper - l.lower == 2 * band)
    }
}

/// Full breathing spectrum from states with up to `max_quanta` quanta.
pub fn band_spectrum(quench: &QuenchSpec, max_quanta: usize) -> Result<BandSpectrum> {
    if max_quanta < 2 || !max_quanta.is_multiple_of(2) {
        return Err(invalid("max_quanta", format!("must be even and >= 2, got {max_quanta}")));
    }
    quench.validate()?;
    let n_levels = max_quanta / 2 + 1;
    let coupling = relative_coupling(quench.g) / quench.omega_post.sqrt();
    let shifts: Vec<f64> =
        (0..n_levels).map(|n| Ok(even_level_energy(coupling, n)? - (2.0 * n as f64 + 0.5))).collect::<Result<_>>()?;
    let mut entries = vec![BandLine { frequency: 2.0, kind: LineKind::CenterOfMass, upper: 2, lower: 0 }];
    for i in 1..n_levels {
        for j in 0..i {
            let delta = shifts[j] - shifts[i];
            entries.push(BandLine {
                frequency: (2 * (i - j)) as f64 - delta,
                kind: LineKind::Relative,
                upper: 2 * i,
                lower: 2 * j,
            });
        }
    }
    entries.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(BandSpectrum { entries })
}

/// Grid for the even-parity relative problem: nodes at r = k·h, k = 0..=n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub spacing: f64,
    pub half_extent: f64,
    /// energy mismatch against the analytic roots above which a warning is logged
    pub tolerance: f64,
}

impl GridParams {
    /// Grid wide enough for states up to `max_quanta` in the softer of two traps.
    pub fn for_levels(max_quanta: usize, omega_min: f64) -> Self {
        let length = 1.0 / omega_min.sqrt();
        let turning = ((2 * max_quanta + 3) as f64).sqrt();
        Self { spacing: 0.005 * length, half_extent: (turning + 7.0) * length, tolerance: 1e-3 }
    }
}

/// Even-parity eigenpairs of the discretized relative Hamiltonian.
#[derive(Debug, Clone)]
pub struct RelEigenGrid {
    pub spacing: f64,
    pub omega: f64,
    pub coupling: f64,
    /// r ≥ 0 nodes
    pub nodes: Vec<f64>,
    /// φ₂ᵢ(r_k) on the r ≥ 0 nodes; even extension to r < 0
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    /// lowest odd-parity energies (for parity checks)
    pub odd_energies: Vec<f64>,
    /// max |grid − analytic| over the even levels
    pub max_energy_error: f64,
}

impl RelEigenGrid {
    /// ∫ f g dr over the full line for two even functions sampled on the half grid.
    fn even_integral(&self, f: &[f64], g: &[f64]) -> f64 {
        let body: f64 = f.iter().zip(g).skip(1).map(|(a, b)| a * b).sum();
        self.spacing * (f[0] * g[0] + 2.0 * body)
    }

    pub fn overlap(&self, i: usize, other: &RelEigenGrid, j: usize) -> f64 {
        debug_assert_eq!(self.nodes.len(), other.nodes.len());
        self.even_integral(&self.states[i], &other.states[j])
    }

    /// ⟨φ₂ᵢ|r̂²|φ₂ⱼ⟩
    pub fn r2_element(&self, i: usize, j: usize) -> f64 {
        let weighted: Vec<f64> = self.states[j].iter().zip(&self.nodes).map(|(p, r)| p * r * r).collect();
        self.even_integral(&self.states[i], &weighted)
    }
}

/// Fourth-order finite differences; the contact term is a single diagonal bump
/// `coupling/h` at r = 0.
pub fn rel_eigensolve_grid(g_rel: f64, omega: f64, params: &GridParams, n_levels: usize) -> Result<RelEigenGrid> {
    let h = params.spacing;
    if !(h > 0.0) {
        return Err(invalid("spacing", "must be positive"));
    }
    if !(g_rel >= 0.0) {
        return Err(invalid("g_rel", "must be >= 0"));
    }
    if params.half_extent * omega.sqrt() < 4.0 {
        return Err(invalid(
            "half_extent",
            format!("grid must span at least 8 oscillator lengths, got {:.2}", 2.0 * params.half_extent * omega.sqrt()),
        ));
    }
    let n = (params.half_extent / h).round() as usize + 1;
    if n_levels == 0 || n < 4 * n_levels + 8 {
        return Err(invalid("n_levels", "grid too small for the requested levels"));
    }
    let nodes: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    let inv_h2 = 1.0 / (h * h);
    // T = −½ D2 with D2 = (−1/12, 4/3, −5/2, 4/3, −1/12)/h²
    let t0 = 1.25 * inv_h2;
    let t1 = -(2.0 / 3.0) * inv_h2;
    let t2 = (1.0 / 24.0) * inv_h2;
    let potential = |r: f64| 0.5 * omega * omega * r * r;

    // even sector: u₀ = e₀, u_k = (e_k + e_{−k})/√2
    let mut d0: Vec<f64> = nodes.iter().map(|&r| t0 + potential(r)).collect();
    d0[0] += g_rel / h;
    d0[1] += t2; // T_{1,−1}
    let mut d1 = vec![t1; n - 1];
    d1[0] *= SQRT_2;
    let mut d2 = vec![t2; n - 2];
    d2[0] *= SQRT_2;

    // second-order three-point operator seeds the fourth-order refinement
    let coarse = |diag: &[f64], first_off_scaled: bool, contact: f64| {
        let mut c0: Vec<f64> = diag.iter().map(|&r| inv_h2 + potential(r)).collect();
        c0[0] += contact;
        let mut c1 = vec![-0.5 * inv_h2; c0.len() - 1];
        if first_off_scaled {
            c1[0] *= SQRT_2;
        }
        (c0, c1)
    };
    let (c0, c1) = coarse(&nodes, true, g_rel / h);
    let (guess, starts) = tridiag::lowest_eigenpairs(&c0, &c1, n_levels);
    let (energies, vectors) = tridiag::refine_pentadiagonal(&d0, &d1, &d2, &guess, &starts);

    // odd sector: u_k = (e_k − e_{−k})/√2 for k ≥ 1
    let odd_n = n - 1;
    let mut od0: Vec<f64> = nodes[1..].iter().map(|&r| t0 + potential(r)).collect();
    od0[0] -= t2;
    let od1 = vec![t1; odd_n - 1];
    let od2 = vec![t2; odd_n - 2];
    let n_odd = n_levels.min(4);
    let (oc0, oc1) = coarse(&nodes[1..], false, 0.0);
    let (oguess, ostarts) = tridiag::lowest_eigenpairs(&oc0, &oc1, n_odd);
    let (odd_energies, _) = tridiag::refine_pentadiagonal(&od0, &od1, &od2, &oguess, &ostarts);

    let states: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|v| v.iter().enumerate().map(|(k, c)| if k == 0 { c / h.sqrt() } else { c / (2.0 * h).sqrt() }).collect())
        .collect();

    let unit_coupling = g_rel / omega.sqrt();
    let mut max_err: f64 = 0.0;
    for (k, e) in energies.iter().enumerate() {
        let exact = omega * even_level_energy(unit_coupling, k)?;
        max_err = max_err.max((e - exact).abs());
    }
    if max_err > params.tolerance {
        warn!(
            "relative grid (h = {h}) deviates from the analytic levels by {max_err:.3e} \
             (tolerance {:.1e}); refine the grid",
            params.tolerance
        );
    }
    Ok(RelEigenGrid {
        spacing: h,
        omega,
        coupling: g_rel,
        nodes,
        states,
        energies,
        odd_energies,
        max_energy_error: max_err,
    })
}

/// ⟨Φ₂ᵢ^{Ω}|Φ₀^{Ω₀}⟩ for i = 0..n: the pre-quench Gaussian expanded in
/// post-quench oscillator states.
pub fn squeeze_overlaps(omega_pre: f64, omega_post: f64, n: usize) -> Vec<f64> {
    let lambda = (omega_pre - omega_post) / (omega_pre + omega_post);
    let mut out = Vec::with_capacity(n);
    let mut c = (2.0 * (omega_pre * omega_post).sqrt() / (omega_pre + omega_post)).sqrt();
    for k in 0..n {
        if k > 0 {
            let kk = k as f64;
            c *= -lambda * ((2.0 * kk - 1.0) / (2.0 * kk)).sqrt();
        }
        out.push(c);
    }
    out
}

/// One cosine component of the analytic signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalLine {
    /// angular frequency in pre-quench units
    pub omega: f64,
    pub amplitude: f64,
    pub kind: LineKind,
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone)]
pub struct AnalyticSignal {
    pub series: TimeSeries,
    pub constant: f64,
    pub lines: Vec<SignalLine>,
    /// 1 − captured weight of the truncated expansion (max over CM and relative parts)
    pub discarded_weight: f64,
}

impl AnalyticSignal {
    pub fn evaluate(&self, t: f64) -> f64 {
        self.constant + self.lines.iter().map(|l| l.amplitude * (l.omega * t).cos()).sum::<f64>()
    }
}

/// ⟨X̂²⟩(t) for two particles from the separated CM and relative expansions.
pub fn breathing_signal_analytic(
    quench: &QuenchSpec,
    max_quanta: usize,
    t0: f64,
    dt: f64,
    count: usize,
) -> Result<AnalyticSignal> {
    breathing_signal_analytic_with_grid(quench, max_quanta, t0, dt, count, None)
}

pub fn breathing_signal_analytic_with_grid(
    quench: &QuenchSpec,
    max_quanta: usize,
    t0: f64,
    dt: f64,
    count: usize,
    grid: Option<GridParams>,
) -> Result<AnalyticSignal> {
    quench.validate()?;
    if quench.n_particles != 2 {
        return Err(invalid("n_particles", "the analytic signal covers exactly two particles"));
    }
    if max_quanta < 2 || !max_quanta.is_multiple_of(2) {
        return Err(invalid("max_quanta", format!("must be even and >= 2, got {max_quanta}")));
    }
    let n_levels = max_quanta / 2 + 1;
    let (w0, w) = (quench.omega_pre, quench.omega_post);
    let params = grid.unwrap_or_else(|| GridParams::for_levels(max_quanta, w0.min(w)));
    let g_rel = relative_coupling(quench.g);

    // centre of mass: free oscillator, analytic overlaps
    let cm = squeeze_overlaps(w0, w, n_levels);
    let cm_weight: f64 = cm.iter().map(|a| a * a).sum();

    // relative motion: overlaps and r² elements from the grid, energies from the roots
    let pre = rel_eigensolve_grid(g_rel, w0, &params, 1)?;
    let post = rel_eigensolve_grid(g_rel, w, &params, n_levels)?;
    let rel: Vec<f64> = (0..n_levels).map(|i| post.overlap(i, &pre, 0)).collect();
    let rel_weight: f64 = rel.iter().map(|a| a * a).sum();
    let spectrum = RelSpectrum::compute(quench.g, w, n_levels)?;

    let discarded = (1.0 - cm_weight).max(1.0 - rel_weight).max(0.0);
    if discarded > 1e-4 {
        warn!("analytic expansion discards weight {discarded:.2e}; increase max_quanta beyond {max_quanta}");
    }

    let mut constant = 0.0;
    let mut lines = Vec::new();
    for (i, ai) in cm.iter().enumerate() {
        constant += ai * ai * x2_matrix_element(2 * i, 2 * i, w);
        if i + 1 < n_levels {
            let f = x2_matrix_element(2 * i, 2 * i + 2, w);
            lines.push(SignalLine {
                omega: 2.0 * w,
                amplitude: 2.0 * f * ai * cm[i + 1],
                kind: LineKind::CenterOfMass,
                upper: 2 * i + 2,
                lower: 2 * i,
            });
        }
    }
    for i in 0..n_levels {
        constant += rel[i] * rel[i] * post.r2_element(i, i);
        for j in 0..i {
            lines.push(SignalLine {
                omega: spectrum.levels[i] - spectrum.levels[j],
                amplitude: 2.0 * post.r2_element(i, j) * rel[i] * rel[j],
                kind: LineKind::Relative,
                upper: 2 * i,
                lower: 2 * j,
            });
        }
    }

    let eval = |t: f64| constant + lines.iter().map(|l| l.amplitude * (l.omega * t).cos()).sum::<f64>();
    let samples: Vec<f64> = (0..count).map(|k| eval(t0 + k as f64 * dt)).collect();
    let mut series = TimeSeries::new(t0, dt, samples)?;
    series.provenance = vec![
        ("engine".into(), "analytic".into()),
        ("g".into(), quench.g.to_string()),
        ("omega_pre".into(), w0.to_string()),
        ("omega_post".into(), w.to_string()),
        ("n_particles".into(), "2".into()),
        ("max_quanta".into(), max_quanta.to_string()),
    ];
    Ok(AnalyticSignal { series, constant, lines, discarded_weight: discarded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // roots of the relation evaluated with 40-digit arithmetic
    const ROOTS: [(f64, [f64; 3]); 4] = [
        (0.1, [0.554_267_662_477_753_6, 2.528_039_763_164_719, 4.521_100_523_960_119]),
        (1.0, [0.892_744_045_308_952_6, 2.754_641_533_279_367, 4.700_195_825_975_531]),
        (4.0, [1.253_190_235_291_082_6, 3.141_894_423_712_178, 5.071_195_909_233_609]),
        (1000.0, [1.498_872_012_634_662_7, 3.498_307_836_788_077, 5.497_884_700_499_922]),
    ];

    #[test]
    fn roots_match_extended_precision() {
        for (g, levels) in ROOTS {
            for (n, e) in levels.iter().enumerate() {
                assert_abs_diff_eq!(even_level_energy(g, n).unwrap(), *e, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn unperturbed_and_weak_coupling() {
        assert_eq!(even_level_energy(0.0, 0).unwrap(), 0.5);
        assert_eq!(even_level_energy(0.0, 3).unwrap(), 6.5);
        // first-order shift g|φ₀(0)|² = g/√π
        let e = even_level_energy(0.1, 0).unwrap();
        assert_abs_diff_eq!(e, 0.5 + 0.1 / PI.sqrt(), epsilon = 0.003);
        assert_abs_diff_eq!(e, 0.5564, epsilon = 0.003);
        let tiny = 1e-6;
        let e = even_level_energy(tiny, 1).unwrap();
        assert_abs_diff_eq!(e - 2.5, tiny * 0.5 / PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn strong_coupling_limit() {
        // large-γ expansion E₀ ≈ 3/2 − 2/(√π γ)
        let g = 1e3;
        let e = even_level_energy(g, 0).unwrap();
        assert!((e - 1.5).abs() < 2e-3);
        assert_abs_diff_eq!(e, 1.5 - 2.0 / (PI.sqrt() * g), epsilon = 2e-6);
    }

    #[test]
    fn negative_coupling_rejected() {
        assert!(even_level_energy(-0.1, 0).is_err());
    }

    #[test]
    fn levels_monotone_and_interlaced() {
        let mut prev = [0.0; 6];
        for k in 0..200 {
            let g = 0.05 * k as f64;
            for n in 0..6 {
                let e = even_level_energy(g, n).unwrap();
                let base = 2.0 * n as f64 + 0.5;
                if g > 0.0 {
                    assert!(e > base && e < base + 1.0, "level {n} at g {g}: {e}");
                    assert!(e > prev[n], "not increasing at g {g}, level {n}");
                }
                prev[n] = e;
            }
        }
    }

    #[test]
    fn rel_spectrum_scales_with_frequency() {
        let s = RelSpectrum::compute(1.0, 0.3f64.sqrt(), 5).unwrap();
        assert!(s.levels.windows(2).all(|w| w[0] < w[1]));
        for (j, eps) in s.shifts.iter().enumerate() {
            assert!(*eps >= 0.0 && *eps <= s.omega);
            assert_abs_diff_eq!(s.levels[j] - eps, (2.0 * j as f64 + 0.5) * s.omega, epsilon = 1e-12);
        }
        let free = RelSpectrum::compute(0.0, 2.0, 3).unwrap();
        assert_eq!(free.levels, vec![1.0, 5.0, 9.0]);
    }

    #[test]
    fn delta_limits() {
        let q0 = QuenchSpec::standard(0.0, 2);
        assert_eq!(delta_shift(1, 0, &q0).unwrap(), 0.0);
        let qinf = QuenchSpec::standard(1e6, 2);
        assert!(delta_shift(1, 0, &qinf).unwrap().abs() < 1e-5);
        let q = QuenchSpec::standard(2.0, 2);
        assert!(delta_shift(1, 0, &q).unwrap() > 0.0);
        assert!(delta_shift(0, 1, &q).is_err());
    }

    #[test]
    fn band_spectrum_free_and_cm() {
        let bands = band_spectrum(&QuenchSpec::standard(0.0, 2), 8).unwrap();
        let mut freqs: Vec<f64> = bands.entries.iter().map(|l| l.frequency).collect();
        freqs.dedup();
        assert_eq!(freqs, vec![2.0, 4.0, 6.0, 8.0]);
        for g in [0.3, 2.0, 40.0] {
            let bands = band_spectrum(&QuenchSpec::standard(g, 2), 10).unwrap();
            let cms: Vec<_> = bands.entries.iter().filter(|l| l.kind == LineKind::CenterOfMass).collect();
            assert_eq!(cms.len(), 1);
            assert_eq!(cms[0].frequency, 2.0);
            assert!(bands.entries.windows(2).all(|w| w[0].frequency <= w[1].frequency));
        }
        assert!(band_spectrum(&QuenchSpec::standard(1.0, 2), 3).is_err());
        assert!(band_spectrum(&QuenchSpec::standard(1.0, 2), 0).is_err());
    }

    #[test]
    fn band_collapses_at_strong_coupling() {
        let bands = band_spectrum(&QuenchSpec::standard(1e7, 2), 8).unwrap();
        for l in &bands.entries {
            assert!((l.frequency - l.frequency.round()).abs() < 1e-4, "{l:?}");
        }
    }

    #[test]
    fn first_sideband_strong_quench() {
        let q = QuenchSpec::new(1.0, 0.3f64.sqrt(), 0.4, 2).unwrap();
        let bands = band_spectrum(&q, 20).unwrap();
        let side = bands.entries.iter().find(|l| l.upper == 4 && l.lower == 2).unwrap();
        assert_abs_diff_eq!(side.frequency, 1.975, epsilon = 0.005);
    }

    #[test]
    fn grid_free_oscillator() {
        let params = GridParams { spacing: 0.01, half_extent: 10.0, tolerance: 1e-6 };
        let grid = rel_eigensolve_grid(0.0, 1.0, &params, 4).unwrap();
        for (j, e) in grid.energies.iter().enumerate() {
            assert_abs_diff_eq!(*e, 2.0 * j as f64 + 0.5, epsilon = 1e-6);
        }
        for i in 0..4 {
            for j in 0..4 {
                let o = grid.overlap(i, &grid, j);
                assert_abs_diff_eq!(o, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-8);
            }
        }
        // ⟨φ₀|r²|φ₂⟩ = √2/2 for the unit oscillator
        assert_abs_diff_eq!(grid.r2_element(0, 1).abs(), 2f64.sqrt() / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn grid_odd_levels_unshifted() {
        let params = GridParams { spacing: 0.01, half_extent: 10.0, tolerance: 1.0 };
        for g in [0.0, 1.0, 25.0] {
            let grid = rel_eigensolve_grid(g, 1.0, &params, 3).unwrap();
            for (j, e) in grid.odd_energies.iter().enumerate() {
                assert_abs_diff_eq!(*e, 2.0 * j as f64 + 1.5, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn grid_matches_root_at_strong_coupling() {
        let params = GridParams { spacing: 0.005, half_extent: 10.0, tolerance: 1e-3 };
        let grid = rel_eigensolve_grid(4.0, 1.0, &params, 2).unwrap();
        let root = even_level_energy(4.0, 0).unwrap();
        assert_abs_diff_eq!(grid.energies[0], root, epsilon = 1e-3);
        assert!(grid.max_energy_error < 1e-3);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(grid.overlap(i, &grid, j), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn grid_rejects_narrow_box() {
        let params = GridParams { spacing: 0.01, half_extent: 3.0, tolerance: 1e-3 };
        assert!(rel_eigensolve_grid(0.0, 1.0, &params, 2).is_err());
    }

    #[test]
    fn squeeze_overlaps_match_quadrature() {
        use crate::trap_model::ho_orbital_eval;
        let (w0, w) = (1.0, 0.3f64.sqrt());
        let amps = squeeze_overlaps(w0, w, 5);
        let h = 0.002;
        for (k, a) in amps.iter().enumerate() {
            let mut s = 0.0;
            let mut x = -15.0;
            while x <= 15.0 {
                s += ho_orbital_eval(2 * k, x, w).unwrap() * ho_orbital_eval(0, x, w0).unwrap();
                x += h;
            }
            assert_abs_diff_eq!(s * h, *a, epsilon = 1e-10);
        }
        let total: f64 = squeeze_overlaps(w0, w, 40).iter().map(|a| a * a).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn free_signal_is_single_cosine() {
        let q = QuenchSpec::standard(0.0, 2);
        let dt = q.post_period() / 32.0;
        let sig = breathing_signal_analytic(&q, 12, 0.0, dt, 640).unwrap();
        for l in &sig.lines {
            if l.amplitude.abs() > 1e-8 {
                assert_abs_diff_eq!(l.omega, 2.0 * q.omega_post, epsilon = 1e-9);
            }
        }
        // x₁² + x₂² for two free particles: ⟨X̂²⟩(t) = (1/Ω₀)[cos² + (Ω₀/Ω)² sin²]
        for (k, s) in sig.series.samples.iter().enumerate() {
            let t = k as f64 * dt;
            let w = q.omega_post;
            let expect = (w * t).cos().powi(2) + (w * t).sin().powi(2) / (w * w);
            assert_abs_diff_eq!(*s, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn signal_time_average_is_constant_term() {
        let q = QuenchSpec::standard(0.0, 2);
        let period = std::f64::consts::PI / q.omega_post; // beat period of the 2Ω line
        let count = 64 * 20;
        let dt = 20.0 * period / count as f64;
        let sig = breathing_signal_analytic(&q, 12, 0.0, dt, count).unwrap();
        let mean = sig.series.samples.iter().sum::<f64>() / count as f64;
        assert_abs_diff_eq!(mean, sig.constant, epsilon = 1e-6);
    }

    #[test]
    fn signal_rejects_other_particle_numbers() {
        let q = QuenchSpec::standard(1.0, 3);
        assert!(breathing_signal_analytic(&q, 10, 0.0, 0.1, 100).is_err());
    }
}
