//! (g, N) frequency tables and constant-Λ overlays.

use std::collections::BTreeSet;
use std::path::Path;

use log::warn;

use crate::config::EngineKind;
use crate::csvio::{self, num, opt, Provenance};
use crate::error::{DriverError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ContourRow {
    pub g: f64,
    pub n_particles: usize,
    pub engine: EngineKind,
    /// ω/Ω_post
    pub frequency: f64,
    pub sigma: f64,
    pub meta: String,
}

impl ContourRow {
    pub fn lambda(&self) -> f64 {
        self.g * (self.n_particles as f64 - 1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContourTable {
    pub rows: Vec<ContourRow>,
}

impl ContourTable {
    pub const HEADER: [&'static str; 7] = ["g", "n_particles", "lambda", "engine", "frequency", "sigma", "meta"];
    /// frequencies outside this window point at a failed fit
    pub const PLAUSIBLE: (f64, f64) = (1.732_050_807_568_877_2 - 0.05, 2.05);

    /// Insert, replacing any row with the same (g, N, engine).
    pub fn insert(&mut self, row: ContourRow) {
        match self.rows.iter_mut().find(|r| r.g == row.g && r.n_particles == row.n_particles && r.engine == row.engine)
        {
            Some(r) => *r = row,
            None => self.rows.push(row),
        }
    }

    pub fn get(&self, g: f64, n: usize) -> Option<&ContourRow> {
        self.rows.iter().find(|r| r.g == g && r.n_particles == n)
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.n_particles.cmp(&b.n_particles).then(a.g.total_cmp(&b.g)).then(a.engine.label().cmp(b.engine.label()))
        });
    }

    pub fn g_values(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.rows.iter().map(|r| r.g).collect();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n_particles).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Rows with a frequency outside [`Self::PLAUSIBLE`].
    pub fn implausible(&self) -> Vec<&ContourRow> {
        let (lo, hi) = Self::PLAUSIBLE;
        self.rows.iter().filter(|r| !(r.frequency > lo && r.frequency < hi)).collect()
    }

    pub fn is_rectangular(&self) -> bool {
        let g = self.g_values();
        let n = self.n_values();
        g.iter().all(|&g| n.iter().all(|&n| self.get(g, n).is_some()))
    }

    pub fn write(&self, path: &Path, provenance: &[(String, String)]) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.g),
                    r.n_particles.to_string(),
                    num(r.lambda()),
                    r.engine.to_string(),
                    num(r.frequency),
                    num(r.sigma),
                    r.meta.clone(),
                ]
            })
            .collect();
        csvio::write(path, provenance, &Self::HEADER, &rows)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let t = csvio::read(path)?;
        let bad = |what: &str| DriverError::config(path.display().to_string(), format!("bad contour table: {what}"));
        let col = |name: &str| t.column(name).ok_or_else(|| bad(&format!("missing column {name}")));
        let (cg, cn, ce, cf, cs, cm) =
            (col("g")?, col("n_particles")?, col("engine")?, col("frequency")?, col("sigma")?, col("meta")?);
        let mut table = Self::default();
        for r in &t.rows {
            let engine = match r[ce].as_str() {
                "analytic" => EngineKind::Analytic,
                "ed" => EngineKind::Ed,
                "gp" => EngineKind::Gp,
                other => return Err(bad(&format!("unknown engine {other}"))),
            };
            let f = |i: usize| r[i].parse::<f64>().map_err(|_| bad(&format!("not a number: {}", r[i])));
            table.insert(ContourRow {
                g: f(cg)?,
                n_particles: r[cn].parse().map_err(|_| bad("n_particles"))?,
                engine,
                frequency: f(cf)?,
                sigma: f(cs)?,
                meta: r[cm].clone(),
            });
        }
        Ok(table)
    }
}

/// One point of the hyperbola g(N − 1) = Λ_c for an anchor level.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolaPoint {
    pub anchor: f64,
    pub lambda: f64,
    pub n_particles: usize,
    pub g: f64,
    /// table frequency interpolated along the N row at this g
    pub frequency: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Match {
    /// same Λ as a right-edge point
    Exact,
    Interpolated,
    /// Λ outside the right-edge range
    Outside,
}

impl Match {
    pub fn label(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Interpolated => "interpolated",
            Self::Outside => "outside",
        }
    }
}

/// Table point against the right-edge column at equal Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationPoint {
    pub g: f64,
    pub n_particles: usize,
    pub engine: EngineKind,
    pub lambda: f64,
    pub frequency: f64,
    pub reference: Option<f64>,
    pub deviation: Option<f64>,
    pub matched: Match,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overlay {
    pub reference_n: Option<usize>,
    pub hyperbolas: Vec<HyperbolaPoint>,
    pub deviations: Vec<DeviationPoint>,
    pub notes: Vec<String>,
}

/// Constant-Λ lines anchored at the largest N of the table.
///
/// For each anchor frequency c the right-edge column fixes Λ_c where its
/// frequency crosses c; the hyperbola g = Λ_c/(N − 1) is emitted for every N
/// of the table. Independently every table point is compared with the
/// right-edge column at the same Λ; a mean-field table gives zero there.
pub fn gp_hyperbola_overlay(table: &ContourTable, anchors: &[f64]) -> Result<Overlay> {
    if table.rows.is_empty() {
        return Ok(Overlay::default());
    }
    if !table.is_rectangular() {
        return Err(DriverError::config("table", "overlay needs a rectangular (g, N) table"));
    }
    let ns = table.n_values();
    let n_ref = *ns.last().unwrap();
    let mut reference: Vec<(f64, f64)> =
        table.rows.iter().filter(|r| r.n_particles == n_ref).map(|r| (r.lambda(), r.frequency)).collect();
    reference.sort_by(|a, b| a.0.total_cmp(&b.0));
    reference.dedup_by(|a, b| a.0 == b.0);

    let mut overlay = Overlay { reference_n: Some(n_ref), ..Overlay::default() };
    for &c in anchors {
        let Some(lambda_c) = crossing(&reference, c) else {
            let note = format!("anchor {c} skipped: not reached along N = {n_ref}");
            warn!("{note}");
            overlay.notes.push(note);
            continue;
        };
        for &n in ns.iter().filter(|&&n| n > 1) {
            let g = lambda_c / (n as f64 - 1.0);
            let mut row: Vec<(f64, f64)> =
                table.rows.iter().filter(|r| r.n_particles == n).map(|r| (r.g, r.frequency)).collect();
            row.sort_by(|a, b| a.0.total_cmp(&b.0));
            let frequency = interpolate(&row, g).map(|(f, _)| f);
            overlay.hyperbolas.push(HyperbolaPoint {
                anchor: c,
                lambda: lambda_c,
                n_particles: n,
                g,
                frequency,
                deviation: frequency.map(|f| f - c),
            });
        }
    }
    let mut rows = table.rows.clone();
    rows.sort_by(|a, b| a.n_particles.cmp(&b.n_particles).then(a.g.total_cmp(&b.g)));
    for r in rows {
        let lambda = r.lambda();
        let (reference_f, matched) = match interpolate(&reference, lambda) {
            Some((f, exact)) => (Some(f), if exact { Match::Exact } else { Match::Interpolated }),
            None => (None, Match::Outside),
        };
        overlay.deviations.push(DeviationPoint {
            g: r.g,
            n_particles: r.n_particles,
            engine: r.engine,
            lambda,
            frequency: r.frequency,
            reference: reference_f,
            deviation: reference_f.map(|f| r.frequency - f),
            matched,
        });
    }
    Ok(overlay)
}

/// Smallest x where the piecewise-linear curve crosses `level`.
fn crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(p) = curve.iter().find(|p| p.1 == level) {
        return Some(p.0);
    }
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        ((y0 - level) * (y1 - level) < 0.0).then(|| x0 + (level - y0) * (x1 - x0) / (y1 - y0))
    })
}

/// Linear interpolation on sorted samples; the flag marks an exact node hit.
fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<(f64, bool)> {
    if let Some(p) = curve.iter().find(|p| p.0 == x) {
        return Some((p.1, true));
    }
    curve.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (x > x0 && x < x1).then(|| (y0 + (x - x0) * (y1 - y0) / (x1 - x0), false))
    })
}

impl Overlay {
    pub const HYPERBOLA_HEADER: [&'static str; 6] = ["anchor", "lambda", "n_particles", "g", "frequency", "deviation"];
    pub const DEVIATION_HEADER: [&'static str; 8] =
        ["g", "n_particles", "engine", "lambda", "frequency", "reference", "deviation", "match"];

    pub fn write(&self, hyperbolas: &Path, deviations: &Path, provenance: &Provenance) -> Result<()> {
        let mut prov = provenance.clone();
        if let Some(n) = self.reference_n {
            prov.push(("reference_n".into(), n.to_string()));
        }
        for (i, n) in self.notes.iter().enumerate() {
            prov.push((format!("note{i}"), n.clone()));
        }
        let h: Vec<Vec<String>> = self
            .hyperbolas
            .iter()
            .map(|p| {
                vec![
                    num(p.anchor),
                    num(p.lambda),
                    p.n_particles.to_string(),
                    num(p.g),
                    opt(p.frequency),
                    opt(p.deviation),
                ]
            })
            .collect();
        csvio::write(hyperbolas, &prov, &Self::HYPERBOLA_HEADER, &h)?;
        let d: Vec<Vec<String>> = self
            .deviations
            .iter()
            .map(|p| {
                vec![
                    num(p.g),
                    p.n_particles.to_string(),
                    p.engine.to_string(),
                    num(p.lambda),
                    num(p.frequency),
                    opt(p.reference),
                    opt(p.deviation),
                    p.matched.label().to_string(),
                ]
            })
            .collect();
        csvio::write(deviations, &prov, &Self::DEVIATION_HEADER, &d)
    }
}
