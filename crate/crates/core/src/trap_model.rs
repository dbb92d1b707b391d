//! Harmonic-oscillator units, orbitals and the one- and two-body matrix
//! elements shared by every engine.
//!
//! All quantities are in units of the pre-quench oscillator: lengths in
//! `sqrt(hbar / m Ω₀)`, energies in `hbar Ω₀`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Highest orbital index evaluated by the normalized recurrence.
pub const ORBITAL_INDEX_LIMIT: usize = 96;

/// One trap-frequency quench experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchSpec {
    pub omega_pre: f64,
    pub omega_post: f64,
    pub g: f64,
    pub n_particles: usize,
}

impl Default for QuenchSpec {
    fn default() -> Self {
        Self { omega_pre: 1.0, omega_post: 0.9f64.sqrt(), g: 0.0, n_particles: 2 }
    }
}

impl QuenchSpec {
    pub fn new(omega_pre: f64, omega_post: f64, g: f64, n_particles: usize) -> Result<Self> {
        let spec = Self { omega_pre, omega_post, g, n_particles };
        spec.validate()?;
        Ok(spec)
    }

    /// Default quench Ω: 1 → √0.9 at coupling `g` with `n` particles.
    pub fn standard(g: f64, n_particles: usize) -> Self {
        Self { g, n_particles, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_pre > 0.0 && self.omega_pre.is_finite()) {
            return Err(invalid("omega_pre", format!("must be positive, got {}", self.omega_pre)));
        }
        if !(self.omega_post > 0.0 && self.omega_post.is_finite()) {
            return Err(invalid("omega_post", format!("must be positive, got {}", self.omega_post)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(invalid("g", format!("only repulsive g >= 0 is supported, got {}", self.g)));
        }
        if self.n_particles == 0 {
            return Err(invalid("n_particles", "must be at least 1"));
        }
        Ok(())
    }

    /// The same system without the quench (ground-state preparation).
    pub fn unquenched(&self) -> Self {
        Self { omega_post: self.omega_pre, ..*self }
    }

    /// Gross–Pitaevskii parameter g(N−1).
    pub fn gp_parameter(&self) -> f64 {
        self.g * (self.n_particles as f64 - 1.0)
    }

    /// One post-quench trap period 2π/Ω.
    pub fn post_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_post
    }
}

/// Single-particle orbital basis: the lowest `n_orbitals` eigenfunctions of an
/// oscillator with frequency `omega_basis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HOBasisSpec {
    pub n_orbitals: usize,
    pub omega_basis: f64,
}

impl HOBasisSpec {
    pub fn new(n_orbitals: usize, omega_basis: f64) -> Result<Self> {
        if n_orbitals == 0 {
            return Err(invalid("n_orbitals", "must be at least 1"));
        }
        if n_orbitals > ORBITAL_INDEX_LIMIT + 1 {
            return Err(Error::OrbitalIndexTooLarge { index: n_orbitals - 1, limit: ORBITAL_INDEX_LIMIT });
        }
        if !(omega_basis > 0.0) {
            return Err(invalid("omega_basis", "must be positive"));
        }
        Ok(Self { n_orbitals, omega_basis })
    }

    /// Orbitals of the pre-quench trap.
    pub fn pre_quench(n_orbitals: usize, quench: &QuenchSpec) -> Result<Self> {
        Self::new(n_orbitals, quench.omega_pre)
    }
}

/// Normalized oscillator eigenfunction φₙ(x) for frequency `omega`.
pub fn ho_orbital_eval(n: usize, x: f64, omega: f64) -> Result<f64> {
    if n > ORBITAL_INDEX_LIMIT {
        return Err(Error::OrbitalIndexTooLarge { index: n, limit: ORBITAL_INDEX_LIMIT });
    }
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be positive"));
    }
    let mut out = vec![0.0; n + 1];
    ho_orbitals_into(x, omega, &mut out);
    Ok(out[n])
}

/// Fills `out[k] = φₖ(x)` for k < out.len().
pub fn ho_orbitals_into(x: f64, omega: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let y = omega.sqrt() * x;
    let scale = omega.powf(0.25);
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp();
    out[0] = scale * cur;
    for n in 1..out.len() {
        let nf = n as f64;
        let next = (2.0 / nf).sqrt() * y * cur - ((nf - 1.0) / nf).sqrt() * prev;
        prev = cur;
        cur = next;
        out[n] = scale * cur;
    }
}

/// ⟨n|x̂²|m⟩ for the oscillator of frequency `omega`.
pub fn x2_matrix_element(n: usize, m: usize, omega: f64) -> f64 {
    let (lo, hi) = if n <= m { (n, m) } else { (m, n) };
    if lo == hi {
        (2 * lo + 1) as f64 / (2.0 * omega)
    } else if hi == lo + 2 {
        (((lo + 1) * (lo + 2)) as f64).sqrt() / (2.0 * omega)
    } else {
        0.0
    }
}

/// ⟨n|x̂|m⟩ for the oscillator of frequency `omega`.
pub fn x_matrix_element(n: usize, m: usize, omega: f64) -> f64 {
    let (lo, hi) = if n <= m { (n, m) } else { (m, n) };
    if hi == lo + 1 {
        (hi as f64 / (2.0 * omega)).sqrt()
    } else {
        0.0
    }
}

/// Dense x̂² matrix in the first `m` orbitals.
pub fn x2_matrix(m: usize, omega: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| x2_matrix_element(i, j, omega))
}

/// Matrix of −½∂² + ½Ω²x² (Ω = post-quench frequency) in the basis orbitals.
pub fn one_body_hamiltonian_matrix(basis: &HOBasisSpec, quench: &QuenchSpec) -> DMatrix<f64> {
    let m = basis.n_orbitals;
    let wb = basis.omega_basis;
    let shift = 0.5 * (quench.omega_post * quench.omega_post - wb * wb);
    DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j { (i as f64 + 0.5) * wb } else { 0.0 };
        diag + shift * x2_matrix_element(i, j, wb)
    })
}

/// Gauss–Hermite rule for ∫ f(y) e^{−y²} dy.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// weights · e^{y²}, for integrands that already carry their Gaussian
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on the normalized Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut scaled = vec![0.0; n];
        let nf = n as f64;
        let half = n.div_ceil(2);
        let mut z: f64 = 0.0;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            for _ in 0..100 {
                let (mut p1, mut p2) = (pim4, 0.0);
                for j in 1..=n {
                    let jf = j as f64;
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                let dp = (2.0 * nf).sqrt() * p2;
                let z_old = z;
                z = z_old - p1 / dp;
                if (z - z_old).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            // recompute p_{n-1} at the converged node
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            let pn1 = p1;
            let w = 1.0 / (nf * pn1 * pn1);
            // ψ_{n-1}(z) = pn1 e^{-z²/2}
            let psi = pn1 * (-0.5 * z * z).exp();
            let ws = 1.0 / (nf * psi * psi);
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = w;
            weights[n - 1 - i] = w;
            scaled[i] = ws;
            scaled[n - 1 - i] = ws;
        }
        // the loop fills descending nodes; store ascending
        nodes.reverse();
        weights.reverse();
        scaled.reverse();
        Self { nodes, weights, scaled_weights: scaled }
    }
}

fn check_index(i: usize) -> Result<()> {
    if i > ORBITAL_INDEX_LIMIT {
        Err(Error::OrbitalIndexTooLarge { index: i, limit: ORBITAL_INDEX_LIMIT })
    } else {
        Ok(())
    }
}

/// ∫ φ_a φ_b φ_c φ_d dx for oscillator orbitals of frequency `omega`.
pub fn contact_tensor(a: usize, b: usize, c: usize, d: usize, omega: f64) -> Result<f64> {
    for i in [a, b, c, d] {
        check_index(i)?;
    }
    let total = a + b + c + d;
    if total % 2 == 1 {
        return Ok(0.0);
    }
    let rule = GaussHermite::new(total + 1);
    let top = a.max(b).max(c).max(d);
    let mut phi = vec![0.0; top + 1];
    let mut sum = 0.0;
    for (y, w) in rule.nodes.iter().zip(&rule.scaled_weights) {
        ho_orbitals_into(y / std::f64::consts::SQRT_2, 1.0, &mut phi);
        sum += w * phi[a] * phi[b] * phi[c] * phi[d];
    }
    Ok(sum * omega.sqrt() / std::f64::consts::SQRT_2)
}

/// Fully populated contact tensor for the first `n_orbitals` orbitals.
///
/// Built once, then only read.
#[derive(Debug, Clone)]
pub struct ContactTable {
    m: usize,
    values: Vec<f64>,
}

impl ContactTable {
    pub fn new(basis: &HOBasisSpec) -> Self {
        let m = basis.n_orbitals;
        let rule = GaussHermite::new(4 * (m - 1) + 1);
        let mut phi = vec![vec![0.0; m]; rule.nodes.len()];
        for (row, y) in phi.iter_mut().zip(&rule.nodes) {
            ho_orbitals_into(y / std::f64::consts::SQRT_2, 1.0, row);
        }
        let prefactor = basis.omega_basis.sqrt() / std::f64::consts::SQRT_2;
        let mut values = vec![0.0; m * m * m * m];
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * m + b) * m + c) * m + d;
        for a in 0..m {
            for b in a..m {
                for c in b..m {
                    for d in c..m {
                        if (a + b + c + d) % 2 == 1 {
                            continue;
                        }
                        let mut s = 0.0;
                        for (row, w) in phi.iter().zip(&rule.scaled_weights) {
                            s += w * row[a] * row[b] * row[c] * row[d];
                        }
                        let v = s * prefactor;
                        for p in permutations([a, b, c, d]) {
                            values[idx(p[0], p[1], p[2], p[3])] = v;
                        }
                    }
                }
            }
        }
        Self { m, values }
    }

    pub fn n_orbitals(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.m;
        self.values[((a * m + b) * m + c) * m + d]
    }
}

fn permutations(v: [usize; 4]) -> impl Iterator<Item = [usize; 4]> {
    const PERMS: [[usize; 4]; 24] = [
        [0, 1, 2, 3],
        [0, 1, 3, 2],
        [0, 2, 1, 3],
        [0, 2, 3, 1],
        [0, 3, 1, 2],
        [0, 3, 2, 1],
        [1, 0, 2, 3],
        [1, 0, 3, 2],
        [1, 2, 0, 3],
        [1, 2, 3, 0],
        [1, 3, 0, 2],
        [1, 3, 2, 0],
        [2, 0, 1, 3],
        [2, 0, 3, 1],
        [2, 1, 0, 3],
        [2, 1, 3, 0],
        [2, 3, 0, 1],
        [2, 3, 1, 0],
        [3, 0, 1, 2],
        [3, 0, 2, 1],
        [3, 1, 0, 2],
        [3, 1, 2, 0],
        [3, 2, 0, 1],
        [3, 2, 1, 0],
    ];
    PERMS.into_iter().map(move |p| [v[p[0]], v[p[1]], v[p[2]], v[p[3]]])
}
