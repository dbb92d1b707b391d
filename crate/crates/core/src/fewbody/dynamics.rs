use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::CsrMatrix;

use super::basis::FockBasis;
use super::hamiltonian::{csr_to_dense, one_body_operator, Hamiltonian};
use crate::error::{invalid, Error, Result};
use crate::spectral::TimeSeries;
use crate::trap_model::{x2_matrix, x_matrix_element};

pub type C64 = Complex<f64>;

/// Largest dimension handled by full diagonalization.
pub const DENSE_LIMIT: usize = 4000;

/// Coefficient vector on a Fock basis.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    pub basis: Arc<FockBasis>,
    pub coeffs: DVector<C64>,
}

impl ManyBodyState {
    pub fn new(basis: Arc<FockBasis>, coeffs: DVector<C64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(invalid(
                "coeffs",
                format!("length {} does not match basis size {}", coeffs.len(), basis.len()),
            ));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn from_real(basis: Arc<FockBasis>, coeffs: &[f64]) -> Result<Self> {
        Self::new(basis, DVector::from_iterator(coeffs.len(), coeffs.iter().map(|&c| C64::new(c, 0.0))))
    }

    /// Single occupation-number state.
    pub fn fock(basis: Arc<FockBasis>, occ: &[u8]) -> Result<Self> {
        let idx = basis.index_of(occ).ok_or_else(|| invalid("occ", format!("{occ:?} is not in the basis")))?;
        let mut c = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
        c[idx] = C64::new(1.0, 0.0);
        Self::new(basis, c)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.coeffs.unscale_mut(n);
        }
    }

    /// ⟨ψ|A|ψ⟩ for a real symmetric operator on the same basis.
    pub fn expectation(&self, op: &CsrMatrix<f64>) -> f64 {
        let av = csr_apply(op, &self.coeffs);
        self.coeffs.dotc(&av).re
    }
}

pub(crate) fn csr_apply(op: &CsrMatrix<f64>, v: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::from_element(op.nrows(), C64::new(0.0, 0.0));
    for (i, row) in op.row_iter().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (&j, &a) in row.col_indices().iter().zip(row.values()) {
            acc += v[j] * a;
        }
        out[i] = acc;
    }
    out
}

fn csr_apply_real(op: &CsrMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(op.nrows());
    for (i, row) in op.row_iter().enumerate() {
        out[i] = row.col_indices().iter().zip(row.values()).map(|(&j, &a)| a * v[j]).sum();
    }
    out
}

/// Ground state: full diagonalization up to [`DENSE_LIMIT`], Lanczos beyond.
pub fn ground_state(h: &Hamiltonian) -> Result<(f64, ManyBodyState)> {
    let (e, v) = if h.dim() <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(h.to_dense());
        let k = eig.eigenvalues.imin();
        (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
    } else {
        lanczos_ground(&h.matrix, 1e-10, 4000)?
    };
    // deterministic sign: largest component positive
    let k = v.iamax();
    let v = if v[k] < 0.0 { -v } else { v };
    let state = ManyBodyState::from_real(h.basis.clone(), v.as_slice())?;
    Ok((e, state))
}

/// Restarted Lanczos with full reorthogonalization for the lowest eigenpair.
fn lanczos_ground(op: &CsrMatrix<f64>, tol: f64, max_matvecs: usize) -> Result<(f64, DVector<f64>)> {
    let n = op.nrows();
    let m = 80.min(n);
    let mut start = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919) % 97) as f64 / 97.0);
    start.normalize_mut();
    let mut matvecs = 0;
    let mut residual = f64::INFINITY;
    while matvecs < max_matvecs {
        let mut q: Vec<DVector<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            let mut w = csr_apply_real(op, &q[j]);
            matvecs += 1;
            let a = q[j].dot(&w);
            alpha.push(a);
            for _ in 0..2 {
                for qi in &q {
                    let d = qi.dot(&w);
                    w.axpy(-d, qi, 1.0);
                }
            }
            let b = w.norm();
            if j + 1 == m || b < 1e-13 {
                break;
            }
            beta.push(b);
            q.push(w / b);
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let idx = eig.eigenvalues.imin();
        let theta = eig.eigenvalues[idx];
        let y = eig.eigenvectors.column(idx);
        let mut x = DVector::zeros(n);
        for (i, qi) in q.iter().take(k).enumerate() {
            x.axpy(y[i], qi, 1.0);
        }
        x.normalize_mut();
        let r = csr_apply_real(op, &x) - &x * theta;
        residual = r.norm();
        if residual < tol * theta.abs().max(1.0) {
            return Ok((theta, x));
        }
        start = x;
    }
    Err(Error::NotConverged { solver: "Lanczos ground state", iterations: matvecs, residual })
}

/// Uniform sampling grid t_k = t0 + k·dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    /// `periods` trap periods of frequency `omega`, `per_period` samples each.
    pub fn periods(omega: f64, periods: f64, per_period: usize) -> Self {
        let period = 2.0 * std::f64::consts::PI / omega;
        Self { t0: 0.0, dt: period / per_period as f64, count: (periods * per_period as f64).round() as usize }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub kind: PropagatorKind,
    /// local error bound per Krylov step
    pub krylov_tol: f64,
    pub krylov_dim: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { kind: PropagatorKind::Auto, krylov_tol: 1e-10, krylov_dim: 30 }
    }
}

/// Observables recorded along a quench.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// ⟨X̂²⟩(t) = ⟨Σₖ x̂ₖ²⟩
    pub series: TimeSeries,
    /// ⟨Σₖ x̂ₖ⟩(t)
    pub dipole: Vec<f64>,
    pub max_norm_drift: f64,
    /// max |⟨H⟩(t) − ⟨H⟩(0)| / |⟨H⟩(0)|
    pub max_energy_drift: f64,
    pub method: PropagatorKind,
}

/// Many-body X̂² and X̂ operators in the basis orbitals.
pub struct PositionOperators {
    pub x2: CsrMatrix<f64>,
    pub x: CsrMatrix<f64>,
}

impl PositionOperators {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        let m = h.orbitals.n_orbitals;
        let w = h.orbitals.omega_basis;
        let x1 = DMatrix::from_fn(m, m, |i, j| x_matrix_element(i, j, w));
        Ok(Self { x2: one_body_operator(&h.basis, &x2_matrix(m, w))?, x: one_body_operator(&h.basis, &x1)? })
    }
}

/// Evolve `psi0` under `h_post` and record ⟨X̂²⟩ on `grid`.
pub fn propagate_quench(
    psi0: &ManyBodyState,
    h_post: &Hamiltonian,
    grid: &TimeGrid,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    if grid.count == 0 || !(grid.dt > 0.0) {
        return Err(invalid("t_grid", "needs a positive step and at least one sample"));
    }
    let ops = PositionOperators::new(h_post)?;
    let kind = match opts.kind {
        PropagatorKind::Auto if h_post.dim() <= DENSE_LIMIT => PropagatorKind::Dense,
        PropagatorKind::Auto => PropagatorKind::Krylov,
        k => k,
    };
    let e0 = psi0.expectation(&h_post.matrix);
    let mut x2 = Vec::with_capacity(grid.count);
    let mut dipole = Vec::with_capacity(grid.count);
    let mut max_norm_drift: f64 = 0.0;
    let mut max_energy_drift: f64 = 0.0;
    let n0 = psi0.norm();
    match kind {
        PropagatorKind::Dense => {
            let dense = DenseEvolution::new(h_post, psi0, &ops);
            for k in 0..grid.count {
                let obs = dense.observables(grid.time(k));
                x2.push(obs.x2);
                dipole.push(obs.x);
                max_norm_drift = max_norm_drift.max((obs.norm - n0).abs());
                max_energy_drift = max_energy_drift.max((obs.energy - e0).abs() / e0.abs().max(1e-300));
            }
        }
        _ => {
            let mut psi = psi0.coeffs.clone();
            let mut t = 0.0;
            let mut step_hint = grid.dt;
            let target0 = grid.t0;
            if target0 != 0.0 {
                psi = krylov_advance(&h_post.matrix, psi, 0.0, target0, &mut step_hint, opts)?;
                t = target0;
            }
            for k in 0..grid.count {
                let target = grid.time(k);
                if target > t {
                    psi = krylov_advance(&h_post.matrix, psi, t, target, &mut step_hint, opts)?;
                    t = target;
                }
                let state = ManyBodyState { basis: psi0.basis.clone(), coeffs: psi.clone() };
                x2.push(state.expectation(&ops.x2));
                dipole.push(state.expectation(&ops.x));
                max_norm_drift = max_norm_drift.max((state.norm() - n0).abs());
                let e = state.expectation(&h_post.matrix);
                max_energy_drift = max_energy_drift.max((e - e0).abs() / e0.abs().max(1e-300));
            }
        }
    }
    let mut series = TimeSeries::new(grid.t0, grid.dt, x2)?;
    series.provenance = vec![
        ("engine".into(), "ed".into()),
        ("propagator".into(), format!("{kind:?}").to_lowercase()),
        ("g".into(), h_post.quench.g.to_string()),
        ("n_particles".into(), h_post.quench.n_particles.to_string()),
        ("n_orbitals".into(), h_post.orbitals.n_orbitals.to_string()),
        ("omega_basis".into(), h_post.orbitals.omega_basis.to_string()),
        ("omega_pre".into(), h_post.quench.omega_pre.to_string()),
        ("omega_post".into(), h_post.quench.omega_post.to_string()),
    ];
    Ok(Trajectory { series, dipole, max_norm_drift, max_energy_drift, method: kind })
}

/// States ψ(t_k) themselves, for small systems and tests.
pub fn propagate_states(
    psi0: &ManyBodyState,
    h_post: &Hamiltonian,
    grid: &TimeGrid,
    opts: &PropagationOptions,
) -> Result<Vec<ManyBodyState>> {
    let mut out = Vec::with_capacity(grid.count);
    let use_dense = match opts.kind {
        PropagatorKind::Dense => true,
        PropagatorKind::Krylov => false,
        PropagatorKind::Auto => h_post.dim() <= DENSE_LIMIT,
    };
    if use_dense {
        let eig = SymmetricEigen::new(h_post.to_dense());
        let v = &eig.eigenvectors;
        let c = complex_project(v, &psi0.coeffs);
        for k in 0..grid.count {
            let t = grid.time(k);
            let ct = DVector::from_fn(c.len(), |a, _| c[a] * C64::from_polar(1.0, -eig.eigenvalues[a] * t));
            let psi = DVector::from_fn(v.nrows(), |i, _| (0..c.len()).map(|a| ct[a] * v[(i, a)]).sum::<C64>());
            out.push(ManyBodyState { basis: psi0.basis.clone(), coeffs: psi });
        }
    } else {
        let mut psi = psi0.coeffs.clone();
        let mut t = 0.0;
        let mut hint = grid.dt;
        for k in 0..grid.count {
            let target = grid.time(k);
            if target > t {
                psi = krylov_advance(&h_post.matrix, psi, t, target, &mut hint, opts)?;
                t = target;
            }
            out.push(ManyBodyState { basis: psi0.basis.clone(), coeffs: psi.clone() });
        }
    }
    Ok(out)
}

fn complex_project(v: &DMatrix<f64>, psi: &DVector<C64>) -> DVector<C64> {
    let re = DVector::from_iterator(psi.len(), psi.iter().map(|c| c.re));
    let im = DVector::from_iterator(psi.len(), psi.iter().map(|c| c.im));
    let (cr, ci) = (v.tr_mul(&re), v.tr_mul(&im));
    DVector::from_fn(cr.len(), |a, _| C64::new(cr[a], ci[a]))
}

struct DenseObservables {
    x2: f64,
    x: f64,
    norm: f64,
    energy: f64,
}

/// ψ(t) in the post-quench eigenbasis: only the populated eigenstates are kept.
struct DenseEvolution {
    energies: Vec<f64>,
    coeffs: Vec<C64>,
    x2: DMatrix<f64>,
    x: DMatrix<f64>,
}

impl DenseEvolution {
    fn new(h: &Hamiltonian, psi0: &ManyBodyState, ops: &PositionOperators) -> Self {
        let eig = SymmetricEigen::new(h.to_dense());
        let c = complex_project(&eig.eigenvectors, &psi0.coeffs);
        // drop eigenstates whose weight cannot affect the observables
        let keep: Vec<usize> = (0..c.len()).filter(|&a| c[a].norm_sqr() > 1e-30).collect();
        let vk = DMatrix::from_fn(eig.eigenvectors.nrows(), keep.len(), |i, a| eig.eigenvectors[(i, keep[a])]);
        let transform = |op: &CsrMatrix<f64>| {
            let dense = csr_to_dense(op);
            vk.transpose() * (dense * &vk)
        };
        Self {
            energies: keep.iter().map(|&a| eig.eigenvalues[a]).collect(),
            coeffs: keep.iter().map(|&a| c[a]).collect(),
            x2: transform(&ops.x2),
            x: transform(&ops.x),
        }
    }

    fn observables(&self, t: f64) -> DenseObservables {
        let n = self.energies.len();
        let ct: Vec<C64> = (0..n).map(|a| self.coeffs[a] * C64::from_polar(1.0, -self.energies[a] * t)).collect();
        let u = DVector::from_iterator(n, ct.iter().map(|c| c.re));
        let v = DVector::from_iterator(n, ct.iter().map(|c| c.im));
        let quad = |m: &DMatrix<f64>| u.dot(&(m * &u)) + v.dot(&(m * &v));
        let norm = ct.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let energy = ct.iter().zip(&self.energies).map(|(c, e)| c.norm_sqr() * e).sum();
        DenseObservables { x2: quad(&self.x2), x: quad(&self.x), norm, energy }
    }
}

/// Lanczos propagator from `t` to `target`, adapting the step to meet `opts.krylov_tol`.
fn krylov_advance(
    op: &CsrMatrix<f64>,
    mut psi: DVector<C64>,
    mut t: f64,
    target: f64,
    step_hint: &mut f64,
    opts: &PropagationOptions,
) -> Result<DVector<C64>> {
    let min_step = 1e-9 * (target - t).abs().max(1e-3);
    while target - t > 1e-14 * target.abs().max(1.0) {
        let remaining = target - t;
        let mut tau = step_hint.min(remaining);
        let space = KrylovSpace::build(op, &psi, opts.krylov_dim);
        loop {
            let (next, estimate) = space.evolve(tau);
            if estimate <= opts.krylov_tol {
                psi = next;
                t += tau;
                if tau < remaining {
                    *step_hint = tau;
                } else if estimate < 0.01 * opts.krylov_tol {
                    *step_hint = (*step_hint * 1.5).max(tau);
                }
                break;
            }
            tau *= 0.5;
            if tau < min_step {
                return Err(Error::KrylovStepRefused { t, step: tau, estimate });
            }
        }
    }
    Ok(psi)
}

struct KrylovSpace {
    q: Vec<DVector<C64>>,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
    beta_last: f64,
    norm: f64,
}

impl KrylovSpace {
    fn build(op: &CsrMatrix<f64>, psi: &DVector<C64>, max_dim: usize) -> Self {
        let norm = psi.norm();
        let mut q = vec![psi / C64::new(norm, 0.0)];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let mut beta_last = 0.0;
        let dim = max_dim.min(psi.len()).max(1);
        for j in 0..dim {
            let mut w = csr_apply(op, &q[j]);
            alpha.push(q[j].dotc(&w).re);
            for _ in 0..2 {
                for qi in &q {
                    let d = qi.dotc(&w);
                    w.axpy(-d, qi, C64::new(1.0, 0.0));
                }
            }
            let b = w.norm();
            if j + 1 == dim || b < 1e-14 {
                beta_last = if j + 1 == dim { b } else { 0.0 };
                break;
            }
            beta.push(b);
            q.push(w / C64::new(b, 0.0));
        }
        let k = alpha.len();
        let tri = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        Self { q, eigvals: eig.eigenvalues, eigvecs: eig.eigenvectors, beta_last, norm }
    }

    /// exp(−iHτ)ψ and the a-posteriori error estimate β_m |[exp(−iTτ)e₁]_m|.
    fn evolve(&self, tau: f64) -> (DVector<C64>, f64) {
        let k = self.eigvals.len();
        let y: Vec<C64> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|a| C64::from_polar(self.eigvecs[(i, a)] * self.eigvecs[(0, a)], -self.eigvals[a] * tau))
                    .sum()
            })
            .collect();
        let n = self.q[0].len();
        let mut out = DVector::from_element(n, C64::new(0.0, 0.0));
        for (yi, qi) in y.iter().zip(&self.q) {
            out.axpy(*yi * self.norm, qi, C64::new(1.0, 0.0));
        }
        let estimate = self.beta_last * y[k - 1].norm() * self.norm;
        (out, estimate)
    }
}
