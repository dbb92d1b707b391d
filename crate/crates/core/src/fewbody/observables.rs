use nalgebra::{DMatrix, SymmetricEigen};

use super::dynamics::{ManyBodyState, C64};
use crate::trap_model::{x2_matrix, x_matrix_element, HOBasisSpec};

/// Reduced one-body density ρ₁ with unit trace.
#[derive(Debug, Clone)]
pub struct OneBodyDensity {
    pub matrix: DMatrix<C64>,
}

impl OneBodyDensity {
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.matrix - self.matrix.adjoint();
        d.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian matrix (natural occupations), ascending.
    pub fn occupations(&self) -> Vec<f64> {
        let m = self.matrix.nrows();
        // embed as a real symmetric 2m×2m matrix [[Re, −Im], [Im, Re]]
        let big = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
            let c = self.matrix[(i % m, j % m)];
            match (i < m, j < m) {
                (true, true) | (false, false) => c.re,
                (true, false) => -c.im,
                (false, true) => c.im,
            }
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(big).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        // each eigenvalue appears twice in the embedding
        ev.into_iter().step_by(2).collect()
    }

    /// tr(A ρ) for a real one-body matrix
    pub fn trace_with(&self, a: &DMatrix<f64>) -> f64 {
        let m = self.matrix.nrows();
        let mut s = 0.0;
        for n in 0..m {
            for k in 0..m {
                s += a[(k, n)] * self.matrix[(n, k)].re;
            }
        }
        s
    }
}

/// (ρ₁)_{nm} = ⟨a†_m a_n⟩ / N
pub fn one_body_density(state: &ManyBodyState) -> OneBodyDensity {
    let basis = &state.basis;
    let m = basis.n_orbitals();
    let mut rho = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    let mut work = vec![0u8; m];
    for (s, occ) in basis.iter().enumerate() {
        let cs = state.coeffs[s];
        if cs.norm_sqr() == 0.0 {
            continue;
        }
        work.copy_from_slice(occ);
        for q in 0..m {
            let nq = work[q] as u64;
            if nq == 0 {
                continue;
            }
            work[q] -= 1;
            for p in 0..m {
                let factor = ((nq * (work[p] as u64 + 1)) as f64).sqrt();
                work[p] += 1;
                if let Some(t) = basis.index_of(&work) {
                    // ⟨a†_p a_q⟩ += conj(c_t) c_s · factor
                    rho[(q, p)] += state.coeffs[t].conj() * cs * factor;
                }
                work[p] -= 1;
            }
            work[q] += 1;
        }
    }
    let n = basis.n_particles() as f64;
    rho.unscale_mut(n);
    OneBodyDensity { matrix: rho }
}

/// ⟨X̂²⟩ = N tr(x̂² ρ₁) with x̂² in the basis orbitals.
pub fn x2_expectation(state: &ManyBodyState, orbitals: &HOBasisSpec) -> f64 {
    let rho = one_body_density(state);
    state.basis.n_particles() as f64 * rho.trace_with(&x2_matrix(orbitals.n_orbitals, orbitals.omega_basis))
}

/// ⟨Σₖ x̂ₖ⟩ = N tr(x̂ ρ₁)
pub fn x_expectation(state: &ManyBodyState, orbitals: &HOBasisSpec) -> f64 {
    let m = orbitals.n_orbitals;
    let x = DMatrix::from_fn(m, m, |i, j| x_matrix_element(i, j, orbitals.omega_basis));
    state.basis.n_particles() as f64 * one_body_density(state).trace_with(&x)
}
