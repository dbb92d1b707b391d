use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::basis::FockBasis;
use crate::error::{invalid, Result};
use crate::trap_model::{one_body_hamiltonian_matrix, ContactTable, HOBasisSpec, QuenchSpec};

/// Many-body Hamiltonian over a Fock basis of fixed orbitals.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matrix: CsrMatrix<f64>,
    pub basis: Arc<FockBasis>,
    pub orbitals: HOBasisSpec,
    /// the trap the matrix describes (its `omega_post` is the active frequency)
    pub quench: QuenchSpec,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        csr_to_dense(&self.matrix)
    }
}

pub(crate) fn csr_to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        out[(i, j)] += *v;
    }
    out
}

// Each row closure returns the upper-triangle entries (t ≥ s) of column s;
// mirroring afterwards keeps the matrix exactly symmetric.
fn assemble<F>(basis: &FockBasis, column: F) -> CsrMatrix<f64>
where
    F: Fn(usize, &[u8], &mut Vec<(usize, f64)>) + Sync,
{
    let n = basis.len();
    let build = |s: usize| {
        let mut entries = Vec::new();
        column(s, basis.state(s), &mut entries);
        entries.retain(|&(t, _)| t >= s);
        entries.sort_by_key(|&(t, _)| t);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (t, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += v,
                _ => merged.push((t, v)),
            }
        }
        merged
    };
    #[cfg(feature = "parallel")]
    let columns: Vec<Vec<(usize, f64)>> = (0..n).into_par_iter().map(build).collect();
    #[cfg(not(feature = "parallel"))]
    let columns: Vec<Vec<(usize, f64)>> = (0..n).map(build).collect();

    let mut coo = CooMatrix::new(n, n);
    for (s, col) in columns.iter().enumerate() {
        for &(t, v) in col {
            if v == 0.0 {
                continue;
            }
            coo.push(t, s, v);
            if t != s {
                coo.push(s, t, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// Second-quantized Σ A_pq a†_p a_q for a real symmetric one-body matrix `a`.
pub fn one_body_operator(basis: &FockBasis, a: &DMatrix<f64>) -> Result<CsrMatrix<f64>> {
    let m = basis.n_orbitals();
    if a.nrows() != m || a.ncols() != m {
        return Err(invalid("one_body", format!("matrix must be {m}×{m}, got {}×{}", a.nrows(), a.ncols())));
    }
    Ok(assemble(basis, |_, occ, out| {
        let mut work = occ.to_vec();
        for q in 0..m {
            let nq = occ[q] as u64;
            if nq == 0 {
                continue;
            }
            work[q] -= 1;
            for p in 0..m {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let factor = (nq * (work[p] as u64 + 1)) as f64;
                work[p] += 1;
                if let Some(t) = basis.index_of(&work) {
                    out.push((t, apq * factor.sqrt()));
                }
                work[p] -= 1;
            }
            work[q] += 1;
        }
    }))
}

/// (g/2) Σ I_abcd a†_a a†_b a_d a_c over all orbital quadruples.
pub fn contact_operator(basis: &FockBasis, table: &ContactTable, g: f64) -> CsrMatrix<f64> {
    let m = basis.n_orbitals();
    assert_eq!(table.n_orbitals(), m, "contact table built for a different orbital count");
    assemble(basis, |_, occ, out| {
        if g == 0.0 {
            return;
        }
        let mut work = occ.to_vec();
        for c in 0..m {
            if work[c] == 0 {
                continue;
            }
            let nc = work[c] as u64;
            work[c] -= 1;
            for d in c..m {
                if work[d] == 0 {
                    continue;
                }
                let nd = work[d] as u64;
                work[d] -= 1;
                let m_cd = if c == d { 1.0 } else { 2.0 };
                for b in 0..m {
                    let nb = work[b] as u64 + 1;
                    work[b] += 1;
                    for a in 0..=b {
                        if (a + b + c + d) % 2 == 1 {
                            continue;
                        }
                        let integral = table.get(a, b, c, d);
                        if integral == 0.0 {
                            continue;
                        }
                        let na = work[a] as u64 + 1;
                        work[a] += 1;
                        if let Some(t) = basis.index_of(&work) {
                            let m_ab = if a == b { 1.0 } else { 2.0 };
                            let factor = ((nc * nd * nb * na) as f64).sqrt();
                            out.push((t, 0.5 * g * m_ab * m_cd * integral * factor));
                        }
                        work[a] -= 1;
                    }
                    work[b] -= 1;
                }
                work[d] += 1;
            }
            work[c] += 1;
        }
    })
}

/// H = Σ h_pq a†_p a_q + (g/2) Σ I_abcd a†_a a†_b a_d a_c in the trap of `quench.omega_post`.
pub fn build_hamiltonian(basis: Arc<FockBasis>, orbitals: &HOBasisSpec, quench: &QuenchSpec) -> Result<Hamiltonian> {
    let table = ContactTable::new(orbitals);
    build_hamiltonian_with_table(basis, orbitals, quench, &table)
}

pub fn build_hamiltonian_with_table(
    basis: Arc<FockBasis>,
    orbitals: &HOBasisSpec,
    quench: &QuenchSpec,
    table: &ContactTable,
) -> Result<Hamiltonian> {
    quench.validate()?;
    if orbitals.n_orbitals != basis.n_orbitals() {
        return Err(invalid("n_orbitals", "orbital set and Fock basis disagree"));
    }
    if quench.n_particles != basis.n_particles() {
        return Err(invalid("n_particles", "quench and Fock basis disagree"));
    }
    let h1 = one_body_operator(&basis, &one_body_hamiltonian_matrix(orbitals, quench))?;
    let h2 = contact_operator(&basis, table, quench.g);
    let matrix = &h1 + &h2;
    Ok(Hamiltonian { matrix, basis, orbitals: *orbitals, quench: *quench })
}
