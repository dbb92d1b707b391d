//! Lowest eigenpairs of real symmetric banded matrices.
//!
//! Tridiagonal matrices use Sturm-sequence bisection followed by inverse
//! iteration. Pentadiagonal matrices are refined from approximate eigenpairs
//! by shifted inverse iteration with a pivoted band solver.

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q.abs() < f64::MIN_POSITIVE { f64::MIN_POSITIVE.copysign(q) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// Solves (T − shift)x = rhs with partial pivoting.
fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = diag.len();
    if n == 1 {
        let d = diag[0] - shift;
        rhs[0] /= if d == 0.0 { 1e-300 } else { d };
        return;
    }
    // rows stored as (a: diag, b: first super, c: second super) after elimination
    let mut a: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut b: Vec<f64> = off.to_vec();
    b.push(0.0);
    let mut c = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    for i in 0..n - 1 {
        if sub[i].abs() > a[i].abs() {
            // swap rows i and i+1
            let (ai, bi, ci) = (a[i], b[i], c[i]);
            a[i] = sub[i];
            b[i] = a[i + 1];
            c[i] = b[i + 1];
            let r = ai / a[i];
            a[i + 1] = bi - r * b[i];
            b[i + 1] = ci - r * c[i];
            rhs.swap(i, i + 1);
            rhs[i + 1] -= r * rhs[i];
        } else {
            let piv = if a[i] == 0.0 { 1e-300 } else { a[i] };
            a[i] = piv;
            let r = sub[i] / piv;
            a[i + 1] -= r * b[i];
            rhs[i + 1] -= r * rhs[i];
        }
        sub[i] = 0.0;
    }
    if a[n - 1] == 0.0 {
        a[n - 1] = 1e-300;
    }
    rhs[n - 1] /= a[n - 1];
    rhs[n - 2] = (rhs[n - 2] - b[n - 2] * rhs[n - 1]) / a[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - b[i] * rhs[i + 1] - c[i] * rhs[i + 2]) / a[i];
    }
}

/// The `k` lowest eigenpairs, eigenvalues ascending, eigenvectors unit-norm.
pub(crate) fn lowest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    assert_eq!(off.len() + 1, n);
    let k = k.min(n);
    let (glo, ghi) = gershgorin(diag, off);
    let scale = ghi.abs().max(glo.abs()).max(1.0);
    let mut values = Vec::with_capacity(k);
    for idx in 0..k {
        let (mut lo, mut hi) = (glo, ghi);
        // invariant: count(lo) <= idx < count(hi)
        while hi - lo > 4.0 * f64::EPSILON * scale {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(diag, off, mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        values.push(0.5 * (lo + hi));
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lambda) in values.iter().enumerate() {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7 + j * 13) % 17) as f64).collect();
        let shift = lambda + 8.0 * f64::EPSILON * scale;
        for _ in 0..4 {
            shifted_solve(diag, off, shift, &mut v);
            for prev in &vectors {
                let d: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        // fix sign: first significant component positive
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.push(v);
    }
    (values, vectors)
}

const BAND_WIDTH: usize = 7;

#[derive(Clone, Copy)]
struct BandRow {
    base: isize,
    v: [f64; BAND_WIDTH],
}

impl BandRow {
    fn get(&self, col: usize) -> f64 {
        let k = col as isize - self.base;
        if (0..BAND_WIDTH as isize).contains(&k) {
            self.v[k as usize]
        } else {
            0.0
        }
    }

    fn slot(&mut self, col: usize) -> &mut f64 {
        let k = col as isize - self.base;
        &mut self.v[k as usize]
    }

    /// Moves the stored window to start at column `base`; entries left of it must be zero.
    fn rebase(&mut self, base: usize) {
        let shift = base as isize - self.base;
        if shift == 0 {
            return;
        }
        let mut v = [0.0; BAND_WIDTH];
        for (k, slot) in v.iter_mut().enumerate() {
            let src = k as isize + shift;
            if (0..BAND_WIDTH as isize).contains(&src) {
                *slot = self.v[src as usize];
            }
        }
        self.v = v;
        self.base = base as isize;
    }
}

/// Solves (A − shift)x = rhs for symmetric A with bands `d0` (diagonal),
/// `d1` and `d2` (first and second off-diagonals).
fn penta_solve(d0: &[f64], d1: &[f64], d2: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = d0.len();
    let mut rows: Vec<BandRow> = (0..n)
        .map(|i| {
            let mut row = BandRow { base: i as isize - 2, v: [0.0; BAND_WIDTH] };
            for (off, val) in [(-2isize, d2), (-1, d1), (1, d1), (2, d2)] {
                let j = i as isize + off;
                if j >= 0 && (j as usize) < n {
                    let idx = (i as isize).min(j) as usize;
                    *row.slot(j as usize) = val[idx];
                }
            }
            *row.slot(i) = d0[i] - shift;
            row
        })
        .collect();
    for k in 0..n {
        let last = (k + 2).min(n - 1);
        // rows below the pivot only hold columns k..=k+4 at this stage
        for row in &mut rows[k..=last] {
            row.rebase(k);
        }
        let mut piv = k;
        for r in k + 1..=last {
            if rows[r].get(k).abs() > rows[piv].get(k).abs() {
                piv = r;
            }
        }
        rows.swap(k, piv);
        rhs.swap(k, piv);
        let mut pivot = rows[k].get(k);
        if pivot == 0.0 {
            pivot = 1e-300;
            *rows[k].slot(k) = pivot;
        }
        let hi = (k + 4).min(n - 1);
        for r in k + 1..=last {
            let factor = rows[r].get(k) / pivot;
            if factor == 0.0 {
                continue;
            }
            let pivot_row = rows[k];
            for c in k..=hi {
                let pv = pivot_row.get(c);
                if pv != 0.0 {
                    *rows[r].slot(c) -= factor * pv;
                }
            }
            rhs[r] -= factor * rhs[k];
        }
    }
    for k in (0..n).rev() {
        let hi = (k + 4).min(n - 1);
        let mut acc = rhs[k];
        for c in k + 1..=hi {
            acc -= rows[k].get(c) * rhs[c];
        }
        rhs[k] = acc / rows[k].get(k);
    }
}

fn penta_apply(d0: &[f64], d1: &[f64], d2: &[f64], x: &[f64]) -> Vec<f64> {
    let n = d0.len();
    (0..n)
        .map(|i| {
            let mut s = d0[i] * x[i];
            if i >= 1 {
                s += d1[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += d1[i] * x[i + 1];
            }
            if i >= 2 {
                s += d2[i - 2] * x[i - 2];
            }
            if i + 2 < n {
                s += d2[i] * x[i + 2];
            }
            s
        })
        .collect()
}

/// Refines approximate eigenpairs of a symmetric pentadiagonal matrix.
///
/// Each guess must be closer to its target eigenvalue than to any other one.
pub(crate) fn refine_pentadiagonal(
    d0: &[f64],
    d1: &[f64],
    d2: &[f64],
    guesses: &[f64],
    starts: &[Vec<f64>],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut values = Vec::with_capacity(guesses.len());
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(guesses.len());
    for (guess, start) in guesses.iter().zip(starts) {
        let mut v = start.clone();
        let mut lambda = *guess;
        for _ in 0..6 {
            let shift = lambda - 1e-9 * lambda.abs().max(1.0);
            penta_solve(d0, d1, d2, shift, &mut v);
            for prev in &vectors {
                let d: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let av = penta_apply(d0, d1, d2, &v);
            let rq: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
            let converged = (rq - lambda).abs() < 1e-14 * rq.abs().max(1.0);
            lambda = rq;
            if converged {
                break;
            }
        }
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        values.push(lambda);
        vectors.push(v);
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn matches_dense_solver() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 5) % 7) as f64 * 0.1).collect();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let eig = dense.clone().symmetric_eigen();
        let mut ref_vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ref_vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (vals, vecs) = lowest_eigenpairs(&diag, &off, 6);
        for (k, v) in vals.iter().enumerate() {
            assert!((v - ref_vals[k]).abs() < 1e-12, "{k}: {v} vs {}", ref_vals[k]);
            let x = nalgebra::DVector::from_vec(vecs[k].clone());
            let r = &dense * &x - x.clone() * *v;
            assert!(r.norm() < 1e-10, "residual {}", r.norm());
        }
    }

    #[test]
    fn pentadiagonal_refinement_matches_dense() {
        let n = 30;
        let d0: Vec<f64> = (0..n).map(|i| 2.0 + i as f64 * 0.8).collect();
        let d1: Vec<f64> = (0..n - 1).map(|i| -0.6 + 0.02 * i as f64).collect();
        let d2: Vec<f64> = (0..n - 2).map(|i| 0.05 + 0.01 * (i % 3) as f64).collect();
        let dense = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => d0[i],
            1 => d1[i.min(j)],
            2 => d2[i.min(j)],
            _ => 0.0,
        });
        let eig = dense.clone().symmetric_eigen();
        let mut ref_vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ref_vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // start from the tridiagonal part's eigenpairs
        let (guess, starts) = lowest_eigenpairs(&d0, &d1, 4);
        let (vals, vecs) = refine_pentadiagonal(&d0, &d1, &d2, &guess, &starts);
        for k in 0..4 {
            assert!((vals[k] - ref_vals[k]).abs() < 1e-11, "{k}: {} vs {}", vals[k], ref_vals[k]);
            let x = nalgebra::DVector::from_vec(vecs[k].clone());
            assert!((&dense * &x - x.clone() * vals[k]).norm() < 1e-9);
        }
    }
}
