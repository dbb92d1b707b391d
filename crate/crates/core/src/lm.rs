//! Small dense Levenberg–Marquardt solver for fits with a handful of parameters.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LmFit {
    pub params: Vec<f64>,
    /// sum of squared residuals at the solution
    pub cost: f64,
    /// (JᵀJ)⁻¹ at the solution, if invertible
    pub normal_inverse: Option<DMatrix<f64>>,
    pub n_residuals: usize,
}

impl LmFit {
    /// Standard error of parameter `k` from the residual variance.
    pub fn std_error(&self, k: usize) -> Option<f64> {
        let dof = self.n_residuals.checked_sub(self.params.len()).filter(|&d| d > 0)?;
        let inv = self.normal_inverse.as_ref()?;
        let var = inv[(k, k)] * self.cost / dof as f64;
        (var >= 0.0).then(|| var.sqrt())
    }
}

/// Minimize Σ rᵢ(p)² given a closure returning residuals and the Jacobian.
pub(crate) fn levenberg_marquardt<F>(start: &[f64], max_iter: usize, mut model: F) -> LmFit
where
    F: FnMut(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut p = DVector::from_column_slice(start);
    let (mut r, mut j) = model(p.as_slice());
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let (rt, jt) = model(trial.as_slice());
            let ct = rt.norm_squared();
            if ct.is_finite() && ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                p = trial;
                r = rt;
                j = jt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-15 && step.norm() > 1e-15 * p.norm().max(1.0);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let normal_inverse = (j.transpose() * &j).try_inverse();
    LmFit { params: p.as_slice().to_vec(), cost, normal_inverse, n_residuals: r.len() }
}
