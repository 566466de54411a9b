//! Cyclic coordinate descent for the lasso.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LassoFit<F> {
    pub intercept: F,
    pub coefficients: Vec<F>,
    pub sweeps: usize,
    /// Objective after each sweep.
    pub objectives: Vec<F>,
}

pub fn soft_threshold<F: Scalar>(x: F, t: F) -> F {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        F::zero()
    }
}

/// `(1/2n) ||y - b0 - Xb||^2 + lambda ||b||_1`
pub fn objective<F: Scalar>(columns: &[Vec<F>], y: &[F], intercept: F, beta: &[F], lambda: F) -> F {
    let n = y.len();
    let mut rss = F::zero();
    for i in 0..n {
        let fit = intercept + columns.iter().zip(beta).map(|(c, &b)| c[i] * b).sum::<F>();
        rss += (y[i] - fit) * (y[i] - fit);
    }
    rss / (F::lit(2.0) * F::from_usize_lossy(n)) + lambda * beta.iter().map(|b| b.abs()).sum::<F>()
}

/// Minimizes `(1/2n) ||y - b0 - Xb||^2 + lambda ||b||_1` with an unpenalized
/// intercept. Coordinates are visited in column order; each sweep ends with
/// the closed-form intercept update. Stops once the largest coefficient change
/// in a sweep is below `tol`, or after `max_sweeps`.
pub fn coordinate_descent<F: Scalar>(
    columns: &[Vec<F>],
    y: &[F],
    lambda: F,
    max_sweeps: usize,
    tol: F,
) -> Result<LassoFit<F>> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if lambda < F::zero() {
        return Err(Error::InvalidArgument("lasso lambda must be >= 0".into()));
    }
    if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lasso design"));
    }
    let nf = F::from_usize_lossy(n);
    let p = columns.len();
    let sq_norms: Vec<F> = columns.iter().map(|c| c.iter().map(|&v| v * v).sum::<F>() / nf).collect();

    let mut beta = vec![F::zero(); p];
    let mut intercept = y.iter().copied().sum::<F>() / nf;
    let mut resid: Vec<F> = y.iter().map(|&v| v - intercept).collect();
    let mut objectives = Vec::new();
    let mut sweeps = 0;

    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_delta = F::zero();
        for j in 0..p {
            if sq_norms[j] == F::zero() {
                continue;
            }
            let col = &columns[j];
            let old = beta[j];
            let rho = col.iter().zip(&resid).map(|(&x, &r)| x * r).sum::<F>() / nf + sq_norms[j] * old;
            let new = soft_threshold(rho, lambda) / sq_norms[j];
            let delta = new - old;
            if delta != F::zero() {
                for (r, &x) in resid.iter_mut().zip(col) {
                    *r -= x * delta;
                }
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        // Exact intercept minimizer given the slopes.
        let shift = resid.iter().copied().sum::<F>() / nf;
        if shift != F::zero() {
            intercept += shift;
            for r in resid.iter_mut() {
                *r -= shift;
            }
        }
        let rss: F = resid.iter().map(|&r| r * r).sum();
        objectives.push(rss / (F::lit(2.0) * nf) + lambda * beta.iter().map(|b| b.abs()).sum::<F>());
        if max_delta < tol {
            break;
        }
    }
    Ok(LassoFit {
        intercept,
        coefficients: beta,
        sweeps,
        objectives,
    })
}
