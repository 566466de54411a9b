//! Dense least squares used by the linear learners and the stacking
//! combiner. Designs are column-major: one `Vec` per column.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Intercept plus slopes from a least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LstsqFit<F> {
    pub intercept: F,
    pub coefficients: Vec<F>,
    /// Ridge penalty used when the centered design was rank deficient.
    pub ridge: Option<F>,
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn mean<F: Scalar>(v: &[F]) -> F {
    v.iter().copied().sum::<F>() / F::from_usize_lossy(v.len())
}

/// Ordinary least squares with an unpenalized intercept.
///
/// Columns are centered first; constant columns get a zero coefficient. The
/// centered problem is solved by Householder QR. If it is underdetermined or
/// numerically rank deficient the solve switches to ridge with
/// `lambda = 1e-8 * trace(XᵀX) / p` on the centered design.
pub fn least_squares<F: Scalar>(columns: &[Vec<F>], y: &[F]) -> Result<LstsqFit<F>> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch { left: c.len(), right: n });
    }
    if y.iter().any(|v| !v.is_finite()) || columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design"));
    }

    let y_mean = mean(y);
    let yc: Vec<F> = y.iter().map(|&v| v - y_mean).collect();
    let nf = F::from_usize_lossy(n);

    let mut means = Vec::with_capacity(columns.len());
    let mut active = Vec::new();
    let mut centered = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let m = mean(col);
        means.push(m);
        let c: Vec<F> = col.iter().map(|&v| v - m).collect();
        let std = (dot(&c, &c) / nf).sqrt();
        if std > F::epsilon() * F::lit(16.0) * m.abs().max(F::one()) {
            active.push(j);
            centered.push(c);
        }
    }

    let mut coefficients = vec![F::zero(); columns.len()];
    let mut ridge = None;
    if !centered.is_empty() {
        let p = centered.len();
        let solved = if n > p { qr_solve(&centered, &yc) } else { None };
        let beta = match solved {
            Some(b) => b,
            None => {
                let (b, lambda) = ridge_solve(&centered, &yc)?;
                ridge = Some(lambda);
                b
            }
        };
        for (&j, b) in active.iter().zip(beta) {
            coefficients[j] = b;
        }
    }
    let intercept = y_mean - dot(&means, &coefficients);
    Ok(LstsqFit {
        intercept,
        coefficients,
        ridge,
    })
}

/// Householder QR solve; `None` when the problem is numerically rank
/// deficient.
fn qr_solve<F: Scalar>(columns: &[Vec<F>], y: &[F]) -> Option<Vec<F>> {
    let n = y.len();
    let p = columns.len();
    let mut a: Vec<Vec<F>> = columns.to_vec();
    let mut b = y.to_vec();
    let two = F::lit(2.0);
    let mut diag = Vec::with_capacity(p);

    for k in 0..p {
        let norm = a[k][k..].iter().map(|&v| v * v).sum::<F>().sqrt();
        if norm == F::zero() {
            return None;
        }
        let alpha = if a[k][k] > F::zero() { -norm } else { norm };
        let mut v: Vec<F> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > F::zero() {
            for col in a.iter_mut().skip(k + 1) {
                let s = two * dot(&v, &col[k..]) / vnorm2;
                for (c, &vi) in col[k..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let s = two * dot(&v, &b[k..]) / vnorm2;
            for (c, &vi) in b[k..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        a[k][k] = alpha;
        diag.push(alpha.abs());
    }

    let max_d = diag.iter().copied().fold(F::zero(), F::max);
    let min_d = diag.iter().copied().fold(F::infinity(), F::min);
    if min_d <= F::epsilon().sqrt() * max_d {
        return None;
    }

    let mut beta = vec![F::zero(); p];
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s -= a[j][k] * beta[j];
        }
        beta[k] = s / a[k][k];
    }
    debug_assert!(n >= p);
    Some(beta)
}

fn ridge_solve<F: Scalar>(columns: &[Vec<F>], y: &[F]) -> Result<(Vec<F>, F)> {
    let p = columns.len();
    let mut gram = gram(columns);
    let trace: F = (0..p).map(|i| gram[i][i]).sum();
    let lambda = F::lit(1e-8) * trace / F::from_usize_lossy(p);
    if lambda <= F::zero() {
        return Err(Error::SingularDesign);
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += lambda;
    }
    let rhs: Vec<F> = columns.iter().map(|c| dot(c, y)).collect();
    let beta = cholesky_solve(&gram, &rhs).ok_or(Error::SingularDesign)?;
    Ok((beta, lambda))
}

/// `XᵀX` for a column-major design.
pub fn gram<F: Scalar>(columns: &[Vec<F>]) -> Vec<Vec<F>> {
    let p = columns.len();
    let mut g = vec![vec![F::zero(); p]; p];
    for i in 0..p {
        for j in i..p {
            let v = dot(&columns[i], &columns[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn cholesky_solve<F: Scalar>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let p = a.len();
    let mut l = vec![vec![F::zero(); p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<F>();
            if i == j {
                if s <= F::zero() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = vec![F::zero(); p];
    for i in 0..p {
        let s = b[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<F>();
        z[i] = s / l[i][i];
    }
    let mut x = vec![F::zero(); p];
    for i in (0..p).rev() {
        let s = z[i] - (i + 1..p).map(|k| l[k][i] * x[k]).sum::<F>();
        x[i] = s / l[i][i];
    }
    Some(x)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn spectral_radius<F: Scalar>(a: &[Vec<F>]) -> F {
    let p = a.len();
    if p == 0 {
        return F::zero();
    }
    let mut v = vec![F::one() / F::from_usize_lossy(p).sqrt(); p];
    let mut lambda = F::zero();
    for _ in 0..200 {
        let w: Vec<F> = a.iter().map(|row| dot(row, &v)).collect();
        let norm = dot(&w, &w).sqrt();
        if norm == F::zero() {
            return F::zero();
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= F::epsilon() * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_affine_fit() {
        let fit = least_squares(&[vec![0.0f64, 1.0, 2.0]], &[1.0, 3.0, 5.0]).unwrap();
        assert!((fit.intercept - 1.0).abs() < 1e-9);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-9);
        assert!(fit.ridge.is_none());
    }

    #[test]
    fn residuals_are_orthogonal_to_columns() {
        let x1: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x2: Vec<f64> = (0..40).map(|i| ((i * 3) % 13) as f64 * 0.5).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64).sin() + 0.3 * x1[i] - x2[i]).collect();
        let fit = least_squares(&[x1.clone(), x2.clone()], &y).unwrap();
        let r: Vec<f64> = (0..40)
            .map(|i| y[i] - fit.intercept - fit.coefficients[0] * x1[i] - fit.coefficients[1] * x2[i])
            .collect();
        assert!(dot(&x1, &r).abs() < 1e-8);
        assert!(dot(&x2, &r).abs() < 1e-8);
        assert!(r.iter().sum::<f64>().abs() < 1e-8);
    }

    #[test]
    fn collinear_design_falls_back_to_ridge() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let fit = least_squares(&[x.clone(), x2], &y).unwrap();
        assert!(fit.ridge.is_some());
        // Ridge splits the slope along the collinear direction: b1 + 2 b2 = 3.
        let eff = fit.coefficients[0] + 2.0 * fit.coefficients[1];
        assert!((eff - 3.0).abs() < 1e-6, "{eff}");
        assert!((fit.intercept - 1.0).abs() < 1e-6);
    }

    #[test]
    fn underdetermined_uses_ridge() {
        let fit = least_squares(&[vec![1.0, 2.0], vec![0.0, 5.0], vec![3.0, 1.0]], &[1.0, 2.0]).unwrap();
        assert!(fit.ridge.is_some());
    }

    #[test]
    fn constant_columns_get_zero_weight() {
        let fit = least_squares(&[vec![4.0f64; 5]], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(fit.coefficients, vec![0.0]);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            least_squares(&[vec![1.0, f64::NAN]], &[1.0, 2.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn cholesky_and_power_iteration() {
        let a = vec![vec![4.0f64, 1.0], vec![1.0, 3.0]];
        let x = cholesky_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
        // eigenvalues (7 ± sqrt 5) / 2
        let top = (7.0 + 5f64.sqrt()) / 2.0;
        assert!((spectral_radius(&a) - top).abs() < 1e-9);
        assert!(cholesky_solve(&[vec![0.0]], &[1.0]).is_none());
    }
}
