//! Error and accuracy metrics over prediction/actual vectors.
//!
//! "Accuracy" for a regression target is defined here as `100 - MAPE`,
//! floored at zero. Rows whose actual value is within `ACCURACY_GUARD` of zero
//! cannot contribute a percentage error and are excluded (they still count
//! toward mse).

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ACCURACY_GUARD: f64 = 1e-9;
pub const ACCURACY_DEFINITION: &str = "100-MAPE";

fn check<F: Scalar>(pred: &[F], actual: &[F]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    if pred.iter().chain(actual).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric input"));
    }
    Ok(())
}

pub fn mse<F: Scalar>(pred: &[F], actual: &[F]) -> Result<F> {
    check(pred, actual)?;
    let sum: F = pred.iter().zip(actual).map(|(&p, &a)| (p - a) * (p - a)).sum();
    Ok(sum / F::from_usize_lossy(pred.len()))
}

pub fn rmse<F: Scalar>(pred: &[F], actual: &[F]) -> Result<F> {
    mse(pred, actual).map(Float::sqrt)
}


/// Accuracy in percent plus the number of rows excluded by the zero guard.
pub fn accuracy_with_exclusions<F: Scalar>(pred: &[F], actual: &[F]) -> Result<(F, usize)> {
    check(pred, actual)?;
    let guard = F::lit(ACCURACY_GUARD);
    let mut total = F::zero();
    let mut used = 0usize;
    for (&p, &a) in pred.iter().zip(actual) {
        if a.abs() > guard {
            total += (p - a).abs() / a.abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllRowsExcluded);
    }
    let mape = total / F::from_usize_lossy(used);
    let acc = F::lit(100.0) * (F::one() - mape).max(F::zero());
    Ok((acc, pred.len() - used))
}

pub fn accuracy<F: Scalar>(pred: &[F], actual: &[F]) -> Result<F> {
    accuracy_with_exclusions(pred, actual).map(|(a, _)| a)
}

pub fn mean_absolute_error<F: Scalar>(pred: &[F], actual: &[F]) -> Result<F> {
    check(pred, actual)?;
    let sum: F = pred.iter().zip(actual).map(|(&p, &a)| (p - a).abs()).sum();
    Ok(sum / F::from_usize_lossy(pred.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // ((3.6-3.8)^2 + (4.0-4.1)^2) / 2 = (0.04 + 0.01) / 2
        assert!((mse(&[3.6, 4.0], &[3.8, 4.1]).unwrap() - 0.025).abs() < 1e-12);
        let c = 0.75;
        let y = [1.0, -2.0, 5.0];
        let p: Vec<f64> = y.iter().map(|v| v + c).collect();
        assert!((mse(&p, &y).unwrap() - c * c).abs() < 1e-12);
    }

    #[test]
    fn mse_errors() {
        assert!(matches!(mse::<f64>(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[2.0, 3.0], &[2.0, 3.0]).unwrap(), 100.0);
        assert!((accuracy(&[4.0], &[5.0]).unwrap() - 80.0).abs() < 1e-12);
        assert_eq!(accuracy(&[15.0], &[5.0]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_guard() {
        let (acc, excluded) = accuracy_with_exclusions(&[4.0, 1.0], &[5.0, 0.0]).unwrap();
        assert!((acc - 80.0).abs() < 1e-12);
        assert_eq!(excluded, 1);
        assert!(matches!(accuracy(&[1.0], &[0.0]), Err(Error::AllRowsExcluded)));
    }

    proptest! {
        #[test]
        fn scale_laws(
            pairs in prop::collection::vec((-50.0f64..50.0, 0.5f64..50.0), 1..40),
            a in 0.01f64..100.0,
        ) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let y: Vec<f64> = pairs.iter().map(|x| x.1).collect();
            let ps: Vec<f64> = p.iter().map(|v| v * a).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * a).collect();
            let m = mse(&p, &y).unwrap();
            prop_assert!((mse(&ps, &ys).unwrap() - a * a * m).abs() <= 1e-9 * (1.0 + a * a * m));
            prop_assert!((rmse(&p, &y).unwrap() - m.sqrt()).abs() <= 1e-12);
            let acc = accuracy(&p, &y).unwrap();
            prop_assert!((0.0..=100.0).contains(&acc));
            prop_assert!((accuracy(&ps, &ys).unwrap() - acc).abs() < 1e-9);
        }
    }
}
