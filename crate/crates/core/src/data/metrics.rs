use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

pub fn rmse(y: &DVector<f64>, y_hat: &DVector<f64>) -> Result<f64> {
    check_dim(y.len(), y_hat.len())?;
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(((y - y_hat).norm_squared() / y.len() as f64).sqrt())
}

/// Per-sample choice of whichever prediction is closer to `y`; ties go to the
/// target-only prediction.
pub fn oracle_predict(y: &DVector<f64>, y_hat_t: &DVector<f64>, y_hat_k: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(y.len(), y_hat_t.len())?;
    check_dim(y.len(), y_hat_k.len())?;
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(DVector::from_fn(y.len(), |i, _| {
        if (y[i] - y_hat_k[i]).powi(2) < (y[i] - y_hat_t[i]).powi(2) {
            y_hat_k[i]
        } else {
            y_hat_t[i]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(rmse(&v(&[0.0, 0.0]), &v(&[1.0, -1.0])).unwrap(), 1.0);
        assert_eq!(rmse(&v(&[2.0, 3.0]), &v(&[2.0, 3.0])).unwrap(), 0.0);
        assert_eq!(rmse(&v(&[]), &v(&[])), Err(Error::EmptyInput));
        assert!(matches!(rmse(&v(&[1.0]), &v(&[1.0, 2.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn oracle_picks_closer() {
        let y = v(&[0.0, 0.0, 5.0]);
        let t = v(&[1.0, -3.0, 5.0]);
        let k = v(&[2.0, 0.5, 4.0]);
        assert_eq!(oracle_predict(&y, &t, &k).unwrap(), v(&[1.0, 0.5, 5.0]));
    }
}
