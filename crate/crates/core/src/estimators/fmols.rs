use nalgebra::{DMatrix, DVector};

use super::longrun::{longrun_covariance, Bandwidth, LongRunCov};
use crate::error::{Error, Result};

/// Fully modified OLS estimate and its variance.
#[derive(Clone, Debug, PartialEq)]
pub struct FmOlsFit {
    pub beta: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl FmOlsFit {
    /// t-ratio (beta_0 - null) / sqrt(V_00).
    pub fn t_stat(&self, null: f64) -> Result<f64> {
        let var = self.v[(0, 0)];
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::Degenerate(format!("FM-OLS variance is {var}")));
        }
        Ok((self.beta[0] - null) / var.sqrt())
    }
}

/// First differences with x_0 = 0.
fn differences(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut dx = x.clone();
    for t in (1..x.nrows()).rev() {
        for j in 0..x.ncols() {
            dx[(t, j)] = x[(t, j)] - x[(t - 1, j)];
        }
    }
    dx
}

/// FM-OLS of `y` on the columns of `x`.
///
/// `lrcov` must describe eta_t = (u_t, dx_t^T)^T in that order: index 0 is
/// the regression error and indices 1..=d the regressor increments.
pub fn fm_ols(y: &[f64], x: &DMatrix<f64>, lrcov: &LongRunCov) -> Result<FmOlsFit> {
    let (n, d) = x.shape();
    if y.len() != n || n == 0 {
        return Err(Error::Domain(format!("y has {} values but X has {n} rows", y.len())));
    }
    if lrcov.omega.shape() != (d + 1, d + 1) {
        return Err(Error::Contract(format!("long-run covariance must be {0}x{0}", d + 1)));
    }
    let omega22 = lrcov.omega.view((1, 1), (d, d)).into_owned();
    let omega21 = lrcov.omega.view((1, 0), (d, 1)).into_owned();
    let delta21 = lrcov.delta.view((1, 0), (d, 1)).into_owned();
    let delta22 = lrcov.delta.view((1, 1), (d, d)).into_owned();
    let omega22_inv = omega22
        .try_inverse()
        .ok_or_else(|| Error::Singular("long-run covariance of the regressor increments".into()))?;
    let a = &omega22_inv * &omega21;
    let delta_plus = delta21 - delta22 * &a;

    let dx = differences(x);
    let y = DVector::from_column_slice(y);
    let y_plus = y - dx * &a;
    let sxx = x.transpose() * x;
    let sxx_inv = sxx.try_inverse().ok_or_else(|| Error::Singular("regressor moment matrix".into()))?;
    let rhs = x.transpose() * y_plus - delta_plus * n as f64;
    let beta = &sxx_inv * rhs;
    let omega11_2 = lrcov.omega[(0, 0)] - (omega21.transpose() * &a)[(0, 0)];
    Ok(FmOlsFit { beta: DVector::from_column_slice(beta.as_slice()), v: sxx_inv * omega11_2 })
}

/// FM-OLS with the long-run covariance estimated from first-stage OLS
/// residuals and regressor increments.
pub fn fm_ols_fit(y: &[f64], x: &DMatrix<f64>, bandwidth: Bandwidth) -> Result<FmOlsFit> {
    let (n, d) = x.shape();
    if y.len() != n || n == 0 {
        return Err(Error::Domain(format!("y has {} values but X has {n} rows", y.len())));
    }
    let yv = DVector::from_column_slice(y);
    let sxx_inv = (x.transpose() * x).try_inverse().ok_or_else(|| Error::Singular("regressor moment matrix".into()))?;
    let b_ols = sxx_inv * x.transpose() * &yv;
    let u = yv - x * b_ols;
    let dx = differences(x);
    let mut eta = DMatrix::zeros(n, d + 1);
    eta.set_column(0, &u);
    eta.view_mut((0, 1), (n, d)).copy_from(&dx);
    let lr = longrun_covariance(&eta, bandwidth)?;
    fm_ols(y, x, &lr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Channel, DrawSource, StreamKey, StreamSource};
    use approx::assert_relative_eq;

    #[test]
    fn zero_corrections_reduce_to_ols() {
        let mut s = StreamSource::new(StreamKey::root(4));
        let n = 120;
        let z = s.normals(Channel::Auxiliary, 3 * n).unwrap();
        let mut x = DMatrix::zeros(n, 2);
        let (mut a, mut b) = (0.0, 0.0);
        for t in 0..n {
            a += z[t];
            b += z[n + t];
            x[(t, 0)] = a;
            x[(t, 1)] = b;
        }
        let y: Vec<f64> = (0..n).map(|t| 0.3 * x[(t, 0)] - 0.7 * x[(t, 1)] + z[2 * n + t]).collect();
        // omega_21 = 0 and delta_21 = 0: no endogeneity or serial correction.
        let lambda = DMatrix::from_row_slice(3, 3, &[0.1, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.1, 0.2]);
        let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.1, 0.0, 0.1, 1.0]);
        let lr = LongRunCov::from_parts(lambda, sigma, 3);
        assert_eq!(lr.omega.view((1, 0), (2, 1)).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        let fm = fm_ols(&y, &x, &lr).unwrap();
        let yv = DVector::from_column_slice(&y);
        let ols = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * yv;
        for j in 0..2 {
            assert_relative_eq!(fm.beta[j], ols[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn singular_omega22_is_reported() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let lr = LongRunCov::from_parts(DMatrix::zeros(2, 2), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), 0);
        assert!(matches!(fm_ols(&[0.0; 4], &x, &lr), Err(Error::Singular(_))));
    }

    #[test]
    fn differences_start_from_zero() {
        let x = DMatrix::from_column_slice(3, 1, &[2.0, 5.0, 4.0]);
        assert_eq!(differences(&x).as_slice(), &[2.0, 3.0, -1.0]);
    }
}
