use nalgebra::{DMatrix, DVector};

use super::ProbeError;

/// Fitted ridge map: `Y ~ X * weights + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// p x q.
    pub weights: DMatrix<f64>,
    /// Length q.
    pub intercept: DVector<f64>,
}

impl RidgeModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x * &self.weights;
        for mut row in y.row_iter_mut() {
            row += self.intercept.transpose();
        }
        y
    }
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.iter().sum::<f64>() / n))
}

pub(crate) fn center(m: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for mut row in c.row_iter_mut() {
        row -= means.transpose();
    }
    c
}

/// Closed-form ridge regression with centered inputs and targets, so the
/// intercept is not penalized.
///
/// Solves `(Xc'Xc + alpha I) W = Xc'Yc` by Cholesky. When there are more
/// features than rows the equivalent dual system
/// `W = Xc' (Xc Xc' + alpha I)^-1 Yc` is solved instead, which is smaller.
pub fn ridge_fit(x: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<RidgeModel, ProbeError> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(ProbeError::Alignment(format!(
            "X has {n} rows but Y has {}",
            y.nrows()
        )));
    }
    if n < 2 {
        return Err(ProbeError::TooFewRows { needed: 2, got: n });
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(ProbeError::InvalidConfig(format!("alpha must be >= 0, got {alpha}")));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(ProbeError::NaNInput);
    }

    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let xc = center(x, &x_mean);
    let yc = center(y, &y_mean);
    let p = x.ncols();

    let weights = if p <= n {
        let mut a = xc.tr_mul(&xc);
        for i in 0..p {
            a[(i, i)] += alpha;
        }
        let b = xc.tr_mul(&yc);
        let chol = a.cholesky().ok_or(ProbeError::SingularSystem)?;
        chol.solve(&b)
    } else {
        let mut k = &xc * xc.transpose();
        for i in 0..n {
            k[(i, i)] += alpha;
        }
        let chol = k.cholesky().ok_or(ProbeError::SingularSystem)?;
        xc.tr_mul(&chol.solve(&yc))
    };

    if weights.iter().any(|v| !v.is_finite()) {
        return Err(ProbeError::SingularSystem);
    }
    let intercept = &y_mean - (x_mean.transpose() * &weights).transpose();
    Ok(RidgeModel { weights, intercept })
}
