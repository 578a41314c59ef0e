use nalgebra::DMatrix;

/// Coefficient of determination, averaged uniformly over target columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2Score {
    pub value: f64,
    /// Columns whose true values have zero variance; each contributed 0.
    pub zero_variance_columns: usize,
}

/// Per column `1 - SS_res / SS_tot`, with `SS_tot` taken about the mean of
/// `y_true` itself. Constant columns score 0 and are counted.
pub fn r2_score(y_true: &DMatrix<f64>, y_pred: &DMatrix<f64>) -> R2Score {
    assert_eq!(y_true.shape(), y_pred.shape(), "r2_score shape mismatch");
    let n = y_true.nrows() as f64;
    let q = y_true.ncols();
    let mut total = 0.0;
    let mut zero_var = 0;
    for j in 0..q {
        let col = y_true.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let ss_tot: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let ss_res: f64 = col
            .iter()
            .zip(y_pred.column(j).iter())
            .map(|(t, p)| (t - p) * (t - p))
            .sum();
        if ss_tot == 0.0 {
            zero_var += 1;
        } else {
            total += 1.0 - ss_res / ss_tot;
        }
    }
    R2Score {
        value: if q == 0 { 0.0 } else { total / q as f64 },
        zero_variance_columns: zero_var,
    }
}

/// Pearson correlation. `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "pearson length mismatch");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
