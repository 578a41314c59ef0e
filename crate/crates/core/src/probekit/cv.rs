use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::r2_score;
use super::ridge::{column_means, ridge_fit};
use super::{ProbeConfig, ProbeError};
use crate::seed::derive_seed;

pub(crate) fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Seeded shuffle, first `round(n * train_fraction)` rows train. Both halves
/// are returned in ascending order.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1.min(n), n.saturating_sub(1));
    let idx = shuffled(n, seed);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Seeded shuffle cut into `k` contiguous blocks. The first `n % k` folds get
/// one extra row.
pub fn fold_partition(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let idx = shuffled(n, seed);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(idx[start..start + size].to_vec());
        start += size;
    }
    folds
}

pub(crate) fn take_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Fits on the training rows and predicts the evaluation rows. With
/// `standardize`, X columns are scaled by their training standard deviation
/// (constant columns left as is) before the fit.
pub fn fit_predict(
    x_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    x_eval: &DMatrix<f64>,
    alpha: f64,
    standardize: bool,
) -> Result<DMatrix<f64>, ProbeError> {
    if !standardize {
        return Ok(ridge_fit(x_train, y_train, alpha)?.predict(x_eval));
    }
    let means = column_means(x_train);
    let n = x_train.nrows() as f64;
    let scales: Vec<f64> = x_train
        .column_iter()
        .zip(means.iter())
        .map(|(c, m)| {
            let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let scale = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / scales[j]);
    Ok(ridge_fit(&scale(x_train), y_train, alpha)?.predict(&scale(x_eval)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub cv_score: f64,
    /// Mean validation R² for every grid value, in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// k-fold cross-validated choice of alpha. Ties go to the larger alpha.
pub fn select_alpha(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    config: &ProbeConfig,
) -> Result<AlphaSelection, ProbeError> {
    config.validate()?;
    let n = x.nrows();
    if n < config.folds {
        return Err(ProbeError::TooFewRows {
            needed: config.folds,
            got: n,
        });
    }
    let folds = fold_partition(n, config.folds, derive_seed(config.seed, "folds"));
    let splits: Vec<(Vec<usize>, &Vec<usize>)> = folds
        .iter()
        .enumerate()
        .map(|(f, val)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect();
            (train, val)
        })
        .collect();

    let mut scores = Vec::with_capacity(config.alpha_grid.len());
    for &alpha in &config.alpha_grid {
        let mut sum = 0.0;
        for (train, val) in &splits {
            let pred = fit_predict(
                &take_rows(x, train),
                &take_rows(y, train),
                &take_rows(x, val),
                alpha,
                config.standardize,
            )?;
            sum += r2_score(&take_rows(y, val), &pred).value;
        }
        scores.push((alpha, sum / splits.len() as f64));
    }

    let (alpha, cv_score) = scores
        .iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1 > best.1 || (cur.1 == best.1 && cur.0 > best.0) {
                cur
            } else {
                best
            }
        })
        .expect("validated grid is non-empty");
    Ok(AlphaSelection {
        alpha,
        cv_score,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn split_sizes_and_disjointness() {
        let (train, test) = train_test_split(100, 0.75, 4);
        assert_eq!((train.len(), test.len()), (75, 25));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(train_test_split(100, 0.75, 4), (train, test));
        let (tr, te) = train_test_split(2, 0.99, 1);
        assert_eq!((tr.len(), te.len()), (1, 1));
    }

    #[test]
    fn folds_distribute_remainder_from_front() {
        let folds = fold_partition(23, 10, 9);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn single_alpha_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(30, 3, |_, _| rng.random::<f64>());
        let y = DMatrix::from_fn(30, 1, |_, _| rng.random::<f64>());
        let cfg = ProbeConfig {
            alpha_grid: vec![0.7],
            ..ProbeConfig::default()
        };
        assert_eq!(select_alpha(&x, &y, &cfg).unwrap().alpha, 0.7);
    }

    #[test]
    fn ties_prefer_larger_alpha() {
        // Constant target: every alpha predicts the fold mean and scores
        // identically, so the largest must win.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = DMatrix::from_fn(40, 2, |_, _| rng.random::<f64>());
        let y = DMatrix::from_element(40, 1, 2.0);
        let sel = select_alpha(&x, &y, &ProbeConfig::default()).unwrap();
        assert_eq!(sel.alpha, 100.0);
        assert_eq!(sel.cv_score, 0.0);
    }

    #[test]
    fn noiseless_linear_target_scores_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = DMatrix::from_fn(200, 4, |_, _| rng.random_range(-1.0..1.0));
        let w = DMatrix::from_column_slice(4, 1, &[1.5, -2.0, 0.5, 3.0]);
        let y = &x * &w;
        let sel = select_alpha(&x, &y, &ProbeConfig::default()).unwrap();
        let smallest = sel.scores[0];
        assert_eq!(smallest.0, 1e-3);
        assert!(smallest.1 > 0.99, "{smallest:?}");
        assert!(sel.cv_score > 0.99);
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::zeros(5, 1);
        assert!(matches!(
            select_alpha(&x, &x, &ProbeConfig::default()),
            Err(ProbeError::TooFewRows { needed: 10, got: 5 })
        ));
    }

    #[test]
    fn standardized_fit_is_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = DMatrix::from_fn(30, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(30, 1, |_, _| rng.random_range(-1.0..1.0));
        let big = &x * 1000.0;
        let a = fit_predict(&x, &y, &x, 1.0, true).unwrap();
        let b = fit_predict(&big, &y, &big, 1.0, true).unwrap();
        assert!((a - b).abs().max() < 1e-9);
    }
}
