//! Seeded train/test splitting.

use super::matrix::Matrix;
use super::rng::Rng;
use crate::error::{Result, ScfeError};

/// Shuffles row indices with `rng` and takes the first `n_test` rows as the
/// test set. The two parts are disjoint and together contain every input row.
#[allow(clippy::type_complexity)]
pub fn seeded_shuffle_split(
    data: &Matrix,
    labels: &[usize],
    n_test: usize,
    rng: &mut Rng,
) -> Result<((Matrix, Vec<usize>), (Matrix, Vec<usize>))> {
    let n = data.rows();
    if labels.len() != n {
        return Err(ScfeError::dim(format!(
            "{} rows but {} labels",
            n,
            labels.len()
        )));
    }
    if n_test >= n {
        return Err(ScfeError::invalid(format!(
            "n_test = {} must be smaller than n = {}",
            n_test, n
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let take = |idx: &[usize]| -> Result<(Matrix, Vec<usize>)> {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| data.row(i).to_vec()).collect();
        let labs: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        Ok((Matrix::from_rows(&rows)?, labs))
    };
    let test = take(&perm[..n_test])?;
    let train = take(&perm[n_test..])?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Matrix, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (10 + i) as f64]).collect();
        (Matrix::from_rows(&rows).unwrap(), vec![0, 1, 0, 1, 0])
    }

    #[test]
    fn partition_preserves_the_multiset() {
        let (data, labels) = toy();
        let mut rng = Rng::new(1);
        let ((train_x, train_y), (test_x, test_y)) =
            seeded_shuffle_split(&data, &labels, 2, &mut rng).unwrap();
        assert_eq!(train_x.rows(), 3);
        assert_eq!(test_x.rows(), 2);
        let mut seen: Vec<(i64, usize)> = train_x
            .row_iter()
            .zip(&train_y)
            .chain(test_x.row_iter().zip(&test_y))
            .map(|(r, &y)| (r[0] as i64, y))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![(0, 0), (1, 1), (2, 0), (3, 1), (4, 0)]);
    }

    #[test]
    fn same_seed_same_split() {
        let (data, labels) = toy();
        let a = seeded_shuffle_split(&data, &labels, 2, &mut Rng::new(9)).unwrap();
        let b = seeded_shuffle_split(&data, &labels, 2, &mut Rng::new(9)).unwrap();
        assert_eq!(a.1 .0.data(), b.1 .0.data());
        assert_eq!(a.1 .1, b.1 .1);
        assert_eq!(a.0 .0.data(), b.0 .0.data());
    }

    #[test]
    fn different_seeds_usually_differ() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let labels = vec![0usize; 30];
        let mut distinct = std::collections::HashSet::new();
        for seed in 0..10 {
            let (_, (test_x, _)) =
                seeded_shuffle_split(&data, &labels, 5, &mut Rng::new(seed)).unwrap();
            let key: Vec<i64> = test_x.row_iter().map(|r| r[0] as i64).collect();
            distinct.insert(key);
        }
        assert!(distinct.len() >= 9, "only {} distinct splits", distinct.len());
    }

    #[test]
    fn oversized_test_request_is_an_error() {
        let (data, labels) = toy();
        assert!(seeded_shuffle_split(&data, &labels, 5, &mut Rng::new(0)).is_err());
    }
}
