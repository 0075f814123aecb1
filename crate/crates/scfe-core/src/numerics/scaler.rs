//! Per-feature min-max scaling to [0, 1].

use super::matrix::Matrix;
use crate::error::{Result, ScfeError};

/// Affine per-feature map x -> (x - min) / (max - min).
///
/// Degenerate features (max == min) map to 0. Unseen data outside the fitted
/// range is clamped into [0, 1] so downstream box constraints stay meaningful.
#[derive(Debug, Clone)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Matrix) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(ScfeError::invalid("cannot fit scaler on empty matrix"));
        }
        let d = data.cols();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in data.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn transform_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.min.len() {
            return Err(ScfeError::dim(format!(
                "scaler fitted on {} features, got {}",
                self.min.len(),
                x.len()
            )));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.max[j] - self.min[j];
                if range == 0.0 {
                    0.0
                } else {
                    ((v - self.min[j]) / range).clamp(0.0, 1.0)
                }
            })
            .collect())
    }

    pub fn transform(&self, data: &Matrix) -> Result<Matrix> {
        let rows: Result<Vec<Vec<f64>>> = data.row_iter().map(|r| self.transform_vec(r)).collect();
        Matrix::from_rows(&rows?)
    }

    pub fn inverse_transform_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.min.len() {
            return Err(ScfeError::dim(format!(
                "scaler fitted on {} features, got {}",
                self.min.len(),
                x.len()
            )));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| self.min[j] + v * (self.max[j] - self.min[j]))
            .collect())
    }
}

/// Fits a scaler and returns it together with the transformed data.
pub fn minmax_fit_transform(data: &Matrix) -> Result<(MinMaxScaler, Matrix)> {
    let scaler = MinMaxScaler::fit(data)?;
    let scaled = scaler.transform(data)?;
    Ok((scaler, scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn maps_endpoints_to_unit_interval() {
        let data = Matrix::from_rows(&[vec![2.0], vec![4.0], vec![6.0]]).unwrap();
        let (_, scaled) = minmax_fit_transform(&data).unwrap();
        assert_eq!(scaled.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let data = Matrix::from_rows(&[vec![3.0], vec![3.0]]).unwrap();
        let (_, scaled) = minmax_fit_transform(&data).unwrap();
        assert_eq!(scaled.data(), &[0.0, 0.0]);
    }

    #[test]
    fn unseen_data_is_clamped() {
        let data = Matrix::from_rows(&[vec![0.0], vec![10.0]]).unwrap();
        let (scaler, _) = minmax_fit_transform(&data).unwrap();
        assert_eq!(scaler.transform_vec(&[-5.0]).unwrap(), vec![0.0]);
        assert_eq!(scaler.transform_vec(&[15.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let data = Matrix::zeros(0, 3);
        assert!(MinMaxScaler::fit(&data).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_identity_on_nondegenerate_features(
            lo in -100.0f64..100.0,
            span in 0.5f64..100.0,
            xs in proptest::collection::vec(0.0f64..1.0, 3..20),
        ) {
            let raw: Vec<Vec<f64>> = xs.iter().map(|&u| vec![lo + span * u]).collect();
            let data = Matrix::from_rows(&raw).unwrap();
            let (scaler, scaled) = minmax_fit_transform(&data).unwrap();
            for (orig, row) in raw.iter().zip(scaled.row_iter()) {
                prop_assert!((0.0..=1.0).contains(&row[0]));
                let back = scaler.inverse_transform_vec(row).unwrap();
                prop_assert!((back[0] - orig[0]).abs() < 1e-12 * span.max(1.0));
            }
        }
    }
}
