//! Train-median imputation with optional missingness masks.

use log::warn;
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::trends::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub columns: Vec<String>,
    pub medians: Vec<f64>,
}

/// Column medians over the non-missing (non-NaN) values of `train`.
pub fn fit_imputer(columns: &[String], train: ArrayView2<f64>) -> Result<Imputer> {
    if columns.len() != train.ncols() {
        return Err(Error::Shape(format!("{} names for {} columns", columns.len(), train.ncols())));
    }
    let medians = train
        .columns()
        .into_iter()
        .zip(columns)
        .map(|(col, name)| {
            let mut v: Vec<f64> = col.iter().copied().filter(|x| !x.is_nan()).collect();
            if v.is_empty() {
                warn!("column {name} has no observed training value; imputing 0");
                return 0.0;
            }
            v.sort_by(f64::total_cmp);
            median(&v).expect("non-empty")
        })
        .collect();
    Ok(Imputer {
        columns: columns.to_vec(),
        medians,
    })
}

impl Imputer {
    /// Fills NaNs with the fitted medians. The mask, when requested, is 1
    /// exactly where a value was replaced.
    pub fn apply(
        &self,
        columns: &[String],
        x: ArrayView2<f64>,
        mask_columns: bool,
    ) -> Result<(Array2<f64>, Option<Array2<f64>>)> {
        if columns != self.columns.as_slice() {
            let diff = columns
                .iter()
                .zip(&self.columns)
                .find(|(a, b)| a != b)
                .map(|(a, b)| format!("`{a}` where `{b}` was fitted"))
                .unwrap_or_else(|| format!("{} columns, {} fitted", columns.len(), self.columns.len()));
            return Err(Error::Mismatch(format!("imputer columns differ: {diff}")));
        }
        if x.ncols() != self.columns.len() {
            return Err(Error::Shape(format!("{} columns, imputer has {}", x.ncols(), self.columns.len())));
        }
        let mut filled = x.to_owned();
        let mut mask = mask_columns.then(|| Array2::zeros(x.raw_dim()));
        for ((i, j), v) in filled.indexed_iter_mut() {
            if v.is_nan() {
                *v = self.medians[j];
                if let Some(m) = mask.as_mut() {
                    m[[i, j]] = 1.0;
                }
            }
        }
        Ok((filled, mask))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn medians() {
        let x = array![[1.0, 5.0, f64::NAN], [2.0, f64::NAN, f64::NAN], [f64::NAN, f64::NAN, f64::NAN], [4.0, f64::NAN, f64::NAN]];
        let imp = fit_imputer(&names(3), x.view()).unwrap();
        assert_eq!(imp.medians, [2.0, 5.0, 0.0]);
        let x = array![[1.0], [2.0], [3.0], [10.0]];
        assert_eq!(fit_imputer(&names(1), x.view()).unwrap().medians, [2.5]);
    }

    #[test]
    fn uses_train_medians_and_masks() {
        let train = array![[1.0], [2.0], [3.0]];
        let imp = fit_imputer(&names(1), train.view()).unwrap();
        let val = array![[100.0], [f64::NAN], [200.0]];
        let (filled, mask) = imp.apply(&names(1), val.view(), true).unwrap();
        assert_eq!(filled, array![[100.0], [2.0], [200.0]]);
        assert_eq!(mask.unwrap(), array![[0.0], [1.0], [0.0]]);
        let (same, mask) = imp.apply(&names(1), train.view(), false).unwrap();
        assert_eq!(same, train);
        assert!(mask.is_none());
    }

    #[test]
    fn name_mismatch() {
        let imp = fit_imputer(&names(1), array![[1.0]].view()).unwrap();
        assert!(imp.apply(&["x".to_string()], array![[1.0]].view(), true).is_err());
    }
}
