use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Named predictors, a response and an optional single grouping factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
    groups: Option<Vec<usize>>,
    group_labels: Vec<String>,
}

impl DesignMatrix {
    /// `rows` holds one predictor vector per observation, in `names` order.
    pub fn new(names: Vec<String>, rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                found: rows.len(),
            });
        }
        if rows.is_empty() {
            return Err(Error::Empty("design rows"));
        }
        for r in rows {
            if r.len() != names.len() {
                return Err(Error::DimensionMismatch {
                    expected: names.len(),
                    found: r.len(),
                });
            }
        }
        if rows.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InsufficientData("design contains non-finite values".into()));
        }
        let x = DMatrix::from_fn(rows.len(), names.len(), |i, j| rows[i][j]);
        Ok(DesignMatrix {
            names,
            x,
            y: DVector::from_vec(y),
            groups: None,
            group_labels: Vec::new(),
        })
    }

    /// Attaches one group label per row. Group indices follow sorted label order.
    pub fn with_groups<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: labels.len(),
            });
        }
        let mut index: BTreeMap<&str, usize> = labels.iter().map(|l| (l.as_ref(), 0)).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        self.groups = Some(labels.iter().map(|l| index[l.as_ref()]).collect());
        self.group_labels = index.keys().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn groups(&self) -> Option<&[usize]> {
        self.groups.as_deref()
    }

    pub fn group_labels(&self) -> &[String] {
        &self.group_labels
    }

    pub fn n_groups(&self) -> usize {
        self.group_labels.len()
    }

    /// Fails with the list of columns that are linear combinations of the
    /// columns before them.
    pub fn check_rank(&self) -> Result<()> {
        let dependent = dependent_columns(&self.x);
        if dependent.is_empty() {
            Ok(())
        } else {
            Err(Error::RankDeficient {
                columns: dependent.into_iter().map(|j| self.names[j].clone()).collect(),
            })
        }
    }
}

pub(crate) fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.ncols() == 0 || x.nrows() == 0 {
        return 0;
    }
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// Greedy left-to-right scan: a column is dependent when adding it does not
/// raise the rank.
pub(crate) fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    if numerical_rank(x) == x.ncols() {
        return Vec::new();
    }
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let mut trial = kept.clone();
        trial.push(j);
        let sub = x.select_columns(&trial);
        if numerical_rank(&sub) == trial.len() && column_norm(x, j) > 0.0 {
            kept.push(j);
        } else {
            dependent.push(j);
        }
    }
    dependent
}

fn column_norm(x: &DMatrix<f64>, j: usize) -> f64 {
    x.column(j).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn names_collinear_column() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, 2.0 * i as f64 + 1.0]).collect();
        let d = DesignMatrix::new(names(&["intercept", "x", "z"]), &rows, vec![0.0; 6]).unwrap();
        match d.check_rank() {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["z".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_column_is_named() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![1.0, i as f64, 0.0]).collect();
        let d = DesignMatrix::new(names(&["intercept", "x", "democrat"]), &rows, vec![0.0; 4]).unwrap();
        assert!(matches!(d.check_rank(), Err(Error::RankDeficient { columns }) if columns == ["democrat"]));
    }

    #[test]
    fn groups_are_sorted() {
        let rows = vec![vec![1.0]; 3];
        let d = DesignMatrix::new(names(&["intercept"]), &rows, vec![1.0, 2.0, 3.0])
            .unwrap()
            .with_groups(&["b", "a", "b"])
            .unwrap();
        assert_eq!(d.groups().unwrap(), &[1, 0, 1]);
        assert_eq!(d.group_labels(), &["a", "b"]);
        assert!(d.check_rank().is_ok());
    }

    #[test]
    fn shape_errors() {
        assert!(DesignMatrix::new(names(&["a"]), &[vec![1.0, 2.0]], vec![1.0]).is_err());
        assert!(DesignMatrix::new(names(&["a"]), &[vec![1.0]], vec![1.0, 2.0]).is_err());
        assert!(DesignMatrix::new(names(&["a"]), &[vec![f64::NAN]], vec![1.0]).is_err());
    }
}
