//! Wire formats: the matrix envelope shared by every command and the Jordan
//! data accepted by the rank-one joint dilation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ensure_finite, DenseMatrix, C64};
use crate::tensor::TensorSpace;

/// `{"rows": R, "cols": C, "re": [[..]], "im": [[..]]}` with an optional
/// `"dims"` factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        let rows = m.nrows();
        let cols = m.ncols();
        Self {
            rows,
            cols,
            re: (0..rows)
                .map(|i| (0..cols).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..rows)
                .map(|i| (0..cols).map(|j| m[(i, j)].im).collect())
                .collect(),
            dims: None,
        }
    }

    pub fn with_space(mut self, space: &TensorSpace) -> Self {
        self.dims = Some(space.dims().to_vec());
        self
    }

    pub fn to_matrix(&self) -> Result<DenseMatrix> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Json(format!(
                "shape {}x{} must be positive",
                self.rows, self.cols
            )));
        }
        for (part, data) in [("re", &self.re), ("im", &self.im)] {
            if data.len() != self.rows {
                return Err(Error::Json(format!(
                    "\"{part}\" has {} rows, expected {}",
                    data.len(),
                    self.rows
                )));
            }
            if let Some((i, row)) = data.iter().enumerate().find(|(_, r)| r.len() != self.cols) {
                return Err(Error::Json(format!(
                    "\"{part}\" row {i} has {} entries, expected {}",
                    row.len(),
                    self.cols
                )));
            }
        }
        let m = DenseMatrix::from_fn(self.rows, self.cols, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        });
        ensure_finite(&m).map_err(|e| Error::Json(e.to_string()))?;
        Ok(m)
    }

    pub fn space(&self) -> Result<Option<TensorSpace>> {
        match &self.dims {
            None => Ok(None),
            Some(dims) => {
                let space = TensorSpace::new(dims.clone())?;
                if space.total() != self.rows || self.rows != self.cols {
                    return Err(Error::Json(format!(
                        "dims {dims:?} do not factor a {}x{} matrix",
                        self.rows, self.cols
                    )));
                }
                Ok(Some(space))
            }
        }
    }
}

pub fn matrix_to_json(m: &DenseMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("matrix serializes")
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    serde_json::from_str::<MatrixJson>(text)?.to_matrix()
}

/// One Jordan block `J_size(re + i im)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JordanBlockJson {
    pub re: f64,
    pub im: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JordanSpecJson {
    pub blocks: Vec<JordanBlockJson>,
    #[serde(default)]
    pub basis: Option<MatrixJson>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_envelope() {
        let m = parse_matrix(r#"{"rows":1,"cols":2,"re":[[1,2]],"im":[[0,-1]]}"#).unwrap();
        assert_eq!(m[(0, 1)], C64::new(2.0, -1.0));
    }

    #[test]
    fn rejects_shape_mismatch() {
        let err = parse_matrix(r#"{"rows":2,"cols":2,"re":[[1,2]],"im":[[0,0]]}"#).unwrap_err();
        assert!(err.to_string().contains("\"re\" has 1 rows"));
        let err =
            parse_matrix(r#"{"rows":1,"cols":2,"re":[[1,2]],"im":[[0]]}"#).unwrap_err();
        assert!(err.to_string().contains("\"im\" row 0"));
    }

    #[test]
    fn rejects_missing_imaginary_part_and_nulls() {
        assert!(parse_matrix(r#"{"rows":1,"cols":1,"re":[[1]]}"#).is_err());
        assert!(parse_matrix(r#"{"rows":1,"cols":1,"re":[[null]],"im":[[0]]}"#).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let j = MatrixJson {
            rows: 1,
            cols: 1,
            re: vec![vec![f64::INFINITY]],
            im: vec![vec![0.0]],
            dims: None,
        };
        assert!(j.to_matrix().is_err());
    }

    #[test]
    fn dims_must_factor_the_matrix() {
        let text = r#"{"rows":4,"cols":4,"re":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
                      "im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],"dims":[2,3]}"#;
        let j: MatrixJson = serde_json::from_str(text).unwrap();
        assert!(j.space().is_err());
    }
}
