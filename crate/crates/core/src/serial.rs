//! JSON shapes for complex matrices: rows of `{re, im}` objects.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qops::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<ComplexJson>>);

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson(
            m.row_iter()
                .map(|row| row.iter().map(|z| ComplexJson { re: z.re, im: z.im }).collect())
                .collect(),
        )
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.0.len();
        if d == 0 || self.0.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidConfig("matrix must be square and non-empty".into()));
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            let z = self.0[i][j];
            Complex64::new(z.re, z.im)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::{pauli, Axis};

    #[test]
    fn matrix_json_shape() {
        let m = pauli(Axis::Y);
        let json = serde_json::to_string(&MatrixJson::from(&m)).unwrap();
        assert_eq!(json, r#"[[{"re":0.0,"im":0.0},{"re":-0.0,"im":-1.0}],[{"re":0.0,"im":1.0},{"re":0.0,"im":0.0}]]"#);
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
        assert!(MatrixJson(vec![vec![ComplexJson { re: 1.0, im: 0.0 }; 2]]).to_matrix().is_err());
    }
}
