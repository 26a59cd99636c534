//! `MatrixDocument` JSON files: `{"n": 2, "re": [[..]], "im": [[..]]}`.

use std::path::Path;

use num_complex::Complex64;
use projgeo::CMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDocument {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..n)
                .map(|i| (0..n).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            n,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, String> {
        let n = self.n;
        if n == 0 {
            return Err("n must be positive".into());
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != n || part.iter().any(|r| r.len() != n) {
                return Err(format!("`{name}` must be an {n}x{n} array"));
            }
            if part.iter().flatten().any(|v| !v.is_finite()) {
                return Err(format!("`{name}` has non-finite entries"));
            }
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

/// Raw bytes and parsed matrix of a document file.
pub fn read_matrix(path: &Path) -> Result<(Vec<u8>, CMatrix), CliError> {
    let bytes = read_bytes(path)?;
    let doc: MatrixDocument = serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let m = doc.to_matrix().map_err(|message| CliError::Parse {
        path: path.display().to_string(),
        message,
    })?;
    Ok((bytes, m))
}

/// A JSON array of documents.
pub fn read_matrix_list(path: &Path) -> Result<(Vec<u8>, Vec<CMatrix>), CliError> {
    let bytes = read_bytes(path)?;
    let parse_err = |message: String| CliError::Parse {
        path: path.display().to_string(),
        message,
    };
    let docs: Vec<MatrixDocument> =
        serde_json::from_slice(&bytes).map_err(|e| parse_err(e.to_string()))?;
    let mats = docs
        .iter()
        .map(|d| d.to_matrix())
        .collect::<Result<Vec<_>, _>>()
        .map_err(parse_err)?;
    Ok((bytes, mats))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
