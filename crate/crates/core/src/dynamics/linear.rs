use nalgebra::{DMatrix, DVector};

use super::Dynamics;
use crate::error::{Error, Result};

/// `x_{t+1} = a·x_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScalar {
    a: f64,
}

impl LinearScalar {
    pub fn new(a: f64) -> Self {
        Self { a }
    }

    pub fn gain(&self) -> f64 {
        self.a
    }
}

impl Dynamics for LinearScalar {
    fn name(&self) -> &str {
        "linear_scalar"
    }

    fn dim(&self) -> usize {
        1
    }

    fn input_dim(&self) -> usize {
        0
    }

    fn update(&self, x: &[f64], _d: &[f64], _t: usize) -> Vec<f64> {
        vec![self.a * x[0]]
    }
}

/// `x_{t+1} = A x_t + B d_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMatrix {
    a: DMatrix<f64>,
    b: Option<DMatrix<f64>>,
}

impl LinearMatrix {
    pub fn new(a: DMatrix<f64>, b: Option<DMatrix<f64>>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidSet(format!(
                "state matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(b) = &b {
            if b.nrows() != a.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: a.nrows(),
                    found: b.nrows(),
                });
            }
        }
        if a.iter().chain(b.iter().flat_map(|b| b.iter())).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet("matrix entries must be finite".into()));
        }
        Ok(Self { a, b })
    }

    /// Builds from row-major nested vectors.
    pub fn from_rows(a: &[Vec<f64>], b: Option<&[Vec<f64>]>) -> Result<Self> {
        fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::InvalidSet("ragged matrix rows".into()));
            }
            Ok(DMatrix::from_row_iterator(
                rows.len(),
                ncols,
                rows.iter().flat_map(|r| r.iter().copied()),
            ))
        }
        Self::new(to_matrix(a)?, b.map(to_matrix).transpose()?)
    }

    /// `‖A‖₂`.
    pub fn state_gain(&self) -> f64 {
        spectral_norm(&self.a)
    }

    /// `‖B‖₂`, zero without inputs.
    pub fn input_gain(&self) -> f64 {
        self.b.as_ref().map_or(0.0, spectral_norm)
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

impl Dynamics for LinearMatrix {
    fn name(&self) -> &str {
        "linear_matrix"
    }

    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.as_ref().map_or(0, |b| b.ncols())
    }

    fn update(&self, x: &[f64], d: &[f64], _t: usize) -> Vec<f64> {
        let mut next = &self.a * DVector::from_column_slice(x);
        if let Some(b) = &self.b {
            next += b * DVector::from_column_slice(d);
        }
        next.as_slice().to_vec()
    }
}
