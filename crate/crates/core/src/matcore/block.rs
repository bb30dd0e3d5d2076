//! 2x2 block assembly/extraction and partial traces.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Four square blocks of one common dimension, arranged as
/// `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Block2x2 {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
}

impl Block2x2 {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix, d: ComplexMatrix) -> Result<Self> {
        let dim = a.rows();
        for m in [&a, &b, &c, &d] {
            if !m.is_square() {
                return Err(Error::NonSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            if m.rows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("{dim}x{dim} blocks"),
                    found: format!("{}x{}", m.rows(), m.cols()),
                });
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Common block dimension.
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// The assembled 2d x 2d matrix.
    pub fn assemble(&self) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_fn(2 * d, 2 * d, |i, j| {
            let block = match (i < d, j < d) {
                (true, true) => &self.a,
                (true, false) => &self.b,
                (false, true) => &self.c,
                (false, false) => &self.d,
            };
            block[(i % d, j % d)]
        })
    }

    /// Split a square matrix of dimension 2d into its four d x d blocks.
    pub fn extract(m: &ComplexMatrix, d: usize) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if d == 0 || m.rows() != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} (2d with d = {d})", 2 * d, 2 * d),
                found: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        let block = |ri: usize, ci: usize| {
            ComplexMatrix::from_fn(d, d, |i, j| m[(ri * d + i, ci * d + j)])
        };
        Ok(Self {
            a: block(0, 0),
            b: block(0, 1),
            c: block(1, 0),
            d: block(1, 1),
        })
    }
}

/// Which tensor factor `partial_trace` removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    First,
    Second,
}

/// Partial trace of a matrix on C^{d1} (x) C^{d2}, removing the chosen factor.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), side: TraceSide) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    let total = d1 * d2;
    if !m.is_square() || m.rows() != total {
        return Err(Error::DimensionMismatch {
            expected: format!("{total}x{total}"),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    Ok(match side {
        TraceSide::Second => ComplexMatrix::from_fn(d1, d1, |r, c| {
            (0..d2)
                .map(|k| m[(r * d2 + k, c * d2 + k)])
                .sum::<Complex64>()
        }),
        TraceSide::First => ComplexMatrix::from_fn(d2, d2, |r, c| {
            (0..d1)
                .map(|k| m[(k * d2 + r, k * d2 + c)])
                .sum::<Complex64>()
        }),
    })
}
