//! Small dense square matrices in row-major order.
//!
//! The coefficient matrix and the basis integral table are tiny (at most
//! 51x51), so plain contiguous storage with hand-written loops beats any
//! general linear algebra machinery in the per-observation hot path.

/// A dense `dim x dim` matrix of `f64` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Builds a matrix from row-major data. Panics if the length is not `dim * dim`.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data length mismatch");
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.dim..(row + 1) * self.dim]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `out = self * x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, out_r) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            let mut acc = 0.0;
            for (m, &xv) in row.iter().zip(x.iter()) {
                acc += m * xv;
            }
            *out_r = acc;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}
