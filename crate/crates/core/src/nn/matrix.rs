//! Dense row-major `f64` matrices and the handful of products the network needs.
//!
//! Products go through `matrixmultiply::dgemm`. Each output element is reduced
//! over the inner dimension in a fixed order independent of its position in
//! the output, so a row evaluated alone is bit-identical to the same row
//! evaluated inside a larger batch.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dim(
                "Matrix::from_vec",
                format!("{rows}x{cols} = {} values", rows * cols),
                values.len(),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!("Matrix::from_rows row {i}"), cols, r.len()));
            }
            values.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

/// Operand with an optional transpose, backed by a row-major matrix.
#[derive(Clone, Copy)]
pub(crate) enum Op<'a> {
    N(&'a Matrix),
    T(&'a Matrix),
}

impl Op<'_> {
    fn dims(&self) -> (usize, usize) {
        match self {
            Op::N(m) => (m.rows, m.cols),
            Op::T(m) => (m.cols, m.rows),
        }
    }

    fn strides(&self) -> (isize, isize) {
        match self {
            Op::N(m) => (m.cols as isize, 1),
            Op::T(m) => (1, m.cols as isize),
        }
    }

    fn ptr(&self) -> *const f64 {
        match self {
            Op::N(m) | Op::T(m) => m.values.as_ptr(),
        }
    }
}

/// `c = alpha * a * b + beta * c`.
///
/// Panics on shape mismatch; callers validate shapes at the API boundary.
pub(crate) fn gemm(alpha: f64, a: Op<'_>, b: Op<'_>, beta: f64, c: &mut Matrix) {
    let (m, k) = a.dims();
    let (kb, n) = b.dims();
    assert_eq!(k, kb, "gemm inner dimensions differ");
    assert_eq!((m, n), (c.rows, c.cols), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in &mut c.values {
            *v *= beta;
        }
        return;
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // SAFETY: the pointers come from live matrices whose extents match the
    // dimensions and strides asserted above; `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.ptr(),
            rsa,
            csa,
            b.ptr(),
            rsb,
            csb,
            beta,
            c.values.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// `y = A x + b` for a single input vector.
pub fn linear_forward(x: &[f64], weights: &Matrix, bias: &[f64]) -> Result<Vec<f64>> {
    if x.len() != weights.cols {
        return Err(Error::dim("linear_forward input", weights.cols, x.len()));
    }
    if bias.len() != weights.rows {
        return Err(Error::dim("linear_forward bias", weights.rows, bias.len()));
    }
    let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
    let mut out = Matrix::from_vec(1, bias.len(), bias.to_vec())?;
    gemm(1.0, Op::N(&xm), Op::T(weights), 1.0, &mut out);
    Ok(out.into_vec())
}
