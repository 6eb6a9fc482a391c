use std::fmt;

use crate::error::{mismatch, Result};

/// Leading dimension for a padded column-major matrix with `rows` rows.
///
/// The row count is rounded up to a multiple of 8 (one 64-byte cache line of
/// `f64`) and bumped by another 8 when the result is a multiple of 128, which
/// avoids cache-set aliasing between consecutive columns.
pub fn padded_stride(rows: usize) -> usize {
    let mut s = rows.div_ceil(8).max(1) * 8;
    if s.is_multiple_of(128) {
        s += 8;
    }
    s
}

/// Dense column-major matrix. Element `(i, j)` lives at `data[i + j * stride]`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::zeros_with_stride(rows, cols, rows.max(1))
    }

    /// Zero matrix whose leading dimension follows [`padded_stride`].
    pub fn zeros_padded(rows: usize, cols: usize) -> Self {
        Self::zeros_with_stride(rows, cols, padded_stride(rows))
    }

    fn zeros_with_stride(rows: usize, cols: usize, stride: usize) -> Self {
        Matrix { rows, cols, stride, data: vec![0.0; stride * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps compact column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(mismatch(format!("{} values cannot fill a {rows}x{cols} matrix", data.len())));
        }
        Ok(Matrix { rows, cols, stride: rows.max(1), data })
    }

    /// Builds a matrix from row slices, convenient for literals in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        let mut out = Self::zeros(m, n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                out[(i, j)] = f(i, j);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.stride..j * self.stride + self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let s = self.stride;
        &mut self.data[j * s..j * s + self.rows]
    }

    pub fn as_ref(&self) -> MatRef<'_> {
        MatRef { data: &self.data, rows: self.rows, cols: self.cols, rs: 1, cs: self.stride }
    }

    pub fn as_mut(&mut self) -> MatMut<'_> {
        MatMut { data: &mut self.data, rows: self.rows, cols: self.cols, rs: 1, cs: self.stride }
    }

    pub fn t(&self) -> MatRef<'_> {
        self.as_ref().t()
    }

    /// Compact column-major copy of the entries.
    pub fn to_col_major(&self) -> Vec<f64> {
        if self.stride == self.rows {
            return self.data.clone();
        }
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            v.extend_from_slice(self.col(j));
        }
        v
    }

    /// Consumes the matrix and returns compact column-major data.
    pub fn into_col_major(self) -> Vec<f64> {
        if self.stride == self.rows || self.cols == 0 {
            let mut d = self.data;
            d.truncate(self.rows * self.cols);
            return d;
        }
        self.to_col_major()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.as_ref().frobenius_norm()
    }

    pub fn scale(&mut self, alpha: f64) {
        for j in 0..self.cols {
            for v in self.col_mut(j) {
                *v *= alpha;
            }
        }
    }

    /// Copy of the leading `cols` columns.
    pub fn leading_cols(&self, cols: usize) -> Matrix {
        self.as_ref().sub(0, 0, self.rows, cols).to_owned()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = 0.0f64;
        for j in 0..self.cols {
            for i in 0..self.rows {
                m = m.max((self[(i, j)] - other[(i, j)]).abs());
            }
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.stride]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.stride]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} (stride {})", self.rows, self.cols, self.stride)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8)).map(|j| format!("{:11.4e}", self[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Borrowed strided matrix view. Element `(i, j)` is `data[i * rs + j * cs]`.
#[derive(Clone, Copy)]
pub struct MatRef<'a> {
    pub(crate) data: &'a [f64],
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) rs: usize,
    pub(crate) cs: usize,
}

impl<'a> MatRef<'a> {
    /// View over `data` with explicit strides. Panics if the extent does not fit.
    pub fn new(data: &'a [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        if rows > 0 && cols > 0 {
            let last = (rows - 1) * rs + (cols - 1) * cs;
            assert!(last < data.len(), "view exceeds buffer");
        }
        MatRef { data, rows, cols, rs, cs }
    }

    /// Compact column-major view.
    pub fn col_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self::new(data, rows, cols, 1, rows.max(1))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.rs + j * self.cs]
    }

    pub fn t(self) -> MatRef<'a> {
        MatRef { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }

    pub fn sub(self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatRef<'a> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "sub-view out of range");
        if rows == 0 || cols == 0 {
            return MatRef { data: &self.data[..0], rows, cols, rs: self.rs, cs: self.cs };
        }
        let off = r0 * self.rs + c0 * self.cs;
        MatRef { data: &self.data[off..], rows, cols, rs: self.rs, cs: self.cs }
    }

    pub fn to_owned(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            let c = out.col_mut(j);
            for (i, v) in c.iter_mut().enumerate() {
                *v = self.data[i * self.rs + j * self.cs];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut ssq = 1.0f64;
        for j in 0..self.cols {
            for i in 0..self.rows {
                let v = self.at(i, j).abs();
                if v > 0.0 {
                    if scale < v {
                        ssq = 1.0 + ssq * (scale / v) * (scale / v);
                        scale = v;
                    } else {
                        ssq += (v / scale) * (v / scale);
                    }
                }
            }
        }
        scale * ssq.sqrt()
    }

    pub(crate) fn ptr(&self) -> *const f64 {
        self.data.as_ptr()
    }
}

/// Mutable strided matrix view.
pub struct MatMut<'a> {
    pub(crate) data: &'a mut [f64],
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) rs: usize,
    pub(crate) cs: usize,
}

impl<'a> MatMut<'a> {
    pub fn new(data: &'a mut [f64], rows: usize, cols: usize, rs: usize, cs: usize) -> Self {
        if rows > 0 && cols > 0 {
            let last = (rows - 1) * rs + (cols - 1) * cs;
            assert!(last < data.len(), "view exceeds buffer");
        }
        MatMut { data, rows, cols, rs, cs }
    }

    pub fn col_major(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        Self::new(data, rows, cols, 1, rows.max(1))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rb(&self) -> MatRef<'_> {
        MatRef { data: self.data, rows: self.rows, cols: self.cols, rs: self.rs, cs: self.cs }
    }

    pub fn sub_mut(self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatMut<'a> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "sub-view out of range");
        let off = if rows == 0 || cols == 0 { 0 } else { r0 * self.rs + c0 * self.cs };
        MatMut { data: &mut self.data[off..], rows, cols, rs: self.rs, cs: self.cs }
    }

    pub(crate) fn ptr(&mut self) -> *mut f64 {
        self.data.as_mut_ptr()
    }
}
