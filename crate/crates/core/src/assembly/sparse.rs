use std::fmt::Debug;
use std::io::{self, Write};
use std::ops::{Add, AddAssign, Mul};
use std::path::Path;

use crate::error::{Error, Result};
use crate::C64;

/// Entry type of a [`SparseMatrix`].
pub trait Scalar:
    Copy + Default + PartialEq + Debug + Add<Output = Self> + AddAssign + Mul<Output = Self> + Send + Sync
{
    fn to_c64(self) -> C64;
}

impl Scalar for f64 {
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    fn to_c64(self) -> C64 {
        self
    }
}

/// Coordinate-format accumulator. Duplicates are summed on [`Self::finalize`]
/// in insertion order, so the result does not depend on thread scheduling
/// as long as entries are pushed in a fixed order.
#[derive(Debug, Clone)]
pub struct CooBuilder<T> {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> CooBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        CooBuilder { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols, "({i}, {j}) out of bounds");
        self.entries.push((i, j, v));
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = (usize, usize, T)>) {
        for (i, j, v) in it {
            self.push(i, j, v);
        }
    }

    pub fn finalize(mut self) -> SparseMatrix<T> {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

/// Compressed-row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// `A x` for a complex vector.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "vector length");
        (0..self.nrows).map(|i| self.row(i).fold(C64::new(0.0, 0.0), |acc, (j, v)| acc + v.to_c64() * x[j])).collect()
    }

    pub fn transpose(&self) -> SparseMatrix<T> {
        let mut b = CooBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        b.extend(self.triplets().map(|(i, j, v)| (j, i, v)));
        b.finalize()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.to_c64().norm()).fold(0.0, f64::max)
    }

    pub fn to_complex(&self) -> SparseMatrix<C64> {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| v.to_c64()).collect(),
        }
    }

    /// Dense copy, for tests and small problems.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut d = vec![vec![C64::new(0.0, 0.0); self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v.to_c64();
        }
        d
    }

    /// Writes the matrix in Matrix Market coordinate format (complex, general).
    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            let c = v.to_c64();
            writeln!(out, "{} {} {:.17e} {:.17e}", i + 1, j + 1, c.re, c.im)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl SparseMatrix<f64> {
    /// Sparse product `self · rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix<f64>) -> Result<SparseMatrix<f64>> {
        if self.ncols != rhs.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: rhs.nrows });
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut cols = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(SparseMatrix { nrows: self.nrows, ncols: rhs.ncols, row_ptr, col_idx, values })
    }
}
