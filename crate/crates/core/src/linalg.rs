//! Dense and sparse complex linear-algebra helpers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::num::{abs, CMatrix, Real};

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (x, y)| m.max(abs(*x - *y)))
}

/// `max |H - H†|`.
pub fn hermiticity_error<T: Real>(h: &CMatrix<T>) -> T {
    max_abs_diff(h, &h.adjoint())
}

/// `max |V†V - G0|` where `G0` is the Gram matrix the columns started with.
pub fn gram_deviation<T: Real>(v: &CMatrix<T>, initial_gram: &CMatrix<T>) -> T {
    max_abs_diff(&(v.adjoint() * v), initial_gram)
}

/// Spectral norm (largest singular value), through the Gram matrix of the
/// narrower side.
pub fn spectral_norm<T: Real>(a: &CMatrix<T>) -> T {
    let gram = if a.nrows() >= a.ncols() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues
        .iter()
        .fold(T::zero(), |m, &x| m.max(x))
        .max(T::zero())
        .sqrt()
}

fn one_norm<T: Real>(a: &CMatrix<T>) -> T {
    (0..a.ncols())
        .map(|j| a.column(j).iter().fold(T::zero(), |s, z| s + abs(*z)))
        .fold(T::zero(), |m, x| m.max(x))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The argument is scaled until its 1-norm is at most 1/2, where the series
/// converges to working precision within ~20 terms.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let scaled = a * Complex::new(scale, T::zero());
    let mut result = CMatrix::<T>::identity(n, n);
    let mut term = CMatrix::<T>::identity(n, n);
    let eps = T::default_epsilon();
    for k in 1..64 {
        term = &term * &scaled / Complex::new(T::from_usize_lossy(k), T::zero());
        result += &term;
        if one_norm(&term) <= eps * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug)]
pub struct Csr<T: Real> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<T>>,
}

impl<T: Real> Csr<T> {
    /// Keeps entries with modulus strictly above `threshold`.
    pub fn from_dense(m: &CMatrix<T>, threshold: T) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let z = m[(i, j)];
                if abs(z) > threshold {
                    cols.push(j);
                    vals.push(z);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex<T>)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// Restriction to the rows and columns listed in `indices` (in that order).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            local[i] = k;
        }
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &i in indices {
            for (j, z) in self.row(i) {
                if local[j] != usize::MAX {
                    cols.push(local[j]);
                    vals.push(z);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim: indices.len(), row_ptr, cols, vals }
    }

    /// Partition of the index set into blocks that the sparsity pattern never
    /// couples. Each block is sorted ascending; blocks are ordered by their
    /// smallest index.
    pub fn connected_blocks(&self) -> Vec<Vec<usize>> {
        let mut block_of = vec![usize::MAX; self.dim];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for seed in 0..self.dim {
            if block_of[seed] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut members = vec![seed];
            block_of[seed] = id;
            let mut cursor = 0;
            while cursor < members.len() {
                let i = members[cursor];
                cursor += 1;
                for (j, _) in self.row(i) {
                    if block_of[j] == usize::MAX {
                        block_of[j] = id;
                        members.push(j);
                    }
                }
            }
            members.sort_unstable();
            blocks.push(members);
        }
        blocks
    }

    /// `out[:, c] = (self + diag(shift_diag)) * x[:, c]` for column-major
    /// blocks of `ncols` vectors of length `dim`.
    pub fn apply_block(
        &self,
        diag: &[T],
        x: &[Complex<T>],
        out: &mut [Complex<T>],
        ncols: usize,
    ) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n * ncols);
        debug_assert_eq!(out.len(), n * ncols);
        for c in 0..ncols {
            let xc = &x[c * n..(c + 1) * n];
            let oc = &mut out[c * n..(c + 1) * n];
            for i in 0..n {
                let mut acc = xc[i] * diag[i];
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xc[self.cols[k]];
                }
                oc[i] = acc;
            }
        }
    }

    /// Gershgorin radius of every row, excluding the diagonal.
    pub fn off_diagonal_radii(&self) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .filter(|(j, _)| *j != i)
                    .fold(T::zero(), |s, (_, z)| s + abs(z))
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.dim)
            .map(|i| {
                self.row(i)
                    .find(|(j, _)| *j == i)
                    .map(|(_, z)| z)
                    .unwrap_or_else(Complex::default)
            })
            .collect()
    }

    pub fn to_dense(&self) -> CMatrix<T> {
        let mut m = DMatrix::from_element(self.dim, self.dim, Complex::default());
        for i in 0..self.dim {
            for (j, z) in self.row(i) {
                m[(i, j)] = z;
            }
        }
        m
    }
}
