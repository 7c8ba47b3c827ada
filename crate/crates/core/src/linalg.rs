//! Small dense matrices. Cluster sizes and LP support sets are tiny, so a
//! row-major `Vec` with Gauss-Jordan elimination is all that is needed.

use std::ops::{Index, IndexMut};

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMatrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// Inverse by Gauss-Jordan with partial pivoting. Returns `None` when a
    /// pivot falls below `T::singular_tol()` relative to the largest entry of
    /// the original matrix.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let scale = self.data.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
        if !scale.is_finite() || scale == T::zero() {
            return None;
        }
        let tol = T::singular_tol() * scale;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let (piv, piv_abs) = (col..n).map(|r| (r, a[(r, col)].abs())).fold((col, -T::one()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if piv_abs <= tol {
                return None;
            }
            a.swap_rows(col, piv);
            inv.swap_rows(col, piv);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        if inv.data.iter().all(|x| x.is_finite()) {
            Some(inv)
        } else {
            None
        }
    }

    /// Numerical rank via row echelon reduction with an absolute tolerance.
    pub fn rank(&self, tol: T) -> usize {
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..a.cols {
            if rank == a.rows {
                break;
            }
            let (piv, piv_abs) = (rank..a.rows).map(|r| (r, a[(r, col)].abs())).fold((rank, -T::one()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if piv_abs <= tol {
                continue;
            }
            a.swap_rows(rank, piv);
            let p = a[(rank, col)];
            for r in (rank + 1)..a.rows {
                let f = a[(r, col)] / p;
                if f == T::zero() {
                    continue;
                }
                for j in col..a.cols {
                    let v = a[(rank, j)];
                    a[(r, j)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
