use std::ops::{Index, IndexMut};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![ZERO; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major nested rows (convenient in tests).
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    pub fn from_columns(nrows: usize, cols: &[Vec<C64>]) -> Self {
        let mut data = Vec::with_capacity(nrows * cols.len());
        for c in cols {
            assert_eq!(c.len(), nrows, "column length");
            data.extend_from_slice(c);
        }
        Self {
            nrows,
            ncols: cols.len(),
            data,
        }
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Mutable access to two distinct columns.
    pub(crate) fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [C64], &mut [C64]) {
        assert!(a < b);
        let n = self.nrows;
        let (lo, hi) = self.data.split_at_mut(b * n);
        (&mut lo[a * n..(a + 1) * n], &mut hi[..n])
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.ncols {
            return Err(Error::Dimension(format!(
                "dense matvec: {}x{} times {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        let mut y = vec![ZERO; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == ZERO {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        Ok(y)
    }

    /// `self^H x`
    pub fn adjoint_matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.nrows {
            return Err(Error::Dimension("adjoint matvec length".into()));
        }
        Ok((0..self.ncols).map(|j| super::vector::dot(self.col(j), x)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for k in 0..self.ncols {
                let b = other[(k, j)];
                if b == ZERO {
                    continue;
                }
                for (d, a) in dst.iter_mut().zip(self.col(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.col(j).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when every entry below the first subdiagonal is zero.
    pub fn is_upper_hessenberg(&self) -> bool {
        (0..self.ncols).all(|j| ((j + 2)..self.nrows).all(|i| self[(i, j)] == ZERO))
    }

    /// Leading `r x c` block.
    pub fn top_left(&self, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

/// Dense LU with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("LU of a non-square matrix".into()));
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= 1e-300 || pmax <= f64::EPSILON * 1e-3 * scale {
                return Err(Error::SingularMatrix { step: k, pivot: pmax });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = t;
                }
            }
            let piv = lu[(k, k)];
            for i in (k + 1)..n {
                lu[(i, k)] /= piv;
            }
            for j in (k + 1)..n {
                let ukj = lu[(k, j)];
                if ukj == ZERO {
                    continue;
                }
                let (left, right) = lu.two_cols_mut(k, j);
                for i in (k + 1)..n {
                    right[i] -= left[i] * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension("dense LU solve length".into()));
        }
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != ZERO {
                for i in (j + 1)..n {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            if xj != ZERO {
                for i in 0..j {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        Ok(x)
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension("dense LU adjoint solve length".into()));
        }
        // A^H = U^H L^H P
        let mut y = b.to_vec();
        for j in 0..n {
            let mut s = y[j];
            for i in 0..j {
                s -= self.lu[(i, j)].conj() * y[i];
            }
            y[j] = s / self.lu[(j, j)].conj();
        }
        for j in (0..n).rev() {
            let mut s = y[j];
            for i in (j + 1)..n {
                s -= self.lu[(i, j)].conj() * y[i];
            }
            y[j] = s;
        }
        let mut x = vec![ZERO; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrows() != self.dim() {
            return Err(Error::Dimension(format!("solve: {} rows for dimension {}", b.nrows(), self.dim())));
        }
        let cols: Result<Vec<Vec<C64>>> = (0..b.ncols()).map(|j| self.solve(b.col(j))).collect();
        Ok(DenseMatrix::from_columns(self.dim(), &cols?))
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            cols.push(self.solve(&e)?);
            e[j] = ZERO;
        }
        Ok(DenseMatrix::from_columns(n, &cols))
    }
}
