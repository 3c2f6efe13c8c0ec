use crate::linalg::DenseMatrix;
use crate::{Error, Result, C64};

/// Compressed-row complex matrix.
///
/// Column indices are strictly increasing within each row, so there are no
/// duplicate entries. Explicit zeros are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from raw arrays, validating the structural invariants.
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<C64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 || row_offsets[0] != 0 {
            return Err(Error::Dimension("row_offsets must have nrows + 1 entries starting at 0".into()));
        }
        if values.len() != col_indices.len() || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::Dimension("values/col_indices length mismatch".into()));
        }
        for r in 0..nrows {
            if row_offsets[r + 1] < row_offsets[r] {
                return Err(Error::Dimension(format!("row_offsets decreasing at row {r}")));
            }
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Dimension(format!("columns not strictly increasing in row {r}")));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::Dimension(format!("column index out of range in row {r}")));
            }
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Dimension("non-finite matrix entry".into()));
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Assembles from (row, col, value) triplets; duplicates are summed in
    /// their input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut b = TripletBuilder::new(nrows, ncols);
        for &(i, j, v) in triplets {
            b.push(i, j, v);
        }
        b.build()
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut b = TripletBuilder::new(d.nrows(), d.ncols());
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    b.push(i, j, v);
                }
            }
        }
        b.build().expect("dense entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }
    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`, each row summed left to right.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(Error::Dimension(format!(
                "matvec: matrix {}x{}, x {}, y {}",
                self.nrows,
                self.ncols,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[p] * x[self.col_indices[p]];
            }
            *yi = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        for i in 0..self.nrows {
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                let c = self.col_indices[p];
                let dst = next[c];
                col_indices[dst] = i;
                values[dst] = self.values[p];
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Extracts `A[rows, cols]`; `rows` and `cols` are global index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut local_col = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            local_col[c] = k;
        }
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for (li, &gi) in rows.iter().enumerate() {
            let (cs, vs) = self.row(gi);
            for (&c, &v) in cs.iter().zip(vs) {
                if local_col[c] != usize::MAX {
                    b.push(li, local_col[c], v);
                }
            }
        }
        b.build().expect("indices in range")
    }

    /// Symmetric permutation `P A P^T` with `new[i] = old[perm[i]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        self.submatrix(perm, perm)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&c, &v) in cs.iter().zip(vs) {
                d[(i, c)] = v;
            }
        }
        d
    }

    /// Entrywise `self + alpha * other` on possibly different patterns.
    pub fn add_scaled(&self, alpha: C64, other: &CsrMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("add_scaled: shape mismatch".into()));
        }
        let mut b = TripletBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&c, &v) in cs.iter().zip(vs) {
                b.push(i, c, v);
            }
            let (cs, vs) = other.row(i);
            for (&c, &v) in cs.iter().zip(vs) {
                b.push(i, c, alpha * v);
            }
        }
        b.build()
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Column-wise (CSC) arrays: `(col_offsets, row_indices, values)`.
    pub(crate) fn to_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<C64>) {
        let t = self.transpose();
        (t.row_offsets, t.col_indices, t.values)
    }
}

/// Accumulates triplets and compresses them into a [`CsrMatrix`].
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        self.entries.push((i, j, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> Result<CsrMatrix> {
        if let Some(&(i, j, _)) = self
            .entries
            .iter()
            .find(|(i, j, _)| *i >= self.nrows || *j >= self.ncols)
        {
            return Err(Error::Dimension(format!(
                "triplet ({i}, {j}) outside {}x{}",
                self.nrows, self.ncols
            )));
        }
        // stable sort keeps duplicate summation in insertion order
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; self.nrows + 1];
        let mut col_indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for r in 0..self.nrows {
            row_offsets[r + 1] += row_offsets[r];
        }
        CsrMatrix::new(self.nrows, self.ncols, row_offsets, col_indices, values)
    }
}
