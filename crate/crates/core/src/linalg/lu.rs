use super::{reverse_cuthill_mckee, CsrMatrix};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// A diagonal entry is kept as pivot when it is at least this fraction of
/// the largest candidate in its column.
const DIAGONAL_PREFERENCE: f64 = 0.1;

const SINGULAR_PIVOT: f64 = 1e-300;

/// Left-looking sparse LU with threshold partial pivoting,
/// `P A Q = L U`, after a reverse Cuthill-McKee column ordering.
///
/// L has a unit diagonal stored first in each column; U stores its diagonal
/// last in each column. Row indices of both factors are in pivot order.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    col_perm: Vec<usize>,
    row_pinv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<C64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<C64>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_ordering(a, perm)
    }

    /// Factorizes with an explicit column order (`col_perm[k]` is the
    /// original column eliminated at step `k`).
    pub fn factor_with_ordering(a: &CsrMatrix, col_perm: Vec<usize>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("sparse LU of a non-square matrix".into()));
        }
        let n = a.nrows();
        if col_perm.len() != n {
            return Err(Error::Dimension("column ordering length".into()));
        }
        let (a_ptr, a_idx, a_val) = a.to_csc();

        let mut row_pinv = vec![usize::MAX; n];
        let mut l_ptr = vec![0usize; n + 1];
        let mut u_ptr = vec![0usize; n + 1];
        let guess = 4 * a.nnz() + n;
        let mut l_idx = Vec::with_capacity(guess);
        let mut l_val = Vec::with_capacity(guess);
        let mut u_idx = Vec::with_capacity(guess);
        let mut u_val = Vec::with_capacity(guess);

        let mut x = vec![ZERO; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut marked = vec![false; n];

        for k in 0..n {
            l_ptr[k] = l_idx.len();
            u_ptr[k] = u_idx.len();
            let col = col_perm[k];

            // Symbolic: rows reachable from A(:, col) in the graph of L.
            let mut top = n;
            for &r in &a_idx[a_ptr[col]..a_ptr[col + 1]] {
                if !marked[r] {
                    top = dfs(
                        r, &l_ptr, &l_idx, &row_pinv, k, top, &mut xi, &mut stack, &mut pstack,
                        &mut marked,
                    );
                }
            }
            for &r in &xi[top..n] {
                marked[r] = false;
            }

            // Numeric: sparse triangular solve x = L \ A(:, col).
            for &r in &xi[top..n] {
                x[r] = ZERO;
            }
            for p in a_ptr[col]..a_ptr[col + 1] {
                x[a_idx[p]] = a_val[p];
            }
            for &r in &xi[top..n] {
                let j = row_pinv[r];
                if j == usize::MAX {
                    continue;
                }
                let xr = x[r];
                if xr == ZERO {
                    continue;
                }
                for p in (l_ptr[j] + 1)..l_ptr[j + 1] {
                    x[l_idx[p]] -= l_val[p] * xr;
                }
            }

            // Pivot selection among rows not yet pivotal.
            let mut ipiv = usize::MAX;
            let mut amax = -1.0f64;
            for &r in &xi[top..n] {
                if row_pinv[r] == usize::MAX {
                    let v = x[r].norm();
                    if v > amax {
                        amax = v;
                        ipiv = r;
                    }
                } else {
                    u_idx.push(row_pinv[r]);
                    u_val.push(x[r]);
                }
            }
            if ipiv == usize::MAX || amax <= SINGULAR_PIVOT {
                return Err(Error::SingularMatrix {
                    step: k,
                    pivot: amax.max(0.0),
                });
            }
            if row_pinv[col] == usize::MAX && x[col].norm() >= DIAGONAL_PREFERENCE * amax {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u_idx.push(k);
            u_val.push(pivot);
            row_pinv[ipiv] = k;
            l_idx.push(ipiv);
            l_val.push(C64::new(1.0, 0.0));
            for &r in &xi[top..n] {
                if row_pinv[r] == usize::MAX {
                    l_idx.push(r);
                    l_val.push(x[r] / pivot);
                }
                x[r] = ZERO;
            }
        }
        l_ptr[n] = l_idx.len();
        u_ptr[n] = u_idx.len();
        for r in l_idx.iter_mut() {
            *r = row_pinv[*r];
        }
        Ok(Self {
            n,
            col_perm,
            row_pinv,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries in L and U together.
    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![ZERO; self.n];
        self.solve_into(b, &mut out)?;
        Ok(out)
    }

    pub fn solve_into(&self, b: &[C64], out: &mut [C64]) -> Result<()> {
        let n = self.n;
        if b.len() != n || out.len() != n {
            return Err(Error::Dimension(format!(
                "sparse LU solve: n = {n}, rhs {}, out {}",
                b.len(),
                out.len()
            )));
        }
        let mut x = vec![ZERO; n];
        for (i, &bi) in b.iter().enumerate() {
            x[self.row_pinv[i]] = bi;
        }
        for k in 0..n {
            let xk = x[k];
            if xk == ZERO {
                continue;
            }
            for p in (self.l_ptr[k] + 1)..self.l_ptr[k + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xk;
            }
        }
        for k in (0..n).rev() {
            let last = self.u_ptr[k + 1] - 1;
            x[k] /= self.u_val[last];
            let xk = x[k];
            if xk == ZERO {
                continue;
            }
            for p in self.u_ptr[k]..last {
                x[self.u_idx[p]] -= self.u_val[p] * xk;
            }
        }
        for (k, &c) in self.col_perm.iter().enumerate() {
            out[c] = x[k];
        }
        Ok(())
    }
}

/// Non-recursive depth-first search from row `start` over the columns of L
/// built so far; pushes finished nodes onto `xi[..top]` in reverse
/// topological order and returns the new top.
#[allow(clippy::too_many_arguments)]
fn dfs(
    start: usize,
    l_ptr: &[usize],
    l_idx: &[usize],
    row_pinv: &[usize],
    k: usize,
    mut top: usize,
    xi: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    marked: &mut [bool],
) -> usize {
    // columns 0..k of L are complete; column k is being built
    let col_end = |j: usize| if j + 1 < k { l_ptr[j + 1] } else { l_ptr[k] };
    let mut head = 0isize;
    stack[0] = start;
    while head >= 0 {
        let h = head as usize;
        let r = stack[h];
        let j = row_pinv[r];
        if !marked[r] {
            marked[r] = true;
            pstack[h] = if j == usize::MAX { 0 } else { l_ptr[j] };
        }
        let mut done = true;
        if j != usize::MAX {
            let end = col_end(j);
            let mut p = pstack[h];
            while p < end {
                let i = l_idx[p];
                p += 1;
                if marked[i] {
                    continue;
                }
                pstack[h] = p;
                head += 1;
                stack[head as usize] = i;
                done = false;
                break;
            }
            if done {
                pstack[h] = end;
            }
        }
        if done {
            head -= 1;
            top -= 1;
            xi[top] = r;
        }
    }
    top
}
