use super::{DenseLu, DenseMatrix};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Sweeps allowed per eigenvalue before giving up.
const SWEEPS_PER_EIGENVALUE: usize = 30;

/// Right-eigenvector matrices with a larger condition number are flagged as
/// numerically defective.
pub const DEFECTIVE_CONDITION: f64 = 1e12;

/// Eigenvalues with biorthonormal right/left eigenvectors.
///
/// Column `i` of `right` is a unit vector `v_i`, column `i` of `left` is
/// `w_i` with `w_i^H v_j = delta_ij`, and `kappa[i] = |w_i| |v_i|`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    pub right: DenseMatrix,
    pub left: DenseMatrix,
    pub kappa: Vec<f64>,
    /// 1-norm condition number of the right-eigenvector matrix.
    pub vector_condition: f64,
    /// Set when `vector_condition` exceeds [`DEFECTIVE_CONDITION`].
    pub ill_conditioned: bool,
}

/// Reduces `a` to upper Hessenberg form `Q^H A Q` with Householder
/// reflectors, accumulating `Q` when requested.
pub fn hessenberg_reduce(a: &DenseMatrix, want_q: bool) -> (DenseMatrix, Option<DenseMatrix>) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = want_q.then(|| DenseMatrix::identity(n));
    let mut w = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let x = &h.col(k)[k + 1..];
        let tail: f64 = x[1..].iter().map(|v| v.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (tail + x[0].norm_sqr()).sqrt();
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.to_vec();
        v[0] -= alpha;
        let tau = 2.0 / v.iter().map(|z| z.norm_sqr()).sum::<f64>();

        // left: rows k+1.., columns k..
        for j in k..n {
            let col = &mut h.col_mut(j)[k + 1..];
            let mut s = ZERO;
            for (vi, ci) in v.iter().zip(col.iter()) {
                s += vi.conj() * ci;
            }
            let s = s * tau;
            for (vi, ci) in v.iter().zip(col.iter_mut()) {
                *ci -= vi * s;
            }
        }
        apply_right(&mut h, &v, tau, k + 1, &mut w);
        if let Some(q) = q.as_mut() {
            apply_right(q, &v, tau, k + 1, &mut w);
        }
        h[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// `M[:, off..] <- M[:, off..] (I - tau v v^H)`
fn apply_right(m: &mut DenseMatrix, v: &[C64], tau: f64, off: usize, w: &mut [C64]) {
    let nr = m.nrows();
    let w = &mut w[..nr];
    w.fill(ZERO);
    for (j, vj) in v.iter().enumerate() {
        for (wi, mi) in w.iter_mut().zip(m.col(off + j)) {
            *wi += mi * vj;
        }
    }
    for (j, vj) in v.iter().enumerate() {
        let f = vj.conj() * tau;
        for (mi, wi) in m.col_mut(off + j).iter_mut().zip(w.iter()) {
            *mi -= wi * f;
        }
    }
}

/// Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    (ax / r, (x / ax) * y.conj() / r)
}

/// Single-shift complex QR iteration on an upper Hessenberg matrix.
///
/// With `want_t` the full Schur form is produced; with `z` the unitary
/// rotations are accumulated into it. Otherwise only the diagonal is
/// meaningful on return.
fn schur_qr(h: &mut DenseMatrix, mut z: Option<&mut DenseMatrix>, want_t: bool) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let hnorm = h.norm_fro().max(f64::MIN_POSITIVE);
    let max_sweeps = SWEEPS_PER_EIGENVALUE * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        // locate the start of the unreduced block ending at hi
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if diag == 0.0 {
                diag = hnorm;
            }
            if sub <= eps * diag {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > max_sweeps {
            return Err(Error::ConvergenceFailure { sweeps: total });
        }

        let shift = if its % 10 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        let col_end = if want_t { n } else { hi + 1 };
        let row_start = if want_t { 0 } else { l };
        let mut x = h[(l, l)] - shift;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let first = if k > l { k - 1 } else { l };
            for j in first..col_end {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            let last = (k + 2).min(hi);
            {
                let (ck, ck1) = h.two_cols_mut(k, k + 1);
                for i in row_start..=last {
                    let a = ck[i];
                    let b = ck1[i];
                    ck[i] = a * c + s.conj() * b;
                    ck1[i] = -s * a + b * c;
                }
            }
            if let Some(z) = z.as_deref_mut() {
                let (zk, zk1) = z.two_cols_mut(k, k + 1);
                for (a, b) in zk.iter_mut().zip(zk1.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = u * c + s.conj() * v;
                    *b = -s * u + v * c;
                }
            }
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
        }
    }
    Ok(())
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of an upper Hessenberg matrix by shifted QR.
pub fn hessenberg_eigenvalues(h: &DenseMatrix) -> Result<Vec<C64>> {
    if !h.is_square() {
        return Err(Error::Dimension("Hessenberg eigenvalues of a non-square matrix".into()));
    }
    if !h.is_upper_hessenberg() {
        return Err(Error::Dimension("matrix is not upper Hessenberg".into()));
    }
    let mut t = h.clone();
    schur_qr(&mut t, None, false)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues of a general square matrix (no vectors).
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    let (mut h, _) = hessenberg_reduce(a, false);
    schur_qr(&mut h, None, false)?;
    Ok((0..h.nrows()).map(|i| h[(i, i)]).collect())
}

/// Full eigendecomposition: Hessenberg reduction, Schur form with
/// accumulated vectors, triangular back-substitution for right vectors and
/// inversion of the right-vector matrix for the left ones.
pub fn dense_eig(a: &DenseMatrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::Dimension("eigendecomposition of a non-square matrix".into()));
    }
    let n = a.nrows();
    let (mut t, q) = hessenberg_reduce(a, true);
    let mut z = q.expect("requested");
    schur_qr(&mut t, Some(&mut z), true)?;
    let eigenvalues: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let small = f64::EPSILON * t.norm_fro().max(f64::MIN_POSITIVE);
    let mut y_cols = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut y = vec![ZERO; n];
        y[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = ZERO;
            for m in (j + 1)..=i {
                s += t[(j, m)] * y[m];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[j] = -s / d;
            let big = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                y.iter_mut().for_each(|v| *v /= big);
            }
        }
        y_cols.push(y);
    }
    let ymat = DenseMatrix::from_columns(n, &y_cols);
    let mut right = z.matmul(&ymat)?;
    for j in 0..n {
        let col = right.col_mut(j);
        let nrm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= nrm);
    }

    let inv = DenseLu::factor(&right)?.inverse()?;
    let vector_condition = right.norm1() * inv.norm1();
    // w_i = conj(row i of V^{-1}), so w_i^H v_j = (V^{-1} V)_{ij}
    let left = DenseMatrix::from_fn(n, n, |r, i| inv[(i, r)].conj());
    let kappa = (0..n)
        .map(|i| left.col(i).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        right,
        left,
        kappa,
        vector_condition,
        ill_conditioned: vector_condition > DEFECTIVE_CONDITION,
    })
}
