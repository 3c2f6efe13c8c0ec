use super::DenseMatrix;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Threshold on `|R_ii| / |M|_F` below which a column is declared dependent.
pub const RANK_TOLERANCE: f64 = 1e-14;

/// Householder QR of a tall matrix, `M = Q R`.
///
/// Reflectors are kept implicitly; `Q^H b` is applied on demand.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    /// R in the upper triangle, reflector tails below it.
    qr: DenseMatrix,
    /// Reflector vectors including their leading entry.
    reflectors: Vec<(Vec<C64>, f64)>,
    norm: f64,
}

impl HouseholderQr {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        let (nr, nc) = (m.nrows(), m.ncols());
        if nr < nc {
            return Err(Error::Dimension(format!("QR needs nrows >= ncols, got {nr}x{nc}")));
        }
        let mut a = m.clone();
        let mut reflectors = Vec::with_capacity(nc);
        for k in 0..nc {
            let x = &a.col(k)[k..];
            let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if xnorm == 0.0 {
                reflectors.push((Vec::new(), 0.0));
                continue;
            }
            let x0 = x[0];
            let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
            let alpha = -phase * xnorm;
            let mut v: Vec<C64> = x.to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 == 0.0 {
                reflectors.push((Vec::new(), 0.0));
                continue;
            }
            let tau = 2.0 / vnorm2;
            for j in k..nc {
                let col = &mut a.col_mut(j)[k..];
                let mut w = ZERO;
                for (vi, ci) in v.iter().zip(col.iter()) {
                    w += vi.conj() * ci;
                }
                let w = w * tau;
                for (vi, ci) in v.iter().zip(col.iter_mut()) {
                    *ci -= vi * w;
                }
            }
            reflectors.push((v, tau));
        }
        Ok(Self {
            qr: a,
            reflectors,
            norm: m.norm_fro(),
        })
    }

    pub fn r_diag(&self) -> Vec<C64> {
        (0..self.qr.ncols()).map(|i| self.qr[(i, i)]).collect()
    }

    /// Numerical rank with respect to [`RANK_TOLERANCE`].
    pub fn rank(&self) -> usize {
        let tol = RANK_TOLERANCE * self.norm.max(f64::MIN_POSITIVE);
        self.r_diag().iter().filter(|d| d.norm() > tol).count()
    }

    /// Smallest `|R_ii| / |M|_F`; a cheap proxy for linear independence.
    pub fn min_relative_diag(&self) -> f64 {
        self.r_diag()
            .iter()
            .map(|d| d.norm() / self.norm.max(f64::MIN_POSITIVE))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn apply_qh(&self, b: &mut [C64]) {
        for (k, (v, tau)) in self.reflectors.iter().enumerate() {
            if v.is_empty() {
                continue;
            }
            let seg = &mut b[k..];
            let mut w = ZERO;
            for (vi, bi) in v.iter().zip(seg.iter()) {
                w += vi.conj() * bi;
            }
            let w = w * *tau;
            for (vi, bi) in v.iter().zip(seg.iter_mut()) {
                *bi -= vi * w;
            }
        }
    }

    /// Least-squares solution of `M x = b`.
    pub fn solve_least_squares(&self, b: &[C64]) -> Result<Vec<C64>> {
        let (nr, nc) = (self.qr.nrows(), self.qr.ncols());
        if b.len() != nr {
            return Err(Error::Dimension("least squares rhs length".into()));
        }
        let tol = RANK_TOLERANCE * self.norm;
        for i in 0..nc {
            let d = self.qr[(i, i)].norm();
            if d < tol || d == 0.0 {
                return Err(Error::RankDeficient { index: i, value: d });
            }
        }
        let mut y = b.to_vec();
        self.apply_qh(&mut y);
        let mut x = y[..nc].to_vec();
        for i in (0..nc).rev() {
            let mut s = x[i];
            for j in (i + 1)..nc {
                s -= self.qr[(i, j)] * x[j];
            }
            x[i] = s / self.qr[(i, i)];
        }
        Ok(x)
    }
}

/// Minimizer of `|M x - b|_2` via Householder QR.
pub fn least_squares_solve(m: &DenseMatrix, b: &[C64]) -> Result<Vec<C64>> {
    HouseholderQr::new(m)?.solve_least_squares(b)
}
