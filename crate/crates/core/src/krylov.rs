//! Full (unrestarted) right-preconditioned GMRES with residual and harmonic
//! Ritz instrumentation.

use std::fmt::Write as _;

use crate::linalg::vector::{axpy, dot, norm2};
use crate::linalg::{hessenberg_eigenvalues, CsrMatrix, DenseLu, DenseMatrix};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Square linear map on `C^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.matvec(x)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.matvec(x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        (**self).apply(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok(x.to_vec())
    }
}

/// Composition `first` then `second`, i.e. `second * first`.
pub struct Product<'a> {
    pub first: &'a dyn LinearOperator,
    pub second: &'a dyn LinearOperator,
}

impl LinearOperator for Product<'_> {
    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.second.apply(&self.first.apply(x)?)
    }
}

#[derive(Debug, Clone)]
pub struct GmresConfig {
    /// Target for `||r_l|| / ||r_0||`.
    pub tol: f64,
    pub maxiter: usize,
    pub record_hr: bool,
    pub hr_every: usize,
    pub x0: Option<Vec<C64>>,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            maxiter: 500,
            record_hr: true,
            hr_every: 1,
            x0: None,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.maxiter == 0 {
            return Err(Error::Config("maxiter must be at least 1".into()));
        }
        if self.hr_every == 0 {
            return Err(Error::Config("hr_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Harmonic Ritz values recorded at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct HrRecord {
    pub iteration: usize,
    /// `None` when `H_l` is singular.
    pub values: Option<Vec<C64>>,
}

#[derive(Debug, Clone)]
pub struct GmresTrace {
    /// `||r_l|| / ||r_0||` for `l = 0..=basis_dim`.
    pub residual_norms: Vec<f64>,
    pub hr_values: Vec<HrRecord>,
    /// Extended Hessenberg matrix `(l + 1) x l` at the last step.
    pub hessenberg: DenseMatrix,
    pub basis_dim: usize,
    pub converged: bool,
    pub solution: Vec<C64>,
    pub r0_norm: f64,
    /// `||b - A x|| / ||b||` recomputed from the solution.
    pub true_residual: f64,
}

impl GmresTrace {
    pub fn iterations(&self) -> usize {
        self.basis_dim
    }

    pub fn hr_at(&self, l: usize) -> Option<&[C64]> {
        self.hr_values
            .iter()
            .find(|r| r.iteration == l)
            .and_then(|r| r.values.as_deref())
    }

    pub fn residual_csv(&self) -> String {
        let mut s = String::from("iteration,relative_residual\n");
        for (l, r) in self.residual_norms.iter().enumerate() {
            let _ = writeln!(s, "{l},{r:.16e}");
        }
        s
    }

    pub fn hr_csv(&self) -> String {
        let mut s = String::from("iteration,hr_index,re,im\n");
        for rec in &self.hr_values {
            if let Some(v) = &rec.values {
                for (j, z) in v.iter().enumerate() {
                    let _ = writeln!(s, "{},{j},{:.16e},{:.16e}", rec.iteration, z.re, z.im);
                }
            }
        }
        s
    }
}

/// Harmonic Ritz values at step `l` from the extended Hessenberg matrix
/// `hbar` (at least `(l + 1) x l`): the eigenvalues of
/// `H_l + h_{l+1,l}^2 H_l^{-*} e_l e_l^T`.
pub fn harmonic_ritz(hbar: &DenseMatrix, l: usize) -> Result<Vec<C64>> {
    if l == 0 || hbar.nrows() < l + 1 || hbar.ncols() < l {
        return Err(Error::Dimension(format!(
            "harmonic_ritz: step {l} needs a {}x{l} Hessenberg matrix, got {}x{}",
            l + 1,
            hbar.nrows(),
            hbar.ncols()
        )));
    }
    let mut h = hbar.top_left(l, l);
    let lu = DenseLu::factor(&h).map_err(|_| Error::HrUndefined(l))?;
    let mut e = vec![ZERO; l];
    e[l - 1] = C64::new(1.0, 0.0);
    let f = lu.solve_adjoint(&e).map_err(|_| Error::HrUndefined(l))?;
    let beta2 = hbar[(l, l - 1)].norm_sqr();
    for (i, fi) in f.iter().enumerate() {
        h[(i, l - 1)] += fi * beta2;
    }
    hessenberg_eigenvalues(&h)
}

/// Complex Givens rotation `[c, s; -conj(s), c]` zeroing `b` below `a`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Solves `A x = b` with GMRES on `A P`, returning `x = x0 + P u`.
pub fn gmres(
    a: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    b: &[C64],
    cfg: &GmresConfig,
) -> Result<GmresTrace> {
    cfg.validate()?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Dimension(format!("gmres: rhs of length {} for operator of size {n}", b.len())));
    }
    if let Some(p) = precond {
        if p.dim() != n {
            return Err(Error::Dimension(format!("gmres: preconditioner of size {} for operator of size {n}", p.dim())));
        }
    }
    let x0 = match &cfg.x0 {
        Some(x) if x.len() != n => {
            return Err(Error::Dimension(format!("gmres: x0 of length {} for operator of size {n}", x.len())))
        }
        Some(x) => x.clone(),
        None => vec![ZERO; n],
    };
    let b_norm = norm2(b);
    let mut r0 = b.to_vec();
    if cfg.x0.is_some() {
        let ax = a.apply(&x0)?;
        axpy(C64::new(-1.0, 0.0), &ax, &mut r0);
    }
    let beta = norm2(&r0);
    let m = cfg.maxiter.min(n);
    let mut hbar = DenseMatrix::zeros(m + 1, m);
    let mut residual_norms = vec![1.0];
    let mut hr_values = Vec::new();
    if beta == 0.0 {
        return Ok(GmresTrace {
            residual_norms,
            hr_values,
            hessenberg: DenseMatrix::zeros(1, 0),
            basis_dim: 0,
            converged: true,
            solution: x0,
            r0_norm: 0.0,
            true_residual: 0.0,
        });
    }

    let apply = |v: &[C64]| -> Result<Vec<C64>> {
        match precond {
            Some(p) => a.apply(&p.apply(v)?),
            None => a.apply(v),
        }
    };
    let mut basis: Vec<Vec<C64>> = vec![r0.iter().map(|z| z / beta).collect()];
    // rotated R factor (columns) and right-hand side
    let mut r = DenseMatrix::zeros(m + 1, m);
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(m);
    let mut g = vec![ZERO; m + 1];
    g[0] = C64::new(beta, 0.0);
    let mut scale = 0.0f64;
    let mut l = 0;
    let mut converged = false;
    while l < m {
        let mut w = apply(&basis[l])?;
        let before = norm2(&w);
        for pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                hbar[(i, l)] += hij;
                axpy(-hij, v, &mut w);
            }
            let after = norm2(&w);
            if pass == 1 || after >= 0.7 * before {
                break;
            }
        }
        let hnext = norm2(&w);
        hbar[(l + 1, l)] = C64::new(hnext, 0.0);
        let col_norm = (0..=l + 1).map(|i| hbar[(i, l)].norm_sqr()).sum::<f64>().sqrt();
        scale = scale.max(col_norm);

        for i in 0..=l + 1 {
            r[(i, l)] = hbar[(i, l)];
        }
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (x, y) = (r[(i, l)], r[(i + 1, l)]);
            r[(i, l)] = x * c + s * y;
            r[(i + 1, l)] = -s.conj() * x + y * c;
        }
        let (c, s) = givens(r[(l, l)], r[(l + 1, l)]);
        let x = r[(l, l)];
        r[(l, l)] = x * c + s * r[(l + 1, l)];
        r[(l + 1, l)] = ZERO;
        rot.push((c, s));
        let gl = g[l];
        g[l] = gl * c;
        g[l + 1] = -s.conj() * gl;
        l += 1;
        let res = g[l].norm() / beta;
        residual_norms.push(res);

        let breakdown = hnext <= 1e-14 * scale;
        if cfg.record_hr && (l % cfg.hr_every == 0 || breakdown || res <= cfg.tol || l == m) {
            let values = match harmonic_ritz(&hbar, l) {
                Ok(v) => Some(v),
                Err(Error::HrUndefined(_)) => None,
                Err(e) => return Err(e),
            };
            hr_values.push(HrRecord { iteration: l, values });
        }
        if breakdown || res <= cfg.tol {
            converged = true;
            break;
        }
        basis.push(w.iter().map(|z| z / hnext).collect());
    }

    // back substitution for y in R y = g
    let mut y = vec![ZERO; l];
    for i in (0..l).rev() {
        let mut acc = g[i];
        for j in i + 1..l {
            acc -= r[(i, j)] * y[j];
        }
        y[i] = acc / r[(i, i)];
    }
    let mut u = vec![ZERO; n];
    for (v, &yi) in basis.iter().zip(&y) {
        axpy(yi, v, &mut u);
    }
    let du = match precond {
        Some(p) => p.apply(&u)?,
        None => u,
    };
    let mut solution = x0;
    axpy(C64::new(1.0, 0.0), &du, &mut solution);
    let ax = a.apply(&solution)?;
    let true_res = norm2(&crate::linalg::vector::sub(b, &ax));
    let true_residual = if b_norm > 0.0 { true_res / b_norm } else { true_res };
    Ok(GmresTrace {
        residual_norms,
        hr_values,
        hessenberg: hbar.top_left(l + 1, l),
        basis_dim: l,
        converged,
        solution,
        r0_norm: beta,
        true_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { shift } else { 0.0 };
            C64::new(rng.gen_range(-1.0..1.0) + d, rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = vec![C64::new(1.0, 2.0), c(-3.0), C64::new(0.0, 1.0)];
        let t = gmres(&Identity(3), None, &b, &GmresConfig::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert!(t.converged);
        for (x, y) in t.solution.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn diagonal_three_distinct_eigenvalues() {
        let a = DenseMatrix::diagonal(&[c(1.0), c(2.0), c(3.0)]);
        let b = vec![c(1.0); 3];
        let cfg = GmresConfig {
            tol: 1e-15,
            ..Default::default()
        };
        let t = gmres(&a, None, &b, &cfg).unwrap();
        assert_eq!(t.iterations(), 3);
        assert!(t.residual_norms[3] <= 1e-14);
        let h1 = t.hr_at(1).unwrap();
        assert!((h1[0] - c(7.0 / 3.0)).norm() < 1e-12);
        let mut h3: Vec<f64> = t.hr_at(3).unwrap().iter().map(|z| z.re).collect();
        h3.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, want) in h3.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - want).abs() < 1e-8);
        }
    }

    #[test]
    fn residuals_are_monotone_and_match_true_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 30, 4.0);
        let b: Vec<C64> = (0..30).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let cfg = GmresConfig {
            tol: 1e-10,
            ..Default::default()
        };
        let t = gmres(&a, None, &b, &cfg).unwrap();
        assert!(t.converged);
        for w in t.residual_norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14));
        }
        assert!((t.true_residual - t.residual_norms.last().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn right_preconditioning_recovers_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 12, 3.0);
        let p = DenseLu::factor(&a).unwrap().inverse().unwrap();
        let b: Vec<C64> = (0..12).map(|i| c(i as f64)).collect();
        let t = gmres(&a, Some(&p), &b, &GmresConfig::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert!(t.true_residual < 1e-10);
    }

    #[test]
    fn minimal_residual_property() {
        // ||r_l|| = min over q of ||q(A) r0||, q(0) = 1, checked by least squares
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let a = random_matrix(&mut rng, n, 0.5);
        let b: Vec<C64> = (0..n).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let cfg = GmresConfig {
            tol: 1e-14,
            record_hr: false,
            ..Default::default()
        };
        let t = gmres(&a, None, &b, &cfg).unwrap();
        let mut krylov = vec![a.matvec(&b).unwrap()];
        for l in 1..=t.iterations().min(6) {
            let m = DenseMatrix::from_columns(n, &krylov);
            let coef = crate::linalg::least_squares_solve(&m, &b).unwrap();
            let fit = m.matvec(&coef).unwrap();
            let r = norm2(&crate::linalg::vector::sub(&b, &fit)) / norm2(&b);
            assert!((r - t.residual_norms[l]).abs() < 1e-9, "l = {l}");
            krylov.push(a.matvec(krylov.last().unwrap()).unwrap());
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = GmresConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(gmres(&Identity(2), None, &[c(1.0); 2], &cfg), Err(Error::Config(_))));
        assert!(gmres(&Identity(2), None, &[c(1.0); 3], &GmresConfig::default()).is_err());
    }
}
