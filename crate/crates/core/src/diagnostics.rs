//! Post-processing of GMRES traces: spectra of preconditioned operators,
//! the three-factor harmonic Ritz residual bound, HR-to-eigenvalue
//! distances and plateau detection.

use std::fmt::Write as _;

use crate::krylov::{harmonic_ritz, GmresTrace, LinearOperator};
use crate::linalg::{dense_eig, eigenvalues, least_squares_solve, DenseMatrix};
use crate::{Error, Result, C64};

/// Largest operator the dense eigensolver is allowed to touch.
pub const DENSE_EIG_CAP: usize = 4000;

const LAWSON_MAX_ITERATIONS: usize = 200;
const LAWSON_STAGNATION: f64 = 1e-10;

/// Eigenvalues of an operator, with condition numbers when eigenvectors
/// were computed.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub label: String,
    pub eigenvalues: Vec<C64>,
    /// `kappa[i] = |w_i| |v_i|` with `w_i^H v_i = 1`; `None` for an
    /// eigenvalues-only run.
    pub kappa: Option<Vec<f64>>,
}

impl SpectrumReport {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Indices of the `count` eigenvalues of smallest modulus, ties broken
    /// by index.
    pub fn smallest_modulus(&self, count: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.eigenvalues[a]
                .norm()
                .total_cmp(&self.eigenvalues[b].norm())
                .then(a.cmp(&b))
        });
        idx.truncate(count);
        idx
    }

    /// Number of eigenvalues within `tol` of `z`.
    pub fn count_near(&self, z: C64, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| (*l - z).norm() <= tol).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,kappa\n");
        for (i, z) in self.eigenvalues.iter().enumerate() {
            match &self.kappa {
                Some(k) => {
                    let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", z.re, z.im, k[i]);
                }
                None => {
                    let _ = writeln!(s, "{:.16e},{:.16e},", z.re, z.im);
                }
            }
        }
        s
    }
}

/// Applies `op` to every unit vector and stacks the results.
pub fn materialize(op: &dyn LinearOperator) -> Result<DenseMatrix> {
    let n = op.dim();
    if n > DENSE_EIG_CAP {
        return Err(Error::Size {
            size: n,
            cap: DENSE_EIG_CAP,
        });
    }
    let mut m = DenseMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let col = op.apply(&e)?;
        m.col_mut(j).copy_from_slice(&col);
        e[j] = C64::new(0.0, 0.0);
    }
    Ok(m)
}

/// Dense spectrum of `op`. With `with_kappa` the eigenvectors are computed
/// too, which roughly triples the cost.
pub fn preconditioned_spectrum(op: &dyn LinearOperator, label: &str, with_kappa: bool) -> Result<SpectrumReport> {
    let m = materialize(op)?;
    spectrum_of_matrix(&m, label, with_kappa)
}

pub fn spectrum_of_matrix(m: &DenseMatrix, label: &str, with_kappa: bool) -> Result<SpectrumReport> {
    if m.nrows() > DENSE_EIG_CAP {
        return Err(Error::Size {
            size: m.nrows(),
            cap: DENSE_EIG_CAP,
        });
    }
    if with_kappa {
        let e = dense_eig(m)?;
        Ok(SpectrumReport {
            label: label.to_string(),
            eigenvalues: e.eigenvalues,
            kappa: Some(e.kappa),
        })
    } else {
        Ok(SpectrumReport {
            label: label.to_string(),
            eigenvalues: eigenvalues(m)?,
            kappa: None,
        })
    }
}

/// `s(z) = prod (1 - z/lambda_j) / prod (1 - z/nu_j)`.
pub fn s_function(lambdas: &[C64], nus: &[C64], z: C64) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    let mut val = one;
    for (l, nu) in lambdas.iter().zip(nus) {
        if *l == C64::new(0.0, 0.0) || *nu == C64::new(0.0, 0.0) {
            return Err(Error::Pole("zero eigenvalue or harmonic Ritz value".into()));
        }
        let den = one - z / nu;
        if den.norm() <= f64::EPSILON * (1.0 + (z / nu).norm()) {
            return Err(Error::Pole(format!("z = {z} coincides with nu = {nu}")));
        }
        val *= (one - z / l) / den;
    }
    Ok(val)
}

/// `max |s(lambda)|` over `complement`; 0 for an empty complement.
pub fn evaluate_s_factor(lambdas: &[C64], nus: &[C64], complement: &[C64]) -> Result<f64> {
    if lambdas.len() != nus.len() {
        return Err(Error::Dimension(format!(
            "s factor needs matching sets, got {} eigenvalues and {} HR values",
            lambdas.len(),
            nus.len()
        )));
    }
    let mut best = 0.0f64;
    for &z in complement {
        best = best.max(s_function(lambdas, nus, z)?.norm());
    }
    Ok(best)
}

/// Polynomial `q(z) = 1 + sum_k c_k z^k` with `q(0) = 1`.
#[derive(Debug, Clone)]
pub struct MinimaxPolynomial {
    /// Monomial coefficients `c_1..c_m`.
    pub coefficients: Vec<C64>,
    /// `max |q(z_i)|` over the input points.
    pub value: f64,
}

impl MinimaxPolynomial {
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = (acc + c) * z;
        }
        acc + 1.0
    }
}

fn distinct_points(points: &[C64]) -> Vec<C64> {
    let scale = points.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let mut out: Vec<C64> = Vec::new();
    for &z in points {
        if !out.iter().any(|w| (w - z).norm() <= 1e-14 * scale) {
            out.push(z);
        }
    }
    out
}

/// Expands `prod (1 - z/p)` into monomial coefficients `c_1..c_m`,
/// padded with zeros up to `m`.
fn interpolating_coefficients(points: &[C64], m: usize) -> Vec<C64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for p in points {
        let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck / p;
        }
        c = next;
    }
    let mut out: Vec<C64> = c[1..].to_vec();
    out.resize(m.max(out.len()), C64::new(0.0, 0.0));
    out
}

/// Discrete complex Chebyshev problem `min max_i |q(z_i)|` over degree-`m`
/// polynomials with `q(0) = 1`, by Lawson's reweighted least squares on a
/// scaled monomial basis. The returned value is attained, so it never
/// undershoots the true minimum.
pub fn minimax_polynomial(points: &[C64], m: usize) -> Result<MinimaxPolynomial> {
    if m == 0 {
        return Err(Error::Dimension("minimax polynomial degree must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Dimension("minimax polynomial needs at least one point".into()));
    }
    if points.iter().any(|z| z.norm() == 0.0) {
        return Err(Error::Pole("minimax points must exclude 0".into()));
    }
    let pts = distinct_points(points);
    if m >= pts.len() {
        let coefficients = interpolating_coefficients(&pts, m);
        return Ok(MinimaxPolynomial {
            coefficients,
            value: 0.0,
        });
    }
    let scale = pts.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let n = pts.len();
    // basis columns (z/scale)^k, k = 1..m
    let powers: Vec<Vec<C64>> = pts
        .iter()
        .map(|z| {
            let t = z / scale;
            let mut p = Vec::with_capacity(m);
            let mut acc = C64::new(1.0, 0.0);
            for _ in 0..m {
                acc *= t;
                p.push(acc);
            }
            p
        })
        .collect();
    let eval = |c: &[C64], i: usize| -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for (ck, pk) in c.iter().zip(&powers[i]) {
            acc += ck * pk;
        }
        acc
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut best: Option<(Vec<C64>, f64)> = None;
    for _ in 0..LAWSON_MAX_ITERATIONS {
        let a = DenseMatrix::from_fn(n, m, |i, k| powers[i][k] * w[i].sqrt());
        let rhs: Vec<C64> = w.iter().map(|wi| C64::new(-wi.sqrt(), 0.0)).collect();
        let c = match least_squares_solve(&a, &rhs) {
            Ok(c) => c,
            Err(_) => break,
        };
        let vals: Vec<f64> = (0..n).map(|i| eval(&c, i).norm()).collect();
        let value = vals.iter().fold(0.0f64, |a, &v| a.max(v));
        if best.as_ref().map_or(true, |b| value < b.1) {
            best = Some((c, value));
        }
        let mut next: Vec<f64> = w.iter().zip(&vals).map(|(wi, v)| wi * v).collect();
        let total: f64 = next.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            break;
        }
        next.iter_mut().for_each(|x| *x /= total);
        let change = next.iter().zip(&w).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        w = next;
        if change < LAWSON_STAGNATION {
            break;
        }
    }
    let (c, value) = match best {
        Some(b) => b,
        // the constant polynomial is always admissible
        None => (vec![C64::new(0.0, 0.0); m], 1.0),
    };
    let mut s = 1.0;
    let coefficients = c
        .iter()
        .map(|ck| {
            s /= scale;
            ck * s
        })
        .collect();
    Ok(MinimaxPolynomial { coefficients, value })
}

/// How the eigenvalue subset `Lambda_J` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// The `J` eigenvalues of smallest modulus.
    SmallestModulus,
    /// The `J` eigenvalues closest to some HR value at step `l`.
    Closest,
}

impl Selection {
    pub fn name(&self) -> &'static str {
        match self {
            Selection::SmallestModulus => "smallest-modulus",
            Selection::Closest => "closest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smallest-modulus" => Some(Selection::SmallestModulus),
            "closest" => Some(Selection::Closest),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub l: usize,
    pub m: usize,
    pub j: usize,
    pub lambda_j: Vec<C64>,
    pub nu_j: Vec<C64>,
    pub factor1: f64,
    pub factor2: f64,
    pub factor3: f64,
    pub bound: f64,
    pub observed: f64,
}

impl BoundReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.observed <= self.bound + slack
    }

    pub const CSV_HEADER: &'static str = "l,m,J,factor1,factor2,factor3,bound,observed\n";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            self.l, self.m, self.j, self.factor1, self.factor2, self.factor3, self.bound, self.observed
        )
    }
}

pub fn bounds_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from(BoundReport::CSV_HEADER);
    for r in reports {
        s.push_str(&r.csv_row());
    }
    s
}

/// Greedy one-to-one matching: repeatedly takes the globally closest
/// remaining (eigenvalue, HR value) pair. Returns `(eig index, hr index)`.
fn greedy_match(eigs: &[C64], eig_pool: &[usize], hr: &[C64], count: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(eig_pool.len() * hr.len());
    for &i in eig_pool {
        for (j, nu) in hr.iter().enumerate() {
            pairs.push(((eigs[i] - nu).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; eigs.len()];
    let mut used_h = vec![false; hr.len()];
    let mut out = Vec::with_capacity(count);
    for (_, i, j) in pairs {
        if out.len() == count {
            break;
        }
        if !used_e[i] && !used_h[j] {
            used_e[i] = true;
            used_h[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Evaluates the three-factor bound on `||r_{l+m}|| / ||r_l||` for a
/// diagonalizable operator whose spectrum (with condition numbers) is
/// `spectrum`.
pub fn evaluate_convergence_bound(
    trace: &GmresTrace,
    spectrum: &SpectrumReport,
    j: usize,
    l: usize,
    m: usize,
    selection: Selection,
) -> Result<BoundReport> {
    let n = spectrum.len();
    let kappa = spectrum
        .kappa
        .as_ref()
        .ok_or_else(|| Error::BoundUnavailable("spectrum was computed without eigenvectors".into()))?;
    if l == 0 || m == 0 {
        return Err(Error::BoundUnavailable(format!("need l >= 1 and m >= 1, got l = {l}, m = {m}")));
    }
    if j > l {
        return Err(Error::BoundUnavailable(format!("J = {j} exceeds l = {l}")));
    }
    if l + m >= n || l + m > trace.basis_dim {
        return Err(Error::BoundUnavailable(format!(
            "l + m = {} must be below N = {n} and within the {} recorded iterations",
            l + m,
            trace.basis_dim
        )));
    }
    let r_l = trace.residual_norms[l];
    if r_l == 0.0 {
        return Err(Error::BoundUnavailable(format!("residual vanishes at l = {l}")));
    }
    let observed = trace.residual_norms[l + m] / r_l;
    let hr = harmonic_ritz(&trace.hessenberg, l).map_err(|e| match e {
        Error::HrUndefined(_) => Error::BoundUnavailable(format!("HR values undefined at l = {l}")),
        other => other,
    })?;
    let eigs = &spectrum.eigenvalues;
    let pool: Vec<usize> = match selection {
        Selection::SmallestModulus => spectrum.smallest_modulus(j),
        Selection::Closest => (0..n).collect(),
    };
    let matched = greedy_match(eigs, &pool, &hr, j);
    let mut in_j = vec![false; n];
    let mut lambda_j = Vec::with_capacity(j);
    let mut nu_j = Vec::with_capacity(j);
    for &(ei, hi) in &matched {
        in_j[ei] = true;
        lambda_j.push(eigs[ei]);
        nu_j.push(hr[hi]);
    }
    let complement: Vec<C64> = (0..n).filter(|&i| !in_j[i]).map(|i| eigs[i]).collect();
    let factor1: f64 = (0..n).filter(|&i| !in_j[i]).map(|i| kappa[i]).sum();
    let factor2 = if j == 0 {
        1.0
    } else {
        evaluate_s_factor(&lambda_j, &nu_j, &complement)?
    };
    let factor3 = minimax_polynomial(&complement, m)?.value;
    Ok(BoundReport {
        l,
        m,
        j,
        lambda_j,
        nu_j,
        factor1,
        factor2,
        factor3,
        bound: factor1 * factor2 * factor3,
        observed,
    })
}

/// Iteration ranges `(start, end)` where the windowed reduction factor
/// `(r_{i+window} / r_i)^(1/window)` exceeds `rate`; overlapping windows
/// are merged, so every range spans at least `window` iterations.
pub fn detect_plateaus(residuals: &[f64], window: usize, rate: f64) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    if window < 2 || residuals.len() <= window {
        return out;
    }
    for i in 0..residuals.len() - window {
        let (a, b) = (residuals[i], residuals[i + window]);
        let factor = if a > 0.0 { (b / a).powf(1.0 / window as f64) } else { 0.0 };
        if factor > rate {
            match out.last_mut() {
                Some(last) if i <= last.1 => last.1 = i + window,
                _ => out.push((i, i + window)),
            }
        }
    }
    out
}

/// Largest windowed reduction factor over windows starting at or after
/// `from`; `None` when no complete window fits.
pub fn max_window_factor(residuals: &[f64], window: usize, from: usize) -> Option<f64> {
    if window == 0 || residuals.len() <= window + from {
        return None;
    }
    (from..residuals.len() - window)
        .map(|i| {
            let (a, b) = (residuals[i], residuals[i + window]);
            if a > 0.0 {
                (b / a).powf(1.0 / window as f64)
            } else {
                0.0
            }
        })
        .reduce(f64::max)
}

pub fn plateaus_csv(ranges: &[(usize, usize)]) -> String {
    let mut s = String::from("start,end\n");
    for (a, b) in ranges {
        let _ = writeln!(s, "{a},{b}");
    }
    s
}

/// Distance from each target to the nearest HR value at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct HrDistances {
    pub iteration: usize,
    pub distances: Vec<f64>,
}

/// For every recorded step with defined HR values, `min_j |nu_j - target|`
/// for each target.
pub fn match_hr_trajectories(trace: &GmresTrace, targets: &[C64]) -> Vec<HrDistances> {
    trace
        .hr_values
        .iter()
        .filter_map(|rec| {
            let values = rec.values.as_ref()?;
            let distances = targets
                .iter()
                .map(|t| values.iter().map(|nu| (nu - t).norm()).fold(f64::INFINITY, f64::min))
                .collect();
            Some(HrDistances {
                iteration: rec.iteration,
                distances,
            })
        })
        .collect()
}

pub fn hr_distances_csv(targets: &[C64], rows: &[HrDistances]) -> String {
    let mut s = String::from("iteration,target,target_re,target_im,distance\n");
    for row in rows {
        for (t, (z, d)) in targets.iter().zip(&row.distances).enumerate() {
            let _ = writeln!(s, "{},{t},{:.16e},{:.16e},{:.16e}", row.iteration, z.re, z.im, d);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{gmres, GmresConfig, Identity};
    use crate::linalg::DenseLu;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn planted(rng: &mut ChaCha8Rng, eigs: &[C64]) -> DenseMatrix {
        let n = eigs.len();
        let v = DenseMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 2.0 } else { 0.0 };
            C64::new(rng.gen_range(-1.0..1.0) + d, rng.gen_range(-1.0..1.0))
        });
        let vinv = DenseLu::factor(&v).unwrap().inverse().unwrap();
        v.matmul(&DenseMatrix::diagonal(eigs)).unwrap().matmul(&vinv).unwrap()
    }

    fn random_b(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn full_run(a: &DenseMatrix, b: &[C64]) -> GmresTrace {
        let cfg = GmresConfig {
            tol: 1e-10,
            maxiter: a.nrows(),
            ..Default::default()
        };
        gmres(a, None, b, &cfg).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let r = preconditioned_spectrum(&Identity(5), "I", true).unwrap();
        assert_eq!(r.count_near(c(1.0), 1e-14), 5);
        for k in r.kappa.unwrap() {
            assert!((k - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_spectrum_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eigs: Vec<C64> = (0..20).map(|i| C64::new(1.0 + i as f64, 0.5 * (i % 3) as f64)).collect();
        let a = planted(&mut rng, &eigs);
        let r = spectrum_of_matrix(&a, "planted", true).unwrap();
        for z in &eigs {
            assert_eq!(r.count_near(*z, 1e-8), 1, "eigenvalue {z}");
        }
        assert!(r.kappa.unwrap().iter().all(|&k| k >= 1.0 - 1e-12));
    }

    #[test]
    fn cap_is_enforced() {
        let err = materialize(&Identity(DENSE_EIG_CAP + 1)).unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
    }

    #[test]
    fn s_factor_examples() {
        let lam = [c(1.0), c(2.0)];
        assert!((evaluate_s_factor(&lam, &lam, &[c(5.0), C64::new(0.0, 3.0)]).unwrap() - 1.0).abs() < 1e-15);
        let f = evaluate_s_factor(&[c(1.0)], &[c(1.1)], &[c(10.0)]).unwrap();
        let want = 9.0 / (1.0f64 - 10.0 / 1.1).abs();
        assert!((f - want).abs() < 1e-12);
        assert!((f - 1.1123).abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            let g = evaluate_s_factor(&[c(1.0)], &[c(1.0 + eps)], &[c(10.0)]).unwrap();
            assert!((g - 1.0).abs() < (prev - 1.0).abs() || prev.is_infinite());
            prev = g;
        }
        assert!((prev - 1.0).abs() < 1e-5);
        assert!(matches!(
            evaluate_s_factor(&[c(1.0)], &[c(2.0)], &[c(2.0)]),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn s_factor_near_telescoping() {
        let lam = [c(1.0), C64::new(2.0, 1.0), c(-3.0)];
        let nu: Vec<C64> = lam.iter().map(|z| z + C64::new(5e-5, -5e-5)).collect();
        let f = evaluate_s_factor(&lam, &nu, &[c(4.0), C64::new(0.5, 0.5), c(10.0)]).unwrap();
        assert!(f <= 1.0 + 1e-3);
    }

    #[test]
    fn minimax_examples() {
        let q = minimax_polynomial(&[c(2.0)], 1).unwrap();
        assert_eq!(q.value, 0.0);
        assert!(q.eval(c(2.0)).norm() < 1e-15);
        assert!((q.eval(c(0.0)) - c(1.0)).norm() < 1e-15);

        let q = minimax_polynomial(&[c(1.0), c(3.0), C64::new(2.0, 1.0)], 4).unwrap();
        assert_eq!(q.value, 0.0);
        for z in [c(1.0), c(3.0), C64::new(2.0, 1.0)] {
            assert!(q.eval(z).norm() < 1e-12);
        }
    }

    #[test]
    fn minimax_two_points_matches_grid_search() {
        // q(z) = 1 - z/nu, grid over complex nu
        let pts = [c(1.0), c(3.0)];
        let mut grid_best = f64::INFINITY;
        for a in 0..=400 {
            for b in -100..=100 {
                let nu = C64::new(1.0 + a as f64 * 0.005, b as f64 * 0.005);
                let v = pts.iter().map(|z| (c(1.0) - z / nu).norm()).fold(0.0, f64::max);
                grid_best = grid_best.min(v);
            }
        }
        let q = minimax_polynomial(&pts, 1).unwrap();
        assert!((grid_best - 0.5).abs() < 1e-9);
        assert!(q.value >= grid_best - 1e-12);
        assert!(q.value - grid_best < 1e-3, "lawson {} vs grid {grid_best}", q.value);
    }

    #[test]
    fn minimax_complex_points_match_grid_search() {
        let pts = [c(1.0), C64::new(2.0, 1.0), C64::new(2.0, -1.0), c(4.0)];
        let mut grid_best = f64::INFINITY;
        for a in 0..=300 {
            for b in -150..=150 {
                let nu = C64::new(0.5 + a as f64 * 0.01, b as f64 * 0.01);
                if nu.norm() < 1e-9 {
                    continue;
                }
                let v = pts.iter().map(|z| (c(1.0) - z / nu).norm()).fold(0.0, f64::max);
                grid_best = grid_best.min(v);
            }
        }
        let q = minimax_polynomial(&pts, 1).unwrap();
        assert!(q.value - grid_best < 1e-3, "lawson {} vs grid {grid_best}", q.value);
    }

    #[test]
    fn bound_with_planted_small_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut eigs: Vec<C64> = (0..14).map(|i| C64::new(1.0 + 0.02 * i as f64, 0.01 * i as f64)).collect();
        eigs.push(c(0.01));
        let a = planted(&mut rng, &eigs);
        let b = random_b(&mut rng, 15);
        let t = full_run(&a, &b);
        let spec = spectrum_of_matrix(&a, "A", true).unwrap();
        let l = 4;
        let r = evaluate_convergence_bound(&t, &spec, 1, l, 2, Selection::SmallestModulus).unwrap();
        assert!((r.lambda_j[0] - c(0.01)).norm() < 1e-10);
        assert!(r.holds(1e-8), "{r:?}");
        let r0 = evaluate_convergence_bound(&t, &spec, 0, l, 2, Selection::SmallestModulus).unwrap();
        assert!(r0.holds(1e-8));
        assert_eq!(r0.factor2, 1.0);
        assert!(r.bound <= r0.bound);
    }

    #[test]
    fn bound_errors() {
        let a = DenseMatrix::diagonal(&[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let t = full_run(&a, &[c(1.0); 4]);
        let spec = spectrum_of_matrix(&a, "A", true).unwrap();
        assert!(matches!(
            evaluate_convergence_bound(&t, &spec, 2, 1, 1, Selection::Closest),
            Err(Error::BoundUnavailable(_))
        ));
        assert!(matches!(
            evaluate_convergence_bound(&t, &spec, 1, 2, 2, Selection::Closest),
            Err(Error::BoundUnavailable(_))
        ));
        let no_kappa = spectrum_of_matrix(&a, "A", false).unwrap();
        assert!(evaluate_convergence_bound(&t, &no_kappa, 1, 1, 1, Selection::Closest).is_err());
        let r = evaluate_convergence_bound(&t, &spec, 1, 2, 1, Selection::Closest).unwrap();
        assert!(r.holds(1e-8));
    }

    #[test]
    fn plateau_examples() {
        let geo: Vec<f64> = (0..40).map(|i| 0.5f64.powi(i)).collect();
        assert!(detect_plateaus(&geo, 10, 0.99).is_empty());

        let flat = vec![1.0; 30];
        assert_eq!(detect_plateaus(&flat, 10, 0.99), vec![(0, 29)]);

        let mut h = Vec::new();
        let mut r = 1.0;
        for _ in 0..15 {
            h.push(r);
            r *= 0.5;
        }
        let start = h.len();
        for _ in 0..20 {
            h.push(r);
        }
        for _ in 0..15 {
            r *= 0.5;
            h.push(r);
        }
        let p = detect_plateaus(&h, 10, 0.99);
        assert_eq!(p.len(), 1);
        let (a, b) = p[0];
        assert!(a.abs_diff(start - 1) <= 1 && b.abs_diff(start + 19) <= 1, "{p:?} vs start {start}");
    }

    #[test]
    fn hr_distances_on_diagonal() {
        let a = DenseMatrix::diagonal(&[c(1.0), c(2.0), c(3.0)]);
        let cfg = GmresConfig {
            tol: 1e-15,
            ..Default::default()
        };
        let t = gmres(&a, None, &[c(1.0); 3], &cfg).unwrap();
        let rows = match_hr_trajectories(&t, &[c(1.0), c(2.0), c(3.0), c(50.0)]);
        let last = rows.last().unwrap();
        assert_eq!(last.iteration, 3);
        for d in &last.distances[..3] {
            assert!(*d <= 1e-8);
        }
        assert!(rows.iter().all(|r| r.distances[3] > 40.0));
    }

    #[test]
    fn hr_distances_nonincreasing_for_normal_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = 8;
            let eigs: Vec<C64> = (0..n)
                .map(|i| C64::new(1.0 + i as f64 + rng.gen_range(0.0..0.5), rng.gen_range(-0.1..0.1)))
                .collect();
            let a = DenseMatrix::diagonal(&eigs);
            let b = random_b(&mut rng, n);
            let cfg = GmresConfig {
                tol: 1e-14,
                ..Default::default()
            };
            let t = gmres(&a, None, &b, &cfg).unwrap();
            let target = eigs[0];
            let rows = match_hr_trajectories(&t, &[target]);
            for w in rows.windows(2) {
                assert!(w[1].distances[0] <= w[0].distances[0] + 1e-12, "{rows:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn minimax_is_nonincreasing_in_degree(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<C64> = (0..6)
                .map(|_| C64::new(rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut prev = f64::INFINITY;
            for m in 1..=6 {
                let v = minimax_polynomial(&pts, m).unwrap().value;
                prop_assert!(v <= prev + 1e-6, "m = {m}: {v} > {prev}");
                prev = v;
            }
        }

        #[test]
        fn bound_inequality_holds(seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(3..=15);
            let eigs: Vec<C64> = (0..n)
                .map(|_| {
                    let r = rng.gen_range(0.05..3.0);
                    let th = rng.gen_range(-1.2..1.2);
                    C64::from_polar(r, th)
                })
                .collect();
            let a = planted(&mut rng, &eigs);
            let b = random_b(&mut rng, n);
            let t = full_run(&a, &b);
            let spec = spectrum_of_matrix(&a, "A", true).unwrap();
            let top = t.basis_dim.min(n - 1);
            prop_assume!(top >= 2);
            let l = rng.gen_range(1..top);
            let m = rng.gen_range(1..=top - l);
            let j = rng.gen_range(0..=l);
            let sel = if rng.gen_bool(0.5) { Selection::SmallestModulus } else { Selection::Closest };
            match evaluate_convergence_bound(&t, &spec, j, l, m, sel) {
                Ok(r) => prop_assert!(r.holds(1e-8), "{r:?}"),
                Err(Error::Pole(_)) => {}
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }
    }
}
