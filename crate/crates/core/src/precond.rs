//! One-level ORAS, deflation projectors, the adapted deflation
//! preconditioner `P_adef = M^{-1} P_def + Q`, cavity quasimodes and a
//! DtN coarse space.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::fem::{helmholtz_coefficients, DofMap, FormAssembler, GeometryParams, Mesh};
use crate::krylov::LinearOperator;
use crate::linalg::vector::{axpy, norm2};
use crate::linalg::{dense_eig, mm, CsrMatrix, DenseLu, DenseMatrix, HouseholderQr, SparseLu};
use crate::partition::{Decomposition, LocalProblem};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `M^{-1} = sum_s R_s^T D_s B_s^{-1} R_s`.
pub struct Oras {
    pub dec: Decomposition,
    pub locals: Vec<LocalProblem>,
}

impl Oras {
    pub fn new(dec: Decomposition, locals: Vec<LocalProblem>) -> Result<Self> {
        if dec.num_subdomains() != locals.len() {
            return Err(Error::Dimension(format!(
                "{} local problems for {} subdomains",
                locals.len(),
                dec.num_subdomains()
            )));
        }
        Ok(Self { dec, locals })
    }
}

impl LinearOperator for Oras {
    fn dim(&self) -> usize {
        self.dec.num_dofs()
    }

    fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![ZERO; self.dec.num_dofs()];
        for (s, lp) in self.locals.iter().enumerate() {
            let local = self.dec.restrict(s, v)?;
            let sol = lp.solve(&local)?;
            self.dec.extend_weighted_add(s, &sol, &mut out)?;
        }
        Ok(out)
    }
}

/// Resonance wavenumber of the closed cavity mode `(m, n)`: Dirichlet on
/// the open side, Neumann on the three walls.
pub fn quasimode_wavenumber(m: usize, n: usize, length: f64, opening: f64) -> f64 {
    let a = (m as f64 + 0.5) / length;
    let b = n as f64 / opening;
    PI * (a * a + b * b).sqrt()
}

/// All `(m, n)` with `k_{m,n}` within `rel_window` of `k`, closest first.
pub fn quasimodes_near(k: f64, rel_window: f64, length: f64, opening: f64) -> Vec<(usize, usize)> {
    let kmax = k * (1.0 + rel_window);
    let mut out = Vec::new();
    let mut m = 0;
    while quasimode_wavenumber(m, 0, length, opening) <= kmax {
        let mut n = 0;
        while quasimode_wavenumber(m, n, length, opening) <= kmax {
            if (quasimode_wavenumber(m, n, length, opening) - k).abs() <= rel_window * k {
                out.push((m, n));
            }
            n += 1;
        }
        m += 1;
    }
    sort_by_distance(&mut out, k, length, opening);
    out
}

/// The `count` modes closest to `k` in wavenumber (ties by index).
pub fn closest_quasimodes(k: f64, count: usize, length: f64, opening: f64) -> Vec<(usize, usize)> {
    if count == 0 {
        return Vec::new();
    }
    // every mode with k_{m,n} <= k + r is inside the box below, and at least
    // `count` of them lie within r once r reaches the count-th distance
    let mut r = k.max(1.0);
    loop {
        let mmax = ((k + r) * length / PI) as usize + 1;
        let nmax = ((k + r) * opening / PI) as usize + 1;
        let mut cands: Vec<(usize, usize)> = (0..=mmax)
            .flat_map(|m| (0..=nmax).map(move |n| (m, n)))
            .filter(|&(m, n)| (quasimode_wavenumber(m, n, length, opening) - k).abs() <= r)
            .collect();
        if cands.len() >= count {
            sort_by_distance(&mut cands, k, length, opening);
            cands.truncate(count);
            return cands;
        }
        r *= 2.0;
    }
}

fn sort_by_distance(modes: &mut [(usize, usize)], k: f64, length: f64, opening: f64) {
    modes.sort_by(|&a, &b| {
        let da = (quasimode_wavenumber(a.0, a.1, length, opening) - k).abs();
        let db = (quasimode_wavenumber(b.0, b.1, length, opening) - k).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
}

/// Nodal interpolant of `sin((m + 1/2) pi xi / L_O) cos(n pi eta / l_O)`
/// on the dofs of the closed cavity interior, zero elsewhere, unit 2-norm.
pub fn quasimode_vector(m: usize, n: usize, g: &GeometryParams, dofmap: &DofMap) -> Result<Vec<C64>> {
    let cav = g
        .cavity
        .as_ref()
        .ok_or_else(|| Error::Geometry("quasimode vectors need a cavity".into()))?;
    let [x0, x1, y0, y1] = cav.interior();
    let tol = 1e-9 * cav.length.max(cav.opening);
    let mut v = vec![ZERO; dofmap.num_dofs()];
    for (d, val) in v.iter_mut().enumerate() {
        let [x, y] = dofmap.dof_coords(d);
        if x < x0 - tol || x > x1 + tol || y < y0 - tol || y > y1 + tol {
            continue;
        }
        let xi = (x - x0).clamp(0.0, cav.length);
        let eta = (y - y0).clamp(0.0, cav.opening);
        let u = ((m as f64 + 0.5) * PI * xi / cav.length).sin() * (n as f64 * PI * eta / cav.opening).cos();
        *val = C64::new(u, 0.0);
    }
    let nrm = norm2(&v);
    if nrm == 0.0 {
        return Err(Error::Geometry("cavity interior contains no dofs".into()));
    }
    v.iter_mut().for_each(|z| *z /= nrm);
    Ok(v)
}

/// Origin of a deflation column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnLabel {
    /// DtN eigenvector `index` of subdomain `subdomain`.
    CoarseSpace { subdomain: usize, index: usize },
    /// Cavity quasimode `(m, n)`.
    Quasimode { m: usize, n: usize },
}

impl ColumnLabel {
    fn csv(&self) -> String {
        match self {
            ColumnLabel::CoarseSpace { subdomain, index } => format!("coarse_space,{subdomain},{index},,"),
            ColumnLabel::Quasimode { m, n } => format!("quasimode,,,{m},{n}"),
        }
    }
}

/// DtN coarse-space columns: per subdomain, the `per_subdomain`
/// interface eigenvectors of `DtN v = lambda M_Gamma v` with smallest
/// `|Re lambda|`, harmonically extended, weighted by `D_s` and extended by
/// zero.
pub fn build_dtn_coarse_space(
    dec: &Decomposition,
    locals: &[LocalProblem],
    g: &GeometryParams,
    mesh: &Mesh,
    dofmap: &DofMap,
    per_subdomain: usize,
) -> Result<(Vec<Vec<C64>>, Vec<ColumnLabel>)> {
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    if per_subdomain == 0 || dec.num_subdomains() == 1 {
        return Ok((cols, labels));
    }
    for (s, (sd, lp)) in dec.subdomains().iter().zip(locals).enumerate() {
        let n = sd.len();
        let mut on_gamma = vec![false; n];
        for (i, row) in (0..n).map(|i| (i, lp.interface_mass.row(i))) {
            on_gamma[i] = row.1.iter().any(|v| v.norm() > 0.0);
        }
        let gamma: Vec<usize> = (0..n).filter(|&i| on_gamma[i]).collect();
        let inner: Vec<usize> = (0..n).filter(|&i| !on_gamma[i]).collect();
        if gamma.len() < per_subdomain {
            return Err(Error::DeflationSetup(format!(
                "subdomain {s} has {} interface dofs, fewer than the {per_subdomain} requested",
                gamma.len()
            )));
        }
        let (kii_lu, kig, kgg) = match schur_blocks(&lp.volume, &inner, &gamma) {
            Ok(b) => b,
            Err(Error::SingularMatrix { .. }) => {
                let shifted = GeometryParams {
                    wavenumber: g.wavenumber * (1.0 + 1e-8),
                    ..g.clone()
                };
                let asm = FormAssembler::new(mesh, dofmap);
                let coeff = |x: [f64; 2]| helmholtz_coefficients(&shifted, x);
                let vol = asm.matrix(sd.elements.iter().copied(), |d| sd.local_index(d), n, &coeff)?;
                schur_blocks(&vol, &inner, &gamma)?
            }
            Err(e) => return Err(e),
        };
        let ng = gamma.len();
        // S = K_gg - K_gi K_ii^{-1} K_ig, where K_gi = K_ig^T by symmetry
        let mut x_ig: Vec<Vec<C64>> = Vec::with_capacity(ng);
        let mut schur = kgg;
        for j in 0..ng {
            let mut rhs = vec![ZERO; inner.len()];
            for &(r, v) in &kig[j] {
                rhs[r] = v;
            }
            let x = kii_lu.solve(&rhs)?;
            for i in 0..ng {
                let acc: C64 = kig[i].iter().map(|&(r, v)| v * x[r]).sum();
                schur[(i, j)] -= acc;
            }
            x_ig.push(x);
        }
        let mass = lp.interface_mass.submatrix(&gamma, &gamma).to_dense();
        let op = DenseLu::factor(&mass)?.solve_matrix(&schur)?;
        let eig = dense_eig(&op)?;
        let mut order: Vec<usize> = (0..ng).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .re
                .abs()
                .total_cmp(&eig.eigenvalues[b].re.abs())
                .then(a.cmp(&b))
        });
        for (index, &e) in order.iter().take(per_subdomain).enumerate() {
            let vg = eig.right.col(e);
            let mut local = vec![ZERO; n];
            for (k, &gi) in gamma.iter().enumerate() {
                local[gi] = vg[k];
            }
            // harmonic extension u_I = -K_ii^{-1} K_ig v_g
            for (j, x) in x_ig.iter().enumerate() {
                for (k, &ii) in inner.iter().enumerate() {
                    local[ii] -= x[k] * vg[j];
                }
            }
            let mut col = vec![ZERO; dec.num_dofs()];
            dec.extend_weighted_add(s, &local, &mut col)?;
            cols.push(col);
            labels.push(ColumnLabel::CoarseSpace { subdomain: s, index });
        }
    }
    Ok((cols, labels))
}

/// `K_ii` factorized, the columns of `K_ig` as sparse (row, value) lists,
/// and `K_gg` dense.
fn schur_blocks(
    k: &CsrMatrix,
    inner: &[usize],
    gamma: &[usize],
) -> Result<(SparseLu, Vec<Vec<(usize, C64)>>, DenseMatrix)> {
    let kii_lu = SparseLu::factor(&k.submatrix(inner, inner))?;
    let kig = k.submatrix(inner, gamma);
    let mut cols = vec![Vec::new(); gamma.len()];
    for i in 0..kig.nrows() {
        let (c, v) = kig.row(i);
        for (&j, &x) in c.iter().zip(v) {
            cols[j].push((i, x));
        }
    }
    Ok((kii_lu, cols, k.submatrix(gamma, gamma).to_dense()))
}

/// Deflation data for a column block `Z`: `E = Z^* A Z` factorized, and
/// `A Z` kept for the projector applications.
pub struct DeflationBasis {
    z: DenseMatrix,
    az: DenseMatrix,
    e_lu: Option<DenseLu>,
    labels: Vec<ColumnLabel>,
}

impl DeflationBasis {
    /// Checks that `Z` has full column rank and `E` is nonsingular.
    pub fn new(a: &dyn LinearOperator, z: DenseMatrix, labels: Vec<ColumnLabel>) -> Result<Self> {
        if z.nrows() != a.dim() {
            return Err(Error::Dimension(format!("Z has {} rows for an operator of size {}", z.nrows(), a.dim())));
        }
        if labels.len() != z.ncols() {
            return Err(Error::Dimension(format!("{} labels for {} columns", labels.len(), z.ncols())));
        }
        if z.ncols() == 0 {
            return Ok(Self {
                az: DenseMatrix::zeros(z.nrows(), 0),
                e_lu: None,
                z,
                labels,
            });
        }
        let qr = HouseholderQr::new(&z)?;
        if qr.rank() < z.ncols() {
            return Err(Error::DeflationSetup(format!(
                "Z is rank deficient (rank {} of {}, min relative |R_ii| {:.3e})",
                qr.rank(),
                z.ncols(),
                qr.min_relative_diag()
            )));
        }
        let cols: Result<Vec<Vec<C64>>> = (0..z.ncols()).map(|j| a.apply(z.col(j))).collect();
        let az = DenseMatrix::from_columns(z.nrows(), &cols?);
        let e = z.adjoint().matmul(&az)?;
        let e_lu = Some(
            DenseLu::factor(&e)
                .map_err(|err| Error::DeflationSetup(format!("coarse operator E = Z*AZ is singular: {err}")))?,
        );
        Ok(Self { z, az, e_lu, labels })
    }

    pub fn from_columns(a: &dyn LinearOperator, cols: &[Vec<C64>], labels: Vec<ColumnLabel>) -> Result<Self> {
        Self::new(a, DenseMatrix::from_columns(a.dim(), cols), labels)
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    /// Total number of columns.
    pub fn len(&self) -> usize {
        self.z.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.z.ncols() == 0
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    pub fn num_coarse(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, ColumnLabel::CoarseSpace { .. }))
            .count()
    }

    pub fn num_quasimodes(&self) -> usize {
        self.len() - self.num_coarse()
    }

    /// `E^{-1} Z^* v`.
    fn coarse_solve(&self, v: &[C64]) -> Result<Vec<C64>> {
        let lu = self.e_lu.as_ref().expect("nonempty basis");
        lu.solve(&self.z.adjoint_matvec(v)?)
    }

    /// `Q v = Z E^{-1} Z^* v`.
    pub fn apply_q(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.is_empty() {
            return Ok(vec![ZERO; v.len()]);
        }
        self.z.matvec(&self.coarse_solve(v)?)
    }

    /// `P_def v = v - A Q v`.
    pub fn apply_p_def(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        if !self.is_empty() {
            let y = self.az.matvec(&self.coarse_solve(v)?)?;
            axpy(C64::new(-1.0, 0.0), &y, &mut out);
        }
        Ok(out)
    }

    /// `Q_def v = v - Q A v`.
    pub fn apply_q_def(&self, a: &dyn LinearOperator, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        if !self.is_empty() {
            let qa = self.apply_q(&a.apply(v)?)?;
            axpy(C64::new(-1.0, 0.0), &qa, &mut out);
        }
        Ok(out)
    }

    /// Smallest relative `|R_ii|` of a QR factorization of `Z^* M^{-1} Z`;
    /// a value near zero means the second deflation condition fails.
    pub fn second_condition(&self, m_inv: &dyn LinearOperator) -> Result<f64> {
        if self.is_empty() {
            return Ok(1.0);
        }
        let cols: Result<Vec<Vec<C64>>> = (0..self.len()).map(|j| m_inv.apply(self.z.col(j))).collect();
        let mz = DenseMatrix::from_columns(self.dim(), &cols?);
        let g = self.z.adjoint().matmul(&mz)?;
        Ok(HouseholderQr::new(&g)?.min_relative_diag())
    }

    pub fn z_matrix_market(&self) -> String {
        mm::array_to_string(&self.z)
    }

    pub fn labels_csv(&self) -> String {
        let mut s = String::from("column,kind,subdomain,index,m,n\n");
        for (j, l) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "{j},{}", l.csv());
        }
        s
    }
}

/// The right preconditioner `P` handed to GMRES.
pub enum PreconditionerChain {
    None(usize),
    Oras(Oras),
    OrasAdef { oras: Oras, basis: DeflationBasis },
}

impl PreconditionerChain {
    pub fn name(&self) -> &'static str {
        match self {
            PreconditionerChain::None(_) => "none",
            PreconditionerChain::Oras(_) => "oras",
            PreconditionerChain::OrasAdef { .. } => "oras+adef",
        }
    }

    pub fn oras(&self) -> Option<&Oras> {
        match self {
            PreconditionerChain::None(_) => None,
            PreconditionerChain::Oras(o) | PreconditionerChain::OrasAdef { oras: o, .. } => Some(o),
        }
    }

    pub fn basis(&self) -> Option<&DeflationBasis> {
        match self {
            PreconditionerChain::OrasAdef { basis, .. } => Some(basis),
            _ => None,
        }
    }
}

/// `P_adef v = M^{-1} P_def v + Q v`.
pub fn apply_p_adef(oras: &Oras, basis: &DeflationBasis, v: &[C64]) -> Result<Vec<C64>> {
    let mut out = oras.apply(&basis.apply_p_def(v)?)?;
    axpy(C64::new(1.0, 0.0), &basis.apply_q(v)?, &mut out);
    Ok(out)
}

impl LinearOperator for PreconditionerChain {
    fn dim(&self) -> usize {
        match self {
            PreconditionerChain::None(n) => *n,
            PreconditionerChain::Oras(o) => o.dim(),
            PreconditionerChain::OrasAdef { oras, .. } => oras.dim(),
        }
    }

    fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        match self {
            PreconditionerChain::None(_) => Ok(v.to_vec()),
            PreconditionerChain::Oras(o) => o.apply(v),
            PreconditionerChain::OrasAdef { oras, basis } => apply_p_adef(oras, basis, v),
        }
    }
}
