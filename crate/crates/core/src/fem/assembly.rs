use super::basis::{num_local_nodes, physical_grad, tabulate, Tabulation};
use super::quadrature::{gauss_legendre_unit, TriangleRule};
use super::{pml_stretch, Axis, BoundaryTag, DofMap, GeometryParams, Mesh};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::{Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const EDGE_POINTS: usize = 5;

/// Discrete cavity-scattering system `A u = b` on the free dofs.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: CsrMatrix,
    pub b: Vec<C64>,
    pub dofmap: DofMap,
}

/// Coefficients `(c_xx, c_yy, c_mass)` of the form
/// `int c_xx u_x v_x + c_yy u_y v_y + c_mass u v`.
pub type Coefficients<'a> = dyn Fn([f64; 2]) -> [C64; 3] + 'a;

/// Element-loop assembly on a mesh/dofmap pair.
pub struct FormAssembler<'a> {
    mesh: &'a Mesh,
    dofmap: &'a DofMap,
    rule: TriangleRule,
    tab: Tabulation,
    edge_points: Vec<f64>,
    edge_weights: Vec<f64>,
}

impl<'a> FormAssembler<'a> {
    pub fn new(mesh: &'a Mesh, dofmap: &'a DofMap) -> Self {
        let rule = TriangleRule::for_order(dofmap.order());
        let tab = tabulate(dofmap.order(), &rule.points);
        let (edge_points, edge_weights) = gauss_legendre_unit(EDGE_POINTS);
        Self {
            mesh,
            dofmap,
            rule,
            tab,
            edge_points,
            edge_weights,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        self.dofmap
    }

    /// Dense local matrix of triangle `t`, row-major `nloc x nloc`.
    pub fn element_matrix(&self, t: usize, coeff: &Coefficients) -> Vec<C64> {
        let nloc = num_local_nodes(self.dofmap.order());
        let area = self.mesh.area(t);
        let gl = self.mesh.barycentric_gradients(t);
        let mut ke = vec![ZERO; nloc * nloc];
        let mut grads = vec![[0.0; 2]; nloc];
        for (q, (&l, &w)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
            let [cxx, cyy, cm] = coeff(self.mesh.point(t, l));
            let wq = w * area;
            for (i, g) in grads.iter_mut().enumerate() {
                *g = physical_grad(self.tab.bary_grads[q][i], &gl);
            }
            let vals = &self.tab.values[q];
            for i in 0..nloc {
                for j in 0..nloc {
                    let v = cxx * (grads[i][0] * grads[j][0]) + cyy * (grads[i][1] * grads[j][1]) + cm * (vals[i] * vals[j]);
                    ke[i * nloc + j] += v * wq;
                }
            }
        }
        ke
    }

    /// Assembles the form over `elements` into an `n x n` matrix, mapping
    /// global dofs through `local` (dofs mapped to `None` are dropped).
    pub fn matrix(
        &self,
        elements: impl IntoIterator<Item = usize>,
        local: impl Fn(usize) -> Option<usize>,
        n: usize,
        coeff: &Coefficients,
    ) -> Result<CsrMatrix> {
        let nloc = num_local_nodes(self.dofmap.order());
        let mut b = TripletBuilder::new(n, n);
        for t in elements {
            let ke = self.element_matrix(t, coeff);
            let dofs: Vec<(usize, usize)> = self
                .dofmap
                .element_dofs(t)
                .filter_map(|(i, d)| local(d).map(|l| (i, l)))
                .collect();
            for &(i, li) in &dofs {
                for &(j, lj) in &dofs {
                    b.push(li, lj, ke[i * nloc + j]);
                }
            }
        }
        b.build()
    }

    /// Load vector `int f phi_i` over all triangles.
    pub fn load(&self, f: &dyn Fn([f64; 2]) -> C64) -> Vec<C64> {
        let mut out = vec![ZERO; self.dofmap.num_dofs()];
        for t in 0..self.mesh.triangles.len() {
            let area = self.mesh.area(t);
            for (q, (&l, &w)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
                let fv = f(self.mesh.point(t, l)) * (w * area);
                for (i, d) in self.dofmap.element_dofs(t) {
                    out[d] += fv * self.tab.values[q][i];
                }
            }
        }
        out
    }

    /// Quadrature over edge `(a, b)` of triangle `t`: calls `visit(point,
    /// weight, basis values on the edge nodes)` per point.
    fn edge_quadrature(&self, t: usize, a: usize, b: usize, mut visit: impl FnMut([f64; 2], f64, &[(usize, f64)])) {
        let tri = self.mesh.triangles[t];
        let la = tri.iter().position(|&v| v == a).expect("edge vertex");
        let lb = tri.iter().position(|&v| v == b).expect("edge vertex");
        let (pa, pb) = (self.mesh.vertices[a], self.mesh.vertices[b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let nodes = self.dofmap.edge_nodes(t, a, b, self.mesh);
        for (&s, &w) in self.edge_points.iter().zip(&self.edge_weights) {
            let mut l = [0.0; 3];
            l[la] = 1.0 - s;
            l[lb] = s;
            let tab = tabulate(self.dofmap.order(), &[l]);
            let vals: Vec<(usize, f64)> = nodes.iter().map(|&(i, node)| (node, tab.values[0][i])).collect();
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            visit(x, w * len, &vals);
        }
    }

    /// Boundary mass matrix `int_e phi_i phi_j` summed over `edges` given as
    /// (triangle, vertex a, vertex b).
    pub fn edge_mass(
        &self,
        edges: &[(usize, usize, usize)],
        local: impl Fn(usize) -> Option<usize>,
        n: usize,
    ) -> Result<CsrMatrix> {
        let mut b = TripletBuilder::new(n, n);
        for &(t, va, vb) in edges {
            self.edge_quadrature(t, va, vb, |_, w, vals| {
                for &(ni, vi) in vals {
                    let Some(li) = self.dofmap.dof_of_node(ni).and_then(&local) else { continue };
                    for &(nj, vj) in vals {
                        let Some(lj) = self.dofmap.dof_of_node(nj).and_then(&local) else { continue };
                        b.push(li, lj, C64::new(w * (vi * vj), 0.0));
                    }
                }
            });
        }
        b.build()
    }

    /// `int_e g phi_i` summed over edges (with the owning triangle's outward
    /// normal passed to `g`).
    pub fn edge_load(&self, edges: &[(usize, usize, usize)], g: &dyn Fn([f64; 2], [f64; 2]) -> C64) -> Vec<C64> {
        let mut out = vec![ZERO; self.dofmap.num_dofs()];
        for &(t, va, vb) in edges {
            let normal = self.mesh.outward_normal(t, va, vb);
            self.edge_quadrature(t, va, vb, |x, w, vals| {
                let gv = g(x, normal) * w;
                for &(ni, vi) in vals {
                    if let Some(d) = self.dofmap.dof_of_node(ni) {
                        out[d] += gv * vi;
                    }
                }
            });
        }
        out
    }

    /// L2 norm of `u_h - exact` where `u_h` has dof values `u` (zero on
    /// eliminated nodes).
    pub fn l2_error(&self, u: &[C64], exact: &dyn Fn([f64; 2]) -> C64) -> f64 {
        let rule = TriangleRule::degree6();
        let tab = tabulate(self.dofmap.order(), &rule.points);
        let mut acc = 0.0;
        for t in 0..self.mesh.triangles.len() {
            let area = self.mesh.area(t);
            let nodes = self.dofmap.element_nodes(t);
            for (q, (&l, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let mut uh = ZERO;
                for (i, &n) in nodes.iter().enumerate() {
                    if let Some(d) = self.dofmap.dof_of_node(n) {
                        uh += u[d] * tab.values[q][i];
                    }
                }
                acc += (uh - exact(self.mesh.point(t, l))).norm_sqr() * w * area;
            }
        }
        acc.sqrt()
    }
}

/// PML-stretched Helmholtz coefficients at a point:
/// `(gamma_y / gamma_x, gamma_x / gamma_y, -k^2 gamma_x gamma_y)`.
pub fn helmholtz_coefficients(g: &GeometryParams, x: [f64; 2]) -> [C64; 3] {
    let gx = pml_stretch(x[0], Axis::X, g).expect("quadrature points lie inside the open box");
    let gy = pml_stretch(x[1], Axis::Y, g).expect("quadrature points lie inside the open box");
    let k2 = g.wavenumber * g.wavenumber;
    [gy / gx, gx / gy, -gx * gy * k2]
}

/// Edges tagged `tag` as (triangle, vertex a, vertex b).
pub fn tagged_edges(mesh: &Mesh, tag: BoundaryTag) -> Vec<(usize, usize, usize)> {
    mesh.boundary_edges_with(tag)
        .map(|e| (e.triangle, e.vertices[0], e.vertices[1]))
        .collect()
}

/// Assembles `A = K(gamma) - k^2 M(gamma)` and the Neumann data
/// `b_i = -int_{Gamma_obs} d_n u_inc phi_i`.
pub fn assemble(g: &GeometryParams, mesh: &Mesh, dofmap: &DofMap) -> Result<AssembledSystem> {
    g.validate()?;
    let asm = FormAssembler::new(mesh, dofmap);
    let n = dofmap.num_dofs();
    let coeff = |x: [f64; 2]| helmholtz_coefficients(g, x);
    let a = asm.matrix(0..mesh.triangles.len(), Some, n, &coeff)?;
    let k = g.wavenumber;
    let d = g.incident_direction();
    let neumann = move |x: [f64; 2], nrm: [f64; 2]| {
        let dn_uinc = C64::new(0.0, k * (d[0] * nrm[0] + d[1] * nrm[1])) * g.incident_wave(x[0], x[1]);
        -dn_uinc
    };
    let b = asm.edge_load(&tagged_edges(mesh, BoundaryTag::GammaObs), &neumann);
    Ok(AssembledSystem {
        a,
        b,
        dofmap: dofmap.clone(),
    })
}
