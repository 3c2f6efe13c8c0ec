//! Overlapping decomposition of the mesh into subdomains, restriction /
//! extension operators, partition-of-unity weights and the local impedance
//! problems `B_s`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::fem::{basis::LOCAL_EDGES, helmholtz_coefficients, DofMap, FormAssembler, GeometryParams, Mesh};
use crate::linalg::{CsrMatrix, SparseLu};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Vertical strips of equal element-column count.
    StripsX,
    /// `sx x sy` grid of boxes (requires `S = sx * sy`).
    Grid { sx: usize, sy: usize },
}

impl Layout {
    pub fn name(&self) -> String {
        match self {
            Layout::StripsX => "strips_x".into(),
            Layout::Grid { sx, sy } => format!("grid_{sx}x{sy}"),
        }
    }
}

/// One overlapping subdomain.
#[derive(Debug, Clone)]
pub struct Subdomain {
    /// Triangles of the overlapping subdomain, ascending.
    pub elements: Vec<usize>,
    /// Global dofs (rows of `R_s`), ascending.
    pub dofs: Vec<usize>,
    /// Diagonal of `D_s`, aligned with `dofs`.
    pub weights: Vec<f64>,
    /// Subdomain boundary edges interior to the global mesh, as
    /// (triangle inside the subdomain, vertex a, vertex b).
    pub interface_edges: Vec<(usize, usize, usize)>,
}

impl Subdomain {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Local index of a global dof.
    pub fn local_index(&self, dof: usize) -> Option<usize> {
        self.dofs.binary_search(&dof).ok()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    num_dofs: usize,
    layout: Layout,
    overlap: usize,
    subdomains: Vec<Subdomain>,
}

fn split(count: usize, parts: usize, i: usize) -> usize {
    // part owning index i when `count` items are cut into equal runs
    i * parts / count
}

/// Splits the mesh into `s` overlapping subdomains.
///
/// Cells are first assigned to non-overlapping parts by grid column (and
/// row for [`Layout::Grid`]); each part then grows by `overlap_layers`
/// layers of vertex-adjacent triangles.
pub fn decompose(mesh: &Mesh, dofmap: &DofMap, s: usize, layout: Layout, overlap_layers: usize) -> Result<Decomposition> {
    if s == 0 {
        return Err(Error::Partition("subdomain count must be at least 1".into()));
    }
    if overlap_layers == 0 {
        return Err(Error::Partition("overlap must be at least one element layer".into()));
    }
    let (ncols, nrows) = (mesh.num_columns(), mesh.num_rows());
    let (sx, sy) = match layout {
        Layout::StripsX => (s, 1),
        Layout::Grid { sx, sy } => {
            if sx * sy != s {
                return Err(Error::Partition(format!("grid {sx}x{sy} does not have {s} subdomains")));
            }
            (sx, sy)
        }
    };
    if sx > ncols || sy > nrows {
        return Err(Error::Partition(format!(
            "{sx}x{sy} subdomains exceed the {ncols}x{nrows} element grid"
        )));
    }
    let owner: Vec<usize> = mesh
        .cells
        .iter()
        .map(|&[i, j]| split(nrows, sy, j) * sx + split(ncols, sx, i))
        .collect();

    let mut vertex_elems: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            vertex_elems[v].push(t);
        }
    }
    let mut edge_elems: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for [a, b] in LOCAL_EDGES {
            let (va, vb) = (tri[a], tri[b]);
            edge_elems.entry((va.min(vb), va.max(vb))).or_default().push(t);
        }
    }

    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); s];
    for (t, &o) in owner.iter().enumerate() {
        parts[o].push(t);
    }
    let mut subdomains = Vec::with_capacity(s);
    let mut multiplicity = vec![0u32; dofmap.num_dofs()];
    for (p, core) in parts.into_iter().enumerate() {
        if core.is_empty() {
            return Err(Error::Partition(format!("subdomain {p} has no elements")));
        }
        let mut inside = vec![false; mesh.triangles.len()];
        for &t in &core {
            inside[t] = true;
        }
        let mut front = core;
        for _ in 0..overlap_layers {
            let mut next = BTreeSet::new();
            for &t in &front {
                for &v in &mesh.triangles[t] {
                    for &u in &vertex_elems[v] {
                        if !inside[u] {
                            next.insert(u);
                        }
                    }
                }
            }
            for &u in &next {
                inside[u] = true;
            }
            front = next.into_iter().collect();
        }
        let elements: Vec<usize> = (0..mesh.triangles.len()).filter(|&t| inside[t]).collect();
        let mut dofs = BTreeSet::new();
        let mut interface_edges = Vec::new();
        for &t in &elements {
            dofs.extend(dofmap.element_dofs(t).map(|(_, d)| d));
            let tri = mesh.triangles[t];
            for [a, b] in LOCAL_EDGES {
                let (va, vb) = (tri[a], tri[b]);
                let owners = &edge_elems[&(va.min(vb), va.max(vb))];
                if owners.iter().any(|&u| !inside[u]) {
                    interface_edges.push((t, va, vb));
                }
            }
        }
        let dofs: Vec<usize> = dofs.into_iter().collect();
        for &d in &dofs {
            multiplicity[d] += 1;
        }
        subdomains.push(Subdomain {
            elements,
            dofs,
            weights: Vec::new(),
            interface_edges,
        });
    }
    for sd in &mut subdomains {
        sd.weights = sd.dofs.iter().map(|&d| 1.0 / f64::from(multiplicity[d])).collect();
    }
    Ok(Decomposition {
        num_dofs: dofmap.num_dofs(),
        layout,
        overlap: overlap_layers,
        subdomains,
    })
}

impl Decomposition {
    pub fn num_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn subdomain(&self, s: usize) -> &Subdomain {
        &self.subdomains[s]
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    /// Local sizes `n_s`.
    pub fn local_sizes(&self) -> Vec<usize> {
        self.subdomains.iter().map(Subdomain::len).collect()
    }

    fn check(&self, s: usize) -> Result<&Subdomain> {
        self.subdomains
            .get(s)
            .ok_or_else(|| Error::Partition(format!("no subdomain {s} (have {})", self.subdomains.len())))
    }

    /// `R_s v`.
    pub fn restrict(&self, s: usize, v: &[C64]) -> Result<Vec<C64>> {
        let sd = self.check(s)?;
        if v.len() != self.num_dofs {
            return Err(Error::Dimension(format!("restrict: vector of length {} for {} dofs", v.len(), self.num_dofs)));
        }
        Ok(sd.dofs.iter().map(|&d| v[d]).collect())
    }

    /// `R_s^T w`.
    pub fn extend(&self, s: usize, w: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.num_dofs];
        self.extend_add(s, w, 1.0, &mut out)?;
        Ok(out)
    }

    /// `out += R_s^T diag(scale) w`, with `scale` either 1 or `D_s`.
    fn extend_add(&self, s: usize, w: &[C64], scale: f64, out: &mut [C64]) -> Result<()> {
        let sd = self.check(s)?;
        if w.len() != sd.len() {
            return Err(Error::Dimension(format!("extend: vector of length {} for {} local dofs", w.len(), sd.len())));
        }
        for (&d, &x) in sd.dofs.iter().zip(w) {
            out[d] += x * scale;
        }
        Ok(())
    }

    /// `out += R_s^T D_s w`.
    pub fn extend_weighted_add(&self, s: usize, w: &[C64], out: &mut [C64]) -> Result<()> {
        let sd = self.check(s)?;
        if w.len() != sd.len() {
            return Err(Error::Dimension(format!("extend: vector of length {} for {} local dofs", w.len(), sd.len())));
        }
        for ((&d, &x), &wt) in sd.dofs.iter().zip(w).zip(&sd.weights) {
            out[d] += x * wt;
        }
        Ok(())
    }

    /// `sum_s R_s^T D_s R_s v`.
    pub fn partition_of_unity_apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.num_dofs];
        for s in 0..self.subdomains.len() {
            let local = self.restrict(s, v)?;
            self.extend_weighted_add(s, &local, &mut out)?;
        }
        Ok(out)
    }

    /// CSV of subdomain membership: `dof,x,y,subdomain,weight`.
    pub fn to_csv(&self, dofmap: &DofMap) -> String {
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for (s, sd) in self.subdomains.iter().enumerate() {
            rows.extend(sd.dofs.iter().zip(&sd.weights).map(|(&d, &w)| (d, s, w)));
        }
        rows.sort_by_key(|r| (r.0, r.1));
        let mut out = String::from("dof,x,y,subdomain,weight\n");
        for (d, s, w) in rows {
            let [x, y] = dofmap.dof_coords(d);
            let _ = writeln!(out, "{d},{x:.16e},{y:.16e},{s},{w:.16e}");
        }
        out
    }
}

/// Local impedance problem of one subdomain.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    /// Restriction of the volume form to the subdomain triangles.
    pub volume: CsrMatrix,
    /// Interface mass matrix on the subdomain's interface edges.
    pub interface_mass: CsrMatrix,
    /// `B_s = volume - i k interface_mass`.
    pub b: CsrMatrix,
    pub lu: SparseLu,
}

impl LocalProblem {
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        self.lu.solve(rhs)
    }
}

/// Assembles and factorizes `B_s` for every subdomain.
pub fn build_local_problems(g: &GeometryParams, mesh: &Mesh, dofmap: &DofMap, dec: &Decomposition) -> Result<Vec<LocalProblem>> {
    let asm = FormAssembler::new(mesh, dofmap);
    let coeff = |x: [f64; 2]| helmholtz_coefficients(g, x);
    let ik = C64::new(0.0, g.wavenumber);
    dec.subdomains
        .iter()
        .map(|sd| {
            let n = sd.len();
            let local = |d: usize| sd.local_index(d);
            let volume = asm.matrix(sd.elements.iter().copied(), local, n, &coeff)?;
            let interface_mass = asm.edge_mass(&sd.interface_edges, local, n)?;
            let b = volume.add_scaled(-ik, &interface_mass)?;
            let lu = SparseLu::factor(&b)?;
            Ok(LocalProblem {
                volume,
                interface_mass,
                b,
                lu,
            })
        })
        .collect()
}
