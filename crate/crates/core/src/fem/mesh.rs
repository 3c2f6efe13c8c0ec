use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::GeometryParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Surface of the obstacle (Neumann data from the incident wave).
    GammaObs,
    /// Outer boundary of the PML (homogeneous Dirichlet).
    GammaExt,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::GammaObs => "gamma_obs",
            BoundaryTag::GammaExt => "gamma_ext",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Dom,
    Pml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
    /// Triangle owning the edge.
    pub triangle: usize,
}

/// Conforming triangulation of a tensor grid with some cells removed.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Grid column and row of the cell each triangle came from.
    pub cells: Vec<[usize; 2]>,
    /// Grid lines.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

fn subdivide(breaks: &[f64], size: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let h = size(w[0], w[1]);
        let n = ((len / h) - 1e-9).ceil().max(1.0) as usize;
        for i in 1..=n {
            out.push(if i == n { w[1] } else { w[0] + len * i as f64 / n as f64 });
        }
    }
    out
}

fn sorted_breaks(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

impl Mesh {
    /// Triangulates the tensor grid `xs x ys`, keeping the cells for which
    /// `keep(i, j)` holds. Boundary edges on the outer box are tagged
    /// `GammaExt`, all other boundary edges `GammaObs`.
    pub fn structured(
        xs: Vec<f64>,
        ys: Vec<f64>,
        keep: impl Fn(usize, usize) -> bool,
        region: impl Fn(f64, f64) -> Region,
    ) -> Self {
        let (nx, ny) = (xs.len() - 1, ys.len() - 1);
        let gid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut used = vec![usize::MAX; (nx + 1) * (ny + 1)];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut regions = Vec::new();
        let mut cells = Vec::new();
        let mut vid = |g: usize, x: f64, y: f64, vertices: &mut Vec<[f64; 2]>| {
            if used[g] == usize::MAX {
                used[g] = vertices.len();
                vertices.push([x, y]);
            }
            used[g]
        };
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j) {
                    continue;
                }
                let v00 = vid(gid(i, j), xs[i], ys[j], &mut vertices);
                let v10 = vid(gid(i + 1, j), xs[i + 1], ys[j], &mut vertices);
                let v11 = vid(gid(i + 1, j + 1), xs[i + 1], ys[j + 1], &mut vertices);
                let v01 = vid(gid(i, j + 1), xs[i], ys[j + 1], &mut vertices);
                let r = region(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
                regions.extend([r, r]);
                cells.extend([[i, j], [i, j]]);
            }
        }

        let mut edge_owner: BTreeMap<(usize, usize), (usize, usize, [usize; 2])> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edge_owner.entry((a.min(b), a.max(b))).or_insert((0, t, [a, b]));
                e.0 += 1;
            }
        }
        let (x0, x1, y0, y1) = (xs[0], xs[nx], ys[0], ys[ny]);
        let on_box = |p: [f64; 2], q: [f64; 2]| {
            let tol = 1e-12 * (x1 - x0).max(y1 - y0);
            ((p[0] - x0).abs() < tol && (q[0] - x0).abs() < tol)
                || ((p[0] - x1).abs() < tol && (q[0] - x1).abs() < tol)
                || ((p[1] - y0).abs() < tol && (q[1] - y0).abs() < tol)
                || ((p[1] - y1).abs() < tol && (q[1] - y1).abs() < tol)
        };
        let mut boundary_edges: Vec<BoundaryEdge> = edge_owner
            .values()
            .filter(|(count, _, _)| *count == 1)
            .map(|&(_, t, v)| BoundaryEdge {
                vertices: v,
                tag: if on_box(vertices[v[0]], vertices[v[1]]) {
                    BoundaryTag::GammaExt
                } else {
                    BoundaryTag::GammaObs
                },
                triangle: t,
            })
            .collect();
        boundary_edges.sort_by_key(|e| (e.triangle, e.vertices));

        Self {
            vertices,
            triangles,
            regions,
            boundary_edges,
            cells,
            xs,
            ys,
        }
    }

    /// Uniform `nx x ny` grid of a rectangle, all in the physical region.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Self {
        let xs = (0..=nx).map(|i| x0 + (x1 - x0) * i as f64 / nx as f64).collect();
        let ys = (0..=ny).map(|j| y0 + (y1 - y0) * j as f64 / ny as f64).collect();
        Self::structured(xs, ys, |_, _| true, |_, _| Region::Dom)
    }

    pub fn num_columns(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.ys.len() - 1
    }

    /// Signed area of triangle `t` (positive for counter-clockwise).
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let two_area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    /// Physical point of barycentric coordinates `l` on triangle `t`.
    pub fn point(&self, t: usize, l: [f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }

    /// Unit normal of edge `(a, b)` of triangle `t` pointing away from it.
    pub fn outward_normal(&self, t: usize, a: usize, b: usize) -> [f64; 2] {
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let c = self.triangles[t]
            .iter()
            .copied()
            .find(|&v| v != a && v != b)
            .expect("edge belongs to triangle");
        let pc = self.vertices[c];
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = dx.hypot(dy);
        let mut n = [dy / len, -dx / len];
        let mid = [0.5 * (pa[0] + pb[0]) - pc[0], 0.5 * (pa[1] + pb[1]) - pc[1]];
        if n[0] * mid[0] + n[1] * mid[1] < 0.0 {
            n = [-n[0], -n[1]];
        }
        n
    }

    pub fn boundary_edges_with(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Versioned plain-text export: vertices, triangles with region,
    /// boundary edges with tag.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("helmdd-mesh 1\n");
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            let region = match r {
                Region::Dom => "dom",
                Region::Pml => "pml",
            };
            let _ = writeln!(s, "{} {} {} {region}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.name());
        }
        s
    }
}

/// Grid-aligned mesh of the padded box with the obstacle walls removed.
///
/// Grid lines pass through the PML interfaces and every wall line, so no
/// triangle straddles the physical/PML interface or a wall.
pub fn build_mesh(g: &GeometryParams, h_target: f64) -> Result<Mesh> {
    build_mesh_graded(g, h_target, 1)
}

/// As [`build_mesh`], with the rows spanning the cavity opening refined by
/// `band_refinement` (mesh size `h_target / band_refinement` across the
/// cavity, `h_target` elsewhere).
pub fn build_mesh_graded(g: &GeometryParams, h_target: f64, band_refinement: usize) -> Result<Mesh> {
    g.validate()?;
    if band_refinement == 0 {
        return Err(Error::Geometry("band refinement must be at least 1".into()));
    }
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::Geometry(format!("mesh size must be positive, got {h_target}")));
    }
    if let Some(c) = &g.cavity {
        if h_target > c.wall + 1e-12 {
            return Err(Error::Resolution { h: h_target, wall: c.wall });
        }
    }
    let [xm, ym] = g.outer_extent();
    let mut bx = vec![-xm, -g.half_width, g.half_width, xm];
    let mut by = vec![-ym, -g.half_height, g.half_height, ym];
    if let Some(c) = &g.cavity {
        let [ix0, ix1, iy0, iy1] = c.interior();
        let [_, ox1, oy0, oy1] = c.outer();
        bx.extend([ix0, ix1, ox1]);
        by.extend([oy0, iy0, iy1, oy1]);
    }
    let band = g.cavity.map(|c| {
        let [_, _, iy0, iy1] = c.interior();
        (iy0, iy1)
    });
    let xs = subdivide(&sorted_breaks(bx), |_, _| h_target);
    let ys = subdivide(&sorted_breaks(by), |a, b| match band {
        Some((lo, hi)) if a >= lo - 1e-12 && b <= hi + 1e-12 => h_target / band_refinement as f64,
        _ => h_target,
    });
    let (cxs, cys) = (xs.clone(), ys.clone());
    let cavity = g.cavity;
    let (hw, hh) = (g.half_width, g.half_height);
    Ok(Mesh::structured(
        xs,
        ys,
        move |i, j| {
            let (x, y) = (0.5 * (cxs[i] + cxs[i + 1]), 0.5 * (cys[j] + cys[j + 1]));
            !cavity.is_some_and(|c| c.in_wall(x, y))
        },
        move |x, y| {
            if x.abs() > hw || y.abs() > hh {
                Region::Pml
            } else {
                Region::Dom
            }
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Cavity;

    fn small_geometry(cavity: Option<Cavity>) -> GeometryParams {
        GeometryParams {
            half_width: 1.0,
            half_height: 1.0,
            pml_thickness: 0.25,
            cavity,
            incident_angle: 0.3,
            wavenumber: 2.0,
        }
    }

    #[test]
    fn full_rectangle_without_obstacle() {
        let m = build_mesh(&small_geometry(None), 0.25).unwrap();
        assert_eq!(m.triangles.len(), 2 * 10 * 10);
        assert_eq!(m.vertices.len(), 11 * 11);
        assert_eq!(m.boundary_edges_with(BoundaryTag::GammaObs).count(), 0);
        assert_eq!(m.boundary_edges_with(BoundaryTag::GammaExt).count(), 40);
        assert!((0..m.triangles.len()).all(|t| m.area(t) > 0.0));
    }

    #[test]
    fn hand_counted_grid_with_cavity() {
        // interior 0.75 x 0.5, walls 0.25, open edge at (-0.5, 0): all lines on the 0.25 grid
        let cav = Cavity {
            length: 0.75,
            opening: 0.5,
            wall: 0.25,
            anchor: Some([-0.5, 0.0]),
        };
        let m = build_mesh(&small_geometry(Some(cav)), 0.25).unwrap();
        // top and bottom walls 4 cells each, back wall 2 cells
        assert_eq!(m.triangles.len(), 2 * (100 - 10));
        assert_eq!(m.vertices.len(), 121);
        let obs = m.boundary_edges_with(BoundaryTag::GammaObs).count();
        // outer outline 4 + 4 + 4 + 1 + 1, inner outline 3 + 2 + 3
        assert_eq!(obs, 14 + 8);
    }

    #[test]
    fn reference_cavity_interior_dimensions() {
        let g = GeometryParams {
            wavenumber: 5.0,
            ..GeometryParams::default()
        };
        let m = build_mesh(&g, 0.1).unwrap();
        let c = g.cavity.unwrap();
        let [x0, x1, y0, y1] = c.interior();
        assert!((x1 - x0 - 1.3).abs() < 1e-12 && (y1 - y0 - 0.4).abs() < 1e-12);
        // the interior lines are grid lines and the interior cells are kept
        assert!(m.xs.iter().any(|&x| (x - x0).abs() < 1e-12));
        assert!(m.ys.iter().any(|&y| (y - y1).abs() < 1e-12));
        let obs: Vec<_> = m.boundary_edges_with(BoundaryTag::GammaObs).collect();
        let inner_back: f64 = obs
            .iter()
            .filter(|e| e.vertices.iter().all(|&v| (m.vertices[v][0] - x1).abs() < 1e-12))
            .filter(|e| e.vertices.iter().all(|&v| m.vertices[v][1] >= y0 - 1e-12 && m.vertices[v][1] <= y1 + 1e-12))
            .map(|e| (m.vertices[e.vertices[0]][1] - m.vertices[e.vertices[1]][1]).abs())
            .sum();
        assert!((inner_back - 0.4).abs() < 1e-12);
    }

    #[test]
    fn no_triangle_straddles_pml_interface() {
        let g = GeometryParams {
            wavenumber: 5.0,
            ..GeometryParams::default()
        };
        let m = build_mesh(&g, 0.1).unwrap();
        for (t, tri) in m.triangles.iter().enumerate() {
            let in_pml = tri
                .iter()
                .map(|&v| m.vertices[v])
                .map(|p| p[0].abs() > g.half_width + 1e-12 || p[1].abs() > g.half_height + 1e-12);
            if m.regions[t] == Region::Dom {
                assert!(in_pml.clone().all(|b| !b));
            }
        }
    }

    #[test]
    fn resolution_and_geometry_errors() {
        let g = GeometryParams {
            wavenumber: 5.0,
            ..GeometryParams::default()
        };
        assert!(matches!(build_mesh(&g, 0.2), Err(Error::Resolution { .. })));
        let bad = GeometryParams {
            half_height: 0.25,
            ..g
        };
        assert!(matches!(build_mesh(&bad, 0.1), Err(Error::Geometry(_))));
    }
}
