use std::collections::HashMap;

use super::basis::{node_multi_indices, LOCAL_EDGES};
use super::{BoundaryTag, Mesh};
use crate::{Error, Result};

/// Lagrange node numbering on a [`Mesh`].
///
/// Nodes are numbered vertices first, then edge nodes in order of first
/// appearance, then interior nodes. Nodes on Dirichlet-tagged boundary
/// edges are eliminated; the remaining ones are the degrees of freedom.
#[derive(Debug, Clone)]
pub struct DofMap {
    order: usize,
    /// Global node index per local node of each triangle.
    element_nodes: Vec<Vec<usize>>,
    node_coords: Vec<[f64; 2]>,
    node_to_dof: Vec<Option<usize>>,
    dof_to_node: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, order: usize, dirichlet: &[BoundaryTag]) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::Config(format!("element order must be 1, 2 or 3, got {order}")));
        }
        let p = order;
        let mut node_coords: Vec<[f64; 2]> = mesh.vertices.clone();
        let mut edge_start: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_nodes = Vec::with_capacity(mesh.triangles.len());
        let alphas = node_multi_indices(p);

        for tri in &mesh.triangles {
            let mut nodes: Vec<usize> = tri.to_vec();
            for [a, b] in LOCAL_EDGES {
                let (va, vb) = (tri[a], tri[b]);
                let key = (va.min(vb), va.max(vb));
                let start = *edge_start.entry(key).or_insert_with(|| {
                    let s = node_coords.len();
                    let (pa, pb) = (mesh.vertices[key.0], mesh.vertices[key.1]);
                    for t in 1..p {
                        let s_ = t as f64 / p as f64;
                        node_coords.push([pa[0] + s_ * (pb[0] - pa[0]), pa[1] + s_ * (pb[1] - pa[1])]);
                    }
                    s
                });
                for t in 1..p {
                    // global edge nodes run from the lower to the higher vertex
                    let idx = if va < vb { t - 1 } else { p - 1 - t };
                    nodes.push(start + idx);
                }
            }
            if p == 3 {
                let c = [tri[0], tri[1], tri[2]].map(|v| mesh.vertices[v]);
                nodes.push(node_coords.len());
                node_coords.push([(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0]);
            }
            debug_assert_eq!(nodes.len(), alphas.len());
            element_nodes.push(nodes);
        }

        let mut is_dirichlet = vec![false; node_coords.len()];
        for e in &mesh.boundary_edges {
            if !dirichlet.contains(&e.tag) {
                continue;
            }
            let [va, vb] = e.vertices;
            is_dirichlet[va] = true;
            is_dirichlet[vb] = true;
            if p > 1 {
                let start = edge_start[&(va.min(vb), va.max(vb))];
                for i in 0..p - 1 {
                    is_dirichlet[start + i] = true;
                }
            }
        }
        let mut node_to_dof = vec![None; node_coords.len()];
        let mut dof_to_node = Vec::new();
        for (n, d) in is_dirichlet.iter().enumerate() {
            if !d {
                node_to_dof[n] = Some(dof_to_node.len());
                dof_to_node.push(n);
            }
        }
        Ok(Self {
            order,
            element_nodes,
            node_coords,
            node_to_dof,
            dof_to_node,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of degrees of freedom N.
    pub fn num_dofs(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn element_nodes(&self, t: usize) -> &[usize] {
        &self.element_nodes[t]
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.node_to_dof[node]
    }

    pub fn node_of_dof(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    /// Free dofs of triangle `t` as (local node, dof) pairs.
    pub fn element_dofs(&self, t: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.element_nodes[t]
            .iter()
            .enumerate()
            .filter_map(|(i, &n)| self.node_to_dof[n].map(|d| (i, d)))
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        self.node_coords[node]
    }

    pub fn dof_coords(&self, dof: usize) -> [f64; 2] {
        self.node_coords[self.dof_to_node[dof]]
    }

    /// True for nodes eliminated by the Dirichlet condition.
    pub fn is_dirichlet_node(&self, node: usize) -> bool {
        self.node_to_dof[node].is_none()
    }

    pub fn dirichlet_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(|&n| self.is_dirichlet_node(n))
    }

    /// Global node indices of the nodes lying on edge `(a, b)` of
    /// triangle `t`, with their local indices.
    pub fn edge_nodes(&self, t: usize, a: usize, b: usize, mesh: &Mesh) -> Vec<(usize, usize)> {
        let tri = mesh.triangles[t];
        let la = tri.iter().position(|&v| v == a).expect("vertex of triangle");
        let lb = tri.iter().position(|&v| v == b).expect("vertex of triangle");
        node_multi_indices(self.order)
            .iter()
            .enumerate()
            .filter(|(_, m)| (0..3).all(|i| i == la || i == lb || m[i] == 0))
            .map(|(i, _)| (i, self.element_nodes[t][i]))
            .collect()
    }
}
