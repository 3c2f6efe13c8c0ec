//! Finite-element discretization of the PML-truncated cavity-scattering
//! problem: structured triangular meshes, Lagrange P1-P3 elements and
//! assembly of the complex-symmetric system.

mod assembly;
pub mod basis;
mod dofmap;
mod geometry;
mod mesh;
pub mod quadrature;

pub use assembly::{assemble, helmholtz_coefficients, tagged_edges, AssembledSystem, Coefficients, FormAssembler};
pub use dofmap::DofMap;
pub use geometry::{dofs_per_wavelength_to_h, pml_stretch, Axis, Cavity, GeometryParams};
pub use mesh::{build_mesh, build_mesh_graded, BoundaryEdge, BoundaryTag, Mesh, Region};
