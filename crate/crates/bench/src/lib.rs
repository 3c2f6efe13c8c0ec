//! Shared fixtures for the benchmarks.

use helmdd_core::fem::{assemble, build_mesh_graded, BoundaryTag, Cavity, DofMap, GeometryParams, Mesh};
use helmdd_core::precond::quasimode_wavenumber;
use helmdd_core::{AssembledSystem, DenseMatrix, C64};

/// Desk-scale cavity problem at the (0,3) resonance with P2 elements.
pub fn desk_problem(h: f64) -> (GeometryParams, Mesh, AssembledSystem) {
    let cavity = Cavity::reference();
    let g = GeometryParams {
        half_width: 0.8,
        half_height: 0.4,
        pml_thickness: 0.2,
        cavity: Some(cavity),
        incident_angle: 0.4 * std::f64::consts::PI,
        wavenumber: quasimode_wavenumber(0, 3, cavity.length, cavity.opening),
    };
    let mesh = build_mesh_graded(&g, h, 4).expect("desk mesh");
    let dofmap = DofMap::new(&mesh, 2, &[BoundaryTag::GammaExt]).expect("dofs");
    let sys = assemble(&g, &mesh, &dofmap).expect("assembly");
    (g, mesh, sys)
}

/// Deterministic well-conditioned dense test matrix.
pub fn dense_fixture(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        let x = ((i * 31 + j * 17) % 23) as f64 / 23.0 - 0.5;
        let y = ((i * 7 + j * 13) % 19) as f64 / 19.0 - 0.5;
        C64::new(x + if i == j { 4.0 } else { 0.0 }, y)
    })
}
