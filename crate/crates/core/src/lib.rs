//! Numerical laboratory for GMRES convergence on quasiresonant Helmholtz
//! problems preconditioned by overlapping Schwarz methods and deflation.
//!
//! The pipeline is: [`fem`] builds the PML-truncated cavity-scattering
//! system, [`partition`] splits it into overlapping subdomains, [`precond`]
//! provides ORAS, coarse spaces and deflation, [`krylov`] runs instrumented
//! GMRES, and [`diagnostics`] interprets the run through harmonic Ritz values
//! and eigenvalue-based residual bounds. [`scenario`] ties everything to a
//! config file.

pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod krylov;
pub mod linalg;
pub mod partition;
pub mod precond;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use fem::{AssembledSystem, DofMap, GeometryParams, Mesh};
pub use krylov::{gmres, GmresConfig, GmresTrace, LinearOperator};
pub use linalg::{CsrMatrix, DenseMatrix, SparseLu};
pub use partition::{Decomposition, Layout};
pub use precond::{DeflationBasis, Oras, PreconditionerChain};
