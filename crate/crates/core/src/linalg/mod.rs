//! Complex dense and sparse kernels.
//!
//! Everything here works on [`C64`](crate::C64) and sums in a fixed order
//! so that runs are bit-reproducible.

mod dense;
mod eig;
mod lu;
pub mod mm;
mod ordering;
mod qr;
mod sparse;
pub mod vector;

pub use dense::{DenseLu, DenseMatrix};
pub use eig::{dense_eig, eigenvalues, hessenberg_eigenvalues, hessenberg_reduce, EigenDecomposition};
pub use lu::SparseLu;
pub use ordering::reverse_cuthill_mckee;
pub use qr::{least_squares_solve, HouseholderQr};
pub use sparse::{CsrMatrix, TripletBuilder};
