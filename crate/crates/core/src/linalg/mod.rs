//! Dense complex linear algebra.

mod eigen;
mod expm;
mod matrix;
mod solve;

pub use eigen::{eigen, eigenvalues, schur, Eigen, Schur};
pub use expm::expm;
pub use matrix::CMatrix;
pub use solve::solve;
