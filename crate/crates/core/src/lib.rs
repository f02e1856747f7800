//! Covariance-first column subset selection.
//!
//! Every algorithm works from a covariance matrix: selecting the columns of a
//! centred data matrix `X` that best reconstruct it in Frobenius norm is the
//! same problem as choosing the variables whose residual covariance
//! `Sigma - Sigma[:, S] pinv(Sigma[S, S]) Sigma[S, :]` has the smallest trace.
//!
//! The linear-algebra core, the criteria, the searches and the test
//! statistics are generic over [`Scalar`] (`f32` or `f64`). Monte Carlo
//! critical values and the simulation lab run in `f64`.

pub mod criteria;
pub mod covest;
pub mod error;
pub mod extended;
pub mod scalar;
pub mod search;
pub mod simlab;
pub mod sizesel;
pub mod symmat;

pub use criteria::{Criterion, CriterionKind, SubsetState};
pub use error::{Error, Result};
pub use extended::Extended;
pub use scalar::Scalar;
pub use symmat::{EigenDecomp, IndexSet, Matrix, SymMatrix, Tolerances};

pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type SubsetState64 = SubsetState<f64>;
