//! Gauss-Newton parameter identification under H¹ regularization.
//!
//! Each Gauss-Newton update solves a saddle-point system built from a lowest-order
//! Raviart-Thomas discretization of the Laplacian plus a rank-`M` data-misfit term.
//! Three strategies are provided:
//!
//! * [`Algorithm::Direct`]: one sparse factorization of the mixed Laplacian, reused
//!   across steps, combined with a dense `M x M` capacitance solve.
//! * [`Algorithm::WoodburyMinres`]: MINRES preconditioned by a block-diagonal operator
//!   whose Schur block applies the Woodbury formula to an AMG approximate inverse.
//! * [`Algorithm::LaplaceMinres`]: the same MINRES with only the Laplace preconditioner.
//!
//! The forward model is 2D DC resistivity with pole-dipole surveys on a half-disk.

pub mod amg;
pub mod error;
pub mod fem_mixed;
pub mod forward;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod scenario;
pub mod survey;

pub use amg::{AmgHierarchy, AmgOptions};
pub use error::{Error, Result};
pub use fem_mixed::MixedSpaces;
pub use forward::{ForwardSystem, ModelVector, ResponseJacobian};
pub use inversion::{
    Algorithm, GnConfig, GnReport, GnStepReport, InversionProblem, SaddleOperator,
    WoodburyPreconditioner,
};
pub use linalg::{DenseMatrix, Factorization, MinresReport, SparseMatrix};
pub use mesh::{BoundaryTag, Grading, Mesh};
pub use survey::{ElectrodeConfig, Survey};
