//! Energy-conserving Runge–Kutta methods of the HBVM(k,s) family and a
//! structured Newton solver for Hamiltonian boundary value problems.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! filesystem or the command line lives in the `hbvm-cli` companion crate.
//!
//! Layout:
//!
//! * [`quadrature`]: shifted orthonormal Legendre polynomials and
//!   Gauss–Legendre rules on `[0, 1]`.
//! * [`tableau`]: the rank-`s` Butcher matrix of HBVM(k,s) and its split into
//!   fundamental and silent stages.
//! * [`integrator`]: one-step propagation, dense output and energy drift.
//! * [`models`]: the Hamiltonian contract, the restricted three-body and Hill
//!   Hamiltonians, the Pontryagin-extended Hamiltonian and a few test problems.
//! * [`linalg`]: almost-block-diagonal, bordered and least-squares solvers for
//!   the Newton systems, plus a dense oracle.
//! * [`bvp`]: the global simplified Newton iteration over a mesh.
//! * [`missions`]: Lyapunov/halo orbit drivers and optimal transfers.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bvp;
pub mod integrator;
pub mod missions;
pub mod linalg;
pub(crate) mod math;
pub mod models;
pub mod quadrature;
pub mod tableau;

pub use bvp::{BoundarySpec, MeshSolution, NewtonOptions, NewtonReport};
pub use integrator::{hbvm_step, StepOptions, StepResult};
pub use models::HamiltonianModel;
pub use quadrature::{gauss_legendre_rule, QuadratureRule};
pub use tableau::{build_tableau, HbvmTableau, StagePartition};

/// Dynamically sized column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dynamically sized matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
