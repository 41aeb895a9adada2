//! Periodic orbits and optimal transfers near the collinear libration points.
//!
//! Mission inputs are in days, outputs carry both days and nondimensional
//! time. Internally everything runs in the rotating-frame units of
//! [`crate::models::units`].

mod continuation;
mod guess;
mod orbits;
mod transfer;

use alloc::vec::Vec;

use crate::bvp::{BvpError, MeshSolution, NewtonOptions};
use crate::models::ModelError;
use crate::tableau::{StagePartition, TableauError};
use crate::Vector;

pub use continuation::{continuation, ContinuationStep};
pub use guess::{halo_guess, initial_guess_linearized, lyapunov_guess, resample_closed, sample_closed, GuessPlane};
pub use orbits::{
    halo_by_energy, halo_by_period, lyapunov_by_energy, lyapunov_by_period, orbit_result, solve_orbit, OrbitFamily,
    OrbitResult,
    OrbitTarget,
};
pub use transfer::{halo_transfer, hill_transfer, transfer_cost, Endpoint, TransferResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MissionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Bvp(#[from] BvpError),
    #[error("invalid mission input: {0}")]
    Invalid(&'static str),
}

impl MissionError {
    /// Best Newton iterate, when the failure came from the boundary value solver.
    pub fn best_iterate(&self) -> Option<&MeshSolution> {
        match self {
            Self::Bvp(e) => e.best_iterate(),
            _ => None,
        }
    }
}

/// Method, mesh and Newton settings shared by every driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub k: usize,
    pub s: usize,
    /// Number of mesh intervals.
    pub n: usize,
    pub newton: NewtonOptions,
}

impl Default for SolveSettings {
    /// HBVM(6,2) on 100 intervals with [`mission_newton`].
    fn default() -> Self {
        Self { k: 6, s: 2, n: 100, newton: mission_newton() }
    }
}

/// Newton options of the drivers: full steps, with the growth guard as the only safeguard.
///
/// Orbit continuation far from the guess needs a transient rise of the
/// residual; halving on every increase stalls those runs in tiny steps.
pub fn mission_newton() -> NewtonOptions {
    NewtonOptions { max_halvings: 0, ..NewtonOptions::default() }
}

/// Semi-axis along `q1` of the Lyapunov guess. Much smaller guesses collapse onto L2 itself.
pub const LYAPUNOV_GUESS_AMPLITUDE: f64 = 3e-3;
/// In-plane and vertical semi-axes of the halo guess.
pub const HALO_GUESS_AMPLITUDES: (f64, f64) = (2e-3, 2e-3);

impl SolveSettings {
    pub fn partition(&self) -> Result<StagePartition, MissionError> {
        if self.n < 2 {
            return Err(MissionError::Invalid("mesh needs at least two intervals"));
        }
        Ok(StagePartition::new(self.k, self.s)?)
    }
}

/// Anything a continuation step can warm-start from.
pub trait HasMesh {
    fn mesh(&self) -> &MeshSolution;
}

/// Stages of every interval set to the interval's left node.
pub(crate) fn constant_stages(nodes: &[Vector], s: usize) -> Vec<Vector> {
    nodes[..nodes.len() - 1]
        .iter()
        .map(|y| {
            let d = y.len();
            let mut z = Vector::zeros(d * s);
            for j in 0..s {
                z.rows_mut(j * d, d).copy_from(y);
            }
            z
        })
        .collect()
}
