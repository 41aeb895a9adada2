//! Global simplified Newton iteration for Hamiltonian boundary value problems.
//!
//! The mesh unknowns are `y_0, Z_0, y_1, Z_1, …, Z_{n−1}, y_n`, where `Z_i`
//! stacks the `s` fundamental stages of interval `i`. Every interval
//! contributes the stage and step equations of the method. Residuals are
//! "left minus right" of each equation and the Newton right-hand sides are
//! their negation. The Jacobian freezes `∇²H` at the interval midpoint
//! `ȳ = (y_{i−1} + y_i)/2`.

mod boundary;
mod newton;

use alloc::vec::Vec;

use crate::integrator::StageFields;
use crate::models::{HamiltonianModel, ModelError};
use crate::tableau::StagePartition;
use crate::{Matrix, Vector};

pub use boundary::{BoundaryCondition, BoundarySpec, CoupledCondition, LinearCondition, LinearCoupled};
pub use newton::{assemble_system, newton_solve, residual_vector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BvpError {
    #[error("model evaluation failed on interval {interval:?}: {source}")]
    Model { interval: Option<usize>, source: ModelError },
    #[error("linear solve failed at iteration {iteration}: {source}")]
    Linalg { iteration: usize, source: crate::linalg::LinalgError },
    #[error("Newton iteration did not converge in {} iterations", report.iterations)]
    NotConverged { report: alloc::boxed::Box<NewtonReport>, best: alloc::boxed::Box<MeshSolution> },
    #[error("Newton iteration diverged at iteration {}", report.iterations)]
    Diverged { report: alloc::boxed::Box<NewtonReport>, best: alloc::boxed::Box<MeshSolution> },
    #[error("invalid problem: {0}")]
    Invalid(&'static str),
}

impl BvpError {
    /// Best iterate reached before a convergence failure.
    pub fn best_iterate(&self) -> Option<&MeshSolution> {
        match self {
            Self::NotConverged { best, .. } | Self::Diverged { best, .. } => Some(best),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Bound on the update max-norm and, for square systems, the residual max-norm.
    pub tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Consecutive iterations with a growing residual before giving up.
    pub max_growth: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 50, max_halvings: 8, max_growth: 3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub converged: bool,
    /// Residual max-norm: the initial guess, then after each iteration.
    pub residual_history: Vec<f64>,
    /// Max-norm of each full (undamped) Newton update.
    pub update_history: Vec<f64>,
    /// `(iteration, halvings)` whenever the update was damped.
    pub damping_events: Vec<(usize, usize)>,
    /// Euclidean norm of the final residual of all equations; nonzero for periodic problems.
    pub lstsq_residual: Option<f64>,
    pub cond_estimates: Vec<f64>,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Mesh values and fundamental stages on a uniform mesh `t_i = t_0 + i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSolution {
    pub t0: f64,
    pub h: f64,
    /// `y_0..y_n`.
    pub nodes: Vec<Vector>,
    /// `Z_0..Z_{n−1}`, each stacking the `s` fundamental stages.
    pub stages: Vec<Vector>,
    pub report: NewtonReport,
}

impl MeshSolution {
    pub fn new(t0: f64, h: f64, nodes: Vec<Vector>, stages: Vec<Vector>) -> Self {
        Self { t0, h, nodes, stages, report: NewtonReport::default() }
    }

    /// Stages guessed by linear interpolation between neighbouring nodes.
    pub fn from_nodes(t0: f64, h: f64, nodes: Vec<Vector>, part: &StagePartition) -> Self {
        let dim = nodes[0].len();
        let stages = nodes
            .windows(2)
            .map(|w| {
                let mut z = Vector::zeros(dim * part.s);
                for (j, &c) in part.fundamental_nodes.iter().enumerate() {
                    z.rows_mut(j * dim, dim).copy_from(&(&w[0] * (1.0 - c) + &w[1] * c));
                }
                z
            })
            .collect();
        Self::new(t0, h, nodes, stages)
    }

    pub fn n(&self) -> usize {
        self.stages.len()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn t_final(&self) -> f64 {
        self.t0 + self.h * self.n() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n()).map(|i| self.t0 + self.h * i as f64).collect()
    }

    /// Fundamental stage `j` of interval `i`.
    pub fn stage(&self, i: usize, j: usize) -> Vector {
        let d = self.dim();
        self.stages[i].rows(j * d, d).into_owned()
    }

    pub fn stage_list(&self, i: usize) -> Vec<Vector> {
        let d = self.dim();
        (0..self.stages[i].len() / d).map(|j| self.stage(i, j)).collect()
    }

    pub(crate) fn check(&self, dim: usize, s: usize) -> Result<(), BvpError> {
        if self.stages.is_empty() || self.nodes.len() != self.stages.len() + 1 {
            return Err(BvpError::Invalid("mesh needs n ≥ 1 intervals and n + 1 nodes"));
        }
        if self.nodes.iter().any(|y| y.len() != dim) || self.stages.iter().any(|z| z.len() != dim * s) {
            return Err(BvpError::Invalid("mesh vectors do not match the model dimension"));
        }
        if !(self.h.is_finite() && self.h != 0.0) {
            return Err(BvpError::Invalid("stepsize must be finite and nonzero"));
        }
        Ok(())
    }
}

/// Simplified Newton blocks `(V, Uᵀ, L, K)` of one interval, with `∇²H` frozen at the midpoint.
pub fn assemble_interval_blocks<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    y_left: &[f64],
    y_right: &[f64],
    h: f64,
) -> Result<(Matrix, Matrix, Matrix, Matrix), ModelError> {
    let d = y_left.len();
    let s = part.s;
    let mid: Vec<f64> = y_left.iter().zip(y_right).map(|(a, b)| 0.5 * (a + b)).collect();
    let jm = crate::models::j_times(&model.hessian(&mid)?);
    let b2a0 = part.b2_a0();
    let coupling = part.stage_coupling();
    let step = part.step_coupling();
    let eye = Matrix::identity(d, d);

    let mut v = Matrix::zeros(d * s, d);
    let mut k = Matrix::identity(d * s, d * s);
    let mut ut = Matrix::zeros(d, d * s);
    for i in 0..s {
        v.view_mut((i * d, 0), (d, d)).copy_from(&(-&eye - &jm * (h * b2a0[i])));
        for j in 0..s {
            let mut blk = k.view_mut((i * d, j * d), (d, d));
            blk -= &jm * (h * coupling[(i, j)]);
        }
        ut.view_mut((0, i * d), (d, d)).copy_from(&(&jm * (-h * step[i])));
    }
    let l = -eye - jm * (h * part.beta2_a0());
    Ok((v, ut, l, k))
}

/// Per-interval quantities at the current iterate.
#[derive(Debug, Clone)]
pub struct IntervalResidual {
    /// Stage equations, left minus right.
    pub stage: Vector,
    /// Step equation, left minus right.
    pub step: Vector,
    /// `∂(stage)/∂h`.
    pub w: Vector,
    /// `∂(step)/∂h`.
    pub v: Vector,
}

fn interval_residual<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    y_left: &Vector,
    y_right: &Vector,
    z: &[Vector],
    h: f64,
) -> Result<IntervalResidual, ModelError> {
    let d = y_left.len();
    let s = part.s;
    let fields = StageFields::new(model, part, y_left, z)?;
    let mut stage = Vector::zeros(d * s);
    let mut w = Vector::zeros(d * s);
    for i in 0..s {
        let inc = fields.stage_increment(part, i);
        stage.rows_mut(i * d, d).copy_from(&(&z[i] - y_left - &inc * h));
        w.rows_mut(i * d, d).copy_from(&(-inc));
    }
    let inc = fields.step_increment(part);
    let step = y_right - y_left - &inc * h;
    Ok(IntervalResidual { stage, step, w, v: -inc })
}

/// Stage and step residuals of every interval, with their `h` derivatives.
pub fn interval_residuals<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    mesh: &MeshSolution,
    h: f64,
) -> Result<Vec<IntervalResidual>, BvpError> {
    (0..mesh.n())
        .map(|i| {
            interval_residual(model, part, &mesh.nodes[i], &mesh.nodes[i + 1], &mesh.stage_list(i), h)
                .map_err(|source| BvpError::Model { interval: Some(i + 1), source })
        })
        .collect()
}

/// Newton right-hand sides `(b_i, c_i)` per interval: negated step and stage residuals.
pub fn residuals<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    mesh: &MeshSolution,
    h: f64,
) -> Result<Vec<(Vector, Vector)>, BvpError> {
    Ok(interval_residuals(model, part, mesh, h)?.into_iter().map(|r| (-r.step, -r.stage)).collect())
}

/// Stepsize columns `(w_i, v_i)` per interval.
pub fn h_border_columns<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    mesh: &MeshSolution,
    h: f64,
) -> Result<Vec<(Vector, Vector)>, BvpError> {
    Ok(interval_residuals(model, part, mesh, h)?.into_iter().map(|r| (r.w, r.v)).collect())
}
