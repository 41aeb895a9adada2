//! One-step HBVM(k,s) propagation in fundamental/silent stage form.
//!
//! With fundamental stages `Z` (s of them) and silent stages `W` (k − s),
//!
//! ```text
//! Z  = e⊗y0 + h (B1⊗J) ∇H(Z) + h (B2⊗J) ∇H(W)
//! W  = a0⊗y0 + (A_map⊗I) Z
//! y1 = y0 + h (β1ᵀ⊗J) ∇H(Z) + h (β2ᵀ⊗J) ∇H(W)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::math::norm_inf;
use crate::models::{j_times, HamiltonianModel, ModelError};
use crate::tableau::StagePartition;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("stage Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("stage Newton diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("singular stage Jacobian")]
    SingularJacobian,
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Bound on `|F(Z)|∞ / max(1, |y0|∞)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Step halvings tried before a non-decreasing residual counts as divergence.
    pub max_halvings: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iters: 50, max_halvings: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub y1: Vector,
    /// Fundamental stages.
    pub z: Vec<Vector>,
    /// Silent stages, `a0⊗y0 + (A_map⊗I) Z`.
    pub w: Vec<Vector>,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

/// Silent stages from `y0` and the fundamental stages.
pub fn silent_stages(part: &StagePartition, y0: &Vector, z: &[Vector]) -> Vec<Vector> {
    (0..part.k - part.s)
        .map(|i| {
            let mut w = y0 * part.a0[i];
            for (j, zj) in z.iter().enumerate() {
                w.axpy(part.a_map[(i, j)], zj, 1.0);
            }
            w
        })
        .collect()
}

/// Vector fields at all stages of one interval.
#[derive(Debug, Clone)]
pub struct StageFields {
    pub w: Vec<Vector>,
    /// `J∇H(Z_j)`.
    pub fz: Vec<Vector>,
    /// `J∇H(W_l)`.
    pub fw: Vec<Vector>,
}

impl StageFields {
    pub fn new<M: HamiltonianModel + ?Sized>(
        model: &M,
        part: &StagePartition,
        y0: &Vector,
        z: &[Vector],
    ) -> Result<Self, ModelError> {
        let w = silent_stages(part, y0, z);
        let fz = z.iter().map(|zj| model.vector_field(zj.as_slice())).collect::<Result<Vec<_>, _>>()?;
        let fw = w.iter().map(|wl| model.vector_field(wl.as_slice())).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { w, fz, fw })
    }

    /// `(B1⊗J)∇H(Z) + (B2⊗J)∇H(W)`, stage `i`.
    pub fn stage_increment(&self, part: &StagePartition, i: usize) -> Vector {
        let mut acc = Vector::zeros(self.fz[0].len());
        for (j, f) in self.fz.iter().enumerate() {
            acc.axpy(part.b1[(i, j)], f, 1.0);
        }
        for (l, f) in self.fw.iter().enumerate() {
            acc.axpy(part.b2[(i, l)], f, 1.0);
        }
        acc
    }

    /// `(β1ᵀ⊗J)∇H(Z) + (β2ᵀ⊗J)∇H(W)`.
    pub fn step_increment(&self, part: &StagePartition) -> Vector {
        let mut acc = Vector::zeros(self.fz[0].len());
        for (j, f) in self.fz.iter().enumerate() {
            acc.axpy(part.beta1[j], f, 1.0);
        }
        for (l, f) in self.fw.iter().enumerate() {
            acc.axpy(part.beta2[l], f, 1.0);
        }
        acc
    }
}

fn stage_residual(part: &StagePartition, y0: &Vector, z: &[Vector], fields: &StageFields, h: f64) -> Vector {
    let n = y0.len();
    let mut r = Vector::zeros(n * part.s);
    for i in 0..part.s {
        let inc = fields.stage_increment(part, i);
        let ri = &z[i] - y0 - inc * h;
        r.rows_mut(i * n, n).copy_from(&ri);
    }
    r
}

fn stage_jacobian<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    z: &[Vector],
    w: &[Vector],
    h: f64,
) -> Result<Matrix, ModelError> {
    let n = z[0].len();
    let s = part.s;
    let jz = z.iter().map(|v| model.hessian(v.as_slice()).map(|m| j_times(&m))).collect::<Result<Vec<_>, _>>()?;
    let jw = w.iter().map(|v| model.hessian(v.as_slice()).map(|m| j_times(&m))).collect::<Result<Vec<_>, _>>()?;
    let mut jac = Matrix::identity(n * s, n * s);
    for i in 0..s {
        for j in 0..s {
            let mut block = &jz[j] * part.b1[(i, j)];
            for (l, jl) in jw.iter().enumerate() {
                block += jl * (part.b2[(i, l)] * part.a_map[(l, j)]);
            }
            let mut view = jac.view_mut((i * n, j * n), (n, n));
            view -= block * h;
        }
    }
    Ok(jac)
}

fn scaled_norm(r: &Vector, scale: f64) -> f64 {
    norm_inf(r.as_slice()) / scale
}

/// Advances `y0` by one HBVM step of size `h`.
pub fn hbvm_step<M: HamiltonianModel + ?Sized>(
    model: &M,
    y0: &[f64],
    h: f64,
    part: &StagePartition,
    opts: &StepOptions,
) -> Result<StepResult, StepError> {
    model.check_dim(y0)?;
    if !(h.is_finite() && h != 0.0) {
        return Err(StepError::InvalidStep(h));
    }
    let n = y0.len();
    let s = part.s;
    let y0 = Vector::from_column_slice(y0);
    let scale = norm_inf(y0.as_slice()).max(1.0);

    let mut z: Vec<Vector> = vec![y0.clone(); s];
    let mut fields = StageFields::new(model, part, &y0, &z)?;
    let mut res = stage_residual(part, &y0, &z, &fields, h);
    let mut rnorm = scaled_norm(&res, scale);
    let mut iters = 0;

    while rnorm > opts.tol {
        if iters == opts.max_iters {
            return Err(StepError::NotConverged { iterations: iters, residual: rnorm });
        }
        iters += 1;
        let jac = stage_jacobian(model, part, &z, &fields.w, h)?;
        let delta = jac.lu().solve(&(-&res)).ok_or(StepError::SingularJacobian)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<Vector> = (0..s).map(|i| &z[i] + delta.rows(i * n, n) * lambda).collect();
            if let Ok(tf) = StageFields::new(model, part, &y0, &trial) {
                let tr = stage_residual(part, &y0, &trial, &tf, h);
                let tn = scaled_norm(&tr, scale);
                if tn < rnorm {
                    z = trial;
                    fields = tf;
                    res = tr;
                    rnorm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(StepError::Diverged { iterations: iters, residual: rnorm });
        }
    }

    let y1 = &y0 + fields.step_increment(part) * h;
    Ok(StepResult { y1, z, w: fields.w, newton_iters: iters, residual_norm: rnorm })
}

/// `n_steps` fixed steps; returns the `n_steps + 1` mesh states and the fundamental stages.
pub fn propagate<M: HamiltonianModel + ?Sized>(
    model: &M,
    y0: &[f64],
    h: f64,
    n_steps: usize,
    part: &StagePartition,
    opts: &StepOptions,
) -> Result<(Vec<Vector>, Vec<Vec<Vector>>), StepError> {
    let mut ys = Vec::with_capacity(n_steps + 1);
    let mut zs = Vec::with_capacity(n_steps);
    ys.push(Vector::from_column_slice(y0));
    for i in 0..n_steps {
        let step = hbvm_step(model, ys[i].as_slice(), h, part, opts)?;
        zs.push(step.z);
        ys.push(step.y1);
    }
    Ok((ys, zs))
}

/// `σ(t0 + c h)`, the degree-`s` polynomial through `y0` at 0 and `Z` at the fundamental nodes.
pub fn dense_output(part: &StagePartition, y0: &[f64], z: &[Vector], _h: f64, c: f64) -> Vector {
    let w = part.interpolation_weights(c);
    let mut out = Vector::from_column_slice(y0) * w[0];
    for (j, zj) in z.iter().enumerate() {
        out.axpy(w[j + 1], zj, 1.0);
    }
    out
}

/// `H(y_i) − H(y_0)` along a trajectory.
pub fn energy_drift<M: HamiltonianModel + ?Sized>(model: &M, trajectory: &[Vector]) -> Result<Vec<f64>, ModelError> {
    let Some(first) = trajectory.first() else {
        return Ok(Vec::new());
    };
    let h0 = model.energy(first.as_slice())?;
    trajectory.iter().map(|y| model.energy(y.as_slice()).map(|h| h - h0)).collect()
}
