//! Pontryagin extension of a controlled Hamiltonian system.
//!
//! For `ẏ = J∇H(y) + [0; u]` with running cost `½|u|²`, stationarity gives
//! `u = −λ_p` and the reduced Hamiltonian
//! `Ĥ(y, λ) = λᵀ J∇H(y) − ½|λ_p|²`.
//!
//! The extended state is `x = (y, λ)` of length `4m`. With that ordering the
//! standard `J` already yields `ẏ = ∂Ĥ/∂λ` and `λ̇ = −∂Ĥ/∂y`, so no permutation
//! is applied.

use alloc::vec::Vec;

use crate::{Matrix, Vector};

use super::{apply_j, apply_jt, j_times, Crtbp, HamiltonianModel, Hill, ModelError};

/// Relative step of the directional difference of `∇²H` used for third derivatives.
const THIRD_DERIVATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ControlledModel<M> {
    base: M,
}

impl<M: HamiltonianModel> ControlledModel<M> {
    pub fn new(base: M) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    /// Dimension `2m` of the uncontrolled state.
    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    /// Optimal control `u = −λ_p` at extended state `x`.
    pub fn control(&self, x: &[f64]) -> Vector {
        let n = self.base.dim();
        let m = n / 2;
        Vector::from_fn(m, |i, _| -x[n + m + i])
    }

    /// Extended state from `y` and costates `λ`.
    pub fn join(&self, y: &[f64], lambda: &[f64]) -> Vector {
        let mut x = Vec::with_capacity(y.len() + lambda.len());
        x.extend_from_slice(y);
        x.extend_from_slice(lambda);
        Vector::from_vec(x)
    }

    fn split<'a>(&self, x: &'a [f64]) -> Result<(&'a [f64], Vector), ModelError> {
        self.check_dim(x)?;
        let n = self.base.dim();
        Ok((&x[..n], Vector::from_column_slice(&x[n..])))
    }
}

impl<M: HamiltonianModel> HamiltonianModel for ControlledModel<M> {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn energy(&self, x: &[f64]) -> Result<f64, ModelError> {
        let (y, lambda) = self.split(x)?;
        let n = self.base.dim();
        let f = self.base.vector_field(y)?;
        let lp = lambda.rows(n / 2, n / 2);
        Ok(lambda.dot(&f) - 0.5 * lp.norm_squared())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vector, ModelError> {
        let (y, lambda) = self.split(x)?;
        let n = self.base.dim();
        let hess = self.base.hessian(y)?;
        let gy = &hess * apply_jt(&lambda);
        let mut gl = apply_j(&self.base.gradient(y)?);
        for i in n / 2..n {
            gl[i] -= lambda[i];
        }
        let mut g = Vector::zeros(2 * n);
        g.rows_mut(0, n).copy_from(&gy);
        g.rows_mut(n, n).copy_from(&gl);
        Ok(g)
    }

    fn hessian(&self, x: &[f64]) -> Result<Matrix, ModelError> {
        let (y, lambda) = self.split(x)?;
        let n = self.base.dim();
        let hess = self.base.hessian(y)?;
        let dir = apply_jt(&lambda);
        let mut out = Matrix::zeros(2 * n, 2 * n);

        // yy block: derivative of ∇²H along Jᵀλ, by central differences.
        let dn = dir.norm();
        if dn > 0.0 {
            let ynorm = y.iter().map(|v| v * v).sum::<f64>();
            let step = THIRD_DERIVATIVE_STEP * crate::math::sqrt(ynorm).max(1.0);
            let unit = &dir / dn;
            let yp: Vec<f64> = y.iter().zip(unit.iter()).map(|(a, u)| a + step * u).collect();
            let ym: Vec<f64> = y.iter().zip(unit.iter()).map(|(a, u)| a - step * u).collect();
            let d3 = (self.base.hessian(&yp)? - self.base.hessian(&ym)?) * (dn / (2.0 * step));
            let sym = (&d3 + d3.transpose()) * 0.5;
            out.view_mut((0, 0), (n, n)).copy_from(&sym);
        }

        let j_hess = j_times(&hess);
        out.view_mut((n, 0), (n, n)).copy_from(&j_hess);
        out.view_mut((0, n), (n, n)).copy_from(&j_hess.transpose());
        for i in n / 2..n {
            out[(n + i, n + i)] = -1.0;
        }
        Ok(out)
    }
}

/// Extension of the spatial three-body model (dimension 12).
pub fn extended_model(base: Crtbp) -> Result<ControlledModel<Crtbp>, ModelError> {
    if base.dim() != 6 {
        return Err(ModelError::InvalidParameter("extended_model expects the spatial model"));
    }
    Ok(ControlledModel::new(base))
}

/// Extension of the Hill model (dimension 8).
pub fn extended_hill_model(base: Hill) -> ControlledModel<Hill> {
    ControlledModel::new(base)
}
