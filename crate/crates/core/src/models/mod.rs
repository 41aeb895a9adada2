//! Hamiltonian models.
//!
//! A model evaluates `H`, `∇H` and `∇²H` on a `2m`-dimensional state
//! `y = (q, p)`. The symplectic matrix `J = [[0, I], [−I, 0]]` is never formed;
//! [`apply_j`] swaps and negates instead.

use alloc::vec::Vec;

use nalgebra::Complex;

use crate::math::{norm_inf, sqrt};
use crate::{Matrix, Vector};

mod crtbp;
mod extended;
mod hill;
pub mod simple;
pub mod units;

pub use crtbp::{collinear_libration_points, triangular_libration_points, Crtbp, CrtbpParams};
pub use extended::{extended_hill_model, extended_model, ControlledModel};
pub use hill::{hill_l2_abscissa, hill_model, Hill};

/// Points closer than this to a primary are rejected.
pub const SINGULARITY_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("state is {distance:e} from {body}, inside the singularity guard")]
    Singular { body: &'static str, distance: f64 },
    #[error("state has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("not an equilibrium: |grad H| = {gradient_norm:e}")]
    NotEquilibrium { gradient_norm: f64 },
    #[error("linearization has no center eigenvalue pair")]
    NoCenterMode,
}

/// Evaluation contract for an autonomous Hamiltonian `H: R^{2m} → R`.
pub trait HamiltonianModel {
    /// State dimension `2m`.
    fn dim(&self) -> usize;

    fn energy(&self, y: &[f64]) -> Result<f64, ModelError>;

    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError>;

    /// Symmetric `2m × 2m` Hessian.
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError>;

    /// `J ∇H(y)`.
    fn vector_field(&self, y: &[f64]) -> Result<Vector, ModelError> {
        Ok(apply_j(&self.gradient(y)?))
    }

    fn check_dim(&self, y: &[f64]) -> Result<(), ModelError> {
        if y.len() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        Ok(())
    }
}

impl<M: HamiltonianModel + ?Sized> HamiltonianModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        (**self).energy(y)
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        (**self).gradient(y)
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        (**self).hessian(y)
    }
    fn vector_field(&self, y: &[f64]) -> Result<Vector, ModelError> {
        (**self).vector_field(y)
    }
}

impl<M: HamiltonianModel + ?Sized> HamiltonianModel for alloc::boxed::Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        (**self).energy(y)
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        (**self).gradient(y)
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        (**self).hessian(y)
    }
    fn vector_field(&self, y: &[f64]) -> Result<Vector, ModelError> {
        (**self).vector_field(y)
    }
}

/// `J v` for `v = (a, b)`: returns `(b, −a)`.
pub fn apply_j(v: &Vector) -> Vector {
    let m = v.len() / 2;
    Vector::from_fn(v.len(), |i, _| if i < m { v[i + m] } else { -v[i - m] })
}

/// `J M`, row-wise swap-and-negate.
pub fn j_times(mat: &Matrix) -> Matrix {
    let m = mat.nrows() / 2;
    Matrix::from_fn(mat.nrows(), mat.ncols(), |i, j| if i < m { mat[(i + m, j)] } else { -mat[(i - m, j)] })
}

/// `Jᵀ v = −J v`.
pub fn apply_jt(v: &Vector) -> Vector {
    -apply_j(v)
}

/// State matrix `J ∇²H(y_eq)` of the variational equation at an equilibrium.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub state: Vector,
    pub matrix: Matrix,
    pub eigenvalues: Vec<Complex<f64>>,
}

/// Linearizes `ẏ = J∇H(y)` at an equilibrium (`|∇H| < 1e-8`).
pub fn linearize<M: HamiltonianModel + ?Sized>(model: &M, y_eq: &[f64]) -> Result<Linearization, ModelError> {
    model.check_dim(y_eq)?;
    let g = model.gradient(y_eq)?;
    let gnorm = norm_inf(g.as_slice());
    if gnorm >= 1e-8 {
        return Err(ModelError::NotEquilibrium { gradient_norm: gnorm });
    }
    let matrix = j_times(&model.hessian(y_eq)?);
    let eigenvalues = matrix.clone().complex_eigenvalues().iter().copied().collect();
    Ok(Linearization { state: Vector::from_column_slice(y_eq), matrix, eigenvalues })
}

impl Linearization {
    fn scale(&self) -> f64 {
        self.eigenvalues.iter().fold(1.0_f64, |acc, z| acc.max(sqrt(z.re * z.re + z.im * z.im)))
    }

    /// Positive real parts of the hyperbolic pairs, decreasing.
    pub fn real_rates(&self) -> Vec<f64> {
        let tol = 1e-8 * self.scale();
        let mut v: Vec<f64> =
            self.eigenvalues.iter().filter(|z| z.im.abs() <= tol && z.re > tol).map(|z| z.re).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Positive frequencies of the center pairs `±iω`, decreasing.
    pub fn center_frequencies(&self) -> Vec<f64> {
        let tol = 1e-8 * self.scale();
        let mut v: Vec<f64> =
            self.eigenvalues.iter().filter(|z| z.re.abs() <= tol && z.im > tol).map(|z| z.im).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Basis `(a1, a2)` of the real invariant plane of the pair `±iω`.
    ///
    /// Every `a` in the plane gives the linear solution
    /// `y(t) = y_eq + a cos ωt + (M a / ω) sin ωt`.
    pub fn center_plane(&self, omega: f64) -> Result<(Vector, Vector), ModelError> {
        let n = self.matrix.nrows();
        let shifted = &self.matrix * &self.matrix + Matrix::identity(n, n) * (omega * omega);
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.ok_or(ModelError::NoCenterMode)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let scale = svd.singular_values.iter().fold(1.0_f64, |a, &b| a.max(b));
        if n < 2 || svd.singular_values[order[1]] > 1e-6 * scale {
            return Err(ModelError::NoCenterMode);
        }
        let a1 = vt.row(order[0]).transpose();
        let a2 = vt.row(order[1]).transpose();
        Ok((a1, a2))
    }

    /// Linear solution of the center mode `ω` starting at `y_eq + a`.
    pub fn center_solution(&self, omega: f64, a: &Vector, t: f64) -> Vector {
        let b = &self.matrix * a / omega;
        &self.state + a * crate::math::cos(omega * t) + b * crate::math::sin(omega * t)
    }
}

/// Central-difference gradient of `H`, for derivative checks.
pub fn fd_gradient<M: HamiltonianModel + ?Sized>(model: &M, y: &[f64], step: f64) -> Result<Vector, ModelError> {
    let n = y.len();
    let mut g = Vector::zeros(n);
    let mut yp: Vec<f64> = y.to_vec();
    for i in 0..n {
        let hi = step * y[i].abs().max(1.0);
        yp[i] = y[i] + hi;
        let fp = model.energy(&yp)?;
        yp[i] = y[i] - hi;
        let fm = model.energy(&yp)?;
        yp[i] = y[i];
        g[i] = (fp - fm) / (2.0 * hi);
    }
    Ok(g)
}

/// Central-difference Hessian from the analytic gradient.
pub fn fd_hessian<M: HamiltonianModel + ?Sized>(model: &M, y: &[f64], step: f64) -> Result<Matrix, ModelError> {
    let n = y.len();
    let mut h = Matrix::zeros(n, n);
    let mut yp: Vec<f64> = y.to_vec();
    for j in 0..n {
        let hj = step * y[j].abs().max(1.0);
        yp[j] = y[j] + hj;
        let gp = model.gradient(&yp)?;
        yp[j] = y[j] - hj;
        let gm = model.gradient(&yp)?;
        yp[j] = y[j];
        h.set_column(j, &((gp - gm) / (2.0 * hj)));
    }
    Ok(h)
}

/// Largest relative discrepancy `|a − b| / max(|a|∞, |b|∞, floor)`.
pub fn relative_discrepancy(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let scale = norm_inf(a).max(norm_inf(b)).max(floor);
    a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())) / scale
}
