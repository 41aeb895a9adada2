//! Small reference problems for verification.

use crate::math::{cos, sin, sqrt};
use crate::{Matrix, Vector};

use super::{HamiltonianModel, ModelError, SINGULARITY_RADIUS};

/// `H = c`: the vector field vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl HamiltonianModel for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(y)?;
        Ok(self.value)
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        self.check_dim(y)?;
        Ok(Vector::zeros(self.dim))
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        self.check_dim(y)?;
        Ok(Matrix::zeros(self.dim, self.dim))
    }
}

/// `H = (q² + p²)/2` with one degree of freedom.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Harmonic;

impl HamiltonianModel for Harmonic {
    fn dim(&self) -> usize {
        2
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(y)?;
        Ok(0.5 * (y[0] * y[0] + y[1] * y[1]))
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        self.check_dim(y)?;
        Ok(Vector::from_column_slice(y))
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        self.check_dim(y)?;
        Ok(Matrix::identity(2, 2))
    }
}

/// `H = p²/2 − cos q`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Pendulum;

impl HamiltonianModel for Pendulum {
    fn dim(&self) -> usize {
        2
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(y)?;
        Ok(0.5 * y[1] * y[1] - cos(y[0]))
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        self.check_dim(y)?;
        Ok(Vector::from_column_slice(&[sin(y[0]), y[1]]))
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        self.check_dim(y)?;
        Ok(Matrix::from_row_slice(2, 2, &[cos(y[0]), 0.0, 0.0, 1.0]))
    }
}

/// `H = p²/2 + q⁴/4`, a polynomial of degree 4.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Quartic;

impl HamiltonianModel for Quartic {
    fn dim(&self) -> usize {
        2
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(y)?;
        let q2 = y[0] * y[0];
        Ok(0.5 * y[1] * y[1] + 0.25 * q2 * q2)
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        self.check_dim(y)?;
        Ok(Vector::from_column_slice(&[y[0] * y[0] * y[0], y[1]]))
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        self.check_dim(y)?;
        Ok(Matrix::from_row_slice(2, 2, &[3.0 * y[0] * y[0], 0.0, 0.0, 1.0]))
    }
}

/// Henon–Heiles: `H = ½|p|² + ½|q|² + q1² q2 − q2³/3`, a cubic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HenonHeiles;

impl HamiltonianModel for HenonHeiles {
    fn dim(&self) -> usize {
        4
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(y)?;
        let (x, z, px, pz) = (y[0], y[1], y[2], y[3]);
        Ok(0.5 * (px * px + pz * pz + x * x + z * z) + x * x * z - z * z * z / 3.0)
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        self.check_dim(y)?;
        let (x, z, px, pz) = (y[0], y[1], y[2], y[3]);
        Ok(Vector::from_column_slice(&[x + 2.0 * x * z, z + x * x - z * z, px, pz]))
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        self.check_dim(y)?;
        let (x, z) = (y[0], y[1]);
        let mut h = Matrix::identity(4, 4);
        h[(0, 0)] = 1.0 + 2.0 * z;
        h[(0, 1)] = 2.0 * x;
        h[(1, 0)] = 2.0 * x;
        h[(1, 1)] = 1.0 - 2.0 * z;
        Ok(h)
    }
}

/// Planar Kepler problem `H = ½|p|² − 1/|q|`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Kepler;

impl Kepler {
    /// Pericenter state of the unit-semi-major-axis orbit with eccentricity `e`; period `2π`.
    pub fn pericenter_state(e: f64) -> Vector {
        Vector::from_column_slice(&[1.0 - e, 0.0, 0.0, sqrt((1.0 + e) / (1.0 - e))])
    }

    fn radius(&self, y: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(y)?;
        let r = sqrt(y[0] * y[0] + y[1] * y[1]);
        if r < SINGULARITY_RADIUS {
            return Err(ModelError::Singular { body: "origin", distance: r });
        }
        Ok(r)
    }
}

impl HamiltonianModel for Kepler {
    fn dim(&self) -> usize {
        4
    }
    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        let r = self.radius(y)?;
        Ok(0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / r)
    }
    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        let r = self.radius(y)?;
        let r3 = r * r * r;
        Ok(Vector::from_column_slice(&[y[0] / r3, y[1] / r3, y[2], y[3]]))
    }
    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        let r = self.radius(y)?;
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        let mut h = Matrix::identity(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                h[(i, j)] = -3.0 * y[i] * y[j] / r5 + if i == j { 1.0 / r3 } else { 0.0 };
            }
        }
        Ok(h)
    }
}
