//! Hill's lunar problem, Earth-centered.

use crate::math::{cbrt, sqrt};
use crate::{Matrix, Vector};

use super::{HamiltonianModel, ModelError, SINGULARITY_RADIUS};

/// `H = p1 q2 − p2 q1 + ½(p1² + p2²) − 1/|q| + ½q2² − q1²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Hill;

pub fn hill_model() -> Hill {
    Hill
}

/// Abscissa `(1/3)^{1/3}` of the libration point on the positive `q1` axis.
pub fn hill_l2_abscissa() -> f64 {
    cbrt(1.0 / 3.0)
}

impl Hill {
    /// Rest state at planar position `q`: `p = (−q2, q1)`.
    pub fn rest_state(&self, q: [f64; 2]) -> Vector {
        Vector::from_column_slice(&[q[0], q[1], -q[1], q[0]])
    }

    pub fn l2_state(&self) -> Vector {
        self.rest_state([hill_l2_abscissa(), 0.0])
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

impl HamiltonianModel for Hill {
    fn dim(&self) -> usize {
        4
    }

    fn energy(&self, y: &[f64]) -> Result<f64, ModelError> {
        let r = self.radius(y)?;
        let (q1, q2, p1, p2) = (y[0], y[1], y[2], y[3]);
        Ok(p1 * q2 - p2 * q1 + 0.5 * (p1 * p1 + p2 * p2) - 1.0 / r + 0.5 * q2 * q2 - q1 * q1)
    }

    fn gradient(&self, y: &[f64]) -> Result<Vector, ModelError> {
        let r = self.radius(y)?;
        let (q1, q2, p1, p2) = (y[0], y[1], y[2], y[3]);
        // Grouped through the synodic velocity `v = p + (q2, −q1)`, which is
        // small near the libration points; this keeps the O(1) terms from cancelling.
        let (v1, v2) = (p1 + q2, p2 - q1);
        let ir3 = 1.0 / (r * r * r);
        Ok(Vector::from_column_slice(&[-v2 + q1 * (ir3 - 3.0), v1 + q2 * ir3, v1, v2]))
    }

    fn hessian(&self, y: &[f64]) -> Result<Matrix, ModelError> {
        let r = self.radius(y)?;
        let q = [y[0], y[1]];
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        let mut h = Matrix::zeros(4, 4);
        for i in 0..2 {
            h[(i, i)] = 1.0 / r3;
            for j in 0..2 {
                h[(i, j)] -= 3.0 * q[i] * q[j] / r5;
            }
        }
        h[(0, 0)] -= 2.0;
        h[(1, 1)] += 1.0;
        h[(2, 2)] = 1.0;
        h[(3, 3)] = 1.0;
        h[(0, 3)] = -1.0;
        h[(3, 0)] = -1.0;
        h[(1, 2)] = 1.0;
        h[(2, 1)] = 1.0;
        Ok(h)
    }
}
