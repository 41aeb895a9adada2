use alloc::boxed::Box;
use core::fmt;

use crate::{Matrix, Vector};

/// Condition `g(y) = 0` on a single endpoint.
pub trait BoundaryCondition: fmt::Debug {
    fn rows(&self) -> usize;
    fn residual(&self, y: &[f64]) -> Vector;
    /// `rows × 2m`.
    fn jacobian(&self, y: &[f64]) -> Matrix;
}

/// Condition `g(y_0, y_n) = 0` with `2m` rows.
pub trait CoupledCondition: fmt::Debug {
    fn residual(&self, y0: &[f64], yn: &[f64]) -> Vector;
    /// `(∂g/∂y_0, ∂g/∂y_n)`.
    fn jacobians(&self, y0: &[f64], yn: &[f64]) -> (Matrix, Matrix);
}

/// `M y = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCondition {
    pub matrix: Matrix,
    pub rhs: Vector,
}

impl LinearCondition {
    pub fn new(matrix: Matrix, rhs: Vector) -> Self {
        Self { matrix, rhs }
    }

    /// Fixes the listed components: `y[idx[j]] = values[j]`.
    pub fn components(dim: usize, idx: &[usize], values: &[f64]) -> Self {
        let mut matrix = Matrix::zeros(idx.len(), dim);
        for (r, &c) in idx.iter().enumerate() {
            matrix[(r, c)] = 1.0;
        }
        Self { matrix, rhs: Vector::from_column_slice(values) }
    }
}

impl BoundaryCondition for LinearCondition {
    fn rows(&self) -> usize {
        self.matrix.nrows()
    }
    fn residual(&self, y: &[f64]) -> Vector {
        &self.matrix * Vector::from_column_slice(y) - &self.rhs
    }
    fn jacobian(&self, _y: &[f64]) -> Matrix {
        self.matrix.clone()
    }
}

/// `B_a y_0 + B_b y_n = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoupled {
    pub ba: Matrix,
    pub bb: Matrix,
    pub rhs: Vector,
}

impl CoupledCondition for LinearCoupled {
    fn residual(&self, y0: &[f64], yn: &[f64]) -> Vector {
        &self.ba * Vector::from_column_slice(y0) + &self.bb * Vector::from_column_slice(yn) - &self.rhs
    }
    fn jacobians(&self, _y0: &[f64], _yn: &[f64]) -> (Matrix, Matrix) {
        (self.ba.clone(), self.bb.clone())
    }
}

/// Boundary conditions of the Hamiltonian boundary value problem.
#[derive(Debug)]
pub enum BoundarySpec {
    /// `r` conditions at `t_0` and `2m − r` at `t_f`.
    Separated { initial: Box<dyn BoundaryCondition>, terminal: Box<dyn BoundaryCondition> },
    /// `2m` conditions coupling both ends.
    NonSeparated(Box<dyn CoupledCondition>),
    /// `y_n = y_0` with anchor rows `B_a y_0 = b_0`; the period is fixed.
    PeriodicAnchored { anchor: Matrix, anchor_rhs: Vector },
    /// As `PeriodicAnchored`, plus `H(y_0) = energy` with the stepsize unknown.
    PeriodicEnergy { anchor: Matrix, anchor_rhs: Vector, energy: f64 },
}

impl BoundarySpec {
    pub fn separated(initial: impl BoundaryCondition + 'static, terminal: impl BoundaryCondition + 'static) -> Self {
        Self::Separated { initial: Box::new(initial), terminal: Box::new(terminal) }
    }

    pub fn non_separated(cond: impl CoupledCondition + 'static) -> Self {
        Self::NonSeparated(Box::new(cond))
    }

    /// Single anchor `y_0[component] = value`.
    pub fn periodic_anchored(dim: usize, component: usize, value: f64) -> Self {
        let c = LinearCondition::components(dim, &[component], &[value]);
        Self::PeriodicAnchored { anchor: c.matrix, anchor_rhs: c.rhs }
    }

    pub fn periodic_energy(dim: usize, component: usize, value: f64, energy: f64) -> Self {
        let c = LinearCondition::components(dim, &[component], &[value]);
        Self::PeriodicEnergy { anchor: c.matrix, anchor_rhs: c.rhs, energy }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Self::PeriodicAnchored { .. } | Self::PeriodicEnergy { .. })
    }

    pub fn has_unknown_step(&self) -> bool {
        matches!(self, Self::PeriodicEnergy { .. })
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<(), &'static str> {
        match self {
            Self::Separated { initial, terminal } => {
                if initial.rows() + terminal.rows() != dim {
                    return Err("separated conditions must have 2m rows in total");
                }
            }
            Self::NonSeparated(_) => {}
            Self::PeriodicAnchored { anchor, anchor_rhs } | Self::PeriodicEnergy { anchor, anchor_rhs, .. } => {
                if anchor.nrows() == 0 || anchor.nrows() > dim || anchor.ncols() != dim {
                    return Err("anchor must be r × 2m with 1 ≤ r ≤ 2m");
                }
                if anchor_rhs.len() != anchor.nrows() {
                    return Err("anchor right-hand side length differs from its row count");
                }
            }
        }
        Ok(())
    }
}
