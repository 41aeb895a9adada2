//! HBVM(k,s) coefficients.
//!
//! The Butcher matrix is `A = ℐ_s 𝒫_sᵀ Ω` on the `k` Gauss–Legendre
//! abscissae; it has rank `s`. [`StagePartition`] splits the `k` stages into
//! `s` fundamental stages (the unknowns) and `k − s` silent stages, which are
//! Lagrange combinations of `y_0` and the fundamental ones.

use alloc::vec::Vec;

use crate::quadrature::{basis_matrices, gauss_legendre_rule, QuadratureError, QuadratureRule};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableauError {
    #[error("HBVM(k,s) needs 1 <= s <= k, got k={k}, s={s}")]
    InvalidOrder { k: usize, s: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Runge–Kutta form of HBVM(k,s).
#[derive(Debug, Clone, PartialEq)]
pub struct HbvmTableau {
    pub k: usize,
    pub s: usize,
    /// `k × k` coefficient matrix `ℐ_s 𝒫_sᵀ Ω`.
    pub a: Matrix,
    pub b: Vector,
    pub c: Vector,
}

impl HbvmTableau {
    /// Singular values of `A` in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.a.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        sv
    }

    /// Number of singular values above `rel_tol · σ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        sv.iter().filter(|&&x| x > rel_tol * top).count()
    }
}

fn check_order(k: usize, s: usize) -> Result<(), TableauError> {
    if s == 0 || s > k {
        return Err(TableauError::InvalidOrder { k, s });
    }
    Ok(())
}

pub fn build_tableau(k: usize, s: usize) -> Result<HbvmTableau, TableauError> {
    check_order(k, s)?;
    let rule = gauss_legendre_rule(k)?;
    tableau_from_rule(&rule, s)
}

fn tableau_from_rule(rule: &QuadratureRule, s: usize) -> Result<HbvmTableau, TableauError> {
    check_order(rule.k, s)?;
    let bm = basis_matrices(rule, s)?;
    let a = &bm.integral * bm.p.transpose() * &bm.omega;
    Ok(HbvmTableau {
        k: rule.k,
        s,
        a,
        b: Vector::from_column_slice(&rule.weights),
        c: Vector::from_column_slice(&rule.nodes),
    })
}

/// Fundamental/silent split of the HBVM(k,s) stages.
///
/// With `Z` the fundamental stages and `W` the silent ones:
///
/// ```text
/// Z = e⊗y0 + h (B1⊗J) ∇H(Z) + h (B2⊗J) ∇H(W)
/// W = a0⊗y0 + (A_map⊗I) Z
/// y1 = y0 + h (β1ᵀ⊗J) ∇H(Z) + h (β2ᵀ⊗J) ∇H(W)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StagePartition {
    pub k: usize,
    pub s: usize,
    /// Indices (into the sorted abscissae) of the fundamental stages, increasing.
    pub fundamental_idx: Vec<usize>,
    /// The complementary silent stage indices, increasing.
    pub silent_idx: Vec<usize>,
    /// Abscissae of the fundamental stages.
    pub fundamental_nodes: Vec<f64>,
    /// Abscissae of the silent stages.
    pub silent_nodes: Vec<f64>,
    /// Weight of `y0` in each silent stage, length `k − s`.
    pub a0: Vector,
    /// `(k − s) × s` weights of the fundamental stages in each silent stage.
    pub a_map: Matrix,
    pub b1: Matrix,
    pub b2: Matrix,
    pub beta1: Vector,
    pub beta2: Vector,
    /// The full tableau the partition was cut from.
    pub tableau: HbvmTableau,
}

impl StagePartition {
    /// HBVM(k,s) with the default fundamental-node selection.
    pub fn new(k: usize, s: usize) -> Result<Self, TableauError> {
        check_order(k, s)?;
        let rule = gauss_legendre_rule(k)?;
        select_fundamental(&rule, s)
    }

    /// State dimension times `s`; the length of a stacked fundamental stage vector.
    pub fn stage_len(&self, dim: usize) -> usize {
        dim * self.s
    }

    /// `B2·a0` (length `s`), the `y0` coupling of the stage equations.
    pub fn b2_a0(&self) -> Vector {
        &self.b2 * &self.a0
    }

    /// `B1 + B2·A_map` (`s × s`).
    pub fn stage_coupling(&self) -> Matrix {
        &self.b1 + &self.b2 * &self.a_map
    }

    /// `β1ᵀ + β2ᵀ·A_map` as a length-`s` vector.
    pub fn step_coupling(&self) -> Vector {
        &self.beta1 + self.a_map.transpose() * &self.beta2
    }

    /// `β2ᵀ·a0`.
    pub fn beta2_a0(&self) -> f64 {
        self.beta2.dot(&self.a0)
    }

    /// Lagrange weights at `c` on the nodes `{0, fundamental nodes}`.
    ///
    /// Entry 0 is the weight of `y0`, entry `1 + j` that of the j-th fundamental stage.
    pub fn interpolation_weights(&self, c: f64) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(self.s + 1);
        nodes.push(0.0);
        nodes.extend_from_slice(&self.fundamental_nodes);
        lagrange_weights(&nodes, c)
    }
}

/// Lagrange basis values `ℓ_j(x)` on the given distinct nodes.
pub fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(1.0, |acc, (_, &xi)| acc * (x - xi) / (xj - xi))
        })
        .collect()
}

/// Picks the `s` fundamental abscissae and builds the partitioned coefficients.
///
/// The chosen nodes minimize the largest deviation from the uniform targets
/// `(2i − 1)/(2s)`, matched in increasing order; among optimal choices the
/// lexicographically smallest index set wins.
pub fn select_fundamental(rule: &QuadratureRule, s: usize) -> Result<StagePartition, TableauError> {
    check_order(rule.k, s)?;
    let k = rule.k;
    let tableau = tableau_from_rule(rule, s)?;
    let fundamental_idx = choose_uniform_subset(&rule.nodes, s);
    let silent_idx: Vec<usize> = (0..k).filter(|i| !fundamental_idx.contains(i)).collect();
    let fundamental_nodes: Vec<f64> = fundamental_idx.iter().map(|&i| rule.nodes[i]).collect();
    let silent_nodes: Vec<f64> = silent_idx.iter().map(|&i| rule.nodes[i]).collect();

    let mut interp_nodes = Vec::with_capacity(s + 1);
    interp_nodes.push(0.0);
    interp_nodes.extend_from_slice(&fundamental_nodes);
    let ns = silent_idx.len();
    let mut a0 = Vector::zeros(ns);
    let mut a_map = Matrix::zeros(ns, s);
    for (r, &c) in silent_nodes.iter().enumerate() {
        let w = lagrange_weights(&interp_nodes, c);
        a0[r] = w[0];
        for j in 0..s {
            a_map[(r, j)] = w[j + 1];
        }
    }

    let sub = |rows: &[usize], cols: &[usize]| {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| tableau.a[(rows[i], cols[j])])
    };
    let b1 = sub(&fundamental_idx, &fundamental_idx);
    let b2 = sub(&fundamental_idx, &silent_idx);
    let beta1 = Vector::from_iterator(s, fundamental_idx.iter().map(|&i| rule.weights[i]));
    let beta2 = Vector::from_iterator(ns, silent_idx.iter().map(|&i| rule.weights[i]));

    Ok(StagePartition {
        k,
        s,
        fundamental_idx,
        silent_idx,
        fundamental_nodes,
        silent_nodes,
        a0,
        a_map,
        b1,
        b2,
        beta1,
        beta2,
        tableau,
    })
}

/// Bottleneck matching of sorted `nodes` to the uniform targets.
fn choose_uniform_subset(nodes: &[f64], s: usize) -> Vec<usize> {
    let k = nodes.len();
    if s == k {
        return (0..k).collect();
    }
    let target = |i: usize| (2.0 * i as f64 + 1.0) / (2.0 * s as f64);
    // Leftmost greedy assignment is feasible iff any monotone assignment is.
    let greedy = |thr: f64| -> Option<Vec<usize>> {
        let mut chosen = Vec::with_capacity(s);
        let mut next = 0;
        for i in 0..s {
            let remaining_targets = s - i;
            let mut found = None;
            for (j, &node) in nodes.iter().enumerate().take(k - remaining_targets + 1).skip(next) {
                if (node - target(i)).abs() <= thr {
                    found = Some(j);
                    break;
                }
            }
            let j = found?;
            chosen.push(j);
            next = j + 1;
        }
        Some(chosen)
    };
    let mut candidates: Vec<f64> = (0..s)
        .flat_map(|i| nodes.iter().map(move |&c| (c - target(i)).abs()))
        .collect();
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();
    // Smallest feasible threshold.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if greedy(candidates[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    greedy(candidates[lo]).expect("largest deviation is always feasible")
}

/// Convenience: the Gauss–Legendre rule behind a partition.
pub fn rule_of(part: &StagePartition) -> QuadratureRule {
    QuadratureRule {
        k: part.k,
        nodes: part.tableau.c.iter().copied().collect(),
        weights: part.tableau.b.iter().copied().collect(),
    }
}
