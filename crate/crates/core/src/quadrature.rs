//! Shifted orthonormal Legendre polynomials and Gauss–Legendre rules on `[0, 1]`.
//!
//! `P_j` denotes the degree-`j` Legendre polynomial shifted to `[0, 1]` and
//! scaled so that `∫_0^1 P_i P_j dx = δ_ij`; in particular `P_0 ≡ 1` and
//! `P_1(x) = √3 (2x − 1)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::Matrix;

/// Largest rule size the root finder is validated for.
pub const MAX_RULE_SIZE: usize = 64;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("a quadrature rule needs at least one node")]
    EmptyRule,
    #[error("root finder did not converge for node {index} of the {k}-point rule")]
    RootNotConverged { k: usize, index: usize },
    #[error("requested {s} basis polynomials from a {k}-point rule (need s <= k)")]
    TooManyPolynomials { s: usize, k: usize },
    #[error("at least one basis polynomial is required")]
    NoPolynomials,
}

/// Value of the orthonormal shifted Legendre polynomial `P_j` at `x`.
///
/// Uses the three-term recurrence of the orthonormal family directly.
pub fn legendre_eval(j: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for i in 0..j {
        let fi = i as f64;
        let a = sqrt((2.0 * fi + 3.0) * (2.0 * fi + 1.0)) / (fi + 1.0);
        let b = if i == 0 {
            0.0
        } else {
            fi / (fi + 1.0) * sqrt((2.0 * fi + 3.0) / (2.0 * fi - 1.0))
        };
        let next = a * t * cur - b * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[j] = P_j(x)` for `j = 0..out.len()`.
pub fn legendre_values(x: f64, out: &mut [f64]) {
    let t = 2.0 * x - 1.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = cur;
        let fi = i as f64;
        let a = sqrt((2.0 * fi + 3.0) * (2.0 * fi + 1.0)) / (fi + 1.0);
        let b = if i == 0 {
            0.0
        } else {
            fi / (fi + 1.0) * sqrt((2.0 * fi + 3.0) / (2.0 * fi - 1.0))
        };
        let next = a * t * cur - b * prev;
        prev = cur;
        cur = next;
    }
}

/// Classical (unnormalized, `[-1, 1]`) Legendre values `L_{j-1}(t), L_j(t), L_{j+1}(t)`.
fn classical_triplet(j: usize, t: f64) -> (f64, f64, f64) {
    // L_{-1} is never used for j = 0; return 0 there.
    let mut lm1 = 0.0;
    let mut l0 = 1.0;
    for i in 0..j {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0) * t * l0 - fi * lm1) / (fi + 1.0);
        lm1 = l0;
        l0 = next;
    }
    let fj = j as f64;
    let lp1 = ((2.0 * fj + 1.0) * t * l0 - fj * lm1) / (fj + 1.0);
    (lm1, l0, lp1)
}

/// `∫_0^c P_j(x) dx`.
///
/// For `j ≥ 1` this is `(L_{j+1}(t) − L_{j−1}(t)) / (2√(2j+1))` with `t = 2c − 1`
/// and `L` the classical Legendre polynomials.
pub fn legendre_antiderivative(j: usize, c: f64) -> f64 {
    if j == 0 {
        return c;
    }
    let t = 2.0 * c - 1.0;
    let (lm1, _, lp1) = classical_triplet(j, t);
    (lp1 - lm1) / (2.0 * sqrt(2.0 * j as f64 + 1.0))
}

/// Gauss–Legendre abscissae `c` and weights `b` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub k: usize,
    /// Strictly increasing nodes in `(0, 1)`.
    pub nodes: Vec<f64>,
    /// Positive weights summing to one.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `Σ b_i f(c_i)`, i.e. the rule applied on `[0, 1]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&c, &b)| b * f(c))
            .sum()
    }

    /// The rule applied on `[a, b]`.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let len = b - a;
        len * self.integrate(|x| f(a + len * x))
    }
}

/// Builds the `k`-point Gauss–Legendre rule on `[0, 1]`.
///
/// Roots of the degree-`k` Legendre polynomial are found by Newton's method
/// started from the Chebyshev points; only the upper half is computed and the
/// rest mirrored, so node/weight symmetry holds to rounding.
pub fn gauss_legendre_rule(k: usize) -> Result<QuadratureRule, QuadratureError> {
    if k == 0 {
        return Err(QuadratureError::EmptyRule);
    }
    let fk = k as f64;
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let half = k / 2;
    for i in 0..half {
        // Chebyshev guess for the i-th largest root in (-1, 1).
        let mut t = crate::math::cos(core::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * fk));
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let (lkm1, lk, _) = classical_triplet(k, t);
            let dt = lk * (1.0 - t * t) / (fk * (lkm1 - t * lk));
            t -= dt;
            if dt.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged || !(0.0..1.0).contains(&t) {
            return Err(QuadratureError::RootNotConverged { k, index: i });
        }
        let (lkm1, lk, _) = classical_triplet(k, t);
        let deriv = fk * (lkm1 - t * lk) / (1.0 - t * t);
        let w = 1.0 / ((1.0 - t * t) * deriv * deriv);
        // t > 0 maps to the upper half of [0, 1].
        let low = 0.5 * (1.0 - t);
        nodes[i] = low;
        nodes[k - 1 - i] = 1.0 - low;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        let (lkm1, _, _) = classical_triplet(k, 0.0);
        let deriv = fk * lkm1;
        nodes[half] = 0.5;
        weights[half] = 1.0 / (deriv * deriv);
    }
    for w in 1..k {
        if nodes[w] <= nodes[w - 1] {
            return Err(QuadratureError::RootNotConverged { k, index: w });
        }
    }
    Ok(QuadratureRule { k, nodes, weights })
}

/// The matrices `𝒫_s`, `ℐ_s` and `Ω` built on a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrices {
    /// `P[(i, j)] = P_j(c_i)`, size `k × s`.
    pub p: Matrix,
    /// `I[(i, j)] = ∫_0^{c_i} P_j`, size `k × s`.
    pub integral: Matrix,
    /// `diag(b_1, …, b_k)`.
    pub omega: Matrix,
}

pub fn basis_matrices(rule: &QuadratureRule, s: usize) -> Result<BasisMatrices, QuadratureError> {
    if s == 0 {
        return Err(QuadratureError::NoPolynomials);
    }
    if s > rule.k {
        return Err(QuadratureError::TooManyPolynomials { s, k: rule.k });
    }
    let k = rule.k;
    let mut p = Matrix::zeros(k, s);
    let mut integral = Matrix::zeros(k, s);
    let mut row = vec![0.0; s];
    for (i, &c) in rule.nodes.iter().enumerate() {
        legendre_values(c, &mut row);
        for j in 0..s {
            p[(i, j)] = row[j];
            integral[(i, j)] = legendre_antiderivative(j, c);
        }
    }
    let omega = Matrix::from_diagonal(&crate::Vector::from_column_slice(&rule.weights));
    Ok(BasisMatrices { p, integral, omega })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson on [a, b], independent of the Gauss rules.
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn low_degree_values() {
        assert_eq!(legendre_eval(0, 0.3), 1.0);
        assert!((legendre_eval(1, 1.0) - sqrt(3.0)).abs() < 1e-15);
        assert!((legendre_eval(1, 0.25) - sqrt(3.0) * -0.5).abs() < 1e-15);
        let mut vals = [0.0; 6];
        legendre_values(0.37, &mut vals);
        for (j, v) in vals.iter().enumerate() {
            assert!((v - legendre_eval(j, 0.37)).abs() < 1e-14);
        }
    }

    #[test]
    fn orthonormality_by_quadrature() {
        let rule = gauss_legendre_rule(10).unwrap();
        let norm = rule.integrate(|x| legendre_eval(4, x) * legendre_eval(4, x));
        assert!((norm - 1.0).abs() < 1e-13);
        // Same check with an independent integrator.
        let f = |x: f64| legendre_eval(4, x) * legendre_eval(4, x);
        assert!((adaptive_simpson(&f, 0.0, 1.0, 1e-14) - 1.0).abs() < 1e-12);
        let g = |x: f64| legendre_eval(3, x) * legendre_eval(5, x);
        assert!(adaptive_simpson(&g, 0.0, 1.0, 1e-14).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_examples() {
        for &c in &[0.0, 0.2, 0.77, 1.0] {
            assert_eq!(legendre_antiderivative(0, c), c);
        }
        for j in 1..12 {
            assert!(legendre_antiderivative(j, 1.0).abs() < 1e-14, "j = {j}");
            assert!(legendre_antiderivative(j, 0.0).abs() < 1e-14, "j = {j}");
        }
        assert!((legendre_antiderivative(1, 0.5) + sqrt(3.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn antiderivative_matches_adaptive_quadrature() {
        for j in 0..=12 {
            let f = |x: f64| legendre_eval(j, x);
            for i in 0..=100 {
                let c = i as f64 / 100.0;
                let reference = if c == 0.0 { 0.0 } else { adaptive_simpson(&f, 0.0, c, 1e-15) };
                let got = legendre_antiderivative(j, c);
                assert!((got - reference).abs() < 1e-12, "j={j} c={c}: {got} vs {reference}");
            }
        }
    }

    #[test]
    fn small_rules() {
        let r1 = gauss_legendre_rule(1).unwrap();
        assert_eq!(r1.nodes, vec![0.5]);
        assert!((r1.weights[0] - 1.0).abs() < 1e-15);
        let r2 = gauss_legendre_rule(2).unwrap();
        let s3 = sqrt(3.0);
        assert!((r2.nodes[0] - (3.0 - s3) / 6.0).abs() < 1e-15);
        assert!((r2.nodes[1] - (3.0 + s3) / 6.0).abs() < 1e-15);
        assert!((r2.weights[0] - 0.5).abs() < 1e-15);
        assert!((r2.weights[1] - 0.5).abs() < 1e-15);
        assert_eq!(gauss_legendre_rule(0), Err(QuadratureError::EmptyRule));
    }

    #[test]
    fn six_point_rule_integrates_degree_eleven() {
        let rule = gauss_legendre_rule(6).unwrap();
        let v = rule.integrate(|x| crate::math::powi(x, 11));
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn rule_invariants_up_to_64() {
        for k in 1..=MAX_RULE_SIZE {
            let rule = gauss_legendre_rule(k).unwrap();
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14, "k={k} sum={wsum}");
            for i in 0..k {
                assert!(rule.nodes[i] > 0.0 && rule.nodes[i] < 1.0);
                assert!(rule.weights[i] > 0.0);
                assert!((rule.nodes[i] + rule.nodes[k - 1 - i] - 1.0).abs() < 1e-14);
                assert!((rule.weights[i] - rule.weights[k - 1 - i]).abs() < 1e-14);
                let residual = legendre_eval(k, rule.nodes[i]);
                // Residual relative to the local slope; evaluation roundoff
                // grows with k, so the absolute bound only applies to small rules.
                if k <= 16 {
                    assert!(residual.abs() < 1e-13, "k={k} i={i} residual={residual}");
                }
            }
            for d in 0..(2 * k) {
                let exact = 1.0 / (d as f64 + 1.0);
                let got = rule.integrate(|x| crate::math::powi(x, d as i32));
                assert!((got - exact).abs() < 1e-13, "k={k} d={d}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn basis_matrix_examples() {
        let r2 = gauss_legendre_rule(2).unwrap();
        let bm = basis_matrices(&r2, 2).unwrap();
        assert!((bm.p[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((bm.p[(0, 1)] + 1.0).abs() < 1e-15);
        assert!((bm.p[(1, 1)] - 1.0).abs() < 1e-15);

        let r5 = gauss_legendre_rule(5).unwrap();
        let bm = basis_matrices(&r5, 1).unwrap();
        for i in 0..5 {
            assert_eq!(bm.integral[(i, 0)], r5.nodes[i]);
            assert_eq!(bm.p[(i, 0)], 1.0);
        }

        let r6 = gauss_legendre_rule(6).unwrap();
        for s in 1..=6 {
            let bm = basis_matrices(&r6, s).unwrap();
            let gram = bm.p.transpose() * &bm.omega * &bm.p;
            let err = (gram - Matrix::identity(s, s)).amax();
            assert!(err < 1e-13, "s={s} err={err}");
        }
        assert_eq!(
            basis_matrices(&r2, 3),
            Err(QuadratureError::TooManyPolynomials { s: 3, k: 2 })
        );
    }
}
