//! Block elimination for staircase matrices with a dense border.
//!
//! The matrix is given as a sequence of row blocks. Block `i` touches interior
//! columns `[start_i, start_i + width_i)` and every border column. Starts and
//! ends are nondecreasing. When block `i` is processed, the columns up to the
//! next block's start are eliminated using the block rows plus the rows left
//! over from earlier blocks; the leftovers move on. After the last block only
//! border columns remain, which are solved densely (LU when square, least
//! squares otherwise).
//!
//! Storage stays proportional to the block sizes: nothing depends on `n²`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Matrix, Vector};

use super::LinalgError;

/// Pivots smaller than this times the largest matrix entry count as singular.
const SINGULAR_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Gaussian elimination with row partial pivoting.
    Lu,
    /// Householder reflections; yields the least-squares solution.
    Qr,
}

#[derive(Debug, Clone)]
pub(crate) struct RowBlock {
    pub start: usize,
    /// `rows × width` interior part.
    pub a: Matrix,
    /// `rows × p` border part.
    pub border: Matrix,
    pub rhs: Vector,
}

impl RowBlock {
    pub fn zeros(start: usize, rows: usize, width: usize, p: usize) -> Self {
        Self { start, a: Matrix::zeros(rows, width), border: Matrix::zeros(rows, p), rhs: Vector::zeros(rows) }
    }
}

struct Eliminated {
    start: usize,
    /// Upper-triangular in its first `piv` columns.
    u: Matrix,
    border: Matrix,
    rhs: Vector,
}

pub(crate) struct StaircaseSolution {
    pub interior: Vector,
    pub border: Vector,
    pub residual_norm: f64,
    pub cond_estimate: f64,
}

struct Work {
    a: Matrix,
    border: Matrix,
    rhs: Vector,
}

impl Work {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            self.a.swap_rows(i, j);
            self.border.swap_rows(i, j);
            self.rhs.swap_rows(i, j);
        }
    }
}

/// Eliminates the first `piv` columns in place; returns the pivot magnitudes.
fn eliminate(w: &mut Work, piv: usize, mode: Mode) -> Vec<f64> {
    let rows = w.a.nrows();
    let cols = w.a.ncols();
    let p = w.border.ncols();
    let mut pivots = Vec::with_capacity(piv);
    for j in 0..piv {
        match mode {
            Mode::Lu => {
                let mut best = j;
                for r in j + 1..rows {
                    if w.a[(r, j)].abs() > w.a[(best, j)].abs() {
                        best = r;
                    }
                }
                w.swap_rows(j, best);
                let d = w.a[(j, j)];
                pivots.push(d.abs());
                if d == 0.0 {
                    continue;
                }
                for r in j + 1..rows {
                    let l = w.a[(r, j)] / d;
                    if l == 0.0 {
                        continue;
                    }
                    w.a[(r, j)] = 0.0;
                    for c in j + 1..cols {
                        w.a[(r, c)] -= l * w.a[(j, c)];
                    }
                    for c in 0..p {
                        w.border[(r, c)] -= l * w.border[(j, c)];
                    }
                    w.rhs[r] -= l * w.rhs[j];
                }
            }
            Mode::Qr => {
                let mut sigma = 0.0;
                for r in j..rows {
                    sigma += w.a[(r, j)] * w.a[(r, j)];
                }
                let norm = crate::math::sqrt(sigma);
                if norm == 0.0 {
                    pivots.push(0.0);
                    continue;
                }
                let alpha = if w.a[(j, j)] > 0.0 { -norm } else { norm };
                let mut v: Vec<f64> = (j..rows).map(|r| w.a[(r, j)]).collect();
                v[0] -= alpha;
                let vnorm2: f64 = v.iter().map(|x| x * x).sum();
                pivots.push(norm);
                w.a[(j, j)] = alpha;
                for r in j + 1..rows {
                    w.a[(r, j)] = 0.0;
                }
                if vnorm2 == 0.0 {
                    continue;
                }
                let apply = |get: &dyn Fn(usize) -> f64| -> f64 {
                    let mut dot = 0.0;
                    for (t, vt) in v.iter().enumerate() {
                        dot += vt * get(j + t);
                    }
                    2.0 * dot / vnorm2
                };
                for c in j + 1..cols {
                    let f = apply(&|r| w.a[(r, c)]);
                    for (t, vt) in v.iter().enumerate() {
                        w.a[(j + t, c)] -= f * vt;
                    }
                }
                for c in 0..p {
                    let f = apply(&|r| w.border[(r, c)]);
                    for (t, vt) in v.iter().enumerate() {
                        w.border[(j + t, c)] -= f * vt;
                    }
                }
                let f = apply(&|r| w.rhs[r]);
                for (t, vt) in v.iter().enumerate() {
                    w.rhs[j + t] -= f * vt;
                }
            }
        }
    }
    pivots
}

/// Solves (or least-squares solves, in QR mode) the staircase system.
pub(crate) fn solve(
    n_interior: usize,
    p: usize,
    blocks: &[RowBlock],
    mode: Mode,
) -> Result<StaircaseSolution, LinalgError> {
    let total_rows: usize = blocks.iter().map(|b| b.a.nrows()).sum();
    let n_unknowns = n_interior + p;
    if total_rows < n_unknowns || (mode == Mode::Lu && total_rows != n_unknowns) {
        return Err(LinalgError::Shape { rows: total_rows, cols: n_unknowns });
    }

    // 1-norm by column sums, and the largest entry for the singularity threshold.
    let mut colsum = vec![0.0; n_unknowns];
    let mut amax = 0.0_f64;
    for b in blocks {
        for c in 0..b.a.ncols() {
            for r in 0..b.a.nrows() {
                colsum[b.start + c] += b.a[(r, c)].abs();
                amax = amax.max(b.a[(r, c)].abs());
            }
        }
        for c in 0..p {
            for r in 0..b.border.nrows() {
                colsum[n_interior + c] += b.border[(r, c)].abs();
                amax = amax.max(b.border[(r, c)].abs());
            }
        }
    }
    let norm1 = colsum.iter().fold(0.0_f64, |a, &b| a.max(b));
    let threshold = SINGULAR_RTOL * amax.max(f64::MIN_POSITIVE);
    let mut min_pivot = f64::INFINITY;

    let mut done: Vec<Eliminated> = Vec::with_capacity(blocks.len());
    let mut cur = 0;
    let mut carry = Work { a: Matrix::zeros(0, 0), border: Matrix::zeros(0, p), rhs: Vector::zeros(0) };
    let mut carry_end = 0;

    for (bi, b) in blocks.iter().enumerate() {
        if b.start != cur {
            return Err(LinalgError::Layout { block: bi });
        }
        let end = (b.start + b.a.ncols()).max(carry_end);
        let ncols = end - cur;
        let crow = carry.a.nrows();
        let rows = crow + b.a.nrows();
        let next = blocks.get(bi + 1).map_or(n_interior, |nb| nb.start);
        if next < cur || next > end {
            return Err(LinalgError::Layout { block: bi });
        }
        let piv = next - cur;
        if rows < piv {
            return Err(LinalgError::Layout { block: bi });
        }

        let mut w = Work { a: Matrix::zeros(rows, ncols), border: Matrix::zeros(rows, p), rhs: Vector::zeros(rows) };
        w.a.view_mut((0, 0), (crow, carry.a.ncols())).copy_from(&carry.a);
        w.border.rows_mut(0, crow).copy_from(&carry.border);
        w.rhs.rows_mut(0, crow).copy_from(&carry.rhs);
        w.a.view_mut((crow, b.start - cur), (b.a.nrows(), b.a.ncols())).copy_from(&b.a);
        w.border.rows_mut(crow, b.a.nrows()).copy_from(&b.border);
        w.rhs.rows_mut(crow, b.a.nrows()).copy_from(&b.rhs);

        let pivots = eliminate(&mut w, piv, mode);
        for (j, &d) in pivots.iter().enumerate() {
            if d <= threshold {
                return Err(match mode {
                    Mode::Lu => LinalgError::SingularPivot { block: bi, column: cur + j, pivot: d },
                    Mode::Qr => LinalgError::RankDeficient { block: Some(bi), column: cur + j, diagonal: d },
                });
            }
            min_pivot = min_pivot.min(d);
        }

        let left = rows - piv;
        carry = Work {
            a: w.a.view((piv, piv), (left, ncols - piv)).into_owned(),
            border: w.border.rows(piv, left).into_owned(),
            rhs: w.rhs.rows(piv, left).into_owned(),
        };
        done.push(Eliminated {
            start: cur,
            u: w.a.rows(0, piv).into_owned(),
            border: w.border.rows(0, piv).into_owned(),
            rhs: w.rhs.rows(0, piv).into_owned(),
        });
        cur = next;
        carry_end = end;
    }
    if cur != n_interior {
        return Err(LinalgError::Layout { block: blocks.len() });
    }

    // Border system on the leftover rows.
    let left = carry.a.nrows();
    let mut w = Work { a: carry.border, border: Matrix::zeros(left, 0), rhs: carry.rhs };
    let pivots = eliminate(&mut w, p, mode);
    for (j, &d) in pivots.iter().enumerate() {
        if d <= threshold {
            return Err(match mode {
                Mode::Lu => LinalgError::SingularPivot { block: blocks.len(), column: n_interior + j, pivot: d },
                Mode::Qr => LinalgError::RankDeficient { block: None, column: n_interior + j, diagonal: d },
            });
        }
        min_pivot = min_pivot.min(d);
    }
    let residual_norm = w.rhs.rows(p, left - p).norm();
    let mut xb = Vector::zeros(p);
    for j in (0..p).rev() {
        let mut acc = w.rhs[j];
        for c in j + 1..p {
            acc -= w.a[(j, c)] * xb[c];
        }
        xb[j] = acc / w.a[(j, j)];
    }

    let mut x = Vector::zeros(n_interior);
    for e in done.iter().rev() {
        let piv = e.rhs.len();
        let width = e.u.ncols();
        for j in (0..piv).rev() {
            let mut acc = e.rhs[j];
            for c in j + 1..width {
                acc -= e.u[(j, c)] * x[e.start + c];
            }
            for c in 0..p {
                acc -= e.border[(j, c)] * xb[c];
            }
            x[e.start + j] = acc / e.u[(j, j)];
        }
    }

    let cond_estimate = if n_unknowns == 0 { 1.0 } else { norm1 / min_pivot };
    Ok(StaircaseSolution { interior: x, border: xb, residual_norm, cond_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(n_int: usize, p: usize, blocks: &[RowBlock]) -> (Matrix, Vector) {
        let rows: usize = blocks.iter().map(|b| b.a.nrows()).sum();
        let mut a = Matrix::zeros(rows, n_int + p);
        let mut rhs = Vector::zeros(rows);
        let mut r0 = 0;
        for b in blocks {
            let r = b.a.nrows();
            a.view_mut((r0, b.start), (r, b.a.ncols())).copy_from(&b.a);
            a.view_mut((r0, n_int), (r, p)).copy_from(&b.border);
            rhs.rows_mut(r0, r).copy_from(&b.rhs);
            r0 += r;
        }
        (a, rhs)
    }

    fn filled(start: usize, rows: usize, width: usize, p: usize, seed: &mut u64) -> RowBlock {
        let mut next = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut b = RowBlock::zeros(start, rows, width, p);
        b.a.iter_mut().for_each(|v| *v = next());
        b.border.iter_mut().for_each(|v| *v = next());
        b.rhs.iter_mut().for_each(|v| *v = next());
        b
    }

    #[test]
    fn lu_and_qr_match_dense_on_a_square_staircase() {
        let mut seed = 1;
        let blocks = alloc::vec![
            filled(0, 2, 2, 1, &mut seed),
            filled(0, 2, 4, 1, &mut seed),
            filled(2, 2, 4, 1, &mut seed),
            filled(4, 1, 2, 1, &mut seed),
        ];
        let (a, rhs) = dense(6, 1, &blocks);
        let want = a.clone().lu().solve(&rhs).unwrap();
        for mode in [Mode::Lu, Mode::Qr] {
            let sol = solve(6, 1, &blocks, mode).unwrap();
            let got = Vector::from_iterator(7, sol.interior.iter().chain(sol.border.iter()).copied());
            assert!((got - &want).amax() < 1e-12 * want.amax());
            assert!(sol.residual_norm < 1e-12);
            assert!(sol.cond_estimate >= 1.0);
        }
    }

    #[test]
    fn qr_finds_least_squares_minimizer() {
        let mut seed = 9;
        let blocks = alloc::vec![filled(0, 4, 3, 2, &mut seed), filled(3, 2, 0, 2, &mut seed)];
        let (a, rhs) = dense(3, 2, &blocks);
        let sol = solve(3, 2, &blocks, Mode::Qr).unwrap();
        let x = Vector::from_iterator(5, sol.interior.iter().chain(sol.border.iter()).copied());
        let r = &a * &x - &rhs;
        assert!((a.transpose() * &r).amax() < 1e-12);
        assert!((r.norm() - sol.residual_norm).abs() < 1e-12);
    }

    #[test]
    fn singular_and_malformed_inputs() {
        let mut b = RowBlock::zeros(0, 2, 2, 0);
        b.a[(0, 0)] = 1.0;
        b.a[(1, 0)] = 1.0;
        assert!(matches!(solve(2, 0, &[b.clone()], Mode::Lu), Err(LinalgError::SingularPivot { column: 1, .. })));
        assert!(matches!(solve(2, 0, &[b], Mode::Qr), Err(LinalgError::RankDeficient { column: 1, .. })));
        let b = RowBlock::zeros(1, 2, 2, 0);
        assert!(matches!(solve(3, 0, &[b], Mode::Lu), Err(LinalgError::Shape { .. })));
    }
}
