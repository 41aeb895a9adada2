//! Structured linear solvers for the global Newton systems.
//!
//! Every interval `i = 1..n` contributes two block rows acting on
//! `(δ_{i−1}, Δ_{i−1}, δ_i)`. The first one is the stage row and the second
//! the step row:
//!
//! ```text
//! V_i δ_{i−1} + K_i Δ_{i−1}              [+ w_i δ_h] = stage_rhs_i
//! L_i δ_{i−1} + U_iᵀ Δ_{i−1} + δ_i       [+ v_i δ_h] = step_rhs_i
//! ```
//!
//! Boundary rows close the system:
//!
//! * separated: `B_a δ_0 = ·` first and `B_b δ_n = ·` last; almost block
//!   diagonal, solved by [`solve_abd`];
//! * coupled: `B_a δ_0 + B_b δ_n = ·`; bordered, solved by [`solve_babd`];
//! * periodic: `δ_n ≡ δ_0`, anchor rows `B_a δ_0 = ·` and optionally an energy
//!   row `∇H(y_0)ᵀ δ_0 = γ` with the stepsize update `δ_h` as an extra unknown.
//!   Overdetermined; solved by [`lstsq_bordered`].

mod staircase;

use alloc::vec::Vec;

use crate::{Matrix, Vector};

use staircase::{Mode, RowBlock};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    /// `block` counts mesh intervals from 1; 0 and `n + 1` are boundary rows.
    #[error("singular pivot {pivot:e} in block {block} at column {column}")]
    SingularPivot { block: usize, column: usize, pivot: f64 },
    #[error("rank deficient: diagonal factor {diagonal:e} at column {column}")]
    RankDeficient { block: Option<usize>, column: usize, diagonal: f64 },
    #[error("structurally singular system: block {block} leaves columns uncovered")]
    Layout { block: usize },
    #[error("system has {rows} rows for {cols} unknowns")]
    Shape { rows: usize, cols: usize },
    #[error("block dimensions are inconsistent: {0}")]
    Dimension(&'static str),
    #[error("wrong solver for this boundary class")]
    WrongBoundary,
}

/// Newton blocks and right-hand sides of one mesh interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBlocks {
    /// `2ms × 2m`, stage rows on `δ_{i−1}`.
    pub v: Matrix,
    /// `2ms × 2ms`, stage rows on `Δ_{i−1}`.
    pub k: Matrix,
    /// `2m × 2m`, step rows on `δ_{i−1}`.
    pub l: Matrix,
    /// `2m × 2ms`, step rows on `Δ_{i−1}`.
    pub ut: Matrix,
    pub stage_rhs: Vector,
    pub step_rhs: Vector,
    /// Stepsize column entries `(w_i, v_i)` when `h` is unknown.
    pub h_column: Option<(Vector, Vector)>,
}

impl IntervalBlocks {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn stage_dim(&self) -> usize {
        self.k.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryRows {
    /// `B_a δ_0 = rhs_a` (`r × 2m`) and `B_b δ_n = rhs_b` (`(2m − r) × 2m`).
    Separated { ba: Matrix, rhs_a: Vector, bb: Matrix, rhs_b: Vector },
    /// `B_a δ_0 + B_b δ_n = rhs`, both `2m × 2m`.
    Coupled { ba: Matrix, bb: Matrix, rhs: Vector },
    /// `δ_n ≡ δ_0`; anchors `B_a δ_0 = anchor_rhs`; optional energy row `(∇H(y_0)ᵀ, γ)`.
    Periodic { anchor: Matrix, anchor_rhs: Vector, energy: Option<(Vector, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub intervals: Vec<IntervalBlocks>,
    pub boundary: BoundaryRows,
}

/// Solution of a block system.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    /// `δ_0..δ_n`; for periodic systems `δ_n` repeats `δ_0`.
    pub nodes: Vec<Vector>,
    /// `Δ_0..Δ_{n−1}`.
    pub stages: Vec<Vector>,
    pub dh: Option<f64>,
    /// Euclidean norm of the least-squares residual; roundoff for square systems.
    pub residual_norm: f64,
    /// `‖A‖₁ / min |pivot|` over the factorization.
    pub cond_estimate: f64,
}

impl BlockSolution {
    /// Unknowns in the order `δ_0, Δ_0, δ_1, …` used by [`assemble_dense`].
    pub fn to_flat(&self, periodic: bool) -> Vector {
        let n = self.stages.len();
        let mut out = Vec::new();
        for i in 0..n {
            out.extend(self.nodes[i].iter());
            out.extend(self.stages[i].iter());
        }
        if !periodic {
            out.extend(self.nodes[n].iter());
        }
        if let Some(dh) = self.dh {
            out.push(dh);
        }
        Vector::from_vec(out)
    }

    fn from_flat(x: &Vector, n: usize, d: usize, ds: usize, periodic: bool, has_h: bool) -> Self {
        let mut nodes = Vec::with_capacity(n + 1);
        let mut stages = Vec::with_capacity(n);
        let stride = d + ds;
        for i in 0..n {
            nodes.push(x.rows(i * stride, d).into_owned());
            stages.push(x.rows(i * stride + d, ds).into_owned());
        }
        if periodic {
            nodes.push(nodes[0].clone());
        } else {
            nodes.push(x.rows(n * stride, d).into_owned());
        }
        let dh = has_h.then(|| x[x.len() - 1]);
        Self { nodes, stages, dh, residual_norm: 0.0, cond_estimate: 0.0 }
    }
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        self.intervals.len()
    }

    /// `(2m, 2ms)`.
    pub fn dims(&self) -> (usize, usize) {
        let first = &self.intervals[0];
        (first.dim(), first.stage_dim())
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.boundary, BoundaryRows::Periodic { .. })
    }

    pub fn has_h_column(&self) -> bool {
        self.intervals.first().is_some_and(|b| b.h_column.is_some())
    }

    fn validate(&self) -> Result<(), LinalgError> {
        if self.intervals.is_empty() {
            return Err(LinalgError::Dimension("no intervals"));
        }
        let (d, ds) = self.dims();
        let has_h = self.has_h_column();
        for b in &self.intervals {
            let ok = b.v.shape() == (ds, d)
                && b.k.shape() == (ds, ds)
                && b.l.shape() == (d, d)
                && b.ut.shape() == (d, ds)
                && b.stage_rhs.len() == ds
                && b.step_rhs.len() == d
                && b.h_column.as_ref().map_or(!has_h, |(w, v)| has_h && w.len() == ds && v.len() == d);
            if !ok {
                return Err(LinalgError::Dimension("interval blocks"));
            }
        }
        let ok = match &self.boundary {
            BoundaryRows::Separated { ba, rhs_a, bb, rhs_b } => {
                ba.ncols() == d
                    && bb.ncols() == d
                    && ba.nrows() + bb.nrows() == d
                    && rhs_a.len() == ba.nrows()
                    && rhs_b.len() == bb.nrows()
                    && !has_h
            }
            BoundaryRows::Coupled { ba, bb, rhs } => {
                ba.shape() == (d, d) && bb.shape() == (d, d) && rhs.len() == d && !has_h
            }
            BoundaryRows::Periodic { anchor, anchor_rhs, energy } => {
                anchor.ncols() == d
                    && anchor_rhs.len() == anchor.nrows()
                    && energy.as_ref().map_or(!has_h, |(g, _)| g.len() == d && has_h)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(LinalgError::Dimension("boundary rows"))
        }
    }

    /// Number of rows and unknowns of the assembled matrix.
    pub fn shape(&self) -> (usize, usize) {
        let n = self.n();
        let (d, ds) = self.dims();
        let interval_rows = n * (d + ds);
        match &self.boundary {
            BoundaryRows::Separated { .. } | BoundaryRows::Coupled { .. } => (interval_rows + d, n * (d + ds) + d),
            BoundaryRows::Periodic { anchor, energy, .. } => {
                let e = usize::from(energy.is_some());
                (interval_rows + anchor.nrows() + e, n * (d + ds) + e)
            }
        }
    }
}

/// Dense matrix and right-hand side, rows ordered as printed: separated
/// boundary rows first and last, coupled and periodic boundary rows on top
/// (energy row before anchors).
pub fn assemble_dense(sys: &BlockSystem) -> Result<(Matrix, Vector), LinalgError> {
    sys.validate()?;
    let n = sys.n();
    let (d, ds) = sys.dims();
    let stride = d + ds;
    let (rows, cols) = sys.shape();
    let periodic = sys.is_periodic();
    let mut a = Matrix::zeros(rows, cols);
    let mut rhs = Vector::zeros(rows);
    let node_col = |i: usize| if periodic && i == n { 0 } else { i * stride };
    let h_col = cols - 1;

    let mut r = 0;
    match &sys.boundary {
        BoundaryRows::Separated { ba, rhs_a, .. } => {
            a.view_mut((0, 0), ba.shape()).copy_from(ba);
            rhs.rows_mut(0, ba.nrows()).copy_from(rhs_a);
            r = ba.nrows();
        }
        BoundaryRows::Coupled { ba, bb, rhs: b0 } => {
            a.view_mut((0, 0), (d, d)).copy_from(ba);
            a.view_mut((0, n * stride), (d, d)).copy_from(bb);
            rhs.rows_mut(0, d).copy_from(b0);
            r = d;
        }
        BoundaryRows::Periodic { anchor, anchor_rhs, energy } => {
            if let Some((g, gamma)) = energy {
                a.view_mut((0, 0), (1, d)).copy_from(&g.transpose());
                rhs[0] = *gamma;
                r = 1;
            }
            a.view_mut((r, 0), anchor.shape()).copy_from(anchor);
            rhs.rows_mut(r, anchor.nrows()).copy_from(anchor_rhs);
            r += anchor.nrows();
        }
    }
    for (j, b) in sys.intervals.iter().enumerate() {
        let c0 = j * stride;
        a.view_mut((r, c0), (ds, d)).copy_from(&b.v);
        a.view_mut((r, c0 + d), (ds, ds)).copy_from(&b.k);
        rhs.rows_mut(r, ds).copy_from(&b.stage_rhs);
        if let Some((w, _)) = &b.h_column {
            a.view_mut((r, h_col), (ds, 1)).copy_from(w);
        }
        r += ds;
        a.view_mut((r, c0), (d, d)).copy_from(&b.l);
        a.view_mut((r, c0 + d), (d, ds)).copy_from(&b.ut);
        let cn = node_col(j + 1);
        for t in 0..d {
            a[(r + t, cn + t)] += 1.0;
        }
        rhs.rows_mut(r, d).copy_from(&b.step_rhs);
        if let Some((_, v)) = &b.h_column {
            a.view_mut((r, h_col), (d, 1)).copy_from(v);
        }
        r += d;
    }
    if let BoundaryRows::Separated { bb, rhs_b, .. } = &sys.boundary {
        a.view_mut((r, n * stride), bb.shape()).copy_from(bb);
        rhs.rows_mut(r, bb.nrows()).copy_from(rhs_b);
    }
    Ok((a, rhs))
}

/// Dense LU (square) or Householder least squares (overdetermined) on the assembled matrix.
pub fn dense_oracle_solve(sys: &BlockSystem) -> Result<BlockSolution, LinalgError> {
    let (a, rhs) = assemble_dense(sys)?;
    let (rows, cols) = a.shape();
    let (d, ds) = sys.dims();
    let x = if rows == cols {
        a.clone().lu().solve(&rhs).ok_or(LinalgError::SingularPivot { block: 0, column: 0, pivot: 0.0 })?
    } else {
        let qr = a.clone().qr();
        let r = qr.r();
        let (idx, smallest) = (0..cols).map(|i| (i, r[(i, i)].abs())).fold((0, f64::INFINITY), |acc, v| {
            if v.1 < acc.1 {
                v
            } else {
                acc
            }
        });
        if smallest <= 1e-14 * a.amax() {
            return Err(LinalgError::RankDeficient { block: None, column: idx, diagonal: smallest });
        }
        let qtb = qr.q().transpose() * &rhs;
        r.solve_upper_triangular(&qtb).ok_or(LinalgError::RankDeficient { block: None, column: idx, diagonal: 0.0 })?
    };
    let mut sol = BlockSolution::from_flat(&x, sys.n(), d, ds, sys.is_periodic(), sys.has_h_column());
    sol.residual_norm = (&a * &x - &rhs).norm();
    sol.cond_estimate = f64::NAN;
    Ok(sol)
}

/// Column of a block inside the staircase: interior offset or border offset.
#[derive(Clone, Copy)]
enum Target {
    Interior(usize),
    Border(usize),
}

fn place(block: &mut RowBlock, row: usize, target: Target, m: &Matrix) {
    match target {
        Target::Interior(c) => {
            let c = c - block.start;
            let mut v = block.a.view_mut((row, c), m.shape());
            v += m;
        }
        Target::Border(c) => {
            let mut v = block.border.view_mut((row, c), m.shape());
            v += m;
        }
    }
}

fn interval_block(
    b: &IntervalBlocks,
    start: usize,
    width: usize,
    p: usize,
    left: Target,
    stage: Target,
    right: Target,
    h_col: Option<usize>,
) -> RowBlock {
    let (d, ds) = (b.dim(), b.stage_dim());
    let mut rb = RowBlock::zeros(start, ds + d, width, p);
    place(&mut rb, 0, left, &b.v);
    place(&mut rb, 0, stage, &b.k);
    place(&mut rb, ds, left, &b.l);
    place(&mut rb, ds, stage, &b.ut);
    place(&mut rb, ds, right, &Matrix::identity(d, d));
    rb.rhs.rows_mut(0, ds).copy_from(&b.stage_rhs);
    rb.rhs.rows_mut(ds, d).copy_from(&b.step_rhs);
    if let (Some(c), Some((w, v))) = (h_col, &b.h_column) {
        rb.border.view_mut((0, c), (ds, 1)).copy_from(w);
        rb.border.view_mut((ds, c), (d, 1)).copy_from(v);
    }
    rb
}

/// Almost block diagonal solve for separated boundary rows, by row-pivoted
/// block elimination. Cost and storage are linear in `n`.
pub fn solve_abd(sys: &BlockSystem) -> Result<BlockSolution, LinalgError> {
    sys.validate()?;
    let BoundaryRows::Separated { ba, rhs_a, bb, rhs_b } = &sys.boundary else {
        return Err(LinalgError::WrongBoundary);
    };
    let n = sys.n();
    let (d, ds) = sys.dims();
    let stride = d + ds;
    let n_int = n * stride + d;
    let mut blocks = Vec::with_capacity(n + 2);
    let mut first = RowBlock::zeros(0, ba.nrows(), d, 0);
    first.a.copy_from(ba);
    first.rhs.copy_from(rhs_a);
    blocks.push(first);
    for (j, b) in sys.intervals.iter().enumerate() {
        let s0 = j * stride;
        blocks.push(interval_block(
            b,
            s0,
            2 * d + ds,
            0,
            Target::Interior(s0),
            Target::Interior(s0 + d),
            Target::Interior(s0 + stride),
            None,
        ));
    }
    let mut last = RowBlock::zeros(n * stride, bb.nrows(), d, 0);
    last.a.copy_from(bb);
    last.rhs.copy_from(rhs_b);
    blocks.push(last);

    let sol = staircase::solve(n_int, 0, &blocks, Mode::Lu).map_err(|e| name_interval(e, 1))?;
    let mut out = BlockSolution::from_flat(&sol.interior, n, d, ds, false, false);
    out.residual_norm = sol.residual_norm;
    out.cond_estimate = sol.cond_estimate;
    Ok(out)
}

/// Bordered almost block diagonal solve for coupled boundary rows. `δ_0` is
/// the border, so the fill-in is `2m` columns per eliminated row.
pub fn solve_babd(sys: &BlockSystem) -> Result<BlockSolution, LinalgError> {
    sys.validate()?;
    let BoundaryRows::Coupled { ba, bb, rhs } = &sys.boundary else {
        return Err(LinalgError::WrongBoundary);
    };
    let n = sys.n();
    let (d, ds) = sys.dims();
    let stride = d + ds;
    // Interior unknowns: Δ_0, δ_1, Δ_1, …, δ_n.
    let n_int = n * stride;
    let node = |i: usize| i * stride - d;
    let mut blocks = Vec::with_capacity(n + 1);
    for (j, b) in sys.intervals.iter().enumerate() {
        let (start, width, left) =
            if j == 0 { (0, ds + d, Target::Border(0)) } else { (node(j), 2 * d + ds, Target::Interior(node(j))) };
        let stage = if j == 0 { 0 } else { node(j) + d };
        blocks.push(interval_block(
            b,
            start,
            width,
            d,
            left,
            Target::Interior(stage),
            Target::Interior(node(j + 1)),
            None,
        ));
    }
    let mut bc = RowBlock::zeros(node(n), d, d, d);
    bc.a.copy_from(bb);
    bc.border.copy_from(ba);
    bc.rhs.copy_from(rhs);
    blocks.push(bc);

    let sol = staircase::solve(n_int, d, &blocks, Mode::Lu).map_err(|e| name_interval(e, 0))?;
    let mut x = Vector::zeros(n_int + d);
    x.rows_mut(0, d).copy_from(&sol.border);
    x.rows_mut(d, n_int).copy_from(&sol.interior);
    let mut out = BlockSolution::from_flat(&x, n, d, ds, false, false);
    out.residual_norm = sol.residual_norm;
    out.cond_estimate = sol.cond_estimate;
    Ok(out)
}

/// Least-squares solve of the periodic system, with `δ_n` identified with
/// `δ_0` and optional energy row and stepsize column. Uses Householder
/// reflections block by block; `δ_0` (and `δ_h`) form the border.
pub fn lstsq_bordered(sys: &BlockSystem) -> Result<BlockSolution, LinalgError> {
    sys.validate()?;
    let BoundaryRows::Periodic { anchor, anchor_rhs, energy } = &sys.boundary else {
        return Err(LinalgError::WrongBoundary);
    };
    let n = sys.n();
    let (d, ds) = sys.dims();
    let stride = d + ds;
    let has_h = energy.is_some();
    let p = d + usize::from(has_h);
    let h_col = has_h.then_some(d);
    // Interior unknowns: Δ_0, δ_1, Δ_1, …, δ_{n−1}, Δ_{n−1}.
    let n_int = n * stride - d;
    let node = |i: usize| if i == 0 || i == n { Target::Border(0) } else { Target::Interior(i * stride - d) };
    let mut blocks = Vec::with_capacity(n + 1);
    for (j, b) in sys.intervals.iter().enumerate() {
        let start = if j == 0 { 0 } else { j * stride - d };
        let stage_col = j * stride;
        let end = if j + 1 == n { stage_col + ds } else { (j + 1) * stride };
        blocks.push(interval_block(b, start, end - start, p, node(j), Target::Interior(stage_col), node(j + 1), h_col));
    }
    let extra = anchor.nrows() + usize::from(has_h);
    let mut tail = RowBlock::zeros(n_int, extra, 0, p);
    tail.border.view_mut((0, 0), anchor.shape()).copy_from(anchor);
    tail.rhs.rows_mut(0, anchor.nrows()).copy_from(anchor_rhs);
    if let Some((g, gamma)) = energy {
        tail.border.view_mut((anchor.nrows(), 0), (1, d)).copy_from(&g.transpose());
        tail.rhs[anchor.nrows()] = *gamma;
    }
    blocks.push(tail);

    let sol = staircase::solve(n_int, p, &blocks, Mode::Qr).map_err(|e| name_interval(e, 0))?;
    let mut x = Vector::zeros(n_int + p);
    x.rows_mut(0, d).copy_from(&sol.border.rows(0, d));
    x.rows_mut(d, n_int).copy_from(&sol.interior);
    if has_h {
        x[n_int + d] = sol.border[d];
    }
    let mut out = BlockSolution::from_flat(&x, n, d, ds, true, has_h);
    out.residual_norm = sol.residual_norm;
    out.cond_estimate = sol.cond_estimate;
    Ok(out)
}

/// Dispatches on the boundary class.
pub fn solve(sys: &BlockSystem) -> Result<BlockSolution, LinalgError> {
    match sys.boundary {
        BoundaryRows::Separated { .. } => solve_abd(sys),
        BoundaryRows::Coupled { .. } => solve_babd(sys),
        BoundaryRows::Periodic { .. } => lstsq_bordered(sys),
    }
}

/// Rewrites staircase block indices so that they count mesh intervals from 1.
fn name_interval(e: LinalgError, first_interval_block: usize) -> LinalgError {
    let shift = |b: usize| b + 1 - first_interval_block;
    match e {
        LinalgError::SingularPivot { block, column, pivot } => {
            LinalgError::SingularPivot { block: shift(block), column, pivot }
        }
        LinalgError::RankDeficient { block, column, diagonal } => {
            LinalgError::RankDeficient { block: block.map(shift), column, diagonal }
        }
        other => other,
    }
}
