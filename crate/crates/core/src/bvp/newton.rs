use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::linalg::{self, BlockSystem, BoundaryRows, IntervalBlocks};
use crate::math::norm_inf;
use crate::models::HamiltonianModel;
use crate::tableau::StagePartition;
use crate::Vector;

use super::{
    assemble_interval_blocks, interval_residuals, BoundarySpec, BvpError, IntervalResidual, MeshSolution,
    NewtonOptions, NewtonReport,
};

fn boundary_residual<M: HamiltonianModel + ?Sized>(
    model: &M,
    spec: &BoundarySpec,
    mesh: &MeshSolution,
) -> Result<(Vector, Vector), BvpError> {
    let y0 = mesh.nodes[0].as_slice();
    let yn = mesh.nodes[mesh.n()].as_slice();
    let model_err = |source| BvpError::Model { interval: None, source };
    Ok(match spec {
        BoundarySpec::Separated { initial, terminal } => (initial.residual(y0), terminal.residual(yn)),
        BoundarySpec::NonSeparated(g) => (g.residual(y0, yn), Vector::zeros(0)),
        BoundarySpec::PeriodicAnchored { anchor, anchor_rhs } => (anchor * &mesh.nodes[0] - anchor_rhs, Vector::zeros(0)),
        BoundarySpec::PeriodicEnergy { anchor, anchor_rhs, energy } => {
            let a = anchor * &mesh.nodes[0] - anchor_rhs;
            let e = model.energy(y0).map_err(model_err)? - energy;
            let mut top = Vector::zeros(a.len() + 1);
            top[0] = e;
            top.rows_mut(1, a.len()).copy_from(&a);
            (top, Vector::zeros(0))
        }
    })
}

fn stack(head: &Vector, intervals: &[IntervalResidual], tail: &Vector) -> Vector {
    let body: usize = intervals.iter().map(|r| r.stage.len() + r.step.len()).sum();
    let mut out = Vector::zeros(head.len() + body + tail.len());
    let mut r = 0;
    out.rows_mut(r, head.len()).copy_from(head);
    r += head.len();
    for ir in intervals {
        out.rows_mut(r, ir.stage.len()).copy_from(&ir.stage);
        r += ir.stage.len();
        out.rows_mut(r, ir.step.len()).copy_from(&ir.step);
        r += ir.step.len();
    }
    out.rows_mut(r, tail.len()).copy_from(tail);
    out
}

/// Residual of every equation, rows ordered as in [`linalg::assemble_dense`].
pub fn residual_vector<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    spec: &BoundarySpec,
    mesh: &MeshSolution,
) -> Result<Vector, BvpError> {
    let (head, tail) = boundary_residual(model, spec, mesh)?;
    let ints = interval_residuals(model, part, mesh, mesh.h)?;
    Ok(stack(&head, &ints, &tail))
}

/// Newton system at the current iterate, plus the full residual vector.
pub fn assemble_system<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    spec: &BoundarySpec,
    mesh: &MeshSolution,
) -> Result<(BlockSystem, Vector), BvpError> {
    let n = mesh.n();
    let h = mesh.h;
    let ints = interval_residuals(model, part, mesh, h)?;
    let (head, tail) = boundary_residual(model, spec, mesh)?;
    let with_h = spec.has_unknown_step();
    let intervals = ints
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (v, ut, l, k) =
                assemble_interval_blocks(model, part, mesh.nodes[i].as_slice(), mesh.nodes[i + 1].as_slice(), h)
                    .map_err(|source| BvpError::Model { interval: Some(i + 1), source })?;
            Ok(IntervalBlocks {
                v,
                k,
                l,
                ut,
                stage_rhs: -&r.stage,
                step_rhs: -&r.step,
                h_column: with_h.then(|| (r.w.clone(), r.v.clone())),
            })
        })
        .collect::<Result<Vec<_>, BvpError>>()?;

    let y0 = mesh.nodes[0].as_slice();
    let yn = mesh.nodes[n].as_slice();
    let boundary = match spec {
        BoundarySpec::Separated { initial, terminal } => BoundaryRows::Separated {
            ba: initial.jacobian(y0),
            rhs_a: -&head,
            bb: terminal.jacobian(yn),
            rhs_b: -&tail,
        },
        BoundarySpec::NonSeparated(g) => {
            let (ba, bb) = g.jacobians(y0, yn);
            BoundaryRows::Coupled { ba, bb, rhs: -&head }
        }
        BoundarySpec::PeriodicAnchored { anchor, .. } => {
            BoundaryRows::Periodic { anchor: anchor.clone(), anchor_rhs: -&head, energy: None }
        }
        BoundarySpec::PeriodicEnergy { anchor, .. } => {
            let grad = model.gradient(y0).map_err(|source| BvpError::Model { interval: None, source })?;
            BoundaryRows::Periodic {
                anchor: anchor.clone(),
                anchor_rhs: -head.rows(1, anchor.nrows()),
                energy: Some((grad, -head[0])),
            }
        }
    };
    Ok((BlockSystem { intervals, boundary }, stack(&head, &ints, &tail)))
}

fn apply_update(mesh: &MeshSolution, sol: &linalg::BlockSolution, lambda: f64, periodic: bool) -> MeshSolution {
    let mut out = mesh.clone();
    for (y, d) in out.nodes.iter_mut().zip(&sol.nodes) {
        y.axpy(lambda, d, 1.0);
    }
    for (z, d) in out.stages.iter_mut().zip(&sol.stages) {
        z.axpy(lambda, d, 1.0);
    }
    if let Some(dh) = sol.dh {
        out.h += lambda * dh;
    }
    if periodic {
        let n = out.n();
        out.nodes[n] = out.nodes[0].clone();
    }
    out
}

fn update_norm(sol: &linalg::BlockSolution) -> f64 {
    let nodes = sol.nodes.iter().fold(0.0_f64, |a, v| a.max(norm_inf(v.as_slice())));
    let stages = sol.stages.iter().fold(0.0_f64, |a, v| a.max(norm_inf(v.as_slice())));
    nodes.max(stages).max(sol.dh.map_or(0.0, f64::abs))
}

/// Solves the boundary value problem by damped simplified Newton iteration.
///
/// Square problems converge when both the update and the residual max-norms
/// drop below `tol`. Periodic problems are overdetermined and keep a residual
/// of the size of the discretization error, so they converge on the update
/// alone; the residual is reported in `lstsq_residual`.
pub fn newton_solve<M: HamiltonianModel + ?Sized>(
    model: &M,
    part: &StagePartition,
    spec: &BoundarySpec,
    mesh0: &MeshSolution,
    opts: &NewtonOptions,
) -> Result<MeshSolution, BvpError> {
    let dim = model.dim();
    spec.validate(dim).map_err(BvpError::Invalid)?;
    mesh0.check(dim, part.s)?;
    let periodic = spec.is_periodic();

    let mut mesh = mesh0.clone();
    if periodic {
        let n = mesh.n();
        mesh.nodes[n] = mesh.nodes[0].clone();
    }
    let mut report = NewtonReport::default();
    let (mut sys, mut res) = assemble_system(model, part, spec, &mesh)?;
    let mut merit = res.norm();
    report.residual_history.push(norm_inf(res.as_slice()));
    let mut best = (merit, mesh.clone());
    let mut growth = 0;

    for iter in 1..=opts.max_iters {
        report.iterations = iter;
        let sol = linalg::solve(&sys).map_err(|source| BvpError::Linalg { iteration: iter, source })?;
        report.cond_estimates.push(sol.cond_estimate);
        let upd = update_norm(&sol);
        report.update_history.push(upd);

        let mut lambda = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for halvings in 0..=opts.max_halvings {
            let trial = apply_update(&mesh, &sol, lambda, periodic);
            if let Ok((tsys, tres)) = assemble_system(model, part, spec, &trial) {
                let tm = tres.norm();
                if tm <= merit || upd * lambda <= opts.tol {
                    accepted = Some((trial, tsys, tres, tm, halvings));
                    break;
                }
                fallback = Some((trial, tsys, tres, tm, halvings));
            }
            lambda *= 0.5;
        }
        let grew = accepted.is_none();
        let Some((trial, tsys, tres, tm, halvings)) = accepted.or(fallback) else {
            // Every trial left the model's domain; report the full step's failure.
            return Err(assemble_system(model, part, spec, &apply_update(&mesh, &sol, 1.0, periodic))
                .err()
                .unwrap_or(BvpError::Invalid("update left the model domain")));
        };
        if halvings > 0 {
            report.damping_events.push((iter, halvings));
        }
        mesh = trial;
        sys = tsys;
        res = tres;
        merit = tm;
        report.residual_history.push(norm_inf(res.as_slice()));
        if merit < best.0 {
            best = (merit, mesh.clone());
        }
        growth = if grew { growth + 1 } else { 0 };

        let rmax = norm_inf(res.as_slice());
        if upd <= opts.tol && (periodic || rmax <= opts.tol) {
            report.converged = true;
            if periodic {
                report.lstsq_residual = Some(merit);
            }
            mesh.report = report;
            return Ok(mesh);
        }
        if growth >= opts.max_growth {
            let mut b = best.1;
            report.lstsq_residual = periodic.then_some(best.0);
            b.report = report.clone();
            return Err(BvpError::Diverged { report: Box::new(report), best: Box::new(b) });
        }
    }
    let mut b = best.1;
    report.lstsq_residual = periodic.then_some(best.0);
    b.report = report.clone();
    Err(BvpError::NotConverged { report: Box::new(report), best: Box::new(b) })
}
