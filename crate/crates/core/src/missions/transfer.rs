//! Minimum-energy transfers as separated boundary value problems on the
//! Pontryagin-extended Hamiltonian.
//!
//! Both ends fix the physical state and leave the costates free. Costates
//! start at zero, so the first Newton step linearizes about the uncontrolled
//! drift.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bvp::{newton_solve, BoundarySpec, LinearCondition, MeshSolution};
use crate::integrator::silent_stages;
use crate::math::{atan2, sqrt};
use crate::models::units::days_to_nondim;
use crate::models::{extended_hill_model, extended_model, hill_model, ControlledModel, Crtbp, CrtbpParams, HamiltonianModel};
use crate::tableau::StagePartition;
use crate::Vector;

use super::{sample_closed, HasMesh, MissionError, OrbitResult, SolveSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    /// Mesh over the extended state `(y, λ)`.
    pub mesh: MeshSolution,
    /// `u = −λ_p` at every node.
    pub controls: Vec<Vector>,
    /// `½∫|u|² dt` by the method's own quadrature.
    pub cost: f64,
    /// Max-norm mismatch of the physical state at `t_0` and `t_f`.
    pub initial_mismatch: f64,
    pub final_mismatch: f64,
    /// `Ĥ(y_0)`.
    pub hamiltonian: f64,
    /// `max_i |Ĥ(y_i) − Ĥ(y_0)|`.
    pub max_hamiltonian_drift: f64,
    /// `Ĥ(y_n) − Ĥ(y_0)`.
    pub end_to_start_error: f64,
}

impl TransferResult {
    pub fn relative_hamiltonian_drift(&self) -> f64 {
        self.max_hamiltonian_drift / self.hamiltonian.abs().max(f64::MIN_POSITIVE)
    }

    /// Net turns of the planar position `(q1, q2)` about `center`, counterclockwise positive.
    ///
    /// Nodes closer to `center` than `1e-12` are skipped, so a transfer
    /// that starts at the center still gets a well-defined count.
    pub fn winding_number(&self, center: [f64; 2]) -> f64 {
        let mut total = 0.0;
        let mut prev: Option<f64> = None;
        for x in &self.mesh.nodes {
            let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
            if sqrt(dx * dx + dy * dy) < 1e-12 {
                continue;
            }
            let a = atan2(dy, dx);
            if let Some(p) = prev {
                let mut d = a - p;
                if d > PI {
                    d -= 2.0 * PI;
                } else if d < -PI {
                    d += 2.0 * PI;
                }
                total += d;
            }
            prev = Some(a);
        }
        total / (2.0 * PI)
    }

    /// Physical states along the mesh.
    pub fn states(&self) -> Vec<Vector> {
        let m = self.mesh.dim() / 2;
        self.mesh.nodes.iter().map(|x| x.rows(0, m).into_owned()).collect()
    }
}

impl HasMesh for TransferResult {
    fn mesh(&self) -> &MeshSolution {
        &self.mesh
    }
}

/// Which node of a periodic orbit serves as a transfer endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Endpoint {
    /// Node with the largest `q3`.
    #[default]
    Highest,
    Index(usize),
}

impl Endpoint {
    fn resolve(self, orbit: &OrbitResult) -> Result<usize, MissionError> {
        match self {
            Self::Highest => Ok(orbit.top_node()),
            Self::Index(i) if i < orbit.mesh.n() => Ok(i),
            Self::Index(_) => Err(MissionError::Invalid("endpoint index outside the orbit mesh")),
        }
    }
}

/// `½∫|u|²` over the mesh, with the `k`-point rule of the method on every interval.
pub fn transfer_cost<M: HamiltonianModel>(
    model: &ControlledModel<M>,
    part: &StagePartition,
    mesh: &MeshSolution,
) -> f64 {
    let b = &part.tableau.b;
    let mut cost = 0.0;
    for i in 0..mesh.n() {
        let z = mesh.stage_list(i);
        let w = silent_stages(part, &mesh.nodes[i], &z);
        let mut acc = 0.0;
        for (j, zj) in z.iter().enumerate() {
            acc += b[part.fundamental_idx[j]] * model.control(zj.as_slice()).norm_squared();
        }
        for (l, wl) in w.iter().enumerate() {
            acc += b[part.silent_idx[l]] * model.control(wl.as_slice()).norm_squared();
        }
        cost += 0.5 * mesh.h * acc;
    }
    cost
}

fn solve_transfer<M: HamiltonianModel + core::fmt::Debug + Clone + 'static>(
    model: &ControlledModel<M>,
    start: &Vector,
    end: &Vector,
    guess: MeshSolution,
    settings: &SolveSettings,
) -> Result<TransferResult, MissionError> {
    let part = settings.partition()?;
    let m = model.base_dim();
    let idx: Vec<usize> = (0..m).collect();
    let spec = BoundarySpec::separated(
        LinearCondition::components(2 * m, &idx, start.as_slice()),
        LinearCondition::components(2 * m, &idx, end.as_slice()),
    );
    let mesh = newton_solve(model, &part, &spec, &guess, &settings.newton)?;

    let n = mesh.n();
    let controls = mesh.nodes.iter().map(|x| model.control(x.as_slice())).collect();
    let cost = transfer_cost(model, &part, &mesh);
    let initial_mismatch = (mesh.nodes[0].rows(0, m) - start).amax();
    let final_mismatch = (mesh.nodes[n].rows(0, m) - end).amax();
    let hamiltonian = model.energy(mesh.nodes[0].as_slice())?;
    let mut drift = 0.0_f64;
    for x in &mesh.nodes {
        drift = drift.max((model.energy(x.as_slice())? - hamiltonian).abs());
    }
    let end_to_start_error = model.energy(mesh.nodes[n].as_slice())? - hamiltonian;
    Ok(TransferResult {
        mesh,
        controls,
        cost,
        initial_mismatch,
        final_mismatch,
        hamiltonian,
        max_hamiltonian_drift: drift,
        end_to_start_error,
    })
}

/// Extended mesh with the given states, zero costates and linearly interpolated stages.
fn extended_guess(states: Vec<Vector>, h: f64, part: &StagePartition) -> MeshSolution {
    let nodes = states
        .into_iter()
        .map(|y| {
            let m = y.len();
            let mut x = Vector::zeros(2 * m);
            x.rows_mut(0, m).copy_from(&y);
            x
        })
        .collect();
    MeshSolution::from_nodes(0.0, h, nodes, part)
}

/// Warm start: a previous extended mesh stretched to the new final time.
fn stretched(prev: &MeshSolution, tf: f64, settings: &SolveSettings) -> Result<MeshSolution, MissionError> {
    if prev.n() != settings.n || prev.stages[0].len() != prev.dim() * settings.s {
        return Err(MissionError::Invalid("warm start mesh does not match the settings"));
    }
    let mut mesh = prev.clone();
    mesh.h = tf / settings.n as f64;
    mesh.t0 = 0.0;
    Ok(mesh)
}

/// Transfer in Hill's problem between two planar states `(q1, q2, p1, p2)` in time `tf`.
///
/// Without a warm start the physical guess is the straight line between the endpoints.
pub fn hill_transfer(
    start: &[f64],
    end: &[f64],
    tf: f64,
    settings: &SolveSettings,
    warm: Option<&MeshSolution>,
) -> Result<TransferResult, MissionError> {
    let model = extended_hill_model(hill_model());
    if start.len() != 4 || end.len() != 4 {
        return Err(MissionError::Invalid("Hill endpoints are planar states of length 4"));
    }
    if !(tf > 0.0 && tf.is_finite()) {
        return Err(MissionError::Invalid("transfer time must be positive"));
    }
    let part = settings.partition()?;
    let (a, b) = (Vector::from_column_slice(start), Vector::from_column_slice(end));
    let n = settings.n;
    let guess = match warm {
        Some(prev) => stretched(prev, tf, settings)?,
        None => {
            let states = (0..=n).map(|i| {
                let f = i as f64 / n as f64;
                &a * (1.0 - f) + &b * f
            });
            extended_guess(states.collect(), tf / n as f64, &part)
        }
    };
    solve_transfer(&model, &a, &b, guess, settings)
}

/// Transfer between two halo orbits, from an endpoint node of `from` to one of `to`, in `t_days`.
///
/// Without a warm start the physical guess blends the two orbits, each run
/// forward from its endpoint, with weights `1 − t/T` and `t/T`.
pub fn halo_transfer(
    from: &OrbitResult,
    to: &OrbitResult,
    t_days: f64,
    endpoints: (Endpoint, Endpoint),
    settings: &SolveSettings,
    warm: Option<&MeshSolution>,
) -> Result<TransferResult, MissionError> {
    if from.mu != to.mu {
        return Err(MissionError::Invalid("orbits belong to different mass ratios"));
    }
    if from.mesh.dim() != 6 || to.mesh.dim() != 6 {
        return Err(MissionError::Invalid("halo transfer needs spatial orbits"));
    }
    if !(t_days > 0.0 && t_days.is_finite()) {
        return Err(MissionError::Invalid("transfer time must be positive"));
    }
    let model = extended_model(Crtbp::new(CrtbpParams::spatial(from.mu))?)?;
    let part = settings.partition()?;
    let tf = days_to_nondim(t_days);
    let n = settings.n;
    let ia = endpoints.0.resolve(from)?;
    let ib = endpoints.1.resolve(to)?;
    let ta = from.mesh.h * ia as f64;
    let tb = to.mesh.h * ib as f64;
    let start = from.mesh.nodes[ia].clone();
    let end = to.mesh.nodes[ib].clone();
    let guess = match warm {
        Some(prev) => stretched(prev, tf, settings)?,
        None => {
            let states = (0..=n).map(|i| {
                let t = tf * i as f64 / n as f64;
                let f = i as f64 / n as f64;
                sample_closed(&from.mesh, ta + t) * (1.0 - f) + sample_closed(&to.mesh, tb + t) * f
            });
            let mut states: Vec<Vector> = states.collect();
            states[0] = start.clone();
            states[n] = end.clone();
            extended_guess(states, tf / n as f64, &part)
        }
    };
    solve_transfer(&model, &start, &end, guess, settings)
}
