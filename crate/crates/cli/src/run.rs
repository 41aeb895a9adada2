//! Runs one configured experiment and collects what the writers need.

use hbvm_core::bvp::BvpError;
use hbvm_core::integrator::{hbvm_step, StepOptions};
use hbvm_core::missions::{
    continuation, halo_by_energy, halo_by_period, halo_guess, halo_transfer, hill_transfer, lyapunov_by_energy,
    lyapunov_by_period, lyapunov_guess, Endpoint, MissionError, OrbitResult, SolveSettings, TransferResult,
};
use hbvm_core::models::simple::{Harmonic, HenonHeiles, Kepler, Pendulum, Quartic};
use hbvm_core::models::units::nondim_to_km;
use hbvm_core::models::{
    extended_hill_model, extended_model, hill_l2_abscissa, Crtbp, CrtbpParams, HamiltonianModel, Hill,
};
use hbvm_core::{MeshSolution, NewtonReport, StagePartition, Vector};
use serde_json::{json, Map, Value};

use crate::config::{
    halo_amplitudes, lyapunov_amplitude, ConfigError, Continuation, Driver, Experiment, HaloTransfer, HillTransfer,
    Ivp, ModelName, OrbitByEnergy, OrbitByPeriod, RunConfig,
};

/// A mesh together with the model and method that produced it.
pub struct Trajectory {
    pub mesh: MeshSolution,
    pub model: Box<dyn HamiltonianModel>,
    pub part: StagePartition,
}

impl Trajectory {
    /// `H(y_0)`, the largest `|H(y_i) − H(y_0)|` and `H(y_n) − H(y_0)`.
    pub fn drift(&self) -> Value {
        let energies: Vec<f64> =
            self.mesh.nodes.iter().map(|y| self.model.energy(y.as_slice()).unwrap_or(f64::NAN)).collect();
        let h0 = energies[0];
        let max_abs = energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max);
        json!({
            "energy": h0,
            "max_abs": max_abs,
            "max_rel": max_abs / h0.abs(),
            "end_to_start": energies[energies.len() - 1] - h0,
        })
    }
}

/// Result of a run that got past configuration.
pub struct Outcome {
    /// Why the solve failed; `None` when everything converged.
    pub failure: Option<String>,
    /// Converged mesh, or the best iterate of a failed solve.
    pub trajectory: Option<Trajectory>,
    pub newton: Option<NewtonReport>,
    pub summary: Map<String, Value>,
}

impl Outcome {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

struct SolveFailure {
    message: String,
    report: Option<NewtonReport>,
    best: Option<MeshSolution>,
}

enum Failure {
    Config(ConfigError),
    Solve(Box<SolveFailure>),
}

impl Failure {
    fn solve(message: String, report: Option<NewtonReport>, best: Option<MeshSolution>) -> Self {
        Failure::Solve(Box::new(SolveFailure { message, report, best }))
    }
}

impl From<MissionError> for Failure {
    fn from(e: MissionError) -> Self {
        let message = e.to_string();
        match e {
            MissionError::Bvp(BvpError::NotConverged { report, best } | BvpError::Diverged { report, best }) => {
                Failure::solve(message, Some(*report), Some(*best))
            }
            MissionError::Bvp(BvpError::Model { .. } | BvpError::Linalg { .. }) => {
                Failure::solve(message, None, None)
            }
            _ => Failure::Config(ConfigError(message)),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Config(ConfigError(msg.into()))
}

fn crtbp(mu: f64, spatial: bool) -> Result<Crtbp, Failure> {
    let params = if spatial { CrtbpParams::spatial(mu) } else { CrtbpParams::planar(mu) };
    Crtbp::new(params).map_err(|e| invalid(e.to_string()))
}

fn orbit_summary(o: &OrbitResult) -> Value {
    let (lo, hi) = o.mesh.nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y[0]), hi.max(y[0])));
    json!({
        "period_days": o.period_days,
        "period": o.period,
        "energy": o.energy,
        "classification": o.classification,
        "max_energy_drift": o.max_energy_drift,
        "relative_energy_drift": o.relative_energy_drift(),
        "q1_extent_km": nondim_to_km(hi - lo),
        "iterations": o.mesh.report.iterations,
    })
}

fn transfer_summary(t: &TransferResult) -> Map<String, Value> {
    let tf = t.mesh.t_final() - t.mesh.t0;
    let umax = t.controls.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let mut m = Map::new();
    m.insert("tf".into(), json!(tf));
    m.insert("cost".into(), json!(t.cost));
    m.insert("max_control".into(), json!(umax));
    m.insert("initial_mismatch".into(), json!(t.initial_mismatch));
    m.insert("final_mismatch".into(), json!(t.final_mismatch));
    m.insert("hamiltonian".into(), json!(t.hamiltonian));
    m.insert("max_hamiltonian_drift".into(), json!(t.max_hamiltonian_drift));
    m.insert("relative_hamiltonian_drift".into(), json!(t.relative_hamiltonian_drift()));
    m.insert("end_to_start_error".into(), json!(t.end_to_start_error));
    m
}

fn lyapunov_start(mu: f64, amplitude: Option<f64>, settings: &SolveSettings) -> Result<MeshSolution, Failure> {
    Ok(lyapunov_guess(mu, lyapunov_amplitude(amplitude), settings.n, settings.s)?)
}

fn halo_start(mu: f64, amplitudes: Option<[f64; 2]>, settings: &SolveSettings) -> Result<MeshSolution, Failure> {
    let (a, z) = halo_amplitudes(amplitudes);
    Ok(halo_guess(mu, a, z, settings.n, settings.s)?)
}

/// Runs the experiment. `Err` is a configuration problem; Newton failures come back inside the outcome.
pub fn run(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let settings = cfg.settings();
    let part = settings.partition().map_err(|e| ConfigError(e.to_string()))?;
    let mut summary = Map::new();
    let result = match &cfg.experiment {
        Experiment::Ivp(c) => return run_ivp(c, cfg.method.n, part),
        Experiment::LyapunovPeriod(c) => orbit_by_period(c, false, &settings, &mut summary),
        Experiment::HaloPeriod(c) => orbit_by_period(c, true, &settings, &mut summary),
        Experiment::LyapunovEnergy(c) => orbit_by_energy(c, false, &settings, &mut summary),
        Experiment::HaloEnergy(c) => orbit_by_energy(c, true, &settings, &mut summary),
        Experiment::HillTransfer(c) => run_hill_transfer(c, &settings, &mut summary),
        Experiment::HaloTransfer(c) => run_halo_transfer(c, &settings, &mut summary),
        Experiment::Continuation(c) => return run_continuation(c, &settings, part),
    };
    match result {
        Ok((mesh, model)) => {
            let newton = Some(mesh.report.clone());
            Ok(Outcome { failure: None, trajectory: Some(Trajectory { mesh, model, part }), newton, summary })
        }
        Err(Failure::Config(e)) => Err(e),
        Err(Failure::Solve(f)) => {
            let SolveFailure { message, report, best } = *f;
            let trajectory = match best {
                Some(mesh) => Some(Trajectory { model: failure_model(&cfg.experiment, mesh.dim())?, mesh, part }),
                None => None,
            };
            Ok(Outcome { failure: Some(message), trajectory, newton: report, summary })
        }
    }
}

/// Model of a failed solve of dimension `dim`, for best-iterate diagnostics.
fn failure_model(exp: &Experiment, dim: usize) -> Result<Box<dyn HamiltonianModel>, ConfigError> {
    let wrap = |r: Result<Box<dyn HamiltonianModel>, Failure>| {
        r.map_err(|f| match f {
            Failure::Config(e) => e,
            Failure::Solve(f) => ConfigError(f.message),
        })
    };
    wrap(match exp {
        Experiment::LyapunovPeriod(c) => crtbp(c.mu, false).map(|m| Box::new(m) as Box<dyn HamiltonianModel>),
        Experiment::LyapunovEnergy(c) => crtbp(c.mu, false).map(|m| Box::new(m) as _),
        Experiment::HaloPeriod(c) => crtbp(c.mu, true).map(|m| Box::new(m) as _),
        Experiment::HaloEnergy(c) => crtbp(c.mu, true).map(|m| Box::new(m) as _),
        Experiment::HillTransfer(_) => Ok(Box::new(extended_hill_model(Hill)) as _),
        Experiment::HaloTransfer(c) if dim == 6 => crtbp(c.mu, true).map(|m| Box::new(m) as _),
        Experiment::HaloTransfer(c) => crtbp(c.mu, true)
            .and_then(|m| extended_model(m).map_err(|e| invalid(e.to_string())))
            .map(|m| Box::new(m) as _),
        Experiment::Ivp(_) | Experiment::Continuation(_) => unreachable!("handled by their own runners"),
    })
}

type Solved = Result<(MeshSolution, Box<dyn HamiltonianModel>), Failure>;

fn orbit_by_period(c: &OrbitByPeriod, spatial: bool, settings: &SolveSettings, summary: &mut Map<String, Value>) -> Solved {
    let model = crtbp(c.mu, spatial)?;
    let o = if spatial {
        let guess = halo_start(c.mu, c.guess_amplitudes, settings)?;
        halo_by_period(c.mu, c.period_days, &guess, settings)?
    } else {
        let guess = lyapunov_start(c.mu, c.guess_amplitude, settings)?;
        lyapunov_by_period(c.mu, c.period_days, &guess, settings)?
    };
    summary.insert("orbit".into(), orbit_summary(&o));
    Ok((o.mesh, Box::new(model)))
}

fn orbit_by_energy(c: &OrbitByEnergy, spatial: bool, settings: &SolveSettings, summary: &mut Map<String, Value>) -> Solved {
    let model = crtbp(c.mu, spatial)?;
    let mut guess = if spatial {
        halo_start(c.mu, c.guess_amplitudes, settings)?
    } else {
        lyapunov_start(c.mu, c.guess_amplitude, settings)?
    };
    if let Some(days) = c.guess_period_days {
        let o = if spatial {
            halo_by_period(c.mu, days, &guess, settings)?
        } else {
            lyapunov_by_period(c.mu, days, &guess, settings)?
        };
        summary.insert("warm_start".into(), orbit_summary(&o));
        guess = o.mesh;
    }
    let o = if spatial {
        halo_by_energy(c.mu, c.energy, &guess, settings)?
    } else {
        lyapunov_by_energy(c.mu, c.energy, &guess, settings)?
    };
    summary.insert("orbit".into(), orbit_summary(&o));
    Ok((o.mesh, Box::new(model)))
}

fn hill_state(v: &[f64], field: &str) -> Result<Vec<f64>, Failure> {
    match v.len() {
        2 => Ok(Hill.rest_state([v[0], v[1]]).iter().copied().collect()),
        4 => Ok(v.to_vec()),
        n => Err(invalid(format!("field `{field}` needs 2 (position at rest) or 4 (state) entries, got {n}"))),
    }
}

fn run_hill_transfer(c: &HillTransfer, settings: &SolveSettings, summary: &mut Map<String, Value>) -> Solved {
    let start = match &c.start {
        Some(v) => hill_state(v, "start")?,
        None => Hill.l2_state().iter().copied().collect(),
    };
    let end = hill_state(&c.end, "end")?;
    let mut warm: Option<MeshSolution> = None;
    let mut staged = Vec::new();
    for &tf in &c.tf_steps {
        let t = hill_transfer(&start, &end, tf, settings, warm.as_ref())?;
        staged.push(json!({ "tf": tf, "iterations": t.mesh.report.iterations, "cost": t.cost }));
        warm = Some(t.mesh);
    }
    let t = hill_transfer(&start, &end, c.tf, settings, warm.as_ref())?;
    let mut m = transfer_summary(&t);
    m.insert("winding_about_l2".into(), json!(t.winding_number([hill_l2_abscissa(), 0.0])));
    m.insert("iterations".into(), json!(t.mesh.report.iterations));
    if !staged.is_empty() {
        m.insert("tf_steps".into(), Value::Array(staged));
    }
    summary.insert("transfer".into(), Value::Object(m));
    Ok((t.mesh, Box::new(extended_hill_model(Hill))))
}

fn run_halo_transfer(c: &HaloTransfer, settings: &SolveSettings, summary: &mut Map<String, Value>) -> Solved {
    let model = extended_model(crtbp(c.mu, true)?).map_err(|e| invalid(e.to_string()))?;
    let guess = halo_start(c.mu, c.guess_amplitudes, settings)?;
    let by_period = |days: Option<f64>| days.map(|d| halo_by_period(c.mu, d, &guess, settings)).transpose();
    let mut from = by_period(c.from_period_days)?;
    let mut to = by_period(c.to_period_days)?;
    // An orbit fixed by its energy continues from the other one.
    if let Some(h) = c.from_energy {
        let base = to.as_ref().expect("validated: one orbit has a period");
        from = Some(halo_by_energy(c.mu, h, &base.mesh, settings)?);
    }
    if let Some(h) = c.to_energy {
        let base = from.as_ref().expect("validated: one orbit has a period");
        to = Some(halo_by_energy(c.mu, h, &base.mesh, settings)?);
    }
    let (from, to) = (from.expect("validated"), to.expect("validated"));
    summary.insert("from_orbit".into(), orbit_summary(&from));
    summary.insert("to_orbit".into(), orbit_summary(&to));
    let days = c.transfer_days.unwrap_or(0.5 * (from.period_days + to.period_days));
    let endpoint = |i: Option<usize>| i.map_or(Endpoint::Highest, Endpoint::Index);
    let t = halo_transfer(&from, &to, days, (endpoint(c.from_node), endpoint(c.to_node)), settings, None)?;
    let mut m = transfer_summary(&t);
    m.insert("transfer_days".into(), json!(days));
    m.insert("iterations".into(), json!(t.mesh.report.iterations));
    summary.insert("transfer".into(), Value::Object(m));
    Ok((t.mesh, Box::new(model)))
}

fn ivp_model(c: &Ivp) -> Result<Box<dyn HamiltonianModel>, ConfigError> {
    let mu = || c.mu.expect("validated");
    let crtbp = |spatial| match crtbp(mu(), spatial) {
        Ok(m) => Ok(Box::new(m) as Box<dyn HamiltonianModel>),
        Err(Failure::Config(e)) => Err(e),
        Err(Failure::Solve(f)) => Err(ConfigError(f.message)),
    };
    Ok(match c.model {
        ModelName::Harmonic => Box::new(Harmonic),
        ModelName::Pendulum => Box::new(Pendulum),
        ModelName::Quartic => Box::new(Quartic),
        ModelName::HenonHeiles => Box::new(HenonHeiles),
        ModelName::Kepler => Box::new(Kepler),
        ModelName::Hill => Box::new(Hill),
        ModelName::CrtbpPlanar => crtbp(false)?,
        ModelName::CrtbpSpatial => crtbp(true)?,
    })
}

fn run_ivp(c: &Ivp, steps: usize, part: StagePartition) -> Result<Outcome, ConfigError> {
    let model = ivp_model(c)?;
    if c.y0.len() != model.dim() {
        return Err(ConfigError(format!("field `y0` needs {} entries for this model, got {}", model.dim(), c.y0.len())));
    }
    if !(c.h.is_finite() && c.h != 0.0) {
        return Err(ConfigError(format!("field `h` must be finite and nonzero, got {}", c.h)));
    }
    model.energy(&c.y0).map_err(|e| ConfigError(format!("field `y0`: {e}")))?;
    let d = StepOptions::default();
    let opts = StepOptions { tol: c.step_tol.unwrap_or(d.tol), max_iters: c.step_max_iters.unwrap_or(d.max_iters), ..d };
    let mut nodes = vec![Vector::from_column_slice(&c.y0)];
    let mut stages = Vec::with_capacity(steps);
    let (mut max_iters, mut failure) = (0, None);
    for i in 0..steps {
        match hbvm_step(model.as_ref(), nodes[i].as_slice(), c.h, &part, &opts) {
            Ok(step) => {
                max_iters = max_iters.max(step.newton_iters);
                stages.push(Vector::from_iterator(
                    step.z.iter().map(|z| z.len()).sum(),
                    step.z.iter().flat_map(|z| z.iter().copied()),
                ));
                nodes.push(step.y1);
            }
            Err(e) => {
                failure = Some(format!("step {i}: {e}"));
                break;
            }
        }
    }
    let mut summary = Map::new();
    summary.insert("steps_taken".into(), json!(stages.len()));
    summary.insert("max_stage_iterations".into(), json!(max_iters));
    summary.insert("final_time".into(), json!(c.h * stages.len() as f64));
    summary.insert("final_state".into(), json!(nodes.last().expect("y0").as_slice()));
    let trajectory = (!stages.is_empty()).then(|| Trajectory { mesh: MeshSolution::new(0.0, c.h, nodes, stages), model, part });
    Ok(Outcome { failure, trajectory, newton: None, summary })
}

fn run_continuation(c: &Continuation, settings: &SolveSettings, part: StagePartition) -> Result<Outcome, ConfigError> {
    let spatial = matches!(c.driver, Driver::HaloPeriod | Driver::HaloEnergy);
    let as_config = |f: Failure| match f {
        Failure::Config(e) => e,
        Failure::Solve(f) => ConfigError(f.message),
    };
    let model = crtbp(c.mu, spatial).map_err(as_config)?;
    let guess = if spatial {
        halo_start(c.mu, c.guess_amplitudes, settings)
    } else {
        lyapunov_start(c.mu, c.guess_amplitude, settings)
    }
    .map_err(as_config)?;
    let mut summary = Map::new();
    let start = match c.guess_period_days {
        None => guess,
        Some(days) => {
            let solved = if spatial {
                halo_by_period(c.mu, days, &guess, settings)
            } else {
                lyapunov_by_period(c.mu, days, &guess, settings)
            };
            match solved.map_err(Failure::from) {
                Ok(o) => {
                    summary.insert("start_orbit".into(), orbit_summary(&o));
                    o.mesh
                }
                Err(Failure::Config(e)) => return Err(e),
                Err(Failure::Solve(f)) => {
                    let SolveFailure { message, report, best } = *f;
                    let trajectory = best.map(|mesh| Trajectory { mesh, model: Box::new(model), part });
                    let failure = Some(format!("start orbit: {message}"));
                    return Ok(Outcome { failure, trajectory, newton: report, summary });
                }
            }
        }
    };
    let steps = continuation(&c.values, &start, |p, warm| match c.driver {
        Driver::LyapunovPeriod => lyapunov_by_period(c.mu, p, warm, settings),
        Driver::LyapunovEnergy => lyapunov_by_energy(c.mu, p, warm, settings),
        Driver::HaloPeriod => halo_by_period(c.mu, p, warm, settings),
        Driver::HaloEnergy => halo_by_energy(c.mu, p, warm, settings),
    });
    let mut failed = Vec::new();
    let mut last: Option<OrbitResult> = None;
    let mut rows = Vec::with_capacity(steps.len());
    for step in steps {
        match step.result {
            Ok(o) => {
                rows.push(json!({ "parameter": step.parameter, "converged": true, "orbit": orbit_summary(&o) }));
                last = Some(o);
            }
            Err(e) => {
                rows.push(json!({ "parameter": step.parameter, "converged": false, "error": e.to_string() }));
                failed.push(step.parameter);
            }
        }
    }
    summary.insert("steps".into(), Value::Array(rows));
    let failure = (!failed.is_empty()).then(|| format!("continuation failed at {failed:?}"));
    let newton = last.as_ref().map(|o| o.mesh.report.clone());
    let trajectory = last.map(|o| Trajectory { mesh: o.mesh, model: Box::new(model), part });
    Ok(Outcome { failure, trajectory, newton, summary })
}
