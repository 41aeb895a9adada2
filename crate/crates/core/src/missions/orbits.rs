//! Lyapunov and halo orbits about L2 as anchored periodic boundary value problems.

use alloc::string::String;

use crate::bvp::{newton_solve, BoundarySpec, MeshSolution};
use crate::models::units::{days_to_nondim, nondim_to_days};
use crate::models::{collinear_libration_points, Crtbp, CrtbpParams, HamiltonianModel};

use super::{resample_closed, HasMesh, MissionError, SolveSettings};

/// Component pinned by the anchor `q2(0) = 0`: every orbit starts on a crossing of the `q1 q3` plane.
pub const ANCHOR_COMPONENT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitFamily {
    /// Planar orbits (`2m = 4`).
    Lyapunov,
    /// Spatial orbits (`2m = 6`).
    Halo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitTarget {
    /// Fixed period; the stepsize is `T/n`.
    PeriodDays(f64),
    /// Fixed energy; the period is an unknown.
    Energy(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitResult {
    pub mesh: MeshSolution,
    pub mu: f64,
    pub period: f64,
    pub period_days: f64,
    /// `H(y_0)`.
    pub energy: f64,
    /// `max_i |H(y_i) − H(y_0)|`.
    pub max_energy_drift: f64,
    pub classification: String,
}

impl OrbitResult {
    pub fn relative_energy_drift(&self) -> f64 {
        self.max_energy_drift / self.energy.abs()
    }

    /// Index of the node with the largest `q3` (the first node for planar orbits).
    pub fn top_node(&self) -> usize {
        if self.mesh.dim() < 6 {
            return 0;
        }
        let n = self.mesh.n();
        (0..n).fold(0, |best, i| if self.mesh.nodes[i][2] > self.mesh.nodes[best][2] { i } else { best })
    }
}

impl HasMesh for OrbitResult {
    fn mesh(&self) -> &MeshSolution {
        &self.mesh
    }
}

fn model_for(family: OrbitFamily, mu: f64) -> Result<Crtbp, MissionError> {
    Ok(Crtbp::new(match family {
        OrbitFamily::Lyapunov => CrtbpParams::planar(mu),
        OrbitFamily::Halo => CrtbpParams::spatial(mu),
    })?)
}

fn classify(mesh: &MeshSolution, mu: f64) -> Result<String, MissionError> {
    let [l1, l2, _] = collinear_libration_points(mu)?;
    let n = mesh.n();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut zlo, mut zhi) = (0.0_f64, 0.0_f64);
    for y in &mesh.nodes[..n] {
        lo = lo.min(y[0]);
        hi = hi.max(y[0]);
        if y.len() == 6 {
            zlo = zlo.min(y[2]);
            zhi = zhi.max(y[2]);
        }
    }
    let tag = if hi - lo < 1e-8 && zhi - zlo < 1e-8 {
        "equilibrium"
    } else if lo < l1 && hi > l2 {
        "L1-L2 embracing"
    } else if zhi - zlo > 1e-6 {
        if zhi >= -zlo {
            "L2 halo (northern)"
        } else {
            "L2 halo (southern)"
        }
    } else if lo < l2 && hi > l2 {
        "L2 Lyapunov"
    } else {
        "periodic orbit"
    };
    Ok(String::from(tag))
}

/// Summarizes a converged mesh of the given family.
pub fn orbit_result(family: OrbitFamily, mu: f64, mesh: MeshSolution) -> Result<OrbitResult, MissionError> {
    let model = model_for(family, mu)?;
    let energy = model.energy(mesh.nodes[0].as_slice())?;
    let mut drift = 0.0_f64;
    for y in &mesh.nodes {
        drift = drift.max((model.energy(y.as_slice())? - energy).abs());
    }
    let period = mesh.h * mesh.n() as f64;
    let classification = classify(&mesh, mu)?;
    Ok(OrbitResult {
        mesh,
        mu,
        period,
        period_days: nondim_to_days(period),
        energy,
        max_energy_drift: drift,
        classification,
    })
}

/// Solves for a periodic orbit of `family` from a closed guess.
///
/// The guess is resampled when its interval count differs from `settings.n`.
/// A period target keeps its stages and rescales the stepsize; an energy
/// target starts from the guess's own stepsize.
pub fn solve_orbit(
    family: OrbitFamily,
    mu: f64,
    target: OrbitTarget,
    guess: &MeshSolution,
    settings: &SolveSettings,
) -> Result<OrbitResult, MissionError> {
    let model = model_for(family, mu)?;
    let part = settings.partition()?;
    let dim = model.dim();
    if guess.n() == 0 || guess.dim() != dim {
        return Err(MissionError::Invalid("guess dimension does not match the orbit family"));
    }
    let mut mesh = if guess.n() != settings.n || guess.stages[0].len() != dim * settings.s {
        resample_closed(guess, settings.n, settings.s, 0)
    } else {
        guess.clone()
    };
    let spec = match target {
        OrbitTarget::PeriodDays(days) => {
            if !(days > 0.0 && days.is_finite()) {
                return Err(MissionError::Invalid("period must be positive"));
            }
            mesh.h = days_to_nondim(days) / settings.n as f64;
            BoundarySpec::periodic_anchored(dim, ANCHOR_COMPONENT, 0.0)
        }
        OrbitTarget::Energy(h) => {
            if !h.is_finite() {
                return Err(MissionError::Invalid("energy must be finite"));
            }
            BoundarySpec::periodic_energy(dim, ANCHOR_COMPONENT, 0.0, h)
        }
    };
    let sol = newton_solve(&model, &part, &spec, &mesh, &settings.newton)?;
    orbit_result(family, mu, sol)
}

pub fn lyapunov_by_period(
    mu: f64,
    t_days: f64,
    guess: &MeshSolution,
    settings: &SolveSettings,
) -> Result<OrbitResult, MissionError> {
    solve_orbit(OrbitFamily::Lyapunov, mu, OrbitTarget::PeriodDays(t_days), guess, settings)
}

pub fn lyapunov_by_energy(
    mu: f64,
    h_target: f64,
    guess: &MeshSolution,
    settings: &SolveSettings,
) -> Result<OrbitResult, MissionError> {
    solve_orbit(OrbitFamily::Lyapunov, mu, OrbitTarget::Energy(h_target), guess, settings)
}

pub fn halo_by_period(
    mu: f64,
    t_days: f64,
    guess: &MeshSolution,
    settings: &SolveSettings,
) -> Result<OrbitResult, MissionError> {
    solve_orbit(OrbitFamily::Halo, mu, OrbitTarget::PeriodDays(t_days), guess, settings)
}

pub fn halo_by_energy(
    mu: f64,
    h_target: f64,
    guess: &MeshSolution,
    settings: &SolveSettings,
) -> Result<OrbitResult, MissionError> {
    solve_orbit(OrbitFamily::Halo, mu, OrbitTarget::Energy(h_target), guess, settings)
}
