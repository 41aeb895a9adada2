//! Closed initial guesses from the linearized flow at an equilibrium.

use alloc::vec::Vec;

use crate::bvp::MeshSolution;
use crate::models::{collinear_libration_points, linearize, Crtbp, CrtbpParams, HamiltonianModel, Linearization};
use crate::Vector;

use super::{constant_stages, MissionError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessPlane {
    /// Center mode in the orbital plane, started on the `q2 = 0` axis at `q1 = q1_eq − amplitude`.
    InPlane,
    /// Out-of-plane center mode, started at its highest point `q3 = amplitude`.
    Vertical,
    /// In-plane mode of `amplitude` plus the out-of-plane mode of `vertical_amplitude`,
    /// both run through one cycle and started at the top of the vertical motion.
    Halo { vertical_amplitude: f64 },
}

/// Share of the mode's weight carried by `q3, p3`; zero for planar models.
fn vertical_share(a1: &Vector, a2: &Vector) -> f64 {
    let n = a1.len();
    if n != 6 {
        return 0.0;
    }
    let v = |a: &Vector| a[2] * a[2] + a[5] * a[5];
    (v(a1) + v(a2)) / (a1.norm_squared() + a2.norm_squared())
}

/// Vector of the plane spanned by `(a1, a2)` with `a[zero] = 0` and `a[set] = value`.
fn pinned(a1: &Vector, a2: &Vector, zero: usize, set: usize, value: f64) -> Result<Vector, MissionError> {
    let a = a1 * a2[zero] - a2 * a1[zero];
    let a = if a.amax() == 0.0 { a1.clone() } else { a };
    if a[set].abs() < 1e-12 * a.amax() {
        return Err(crate::models::ModelError::NoCenterMode.into());
    }
    Ok(&a * (value / a[set]))
}

struct Mode {
    omega: f64,
    start: Vector,
}

fn mode(lin: &Linearization, vertical: bool, amplitude: f64) -> Result<Mode, MissionError> {
    let dof = lin.state.len() / 2;
    for omega in lin.center_frequencies() {
        let (a1, a2) = lin.center_plane(omega)?;
        if (vertical_share(&a1, &a2) > 0.5) != vertical {
            continue;
        }
        let start = if vertical {
            pinned(&a1, &a2, 2 + dof, 2, amplitude)?
        } else {
            pinned(&a1, &a2, 1, 0, -amplitude)?
        };
        return Ok(Mode { omega, start });
    }
    Err(crate::models::ModelError::NoCenterMode.into())
}

/// One period of a center-mode ellipse of the linearization at `equilibrium`,
/// sampled at `n + 1` uniform times; `y_n` is an exact copy of `y_0`.
///
/// The period is `2π/ω` of the in-plane mode (of the vertical one for
/// [`GuessPlane::Vertical`]). Stages start as copies of the left node.
pub fn initial_guess_linearized<M: HamiltonianModel + ?Sized>(
    model: &M,
    equilibrium: &[f64],
    amplitude: f64,
    n: usize,
    s: usize,
    plane: GuessPlane,
) -> Result<MeshSolution, MissionError> {
    if n < 2 || s == 0 {
        return Err(MissionError::Invalid("guess needs n ≥ 2 and s ≥ 1"));
    }
    let lin = linearize(model, equilibrium)?;
    let modes: Vec<Mode> = match plane {
        GuessPlane::InPlane => alloc::vec![mode(&lin, false, amplitude)?],
        GuessPlane::Vertical => alloc::vec![mode(&lin, true, amplitude)?],
        GuessPlane::Halo { vertical_amplitude } => {
            alloc::vec![mode(&lin, false, amplitude)?, mode(&lin, true, vertical_amplitude)?]
        }
    };
    let period = 2.0 * core::f64::consts::PI / modes[0].omega;
    let mut nodes: Vec<Vector> = (0..n)
        .map(|i| {
            let theta = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
            let mut y = lin.state.clone();
            for m in &modes {
                y += lin.center_solution(m.omega, &m.start, theta / m.omega) - &lin.state;
            }
            y
        })
        .collect();
    nodes.push(nodes[0].clone());
    let stages = constant_stages(&nodes, s);
    Ok(MeshSolution::new(0.0, period / n as f64, nodes, stages))
}

/// In-plane guess around L2 of the planar restricted problem.
pub fn lyapunov_guess(mu: f64, amplitude: f64, n: usize, s: usize) -> Result<MeshSolution, MissionError> {
    let model = Crtbp::new(CrtbpParams::planar(mu))?;
    let l2 = collinear_libration_points(mu)?[1];
    initial_guess_linearized(&model, model.collinear_state(l2).as_slice(), amplitude, n, s, GuessPlane::InPlane)
}

/// Three-dimensional guess around L2 of the spatial restricted problem.
pub fn halo_guess(
    mu: f64,
    in_plane: f64,
    vertical: f64,
    n: usize,
    s: usize,
) -> Result<MeshSolution, MissionError> {
    let model = Crtbp::new(CrtbpParams::spatial(mu))?;
    let l2 = collinear_libration_points(mu)?[1];
    let plane = GuessPlane::Halo { vertical_amplitude: vertical };
    initial_guess_linearized(&model, model.collinear_state(l2).as_slice(), in_plane, n, s, plane)
}

/// State of a closed mesh at time `t` (taken modulo the period) by linear interpolation.
pub fn sample_closed(mesh: &MeshSolution, t: f64) -> Vector {
    let n = mesh.n();
    let mut x = ((t - mesh.t0) / mesh.h) % n as f64;
    if x < 0.0 {
        x += n as f64;
    }
    let i = (x as usize).min(n - 1);
    let f = x - i as f64;
    &mesh.nodes[i] * (1.0 - f) + &mesh.nodes[i + 1] * f
}

/// Closed mesh with `n` intervals over the same period, nodes by linear
/// interpolation starting at node `start`; stages are reset to copies of the left node.
pub fn resample_closed(mesh: &MeshSolution, n: usize, s: usize, start: usize) -> MeshSolution {
    let period = mesh.h * mesh.n() as f64;
    let h = period / n as f64;
    let offset = mesh.t0 + mesh.h * start as f64;
    let mut nodes: Vec<Vector> = (0..n).map(|i| sample_closed(mesh, offset + h * i as f64)).collect();
    nodes.push(nodes[0].clone());
    let stages = constant_stages(&nodes, s);
    MeshSolution::new(0.0, h, nodes, stages)
}
