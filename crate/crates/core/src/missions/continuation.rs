//! Sequential warm-started sweeps over a scalar parameter.

use alloc::vec::Vec;

use crate::bvp::MeshSolution;

use super::{HasMesh, MissionError};

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep<R> {
    pub parameter: f64,
    pub result: Result<R, MissionError>,
}

/// Runs `driver(parameter, warm_start)` over `parameters` in order.
///
/// Each solve starts from the mesh of the last successful one (from `start`
/// before any success). Failures are recorded and the sweep carries on. A
/// parameter that breaks the monotone order of the list is recorded as a
/// failure without calling the driver.
pub fn continuation<R, F>(parameters: &[f64], start: &MeshSolution, mut driver: F) -> Vec<ContinuationStep<R>>
where
    R: HasMesh,
    F: FnMut(f64, &MeshSolution) -> Result<R, MissionError>,
{
    let increasing = parameters.windows(2).next().is_none_or(|w| w[1] >= w[0]);
    let mut warm = start.clone();
    let mut out: Vec<ContinuationStep<R>> = Vec::with_capacity(parameters.len());
    let mut last = None;
    for &p in parameters {
        if let Some(prev) = last {
            if (p >= prev) != increasing && p != prev {
                out.push(ContinuationStep { parameter: p, result: Err(MissionError::Invalid("parameters are not monotone")) });
                continue;
            }
        }
        last = Some(p);
        let result = driver(p, &warm);
        if let Ok(r) = &result {
            warm = r.mesh().clone();
        }
        out.push(ContinuationStep { parameter: p, result });
    }
    out
}
