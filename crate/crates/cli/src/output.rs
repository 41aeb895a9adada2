//! Trajectory CSV, JSON report and gnuplot script writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hbvm_core::integrator::dense_output;
use hbvm_core::{HamiltonianModel, MeshSolution, StagePartition, Vector};

/// 17 significant digits: enough for every `f64` to survive a round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(dim: usize) -> Vec<String> {
    let m = dim / 2;
    let mut h = vec!["t".to_string()];
    h.extend((1..=m).map(|i| format!("q{i}")));
    h.extend((1..=m).map(|i| format!("p{i}")));
    h.push("H".into());
    h.push("H_drift".into());
    h
}

/// Times and states of the mesh, with `oversample − 1` dense-output points inside every interval.
pub fn sampled_states(mesh: &MeshSolution, part: &StagePartition, oversample: usize) -> Vec<(f64, Vector)> {
    let n = mesh.n();
    let mut out = Vec::with_capacity(n * oversample + 1);
    for i in 0..n {
        let t = mesh.t0 + mesh.h * i as f64;
        out.push((t, mesh.nodes[i].clone()));
        if oversample > 1 {
            let z = mesh.stage_list(i);
            for j in 1..oversample {
                let c = j as f64 / oversample as f64;
                out.push((t + c * mesh.h, dense_output(part, mesh.nodes[i].as_slice(), &z, mesh.h, c)));
            }
        }
    }
    out.push((mesh.t_final(), mesh.nodes[n].clone()));
    out
}

/// One row per sample: time, state, `H` and `H − H(y_0)`.
pub fn write_trajectory(
    path: &Path,
    mesh: &MeshSolution,
    model: &dyn HamiltonianModel,
    part: &StagePartition,
    oversample: usize,
) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(csv_header(mesh.dim()))?;
    let h0 = model.energy(mesh.nodes[0].as_slice())?;
    for (t, y) in sampled_states(mesh, part, oversample) {
        let h = model.energy(y.as_slice()).unwrap_or(f64::NAN);
        let mut row = vec![fmt_f64(t)];
        row.extend(y.iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(h));
        row.push(fmt_f64(h - h0));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &serde_json::Value) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Script with two plots: the `q1 q2` projection and the energy drift over time.
pub fn write_gnuplot(path: &Path, csv: &Path, dim: usize) -> std::io::Result<()> {
    let m = dim / 2;
    let drift_col = 2 * m + 3;
    let csv = csv.display();
    let script = format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set multiplot layout 1,2\n\
         set title 'trajectory'\n\
         set xlabel 'q1'\n\
         set ylabel 'q2'\n\
         set size ratio -1\n\
         plot '{csv}' using 2:3 with lines notitle\n\
         set size noratio\n\
         set title 'energy drift'\n\
         set xlabel 't'\n\
         set ylabel 'H - H(0)'\n\
         set format y '%.1e'\n\
         plot '{csv}' using 1:{drift_col} with linespoints notitle\n\
         unset multiplot\n\
         pause mouse close\n"
    );
    std::fs::write(path, script)
}
