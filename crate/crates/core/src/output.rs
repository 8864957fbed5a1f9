//! CSV and summary records. Numbers use Rust's shortest round-trip
//! formatting, so identical runs give byte-identical files.

use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::Path;

use crate::diagnostics::Budget;
use crate::error::Result;
use crate::grid::Grid1D;
use crate::hyperbolic::{KappaMode, SweepReport, Type1Trajectory};
use crate::parabolic::{FieldSet, Trajectory};
use crate::params::MixtureParams;

pub const SWEEP_HEADER: &str = "epsilon,kappa,sup_relative_entropy,final_relative_entropy,bound_violations";

pub fn trajectory_header(species: usize) -> String {
    let mut h = String::from("t,cell,x");
    for i in 1..=species {
        let _ = write!(h, ",rho_{i}");
    }
    h.push_str(",theta,p");
    h
}

pub fn budget_header(species: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=species {
        let _ = write!(h, ",mass_{i}");
    }
    h.push_str(",energy,entropy,entropy_production,pressure_drift,newton_iters");
    h
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn push_fields(out: &mut String, time: f64, fields: &FieldSet, grid: &Grid1D, params: &MixtureParams) {
    for k in 0..fields.cells() {
        let _ = write!(out, "{time},{k},{}", grid.center(k));
        for i in 0..fields.species() {
            let _ = write!(out, ",{}", fields.rho(i)[k]);
        }
        let _ = writeln!(out, ",{},{}", fields.theta()[k], fields.pressure(k, params));
    }
}

pub fn parabolic_trajectory_csv(traj: &Trajectory, params: &MixtureParams) -> String {
    let mut out = trajectory_header(params.species());
    out.push('\n');
    for snap in &traj.snapshots {
        push_fields(&mut out, snap.time, &snap.fields, &traj.grid, params);
    }
    out
}

/// Same schema as the zero-flow trajectory; the velocity is not part of it.
/// Keeps every `every`-th snapshot plus the last one.
pub fn type1_trajectory_csv(traj: &Type1Trajectory, params: &MixtureParams, every: usize) -> Result<String> {
    let mut out = trajectory_header(params.species());
    out.push('\n');
    let last = traj.snapshots.len().saturating_sub(1);
    for (idx, snap) in traj.snapshots.iter().enumerate() {
        if idx % every.max(1) != 0 && idx != last {
            continue;
        }
        let (fields, _) = snap.state.to_primal(params)?;
        push_fields(&mut out, snap.time, &fields, &traj.grid, params);
    }
    Ok(out)
}

pub fn budget_csv(budgets: &[Budget], species: usize) -> String {
    let mut out = budget_header(species);
    out.push('\n');
    for b in budgets {
        let _ = write!(out, "{}", b.time);
        for m in &b.masses {
            let _ = write!(out, ",{m}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            b.energy, b.entropy, b.entropy_production, b.pressure_drift, b.newton_iters
        );
    }
    out
}

/// `kappa` is the effective conductivity coefficient of each member.
pub fn sweep_csv(report: &SweepReport, params: &MixtureParams) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let base = params.conductivity().coefficient;
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epsilon,
            e.kappa_scale * base,
            e.sup_relative_entropy,
            e.final_relative_entropy,
            e.bound_violations
        );
    }
    out
}

/// `key = value` summary of a sweep.
pub fn sweep_summary(report: &SweepReport) -> String {
    let mut out = String::new();
    let mode = match report.kappa_mode {
        KappaMode::Fixed => "fixed",
        KappaMode::Joint => "joint",
    };
    let _ = writeln!(out, "kappa_mode = {mode}");
    let _ = writeln!(out, "dt = {}", report.dt);
    match &report.fit {
        Some(fit) => {
            let _ = writeln!(out, "slope = {}", fit.slope);
            let _ = writeln!(out, "intercept = {}", fit.intercept);
            let _ = writeln!(out, "residual = {}", fit.residual);
        }
        None => {
            let _ = writeln!(out, "slope = none");
        }
    }
    let _ = writeln!(out, "monotone = {}", report.monotone);
    if let Some(f) = &report.reference_failure {
        let _ = writeln!(out, "reference_failure = {f}");
    }
    for e in &report.entries {
        if let Some(f) = &e.failure {
            let _ = writeln!(out, "failure[{}] = {f}", e.epsilon);
        }
    }
    out
}
