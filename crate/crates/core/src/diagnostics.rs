//! Budgets, relative entropies and convergence orders.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::MixtureParams;
use crate::parabolic::{FieldSet, Snapshot};
use crate::thermo::{mixture_entropy, RHO_FLOOR};

/// Tolerance below which a negative entropy production is not flagged.
pub const PRODUCTION_TOLERANCE: f64 = 1e-9;

/// Temperature part of the zero-flow relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelEntropyMode {
    /// `-c_w rho log(theta/theta_bar) + c_w rho (theta - theta_bar)`, as printed.
    Verbatim,
    /// `c_w rho (theta/theta_bar - 1 - log(theta/theta_bar))`, nonnegative.
    Bregman,
}

/// Per-cell weighting of the full relative entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    ThetaBar,
    Unweighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub time: f64,
    pub masses: Vec<f64>,
    pub energy: f64,
    pub entropy: f64,
    pub entropy_production: f64,
    pub boundary_heat_flow: f64,
    pub pressure_drift: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSeries {
    pub budgets: Vec<Budget>,
    /// Indices whose entropy production is below `-PRODUCTION_TOLERANCE`.
    pub negative_production: Vec<usize>,
}

pub fn species_masses(fields: &FieldSet, grid: &Grid1D) -> Vec<f64> {
    let h = grid.spacing();
    (0..fields.species())
        .map(|i| fields.rho(i).iter().map(|r| h * r).sum())
        .collect()
}

pub fn total_energy(fields: &FieldSet, grid: &Grid1D, params: &MixtureParams) -> f64 {
    let h = grid.spacing();
    let cw = params.heat_capacity();
    (0..fields.cells())
        .map(|k| {
            let rho: f64 = (0..fields.species()).map(|i| fields.rho(i)[k]).sum();
            h * cw * rho * fields.theta()[k]
        })
        .sum()
}

pub fn total_entropy(fields: &FieldSet, grid: &Grid1D, params: &MixtureParams) -> Result<f64> {
    let h = grid.spacing();
    let mut s = 0.0;
    for k in 0..fields.cells() {
        s += h * mixture_entropy(&fields.state(k), params)?;
    }
    Ok(s)
}

/// `max_k |p[k+1] - p[k]|`.
pub fn pressure_drift(fields: &FieldSet, params: &MixtureParams) -> f64 {
    let p: Vec<f64> = (0..fields.cells()).map(|k| fields.pressure(k, params)).collect();
    p.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

/// Totals and rates per snapshot. `boundary` is `(lambda, theta0)` for the
/// Robin heat exchange at both ends, `None` for closed or periodic domains.
/// The production rate at snapshot `k > 0` is the finite-difference entropy
/// rate plus the entropy carried out through the boundary.
pub fn budgets(
    snapshots: &[Snapshot],
    grid: &Grid1D,
    params: &MixtureParams,
    boundary: Option<(f64, f64)>,
) -> Result<BudgetSeries> {
    let mut budgets: Vec<Budget> = Vec::with_capacity(snapshots.len());
    let mut negative_production = Vec::new();
    for (idx, snap) in snapshots.iter().enumerate() {
        let f = &snap.fields;
        if f.cells() != grid.cells() {
            return Err(Error::Mismatch(format!(
                "snapshot {idx} has {} cells, grid has {}",
                f.cells(),
                grid.cells()
            )));
        }
        if let Some(prev) = budgets.last() {
            if !(snap.time > prev.time) {
                return Err(Error::Mismatch(format!("snapshot times must increase (index {idx})")));
            }
        }
        let entropy = total_entropy(f, grid, params)?;
        let t = f.theta();
        let (tl, tr) = (t[0], t[t.len() - 1]);
        let (heat, outflow) = match boundary {
            Some((lambda, theta0)) => (
                lambda * (tl - theta0) + lambda * (tr - theta0),
                lambda * (tl - theta0) / tl + lambda * (tr - theta0) / tr,
            ),
            None => (0.0, 0.0),
        };
        let production = match budgets.last() {
            Some(prev) => (entropy - prev.entropy) / (snap.time - prev.time) + outflow,
            None => 0.0,
        };
        if production < -PRODUCTION_TOLERANCE {
            negative_production.push(idx);
        }
        budgets.push(Budget {
            time: snap.time,
            masses: species_masses(f, grid),
            energy: total_energy(f, grid, params),
            entropy,
            entropy_production: production,
            boundary_heat_flow: heat,
            pressure_drift: pressure_drift(f, params),
            newton_iters: 0,
        });
    }
    Ok(BudgetSeries {
        budgets,
        negative_production,
    })
}

fn check_pair(u: &FieldSet, ubar: &FieldSet, grid: &Grid1D, params: &MixtureParams) -> Result<()> {
    if u.cells() != ubar.cells() || u.cells() != grid.cells() {
        return Err(Error::Mismatch(format!(
            "grid mismatch: {} vs {} cells on a {}-cell grid",
            u.cells(),
            ubar.cells(),
            grid.cells()
        )));
    }
    if u.species() != params.species() || ubar.species() != params.species() {
        return Err(Error::Mismatch("species count mismatch".into()));
    }
    for i in 0..ubar.species() {
        if let Some(k) = ubar.rho(i).iter().position(|r| *r < RHO_FLOOR) {
            return Err(Error::Domain(format!("reference state has vacuum in species {} at cell {k}", i + 1)));
        }
    }
    Ok(())
}

/// Relative entropy density of the zero-flow functional at one cell.
fn zero_flow_density(u: &FieldSet, ubar: &FieldSet, k: usize, mode: RelEntropyMode, params: &MixtureParams) -> f64 {
    let cw = params.heat_capacity();
    let mut value = 0.0;
    let mut rho = 0.0;
    for i in 0..u.species() {
        let m = params.molar_mass(i);
        let (r, rb) = (u.rho(i)[k], ubar.rho(i)[k]);
        value += r / m * (r.max(RHO_FLOOR) / rb).ln() - (r - rb) / m;
        rho += r;
    }
    let (t, tb) = (u.theta()[k], ubar.theta()[k]);
    value += match mode {
        RelEntropyMode::Verbatim => -cw * rho * (t / tb).ln() + cw * rho * (t - tb),
        RelEntropyMode::Bregman => cw * rho * (t / tb - 1.0 - (t / tb).ln()),
    };
    value
}

/// Zero-flow relative entropy `H(U | U_bar)` integrated over the grid.
pub fn relative_entropy_zero_flow(
    u: &FieldSet,
    ubar: &FieldSet,
    grid: &Grid1D,
    mode: RelEntropyMode,
    params: &MixtureParams,
) -> Result<f64> {
    check_pair(u, ubar, grid, params)?;
    let h = grid.spacing();
    Ok((0..u.cells()).map(|k| h * zero_flow_density(u, ubar, k, mode, params)).sum())
}

/// Relative entropy with the kinetic part `1/2 rho |v - v_bar|^2`, optionally
/// weighted cell by cell with `theta_bar`.
#[allow(clippy::too_many_arguments)]
pub fn relative_entropy_full(
    u: &FieldSet,
    velocity: &[f64],
    ubar: &FieldSet,
    velocity_bar: &[f64],
    grid: &Grid1D,
    mode: RelEntropyMode,
    weighting: Weighting,
    params: &MixtureParams,
) -> Result<f64> {
    check_pair(u, ubar, grid, params)?;
    if velocity.len() != u.cells() || velocity_bar.len() != u.cells() {
        return Err(Error::Mismatch("velocity arrays do not match the grid".into()));
    }
    let h = grid.spacing();
    let mut total = 0.0;
    for k in 0..u.cells() {
        let rho: f64 = (0..u.species()).map(|i| u.rho(i)[k]).sum();
        let dv = velocity[k] - velocity_bar[k];
        let density = 0.5 * rho * dv * dv + zero_flow_density(u, ubar, k, mode, params);
        let weight = match weighting {
            Weighting::ThetaBar => ubar.theta()[k],
            Weighting::Unweighted => 1.0,
        };
        total += h * weight * density;
    }
    Ok(total)
}

/// Per-cell `p(U|U_bar)` and `(-rho eta)(U|U_bar)`: the functions minus
/// their linearization about `U_bar` in `(rho_1, ..., rho_n, theta)`.
pub fn relative_second_order(u: &FieldSet, ubar: &FieldSet, params: &MixtureParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if u.cells() != ubar.cells() || u.species() != params.species() || ubar.species() != params.species() {
        return Err(Error::Mismatch("field sets do not match".into()));
    }
    let cw = params.heat_capacity();
    let mut p_rel = Vec::with_capacity(u.cells());
    let mut s_rel = Vec::with_capacity(u.cells());
    for k in 0..u.cells() {
        let (s, sb) = (u.state(k), ubar.state(k));
        let (t, tb) = (s.theta, sb.theta);
        let p = u.pressure(k, params);
        let pb = ubar.pressure(k, params);
        let mut p_lin = pb;
        let mut p_theta = 0.0;
        let rho_eta = mixture_entropy(&s, params)?;
        let rho_eta_bar = mixture_entropy(&sb, params)?;
        // linearization of rho eta about U_bar
        let mut s_lin = rho_eta_bar;
        for j in 0..u.species() {
            let m = params.molar_mass(j);
            let d_rho = s.rho[j] - sb.rho[j];
            p_lin += tb / m * d_rho;
            p_theta += sb.rho[j] / m;
            s_lin += (-(sb.rho[j] / m).ln() / m + cw * tb.ln()) * d_rho;
        }
        p_lin += p_theta * (t - tb);
        s_lin += cw * sb.total_density() / tb * (t - tb);
        p_rel.push(p - p_lin);
        s_rel.push(-(rho_eta - s_lin));
    }
    Ok((p_rel, s_rel))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the log-space residuals.
    pub residual: f64,
}

/// Least-squares slope of `log value` against `log epsilon`.
pub fn convergence_order(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 3 {
        return Err(Error::Params(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some((e, v)) = pairs.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0 && e.is_finite() && v.is_finite())) {
        return Err(Error::Domain(format!("pair ({e}, {v}) is not positive")));
    }
    let xs: Vec<f64> = pairs.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all epsilon values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(OrderFit {
        slope,
        intercept,
        residual,
    })
}
