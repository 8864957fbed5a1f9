//! Periodic one-dimensional solver for the full system with barycentric
//! velocity, used to measure how solutions with mass diffusion (`epsilon > 0`)
//! approach those without it.
//!
//! Time stepping is Strang split: half a diffusive step, a full convective
//! Rusanov step, half a diffusive step. The diffusive part uses the same
//! entropy-variable face closure as the zero-flow solver and is sub-cycled
//! explicitly.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::diagnostics::{self, Budget, OrderFit, RelEntropyMode, Weighting};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::MixtureParams;
use crate::parabolic::FieldSet;
use crate::stefan::{entropy_gradient_fluxes, onsager_matrix_with};
use crate::thermo::{mixture_entropy, primal_to_entropy, EntropyVars, ThermoState};

/// Safety factor on the explicit diffusive stability limit `h^2 / (2 D)`.
const DIFFUSIVE_SAFETY: f64 = 0.4;

/// Fraction of the convective limit used when the step is chosen
/// automatically; the diffusive half step may lower the limit slightly.
const DT_SAFETY: f64 = 0.8;

/// Densities, momentum `rho v` and total energy `rho e + rho v^2 / 2` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedState {
    rho: Vec<Vec<f64>>,
    momentum: Vec<f64>,
    energy: Vec<f64>,
}

/// Domain totals of the conserved quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Totals {
    pub masses: Vec<f64>,
    pub momentum: f64,
    pub energy: f64,
}

impl ConservedState {
    pub fn new(rho: Vec<Vec<f64>>, momentum: Vec<f64>, energy: Vec<f64>, params: &MixtureParams) -> Result<Self> {
        let state = Self { rho, momentum, energy };
        state.validate(params)?;
        Ok(state)
    }

    pub fn from_primal(fields: &FieldSet, velocity: &[f64], params: &MixtureParams) -> Result<Self> {
        if velocity.len() != fields.cells() {
            return Err(Error::Mismatch("velocity does not match the field set".into()));
        }
        let cw = params.heat_capacity();
        let n = fields.species();
        let rho: Vec<Vec<f64>> = (0..n).map(|i| fields.rho(i).to_vec()).collect();
        let mut momentum = Vec::with_capacity(fields.cells());
        let mut energy = Vec::with_capacity(fields.cells());
        for (k, &v) in velocity.iter().enumerate() {
            let total: f64 = (0..n).map(|i| rho[i][k]).sum();
            momentum.push(total * v);
            energy.push(cw * total * fields.theta()[k] + 0.5 * total * v * v);
        }
        Self::new(rho, momentum, energy, params)
    }

    fn validate(&self, params: &MixtureParams) -> Result<()> {
        let cells = self.momentum.len();
        if self.rho.len() != params.species() || self.energy.len() != cells || self.rho.iter().any(|r| r.len() != cells) {
            return Err(Error::Mismatch("conserved state arrays are inconsistent".into()));
        }
        for k in 0..cells {
            for (i, r) in self.rho.iter().enumerate() {
                if !(r[k] > 0.0 && r[k].is_finite()) {
                    return Err(Error::Domain(format!("rho_{} = {} in cell {k}", i + 1, r[k])));
                }
            }
            let theta = self.theta(k, params);
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(Error::Domain(format!("recovered temperature {theta} in cell {k}")));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.momentum.len()
    }

    pub fn rho(&self, species: usize) -> &[f64] {
        &self.rho[species]
    }

    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    fn total_density(&self, k: usize) -> f64 {
        self.rho.iter().map(|r| r[k]).sum()
    }

    pub fn velocity(&self, k: usize) -> f64 {
        self.momentum[k] / self.total_density(k)
    }

    /// `theta = (E - rho v^2 / 2) / (c_w rho)`.
    pub fn theta(&self, k: usize, params: &MixtureParams) -> f64 {
        let rho = self.total_density(k);
        let kinetic = 0.5 * self.momentum[k] * self.momentum[k] / rho;
        (self.energy[k] - kinetic) / (params.heat_capacity() * rho)
    }

    pub fn thermo_state(&self, k: usize, params: &MixtureParams) -> ThermoState {
        ThermoState::new(self.rho.iter().map(|r| r[k]).collect(), self.theta(k, params))
    }

    pub fn to_primal(&self, params: &MixtureParams) -> Result<(FieldSet, Vec<f64>)> {
        let fields = FieldSet::new(self.rho.clone(), (0..self.cells()).map(|k| self.theta(k, params)).collect())?;
        Ok((fields, (0..self.cells()).map(|k| self.velocity(k)).collect()))
    }

    pub fn totals(&self, grid: &Grid1D) -> Totals {
        let h = grid.spacing();
        Totals {
            masses: self.rho.iter().map(|r| r.iter().map(|v| h * v).sum()).collect(),
            momentum: self.momentum.iter().map(|v| h * v).sum(),
            energy: self.energy.iter().map(|v| h * v).sum(),
        }
    }

    pub fn total_entropy(&self, grid: &Grid1D, params: &MixtureParams) -> Result<f64> {
        let h = grid.spacing();
        let mut s = 0.0;
        for k in 0..self.cells() {
            s += h * mixture_entropy(&self.thermo_state(k, params), params)?;
        }
        Ok(s)
    }
}

/// Upper bound on the characteristic speed in cell `k`:
/// `|v| + sqrt((1 + 1/(c_w m_min)) theta / m_min)`.
fn wavespeed(state: &ConservedState, k: usize, params: &MixtureParams) -> f64 {
    let m_min = params.min_molar_mass();
    let gamma = 1.0 + 1.0 / (params.heat_capacity() * m_min);
    state.velocity(k).abs() + (gamma * state.theta(k, params) / m_min).sqrt()
}

/// Largest stable time step `cfl h / lambda_max`.
pub fn stable_dt(state: &ConservedState, grid: &Grid1D, params: &MixtureParams, cfl: f64) -> f64 {
    let lambda = (0..state.cells()).map(|k| wavespeed(state, k, params)).fold(0.0, f64::max);
    cfl * grid.spacing() / lambda
}

/// Physical flux `(rho_i v, rho v^2 + p, (E + p) v)` in cell `k`.
fn physical_flux(state: &ConservedState, k: usize, params: &MixtureParams, out: &mut [f64]) {
    let n = params.species();
    let v = state.velocity(k);
    let theta = state.theta(k, params);
    let p: f64 = (0..n).map(|i| state.rho[i][k] * theta / params.molar_mass(i)).sum();
    for i in 0..n {
        out[i] = state.rho[i][k] * v;
    }
    out[n] = state.momentum[k] * v + p;
    out[n + 1] = (state.energy[k] + p) * v;
}

fn conserved(state: &ConservedState, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..n {
        out[i] = state.rho[i][k];
    }
    out[n] = state.momentum[k];
    out[n + 1] = state.energy[k];
}

/// One explicit Rusanov step of the convective part on the periodic grid.
pub fn hyperbolic_step(
    state: &ConservedState,
    grid: &Grid1D,
    params: &MixtureParams,
    dt: f64,
    cfl: f64,
) -> Result<ConservedState> {
    let cells = state.cells();
    if cells != grid.cells() {
        return Err(Error::Mismatch(format!("state has {cells} cells, grid has {}", grid.cells())));
    }
    let limit = stable_dt(state, grid, params, cfl);
    if dt > limit {
        return Err(Error::Cfl { dt, limit });
    }
    let n = params.species();
    let width = n + 2;
    let speeds: Vec<f64> = (0..cells).map(|k| wavespeed(state, k, params)).collect();
    let mut flux_cell = vec![0.0; cells * width];
    let mut cons = vec![0.0; cells * width];
    for k in 0..cells {
        physical_flux(state, k, params, &mut flux_cell[k * width..(k + 1) * width]);
        conserved(state, k, n, &mut cons[k * width..(k + 1) * width]);
    }
    // face k sits between cell k and cell k+1 (periodic)
    let mut face_flux = vec![0.0; cells * width];
    for k in 0..cells {
        let r = (k + 1) % cells;
        let a = speeds[k].max(speeds[r]);
        for q in 0..width {
            face_flux[k * width + q] = 0.5 * (flux_cell[k * width + q] + flux_cell[r * width + q])
                - 0.5 * a * (cons[r * width + q] - cons[k * width + q]);
        }
    }
    let ratio = dt / grid.spacing();
    let mut next = state.clone();
    for k in 0..cells {
        let l = (k + cells - 1) % cells;
        let delta = |q: usize| ratio * (face_flux[k * width + q] - face_flux[l * width + q]);
        for i in 0..n {
            next.rho[i][k] -= delta(i);
        }
        next.momentum[k] -= delta(n);
        next.energy[k] -= delta(n + 1);
    }
    next.validate(params)?;
    Ok(next)
}

/// Inverse Hessian-free bound on the diffusion rate: the largest eigenvalue
/// of `D H`, `D` the Onsager matrix and `H` the Hessian of `-rho eta` in
/// `(rho_1, ..., rho_n, rho e)`.
fn diffusion_rate(state: &ThermoState, params: &MixtureParams, epsilon: f64, kappa: f64) -> Result<f64> {
    let n = params.species();
    let onsager = onsager_matrix_with(state, params, epsilon, kappa)?;
    let rho = state.total_density();
    let theta = state.theta;
    let cw = params.heat_capacity();
    let mut hess = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            hess[(i, j)] = cw / rho + if i == j { 1.0 / (params.molar_mass(i) * state.rho[i]) } else { 0.0 };
        }
        hess[(i, n)] = -1.0 / (rho * theta);
        hess[(n, i)] = -1.0 / (rho * theta);
    }
    hess[(n, n)] = 1.0 / (cw * rho * theta * theta);
    let rate = match hess.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let sym = l.transpose() * onsager * &l;
            SymmetricEigen::new(sym).eigenvalues.max()
        }
        None => onsager.norm() * hess.norm(),
    };
    Ok(rate.max(0.0))
}

/// Mass diffusion and heat conduction over `dt`, sub-cycled explicitly.
/// Momentum is unchanged; `epsilon = 0` turns mass diffusion off and
/// `kappa_scale` multiplies the conductivity.
pub fn diffusive_step(
    state: &ConservedState,
    grid: &Grid1D,
    params: &MixtureParams,
    dt: f64,
    epsilon: f64,
    kappa_scale: f64,
) -> Result<ConservedState> {
    if epsilon < 0.0 || kappa_scale < 0.0 {
        return Err(Error::Params("epsilon and kappa scale must be nonnegative".into()));
    }
    if (epsilon == 0.0 && kappa_scale == 0.0) || dt == 0.0 {
        return Ok(state.clone());
    }
    let h = grid.spacing();
    let mut rate: f64 = 0.0;
    for k in 0..state.cells() {
        let s = state.thermo_state(k, params);
        let kappa = kappa_scale * params.conductivity().kappa(s.theta);
        rate = rate.max(diffusion_rate(&s, params, epsilon, kappa)?);
    }
    let substeps = if rate > 0.0 {
        (dt * 2.0 * rate / (DIFFUSIVE_SAFETY * h * h)).ceil().max(1.0) as usize
    } else {
        1
    };
    let tau = dt / substeps as f64;
    let mut current = state.clone();
    for _ in 0..substeps {
        current = diffusive_substep(&current, grid, params, tau, epsilon, kappa_scale)?;
    }
    Ok(current)
}

fn diffusive_substep(
    state: &ConservedState,
    grid: &Grid1D,
    params: &MixtureParams,
    tau: f64,
    epsilon: f64,
    kappa_scale: f64,
) -> Result<ConservedState> {
    let n = params.species();
    let cells = state.cells();
    let h = grid.spacing();
    let states: Vec<ThermoState> = (0..cells).map(|k| state.thermo_state(k, params)).collect();
    let vars: Vec<EntropyVars> = states.iter().map(|s| primal_to_entropy(s, params)).collect::<Result<_>>()?;
    let mut mass = vec![vec![0.0; cells]; n];
    let mut energy = vec![0.0; cells];
    let mut grad_w = vec![0.0; n];
    for k in 0..cells {
        let r = (k + 1) % cells;
        let face = ThermoState::new(
            (0..n).map(|i| 0.5 * (states[k].rho[i] + states[r].rho[i])).collect(),
            0.5 * (states[k].theta + states[r].theta),
        );
        for i in 0..n {
            grad_w[i] = (vars[r].w[i] - vars[k].w[i]) / h;
        }
        let grad_wt = (vars[r].w_theta - vars[k].w_theta) / h;
        let kappa = kappa_scale * params.conductivity().kappa(face.theta);
        let f = entropy_gradient_fluxes(&face, &grad_w, grad_wt, params, epsilon, kappa).map_err(|e| e.at_face(k))?;
        for i in 0..n {
            mass[i][k] = f.mass[i];
        }
        energy[k] = f.energy;
    }
    let ratio = tau / h;
    let mut next = state.clone();
    for k in 0..cells {
        let l = (k + cells - 1) % cells;
        for i in 0..n {
            next.rho[i][k] -= ratio * (mass[i][k] - mass[i][l]);
        }
        next.energy[k] -= ratio * (energy[k] - energy[l]);
    }
    next.validate(params)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Config {
    pub grid: Grid1D,
    pub t_end: f64,
    pub cfl: f64,
    /// Fixed step; `None` picks a fraction of `cfl h / lambda_max` every step.
    pub dt: Option<f64>,
    pub output_every: usize,
}

impl Type1Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Params(format!("cfl = {} must lie in (0, 1)", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Params(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Params(format!("dt = {dt} must be positive")));
            }
        }
        if self.output_every == 0 {
            return Err(Error::Params("output_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Snapshot {
    pub time: f64,
    pub state: ConservedState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Budget {
    pub time: f64,
    pub totals: Totals,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Trajectory {
    pub grid: Grid1D,
    pub epsilon: f64,
    pub kappa_scale: f64,
    pub steps: usize,
    pub snapshots: Vec<Type1Snapshot>,
    pub budgets: Vec<Type1Budget>,
}

impl Type1Trajectory {
    /// Rows in the shared budget schema. `energy` is the total energy
    /// including the kinetic part; the production rate is the
    /// finite-difference entropy rate between snapshots.
    pub fn budget_series(&self, params: &MixtureParams) -> Result<Vec<Budget>> {
        let mut out: Vec<Budget> = Vec::with_capacity(self.budgets.len());
        for (b, snap) in self.budgets.iter().zip(&self.snapshots) {
            let (fields, _) = snap.state.to_primal(params)?;
            let production = match out.last() {
                Some(prev) => (b.entropy - prev.entropy) / (b.time - prev.time),
                None => 0.0,
            };
            out.push(Budget {
                time: b.time,
                masses: b.totals.masses.clone(),
                energy: b.totals.energy,
                entropy: b.entropy,
                entropy_production: production,
                boundary_heat_flow: 0.0,
                pressure_drift: diagnostics::pressure_drift(&fields, params),
                newton_iters: 0,
            });
        }
        Ok(out)
    }
}

/// Strang-split run from `initial` to `config.t_end`.
pub fn run_type1(
    config: &Type1Config,
    initial: &ConservedState,
    params: &MixtureParams,
    epsilon: f64,
    kappa_scale: f64,
) -> Result<Type1Trajectory> {
    config.validate()?;
    initial.validate(params)?;
    let grid = &config.grid;
    if initial.cells() != grid.cells() {
        return Err(Error::Mismatch("initial state does not match the grid".into()));
    }
    let budget = |time: f64, s: &ConservedState| -> Result<Type1Budget> {
        Ok(Type1Budget {
            time,
            totals: s.totals(grid),
            entropy: s.total_entropy(grid, params)?,
        })
    };
    let mut snapshots = vec![Type1Snapshot {
        time: 0.0,
        state: initial.clone(),
    }];
    let mut budgets = vec![budget(0.0, initial)?];
    let mut current = initial.clone();
    let mut t = 0.0;
    let mut steps: usize = 0;
    let t_end = config.t_end;
    while t_end - t > 1e-12 * t_end.max(1.0) {
        let dt = config
            .dt
            .unwrap_or_else(|| DT_SAFETY * stable_dt(&current, grid, params, config.cfl))
            .min(t_end - t);
        current = diffusive_step(&current, grid, params, 0.5 * dt, epsilon, kappa_scale)?;
        current = hyperbolic_step(&current, grid, params, dt, config.cfl)?;
        current = diffusive_step(&current, grid, params, 0.5 * dt, epsilon, kappa_scale)?;
        steps += 1;
        t = if t_end - (t + dt) <= 1e-12 * t_end.max(1.0) { t_end } else { t + dt };
        if steps.is_multiple_of(config.output_every) || t == t_end {
            budgets.push(budget(t, &current)?);
            snapshots.push(Type1Snapshot {
                time: t,
                state: current.clone(),
            });
        }
    }
    Ok(Type1Trajectory {
        grid: *grid,
        epsilon,
        kappa_scale,
        steps,
        snapshots,
        budgets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    /// Conductivity held fixed; the reference has `epsilon = 0` only.
    Fixed,
    /// Conductivity scaled by `epsilon / epsilon_max`; the reference has
    /// `epsilon = kappa = 0`.
    Joint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxConfig {
    pub epsilon_list: Vec<f64>,
    pub kappa_mode: KappaMode,
    pub cfl: f64,
    pub grid: Grid1D,
    pub t_end: f64,
    /// Admissibility bounds `delta <= rho_j, theta <= big_m` that are monitored.
    pub delta: f64,
    pub big_m: f64,
    pub mode: RelEntropyMode,
    pub weighting: Weighting,
}

impl RelaxConfig {
    pub fn new(grid: Grid1D, t_end: f64) -> Self {
        Self {
            epsilon_list: vec![0.1, 0.05, 0.025, 0.0125],
            kappa_mode: KappaMode::Fixed,
            cfl: 0.4,
            grid,
            t_end,
            delta: 1e-3,
            big_m: 1e3,
            mode: RelEntropyMode::Bregman,
            weighting: Weighting::ThetaBar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_list.is_empty() {
            return Err(Error::Params("epsilon list is empty".into()));
        }
        if self.epsilon_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Params("epsilon values must be positive".into()));
        }
        if self.epsilon_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Params("epsilon values must decrease".into()));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Params(format!("cfl = {} must lie in (0, 1)", self.cfl)));
        }
        if !(self.delta > 0.0 && self.big_m > self.delta) {
            return Err(Error::Params("bounds must satisfy 0 < delta < M".into()));
        }
        Ok(())
    }

    fn kappa_scale(&self, epsilon: f64) -> f64 {
        match self.kappa_mode {
            KappaMode::Fixed => 1.0,
            KappaMode::Joint => epsilon / self.epsilon_list[0],
        }
    }

    fn reference_kappa_scale(&self) -> f64 {
        match self.kappa_mode {
            KappaMode::Fixed => 1.0,
            KappaMode::Joint => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub kappa_scale: f64,
    pub sup_relative_entropy: f64,
    pub final_relative_entropy: f64,
    pub bound_violations: usize,
    /// `(t, H(t))` at every step.
    pub series: Vec<(f64, f64)>,
    pub trajectory: Option<Type1Trajectory>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub kappa_mode: KappaMode,
    pub dt: f64,
    pub entries: Vec<SweepEntry>,
    /// Log-log fit of the peak relative entropy against epsilon.
    pub fit: Option<OrderFit>,
    /// Peak relative entropy strictly decreases along the epsilon list.
    pub monotone: bool,
    pub reference: Option<Type1Trajectory>,
    pub reference_failure: Option<String>,
}

fn count_violations(traj: &Type1Trajectory, params: &MixtureParams, delta: f64, big_m: f64) -> usize {
    let inside = |v: f64| v >= delta && v <= big_m;
    traj.snapshots
        .iter()
        .map(|s| {
            (0..s.state.cells())
                .filter(|&k| {
                    !inside(s.state.theta(k, params)) || (0..params.species()).any(|i| !inside(s.state.rho(i)[k]))
                })
                .count()
        })
        .sum()
}

fn relative_entropy_series(
    run: &Type1Trajectory,
    reference: &Type1Trajectory,
    config: &RelaxConfig,
    params: &MixtureParams,
) -> Result<Vec<(f64, f64)>> {
    if run.snapshots.len() != reference.snapshots.len() {
        return Err(Error::Mismatch("family member and reference have different step counts".into()));
    }
    run.snapshots
        .iter()
        .zip(&reference.snapshots)
        .map(|(a, b)| {
            let (fa, va) = a.state.to_primal(params)?;
            let (fb, vb) = b.state.to_primal(params)?;
            let h = diagnostics::relative_entropy_full(&fa, &va, &fb, &vb, &config.grid, config.mode, config.weighting, params)?;
            Ok((a.time, h))
        })
        .collect()
}

/// Runs the reference and every member of the epsilon family from the same
/// initial data with a common fixed time step and compares them in relative
/// entropy. Members run in parallel; the report is independent of
/// completion order.
pub fn epsilon_sweep(config: &RelaxConfig, initial: &ConservedState, params: &MixtureParams) -> Result<SweepReport> {
    config.validate()?;
    let dt = DT_SAFETY * stable_dt(initial, &config.grid, params, config.cfl);
    let run_cfg = Type1Config {
        grid: config.grid,
        t_end: config.t_end,
        cfl: config.cfl,
        dt: Some(dt),
        output_every: 1,
    };
    let mut jobs: Vec<(f64, f64)> = vec![(0.0, config.reference_kappa_scale())];
    jobs.extend(config.epsilon_list.iter().map(|&e| (e, config.kappa_scale(e))));
    let runs: Vec<Result<Type1Trajectory>> = jobs
        .par_iter()
        .map(|&(eps, ks)| run_type1(&run_cfg, initial, params, eps, ks))
        .collect();
    let mut runs = runs.into_iter();
    let reference = runs.next().expect("reference job");
    let reference = match reference {
        Ok(r) => r,
        Err(e) => {
            return Ok(SweepReport {
                kappa_mode: config.kappa_mode,
                dt,
                entries: Vec::new(),
                fit: None,
                monotone: false,
                reference: None,
                reference_failure: Some(e.to_string()),
            })
        }
    };
    let mut entries = Vec::with_capacity(config.epsilon_list.len());
    for (&(eps, ks), run) in jobs[1..].iter().zip(runs) {
        let entry = run
            .and_then(|traj| {
                let series = relative_entropy_series(&traj, &reference, config, params)?;
                Ok(SweepEntry {
                    epsilon: eps,
                    kappa_scale: ks,
                    sup_relative_entropy: series.iter().map(|(_, h)| *h).fold(0.0, f64::max),
                    final_relative_entropy: series.last().map(|(_, h)| *h).unwrap_or(0.0),
                    bound_violations: count_violations(&traj, params, config.delta, config.big_m),
                    series,
                    trajectory: Some(traj),
                    failure: None,
                })
            })
            .unwrap_or_else(|e| SweepEntry {
                epsilon: eps,
                kappa_scale: ks,
                sup_relative_entropy: f64::NAN,
                final_relative_entropy: f64::NAN,
                bound_violations: 0,
                series: Vec::new(),
                trajectory: None,
                failure: Some(e.to_string()),
            });
        entries.push(entry);
    }
    let complete = entries.iter().all(|e| e.failure.is_none());
    let monotone = complete
        && entries
            .windows(2)
            .all(|w| w[1].sup_relative_entropy < w[0].sup_relative_entropy);
    let fit = if complete && entries.len() >= 3 {
        let pairs: Vec<(f64, f64)> = entries.iter().map(|e| (e.epsilon, e.sup_relative_entropy)).collect();
        diagnostics::convergence_order(&pairs).ok()
    } else {
        None
    };
    Ok(SweepReport {
        kappa_mode: config.kappa_mode,
        dt,
        entries,
        fit,
        monotone,
        reference: Some(reference),
        reference_failure: None,
    })
}

/// Smooth periodic two-species test case used by the relaxation sweeps:
/// opposite sine perturbations of the densities, a cosine temperature
/// perturbation and a sine velocity. Matches the default run configuration.
pub fn smooth_two_species(grid: &Grid1D, params: &MixtureParams) -> Result<ConservedState> {
    let k = 2.0 * std::f64::consts::PI / grid.length();
    let x = grid.cell_centers();
    let fields = FieldSet::new(
        vec![
            x.iter().map(|x| 1.0 + 0.2 * (k * x).sin()).collect(),
            x.iter().map(|x| 1.0 - 0.2 * (k * x).sin()).collect(),
        ],
        x.iter().map(|x| 1.0 + 0.1 * (k * x + std::f64::consts::FRAC_PI_2).sin()).collect(),
    )?;
    let velocity: Vec<f64> = x.iter().map(|x| 0.1 * (k * x).sin()).collect();
    ConservedState::from_primal(&fields, &velocity, params)
}
