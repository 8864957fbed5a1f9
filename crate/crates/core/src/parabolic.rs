//! Zero-mean-flow Maxwell-Stefan-Fourier solver on an interval.
//!
//! Unknowns are the entropy variables `(mu_1/theta, ..., mu_n/theta, -1/theta)`
//! in every cell; one implicit Euler step solves
//!
//! ```text
//! h (rho_i(w') - rho_i) / dt + F_i[k+1/2] - F_i[k-1/2] + h delta E(w_i') = 0
//! h (rho e(w') - rho e) / dt + G[k+1/2] - G[k-1/2] + h delta E(w_theta') = 0
//! ```
//!
//! by damped Newton with a finite-difference Jacobian. Face fluxes are
//! `-D(face state) (w[k+1] - w[k]) / h` with `D` the Onsager matrix, evaluated
//! through the generalized forces and the constrained Maxwell-Stefan solve.
//! Mass fluxes vanish at both ends; the energy flux is `lambda (theta - theta0)`
//! in the outward direction.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{self, Budget};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::MixtureParams;
use crate::stefan::entropy_gradient_fluxes;
use crate::thermo::{entropy_to_primal, primal_to_entropy, EntropyVars, ThermoState};

/// Smallest accepted Newton damping factor (`2^-20`).
const MIN_DAMPING: f64 = 1.0 / 1_048_576.0;

/// Cell-centered densities and temperature, strictly positive everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    rho: Vec<Vec<f64>>,
    theta: Vec<f64>,
}

impl FieldSet {
    pub fn new(rho: Vec<Vec<f64>>, theta: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::Mismatch("field set needs at least one species".into()));
        }
        let cells = theta.len();
        for (i, r) in rho.iter().enumerate() {
            if r.len() != cells {
                return Err(Error::Mismatch(format!(
                    "species {} has {} cells, temperature has {cells}",
                    i + 1,
                    r.len()
                )));
            }
            if let Some(k) = r.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Domain(format!("rho_{} = {} in cell {k}", i + 1, r[k])));
            }
        }
        if let Some(k) = theta.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("theta = {} in cell {k}", theta[k])));
        }
        Ok(Self { rho, theta })
    }

    pub fn uniform(cells: usize, rho: &[f64], theta: f64) -> Result<Self> {
        Self::new(rho.iter().map(|r| vec![*r; cells]).collect(), vec![theta; cells])
    }

    pub fn species(&self) -> usize {
        self.rho.len()
    }

    pub fn cells(&self) -> usize {
        self.theta.len()
    }

    pub fn rho(&self, species: usize) -> &[f64] {
        &self.rho[species]
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn state(&self, cell: usize) -> ThermoState {
        ThermoState::new(self.rho.iter().map(|r| r[cell]).collect(), self.theta[cell])
    }

    pub fn pressure(&self, cell: usize, params: &MixtureParams) -> f64 {
        let theta = self.theta[cell];
        self.rho
            .iter()
            .zip(params.molar_masses())
            .map(|(r, m)| r[cell] * theta / m)
            .sum()
    }

    pub fn entropy_vars(&self, params: &MixtureParams) -> Result<Vec<EntropyVars>> {
        (0..self.cells()).map(|k| primal_to_entropy(&self.state(k), params)).collect()
    }

    fn from_entropy_vars(vars: &[EntropyVars], params: &MixtureParams) -> Result<Self> {
        let n = params.species();
        let mut rho = vec![Vec::with_capacity(vars.len()); n];
        let mut theta = Vec::with_capacity(vars.len());
        for v in vars {
            let s = entropy_to_primal(v, params)?;
            for (i, r) in s.rho.into_iter().enumerate() {
                rho[i].push(r);
            }
            theta.push(s.theta);
        }
        Self::new(rho, theta)
    }

    /// Average over pairs of neighbouring cells (fine grid to coarse grid).
    pub fn coarsened(&self) -> Result<Self> {
        if !self.cells().is_multiple_of(2) {
            return Err(Error::Mismatch(format!("cannot coarsen {} cells", self.cells())));
        }
        let pair = |v: &[f64]| v.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect::<Vec<_>>();
        Self::new(self.rho.iter().map(|r| pair(r)).collect(), pair(&self.theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularization {
    None,
    Laplacian,
    Bilaplacian,
}

impl Regularization {
    fn half_width(self) -> usize {
        match self {
            Regularization::Bilaplacian => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicConfig {
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub regularization: Regularization,
    /// Regularization weight; `None` means `1e-8 h^2`.
    pub reg_delta: Option<f64>,
    pub lambda: f64,
    pub theta0: f64,
    /// Emit a snapshot every this many steps (and at the final time).
    pub output_every: usize,
    pub max_halvings: usize,
}

impl Default for ParabolicConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            regularization: Regularization::Laplacian,
            reg_delta: None,
            lambda: 0.0,
            theta0: 1.0,
            output_every: 1,
            max_halvings: 5,
        }
    }
}

impl ParabolicConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Params(format!("{name} = {v} must be positive")))
            }
        };
        positive(self.dt, "dt")?;
        positive(self.theta0, "theta0")?;
        positive(self.newton_tol, "newton_tol")?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Params(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Params(format!("lambda = {} must be nonnegative", self.lambda)));
        }
        if let Some(d) = self.reg_delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Params(format!("reg_delta = {d} must be nonnegative")));
            }
        }
        if self.newton_max_iter == 0 || self.output_every == 0 {
            return Err(Error::Params("newton_max_iter and output_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Face fluxes, indexed by face `0..=cells`; face `k` sits left of cell `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFluxes {
    pub mass: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub halvings: usize,
    pub mass_change: Vec<f64>,
    pub energy_change: f64,
    /// `(S' - S)/dt` plus the entropy carried out through the boundary.
    pub entropy_production: f64,
    /// `max |p[k+1] - p[k]|`, i.e. `max |grad p| h`.
    pub pressure_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub fields: FieldSet,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub snapshots: Vec<Snapshot>,
    pub reports: Vec<StepReport>,
    pub budgets: Vec<Budget>,
    /// Set when the run stopped before `t_end`.
    pub failure: Option<Error>,
}

#[derive(Debug, Clone)]
pub struct ParabolicSolver {
    grid: Grid1D,
    params: MixtureParams,
    config: ParabolicConfig,
}

impl ParabolicSolver {
    pub fn new(grid: Grid1D, params: MixtureParams, config: ParabolicConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { grid, params, config })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn params(&self) -> &MixtureParams {
        &self.params
    }

    pub fn config(&self) -> &ParabolicConfig {
        &self.config
    }

    fn reg_delta(&self) -> f64 {
        match self.config.regularization {
            Regularization::None => 0.0,
            _ => self.config.reg_delta.unwrap_or(1e-8 * self.grid.spacing().powi(2)),
        }
    }

    fn check_fields(&self, fields: &FieldSet) -> Result<()> {
        if fields.cells() != self.grid.cells() || fields.species() != self.params.species() {
            return Err(Error::Mismatch(format!(
                "fields have {} species on {} cells, solver expects {} on {}",
                fields.species(),
                fields.cells(),
                self.params.species(),
                self.grid.cells()
            )));
        }
        Ok(())
    }

    pub fn assemble_fluxes(&self, fields: &FieldSet) -> Result<FaceFluxes> {
        self.check_fields(fields)?;
        let vars = fields.entropy_vars(&self.params)?;
        self.fluxes_from(fields, &vars)
    }

    fn fluxes_from(&self, fields: &FieldSet, vars: &[EntropyVars]) -> Result<FaceFluxes> {
        let n = self.params.species();
        let cells = self.grid.cells();
        let h = self.grid.spacing();
        let mut mass = vec![vec![0.0; cells + 1]; n];
        let mut energy = vec![0.0; cells + 1];
        let mut grad_w = vec![0.0; n];
        for face in 1..cells {
            let (l, r) = (face - 1, face);
            let state = ThermoState::new(
                (0..n).map(|i| 0.5 * (fields.rho[i][l] + fields.rho[i][r])).collect(),
                0.5 * (fields.theta[l] + fields.theta[r]),
            );
            for i in 0..n {
                grad_w[i] = (vars[r].w[i] - vars[l].w[i]) / h;
            }
            let grad_wt = (vars[r].w_theta - vars[l].w_theta) / h;
            let kappa = self.params.conductivity().kappa(state.theta);
            let f = entropy_gradient_fluxes(&state, &grad_w, grad_wt, &self.params, self.params.epsilon(), kappa)
                .map_err(|e| e.at_face(face))?;
            for i in 0..n {
                mass[i][face] = f.mass[i];
            }
            energy[face] = f.energy;
        }
        let lambda = self.config.lambda;
        let theta0 = self.config.theta0;
        energy[0] = -lambda * (fields.theta[0] - theta0);
        energy[cells] = lambda * (fields.theta[cells - 1] - theta0);
        Ok(FaceFluxes { mass, energy })
    }

    fn regularization_terms(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let delta = self.reg_delta();
        if delta == 0.0 {
            return;
        }
        let comps = self.params.species() + 1;
        let cells = self.grid.cells();
        let h = self.grid.spacing();
        // Neumann Laplacian (1/h^2) times cell differences
        let laplacian = |v: &[f64]| -> Vec<f64> {
            (0..cells)
                .map(|k| {
                    let mut s = 0.0;
                    if k > 0 {
                        s += v[k - 1] - v[k];
                    }
                    if k + 1 < cells {
                        s += v[k + 1] - v[k];
                    }
                    s / (h * h)
                })
                .collect()
        };
        for q in 0..comps {
            let v: Vec<f64> = (0..cells).map(|k| x[k * comps + q]).collect();
            let lv = laplacian(&v);
            let term: Vec<f64> = match self.config.regularization {
                Regularization::Laplacian => lv.iter().map(|l| -l).collect(),
                Regularization::Bilaplacian => laplacian(&lv),
                Regularization::None => unreachable!(),
            };
            for k in 0..cells {
                out[k * comps + q] += h * delta * term[k];
            }
        }
    }

    fn unpack(&self, x: &DVector<f64>) -> Vec<EntropyVars> {
        let n = self.params.species();
        (0..self.grid.cells())
            .map(|k| {
                let base = k * (n + 1);
                EntropyVars {
                    w: (0..n).map(|i| x[base + i]).collect(),
                    w_theta: x[base + n],
                }
            })
            .collect()
    }

    fn pack(&self, vars: &[EntropyVars]) -> DVector<f64> {
        let n = self.params.species();
        let mut x = DVector::zeros(vars.len() * (n + 1));
        for (k, v) in vars.iter().enumerate() {
            for i in 0..n {
                x[k * (n + 1) + i] = v.w[i];
            }
            x[k * (n + 1) + n] = v.w_theta;
        }
        x
    }

    fn residual(&self, x: &DVector<f64>, old: &FieldSet, dt: f64) -> Result<(DVector<f64>, FieldSet)> {
        let n = self.params.species();
        let comps = n + 1;
        let cells = self.grid.cells();
        let h = self.grid.spacing();
        let cw = self.params.heat_capacity();
        let vars = self.unpack(x);
        let fields = FieldSet::from_entropy_vars(&vars, &self.params)?;
        let fluxes = self.fluxes_from(&fields, &vars)?;
        let mut r = DVector::zeros(cells * comps);
        for k in 0..cells {
            let base = k * comps;
            let mut rho_new = 0.0;
            let mut rho_old = 0.0;
            for i in 0..n {
                r[base + i] = h * (fields.rho[i][k] - old.rho[i][k]) / dt + fluxes.mass[i][k + 1] - fluxes.mass[i][k];
                rho_new += fields.rho[i][k];
                rho_old += old.rho[i][k];
            }
            let e_new = cw * rho_new * fields.theta[k];
            let e_old = cw * rho_old * old.theta[k];
            r[base + n] = h * (e_new - e_old) / dt + fluxes.energy[k + 1] - fluxes.energy[k];
        }
        self.regularization_terms(x, &mut r);
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite residual".into()));
        }
        Ok((r, fields))
    }

    fn residual_scales(&self, old: &FieldSet, dt: f64) -> Vec<f64> {
        let n = self.params.species();
        let h = self.grid.spacing();
        let cw = self.params.heat_capacity();
        let mut scales: Vec<f64> = (0..n)
            .map(|i| h * old.rho[i].iter().cloned().fold(0.0, f64::max) / dt)
            .collect();
        let e_max = (0..old.cells())
            .map(|k| cw * (0..n).map(|i| old.rho[i][k]).sum::<f64>() * old.theta[k])
            .fold(0.0, f64::max);
        scales.push(h * e_max / dt);
        scales
    }

    fn scaled_norm(&self, r: &DVector<f64>, scales: &[f64]) -> f64 {
        let comps = scales.len();
        r.iter()
            .enumerate()
            .map(|(j, v)| v.abs() / scales[j % comps])
            .fold(0.0, f64::max)
    }

    fn jacobian(&self, x: &DVector<f64>, r0: &DVector<f64>, old: &FieldSet, dt: f64) -> Result<DMatrix<f64>> {
        let comps = self.params.species() + 1;
        let cells = self.grid.cells();
        let hw = self.config.regularization.half_width();
        let stride = 2 * hw + 1;
        let size = cells * comps;
        let mut jac = DMatrix::zeros(size, size);
        for color in 0..stride.min(cells) {
            for q in 0..comps {
                let mut xp = x.clone();
                let mut steps = Vec::new();
                for k in (color..cells).step_by(stride) {
                    let j = k * comps + q;
                    let step = 1e-7 * x[j].abs().max(1.0);
                    xp[j] += step;
                    steps.push((k, step));
                }
                let (rp, _) = self.residual(&xp, old, dt)?;
                for (k, step) in steps {
                    let col = k * comps + q;
                    let lo = k.saturating_sub(hw);
                    let hi = (k + hw).min(cells - 1);
                    for row_cell in lo..=hi {
                        for qq in 0..comps {
                            let row = row_cell * comps + qq;
                            jac[(row, col)] = (rp[row] - r0[row]) / step;
                        }
                    }
                }
            }
        }
        Ok(jac)
    }

    fn newton(&self, old: &FieldSet, dt: f64) -> Result<(FieldSet, usize, f64)> {
        let scales = self.residual_scales(old, dt);
        let mut x = self.pack(&old.entropy_vars(&self.params)?);
        let (mut r, mut fields) = self.residual(&x, old, dt)?;
        let mut norm = self.scaled_norm(&r, &scales);
        let mut iterations = 0;
        loop {
            if norm <= self.config.newton_tol {
                break;
            }
            if iterations >= self.config.newton_max_iter {
                return Err(Error::NewtonFailure { iterations, residual: norm });
            }
            let jac = self.jacobian(&x, &r, old, dt)?;
            let lu = jac.lu();
            let delta = lu
                .solve(&(-&r))
                .ok_or(Error::NewtonFailure { iterations, residual: norm })?;
            iterations += 1;
            let mut damping = 1.0;
            loop {
                let candidate = &x + &delta * damping;
                if let Ok((rc, fc)) = self.residual(&candidate, old, dt) {
                    let nc = self.scaled_norm(&rc, &scales);
                    if nc < norm {
                        x = candidate;
                        r = rc;
                        fields = fc;
                        norm = nc;
                        break;
                    }
                }
                damping *= 0.5;
                if damping < MIN_DAMPING {
                    return Err(Error::NewtonFailure { iterations, residual: norm });
                }
            }
            if norm <= self.config.newton_tol {
                // one extra full step with the same Jacobian drives the
                // residual toward round-off
                if let Some(polish) = lu.solve(&(-&r)) {
                    let candidate = &x + polish;
                    if let Ok((rc, fc)) = self.residual(&candidate, old, dt) {
                        let nc = self.scaled_norm(&rc, &scales);
                        if nc < norm {
                            fields = fc;
                            norm = nc;
                        }
                    }
                }
                break;
            }
        }
        Ok((fields, iterations, norm))
    }

    fn entropy_outflow(&self, fields: &FieldSet) -> f64 {
        let lambda = self.config.lambda;
        let theta0 = self.config.theta0;
        let t = fields.theta();
        let (tl, tr) = (t[0], t[t.len() - 1]);
        lambda * (tl - theta0) / tl + lambda * (tr - theta0) / tr
    }

    /// One implicit Euler step of size `dt`, halving on Newton failure up to
    /// `max_halvings` times.
    pub fn implicit_euler_step(&self, fields: &FieldSet, dt: f64) -> Result<(FieldSet, StepReport)> {
        self.check_fields(fields)?;
        let (new, iterations, residual, halvings) = self.step_recursive(fields, dt, 0)?;
        let masses_old = diagnostics::species_masses(fields, &self.grid);
        let masses_new = diagnostics::species_masses(&new, &self.grid);
        let energy_change = diagnostics::total_energy(&new, &self.grid, &self.params)
            - diagnostics::total_energy(fields, &self.grid, &self.params);
        let entropy_change = diagnostics::total_entropy(&new, &self.grid, &self.params)?
            - diagnostics::total_entropy(fields, &self.grid, &self.params)?;
        let report = StepReport {
            dt,
            newton_iterations: iterations,
            residual_norm: residual,
            halvings,
            mass_change: masses_new.iter().zip(&masses_old).map(|(a, b)| a - b).collect(),
            energy_change,
            entropy_production: entropy_change / dt + self.entropy_outflow(&new),
            pressure_drift: diagnostics::pressure_drift(&new, &self.params),
        };
        Ok((new, report))
    }

    fn step_recursive(&self, fields: &FieldSet, dt: f64, depth: usize) -> Result<(FieldSet, usize, f64, usize)> {
        match self.newton(fields, dt) {
            Ok((f, it, res)) => Ok((f, it, res, depth)),
            Err(e @ (Error::NewtonFailure { .. } | Error::Domain(_))) => {
                if depth >= self.config.max_halvings {
                    return Err(e);
                }
                let (mid, it1, _, d1) = self.step_recursive(fields, 0.5 * dt, depth + 1)?;
                let (end, it2, res, d2) = self.step_recursive(&mid, 0.5 * dt, depth + 1)?;
                Ok((end, it1 + it2, res, d1.max(d2)))
            }
            Err(e) => Err(e),
        }
    }

    /// Advances `initial` to `t_end`. A step failure ends the run early with
    /// `failure` set; everything computed up to that point is kept.
    pub fn run(&self, initial: &FieldSet) -> Result<Trajectory> {
        self.check_fields(initial)?;
        let t_end = self.config.t_end;
        let mut snapshots = vec![Snapshot {
            time: 0.0,
            fields: initial.clone(),
        }];
        let mut reports = Vec::new();
        let mut iters_since_output = vec![0usize];
        let mut pending_iters = 0;
        let mut current = initial.clone();
        let mut t = 0.0;
        let mut step = 0usize;
        let mut failure = None;
        while t_end - t > 1e-12 * t_end.max(1.0) {
            let dt = self.config.dt.min(t_end - t);
            match self.implicit_euler_step(&current, dt) {
                Ok((next, report)) => {
                    pending_iters += report.newton_iterations;
                    reports.push(report);
                    current = next;
                    step += 1;
                    t = if t_end - (t + dt) <= 1e-12 * t_end.max(1.0) { t_end } else { t + dt };
                    if step.is_multiple_of(self.config.output_every) || t == t_end {
                        snapshots.push(Snapshot {
                            time: t,
                            fields: current.clone(),
                        });
                        iters_since_output.push(pending_iters);
                        pending_iters = 0;
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let boundary = Some((self.config.lambda, self.config.theta0));
        let mut budgets = diagnostics::budgets(&snapshots, &self.grid, &self.params, boundary)?.budgets;
        for (b, it) in budgets.iter_mut().zip(iters_since_output) {
            b.newton_iters = it;
        }
        Ok(Trajectory {
            grid: self.grid,
            snapshots,
            reports,
            budgets,
            failure,
        })
    }
}
