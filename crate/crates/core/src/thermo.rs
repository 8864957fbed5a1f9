//! Ideal-gas constitutive relations for a simple mixture.
//!
//! Each species carries the Helmholtz free energy density
//! `rho_i psi_i = theta (rho_i/m_i)(ln(rho_i/m_i) - 1) - c_w rho_i theta (ln theta - 1)`
//! and everything else (chemical potentials, entropies, energies, pressures)
//! follows from it. The heat capacity `c_w` is shared by all species.

use crate::error::{Error, Result};
use crate::params::MixtureParams;

/// Floor applied inside logarithms when a caller explicitly tolerates vacuum.
pub const RHO_FLOOR: f64 = 1e-30;

/// Pointwise primal state: partial densities and temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoState {
    pub rho: Vec<f64>,
    pub theta: f64,
}

impl ThermoState {
    pub fn new(rho: Vec<f64>, theta: f64) -> Self {
        Self { rho, theta }
    }

    pub fn total_density(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// Checks that every density and the temperature are strictly positive
    /// and finite, and that the species count matches `params`.
    pub fn check(&self, params: &MixtureParams) -> Result<()> {
        if self.rho.len() != params.species() {
            return Err(Error::Mismatch(format!(
                "state has {} species, parameters have {}",
                self.rho.len(),
                params.species()
            )));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Domain(format!("temperature theta = {} must be positive", self.theta)));
        }
        for (i, &r) in self.rho.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Domain(format!("density rho_{} = {r} must be positive", i + 1)));
            }
        }
        Ok(())
    }
}

/// All quantities derived from the free energy at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoEval {
    /// Partial free energy densities `rho_i psi_i`.
    pub psi: Vec<f64>,
    /// Chemical potentials `mu_i`.
    pub mu: Vec<f64>,
    /// Partial entropy densities `rho_i eta_i`.
    pub eta: Vec<f64>,
    /// Partial internal energy densities `rho_i e_i`.
    pub e: Vec<f64>,
    pub p_partial: Vec<f64>,
    pub p_total: f64,
    pub rho_e_total: f64,
    pub rho_eta_total: f64,
}

/// Entropy variables `(mu_1/theta, ..., mu_n/theta, -1/theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyVars {
    pub w: Vec<f64>,
    pub w_theta: f64,
}

pub fn eval_thermo(state: &ThermoState, params: &MixtureParams) -> Result<ThermoEval> {
    state.check(params)?;
    let n = params.species();
    let cw = params.heat_capacity();
    let theta = state.theta;
    let ln_theta = theta.ln();

    let mut psi = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for (i, &rho) in state.rho.iter().enumerate() {
        let m = params.molar_mass(i);
        let conc = rho / m;
        let ln_c = conc.ln();
        psi.push(theta * conc * (ln_c - 1.0) - cw * rho * theta * (ln_theta - 1.0));
        mu.push(theta / m * ln_c - cw * theta * (ln_theta - 1.0));
        eta.push(-conc * (ln_c - 1.0) + cw * rho * ln_theta);
        e.push(psi[i] + theta * eta[i]);
    }
    let p_partial: Vec<f64> = (0..n).map(|i| -psi[i] + state.rho[i] * mu[i]).collect();
    Ok(ThermoEval {
        p_total: p_partial.iter().sum(),
        rho_e_total: e.iter().sum(),
        rho_eta_total: eta.iter().sum(),
        psi,
        mu,
        eta,
        e,
        p_partial,
    })
}

/// Closed-form partial pressures `rho_i theta / m_i`.
pub fn partial_pressures(state: &ThermoState, params: &MixtureParams) -> Vec<f64> {
    state
        .rho
        .iter()
        .zip(params.molar_masses())
        .map(|(r, m)| r * state.theta / m)
        .collect()
}

pub fn pressure(state: &ThermoState, params: &MixtureParams) -> f64 {
    partial_pressures(state, params).iter().sum()
}

/// Internal energy density `c_w rho theta`.
pub fn internal_energy(state: &ThermoState, params: &MixtureParams) -> f64 {
    params.heat_capacity() * state.total_density() * state.theta
}

pub fn primal_to_entropy(state: &ThermoState, params: &MixtureParams) -> Result<EntropyVars> {
    state.check(params)?;
    let cw = params.heat_capacity();
    let shift = cw * (state.theta.ln() - 1.0);
    let w = state
        .rho
        .iter()
        .zip(params.molar_masses())
        .map(|(r, m)| (r / m).ln() / m - shift)
        .collect();
    Ok(EntropyVars {
        w,
        w_theta: -1.0 / state.theta,
    })
}

pub fn entropy_to_primal(vars: &EntropyVars, params: &MixtureParams) -> Result<ThermoState> {
    if vars.w.len() != params.species() {
        return Err(Error::Mismatch(format!(
            "entropy variables have {} species, parameters have {}",
            vars.w.len(),
            params.species()
        )));
    }
    if !(vars.w_theta < 0.0) {
        return Err(Error::Domain(format!(
            "temperature variable w_theta = {} must be negative",
            vars.w_theta
        )));
    }
    let theta = -1.0 / vars.w_theta;
    let shift = params.heat_capacity() * (theta.ln() - 1.0);
    let rho = vars
        .w
        .iter()
        .zip(params.molar_masses())
        .map(|(w, m)| m * (m * (w + shift)).exp())
        .collect();
    Ok(ThermoState { rho, theta })
}

/// Total entropy density `rho eta`.
pub fn mixture_entropy(state: &ThermoState, params: &MixtureParams) -> Result<f64> {
    state.check(params)?;
    let cw = params.heat_capacity();
    let ln_theta = state.theta.ln();
    Ok(state
        .rho
        .iter()
        .zip(params.molar_masses())
        .map(|(r, m)| {
            let c = r / m;
            -c * (c.ln() - 1.0) + cw * r * ln_theta
        })
        .sum())
}

/// `rho eta` with densities below [`RHO_FLOOR`] floored inside the logarithm.
/// Returns the value and whether the floor was applied.
pub fn mixture_entropy_floored(state: &ThermoState, params: &MixtureParams) -> Result<(f64, bool)> {
    if !(state.theta > 0.0) {
        return Err(Error::Domain(format!("temperature theta = {} must be positive", state.theta)));
    }
    let cw = params.heat_capacity();
    let ln_theta = state.theta.ln();
    let mut floored = false;
    let mut total = 0.0;
    for (i, (&r, &m)) in state.rho.iter().zip(params.molar_masses()).enumerate() {
        if r < 0.0 {
            return Err(Error::Domain(format!("density rho_{} = {r} is negative", i + 1)));
        }
        if r < RHO_FLOOR {
            floored = true;
        }
        let c = r / m;
        let ln_c = (r.max(RHO_FLOOR) / m).ln();
        total += -c * (ln_c - 1.0) + cw * r * ln_theta;
    }
    Ok((total, floored))
}
