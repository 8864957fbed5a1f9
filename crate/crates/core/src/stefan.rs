//! Maxwell-Stefan closure.
//!
//! The diffusional velocities solve the singular friction system
//!
//! ```text
//! -theta * sum_{j != i} b_ij rho_i rho_j (u_i - u_j) = eps * d_i,    sum_i rho_i u_i = 0
//! ```
//!
//! With `B` the friction matrix (`B_ii = theta sum_{j!=i} b_ij rho_i rho_j`,
//! `B_ij = -theta b_ij rho_i rho_j`) the left side is `-(B u)_i`. The system is
//! solved through the Bott-Duffin inverse of the symmetrically scaled matrix
//! `S^-1 B S^-1`, `S = diag(sqrt(rho_i))`, on the complement of `sqrt(rho)`.
//!
//! Vector quantities are stored as `n x dim` matrices: one row per species,
//! one column per spatial component.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::MixtureParams;
use crate::thermo::{eval_thermo, ThermoState, RHO_FLOOR};

/// Relative tolerance on `sum_i rhs_i = 0` accepted by [`bott_duffin_solve`].
pub const RANGE_TOLERANCE: f64 = 1e-10;

/// Spatial gradients and body forces entering the generalized forces.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientInput {
    pub grad_rho: DMatrix<f64>,
    pub grad_theta: DVector<f64>,
    pub grad_p: DVector<f64>,
    pub body_forces: DMatrix<f64>,
}

impl GradientInput {
    /// Builds the input from density and temperature gradients; `grad_p` is
    /// obtained from the ideal-gas pressure by the chain rule and body forces
    /// are zero.
    pub fn from_primal(
        state: &ThermoState,
        params: &MixtureParams,
        grad_rho: DMatrix<f64>,
        grad_theta: DVector<f64>,
    ) -> Result<Self> {
        state.check(params)?;
        let n = params.species();
        let dim = grad_theta.len();
        if grad_rho.nrows() != n || grad_rho.ncols() != dim {
            return Err(Error::Mismatch(format!(
                "density gradients are {}x{}, expected {n}x{dim}",
                grad_rho.nrows(),
                grad_rho.ncols()
            )));
        }
        let mut grad_p = DVector::zeros(dim);
        for i in 0..n {
            let m = params.molar_mass(i);
            for c in 0..dim {
                grad_p[c] += (state.theta * grad_rho[(i, c)] + state.rho[i] * grad_theta[c]) / m;
            }
        }
        Ok(Self {
            grad_rho,
            grad_theta,
            grad_p,
            body_forces: DMatrix::zeros(n, dim),
        })
    }

    pub fn with_body_forces(mut self, body_forces: DMatrix<f64>) -> Result<Self> {
        if body_forces.shape() != self.grad_rho.shape() {
            return Err(Error::Mismatch(format!(
                "body forces are {:?}, expected {:?}",
                body_forces.shape(),
                self.grad_rho.shape()
            )));
        }
        self.body_forces = body_forces;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.grad_theta.len()
    }

    /// `rho b = sum_i rho_i b_i`.
    pub fn total_body_force(&self, state: &ThermoState) -> DVector<f64> {
        let mut total = DVector::zeros(self.dim());
        for (i, r) in state.rho.iter().enumerate() {
            total += self.body_forces.row(i).transpose() * *r;
        }
        total
    }
}

/// Generalized forces
/// `d_i = (rho_i/rho)(rho b - grad p) + rho_i theta grad(mu_i/theta) - theta (rho_i e_i + p_i) grad(1/theta) - rho_i b_i`
/// with the gradients of `mu_i/theta` and `1/theta` expanded through the
/// ideal-gas relations.
pub fn generalized_forces(
    state: &ThermoState,
    grads: &GradientInput,
    params: &MixtureParams,
) -> Result<DMatrix<f64>> {
    let ev = eval_thermo(state, params)?;
    let n = params.species();
    let dim = grads.dim();
    if grads.grad_rho.shape() != (n, dim) || grads.grad_p.len() != dim || grads.body_forces.shape() != (n, dim) {
        return Err(Error::Mismatch("gradient input shapes are inconsistent".into()));
    }
    let theta = state.theta;
    let rho = state.total_density();
    let cw = params.heat_capacity();
    let rho_b = grads.total_body_force(state);

    let mut d = DMatrix::zeros(n, dim);
    let mut term_scale = vec![0.0; dim];
    for i in 0..n {
        let r = state.rho[i];
        let m = params.molar_mass(i);
        let enthalpy = ev.e[i] + ev.p_partial[i];
        for c in 0..dim {
            let gt = grads.grad_theta[c];
            let grad_w = grads.grad_rho[(i, c)] / (m * r) - cw * gt / theta;
            let grad_inv_theta = -gt / (theta * theta);
            let terms = [
                r / rho * (rho_b[c] - grads.grad_p[c]),
                r * theta * grad_w,
                -theta * enthalpy * grad_inv_theta,
                -r * grads.body_forces[(i, c)],
            ];
            d[(i, c)] = terms.iter().sum();
            term_scale[c] += terms.iter().map(|t| t.abs()).sum::<f64>();
        }
    }
    close_forces(&mut d, state, &term_scale)?;
    Ok(d)
}

/// Checks `sum_i d_i = 0` against the size of the terms that produced the
/// forces and removes the rounding residual along `rho_i / rho`, so that
/// nearly cancelling forces still pass the range condition of the solve.
fn close_forces(d: &mut DMatrix<f64>, state: &ThermoState, term_scale: &[f64]) -> Result<()> {
    let rho = state.total_density();
    for (c, scale) in term_scale.iter().enumerate() {
        let sum: f64 = d.column(c).iter().sum();
        if !sum.is_finite() || sum.abs() > RANGE_TOLERANCE * scale {
            return Err(Error::Inconsistent(format!(
                "forces in component {c} sum to {sum:.3e} (term scale {scale:.3e}); is grad_p consistent?"
            )));
        }
        for (i, r) in state.rho.iter().enumerate() {
            d[(i, c)] -= r / rho * sum;
        }
    }
    Ok(())
}

/// Generalized forces (zero body forces) from gradients of the entropy
/// variables. `grad_p` follows from Gibbs-Duhem:
/// `grad p = theta sum_j rho_j grad w_j + theta (rho e + p) grad w_theta`.
pub fn generalized_forces_entropy(
    state: &ThermoState,
    grad_w: &DMatrix<f64>,
    grad_w_theta: &DVector<f64>,
    params: &MixtureParams,
) -> Result<DMatrix<f64>> {
    let ev = eval_thermo(state, params)?;
    let n = params.species();
    let dim = grad_w_theta.len();
    if grad_w.shape() != (n, dim) {
        return Err(Error::Mismatch(format!(
            "entropy-variable gradients are {:?}, expected ({n}, {dim})",
            grad_w.shape()
        )));
    }
    let theta = state.theta;
    let rho = state.total_density();
    let total_enthalpy = ev.rho_e_total + ev.p_total;
    let mut d = DMatrix::zeros(n, dim);
    let mut term_scale = vec![0.0; dim];
    for c in 0..dim {
        let gwt = grad_w_theta[c];
        let grad_p = theta * (0..n).map(|j| state.rho[j] * grad_w[(j, c)]).sum::<f64>() + theta * total_enthalpy * gwt;
        for i in 0..n {
            let r = state.rho[i];
            let enthalpy = ev.e[i] + ev.p_partial[i];
            let terms = [-r / rho * grad_p, r * theta * grad_w[(i, c)], theta * enthalpy * gwt];
            d[(i, c)] = terms.iter().sum();
            term_scale[c] += terms.iter().map(|t| t.abs()).sum::<f64>();
        }
    }
    close_forces(&mut d, state, &term_scale)?;
    Ok(d)
}

/// Friction matrix `B`; `-(B u)_i` is the left side of the Maxwell-Stefan
/// system. Symmetric positive semi-definite with `B (1,...,1)^T = 0`.
pub fn friction_matrix(state: &ThermoState, params: &MixtureParams) -> Result<DMatrix<f64>> {
    if state.rho.len() != params.species() {
        return Err(Error::Mismatch("state and parameters disagree on species count".into()));
    }
    if !(state.theta > 0.0 && state.theta.is_finite()) {
        return Err(Error::Domain(format!("temperature theta = {} must be positive", state.theta)));
    }
    if let Some(i) = state.rho.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::Domain(format!("density rho_{} = {} is invalid", i + 1, state.rho[i])));
    }
    let n = params.species();
    let theta = state.theta;
    let friction = params.friction();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = theta * friction.coefficient(i, j, theta) * state.rho[i] * state.rho[j];
                b[(i, j)] = -v;
                b[(i, i)] += v;
            }
        }
    }
    Ok(b)
}

/// Bott-Duffin inverse of the scaled friction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BottDuffin {
    /// `P (P Bs P + I - P)^-1 P` in the scaled coordinates; rows and columns
    /// of vacuum species are zero.
    pub inverse: DMatrix<f64>,
    sqrt_rho: Vec<f64>,
    vacuum: Vec<bool>,
}

impl BottDuffin {
    pub fn is_degenerate(&self) -> bool {
        self.vacuum.iter().any(|v| *v)
    }

    pub fn vacuum(&self) -> &[bool] {
        &self.vacuum
    }

    /// Operator `G = S^-1 A S^-1` with `u = -G rhs`; vacuum rows are zero.
    pub fn velocity_operator(&self) -> DMatrix<f64> {
        let n = self.sqrt_rho.len();
        DMatrix::from_fn(n, n, |i, j| {
            if self.vacuum[i] || self.vacuum[j] {
                0.0
            } else {
                self.inverse[(i, j)] / (self.sqrt_rho[i] * self.sqrt_rho[j])
            }
        })
    }

    /// Constrained velocities for a right-hand side that already satisfies
    /// the range condition on the support.
    fn velocities(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        -(self.velocity_operator() * rhs)
    }
}

pub fn bott_duffin_inverse(friction: &DMatrix<f64>, rho: &[f64]) -> Result<BottDuffin> {
    let n = rho.len();
    if friction.shape() != (n, n) {
        return Err(Error::Mismatch(format!(
            "friction matrix is {:?} but there are {n} densities",
            friction.shape()
        )));
    }
    if let Some(i) = rho.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::Domain(format!("density rho_{} = {} is invalid", i + 1, rho[i])));
    }
    let vacuum: Vec<bool> = rho.iter().map(|r| *r < RHO_FLOOR).collect();
    let support: Vec<usize> = (0..n).filter(|&i| !vacuum[i]).collect();
    if support.is_empty() {
        return Err(Error::Degenerate("every species is below the vacuum floor".into()));
    }
    let sqrt_rho: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let k = support.len();
    let s = DVector::from_iterator(k, support.iter().map(|&i| sqrt_rho[i]));
    let scaled = DMatrix::from_fn(k, k, |a, b| {
        friction[(support[a], support[b])] / (s[a] * s[b])
    });
    let s_hat = &s / s.norm();
    let projector = DMatrix::identity(k, k) - &s_hat * s_hat.transpose();
    let complement = DMatrix::identity(k, k) - &projector;
    let system = &projector * &scaled * &projector + complement;
    let system_inv = system.try_inverse().ok_or_else(|| {
        Error::Degenerate("scaled friction system is singular on the constraint subspace".into())
    })?;
    if system_inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("scaled friction system is not invertible".into()));
    }
    let reduced = &projector * system_inv * &projector;
    let mut inverse = DMatrix::zeros(n, n);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            inverse[(i, j)] = 0.5 * (reduced[(a, b)] + reduced[(b, a)]);
        }
    }
    Ok(BottDuffin {
        inverse,
        sqrt_rho,
        vacuum,
    })
}

/// Solution of the constrained friction system.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolve {
    /// `n x dim` diffusional velocities.
    pub velocities: DMatrix<f64>,
    /// Bott-Duffin inverse of the scaled input matrix.
    pub inverse: DMatrix<f64>,
    /// Set when some species sat below the vacuum floor; their velocities are 0.
    pub degenerate: bool,
}

/// Solves `-(friction * u) = rhs` subject to `sum_i rho_i u_i = 0`, column by
/// column. `friction` must be symmetric with kernel `(1, ..., 1)`.
pub fn bott_duffin_solve(friction: &DMatrix<f64>, rho: &[f64], rhs: &DMatrix<f64>) -> Result<ConstrainedSolve> {
    let n = rho.len();
    if rhs.nrows() != n {
        return Err(Error::Mismatch(format!("right-hand side has {} rows, expected {n}", rhs.nrows())));
    }
    for c in 0..rhs.ncols() {
        let col = rhs.column(c);
        let sum: f64 = col.iter().sum();
        let scale: f64 = col.iter().map(|v| v.abs()).sum();
        if !sum.is_finite() || sum.abs() > RANGE_TOLERANCE * scale {
            return Err(Error::Inconsistent(format!(
                "component {c}: sum of right-hand side is {sum:.3e} (scale {scale:.3e})"
            )));
        }
    }
    let bd = bott_duffin_inverse(friction, rho)?;
    let mut rhs = rhs.clone();
    if bd.is_degenerate() {
        // project the support part back onto the range
        let support: Vec<usize> = (0..n).filter(|&i| !bd.vacuum[i]).collect();
        for c in 0..rhs.ncols() {
            let mean = support.iter().map(|&i| rhs[(i, c)]).sum::<f64>() / support.len() as f64;
            for i in 0..n {
                rhs[(i, c)] = if bd.vacuum[i] { 0.0 } else { rhs[(i, c)] - mean };
            }
        }
    }
    Ok(ConstrainedSolve {
        velocities: bd.velocities(&rhs),
        degenerate: bd.is_degenerate(),
        inverse: bd.inverse,
    })
}

/// Generalized forces, velocities and both dissipation representations at
/// one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveClosure {
    pub d: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub diss_friction_pairwise: f64,
    pub diss_friction_quadratic: f64,
    /// Bott-Duffin inverse `A` normalized so that the frictional dissipation
    /// is `eps * sum_ij A_ij (d_i / theta sqrt(rho_i)) . (d_j / theta sqrt(rho_j))`.
    pub bott_duffin: DMatrix<f64>,
    pub degenerate: bool,
}

pub fn diffusive_closure(
    state: &ThermoState,
    grads: &GradientInput,
    params: &MixtureParams,
) -> Result<DiffusiveClosure> {
    let d = generalized_forces(state, grads, params)?;
    let b = friction_matrix(state, params)?;
    let solve = bott_duffin_solve(&b, &state.rho, &(&d * params.epsilon()))?;
    let a = solve.inverse * state.theta;
    let (pairwise, quadratic) = dissipation_pair(&solve.velocities, &d, &a, state, params)?;
    Ok(DiffusiveClosure {
        d,
        u: solve.velocities,
        diss_friction_pairwise: pairwise,
        diss_friction_quadratic: quadratic,
        bott_duffin: a,
        degenerate: solve.degenerate,
    })
}

/// Frictional dissipation in pairwise form
/// `(1/(2 eps)) sum_i sum_{j!=i} b_ij rho_i rho_j |u_i - u_j|^2` and in
/// quadratic form `eps sum_ij A_ij (d_i/theta sqrt(rho_i)) . (d_j/theta sqrt(rho_j))`.
/// Both equal `-(1/theta) sum_i u_i . d_i`.
pub fn dissipation_pair(
    u: &DMatrix<f64>,
    d: &DMatrix<f64>,
    a: &DMatrix<f64>,
    state: &ThermoState,
    params: &MixtureParams,
) -> Result<(f64, f64)> {
    let n = params.species();
    if u.shape() != d.shape() || u.nrows() != n || a.shape() != (n, n) || state.rho.len() != n {
        return Err(Error::Mismatch(format!(
            "velocities {:?}, forces {:?} and inverse {:?} do not match {n} species",
            u.shape(),
            d.shape(),
            a.shape()
        )));
    }
    let eps = params.epsilon();
    let theta = state.theta;
    let friction = params.friction();
    let mut pairwise = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff2: f64 = (0..u.ncols()).map(|c| (u[(i, c)] - u[(j, c)]).powi(2)).sum();
            pairwise += friction.coefficient(i, j, theta) * state.rho[i] * state.rho[j] * diff2;
        }
    }
    pairwise /= 2.0 * eps;

    let mut quadratic = 0.0;
    for i in 0..n {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            let dot: f64 = (0..d.ncols()).map(|c| d[(i, c)] * d[(j, c)]).sum();
            quadratic += aij * dot / (theta * theta * (state.rho[i] * state.rho[j]).sqrt());
        }
    }
    quadratic *= eps;
    Ok((pairwise, quadratic))
}

/// `-(1/theta) sum_i u_i . d_i`.
pub fn dissipation_direct(u: &DMatrix<f64>, d: &DMatrix<f64>, theta: f64) -> f64 {
    -u.component_mul(d).sum() / theta
}

/// Onsager matrix `D` of size `(n+1) x (n+1)`, symmetric positive
/// semi-definite, such that
/// `(J_1, ..., J_n, J_e) = -D grad(mu_1/theta, ..., mu_n/theta, -1/theta)`
/// with `J_i = rho_i u_i` and `J_e = -kappa grad theta + sum_i (rho_i e_i + p_i) u_i`.
pub fn onsager_matrix(state: &ThermoState, params: &MixtureParams) -> Result<DMatrix<f64>> {
    onsager_matrix_with(state, params, params.epsilon(), params.conductivity().kappa(state.theta))
}

/// [`onsager_matrix`] with explicit `epsilon >= 0` and `kappa >= 0`.
pub fn onsager_matrix_with(state: &ThermoState, params: &MixtureParams, epsilon: f64, kappa: f64) -> Result<DMatrix<f64>> {
    let ev = eval_thermo(state, params)?;
    let n = params.species();
    let theta = state.theta;
    let mut onsager = DMatrix::zeros(n + 1, n + 1);
    if epsilon > 0.0 && n > 1 {
        let b = friction_matrix(state, params)?;
        let g = bott_duffin_inverse(&b, &state.rho)?.velocity_operator();
        // N = [diag(rho) | h], h_i = rho_i e_i + p_i
        let mut coupling = DMatrix::zeros(n, n + 1);
        for i in 0..n {
            coupling[(i, i)] = state.rho[i];
            coupling[(i, n)] = ev.e[i] + ev.p_partial[i];
        }
        onsager += coupling.transpose() * g * &coupling * (epsilon * theta);
    }
    onsager[(n, n)] += kappa * theta * theta;
    Ok(onsager)
}

/// One-dimensional mass and energy fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Fluxes {
    pub mass: Vec<f64>,
    pub energy: f64,
}

/// Fluxes at a state from one-dimensional gradients of the entropy
/// variables, through the generalized forces and the constrained solve.
/// `epsilon = 0` switches mass diffusion off.
pub fn entropy_gradient_fluxes(
    state: &ThermoState,
    grad_w: &[f64],
    grad_w_theta: f64,
    params: &MixtureParams,
    epsilon: f64,
    kappa: f64,
) -> Result<Fluxes> {
    let n = params.species();
    let theta = state.theta;
    let grad_theta = theta * theta * grad_w_theta;
    let mut fluxes = Fluxes {
        mass: vec![0.0; n],
        energy: -kappa * grad_theta,
    };
    if epsilon == 0.0 || n == 1 {
        state.check(params)?;
        return Ok(fluxes);
    }
    let gw = DMatrix::from_column_slice(n, 1, grad_w);
    let gwt = DVector::from_element(1, grad_w_theta);
    let d = generalized_forces_entropy(state, &gw, &gwt, params)?;
    let b = friction_matrix(state, params)?;
    let solve = bott_duffin_solve(&b, &state.rho, &(d * epsilon))?;
    let cw = params.heat_capacity();
    for i in 0..n {
        let u = solve.velocities[(i, 0)];
        fluxes.mass[i] = state.rho[i] * u;
        fluxes.energy += state.rho[i] * theta * (cw + 1.0 / params.molar_mass(i)) * u;
    }
    Ok(fluxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Conductivity, Friction};
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(m: Vec<f64>, b: Friction, eps: f64) -> MixtureParams {
        MixtureParams::new(m, 1.5, b, eps, Conductivity::at_lower_bound(1.0, 2.0).unwrap()).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng, n: usize) -> MixtureParams {
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
        let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(0.1..10.0)).collect();
        let f = Friction::from_upper(n, &upper, rng.gen_range(-0.5..0.5)).unwrap();
        params(m, f, rng.gen_range(0.01..2.0))
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ThermoState {
        ThermoState::new((0..n).map(|_| rng.gen_range(0.1..10.0)).collect(), rng.gen_range(0.5..5.0))
    }

    #[test]
    fn two_species_friction_matrix() {
        let p = params(vec![1.0, 1.0], Friction::uniform(2, 1.0).unwrap(), 1.0);
        let b = friction_matrix(&ThermoState::new(vec![1.0, 1.0], 1.0), &p).unwrap();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn two_species_closed_form() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let rhs = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let s = bott_duffin_solve(&b, &[1.0, 1.0], &rhs).unwrap();
        assert!((s.velocities[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((s.velocities[(1, 0)] - 0.5).abs() < 1e-15);
        assert!(!s.degenerate);
    }

    #[test]
    fn zero_rhs_gives_zero_velocity() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]);
        let s = bott_duffin_solve(&b, &[1.0, 3.0], &DMatrix::zeros(2, 3)).unwrap();
        assert!(s.velocities.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn range_violation_is_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let rhs = DMatrix::from_column_slice(2, 1, &[1.0, -0.5]);
        assert!(matches!(bott_duffin_solve(&b, &[1.0, 1.0], &rhs), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn vacuum_species_is_flagged() {
        let p = params(vec![1.0, 2.0, 3.0], Friction::uniform(3, 1.0).unwrap(), 1.0);
        let state = ThermoState::new(vec![1.0, 0.0, 2.0], 1.5);
        let b = friction_matrix(&state, &p).unwrap();
        let rhs = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, -1.0]);
        let s = bott_duffin_solve(&b, &state.rho, &rhs).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.velocities[(1, 0)], 0.0);
        let c: f64 = (0..3).map(|i| state.rho[i] * s.velocities[(i, 0)]).sum();
        assert!(c.abs() < 1e-14);
        let all_vacuum = bott_duffin_solve(&b, &[0.0, 0.0, 0.0], &DMatrix::zeros(3, 1));
        assert!(matches!(all_vacuum, Err(Error::Degenerate(_))));
    }

    #[test]
    fn forces_vanish_without_gradients() {
        let p = params(vec![1.0, 2.0], Friction::uniform(2, 1.0).unwrap(), 1.0);
        let s = ThermoState::new(vec![1.0, 2.0], 1.3);
        let g = GradientInput::from_primal(&s, &p, DMatrix::zeros(2, 3), DVector::zeros(3)).unwrap();
        assert!(generalized_forces(&s, &g, &p).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn forces_reduce_to_partial_pressure_gradients() {
        // d_i = grad p_i - (rho_i/rho) grad p with grad p_i = grad(rho_i theta)/m_i
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let p = random_params(&mut rng, n);
            let s = random_state(&mut rng, n);
            let gr = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-3.0..3.0));
            let gt = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
            let g = GradientInput::from_primal(&s, &p, gr.clone(), gt.clone()).unwrap();
            let d = generalized_forces(&s, &g, &p).unwrap();
            let rho = s.total_density();
            for c in 0..2 {
                let gp: Vec<f64> = (0..n).map(|i| (gr[(i, c)] * s.theta + s.rho[i] * gt[c]) / p.molar_mass(i)).collect();
                let total: f64 = gp.iter().sum();
                let scale = gp.iter().map(|v| v.abs()).sum::<f64>();
                for i in 0..n {
                    let expect = gp[i] - s.rho[i] / rho * total;
                    assert!((d[(i, c)] - expect).abs() < 1e-12 * scale.max(1.0));
                }
                let sum: f64 = d.column(c).iter().sum();
                assert!(sum.abs() < 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn body_forces_keep_forces_balanced() {
        let p = params(vec![1.0, 2.0, 0.5], Friction::uniform(3, 1.0).unwrap(), 1.0);
        let s = ThermoState::new(vec![1.0, 2.0, 0.3], 1.3);
        let g = GradientInput::from_primal(&s, &p, DMatrix::from_element(3, 1, 0.2), DVector::from_element(1, -0.4))
            .unwrap()
            .with_body_forces(DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]))
            .unwrap();
        let d = generalized_forces(&s, &g, &p).unwrap();
        assert!(d.sum().abs() < 1e-14);
    }

    #[test]
    fn entropy_form_matches_primal_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let p = random_params(&mut rng, n);
            let s = random_state(&mut rng, n);
            let gr = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-3.0..3.0));
            let gt = DVector::from_element(1, rng.gen_range(-3.0..3.0));
            let g = GradientInput::from_primal(&s, &p, gr.clone(), gt.clone()).unwrap();
            let d1 = generalized_forces(&s, &g, &p).unwrap();
            // chain rule for the entropy variables
            let cw = p.heat_capacity();
            let gw = DMatrix::from_fn(n, 1, |i, _| gr[(i, 0)] / (p.molar_mass(i) * s.rho[i]) - cw * gt[0] / s.theta);
            let gwt = DVector::from_element(1, gt[0] / (s.theta * s.theta));
            let d2 = generalized_forces_entropy(&s, &gw, &gwt, &p).unwrap();
            assert!((d1 - d2).amax() < 1e-11);
        }
    }

    #[test]
    fn friction_matrix_is_psd_with_constant_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(2..=6);
            let p = random_params(&mut rng, n);
            let b = friction_matrix(&random_state(&mut rng, n), &p).unwrap();
            assert!((b.clone() * DVector::from_element(n, 1.0)).amax() < 1e-12 * b.amax());
            let eig = SymmetricEigen::new(b.clone());
            assert!(eig.eigenvalues.min() >= -1e-12 * b.amax());
        }
    }

    #[test]
    fn closure_dissipation_two_species() {
        let p = params(vec![1.0, 1.0], Friction::uniform(2, 1.0).unwrap(), 1.0);
        let s = ThermoState::new(vec![1.0, 1.0], 1.0);
        let b = friction_matrix(&s, &p).unwrap();
        let d = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let solve = bott_duffin_solve(&b, &s.rho, &d).unwrap();
        let (pw, q) = dissipation_pair(&solve.velocities, &d, &(solve.inverse * s.theta), &s, &p).unwrap();
        assert!((pw - 1.0).abs() < 1e-14);
        assert!((q - 1.0).abs() < 1e-14);
        assert!((dissipation_direct(&solve.velocities, &d, 1.0) - 1.0).abs() < 1e-14);
        let zero = DMatrix::zeros(2, 1);
        let (pw0, _) = dissipation_pair(&zero, &zero, &DMatrix::zeros(2, 2), &s, &p).unwrap();
        assert_eq!(pw0, 0.0);
    }

    #[test]
    fn single_species_onsager_is_fourier() {
        let p = params(vec![2.0], Friction::uniform(1, 1.0).unwrap(), 1.0);
        let s = ThermoState::new(vec![1.3], 2.0);
        let d = onsager_matrix(&s, &p).unwrap();
        assert_eq!(d[(0, 0)], 0.0);
        assert_eq!(d[(0, 1)], 0.0);
        assert!((d[(1, 1)] - 1.0 * 5.0 * 4.0).abs() < 1e-12);
        let f = entropy_gradient_fluxes(&s, &[0.3], 0.25, &p, 1.0, 5.0).unwrap();
        assert_eq!(f.mass, vec![0.0]);
        // grad theta = theta^2 grad w_theta = 1
        assert!((f.energy + 5.0).abs() < 1e-14);
    }

    #[test]
    fn onsager_reproduces_closure_fluxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let n = rng.gen_range(2..=6);
            let p = random_params(&mut rng, n);
            let s = random_state(&mut rng, n);
            let kappa = p.conductivity().kappa(s.theta);
            let gw: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let gwt = rng.gen_range(-2.0..2.0);
            let f = entropy_gradient_fluxes(&s, &gw, gwt, &p, p.epsilon(), kappa).unwrap();
            let d = onsager_matrix(&s, &p).unwrap();
            let mut grad = DVector::from_column_slice(&gw).push(gwt);
            grad = -(d * grad);
            let scale = grad.amax().max(1e-300);
            for i in 0..n {
                assert!((f.mass[i] - grad[i]).abs() < 1e-10 * scale, "{} vs {}", f.mass[i], grad[i]);
            }
            assert!((f.energy - grad[n]).abs() < 1e-10 * scale);
            let mass_sum: f64 = f.mass.iter().sum();
            assert!(mass_sum.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn inconsistent_pressure_gradient_is_rejected() {
        let p = params(vec![1.0, 2.0], Friction::uniform(2, 1.0).unwrap(), 1.0);
        let s = ThermoState::new(vec![1.0, 0.5], 1.2);
        let mut g = GradientInput::from_primal(
            &s,
            &p,
            DMatrix::from_column_slice(2, 1, &[0.3, -0.1]),
            DVector::from_element(1, 0.2),
        )
        .unwrap();
        g.grad_p[0] += 0.5;
        assert!(matches!(generalized_forces(&s, &g, &p), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn near_equilibrium_forces_sum_to_zero() {
        let p = params(vec![1.0, 2.0], Friction::uniform(2, 1.0).unwrap(), 1.0);
        let s = ThermoState::new(vec![1.0, 0.5], 1.2);
        let gw = DMatrix::from_column_slice(2, 1, &[1e-9, -3e-9]);
        let d = generalized_forces_entropy(&s, &gw, &DVector::from_element(1, 2e-9), &p).unwrap();
        assert!(d.sum().abs() <= 1e-15 * d.amax());
    }
}
