//! Seeded invariant suite behind the `check` mode.
//!
//! Random cases come from ChaCha8 seeded with the run seed; check `k` uses
//! stream `k`, so any single check can be replayed from the seed alone.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{self, RelEntropyMode};
use crate::grid::Grid1D;
use crate::hyperbolic;
use crate::parabolic::{FieldSet, ParabolicConfig, ParabolicSolver};
use crate::params::{Conductivity, Friction, MixtureParams};
use crate::stefan::{self, GradientInput};
use crate::thermo::{self, ThermoState};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub cases: usize,
    pub passed: bool,
    /// Worst observed error against its tolerance.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSuite {
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl CheckSuite {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut out = format!("seed {}\n", self.seed);
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>6}  {}  {}\n",
                r.name,
                r.cases,
                if r.passed { "PASS" } else { "FAIL" },
                r.detail
            ));
        }
        out
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random mixture with `n` species: molar masses in `[0.5, 4]`, heat
/// capacity in `[1, 3]`, friction log-uniform in `[0.1, 10]`.
pub fn random_params(rng: &mut impl Rng, n: usize) -> MixtureParams {
    let m: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
    let exponent = rng.gen_range(-0.5..0.5);
    let kappa = rng.gen_range(0.1..1.0);
    MixtureParams::new(
        m,
        rng.gen_range(1.0..3.0),
        Friction::from_upper(n, &upper, exponent).expect("positive friction"),
        rng.gen_range(0.1..1.0),
        Conductivity::new(kappa, 0.1, 1.0).expect("kappa inside band"),
    )
    .expect("valid random parameters")
}

/// Densities log-uniform in `[0.1, 10]`, temperature in `[0.5, 2]`.
pub fn random_state(rng: &mut impl Rng, n: usize) -> ThermoState {
    ThermoState::new(
        (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect(),
        rng.gen_range(0.5..2.0),
    )
}

fn row(name: &'static str, cases: usize, worst: f64, tol: f64) -> CheckRow {
    CheckRow {
        name,
        cases,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tol {tol:.0e})"),
    }
}

fn failed(name: &'static str, cases: usize, err: impl std::fmt::Display) -> CheckRow {
    CheckRow {
        name,
        cases,
        passed: false,
        detail: format!("error: {err}"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn constitutive(rng: &mut ChaCha8Rng, cases: usize) -> CheckRow {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=5);
        let p = random_params(rng, n);
        let s = random_state(rng, n);
        let ev = match thermo::eval_thermo(&s, &p) {
            Ok(e) => e,
            Err(e) => return failed("constitutive derivatives", cases, e),
        };
        let cw = p.heat_capacity();
        for i in 0..n {
            let m = p.molar_mass(i);
            let psi = |r: f64, t: f64| t * (r / m) * ((r / m).ln() - 1.0) - cw * r * t * (t.ln() - 1.0);
            let (r, t) = (s.rho[i], s.theta);
            let hr = 1e-5 * r;
            let ht = 1e-5 * t;
            let mu_fd = (psi(r + hr, t) - psi(r - hr, t)) / (2.0 * hr);
            let eta_fd = -(psi(r, t + ht) - psi(r, t - ht)) / (2.0 * ht);
            worst = worst.max(rel(ev.mu[i], mu_fd));
            worst = worst.max(rel(ev.eta[i], eta_fd));
        }
    }
    row("constitutive derivatives", cases, worst, 1e-6)
}

fn closed_forms(rng: &mut ChaCha8Rng, cases: usize) -> CheckRow {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=5);
        let p = random_params(rng, n);
        let s = random_state(rng, n);
        let ev = thermo::eval_thermo(&s, &p).expect("admissible state");
        for i in 0..n {
            worst = worst.max(rel(ev.p_partial[i], s.rho[i] * s.theta / p.molar_mass(i)));
            worst = worst.max(rel(ev.e[i], p.heat_capacity() * s.rho[i] * s.theta));
            // Gibbs-Duhem
            worst = worst.max((ev.p_partial[i] - (-ev.psi[i] + s.rho[i] * ev.mu[i])).abs() / ev.p_partial[i]);
        }
        let vars = thermo::primal_to_entropy(&s, &p).expect("admissible state");
        let back = thermo::entropy_to_primal(&vars, &p).expect("admissible state");
        worst = worst.max(rel(back.theta, s.theta));
        for i in 0..n {
            worst = worst.max(rel(back.rho[i], s.rho[i]));
        }
    }
    row("closed forms and inversion", cases, worst, 1e-12)
}

/// Orthonormal basis of `{u : sum rho_i u_i = 0}` from a Householder reflection.
fn constraint_basis(rho: &[f64]) -> DMatrix<f64> {
    let n = rho.len();
    let norm = rho.iter().map(|r| r * r).sum::<f64>().sqrt();
    let mut w: Vec<f64> = rho.iter().map(|r| r / norm).collect();
    w[0] -= 1.0;
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut h = DMatrix::identity(n, n);
    if wn > 1e-300 {
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= 2.0 * w[i] * w[j] / (wn * wn);
            }
        }
    }
    h.columns(1, n - 1).into_owned()
}

fn constrained_solve(rng: &mut ChaCha8Rng, cases: usize) -> CheckRow {
    let mut worst: f64 = 0.0;
    let mut worst_constraint: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(2..=6);
        let p = random_params(rng, n);
        let s = random_state(rng, n);
        let b = match stefan::friction_matrix(&s, &p) {
            Ok(b) => b,
            Err(e) => return failed("constrained solve vs oracle", cases, e),
        };
        let mut rhs = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
        let mean = rhs.sum() / n as f64;
        rhs.add_scalar_mut(-mean);
        let solve = match stefan::bott_duffin_solve(&b, &s.rho, &rhs) {
            Ok(v) => v,
            Err(e) => return failed("constrained solve vs oracle", cases, e),
        };
        let v = constraint_basis(&s.rho);
        let reduced = &b * &v;
        let coeffs = reduced.svd(true, true).solve(&(-&rhs), 1e-14).expect("svd solve");
        let oracle = &v * coeffs;
        let scale = oracle.amax().max(1e-300);
        worst = worst.max((&solve.velocities - &oracle).amax() / scale);
        let c: f64 = (0..n).map(|i| s.rho[i] * solve.velocities[(i, 0)]).sum();
        let cscale: f64 = (0..n).map(|i| (s.rho[i] * solve.velocities[(i, 0)]).abs()).sum();
        worst_constraint = worst_constraint.max(c.abs() / cscale.max(1e-300));
    }
    let mut r = row("constrained solve vs oracle", cases, worst, 1e-10);
    r.passed &= worst_constraint <= 1e-12;
    r.detail.push_str(&format!(", constraint {worst_constraint:.3e} (tol 1e-12)"));
    r
}

fn dissipation(rng: &mut ChaCha8Rng, cases: usize) -> CheckRow {
    let mut worst: f64 = 0.0;
    let mut most_negative: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(2..=6);
        let p = random_params(rng, n);
        let s = random_state(rng, n);
        let dim = rng.gen_range(1..=3);
        let grad_rho = DMatrix::from_fn(n, dim, |_, _| rng.gen_range(-1.0..1.0));
        let grad_theta = nalgebra::DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let closure = GradientInput::from_primal(&s, &p, grad_rho, grad_theta)
            .and_then(|g| stefan::diffusive_closure(&s, &g, &p));
        let c = match closure {
            Ok(c) => c,
            Err(e) => return failed("dissipation identity", cases, e),
        };
        let direct = stefan::dissipation_direct(&c.u, &c.d, s.theta);
        let (a, b) = (c.diss_friction_pairwise, c.diss_friction_quadratic);
        let scale = a.abs().max(b.abs()).max(1e-300);
        worst = worst.max((a - b).abs() / scale).max((a - direct).abs() / scale);
        most_negative = most_negative.min(a).min(b);
    }
    let mut r = row("dissipation identity", cases, worst, 1e-10);
    r.passed &= most_negative >= -1e-12;
    r
}

fn onsager_psd(rng: &mut ChaCha8Rng, cases: usize) -> CheckRow {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=6);
        let p = random_params(rng, n);
        let s = random_state(rng, n);
        let d = match stefan::onsager_matrix(&s, &p) {
            Ok(d) => d,
            Err(e) => return failed("onsager matrix psd", cases, e),
        };
        let sym = (&d + d.transpose()) * 0.5;
        let min = SymmetricEigen::new(sym).eigenvalues.min();
        worst = worst.max(-min / d.norm());
    }
    row("onsager matrix psd", cases, worst, 1e-10)
}

fn relative_entropy(rng: &mut ChaCha8Rng, cases: usize) -> CheckRow {
    let grid = Grid1D::new(4, 1.0).expect("grid");
    let mut most_negative: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(1..=4);
        let p = random_params(rng, n);
        let field = |rng: &mut ChaCha8Rng| {
            let states: Vec<ThermoState> = (0..4).map(|_| random_state(rng, n)).collect();
            FieldSet::new(
                (0..n).map(|i| states.iter().map(|s| s.rho[i]).collect()).collect(),
                states.iter().map(|s| s.theta).collect(),
            )
            .expect("positive fields")
        };
        let (u, ubar) = (field(rng), field(rng));
        match diagnostics::relative_entropy_zero_flow(&u, &ubar, &grid, RelEntropyMode::Bregman, &p) {
            Ok(h) => most_negative = most_negative.min(h),
            Err(e) => return failed("bregman relative entropy >= 0", cases, e),
        }
    }
    row("bregman relative entropy >= 0", cases, -most_negative, 0.0)
}

fn parabolic_conservation(rng: &mut ChaCha8Rng) -> CheckRow {
    let name = "zero-flow step conservation";
    let p = random_params(rng, 2);
    let grid = Grid1D::new(16, 1.0).expect("grid");
    let x = grid.cell_centers();
    let (a, b) = (rng.gen_range(0.1..0.4), rng.gen_range(0.05..0.3));
    let f = FieldSet::new(
        vec![
            x.iter().map(|x| 1.0 + a * (std::f64::consts::TAU * x).cos()).collect(),
            x.iter().map(|x| 1.0 - a * (std::f64::consts::TAU * x).cos()).collect(),
        ],
        x.iter().map(|x| 1.0 + b * (std::f64::consts::TAU * x).sin()).collect(),
    )
    .expect("positive fields");
    let config = ParabolicConfig {
        t_end: 0.01,
        ..Default::default()
    };
    let solver = match ParabolicSolver::new(grid, p.clone(), config.clone()) {
        Ok(s) => s,
        Err(e) => return failed(name, 10, e),
    };
    let traj = match solver.run(&f) {
        Ok(t) => t,
        Err(e) => return failed(name, 10, e),
    };
    if let Some(e) = traj.failure {
        return failed(name, 10, e);
    }
    let mut worst: f64 = 0.0;
    let mut energy: f64 = 0.0;
    let mut entropy_drop: f64 = 0.0;
    for w in traj.budgets.windows(2) {
        for (m0, m1) in w[0].masses.iter().zip(&w[1].masses) {
            worst = worst.max(rel(*m0, *m1));
        }
        energy = energy.max(rel(w[0].energy, w[1].energy));
        entropy_drop = entropy_drop.max(w[0].entropy - w[1].entropy);
    }
    let tol = config.newton_tol;
    let mut r = row(name, traj.reports.len(), worst, 1e-12);
    r.passed &= energy <= tol && entropy_drop <= 10.0 * tol;
    r.detail.push_str(&format!(", energy {energy:.3e} (tol {tol:.0e}), entropy drop {entropy_drop:.3e}"));
    r
}

fn type1_conservation(rng: &mut ChaCha8Rng) -> CheckRow {
    let name = "relaxation step conservation";
    let p = random_params(rng, 2);
    let grid = Grid1D::new(32, 1.0).expect("grid");
    let eps = rng.gen_range(0.01..0.2);
    let run = hyperbolic::smooth_two_species(&grid, &p).and_then(|init| {
        let config = hyperbolic::Type1Config {
            grid,
            t_end: 0.02,
            cfl: 0.4,
            dt: None,
            output_every: 1,
        };
        hyperbolic::run_type1(&config, &init, &p, eps, 1.0)
    });
    let traj = match run {
        Ok(t) => t,
        Err(e) => return failed(name, 0, e),
    };
    let mut worst: f64 = 0.0;
    let mut entropy_drop: f64 = 0.0;
    for w in traj.budgets.windows(2) {
        let (a, b) = (&w[0].totals, &w[1].totals);
        for (m0, m1) in a.masses.iter().zip(&b.masses) {
            worst = worst.max(rel(*m0, *m1));
        }
        // total momentum may vanish; measure its drift against the energy scale
        worst = worst.max((a.momentum - b.momentum).abs() / a.energy);
        worst = worst.max(rel(a.energy, b.energy));
        entropy_drop = entropy_drop.max(w[0].entropy - w[1].entropy);
    }
    let mut r = row(name, traj.steps, worst, 1e-12);
    r.detail.push_str(&format!(", entropy drop {entropy_drop:.3e}"));
    r
}

/// Runs every check with cases drawn from `seed`.
pub fn run_checks(seed: u64) -> CheckSuite {
    let rows = vec![
        constitutive(&mut rng_for(seed, 0), 2000),
        closed_forms(&mut rng_for(seed, 1), 2000),
        constrained_solve(&mut rng_for(seed, 2), 2000),
        dissipation(&mut rng_for(seed, 3), 2000),
        onsager_psd(&mut rng_for(seed, 4), 1000),
        relative_entropy(&mut rng_for(seed, 5), 1000),
        parabolic_conservation(&mut rng_for(seed, 6)),
        type1_conservation(&mut rng_for(seed, 7)),
    ];
    CheckSuite { seed, rows }
}
