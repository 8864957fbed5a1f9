use mixgas::diagnostics;
use mixgas::parabolic::{FieldSet, ParabolicConfig, ParabolicSolver};
use mixgas::{Conductivity, Friction, Grid1D, MixtureParams};

fn params(n: usize) -> MixtureParams {
    MixtureParams::new(
        (1..=n).map(|i| i as f64).collect(),
        1.5,
        Friction::uniform(n, 1.0).unwrap(),
        1.0,
        Conductivity::new(0.3, 0.01, 1.0).unwrap(),
    )
    .unwrap()
}

fn bumpy(grid: &Grid1D, n: usize) -> FieldSet {
    let x = grid.cell_centers();
    let rho = (0..n)
        .map(|i| x.iter().map(|x| 1.0 + 0.2 * (6.0 * x + i as f64).sin()).collect())
        .collect();
    FieldSet::new(rho, x.iter().map(|x| 1.0 + 0.1 * (4.0 * x).cos()).collect()).unwrap()
}

#[test]
fn three_species_run_keeps_budgets() {
    let p = params(3);
    let grid = Grid1D::new(24, 1.0).unwrap();
    let config = ParabolicConfig { dt: 2e-3, t_end: 0.05, ..Default::default() };
    let traj = ParabolicSolver::new(grid, p.clone(), config).unwrap().run(&bumpy(&grid, 3)).unwrap();
    assert!(traj.failure.is_none());
    let first = &traj.budgets[0];
    for b in &traj.budgets {
        for (m0, m) in first.masses.iter().zip(&b.masses) {
            assert!((m0 - m).abs() <= 1e-12 * m0);
        }
        assert!((first.energy - b.energy).abs() <= 1e-10 * first.energy);
        assert!(b.entropy_production >= -1e-9);
    }
    let last = &traj.snapshots.last().unwrap().fields;
    assert!(diagnostics::pressure_drift(last, &p) < diagnostics::pressure_drift(&traj.snapshots[0].fields, &p));
}

#[test]
fn robin_boundary_heats_toward_reservoir() {
    let p = params(2);
    let grid = Grid1D::new(16, 1.0).unwrap();
    let config = ParabolicConfig { dt: 1e-2, t_end: 0.2, lambda: 1.0, theta0: 1.5, ..Default::default() };
    let initial = FieldSet::uniform(16, &[1.0, 0.5], 1.0).unwrap();
    let traj = ParabolicSolver::new(grid, p.clone(), config).unwrap().run(&initial).unwrap();
    let energies: Vec<f64> = traj.budgets.iter().map(|b| b.energy).collect();
    assert!(energies.windows(2).all(|w| w[1] > w[0]));
    let last = &traj.snapshots.last().unwrap().fields;
    assert!(last.theta().iter().all(|t| *t > 1.0 && *t < 1.5));
    // boundary cells warm first
    assert!(last.theta()[0] > last.theta()[8]);
}

#[test]
fn uniform_state_is_stationary() {
    let p = params(2);
    let grid = Grid1D::new(8, 1.0).unwrap();
    let solver = ParabolicSolver::new(grid, p, ParabolicConfig::default()).unwrap();
    let fields = FieldSet::uniform(8, &[0.7, 1.3], 1.2).unwrap();
    let (next, report) = solver.implicit_euler_step(&fields, 1e-2).unwrap();
    assert_eq!(report.halvings, 0);
    for k in 0..8 {
        assert!((next.theta()[k] - 1.2).abs() < 1e-12);
        assert!((next.rho(0)[k] - 0.7).abs() < 1e-12);
    }
}

#[test]
fn coarsening_averages_pairs() {
    let fields = FieldSet::new(vec![vec![1.0, 3.0, 2.0, 4.0]], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let c = fields.coarsened().unwrap();
    assert_eq!(c.rho(0), &[2.0, 3.0]);
    assert_eq!(c.theta(), &[1.5, 3.5]);
}
