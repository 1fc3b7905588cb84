use std::f64::consts::PI;
use std::sync::Arc;

use nonfick_core::coefficients::certificate::SamplingBox;
use nonfick_core::coefficients::laws::{beta_tanh, constant_concentration, e_rational};
use nonfick_core::coefficients::{homogenize, transform};
use nonfick_core::estimates::{compute_thresholds, validate_sampled, HypothesisMode};
use nonfick_core::evolution::{simulate, Monitors, SimulateOptions};
use nonfick_core::fixed_point::{solve_reproductive_concentration, ShootingOptions};
use nonfick_core::grid_ops::friedrichs_constant;
use nonfick_core::stress_kinetics::psi_field;
use nonfick_core::{build_grid, BackgroundField, PrimalCoefficients, ScalarField, ShootingProblem, State};

fn glassy() -> PrimalCoefficients {
    PrimalCoefficients {
        e0: Arc::new(|_, _, u, _| e_rational(u, 0.5, 0.05)),
        beta0: Arc::new(|_, _, u, _| beta_tanh(u, 2.0, 1.0, 0.5, 0.25).unwrap()),
        beta0_partials: None,
        mu0: constant_concentration(1.0),
        ..PrimalCoefficients::fickian(1.0)
    }
}

#[test]
fn sorption_into_square_stays_in_unit_range() {
    let grid = build_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
    let tc = transform(&glassy()).unwrap();
    let phi = BackgroundField::analytic(|_, _| 1.0);
    let mut u0 = ScalarField::zeros(&grid);
    for &n in grid.boundary() {
        u0.values[n] = 1.0;
    }
    let s0 = State::new(0.0, u0, ScalarField::zeros(&grid)).unwrap();
    let opts = SimulateOptions { monitors: Monitors { stress_beta_g: None, max_principle: Some((-1e-8, 1.0 + 1e-8)) }, ..Default::default() };
    let traj = simulate(&grid, &s0, &tc, &phi, 0.2, 2e-3, &opts).unwrap();
    let mp = traj.max_principle.as_ref().unwrap();
    assert!(mp.holds(), "{mp:?}");
    // uptake is monotone in time
    let mass: Vec<f64> = traj.monitors.iter().map(|m| m.mass).collect();
    assert!(mass.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn certified_reproductive_solution() {
    let grid = Arc::new(build_grid(1, &[1.0], &[64]).unwrap());
    let tc = Arc::new(transform(&glassy()).unwrap());
    let phi = BackgroundField::analytic(|_, x| 0.3 + 0.4 * x[0]);
    let vs0 = ScalarField::zeros(&grid);
    let (horizon, dt) = (0.1, 1e-3);
    let psi = psi_field(&grid, &phi, &vs0, &tc, horizon, dt).unwrap().into_background();
    let hc = homogenize(grid.clone(), tc.clone(), phi.clone(), psi).unwrap();
    let sbox = SamplingBox { v: (-0.5, 0.5), tau: (-0.5, 0.5), t: (0.0, horizon) };
    let (cert, hyp) = validate_sampled(&hc, &sbox, 2000, 1, HypothesisMode::Reproductive).unwrap();
    assert!(hyp.passed(), "{:?}", hyp.failures());
    let est = compute_thresholds(&cert, friedrichs_constant(&grid).unwrap()).unwrap();
    assert!(horizon <= est.t0);

    let problem = ShootingProblem::reproductive(grid.clone(), phi, vs0, horizon, dt).unwrap();
    let start = ScalarField::from_fn(&grid, |x| 0.3 + 0.4 * x[0] + 0.2 * (PI * x[0]).sin());
    let opts = ShootingOptions { start_u: Some(start), ..Default::default() };
    let sol = solve_reproductive_concentration(&problem, &tc, &est, &opts).unwrap();
    assert!(sol.report.accepted && !sol.report.outside_guarantee);
    assert!(sol.report.final_residual <= 1e-8);
    let (a, b) = (&sol.initial().u, &sol.trajectory.last().u);
    let gap = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-7, "u(0) and u(T) differ by {gap}");
}
