//! Acceptance suite run by `nonfick verify` and the `acceptance` test target.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use nonfick_core::coefficients::laws::{constant_concentration, e_rational};
use nonfick_core::coefficients::{homogenize, homogenized_residual, transform, PrimalCoefficients};
use nonfick_core::estimates::{
    coercivity_form_min, coercivity_gamma_search, compute_thresholds, default_gamma_grid, energy_lhs,
    CoercivitySample, EnergyWeighting,
};
use nonfick_core::evolution::{
    derivative_norm_report, simulate, RegularizedState, RegularizedStepper, SimulateOptions, StepOptions,
};
use nonfick_core::fixed_point::{solve_reproductive_abstract, PicardOptions, ShootingProblem};
use nonfick_core::grid_ops::{divergence_values, face_gradient, friedrichs_constant, inner_faces, inner_nodes, inv_laplacian, laplacian};
use nonfick_core::stress_kinetics::{psi_field, stress_step_point, StressStepPlan};
use nonfick_core::{build_grid, BackgroundField, BoundsCertificate, Grid, ScalarField, State, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScalarLaw;
use crate::presets;
use crate::run::run_scenario;

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.2} s of {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget
        )
    }
}

/// Deliberate defects used to check that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Reverses the sign of the stress-gradient flux coefficient in the
    /// reproductive scenario. Not detected: that coefficient vanishes at
    /// u = 0 and u = 1, so the sign does not affect the bounds.
    FlipStressFlux,
    /// Reverses the sign of the diffusion coefficient in the reproductive
    /// scenario.
    FlipDiffusion,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub fault: Option<Fault>,
    /// Scratch directory for scenario artifacts; a temporary one by default.
    pub scratch: Option<PathBuf>,
}

type Outcome = Result<(bool, String), String>;

fn timed(id: u8, name: &'static str, budget: f64, f: impl FnOnce() -> Outcome) -> CriterionResult {
    let start = Instant::now();
    let res = f();
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match res {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    if seconds > budget {
        passed = false;
        detail.push_str("; runtime budget exceeded");
    }
    CriterionResult { id, name, passed, detail, seconds, budget }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionResult> {
    (1..=10).map(|id| run_one(id, opts)).collect()
}

pub fn run_one(id: u8, opts: &VerifyOptions) -> CriterionResult {
    match id {
        1 => timed(1, "discrete calculus", 5.0, discrete_calculus),
        2 => timed(2, "Fick reduction", 30.0, fick_reduction),
        3 => timed(3, "stress integrator", 5.0, stress_integrator),
        4 => timed(4, "abstract shooting oracle", 10.0, abstract_oracle),
        5 => timed(5, "threshold arithmetic", 1.0, threshold_arithmetic),
        6 => timed(6, "reproductive run", 300.0, || reproductive_run(opts)),
        7 => timed(7, "periodic run", 300.0, || periodic_run(opts)),
        8 => timed(8, "coercivity checker", 10.0, coercivity_checker),
        9 => timed(9, "energy uniformity", 300.0, energy_uniformity),
        10 => timed(10, "homogenized consistency", 120.0, homogenized_consistency),
        _ => CriterionResult { id, name: "unknown", passed: false, detail: "no such criterion".into(), seconds: 0.0, budget: 0.0 },
    }
}

fn random_interior(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..grid.node_count())
        .map(|n| if grid.is_boundary(n) { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect()
}

fn discrete_calculus() -> Outcome {
    let grids = [
        build_grid(1, &[1.0], &[64]).map_err(e2s)?,
        build_grid(2, &[1.0, 0.8], &[12, 10]).map_err(e2s)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut sbp, mut rt) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let grid = &grids[k % 2];
        let w = random_interior(grid, &mut rng);
        let flux: Vec<f64> = (0..grid.face_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = inner_nodes(grid, &divergence_values(grid, &flux), &w);
        let rhs = -inner_faces(grid, &flux, &face_gradient(grid, &w));
        let scale = inner_nodes(grid, &w, &w).sqrt() * inner_faces(grid, &flux, &flux).sqrt() / grid.spacing()[0];
        sbp = sbp.max((lhs - rhs).abs() / scale);

        let g = ScalarField::new(random_interior(grid, &mut rng), 0.0);
        let w = inv_laplacian(grid, &g).map_err(e2s)?;
        let back = laplacian(grid, &w, &vec![0.0; grid.boundary().len()]).map_err(e2s)?;
        let err = grid.interior().iter().map(|&n| (back.values[n] - g.values[n]).abs()).fold(0.0, f64::max);
        rt = rt.max(err / g.max_abs());
    }
    let k_omega = friedrichs_constant(&build_grid(1, &[1.0], &[200]).map_err(e2s)?).map_err(e2s)?;
    let kerr = (k_omega - 1.0 / PI).abs();
    Ok((
        sbp <= 1e-12 && rt <= 1e-10 && kerr <= 1e-4,
        format!("duality {sbp:.1e}, roundtrip {rt:.1e}, |K_Omega - 1/pi| {kerr:.1e}"),
    ))
}

fn heat_run(cells: usize, dt: f64) -> Result<(Grid, ScalarField), String> {
    let grid = build_grid(1, &[1.0], &[cells]).map_err(e2s)?;
    let tc = transform(&PrimalCoefficients::fickian(1.0)).map_err(e2s)?;
    let s0 = State::new(0.0, ScalarField::from_fn(&grid, |x| (PI * x[0]).sin()), ScalarField::zeros(&grid)).map_err(e2s)?;
    let traj = simulate(&grid, &s0, &tc, &BackgroundField::Zero, 0.1, dt, &SimulateOptions::default()).map_err(e2s)?;
    let u = traj.last().u.clone();
    Ok((grid, u))
}

fn fick_reduction() -> Outcome {
    let (grid, u) = heat_run(200, 1e-4)?;
    let decay = (-PI * PI * 0.1).exp();
    let err = (0..grid.node_count())
        .map(|n| (u.values[n] - decay * (PI * grid.position(n)[0]).sin()).abs())
        .fold(0.0, f64::max);
    // same dt on three grids: differences isolate the spatial error
    let runs: Vec<ScalarField> = [20, 40, 80].iter().map(|&n| heat_run(n, 1e-4).map(|r| r.1)).collect::<Result<_, _>>()?;
    let diff = |a: &ScalarField, fa: usize, b: &ScalarField, fb: usize| {
        (0..=20).map(|k| (a.values[k * fa] - b.values[k * fb]).abs()).fold(0.0, f64::max)
    };
    let e1 = diff(&runs[0], 1, &runs[1], 2);
    let e2 = diff(&runs[1], 2, &runs[2], 4);
    let order = (e1 / e2).log2();
    Ok((err <= 1e-3 && order >= 1.9, format!("L-inf error {err:.2e}, spatial order {order:.3}")))
}

fn stress_integrator() -> Outcome {
    let (b, c, s0) = (3.0, 1.5, 0.4);
    let p = PrimalCoefficients {
        beta0: Arc::new(move |_, _, _, _| b),
        mu0: constant_concentration(c),
        ..PrimalCoefficients::fickian(1.0)
    };
    let tc = transform(&p).map_err(e2s)?;
    let mut exact_err = 0.0f64;
    for nodes in 2..=5 {
        for dt in [1e-3, 0.1, 0.7] {
            let plan = StressStepPlan::new(dt).and_then(|p| p.with_nodes(nodes)).map_err(e2s)?;
            let got = stress_step_point(&tc, 0.0, [0.5, 0.0], s0, 1.0, 1.0, &plan);
            let want = s0 * (-b * dt).exp() + c / b * (1.0 - (-b * dt).exp());
            exact_err = exact_err.max((got - want).abs());
        }
    }

    // smooth time-dependent rate, nonlinear source, u linear in t
    let p = PrimalCoefficients {
        beta0: Arc::new(|t, _, _, _| 2.0 + (3.0 * t).sin()),
        beta0_partials: None,
        mu0: Arc::new(|u| 1.0 + u * u),
        ..PrimalCoefficients::fickian(1.0)
    };
    let tc = transform(&p).map_err(e2s)?;
    let u = |t: f64| 0.5 + 0.3 * t;
    let rhs = |t: f64, y: f64| -(2.0 + (3.0 * t).sin()) * y + (1.0 + u(t) * u(t)) * u(t);
    let n_ref = 20_000;
    let h = 1.0 / n_ref as f64;
    let mut y = s0;
    for k in 0..n_ref {
        let t = k as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = rhs(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let mut errs = Vec::new();
    for steps in [10usize, 20, 40] {
        let dt = 1.0 / steps as f64;
        let plan = StressStepPlan::new(dt).map_err(e2s)?;
        let mut s = s0;
        for k in 0..steps {
            let t = k as f64 * dt;
            s = stress_step_point(&tc, t, [0.5, 0.0], s, u(t), u(t + dt), &plan);
        }
        errs.push((s - y).abs());
    }
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    Ok((
        exact_err <= 1e-12 && o1.min(o2) >= 1.9,
        format!("constant-coefficient error {exact_err:.1e}, refinement orders {o1:.3}, {o2:.3}"),
    ))
}

fn abstract_oracle() -> Outcome {
    let cells = 64;
    let (t_end, dt) = (0.2, 1e-3);
    let grid = Arc::new(build_grid(1, &[1.0], &[cells]).map_err(e2s)?);
    let a_field = ScalarField::from_fn(&grid, |x| {
        0.5 * (PI * x[0]).sin() + 0.3 * (3.0 * PI * x[0]).sin() + 0.4 * x[0] * (1.0 - x[0])
    });
    let problem = ShootingProblem::abstract_linear(grid.clone(), a_field.clone(), t_end, dt).map_err(e2s)?;
    let opts = PicardOptions { tol: 1e-13, ..Default::default() };
    let sol = solve_reproductive_abstract(&problem, &grid.laplacian_matrix(), None, &opts, None).map_err(e2s)?;

    // dense oracle: S = (I + dt A)^{-steps}, b = (I - S)^{-1} a
    let n = cells - 1;
    let h = 1.0 / cells as f64;
    let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 / (h * h),
        1 => -1.0 / (h * h),
        _ => 0.0,
    });
    let step = (DMatrix::identity(n, n) + &a * dt).try_inverse().ok_or("singular step matrix")?;
    let steps = (t_end / dt).round() as u32;
    let s = step.pow(steps);
    let rhs = DVector::from_vec(grid.gather_interior(&a_field.values));
    let b = (DMatrix::identity(n, n) - &s).lu().solve(&rhs).ok_or("singular I - S")?;
    let got = DVector::from_vec(sol.b.clone());
    let rel = (&got - &b).norm() / b.norm();

    let alpha = a.clone().symmetric_eigen().eigenvalues.min();
    let bound = (-alpha * t_end).exp() * 1.05;
    let ratios: Vec<f64> = sol.report.ratios.iter().skip(1).copied().collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok((
        sol.report.accepted && rel <= 1e-8 && !ratios.is_empty() && worst <= bound,
        format!("relative error {rel:.1e}, max ratio {worst:.5} vs bound {bound:.5} (alpha {alpha:.4})"),
    ))
}

fn threshold_arithmetic() -> Outcome {
    let cert = |k_mu: f64, k_g: f64| BoundsCertificate::from_constants(0.0, 0.0, 0.0, k_mu, 0.0, k_g, 1.0);
    let a = compute_thresholds(&cert(1.0, 0.0), 0.3).map_err(e2s)?;
    let b = compute_thresholds(&cert(0.0, 0.0), 0.3).map_err(e2s)?;
    let c = compute_thresholds(&cert(0.0, 1.0), 1.0 / PI).map_err(e2s)?;
    let ok_a = a.k == 6.0 && a.t0 == 1.0 / 6.0 && a.c1 == 0.0 && a.c2 == 0.0;
    let ok_b = b.k == 4.0 && b.t0 == 0.25;
    let kc = 4.0 + 1.5 / (PI * PI);
    let ok_c = c.k == kc && c.t0 == 1.0 / kc && (c.k - 4.1520).abs() < 1e-4 && (c.t0 - 0.2408).abs() < 1e-4;
    Ok((
        ok_a && ok_b && ok_c,
        format!("k = {}, {}, {:.6}; T0 = {:.6}, {}, {:.6}", a.k, b.k, c.k, a.t0, b.t0, c.t0),
    ))
}

fn scratch(opts: &VerifyOptions, name: &str) -> PathBuf {
    let base = opts.scratch.clone().unwrap_or_else(|| std::env::temp_dir().join(format!("nonfick-verify-{}", std::process::id())));
    base.join(name)
}

fn metric(outcome: &crate::RunOutcome, name: &str) -> Result<f64, String> {
    outcome.metric(name).ok_or_else(|| format!("run did not report {name}"))
}

fn reproductive_run(opts: &VerifyOptions) -> Outcome {
    let mut cfg = presets::load("reproductive_demo").map_err(e2s)?;
    match opts.fault {
        Some(Fault::FlipStressFlux) => {
            if let ScalarLaw::ERational { alpha1, alpha2 } = cfg.coefficients.e0 {
                cfg.coefficients.e0 = ScalarLaw::ERational { alpha1: -alpha1, alpha2 };
            }
        }
        Some(Fault::FlipDiffusion) => {
            if let ScalarLaw::Constant { value } = cfg.coefficients.d0 {
                cfg.coefficients.d0 = ScalarLaw::Constant { value: -value };
            }
        }
        None => {}
    }
    let dir = scratch(opts, "reproductive_demo");
    let out = run_scenario(&cfg, Some(&dir)).map_err(e2s)?;
    let _ = std::fs::remove_dir_all(&dir);
    let t0 = metric(&out, "T0")?;
    let spread = metric(&out, "start_spread")?;
    let resid = metric(&out, "final_residual")?;
    let (lo, hi) = (metric(&out, "min_u")?, metric(&out, "max_u")?);
    let within = cfg.solver.horizon <= t0;
    let ok = out.accepted && within && cfg.solver.starts >= 3 && spread <= 1e-6 && resid <= 1e-8;
    Ok((
        ok,
        format!(
            "T = {} vs T0 = {t0:.4}, start spread {spread:.1e}, residual {resid:.1e}, u in [{lo:.4}, {hi:.4}], monitors {}",
            cfg.solver.horizon,
            if out.accepted { "pass" } else { "FAIL" }
        ),
    ))
}

fn forced_mode_error() -> Result<f64, String> {
    let cells = 32;
    let grid = Arc::new(build_grid(1, &[1.0], &[cells]).map_err(e2s)?);
    let (t_end, dt) = (1.0, 2e-4);
    let problem = ShootingProblem::abstract_linear(grid.clone(), ScalarField::zeros(&grid), t_end, dt).map_err(e2s)?;
    let shape = grid.gather_interior(&ScalarField::from_fn(&grid, |x| (PI * x[0]).sin()).values);
    let w = 2.0 * PI / t_end;
    let forcing = move |t: f64| shape.iter().map(|s| (w * t).sin() * s).collect::<Vec<f64>>();
    let sol = solve_reproductive_abstract(&problem, &grid.laplacian_matrix(), Some(&forcing), &PicardOptions::default(), None)
        .map_err(e2s)?;
    let h = 1.0 / cells as f64;
    let lam = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
    let amp = 1.0 / (lam * lam + w * w).sqrt();
    let mid = cells / 2 - 1;
    let worst = sol
        .trajectory
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let t = k as f64 * dt;
            (u[mid] - (lam * (w * t).sin() - w * (w * t).cos()) / (lam * lam + w * w)).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst / amp)
}

fn periodic_run(opts: &VerifyOptions) -> Outcome {
    let cfg = presets::load("periodic_demo").map_err(e2s)?;
    let dir = scratch(opts, "periodic_demo");
    let out = run_scenario(&cfg, Some(&dir)).map_err(e2s)?;
    let _ = std::fs::remove_dir_all(&dir);
    let gap = metric(&out, "second_period_gap")?;
    let ru = metric(&out, "final_residual")?;
    let rs = metric(&out, "stress_residual")?;
    let g0 = metric(&out, "Gamma0")?;
    let forced = forced_mode_error()?;
    let ok = out.accepted && cfg.solver.horizon == 1.0 && ru <= 1e-6 && rs <= 1e-6 && gap <= 2e-6 && g0 > 0.0 && forced <= 0.01;
    Ok((
        ok,
        format!("Gamma0 {g0:.4}, residuals {ru:.1e}/{rs:.1e}, second period {gap:.1e}, forced mode {:.3}%", 100.0 * forced),
    ))
}

/// Unit-circle minimum of `D xi^2 - mu eta^2 + (E G - beta / G) xi eta`.
fn brute_force_min(d: f64, mu: f64, e: f64, beta: f64, g: f64) -> f64 {
    let off = e * g - beta / g;
    let form = |th: f64| {
        let (x, y) = (th.cos(), th.sin());
        d * x * x - mu * y * y + off * x * y
    };
    let n = 4096;
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for k in 0..n {
        let th = PI * k as f64 / n as f64;
        let v = form(th);
        if v < best {
            best = v;
            arg = th;
        }
    }
    let (mut a, mut b) = (arg - PI / n as f64, arg + PI / n as f64);
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if form(m1) < form(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    form(0.5 * (a + b))
}

fn coercivity_checker() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.gen_range(0.1..3.0);
        let mu = rng.gen_range(-3.0..1.0);
        let e = rng.gen_range(0.0..2.0);
        let beta = rng.gen_range(-2.0..2.0);
        let g = 2f64.powf(rng.gen_range(-3.0..3.0));
        worst = worst.max((coercivity_form_min(d, mu, e, beta, g) - brute_force_min(d, mu, e, beta, g)).abs());
    }
    let worked = coercivity_form_min(1.0, -1.0, 0.2, -0.2, 1.0);
    let sample = [CoercivitySample { d: 1.0, mu: -1.0, e: 0.2, beta: -0.2 }];
    let (_, g0) = coercivity_gamma_search(&sample, &default_gamma_grid()).map_err(e2s)?;
    Ok((
        worst <= 1e-6 && (worked - 0.8).abs() <= 1e-12 && g0 >= 0.8,
        format!("max brute-force gap {worst:.1e}, worked example {worked}, searched Gamma0 {g0:.4}"),
    ))
}

fn affine_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ymax = y.iter().copied().fold(0.0, f64::max);
    let res = x.iter().zip(y).map(|(a, b)| (icpt + slope * a - b).abs()).fold(0.0, f64::max) / ymax;
    (icpt, slope, res)
}

fn energy_uniformity() -> Outcome {
    let grid = Arc::new(build_grid(1, &[1.0], &[64]).map_err(e2s)?);
    let p = PrimalCoefficients {
        d0: Arc::new(|_, _, u, _| 1.0 + 0.2 * u * u),
        e0: Arc::new(|_, _, u, _| e_rational(u, 0.2, 0.05)),
        beta0: Arc::new(|_, _, _, _| 5.0),
        mu0: constant_concentration(1.0),
        ..PrimalCoefficients::fickian(1.0)
    };
    let tc = Arc::new(transform(&p).map_err(e2s)?);
    let hc = homogenize(grid.clone(), tc, BackgroundField::Zero, BackgroundField::Zero).map_err(e2s)?;
    let stepper = RegularizedStepper::new(grid.clone(), StepOptions::default());
    let v0 = ScalarField::from_fn(&grid, |x| (PI * x[0]).sin());
    let eps_list = [1e-2, 1e-3, 1e-4];
    let mut energies = Vec::new();
    let mut fits_ok = true;
    let mut fit_notes = Vec::new();
    for lambda in [0.25, 0.5, 1.0] {
        let mut dv = Vec::new();
        let mut dtau = Vec::new();
        for eps in eps_list {
            let r0 = RegularizedState::new(&grid, 0.0, v0.clone(), ScalarField::zeros(&grid), eps, lambda).map_err(e2s)?;
            let traj: Trajectory<RegularizedState> = stepper.simulate(&r0, &hc, 1.0, 1e-3).map_err(e2s)?;
            energies.push(energy_lhs(&grid, &traj, EnergyWeighting::Reproductive));
            let (a, b) = derivative_norm_report(&grid, &traj);
            dv.push(a);
            dtau.push(b);
        }
        let x: Vec<f64> = eps_list.iter().map(|e| e.sqrt()).collect();
        let total: Vec<f64> = dv.iter().zip(&dtau).map(|(a, b)| a + b).collect();
        let (_, slope, res) = affine_fit(&x, &total);
        let (_, sv, _) = affine_fit(&x, &dv);
        let (_, st, _) = affine_fit(&x, &dtau);
        fits_ok &= slope >= 0.0 && res <= 0.1 && total.iter().all(|v| v.is_finite());
        fit_notes.push(format!(
            "lambda {lambda}: slope {slope:.3} (v {sv:.3}, tau {st:.3}), residual {:.1}%",
            100.0 * res
        ));
    }
    let mut sorted = energies.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let max = *sorted.last().expect("nine runs");
    Ok((
        max <= 2.0 * median && fits_ok,
        format!("energy max/median {:.3}; {}", max / median, fit_notes.join("; ")),
    ))
}

fn smooth_residual(cells: usize, dt: f64) -> Result<f64, String> {
    let grid = Arc::new(build_grid(1, &[1.0], &[cells]).map_err(e2s)?);
    let p = PrimalCoefficients {
        d0: Arc::new(|_, _, u, _| 1.0 + 0.3 * u),
        e0: Arc::new(|_, _, u, _| e_rational(u, 0.3, 0.05)),
        beta0: Arc::new(|_, _, u, _| 2.0 + u),
        beta0_partials: None,
        mu0: Arc::new(|u| 1.0 + 0.5 * u),
        ..PrimalCoefficients::fickian(1.0)
    };
    let tc = Arc::new(transform(&p).map_err(e2s)?);
    let phi = BackgroundField::analytic(|_, x| 0.3 + 0.4 * x[0]);
    let u0 = ScalarField::from_fn(&grid, |x| 0.3 + 0.4 * x[0] + 0.2 * (PI * x[0]).sin());
    let vs0 = ScalarField::zeros(&grid);
    let horizon = 0.1;
    let s0 = State::new(0.0, u0, vs0.clone()).map_err(e2s)?;
    let traj = simulate(&grid, &s0, &tc, &phi, horizon, dt, &SimulateOptions::default()).map_err(e2s)?;
    let psi = psi_field(&grid, &phi, &vs0, &tc, horizon, dt).map_err(e2s)?.into_background();
    let hc = homogenize(grid, tc, phi, psi).map_err(e2s)?;
    let (rv, rt) = homogenized_residual(&traj, &hc).map_err(e2s)?;
    Ok(rv.hypot(rt))
}

fn homogenized_consistency() -> Outcome {
    let (k, c, m, b) = (1.0, 0.5, 0.8, 2.0);
    let p = PrimalCoefficients {
        d0: Arc::new(move |_, x, _, _| k + c * x[0]),
        beta0: Arc::new(move |_, _, _, _| b),
        mu0: constant_concentration(m),
        ..PrimalCoefficients::fickian(1.0)
    };
    let grid = Arc::new(build_grid(1, &[1.0], &[40]).map_err(e2s)?);
    let tc = Arc::new(transform(&p).map_err(e2s)?);
    let u = move |t: f64, x: [f64; 2]| x[0] + c * t;
    let s = move |t: f64, x: [f64; 2]| -m * c / (b * b) + m / b * x[0] + m * c / b * t;
    let dt = 0.01;
    let states = (0..=20)
        .map(|n| {
            let t = n as f64 * dt;
            State::new(t, ScalarField::from_fn(&grid, |x| u(t, x)), ScalarField::from_fn(&grid, |x| s(t, x)))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(e2s)?;
    let traj = Trajectory { states, dt, scheme: "exact".into(), monitors: vec![], stress: None, max_principle: None };
    let hc = homogenize(grid, tc, BackgroundField::analytic(u), BackgroundField::analytic(s)).map_err(e2s)?;
    let (rv, rt) = homogenized_residual(&traj, &hc).map_err(e2s)?;
    let manufactured = rv.max(rt);

    let coarse = smooth_residual(40, 2e-3)?;
    let fine = smooth_residual(80, 1e-3)?;
    let ratio = coarse / fine;
    Ok((
        manufactured <= 1e-8 && ratio >= 1.8,
        format!("manufactured residual {manufactured:.1e}, refinement ratio {ratio:.3} ({coarse:.2e} -> {fine:.2e})"),
    ))
}
