//! `nonfick run`: hypotheses, thresholds, solver, exports.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nonfick_core::coefficients::certificate::SamplingBox;
use nonfick_core::coefficients::homogenize;
use nonfick_core::estimates::{compute_thresholds, validate_sampled, HypothesisMode, HypothesisReport};
use nonfick_core::evolution::{simulate, write_frames, write_monitors, Monitors, SimulateOptions, StepOptions};
use nonfick_core::fixed_point::{
    solve_periodic, solve_periodic_regularized, solve_reproductive_concentration, ContinuationOptions, PicardOptions,
    write_state_csv, ShootingOptions, ShootingProblem, ShootingSolution,
};
use nonfick_core::grid_ops::{friedrichs_constant, norm};
use nonfick_core::stress_kinetics::{periodic_psi_field, psi_field};
use nonfick_core::{Error, EstimateReport, Grid, NormKind, ScalarField, State, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{FieldSpec, Mode, ScalarLaw, ScenarioConfig, VectorLaw};
use crate::scenario::Scenario;
use crate::{exit, CliError};

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub accepted: bool,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
    /// Named scalar results, also listed in the summary.
    pub metrics: Vec<(String, f64)>,
    pub tags: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.accepted {
            exit::ACCEPTED
        } else {
            exit::NOT_ACCEPTED
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

struct Builder {
    summary: String,
    metrics: Vec<(String, f64)>,
    artifacts: Vec<PathBuf>,
    tags: Vec<String>,
    ok: bool,
}

impl Builder {
    fn line(&mut self, s: impl AsRef<str>) {
        self.summary.push_str(s.as_ref());
        self.summary.push('\n');
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.line(format!("{name}: {v}"));
        self.metrics.push((name.to_string(), v));
    }

    fn require(&mut self, name: &str, ok: bool) {
        self.line(format!("check {name}: {}", if ok { "pass" } else { "FAIL" }));
        self.ok &= ok;
    }
}

fn write_estimates(path: &Path, est: &EstimateReport) -> Result<(), CliError> {
    std::fs::write(path, format!("k_omega,k,t0,c1,c2,gamma,gamma0\n{}\n", est.csv_row()))?;
    Ok(())
}

fn hypothesis_lines(b: &mut Builder, rep: &HypothesisReport) {
    for c in &rep.checks {
        b.line(format!("hypothesis {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail));
    }
}

/// Exact heat solution when the scenario is pure Fick diffusion of a sine mode.
fn heat_reference(cfg: &ScenarioConfig) -> Option<(f64, f64)> {
    let c = &cfg.coefficients;
    let zero = ScalarLaw::Constant { value: 0.0 };
    let ScalarLaw::Constant { value: d } = c.d0 else { return None };
    let FieldSpec::Sine { amplitude, offset } = cfg.data.u0 else { return None };
    let fickian = c.e0 == zero && c.nu0 == zero && c.m0 == VectorLaw::Zero && cfg.data.phi == FieldSpec::Zero;
    if !fickian || offset != 0.0 {
        return None;
    }
    let rate: f64 = cfg.grid.lengths.iter().map(|l| (PI / l).powi(2)).sum::<f64>() * d;
    Some((amplitude, rate))
}

fn random_start(grid: &Grid, base: &ScalarField, rng: &mut ChaCha8Rng) -> ScalarField {
    let l = grid.lengths().to_vec();
    let amps: Vec<f64> = (1..=4).map(|j| rng.gen_range(-0.2..0.2) / j as f64).collect();
    let mut out = base.clone();
    for n in 0..grid.node_count() {
        let x = grid.position(n);
        let mut s = 0.0;
        for (j, a) in amps.iter().enumerate() {
            let mut m = *a;
            for k in 0..grid.dim() {
                m *= ((j + 1) as f64 * PI * x[k] / l[k]).sin();
            }
            s += m;
        }
        out.values[n] += s;
    }
    out
}

fn monitor_checks(b: &mut Builder, traj: &Trajectory) {
    if let Some(mp) = &traj.max_principle {
        b.metric("min_u", mp.min_u);
        b.metric("max_u", mp.max_u);
        b.require("max principle", mp.holds());
    }
    if let Some(sb) = &traj.stress {
        b.metric("stress_bound_margin", sb.worst_margin);
        b.require("stress bound", sb.holds());
    }
}

fn export_solution(b: &mut Builder, dir: &Path, grid: &Grid, sol: &ShootingSolution, sc: &Scenario) -> Result<(), CliError> {
    let p = dir.join("convergence.csv");
    sol.report.write_csv(&p)?;
    b.artifacts.push(p);
    let p = dir.join("final_state.csv");
    sol.write_final_state(grid, &p)?;
    b.artifacts.push(p);
    export_trajectory(b, dir, grid, &sol.trajectory, sc)
}

fn export_trajectory(b: &mut Builder, dir: &Path, grid: &Grid, traj: &Trajectory, sc: &Scenario) -> Result<(), CliError> {
    let p = dir.join("monitors.csv");
    write_monitors(&p, traj)?;
    b.artifacts.push(p);
    if sc.config.output.frame_stride > 0 {
        let frames = dir.join("frames");
        std::fs::create_dir_all(&frames)?;
        b.artifacts.extend(write_frames(&frames, grid, traj, &sc.tc, sc.config.output.frame_stride)?);
    }
    Ok(())
}

fn l2_rel(grid: &Grid, a: &ScalarField, b: &ScalarField) -> f64 {
    let d = ScalarField::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(), 0.0);
    norm(grid, &d, NormKind::L2) / norm(grid, b, NormKind::L2).max(1e-300)
}

/// Runs a scenario and writes its artifacts into `out` (or the configured
/// output directory).
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunOutcome, CliError> {
    let sc = Scenario::build(cfg)?;
    let s = &cfg.solver;
    let grid = &*sc.grid;
    let dir = out.map_or_else(|| PathBuf::from(&cfg.output.directory), Path::to_path_buf);
    std::fs::create_dir_all(&dir)?;

    let psi = match s.mode {
        Mode::Periodic => periodic_psi_field(grid, &sc.phi, &sc.tc, s.horizon, s.dt, 1e-12, 1000)?,
        _ => psi_field(grid, &sc.phi, &sc.varsigma0, &sc.tc, s.horizon, s.dt)?,
    }
    .into_background();
    let hc = homogenize(sc.grid.clone(), sc.tc.clone(), sc.phi.clone(), psi.clone())?;
    let sbox = SamplingBox {
        v: (s.sample_box_v[0], s.sample_box_v[1]),
        tau: (s.sample_box_tau[0], s.sample_box_tau[1]),
        t: (0.0, s.horizon),
    };
    let hmode = if s.mode == Mode::Periodic { HypothesisMode::Periodic } else { HypothesisMode::Reproductive };
    let (cert, hyp) = validate_sampled(&hc, &sbox, s.samples, s.seed, hmode)?;

    let mut b = Builder { summary: String::new(), metrics: Vec::new(), artifacts: Vec::new(), tags: Vec::new(), ok: true };
    b.line(format!("scenario: {}", cfg.name.as_deref().unwrap_or("unnamed")));
    b.line(format!("mode: {:?}", s.mode).to_lowercase());
    b.line(format!("grid: dimension {} cells {:?}", cfg.grid.dimension, cfg.grid.cells));
    hypothesis_lines(&mut b, &hyp);
    if !hyp.passed() {
        eprint!("{}", b.summary);
        let names: Vec<&str> = hyp.failures().iter().map(|c| c.name).collect();
        return Err(CliError::Core(Error::Certificate(format!("hypotheses failed: {}", names.join(", ")))));
    }
    let mut est = compute_thresholds(&cert, friedrichs_constant(grid)?)?;
    if let Some((g, g0)) = hyp.coercivity {
        est = est.with_coercivity(g, g0);
    }
    for (name, v) in [("K_Omega", est.k_omega), ("k", est.k), ("T0", est.t0), ("C1", est.c1), ("C2", est.c2)] {
        b.metric(name, v);
    }
    if let (Some(g), Some(g0)) = (est.gamma, est.gamma0) {
        b.metric("Gamma", g);
        b.metric("Gamma0", g0);
    }
    let p = dir.join("estimates.csv");
    write_estimates(&p, &est)?;
    b.artifacts.push(p);

    let monitors = Monitors {
        stress_beta_g: cfg.output.stress_monitor.then_some(cert.beta_g),
        max_principle: cfg.output.max_principle.map(|[lo, hi]| (lo, hi)),
    };
    let sim = SimulateOptions { step: StepOptions { corrections: s.corrections, stress_nodes: s.stress_nodes }, monitors };
    let picard = PicardOptions { tol: s.tol, max_iter: s.max_iter, relaxation: s.relaxation };

    match s.mode {
        Mode::Simulate => {
            let s0 = State::new(0.0, sc.u0.clone(), sc.varsigma0.clone())?;
            let traj = simulate(grid, &s0, &sc.tc, &sc.phi, s.horizon, s.dt, &sim)?;
            let last = traj.last();
            b.metric("final_mass", traj.monitors.last().map_or(f64::NAN, |m| m.mass));
            if let Some((amp, rate)) = heat_reference(cfg) {
                let l = grid.lengths().to_vec();
                let err = (0..grid.node_count())
                    .map(|n| {
                        let x = grid.position(n);
                        let mut e = amp * (-rate * last.t).exp();
                        for k in 0..grid.dim() {
                            e *= (PI * x[k] / l[k]).sin();
                        }
                        (last.u.values[n] - e).abs()
                    })
                    .fold(0.0, f64::max);
                b.metric("heat_error_linf", err);
                b.require("heat reference", err <= 1e-3);
            }
            monitor_checks(&mut b, &traj);
            let p = dir.join("final_state.csv");
            write_state_csv(grid, last, &p)?;
            b.artifacts.push(p);
            export_trajectory(&mut b, &dir, grid, &traj, &sc)?;
        }
        Mode::Reproductive => {
            let problem = ShootingProblem::reproductive(sc.grid.clone(), sc.phi.clone(), sc.varsigma0.clone(), s.horizon, s.dt)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let mut sols: Vec<ShootingSolution> = Vec::new();
            for k in 0..s.starts {
                let start = if k == 0 { sc.u0.clone() } else { random_start(grid, &sc.u0, &mut rng) };
                let opts = ShootingOptions { picard, simulate: sim, start_u: Some(start), start_varsigma: None };
                sols.push(solve_reproductive_concentration(&problem, &sc.tc, &est, &opts)?);
            }
            let first = &sols[0];
            b.line(first.report.summary().trim_end());
            let spread = sols.iter().map(|x| l2_rel(grid, &x.initial().u, &first.initial().u)).fold(0.0, f64::max);
            b.metric("start_spread", spread);
            b.metric("final_residual", sols.iter().map(|x| x.report.final_residual).fold(0.0, f64::max));
            b.require("all starts accepted", sols.iter().all(|x| x.report.accepted));
            b.require("start agreement", spread <= 1e-6);
            if first.report.outside_guarantee {
                b.tags.push("outside-guarantee".into());
            }
            for x in &sols {
                monitor_checks(&mut b, &x.trajectory);
            }
            export_solution(&mut b, &dir, grid, first, &sc)?;
        }
        Mode::Periodic => {
            let problem = ShootingProblem::periodic(sc.grid.clone(), sc.phi.clone(), psi, s.horizon, s.dt)?;
            let opts = ShootingOptions { picard, simulate: sim, start_u: Some(sc.u0.clone()), start_varsigma: Some(sc.varsigma0.clone()) };
            let sol = solve_periodic(&problem, &sc.tc, Some(&hyp), &opts)?;
            b.line(sol.report.summary().trim_end());
            b.require("periodic solve accepted", sol.report.accepted);
            b.metric("final_residual", sol.report.final_residual);
            b.metric("stress_residual", sol.report.stress_residual.unwrap_or(f64::NAN));
            let again = simulate(grid, sol.trajectory.last(), &sc.tc, &sc.phi, s.horizon, s.dt, &SimulateOptions { monitors: Monitors::default(), ..sim })?;
            let end = again.last();
            let gap = l2_abs(grid, &end.u, &sol.initial().u).hypot(l2_abs(grid, &end.vs, &sol.initial().vs));
            b.metric("second_period_gap", gap);
            b.require("second period", gap <= 2.0 * s.tol.max(1e-12));
            monitor_checks(&mut b, &sol.trajectory);
            export_solution(&mut b, &dir, grid, &sol, &sc)?;
            if !s.eps.is_empty() {
                let copts = ContinuationOptions { eps: s.eps.clone(), lambda: s.lambda.clone(), picard, step: sim.step };
                let stages = solve_periodic_regularized(&problem, &hc, Some(&hyp), &copts)?;
                let mut csv = String::from("eps,lambda,iterations,final_residual,accepted\n");
                for st in &stages {
                    let _ = writeln!(csv, "{},{},{},{},{}", st.eps, st.lambda, st.report.iterations, st.report.final_residual, st.report.accepted);
                }
                let p = dir.join("continuation.csv");
                std::fs::write(&p, csv)?;
                b.artifacts.push(p);
                b.require("continuation accepted", stages.iter().all(|st| st.report.accepted));
            }
        }
    }
    let tags = if b.tags.is_empty() { String::new() } else { format!(" [{}]", b.tags.join(", ")) };
    let verdict = if b.ok { "accepted" } else { "not-accepted" };
    b.line(format!("result: {verdict}{tags}"));
    let p = dir.join("summary.txt");
    std::fs::write(&p, &b.summary)?;
    b.artifacts.push(p);
    Ok(RunOutcome { accepted: b.ok, summary: b.summary, artifacts: b.artifacts, metrics: b.metrics, tags: b.tags })
}

fn l2_abs(grid: &Grid, a: &ScalarField, b: &ScalarField) -> f64 {
    let d = ScalarField::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(), 0.0);
    norm(grid, &d, NormKind::L2)
}

