//! Time integration of the primal `(u, varsigma)` system and of the
//! regularized `(v, tau)` system.
//!
//! Both steppers are linearly implicit: the diffusion (and biharmonic) part
//! is solved with coefficients frozen at a known state, everything else is
//! explicit. A configurable number of correction passes re-evaluates the
//! coefficients at the latest iterate.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::coefficients::homogenized::FaceCoefficients;
use crate::coefficients::{BackgroundField, HomogenizedCoefficients, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::grid_ops::{
    div_coef_grad, divergence_values, face_gradient, inner_nodes, norm, Grid, NormKind,
    ScalarField,
};
use crate::linalg::BandMatrix;
use crate::stress_kinetics::{
    sigma_of_varsigma, step_count, stress_bound_check, stress_step, StressBoundReport,
    StressStepPlan, UInterpolation,
};

const BLOW_UP: f64 = 1e9;

/// Concentration and purely non-Fickian stress at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: ScalarField,
    pub vs: ScalarField,
}

impl State {
    pub fn new(t: f64, u: ScalarField, vs: ScalarField) -> Result<Self> {
        if u.len() != vs.len() {
            return Err(Error::ShapeMismatch { expected: u.len(), found: vs.len() });
        }
        Ok(Self { t, u: u.with_time(t), vs: vs.with_time(t) })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { t: 0.0, u: ScalarField::zeros(grid), vs: ScalarField::zeros(grid) }
    }

    /// Primal stress `sigma = varsigma + N(u)`.
    pub fn sigma(&self, tc: &TransformedCoefficients) -> ScalarField {
        sigma_of_varsigma(&self.vs, &self.u, tc)
    }
}

/// State of the regularized system; `v` and `tau` vanish on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedState {
    pub t: f64,
    pub v: ScalarField,
    pub tau: ScalarField,
    pub eps: f64,
    pub lambda: f64,
}

impl RegularizedState {
    /// Builds a state, zeroing the boundary slots of `v` and `tau`.
    pub fn new(grid: &Grid, t: f64, v: ScalarField, tau: ScalarField, eps: f64, lambda: f64) -> Result<Self> {
        let n = grid.node_count();
        for len in [v.len(), tau.len()] {
            if len != n {
                return Err(Error::ShapeMismatch { expected: n, found: len });
            }
        }
        if !(eps >= 0.0) || !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Precondition(format!(
                "need eps >= 0 and lambda in [0, 1], got eps={eps}, lambda={lambda}"
            )));
        }
        Ok(Self {
            t,
            v: v.interior_only(grid).with_time(t),
            tau: tau.interior_only(grid).with_time(t),
            eps,
            lambda,
        })
    }
}

/// Stepper knobs shared by both formulations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    /// Extra passes re-evaluating coefficients at the new iterate.
    pub corrections: usize,
    /// Quadrature nodes of the stress integrator.
    pub stress_nodes: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { corrections: 1, stress_nodes: 2 }
    }
}

/// Optional run-level checks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Monitors {
    /// Relaxation floor `beta_G` for the stress bound; `None` disables it.
    pub stress_beta_g: Option<f64>,
    /// Admissible concentration range for the maximum principle.
    pub max_principle: Option<(f64, f64)>,
}

/// One row of the per-step monitor stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub mass: f64,
    pub l2: f64,
    pub h1: f64,
    pub max_u: f64,
    pub min_u: f64,
    /// Smallest stress-bound margin at this instant (NaN when not monitored).
    pub stress_margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPrincipleReport {
    pub lo: f64,
    pub hi: f64,
    pub min_u: f64,
    pub max_u: f64,
}

impl MaxPrincipleReport {
    pub fn holds(&self) -> bool {
        self.min_u >= self.lo - 1e-8 && self.max_u <= self.hi + 1e-8
    }
}

/// Uniformly stepped sequence of states with its monitors.
#[derive(Clone, Debug)]
pub struct Trajectory<S = State> {
    pub states: Vec<S>,
    pub dt: f64,
    pub scheme: String,
    pub monitors: Vec<MonitorRow>,
    pub stress: Option<StressBoundReport>,
    pub max_principle: Option<MaxPrincipleReport>,
}

impl<S> Trajectory<S> {
    pub fn first(&self) -> &S {
        &self.states[0]
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn guard(values: &[f64], what: &'static str) -> Result<()> {
    for (node, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { what, node });
        }
        if v.abs() > BLOW_UP {
            return Err(Error::BlowUp { what, value: v.abs(), node });
        }
    }
    Ok(())
}

fn boundary_values(grid: &Grid, phi: &BackgroundField, t: f64) -> Vec<f64> {
    grid.boundary().iter().map(|&n| phi.at_node(grid, t, n)).collect()
}

/// Face coefficients of the concentration equation at a coefficient state.
struct FluxCoefficients {
    d: Vec<f64>,
    e: Vec<f64>,
    /// Normal component of `M1 u`, with `u` the explicit concentration.
    m: Vec<f64>,
}

fn flux_coefficients(
    grid: &Grid,
    tc: &TransformedCoefficients,
    t: f64,
    u_coef: &[f64],
    vs_coef: &[f64],
    u_explicit: &[f64],
) -> FluxCoefficients {
    let pc: Vec<_> = (0..grid.node_count())
        .map(|n| tc.at(t, grid.position(n), u_coef[n], vs_coef[n]))
        .collect();
    let faces = grid.faces();
    let mut out = FluxCoefficients {
        d: Vec::with_capacity(faces.len()),
        e: Vec::with_capacity(faces.len()),
        m: Vec::with_capacity(faces.len()),
    };
    for f in faces {
        let (a, b) = (&pc[f.lo], &pc[f.hi]);
        out.d.push(0.5 * (a.d1 + b.d1));
        out.e.push(0.5 * (a.e1 + b.e1));
        out.m.push(0.5 * (a.m1[f.axis] * u_explicit[f.lo] + b.m1[f.axis] * u_explicit[f.hi]));
    }
    out
}

/// Solves `(I + dt K_D) u = u_n + dt div(E grad varsigma + M u_n)` with
/// Dirichlet data `bnd`.
fn solve_concentration(
    grid: &Grid,
    fc: &FluxCoefficients,
    u_n: &[f64],
    vs_explicit: &[f64],
    bnd: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let gs = face_gradient(grid, vs_explicit);
    let flux: Vec<f64> = gs.iter().zip(&fc.e).zip(&fc.m).map(|((g, e), m)| e * g + m).collect();
    let div = divergence_values(grid, &flux);
    let mut lifted = vec![0.0; grid.node_count()];
    for (k, &n) in grid.boundary().iter().enumerate() {
        lifted[n] = bnd[k];
    }
    let bdiv = div_coef_grad(grid, &fc.d, &lifted);
    let mut rhs: Vec<f64> = grid.interior().iter().map(|&n| u_n[n] + dt * (div[n] + bdiv[n])).collect();
    let mat = BandMatrix::identity(rhs.len()).plus_scaled(dt, &grid.diffusion_matrix(&fc.d));
    mat.cholesky()?.solve_in_place(&mut rhs);
    let mut u = grid.scatter_interior(&rhs);
    for (k, &n) in grid.boundary().iter().enumerate() {
        u[n] = bnd[k];
    }
    Ok(u)
}

/// One linearly implicit step of the primal system with Dirichlet data
/// `phi(t + dt)`.
pub fn step_primal(
    grid: &Grid,
    s: &State,
    tc: &TransformedCoefficients,
    phi: &BackgroundField,
    dt: f64,
    opts: &StepOptions,
) -> Result<State> {
    let (t0, t1) = (s.t, s.t + dt);
    let plan = StressStepPlan::new(dt)?.with_nodes(opts.stress_nodes)?;
    let held = plan.with_interpolation(UInterpolation::HeldLeft);
    let vs_pred = stress_step(grid, &s.vs, &s.u, &s.u, tc, &held)?;
    let bnd = boundary_values(grid, phi, t1);

    let fc = flux_coefficients(grid, tc, t0, &s.u.values, &s.vs.values, &s.u.values);
    let mut u = ScalarField::new(solve_concentration(grid, &fc, &s.u.values, &vs_pred.values, &bnd, dt)?, t1);
    guard(&u.values, "concentration")?;
    let mut vs = stress_step(grid, &s.vs, &s.u, &u, tc, &plan)?;
    for _ in 0..opts.corrections {
        let fc = flux_coefficients(grid, tc, t1, &u.values, &vs.values, &s.u.values);
        u = ScalarField::new(solve_concentration(grid, &fc, &s.u.values, &vs.values, &bnd, dt)?, t1);
        guard(&u.values, "concentration")?;
        vs = stress_step(grid, &s.vs, &s.u, &u, tc, &plan)?;
    }
    guard(&vs.values, "stress")?;
    Ok(State { t: t1, u, vs })
}

/// Run configuration of [`simulate`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimulateOptions {
    pub step: StepOptions,
    pub monitors: Monitors,
}

/// Sampled `sup |gamma u|` over every state of a run.
pub fn sup_gamma_u(grid: &Grid, states: &[State], tc: &TransformedCoefficients) -> f64 {
    let mut c = 0.0f64;
    for s in states {
        for n in 0..grid.node_count() {
            let u = s.u.values[n];
            c = c.max((tc.gamma(s.t, grid.position(n), u, s.vs.values[n]) * u).abs());
        }
    }
    c
}

/// Integrates the primal system over `[s0.t, s0.t + T]`; `T` must be a
/// multiple of `dt`.
pub fn simulate(
    grid: &Grid,
    s0: &State,
    tc: &TransformedCoefficients,
    phi: &BackgroundField,
    horizon: f64,
    dt: f64,
    opts: &SimulateOptions,
) -> Result<Trajectory> {
    let steps = step_count(horizon, dt)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(s0.clone());
    for k in 0..steps {
        let mut next = step_primal(grid, &states[k], tc, phi, dt, &opts.step)
            .map_err(|e| Error::Step { step: k + 1, source: Box::new(e) })?;
        // keep the time grid exactly uniform
        next.t = s0.t + (k + 1) as f64 * dt;
        next.u.t = next.t;
        next.vs.t = next.t;
        states.push(next);
    }
    Ok(finish_primal(grid, states, tc, dt, opts))
}

fn finish_primal(
    grid: &Grid,
    states: Vec<State>,
    tc: &TransformedCoefficients,
    dt: f64,
    opts: &SimulateOptions,
) -> Trajectory {
    let stress = opts.monitors.stress_beta_g.map(|beta_g| {
        let c_gamma = sup_gamma_u(grid, &states, tc);
        let history: Vec<ScalarField> = states.iter().map(|s| s.vs.clone()).collect();
        stress_bound_check(&history, &states[0].vs, beta_g, c_gamma)
    });
    let mut monitors = Vec::with_capacity(states.len());
    for s in &states {
        let margin = match &stress {
            Some(r) => stress_bound_check(std::slice::from_ref(&s.vs), &states[0].vs, r.beta_g, r.c_gamma).worst_margin,
            None => f64::NAN,
        };
        let ones = vec![1.0; grid.node_count()];
        monitors.push(MonitorRow {
            t: s.t,
            mass: inner_nodes(grid, &s.u.values, &ones),
            l2: norm(grid, &s.u, NormKind::L2),
            h1: norm(grid, &s.u, NormKind::H1_0),
            max_u: s.u.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_u: s.u.values.iter().copied().fold(f64::INFINITY, f64::min),
            stress_margin: margin,
        });
    }
    let max_principle = opts.monitors.max_principle.map(|(lo, hi)| MaxPrincipleReport {
        lo,
        hi,
        min_u: monitors.iter().map(|m| m.min_u).fold(f64::INFINITY, f64::min),
        max_u: monitors.iter().map(|m| m.max_u).fold(f64::NEG_INFINITY, f64::max),
    });
    Trajectory {
        states,
        dt,
        scheme: format!("imex-exponential/corrections={}", opts.step.corrections),
        monitors,
        stress,
        max_principle,
    }
}

/// Linearly implicit stepper for
/// `v' + eps Laplacian^2 v = lambda div[D grad v + E grad tau + f]`,
/// `tau' + eps Laplacian^2 tau = lambda Laplacian^{-1} div[beta grad v + mu grad tau + g]`.
///
/// The biharmonic term is the square of the discrete Dirichlet Laplacian.
/// In the `tau` equation the nonpositive part of `mu` is treated implicitly
/// after multiplying through by the Laplacian, which keeps the operator
/// symmetric positive definite.
pub struct RegularizedStepper {
    grid: Arc<Grid>,
    a: BandMatrix,
    a2: BandMatrix,
    a3: std::sync::OnceLock<BandMatrix>,
    opts: StepOptions,
}

impl RegularizedStepper {
    pub fn new(grid: Arc<Grid>, opts: StepOptions) -> Self {
        let a = grid.laplacian_matrix();
        let a2 = a.square();
        Self { grid, a, a2, a3: std::sync::OnceLock::new(), opts }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn a3(&self) -> &BandMatrix {
        self.a3.get_or_init(|| self.a.mul_commuting(&self.a2))
    }

    fn solve_tau(
        &self,
        fc: &[FaceCoefficients],
        v_c: &[f64],
        tau_c: &[f64],
        tau_n: &[f64],
        eps: f64,
        lambda: f64,
        dt: f64,
    ) -> Result<Vec<f64>> {
        let grid = &*self.grid;
        let gv = face_gradient(grid, v_c);
        let gt = face_gradient(grid, tau_c);
        let mut implicit = Vec::with_capacity(fc.len());
        let mut flux = Vec::with_capacity(fc.len());
        for (k, c) in fc.iter().enumerate() {
            let mu_minus = c.mu.min(0.0);
            implicit.push(-mu_minus);
            flux.push(c.beta * gv[k] + (c.mu - mu_minus) * gt[k] + c.g);
        }
        let r = divergence_values(grid, &flux);
        let tn = grid.gather_interior(tau_n);
        let atn = self.a.mul_vec(&tn);
        let mut rhs: Vec<f64> = grid
            .interior()
            .iter()
            .zip(&atn)
            .map(|(&n, at)| at - dt * lambda * r[n])
            .collect();
        let mut mat = self.a.plus_scaled(dt * lambda, &grid.diffusion_matrix(&implicit));
        if eps > 0.0 {
            mat = mat.plus_scaled(dt * eps, self.a3());
        }
        mat.cholesky()?.solve_in_place(&mut rhs);
        Ok(grid.scatter_interior(&rhs))
    }

    fn solve_v(
        &self,
        fc: &[FaceCoefficients],
        tau_new: &[f64],
        v_n: &[f64],
        eps: f64,
        lambda: f64,
        dt: f64,
    ) -> Result<Vec<f64>> {
        let grid = &*self.grid;
        let gt = face_gradient(grid, tau_new);
        let flux: Vec<f64> = fc.iter().zip(&gt).map(|(c, g)| c.e * g + c.f).collect();
        let div = divergence_values(grid, &flux);
        let mut rhs: Vec<f64> = grid.interior().iter().map(|&n| v_n[n] + dt * lambda * div[n]).collect();
        let d: Vec<f64> = fc.iter().map(|c| c.d).collect();
        let mut mat = BandMatrix::identity(rhs.len()).plus_scaled(dt * lambda, &grid.diffusion_matrix(&d));
        if eps > 0.0 {
            mat = mat.plus_scaled(dt * eps, &self.a2);
        }
        mat.cholesky()?.solve_in_place(&mut rhs);
        Ok(grid.scatter_interior(&rhs))
    }

    pub fn step(&self, r: &RegularizedState, hc: &HomogenizedCoefficients, dt: f64) -> Result<RegularizedState> {
        let (t0, t1) = (r.t, r.t + dt);
        let (eps, lam) = (r.eps, r.lambda);
        let (v_n, tau_n) = (&r.v.values, &r.tau.values);
        let fc = hc.frame(t0)?.faces(v_n, tau_n)?;
        let mut tau = self.solve_tau(&fc, v_n, tau_n, tau_n, eps, lam, dt)?;
        let mut v = self.solve_v(&fc, &tau, v_n, eps, lam, dt)?;
        if self.opts.corrections > 0 {
            let frame = hc.frame(t1)?;
            for _ in 0..self.opts.corrections {
                let fc = frame.faces(&v, &tau)?;
                let tau_next = self.solve_tau(&fc, &v, &tau, tau_n, eps, lam, dt)?;
                v = self.solve_v(&fc, &tau_next, v_n, eps, lam, dt)?;
                tau = tau_next;
            }
        }
        guard(&v, "regularized concentration")?;
        guard(&tau, "regularized stress")?;
        Ok(RegularizedState {
            t: t1,
            v: ScalarField::new(v, t1),
            tau: ScalarField::new(tau, t1),
            eps,
            lambda: lam,
        })
    }

    /// Integrates over `[r0.t, r0.t + T]`.
    pub fn simulate(
        &self,
        r0: &RegularizedState,
        hc: &HomogenizedCoefficients,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory<RegularizedState>> {
        let steps = step_count(horizon, dt)?;
        let mut states = Vec::with_capacity(steps + 1);
        states.push(r0.clone());
        for k in 0..steps {
            let mut next = self
                .step(&states[k], hc, dt)
                .map_err(|e| Error::Step { step: k + 1, source: Box::new(e) })?;
            next.t = r0.t + (k + 1) as f64 * dt;
            next.v.t = next.t;
            next.tau.t = next.t;
            states.push(next);
        }
        Ok(Trajectory {
            states,
            dt,
            scheme: format!("imex-biharmonic/corrections={}", self.opts.corrections),
            monitors: Vec::new(),
            stress: None,
            max_principle: None,
        })
    }
}

/// One regularized step with default options.
pub fn step_regularized(r: &RegularizedState, hc: &HomogenizedCoefficients, dt: f64) -> Result<RegularizedState> {
    RegularizedStepper::new(hc.grid.clone(), StepOptions::default()).step(r, hc, dt)
}

/// `(||v'||_{L2(H^-2)}, ||tau'||_{L2(H^-1)})` from time-difference quotients.
pub fn derivative_norm_report(grid: &Grid, traj: &Trajectory<RegularizedState>) -> (f64, f64) {
    let dt = traj.dt;
    let (mut a, mut b) = (0.0, 0.0);
    for w in traj.states.windows(2) {
        let dv: Vec<f64> = w[1].v.values.iter().zip(&w[0].v.values).map(|(p, q)| (p - q) / dt).collect();
        let dtau: Vec<f64> = w[1].tau.values.iter().zip(&w[0].tau.values).map(|(p, q)| (p - q) / dt).collect();
        a += dt * norm(grid, &ScalarField::new(dv, 0.0), NormKind::HMinus2).powi(2);
        b += dt * norm(grid, &ScalarField::new(dtau, 0.0), NormKind::HMinus1).powi(2);
    }
    (a.sqrt(), b.sqrt())
}

fn fmt_row(out: &mut String, cols: &[f64]) {
    for (k, c) in cols.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "{c}");
    }
    out.push('\n');
}

/// Writes one CSV per saved frame (`t, x[, y], u, varsigma, sigma`) and
/// returns the paths.
pub fn write_frames(
    dir: &Path,
    grid: &Grid,
    traj: &Trajectory,
    tc: &TransformedCoefficients,
    stride: usize,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stride = stride.max(1);
    let mut paths = Vec::new();
    let last = traj.len() - 1;
    for (k, s) in traj.states.iter().enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        let sigma = s.sigma(tc);
        let mut out = String::from(if grid.dim() == 2 { "t,x,y,u,varsigma,sigma\n" } else { "t,x,u,varsigma,sigma\n" });
        for n in 0..grid.node_count() {
            let x = grid.position(n);
            let mut cols = vec![s.t, x[0]];
            if grid.dim() == 2 {
                cols.push(x[1]);
            }
            cols.extend([s.u.values[n], s.vs.values[n], sigma.values[n]]);
            fmt_row(&mut out, &cols);
        }
        let path = dir.join(format!("frame_{k:06}.csv"));
        std::fs::write(&path, out)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes the monitor stream as CSV.
pub fn write_monitors(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = String::from("t,mass,l2_u,h1_u,max_u,min_u,stress_margin\n");
    for m in &traj.monitors {
        fmt_row(&mut out, &[m.t, m.mass, m.l2, m.h1, m.max_u, m.min_u, m.stress_margin]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::laws::{constant_concentration, constant_state};
    use crate::coefficients::{homogenize, transform, PrimalCoefficients};
    use crate::grid_ops::build_grid;
    use std::f64::consts::PI;

    fn fick() -> TransformedCoefficients {
        transform(&PrimalCoefficients::fickian(1.0)).unwrap()
    }

    #[test]
    fn heat_equation_reduction() {
        let grid = build_grid(1, &[1.0], &[200]).unwrap();
        let tc = fick();
        let u0 = ScalarField::from_fn(&grid, |x| (PI * x[0]).sin());
        let s0 = State::new(0.0, u0, ScalarField::zeros(&grid)).unwrap();
        let traj = simulate(&grid, &s0, &tc, &BackgroundField::Zero, 0.1, 1e-4, &SimulateOptions::default()).unwrap();
        assert_eq!(traj.len(), 1001);
        let s = traj.last();
        assert!((s.t - 0.1).abs() < 1e-15);
        let err = (0..grid.node_count())
            .map(|n| (s.u.values[n] - (-PI * PI * 0.1).exp() * (PI * grid.position(n)[0]).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "error {err}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = build_grid(1, &[1.0], &[16]).unwrap();
        let traj = simulate(&grid, &State::zeros(&grid), &fick(), &BackgroundField::Zero, 0.1, 0.01, &SimulateOptions::default()).unwrap();
        assert!(traj.last().u.values.iter().chain(&traj.last().vs.values).all(|&v| v == 0.0));
    }

    #[test]
    fn misaligned_horizon_rejected() {
        let grid = build_grid(1, &[1.0], &[16]).unwrap();
        let r = simulate(&grid, &State::zeros(&grid), &fick(), &BackgroundField::Zero, 0.1, 0.03, &SimulateOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn steady_state_preserved() {
        let grid = build_grid(1, &[1.0], &[32]).unwrap();
        let (b, m, c) = (2.0, 0.6, 0.7);
        let p = PrimalCoefficients {
            d0: constant_state(0.8),
            e0: constant_state(0.3),
            beta0: constant_state(b),
            mu0: constant_concentration(m),
            ..PrimalCoefficients::fickian(1.0)
        };
        let tc = transform(&p).unwrap();
        let s0 = State::new(0.0, ScalarField::constant(&grid, c), ScalarField::constant(&grid, m * c / b)).unwrap();
        let phi = BackgroundField::analytic(move |_, _| c);
        let traj = simulate(&grid, &s0, &tc, &phi, 1.0, 0.01, &SimulateOptions::default()).unwrap();
        let s = traj.last();
        for n in 0..grid.node_count() {
            assert!((s.u.values[n] - c).abs() <= 1e-10);
            assert!((s.vs.values[n] - m * c / b).abs() <= 1e-10);
        }
    }

    #[test]
    fn dirichlet_diffusion_loses_mass() {
        let grid = build_grid(1, &[1.0], &[40]).unwrap();
        let u0 = ScalarField::from_fn(&grid, |x| x[0] * (1.0 - x[0]) * 4.0);
        let s0 = State::new(0.0, u0, ScalarField::zeros(&grid)).unwrap();
        let traj = simulate(&grid, &s0, &fick(), &BackgroundField::Zero, 0.2, 0.01, &SimulateOptions::default()).unwrap();
        for w in traj.monitors.windows(2) {
            assert!(w[1].mass <= w[0].mass + 1e-14);
        }
    }

    #[test]
    fn implicit_diffusion_is_stable_far_beyond_cfl() {
        let grid = build_grid(1, &[1.0], &[100]).unwrap();
        let h = 0.01;
        let dt = 1e3 * 0.5 * h * h;
        let u0 = ScalarField::from_fn(&grid, |x| (PI * x[0]).sin() + 0.3 * (7.0 * PI * x[0]).sin());
        let s0 = State::new(0.0, u0, ScalarField::zeros(&grid)).unwrap();
        let traj = simulate(&grid, &s0, &fick(), &BackgroundField::Zero, 20.0 * dt, dt, &SimulateOptions::default()).unwrap();
        assert!(traj.last().u.max_abs() <= 1.3);
    }

    #[test]
    fn biharmonic_mode_decay() {
        let grid = Arc::new(build_grid(1, &[1.0], &[64]).unwrap());
        let hc = homogenize(grid.clone(), Arc::new(fick()), BackgroundField::Zero, BackgroundField::Zero).unwrap();
        let eps = 1e-2;
        let dt = 1e-4;
        let lam_h = 4.0 / (grid.spacing()[0].powi(2)) * (PI * grid.spacing()[0] / 2.0).sin().powi(2);
        let v0 = ScalarField::from_fn(&grid, |x| (PI * x[0]).sin());
        let r = RegularizedState::new(&grid, 0.0, v0.clone(), ScalarField::zeros(&grid), eps, 0.0).unwrap();
        let st = RegularizedStepper::new(grid.clone(), StepOptions::default());
        let traj = st.simulate(&r, &hc, 0.1, dt).unwrap();
        let factor = traj.last().v.values[32] / v0.values[32];
        assert!((factor - (-eps * PI.powi(4) * 0.1).exp()).abs() < 5e-3);
        let discrete = (1.0 + dt * eps * lam_h * lam_h).powi(-1000);
        assert!((factor - discrete).abs() < 1e-10);

        // the derivative norm of a decaying mode
        let (dv, dtau) = derivative_norm_report(&grid, &traj);
        assert_eq!(dtau, 0.0);
        let rate = eps * PI.powi(4);
        let exact = (rate * rate / (2.0 * PI.powi(4)) * (1.0 - (-2.0 * rate * 0.1).exp()) / (2.0 * rate)).sqrt();
        assert!((dv - exact).abs() <= 0.05 * exact, "{dv} vs {exact}");
    }

    #[test]
    fn regularized_zero_state_stays_zero() {
        let grid = Arc::new(build_grid(1, &[1.0], &[16]).unwrap());
        let hc = homogenize(grid.clone(), Arc::new(fick()), BackgroundField::Zero, BackgroundField::Zero).unwrap();
        let r = RegularizedState::new(&grid, 0.0, ScalarField::zeros(&grid), ScalarField::zeros(&grid), 1e-3, 1.0).unwrap();
        let n = step_regularized(&r, &hc, 0.01).unwrap();
        assert!(n.v.values.iter().chain(&n.tau.values).all(|&x| x == 0.0));
    }

    #[test]
    fn stationary_trajectory_has_zero_derivative_norms() {
        let grid = build_grid(1, &[1.0], &[16]).unwrap();
        let s = RegularizedState::new(&grid, 0.0, ScalarField::zeros(&grid), ScalarField::zeros(&grid), 0.0, 1.0).unwrap();
        let traj = Trajectory {
            states: vec![s.clone(), s.clone(), s],
            dt: 0.1,
            scheme: String::new(),
            monitors: vec![],
            stress: None,
            max_principle: None,
        };
        assert_eq!(derivative_norm_report(&grid, &traj), (0.0, 0.0));
    }

    #[test]
    fn frames_and_monitors_export() {
        let grid = build_grid(1, &[1.0], &[8]).unwrap();
        let tc = fick();
        let traj = simulate(&grid, &State::zeros(&grid), &tc, &BackgroundField::Zero, 0.1, 0.01, &SimulateOptions::default()).unwrap();
        let dir = std::env::temp_dir().join(format!("nonfick-evolution-{}", std::process::id()));
        let paths = write_frames(&dir, &grid, &traj, &tc, 5).unwrap();
        assert_eq!(paths.len(), 3);
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(text.starts_with("t,x,u,varsigma,sigma\n"));
        assert_eq!(text.lines().count(), 10);
        write_monitors(&dir.join("monitors.csv"), &traj).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
