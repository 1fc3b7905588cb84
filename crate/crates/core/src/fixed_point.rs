//! Picard/shooting solvers for repeating and time-periodic solutions.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::{BackgroundField, HomogenizedCoefficients, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::estimates::{EstimateReport, HypothesisMode, HypothesisReport};
use crate::evolution::{simulate, RegularizedState, RegularizedStepper, SimulateOptions, State, StepOptions, Trajectory};
use crate::grid_ops::{norm, Grid, NormKind, ScalarField};
use crate::linalg::BandMatrix;
use crate::stress_kinetics::step_count;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Under-relaxation weight in `(0, 1]`.
    pub relaxation: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, relaxation: 1.0 }
    }
}

impl PicardOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Precondition(format!(
                "picard options need tol > 0, max_iter >= 1, relaxation in (0, 1]; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    /// `r_m = ||b_{m+1} - b_m||`.
    pub residuals: Vec<f64>,
    /// `r_{m+1} / r_m`.
    pub ratios: Vec<f64>,
    /// Least-squares geometric rate of the residual sequence.
    pub rate: Option<f64>,
    /// `||u(0) - u(T)||` of the returned solution (the last step size for
    /// bare Picard runs).
    pub final_residual: f64,
    /// `||varsigma(0) - varsigma(T)||` in periodic mode.
    pub stress_residual: Option<f64>,
    pub iterations: usize,
    pub accepted: bool,
    pub diverged: bool,
    /// Horizon exceeds the guaranteed contraction threshold.
    pub outside_guarantee: bool,
}

impl ConvergenceReport {
    pub fn tags(&self) -> Vec<&'static str> {
        let mut t = vec![if self.accepted { "accepted" } else { "not-accepted" }];
        if self.diverged {
            t.push("diverged");
        }
        if self.outside_guarantee {
            t.push("outside-guarantee");
        }
        t
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status: {}", self.tags().join(" "));
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let _ = writeln!(s, "final_residual: {:e}", self.final_residual);
        if let Some(r) = self.stress_residual {
            let _ = writeln!(s, "stress_residual: {r:e}");
        }
        match self.rate {
            Some(r) => {
                let _ = writeln!(s, "rate: {r}");
            }
            None => {
                let _ = writeln!(s, "rate: n/a");
            }
        }
        s
    }

    /// `iteration,residual,ratio` rows; the ratio is empty on the first row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("iteration,residual,ratio\n");
        for (m, r) in self.residuals.iter().enumerate() {
            let ratio = if m == 0 { String::new() } else { format!("{}", self.ratios[m - 1]) };
            let _ = writeln!(s, "{},{},{}", m + 1, r, ratio);
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

fn geometric_rate(res: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = res
        .iter()
        .enumerate()
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(m, r)| (m as f64, r.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some((sxy / sxx).exp())
}

/// Iterates `b <- (1 - w) b + w G(b)` until `norm(b_{m+1} - b_m) <= tol`.
///
/// Hitting `max_iter` or the divergence guard (ratio above 10 three times in
/// a row) returns a not-accepted report. Errors from `g` are wrapped with
/// the iteration index.
pub fn picard_iterate<G, N>(mut g: G, b0: Vec<f64>, opts: &PicardOptions, norm: N) -> Result<(Vec<f64>, ConvergenceReport)>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
    N: Fn(&[f64]) -> f64,
{
    opts.validate()?;
    let w = opts.relaxation;
    let mut b = b0;
    let mut rep = ConvergenceReport::default();
    let mut blowups = 0;
    for m in 0..opts.max_iter {
        let gb = g(&b).map_err(|e| Error::Shot { iteration: m + 1, source: Box::new(e) })?;
        if gb.len() != b.len() {
            return Err(Error::ShapeMismatch { expected: b.len(), found: gb.len() });
        }
        let next: Vec<f64> = b.iter().zip(&gb).map(|(x, y)| (1.0 - w) * x + w * y).collect();
        let diff: Vec<f64> = next.iter().zip(&b).map(|(x, y)| x - y).collect();
        let r = norm(&diff);
        rep.iterations = m + 1;
        if let Some(&prev) = rep.residuals.last() {
            let ratio = if prev > 0.0 { r / prev } else { f64::INFINITY };
            rep.ratios.push(ratio);
            blowups = if ratio > 10.0 { blowups + 1 } else { 0 };
        }
        rep.residuals.push(r);
        b = next;
        if !r.is_finite() || blowups >= 3 {
            rep.diverged = true;
            break;
        }
        if r <= opts.tol {
            rep.accepted = true;
            break;
        }
    }
    rep.final_residual = rep.residuals.last().copied().unwrap_or(f64::NAN);
    rep.rate = geometric_rate(&rep.residuals);
    Ok((b, rep))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShootingMode {
    Reproductive,
    Periodic,
    AbstractLinear,
}

/// Horizon, data and periodicity requirements of one shooting solve.
#[derive(Clone)]
pub struct ShootingProblem {
    pub mode: ShootingMode,
    pub grid: Arc<Grid>,
    pub horizon: f64,
    pub dt: f64,
    /// `a` in `u(T) + a = u(0)`.
    pub offset: Option<ScalarField>,
    /// Stress restart value of every reproductive shot.
    pub varsigma0: Option<ScalarField>,
    pub phi: BackgroundField,
    pub psi: BackgroundField,
}

const PERIODIC_TOL: f64 = 1e-12;

impl ShootingProblem {
    fn base(mode: ShootingMode, grid: Arc<Grid>, horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Precondition(format!("horizon T = {horizon} must be positive")));
        }
        step_count(horizon, dt)?;
        Ok(Self {
            mode,
            grid,
            horizon,
            dt,
            offset: None,
            varsigma0: None,
            phi: BackgroundField::Zero,
            psi: BackgroundField::Zero,
        })
    }

    pub fn reproductive(grid: Arc<Grid>, phi: BackgroundField, varsigma0: ScalarField, horizon: f64, dt: f64) -> Result<Self> {
        if varsigma0.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { expected: grid.node_count(), found: varsigma0.len() });
        }
        let mut p = Self::base(ShootingMode::Reproductive, grid, horizon, dt)?;
        p.phi = phi;
        p.varsigma0 = Some(varsigma0);
        Ok(p)
    }

    pub fn periodic(grid: Arc<Grid>, phi: BackgroundField, psi: BackgroundField, horizon: f64, dt: f64) -> Result<Self> {
        let mut p = Self::base(ShootingMode::Periodic, grid, horizon, dt)?;
        p.phi = phi;
        p.psi = psi;
        Ok(p)
    }

    pub fn abstract_linear(grid: Arc<Grid>, offset: ScalarField, horizon: f64, dt: f64) -> Result<Self> {
        if offset.len() != grid.node_count() {
            return Err(Error::ShapeMismatch { expected: grid.node_count(), found: offset.len() });
        }
        let mut p = Self::base(ShootingMode::AbstractLinear, grid, horizon, dt)?;
        p.offset = Some(offset);
        Ok(p)
    }

    /// `phi(0) = phi(T)` at every node.
    pub fn check_boundary_periodicity(&self) -> Result<()> {
        for (name, f) in [("phi", &self.phi), ("psi", &self.psi)] {
            let a = f.nodal(&self.grid, 0.0);
            let b = f.nodal(&self.grid, self.horizon);
            let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if gap > PERIODIC_TOL {
                return Err(Error::Precondition(format!("{name}(0) and {name}(T) differ by {gap:e}")));
            }
        }
        Ok(())
    }

    /// Sampled `|c(0, x, u, s) - c(T, x, u, s)| <= 1e-12` for every transformed coefficient.
    pub fn check_coefficient_periodicity(&self, tc: &TransformedCoefficients, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ulo, uhi) = tc.primal.u_range;
        let lengths = self.grid.lengths().to_vec();
        for _ in 0..samples {
            let mut x = [0.0; 2];
            for (k, l) in lengths.iter().enumerate() {
                x[k] = rng.gen::<f64>() * l;
            }
            let u = ulo + (uhi - ulo) * rng.gen::<f64>();
            let s = rng.gen_range(-2.0..2.0);
            let a = tc.at(0.0, x, u, s);
            let b = tc.at(self.horizon, x, u, s);
            let pairs = [
                ("D", a.d1, b.d1),
                ("E", a.e1, b.e1),
                ("M_x", a.m1[0], b.m1[0]),
                ("M_y", a.m1[1], b.m1[1]),
                ("beta", a.beta1, b.beta1),
                ("gamma", a.gamma, b.gamma),
            ];
            for (name, p, q) in pairs {
                if (p - q).abs() > PERIODIC_TOL * p.abs().max(1.0) {
                    return Err(Error::Precondition(format!(
                        "coefficient {name} is not T-periodic at x = {x:?}, u = {u}, s = {s}: {p} vs {q}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn l2_norm(grid: &Grid) -> impl Fn(&[f64]) -> f64 + '_ {
    move |v: &[f64]| norm(grid, &ScalarField::new(v.to_vec(), 0.0), NormKind::L2)
}

fn pair_norm(grid: &Grid) -> impl Fn(&[f64]) -> f64 + '_ {
    move |v: &[f64]| {
        let n = grid.node_count();
        let a = norm(grid, &ScalarField::new(v[..n].to_vec(), 0.0), NormKind::L2);
        let b = norm(grid, &ScalarField::new(v[n..].to_vec(), 0.0), NormKind::L2);
        a.hypot(b)
    }
}

/// Result of the abstract linear solve `u' + A u = f`, `u(T) + a = u(0)`.
#[derive(Clone, Debug)]
pub struct AbstractSolution {
    /// Fixed initial value on interior unknowns.
    pub b: Vec<f64>,
    /// Implicit-Euler states from `b`.
    pub trajectory: Vec<Vec<f64>>,
    /// Estimated coercivity constant of `A`.
    pub alpha: f64,
    pub report: ConvergenceReport,
}

/// Smallest eigenvalue of an SPD band matrix by inverse iteration; fails for
/// matrices that are not positive definite.
pub fn coercivity_constant(a: &BandMatrix, seed: u64) -> Result<f64> {
    let chol = a.cholesky().map_err(|e| Error::Precondition(format!("operator is not coercive: {e}")))?;
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
    let mut rq = f64::NAN;
    for _ in 0..500 {
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = a.mul_vec(&x);
        let next_rq = dot(&x, &ax);
        if (next_rq - rq).abs() <= 1e-14 * next_rq.abs() {
            rq = next_rq;
            break;
        }
        rq = next_rq;
        x = chol.solve(&x);
    }
    if !(rq > 0.0) {
        return Err(Error::Precondition(format!("operator is not coercive: Rayleigh quotient {rq:e}")));
    }
    Ok(rq)
}

/// Implicit-Euler propagation of `u' + A u = f(t)` over `[0, T]`.
pub fn propagate_linear(
    a: &BandMatrix,
    forcing: Option<&dyn Fn(f64) -> Vec<f64>>,
    b: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    let steps = step_count(horizon, dt)?;
    let chol = BandMatrix::identity(a.dim()).plus_scaled(dt, a).cholesky()?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(b.to_vec());
    for k in 0..steps {
        let mut rhs = out[k].clone();
        if let Some(f) = forcing {
            let fk = f((k + 1) as f64 * dt);
            if fk.len() != rhs.len() {
                return Err(Error::ShapeMismatch { expected: rhs.len(), found: fk.len() });
            }
            rhs.iter_mut().zip(&fk).for_each(|(r, f)| *r += dt * f);
        }
        chol.solve_in_place(&mut rhs);
        out.push(rhs);
    }
    Ok(out)
}

/// Shooting for `u(T) + a = u(0)` with `G(b) = u_b(T) + a` on interior
/// unknowns of `problem.grid`. `a_op` must be coercive.
pub fn solve_reproductive_abstract(
    problem: &ShootingProblem,
    a_op: &BandMatrix,
    forcing: Option<&dyn Fn(f64) -> Vec<f64>>,
    opts: &PicardOptions,
    start: Option<&[f64]>,
) -> Result<AbstractSolution> {
    let grid = &*problem.grid;
    let n = grid.interior().len();
    if a_op.dim() != n {
        return Err(Error::ShapeMismatch { expected: n, found: a_op.dim() });
    }
    let alpha = coercivity_constant(a_op, 17)?;
    let offset = match &problem.offset {
        Some(a) => grid.gather_interior(&a.values),
        None => vec![0.0; n],
    };
    let b0 = start.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b0.len() != n {
        return Err(Error::ShapeMismatch { expected: n, found: b0.len() });
    }
    let norm_i = |v: &[f64]| l2_norm(grid)(&grid.scatter_interior(v));
    let (b, report) = picard_iterate(
        |b| {
            let traj = propagate_linear(a_op, forcing, b, problem.horizon, problem.dt)?;
            let end = traj.last().expect("at least one state");
            Ok(end.iter().zip(&offset).map(|(u, a)| u + a).collect())
        },
        b0,
        opts,
        norm_i,
    )?;
    let trajectory = propagate_linear(a_op, forcing, &b, problem.horizon, problem.dt)?;
    Ok(AbstractSolution { b, trajectory, alpha, report })
}

#[derive(Clone, Debug, Default)]
pub struct ShootingOptions {
    pub picard: PicardOptions,
    /// Used for every shot and the returned trajectory.
    pub simulate: SimulateOptions,
    /// Initial guess for `u(0)` (and `varsigma(0)` in periodic mode).
    pub start_u: Option<ScalarField>,
    pub start_varsigma: Option<ScalarField>,
}

#[derive(Clone, Debug)]
pub struct ShootingSolution {
    pub trajectory: Trajectory,
    pub report: ConvergenceReport,
}

impl ShootingSolution {
    pub fn initial(&self) -> &State {
        self.trajectory.first()
    }

    /// `t,x[,y],u,varsigma` of the final state.
    pub fn write_final_state(&self, grid: &Grid, path: &Path) -> Result<()> {
        write_state_csv(grid, self.trajectory.last(), path)
    }
}

/// Writes one state as `t,x[,y],u,varsigma` rows.
pub fn write_state_csv(grid: &Grid, s: &State, path: &Path) -> Result<()> {
    let mut out = String::from(if grid.dim() == 1 { "t,x,u,varsigma\n" } else { "t,x,y,u,varsigma\n" });
    for n in 0..grid.node_count() {
        let p = grid.position(n);
        if grid.dim() == 1 {
            let _ = writeln!(out, "{},{},{},{}", s.t, p[0], s.u.values[n], s.vs.values[n]);
        } else {
            let _ = writeln!(out, "{},{},{},{},{}", s.t, p[0], p[1], s.u.values[n], s.vs.values[n]);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn with_boundary(grid: &Grid, values: &[f64], phi0: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    for &n in grid.boundary() {
        v[n] = phi0[n];
    }
    v
}

fn require_mode(problem: &ShootingProblem, mode: ShootingMode) -> Result<()> {
    if problem.mode != mode {
        return Err(Error::Precondition(format!("expected a {mode:?} problem, got {:?}", problem.mode)));
    }
    Ok(())
}

/// Shooting for `u(0) = u(T)` with the stress restarted from `varsigma0`
/// on every shot. Runs past the contraction threshold `T0` but tags the
/// report as outside the guarantee.
pub fn solve_reproductive_concentration(
    problem: &ShootingProblem,
    tc: &TransformedCoefficients,
    estimates: &EstimateReport,
    opts: &ShootingOptions,
) -> Result<ShootingSolution> {
    require_mode(problem, ShootingMode::Reproductive)?;
    if !(estimates.certificate.d > 0.0) {
        return Err(Error::Certificate(format!("ellipticity constant d = {} is not positive", estimates.certificate.d)));
    }
    problem.check_boundary_periodicity()?;
    let grid = &*problem.grid;
    let vs0 = problem.varsigma0.clone().expect("reproductive problems carry varsigma0");
    let phi0 = problem.phi.nodal(grid, 0.0);
    let b0 = match &opts.start_u {
        Some(s) => with_boundary(grid, &s.values, &phi0),
        None => phi0.clone(),
    };
    if b0.len() != grid.node_count() {
        return Err(Error::ShapeMismatch { expected: grid.node_count(), found: b0.len() });
    }
    let shot_opts = SimulateOptions { monitors: Default::default(), ..opts.simulate };
    let shoot = |b: &[f64], o: &SimulateOptions| {
        let s0 = State::new(0.0, ScalarField::new(b.to_vec(), 0.0), vs0.clone())?;
        simulate(grid, &s0, tc, &problem.phi, problem.horizon, problem.dt, o)
    };
    let (b, mut report) = picard_iterate(|b| Ok(shoot(b, &shot_opts)?.last().u.values.clone()), b0, &opts.picard, l2_norm(grid))?;
    let trajectory = shoot(&b, &opts.simulate).map_err(|e| Error::Shot { iteration: report.iterations + 1, source: Box::new(e) })?;
    let end = &trajectory.last().u.values;
    let gap: Vec<f64> = b.iter().zip(end).map(|(x, y)| x - y).collect();
    report.final_residual = l2_norm(grid)(&gap);
    report.accepted = report.accepted && report.final_residual <= opts.picard.tol;
    report.outside_guarantee = !estimates.guarantees(problem.horizon);
    Ok(ShootingSolution { trajectory, report })
}

/// Extracts the coercivity pair from a periodic hypothesis report, refusing
/// when the coercivity condition or the state-free majorants fail.
pub fn periodic_gate(report: Option<&HypothesisReport>) -> Result<(f64, f64)> {
    let r = report.ok_or_else(|| {
        Error::Certificate("periodic solve needs a coercivity certificate (Gamma, Gamma0); none was supplied".into())
    })?;
    if r.mode != HypothesisMode::Periodic {
        return Err(Error::Certificate("hypothesis report was not produced in periodic mode".into()));
    }
    let (g, g0) = r.coercivity.ok_or_else(|| {
        let why = r.check("coercivity").map_or_else(String::new, |c| c.detail.clone());
        Error::Certificate(format!("no coercivity certificate: {why}"))
    })?;
    for name in ["state-free f majorant", "state-free g majorant", "ellipticity"] {
        if let Some(c) = r.check(name) {
            if !c.passed {
                return Err(Error::Certificate(format!("{name} check failed: {}", c.detail)));
            }
        }
    }
    Ok((g, g0))
}

/// Picard on `(u(0), varsigma(0)) -> (u(T), varsigma(T))`.
pub fn solve_periodic(
    problem: &ShootingProblem,
    tc: &TransformedCoefficients,
    hypotheses: Option<&HypothesisReport>,
    opts: &ShootingOptions,
) -> Result<ShootingSolution> {
    require_mode(problem, ShootingMode::Periodic)?;
    periodic_gate(hypotheses)?;
    problem.check_boundary_periodicity()?;
    problem.check_coefficient_periodicity(tc, 256, 5)?;
    let grid = &*problem.grid;
    let n = grid.node_count();
    let phi0 = problem.phi.nodal(grid, 0.0);
    let mut b0 = match &opts.start_u {
        Some(s) => with_boundary(grid, &s.values, &phi0),
        None => phi0.clone(),
    };
    match &opts.start_varsigma {
        Some(s) => b0.extend_from_slice(&s.values),
        None => b0.extend(std::iter::repeat(0.0).take(n)),
    }
    if b0.len() != 2 * n {
        return Err(Error::ShapeMismatch { expected: 2 * n, found: b0.len() });
    }
    let shot_opts = SimulateOptions { monitors: Default::default(), ..opts.simulate };
    let shoot = |b: &[f64], o: &SimulateOptions| {
        let s0 = State::new(0.0, ScalarField::new(b[..n].to_vec(), 0.0), ScalarField::new(b[n..].to_vec(), 0.0))?;
        simulate(grid, &s0, tc, &problem.phi, problem.horizon, problem.dt, o)
    };
    let (b, mut report) = picard_iterate(
        |b| {
            let tr = shoot(b, &shot_opts)?;
            let last = tr.last();
            let mut out = last.u.values.clone();
            out.extend_from_slice(&last.vs.values);
            Ok(out)
        },
        b0,
        &opts.picard,
        pair_norm(grid),
    )?;
    let trajectory = shoot(&b, &opts.simulate).map_err(|e| Error::Shot { iteration: report.iterations + 1, source: Box::new(e) })?;
    let last = trajectory.last();
    let du: Vec<f64> = b[..n].iter().zip(&last.u.values).map(|(x, y)| x - y).collect();
    let ds: Vec<f64> = b[n..].iter().zip(&last.vs.values).map(|(x, y)| x - y).collect();
    report.final_residual = l2_norm(grid)(&du);
    report.stress_residual = Some(l2_norm(grid)(&ds));
    report.accepted = report.accepted
        && report.final_residual <= opts.picard.tol
        && report.stress_residual.is_some_and(|r| r <= opts.picard.tol);
    Ok(ShootingSolution { trajectory, report })
}

#[derive(Clone, Debug)]
pub struct ContinuationStage {
    pub eps: f64,
    pub lambda: f64,
    pub v0: ScalarField,
    pub tau0: ScalarField,
    pub report: ConvergenceReport,
}

#[derive(Clone, Debug)]
pub struct ContinuationOptions {
    pub eps: Vec<f64>,
    pub lambda: Vec<f64>,
    pub picard: PicardOptions,
    pub step: StepOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            eps: vec![1e-2, 1e-3, 1e-4],
            lambda: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            picard: PicardOptions::default(),
            step: StepOptions::default(),
        }
    }
}

/// Periodic solutions of the regularized homogenized system along an
/// `(eps, lambda)` schedule, each stage warm-started from the previous one.
///
/// The `lambda` ramp runs at the first `eps`; every later `eps` solves at
/// the last ramp value, warm-started from the previous `eps`. At
/// `lambda = 0` the system is homogeneous and its only periodic solution is
/// zero, so that stage is recorded without iterating.
pub fn solve_periodic_regularized(
    problem: &ShootingProblem,
    hc: &HomogenizedCoefficients,
    hypotheses: Option<&HypothesisReport>,
    opts: &ContinuationOptions,
) -> Result<Vec<ContinuationStage>> {
    require_mode(problem, ShootingMode::Periodic)?;
    periodic_gate(hypotheses)?;
    problem.check_boundary_periodicity()?;
    if opts.eps.iter().any(|e| !(*e > 0.0)) || opts.lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::Precondition("continuation needs eps > 0 and lambda in [0, 1]".into()));
    }
    let grid = problem.grid.clone();
    let n = grid.node_count();
    let stepper = RegularizedStepper::new(grid.clone(), opts.step);
    let mut warm = vec![0.0; 2 * n];
    let mut stages = Vec::new();
    let last_lambda = *opts.lambda.last().ok_or_else(|| Error::Precondition("empty lambda ramp".into()))?;
    for (k, &eps) in opts.eps.iter().enumerate() {
        let ramp: &[f64] = if k == 0 { &opts.lambda } else { std::slice::from_ref(&last_lambda) };
        for &lambda in ramp {
            if lambda == 0.0 {
                warm.iter_mut().for_each(|x| *x = 0.0);
                stages.push(ContinuationStage {
                    eps,
                    lambda,
                    v0: ScalarField::zeros(&grid),
                    tau0: ScalarField::zeros(&grid),
                    report: ConvergenceReport { accepted: true, final_residual: 0.0, ..Default::default() },
                });
                continue;
            }
            let (b, report) = picard_iterate(
                |b| {
                    let r0 = RegularizedState::new(
                        &grid,
                        0.0,
                        ScalarField::new(b[..n].to_vec(), 0.0),
                        ScalarField::new(b[n..].to_vec(), 0.0),
                        eps,
                        lambda,
                    )?;
                    let tr = stepper.simulate(&r0, hc, problem.horizon, problem.dt)?;
                    let last = tr.last();
                    let mut out = last.v.values.clone();
                    out.extend_from_slice(&last.tau.values);
                    Ok(out)
                },
                warm.clone(),
                &opts.picard,
                pair_norm(&grid),
            )?;
            warm.clone_from(&b);
            stages.push(ContinuationStage {
                eps,
                lambda,
                v0: ScalarField::new(b[..n].to_vec(), 0.0),
                tau0: ScalarField::new(b[n..].to_vec(), 0.0),
                report,
            });
        }
    }
    Ok(stages)
}
