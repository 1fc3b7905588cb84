//! Pointwise stress dynamics `varsigma' = beta1 varsigma + gamma u`.
//!
//! Each node is advanced by an exponential integrator: over a substep of
//! length `h`, `beta1` is replaced by the mean of its endpoint values and
//! `gamma u` by its linear interpolant, both integrated exactly. A predictor
//! with frozen stress is followed by one corrector pass.

use crate::coefficients::{BackgroundField, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::grid_ops::{Grid, Point, ScalarField};

/// How `u` varies across a stress step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UInterpolation {
    HeldLeft,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressStepPlan {
    dt: f64,
    interpolation: UInterpolation,
    nodes: usize,
}

impl StressStepPlan {
    /// Two quadrature nodes, linear-in-time `u`.
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("stress step needs dt > 0, got {dt}")));
        }
        Ok(Self { dt, interpolation: UInterpolation::Linear, nodes: 2 })
    }

    pub fn with_nodes(mut self, nodes: usize) -> Result<Self> {
        if !(2..=5).contains(&nodes) {
            return Err(Error::Precondition(format!("quadrature nodes must be in 2..=5, got {nodes}")));
        }
        self.nodes = nodes;
        Ok(self)
    }

    pub fn with_interpolation(mut self, interpolation: UInterpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn interpolation(&self) -> UInterpolation {
        self.interpolation
    }
}

/// `(e^z - 1) / z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // Horner form of sum_{k>=0} z^k / (k + 2)!
        let mut acc = 0.0;
        let mut fact = [0.0; 11];
        let mut f = 1.0;
        for (k, slot) in fact.iter_mut().enumerate() {
            f *= (k + 1) as f64;
            *slot = f;
        }
        for k in (0..10).rev() {
            acc = acc * z + 1.0 / fact[k + 1];
        }
        acc
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Exact solution over `h` of `y' = b y + g(s)` with `b = (ba + bb)/2` and
/// `g` linear from `ga` to `gb`.
#[inline]
fn advance(y: f64, ba: f64, bb: f64, ga: f64, gb: f64, h: f64) -> f64 {
    let z = 0.5 * (ba + bb) * h;
    y * z.exp() + h * (ga * phi1(z) + (gb - ga) * phi2(z))
}

/// Advances the stress at one point from `t` to `t + plan.dt`, with `u`
/// going from `u0` to `u1`.
#[allow(clippy::too_many_arguments)]
pub fn stress_step_point(
    tc: &TransformedCoefficients,
    t: f64,
    x: Point,
    vs: f64,
    u0: f64,
    u1: f64,
    plan: &StressStepPlan,
) -> f64 {
    let m = plan.nodes - 1;
    let h = plan.dt / m as f64;
    let u_at = |r: f64| match plan.interpolation {
        UInterpolation::HeldLeft => u0,
        UInterpolation::Linear => u0 + r * (u1 - u0),
    };
    let mut y = vs;
    for j in 0..m {
        let sa = t + j as f64 * h;
        let sb = if j + 1 == m { t + plan.dt } else { sa + h };
        let ua = u_at(j as f64 / m as f64);
        let ub = u_at((j + 1) as f64 / m as f64);
        let ca = tc.at(sa, x, ua, y);
        let ga = ca.gamma * ua;
        let cp = tc.at(sb, x, ub, y);
        let pred = advance(y, ca.beta1, cp.beta1, ga, cp.gamma * ub, h);
        let cc = tc.at(sb, x, ub, pred);
        y = advance(y, ca.beta1, cc.beta1, ga, cc.gamma * ub, h);
    }
    y
}

/// One stress step on every node. `u_left` and `u_right` are the
/// concentrations at `vs.t` and `vs.t + dt`; boundary nodes are advanced
/// like interior ones.
pub fn stress_step(
    grid: &Grid,
    vs: &ScalarField,
    u_left: &ScalarField,
    u_right: &ScalarField,
    tc: &TransformedCoefficients,
    plan: &StressStepPlan,
) -> Result<ScalarField> {
    let n = grid.node_count();
    for len in [vs.len(), u_left.len(), u_right.len()] {
        if len != n {
            return Err(Error::ShapeMismatch { expected: n, found: len });
        }
    }
    let mut out = Vec::with_capacity(n);
    for node in 0..n {
        let y = stress_step_point(
            tc,
            vs.t,
            grid.position(node),
            vs.values[node],
            u_left.values[node],
            u_right.values[node],
            plan,
        );
        if !y.is_finite() {
            return Err(Error::NonFinite { what: "stress step", node });
        }
        out.push(y);
    }
    Ok(ScalarField::new(out, vs.t + plan.dt))
}

/// Time series of `psi` on a set of nodes, sampled at a uniform step.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub dt: f64,
    pub nodes: Vec<usize>,
    pub initial: Vec<f64>,
    /// `values[k][slot]` is `psi` at `t = k dt` on `nodes[slot]`.
    pub values: Vec<Vec<f64>>,
}

impl BoundaryTrace {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    /// Linear interpolation in time on one slot.
    pub fn value(&self, t: f64, slot: usize) -> f64 {
        let s = (t / self.dt).clamp(0.0, self.steps() as f64);
        let k = (s.floor() as usize).min(self.steps().saturating_sub(1));
        let r = s - k as f64;
        let a = self.values[k][slot];
        if self.steps() == 0 {
            return a;
        }
        a + r * (self.values[k + 1][slot] - a)
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().expect("trace has at least the initial frame")
    }

    /// Tabulated background field; only valid when `nodes` covers the grid.
    pub fn into_background(self) -> BackgroundField {
        BackgroundField::Tabulated { t0: 0.0, dt: self.dt, frames: self.values }
    }
}

/// Number of whole steps of length `dt` in `t`; errors when `t` is not a multiple.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(t > 0.0 && dt > 0.0) {
        return Err(Error::Precondition(format!("need T > 0 and dt > 0, got T={t}, dt={dt}")));
    }
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * t || k < 1.0 {
        return Err(Error::Precondition(format!("T = {t} is not a multiple of dt = {dt}")));
    }
    Ok(k as usize)
}

/// Classical RK4 for `psi' = beta1(t, x, phi, psi) psi + gamma(t, x, phi, psi) phi`
/// on the given nodes.
#[allow(clippy::too_many_arguments)]
pub fn solve_psi_nodes(
    grid: &Grid,
    nodes: &[usize],
    phi: &BackgroundField,
    vs0: &[f64],
    tc: &TransformedCoefficients,
    t_end: f64,
    dt: f64,
) -> Result<BoundaryTrace> {
    if vs0.len() != nodes.len() {
        return Err(Error::ShapeMismatch { expected: nodes.len(), found: vs0.len() });
    }
    let steps = step_count(t_end, dt)?;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(vs0.to_vec());
    let mut cur = vs0.to_vec();
    for k in 0..steps {
        let t = k as f64 * dt;
        for (slot, &node) in nodes.iter().enumerate() {
            let x = grid.position(node);
            let rhs = |s: f64, y: f64| {
                let p = phi.at_node(grid, s, node);
                let c = tc.at(s, x, p, y);
                c.beta1 * y + c.gamma * p
            };
            let y = cur[slot];
            let k1 = rhs(t, y);
            let k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1);
            let k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2);
            let k4 = rhs(t + dt, y + dt * k3);
            let next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let limit = 1e6 * (vs0[slot].abs() + 1.0);
            if !next.is_finite() || next.abs() > limit {
                return Err(Error::Certificate(format!(
                    "boundary stress ODE blew up at node {node}, t = {}: |psi| = {:e}",
                    t + dt,
                    next.abs()
                )));
            }
            cur[slot] = next;
        }
        values.push(cur.clone());
    }
    Ok(BoundaryTrace { dt, nodes: nodes.to_vec(), initial: vs0.to_vec(), values })
}

/// `psi` on the boundary nodes, started from the trace of `vs0`.
pub fn solve_boundary_psi(
    grid: &Grid,
    phi: &BackgroundField,
    vs0: &ScalarField,
    tc: &TransformedCoefficients,
    t_end: f64,
    dt: f64,
) -> Result<BoundaryTrace> {
    solve_psi_nodes(grid, grid.boundary(), phi, &vs0.boundary_trace(grid), tc, t_end, dt)
}

/// `psi` extended to every node by solving the same ODE with `u = phi`;
/// the boundary slots coincide with [`solve_boundary_psi`].
pub fn psi_field(
    grid: &Grid,
    phi: &BackgroundField,
    vs0: &ScalarField,
    tc: &TransformedCoefficients,
    t_end: f64,
    dt: f64,
) -> Result<BoundaryTrace> {
    let all: Vec<usize> = (0..grid.node_count()).collect();
    solve_psi_nodes(grid, &all, phi, &vs0.values, tc, t_end, dt)
}

/// Time-periodic `psi` on every node for `T`-periodic `phi` and
/// coefficients, found by iterating `psi(0) <- psi(T)`.
pub fn periodic_psi_field(
    grid: &Grid,
    phi: &BackgroundField,
    tc: &TransformedCoefficients,
    period: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BoundaryTrace> {
    let all: Vec<usize> = (0..grid.node_count()).collect();
    let mut start = vec![0.0; all.len()];
    for _ in 0..max_iter {
        let trace = solve_psi_nodes(grid, &all, phi, &start, tc, period, dt)?;
        let end = trace.last();
        let gap = end.iter().zip(&start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap <= tol {
            return Ok(trace);
        }
        start = end.to_vec();
    }
    Err(Error::NonConvergence { what: "periodic boundary stress", iterations: max_iter })
}

/// Result of checking `|varsigma(t,x)| <= e^{-t beta_G} |varsigma_0(x)| + C_gamma / beta_G`.
#[derive(Clone, Debug, PartialEq)]
pub struct StressBoundReport {
    pub beta_g: f64,
    pub c_gamma: f64,
    /// Smallest `bound - |varsigma|` over the history (negative on violation).
    pub worst_margin: f64,
    /// `(t, node)` of every violation beyond the 1e-8 slack.
    pub violations: Vec<(f64, usize)>,
}

impl StressBoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Monitors the a priori stress bound over a stress history.
pub fn stress_bound_check(
    history: &[ScalarField],
    vs0: &ScalarField,
    beta_g: f64,
    c_gamma: f64,
) -> StressBoundReport {
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for frame in history {
        let decay = (-(frame.t - vs0.t) * beta_g).exp();
        for (node, (&s, &s0)) in frame.values.iter().zip(&vs0.values).enumerate() {
            let margin = decay * s0.abs() + c_gamma / beta_g - s.abs();
            worst = worst.min(margin);
            if margin < -1e-8 {
                violations.push((frame.t, node));
            }
        }
    }
    StressBoundReport { beta_g, c_gamma, worst_margin: worst, violations }
}

/// `sigma = varsigma + N(u)`.
pub fn sigma_of_varsigma(vs: &ScalarField, u: &ScalarField, tc: &TransformedCoefficients) -> ScalarField {
    let values = vs.values.iter().zip(&u.values).map(|(&s, &u)| tc.sigma(u, s)).collect();
    ScalarField::new(values, vs.t)
}

/// `varsigma = sigma - N(u)`.
pub fn varsigma_of_sigma(sigma: &ScalarField, u: &ScalarField, tc: &TransformedCoefficients) -> ScalarField {
    let values = sigma
        .values
        .iter()
        .zip(&u.values)
        .map(|(&s, &u)| s - tc.nu_integral.integral(u))
        .collect();
    ScalarField::new(values, sigma.t)
}
