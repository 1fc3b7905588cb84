//! Primal coefficient bundle and the purely non-Fickian change of variables
//! `varsigma = sigma - N(u)` with `N(u) = int_0^u nu0(y) dy`.

use std::sync::Arc;

use super::laws::{
    constant_concentration, constant_state, constant_vector, ConcentrationLaw, Partials,
    PartialsLaw, StateLaw, VectorLaw,
};
use crate::error::{Error, Result};
use crate::grid_ops::Point;

/// The `nu0` coefficient of the split stress source.
#[derive(Clone)]
pub enum NuLaw {
    Constant(f64),
    Function(ConcentrationLaw),
}

impl NuLaw {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            NuLaw::Constant(c) => *c,
            NuLaw::Function(f) => f(u),
        }
    }
}

/// Coefficients of the model in the original `(u, sigma)` variables.
/// Tensors are scalar multiples of the identity.
#[derive(Clone)]
pub struct PrimalCoefficients {
    pub d0: StateLaw,
    pub e0: StateLaw,
    pub m0: VectorLaw,
    pub beta0: StateLaw,
    pub mu0: ConcentrationLaw,
    pub nu0: NuLaw,
    /// Analytic `(d/dx, d/du, d/dsigma)` of `beta0`.
    pub beta0_partials: Option<PartialsLaw>,
    /// Concentration range over which `N(u)` is tabulated.
    pub u_range: (f64, f64),
}

impl PrimalCoefficients {
    /// Pure Fick law with constant diffusivity; stress relaxes at rate 1 with no source.
    pub fn fickian(d: f64) -> Self {
        Self {
            d0: constant_state(d),
            e0: constant_state(0.0),
            m0: constant_vector([0.0, 0.0]),
            beta0: constant_state(1.0),
            mu0: constant_concentration(0.0),
            nu0: NuLaw::Constant(0.0),
            beta0_partials: Some(Arc::new(|_, _, _, _| Partials::default())),
            u_range: (-1.0, 2.0),
        }
    }
}

const TABLE_INTERVALS: usize = 10_000;
const QUAD_TOL: f64 = 1e-10;

/// Memoized `N(u) = int_0^u nu0` on a uniform table with cubic Hermite
/// interpolation (the nodal slopes are `nu0` itself).
#[derive(Clone)]
pub struct NuIntegral {
    nu: NuLaw,
    table: Option<NuTable>,
}

#[derive(Clone)]
struct NuTable {
    u0: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NonConvergence { what: "adaptive Simpson quadrature", iterations: 50 });
    }
    Ok(adaptive_simpson(f, a, m, left, 0.5 * tol, depth - 1)?
        + adaptive_simpson(f, m, b, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    adaptive_simpson(f, a, b, simpson(f, a, b), tol, 50)
}

impl NuIntegral {
    pub fn new(nu: NuLaw, range: (f64, f64)) -> Result<Self> {
        let table = match &nu {
            NuLaw::Constant(_) => None,
            NuLaw::Function(f) => {
                let (lo, hi) = (range.0.min(0.0), range.1.max(0.0));
                let h = (hi - lo) / TABLE_INTERVALS as f64;
                let below = (-lo / h).ceil() as usize;
                let above = (hi / h).ceil() as usize;
                let count = below + above + 1;
                let u0 = -(below as f64) * h;
                let mut values = vec![0.0; count];
                let f: &dyn Fn(f64) -> f64 = &**f;
                let tol = QUAD_TOL / TABLE_INTERVALS as f64;
                for k in (below + 1)..count {
                    let (a, b) = (u0 + (k - 1) as f64 * h, u0 + k as f64 * h);
                    values[k] = values[k - 1] + integrate(f, a, b, tol)?;
                }
                for k in (0..below).rev() {
                    let (a, b) = (u0 + k as f64 * h, u0 + (k + 1) as f64 * h);
                    values[k] = values[k + 1] - integrate(f, a, b, tol)?;
                }
                let slopes = (0..count).map(|k| f(u0 + k as f64 * h)).collect();
                Some(NuTable { u0, h, values, slopes })
            }
        };
        Ok(Self { nu, table })
    }

    pub fn nu(&self, u: f64) -> f64 {
        self.nu.eval(u)
    }

    /// `int_0^u nu0(y) dy`.
    pub fn integral(&self, u: f64) -> f64 {
        match (&self.nu, &self.table) {
            (NuLaw::Constant(c), _) => c * u,
            (NuLaw::Function(f), Some(t)) => {
                let s = (u - t.u0) / t.h;
                if s < 0.0 || s > (t.values.len() - 1) as f64 {
                    let f: &dyn Fn(f64) -> f64 = &**f;
                    return integrate(f, 0.0, u, QUAD_TOL)
                        .unwrap_or_else(|_| simpson(f, 0.0, u));
                }
                let k = (s.floor() as usize).min(t.values.len() - 2);
                let r = s - k as f64;
                let (y0, y1) = (t.values[k], t.values[k + 1]);
                let (m0, m1) = (t.slopes[k] * t.h, t.slopes[k + 1] * t.h);
                let r2 = r * r;
                let r3 = r2 * r;
                (2.0 * r3 - 3.0 * r2 + 1.0) * y0
                    + (r3 - 2.0 * r2 + r) * m0
                    + (-2.0 * r3 + 3.0 * r2) * y1
                    + (r3 - r2) * m1
            }
            (NuLaw::Function(_), None) => unreachable!("function laws are tabulated"),
        }
    }

    /// `N(u) / u`, continued by `nu0(0)` at `u = 0`.
    pub fn average(&self, u: f64) -> f64 {
        match &self.nu {
            NuLaw::Constant(c) => *c,
            NuLaw::Function(f) => {
                if u.abs() < 1e-6 {
                    (f(0.0) + 4.0 * f(0.5 * u) + f(u)) / 6.0
                } else {
                    self.integral(u) / u
                }
            }
        }
    }
}

/// Coefficient values of the transformed system at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub d1: f64,
    pub e1: f64,
    pub m1: [f64; 2],
    pub beta1: f64,
    pub gamma: f64,
}

/// Coefficients of the `(u, varsigma)` system
/// `u' = div[D1 grad u + E1 grad varsigma + M1 u]`,
/// `varsigma' = beta1 varsigma + gamma u`.
#[derive(Clone)]
pub struct TransformedCoefficients {
    pub primal: PrimalCoefficients,
    pub nu_integral: NuIntegral,
    /// Analytic partials of `gamma`; finite differences are used when absent.
    pub gamma_partials: Option<PartialsLaw>,
    /// Allows the centred finite-difference fallback for missing partials.
    pub fd_fallback: bool,
}

/// Builds the transformed coefficients from the primal bundle.
pub fn transform(c: &PrimalCoefficients) -> Result<TransformedCoefficients> {
    let nu_integral = NuIntegral::new(c.nu0.clone(), c.u_range)?;
    Ok(TransformedCoefficients {
        primal: c.clone(),
        nu_integral,
        gamma_partials: None,
        fd_fallback: true,
    })
}

fn fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

impl TransformedCoefficients {
    pub fn with_gamma_partials(mut self, p: PartialsLaw) -> Self {
        self.gamma_partials = Some(p);
        self
    }

    pub fn without_fd_fallback(mut self) -> Self {
        self.fd_fallback = false;
        self
    }

    /// Primal stress `sigma = varsigma + N(u)`.
    #[inline]
    pub fn sigma(&self, u: f64, varsigma: f64) -> f64 {
        varsigma + self.nu_integral.integral(u)
    }

    pub fn d1(&self, t: f64, x: Point, u: f64, vs: f64) -> f64 {
        let s = self.sigma(u, vs);
        (self.primal.d0)(t, x, u, s) + self.nu_integral.nu(u) * (self.primal.e0)(t, x, u, s)
    }

    pub fn e1(&self, t: f64, x: Point, u: f64, vs: f64) -> f64 {
        (self.primal.e0)(t, x, u, self.sigma(u, vs))
    }

    pub fn m1(&self, t: f64, x: Point, u: f64, vs: f64) -> [f64; 2] {
        let m = (self.primal.m0)(t, x, u, self.sigma(u, vs));
        [-m[0], -m[1]]
    }

    pub fn beta1(&self, t: f64, x: Point, u: f64, vs: f64) -> f64 {
        -(self.primal.beta0)(t, x, u, self.sigma(u, vs))
    }

    pub fn gamma(&self, t: f64, x: Point, u: f64, vs: f64) -> f64 {
        let s = self.sigma(u, vs);
        (self.primal.mu0)(u) - (self.primal.beta0)(t, x, u, s) * self.nu_integral.average(u)
    }

    /// All transformed coefficients at one point, sharing the `N(u)` lookup.
    pub fn at(&self, t: f64, x: Point, u: f64, vs: f64) -> PointCoefficients {
        let p = &self.primal;
        let nu = self.nu_integral.nu(u);
        let s = vs + self.nu_integral.integral(u);
        let e0 = (p.e0)(t, x, u, s);
        let b0 = (p.beta0)(t, x, u, s);
        let m = (p.m0)(t, x, u, s);
        PointCoefficients {
            d1: (p.d0)(t, x, u, s) + nu * e0,
            e1: e0,
            m1: [-m[0], -m[1]],
            beta1: -b0,
            gamma: (p.mu0)(u) - b0 * self.nu_integral.average(u),
        }
    }

    fn fd_partials(
        &self,
        f: &dyn Fn(f64, Point, f64, f64) -> f64,
        t: f64,
        x: Point,
        u: f64,
        vs: f64,
        dim: usize,
    ) -> Partials {
        let mut dx = [0.0; 2];
        for (a, d) in dx.iter_mut().enumerate().take(dim) {
            let h = fd_step(x[a]);
            let (mut xp, mut xm) = (x, x);
            xp[a] += h;
            xm[a] -= h;
            *d = (f(t, xp, u, vs) - f(t, xm, u, vs)) / (2.0 * h);
        }
        let hu = fd_step(u);
        let hs = fd_step(vs);
        Partials {
            dx,
            du: (f(t, x, u + hu, vs) - f(t, x, u - hu, vs)) / (2.0 * hu),
            ds: (f(t, x, u, vs + hs) - f(t, x, u, vs - hs)) / (2.0 * hs),
        }
    }

    /// Partials of `beta1` in `(x, u, varsigma)`.
    pub fn beta1_partials(&self, t: f64, x: Point, u: f64, vs: f64, dim: usize) -> Result<Partials> {
        if let Some(bp) = &self.primal.beta0_partials {
            let p = bp(t, x, u, self.sigma(u, vs));
            let nu = self.nu_integral.nu(u);
            return Ok(Partials {
                dx: [-p.dx[0], -p.dx[1]],
                du: -(p.du + p.ds * nu),
                ds: -p.ds,
            });
        }
        if !self.fd_fallback {
            return Err(Error::Precondition("beta1 partials missing and finite differences disabled".into()));
        }
        Ok(self.fd_partials(&|t, x, u, s| self.beta1(t, x, u, s), t, x, u, vs, dim))
    }

    /// Partials of `gamma` in `(x, u, varsigma)`.
    pub fn gamma_partials(&self, t: f64, x: Point, u: f64, vs: f64, dim: usize) -> Result<Partials> {
        if let Some(gp) = &self.gamma_partials {
            return Ok(gp(t, x, u, vs));
        }
        if !self.fd_fallback {
            return Err(Error::Precondition("gamma partials missing and finite differences disabled".into()));
        }
        Ok(self.fd_partials(&|t, x, u, s| self.gamma(t, x, u, s), t, x, u, vs, dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::laws::{beta_tanh_unchecked, e_rational};

    fn nonfick(nu: NuLaw) -> PrimalCoefficients {
        PrimalCoefficients {
            d0: Arc::new(|_, _, u, _| 1.0 + 0.5 * u),
            e0: Arc::new(|_, _, u, _| e_rational(u, 1.0, 0.05)),
            m0: Arc::new(|_, x, u, _| [0.1 * x[0] * u, 0.0]),
            beta0: Arc::new(|_, _, u, s| beta_tanh_unchecked(u, 2.0, 1.0, 0.5, 0.2) + 0.1 * s * s),
            mu0: Arc::new(|u| 0.3 + 0.1 * u),
            nu0: nu,
            beta0_partials: None,
            u_range: (-0.5, 1.5),
        }
    }

    #[test]
    fn zero_nu_reduces_to_primal_with_sign_flips() {
        let p = nonfick(NuLaw::Constant(0.0));
        let tc = transform(&p).unwrap();
        for k in 0..50 {
            let (t, x, u, s) = (0.1 * k as f64, [0.02 * k as f64, 0.0], -0.2 + 0.03 * k as f64, 0.5 - 0.02 * k as f64);
            assert_eq!(tc.sigma(u, s), s);
            assert_eq!(tc.d1(t, x, u, s), (p.d0)(t, x, u, s));
            assert_eq!(tc.e1(t, x, u, s), (p.e0)(t, x, u, s));
            assert_eq!(tc.beta1(t, x, u, s), -(p.beta0)(t, x, u, s));
            assert_eq!(tc.m1(t, x, u, s)[0], -(p.m0)(t, x, u, s)[0]);
            assert_eq!(tc.gamma(t, x, u, s), (p.mu0)(u));
        }
    }

    #[test]
    fn constant_nu_cancels_u_factor() {
        let c = 0.4;
        let tc = transform(&nonfick(NuLaw::Constant(c))).unwrap();
        // same constant passed as a general closure goes through the table
        let tf = transform(&nonfick(NuLaw::Function(Arc::new(move |_| c)))).unwrap();
        for k in 0..40 {
            let (u, s) = (-0.4 + 0.045 * k as f64, 0.3);
            assert!((tc.nu_integral.integral(u) - c * u).abs() < 1e-15);
            assert!((tf.nu_integral.integral(u) - c * u).abs() < 1e-12);
            let b0 = (tc.primal.beta0)(0.0, [0.0; 2], u, s + c * u);
            let expect = (tc.primal.mu0)(u) - c * b0;
            assert!((tc.gamma(0.0, [0.0; 2], u, s) - expect).abs() < 1e-12);
            assert!((tf.gamma(0.0, [0.0; 2], u, s) - expect).abs() < 1e-12);
        }
        assert!((tf.nu_integral.average(0.0) - c).abs() < 1e-15);
    }

    #[test]
    fn d1_formula_scalar_example() {
        let p = PrimalCoefficients {
            e0: constant_state(0.2),
            nu0: NuLaw::Constant(0.5),
            ..PrimalCoefficients::fickian(1.0)
        };
        let tc = transform(&p).unwrap();
        assert!((tc.d1(0.0, [0.0; 2], 0.3, 0.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn tabulated_integral_matches_closed_form() {
        let nu = NuLaw::Function(Arc::new(|u: f64| 0.5 + 0.25 * (3.0 * u).sin()));
        let tc = transform(&nonfick(nu)).unwrap();
        let exact = |u: f64| 0.5 * u + 0.25 * (1.0 - (3.0 * u).cos()) / 3.0;
        for k in 0..200 {
            let u = -0.5 + 0.01 * k as f64;
            assert!((tc.nu_integral.integral(u) - exact(u)).abs() < 1e-10);
        }
        // outside the table: direct quadrature
        assert!((tc.nu_integral.integral(3.0) - exact(3.0)).abs() < 1e-9);
        // removable singularity of the average
        assert!((tc.nu_integral.average(1e-9) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn general_nu_transform_keeps_sign_of_beta1() {
        let nu = NuLaw::Function(Arc::new(|u: f64| 0.2 * u.max(0.0)));
        let tc = transform(&nonfick(nu)).unwrap();
        for k in 0..30 {
            let u = 0.05 * k as f64;
            assert!(tc.beta1(0.0, [0.0; 2], u, 0.1) <= -1.0);
            assert!(tc.gamma(0.0, [0.0; 2], u, 0.1).is_finite());
        }
    }

    #[test]
    fn partials_analytic_and_fd_agree() {
        let mut p = nonfick(NuLaw::Constant(0.3));
        let fd = transform(&p).unwrap();
        p.beta0_partials = Some(Arc::new(|_, _, u, s| Partials {
            dx: [0.0; 2],
            du: crate::coefficients::laws::beta_tanh_du(u, 2.0, 1.0, 0.5, 0.2),
            ds: 0.2 * s,
        }));
        let an = transform(&p).unwrap();
        let a = an.beta1_partials(0.0, [0.3, 0.0], 0.45, 0.2, 1).unwrap();
        let b = fd.beta1_partials(0.0, [0.3, 0.0], 0.45, 0.2, 1).unwrap();
        assert!((a.du - b.du).abs() < 1e-6, "{} vs {}", a.du, b.du);
        assert!((a.ds - b.ds).abs() < 1e-6);
        let strict = fd.without_fd_fallback();
        assert!(strict.gamma_partials(0.0, [0.0; 2], 0.1, 0.1, 1).is_err());
    }
}
