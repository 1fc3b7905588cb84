//! Closed-form coefficient laws and closure aliases.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid_ops::Point;

/// Coefficient depending on `(t, x, u, stress)`.
pub type StateLaw = Arc<dyn Fn(f64, Point, f64, f64) -> f64 + Send + Sync>;
/// Vector-valued coefficient depending on `(t, x, u, stress)`.
pub type VectorLaw = Arc<dyn Fn(f64, Point, f64, f64) -> [f64; 2] + Send + Sync>;
/// Coefficient depending on the concentration only.
pub type ConcentrationLaw = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Partial derivatives of a state law.
pub type PartialsLaw = Arc<dyn Fn(f64, Point, f64, f64) -> Partials + Send + Sync>;

/// Partial derivatives with respect to `x`, `u` and the stress argument.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    pub dx: [f64; 2],
    pub du: f64,
    pub ds: f64,
}

/// Relaxation rate rising from `beta_g` (glassy) to `beta_r` (rubbery)
/// across `u_rg` with transition width `delta`.
pub fn beta_tanh(u: f64, beta_r: f64, beta_g: f64, u_rg: f64, delta: f64) -> Result<f64> {
    if !(beta_r > beta_g) || !(beta_g > 0.0) || !(delta > 0.0) {
        return Err(Error::Precondition(format!(
            "beta_tanh needs beta_r > beta_g > 0 and delta > 0 (got {beta_r}, {beta_g}, {delta})"
        )));
    }
    Ok(beta_tanh_unchecked(u, beta_r, beta_g, u_rg, delta))
}

#[inline]
pub(crate) fn beta_tanh_unchecked(u: f64, beta_r: f64, beta_g: f64, u_rg: f64, delta: f64) -> f64 {
    0.5 * (beta_r + beta_g) + 0.5 * (beta_r - beta_g) * ((u - u_rg) / delta).tanh()
}

/// Derivative of [`beta_tanh`] in `u`.
pub fn beta_tanh_du(u: f64, beta_r: f64, beta_g: f64, u_rg: f64, delta: f64) -> f64 {
    let c = ((u - u_rg) / delta).cosh();
    0.5 * (beta_r - beta_g) / (delta * c * c)
}

/// Stress diffusivity vanishing at `u = 0` and `u = 1`.
pub fn e_rational(u: f64, alpha1: f64, alpha2: f64) -> f64 {
    let w = (u - 1.0) * (u - 1.0);
    alpha1 * u * w / (alpha2 + w)
}

pub fn constant_state(c: f64) -> StateLaw {
    Arc::new(move |_, _, _, _| c)
}

pub fn constant_vector(c: [f64; 2]) -> VectorLaw {
    Arc::new(move |_, _, _, _| c)
}

pub fn constant_concentration(c: f64) -> ConcentrationLaw {
    Arc::new(move |_| c)
}

/// Piecewise-linear interpolation of a table, held constant outside.
pub fn tabulated(u: &[f64], values: &[f64]) -> Result<ConcentrationLaw> {
    if u.len() != values.len() || u.len() < 2 {
        return Err(Error::Precondition("table needs at least two (u, value) pairs".into()));
    }
    if u.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("table abscissae must increase strictly".into()));
    }
    let (u, values) = (u.to_vec(), values.to_vec());
    Ok(Arc::new(move |x| {
        if x <= u[0] {
            return values[0];
        }
        let last = u.len() - 1;
        if x >= u[last] {
            return values[last];
        }
        let k = u.partition_point(|p| *p <= x) - 1;
        let s = (x - u[k]) / (u[k + 1] - u[k]);
        values[k] + s * (values[k + 1] - values[k])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_tanh_values() {
        assert_eq!(beta_tanh(0.5, 2.0, 1.0, 0.5, 0.1).unwrap(), 1.5);
        let v = beta_tanh(0.6, 2.0, 1.0, 0.5, 0.1).unwrap();
        assert!((v - (1.5 + 0.5 * 1f64.tanh())).abs() < 1e-15);
        assert!((v - 1.8808).abs() < 1e-4);
        assert!((beta_tanh(0.5 + 2.0, 2.0, 1.0, 0.5, 0.1).unwrap() - 2.0).abs() < 1e-12);
        assert!((beta_tanh(0.5 - 2.0, 2.0, 1.0, 0.5, 0.1).unwrap() - 1.0).abs() < 1e-12);
        assert!(beta_tanh(0.0, 1.0, 1.0, 0.5, 0.1).is_err());
        assert!(beta_tanh(0.0, 1.0, 2.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn e_rational_values() {
        assert_eq!(e_rational(0.0, 1.0, 0.01), 0.0);
        assert_eq!(e_rational(1.0, 1.0, 0.01), 0.0);
        assert!((e_rational(0.5, 1.0, 0.01) - 0.125 / 0.26).abs() < 1e-15);
        let big = (0..=100).map(|k| e_rational(k as f64 / 100.0, 1.0, 1e12)).fold(0.0, f64::max);
        assert!(big < 1e-12);
    }

    #[test]
    fn table_interpolates() {
        let t = tabulated(&[0.0, 1.0, 2.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(t(-1.0), 1.0);
        assert_eq!(t(0.5), 2.0);
        assert_eq!(t(1.5), 2.5);
        assert_eq!(t(9.0), 2.0);
        assert!(tabulated(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn beta_tanh_monotone_in_range(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            proptest::prop_assume!(hi - lo > 1e-6);
            let f = |u| beta_tanh(u, 2.0, 1.0, 0.5, 0.5).unwrap();
            proptest::prop_assert!(f(lo) < f(hi));
            proptest::prop_assert!(f(lo) > 1.0 && f(hi) < 2.0);
        }

        #[test]
        fn e_rational_nonnegative_on_unit_interval(u in 0.0f64..=1.0, a1 in 0.01f64..5.0, a2 in 1e-4f64..10.0) {
            proptest::prop_assert!(e_rational(u, a1, a2) >= 0.0);
        }
    }

    #[test]
    fn e_rational_maximum_is_interior() {
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let e = e_rational(u, 1.0, 0.01);
            if e > best {
                best = e;
                arg = u;
            }
        }
        assert!(arg > 0.0 && arg < 1.0);
    }
}
