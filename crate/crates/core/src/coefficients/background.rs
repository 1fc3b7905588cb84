//! Space-time background fields (`phi`, `psi`) used by the homogenizing
//! change of variables `v = u - phi`, `tau = varsigma - psi`.

use std::sync::Arc;

use crate::grid_ops::{Grid, Point};

pub type SpaceTimeFn = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;

/// A scalar field defined on `[0, T] x closure(Omega)`.
#[derive(Clone)]
pub enum BackgroundField {
    Zero,
    /// Closed-form field; time derivatives by centred differences.
    Analytic(SpaceTimeFn),
    /// Nodal frames at `t0 + k dt`, linearly interpolated in time.
    Tabulated { t0: f64, dt: f64, frames: Vec<Vec<f64>> },
}

impl BackgroundField {
    pub fn analytic(f: impl Fn(f64, Point) -> f64 + Send + Sync + 'static) -> Self {
        BackgroundField::Analytic(Arc::new(f))
    }

    pub fn value(&self, t: f64, x: Point) -> f64 {
        match self {
            BackgroundField::Zero => 0.0,
            BackgroundField::Analytic(f) => f(t, x),
            BackgroundField::Tabulated { .. } => {
                panic!("tabulated background fields are only defined on grid nodes")
            }
        }
    }

    fn locate(t0: f64, dt: f64, len: usize, t: f64) -> (usize, f64) {
        let s = ((t - t0) / dt).clamp(0.0, (len - 1) as f64);
        let k = (s.floor() as usize).min(len.saturating_sub(2));
        (k, s - k as f64)
    }

    /// Nodal values at time `t`.
    pub fn nodal(&self, grid: &Grid, t: f64) -> Vec<f64> {
        match self {
            BackgroundField::Zero => vec![0.0; grid.node_count()],
            BackgroundField::Analytic(f) => {
                (0..grid.node_count()).map(|n| f(t, grid.position(n))).collect()
            }
            BackgroundField::Tabulated { t0, dt, frames } => {
                if frames.len() == 1 {
                    return frames[0].clone();
                }
                let (k, r) = Self::locate(*t0, *dt, frames.len(), t);
                frames[k].iter().zip(&frames[k + 1]).map(|(a, b)| a + r * (b - a)).collect()
            }
        }
    }

    /// Value at a single node at time `t`.
    pub fn at_node(&self, grid: &Grid, t: f64, node: usize) -> f64 {
        match self {
            BackgroundField::Zero => 0.0,
            BackgroundField::Analytic(f) => f(t, grid.position(node)),
            BackgroundField::Tabulated { t0, dt, frames } => {
                if frames.len() == 1 {
                    return frames[0][node];
                }
                let (k, r) = Self::locate(*t0, *dt, frames.len(), t);
                frames[k][node] + r * (frames[k + 1][node] - frames[k][node])
            }
        }
    }

    /// Nodal time derivative at time `t`.
    pub fn nodal_dt(&self, grid: &Grid, t: f64) -> Vec<f64> {
        match self {
            BackgroundField::Zero => vec![0.0; grid.node_count()],
            BackgroundField::Analytic(f) => {
                let h = 1e-5 * (1.0 + t.abs());
                (0..grid.node_count())
                    .map(|n| {
                        let x = grid.position(n);
                        (f(t + h, x) - f(t - h, x)) / (2.0 * h)
                    })
                    .collect()
            }
            BackgroundField::Tabulated { t0, dt, frames } => {
                let len = frames.len();
                if len == 1 {
                    return vec![0.0; grid.node_count()];
                }
                let slope = |k: usize| -> Vec<f64> {
                    frames[k].iter().zip(&frames[k + 1]).map(|(a, b)| (b - a) / dt).collect()
                };
                let s = (t - t0) / dt;
                let nearest = s.round();
                if (s - nearest).abs() < 1e-9 && nearest >= 1.0 && (nearest as usize) < len - 1 {
                    let k = nearest as usize;
                    let (a, b) = (slope(k - 1), slope(k));
                    return a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
                }
                slope(Self::locate(*t0, *dt, len, t).0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, BackgroundField::Zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_ops::build_grid;

    #[test]
    fn tabulated_interpolation_and_slopes() {
        let g = build_grid(1, &[1.0], &[4]).unwrap();
        let frames: Vec<Vec<f64>> = (0..5).map(|k| vec![(k * k) as f64; 5]).collect();
        let b = BackgroundField::Tabulated { t0: 0.0, dt: 0.5, frames };
        assert_eq!(b.nodal(&g, 0.25)[0], 0.5);
        assert_eq!(b.nodal_dt(&g, 0.25)[0], 2.0);
        // centred at frame 2 (t = 1): slopes 6 and 10
        assert_eq!(b.nodal_dt(&g, 1.0)[0], 8.0);
    }

    #[test]
    fn analytic_time_derivative() {
        let g = build_grid(1, &[1.0], &[4]).unwrap();
        let b = BackgroundField::analytic(|t, x| t * t + x[0]);
        let d = b.nodal_dt(&g, 0.5);
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }
}
