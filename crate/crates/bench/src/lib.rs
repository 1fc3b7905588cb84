//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use nonfick_core::coefficients::laws::{beta_tanh, constant_concentration, e_rational};
use nonfick_core::coefficients::transform;
use nonfick_core::{build_grid, Grid, PrimalCoefficients, ScalarField, State, TransformedCoefficients};

/// Unit interval split into `cells` cells.
pub fn line(cells: usize) -> Arc<Grid> {
    Arc::new(build_grid(1, &[1.0], &[cells]).expect("valid grid"))
}

/// Unit square with `cells x cells` cells.
pub fn square(cells: usize) -> Arc<Grid> {
    Arc::new(build_grid(2, &[1.0, 1.0], &[cells, cells]).expect("valid grid"))
}

/// Glassy-polymer coefficients: rational stress coupling, tanh relaxation.
pub fn glassy() -> TransformedCoefficients {
    let p = PrimalCoefficients {
        e0: Arc::new(|_, _, u, _| e_rational(u, 0.5, 0.05)),
        beta0: Arc::new(|_, _, u, _| beta_tanh(u, 2.0, 1.0, 0.5, 0.25).unwrap_or(f64::NAN)),
        beta0_partials: None,
        mu0: constant_concentration(1.0),
        ..PrimalCoefficients::fickian(1.0)
    };
    transform(&p).expect("valid coefficients")
}

/// Product-of-sines initial state with zero stress.
pub fn sine_state(grid: &Grid) -> State {
    let u = ScalarField::from_fn(grid, |x| {
        (0..grid.dim()).map(|k| (PI * x[k]).sin()).product::<f64>() * 0.5 + 0.25
    });
    State::new(0.0, u, ScalarField::zeros(grid)).expect("matching lengths")
}
