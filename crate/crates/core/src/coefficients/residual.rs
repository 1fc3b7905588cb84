//! Discrete residuals of the homogenized system along a primal trajectory.

use super::homogenized::HomogenizedCoefficients;
use crate::error::Result;
use crate::evolution::Trajectory;
use crate::grid_ops::{div_coef_grad, divergence_values, face_gradient, norm, NormKind, ScalarField};

/// Time-integrated `H^-1` residuals `(r_v, r_tau)` of
/// `v' = div[D grad v + E grad tau + f]` and
/// `Laplacian tau' = div[beta grad v + mu grad tau + g]`
/// with `v = u - phi`, `tau = varsigma - psi`.
///
/// Each step interval is tested at its midpoint: time derivatives are
/// difference quotients and the fluxes use the averaged endpoint states.
pub fn homogenized_residual(traj: &Trajectory, hc: &HomogenizedCoefficients) -> Result<(f64, f64)> {
    let grid = &*hc.grid;
    let dt = traj.dt;
    let ones = vec![1.0; grid.face_count()];
    let split = |k: usize| {
        let s = &traj.states[k];
        let phi = hc.phi.nodal(grid, s.t);
        let psi = hc.psi.nodal(grid, s.t);
        let v: Vec<f64> = s.u.values.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let tau: Vec<f64> = s.vs.values.iter().zip(&psi).map(|(a, b)| a - b).collect();
        (v, tau)
    };
    let (mut rv, mut rt) = (0.0, 0.0);
    let (mut v0, mut tau0) = split(0);
    for k in 1..traj.len() {
        let (v1, tau1) = split(k);
        let tm = 0.5 * (traj.states[k - 1].t + traj.states[k].t);
        let vm: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| 0.5 * (a + b)).collect();
        let taum: Vec<f64> = tau0.iter().zip(&tau1).map(|(a, b)| 0.5 * (a + b)).collect();
        let fc = hc.frame(tm)?.faces(&vm, &taum)?;
        let gv = face_gradient(grid, &vm);
        let gt = face_gradient(grid, &taum);
        let flux_v: Vec<f64> = (0..fc.len()).map(|f| fc[f].d * gv[f] + fc[f].e * gt[f] + fc[f].f).collect();
        let flux_t: Vec<f64> =
            (0..fc.len()).map(|f| fc[f].beta * gv[f] + fc[f].mu * gt[f] + fc[f].g).collect();
        let div_v = divergence_values(grid, &flux_v);
        let div_t = divergence_values(grid, &flux_t);
        let dtau: Vec<f64> = tau1.iter().zip(&tau0).map(|(a, b)| (a - b) / dt).collect();
        let lap_dtau = div_coef_grad(grid, &ones, &dtau);
        let mut res_v = vec![0.0; grid.node_count()];
        let mut res_t = vec![0.0; grid.node_count()];
        for &n in grid.interior() {
            res_v[n] = (v1[n] - v0[n]) / dt - div_v[n];
            res_t[n] = lap_dtau[n] - div_t[n];
        }
        rv += dt * norm(grid, &ScalarField::new(res_v, tm), NormKind::HMinus1).powi(2);
        rt += dt * norm(grid, &ScalarField::new(res_t, tm), NormKind::HMinus1).powi(2);
        v0 = v1;
        tau0 = tau1;
    }
    Ok((rv.sqrt(), rt.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::laws::constant_concentration;
    use crate::coefficients::{homogenize, transform, BackgroundField, PrimalCoefficients};
    use crate::evolution::{simulate, SimulateOptions, State};
    use crate::grid_ops::build_grid;
    use std::sync::Arc;

    #[test]
    fn zero_solution_has_zero_residual() {
        let grid = Arc::new(build_grid(1, &[1.0], &[16]).unwrap());
        let tc = Arc::new(transform(&PrimalCoefficients::fickian(1.0)).unwrap());
        let traj = simulate(&grid, &State::zeros(&grid), &tc, &BackgroundField::Zero, 0.1, 0.01, &SimulateOptions::default()).unwrap();
        let hc = homogenize(grid, tc, BackgroundField::Zero, BackgroundField::Zero).unwrap();
        assert_eq!(homogenized_residual(&traj, &hc).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn manufactured_linear_solution() {
        let (k, c, m, b) = (1.0, 0.5, 0.8, 2.0);
        let p = PrimalCoefficients {
            d0: Arc::new(move |_, x, _, _| k + c * x[0]),
            beta0: Arc::new(move |_, _, _, _| b),
            mu0: constant_concentration(m),
            ..PrimalCoefficients::fickian(1.0)
        };
        let grid = Arc::new(build_grid(1, &[1.0], &[20]).unwrap());
        let tc = Arc::new(transform(&p).unwrap());
        let u = move |t: f64, x: [f64; 2]| x[0] + c * t;
        let s = move |t: f64, x: [f64; 2]| -m * c / (b * b) + m / b * x[0] + m * c / b * t;
        let dt = 0.01;
        let states = (0..=20)
            .map(|n| {
                let t = n as f64 * dt;
                State::new(t, ScalarField::from_fn(&grid, |x| u(t, x)), ScalarField::from_fn(&grid, |x| s(t, x))).unwrap()
            })
            .collect();
        let traj = Trajectory { states, dt, scheme: "exact".into(), monitors: vec![], stress: None, max_principle: None };
        let hc = homogenize(grid, tc, BackgroundField::analytic(u), BackgroundField::analytic(s)).unwrap();
        let (rv, rt) = homogenized_residual(&traj, &hc).unwrap();
        assert!(rv <= 1e-8 && rt <= 1e-8, "{rv} {rt}");
    }
}
