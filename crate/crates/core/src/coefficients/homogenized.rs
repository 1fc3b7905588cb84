//! Coefficients of the homogenized `(v, tau)` system
//!
//! ```text
//! v'            = div[D grad v + E grad tau + f]
//! Laplacian tau' = div[beta grad v + mu grad tau + g]
//! ```
//!
//! assembled on grid faces. Pointwise factors are evaluated at the nodes and
//! averaged onto faces, matching the flux discretization of the primal
//! stepper; gradients of the background fields are face differences.

use std::sync::Arc;

use super::background::BackgroundField;
use super::transform::TransformedCoefficients;
use crate::error::Result;
use crate::grid_ops::{face_gradient, inv_laplacian, Grid, ScalarField};

#[derive(Clone)]
pub struct HomogenizedCoefficients {
    pub grid: Arc<Grid>,
    pub tc: Arc<TransformedCoefficients>,
    pub phi: BackgroundField,
    pub psi: BackgroundField,
}

/// Homogenized coefficients on one face (normal components for `f`, `g`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FaceCoefficients {
    pub d: f64,
    pub e: f64,
    pub beta: f64,
    pub mu: f64,
    pub f: f64,
    pub g: f64,
}

/// Builds homogenized coefficients; fails when partial derivatives are
/// unavailable (no analytic partials and finite differences disabled).
pub fn homogenize(
    grid: Arc<Grid>,
    tc: Arc<TransformedCoefficients>,
    phi: BackgroundField,
    psi: BackgroundField,
) -> Result<HomogenizedCoefficients> {
    let x = grid.position(0);
    tc.beta1_partials(0.0, x, 0.0, 0.0, grid.dim())?;
    tc.gamma_partials(0.0, x, 0.0, 0.0, grid.dim())?;
    Ok(HomogenizedCoefficients { grid, tc, phi, psi })
}

/// Background data frozen at one time instant.
pub struct HomogenizedFrame<'a> {
    hc: &'a HomogenizedCoefficients,
    pub t: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    grad_phi: Vec<f64>,
    grad_psi: Vec<f64>,
    grad_psi_t: Vec<f64>,
    grad_inv_lap_phi_t: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct NodeTerms {
    d: f64,
    e: f64,
    beta: f64,
    mu: f64,
    m: [f64; 2],
    x: [f64; 2],
}

impl HomogenizedCoefficients {
    pub fn frame(&self, t: f64) -> Result<HomogenizedFrame<'_>> {
        let grid = &*self.grid;
        let phi = self.phi.nodal(grid, t);
        let psi = self.psi.nodal(grid, t);
        let grad_phi = face_gradient(grid, &phi);
        let grad_psi = face_gradient(grid, &psi);
        let (grad_psi_t, grad_inv_lap_phi_t) = if self.psi.is_zero() && self.phi.is_zero() {
            (vec![0.0; grid.face_count()], vec![0.0; grid.face_count()])
        } else {
            let psi_t = self.psi.nodal_dt(grid, t);
            let phi_t = self.phi.nodal_dt(grid, t);
            let w = inv_laplacian(grid, &ScalarField::new(phi_t, t))?;
            (face_gradient(grid, &psi_t), face_gradient(grid, &w.values))
        };
        Ok(HomogenizedFrame {
            hc: self,
            t,
            phi,
            psi,
            grad_phi,
            grad_psi,
            grad_psi_t,
            grad_inv_lap_phi_t,
        })
    }
}

impl HomogenizedFrame<'_> {
    fn node_terms(&self, node: usize, v: f64, tau: f64) -> Result<NodeTerms> {
        let tc = &*self.hc.tc;
        let grid = &*self.hc.grid;
        let x = grid.position(node);
        let u = v + self.phi[node];
        let vs = tau + self.psi[node];
        let c = tc.at(self.t, x, u, vs);
        let bp = tc.beta1_partials(self.t, x, u, vs, grid.dim())?;
        let gp = tc.gamma_partials(self.t, x, u, vs, grid.dim())?;
        Ok(NodeTerms {
            d: c.d1,
            e: c.e1,
            beta: bp.du * vs + c.gamma + gp.du * u,
            mu: c.beta1 + bp.ds * vs + gp.ds * u,
            m: [c.m1[0] * u, c.m1[1] * u],
            x: [bp.dx[0] * vs + gp.dx[0] * u, bp.dx[1] * vs + gp.dx[1] * u],
        })
    }

    fn combine(&self, face: usize, a: NodeTerms, b: NodeTerms) -> FaceCoefficients {
        let axis = self.hc.grid.faces()[face].axis;
        let avg = |p: f64, q: f64| 0.5 * (p + q);
        let d = avg(a.d, b.d);
        let e = avg(a.e, b.e);
        let beta = avg(a.beta, b.beta);
        let mu = avg(a.mu, b.mu);
        let (gphi, gpsi) = (self.grad_phi[face], self.grad_psi[face]);
        FaceCoefficients {
            d,
            e,
            beta,
            mu,
            f: -self.grad_inv_lap_phi_t[face] + d * gphi + e * gpsi + avg(a.m[axis], b.m[axis]),
            g: -self.grad_psi_t[face] + beta * gphi + mu * gpsi + avg(a.x[axis], b.x[axis]),
        }
    }

    /// Coefficients on `face` for nodal states `(v, tau)` at its two ends.
    pub fn face(&self, face: usize, v: [f64; 2], tau: [f64; 2]) -> Result<FaceCoefficients> {
        let f = self.hc.grid.faces()[face];
        let a = self.node_terms(f.lo, v[0], tau[0])?;
        let b = self.node_terms(f.hi, v[1], tau[1])?;
        Ok(self.combine(face, a, b))
    }

    /// Coefficients on every face for nodal fields `v`, `tau`.
    pub fn faces(&self, v: &[f64], tau: &[f64]) -> Result<Vec<FaceCoefficients>> {
        let grid = &*self.hc.grid;
        let terms = (0..grid.node_count())
            .map(|n| self.node_terms(n, v[n], tau[n]))
            .collect::<Result<Vec<_>>>()?;
        Ok(grid
            .faces()
            .iter()
            .enumerate()
            .map(|(k, f)| self.combine(k, terms[f.lo], terms[f.hi]))
            .collect())
    }
}
