//! Node-centred rectangular grids in one and two dimensions with
//! face-staggered fluxes, Dirichlet boundary bookkeeping, the discrete
//! gradient/divergence/Laplacian, Poisson solves and discrete norms.
//!
//! Nodes are numbered lexicographically with the x index running fastest.
//! Faces join two neighbouring nodes and carry the normal component of a
//! flux; x faces come first, then y faces. All interior operators act on the
//! interior unknowns in node order, which makes every implicit matrix banded
//! with bandwidth 1 (1D) or `cells[0] - 1` (2D).

use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{BandCholesky, BandMatrix};

/// Spatial point; the second coordinate is zero on 1D grids.
pub type Point = [f64; 2];

/// A face between two neighbouring nodes `lo` and `hi` along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub lo: usize,
    pub hi: usize,
}

#[derive(Debug)]
struct PoissonFactor {
    checksum: u64,
    factor: BandCholesky,
}

/// Uniform rectangular node lattice on `(0, L_x) [x (0, L_y)]`.
#[derive(Debug)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
    spacing: [f64; 2],
    nodes: [usize; 2],
    interior: Vec<usize>,
    boundary: Vec<usize>,
    interior_slot: Vec<Option<usize>>,
    boundary_slot: Vec<Option<usize>>,
    faces: Vec<Face>,
    // x-minus, x-plus, y-minus, y-plus
    node_faces: Vec<[Option<usize>; 4]>,
    checksum: u64,
    poisson: OnceLock<PoissonFactor>,
}

/// Builds a grid; `cells` must be at least 4 per axis.
pub fn build_grid(dimension: usize, lengths: &[f64], cells: &[usize]) -> Result<Grid> {
    if dimension != 1 && dimension != 2 {
        return Err(Error::InvalidGrid(format!("dimension {dimension} not in {{1, 2}}")));
    }
    if lengths.len() != dimension || cells.len() != dimension {
        return Err(Error::InvalidGrid(format!(
            "expected {dimension} lengths and cell counts, got {} and {}",
            lengths.len(),
            cells.len()
        )));
    }
    if let Some(l) = lengths.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-positive length {l}")));
    }
    if let Some(c) = cells.iter().find(|c| **c < 4) {
        return Err(Error::InvalidGrid(format!("{c} cells per axis, need at least 4")));
    }

    let mut l = [0.0; 2];
    let mut c = [0usize; 2];
    let mut h = [0.0; 2];
    for a in 0..dimension {
        l[a] = lengths[a];
        c[a] = cells[a];
        h[a] = lengths[a] / cells[a] as f64;
    }
    let nodes = [c[0] + 1, if dimension == 2 { c[1] + 1 } else { 1 }];
    let total = nodes[0] * nodes[1];

    let on_boundary = |i: usize, j: usize| {
        i == 0 || i == c[0] || (dimension == 2 && (j == 0 || j == c[1]))
    };
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut interior_slot = vec![None; total];
    let mut boundary_slot = vec![None; total];
    for j in 0..nodes[1] {
        for i in 0..nodes[0] {
            let n = i + j * nodes[0];
            if on_boundary(i, j) {
                boundary_slot[n] = Some(boundary.len());
                boundary.push(n);
            } else {
                interior_slot[n] = Some(interior.len());
                interior.push(n);
            }
        }
    }

    let mut faces = Vec::new();
    let mut node_faces = vec![[None; 4]; total];
    for j in 0..nodes[1] {
        for i in 0..c[0] {
            let lo = i + j * nodes[0];
            let f = faces.len();
            faces.push(Face { axis: 0, lo, hi: lo + 1 });
            node_faces[lo][1] = Some(f);
            node_faces[lo + 1][0] = Some(f);
        }
    }
    if dimension == 2 {
        for j in 0..c[1] {
            for i in 0..nodes[0] {
                let lo = i + j * nodes[0];
                let f = faces.len();
                faces.push(Face { axis: 1, lo, hi: lo + nodes[0] });
                node_faces[lo][3] = Some(f);
                node_faces[lo + nodes[0]][2] = Some(f);
            }
        }
    }

    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    dimension.hash(&mut hasher);
    c.hash(&mut hasher);
    l[0].to_bits().hash(&mut hasher);
    l[1].to_bits().hash(&mut hasher);

    Ok(Grid {
        dim: dimension,
        lengths: l,
        cells: c,
        spacing: h,
        nodes,
        interior,
        boundary,
        interior_slot,
        boundary_slot,
        faces,
        node_faces,
        checksum: hasher.finish(),
        poisson: OnceLock::new(),
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn node_count(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_slot(&self, node: usize) -> Option<usize> {
        self.interior_slot[node]
    }

    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        self.boundary_slot[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_slot[node].is_some()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn checksum(&self) -> u64 {
        self.checksum
    }

    /// Bandwidth of interior operators in node order.
    pub fn bandwidth(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.cells[0] - 1
        }
    }

    pub fn position(&self, node: usize) -> Point {
        let i = node % self.nodes[0];
        let j = node / self.nodes[0];
        [i as f64 * self.spacing[0], j as f64 * self.spacing[1]]
    }

    pub fn face_position(&self, face: usize) -> Point {
        let f = self.faces[face];
        let (a, b) = (self.position(f.lo), self.position(f.hi));
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Trapezoid quadrature weight of a node.
    pub fn node_weight(&self, node: usize) -> f64 {
        let i = node % self.nodes[0];
        let j = node / self.nodes[0];
        let mut w = self.spacing[0];
        if i == 0 || i == self.cells[0] {
            w *= 0.5;
        }
        if self.dim == 2 {
            w *= self.spacing[1];
            if j == 0 || j == self.cells[1] {
                w *= 0.5;
            }
        }
        w
    }

    /// Quadrature weight of a face: cell measure, halved for faces lying on
    /// the boundary in the transverse direction.
    pub fn face_weight(&self, face: usize) -> f64 {
        let f = self.faces[face];
        let mut w = self.spacing[0];
        if self.dim == 2 {
            w *= self.spacing[1];
            let along = if f.axis == 0 { 1 } else { 0 };
            let (i, j) = (f.lo % self.nodes[0], f.lo / self.nodes[0]);
            let idx = if along == 1 { j } else { i };
            if idx == 0 || idx == self.cells[along] {
                w *= 0.5;
            }
        }
        w
    }

    /// Interior measure `prod h` used for interior-only inner products.
    pub fn cell_measure(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    fn check_len(&self, found: usize, expected: usize) -> Result<()> {
        if found != expected {
            return Err(Error::ShapeMismatch { expected, found });
        }
        Ok(())
    }

    /// Discrete negative Dirichlet Laplacian `-div(grad)` on the interior.
    pub fn laplacian_matrix(&self) -> BandMatrix {
        self.diffusion_matrix(&vec![1.0; self.face_count()])
    }

    /// `-div(a grad .)` on interior unknowns for face coefficients `a`.
    pub fn diffusion_matrix(&self, face_coef: &[f64]) -> BandMatrix {
        assert_eq!(face_coef.len(), self.face_count());
        let mut m = BandMatrix::zeros(self.interior.len(), self.bandwidth());
        for (fi, f) in self.faces.iter().enumerate() {
            let w = face_coef[fi] / (self.spacing[f.axis] * self.spacing[f.axis]);
            let (a, b) = (self.interior_slot[f.lo], self.interior_slot[f.hi]);
            if let Some(a) = a {
                m.add(a, a, w);
            }
            if let Some(b) = b {
                m.add(b, b, w);
            }
            if let (Some(a), Some(b)) = (a, b) {
                m.add(a, b, -w);
            }
        }
        m
    }

    fn poisson(&self) -> Result<&BandCholesky> {
        if self.poisson.get().is_none() {
            let factor = self.laplacian_matrix().cholesky()?;
            let _ = self.poisson.set(PoissonFactor { checksum: self.checksum, factor });
        }
        let p = self.poisson.get().expect("initialised above");
        debug_assert_eq!(p.checksum, self.checksum);
        Ok(&p.factor)
    }

    /// Solves `A x = b` on interior unknowns with `A = -Laplacian`.
    pub fn solve_poisson_interior(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len(), self.interior.len())?;
        Ok(self.poisson()?.solve(b))
    }

    pub fn gather_interior(&self, values: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&n| values[n]).collect()
    }

    pub fn scatter_interior(&self, interior: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        for (k, &n) in self.interior.iter().enumerate() {
            out[n] = interior[k];
        }
        out
    }
}

/// Nodal scalar field tagged with a time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub t: f64,
}

impl ScalarField {
    pub fn new(values: Vec<f64>, t: f64) -> Self {
        Self { values, t }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { values: vec![0.0; grid.node_count()], t: 0.0 }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { values: vec![c; grid.node_count()], t: 0.0 }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(Point) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|n| f(grid.position(n))).collect();
        Self { values, t: 0.0 }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn boundary_trace(&self, grid: &Grid) -> Vec<f64> {
        grid.boundary().iter().map(|&n| self.values[n]).collect()
    }

    /// Copy with every boundary slot set to zero.
    pub fn interior_only(&self, grid: &Grid) -> Self {
        let mut out = self.clone();
        for &n in grid.boundary() {
            out.values[n] = 0.0;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Face-staggered vector field storing the normal component on each face.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { values: vec![0.0; grid.face_count()] }
    }
}

/// Face-centred differences of `values` taken as-is (boundary slots included).
pub fn face_gradient(grid: &Grid, values: &[f64]) -> Vec<f64> {
    grid.faces
        .iter()
        .map(|f| (values[f.hi] - values[f.lo]) / grid.spacing[f.axis])
        .collect()
}

/// Arithmetic mean of nodal values on each face.
pub fn face_average(grid: &Grid, values: &[f64]) -> Vec<f64> {
    grid.faces.iter().map(|f| 0.5 * (values[f.lo] + values[f.hi])).collect()
}

/// Discrete gradient with the boundary slots replaced by `boundary`.
pub fn gradient(grid: &Grid, f: &ScalarField, boundary: &[f64]) -> Result<VectorField> {
    grid.check_len(f.len(), grid.node_count())?;
    grid.check_len(boundary.len(), grid.boundary().len())?;
    let mut v = f.values.clone();
    for (k, &n) in grid.boundary().iter().enumerate() {
        v[n] = boundary[k];
    }
    Ok(VectorField { values: face_gradient(grid, &v) })
}

/// Divergence of face values at interior nodes; zero in boundary slots.
pub fn divergence_values(grid: &Grid, flux: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.node_count()];
    for &n in &grid.interior {
        let nf = grid.node_faces[n];
        let mut s = 0.0;
        for axis in 0..grid.dim {
            let minus = nf[2 * axis].expect("interior node has both faces");
            let plus = nf[2 * axis + 1].expect("interior node has both faces");
            s += (flux[plus] - flux[minus]) / grid.spacing[axis];
        }
        out[n] = s;
    }
    out
}

pub fn divergence(grid: &Grid, flux: &VectorField) -> Result<ScalarField> {
    grid.check_len(flux.values.len(), grid.face_count())?;
    Ok(ScalarField::new(divergence_values(grid, &flux.values), 0.0))
}

/// `div(a grad u)` at interior nodes for face coefficients `a`, using the
/// boundary slots of `values` as Dirichlet data.
pub fn div_coef_grad(grid: &Grid, face_coef: &[f64], values: &[f64]) -> Vec<f64> {
    let mut flux = face_gradient(grid, values);
    for (q, a) in flux.iter_mut().zip(face_coef) {
        *q *= a;
    }
    divergence_values(grid, &flux)
}

pub fn laplacian(grid: &Grid, f: &ScalarField, boundary: &[f64]) -> Result<ScalarField> {
    let g = gradient(grid, f, boundary)?;
    Ok(ScalarField::new(divergence_values(grid, &g.values), f.t))
}

/// Solves `Laplacian w = g` with homogeneous Dirichlet data; only the
/// interior values of `g` are used.
pub fn inv_laplacian(grid: &Grid, g: &ScalarField) -> Result<ScalarField> {
    grid.check_len(g.len(), grid.node_count())?;
    let b: Vec<f64> = grid.interior.iter().map(|&n| -g.values[n]).collect();
    let x = grid.solve_poisson_interior(&b)?;
    Ok(ScalarField::new(grid.scatter_interior(&x), g.t))
}

/// Friedrichs constant `1 / sqrt(lambda_1)` of the discrete Dirichlet
/// Laplacian, via inverse power iteration (tolerance 1e-10, cap 1e4).
pub fn friedrichs_constant(grid: &Grid) -> Result<f64> {
    let a = grid.laplacian_matrix();
    let n = a.dim();
    let mut x = vec![1.0; n];
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..10_000 {
        let mut y = grid.solve_poisson_interior(&x)?;
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        let ay = a.mul_vec(&y);
        let lambda: f64 = y.iter().zip(&ay).map(|(p, q)| p * q).sum();
        x = y;
        if ((lambda - lambda_prev) / lambda).abs() <= 1e-10 {
            return Ok(1.0 / lambda.sqrt());
        }
        lambda_prev = lambda;
    }
    Err(Error::NonConvergence { what: "inverse power iteration", iterations: 10_000 })
}

/// Norm families available on nodal fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    /// `||grad f||` with the field's own boundary values.
    H1_0,
    /// Dual norm `||Laplacian^{-1} f||_{H1_0}`.
    HMinus1,
    /// Dual of `H2_0` with norm `||Laplacian w||`: `||Laplacian^{-1} f||_{L2}`.
    HMinus2,
    /// `||Laplacian f||` on the interior.
    H2_0,
    /// `||Laplacian f||_{H1_0}`, the norm of `Laplacian^{-1}(H1_0)`.
    X,
}

pub fn inner_nodes(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(n, (p, q))| grid.node_weight(n) * p * q)
        .sum()
}

pub fn inner_faces(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(f, (p, q))| grid.face_weight(f) * p * q)
        .sum()
}

fn h1_values(grid: &Grid, v: &[f64]) -> f64 {
    let g = face_gradient(grid, v);
    inner_faces(grid, &g, &g).sqrt()
}

fn interior_laplacian(grid: &Grid, v: &[f64]) -> Vec<f64> {
    div_coef_grad(grid, &vec![1.0; grid.face_count()], v)
}

pub fn norm(grid: &Grid, f: &ScalarField, kind: NormKind) -> f64 {
    let v = &f.values;
    match kind {
        NormKind::L2 => inner_nodes(grid, v, v).sqrt(),
        NormKind::H1_0 => h1_values(grid, v),
        NormKind::HMinus1 | NormKind::HMinus2 => {
            let w = inv_laplacian(grid, f).expect("Poisson factorization of a valid grid");
            if kind == NormKind::HMinus1 {
                h1_values(grid, &w.values)
            } else {
                inner_nodes(grid, &w.values, &w.values).sqrt()
            }
        }
        NormKind::H2_0 => {
            let l = interior_laplacian(grid, v);
            inner_nodes(grid, &l, &l).sqrt()
        }
        NormKind::X => h1_values(grid, &interior_laplacian(grid, v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn build_grid_examples() {
        let g = build_grid(1, &[1.0], &[100]).unwrap();
        assert_eq!(g.spacing(), &[0.01]);
        assert_eq!(g.interior().len(), 99);
        assert_eq!(g.interior().len() + g.boundary().len(), g.node_count());

        let g = build_grid(2, &[1.0, 2.0], &[10, 20]).unwrap();
        assert_eq!(g.spacing(), &[0.1, 0.1]);
        assert_eq!(g.interior().len(), 9 * 19);
        assert_eq!(g.interior().len() + g.boundary().len(), g.node_count());
        assert_eq!(g.bandwidth(), 9);
    }

    #[test]
    fn build_grid_rejects_bad_input() {
        assert!(build_grid(1, &[1.0], &[2]).is_err());
        assert!(build_grid(3, &[1.0; 3], &[8; 3]).is_err());
        assert!(build_grid(1, &[0.0], &[8]).is_err());
        assert!(build_grid(2, &[1.0, -1.0], &[8, 8]).is_err());
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = build_grid(1, &[1.0], &[50]).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let grad = gradient(&g, &f, &[0.0, 1.0]).unwrap();
        assert!(grad.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let zero = gradient(&g, &ScalarField::zeros(&g), &[0.0, 0.0]).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn divergence_of_constant_and_quadratic() {
        let g = build_grid(1, &[1.0], &[40]).unwrap();
        let c = VectorField { values: vec![3.0; g.face_count()] };
        assert!(divergence(&g, &c).unwrap().values.iter().all(|v| v.abs() < 1e-12));

        let f = ScalarField::from_fn(&g, |x| x[0] * (1.0 - x[0]));
        let grad = gradient(&g, &f, &[0.0, 0.0]).unwrap();
        let d = divergence(&g, &grad).unwrap();
        for &n in g.interior() {
            assert!((d.values[n] + 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_order_on_sine() {
        let err = |cells: usize| {
            let g = build_grid(1, &[1.0], &[cells]).unwrap();
            let f = ScalarField::from_fn(&g, |x| (PI * x[0]).sin());
            let grad = gradient(&g, &f, &[0.0, 0.0]).unwrap();
            (0..g.face_count())
                .map(|k| (grad.values[k] - PI * (PI * g.face_position(k)[0]).cos()).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(40) / err(80)).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn laplacian_roundtrip_and_eigenvalue() {
        let g = build_grid(1, &[1.0], &[64]).unwrap();
        let h = g.spacing()[0];
        let f = ScalarField::from_fn(&g, |x| (PI * x[0]).sin());
        let l = laplacian(&g, &f, &[0.0, 0.0]).unwrap();
        let discrete = 2.0 * (1.0 - (PI * h).cos()) / (h * h);
        for &n in g.interior() {
            assert!((l.values[n] + discrete * f.values[n]).abs() < 1e-9);
        }
        let back = inv_laplacian(&g, &l).unwrap();
        for &n in g.interior() {
            assert!((back.values[n] - f.values[n]).abs() < 1e-10);
        }
        let z = inv_laplacian(&g, &ScalarField::zeros(&g)).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn friedrichs_constants() {
        let g = build_grid(1, &[1.0], &[200]).unwrap();
        assert!((friedrichs_constant(&g).unwrap() - 1.0 / PI).abs() < 1e-4);
        let g = build_grid(1, &[2.0], &[200]).unwrap();
        assert!((friedrichs_constant(&g).unwrap() - 2.0 / PI).abs() < 1e-3);
        let g = build_grid(2, &[1.0, 1.0], &[48, 48]).unwrap();
        let k = friedrichs_constant(&g).unwrap();
        assert!((k - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-3, "K = {k}");
    }

    #[test]
    fn sine_norms() {
        let g = build_grid(1, &[1.0], &[400]).unwrap();
        let f = ScalarField::from_fn(&g, |x| (PI * x[0]).sin());
        let l2 = norm(&g, &f, NormKind::L2);
        let h1 = norm(&g, &f, NormKind::H1_0);
        assert!((l2 * l2 - 0.5).abs() < 1e-3);
        assert!((h1 * h1 - PI * PI / 2.0).abs() < 1e-3 * PI * PI);
        let z = ScalarField::zeros(&g);
        for kind in [NormKind::L2, NormKind::H1_0, NormKind::HMinus1] {
            assert_eq!(norm(&g, &z, kind), 0.0);
        }
    }

    #[test]
    fn two_dimensional_divergence_of_gradient_matches_laplacian_matrix() {
        let g = build_grid(2, &[1.0, 1.5], &[6, 9]).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * 3.0).sin() * x[1] * x[1]).interior_only(&g);
        let zero_b = vec![0.0; g.boundary().len()];
        let l = laplacian(&g, &f, &zero_b).unwrap();
        let a = g.laplacian_matrix().mul_vec(&g.gather_interior(&f.values));
        for (k, &n) in g.interior().iter().enumerate() {
            assert!((l.values[n] + a[k]).abs() < 1e-10);
        }
    }
}
