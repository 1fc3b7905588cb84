//! Sampled bound constants for the homogenized coefficients.
//!
//! Constants are sampled suprema inflated by 5%; the ellipticity constant is
//! the sampled infimum deflated by 5%. The source majorants are fitted as
//! `|f| <= K_f |tau| + f~(t, x)` and `|g| <= K_g (|v| + |tau|) + g~(t, x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::homogenized::{FaceCoefficients, HomogenizedCoefficients};
use crate::error::{Error, Result};

const MARGIN: f64 = 0.05;
const TIME_SLICES: usize = 8;

/// Ranges sampled by the certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingBox {
    pub v: (f64, f64),
    pub tau: (f64, f64),
    pub t: (f64, f64),
}

/// One sampled evaluation of the homogenized coefficients.
#[derive(Clone, Copy, Debug)]
pub struct CoefficientSample {
    pub t: f64,
    pub face: usize,
    pub v: f64,
    pub tau: f64,
    pub beta0: f64,
    pub values: FaceCoefficients,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsCertificate {
    pub k_d: f64,
    pub k_e: f64,
    pub k_beta: f64,
    pub k_mu: f64,
    pub k_f: f64,
    pub k_g: f64,
    pub d: f64,
    pub beta_g: f64,
    /// `||f~||` over `(0, T) x Omega` for the `K_f |tau| + f~` majorant.
    pub f_tilde_norm: f64,
    pub g_tilde_norm: f64,
    /// `||sup_{v,tau} |f|||` and `||sup |g|||`: the `tau`-free majorants.
    pub f_sup_norm: f64,
    pub g_sup_norm: f64,
    /// Raw least-squares slopes before clamping and inflation.
    pub f_slope: f64,
    pub g_slope: f64,
    pub f_scale: f64,
    pub g_scale: f64,
    pub sampling: SamplingBox,
    pub sample_count: usize,
}

impl BoundsCertificate {
    /// Hand-specified constants, e.g. from an analytic bound.
    pub fn from_constants(k_d: f64, k_e: f64, k_beta: f64, k_mu: f64, k_f: f64, k_g: f64, d: f64) -> Self {
        Self {
            k_d,
            k_e,
            k_beta,
            k_mu,
            k_f,
            k_g,
            d,
            beta_g: 1.0,
            f_tilde_norm: 0.0,
            g_tilde_norm: 0.0,
            f_sup_norm: 0.0,
            g_sup_norm: 0.0,
            f_slope: k_f,
            g_slope: k_g,
            f_scale: 0.0,
            g_scale: 0.0,
            sampling: SamplingBox { v: (0.0, 0.0), tau: (0.0, 0.0), t: (0.0, 0.0) },
            sample_count: 0,
        }
    }

    pub fn is_elliptic(&self) -> bool {
        self.d > 0.0
    }
}

/// Deterministic sample set over `(t, face, v, tau)`: box corners, the
/// origin and uniform random points at every face of every time slice.
pub fn sample_coefficients(
    hc: &HomogenizedCoefficients,
    sbox: &SamplingBox,
    samples: usize,
    seed: u64,
) -> Result<Vec<CoefficientSample>> {
    let grid = &*hc.grid;
    let faces = grid.face_count();
    let per_point = (samples.div_ceil(TIME_SLICES * faces)).max(6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(TIME_SLICES * faces * per_point);
    for s in 0..TIME_SLICES {
        let t = sbox.t.0 + (s as f64 + 0.5) * (sbox.t.1 - sbox.t.0) / TIME_SLICES as f64;
        let frame = hc.frame(t)?;
        for face in 0..faces {
            let fx = grid.face_position(face);
            let f = grid.faces()[face];
            let fixed = [
                (0.0, 0.0),
                (sbox.v.0, sbox.tau.0),
                (sbox.v.0, sbox.tau.1),
                (sbox.v.1, sbox.tau.0),
                (sbox.v.1, sbox.tau.1),
            ];
            for k in 0..per_point {
                let (v, tau) = if k < fixed.len() {
                    fixed[k]
                } else {
                    (rng.gen_range(sbox.v.0..=sbox.v.1), rng.gen_range(sbox.tau.0..=sbox.tau.1))
                };
                let values = frame.face(face, [v, v], [tau, tau])?;
                let u = v + 0.5 * (frame.phi[f.lo] + frame.phi[f.hi]);
                let vs = tau + 0.5 * (frame.psi[f.lo] + frame.psi[f.hi]);
                let beta0 = -hc.tc.beta1(t, fx, u, vs);
                out.push(CoefficientSample { t, face, v, tau, beta0, values });
            }
        }
    }
    Ok(out)
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

/// Builds the certificate from a sample set without judging it.
pub fn certificate_from_samples(
    hc: &HomogenizedCoefficients,
    sbox: &SamplingBox,
    samples: &[CoefficientSample],
) -> BoundsCertificate {
    let grid = &*hc.grid;
    let sup = |f: &dyn Fn(&CoefficientSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let inf = |f: &dyn Fn(&CoefficientSample) -> f64| {
        samples.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    let inflate = |x: f64| x * (1.0 + MARGIN);

    let abs_f: Vec<f64> = samples.iter().map(|s| s.values.f.abs()).collect();
    let abs_g: Vec<f64> = samples.iter().map(|s| s.values.g.abs()).collect();
    let tau_abs: Vec<f64> = samples.iter().map(|s| s.tau.abs()).collect();
    let vt_abs: Vec<f64> = samples.iter().map(|s| s.v.abs() + s.tau.abs()).collect();
    let f_slope = least_squares_slope(&tau_abs, &abs_f);
    let g_slope = least_squares_slope(&vt_abs, &abs_g);
    let k_f = inflate(f_slope.max(0.0));
    let k_g = inflate(g_slope.max(0.0));

    // per (t, face) majorants
    let dt_slice = (sbox.t.1 - sbox.t.0) / TIME_SLICES as f64;
    let mut f_tilde = std::collections::BTreeMap::<(u64, usize), (f64, f64, f64, f64)>::new();
    for (k, s) in samples.iter().enumerate() {
        let e = f_tilde.entry((s.t.to_bits(), s.face)).or_insert((0.0, 0.0, 0.0, 0.0));
        e.0 = e.0.max(abs_f[k] - k_f * tau_abs[k]);
        e.1 = e.1.max(abs_g[k] - k_g * vt_abs[k]);
        e.2 = e.2.max(abs_f[k]);
        e.3 = e.3.max(abs_g[k]);
    }
    let mut norms = [0.0; 4];
    for ((_, face), m) in &f_tilde {
        let w = grid.face_weight(*face) * dt_slice;
        for (acc, val) in norms.iter_mut().zip([m.0, m.1, m.2, m.3]) {
            let val = inflate(val.max(0.0));
            *acc += w * val * val;
        }
    }

    BoundsCertificate {
        k_d: inflate(sup(&|s| s.values.d.abs())),
        k_e: inflate(sup(&|s| s.values.e.abs())),
        k_beta: inflate(sup(&|s| s.values.beta.abs())),
        k_mu: inflate(sup(&|s| s.values.mu.abs())),
        k_f,
        k_g,
        d: {
            let m = inf(&|s| s.values.d);
            if m > 0.0 { m * (1.0 - MARGIN) } else { m }
        },
        beta_g: {
            let m = inf(&|s| s.beta0);
            if m > 0.0 { m * (1.0 - MARGIN) } else { m }
        },
        f_tilde_norm: norms[0].sqrt(),
        g_tilde_norm: norms[1].sqrt(),
        f_sup_norm: norms[2].sqrt(),
        g_sup_norm: norms[3].sqrt(),
        f_slope,
        g_slope,
        f_scale: sup(&|s| s.values.f.abs()),
        g_scale: sup(&|s| s.values.g.abs()),
        sampling: *sbox,
        sample_count: samples.len(),
    }
}

/// Samples the homogenized coefficients and certifies the bound constants.
/// Fails when the sampled ellipticity constant is not positive.
pub fn certify_bounds(
    hc: &HomogenizedCoefficients,
    sbox: &SamplingBox,
    samples: usize,
    seed: u64,
) -> Result<BoundsCertificate> {
    if samples < 1000 {
        return Err(Error::Precondition(format!("need at least 1000 samples, got {samples}")));
    }
    let set = sample_coefficients(hc, sbox, samples, seed)?;
    let cert = certificate_from_samples(hc, sbox, &set);
    if !cert.is_elliptic() {
        return Err(Error::Certificate(format!(
            "ellipticity violated: sampled d = {:e}",
            cert.d
        )));
    }
    Ok(cert)
}
