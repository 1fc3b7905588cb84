//! Constants, energy functionals and hypothesis checks.

use std::collections::HashMap;

use crate::coefficients::certificate::{certificate_from_samples, sample_coefficients, CoefficientSample, SamplingBox};
use crate::coefficients::{BoundsCertificate, HomogenizedCoefficients};
use crate::error::{Error, Result};
use crate::evolution::{RegularizedState, Trajectory};
use crate::grid_ops::{norm, Grid, NormKind};

/// Energy value of one `(lambda, eps)` run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub lambda: f64,
    pub eps: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub k_omega: f64,
    pub k: f64,
    pub t0: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma: Option<f64>,
    pub gamma0: Option<f64>,
    pub energies: Vec<EnergyRecord>,
    pub certificate: BoundsCertificate,
}

impl EstimateReport {
    pub fn with_coercivity(mut self, gamma: f64, gamma0: f64) -> Self {
        self.gamma = Some(gamma);
        self.gamma0 = Some(gamma0);
        self
    }

    pub fn record_energy(&mut self, lambda: f64, eps: f64, value: f64) {
        self.energies.push(EnergyRecord { lambda, eps, value });
    }

    /// Whether a horizon lies inside the guaranteed contraction regime.
    pub fn guarantees(&self, horizon: f64) -> bool {
        horizon <= self.t0
    }

    /// One CSV row: `k_omega,k,t0,c1,c2,gamma,gamma0`.
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
        format!(
            "{},{},{},{},{},{},{}",
            self.k_omega,
            self.k,
            self.t0,
            self.c1,
            self.c2,
            opt(self.gamma),
            opt(self.gamma0)
        )
    }
}

/// Sufficient thresholds of the short-time contraction argument:
///
/// ```text
/// C1 = K_beta^2 / 2 + 3/2 K_g^2 K_Omega^2 + 3/2 ||g~||^2
/// C2 = C1 e (3 K_E^2 / (4 d) + 9 K_f^2 K_Omega^2 / (4 d))
/// k  = max(4 + 2 K_mu + 3/2 K_g^2 K_Omega^2, 6 C2 / d),   T0 = 1 / k
/// ```
pub fn compute_thresholds(cert: &BoundsCertificate, k_omega: f64) -> Result<EstimateReport> {
    if !(cert.d > 0.0) {
        return Err(Error::Certificate(format!("ellipticity constant d = {} is not positive", cert.d)));
    }
    let kg2 = cert.k_g * cert.k_g * k_omega * k_omega;
    let c1 = 0.5 * cert.k_beta * cert.k_beta + 1.5 * kg2 + 1.5 * cert.g_tilde_norm * cert.g_tilde_norm;
    let c2 = c1
        * std::f64::consts::E
        * (3.0 * cert.k_e * cert.k_e / (4.0 * cert.d)
            + 9.0 * cert.k_f * cert.k_f * k_omega * k_omega / (4.0 * cert.d));
    let k = (4.0 + 2.0 * cert.k_mu + 1.5 * kg2).max(6.0 * c2 / cert.d);
    Ok(EstimateReport {
        k_omega,
        k,
        t0: 1.0 / k,
        c1,
        c2,
        gamma: None,
        gamma0: None,
        energies: Vec::new(),
        certificate: cert.clone(),
    })
}

/// Weighting of the stress term in the energy functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyWeighting {
    /// `eps ||v||_{H2_0}^2 + eps ||tau||_X^2 + lambda ||v||_1^2 + ||tau||_1^2`.
    Reproductive,
    /// Same with `lambda ||tau||_1^2`.
    Periodic,
}

/// Time integral (trapezoid rule) of the energy density over a regularized run.
pub fn energy_lhs(grid: &Grid, traj: &Trajectory<RegularizedState>, weighting: EnergyWeighting) -> f64 {
    let density = |s: &RegularizedState| {
        let w_tau = match weighting {
            EnergyWeighting::Reproductive => 1.0,
            EnergyWeighting::Periodic => s.lambda,
        };
        s.eps * norm(grid, &s.v, NormKind::H2_0).powi(2)
            + s.eps * norm(grid, &s.tau, NormKind::X).powi(2)
            + s.lambda * norm(grid, &s.v, NormKind::H1_0).powi(2)
            + w_tau * norm(grid, &s.tau, NormKind::H1_0).powi(2)
    };
    let vals: Vec<f64> = traj.states.iter().map(density).collect();
    vals.windows(2).map(|w| 0.5 * traj.dt * (w[0] + w[1])).sum()
}

/// Smallest eigenvalue of `[[D, c], [c, -mu]]`, `c = (E Gamma - beta / Gamma) / 2`.
pub fn coercivity_form_min(d: f64, mu: f64, e: f64, beta: f64, gamma: f64) -> f64 {
    let c = 0.5 * (e * gamma - beta / gamma);
    0.5 * (d - mu) - (0.25 * (d + mu) * (d + mu) + c * c).sqrt()
}

/// Coefficient tuple `(D, mu, E, beta)` entering the coercivity form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoercivitySample {
    pub d: f64,
    pub mu: f64,
    pub e: f64,
    pub beta: f64,
}

impl From<&CoefficientSample> for CoercivitySample {
    fn from(s: &CoefficientSample) -> Self {
        Self { d: s.values.d, mu: s.values.mu, e: s.values.e, beta: s.values.beta }
    }
}

/// `Gamma = 2^-10, ..., 2^10`.
pub fn default_gamma_grid() -> Vec<f64> {
    (-10..=10).map(|k| 2f64.powi(k)).collect()
}

fn gamma0_at(samples: &[CoercivitySample], gamma: f64) -> f64 {
    samples
        .iter()
        .map(|s| coercivity_form_min(s.d, s.mu, s.e, s.beta, gamma))
        .fold(f64::INFINITY, f64::min)
}

/// Finds `Gamma` maximizing `inf_samples Gamma0(Gamma, sample)`: coarse scan
/// of `gamma_grid`, then golden-section refinement in `log Gamma` around the
/// best grid point. Fails when no positive `Gamma0` is found.
pub fn coercivity_gamma_search(samples: &[CoercivitySample], gamma_grid: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() || gamma_grid.is_empty() {
        return Err(Error::Precondition("coercivity search needs samples and a Gamma grid".into()));
    }
    let mut grid: Vec<f64> = gamma_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let vals: Vec<f64> = grid.iter().map(|&g| gamma0_at(samples, g)).collect();
    let best = (0..grid.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty");
    let (mut g_best, mut v_best) = (grid[best], vals[best]);
    if grid.len() > 1 {
        let lo = grid[best.saturating_sub(1)].ln();
        let hi = grid[(best + 1).min(grid.len() - 1)].ln();
        let f = |s: f64| gamma0_at(samples, s.exp());
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        let s = 0.5 * (a + b);
        let v = f(s);
        if v > v_best {
            g_best = s.exp();
            v_best = v;
        }
    }
    if !(v_best > 0.0) {
        return Err(Error::Certificate(format!(
            "coercivity condition unverifiable: best Gamma0 = {v_best:e}"
        )));
    }
    Ok((g_best, v_best))
}

/// Which existence theorem the hypotheses are checked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypothesisMode {
    Reproductive,
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub mode: HypothesisMode,
    pub checks: Vec<HypothesisCheck>,
    pub coercivity: Option<(f64, f64)>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Relative state-induced variation below which a coefficient counts as
/// state-free.
const FLAT_SPREAD: f64 = 1e-8;

/// Largest spread of `get` over the states sampled at one `(t, face)`.
fn state_spread(samples: &[CoefficientSample], get: impl Fn(&CoefficientSample) -> f64) -> f64 {
    let mut groups: HashMap<(u64, usize), (f64, f64)> = HashMap::new();
    for s in samples {
        let y = get(s);
        let e = groups.entry((s.t.to_bits(), s.face)).or_insert((y, y));
        e.0 = e.0.min(y);
        e.1 = e.1.max(y);
    }
    groups.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
}

/// Itemized check of the structural hypotheses on a sample set.
pub fn validate_hypotheses(
    cert: &BoundsCertificate,
    samples: &[CoefficientSample],
    mode: HypothesisMode,
) -> HypothesisReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(HypothesisCheck { name, passed, detail });
    let bounded = |k: f64, get: &dyn Fn(&CoefficientSample) -> f64| {
        let worst = samples.iter().map(|s| get(s).abs()).fold(0.0, f64::max);
        (k.is_finite() && worst <= k * (1.0 + 1e-12) + 1e-300, worst)
    };
    let (ok, w) = bounded(cert.k_d, &|s| s.values.d);
    push("D bounded", ok, format!("sup |D| = {w}, K_D = {}", cert.k_d));
    let (ok, w) = bounded(cert.k_e, &|s| s.values.e);
    push("E bounded", ok, format!("sup |E| = {w}, K_E = {}", cert.k_e));
    let (ok, w) = bounded(cert.k_beta, &|s| s.values.beta);
    push("beta bounded", ok, format!("sup |beta| = {w}, K_beta = {}", cert.k_beta));
    let (ok, w) = bounded(cert.k_mu, &|s| s.values.mu);
    push("mu bounded", ok, format!("sup |mu| = {w}, K_mu = {}", cert.k_mu));
    push(
        "f majorant",
        cert.k_f.is_finite() && cert.f_tilde_norm.is_finite(),
        format!("K_f = {}, ||f~|| = {}", cert.k_f, cert.f_tilde_norm),
    );
    push(
        "g majorant",
        cert.k_g.is_finite() && cert.g_tilde_norm.is_finite(),
        format!("K_g = {}, ||g~|| = {}", cert.k_g, cert.g_tilde_norm),
    );
    push("ellipticity", cert.d > 0.0, format!("d = {}", cert.d));
    push("relaxation floor", cert.beta_g > 0.0, format!("beta_G = {}", cert.beta_g));

    let mut coercivity = None;
    if mode == HypothesisMode::Periodic {
        let f_spread = state_spread(samples, |s| s.values.f);
        let g_spread = state_spread(samples, |s| s.values.g);
        push(
            "state-free f majorant",
            f_spread <= FLAT_SPREAD * (1.0 + cert.f_scale) && cert.f_sup_norm.is_finite(),
            format!("state spread {f_spread} (scale {})", cert.f_scale),
        );
        push(
            "state-free g majorant",
            g_spread <= FLAT_SPREAD * (1.0 + cert.g_scale) && cert.g_sup_norm.is_finite(),
            format!("state spread {g_spread} (scale {})", cert.g_scale),
        );
        let cs: Vec<CoercivitySample> = samples.iter().map(CoercivitySample::from).collect();
        match coercivity_gamma_search(&cs, &default_gamma_grid()) {
            Ok((g, g0)) => {
                coercivity = Some((g, g0));
                push("coercivity", true, format!("Gamma = {g}, Gamma0 = {g0}"));
            }
            Err(e) => push("coercivity", false, e.to_string()),
        }
    }
    HypothesisReport { mode, checks, coercivity }
}

/// Samples `hc`, builds the (unjudged) certificate and validates it.
pub fn validate_sampled(
    hc: &HomogenizedCoefficients,
    sbox: &SamplingBox,
    samples: usize,
    seed: u64,
    mode: HypothesisMode,
) -> Result<(BoundsCertificate, HypothesisReport)> {
    let set = sample_coefficients(hc, sbox, samples, seed)?;
    let cert = certificate_from_samples(hc, sbox, &set);
    let report = validate_hypotheses(&cert, &set, mode);
    Ok((cert, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::laws::constant_state;
    use crate::coefficients::{homogenize, transform, BackgroundField, PrimalCoefficients};
    use crate::evolution::{RegularizedStepper, StepOptions};
    use crate::grid_ops::{build_grid, ScalarField};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn cert(k_mu: f64, k_g: f64, k_beta: f64, k_e: f64, k_f: f64, d: f64) -> BoundsCertificate {
        BoundsCertificate::from_constants(1.0, k_e, k_beta, k_mu, k_f, k_g, d)
    }

    #[test]
    fn threshold_examples() {
        let r = compute_thresholds(&cert(1.0, 0.0, 0.0, 0.0, 0.0, 1.0), 0.3).unwrap();
        assert_eq!((r.c1, r.c2, r.k, r.t0), (0.0, 0.0, 6.0, 1.0 / 6.0));
        let r = compute_thresholds(&cert(0.0, 0.0, 0.0, 0.0, 0.0, 1.0), 0.3).unwrap();
        assert_eq!((r.k, r.t0), (4.0, 0.25));
        let r = compute_thresholds(&cert(0.0, 1.0, 0.0, 0.0, 0.0, 1.0), 1.0 / PI).unwrap();
        assert!((r.k - (4.0 + 1.5 / (PI * PI))).abs() < 1e-14);
        assert!((r.t0 - 0.2408).abs() < 1e-4);
        assert!(compute_thresholds(&cert(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 0.3).is_err());
    }

    #[test]
    fn stress_coupling_threshold_can_dominate() {
        let mut c = cert(0.0, 0.0, 2.0, 1.0, 0.0, 0.5);
        c.g_tilde_norm = 0.5;
        let r = compute_thresholds(&c, 0.3).unwrap();
        let c1 = 2.0 + 0.375;
        let c2 = c1 * std::f64::consts::E * (3.0 / 2.0);
        assert!((r.c1 - c1).abs() < 1e-14 && (r.c2 - c2).abs() < 1e-12);
        assert!((r.k - 6.0 * c2 / 0.5).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn thresholds_monotone(base in proptest::collection::vec(0.0f64..3.0, 5), bump in 0.0f64..2.0, which in 0usize..6) {
            let mut a = cert(base[0], base[1], base[2], base[3], base[4], 0.7);
            a.g_tilde_norm = 0.2;
            let mut b = a.clone();
            match which {
                0 => b.k_mu += bump,
                1 => b.k_g += bump,
                2 => b.k_beta += bump,
                3 => b.k_e += bump,
                4 => b.k_f += bump,
                _ => b.g_tilde_norm += bump,
            }
            let ta = compute_thresholds(&a, 0.4).unwrap().t0;
            let tb = compute_thresholds(&b, 0.4).unwrap().t0;
            prop_assert!(tb <= ta);
        }

        #[test]
        fn eigenvalue_matches_sphere_scan(d in 0.1f64..3.0, mu in -3.0f64..1.0, e in 0.0f64..2.0, beta in -2.0f64..2.0, lg in -3.0f64..3.0) {
            let g = lg.exp();
            let eig = coercivity_form_min(d, mu, e, beta, g);
            let off = e * g - beta / g;
            let form = |th: f64| { let (x, y) = (th.cos(), th.sin()); d * x * x - mu * y * y + off * x * y };
            let n = 20_000;
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..n {
                let th = PI * k as f64 / n as f64;
                let v = form(th);
                if v < best.0 { best = (v, th); }
            }
            // golden refinement of the bracketing cell
            let (mut a, mut b) = (best.1 - PI / n as f64, best.1 + PI / n as f64);
            for _ in 0..60 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                if form(m1) < form(m2) { b = m2 } else { a = m1 }
            }
            prop_assert!((form(0.5 * (a + b)) - eig).abs() < 1e-9);
        }
    }

    #[test]
    fn coercivity_examples() {
        assert!((coercivity_form_min(1.0, -1.0, 0.2, -0.2, 1.0) - 0.8).abs() < 1e-15);
        for g in default_gamma_grid() {
            assert!((coercivity_form_min(1.0, -1.0, 0.0, 0.0, g) - 1.0).abs() < 1e-15);
        }
        let s = [CoercivitySample { d: 1.0, mu: -1.0, e: 0.2, beta: 0.2 }];
        // E Gamma = beta / Gamma at Gamma = 1 kills the coupling
        let (g, g0) = coercivity_gamma_search(&s, &default_gamma_grid()).unwrap();
        assert!((g - 1.0).abs() < 1e-6 && (g0 - 1.0).abs() < 1e-12);
        let bad = [CoercivitySample { d: 1.0, mu: 0.5, e: 0.0, beta: 0.0 }];
        assert!(coercivity_gamma_search(&bad, &default_gamma_grid()).is_err());
        assert!(coercivity_gamma_search(&[], &default_gamma_grid()).is_err());
    }

    fn sbox() -> SamplingBox {
        SamplingBox { v: (-0.5, 0.5), tau: (-0.5, 0.5), t: (0.0, 1.0) }
    }

    #[test]
    fn fickian_preset_passes_everything() {
        let grid = Arc::new(build_grid(1, &[1.0], &[16]).unwrap());
        let tc = Arc::new(transform(&PrimalCoefficients::fickian(1.0)).unwrap());
        let hc = homogenize(grid, tc, BackgroundField::Zero, BackgroundField::Zero).unwrap();
        for mode in [HypothesisMode::Reproductive, HypothesisMode::Periodic] {
            let (cert, rep) = validate_sampled(&hc, &sbox(), 2000, 3, mode).unwrap();
            assert!(rep.passed(), "{:?}", rep.failures());
            assert_eq!(cert.k_e, 0.0);
        }
    }

    #[test]
    fn injected_non_ellipticity_is_flagged() {
        let grid = Arc::new(build_grid(1, &[1.0], &[16]).unwrap());
        let p = PrimalCoefficients { d0: constant_state(-0.2), ..PrimalCoefficients::fickian(1.0) };
        let hc = homogenize(grid, Arc::new(transform(&p).unwrap()), BackgroundField::Zero, BackgroundField::Zero).unwrap();
        let (_, rep) = validate_sampled(&hc, &sbox(), 2000, 3, HypothesisMode::Reproductive).unwrap();
        assert!(!rep.check("ellipticity").unwrap().passed);
    }

    #[test]
    fn state_dependent_f_fails_periodic_gate_only() {
        let grid = Arc::new(build_grid(1, &[1.0], &[16]).unwrap());
        // f = E1 grad psi + D1 grad phi depends on tau through D0(sigma)
        let p = PrimalCoefficients {
            d0: Arc::new(|_, _, _, s| 1.0 + 0.3 * s.tanh()),
            beta0_partials: None,
            ..PrimalCoefficients::fickian(1.0)
        };
        let hc = homogenize(
            grid,
            Arc::new(transform(&p).unwrap()),
            BackgroundField::analytic(|_, x| x[0]),
            BackgroundField::Zero,
        )
        .unwrap();
        let (_, rep) = validate_sampled(&hc, &sbox(), 2000, 3, HypothesisMode::Periodic).unwrap();
        assert!(rep.check("f majorant").unwrap().passed);
        assert!(!rep.check("state-free f majorant").unwrap().passed);
    }

    #[test]
    fn energy_of_decaying_mode() {
        let grid = Arc::new(build_grid(1, &[1.0], &[64]).unwrap());
        let tc = Arc::new(transform(&PrimalCoefficients::fickian(1.0)).unwrap());
        let hc = homogenize(grid.clone(), tc, BackgroundField::Zero, BackgroundField::Zero).unwrap();
        let st = RegularizedStepper::new(grid.clone(), StepOptions::default());
        let v0 = ScalarField::from_fn(&grid, |x| (PI * x[0]).sin());
        let (eps, lam, t) = (1e-2, 0.5, 0.5);
        let r = RegularizedState::new(&grid, 0.0, v0, ScalarField::zeros(&grid), eps, lam).unwrap();
        let traj = st.simulate(&r, &hc, t, 1e-3).unwrap();
        let rate = lam * PI * PI + eps * PI.powi(4);
        let exact = (eps * PI.powi(4) / 2.0 + lam * PI * PI / 2.0) * (1.0 - (-2.0 * rate * t).exp()) / (2.0 * rate);
        let got = energy_lhs(&grid, &traj, EnergyWeighting::Reproductive);
        assert!((got - exact).abs() <= 0.05 * exact, "{got} vs {exact}");

        let zero = RegularizedState::new(&grid, 0.0, ScalarField::zeros(&grid), ScalarField::zeros(&grid), eps, lam).unwrap();
        let traj = st.simulate(&zero, &hc, 0.1, 1e-2).unwrap();
        assert_eq!(energy_lhs(&grid, &traj, EnergyWeighting::Reproductive), 0.0);
    }

    #[test]
    fn lambda_zero_keeps_eps_and_tau_terms() {
        let grid = build_grid(1, &[1.0], &[32]).unwrap();
        let v = ScalarField::from_fn(&grid, |x| (PI * x[0]).sin());
        let tau = ScalarField::from_fn(&grid, |x| 0.5 * (PI * x[0]).sin());
        let mk = |eps| RegularizedState::new(&grid, 0.0, v.clone(), tau.clone(), eps, 0.0).unwrap();
        let traj = |eps| Trajectory {
            states: vec![mk(eps), mk(eps)],
            dt: 1.0,
            scheme: String::new(),
            monitors: vec![],
            stress: None,
            max_principle: None,
        };
        let t1 = norm(&grid, &tau, NormKind::H1_0).powi(2);
        assert!((energy_lhs(&grid, &traj(0.0), EnergyWeighting::Reproductive) - t1).abs() < 1e-14);
        assert_eq!(energy_lhs(&grid, &traj(0.0), EnergyWeighting::Periodic), 0.0);
        let with_eps = energy_lhs(&grid, &traj(0.1), EnergyWeighting::Reproductive);
        let expect = t1
            + 0.1 * (norm(&grid, &v, NormKind::H2_0).powi(2) + norm(&grid, &tau, NormKind::X).powi(2));
        assert!((with_eps - expect).abs() < 1e-10);
    }
}
