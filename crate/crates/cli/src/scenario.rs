//! Turns a [`ScenarioConfig`] into solver objects.

use std::f64::consts::PI;
use std::sync::Arc;

use nonfick_core::coefficients::laws::{
    beta_tanh, beta_tanh_du, constant_concentration, constant_state, e_rational, tabulated, ConcentrationLaw,
    Partials, PartialsLaw, StateLaw, VectorLaw as CoreVectorLaw,
};
use nonfick_core::coefficients::{transform, NuLaw};
use nonfick_core::{build_grid, BackgroundField, Grid, PrimalCoefficients, ScalarField, TransformedCoefficients};

use crate::config::{FieldSpec, ScalarLaw, ScenarioConfig, VectorLaw};
use crate::CliError;

pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: Arc<Grid>,
    pub primal: PrimalCoefficients,
    pub tc: Arc<TransformedCoefficients>,
    pub phi: BackgroundField,
    /// Initial concentration with the boundary taken from `phi(0)`.
    pub u0: ScalarField,
    pub varsigma0: ScalarField,
}

fn check_beta_tanh(beta_r: f64, beta_g: f64, u_rg: f64, delta: f64) -> Result<(), CliError> {
    beta_tanh(u_rg, beta_r, beta_g, u_rg, delta).map(|_| ()).map_err(CliError::Core)
}

fn concentration_law(name: &str, law: &ScalarLaw) -> Result<ConcentrationLaw, CliError> {
    Ok(match *law {
        ScalarLaw::Constant { value } => constant_concentration(value),
        ScalarLaw::BetaTanh { beta_r, beta_g, u_rg, delta } => {
            check_beta_tanh(beta_r, beta_g, u_rg, delta)?;
            Arc::new(move |u| beta_tanh(u, beta_r, beta_g, u_rg, delta).unwrap_or(f64::NAN))
        }
        ScalarLaw::ERational { alpha1, alpha2 } => {
            check_alpha(alpha2)?;
            Arc::new(move |u| e_rational(u, alpha1, alpha2))
        }
        ScalarLaw::Tabulated { ref u, ref values } => tabulated(u, values)?,
        ScalarLaw::Periodic { .. } => {
            return Err(CliError::Config(format!("{name} cannot depend on time")));
        }
    })
}

fn check_alpha(alpha2: f64) -> Result<(), CliError> {
    if alpha2 > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("E_rational needs alpha2 > 0, got {alpha2}")))
    }
}

fn state_law(name: &str, law: &ScalarLaw) -> Result<StateLaw, CliError> {
    Ok(match *law {
        ScalarLaw::Constant { value } => constant_state(value),
        ScalarLaw::Periodic { mean, amplitude, period } => {
            if !(period > 0.0) {
                return Err(CliError::Config(format!("{name}: period must be positive")));
            }
            Arc::new(move |t, _, _, _| mean + amplitude * (2.0 * PI * t / period).sin())
        }
        _ => {
            let f = concentration_law(name, law)?;
            Arc::new(move |_, _, u, _| f(u))
        }
    })
}

/// Analytic partials for laws that have closed forms.
fn state_partials(law: &ScalarLaw) -> Option<PartialsLaw> {
    match *law {
        ScalarLaw::Constant { .. } | ScalarLaw::Periodic { .. } => Some(Arc::new(|_, _, _, _| Partials::default())),
        ScalarLaw::BetaTanh { beta_r, beta_g, u_rg, delta } => Some(Arc::new(move |_, _, u, _| Partials {
            du: beta_tanh_du(u, beta_r, beta_g, u_rg, delta),
            ..Partials::default()
        })),
        _ => None,
    }
}

fn vector_law(law: &VectorLaw) -> CoreVectorLaw {
    match *law {
        VectorLaw::Zero => Arc::new(|_, _, _, _| [0.0, 0.0]),
        VectorLaw::FSplit { x, y } => Arc::new(move |_, _, _, _| [x, y]),
    }
}

/// Primal coefficient bundle described by the config.
pub fn primal_coefficients(cfg: &ScenarioConfig) -> Result<PrimalCoefficients, CliError> {
    let c = &cfg.coefficients;
    let nu0 = match c.nu0 {
        ScalarLaw::Constant { value } => NuLaw::Constant(value),
        ref other => NuLaw::Function(concentration_law("nu0", other)?),
    };
    if !(c.u_range[0] < c.u_range[1]) {
        return Err(CliError::Config(format!("coefficients.u_range {:?} is empty", c.u_range)));
    }
    Ok(PrimalCoefficients {
        d0: state_law("d0", &c.d0)?,
        e0: state_law("e0", &c.e0)?,
        m0: vector_law(&c.m0),
        beta0: state_law("beta0", &c.beta0)?,
        mu0: concentration_law("mu0", &c.mu0)?,
        nu0,
        beta0_partials: state_partials(&c.beta0),
        u_range: (c.u_range[0], c.u_range[1]),
    })
}

fn spatial(spec: &FieldSpec, lengths: [f64; 2], dim: usize) -> Option<Box<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>> {
    Some(match *spec {
        FieldSpec::Zero => Box::new(|_, _| 0.0),
        FieldSpec::Constant { value } => Box::new(move |_, _| value),
        FieldSpec::Linear { left, right } => Box::new(move |_, x| left + (right - left) * x[0] / lengths[0]),
        FieldSpec::Sine { amplitude, offset } => Box::new(move |_, x| {
            let mut p = amplitude;
            for k in 0..dim {
                p *= (PI * x[k] / lengths[k]).sin();
            }
            offset + p
        }),
        FieldSpec::Periodic { mean, amplitude, period } => {
            Box::new(move |t, _| mean + amplitude * (2.0 * PI * t / period).sin())
        }
        FieldSpec::Table { .. } => return None,
    })
}

fn nodal(grid: &Grid, name: &str, spec: &FieldSpec) -> Result<ScalarField, CliError> {
    if let FieldSpec::Table { values } = spec {
        if values.len() != grid.node_count() {
            return Err(CliError::Config(format!(
                "data.{name}: table has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        return Ok(ScalarField::new(values.clone(), 0.0));
    }
    let f = spatial(spec, lengths(grid), grid.dim()).expect("non-table spec");
    Ok(ScalarField::from_fn(grid, |x| f(0.0, x)))
}

fn lengths(grid: &Grid) -> [f64; 2] {
    let l = grid.lengths();
    [l[0], *l.get(1).unwrap_or(&1.0)]
}

/// Boundary/background field `phi`.
pub fn background(grid: &Grid, spec: &FieldSpec) -> Result<BackgroundField, CliError> {
    match spec {
        FieldSpec::Zero => Ok(BackgroundField::Zero),
        FieldSpec::Periodic { period, .. } if !(*period > 0.0) => {
            Err(CliError::Config("data.phi: period must be positive".into()))
        }
        FieldSpec::Table { .. } => {
            let v = nodal(grid, "phi", spec)?.values;
            Ok(BackgroundField::Tabulated { t0: 0.0, dt: 1.0, frames: vec![v.clone(), v] })
        }
        _ => {
            let f = spatial(spec, lengths(grid), grid.dim()).expect("non-table spec");
            Ok(BackgroundField::Analytic(Arc::new(f)))
        }
    }
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self, CliError> {
        config.validate()?;
        let g = &config.grid;
        let grid = Arc::new(build_grid(g.dimension, &g.lengths, &g.cells)?);
        let primal = primal_coefficients(config)?;
        let tc = Arc::new(transform(&primal)?);
        let phi = background(&grid, &config.data.phi)?;
        let mut u0 = nodal(&grid, "u0", &config.data.u0)?;
        let phi0 = phi.nodal(&grid, 0.0);
        for &n in grid.boundary() {
            u0.values[n] = phi0[n];
        }
        let varsigma0 = nodal(&grid, "varsigma0", &config.data.varsigma0)?;
        Ok(Self { config: config.clone(), grid, primal, tc, phi, u0, varsigma0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn every_preset_builds() {
        for p in presets::PRESETS {
            let cfg = presets::load(p.name).unwrap();
            let s = Scenario::build(&cfg).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(s.u0.len(), s.grid.node_count());
        }
    }

    #[test]
    fn boundary_of_u0_follows_phi() {
        let mut cfg = presets::load("reproductive_demo").unwrap();
        cfg.data.u0 = FieldSpec::Constant { value: 0.9 };
        let s = Scenario::build(&cfg).unwrap();
        let phi0 = s.phi.nodal(&s.grid, 0.0);
        for &n in s.grid.boundary() {
            assert_eq!(s.u0.values[n], phi0[n]);
        }
    }

    #[test]
    fn laws_evaluate() {
        let mut cfg = presets::load("fick_baseline").unwrap();
        cfg.coefficients.beta0 = ScalarLaw::BetaTanh { beta_r: 2.0, beta_g: 1.0, u_rg: 0.5, delta: 0.1 };
        cfg.coefficients.e0 = ScalarLaw::ERational { alpha1: 1.0, alpha2: 0.01 };
        cfg.coefficients.mu0 = ScalarLaw::Tabulated { u: vec![0.0, 1.0], values: vec![0.0, 2.0] };
        let p = primal_coefficients(&cfg).unwrap();
        assert!(((p.beta0)(0.0, [0.0; 2], 0.6, 0.0) - (1.5 + 0.5 * 1f64.tanh())).abs() < 1e-14);
        assert!(((p.e0)(0.0, [0.0; 2], 0.5, 0.0) - 0.125 / 0.26).abs() < 1e-14);
        assert!(((p.mu0)(0.25) - 0.5).abs() < 1e-14);
        cfg.coefficients.beta0 = ScalarLaw::BetaTanh { beta_r: 1.0, beta_g: 2.0, u_rg: 0.5, delta: 0.1 };
        assert!(primal_coefficients(&cfg).is_err());
    }
}
