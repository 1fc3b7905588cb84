//! Scenario configuration: strict TOML schema plus `key=value` overrides.

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub grid: GridConfig,
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub data: DataConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: usize,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

/// Scalar coefficient law.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "law", deny_unknown_fields)]
pub enum ScalarLaw {
    #[serde(rename = "constant")]
    Constant { value: f64 },
    /// Glass/rubber relaxation rate in `u`.
    #[serde(rename = "beta_tanh")]
    BetaTanh { beta_r: f64, beta_g: f64, u_rg: f64, delta: f64 },
    /// `alpha1 u (u - 1)^2 / (alpha2 + (u - 1)^2)`.
    #[serde(rename = "E_rational")]
    ERational { alpha1: f64, alpha2: f64 },
    /// Piecewise-linear table in `u`.
    #[serde(rename = "tabulated")]
    Tabulated { u: Vec<f64>, values: Vec<f64> },
    /// `mean + amplitude sin(2 pi t / period)`.
    #[serde(rename = "periodic")]
    Periodic { mean: f64, amplitude: f64, period: f64 },
}

/// Drift vector law.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "law", deny_unknown_fields)]
pub enum VectorLaw {
    #[serde(rename = "zero")]
    Zero,
    /// Constant drift given per axis.
    #[serde(rename = "f_split")]
    FSplit {
        x: f64,
        #[serde(default)]
        y: f64,
    },
}

fn zero_law() -> ScalarLaw {
    ScalarLaw::Constant { value: 0.0 }
}

fn zero_vector() -> VectorLaw {
    VectorLaw::Zero
}

fn default_u_range() -> [f64; 2] {
    [-1.0, 2.0]
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub d0: ScalarLaw,
    #[serde(default = "zero_law")]
    pub e0: ScalarLaw,
    #[serde(default = "zero_vector")]
    pub m0: VectorLaw,
    pub beta0: ScalarLaw,
    #[serde(default = "zero_law")]
    pub mu0: ScalarLaw,
    #[serde(default = "zero_law")]
    pub nu0: ScalarLaw,
    #[serde(default = "default_u_range")]
    pub u_range: [f64; 2],
}

/// Initial or boundary field.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "constant")]
    Constant { value: f64 },
    /// Linear in `x` from `left` to `right`.
    #[serde(rename = "linear")]
    Linear { left: f64, right: f64 },
    /// `offset + amplitude prod_k sin(pi x_k / L_k)`.
    #[serde(rename = "sine")]
    Sine {
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Spatially constant `mean + amplitude sin(2 pi t / period)`.
    #[serde(rename = "periodic")]
    Periodic { mean: f64, amplitude: f64, period: f64 },
    /// Nodal values in node order.
    #[serde(rename = "table")]
    Table { values: Vec<f64> },
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub phi: FieldSpec,
    #[serde(default)]
    pub u0: FieldSpec,
    #[serde(default)]
    pub varsigma0: FieldSpec,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Reproductive,
    Periodic,
}

fn d_tol() -> f64 {
    1e-8
}
fn d_max_iter() -> usize {
    200
}
fn d_one() -> f64 {
    1.0
}
fn d_corrections() -> usize {
    1
}
fn d_stress_nodes() -> usize {
    2
}
fn d_starts() -> usize {
    1
}
fn d_samples() -> usize {
    2000
}
fn d_box() -> [f64; 2] {
    [-0.5, 0.5]
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: Mode,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_one")]
    pub relaxation: f64,
    #[serde(default = "d_corrections")]
    pub corrections: usize,
    #[serde(default = "d_stress_nodes")]
    pub stress_nodes: usize,
    /// Number of random initial guesses for shooting modes.
    #[serde(default = "d_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_box")]
    pub sample_box_v: [f64; 2],
    #[serde(default = "d_box")]
    pub sample_box_tau: [f64; 2],
}

fn d_dir() -> String {
    "out".into()
}
fn d_stride() -> usize {
    10
}
fn d_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_dir")]
    pub directory: String,
    /// Every `frame_stride`-th state is written; 0 disables frames.
    #[serde(default = "d_stride")]
    pub frame_stride: usize,
    #[serde(default = "d_true")]
    pub stress_monitor: bool,
    #[serde(default)]
    pub max_principle: Option<[f64; 2]>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: d_dir(), frame_stride: d_stride(), stress_monitor: true, max_principle: None }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text` after applying `section.key=value` overrides; values are
    /// TOML literals, bare words fall back to strings.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ScenarioConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Mode-specific and cross-field requirements.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let s = &self.solver;
        if !(s.horizon > 0.0) || !(s.dt > 0.0) {
            return bad(format!("solver.horizon and solver.dt must be positive, got {} and {}", s.horizon, s.dt));
        }
        if s.eps.is_empty() != s.lambda.is_empty() {
            return bad("solver.eps and solver.lambda must be given together".into());
        }
        if !s.eps.is_empty() && s.mode != Mode::Periodic {
            return bad("solver.eps/lambda continuation is only available in periodic mode".into());
        }
        if s.starts == 0 {
            return bad("solver.starts must be at least 1".into());
        }
        if s.sample_box_v[0] > s.sample_box_v[1] || s.sample_box_tau[0] > s.sample_box_tau[1] {
            return bad("sample boxes must be ordered intervals".into());
        }
        for (name, law) in [("mu0", &self.coefficients.mu0), ("nu0", &self.coefficients.nu0)] {
            if matches!(law, ScalarLaw::Periodic { .. }) {
                return bad(format!("coefficients.{name} depends on the concentration only; 'periodic' is not allowed"));
            }
        }
        for (name, f) in [("u0", &self.data.u0), ("varsigma0", &self.data.varsigma0)] {
            if matches!(f, FieldSpec::Periodic { .. }) {
                return bad(format!("data.{name} is an initial field; 'periodic' is not allowed"));
            }
        }
        Ok(())
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<(), CliError> {
    let (path, raw) = ov
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{ov}' is not of the form key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one element");
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override path '{path}' crosses a non-table value at '{k}'")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
[grid]
dimension = 1
lengths = [1.0]
cells = [20]

[coefficients]
d0 = { law = "constant", value = 1.0 }
beta0 = { law = "constant", value = 1.0 }

[solver]
mode = "simulate"
horizon = 0.1
dt = 0.01
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = ScenarioConfig::parse(MIN).unwrap();
        assert_eq!(c.coefficients.e0, ScalarLaw::Constant { value: 0.0 });
        assert_eq!(c.solver.tol, 1e-8);
        assert_eq!(c.output.frame_stride, 10);
        assert_eq!(c.data.phi, FieldSpec::Zero);
    }

    #[test]
    fn unknown_keys_rejected() {
        let typo = MIN.replace("horizon", "horizn");
        assert!(ScenarioConfig::parse(&typo).is_err());
        let law_typo = MIN.replace("value = 1.0 }\nbeta0", "valu = 1.0 }\nbeta0");
        assert!(ScenarioConfig::parse(&law_typo).is_err());
        let extra = format!("{MIN}\n[extra]\na = 1\n");
        assert!(ScenarioConfig::parse(&extra).is_err());
        let bad_law = MIN.replace("law = \"constant\", value = 1.0 }\nbeta0", "law = \"bogus\" }\nbeta0");
        assert!(ScenarioConfig::parse(&bad_law).is_err());
    }

    #[test]
    fn overrides_apply_and_stay_strict() {
        let c = ScenarioConfig::parse_with_overrides(MIN, &["solver.tol=1e-6".into(), "grid.cells=[40]".into()]).unwrap();
        assert_eq!(c.solver.tol, 1e-6);
        assert_eq!(c.grid.cells, vec![40]);
        let c = ScenarioConfig::parse_with_overrides(MIN, &["output.directory=results".into()]).unwrap();
        assert_eq!(c.output.directory, "results");
        assert!(ScenarioConfig::parse_with_overrides(MIN, &["solver.tolerance=1".into()]).is_err());
        assert!(ScenarioConfig::parse_with_overrides(MIN, &["no_equals".into()]).is_err());
    }

    #[test]
    fn mode_requirements() {
        let c = MIN.replace("dt = 0.01", "dt = 0.01\neps = [0.01]");
        assert!(ScenarioConfig::parse(&c).is_err());
        let c = MIN.replace("dt = 0.01", "dt = 0.01\nlambda = [1.0]\neps = [0.01]");
        assert!(ScenarioConfig::parse(&c).is_err(), "continuation outside periodic mode");
        let c = MIN.replace("beta0 = { law = \"constant\", value = 1.0 }", "beta0 = { law = \"constant\", value = 1.0 }\nmu0 = { law = \"periodic\", mean = 1.0, amplitude = 0.1, period = 1.0 }");
        assert!(ScenarioConfig::parse(&c).is_err());
    }

    #[test]
    fn roundtrip_through_toml() {
        let c = ScenarioConfig::parse(MIN).unwrap();
        assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap(), c);
    }
}
