//! Built-in scenarios.

use crate::config::ScenarioConfig;
use crate::CliError;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fick_baseline",
        description: "Pure Fick diffusion of a sine profile; compared with the exact heat solution",
        toml: r#"
name = "fick_baseline"

[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
d0 = { law = "constant", value = 1.0 }
beta0 = { law = "constant", value = 1.0 }

[data]
u0 = { kind = "sine", amplitude = 1.0 }

[solver]
mode = "simulate"
horizon = 0.1
dt = 1e-4

[output]
directory = "out/fick_baseline"
frame_stride = 100
max_principle = [-1e-8, 1.00000001]
"#,
    },
    Preset {
        name: "nonfick_front",
        description: "Penetrant front into a glassy film: tanh relaxation rate and rational stress coupling",
        toml: r#"
name = "nonfick_front"

[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
d0 = { law = "constant", value = 0.05 }
e0 = { law = "E_rational", alpha1 = 0.5, alpha2 = 0.05 }
beta0 = { law = "beta_tanh", beta_r = 5.0, beta_g = 0.5, u_rg = 0.5, delta = 0.1 }
mu0 = { law = "constant", value = 1.0 }

[data]
phi = { kind = "constant", value = 1.0 }
u0 = { kind = "zero" }

[solver]
mode = "simulate"
horizon = 0.5
dt = 1e-3

[output]
directory = "out/nonfick_front"
frame_stride = 50
max_principle = [-1e-8, 1.00000001]
"#,
    },
    Preset {
        name: "overshoot_probe",
        description: "Stress source proportional to the concentration rate; watch for sorption overshoot",
        toml: r#"
name = "overshoot_probe"

[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
d0 = { law = "constant", value = 0.2 }
e0 = { law = "E_rational", alpha1 = 1.0, alpha2 = 0.05 }
beta0 = { law = "beta_tanh", beta_r = 4.0, beta_g = 0.5, u_rg = 0.5, delta = 0.1 }
mu0 = { law = "constant", value = 0.5 }
nu0 = { law = "constant", value = 0.5 }

[data]
phi = { kind = "constant", value = 1.0 }
u0 = { kind = "zero" }

[solver]
mode = "simulate"
horizon = 0.5
dt = 1e-3

[output]
directory = "out/overshoot_probe"
frame_stride = 50
"#,
    },
    Preset {
        name: "reproductive_demo",
        description: "Concentration with u(0) = u(T) and stress restarted from zero on each shot",
        toml: r#"
name = "reproductive_demo"

[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
d0 = { law = "constant", value = 1.0 }
e0 = { law = "E_rational", alpha1 = 0.5, alpha2 = 0.05 }
beta0 = { law = "beta_tanh", beta_r = 2.0, beta_g = 1.0, u_rg = 0.5, delta = 0.25 }
mu0 = { law = "constant", value = 1.0 }

[data]
phi = { kind = "linear", left = 0.3, right = 0.7 }
u0 = { kind = "linear", left = 0.3, right = 0.7 }
varsigma0 = { kind = "zero" }

[solver]
mode = "reproductive"
horizon = 0.1
dt = 1e-3
tol = 1e-9
starts = 3
seed = 7

[output]
directory = "out/reproductive_demo"
frame_stride = 10
max_principle = [-1e-8, 1.00000001]
"#,
    },
    Preset {
        name: "periodic_demo",
        description: "Time-periodic coefficients and boundary data; periodic concentration and stress over T = 1",
        toml: r#"
name = "periodic_demo"

[grid]
dimension = 1
lengths = [1.0]
cells = [100]

[coefficients]
d0 = { law = "periodic", mean = 1.0, amplitude = 0.3, period = 1.0 }
e0 = { law = "E_rational", alpha1 = 0.3, alpha2 = 0.05 }
beta0 = { law = "periodic", mean = 2.0, amplitude = 0.5, period = 1.0 }
mu0 = { law = "constant", value = 0.5 }

[data]
phi = { kind = "periodic", mean = 0.5, amplitude = 0.2, period = 1.0 }
u0 = { kind = "constant", value = 0.5 }
varsigma0 = { kind = "zero" }

[solver]
mode = "periodic"
horizon = 1.0
dt = 2e-3
tol = 1e-8
starts = 1

[output]
directory = "out/periodic_demo"
frame_stride = 25
max_principle = [-1e-8, 1.00000001]
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn load(name: &str) -> Result<ScenarioConfig, CliError> {
    load_with_overrides(name, &[])
}

pub fn load_with_overrides(name: &str, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let p = find(name).ok_or_else(|| CliError::Config(format!("unknown preset '{name}'")))?;
    ScenarioConfig::parse_with_overrides(p.toml, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_are_named() {
        for p in PRESETS {
            let c = load(p.name).unwrap();
            assert_eq!(c.name.as_deref(), Some(p.name));
        }
        assert!(load("nope").is_err());
    }
}
