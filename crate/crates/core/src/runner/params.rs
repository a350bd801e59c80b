use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Materials,
    Kernel,
    Spectrum,
    Trap,
    Dispersion,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Materials,
        Scenario::Kernel,
        Scenario::Spectrum,
        Scenario::Trap,
        Scenario::Dispersion,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Materials => "materials",
            Scenario::Kernel => "kernel",
            Scenario::Spectrum => "spectrum",
            Scenario::Trap => "trap",
            Scenario::Dispersion => "dispersion",
        }
    }

    pub fn about(&self) -> &'static str {
        match self {
            Scenario::Materials => "List the material catalog with the narrow-regime ω_SN² of each entry",
            Scenario::Kernel => "Tabulate the self-gravity kernel I(d) of a particle",
            Scenario::Spectrum => "First-order self-gravity shifts of the trap transition lines",
            Scenario::Trap => "Split-step evolution of a trapped centre-of-mass wave-function",
            Scenario::Dispersion => "Radial evolution of a free wave packet (mass scans allowed)",
        }
    }

    /// Parameters accepted by the scenario, in help order.
    pub fn params(&self) -> &'static [ParamSpec] {
        match self {
            Scenario::Materials => MATERIALS,
            Scenario::Kernel => KERNEL,
            Scenario::Spectrum => SPECTRUM,
            Scenario::Trap => TRAP,
            Scenario::Dispersion => DISPERSION,
        }
    }

    pub fn spec(&self, key: &str) -> Option<&'static ParamSpec> {
        self.params().iter().find(|p| p.key == key)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown scenario `{s}`")))
    }
}

/// One accepted key: the flag `--key` and the config-file line `key = value`.
#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub key: &'static str,
    pub unit: &'static str,
    /// Empty means "not set"; `auto` means derived from other parameters.
    pub default: &'static str,
    pub help: &'static str,
    /// Whether the value is a path whose contents are embedded in the manifest.
    pub is_file: bool,
}

const fn p(key: &'static str, unit: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec {
        key,
        unit,
        default,
        help,
        is_file: false,
    }
}

const fn file(key: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec {
        key,
        unit: "path",
        default: "",
        help,
        is_file: true,
    }
}

const MATERIALS_FILE: ParamSpec = file(
    "materials",
    "extra material catalog, one record per line: name=… m_atom_u=… density_g_cm3=… sigma_pm=…",
);
const MATERIAL: ParamSpec = p("material", "name", "osmium", "material of the particle");
const DENSITY_FILE: ParamSpec = file(
    "density-file",
    "radial mass density table for the numeric kernel, two columns r_m rho_kg_m3",
);
const JOBS: ParamSpec = p(
    "jobs",
    "count",
    "auto",
    "maximum number of scan points run concurrently (auto: available cores)",
);

const MATERIALS: &[ParamSpec] = &[MATERIALS_FILE];

const KERNEL: &[ParamSpec] = &[
    MATERIALS_FILE,
    p("kernel", "narrow|crystal|sphere|numeric", "crystal", "kernel model"),
    MATERIAL,
    p("mass-u", "u", "1e14", "particle mass"),
    DENSITY_FILE,
    p("d-max-m", "m", "auto", "largest separation tabulated (auto: 3× the kernel structure scale)"),
    p("points", "count", "201", "number of equally spaced separations from 0 to d-max-m"),
];

const SPECTRUM: &[ParamSpec] = &[
    MATERIALS_FILE,
    MATERIAL,
    p("mass-u", "u", "1e14", "particle mass; a comma-separated list runs a scan"),
    p("omega0-hz", "Hz", "10", "trap frequency ω₀/2π"),
    p("nmax", "count", "50", "highest oscillator level included"),
    p("dn", "count", "1", "level difference Δn of the transitions n → n+Δn"),
    p("temperature-mk", "mK", "100", "temperature of the Boltzmann line weights"),
    p("quad-rel-tol", "1", "1e-12", "relative tolerance of the adaptive ζ quadrature"),
    p("quad-max-panels", "count", "4000", "panel budget of the adaptive ζ quadrature"),
    JOBS,
];

const TRAP: &[ParamSpec] = &[
    MATERIALS_FILE,
    MATERIAL,
    p("mass-u", "u", "1e14", "particle mass; a comma-separated list runs a scan"),
    p("omega0-hz", "Hz", "10", "trap frequency ω₀/2π"),
    p("kernel", "narrow|crystal|sphere|numeric", "crystal", "self-gravity kernel model"),
    DENSITY_FILE,
    p("squeeze", "1", "1", "initial width relative to the trap ground state"),
    p("displace-m", "m", "0", "initial displacement of the packet centre"),
    p("dt", "s", "auto", "time step (auto: 10⁻³/ω₀)"),
    p("t-end", "s", "auto", "evolution time (auto: 10 trap periods)"),
    p("grid-n", "count", "2048", "number of grid points"),
    p("snapshot-stride", "steps", "0", "write a wave-function snapshot every this many steps (0: initial and final only)"),
    p("moment-stride", "steps", "10", "record moments every this many steps"),
    p("gravity-scale", "1", "1", "multiplier of G (0 switches self-gravity off)"),
    JOBS,
];

const DISPERSION: &[ParamSpec] = &[
    p("mass-u", "u", "1e10", "particle mass; a comma-separated list runs a scan"),
    p("width-um", "µm", "0.5", "initial Gaussian width r₀, ψ ∝ exp(−r²/4r₀²)"),
    p("t-end-s", "s", "auto", "evolution time (auto: 8 m r₀²/ħ)"),
    p("dt", "s", "auto", "time step (auto: 2×10⁻³ m r₀²/ħ)"),
    p("grid-n", "count", "4096", "number of radial grid points"),
    p(
        "rmax-factor",
        "1",
        "8",
        "grid extent in units of the free-packet r_rms at t-end-s",
    ),
    p("snapshot-stride", "steps", "auto", "write a density snapshot every this many steps (auto: 8 snapshots)"),
    p("metric-stride", "steps", "10", "record metrics every this many steps"),
    p("gravity-scale", "1", "1", "multiplier of G (0 gives the free reference)"),
    p("fixed-point", "bool", "false", "iterate the self-consistent potential to 10⁻¹⁰ each step"),
    JOBS,
];

/// A scenario with its flat key → value parameters.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Parameters as supplied, verbatim.
    pub parameters: BTreeMap<String, String>,
    pub output_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            parameters: BTreeMap::new(),
            output_dir: output_dir.into(),
        }
    }

    /// Sets a parameter, rejecting keys the scenario does not know.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().trim_start_matches("--");
        if self.scenario.spec(key).is_none() {
            let known: Vec<&str> = self.scenario.params().iter().map(|p| p.key).collect();
            return Err(Error::invalid(format!(
                "unknown parameter `{key}` for scenario {} (accepted: {})",
                self.scenario,
                known.join(", ")
            )));
        }
        self.parameters.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, source_name: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                source_name: source_name.to_string(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            self.set(key, value).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_text(&text, &path.display().to_string())
    }

    /// Every accepted key with supplied values or defaults.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.scenario
            .params()
            .iter()
            .map(|p| {
                let v = self.parameters.get(p.key).cloned().unwrap_or_else(|| p.default.to_string());
                (p.key.to_string(), v)
            })
            .collect()
    }
}
