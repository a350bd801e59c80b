use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use super::output::sha256_hex;
use super::params::{Scenario, ScenarioConfig};
use crate::dispersion::{free_r_rms, DispersionConfig, SelfConsistency};
use crate::error::{Error, Result};
use crate::kernels::{CrystalKernelParams, KernelKind, NumericKernel, SelfGravityKernel, SphereKernelParams};
use crate::physics::{make_oscillator_units, MaterialCatalog, MaterialRecord, AMU, HBAR};
use crate::spectral::QuadratureSettings;
use crate::trap::{default_grid, InitialState, TrapEvolutionConfig};

/// Largest oscillator level the spectrum scenario accepts.
pub const SPECTRUM_MAX_N: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A problem found in a configuration without running it.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub key: Option<String>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.key {
            Some(k) => write!(f, "{level}: {k}: {}", self.message),
            None => write!(f, "{level}: {}", self.message),
        }
    }
}

/// Contents of an input file, embedded in the manifest so that a replay
/// needs nothing else.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
    pub content: String,
}

struct Checker<'a> {
    values: &'a BTreeMap<String, String>,
    diags: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn raw(&self, key: &str) -> &'a str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            severity: Severity::Error,
            key: Some(key.to_string()),
            message: message.into(),
        });
    }

    fn warn(&mut self, key: Option<&str>, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            severity: Severity::Warning,
            key: key.map(str::to_string),
            message: message.into(),
        });
    }

    fn has_errors(&self) -> bool {
        self.diags.iter().any(|d| d.severity == Severity::Error)
    }

    fn number(&mut self, key: &str, text: &str, min: f64, strict: bool) -> Option<f64> {
        match text.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && (v > min || (!strict && v == min)) => Some(v),
            Ok(v) => {
                let bound = if strict { ">" } else { "≥" };
                self.error(key, format!("value {v} out of range (must be {bound} {min})"));
                None
            }
            Err(_) => {
                self.error(key, format!("`{text}` is not a number"));
                None
            }
        }
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        self.number(key, self.raw(key), 0.0, true)
    }

    fn non_negative(&mut self, key: &str) -> Option<f64> {
        self.number(key, self.raw(key), 0.0, false)
    }

    fn finite(&mut self, key: &str) -> Option<f64> {
        self.number(key, self.raw(key), f64::NEG_INFINITY, true)
    }

    /// `auto` → Some(None); otherwise a positive number.
    fn auto_positive(&mut self, key: &str) -> Option<Option<f64>> {
        if self.raw(key).trim() == "auto" {
            Some(None)
        } else {
            self.positive(key).map(Some)
        }
    }

    fn count(&mut self, key: &str, min: usize) -> Option<usize> {
        let text = self.raw(key);
        match text.trim().parse::<usize>() {
            Ok(v) if v >= min => Some(v),
            Ok(v) => {
                self.error(key, format!("value {v} out of range (must be ≥ {min})"));
                None
            }
            Err(_) => {
                self.error(key, format!("`{text}` is not a non-negative integer"));
                None
            }
        }
    }

    fn auto_count(&mut self, key: &str, min: usize) -> Option<Option<usize>> {
        if self.raw(key).trim() == "auto" {
            Some(None)
        } else {
            self.count(key, min).map(Some)
        }
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        match self.raw(key).trim() {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            other => {
                self.error(key, format!("`{other}` is not a boolean (true/false)"));
                None
            }
        }
    }

    /// Comma-separated list of positive masses in u.
    fn masses(&mut self, key: &str) -> Option<Vec<f64>> {
        let text = self.raw(key);
        let mut out = Vec::new();
        for part in text.split(',') {
            out.push(self.number(key, part, 0.0, true)?);
        }
        Some(out)
    }

    fn jobs(&mut self) -> Option<usize> {
        self.auto_count("jobs", 1).map(|j| j.unwrap_or(0))
    }
}

fn read_input(path: &str) -> Result<InputFile> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(Path::new(path), e))?;
    Ok(InputFile {
        path: path.to_string(),
        sha256: sha256_hex(content.as_bytes()),
        content,
    })
}

pub(crate) struct KernelPlan {
    pub kernel: SelfGravityKernel,
    pub d_max: f64,
    pub points: usize,
}

pub(crate) struct SpectrumPoint {
    pub mass_u: f64,
    pub mass: f64,
}

pub(crate) struct SpectrumPlan {
    pub material: MaterialRecord,
    pub points: Vec<SpectrumPoint>,
    pub omega0: f64,
    pub n_max: usize,
    pub delta_n: usize,
    pub temperature: f64,
    pub settings: QuadratureSettings,
}

pub(crate) struct TrapPoint {
    pub mass_u: f64,
    pub config: TrapEvolutionConfig,
    pub init: InitialState,
    pub grid_n: usize,
    pub omega_sn_squared: f64,
}

pub(crate) struct DispersionPoint {
    pub mass_u: f64,
    pub mass: f64,
    pub r0: f64,
    pub r_max: f64,
    pub grid_n: usize,
    pub config: DispersionConfig,
}

pub(crate) enum Plan {
    Materials(MaterialCatalog),
    Kernel(KernelPlan),
    Spectrum(SpectrumPlan),
    Trap(Vec<TrapPoint>),
    Dispersion(Vec<DispersionPoint>),
}

/// A configuration checked and turned into concrete numerical settings.
pub(crate) struct Prepared {
    pub plan: Option<Plan>,
    pub diagnostics: Vec<Diagnostic>,
    pub inputs: BTreeMap<String, InputFile>,
    pub jobs: usize,
}

/// Checks every parameter and builds the plan when there are no errors.
/// Only unreadable input files abort early (as I/O errors).
pub(crate) fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    let values = cfg.resolved();
    let mut c = Checker {
        values: &values,
        diags: Vec::new(),
    };
    let mut inputs = BTreeMap::new();
    for spec in cfg.scenario.params().iter().filter(|p| p.is_file) {
        let path = c.raw(spec.key).trim();
        if !path.is_empty() {
            inputs.insert(spec.key.to_string(), read_input(path)?);
        }
    }
    let mut catalog = MaterialCatalog::builtin();
    if let Some(f) = inputs.get("materials") {
        if let Err(e) = catalog.extend_from_text(&f.content, &f.path) {
            c.error("materials", e.to_string());
        }
    }
    let jobs = if cfg.scenario.spec("jobs").is_some() {
        c.jobs().unwrap_or(0)
    } else {
        1
    };
    let plan = match cfg.scenario {
        Scenario::Materials => Some(Plan::Materials(catalog)),
        Scenario::Kernel => kernel_plan(&mut c, &catalog, &inputs).map(Plan::Kernel),
        Scenario::Spectrum => spectrum_plan(&mut c, &catalog).map(Plan::Spectrum),
        Scenario::Trap => trap_plan(&mut c, &catalog, &inputs).map(Plan::Trap),
        Scenario::Dispersion => dispersion_plan(&mut c).map(Plan::Dispersion),
    };
    let plan = if c.has_errors() { None } else { plan };
    Ok(Prepared {
        plan,
        diagnostics: c.diags,
        inputs,
        jobs,
    })
}

fn material(c: &mut Checker, catalog: &MaterialCatalog) -> Option<MaterialRecord> {
    match catalog.lookup(c.raw("material")) {
        Ok(m) => Some(m.clone()),
        Err(e) => {
            c.error("material", e.to_string());
            None
        }
    }
}

fn build_kernel(
    c: &mut Checker,
    kind: KernelKind,
    mass: f64,
    material: &MaterialRecord,
    inputs: &BTreeMap<String, InputFile>,
) -> Option<SelfGravityKernel> {
    let built = match kind {
        KernelKind::Sphere => SphereKernelParams::new(mass, material.sphere_radius(mass)).map(SelfGravityKernel::Sphere),
        KernelKind::Crystal => CrystalKernelParams::from_material(mass, material).map(SelfGravityKernel::Crystal),
        KernelKind::Narrow => CrystalKernelParams::from_material(mass, material).map(SelfGravityKernel::Narrow),
        KernelKind::Numeric => match inputs.get("density-file") {
            Some(f) => NumericKernel::from_text(&f.content, mass, &f.path).map(SelfGravityKernel::Numeric),
            None => {
                c.error("density-file", "the numeric kernel needs a radial density table");
                return None;
            }
        },
        KernelKind::Delta => {
            c.error("kernel", "the point-mass kernel is singular and not available here");
            return None;
        }
    };
    match built {
        Ok(k) => {
            if let SelfGravityKernel::Crystal(p) | SelfGravityKernel::Narrow(p) = &k {
                if let Some(w) = p.parameter_warning() {
                    c.warn(Some("material"), w);
                }
            }
            Some(k)
        }
        Err(e) => {
            let key = if kind == KernelKind::Numeric { "density-file" } else { "mass-u" };
            c.error(key, e.to_string());
            None
        }
    }
}

fn kernel_kind(c: &mut Checker) -> Option<KernelKind> {
    match c.raw("kernel").parse::<KernelKind>() {
        Ok(k) => Some(k),
        Err(e) => {
            c.error("kernel", e.to_string());
            None
        }
    }
}

fn kernel_plan(c: &mut Checker, catalog: &MaterialCatalog, inputs: &BTreeMap<String, InputFile>) -> Option<KernelPlan> {
    let kind = kernel_kind(c);
    let material = material(c, catalog);
    let mass = c.positive("mass-u").map(|m| m * AMU);
    let d_max = c.auto_positive("d-max-m");
    let points = c.count("points", 2);
    let kernel = build_kernel(c, kind?, mass?, &material?, inputs)?;
    let d_max = d_max?.unwrap_or(3.0 * kernel.structure_scale());
    Some(KernelPlan {
        kernel,
        d_max,
        points: points?,
    })
}

fn omega0(c: &mut Checker) -> Option<f64> {
    c.positive("omega0-hz").map(|f| 2.0 * PI * f)
}

fn spectrum_plan(c: &mut Checker, catalog: &MaterialCatalog) -> Option<SpectrumPlan> {
    let material = material(c, catalog);
    let masses = c.masses("mass-u");
    let omega0 = omega0(c);
    let n_max = c.count("nmax", 1);
    let delta_n = c.count("dn", 1);
    let temperature = c.non_negative("temperature-mk").map(|t| t * 1e-3);
    let rel_tol = c.positive("quad-rel-tol");
    let max_panels = c.count("quad-max-panels", 1);
    if let Some(n) = n_max {
        if n > SPECTRUM_MAX_N {
            c.error("nmax", format!("nmax = {n} exceeds the supported maximum {SPECTRUM_MAX_N}"));
        }
        if let Some(dn) = delta_n {
            if dn > n {
                c.error("dn", format!("Δn = {dn} exceeds nmax = {n}"));
            }
        }
    }
    let (material, masses, omega0, n_max) = (material?, masses?, omega0?, n_max?);
    for &mass_u in &masses {
        let p = CrystalKernelParams::from_material(mass_u * AMU, &material).ok()?;
        let ell = (HBAR / (mass_u * AMU * omega0)).sqrt();
        let extent = 2.0 * ell * ((2 * n_max + 1) as f64).sqrt();
        if let Some(w) = p.validity_warning(extent) {
            c.warn(Some("mass-u"), format!("at {mass_u:e} u: {w}"));
        }
    }
    let settings = QuadratureSettings {
        zeta_rel_tol: rel_tol?,
        max_panels: max_panels?,
        ..QuadratureSettings::default()
    };
    Some(SpectrumPlan {
        material,
        points: masses
            .into_iter()
            .map(|mass_u| SpectrumPoint {
                mass_u,
                mass: mass_u * AMU,
            })
            .collect(),
        omega0,
        n_max,
        delta_n: delta_n?,
        temperature: temperature?,
        settings,
    })
}

fn trap_plan(c: &mut Checker, catalog: &MaterialCatalog, inputs: &BTreeMap<String, InputFile>) -> Option<Vec<TrapPoint>> {
    let material = material(c, catalog);
    let masses = c.masses("mass-u");
    let omega0 = omega0(c);
    let kind = kernel_kind(c);
    let squeeze = c.positive("squeeze");
    let displacement = c.finite("displace-m");
    let dt = c.auto_positive("dt");
    let t_end = c.auto_positive("t-end");
    let grid_n = c.count("grid-n", 16);
    let snapshot_stride = c.count("snapshot-stride", 0);
    let moment_stride = c.count("moment-stride", 1);
    let gravity_scale = c.non_negative("gravity-scale");
    let omega0 = omega0?;
    let dt = dt?.unwrap_or(1e-3 / omega0);
    if dt * omega0 > 1e-2 {
        c.error(
            "dt",
            format!("dt·ω₀ = {:.3e} exceeds the resolution guard 1e-2 of the split-step solver", dt * omega0),
        );
    }
    let t_end = t_end?.unwrap_or(10.0 * 2.0 * PI / omega0);
    let init = InitialState {
        displacement: displacement?,
        squeeze: squeeze?,
    };
    let (material, kind, grid_n) = (material?, kind?, grid_n?);
    let mut points = Vec::new();
    for mass_u in masses? {
        let mass = mass_u * AMU;
        let kernel = build_kernel(c, kind, mass, &material, inputs)?;
        let units = make_oscillator_units(mass, omega0).ok()?;
        let widest = units.length_scale / std::f64::consts::SQRT_2 * init.squeeze.max(1.0 / init.squeeze);
        let extent = 6.0 * widest + 2.0 * init.displacement.abs();
        if let Some(w) = kernel.extent_warning(extent) {
            c.warn(Some("mass-u"), format!("at {mass_u:e} u: {w}"));
        }
        if let Err(e) = default_grid(&units, &init, grid_n) {
            c.error("grid-n", e.to_string());
        }
        let mut config = TrapEvolutionConfig::new(mass, omega0, kernel, dt, t_end);
        config.snapshot_stride = snapshot_stride?;
        config.moment_stride = moment_stride?;
        config.gravity_scale = gravity_scale?;
        if let Err(e) = config.validate() {
            if !c.has_errors() {
                c.error("mass-u", e.to_string());
            }
        }
        points.push(TrapPoint {
            mass_u,
            config,
            init,
            grid_n,
            omega_sn_squared: material.omega_sn_squared(),
        });
    }
    Some(points)
}

fn dispersion_plan(c: &mut Checker) -> Option<Vec<DispersionPoint>> {
    let masses = c.masses("mass-u");
    let r0 = c.positive("width-um").map(|w| w * 1e-6);
    let t_end = c.auto_positive("t-end-s");
    let dt = c.auto_positive("dt");
    let grid_n = c.count("grid-n", 16);
    let rmax_factor = c.positive("rmax-factor");
    let snapshot_stride = c.auto_count("snapshot-stride", 1);
    let metric_stride = c.count("metric-stride", 1);
    let gravity_scale = c.non_negative("gravity-scale");
    let fixed_point = c.boolean("fixed-point");
    if let Some(f) = rmax_factor {
        if f < 2.0 {
            c.error("rmax-factor", format!("rmax-factor {f} leaves no room for the absorbing layer (must be ≥ 2)"));
        }
    }
    let (r0, grid_n, rmax_factor) = (r0?, grid_n?, rmax_factor?);
    let (t_end, dt, snapshot_stride) = (t_end?, dt?, snapshot_stride?);
    let mut points = Vec::new();
    for mass_u in masses? {
        let mass = mass_u * AMU;
        let unit = mass * r0 * r0 / HBAR;
        let t_end = t_end.unwrap_or(8.0 * unit);
        let dt = dt.unwrap_or(2e-3 * unit);
        if dt > t_end {
            c.error("dt", format!("dt = {dt:e} s exceeds t-end-s = {t_end:e} s"));
            return None;
        }
        let r_max = rmax_factor * free_r_rms(r0, mass, t_end);
        let dr = r_max / grid_n as f64;
        if dr > 0.1 * r0 {
            c.warn(
                Some("grid-n"),
                format!("at {mass_u:e} u the radial spacing {dr:.3e} m resolves r₀ = {r0:.3e} m with fewer than 10 points"),
            );
        }
        let mut config = DispersionConfig::new(dt, t_end);
        let steps = config.steps();
        config.snapshot_stride = snapshot_stride.unwrap_or((steps / 8).max(1));
        config.metric_stride = metric_stride?;
        config.gravity_scale = gravity_scale?;
        if fixed_point? {
            config.self_consistency = SelfConsistency::FixedPoint {
                tol: 1e-10,
                max_iter: 100,
            };
        }
        if let Err(e) = config.validate() {
            c.error("dt", e.to_string());
        }
        points.push(DispersionPoint {
            mass_u,
            mass,
            r0,
            r_max,
            grid_n,
            config,
        });
    }
    Some(points)
}
