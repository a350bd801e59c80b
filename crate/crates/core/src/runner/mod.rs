//! Scenario configuration, execution, CSV output and run manifests.
//!
//! A scenario is configured by a flat key → value map whose keys are the
//! command-line flags without their leading dashes; config files hold the same
//! keys as `key = value` lines. Every run writes its CSV files plus
//! `manifest.json`, which records the toolkit version, the frozen constants,
//! every parameter, embedded input files and SHA-256 checksums of the outputs,
//! so that [`replay`] can re-execute it from the manifest alone.

mod execute;
mod output;
mod params;
mod plan;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::physics::CONSTANTS;

pub use output::{format_float, sha256_hex, Cell, CsvTable, OutputRecord};
pub use params::{ParamSpec, Scenario, ScenarioConfig};
pub use plan::{Diagnostic, InputFile, Severity, SPECTRUM_MAX_N};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "SN_TOOLKIT_OUT";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolkitInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit: ToolkitInfo,
    pub scenario: String,
    pub constants: Value,
    /// Parameters exactly as supplied.
    pub parameters: BTreeMap<String, String>,
    /// Every accepted parameter, defaults filled in.
    pub resolved_parameters: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, InputFile>,
    #[serde(default)]
    pub quadrature: Value,
    /// Derived per-point quantities (masses in kg, grids, couplings, fits).
    pub points: Vec<Value>,
    pub outputs: Vec<OutputRecord>,
    pub steps: usize,
    pub wall_clock_s: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub diagnostics: Vec<Diagnostic>,
}

/// The output directory after applying the [`OUTPUT_ENV`] override.
pub fn resolve_output_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

/// Every problem with the configuration, without running it. Unreadable
/// input files are reported as errors.
pub fn validate(cfg: &ScenarioConfig) -> Vec<Diagnostic> {
    match plan::prepare(cfg) {
        Ok(p) => p.diagnostics,
        Err(e) => vec![Diagnostic {
            severity: Severity::Error,
            key: None,
            message: e.to_string(),
        }],
    }
}

fn toolkit() -> ToolkitInfo {
    ToolkitInfo {
        name: "sn-toolkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

/// Validates, executes and writes the CSV files and manifest of a scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let started = Instant::now();
    let prepared = plan::prepare(cfg)?;
    let errors: Vec<String> = prepared
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(Error::invalid(errors.join("; ")));
    }
    let mut warnings: Vec<String> = prepared.diagnostics.iter().map(|d| d.to_string()).collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    let plan = prepared.plan.expect("a configuration without errors has a plan");
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results = execute::execute(&plan, dir, prepared.jobs)?;
    let quadrature = match &plan {
        plan::Plan::Spectrum(s) => serde_json::to_value(&s.settings).unwrap_or(Value::Null),
        _ => Value::Null,
    };
    let mut outputs = Vec::new();
    let mut points = Vec::new();
    let mut steps = 0;
    for r in results {
        outputs.extend(r.outputs);
        points.push(r.summary);
        steps += r.steps;
        warnings.extend(r.warnings);
    }
    let manifest = RunManifest {
        toolkit: toolkit(),
        scenario: cfg.scenario.to_string(),
        constants: serde_json::to_value(CONSTANTS).unwrap_or(Value::Null),
        parameters: cfg.parameters.clone(),
        resolved_parameters: cfg.resolved(),
        inputs: prepared.inputs,
        quadrature,
        points,
        outputs,
        steps,
        wall_clock_s: started.elapsed().as_secs_f64(),
        warnings,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
        diagnostics: prepared.diagnostics,
    })
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        source_name: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

#[derive(Clone, Debug)]
pub struct ReplayReport {
    pub output_dir: PathBuf,
    pub matched: Vec<String>,
}

/// Re-runs the scenario recorded in a manifest into `output_dir` and checks
/// that every output is byte-identical to the recorded checksum.
pub fn replay(manifest_path: &Path, output_dir: &Path) -> Result<ReplayReport> {
    let recorded = read_manifest(manifest_path)?;
    let current = serde_json::to_value(CONSTANTS).unwrap_or(Value::Null);
    if recorded.constants != current {
        return Err(Error::invalid(format!(
            "manifest constants {} differ from the frozen constants {current}",
            recorded.constants
        )));
    }
    if recorded.toolkit != toolkit() {
        log::warn!(
            "manifest written by {} {}, replaying with {}",
            recorded.toolkit.name,
            recorded.toolkit.version,
            toolkit().version
        );
    }
    let scenario: Scenario = recorded.scenario.parse()?;
    let mut cfg = ScenarioConfig::new(scenario, output_dir);
    for (k, v) in &recorded.resolved_parameters {
        cfg.set(k, v)?;
    }
    if !recorded.inputs.is_empty() {
        let dir = output_dir.join("inputs");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (key, input) in &recorded.inputs {
            if sha256_hex(input.content.as_bytes()) != input.sha256 {
                return Err(Error::invalid(format!("embedded input `{key}` does not match its checksum")));
            }
            let path = dir.join(format!("{key}.txt"));
            std::fs::write(&path, &input.content).map_err(|e| Error::io(&path, e))?;
            cfg.set(key, &path.display().to_string())?;
        }
    }
    let outcome = run(&cfg)?;
    let fresh: BTreeMap<&str, &str> = outcome
        .manifest
        .outputs
        .iter()
        .map(|o| (o.file.as_str(), o.sha256.as_str()))
        .collect();
    let mut matched = Vec::new();
    for o in &recorded.outputs {
        let actual = fresh.get(o.file.as_str()).copied().unwrap_or("missing");
        if actual != o.sha256 {
            return Err(Error::ReplayMismatch {
                file: o.file.clone(),
                expected: o.sha256.clone(),
                actual: actual.to_string(),
            });
        }
        matched.push(o.file.clone());
    }
    if fresh.len() != recorded.outputs.len() {
        return Err(Error::invalid(format!(
            "replay produced {} files, the manifest lists {}",
            fresh.len(),
            recorded.outputs.len()
        )));
    }
    Ok(ReplayReport {
        output_dir: output_dir.to_path_buf(),
        matched,
    })
}

/// Process exit status for an error: 2 for invalid input, 4 for the
/// filesystem, 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else if matches!(err, Error::Io { .. }) {
        EXIT_IO
    } else {
        EXIT_NUMERICAL
    }
}

/// Machine-readable description of a failed run.
pub fn error_record(err: &Error, scenario: Option<&str>) -> Value {
    let details = match err {
        Error::Quadrature { what, achieved, target } => {
            json!({ "what": what, "achieved": achieved, "target": target })
        }
        Error::Containment { time, ratio } => json!({ "time_s": time, "edge_ratio": ratio }),
        Error::FitFailed { residual_rms } => json!({ "residual_rms": residual_rms }),
        Error::NoConvergence {
            what,
            iterations,
            last_change,
        } => json!({ "what": what, "iterations": iterations, "last_change": last_change }),
        Error::NotNormalized { integrated, expected } => json!({ "integrated": integrated, "expected": expected }),
        Error::ReplayMismatch { file, expected, actual } => {
            json!({ "file": file, "expected_sha256": expected, "actual_sha256": actual })
        }
        Error::Parse {
            source_name, line, ..
        } => json!({ "source": source_name, "line": line }),
        Error::Io { path, .. } => json!({ "path": path.display().to_string() }),
        Error::UnknownMaterial { name, available } => json!({ "name": name, "available": available }),
        _ => Value::Null,
    };
    json!({
        "status": "error",
        "exit_code": exit_code(err),
        "kind": err.kind(),
        "message": err.to_string(),
        "scenario": scenario,
        "details": details,
    })
}

/// Writes `error.json` into `dir` (best effort: the directory may be the
/// very thing that failed).
pub fn write_error_record(dir: &Path, record: &Value) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(ERROR_FILE);
    let text = serde_json::to_string_pretty(record).unwrap_or_default();
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}
