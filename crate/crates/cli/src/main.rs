//! `sn-toolkit`: command-line front end for the Schrödinger–Newton scenarios.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for numerical failures,
//! 4 for I/O errors. Failures print a JSON error record on stderr and, when
//! possible, write it to `error.json` in the output directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use sn_core::error::Error;
use sn_core::physics::MaterialRecord;
use sn_core::runner::{
    self, Diagnostic, ParamSpec, Scenario, ScenarioConfig, Severity, EXIT_VALIDATION, OUTPUT_ENV,
};

const DEFAULT_OUT: &str = "sn-output";

fn param_arg(p: &ParamSpec) -> Arg {
    let default = match p.default {
        "" => String::from("unset"),
        d => d.to_string(),
    };
    Arg::new(p.key)
        .long(p.key)
        .value_name(p.unit)
        .help(format!("{} [{}] (default: {default})", p.help, p.unit))
        .allow_negative_numbers(true)
        .action(ArgAction::Set)
}

fn scenario_command(s: Scenario) -> Command {
    let mut cmd = Command::new(s.as_str())
        .about(s.about())
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("flat `key = value` file with the same keys as the flags; flags override it"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .value_parser(clap::value_parser!(PathBuf))
                .help(format!("output directory [path] (default: {DEFAULT_OUT}; {OUTPUT_ENV} overrides)")),
        )
        .arg(
            Arg::new("check")
                .long("check")
                .action(ArgAction::SetTrue)
                .help("only validate the configuration and print diagnostics"),
        );
    for p in s.params() {
        cmd = cmd.arg(param_arg(p));
    }
    cmd
}

fn cli() -> Command {
    let mut cmd = Command::new("sn-toolkit")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Schrödinger–Newton self-gravity toolkit: kernels, trap spectra, trap dynamics and free dispersion")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("verbose")
                .short('v')
                .long("verbose")
                .global(true)
                .action(ArgAction::Count)
                .help("more log output (-v info, -vv debug)"),
        );
    for s in Scenario::ALL {
        cmd = cmd.subcommand(scenario_command(s));
    }
    cmd.subcommand(
        Command::new("replay")
            .about("Re-run a manifest and check that every output is bit-identical")
            .arg(
                Arg::new("manifest")
                    .required(true)
                    .value_name("MANIFEST")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("manifest.json of an earlier run [path]"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("directory for the re-run [path] (default: `replay` next to the manifest)"),
            ),
    )
}

fn build_config(s: Scenario, m: &ArgMatches) -> Result<ScenarioConfig, Error> {
    let out = m
        .get_one::<PathBuf>("out")
        .cloned()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut cfg = ScenarioConfig::new(s, runner::resolve_output_dir(&out));
    if let Some(path) = m.get_one::<PathBuf>("config") {
        cfg.merge_file(path)?;
    }
    for p in s.params() {
        if let Some(v) = m.get_one::<String>(p.key) {
            cfg.set(p.key, v)?;
        }
    }
    Ok(cfg)
}

fn fail(err: &Error, scenario: Option<&str>, dir: Option<&Path>) -> ExitCode {
    let record = runner::error_record(err, scenario);
    eprintln!("{record}");
    if let Some(dir) = dir {
        if let Err(e) = runner::write_error_record(dir, &record) {
            log::warn!("could not write the error record: {e}");
        }
    }
    ExitCode::from(runner::exit_code(err) as u8)
}

fn print_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn run_scenario(s: Scenario, m: &ArgMatches) -> ExitCode {
    let cfg = match build_config(s, m) {
        Ok(c) => c,
        Err(e) => return fail(&e, Some(s.as_str()), None),
    };
    if m.get_flag("check") {
        let diags = runner::validate(&cfg);
        print_diagnostics(&diags);
        if diags.iter().any(|d| d.severity == Severity::Error) {
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        println!("configuration OK");
        return ExitCode::SUCCESS;
    }
    match runner::run(&cfg) {
        Ok(outcome) => {
            if s == Scenario::Materials {
                print_materials(&outcome.manifest);
            }
            for w in &outcome.manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} files to {} ({} steps, {:.2} s); manifest {}",
                outcome.manifest.outputs.len(),
                cfg.output_dir.display(),
                outcome.manifest.steps,
                outcome.manifest.wall_clock_s,
                outcome.manifest_path.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(s.as_str()), Some(&cfg.output_dir)),
    }
}

fn print_materials(manifest: &runner::RunManifest) {
    let records: Vec<MaterialRecord> =
        serde_json::from_value(manifest.points[0]["records"].clone()).unwrap_or_default();
    println!(
        "{:<12} {:>12} {:>14} {:>10} {:>14}",
        "material", "m_atom [u]", "ρ [g cm⁻³]", "σ [pm]", "ω_SN² [s⁻²]"
    );
    for r in records {
        println!(
            "{:<12} {:>12.4} {:>14.3} {:>10.3} {:>14.4e}",
            r.name,
            r.m_atom_u,
            r.density_g_cm3,
            r.sigma_pm,
            r.omega_sn_squared()
        );
    }
}

fn run_replay(m: &ArgMatches) -> ExitCode {
    let manifest = m.get_one::<PathBuf>("manifest").expect("required argument");
    let out = m.get_one::<PathBuf>("out").cloned().unwrap_or_else(|| {
        manifest
            .parent()
            .map(|p| p.join("replay"))
            .unwrap_or_else(|| PathBuf::from("replay"))
    });
    match runner::replay(manifest, &out) {
        Ok(report) => {
            println!(
                "replay reproduced {} files bit-identically in {}",
                report.matched.len(),
                report.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some("replay"), Some(&out)),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let level = match matches.get_count("verbose") {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    if name == "replay" {
        return run_replay(sub);
    }
    let scenario: Scenario = name.parse().expect("subcommands mirror the scenarios");
    run_scenario(scenario, sub)
}
