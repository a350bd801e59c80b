use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::output::{write_table, CsvTable, OutputRecord};
use super::plan::{DispersionPoint, KernelPlan, Plan, SpectrumPlan, TrapPoint};
use crate::dispersion::{evolve_free, RadialGrid, RadialState};
use crate::error::{Error, Result};
use crate::physics::{make_oscillator_units, MaterialCatalog};
use crate::spectral::{transition_spectrum, HermiteWorkspace, SpectralParams};
use crate::trap::{default_grid, evolve_trap, extract_frequency, initial_state, variance_frequency, WavePacketState};

/// What one scan point (or a single-point scenario) produced.
pub(crate) struct PointResult {
    pub outputs: Vec<OutputRecord>,
    pub summary: Value,
    pub steps: usize,
    pub warnings: Vec<String>,
}

pub(crate) fn execute(plan: &Plan, dir: &Path, jobs: usize) -> Result<Vec<PointResult>> {
    match plan {
        Plan::Materials(catalog) => Ok(vec![materials(catalog, dir)?]),
        Plan::Kernel(k) => Ok(vec![kernel(k, dir)?]),
        Plan::Spectrum(s) => {
            let ws = HermiteWorkspace::with_settings(s.n_max, s.settings.clone())?;
            scan(s.points.len(), jobs, |i, prefix| spectrum(s, i, &ws, dir, prefix))
        }
        Plan::Trap(points) => scan(points.len(), jobs, |i, prefix| trap(&points[i], dir, prefix)),
        Plan::Dispersion(points) => scan(points.len(), jobs, |i, prefix| dispersion(&points[i], dir, prefix)),
    }
}

/// Runs the points of a scan on at most `jobs` threads (0: all cores). Files
/// of point i carry the prefix `p{i}_` when there is more than one point.
fn scan<F>(count: usize, jobs: usize, f: F) -> Result<Vec<PointResult>>
where
    F: Fn(usize, &str) -> Result<PointResult> + Sync,
{
    let prefix = |i: usize| if count > 1 { format!("p{i}_") } else { String::new() };
    if count == 1 {
        return Ok(vec![f(0, "")?]);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(|i| f(i, &prefix(i))).collect())
}

fn materials(catalog: &MaterialCatalog, dir: &Path) -> Result<PointResult> {
    let mut t = CsvTable::new(&[
        "material",
        "m_atom_u",
        "density_g_cm3",
        "sigma_pm",
        "omega_sn_sq_s2",
        "omega_sn_rad_s",
    ]);
    for r in catalog.records() {
        let w2 = r.omega_sn_squared();
        t.push(vec![
            r.name.as_str().into(),
            r.m_atom_u.into(),
            r.density_g_cm3.into(),
            r.sigma_pm.into(),
            w2.into(),
            w2.sqrt().into(),
        ]);
    }
    Ok(PointResult {
        outputs: vec![write_table(dir, "materials.csv", &t, None)?],
        summary: json!({ "records": catalog.records() }),
        steps: 0,
        warnings: Vec::new(),
    })
}

fn kernel(k: &KernelPlan, dir: &Path) -> Result<PointResult> {
    let mut t = CsvTable::new(&["d_m", "i_kg2_per_m", "i_minus_i0_kg2_per_m"]);
    let mut warnings = Vec::new();
    for j in 0..k.points {
        let d = k.d_max * j as f64 / (k.points - 1) as f64;
        t.push(vec![d.into(), k.kernel.eval(d).into(), k.kernel.eval_relative(d).into()]);
    }
    if let Some(w) = k.kernel.extent_warning(k.d_max) {
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(PointResult {
        outputs: vec![write_table(dir, "kernel.csv", &t, None)?],
        summary: json!({ "kernel": k.kernel.describe(), "d_max_m": k.d_max, "points": k.points }),
        steps: 0,
        warnings,
    })
}

fn spectrum(s: &SpectrumPlan, i: usize, ws: &HermiteWorkspace, dir: &Path, prefix: &str) -> Result<PointResult> {
    let point = &s.points[i];
    let p = SpectralParams::new(point.mass, s.omega0, s.material.clone())?;
    let lines = transition_spectrum(ws, &p, s.n_max, s.delta_n, s.temperature)?;
    let mut t = CsvTable::new(&["n", "omega_unperturbed_rad_s", "shift_rad_s", "weight"]);
    for l in &lines {
        t.push(vec![l.n_lower.into(), l.omega_unperturbed.into(), l.omega_shift.into(), l.weight.into()]);
    }
    let max_shift = lines.iter().map(|l| l.omega_shift.abs()).fold(0.0, f64::max);
    Ok(PointResult {
        outputs: vec![write_table(dir, &format!("{prefix}spectrum.csv"), &t, None)?],
        summary: json!({
            "mass_u": point.mass_u,
            "mass_kg": point.mass,
            "omega0_rad_s": s.omega0,
            "alpha": p.alpha,
            "prefactor_j": p.prefactor,
            "max_abs_shift_rad_s": max_shift,
            "max_abs_shift_hz": max_shift / (2.0 * std::f64::consts::PI),
        }),
        steps: 0,
        warnings: Vec::new(),
    })
}

fn wave_table(state: &WavePacketState) -> CsvTable {
    let mut t = CsvTable::new(&["x_m", "density_per_m", "re_psi_per_sqrt_m", "im_psi_per_sqrt_m"]);
    for (i, a) in state.amplitude.iter().enumerate() {
        t.push(vec![state.grid.x(i).into(), a.norm_sqr().into(), a.re.into(), a.im.into()]);
    }
    t
}

fn trap(p: &TrapPoint, dir: &Path, prefix: &str) -> Result<PointResult> {
    let cfg = &p.config;
    let units = make_oscillator_units(cfg.mass, cfg.omega0)?;
    let grid = default_grid(&units, &p.init, p.grid_n)?;
    let psi0 = initial_state(&units, grid, &p.init)?;
    let run = evolve_trap(&psi0, cfg)?;
    let mut warnings = run.warnings.clone();

    let mut moments = CsvTable::new(&["t_s", "mean_x_m", "mean_x2_m2", "variance_m2", "norm", "energy_j"]);
    for m in &run.moments {
        moments.push(vec![
            m.time.into(),
            m.mean_x.into(),
            m.mean_x2.into(),
            m.variance.into(),
            m.norm.into(),
            m.energy.into(),
        ]);
    }
    let mut outputs = vec![write_table(dir, &format!("{prefix}trap_moments.csv"), &moments, None)?];
    let snapshots: Vec<&WavePacketState> = if run.snapshots.is_empty() {
        vec![&psi0, &run.final_state]
    } else {
        run.snapshots.iter().collect()
    };
    for (k, s) in snapshots.iter().enumerate() {
        let name = format!("{prefix}trap_snapshot_{k:05}.csv");
        outputs.push(write_table(dir, &name, &wave_table(s), Some(s.time))?);
    }

    let times: Vec<f64> = run.moments.iter().map(|m| m.time).collect();
    let mut fit = |what: &str, values: Vec<f64>, expected: f64| -> Value {
        match extract_frequency(&times, &values, expected) {
            Ok(f) => json!({ "omega_rad_s": f.omega, "expected_rad_s": expected, "relative_residual": f.relative_residual }),
            Err(e) => {
                let w = format!("{what} frequency not extracted: {e}");
                log::warn!("{w}");
                warnings.push(w);
                Value::Null
            }
        }
    };
    let mean_fit = if p.init.displacement != 0.0 {
        fit("⟨x⟩", run.moments.iter().map(|m| m.mean_x).collect(), cfg.omega0)
    } else {
        Value::Null
    };
    let omega_sn_sq = p.omega_sn_squared * cfg.gravity_scale;
    let var_fit = if p.init.squeeze != 1.0 {
        fit(
            "variance",
            run.moments.iter().map(|m| m.variance).collect(),
            variance_frequency(cfg.omega0, omega_sn_sq.sqrt()),
        )
    } else {
        Value::Null
    };
    Ok(PointResult {
        outputs,
        summary: json!({
            "mass_u": p.mass_u,
            "mass_kg": cfg.mass,
            "omega0_rad_s": cfg.omega0,
            "dt_s": cfg.dt,
            "t_end_s": cfg.t_end,
            "grid": { "x_min_m": grid.x_min, "x_max_m": grid.x_max, "n": grid.n },
            "kernel": cfg.kernel.describe(),
            "initial_state": p.init,
            "norm_drift": run.norm_drift(),
            "energy_drift": run.energy_drift(),
            "mean_x_fit": mean_fit,
            "variance_fit": var_fit,
        }),
        steps: run.steps,
        warnings,
    })
}

fn dispersion(p: &DispersionPoint, dir: &Path, prefix: &str) -> Result<PointResult> {
    let grid = RadialGrid::new(p.r_max, p.grid_n)?;
    let psi0 = RadialState::gaussian(grid, p.mass, p.r0)?;
    let run = evolve_free(&psi0, &p.config)?;
    let mut metrics = CsvTable::new(&[
        "t_s",
        "r_half_m",
        "r_rms_m",
        "peak_density_per_m",
        "peak_radius_m",
        "norm",
        "energy_j",
        "absorbed",
    ]);
    for s in &run.samples {
        metrics.push(vec![
            s.time.into(),
            s.metrics.r_half.into(),
            s.metrics.r_rms.into(),
            s.metrics.peak_density.into(),
            s.metrics.peak_radius.into(),
            s.norm.into(),
            s.energy.into(),
            s.absorbed.into(),
        ]);
    }
    let mut outputs = vec![write_table(dir, &format!("{prefix}dispersion_metrics.csv"), &metrics, None)?];
    for (k, s) in run.snapshots.iter().enumerate() {
        let mut t = CsvTable::new(&["r_m", "rho_radial_per_m"]);
        for (r, rho) in s.grid.points().into_iter().zip(s.radial_density()) {
            t.push(vec![r.into(), rho.into()]);
        }
        let name = format!("{prefix}dispersion_snapshot_{k:03}.csv");
        outputs.push(write_table(dir, &name, &t, Some(s.time))?);
    }
    Ok(PointResult {
        outputs,
        summary: json!({
            "mass_u": p.mass_u,
            "mass_kg": p.mass,
            "width_m": p.r0,
            "r_max_m": p.r_max,
            "grid_n": p.grid_n,
            "coupling": run.coupling,
            "config": p.config,
        }),
        steps: run.steps,
        warnings: run.warnings,
    })
}
