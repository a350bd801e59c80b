use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::potential::{packet_extent, ConvolutionMethod, KernelOffset, KernelTable};
use super::state::{Grid1d, WavePacketState};
use crate::error::{Error, Result};
use crate::kernels::SelfGravityKernel;
use crate::physics::{make_oscillator_units, OscillatorUnits, G, HBAR};

/// Which density the self-gravity potential of a step is computed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearUpdate {
    /// Density at the start of the step (first order in the nonlinearity).
    PreStep,
    /// Predicted density after the first kinetic half-step. The potential
    /// substep leaves |ψ|² unchanged, so a corrector pass would reproduce the
    /// same potential exactly; the step is self-consistent and symmetric.
    #[default]
    PredictorCorrector,
}

impl FromStr for NonlinearUpdate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pre-step" | "prestep" => Ok(Self::PreStep),
            "predictor-corrector" | "pc" => Ok(Self::PredictorCorrector),
            other => Err(Error::invalid(format!(
                "unknown nonlinear update `{other}` (expected pre-step or predictor-corrector)"
            ))),
        }
    }
}

/// Settings of a trap evolution. Times in s, mass in kg, frequency in s⁻¹.
#[derive(Clone, Debug)]
pub struct TrapEvolutionConfig {
    pub mass: f64,
    pub omega0: f64,
    pub kernel: SelfGravityKernel,
    pub dt: f64,
    pub t_end: f64,
    /// Store a snapshot every this many steps (0: none besides the final state).
    pub snapshot_stride: usize,
    /// Record moments every this many steps.
    pub moment_stride: usize,
    /// Multiplies G; 0 switches self-gravity off.
    pub gravity_scale: f64,
    pub nonlinear: NonlinearUpdate,
    pub convolution: ConvolutionMethod,
    /// Fraction of the grid on each side monitored for containment.
    pub containment_fraction: f64,
    pub containment_threshold: f64,
}

impl TrapEvolutionConfig {
    pub fn new(mass: f64, omega0: f64, kernel: SelfGravityKernel, dt: f64, t_end: f64) -> Self {
        Self {
            mass,
            omega0,
            kernel,
            dt,
            t_end,
            snapshot_stride: 0,
            moment_stride: 10,
            gravity_scale: 1.0,
            nonlinear: NonlinearUpdate::default(),
            convolution: ConvolutionMethod::default(),
            containment_fraction: 0.05,
            containment_threshold: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        positive("mass", self.mass)?;
        positive("ω₀", self.omega0)?;
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        if self.dt * self.omega0 > 1e-2 {
            return Err(Error::invalid(format!(
                "dt·ω₀ = {:.3e} exceeds the resolution guard 1e-2",
                self.dt * self.omega0
            )));
        }
        if self.moment_stride == 0 {
            return Err(Error::invalid("moment stride must be at least 1"));
        }
        if !(self.gravity_scale.is_finite() && self.gravity_scale >= 0.0) {
            return Err(Error::invalid("gravity scale must be non-negative"));
        }
        if !(self.containment_fraction > 0.0 && self.containment_fraction < 0.5) {
            return Err(Error::invalid("containment fraction must lie in (0, 0.5)"));
        }
        let km = self.kernel.total_mass();
        if ((km - self.mass) / self.mass).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "kernel mass {km:e} kg differs from the trapped mass {:e} kg",
                self.mass
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Observables at one instant, SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentSample {
    pub time: f64,
    pub mean_x: f64,
    pub mean_x2: f64,
    pub variance: f64,
    pub norm: f64,
    /// E[ψ] = ⟨T⟩ + ⟨V_ext⟩ + ½⟨V_g⟩, J, with V_g taken relative to its
    /// constant −G·I(0) offset.
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct TrapRun {
    pub units: OscillatorUnits,
    pub steps: usize,
    pub moments: Vec<MomentSample>,
    pub snapshots: Vec<WavePacketState>,
    pub final_state: WavePacketState,
    pub warnings: Vec<String>,
}

impl TrapRun {
    pub fn norm_drift(&self) -> f64 {
        let first = self.moments.first().map_or(1.0, |m| m.norm);
        self.moments
            .iter()
            .map(|m| (m.norm - first).abs())
            .fold(0.0, f64::max)
    }

    pub fn energy_drift(&self) -> f64 {
        let first = self.moments.first().map_or(0.0, |m| m.energy);
        self.moments
            .iter()
            .map(|m| ((m.energy - first) / first).abs())
            .fold(0.0, f64::max)
    }
}

/// Split-step propagator in oscillator units (x in ℓ, t in 1/ω₀, E in ħω₀).
struct Propagator {
    n: usize,
    dx: f64,
    x: Vec<f64>,
    half_kinetic: Vec<Complex64>,
    k2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel: Option<KernelTable>,
    coupling: f64,
    dt: f64,
    method: ConvolutionMethod,
}

impl Propagator {
    fn new(grid: &Grid1d, units: &OscillatorUnits, cfg: &TrapEvolutionConfig) -> Self {
        let l = units.length_scale;
        let n = grid.n;
        let dx = grid.dx() / l;
        let x: Vec<f64> = grid.points().into_iter().map(|x| x / l).collect();
        let k: Vec<f64> = grid.wavenumbers().into_iter().map(|k| k * l).collect();
        let dt = cfg.dt * cfg.omega0;
        let half_kinetic = k
            .iter()
            .map(|k| Complex64::from_polar(1.0, -0.25 * k * k * dt))
            .collect();
        let k2 = k.iter().map(|k| k * k).collect();
        let mut planner = FftPlanner::new();
        let kernel = (cfg.gravity_scale > 0.0).then(|| KernelTable::new(&cfg.kernel, grid.dx(), n, KernelOffset::Relative));
        Self {
            n,
            dx,
            x,
            half_kinetic,
            k2,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            kernel,
            coupling: cfg.gravity_scale * G / (HBAR * cfg.omega0),
            dt,
            method: cfg.convolution,
        }
    }

    fn kinetic_half(&self, psi: &mut [Complex64]) {
        self.forward.process(psi);
        let scale = 1.0 / self.n as f64;
        for (p, f) in psi.iter_mut().zip(&self.half_kinetic) {
            *p *= f * scale;
        }
        self.inverse.process(psi);
    }

    /// Dimensionless V_g for the density of `psi`.
    fn gravity(&self, psi: &[Complex64]) -> Vec<f64> {
        match &self.kernel {
            None => vec![0.0; self.n],
            Some(table) => {
                let w: Vec<f64> = psi.iter().map(|p| p.norm_sqr() * self.dx).collect();
                table
                    .convolve(&w, self.method)
                    .into_iter()
                    .map(|v| -self.coupling * v)
                    .collect()
            }
        }
    }

    fn potential_step(&self, psi: &mut [Complex64], vg: &[f64]) {
        for ((p, x), g) in psi.iter_mut().zip(&self.x).zip(vg) {
            *p *= Complex64::from_polar(1.0, -(0.5 * x * x + g) * self.dt);
        }
    }

    fn step(&self, psi: &mut [Complex64], update: NonlinearUpdate) {
        let pre = (update == NonlinearUpdate::PreStep).then(|| self.gravity(psi));
        self.kinetic_half(psi);
        let vg = pre.unwrap_or_else(|| self.gravity(psi));
        self.potential_step(psi, &vg);
        self.kinetic_half(psi);
    }

    /// (norm, ⟨x⟩, ⟨x²⟩, energy) in oscillator units.
    fn observables(&self, psi: &[Complex64]) -> (f64, f64, f64, f64) {
        let rho: Vec<f64> = psi.iter().map(|p| p.norm_sqr()).collect();
        let norm = rho.iter().sum::<f64>() * self.dx;
        let mx = rho.iter().zip(&self.x).map(|(r, x)| r * x).sum::<f64>() * self.dx / norm;
        let mx2 = rho.iter().zip(&self.x).map(|(r, x)| r * x * x).sum::<f64>() * self.dx / norm;
        let mut spec = psi.to_vec();
        self.forward.process(&mut spec);
        // Parseval: Σ|ψ|²dx = (dx/N) Σ|ψ̂|².
        let kinetic = 0.5 * spec.iter().zip(&self.k2).map(|(s, k2)| s.norm_sqr() * k2).sum::<f64>() * self.dx
            / self.n as f64;
        let vext = 0.5 * mx2 * norm;
        let vg = self.gravity(psi);
        let grav = 0.5 * rho.iter().zip(&vg).map(|(r, v)| r * v).sum::<f64>() * self.dx;
        (norm, mx, mx2, kinetic + vext + grav)
    }
}

/// Evolves `psi0` under the trap Hamiltonian with self-gravity.
pub fn evolve_trap(psi0: &WavePacketState, cfg: &TrapEvolutionConfig) -> Result<TrapRun> {
    cfg.validate()?;
    let units = make_oscillator_units(cfg.mass, cfg.omega0)?;
    psi0.check_containment(cfg.containment_fraction, cfg.containment_threshold)?;
    let norm0 = psi0.norm();
    if !((norm0 - 1.0).abs() <= 1e-8) {
        return Err(Error::NotNormalized {
            integrated: norm0,
            expected: 1.0,
        });
    }
    let mut warnings = Vec::new();
    if cfg.gravity_scale > 0.0 {
        if let Some(w) = cfg.kernel.extent_warning(packet_extent(psi0)) {
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    let grid = psi0.grid;
    let prop = Propagator::new(&grid, &units, cfg);
    let sqrt_l = units.length_scale.sqrt();
    let mut psi: Vec<Complex64> = psi0.amplitude.iter().map(|a| a * sqrt_l).collect();
    let steps = cfg.steps();
    let to_state = |psi: &[Complex64], time: f64| WavePacketState {
        grid,
        amplitude: psi.iter().map(|a| a / sqrt_l).collect(),
        time,
    };
    let sample = |psi: &[Complex64], time: f64| {
        let (norm, mx, mx2, e) = prop.observables(psi);
        let l = units.length_scale;
        MomentSample {
            time,
            mean_x: mx * l,
            mean_x2: mx2 * l * l,
            variance: (mx2 - mx * mx) * l * l,
            norm,
            energy: e * units.energy_scale,
        }
    };
    let mut moments = vec![sample(&psi, psi0.time)];
    let mut snapshots = Vec::new();
    if cfg.snapshot_stride > 0 {
        snapshots.push(psi0.clone());
    }
    for step in 1..=steps {
        prop.step(&mut psi, cfg.nonlinear);
        let time = psi0.time + step as f64 * cfg.dt;
        let record_moment = step % cfg.moment_stride == 0 || step == steps;
        let record_snapshot = cfg.snapshot_stride > 0 && (step % cfg.snapshot_stride == 0 || step == steps);
        if record_moment || record_snapshot {
            let state = to_state(&psi, time);
            state.check_containment(cfg.containment_fraction, cfg.containment_threshold)?;
            if record_snapshot {
                snapshots.push(state);
            }
        }
        if record_moment {
            moments.push(sample(&psi, time));
        }
    }
    let final_state = to_state(&psi, psi0.time + steps as f64 * cfg.dt);
    Ok(TrapRun {
        units,
        steps,
        moments,
        snapshots,
        final_state,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CrystalKernelParams;
    use crate::physics::{material_lookup, AMU};
    use crate::trap::state::{default_grid, initial_state, InitialState};

    fn setup(init: InitialState, n: usize) -> (WavePacketState, SelfGravityKernel, f64) {
        let mass = 1e18 * AMU;
        let units = make_oscillator_units(mass, 1.0).unwrap();
        let grid = default_grid(&units, &init, n).unwrap();
        let psi = initial_state(&units, grid, &init).unwrap();
        let os = material_lookup("osmium").unwrap();
        let k = SelfGravityKernel::Narrow(CrystalKernelParams::from_material(mass, &os).unwrap());
        (psi, k, mass)
    }

    #[test]
    fn ground_state_is_stationary_without_gravity() {
        let (psi, k, mass) = setup(InitialState::default(), 256);
        let mut cfg = TrapEvolutionConfig::new(mass, 1.0, k, 1e-3, 2.0);
        cfg.gravity_scale = 0.0;
        let run = evolve_trap(&psi, &cfg).unwrap();
        // The split-step map keeps the continuum ground state stationary up
        // to its O(dt²) splitting error.
        let v0 = run.moments[0].variance;
        for m in &run.moments {
            assert!((m.variance - v0).abs() < 1e-6 * v0);
            assert!(m.mean_x.abs() < 1e-12 * v0.sqrt());
        }
    }

    #[test]
    fn validation_rejects_coarse_steps_and_mismatched_mass() {
        let (_, k, mass) = setup(InitialState::default(), 64);
        assert!(TrapEvolutionConfig::new(mass, 1.0, k.clone(), 0.02, 1.0).validate().is_err());
        assert!(TrapEvolutionConfig::new(2.0 * mass, 1.0, k.clone(), 1e-3, 1.0).validate().is_err());
        assert!(TrapEvolutionConfig::new(mass, 1.0, k, 1e-3, 1.0).validate().is_ok());
    }

    #[test]
    fn update_variants_agree_to_second_order() {
        let init = InitialState {
            displacement: 0.0,
            squeeze: 1.4,
        };
        let (psi, k, mass) = setup(init, 256);
        let mut a = TrapEvolutionConfig::new(mass, 1.0, k, 1e-3, 1.0);
        let mut b = a.clone();
        a.nonlinear = NonlinearUpdate::PreStep;
        b.nonlinear = NonlinearUpdate::PredictorCorrector;
        let ra = evolve_trap(&psi, &a).unwrap();
        let rb = evolve_trap(&psi, &b).unwrap();
        let (va, vb) = (ra.moments.last().unwrap().variance, rb.moments.last().unwrap().variance);
        assert!(((va - vb) / vb).abs() < 1e-4);
        assert!(rb.energy_drift() <= ra.energy_drift());
    }
}
