use num_complex::Complex64;
use serde::Serialize;

use super::evolve::{solve_tridiagonal, RadialOperator};
use super::state::{RadialGrid, RadialState};
use crate::error::{Error, Result};
use crate::physics::{G, HBAR};

/// Length ħ²/(Gm³) at which kinetic and gravitational energies balance, m.
pub fn soliton_length(mass: f64) -> f64 {
    HBAR * HBAR / (G * mass.powi(3))
}

/// Energy G²m⁵/ħ², J.
pub fn soliton_energy(mass: f64) -> f64 {
    G * G * mass.powi(5) / (HBAR * HBAR)
}

#[derive(Clone, Debug, Serialize)]
pub struct RelaxConfig {
    /// Stop when successive energies differ by less than this, relative.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Imaginary-time step in units of mℓ_s²/ħ.
    pub dtau: f64,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 20_000,
            dtau: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    /// T + ½∫Φ|ψ|² d³r, J.
    pub energy: f64,
    /// Kinetic expectation, J.
    pub kinetic: f64,
    /// ½∫Φ|ψ|² d³r, J.
    pub gravitational: f64,
    /// Energy in units of G²m⁵/ħ².
    pub dimensionless_energy: f64,
    pub iterations: usize,
    pub state: RadialState,
}

impl GroundState {
    /// |2T + U_g| / |E|.
    pub fn virial_residual(&self) -> f64 {
        (2.0 * self.kinetic + self.gravitational).abs() / self.energy.abs()
    }
}

/// Relaxes to the lowest stationary state by backward-Euler imaginary-time
/// steps, renormalising after each one.
pub fn ground_state_relax(mass: f64, grid: RadialGrid, cfg: &RelaxConfig) -> Result<GroundState> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::invalid(format!("mass must be positive, got {mass} kg")));
    }
    if !(cfg.tolerance > 0.0 && cfg.dtau > 0.0 && cfg.max_iterations > 0) {
        return Err(Error::invalid("relaxation needs positive tolerance, step and iteration limit"));
    }
    let ls = soliton_length(mass);
    if grid.r_max < 10.0 * ls {
        return Err(Error::invalid(format!(
            "grid extent {:.3e} m is below ten soliton lengths ({:.3e} m)",
            grid.r_max,
            10.0 * ls
        )));
    }
    if grid.dr() > 0.2 * ls {
        return Err(Error::invalid(format!(
            "grid spacing {:.3e} m exceeds a fifth of the soliton length ({:.3e} m)",
            grid.dr(),
            0.2 * ls
        )));
    }
    let ell = grid.r_max;
    let op = RadialOperator::new(&grid, ell / ls, 0.1, 0.0);
    let tau = cfg.dtau * (ls / ell).powi(2);
    let k = 1.0 / (op.h * op.h);
    let renormalize = |u: &mut Vec<Complex64>| {
        let norm = 4.0 * std::f64::consts::PI * u.iter().map(|z| z.norm_sqr()).sum::<f64>() * op.h;
        let s = 1.0 / norm.sqrt();
        u.iter_mut().for_each(|z| *z *= s);
    };

    let start = RadialState::gaussian(grid, mass, 2.0 * ls)?;
    let mut u: Vec<Complex64> = start.u.iter().map(|z| z * ell.sqrt()).collect();
    let energy_of = |u: &[Complex64]| {
        let phi = op.potential(u);
        let t = op.kinetic(u);
        let ug = op.gravity_energy(u, &phi);
        (t, ug, phi)
    };
    let (_, _, mut phi) = energy_of(&u);
    let mut previous = f64::INFINITY;
    let mut work = Vec::new();
    for iteration in 1..=cfg.max_iterations {
        let diag: Vec<Complex64> = phi
            .iter()
            .map(|p| Complex64::new(1.0 + tau * (k + p), 0.0))
            .collect();
        solve_tridiagonal(Complex64::new(-0.5 * tau * k, 0.0), &diag, &mut u, &mut work);
        renormalize(&mut u);
        let (t, ug, next_phi) = energy_of(&u);
        phi = next_phi;
        let energy = t + ug;
        let change = (energy - previous).abs();
        if change < cfg.tolerance * energy.abs() {
            let unit = HBAR * HBAR / (mass * ell * ell);
            let state = RadialState::new(grid, u.iter().map(|z| Complex64::new(z.re.abs(), 0.0) / ell.sqrt()).collect(), 0.0, mass)?;
            return Ok(GroundState {
                energy: energy * unit,
                kinetic: t * unit,
                gravitational: ug * unit,
                dimensionless_energy: energy * unit / soliton_energy(mass),
                iterations: iteration,
                state,
            });
        }
        previous = energy;
    }
    Err(Error::NoConvergence {
        what: "imaginary-time relaxation".into(),
        iterations: cfg.max_iterations,
        last_change: previous,
    })
}
