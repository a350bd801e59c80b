use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::HBAR;

/// Uniform radial grid `r_j = (j + 1)·dr`, j = 0..n, `dr = r_max/n`. The
/// regularity condition u(0) = 0 and the wall u(r_max + dr) = 0 are implicit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::invalid(format!("r_max must be positive, got {r_max}")));
        }
        if n < 16 {
            return Err(Error::invalid(format!("radial grid needs at least 16 points, got {n}")));
        }
        Ok(Self { r_max, n })
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn r(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dr()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.r(j)).collect()
    }
}

/// Reduced radial amplitude u(r) = rψ(r), m^{−1/2}, of a particle of mass
/// `mass` (kg) at time `time` (s).
#[derive(Clone, Debug, PartialEq)]
pub struct RadialState {
    pub grid: RadialGrid,
    pub u: Vec<Complex64>,
    pub time: f64,
    pub mass: f64,
}

impl RadialState {
    pub fn new(grid: RadialGrid, u: Vec<Complex64>, time: f64, mass: f64) -> Result<Self> {
        if u.len() != grid.n {
            return Err(Error::invalid(format!(
                "amplitude has {} values for a grid of {} points",
                u.len(),
                grid.n
            )));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { grid, u, time, mass })
    }

    /// ψ ∝ exp(−r²/4r₀²), so that ⟨r²⟩ = 3r₀²; normalised on the grid.
    pub fn gaussian(grid: RadialGrid, mass: f64, r0: f64) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::invalid(format!("packet width must be positive, got {r0}")));
        }
        let u = grid
            .points()
            .into_iter()
            .map(|r| Complex64::new(r * (-r * r / (4.0 * r0 * r0)).exp(), 0.0))
            .collect();
        let mut s = Self::new(grid, u, 0.0, mass)?;
        s.normalize()?;
        Ok(s)
    }

    /// 4π ∫|u|² dr
    pub fn norm(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.u.iter().map(|u| u.norm_sqr()).sum::<f64>() * self.grid.dr()
    }

    pub(crate) fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("state has zero norm on the grid"));
        }
        let s = 1.0 / norm.sqrt();
        self.u.iter_mut().for_each(|u| *u *= s);
        Ok(())
    }

    /// Radial probability density 4πr²|ψ|² = 4π|u|², m⁻¹.
    pub fn radial_density(&self) -> Vec<f64> {
        self.u
            .iter()
            .map(|u| 4.0 * std::f64::consts::PI * u.norm_sqr())
            .collect()
    }
}

/// r_rms(t) of a free Gaussian with ⟨r²⟩(0) = 3r₀²:
/// √3 r₀ √(1 + (ħt/(2m r₀²))²).
pub fn free_r_rms(r0: f64, mass: f64, t: f64) -> f64 {
    let s = HBAR * t / (2.0 * mass * r0 * r0);
    3f64.sqrt() * r0 * (1.0 + s * s).sqrt()
}
