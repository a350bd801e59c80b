use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::OscillatorUnits;

/// Uniform periodic grid `x_i = x_min + i·dx`, `dx = (x_max − x_min)/n`,
/// i = 0..n (x_max itself is the periodic image of x_min). Lengths in m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid1d {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid1d {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::invalid(format!("grid needs at least 8 points, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid(format!("invalid grid interval [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumbers in FFT order, rad m⁻¹.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * self.dx());
        (0..n)
            .map(|j| if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 } * dk)
            .collect()
    }
}

/// Wave-function sampled on a [`Grid1d`]; amplitude in m^{−1/2}, time in s.
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacketState {
    pub grid: Grid1d,
    pub amplitude: Vec<Complex64>,
    pub time: f64,
}

impl WavePacketState {
    pub fn new(grid: Grid1d, amplitude: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitude.len() != grid.n {
            return Err(Error::invalid(format!(
                "amplitude has {} values for a grid of {} points",
                amplitude.len(),
                grid.n
            )));
        }
        Ok(Self { grid, amplitude, time })
    }

    /// Gaussian with |ψ|² of standard deviation `width` centred at `centre`,
    /// carrying mean wavenumber `k0`; normalised on the grid.
    pub fn gaussian(grid: Grid1d, centre: f64, width: f64, k0: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid(format!("Gaussian width must be positive, got {width}")));
        }
        let amplitude = grid
            .points()
            .into_iter()
            .map(|x| {
                let y = x - centre;
                Complex64::from_polar((-y * y / (4.0 * width * width)).exp(), k0 * x)
            })
            .collect();
        let mut s = Self::new(grid, amplitude, 0.0)?;
        let norm = s.norm();
        if !(norm > 0.0) {
            return Err(Error::invalid("Gaussian does not overlap the grid"));
        }
        let scale = 1.0 / norm.sqrt();
        s.amplitude.iter_mut().for_each(|a| *a *= scale);
        Ok(s)
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ∫|ψ|² dx
    pub fn norm(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let dx = self.grid.dx();
        self.amplitude
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * f(self.grid.x(i)))
            .sum::<f64>()
            * dx
            / self.norm()
    }

    pub fn mean_x(&self) -> f64 {
        self.moment(|x| x)
    }

    pub fn mean_x2(&self) -> f64 {
        self.moment(|x| x * x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean_x();
        self.moment(|x| (x - m) * (x - m))
    }

    /// Largest |ψ| within the outer `fraction` of the grid on either side,
    /// relative to the largest |ψ| overall.
    pub fn edge_ratio(&self, fraction: f64) -> f64 {
        let n = self.grid.n;
        let edge = ((fraction * n as f64).ceil() as usize).clamp(1, n / 2);
        let peak = self.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let outer = self.amplitude[..edge]
            .iter()
            .chain(&self.amplitude[n - edge..])
            .map(|a| a.norm())
            .fold(0.0, f64::max);
        if peak > 0.0 {
            outer / peak
        } else {
            f64::INFINITY
        }
    }

    /// Fails when |ψ| in the outer `fraction` on either side exceeds
    /// `threshold` times its maximum.
    pub fn check_containment(&self, fraction: f64, threshold: f64) -> Result<()> {
        let ratio = self.edge_ratio(fraction);
        if ratio > threshold {
            return Err(Error::Containment {
                time: self.time,
                ratio,
            });
        }
        Ok(())
    }
}

/// Initial centre-of-mass state of the trap: the ground Gaussian displaced
/// by `displacement` (m) with its width multiplied by `squeeze`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InitialState {
    pub displacement: f64,
    pub squeeze: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            displacement: 0.0,
            squeeze: 1.0,
        }
    }
}

impl InitialState {
    pub fn validate(&self) -> Result<()> {
        if !self.displacement.is_finite() {
            return Err(Error::invalid("displacement must be finite"));
        }
        if !(self.squeeze.is_finite() && self.squeeze > 0.0) {
            return Err(Error::invalid(format!("squeeze factor must be positive, got {}", self.squeeze)));
        }
        Ok(())
    }

    /// Standard deviation of |ψ|², m.
    pub fn width(&self, units: &OscillatorUnits) -> f64 {
        self.squeeze * units.length_scale / std::f64::consts::SQRT_2
    }
}

/// Grid wide enough to contain the initial state's oscillation: the packet
/// breathes between `squeeze` and `1/squeeze` times the ground width and its
/// centre swings through ±displacement.
pub fn default_grid(units: &OscillatorUnits, init: &InitialState, n: usize) -> Result<Grid1d> {
    init.validate()?;
    let ground = units.length_scale / std::f64::consts::SQRT_2;
    let widest = ground * init.squeeze.max(1.0 / init.squeeze);
    let half = (init.displacement.abs() + 10.0 * widest) / 0.9;
    Grid1d::centered(half, n)
}

pub fn initial_state(units: &OscillatorUnits, grid: Grid1d, init: &InitialState) -> Result<WavePacketState> {
    init.validate()?;
    WavePacketState::gaussian(grid, init.displacement, init.width(units), 0.0)
}
