use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::state::WavePacketState;
use crate::error::{Error, Result};
use crate::kernels::SelfGravityKernel;
use crate::physics::G;

/// How the discrete convolution Σ_j w_j K(|i − j|) is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolutionMethod {
    /// Zero-padded FFT, O(N log N).
    #[default]
    Fft,
    /// Direct double sum, O(N²).
    Direct,
}

impl FromStr for ConvolutionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fft" => Ok(Self::Fft),
            "direct" => Ok(Self::Direct),
            other => Err(Error::invalid(format!("unknown convolution method `{other}` (expected fft or direct)"))),
        }
    }
}

/// Which kernel values the table holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelOffset {
    /// I(d) itself.
    Full,
    /// I(d) − I(0): the same potential up to the constant −G·I(0), which only
    /// rotates the global phase but can exceed the d-dependent part by many
    /// orders of magnitude.
    Relative,
}

/// Kernel sampled at the grid lags 0, dx, …, (n − 1)dx, with the spectrum of
/// its symmetric extension for circular convolution on 2n points.
#[derive(Clone)]
pub struct KernelTable {
    values: Vec<f64>,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable").field("lags", &self.values.len()).finish()
    }
}

impl KernelTable {
    /// `dx` is the physical grid spacing, m. For singular kernels the lag-0
    /// entry (the cell's interaction with itself) is left out.
    pub fn new(kernel: &SelfGravityKernel, dx: f64, n: usize, offset: KernelOffset) -> Self {
        let values: Vec<f64> = (0..n)
            .map(|m| {
                if m == 0 && kernel.is_singular() {
                    return 0.0;
                }
                let d = m as f64 * dx;
                match offset {
                    KernelOffset::Full => kernel.eval(d),
                    KernelOffset::Relative => kernel.eval_relative(d),
                }
            })
            .collect();
        let size = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        for (m, &v) in values.iter().enumerate() {
            spectrum[m] = Complex64::new(v, 0.0);
            if m > 0 {
                spectrum[size - m] = Complex64::new(v, 0.0);
            }
        }
        forward.process(&mut spectrum);
        Self {
            values,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Σ_j w_j K(|i − j| dx) for i = 0..n.
    pub fn convolve(&self, weights: &[f64], method: ConvolutionMethod) -> Vec<f64> {
        let n = self.values.len();
        assert_eq!(weights.len(), n, "weights do not match the kernel table");
        match method {
            ConvolutionMethod::Direct => (0..n)
                .map(|i| {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(j, w)| w * self.values[i.abs_diff(j)])
                        .sum()
                })
                .collect(),
            ConvolutionMethod::Fft => {
                let size = 2 * n;
                let mut buf = vec![Complex64::new(0.0, 0.0); size];
                for (b, &w) in buf.iter_mut().zip(weights) {
                    b.re = w;
                }
                self.forward.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&self.spectrum) {
                    *b *= k;
                }
                self.inverse.process(&mut buf);
                let scale = 1.0 / size as f64;
                buf[..n].iter().map(|c| c.re * scale).collect()
            }
        }
    }
}

/// Self-gravity potential on the grid, J, with the kernel's applicability
/// warning for the state's extent.
#[derive(Clone, Debug)]
pub struct GravityPotential {
    /// V_g(x_i).
    pub values: Vec<f64>,
    /// V_g(x_i) − constant, computed from I(d) − I(0) so that its
    /// x-dependence keeps full precision.
    pub shape: Vec<f64>,
    /// −G·I(0)·∫|ψ|²dx (zero for singular kernels).
    pub constant: f64,
    pub warning: Option<String>,
}

/// Packet extent used for kernel applicability checks: the span of ±3
/// standard deviations around the mean, plus the distance of the mean from
/// the trap centre on both sides.
pub(crate) fn packet_extent(state: &WavePacketState) -> f64 {
    6.0 * state.variance().sqrt() + 2.0 * state.mean_x().abs()
}

/// V_g(x_i) = −G Σ_j |ψ(x_j)|² I(|x_i − x_j|) Δx.
pub fn self_gravity_potential_1d(
    state: &WavePacketState,
    kernel: &SelfGravityKernel,
    method: ConvolutionMethod,
) -> Result<GravityPotential> {
    let norm = state.norm();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(Error::NotNormalized {
            integrated: norm,
            expected: 1.0,
        });
    }
    let warning = kernel.extent_warning(packet_extent(state));
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let dx = state.grid.dx();
    let weights: Vec<f64> = state.amplitude.iter().map(|a| a.norm_sqr() * dx).collect();
    let full = KernelTable::new(kernel, dx, state.grid.n, KernelOffset::Full);
    let values: Vec<f64> = full.convolve(&weights, method).into_iter().map(|v| -G * v).collect();
    let (shape, constant) = if kernel.is_singular() {
        (values.clone(), 0.0)
    } else {
        let relative = KernelTable::new(kernel, dx, state.grid.n, KernelOffset::Relative);
        let shape = relative.convolve(&weights, method).into_iter().map(|v| -G * v).collect();
        (shape, -G * kernel.eval(0.0) * norm)
    };
    Ok(GravityPotential {
        values,
        shape,
        constant,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CrystalKernelParams, SphereKernelParams};
    use crate::physics::{material_lookup, AMU};
    use crate::trap::state::Grid1d;
    use approx::assert_relative_eq;

    #[test]
    fn fft_and_direct_agree() {
        let grid = Grid1d::centered(5e-12, 512).unwrap();
        let state = WavePacketState::gaussian(grid, 3e-13, 6e-13, 0.0).unwrap();
        let os = material_lookup("osmium").unwrap();
        let crystal = CrystalKernelParams::from_material(1e18 * AMU, &os).unwrap();
        for kernel in [
            SelfGravityKernel::Crystal(crystal),
            SelfGravityKernel::Narrow(crystal),
            SelfGravityKernel::Sphere(SphereKernelParams::new(1.0, 2e-12).unwrap()),
            SelfGravityKernel::delta(1.0).unwrap(),
        ] {
            for offset in [KernelOffset::Full, KernelOffset::Relative] {
                let table = KernelTable::new(&kernel, grid.dx(), grid.n, offset);
                let w: Vec<f64> = state.density().iter().map(|r| r * grid.dx()).collect();
                let a = table.convolve(&w, ConvolutionMethod::Fft);
                let b = table.convolve(&w, ConvolutionMethod::Direct);
                let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn point_source_gives_newtonian_potential() {
        let grid = Grid1d::new(-1.0, 1.0, 200).unwrap();
        let mut amp = vec![Complex64::new(0.0, 0.0); grid.n];
        let src = 70;
        amp[src] = Complex64::new((1.0 / grid.dx()).sqrt(), 0.0);
        let state = WavePacketState::new(grid, amp, 0.0).unwrap();
        let mass = 3.0;
        let kernel = SelfGravityKernel::delta(mass).unwrap();
        let v = self_gravity_potential_1d(&state, &kernel, ConvolutionMethod::Fft).unwrap();
        for i in [0, 50, 69, 71, 150, 199] {
            let d = (grid.x(i) - grid.x(src)).abs();
            assert_relative_eq!(v.values[i], -G * mass * mass / d, max_relative = 1e-10);
        }
        let peak = v.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(v.values[src].abs() < 1e-12 * peak);
    }

    fn quadratic_check(mass_u: f64, use_shape: bool) {
        let os = material_lookup("osmium").unwrap();
        let mass = mass_u * AMU;
        let p = CrystalKernelParams::from_material(mass, &os).unwrap();
        let width = 0.1 * p.sigma;
        let grid = Grid1d::centered(12.0 * width, 1024).unwrap();
        let state = WavePacketState::gaussian(grid, 0.7 * width, width, 0.0).unwrap();
        let v = self_gravity_potential_1d(&state, &SelfGravityKernel::Narrow(p), ConvolutionMethod::Fft).unwrap();
        assert!(v.warning.is_none());
        let values = if use_shape { &v.shape } else { &v.values };
        let w2 = os.omega_sn_squared();
        let mean = state.mean_x();
        // x-dependent part: (M/2)ω_SN²(x² − 2x⟨x⟩); compare differences to a reference point.
        let shape = |x: f64| 0.5 * mass * w2 * (x * x - 2.0 * x * mean);
        let r = grid.n / 2;
        for i in [100, 300, 700, 900] {
            let expected = shape(grid.x(i)) - shape(grid.x(r));
            let got = values[i] - values[r];
            assert_relative_eq!(got, expected, max_relative = 1e-6);
        }
        for (a, b) in v.values.iter().zip(&v.shape) {
            assert_relative_eq!(*a, b + v.constant, max_relative = 1e-12);
        }
    }

    #[test]
    fn narrow_kernel_reproduces_quadratic_potential() {
        // Small particle: lattice and atomic terms are comparable and the full
        // values resolve the quadratic part.
        quadratic_check(1e6, false);
        // Large particle: the lattice constant dominates by ~10⁹, only the
        // offset-free shape resolves it.
        quadratic_check(1e18, true);
    }

    #[test]
    fn symmetric_state_gives_even_potential() {
        let grid = Grid1d::centered(1e-11, 256).unwrap();
        let state = WavePacketState::gaussian(grid, 0.0, 1e-12, 0.0).unwrap();
        let os = material_lookup("gold").unwrap();
        let p = CrystalKernelParams::from_material(1e16 * AMU, &os).unwrap();
        let v = self_gravity_potential_1d(&state, &SelfGravityKernel::Crystal(p), ConvolutionMethod::Direct).unwrap();
        // x_i and x_{n−i} are mirror images about 0.
        for i in 1..grid.n / 2 {
            assert_relative_eq!(v.values[i], v.values[grid.n - i], max_relative = 1e-13);
        }
    }
}
