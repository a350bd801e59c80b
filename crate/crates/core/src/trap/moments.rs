use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::state::WavePacketState;
use crate::error::{Error, Result};
use crate::physics::HBAR;

/// Mean and variance of a Gaussian state with their time derivatives, SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentState {
    /// ⟨x⟩, m
    pub mean_x: f64,
    /// d⟨x⟩/dt, m s⁻¹
    pub mean_v: f64,
    /// u = ⟨(x − ⟨x⟩)²⟩, m²
    pub u: f64,
    /// du/dt, m² s⁻¹
    pub u_dot: f64,
    /// d²u/dt², m² s⁻²
    pub u_ddot: f64,
}

impl MomentState {
    pub fn new(mean_x: f64, mean_v: f64, u: f64, u_dot: f64, u_ddot: f64) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::invalid(format!("variance must be positive, got {u}")));
        }
        Ok(Self {
            mean_x,
            mean_v,
            u,
            u_dot,
            u_ddot,
        })
    }

    /// Moments of a wave-function of a body of mass `mass` in a trap of
    /// frequency `omega0` with narrow-regime self-gravity frequency `omega_sn`.
    /// ü follows from the Heisenberg equations for the quadratic Hamiltonian:
    /// ü = 2Var(p)/M² − 2(ω₀² + ω_SN²)u.
    pub fn from_wave_packet(state: &WavePacketState, mass: f64, omega0: f64, omega_sn: f64) -> Result<Self> {
        let n = state.grid.n;
        let dx = state.grid.dx();
        let norm = state.norm();
        let mut spec: Vec<Complex64> = state.amplitude.clone();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut spec);
        let k = state.grid.wavenumbers();
        let spec_norm: f64 = spec.iter().map(|s| s.norm_sqr()).sum();
        let mean_k = spec.iter().zip(&k).map(|(s, k)| s.norm_sqr() * k).sum::<f64>() / spec_norm;
        let mean_k2 = spec.iter().zip(&k).map(|(s, k)| s.norm_sqr() * k * k).sum::<f64>() / spec_norm;
        // ψ′ = IFFT(ik ψ̂)
        let mut deriv: Vec<Complex64> = spec
            .iter()
            .zip(&k)
            .map(|(s, k)| s * Complex64::new(0.0, *k) / n as f64)
            .collect();
        planner.plan_fft_inverse(n).process(&mut deriv);
        let mean_x = state.mean_x();
        // ⟨xp + px⟩ = 2 Re ⟨ψ| x (−iħ∂ₓ) |ψ⟩
        let xp: f64 = state
            .amplitude
            .iter()
            .zip(&deriv)
            .enumerate()
            .map(|(i, (a, d))| (a.conj() * Complex64::new(0.0, -HBAR) * d).re * state.grid.x(i))
            .sum::<f64>()
            * dx
            / norm;
        let mean_p = HBAR * mean_k;
        let var_p = HBAR * HBAR * mean_k2 - mean_p * mean_p;
        let u = state.variance();
        let u_dot = (2.0 * xp - 2.0 * mean_x * mean_p) / mass;
        let u_ddot = 2.0 * var_p / (mass * mass) - 2.0 * (omega0 * omega0 + omega_sn * omega_sn) * u;
        Self::new(mean_x, mean_p / mass, u, u_dot, u_ddot)
    }
}

/// Ω = 2√(ω₀² + ω_SN²), the oscillation frequency of the variance.
pub fn variance_frequency(omega0: f64, omega_sn: f64) -> f64 {
    2.0 * (omega0 * omega0 + omega_sn * omega_sn).sqrt()
}

/// u(t) = u(0) + (u̇(0)/Ω) sin Ωt + (ü(0)/Ω²)(1 − cos Ωt).
pub fn closed_form_variance(m0: &MomentState, omega0: f64, omega_sn: f64, t: f64) -> f64 {
    let w = variance_frequency(omega0, omega_sn);
    m0.u + m0.u_dot / w * (w * t).sin() + m0.u_ddot / (w * w) * (1.0 - (w * t).cos())
}

/// (⟨x⟩, d⟨x⟩/dt) of the unshifted oscillation at ω₀.
pub fn closed_form_mean(m0: &MomentState, omega0: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega0 * t).sin_cos();
    (
        m0.mean_x * c + m0.mean_v / omega0 * s,
        -m0.mean_x * omega0 * s + m0.mean_v * c,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
}

/// Integrates d²⟨x⟩/dt² = −ω₀²⟨x⟩ and d³u/dt³ = −4(ω₀² + ω_SN²) du/dt with
/// classical fourth-order Runge–Kutta.
pub fn evolve_moments(m0: &MomentState, omega0: f64, omega_sn: f64, t_end: f64, dt: f64) -> Result<MomentTrajectory> {
    if !(omega0.is_finite() && omega0 > 0.0) || !(omega_sn.is_finite() && omega_sn >= 0.0) {
        return Err(Error::invalid("ω₀ must be positive and ω_SN non-negative"));
    }
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::invalid("dt and t_end must be positive"));
    }
    if dt * omega0.max(omega_sn) > 1e-2 {
        return Err(Error::invalid(format!(
            "dt·max(ω₀, ω_SN) = {:.3e} exceeds the step-size guard 1e-2",
            dt * omega0.max(omega_sn)
        )));
    }
    let w0sq = omega0 * omega0;
    let big_sq = 4.0 * (w0sq + omega_sn * omega_sn);
    let rhs = |y: &[f64; 5]| [y[1], -w0sq * y[0], y[3], y[4], -big_sq * y[3]];
    let steps = ((t_end / dt).round() as usize).max(1);
    let mut y = [m0.mean_x, m0.mean_v, m0.u, m0.u_dot, m0.u_ddot];
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let pack = |y: &[f64; 5]| MomentState {
        mean_x: y[0],
        mean_v: y[1],
        u: y[2],
        u_dot: y[3],
        u_ddot: y[4],
    };
    times.push(0.0);
    states.push(*m0);
    let axpy = |y: &[f64; 5], k: &[f64; 5], h: f64| {
        let mut out = *y;
        for i in 0..5 {
            out[i] += h * k[i];
        }
        out
    };
    for step in 1..=steps {
        let k1 = rhs(&y);
        let k2 = rhs(&axpy(&y, &k1, 0.5 * dt));
        let k3 = rhs(&axpy(&y, &k2, 0.5 * dt));
        let k4 = rhs(&axpy(&y, &k3, dt));
        for i in 0..5 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !(y[2] > 0.0) {
            return Err(Error::invalid(format!("variance became non-positive at t = {:e} s", step as f64 * dt)));
        }
        times.push(step as f64 * dt);
        states.push(pack(&y));
    }
    Ok(MomentTrajectory { times, states })
}
