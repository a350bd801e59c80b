use num_complex::Complex64;
use serde::Serialize;

use super::metrics::{dispersion_metrics, DispersionMetrics};
use super::potential::shell_sums;
use super::state::{RadialGrid, RadialState};
use crate::error::{Error, Result};
use crate::physics::{G, HBAR};

/// Probability inside the absorbing layer above which a warning is issued.
const ABSORBED_WARNING: f64 = 1e-4;

/// How the potential of a Crank–Nicolson step is made self-consistent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SelfConsistency {
    /// Predict with Φ(tₙ), correct once with ½(Φ(tₙ) + Φ(predicted)).
    PredictorCorrector,
    /// Repeat the corrector until the amplitude changes by less than `tol`.
    FixedPoint { tol: f64, max_iter: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionConfig {
    /// s
    pub dt: f64,
    /// s
    pub t_end: f64,
    /// Store a snapshot every this many steps (0: initial and final only).
    pub snapshot_stride: usize,
    /// Record metrics every this many steps.
    pub metric_stride: usize,
    /// Multiplies G; 0 gives the free Schrödinger reference.
    pub gravity_scale: f64,
    pub self_consistency: SelfConsistency,
    /// Outer fraction of r_max occupied by the absorbing layer.
    pub absorber_fraction: f64,
    /// Peak absorbing potential in units of ħ²/(m L²), L the layer thickness.
    pub absorber_strength: f64,
}

impl DispersionConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_stride: 0,
            metric_stride: 10,
            gravity_scale: 1.0,
            self_consistency: SelfConsistency::PredictorCorrector,
            absorber_fraction: 0.1,
            absorber_strength: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid("dt and t_end must be positive"));
        }
        if self.metric_stride == 0 {
            return Err(Error::invalid("metric stride must be at least 1"));
        }
        if !(self.gravity_scale.is_finite() && self.gravity_scale >= 0.0) {
            return Err(Error::invalid("gravity scale must be non-negative"));
        }
        if !(self.absorber_fraction > 0.0 && self.absorber_fraction < 0.5) {
            return Err(Error::invalid("absorber fraction must lie in (0, 0.5)"));
        }
        if !(self.absorber_strength >= 0.0) {
            return Err(Error::invalid("absorber strength must be non-negative"));
        }
        if let SelfConsistency::FixedPoint { tol, max_iter } = self.self_consistency {
            if !(tol > 0.0) || max_iter == 0 {
                return Err(Error::invalid("fixed-point iteration needs tol > 0 and max_iter ≥ 1"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Observables at one instant, SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricSample {
    pub time: f64,
    pub metrics: DispersionMetrics,
    pub norm: f64,
    /// T + ½∫Φ|ψ|² d³r, J.
    pub energy: f64,
    /// Probability inside the absorbing layer.
    pub absorbed: f64,
}

#[derive(Clone, Debug)]
pub struct DispersionRun {
    pub steps: usize,
    pub samples: Vec<MetricSample>,
    pub snapshots: Vec<RadialState>,
    pub final_state: RadialState,
    pub warnings: Vec<String>,
    /// Coupling κ = G m³ ℓ / ħ² of the internal units (ℓ = r_max).
    pub coupling: f64,
}

/// Solves tridiagonal systems `a_j x_{j−1} + b_j x_j + c_j x_{j+1} = d_j`
/// with constant off-diagonals (Thomas algorithm).
pub(crate) fn solve_tridiagonal(off: Complex64, diag: &[Complex64], rhs: &mut [Complex64], work: &mut Vec<Complex64>) {
    let n = diag.len();
    work.clear();
    work.resize(n, Complex64::new(0.0, 0.0));
    let mut beta = diag[0];
    work[0] = off / beta;
    rhs[0] /= beta;
    for j in 1..n {
        beta = diag[j] - off * work[j - 1];
        work[j] = off / beta;
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        let next = rhs[j + 1];
        rhs[j] -= work[j] * next;
    }
}

/// Radial Hamiltonian in internal units: H = −½∂² + κΦ̃ − iW.
pub(crate) struct RadialOperator {
    pub n: usize,
    pub h: f64,
    pub coupling: f64,
    pub absorber: Vec<f64>,
}

impl RadialOperator {
    pub fn new(grid: &RadialGrid, coupling: f64, absorber_fraction: f64, absorber_strength: f64) -> Self {
        let n = grid.n;
        let h = 1.0 / n as f64;
        let start = 1.0 - absorber_fraction;
        let absorber = (0..n)
            .map(|j| {
                let r = (j + 1) as f64 * h;
                if r > start {
                    let x = (r - start) / absorber_fraction;
                    absorber_strength / (absorber_fraction * absorber_fraction) * x * x
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            n,
            h,
            coupling,
            absorber,
        }
    }

    /// κΦ̃ on the grid for amplitude `u` (normalised with 4π∫|u|² = 1).
    pub fn potential(&self, u: &[Complex64]) -> Vec<f64> {
        if self.coupling == 0.0 {
            return vec![0.0; self.n];
        }
        let u2: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
        shell_sums(&u2, self.h)
            .into_iter()
            .map(|s| -self.coupling * s)
            .collect()
    }

    /// Kinetic expectation ½·4π∫|u′|² dr (forward differences, u(0) = 0 and
    /// u(r_max + h) = 0).
    pub fn kinetic(&self, u: &[Complex64]) -> f64 {
        let mut sum = u[0].norm_sqr();
        for j in 1..self.n {
            sum += (u[j] - u[j - 1]).norm_sqr();
        }
        sum += u[self.n - 1].norm_sqr();
        0.5 * 4.0 * std::f64::consts::PI * sum / self.h
    }

    /// ½·4π∫Φ̃|u|² dr with Φ̃ = κ·(shell sums).
    pub fn gravity_energy(&self, u: &[Complex64], phi: &[f64]) -> f64 {
        0.5 * 4.0 * std::f64::consts::PI * u.iter().zip(phi).map(|(z, p)| z.norm_sqr() * p).sum::<f64>() * self.h
    }

    /// One Crank–Nicolson step (1 + iτH/2)u⁺ = (1 − iτH/2)u with potential `phi`.
    pub fn crank_nicolson(&self, u: &[Complex64], phi: &[f64], tau: f64, out: &mut Vec<Complex64>, work: &mut Vec<Complex64>) {
        let n = self.n;
        let k = 1.0 / (self.h * self.h);
        let half = Complex64::new(0.0, 0.5 * tau);
        let off_h = Complex64::new(-0.5 * k, 0.0);
        let diag_h: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(k + phi[j], -self.absorber[j]))
            .collect();
        out.clear();
        out.extend((0..n).map(|j| {
            let mut hu = diag_h[j] * u[j];
            if j > 0 {
                hu += off_h * u[j - 1];
            }
            if j + 1 < n {
                hu += off_h * u[j + 1];
            }
            u[j] - half * hu
        }));
        let diag: Vec<Complex64> = diag_h.iter().map(|d| Complex64::new(1.0, 0.0) + half * d).collect();
        solve_tridiagonal(half * off_h, &diag, out, work);
    }
}

/// Evolves a free wave packet under the Schrödinger–Newton equation.
pub fn evolve_free(psi0: &RadialState, cfg: &DispersionConfig) -> Result<DispersionRun> {
    cfg.validate()?;
    let norm0 = psi0.norm();
    if !((norm0 - 1.0).abs() <= 1e-8) {
        return Err(Error::NotNormalized {
            integrated: norm0,
            expected: 1.0,
        });
    }
    let grid = psi0.grid;
    let m = psi0.mass;
    let ell = grid.r_max;
    let coupling = cfg.gravity_scale * G * m.powi(3) * ell / (HBAR * HBAR);
    let time_unit = m * ell * ell / HBAR;
    let energy_unit = HBAR * HBAR / (m * ell * ell);
    let op = RadialOperator::new(&grid, coupling, cfg.absorber_fraction, cfg.absorber_strength);
    let tau = cfg.dt / time_unit;
    let sqrt_l = ell.sqrt();
    let mut u: Vec<Complex64> = psi0.u.iter().map(|z| z * sqrt_l).collect();
    let layer_start = ((1.0 - cfg.absorber_fraction) * grid.n as f64).floor() as usize;

    let to_state = |u: &[Complex64], time: f64| RadialState {
        grid,
        u: u.iter().map(|z| z / sqrt_l).collect(),
        time,
        mass: m,
    };
    let sample = |u: &[Complex64], phi: &[f64], time: f64| {
        let state = to_state(u, time);
        let absorbed = 4.0 * std::f64::consts::PI * u[layer_start..].iter().map(|z| z.norm_sqr()).sum::<f64>() * op.h;
        MetricSample {
            time,
            metrics: dispersion_metrics(&state),
            norm: state.norm(),
            energy: (op.kinetic(u) + op.gravity_energy(u, phi)) * energy_unit,
            absorbed,
        }
    };

    let steps = cfg.steps();
    let mut warnings = Vec::new();
    let mut warned = false;
    let mut phi = op.potential(&u);
    let mut samples = vec![sample(&u, &phi, psi0.time)];
    let mut snapshots = vec![psi0.clone()];
    let (mut pred, mut next, mut work) = (Vec::new(), Vec::new(), Vec::new());
    for step in 1..=steps {
        op.crank_nicolson(&u, &phi, tau, &mut pred, &mut work);
        if coupling != 0.0 {
            let mut phi_next = op.potential(&pred);
            let mut mid: Vec<f64> = phi.iter().zip(&phi_next).map(|(a, b)| 0.5 * (a + b)).collect();
            op.crank_nicolson(&u, &mid, tau, &mut next, &mut work);
            if let SelfConsistency::FixedPoint { tol, max_iter } = cfg.self_consistency {
                let mut change = f64::INFINITY;
                let mut iter = 0;
                while change > tol {
                    if iter == max_iter {
                        return Err(Error::NoConvergence {
                            what: format!("self-consistent potential at step {step}"),
                            iterations: iter,
                            last_change: change,
                        });
                    }
                    std::mem::swap(&mut pred, &mut next);
                    phi_next = op.potential(&pred);
                    mid = phi.iter().zip(&phi_next).map(|(a, b)| 0.5 * (a + b)).collect();
                    op.crank_nicolson(&u, &mid, tau, &mut next, &mut work);
                    let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    change = next.iter().zip(&pred).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
                    iter += 1;
                }
            }
            std::mem::swap(&mut u, &mut next);
            phi = op.potential(&u);
        } else {
            std::mem::swap(&mut u, &mut pred);
        }
        let time = psi0.time + step as f64 * cfg.dt;
        if step % cfg.metric_stride == 0 || step == steps {
            let s = sample(&u, &phi, time);
            if s.absorbed > ABSORBED_WARNING && !warned {
                let msg = format!(
                    "probability {:.3e} inside the absorbing layer at t = {time:.6e} s; the packet reaches the grid edge and outgoing flux is being removed",
                    s.absorbed
                );
                log::warn!("{msg}");
                warnings.push(msg);
                warned = true;
            }
            samples.push(s);
        }
        if (cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0) || step == steps {
            snapshots.push(to_state(&u, time));
        }
    }
    let final_state = to_state(&u, psi0.time + steps as f64 * cfg.dt);
    Ok(DispersionRun {
        steps,
        samples,
        snapshots,
        final_state,
        warnings,
        coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thomas_matches_dense_solve() {
        let n = 6;
        let off = Complex64::new(-0.3, 0.1);
        let diag: Vec<Complex64> = (0..n).map(|j| Complex64::new(2.0 + j as f64, -0.5)).collect();
        let x: Vec<Complex64> = (0..n).map(|j| Complex64::new(j as f64, 1.0 - j as f64)).collect();
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|j| {
                let mut v = diag[j] * x[j];
                if j > 0 {
                    v += off * x[j - 1];
                }
                if j + 1 < n {
                    v += off * x[j + 1];
                }
                v
            })
            .collect();
        let mut work = Vec::new();
        solve_tridiagonal(off, &diag, &mut rhs, &mut work);
        for (a, b) in rhs.iter().zip(&x) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn crank_nicolson_is_unitary_without_absorber() {
        let grid = RadialGrid::new(1.0, 400).unwrap();
        let op = RadialOperator::new(&grid, 3.0, 0.1, 0.0);
        let s = RadialState::gaussian(grid, 1.0, 0.05).unwrap();
        let phi = op.potential(&s.u);
        let (mut out, mut work) = (Vec::new(), Vec::new());
        op.crank_nicolson(&s.u, &phi, 1e-3, &mut out, &mut work);
        let n0: f64 = s.u.iter().map(|z| z.norm_sqr()).sum();
        let n1: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(n0, n1, max_relative = 1e-13);
    }

    #[test]
    fn validation() {
        assert!(DispersionConfig::new(0.0, 1.0).validate().is_err());
        let mut c = DispersionConfig::new(1.0, 2.0);
        c.self_consistency = SelfConsistency::FixedPoint { tol: 0.0, max_iter: 3 };
        assert!(c.validate().is_err());
    }
}
