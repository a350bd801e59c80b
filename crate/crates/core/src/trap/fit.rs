use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative residual above which a fit is flagged as a poor sinusoid.
pub const HIGH_RESIDUAL: f64 = 1e-3;

/// Least-squares fit `y ≈ offset + amplitude·cos(omega·t + phase)`.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyFit {
    /// rad s⁻¹ (or the inverse of whatever unit `times` carries).
    pub omega: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
    /// residual_rms / amplitude
    pub relative_residual: f64,
    pub warning: Option<String>,
}

struct Linear {
    coeffs: Vector3<f64>,
    sse: f64,
}

/// Offset, cos and sin coefficients at fixed ω (variable projection).
fn linear_fit(t: &[f64], y: &[f64], omega: f64) -> Option<Linear> {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (omega * ti).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let coeffs = ata.cholesky()?.solve(&aty);
    let sse = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let (s, c) = (omega * ti).sin_cos();
            let r = yi - coeffs[0] - coeffs[1] * c - coeffs[2] * s;
            r * r
        })
        .sum();
    Some(Linear { coeffs, sse })
}

/// Fits a single sinusoid to `values(times)`, searching within ±20% of
/// `expected` (rad per time unit). The series must span at least five periods.
pub fn extract_frequency(times: &[f64], values: &[f64], expected: f64) -> Result<FrequencyFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::invalid("frequency fit needs matching series of at least 8 samples"));
    }
    if !(expected.is_finite() && expected > 0.0) {
        return Err(Error::invalid(format!("expected frequency must be positive, got {expected}")));
    }
    let span = times[times.len() - 1] - times[0];
    let periods = span * expected / (2.0 * std::f64::consts::PI);
    if !(periods >= 5.0) {
        return Err(Error::invalid(format!(
            "series spans {periods:.2} periods of the expected frequency; at least 5 are required"
        )));
    }
    // Centre and scale for conditioning.
    let t_mid = 0.5 * (times[0] + times[times.len() - 1]);
    let t: Vec<f64> = times.iter().map(|x| x - t_mid).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let scale = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::FitFailed { residual_rms: 0.0 });
    }
    let y: Vec<f64> = values.iter().map(|v| (v - mean) / scale).collect();
    let sse = |w: f64| linear_fit(&t, &y, w).map_or(f64::INFINITY, |l| l.sse);

    // Coarse scan with a step well below the spectral resolution 2π/span.
    let (lo, hi) = (0.8 * expected, 1.2 * expected);
    let step = 2.0 * std::f64::consts::PI / span / 16.0;
    let count = ((hi - lo) / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
    let errors: Vec<f64> = grid.iter().map(|&w| sse(w)).collect();
    let best = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == count - 1 {
        let rms = (errors[best] / y.len() as f64).sqrt() * scale;
        return Err(Error::FitFailed { residual_rms: rms });
    }

    // Golden-section refinement within the bracketing scan cells.
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    while (b - a) > 1e-13 * expected {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = sse(d);
        }
    }
    let mut omega = 0.5 * (a + b);
    let lin = linear_fit(&t, &y, omega).ok_or(Error::FitFailed { residual_rms: f64::NAN })?;
    let mut p = Vector4::new(lin.coeffs[0], lin.coeffs[1], lin.coeffs[2], omega);

    // Gauss–Newton polish of all four parameters.
    let mut converged = false;
    for _ in 0..20 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&ti, &yi) in t.iter().zip(&y) {
            let (s, c) = (p[3] * ti).sin_cos();
            let r = yi - (p[0] + p[1] * c + p[2] * s);
            let j = Vector4::new(1.0, c, s, ti * (-p[1] * s + p[2] * c));
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let Some(delta) = jtj.lu().solve(&jtr) else {
            break;
        };
        p += delta;
        if delta[3].abs() <= 1e-15 * p[3].abs() {
            converged = true;
            break;
        }
    }
    omega = p[3];
    let residual_sse: f64 = t
        .iter()
        .zip(&y)
        .map(|(&ti, &yi)| {
            let (s, c) = (omega * ti).sin_cos();
            let r = yi - (p[0] + p[1] * c + p[2] * s);
            r * r
        })
        .sum();
    let residual_rms = (residual_sse / y.len() as f64).sqrt() * scale;
    if !converged || !omega.is_finite() || omega < lo || omega > hi {
        return Err(Error::FitFailed { residual_rms });
    }
    let amplitude = (p[1] * p[1] + p[2] * p[2]).sqrt() * scale;
    // a cos θ + b sin θ = A cos(θ + φ) with φ = atan2(−b, a); shift θ back to
    // the original time origin.
    let phase_mid = (-p[2]).atan2(p[1]);
    let phase = (phase_mid - omega * t_mid).rem_euclid(2.0 * std::f64::consts::PI);
    let relative_residual = residual_rms / amplitude;
    let warning = (relative_residual > HIGH_RESIDUAL).then(|| {
        let msg = format!(
            "sinusoid fit residual is {relative_residual:.3e} of the amplitude; the series is not a single clean oscillation"
        );
        log::warn!("{msg}");
        msg
    });
    Ok(FrequencyFit {
        omega,
        amplitude,
        phase,
        offset: mean + p[0] * scale,
        residual_rms,
        relative_residual,
        warning,
    })
}
