use serde::Serialize;

use super::state::RadialState;

/// Width measures of a radial probability density p(r) = 4πr²|ψ|², SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersionMetrics {
    /// Radius enclosing probability ½, m.
    pub r_half: f64,
    /// √⟨r²⟩, m.
    pub r_rms: f64,
    /// max p(r), m⁻¹.
    pub peak_density: f64,
    /// Location of the maximum, m.
    pub peak_radius: f64,
}

/// Cumulative ∫₀^{r_j} p dr by the trapezoid rule with the first
/// Euler–Maclaurin correction −h²/12·(p′(r_j) − p′(0)); p′(0) = 0 because p
/// vanishes quadratically at the origin.
fn cumulative(p: &[f64], h: f64) -> Vec<f64> {
    let n = p.len();
    let value = |j: isize| -> f64 {
        if j < 0 || j as usize >= n {
            0.0
        } else {
            p[j as usize]
        }
    };
    let mut c = vec![0.0; n];
    // p(0) = 0 at the origin node r = 0 (index −1).
    let mut acc = 0.0;
    for j in 0..n {
        acc += 0.5 * h * (value(j as isize - 1) + p[j]);
        let slope = (value(j as isize + 1) - value(j as isize - 1)) / (2.0 * h);
        c[j] = acc - h * h / 12.0 * slope;
    }
    c
}

/// Radius where the cumulative probability reaches half of its total, by
/// monotone (Fritsch–Carlson limited) cubic Hermite interpolation.
fn half_radius(p: &[f64], c: &[f64], h: f64) -> f64 {
    let target = 0.5 * c[c.len() - 1];
    let r = |j: isize| (j + 1) as f64 * h;
    // Node −1 is the origin: C = 0, C′ = p = 0.
    let at = |j: isize| if j < 0 { (0.0, 0.0) } else { (c[j as usize], p[j as usize]) };
    let k = c.partition_point(|&v| v < target) as isize;
    let (c0, mut m0) = at(k - 1);
    let (c1, mut m1) = at(k);
    let delta = (c1 - c0) / h;
    if delta <= 0.0 {
        return r(k);
    }
    let (a, b) = (m0 / delta, m1 / delta);
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        m0 = tau * a * delta;
        m1 = tau * b * delta;
    }
    m0 = m0.max(0.0);
    m1 = m1.max(0.0);
    let eval = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * c0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * c1
            + (t3 - t2) * h * m1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r(k - 1) + 0.5 * (lo + hi) * h
}

pub fn dispersion_metrics(state: &RadialState) -> DispersionMetrics {
    let h = state.grid.dr();
    let p = state.radial_density();
    let c = cumulative(&p, h);
    let total = c[c.len() - 1];
    let r2: f64 = p
        .iter()
        .enumerate()
        .map(|(j, pj)| pj * state.grid.r(j).powi(2))
        .sum::<f64>()
        * h;
    let r_rms = (r2 / total).sqrt();
    let (jmax, &pmax) = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let (mut peak_density, mut peak_radius) = (pmax, state.grid.r(jmax));
    if jmax > 0 && jmax + 1 < p.len() {
        let (a, b, cc) = (p[jmax - 1], pmax, p[jmax + 1]);
        let denom = a - 2.0 * b + cc;
        if denom < 0.0 {
            let off = 0.5 * (a - cc) / denom;
            peak_radius += off * h;
            peak_density = b - 0.25 * (a - cc) * off;
        }
    }
    DispersionMetrics {
        r_half: half_radius(&p, &c, h),
        r_rms,
        peak_density,
        peak_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::state::RadialGrid;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_metrics() {
        let r0 = 1.3e-6;
        let grid = RadialGrid::new(20.0 * r0, 4000).unwrap();
        let s = RadialState::gaussian(grid, 1e-17, r0).unwrap();
        let m = dispersion_metrics(&s);
        assert_relative_eq!(m.r_rms, 3f64.sqrt() * r0, max_relative = 1e-6);
        // p ∝ r² e^{−r²/2r₀²} peaks at √2 r₀.
        assert_relative_eq!(m.peak_radius, 2f64.sqrt() * r0, max_relative = 1e-5);
        // Median of the Maxwell distribution with scale r₀: 1.5381722 r₀.
        assert_relative_eq!(m.r_half, 1.538_172_2 * r0, max_relative = 1e-6);
    }

    #[test]
    fn uniform_ball_half_radius() {
        let a = 1.0;
        let n = 2000;
        let grid = RadialGrid::new(2.0 * a, n).unwrap();
        let rho = 3.0 / (4.0 * PI);
        let u = grid
            .points()
            .into_iter()
            .map(|r| {
                let v = r * rho.sqrt();
                if (r - a).abs() < 0.25 * grid.dr() {
                    Complex64::new(v * 0.5f64.sqrt(), 0.0)
                } else if r < a {
                    Complex64::new(v, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let s = RadialState::new(grid, u, 0.0, 1.0).unwrap();
        let m = dispersion_metrics(&s);
        assert_relative_eq!(m.r_half, a / 2f64.cbrt(), max_relative = 1e-6);
    }

    #[test]
    fn refinement_invariance() {
        let r0 = 1.0;
        let coarse = RadialState::gaussian(RadialGrid::new(15.0, 1500).unwrap(), 1.0, r0).unwrap();
        let fine = RadialState::gaussian(RadialGrid::new(15.0, 3000).unwrap(), 1.0, r0).unwrap();
        let (a, b) = (dispersion_metrics(&coarse), dispersion_metrics(&fine));
        assert_relative_eq!(a.r_half, b.r_half, max_relative = 1e-5);
        assert_relative_eq!(a.r_rms, b.r_rms, max_relative = 1e-5);
        assert_relative_eq!(a.peak_density, b.peak_density, max_relative = 1e-5);
    }
}
