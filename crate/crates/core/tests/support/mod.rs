//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// erf via its Maclaurin series below 2.5 and the Laplace continued fraction
/// for erfc beyond.
pub fn erf(x: f64) -> f64 {
    let a = x.abs();
    let v = if a < 2.5 {
        let mut term = a;
        let mut sum = a;
        for k in 1..200 {
            term *= -a * a / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    } else {
        let mut f = 0.0;
        for k in (1..120).rev() {
            f = (k as f64 / 2.0) / (a + f);
        }
        1.0 - (-a * a).exp() / (PI.sqrt() * (a + f))
    };
    v.copysign(x)
}

/// H_n(x) from the explicit sum n! Σ_m (−1)^m (2x)^{n−2m} / (m!(n−2m)!).
pub fn hermite_series(n: usize, x: f64) -> f64 {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    (0..=n / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(n) / (fact(m) * fact(n - 2 * m)) * (2.0 * x).powi((n - 2 * m) as i32)
        })
        .sum()
}

/// Nested-trapezoid oracle for f_n(α) (additive constant dropped).
///
/// The inner integral is the unshifted two-term definition of P_n(z) with the
/// exponentials combined; the outer one runs over z = αζ ∈ [0, 20].
pub struct FnOracle {
    n: usize,
    z: Vec<f64>,
    /// e^{−z²/2} P_n(z) on the z grid
    overlap: Vec<f64>,
    dz: f64,
}

impl FnOracle {
    pub fn new(n: usize) -> Self {
        let points = 1001;
        let z_max = 20.0;
        let dz = z_max / (points - 1) as f64;
        let norm = (2f64.powi(n as i32) * (1..=n).map(|k| k as f64).product::<f64>()).powi(2);
        let dxi = 0.01;
        let half_width = 9.0;
        let steps = (2.0 * half_width / dxi) as i64;
        let z: Vec<f64> = (0..points).map(|i| i as f64 * dz).collect();
        let overlap = z
            .iter()
            .map(|&z| {
                // e^{−z²/2}e^{−2ξ²}e^{±2zξ} = e^{−2(ξ ∓ z/2)²}
                let term = |sign: f64| -> f64 {
                    let centre = sign * z / 2.0;
                    (0..=steps)
                        .map(|i| {
                            let xi = centre - half_width + i as f64 * dxi;
                            let e = (-2.0 * (xi - centre).powi(2)).exp();
                            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                            w * e * (hermite_series(n, xi) * hermite_series(n, xi - sign * z)).powi(2)
                        })
                        .sum::<f64>()
                        * dxi
                };
                let p = (term(1.0) + term(-1.0)) / ((2.0 * PI).sqrt() * norm);
                (-z * z / 2.0).exp() * p
            })
            .collect();
        Self { n, z, overlap, dz }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// P_n at a grid point (the e^{−z²/2} of the f_n integrand removed).
    pub fn p_n_at(&self, i: usize) -> (f64, f64) {
        let z = self.z[i];
        (z, self.overlap[i] * (z * z / 2.0).exp())
    }

    pub fn f_n(&self, alpha: f64) -> f64 {
        let g = |zeta: f64| {
            if zeta == 0.0 {
                0.0
            } else {
                erf(std::f64::consts::SQRT_2 * zeta) / (2.0 * zeta) - (2.0 / PI).sqrt()
            }
        };
        let last = self.z.len() - 1;
        let sum: f64 = self
            .z
            .iter()
            .zip(&self.overlap)
            .enumerate()
            .map(|(i, (&z, &q))| {
                let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                w * q * g(z / alpha)
            })
            .sum();
        alpha * alpha * (2.0 / PI).sqrt() * sum * self.dz
    }
}
