use std::f64::consts::PI;

use super::state::RadialState;
use crate::physics::G;

/// Shell-theorem sums for a radial density on the grid, in units where the
/// density is `4π|u|²`: returns M_in(r_j)/r_j + 4π∫_{r_j}^∞ |u|²/r dr, both
/// integrals by the cumulative trapezoid rule (the density vanishes at r = 0
/// and beyond the grid).
pub(crate) fn shell_sums(u2: &[f64], dr: f64) -> Vec<f64> {
    let n = u2.len();
    let r = |j: usize| (j + 1) as f64 * dr;
    let mut inner = vec![0.0; n];
    let mut acc = 0.5 * dr * u2[0];
    inner[0] = acc;
    for j in 1..n {
        acc += 0.5 * dr * (u2[j - 1] + u2[j]);
        inner[j] = acc;
    }
    let mut outer = vec![0.0; n];
    let mut acc = 0.5 * dr * u2[n - 1] / r(n - 1);
    outer[n - 1] = acc;
    for j in (0..n - 1).rev() {
        acc += 0.5 * dr * (u2[j] / r(j) + u2[j + 1] / r(j + 1));
        outer[j] = acc;
    }
    (0..n)
        .map(|j| 4.0 * PI * (inner[j] / r(j) + outer[j]))
        .collect()
}

/// Φ(r) = −Gm²[M_in(r)/r + 4π∫_r^∞ r′|ψ(r′)|² dr′] on the grid, J.
pub fn newtonian_potential_radial(state: &RadialState) -> Vec<f64> {
    let u2: Vec<f64> = state.u.iter().map(|u| u.norm_sqr()).collect();
    let gm2 = G * state.mass * state.mass;
    shell_sums(&u2, state.grid.dr())
        .into_iter()
        .map(|s| -gm2 * s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::state::RadialGrid;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    /// Uniform ball of radius a on a grid with a node at r = a carrying half
    /// the interior value of |u|² (the trapezoid rule then sees the jump's
    /// midpoint).
    pub(crate) fn uniform_ball(a: f64, n: usize, mass: f64) -> RadialState {
        let grid = RadialGrid::new(2.0 * a, n).unwrap();
        let rho = 3.0 / (4.0 * PI * a.powi(3));
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
        RadialState::new(grid, u, 0.0, mass).unwrap()
    }

    #[test]
    fn uniform_ball_potential() {
        let (a, mass) = (1e-6, 1e-17);
        let s = uniform_ball(a, 2000, mass);
        let phi = newtonian_potential_radial(&s);
        let gm2 = G * mass * mass;
        for (j, r) in s.grid.points().into_iter().enumerate() {
            let exact = if r < a - 1e-3 * a {
                -gm2 * (3.0 * a * a - r * r) / (2.0 * a.powi(3))
            } else if r > a + 1e-3 * a {
                -gm2 / r
            } else {
                continue;
            };
            assert_relative_eq!(phi[j], exact, max_relative = 1e-5);
        }
    }

    #[test]
    fn exterior_is_point_mass_and_potential_increases() {
        let grid = RadialGrid::new(40.0, 4000).unwrap();
        let s = RadialState::gaussian(grid, 2.0, 1.0).unwrap();
        let phi = newtonian_potential_radial(&s);
        let gm2 = G * 4.0;
        let last = grid.n - 1;
        assert_relative_eq!(phi[last], -gm2 / grid.r(last), max_relative = 1e-8);
        assert!(phi.windows(2).all(|w| w[1] > w[0]));
    }
}
