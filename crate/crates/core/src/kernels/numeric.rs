//! Kernel for an arbitrary spherically symmetric mass density.
//!
//! The density is the piecewise-linear interpolant of a radial table
//! `(r_k, ρ_k)`; repeated radii encode jumps. With
//! `φ(s) = ∫d³v ρ(v)/|s − v|` and `Ψ(s) = ∫₀ˢ s' φ(s') ds'` the six-dimensional
//! overlap integral collapses to
//!
//! ```text
//! I(d) = (2π/d) ∫ u ρ(u) [Ψ(u + d) − Ψ(|u − d|)] du,   I(0) = 4π ∫ u² ρ(u) φ(u) du.
//! ```
//!
//! On every piece between consecutive knots `s φ(s)` is a quartic, so `Ψ` is a
//! quintic and, once the outer integral is split at the knots, at `±(knot − d)`,
//! at `knot + d` and at `d`, every integrand is a polynomial of degree ≤ 7. Four-point
//! Gauss–Legendre therefore integrates the table exactly up to rounding.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Below this fraction of the outer radius `I(d)` is replaced by `I(0)`; the
/// error is O((d/r)²) while the difference quotient would lose digits.
const SMALL_D: f64 = 1e-5;

/// Relative tolerance on the table mass against the declared total mass.
pub const MASS_TOLERANCE: f64 = 1e-6;

fn gl4(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL4_NODES
        .iter()
        .zip(GL4_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[derive(Clone, Debug)]
struct Table {
    r: Vec<f64>,
    rho: Vec<f64>,
}

impl Table {
    fn new(radii: &[f64], density: &[f64]) -> Result<Self> {
        if radii.len() != density.len() {
            return Err(Error::invalid("radius and density columns differ in length"));
        }
        if radii.len() < 2 {
            return Err(Error::invalid("density table needs at least two rows"));
        }
        let mut r = Vec::with_capacity(radii.len() + 1);
        let mut rho = Vec::with_capacity(radii.len() + 1);
        if radii[0] > 0.0 {
            r.push(0.0);
            rho.push(density[0]);
        }
        for (i, (&ri, &di)) in radii.iter().zip(density).enumerate() {
            if !(ri.is_finite() && ri >= 0.0) {
                return Err(Error::invalid(format!("row {i}: radius must be non-negative, got {ri}")));
            }
            if !(di.is_finite() && di >= 0.0) {
                return Err(Error::invalid(format!("row {i}: density must be non-negative, got {di}")));
            }
            if let Some(&prev) = r.last() {
                if ri < prev {
                    return Err(Error::invalid(format!("row {i}: radii must be non-decreasing")));
                }
            }
            r.push(ri);
            rho.push(di);
        }
        if *r.last().unwrap() <= 0.0 {
            return Err(Error::invalid("density table has zero extent"));
        }
        Ok(Self { r, rho })
    }

    fn outer(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Index k of the piece [r_k, r_{k+1}) containing s (right-continuous at
    /// jumps), or `len − 1` outside the table.
    fn segment(&self, s: f64) -> usize {
        self.r.partition_point(|&x| x <= s).saturating_sub(1)
    }

    fn slope(&self, k: usize) -> f64 {
        let w = self.r[k + 1] - self.r[k];
        if w > 0.0 {
            (self.rho[k + 1] - self.rho[k]) / w
        } else {
            0.0
        }
    }

    fn rho_on(&self, k: usize, u: f64) -> f64 {
        if k + 1 >= self.r.len() {
            0.0
        } else {
            self.rho[k] + self.slope(k) * (u - self.r[k])
        }
    }
}

/// Spherically symmetric, tabulated mass density and its self-gravity kernel.
#[derive(Clone, Debug)]
pub struct NumericKernel {
    table: Table,
    total_mass: f64,
    /// ∫₀^{r_k} r² ρ dr
    m_knot: Vec<f64>,
    /// ∫_{r_k}^∞ r ρ dr
    q_knot: Vec<f64>,
    /// Ψ(r_k)
    psi_knot: Vec<f64>,
    i_zero: f64,
}

/// Mass 4π∫r²ρ dr of the piecewise-linear interpolant of a radial table.
pub fn radial_table_mass(radii: &[f64], density: &[f64]) -> Result<f64> {
    let t = Table::new(radii, density)?;
    Ok(4.0 * PI * cumulative_m(&t).last().copied().unwrap_or(0.0))
}

fn cumulative_m(t: &Table) -> Vec<f64> {
    let mut m = vec![0.0; t.r.len()];
    for k in 0..t.r.len() - 1 {
        m[k + 1] = m[k] + gl4(t.r[k], t.r[k + 1], |x| x * x * t.rho_on(k, x));
    }
    m
}

impl NumericKernel {
    /// Builds the kernel from a radial table (m, kg m⁻³). The table must carry
    /// the total mass `total_mass` to within [`MASS_TOLERANCE`].
    pub fn new(radii: &[f64], density: &[f64], total_mass: f64) -> Result<Self> {
        if !(total_mass.is_finite() && total_mass > 0.0) {
            return Err(Error::invalid(format!("total mass must be positive, got {total_mass}")));
        }
        let table = Table::new(radii, density)?;
        let n = table.r.len();
        let m_knot = cumulative_m(&table);
        let integrated = 4.0 * PI * m_knot[n - 1];
        if !((integrated - total_mass).abs() <= MASS_TOLERANCE * total_mass) {
            return Err(Error::NotNormalized {
                integrated,
                expected: total_mass,
            });
        }
        let mut q_knot = vec![0.0; n];
        for k in (0..n - 1).rev() {
            q_knot[k] = q_knot[k + 1] + gl4(table.r[k], table.r[k + 1], |x| x * table.rho_on(k, x));
        }
        let mut kernel = Self {
            table,
            total_mass,
            m_knot,
            q_knot,
            psi_knot: vec![0.0; n],
            i_zero: 0.0,
        };
        for k in 0..n - 1 {
            let (a, b) = (kernel.table.r[k], kernel.table.r[k + 1]);
            kernel.psi_knot[k + 1] = kernel.psi_knot[k] + 4.0 * PI * gl4(a, b, |x| kernel.h_on(k, x));
        }
        let mut i0 = 0.0;
        for k in 0..n - 1 {
            let (a, b) = (kernel.table.r[k], kernel.table.r[k + 1]);
            i0 += gl4(a, b, |u| u * kernel.table.rho_on(k, u) * kernel.h_on(k, u));
        }
        kernel.i_zero = 16.0 * PI * PI * i0;
        Ok(kernel)
    }

    /// Reads a two-column text table `r_m rho_kg_m3` (whitespace or comma
    /// separated, `#` comments, optional header row).
    pub fn from_text(text: &str, total_mass: f64, source_name: &str) -> Result<Self> {
        let mut radii = Vec::new();
        let mut density = Vec::new();
        let mut seen_data = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed {
                Some(v) if v.len() == 2 => {
                    radii.push(v[0]);
                    density.push(v[1]);
                    seen_data = true;
                }
                None if !seen_data => continue,
                _ => {
                    return Err(Error::Parse {
                        source_name: source_name.to_string(),
                        line: idx + 1,
                        message: format!("expected two numeric columns, got `{line}`"),
                    })
                }
            }
        }
        Self::new(&radii, &density, total_mass)
    }

    pub fn from_file(path: &std::path::Path, total_mass: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, total_mass, &path.display().to_string())
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn outer_radius(&self) -> f64 {
        self.table.outer()
    }

    pub fn knot_count(&self) -> usize {
        self.table.r.len()
    }

    /// s φ(s) / 4π on piece k.
    fn h_on(&self, k: usize, s: f64) -> f64 {
        let t = &self.table;
        if k + 1 >= t.r.len() {
            return self.m_knot[k];
        }
        let (a, b) = (t.r[k], t.r[k + 1]);
        let (r0, sl) = (t.rho[k], t.slope(k));
        let (s2, s3) = (s * s, s * s * s);
        let a3 = a * a * a;
        let m = self.m_knot[k] + r0 * (s3 - a3) / 3.0 + sl * ((s3 * s - a3 * a) / 4.0 - a * (s3 - a3) / 3.0);
        let (b2, b3) = (b * b, b * b * b);
        let q = self.q_knot[k + 1] + r0 * (b2 - s2) / 2.0 + sl * ((b3 - s3) / 3.0 - a * (b2 - s2) / 2.0);
        m + s * q
    }

    fn psi(&self, s: f64) -> f64 {
        let k = self.table.segment(s);
        let last = self.table.r.len() - 1;
        if k >= last {
            let outer = self.table.outer();
            return self.psi_knot[last] + 4.0 * PI * self.m_knot[last] * (s - outer);
        }
        self.psi_knot[k] + 4.0 * PI * gl4(self.table.r[k], s, |x| self.h_on(k, x))
    }

    /// Kernel value at separation `d` (m), kg² m⁻¹.
    pub fn eval(&self, d: f64) -> f64 {
        let d = d.abs();
        let outer = self.table.outer();
        if d < SMALL_D * outer {
            return self.i_zero;
        }
        if d >= 2.0 * outer {
            return self.total_mass * self.total_mass / d;
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(4 * self.table.r.len() + 1);
        for &r in &self.table.r {
            cuts.push(r);
            for c in [r - d, d - r] {
                if c > 0.0 && c < outer {
                    cuts.push(c);
                }
            }
            if r + d < outer {
                cuts.push(r + d);
            }
        }
        if d < outer {
            cuts.push(d);
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        let mut sum = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let k = self.table.segment(0.5 * (a + b));
            sum += gl4(a, b, |u| {
                u * self.table.rho_on(k, u) * (self.psi(u + d) - self.psi((u - d).abs()))
            });
        }
        2.0 * PI / d * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{i_sphere, SphereKernelParams};
    use approx::assert_relative_eq;

    fn uniform_ball(mass: f64, radius: f64, interior_knots: usize) -> NumericKernel {
        let rho0 = mass / (4.0 / 3.0 * PI * radius.powi(3));
        let mut r: Vec<f64> = (0..=interior_knots)
            .map(|i| radius * i as f64 / interior_knots as f64)
            .collect();
        let mut rho = vec![rho0; r.len()];
        r.push(radius);
        rho.push(0.0);
        NumericKernel::new(&r, &rho, mass).unwrap()
    }

    #[test]
    fn uniform_ball_matches_sphere() {
        let (mass, radius) = (2.5, 0.4);
        let p = SphereKernelParams::new(mass, radius).unwrap();
        for knots in [1, 7, 64] {
            let k = uniform_ball(mass, radius, knots);
            for d in [0.0, 1e-7, 0.1 * radius, radius, 1.7 * radius, 2.0 * radius, 3.0 * radius, 10.0 * radius] {
                assert_relative_eq!(k.eval(d), i_sphere(d, &p), max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn rejects_wrong_mass_and_bad_tables() {
        let r = [0.0, 1.0, 1.0];
        let rho = [1.0, 1.0, 0.0];
        let m = radial_table_mass(&r, &rho).unwrap();
        assert_relative_eq!(m, 4.0 * PI / 3.0, max_relative = 1e-14);
        assert!(matches!(
            NumericKernel::new(&r, &rho, 1.01 * m),
            Err(Error::NotNormalized { .. })
        ));
        assert!(NumericKernel::new(&r, &rho, m).is_ok());
        assert!(NumericKernel::new(&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], m).is_err());
        assert!(NumericKernel::new(&[0.0, 1.0], &[1.0, -1.0], m).is_err());
    }

    #[test]
    fn table_without_origin_is_extended_flat() {
        let r = [0.5, 1.0, 1.0];
        let rho = [1.0, 1.0, 0.0];
        let m = radial_table_mass(&r, &rho).unwrap();
        assert_relative_eq!(m, 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn parses_text_tables() {
        let text = "# ball\nr_m, rho_kg_m3\n0 3\n1e-3 3\n1e-3 0\n";
        let mass = 4.0 * PI / 3.0 * 1e-9 * 3.0;
        let k = NumericKernel::from_text(text, mass, "ball.txt").unwrap();
        assert_eq!(k.knot_count(), 3);
        let bad = "0 3\n1e-3\n";
        assert!(matches!(
            NumericKernel::from_text(bad, mass, "bad.txt"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn continuous_across_small_d_switch() {
        let k = uniform_ball(1.0, 1.0, 16);
        let below = k.eval(0.99 * SMALL_D);
        let above = k.eval(1.01 * SMALL_D);
        assert_relative_eq!(below, above, max_relative = 1e-9);
    }
}
