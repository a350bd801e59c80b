//! First-order self-gravity shifts of harmonic-trap levels.
//!
//! With the unperturbed eigenstates of a trap of frequency ω₀ the shift of
//! level n is `ΔE_n = −(G ħ m_atom / 4σ³ω₀) f_n(α)`, `α = 2σ√(Mω₀/ħ)`, where
//!
//! ```text
//! f_n(α) = α² √(2/π) ∫₀^∞ dz e^{−z²/2} P_n(z) g(z/α),   g(ζ) = erf(√2ζ)/(2ζ) − √(2/π),
//! P_n(z) = √(2/π)/(2ⁿn!)² ∫ dt e^{−2t²} H_n(t + z/2)² H_n(t − z/2)².
//! ```
//!
//! The second form of `P_n` follows from shifting ξ → t ± z/2 in the two terms
//! of the original definition, which are then equal. It is a polynomial of
//! degree 4n against a Gaussian weight, so a Gauss–Hermite rule with at least
//! 2n + 1 nodes is exact. The additive constant of f_n is dropped: it cancels
//! in every transition frequency.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::{MaterialRecord, G, HBAR, K_B};
use crate::special::{integrate_adaptive, log_sum_exp, normalized_hermite_log, GaussHermite, GaussLegendre};

pub const DEFAULT_MAX_N: usize = 200;

/// Numerical settings of the f_n quadrature, recorded in run manifests.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureSettings {
    /// Gauss–Legendre order of each ζ panel.
    pub panel_order: usize,
    /// Relative error target of the adaptive ζ integral.
    pub zeta_rel_tol: f64,
    pub max_panels: usize,
    /// Largest relative change allowed when the Hermite rule is doubled.
    pub doubling_tol: f64,
    /// Recompute every f_n with the doubled Hermite rule.
    pub validate_doubling: bool,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            panel_order: 15,
            zeta_rel_tol: 1e-12,
            max_panels: 4000,
            doubling_tol: 1e-8,
            validate_doubling: true,
        }
    }
}

/// f_n together with its error diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FnEvaluation {
    pub value: f64,
    /// Error estimate of the adaptive ζ quadrature.
    pub zeta_error: f64,
    pub panels: usize,
    /// Relative change under Hermite node doubling (0 when not validated).
    pub doubling_change: f64,
    pub hermite_nodes: usize,
}

/// Hermite quadrature rules and panel rule for P_n and f_n up to `max_n`.
#[derive(Clone, Debug)]
pub struct HermiteWorkspace {
    max_n: usize,
    /// Power-of-two ladder of Gauss–Hermite rules, 8, 16, …, one size above
    /// what `max_n` needs so that every rule has a doubled partner.
    rules: Vec<Arc<GaussHermite>>,
    panel: GaussLegendre,
    settings: QuadratureSettings,
}

fn ladder_index(n: usize) -> usize {
    let need = (2 * n + 1).max(8);
    need.next_power_of_two().trailing_zeros() as usize - 3
}

/// g(ζ) = erf(√2ζ)/(2ζ) − √(2/π), which vanishes at ζ = 0.
fn g(zeta: f64) -> f64 {
    let y = std::f64::consts::SQRT_2 * zeta;
    if y < 0.5 {
        let y2 = y * y;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..30 {
            term *= -y2 / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        (2.0 / PI).sqrt() * sum
    } else {
        libm::erf(y) / (2.0 * zeta) - (2.0 / PI).sqrt()
    }
}

impl HermiteWorkspace {
    pub fn new(max_n: usize) -> Result<Self> {
        Self::with_settings(max_n, QuadratureSettings::default())
    }

    pub fn with_settings(max_n: usize, settings: QuadratureSettings) -> Result<Self> {
        if settings.panel_order < 2 || settings.max_panels < 1 {
            return Err(Error::invalid("quadrature settings need order ≥ 2 and at least one panel"));
        }
        let levels = ladder_index(max_n) + 2;
        let rules = (0..levels)
            .map(|l| GaussHermite::shared(8 << l))
            .collect::<Result<Vec<_>>>()?;
        let ws = Self {
            max_n,
            rules,
            panel: GaussLegendre::new(settings.panel_order),
            settings,
        };
        ws.self_test()?;
        Ok(ws)
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn settings(&self) -> &QuadratureSettings {
        &self.settings
    }

    /// Number of Hermite nodes used for level n.
    pub fn hermite_nodes(&self, n: usize) -> usize {
        self.rules[ladder_index(n)].len()
    }

    fn self_test(&self) -> Result<()> {
        let n = self.max_n;
        let rule = &self.rules[ladder_index(n)];
        let norm = log_sum_exp(rule.nodes.iter().zip(&rule.ln_weights).map(|(&x, lw)| {
            let (lh, _) = normalized_hermite_log(n, x);
            lw + 2.0 * lh
        }))
        .exp()
            / PI.sqrt();
        if !((norm - 1.0).abs() < 1e-10) {
            return Err(Error::SelfTest(format!(
                "normalised Hermite function of order {n} integrates to {norm}"
            )));
        }
        for (m, z, expected) in [(0, 0.0, Some(1.0)), (0, 7.0, Some(1.0)), (n, 0.0, None), (n, 3.0, None)] {
            let v = self.p_n_with(ladder_index(m), m, z);
            let ok = v.is_finite() && v > 0.0 && expected.is_none_or(|e| (v - e).abs() < 1e-12);
            if !ok {
                return Err(Error::SelfTest(format!("P_{m}({z}) evaluated to {v}")));
            }
        }
        Ok(())
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::invalid(format!(
                "quantum number {n} exceeds the workspace limit {}",
                self.max_n
            )));
        }
        Ok(())
    }

    /// ln[e^{−z²/2} P_n(z)] with rule `level` of the ladder.
    fn ln_overlap_with(&self, level: usize, n: usize, z: f64) -> f64 {
        let rule = &self.rules[level];
        let half = 0.5 * z;
        let terms = rule.nodes.iter().zip(&rule.ln_weights).map(|(&x, &lw)| {
            let t = x * std::f64::consts::FRAC_1_SQRT_2;
            let (la, _) = normalized_hermite_log(n, t + half);
            let (lb, _) = normalized_hermite_log(n, t - half);
            lw + 2.0 * (la + lb)
        });
        log_sum_exp(terms) - 0.5 * PI.ln() - 0.5 * z * z
    }

    fn p_n_with(&self, level: usize, n: usize, z: f64) -> f64 {
        (self.ln_overlap_with(level, n, z) + 0.5 * z * z).exp()
    }

    /// P_n(z), validated against the doubled Hermite rule.
    pub fn p_n(&self, n: usize, z: f64) -> Result<f64> {
        self.check_n(n)?;
        if !z.is_finite() {
            return Err(Error::invalid(format!("P_n argument must be finite, got {z}")));
        }
        let level = ladder_index(n);
        let a = self.p_n_with(level, n, z);
        let b = self.p_n_with(level + 1, n, z);
        let change = ((a - b) / b).abs();
        if !(change <= self.settings.doubling_tol) {
            return Err(Error::Quadrature {
                what: format!("P_{n}({z})"),
                achieved: change,
                target: self.settings.doubling_tol,
            });
        }
        Ok(b)
    }

    /// e^{−z²/2} P_n(z), the combination entering f_n (finite for any z).
    pub fn overlap(&self, n: usize, z: f64) -> Result<f64> {
        self.check_n(n)?;
        Ok(self.ln_overlap_with(ladder_index(n), n, z).exp())
    }

    /// Upper limit of the z integral. The overlap is concentrated within twice
    /// the classical turning point √(2n + 1) and decays like a Gaussian beyond.
    pub fn z_max(n: usize) -> f64 {
        (2.0 * (2.0 * n as f64 + 1.0).sqrt() + 16.0).max(20.0)
    }

    fn f_n_with(&self, level: usize, n: usize, alpha: f64) -> Result<(f64, f64, usize)> {
        let scale = alpha * alpha * (2.0 / PI).sqrt();
        let r = integrate_adaptive(
            &format!("f_{n}(α = {alpha})"),
            |z| (self.ln_overlap_with(level, n, z)).exp() * g(z / alpha),
            0.0,
            Self::z_max(n),
            &self.panel,
            self.settings.zeta_rel_tol,
            0.0,
            self.settings.max_panels,
        )?;
        Ok((scale * r.value, scale * r.error, r.panels))
    }

    /// f_n(α) with diagnostics.
    pub fn f_n_report(&self, n: usize, alpha: f64) -> Result<FnEvaluation> {
        self.check_n(n)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("α must be positive, got {alpha}")));
        }
        let level = ladder_index(n);
        let (value, zeta_error, panels) = self.f_n_with(level, n, alpha)?;
        let mut doubling_change = 0.0;
        let mut hermite_nodes = self.rules[level].len();
        if self.settings.validate_doubling {
            let (doubled, _, _) = self.f_n_with(level + 1, n, alpha)?;
            doubling_change = ((value - doubled) / doubled).abs();
            hermite_nodes = self.rules[level + 1].len();
            if !(doubling_change <= self.settings.doubling_tol) {
                return Err(Error::Quadrature {
                    what: format!("f_{n}(α = {alpha}) under Hermite node doubling"),
                    achieved: doubling_change,
                    target: self.settings.doubling_tol,
                });
            }
        }
        Ok(FnEvaluation {
            value,
            zeta_error,
            panels,
            doubling_change,
            hermite_nodes,
        })
    }

    pub fn f_n(&self, n: usize, alpha: f64) -> Result<f64> {
        Ok(self.f_n_report(n, alpha)?.value)
    }

    /// f_0 … f_{n_max}, evaluated in parallel.
    pub fn f_range(&self, n_max: usize, alpha: f64) -> Result<Vec<f64>> {
        self.check_n(n_max)?;
        (0..=n_max).into_par_iter().map(|n| self.f_n(n, alpha)).collect()
    }
}

/// Parameters of the trapped body for the spectral shifts.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralParams {
    /// Total mass, kg.
    pub mass: f64,
    /// Trap frequency, s⁻¹.
    pub omega0: f64,
    pub material: MaterialRecord,
    /// α = 2σ√(Mω₀/ħ).
    pub alpha: f64,
    /// G ħ m_atom / (4σ³ω₀), J.
    pub prefactor: f64,
}

impl SpectralParams {
    pub fn new(mass: f64, omega0: f64, material: MaterialRecord) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(format!("mass must be positive, got {mass} kg")));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::invalid(format!("ω₀ must be positive, got {omega0} s⁻¹")));
        }
        let sigma = material.sigma_m();
        let alpha = 2.0 * sigma * (mass * omega0 / HBAR).sqrt();
        let prefactor = G * HBAR * material.m_atom_kg() / (4.0 * sigma.powi(3) * omega0);
        Ok(Self {
            mass,
            omega0,
            material,
            alpha,
            prefactor,
        })
    }

    /// Whether the stored α agrees with the one recomputed from the fields.
    pub fn is_consistent(&self) -> bool {
        let alpha = 2.0 * self.material.sigma_m() * (self.mass * self.omega0 / HBAR).sqrt();
        self.alpha > 0.0 && ((alpha - self.alpha) / alpha).abs() <= 1e-12
    }
}

/// ΔE_n = −prefactor · f_n(α), J (up to an n-independent offset).
pub fn energy_shift(ws: &HermiteWorkspace, n: usize, p: &SpectralParams) -> Result<f64> {
    Ok(-p.prefactor * ws.f_n(n, p.alpha)?)
}

/// One transition n_lower → n_upper of the perturbed trap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumLine {
    pub n_lower: usize,
    pub n_upper: usize,
    pub delta_n: usize,
    /// Δn·ω₀, s⁻¹.
    pub omega_unperturbed: f64,
    /// (ΔE_{n_upper} − ΔE_{n_lower})/ħ, s⁻¹, relative to Δn·ω₀.
    pub omega_shift: f64,
    /// Normalised Boltzmann weight of the lower level.
    pub weight: f64,
}

/// Boltzmann weights exp(−nħω₀/k_BT) normalised over n = 0..count.
pub fn boltzmann_weights(count: usize, omega0: f64, temperature: f64) -> Result<Vec<f64>> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid(format!("temperature must be non-negative, got {temperature} K")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if temperature == 0.0 {
        let mut w = vec![0.0; count];
        w[0] = 1.0;
        return Ok(w);
    }
    let x = HBAR * omega0 / (K_B * temperature);
    let raw: Vec<f64> = (0..count).map(|n| (-(n as f64) * x).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Transition lines n → n + Δn for n = 0..=n_max − Δn, ordered by n.
pub fn transition_spectrum(
    ws: &HermiteWorkspace,
    p: &SpectralParams,
    n_max: usize,
    delta_n: usize,
    temperature: f64,
) -> Result<Vec<SpectrumLine>> {
    if delta_n == 0 {
        return Err(Error::invalid("Δn must be at least 1"));
    }
    if delta_n > n_max {
        return Err(Error::invalid(format!("Δn = {delta_n} exceeds n_max = {n_max}")));
    }
    if n_max > ws.max_n() {
        return Err(Error::invalid(format!(
            "n_max = {n_max} exceeds the workspace limit {}",
            ws.max_n()
        )));
    }
    let f = ws.f_range(n_max, p.alpha)?;
    let count = n_max - delta_n + 1;
    let weights = boltzmann_weights(count, p.omega0, temperature)?;
    Ok((0..count)
        .map(|n| SpectrumLine {
            n_lower: n,
            n_upper: n + delta_n,
            delta_n,
            omega_unperturbed: delta_n as f64 * p.omega0,
            omega_shift: -p.prefactor * (f[n + delta_n] - f[n]) / HBAR,
            weight: weights[n],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::material_lookup;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ws() -> HermiteWorkspace {
        HermiteWorkspace::new(20).unwrap()
    }

    #[test]
    fn ladder_sizes() {
        assert_eq!(8 << ladder_index(0), 8);
        assert_eq!(8 << ladder_index(3), 8);
        assert_eq!(8 << ladder_index(4), 16);
        assert_eq!(8 << ladder_index(200), 512);
    }

    #[test]
    fn p0_is_one() {
        let w = ws();
        for z in [0.0, 1.0, 5.0, 10.0] {
            assert_relative_eq!(w.p_n(0, z).unwrap(), 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn p1_at_origin() {
        // (1/√π)∫x⁴e^{−x²} = Γ(5/2)/√π = 3/4
        assert_relative_eq!(ws().p_n(1, 0.0).unwrap(), 0.75, max_relative = 1e-13);
    }

    #[test]
    fn p_n_matches_original_two_term_form() {
        // Direct trapezoid evaluation of the unshifted two-term integral.
        let h = |n: usize, x: f64| crate::special::hermite_h(n, x);
        for n in [1, 2, 5] {
            for z in [0.3, 1.7] {
                let norm = (2f64.powi(n as i32) * (1..=n).product::<usize>() as f64).powi(2);
                let step = 1e-3;
                let sum: f64 = (-12000..=12000)
                    .map(|i| {
                        let x = i as f64 * step;
                        (-2.0 * x * x).exp()
                            * h(n, x).powi(2)
                            * ((2.0 * z * x).exp() * h(n, x - z).powi(2)
                                + (-2.0 * z * x).exp() * h(n, x + z).powi(2))
                    })
                    .sum();
                let direct = (-z * z / 2.0).exp() / ((2.0 * PI).sqrt() * norm) * sum * step;
                assert_relative_eq!(ws().p_n(n, z).unwrap(), direct, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn g_is_continuous_at_series_switch() {
        let z = 0.5 / std::f64::consts::SQRT_2;
        assert_relative_eq!(g(z * (1.0 - 1e-12)), g(z * (1.0 + 1e-12)), max_relative = 1e-10);
        assert_eq!(g(0.0), 0.0);
        assert!(g(3.0) < 0.0);
    }

    #[test]
    fn rejects_out_of_range_n() {
        assert!(ws().p_n(21, 0.0).is_err());
        assert!(ws().f_n(21, 1.0).is_err());
        assert!(ws().f_n(0, 0.0).is_err());
    }

    #[test]
    fn large_alpha_spacing_approaches_narrow_limit() {
        let w = ws();
        let f: Vec<f64> = (0..=3).map(|n| w.f_n(n, 300.0).unwrap()).collect();
        let limit = -4.0 / 3.0 * (2.0 / PI).sqrt();
        for k in 0..3 {
            assert_relative_eq!(f[k + 1] - f[k], limit, max_relative = 1e-3);
        }
    }

    #[test]
    fn osmium_prefactor() {
        let os = material_lookup("osmium").unwrap();
        let omega0 = 2.0 * PI * 10.0;
        let p = SpectralParams::new(1e14 * crate::physics::AMU, omega0, os).unwrap();
        assert!(p.is_consistent());
        let ratio = p.prefactor / (HBAR * omega0);
        assert!((ratio - 6.3e-5).abs() < 0.05e-5, "{ratio}");
    }

    #[test]
    fn boltzmann_limits() {
        assert_eq!(boltzmann_weights(4, 10.0, 0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let w = boltzmann_weights(50, 2.0 * PI * 10.0, 0.1).unwrap();
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
        assert!(w.windows(2).all(|p| p[1] < p[0]));
        assert!(boltzmann_weights(3, 1.0, -1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn p_n_nonnegative_and_even(n in 0usize..=20, z in 0.0f64..10.0) {
            let w = ws();
            let a = w.p_n(n, z).unwrap();
            let b = w.p_n(n, -z).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
