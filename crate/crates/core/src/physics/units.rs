use serde::Serialize;

use super::constants::{HBAR, K_B};
use crate::error::{Error, Result};

/// Harmonic-oscillator scales for a mass `mass` in a trap of angular frequency
/// `omega0`. Solvers work in these units; everything public is SI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscillatorUnits {
    pub mass: f64,
    pub omega0: f64,
    /// √(ħ/(M ω₀)), m.
    pub length_scale: f64,
    /// ħ ω₀, J.
    pub energy_scale: f64,
    /// 1/ω₀, s.
    pub time_scale: f64,
}

pub fn make_oscillator_units(mass: f64, omega0: f64) -> Result<OscillatorUnits> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::invalid(format!("mass must be positive, got {mass}")));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::invalid(format!("trap frequency must be positive, got {omega0}")));
    }
    Ok(OscillatorUnits {
        mass,
        omega0,
        length_scale: (HBAR / (mass * omega0)).sqrt(),
        energy_scale: HBAR * omega0,
        time_scale: 1.0 / omega0,
    })
}

impl OscillatorUnits {
    pub fn length_to_dimensionless(&self, x: f64) -> f64 {
        x / self.length_scale
    }

    pub fn length_from_dimensionless(&self, x: f64) -> f64 {
        x * self.length_scale
    }

    pub fn time_to_dimensionless(&self, t: f64) -> f64 {
        t * self.omega0
    }

    pub fn time_from_dimensionless(&self, t: f64) -> f64 {
        t * self.time_scale
    }

    pub fn energy_to_dimensionless(&self, e: f64) -> f64 {
        e / self.energy_scale
    }

    pub fn energy_from_dimensionless(&self, e: f64) -> f64 {
        e * self.energy_scale
    }
}

/// Bose–Einstein mean occupation 1/(exp(ħω₀/k_BT) − 1) of a trap mode.
pub fn thermal_occupation(temperature: f64, omega0: f64) -> Result<f64> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid(format!(
            "temperature must be non-negative, got {temperature}"
        )));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::invalid(format!("trap frequency must be positive, got {omega0}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega0 / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::AMU;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn unit_mass_and_frequency() {
        let u = make_oscillator_units(1.0, 1.0).unwrap();
        assert_relative_eq!(u.length_scale, HBAR.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(u.length_scale, 1.0269e-17, max_relative = 1e-4);
    }

    #[test]
    fn osmium_disc_scale() {
        let u = make_oscillator_units(1e14 * AMU, 2.0 * PI * 10.0).unwrap();
        // √(1.0546e-34 / (1.6605e-13 · 62.8319))
        let expected = (1.0546e-34f64 / (1.6605e-13 * 62.831_853_071_795_86)).sqrt();
        assert_relative_eq!(u.length_scale, expected, max_relative = 1e-14);
        assert_relative_eq!(u.length_scale, 3.18e-12, max_relative = 2e-3);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(make_oscillator_units(0.0, 1.0).is_err());
        assert!(make_oscillator_units(1.0, -1.0).is_err());
        assert!(make_oscillator_units(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn thermal_occupation_values() {
        assert_eq!(thermal_occupation(0.0, 10.0).unwrap(), 0.0);
        let omega = 1e3;
        let t = HBAR * omega / K_B;
        assert_relative_eq!(thermal_occupation(t, omega).unwrap(), 1.0 / (E - 1.0), max_relative = 1e-13);
        assert_relative_eq!(thermal_occupation(t, omega).unwrap(), 0.5820, max_relative = 1e-4);

        let n = thermal_occupation(0.1, 2.0 * PI * 10.0).unwrap();
        let ratio = K_B * 0.1 / (HBAR * 2.0 * PI * 10.0);
        assert_relative_eq!(n, ratio - 0.5, max_relative = 1e-12);
        assert_relative_eq!(n, 2.08e8, max_relative = 2e-3);
        assert!(thermal_occupation(-1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn scales_are_consistent(log_m in -30.0f64..3.0, log_w in -2.0f64..6.0, x in -1e3f64..1e3) {
            let (m, w) = (10f64.powf(log_m), 10f64.powf(log_w));
            let u = make_oscillator_units(m, w).unwrap();
            prop_assert!((u.length_scale.powi(2) * m * w / HBAR - 1.0).abs() < 1e-12);
            prop_assert!((u.energy_scale / (HBAR * w) - 1.0).abs() < 1e-12);
            prop_assert!((u.time_scale * w - 1.0).abs() < 1e-12);
            let xs = u.length_from_dimensionless(x);
            prop_assert!((u.length_to_dimensionless(xs) - x).abs() <= 1e-12 * x.abs().max(1e-300));
            let ts = u.time_from_dimensionless(x);
            prop_assert!((u.time_to_dimensionless(ts) - x).abs() <= 1e-12 * x.abs().max(1e-300));
        }

        #[test]
        fn occupation_monotone(t1 in 1e-4f64..10.0, dt in 1e-6f64..10.0, w in 1.0f64..1e4, dw in 1e-3f64..1e3) {
            let a = thermal_occupation(t1, w).unwrap();
            prop_assert!(thermal_occupation(t1 + dt, w).unwrap() >= a);
            prop_assert!(thermal_occupation(t1, w + dw).unwrap() <= a);
        }
    }
}
