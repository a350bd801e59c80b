use serde::Serialize;

/// Gravitational constant, m³ kg⁻¹ s⁻².
pub const G: f64 = 6.674e-11;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.0546e-34;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.6605e-27;
/// Boltzmann constant, J K⁻¹.
pub const K_B: f64 = 1.3807e-23;

/// The reference constants every computation in the crate uses.
///
/// They are frozen at build time so that acceptance numbers and manifests are
/// reproducible; there is no way to override them at runtime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub g: f64,
    pub hbar: f64,
    pub amu: f64,
    pub k_b: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    g: G,
    hbar: HBAR,
    amu: AMU,
    k_b: K_B,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_positive_and_frozen() {
        let c = CONSTANTS;
        for v in [c.g, c.hbar, c.amu, c.k_b] {
            assert!(v > 0.0);
        }
        assert_eq!(c.g, 6.674e-11);
        assert_eq!(c.hbar, 1.0546e-34);
        assert_eq!(c.amu, 1.6605e-27);
        assert_eq!(c.k_b, 1.3807e-23);
    }
}
