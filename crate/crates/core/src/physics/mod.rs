//! Physical constants, the material catalog and oscillator-unit scaling.

mod constants;
mod materials;
mod units;

pub use constants::{PhysicalConstants, AMU, CONSTANTS, G, HBAR, K_B};
pub use materials::{material_lookup, MaterialCatalog, MaterialRecord};
pub use units::{make_oscillator_units, thermal_occupation, OscillatorUnits};
