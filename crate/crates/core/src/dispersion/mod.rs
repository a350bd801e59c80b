//! Radially symmetric Schrödinger–Newton evolution of a free particle.
//!
//! The reduced amplitude `u = rψ` obeys `iħ∂ₜu = −(ħ²/2m)u″ + Φ(r)u` with
//! `u(0) = 0` and the self-consistent Newtonian potential `Φ`. Internally
//! lengths are measured in a unit ℓ, times in mℓ²/ħ and energies in ħ²/(mℓ²);
//! the only remaining parameter is the coupling κ = G m³ ℓ / ħ². The soliton
//! scale ħ²/(Gm³) is the length for which κ = 1.

mod evolve;
mod metrics;
mod potential;
mod relax;
mod state;

pub use evolve::{evolve_free, DispersionConfig, DispersionRun, MetricSample, SelfConsistency};
pub use metrics::{dispersion_metrics, DispersionMetrics};
pub use potential::newtonian_potential_radial;
pub use relax::{ground_state_relax, soliton_energy, soliton_length, GroundState, RelaxConfig};
pub use state::{free_r_rms, RadialGrid, RadialState};
