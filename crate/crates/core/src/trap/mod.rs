//! Trapped centre-of-mass dynamics.
//!
//! * [`evolve_trap`]: Strang split-step Fourier solution of the effectively
//!   one-dimensional Schrödinger–Newton equation in a harmonic trap, with the
//!   self-gravity potential `V_g(x) = −G ∫ |ψ(x′)|² I(|x − x′|) dx′` for any
//!   kernel.
//! * [`evolve_moments`]: the closed equations for the mean and variance of a
//!   Gaussian state in the narrow regime.
//! * [`extract_frequency`]: least-squares sinusoid fit connecting the two.

mod evolve;
mod fit;
mod moments;
mod potential;
mod state;

pub use evolve::{evolve_trap, MomentSample, NonlinearUpdate, TrapEvolutionConfig, TrapRun};
pub use fit::{extract_frequency, FrequencyFit, HIGH_RESIDUAL};
pub use moments::{
    closed_form_mean, closed_form_variance, evolve_moments, variance_frequency, MomentState,
    MomentTrajectory,
};
pub use potential::{self_gravity_potential_1d, ConvolutionMethod, GravityPotential, KernelOffset, KernelTable};
pub use state::{default_grid, initial_state, Grid1d, InitialState, WavePacketState};
