//! Numerical toolkit for the Schrödinger–Newton equation in trapped and free
//! quantum systems.
//!
//! The crate is organised by physical layer:
//!
//! * [`physics`]: frozen constants, the material catalog and oscillator units.
//! * [`kernels`]: the self-gravity interaction kernel `I(d)` for point, sphere,
//!   crystalline, narrow-regime and tabulated mass densities.
//! * [`special`]: Hermite polynomials and Gauss quadrature rules.
//! * [`spectral`]: first-order self-gravity shifts of harmonic-trap levels and
//!   the resulting transition spectrum.
//! * [`trap`]: split-step evolution of a trapped centre-of-mass wave-function,
//!   the Gaussian moment equations and sinusoid frequency fitting.
//! * [`dispersion`]: radial Crank–Nicolson solver for free wave packets and
//!   imaginary-time ground states.
//! * [`runner`]: scenario configuration, CSV output and run manifests used by
//!   the `sn-toolkit` binary.

pub mod dispersion;
pub mod error;
pub mod kernels;
pub mod physics;
pub mod runner;
pub mod spectral;
pub mod special;
pub mod trap;

pub use error::{Error, Result};
