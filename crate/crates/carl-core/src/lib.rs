//! Linearized three-mode dynamics of a pump-driven Bose-Einstein condensate
//! coupled to a single ring-cavity mode.
//!
//! The condensate exchanges photons between a strong classical pump and a weak
//! quantized probe, populating two atomic momentum side-modes. After
//! linearizing around the undepleted condensate the problem reduces to three
//! coupled bosonic modes (probe, minus side-mode, plus side-mode) driven by a
//! quadratic Hamiltonian, fully characterized by a dimensionless coupling
//! `chi`, a pump-probe detuning `delta`, and an injected probe amplitude
//! `alpha`.
//!
//! The crate is organized along the computation pipeline:
//!
//! * [`model`] converts laboratory parameters to `(chi, delta)` and monitors
//!   the validity window of the linearization,
//! * [`spectral`] solves the cubic dispersion relation and classifies the
//!   gain regime,
//! * [`propagator`] builds the 3x3 Bogoliubov time-evolution map,
//! * [`moments`] evaluates every observable (intensities, coherence
//!   functions, correlation bounds, quadrature uncertainties, bunching) by
//!   Wick contraction over the Gaussian initial state,
//! * [`oracle`] evolves the same Hamiltonian exactly in a truncated Fock
//!   space and recomputes the observables with no Gaussian assumption.
//!
//! Everything is `no_std` + `alloc` compatible; the `std` feature (default)
//! only forwards to the numeric dependencies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod model;
pub mod moments;
pub mod oracle;
pub mod propagator;
pub mod spectral;

mod error;

pub use error::{Error, Result};
pub use moments::{CrossStats, Mode, ObservablesRecord};
pub use spectral::Regime;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex 3x3 matrix (mode space).
pub type CMat3 = nalgebra::Matrix3<C64>;
/// Complex 3-vector (mode space).
pub type CVec3 = nalgebra::Vector3<C64>;
