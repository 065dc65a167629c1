//! Laboratory parameters and their reduction to the dimensionless control
//! plane `(chi, delta)`, plus the linearization validity monitor.
//!
//! The control parameters follow from cavity QED inputs: the single-photon
//! coupling `g = d * sqrt(c k / (2 eps0 L S))`, the two-photon recoil
//! frequency `omega_r = hbar K^2 / 2m` with `K = k0 + k` for counterpropagating
//! pump and probe, and from these
//!
//! ```text
//! chi   = |g| |Omega0| sqrt(N) / (8 omega_r |Delta|)
//! delta = (omega0 - c k) / omega_r
//! ```
//!
//! Phases of `g` and `Omega0` and the sign of `Delta` are absorbed into the
//! definitions of the slowly varying mode operators, so `chi >= 0` always.

// Inherent f64 math methods live in std; the Float trait supplies them when
// building without it.
#[allow(unused_imports)]
use num_traits::Float;

use crate::moments::intensities;
use crate::propagator::propagate_exact;
use crate::spectral::SpectralData;
use crate::{C64, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Laboratory-frame description of the cavity, pump, and atomic sample.
///
/// Units: SI throughout (`pump_rabi` and `detuning` in rad/s, wavenumbers in
/// 1/m). `atom_count` is dimensionless but kept as `f64`; condensates are
/// large enough that integrality never matters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub dipole_moment: f64,
    pub cavity_length: f64,
    pub mode_cross_section: f64,
    /// Atom-pump detuning Delta (nonzero; sign is absorbed).
    pub detuning: f64,
    /// Pump Rabi frequency Omega0 (complex; only |Omega0| matters).
    pub pump_rabi: C64,
    pub pump_frequency: f64,
    pub probe_wavenumber: f64,
    pub pump_wavenumber: f64,
    pub atom_count: f64,
    pub atom_mass: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dipole_moment", self.dipole_moment),
            ("cavity_length", self.cavity_length),
            ("mode_cross_section", self.mode_cross_section),
            ("pump_frequency", self.pump_frequency),
            ("probe_wavenumber", self.probe_wavenumber),
            ("pump_wavenumber", self.pump_wavenumber),
            ("atom_count", self.atom_count),
            ("atom_mass", self.atom_mass),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and > 0",
                });
            }
        }
        if self.detuning == 0.0 || !self.detuning.is_finite() {
            return Err(Error::InvalidParameter {
                name: "detuning",
                reason: "adiabatic elimination requires a nonzero atom-pump detuning",
            });
        }
        if !self.pump_rabi.re.is_finite() || !self.pump_rabi.im.is_finite() {
            return Err(Error::InvalidParameter {
                name: "pump_rabi",
                reason: "must be finite",
            });
        }
        // k0 + k > 0 is implied by the positivity checks, but the recoil
        // momentum is the quantity everything hangs off, so test it directly.
        if !(self.pump_wavenumber + self.probe_wavenumber > 0.0) {
            return Err(Error::InvalidParameter {
                name: "pump_wavenumber",
                reason: "recoil momentum k0 + k must be > 0",
            });
        }
        Ok(())
    }
}

/// Dimensionless control parameters of the three-mode model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Effective coupling, `>= 0`.
    pub chi: f64,
    /// Pump-probe detuning in recoil units.
    pub delta: f64,
    /// Injected probe coherent amplitude; zero for the spontaneous case.
    pub alpha: C64,
}

impl ModelParams {
    pub fn new(chi: f64, delta: f64, alpha: C64) -> Result<Self> {
        if !(chi >= 0.0) || !chi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "chi",
                reason: "must be finite and >= 0",
            });
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "must be finite",
            });
        }
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "must be finite",
            });
        }
        Ok(Self { chi, delta, alpha })
    }

    /// Spontaneous (vacuum-seeded) configuration.
    pub fn spontaneous(chi: f64, delta: f64) -> Result<Self> {
        Self::new(chi, delta, C64::new(0.0, 0.0))
    }
}

/// Output of [`derive_model`]: the control parameters plus the two
/// dimensionful scales they were built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedModel {
    pub chi: f64,
    pub delta: f64,
    /// Recoil frequency `hbar K^2 / 2m` in rad/s.
    pub recoil_frequency: f64,
    /// Magnitude of the probe-mode coupling `g` in rad/s.
    pub coupling_g: f64,
}

/// Reduces laboratory inputs to `(chi, delta)`.
pub fn derive_model(phys: &PhysicalParams) -> Result<DerivedModel> {
    phys.validate()?;
    let recoil_momentum = phys.pump_wavenumber + phys.probe_wavenumber;
    let recoil_frequency = HBAR * recoil_momentum * recoil_momentum / (2.0 * phys.atom_mass);
    let coupling_g = phys.dipole_moment
        * (SPEED_OF_LIGHT * phys.probe_wavenumber
            / (2.0 * VACUUM_PERMITTIVITY * phys.cavity_length * phys.mode_cross_section))
            .sqrt();
    let chi = coupling_g * phys.pump_rabi.norm() * phys.atom_count.sqrt()
        / (8.0 * recoil_frequency * phys.detuning.abs());
    let probe_frequency = SPEED_OF_LIGHT * phys.probe_wavenumber;
    let delta = (phys.pump_frequency - probe_frequency) / recoil_frequency;
    Ok(DerivedModel {
        chi,
        delta,
        recoil_frequency,
        coupling_g,
    })
}

/// Largest `tau` on the grid `0, tau_step, 2*tau_step, ..  <= tau_max` for
/// which the linearization constraints have held at every grid point so far:
/// side-mode depletion `(I_- + I_+)/N <= fraction_eps` and probe occupation
/// `I_a <= probe_cap`. Returns `f64::INFINITY` if no grid point violates
/// them.
pub fn validity_horizon(
    spectral: &SpectralData,
    model: &ModelParams,
    atom_count: f64,
    probe_cap: f64,
    fraction_eps: f64,
    tau_max: f64,
    tau_step: f64,
) -> Result<f64> {
    if !(fraction_eps > 0.0 && fraction_eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "fraction_eps",
            reason: "must lie in (0, 1)",
        });
    }
    if !(atom_count > 0.0) {
        return Err(Error::InvalidParameter {
            name: "atom_count",
            reason: "must be > 0",
        });
    }
    if !(tau_step > 0.0) || !(tau_max >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau_step",
            reason: "grid needs tau_step > 0 and tau_max >= 0",
        });
    }
    let mut last_ok: Option<f64> = None;
    let mut k: u64 = 0;
    loop {
        let tau = k as f64 * tau_step;
        if tau > tau_max {
            return Ok(f64::INFINITY);
        }
        let u = propagate_exact(spectral, tau)?;
        let [i_a, i_minus, i_plus] = intensities(&u, model.alpha);
        let depleted = (i_minus + i_plus) / atom_count > fraction_eps;
        if depleted || i_a > probe_cap {
            return Ok(last_ok.unwrap_or(0.0));
        }
        last_ok = Some(tau);
        k += 1;
    }
}
