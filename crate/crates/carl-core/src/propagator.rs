//! Time-evolution coefficient matrices `u_ij(tau)`.
//!
//! The slow operators evolve linearly, `d_i(tau) = sum_j u_ij(tau) d_j(0)`,
//! with `U(tau) = exp(i M tau)`. Because the basis mixes annihilation and
//! creation operators, `U` is not unitary but pseudo-unitary: it preserves
//! the commutation metric `eta = diag(+1, -1, +1)` via `U eta U^dag = eta`.
//!
//! Three construction paths:
//! - [`propagate_exact`]: eigendecomposition, `V diag(e^{i lambda tau}) V^-1`.
//! - [`propagate_series`]: scaling-and-squaring matrix exponential; slower
//!   but defined even on the threshold curve where the spectrum degenerates.
//! - [`propagate_asymptotic`]: the dominant-branch approximation
//!   `zeta e^{(gain + i osc) tau}`, valid deep in the exponential regime.

// Inherent f64 math methods live in std; the Float trait supplies them when
// building without it.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::ModelParams;
use crate::spectral::{coupling_matrix, Regime, SpectralData};
use crate::{C64, CMat3, Error, Result};

/// Propagator snapshot at one dimensionless time.
///
/// Index order is `(a, -, +)`: probe annihilation, minus-side-mode creation,
/// plus-side-mode annihilation.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    pub tau: f64,
    pub entries: CMat3,
}

/// Commutation metric of the `(d_a, d_-, d_+)` basis.
pub fn metric() -> CMat3 {
    let mut eta = CMat3::zeros();
    eta[(0, 0)] = C64::new(1.0, 0.0);
    eta[(1, 1)] = C64::new(-1.0, 0.0);
    eta[(2, 2)] = C64::new(1.0, 0.0);
    eta
}

/// Frobenius norm of `U eta U^dag - eta`; zero for a map that preserves the
/// mode commutators.
pub fn pseudo_unitarity_defect(u: &PropagatorMatrix) -> f64 {
    let eta = metric();
    (u.entries * eta * u.entries.adjoint() - eta).norm()
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: "must be finite and >= 0",
        });
    }
    Ok(())
}

/// `U(tau) = V diag(e^{i lambda_k tau}) V^-1` from a precomputed
/// eigendecomposition.
pub fn propagate_exact(spectral: &SpectralData, tau: f64) -> Result<PropagatorMatrix> {
    check_tau(tau)?;
    if spectral.regime == Regime::Marginal {
        let gap = (spectral.eigenvalues[1] - spectral.eigenvalues[2]).norm();
        return Err(Error::DegenerateSpectrum { gap });
    }
    if tau == 0.0 {
        // V * V^-1 only reaches the identity up to roundoff; the zero-time
        // propagator is the identity exactly.
        return Ok(PropagatorMatrix {
            tau,
            entries: CMat3::identity(),
        });
    }
    let mut phases = CMat3::zeros();
    for k in 0..3 {
        let i_lambda_tau = C64::new(0.0, 1.0) * spectral.eigenvalues[k] * tau;
        phases[(k, k)] = i_lambda_tau.exp();
    }
    Ok(PropagatorMatrix {
        tau,
        entries: spectral.vectors * phases * spectral.inverse_vectors,
    })
}

/// `U(tau) = exp(i M tau)` by scaling and squaring, with a Taylor kernel on
/// the scaled matrix. Defined for every `(chi, delta)` including degenerate
/// spectra.
pub fn propagate_series(model: &ModelParams, tau: f64) -> Result<PropagatorMatrix> {
    check_tau(tau)?;
    let a = coupling_matrix(model) * C64::new(0.0, tau);
    Ok(PropagatorMatrix {
        tau,
        entries: matrix_exp(&a),
    })
}

fn matrix_exp(a: &CMat3) -> CMat3 {
    // Halve until the norm is small enough that the Taylor series converges
    // in a handful of terms, then square back up.
    let norm = a.norm();
    let mut squarings = 0u32;
    let mut scale = 1.0f64;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a * C64::new(scale, 0.0);

    let mut result = CMat3::identity();
    let mut term = CMat3::identity();
    for k in 1..=24 {
        term = term * scaled / C64::new(k as f64, 0.0);
        result += term;
        if term.norm() < 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

/// Dominant-branch approximation `zeta_ij e^{(gain + i oscillation) tau}`.
///
/// Only meaningful when a growing branch exists, so stable and marginal
/// spectra are refused.
pub fn propagate_asymptotic(spectral: &SpectralData, tau: f64) -> Result<PropagatorMatrix> {
    check_tau(tau)?;
    if spectral.regime != Regime::Unstable {
        return Err(Error::NoGrowingBranch {
            regime: spectral.regime,
        });
    }
    let envelope = C64::new(spectral.gain, spectral.oscillation) * tau;
    Ok(PropagatorMatrix {
        tau,
        entries: spectral.weights * envelope.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigensystem;

    fn spectral(chi: f64, delta: f64) -> SpectralData {
        eigensystem(&ModelParams::spontaneous(chi, delta).unwrap()).unwrap()
    }

    fn max_entry_diff(a: &CMat3, b: &CMat3) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        worst
    }

    #[test]
    fn exact_at_zero_is_identity() {
        let u = propagate_exact(&spectral(1.0, 0.0), 0.0).unwrap();
        assert!((u.entries - CMat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn series_at_zero_is_identity() {
        let model = ModelParams::spontaneous(0.7, 1.3).unwrap();
        let u = propagate_series(&model, 0.0).unwrap();
        assert_eq!(u.entries, CMat3::identity());
    }

    #[test]
    fn rejects_negative_time() {
        assert!(propagate_exact(&spectral(1.0, 0.0), -0.5).is_err());
        let model = ModelParams::spontaneous(1.0, 0.0).unwrap();
        assert!(propagate_series(&model, f64::NAN).is_err());
    }

    #[test]
    fn decoupled_evolution_is_pure_phase() {
        let tau = 1.3;
        let u = propagate_exact(&spectral(0.0, 0.37), tau).unwrap();
        let expect = [
            C64::new(0.0, 0.37 * tau).exp(),
            C64::new(0.0, tau).exp(),
            C64::new(0.0, -tau).exp(),
        ];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { expect[i] } else { C64::new(0.0, 0.0) };
                assert!((u.entries[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn resonant_propagator_fixture() {
        let u = propagate_exact(&spectral(1.0, 0.0), 1.0).unwrap();
        let checks = [
            ((0, 0), C64::new(0.9946396161153602, 0.3170365781559543)),
            ((0, 1), C64::new(0.5375240099598169, -0.8248206543277866)),
            ((1, 0), C64::new(-0.5375240099598169, 0.8248206543277865)),
            ((2, 1), C64::new(-0.4596017451924648, -0.01588915610583574)),
        ];
        for ((i, j), want) in checks {
            assert!(
                (u.entries[(i, j)] - want).norm() < 1e-12,
                "u[{i}][{j}] = {}",
                u.entries[(i, j)]
            );
        }
    }

    #[test]
    fn pseudo_unitarity_and_determinant() {
        for &(chi, delta) in &[(1.0, 0.0), (0.3, 1.0), (1.8, -2.5), (0.0, 0.4)] {
            for &tau in &[0.1, 1.0, 4.0] {
                let u = propagate_exact(&spectral(chi, delta), tau).unwrap();
                assert!(pseudo_unitarity_defect(&u) < 1e-10, "chi={chi} delta={delta}");
                let det = u.entries.determinant();
                let want = C64::new(0.0, delta * tau).exp();
                assert!((det - want).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn series_matches_exact() {
        for &(chi, delta) in &[(1.0, 0.0), (0.3, 1.0), (2.0, 3.5)] {
            let model = ModelParams::spontaneous(chi, delta).unwrap();
            let exact = propagate_exact(&spectral(chi, delta), 1.0).unwrap();
            let series = propagate_series(&model, 1.0).unwrap();
            let diff = max_entry_diff(&exact.entries, &series.entries);
            assert!(diff < 1e-8, "chi={chi} delta={delta} diff={diff}");
        }
    }

    #[test]
    fn series_survives_threshold_degeneracy() {
        let model = ModelParams::spontaneous(0.4386913376508308, 0.0).unwrap();
        let u = propagate_series(&model, 1.0).unwrap();
        assert!(pseudo_unitarity_defect(&u) < 1e-10);
        let det = u.entries.determinant();
        assert!((det - C64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn group_property() {
        let s = spectral(1.0, 0.5);
        let u1 = propagate_exact(&s, 0.9).unwrap();
        let u2 = propagate_exact(&s, 2.3).unwrap();
        let u12 = propagate_exact(&s, 3.2).unwrap();
        let prod = u1.entries * u2.entries;
        assert!((prod - u12.entries).norm() / u12.entries.norm() < 1e-9);
    }

    #[test]
    fn norm_growth_rate_matches_gain() {
        let s = spectral(1.0, 0.0);
        let n4 = propagate_exact(&s, 4.0).unwrap().entries.norm();
        let n6 = propagate_exact(&s, 6.0).unwrap().entries.norm();
        let slope = (n6.ln() - n4.ln()) / 2.0;
        assert!((slope - s.gain).abs() / s.gain < 0.01, "slope {slope} vs {}", s.gain);
    }

    #[test]
    fn asymptote_converges_monotonically() {
        let s = spectral(1.0, 0.0);
        let rel_err = |tau: f64| {
            let exact = propagate_exact(&s, tau).unwrap().entries;
            let asym = propagate_asymptotic(&s, tau).unwrap().entries;
            (exact - asym).norm() / exact.norm()
        };
        let (e5, e10) = (rel_err(5.0), rel_err(10.0));
        assert!(e10 <= e5, "e5={e5} e10={e10}");
        assert!(e10 < 1e-3);
    }

    #[test]
    fn asymptote_at_zero_is_weights_not_identity() {
        let s = spectral(1.0, 0.0);
        let u = propagate_asymptotic(&s, 0.0).unwrap();
        assert_eq!(u.entries, s.weights);
        assert!((u.entries - CMat3::identity()).norm() > 0.5);
    }

    #[test]
    fn asymptote_refuses_stable_spectrum() {
        let s = spectral(0.0, 0.37);
        assert!(matches!(
            propagate_asymptotic(&s, 1.0),
            Err(Error::NoGrowingBranch { regime: Regime::Stable })
        ));
    }
}
