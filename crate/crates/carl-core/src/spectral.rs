//! Eigen-analysis of the three-mode coupling matrix.
//!
//! In the rotating frame the slow operators `(d_a, d_-, d_+) = (a, c_-^dag,
//! c_+)` obey `i d/dtau d = M d` with
//!
//! ```text
//!     | delta  -chi  -chi |
//! M = |  chi     1     0  |
//!     | -chi     0    -1  |
//! ```
//!
//! so every time-dependence is a combination of `e^{i lambda_k tau}` over the
//! roots of `det(M - lambda I) = 0`, the real cubic
//! `lambda^3 - delta lambda^2 - lambda + delta + 2 chi^2 = 0`.
//!
//! A conjugate root pair makes the system parametrically unstable: the root
//! with the most negative imaginary part drives exponential growth. This
//! module finds the roots, classifies the regime, and packages the
//! eigendecomposition quantities the propagator and the asymptotic formulas
//! consume.

use nalgebra::{Matrix3, Vector3};
// Inherent f64 math methods live in std; the Float trait supplies them when
// building without it.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::ModelParams;
use crate::{C64, CMat3, Error, Result};

/// Conjugate pairs with |Im| above this are treated as genuinely complex.
const UNSTABLE_IM_TOL: f64 = 1e-8;
/// Imaginary parts below this (times the eigenvalue scale) are roundoff.
const STABLE_IM_TOL: f64 = 1e-12;
/// Below this eigenvalue gap the inverse eigenvector matrix is too
/// ill-conditioned for the asymptotic weights to mean anything.
pub(crate) const DEGENERACY_GAP: f64 = 1e-8;

/// Stability classification of the mode spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// All eigenvalues real: bounded, oscillatory dynamics.
    Stable,
    /// A conjugate pair exists: exponential gain at rate `gain`.
    Unstable,
    /// Within tolerance of a spectrum degeneracy (threshold curve).
    Marginal,
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Regime::Stable => "STABLE",
            Regime::Unstable => "UNSTABLE",
            Regime::Marginal => "MARGINAL",
        })
    }
}

/// Everything the propagator needs from the eigenproblem of `M`.
///
/// Eigenvalues are ordered so that index 2 holds the exponentially growing
/// branch (most negative imaginary part; time dependence is
/// `e^{i lambda tau}`). Columns of `vectors` are the matching eigenvectors,
/// each of unit Euclidean norm with its first nonvanishing component real
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: [C64; 3],
    pub vectors: CMat3,
    pub inverse_vectors: CMat3,
    /// Growth rate of the dominant branch, `max(0, -Im lambda_3)`.
    pub gain: f64,
    /// Oscillation frequency of the dominant branch, `Re lambda_3`.
    pub oscillation: f64,
    /// Asymptotic weights `zeta_ij = v_{i3} v^{-1}_{3j}`; the large-`tau`
    /// propagator approaches `zeta e^{(gain + i oscillation) tau}`.
    pub weights: CMat3,
    /// Fluctuation ratio `|v^{-1}_{3,-} / v^{-1}_{3,a}|`, defined only in the
    /// unstable regime where the growing branch exists.
    pub fluctuation_f: Option<f64>,
    pub regime: Regime,
}

/// The coupling matrix `M` in the `(d_a, d_-, d_+)` basis.
pub fn coupling_matrix(model: &ModelParams) -> CMat3 {
    let chi = C64::new(model.chi, 0.0);
    let delta = C64::new(model.delta, 0.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Matrix3::new(
        delta, -chi, -chi, //
        chi, one, zero, //
        -chi, zero, -one,
    )
}

/// Discriminant of the characteristic cubic; positive means three distinct
/// real roots (stable), negative means one real root plus a conjugate pair
/// (unstable), zero is the threshold curve.
pub fn discriminant(chi: f64, delta: f64) -> f64 {
    // lambda^3 + p lambda^2 + q lambda + r
    let p = -delta;
    let q = -1.0;
    let r = delta + 2.0 * chi * chi;
    18.0 * p * q * r - 4.0 * p.powi(3) * r + p.powi(2) * q.powi(2) - 4.0 * q.powi(3)
        - 27.0 * r.powi(2)
}

fn cubic_value(delta: f64, chi: f64, z: C64) -> C64 {
    let c0 = C64::new(delta + 2.0 * chi * chi, 0.0);
    ((z - C64::new(delta, 0.0)) * z - C64::new(1.0, 0.0)) * z + c0
}

fn cubic_derivative(delta: f64, z: C64) -> C64 {
    z * z * 3.0 - z * (2.0 * delta) - C64::new(1.0, 0.0)
}

/// Roots of the characteristic cubic, ordered so the exponentially growing
/// branch (most negative imaginary part) is last. Complex roots come back as
/// an exact conjugate pair; spectra that are real to roundoff come back
/// exactly real.
pub fn characteristic_roots(model: &ModelParams) -> [C64; 3] {
    let (chi, delta) = (model.chi, model.delta);

    // Zero coupling leaves the matrix diagonal, so the spectrum is read off
    // exactly. The numeric path would split the degeneracies at |delta| = 1
    // into conjugate pairs with sqrt(epsilon)-sized imaginary parts and
    // misreport a decoupled system as marginal.
    if chi == 0.0 {
        let mut roots = [
            C64::new(delta, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ];
        sort_roots(&mut roots);
        return roots;
    }

    // Companion matrix of lambda^3 - delta lambda^2 - lambda + (delta + 2chi^2).
    let c0 = delta + 2.0 * chi * chi;
    let companion = Matrix3::new(
        0.0, 0.0, -c0, //
        1.0, 0.0, 1.0, //
        0.0, 1.0, delta,
    );
    let raw: Vector3<C64> = companion.complex_eigenvalues();
    let mut roots = [raw[0], raw[1], raw[2]];

    // Newton polish; keep a step only when it reduces the residual.
    for root in &mut roots {
        for _ in 0..2 {
            let dp = cubic_derivative(delta, *root);
            if dp.norm() < 1e-12 {
                break;
            }
            let candidate = *root - cubic_value(delta, chi, *root) / dp;
            if cubic_value(delta, chi, candidate).norm() < cubic_value(delta, chi, *root).norm() {
                *root = candidate;
            }
        }
    }

    // The cubic is real, so enforce the conjugate symmetry of its roots
    // exactly. An all-real triple (up to roundoff) just drops its imaginary
    // dust; otherwise the two roots closest to mutual conjugates are averaged
    // into an exact pair and the leftover root keeps only its real part
    // (imaginary parts of a real cubic's roots sum to zero).
    let scale = roots.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let max_im = roots.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
    let mut symmetrized = if max_im <= STABLE_IM_TOL * scale {
        [
            C64::new(roots[0].re, 0.0),
            C64::new(roots[1].re, 0.0),
            C64::new(roots[2].re, 0.0),
        ]
    } else {
        let k = (0..3)
            .max_by(|&a, &b| roots[a].im.abs().partial_cmp(&roots[b].im.abs()).unwrap())
            .unwrap();
        let j = (0..3)
            .filter(|&i| i != k)
            .min_by(|&a, &b| {
                let da = (roots[a] - roots[k].conj()).norm();
                let db = (roots[b] - roots[k].conj()).norm();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let m = 3 - k - j;
        let pair = (roots[k] + roots[j].conj()) * 0.5;
        [C64::new(roots[m].re, 0.0), pair, pair.conj()]
    };

    sort_roots(&mut symmetrized);
    symmetrized
}

/// |Im| ascending, then Im descending, then Re ascending: puts the real root
/// first and the growing branch (most negative Im) last; an all-real
/// spectrum is simply sorted by value.
fn sort_roots(roots: &mut [C64; 3]) {
    roots.sort_by(|a, b| {
        a.im.abs()
            .partial_cmp(&b.im.abs())
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
            .then(a.re.partial_cmp(&b.re).unwrap())
    });
}

/// Classifies a root triple by how far its imaginary structure is from zero.
pub fn classify_regime(roots: &[C64; 3]) -> Regime {
    let scale = roots.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let max_im = roots.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
    if max_im > UNSTABLE_IM_TOL {
        Regime::Unstable
    } else if max_im <= STABLE_IM_TOL * scale {
        Regime::Stable
    } else {
        Regime::Marginal
    }
}

fn min_gap(roots: &[C64; 3]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..3 {
        for j in (i + 1)..3 {
            gap = gap.min((roots[i] - roots[j]).norm());
        }
    }
    gap
}

/// Eigenvector of `M` for eigenvalue `lambda`, as the complex (unconjugated)
/// cross product of two rows of `M - lambda I`; the best-conditioned row pair
/// wins.
fn eigenvector(m: &CMat3, lambda: C64) -> CVec3Local {
    let mut a = *m;
    for d in 0..3 {
        a[(d, d)] -= lambda;
    }
    let row = |i: usize| [a[(i, 0)], a[(i, 1)], a[(i, 2)]];
    let cross = |u: [C64; 3], v: [C64; 3]| {
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let candidates = [
        cross(row(0), row(1)),
        cross(row(0), row(2)),
        cross(row(1), row(2)),
    ];
    let norm = |v: &[C64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if norm(c) > norm(&best) {
            best = *c;
        }
    }

    let n = norm(&best).sqrt();
    for z in &mut best {
        *z /= n;
    }
    // Fix the arbitrary overall phase: first component of visible size is
    // made real positive.
    if let Some(lead) = best.iter().find(|z| z.norm() > 1e-12) {
        let phase = lead.conj() / lead.norm();
        for z in &mut best {
            *z *= phase;
        }
    }
    best
}

type CVec3Local = [C64; 3];

/// Full eigendecomposition of the coupling matrix.
///
/// Fails with [`Error::DegenerateSpectrum`] when the regime is marginal or
/// any two eigenvalues sit closer than the degeneracy gap, since the inverse
/// eigenvector matrix is then numerically meaningless; callers should fall
/// back to the series propagator.
pub fn eigensystem(model: &ModelParams) -> Result<SpectralData> {
    let roots = characteristic_roots(model);
    let regime = classify_regime(&roots);
    let gap = min_gap(&roots);
    if regime == Regime::Marginal || gap < DEGENERACY_GAP {
        return Err(Error::DegenerateSpectrum { gap });
    }

    let m = coupling_matrix(model);
    let mut vectors = CMat3::zeros();
    for (k, &lambda) in roots.iter().enumerate() {
        let v = eigenvector(&m, lambda);
        for i in 0..3 {
            vectors[(i, k)] = v[i];
        }
    }
    let inverse_vectors = vectors
        .try_inverse()
        .ok_or(Error::DegenerateSpectrum { gap })?;

    let growing = roots[2];
    let gain = (-growing.im).max(0.0);
    let oscillation = growing.re;

    let mut weights = CMat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            weights[(i, j)] = vectors[(i, 2)] * inverse_vectors[(2, j)];
        }
    }

    let fluctuation_f = if regime == Regime::Unstable {
        Some(inverse_vectors[(2, 1)].norm() / inverse_vectors[(2, 0)].norm())
    } else {
        None
    };

    Ok(SpectralData {
        eigenvalues: roots,
        vectors,
        inverse_vectors,
        gain,
        oscillation,
        weights,
        fluctuation_f,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(chi: f64, delta: f64) -> ModelParams {
        ModelParams::spontaneous(chi, delta).unwrap()
    }

    fn residual(chi: f64, delta: f64, z: C64) -> f64 {
        cubic_value(delta, chi, z).norm()
    }

    #[test]
    fn decoupled_roots_factor() {
        let roots = characteristic_roots(&model(0.0, 0.37));
        let expected = [-1.0, 0.37, 1.0];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r.re - e).abs() < 1e-12 && r.im == 0.0, "{r} vs {e}");
        }
    }

    #[test]
    fn zero_coupling_spectrum_is_exact_at_crossings() {
        // The decoupled crossings must stay exactly real rather than pick up
        // conjugate-pair dust from the numeric root hunt.
        for &(delta, expected) in &[
            (1.0, [-1.0, 1.0, 1.0]),
            (-1.0, [-1.0, -1.0, 1.0]),
            (0.0, [-1.0, 0.0, 1.0]),
        ] {
            let roots = characteristic_roots(&model(0.0, delta));
            for (r, e) in roots.iter().zip(expected) {
                assert_eq!(*r, C64::new(e, 0.0), "delta={delta}");
            }
            assert_eq!(classify_regime(&roots), Regime::Stable);
        }
    }

    #[test]
    fn resonant_roots_fixture() {
        let roots = characteristic_roots(&model(1.0, 0.0));
        assert!((roots[0].re - -1.5213797068045676).abs() < 1e-12);
        assert_eq!(roots[0].im, 0.0);
        assert_eq!(roots[1], roots[2].conj());
        assert!((roots[2].re - 0.7606898534022835).abs() < 1e-12);
        assert!((roots[2].im - -0.8578736265951785).abs() < 1e-12);
    }

    #[test]
    fn roots_satisfy_cubic_on_grid() {
        for i in 0..=8 {
            let chi = 0.25 * i as f64;
            for j in 0..=16 {
                let delta = -4.0 + 0.5 * j as f64;
                let roots = characteristic_roots(&model(chi, delta));
                for r in roots {
                    let tol = 1e-10 * r.norm().powi(3).max(1.0);
                    assert!(
                        residual(chi, delta, r) <= tol,
                        "chi={chi} delta={delta} root={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn vieta_relations_on_grid() {
        for &(chi, delta) in &[(0.3, 1.0), (1.0, 0.0), (2.0, -3.5), (0.0, 0.2), (1.7, 4.0)] {
            let roots = characteristic_roots(&model(chi, delta));
            let sum: C64 = roots.iter().sum();
            let prod: C64 = roots.iter().product();
            let pair_sum = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
            let scale = roots.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
            assert!((sum - C64::new(delta, 0.0)).norm() < 1e-9 * scale);
            assert!((prod - C64::new(-(delta + 2.0 * chi * chi), 0.0)).norm() < 1e-9 * scale.powi(3));
            assert!((pair_sum - C64::new(-1.0, 0.0)).norm() < 1e-9 * scale.powi(2));
        }
    }

    #[test]
    fn classify_examples() {
        let roots = |chi: f64, delta: f64| characteristic_roots(&model(chi, delta));
        assert_eq!(classify_regime(&roots(0.0, 0.37)), Regime::Stable);
        assert_eq!(classify_regime(&roots(1.0, 0.0)), Regime::Unstable);
        assert_eq!(classify_regime(&roots(0.1, 1.0)), Regime::Unstable);
    }

    #[test]
    fn threshold_bisection_is_marginal() {
        // On resonance the discriminant is 4 - 108 chi^4; bisect its sign
        // change and compare with the closed form 27^(-1/4).
        let (mut lo, mut hi) = (0.4f64, 0.5f64);
        assert!(discriminant(lo, 0.0) > 0.0 && discriminant(hi, 0.0) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if discriminant(mid, 0.0) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let chi_star = 0.5 * (lo + hi);
        assert!((chi_star - 0.4386913376508308).abs() < 1e-12);
        let roots = characteristic_roots(&model(chi_star, 0.0));
        assert_eq!(classify_regime(&roots), Regime::Marginal);
        assert!(eigensystem(&model(chi_star, 0.0)).is_err());
    }

    #[test]
    fn marginal_points_still_satisfy_residual_bound() {
        let roots = characteristic_roots(&model(0.4386913376508308, 0.0));
        for r in roots {
            let tol = 1e-10 * r.norm().powi(3).max(1.0);
            assert!(residual(0.4386913376508308, 0.0, r) <= tol);
        }
    }

    #[test]
    fn gain_is_zero_without_coupling() {
        for j in 0..=20 {
            let delta = -4.0 + 0.4 * j as f64;
            if (delta.abs() - 1.0).abs() < 0.05 || delta.abs() < 0.05 {
                // skip the exact crossings where the decoupled spectrum
                // degenerates (delta = 0, +-1)
                continue;
            }
            let spectral = eigensystem(&model(0.0, delta)).unwrap();
            assert_eq!(spectral.gain, 0.0);
            assert_eq!(spectral.regime, Regime::Stable);
        }
    }

    #[test]
    fn decoupled_eigensystem_is_permutation() {
        let spectral = eigensystem(&model(0.0, 0.37)).unwrap();
        // Sorted eigenvalues (-1, 0.37, 1) pick out modes (+, a, -).
        let expected_cols = [2usize, 0, 1];
        for (k, &row) in expected_cols.iter().enumerate() {
            for i in 0..3 {
                let want = if i == row { 1.0 } else { 0.0 };
                assert!((spectral.vectors[(i, k)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        assert_eq!(spectral.fluctuation_f, None);
    }

    #[test]
    fn degenerate_decoupled_spectrum_is_rejected() {
        assert!(matches!(
            eigensystem(&model(0.0, 1.0)),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn eigensystem_reconstructs_coupling_matrix() {
        for &(chi, delta) in &[(1.0, 0.0), (0.3, 1.0), (0.5, -2.0), (2.0, 3.0)] {
            let m = model(chi, delta);
            let spectral = eigensystem(&m).unwrap();
            let mut diag = CMat3::zeros();
            for k in 0..3 {
                diag[(k, k)] = spectral.eigenvalues[k];
            }
            let rebuilt = spectral.vectors * diag * spectral.inverse_vectors;
            let target = coupling_matrix(&m);
            let err = (rebuilt - target).norm();
            assert!(err < 1e-9, "chi={chi} delta={delta} err={err}");
        }
    }

    #[test]
    fn inverse_really_inverts() {
        let spectral = eigensystem(&model(1.3, -0.7)).unwrap();
        let prod = spectral.vectors * spectral.inverse_vectors;
        assert!((prod - CMat3::identity()).norm() < 1e-10);
    }

    #[test]
    fn resonant_gain_and_weights_fixture() {
        let spectral = eigensystem(&model(1.0, 0.0)).unwrap();
        assert!((spectral.gain - 0.8578736265951785).abs() < 1e-12);
        assert!((spectral.oscillation - 0.7606898534022835).abs() < 1e-12);
        let f = spectral.fluctuation_f.unwrap();
        assert!((f - 1.1228044591122193).abs() < 1e-12);
        let checks = [
            ((0, 0), C64::new(0.3894142866949413, -0.14918355408808753)),
            ((1, 0), C64::new(0.04385920653149368, 0.46616451123093694)),
            ((2, 2), C64::new(0.09319079003621154, 0.05597792807737012)),
        ];
        for ((i, j), want) in checks {
            assert!(
                (spectral.weights[(i, j)] - want).norm() < 1e-12,
                "zeta[{i}][{j}] = {}",
                spectral.weights[(i, j)]
            );
        }
    }

    #[test]
    fn fluctuation_near_unity_at_peak_gain() {
        // Soft physics check: at the detuning that maximizes the gain for
        // chi = 0.2 (400-point scan of [-4, 4]), the fluctuation ratio should
        // be close to 1.
        let mut best = (0.0f64, 0.0f64);
        for j in 0..400 {
            let delta = -4.0 + 8.0 * j as f64 / 399.0;
            if let Ok(spectral) = eigensystem(&model(0.2, delta)) {
                if spectral.gain > best.0 {
                    best = (spectral.gain, delta);
                }
            }
        }
        let spectral = eigensystem(&model(0.2, best.1)).unwrap();
        let f = spectral.fluctuation_f.unwrap();
        assert!((f - 1.0).abs() <= 0.2, "f = {f} at delta = {}", best.1);
        assert!((best.1 - 0.9724310776942353).abs() < 1e-12);
        assert!((spectral.gain - 0.19897622926347652).abs() < 1e-12);
    }

    #[test]
    fn discriminant_sign_matches_classification() {
        for i in 0..=10 {
            let chi = 0.1 * i as f64;
            for j in 0..=16 {
                let delta = -4.0 + 0.5 * j as f64;
                let d = discriminant(chi, delta);
                if d.abs() < 1e-6 {
                    continue;
                }
                let regime = classify_regime(&characteristic_roots(&model(chi, delta)));
                if d > 0.0 {
                    assert_eq!(regime, Regime::Stable, "chi={chi} delta={delta}");
                } else {
                    assert_eq!(regime, Regime::Unstable, "chi={chi} delta={delta}");
                }
            }
        }
    }
}
