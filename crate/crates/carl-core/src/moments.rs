//! Observables of the Gaussian state reached from `|alpha, 0, 0>`.
//!
//! The initial state is coherent in the probe and vacuum in both side modes,
//! so it is Gaussian, and the dynamics is linear, so it stays Gaussian. Every
//! expectation value therefore reduces to sums of products of first moments
//! and the initial second-moment contractions, evaluated through the
//! propagator. This module implements that Wick machinery once and derives
//! all the physics from it: intensities, single-mode and cross-mode
//! second-order coherence, the classical (Cauchy-Schwarz) and quantum bounds
//! on the cross correlations, quadrature uncertainties of the mean fields,
//! and the bunching observables.
//!
//! Operators are represented as linear forms over the time-zero basis
//! `z = (d_a, d_-, d_+, d_a^dag, d_-^dag, d_+^dag)`. The only nonzero ordered
//! contractions of `|alpha, 0, 0>` are
//!
//! ```text
//! <delta d_a     delta d_a^dag> = 1
//! <delta d_+     delta d_+^dag> = 1
//! <delta d_-^dag delta d_->     = 1    (d_- = c_-^dag creates a real atom)
//! ```
//!
//! and the physical annihilation operators at time tau are rows of the
//! propagator: `a = row_a`, `c_+ = row_+`, `c_- = (row_-)^dag`.

// Inherent f64 math methods live in std; the Float trait supplies them when
// building without it.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::ModelParams;
use crate::propagator::{propagate_exact, PropagatorMatrix};
use crate::spectral::SpectralData;
use crate::{C64, Error, Result};

/// Intensities below this are treated as exactly zero when normalizing
/// correlation functions (the 0/0 cases at tau = 0).
const INTENSITY_FLOOR: f64 = 1e-14;

/// The three physical modes, in propagator row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Probe cavity field `a`.
    Probe,
    /// Atomic side mode `c_-` (enters the dynamics through its creator).
    Minus,
    /// Atomic side mode `c_+`.
    Plus,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Probe, Mode::Minus, Mode::Plus];

    pub fn index(self) -> usize {
        match self {
            Mode::Probe => 0,
            Mode::Minus => 1,
            Mode::Plus => 2,
        }
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Mode::Probe => "a",
            Mode::Minus => "minus",
            Mode::Plus => "plus",
        })
    }
}

/// Cross-correlation `g2_ij` together with the bounds it is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossStats {
    pub g2: f64,
    /// Classical Cauchy-Schwarz ceiling `sqrt(g2_i g2_j)`.
    pub cs_bound: f64,
    /// Quantum ceiling `sqrt((g2_i + 1/I_i)(g2_j + 1/I_j))`.
    pub quantum_bound: f64,
    /// True when `g2` exceeds the classical ceiling beyond roundoff.
    pub violates_cs: bool,
}

/// Every observable at a single time, with `None` marking quantities that
/// are undefined there (0/0 normalizations, or phases without a mean field).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservablesRecord {
    pub tau: f64,
    pub mean_probe: C64,
    pub mean_minus: C64,
    pub mean_plus: C64,
    pub intensity_a: f64,
    pub intensity_minus: f64,
    pub intensity_plus: f64,
    pub g2_a: Option<f64>,
    pub g2_minus: Option<f64>,
    pub g2_plus: Option<f64>,
    pub cross_aminus: Option<CrossStats>,
    pub cross_aplus: Option<CrossStats>,
    pub cross_minusplus: Option<CrossStats>,
    /// Relative amplitude uncertainty per mode, propagator row order.
    pub amp_uncert: [Option<f64>; 3],
    /// Phase uncertainty per mode, propagator row order.
    pub phase_uncert: [Option<f64>; 3],
    pub bunching_mean: C64,
    pub bunching_intensity: f64,
    pub depletion_fraction: f64,
}

/// Linear form over the time-zero operator basis
/// `(d_a, d_-, d_+, d_a^dag, d_-^dag, d_+^dag)`.
#[derive(Debug, Clone, Copy)]
struct LinForm {
    c: [C64; 6],
}

impl LinForm {
    const ZERO_C: C64 = C64::new(0.0, 0.0);

    fn zero() -> Self {
        LinForm {
            c: [Self::ZERO_C; 6],
        }
    }

    /// Hermitian conjugate: swap the halves and conjugate.
    fn dag(&self) -> Self {
        let mut out = Self::zero();
        for j in 0..3 {
            out.c[j] = self.c[j + 3].conj();
            out.c[j + 3] = self.c[j].conj();
        }
        out
    }

    fn scaled(&self, s: C64) -> Self {
        let mut out = *self;
        for z in &mut out.c {
            *z *= s;
        }
        out
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = *self;
        for (z, w) in out.c.iter_mut().zip(other.c.iter()) {
            *z += *w;
        }
        out
    }
}

/// Annihilation operator of a physical mode at time tau, as a form over the
/// time-zero basis.
fn mode_form(u: &PropagatorMatrix, mode: Mode) -> LinForm {
    let r = mode.index();
    let mut row = LinForm::zero();
    for j in 0..3 {
        row.c[j] = u.entries[(r, j)];
    }
    match mode {
        Mode::Minus => row.dag(),
        _ => row,
    }
}

/// Wick-contraction engine for the initial state `|alpha, 0, 0>`.
struct Wick {
    mu: [C64; 6],
}

impl Wick {
    fn new(alpha: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Wick {
            mu: [alpha, z, z, alpha.conj(), z, z],
        }
    }

    fn mean(&self, f: &LinForm) -> C64 {
        f.c.iter().zip(self.mu.iter()).map(|(a, b)| a * b).sum()
    }

    /// Ordered contraction `<delta F delta G>` over the three nonzero
    /// initial covariances.
    fn contract(f: &LinForm, g: &LinForm) -> C64 {
        f.c[0] * g.c[3] + f.c[2] * g.c[5] + f.c[4] * g.c[1]
    }

    /// `<F G>` for two linear forms.
    fn two(&self, f: &LinForm, g: &LinForm) -> C64 {
        self.mean(f) * self.mean(g) + Self::contract(f, g)
    }

    /// `<F1 F2 F3 F4>` by the Gaussian moment expansion.
    fn four(&self, fs: [&LinForm; 4]) -> C64 {
        let m: [C64; 4] = [
            self.mean(fs[0]),
            self.mean(fs[1]),
            self.mean(fs[2]),
            self.mean(fs[3]),
        ];
        let c = |i: usize, j: usize| Self::contract(fs[i], fs[j]);
        let mut total = m[0] * m[1] * m[2] * m[3];
        const PAIRS: [(usize, usize, usize, usize); 6] = [
            (0, 1, 2, 3),
            (0, 2, 1, 3),
            (0, 3, 1, 2),
            (1, 2, 0, 3),
            (1, 3, 0, 2),
            (2, 3, 0, 1),
        ];
        for (p, q, r, s) in PAIRS {
            total += c(p, q) * m[r] * m[s];
        }
        total += c(0, 1) * c(2, 3) + c(0, 2) * c(1, 3) + c(0, 3) * c(1, 2);
        total
    }
}

/// Mean fields `(⟨a⟩, ⟨c_-⟩, ⟨c_+⟩)`.
pub fn mean_fields(u: &PropagatorMatrix, alpha: C64) -> [C64; 3] {
    [
        alpha * u.entries[(0, 0)],
        (alpha * u.entries[(1, 0)]).conj(),
        alpha * u.entries[(2, 0)],
    ]
}

/// Mode occupations `(I_a, I_-, I_+)`.
///
/// Computed from the closed form `I_i = |alpha|^2 |u_i0|^2 + |u_i1|^2 -
/// [i = minus]` and cross-checked against the Wick engine in debug builds.
pub fn intensities(u: &PropagatorMatrix, alpha: C64) -> [f64; 3] {
    let a2 = alpha.norm_sqr();
    let mut out = [0.0f64; 3];
    for (k, mode) in Mode::ALL.iter().enumerate() {
        let r = mode.index();
        let vacuum = if *mode == Mode::Minus { 1.0 } else { 0.0 };
        let closed =
            a2 * u.entries[(r, 0)].norm_sqr() + u.entries[(r, 1)].norm_sqr() - vacuum;
        out[k] = closed.max(0.0);
        #[cfg(debug_assertions)]
        {
            // The closed form folds the vacuum term through the metric
            // relations, so the contraction cross-check only applies to
            // metric-preserving maps; a single-branch map is a deliberate
            // extrapolation of the same formula.
            let scale = u.entries.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if crate::propagator::pseudo_unitarity_defect(u) <= 1e-8 * scale.max(1.0) {
                let w = Wick::new(alpha);
                let f = mode_form(u, *mode);
                let direct = w.two(&f.dag(), &f).re;
                debug_assert!(
                    (direct - closed).abs() <= 1e-12 * closed.abs().max(1.0),
                    "intensity mismatch: wick {direct} vs closed {closed}"
                );
            }
        }
    }
    out
}

/// Single-mode second-order coherence `g2_i`; `None` when the mode is
/// unoccupied and the normalization degenerates.
pub fn g2_single(u: &PropagatorMatrix, alpha: C64, mode: Mode) -> Option<f64> {
    let intensity = intensities(u, alpha)[mode.index()];
    if intensity < INTENSITY_FLOOR {
        return None;
    }
    let w = Wick::new(alpha);
    let f = mode_form(u, mode);
    let fd = f.dag();
    let numerator = w.four([&fd, &fd, &f, &f]).re;
    Some(numerator / (intensity * intensity))
}

/// Cross-mode coherence `g2_ij` with its classical and quantum ceilings;
/// `None` when either normalization degenerates.
pub fn g2_cross(
    u: &PropagatorMatrix,
    alpha: C64,
    i: Mode,
    j: Mode,
) -> Result<Option<CrossStats>> {
    if i == j {
        return Err(Error::InvalidParameter {
            name: "pair",
            reason: "cross correlation needs two distinct modes",
        });
    }
    let ints = intensities(u, alpha);
    let (int_i, int_j) = (ints[i.index()], ints[j.index()]);
    if int_i < INTENSITY_FLOOR || int_j < INTENSITY_FLOOR {
        return Ok(None);
    }
    // Unwraps cannot fire: both intensities just cleared the floor.
    let g2_i = g2_single(u, alpha, i).unwrap();
    let g2_j = g2_single(u, alpha, j).unwrap();

    let w = Wick::new(alpha);
    let fi = mode_form(u, i);
    let fj = mode_form(u, j);
    let numerator = w.four([&fi.dag(), &fi, &fj.dag(), &fj]).re;
    let g2 = numerator / (int_i * int_j);

    let cs_bound = (g2_i * g2_j).sqrt();
    let quantum_bound = ((g2_i + 1.0 / int_i) * (g2_j + 1.0 / int_j)).sqrt();
    Ok(Some(CrossStats {
        g2,
        cs_bound,
        quantum_bound,
        violates_cs: g2 > cs_bound * (1.0 + 1e-12),
    }))
}

/// Relative amplitude and phase uncertainties `(dl/l, dphi)` of one mode's
/// mean field, from the quadrature variances along and across the mean.
///
/// Errors when `alpha = 0` (no mean field anywhere, phase undefined);
/// returns `None` when this particular mode's mean is negligibly small.
pub fn phase_amplitude_uncertainty(
    u: &PropagatorMatrix,
    alpha: C64,
    mode: Mode,
) -> Result<Option<(f64, f64)>> {
    if alpha.norm() == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let w = Wick::new(alpha);
    let lo = mode_form(u, mode);
    let hi = lo.dag();
    let mean = w.mean(&lo);
    let len = mean.norm();
    if len < INTENSITY_FLOOR {
        return Ok(None);
    }
    let phase = mean / len;
    let half = C64::new(0.5, 0.0);
    let half_over_i = C64::new(0.0, -0.5);
    let x_par = lo.scaled(half / phase).plus(&hi.scaled(half * phase));
    let x_perp = lo
        .scaled(half_over_i / phase)
        .plus(&hi.scaled(-half_over_i * phase));
    let variance = |x: &LinForm| {
        let m = w.mean(x);
        (w.two(x, x) - m * m).re.max(0.0)
    };
    Ok(Some((
        variance(&x_par).sqrt() / len,
        variance(&x_perp).sqrt() / len,
    )))
}

/// Bunching observables `(⟨B⟩, ⟨B^dag B⟩)` for the density-grating operator
/// `B = (c_-^dag + c_+) / sqrt(N)`.
pub fn bunching(u: &PropagatorMatrix, alpha: C64, atom_count: f64) -> Result<(C64, f64)> {
    if !(atom_count > 0.0) || !atom_count.is_finite() {
        return Err(Error::InvalidParameter {
            name: "atom_count",
            reason: "must be finite and > 0",
        });
    }
    let w = Wick::new(alpha);
    let scale = C64::new(1.0 / atom_count.sqrt(), 0.0);
    // c_-^dag = d_- and c_+ = d_+ are plain propagator rows.
    let mut row_minus = LinForm::zero();
    let mut row_plus = LinForm::zero();
    for j in 0..3 {
        row_minus.c[j] = u.entries[(1, j)];
        row_plus.c[j] = u.entries[(2, j)];
    }
    let b = row_minus.plus(&row_plus).scaled(scale);
    let mean = w.mean(&b);
    let intensity = w.two(&b.dag(), &b).re;
    Ok((mean, intensity))
}

/// All observables at one time from a prebuilt propagator. Exposed for
/// callers that need the series propagator (degenerate spectra); most code
/// should use [`record`].
pub fn record_from_propagator(
    u: &PropagatorMatrix,
    alpha: C64,
    atom_count: f64,
) -> Result<ObservablesRecord> {
    let record = record_unchecked(u, alpha, atom_count)?;
    assert_record_invariants(&record, alpha);
    Ok(record)
}

/// [`record_from_propagator`] without the conservation assertions, for maps
/// that keep only the growing branch and therefore cannot conserve the mode
/// charge at finite time.
pub fn record_unchecked(
    u: &PropagatorMatrix,
    alpha: C64,
    atom_count: f64,
) -> Result<ObservablesRecord> {
    let means = mean_fields(u, alpha);
    let [i_a, i_minus, i_plus] = intensities(u, alpha);
    let g2 = [
        g2_single(u, alpha, Mode::Probe),
        g2_single(u, alpha, Mode::Minus),
        g2_single(u, alpha, Mode::Plus),
    ];
    let cross_aminus = g2_cross(u, alpha, Mode::Probe, Mode::Minus)?;
    let cross_aplus = g2_cross(u, alpha, Mode::Probe, Mode::Plus)?;
    let cross_minusplus = g2_cross(u, alpha, Mode::Minus, Mode::Plus)?;

    let mut amp_uncert = [None; 3];
    let mut phase_uncert = [None; 3];
    if alpha.norm() > 0.0 {
        for mode in Mode::ALL {
            if let Some((dl, dphi)) = phase_amplitude_uncertainty(u, alpha, mode)? {
                amp_uncert[mode.index()] = Some(dl);
                phase_uncert[mode.index()] = Some(dphi);
            }
        }
    }

    let (bunching_mean, bunching_intensity) = bunching(u, alpha, atom_count)?;
    Ok(ObservablesRecord {
        tau: u.tau,
        mean_probe: means[0],
        mean_minus: means[1],
        mean_plus: means[2],
        intensity_a: i_a,
        intensity_minus: i_minus,
        intensity_plus: i_plus,
        g2_a: g2[0],
        g2_minus: g2[1],
        g2_plus: g2[2],
        cross_aminus,
        cross_aplus,
        cross_minusplus,
        amp_uncert,
        phase_uncert,
        bunching_mean,
        bunching_intensity,
        depletion_fraction: (i_minus + i_plus) / atom_count,
    })
}

/// All observables at one time for a model with a precomputed spectrum.
pub fn record(
    model: &ModelParams,
    spectral: &SpectralData,
    tau: f64,
    atom_count: f64,
) -> Result<ObservablesRecord> {
    let u = propagate_exact(spectral, tau)?;
    record_from_propagator(&u, model.alpha, atom_count)
}

fn assert_record_invariants(rec: &ObservablesRecord, alpha: C64) {
    let charge = rec.intensity_a - rec.intensity_minus + rec.intensity_plus;
    let drift = (charge - alpha.norm_sqr()).abs();
    assert!(
        drift <= 1e-8 * rec.intensity_a.max(1.0),
        "charge drift {drift} at tau {}",
        rec.tau
    );
    for g2 in [rec.g2_a, rec.g2_minus, rec.g2_plus].into_iter().flatten() {
        assert!(g2 >= 0.0, "negative g2 {g2} at tau {}", rec.tau);
    }
    for cross in [rec.cross_aminus, rec.cross_aplus, rec.cross_minusplus]
        .into_iter()
        .flatten()
    {
        assert!(cross.g2 >= 0.0);
        let slack = cross.quantum_bound - cross.g2;
        assert!(
            slack >= -1e-8 * cross.quantum_bound.max(1.0),
            "quantum bound exceeded by {} at tau {}",
            -slack,
            rec.tau
        );
    }
}
