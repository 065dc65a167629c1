//! Exact evolution in a truncated three-mode Fock space.
//!
//! Independent brute-force standard for the Gaussian engine: the quadratic
//! Hamiltonian
//!
//! ```text
//! H = n_+ + n_- - delta n_a + chi (a^dag c_-^dag + a^dag c_+ + c_+^dag a + c_- a)
//! ```
//!
//! (in recoil units) is built as a sparse real symmetric matrix over number
//! states `|n_a, n_-, n_+>` with per-mode cutoffs, and the state vector is
//! evolved exactly per block of the conserved charge
//! `Q = n_a - n_- + n_+` by dense symmetric eigendecomposition. Nothing here
//! assumes Gaussianity, so agreement with the moments module is a genuine
//! two-sided check.
//!
//! Truncation honesty is enforced twice: the initial coherent state must fit
//! under the cutoff up to `truncation_tol`, and the probability sitting on
//! the cutoff boundary is monitored at every checkpoint; if it ever exceeds
//! `convergence_tol` the evolution refuses to pretend it converged.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// Inherent f64 math methods live in std; the Float trait supplies them when
// building without it.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::ModelParams;
use crate::moments::{CrossStats, Mode, ObservablesRecord};
use crate::{C64, Error, Result};

/// Hard ceiling on the memory the oracle may plan to allocate.
pub const MEMORY_BUDGET_BYTES: u64 = 1 << 30;

/// Intensities below this leave correlation functions undefined, matching
/// the Gaussian engine's convention.
const INTENSITY_FLOOR: f64 = 1e-14;

/// Cutoffs and tolerances for one oracle evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockOracleConfig {
    pub cutoff_a: usize,
    pub cutoff_minus: usize,
    pub cutoff_plus: usize,
    /// Checkpoint spacing for the leakage monitor, in dimensionless time.
    pub time_step: f64,
    /// Allowed neglected weight of the truncated initial coherent state.
    pub truncation_tol: f64,
    /// Leakage ceiling per evolution, and record-difference ceiling for the
    /// convergence ladder.
    pub convergence_tol: f64,
}

impl Default for FockOracleConfig {
    fn default() -> Self {
        FockOracleConfig {
            cutoff_a: 12,
            cutoff_minus: 12,
            cutoff_plus: 12,
            time_step: 0.05,
            truncation_tol: 1e-9,
            convergence_tol: 1e-6,
        }
    }
}

impl FockOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff_a < 1 || self.cutoff_minus < 1 || self.cutoff_plus < 1 {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: "every mode cutoff must be >= 1",
            });
        }
        if !(self.time_step > 0.0) || !self.time_step.is_finite() {
            return Err(Error::InvalidParameter {
                name: "time_step",
                reason: "must be finite and > 0",
            });
        }
        for (name, tol) in [
            ("truncation_tol", self.truncation_tol),
            ("convergence_tol", self.convergence_tol),
        ] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must lie in (0, 1)",
                });
            }
        }
        Ok(())
    }

    fn cutoffs(&self) -> [usize; 3] {
        [self.cutoff_a, self.cutoff_minus, self.cutoff_plus]
    }

    fn scaled(&self, factor: f64) -> Self {
        let scale = |c: usize| ((c as f64 * factor).round() as usize).max(1);
        FockOracleConfig {
            cutoff_a: scale(self.cutoff_a),
            cutoff_minus: scale(self.cutoff_minus),
            cutoff_plus: scale(self.cutoff_plus),
            ..*self
        }
    }
}

/// Number-state basis bookkeeping: lexicographic enumeration of
/// `(n_a, n_-, n_+)` with `n_i <= cutoff_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Basis {
    cutoffs: [usize; 3],
}

impl Basis {
    fn dim(&self) -> usize {
        (self.cutoffs[0] + 1) * (self.cutoffs[1] + 1) * (self.cutoffs[2] + 1)
    }

    fn index(&self, n: [usize; 3]) -> usize {
        (n[0] * (self.cutoffs[1] + 1) + n[1]) * (self.cutoffs[2] + 1) + n[2]
    }

    fn decode(&self, idx: usize) -> [usize; 3] {
        let per_a = (self.cutoffs[1] + 1) * (self.cutoffs[2] + 1);
        let na = idx / per_a;
        let rem = idx % per_a;
        [na, rem / (self.cutoffs[2] + 1), rem % (self.cutoffs[2] + 1)]
    }

    fn charge(&self, idx: usize) -> i64 {
        let n = self.decode(idx);
        n[0] as i64 - n[1] as i64 + n[2] as i64
    }
}

/// Sparse real symmetric Hamiltonian over the truncated basis. Off-diagonal
/// couplings are stored once with `row < col`; the transpose is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    pub dim: usize,
    pub cutoffs: [usize; 3],
    pub diagonal: Vec<f64>,
    pub couplings: Vec<(u32, u32, f64)>,
}

/// State vector over the truncated basis at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub cutoffs: [usize; 3],
    pub amplitudes: Vec<C64>,
    pub norm: f64,
    pub tau: f64,
}

/// What the leakage monitor saw over one evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageReport {
    /// Max over checkpoints of the probability at each mode's cutoff.
    pub per_mode: [f64; 3],
    pub worst_mode: Mode,
    pub max_leakage: f64,
    /// |final norm - 1|.
    pub norm_drift: f64,
}

/// Proof of ladder convergence attached to an oracle record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCertificate {
    /// How many ladder rungs actually evolved.
    pub evaluations: usize,
    pub final_cutoffs: [usize; 3],
    /// Largest field difference between the last two compared records.
    pub last_delta: f64,
}

fn required_bytes(basis: &Basis) -> u64 {
    let dim = basis.dim() as u64;
    // State + index maps + sparse entries scale with dim; the dense
    // per-charge-sector eigendecomposition is bounded by the largest
    // possible sector, itself at most (cutoff_a+1)(cutoff_-+1) states.
    let sector_bound = ((basis.cutoffs[0] + 1) * (basis.cutoffs[1] + 1)) as u64;
    64 * dim + 16 * sector_bound * sector_bound
}

/// Builds the truncated Hamiltonian.
pub fn build_hamiltonian(
    model: &ModelParams,
    config: &FockOracleConfig,
) -> Result<SparseHamiltonian> {
    config.validate()?;
    let basis = Basis {
        cutoffs: config.cutoffs(),
    };
    let required = required_bytes(&basis);
    if required > MEMORY_BUDGET_BYTES {
        return Err(Error::ResourceBudget {
            required_bytes: required,
        });
    }
    let dim = basis.dim();
    let [ca, cm, _] = basis.cutoffs;
    let mut diagonal = vec![0.0f64; dim];
    let mut couplings = Vec::new();
    for idx in 0..dim {
        let [na, nm, np] = basis.decode(idx);
        diagonal[idx] = np as f64 + nm as f64 - model.delta * na as f64;
        if model.chi == 0.0 {
            continue;
        }
        // a^dag c_-^dag |na, nm, np>
        if na + 1 <= ca && nm + 1 <= cm {
            let target = basis.index([na + 1, nm + 1, np]);
            let value = model.chi * (((na + 1) * (nm + 1)) as f64).sqrt();
            couplings.push((idx as u32, target as u32, value));
        }
        // a^dag c_+ |na, nm, np>
        if na + 1 <= ca && np >= 1 {
            let target = basis.index([na + 1, nm, np - 1]);
            let value = model.chi * (((na + 1) * np) as f64).sqrt();
            couplings.push((idx as u32, target as u32, value));
        }
    }
    Ok(SparseHamiltonian {
        dim,
        cutoffs: basis.cutoffs,
        diagonal,
        couplings,
    })
}

/// `<state| H |state>` for diagnostics and conservation tests.
pub fn energy(h: &SparseHamiltonian, state: &FockState) -> f64 {
    let psi = &state.amplitudes;
    let mut e: f64 = h
        .diagonal
        .iter()
        .zip(psi.iter())
        .map(|(d, z)| d * z.norm_sqr())
        .sum();
    for &(s, t, v) in &h.couplings {
        e += 2.0 * v * (psi[s as usize].conj() * psi[t as usize]).re;
    }
    e
}

/// Truncated coherent-state amplitudes over `0..=cutoff`, plus the neglected
/// weight beyond the cutoff (before renormalization).
fn truncated_coherent(alpha: C64, cutoff: usize) -> (Vec<C64>, f64) {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let mut kept = 0.0f64;
    for n in 0..=cutoff {
        if n > 0 {
            c = c * alpha / C64::new((n as f64).sqrt(), 0.0);
        }
        kept += c.norm_sqr();
        amps.push(c);
    }
    (amps, (1.0 - kept).max(0.0))
}

/// Sweep budget per eigenvalue index; the implicit-shift iteration needs
/// only a handful, so hitting this means the input was not a finite
/// symmetric matrix.
const QL_MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a dense real symmetric matrix: returns ascending
/// eigenvalues and the orthogonal matrix of column eigenvectors, with
/// `H V = V diag(lambda)` holding to roundoff in the matrix norm.
///
/// Householder reduction to tridiagonal form, then implicit-shift QL with
/// every rotation accumulated into the basis. Deflation compares each
/// off-diagonal entry against its neighboring diagonal magnitudes, so
/// clusters of near-equal eigenvalues split cleanly instead of stalling or
/// mixing; the sector Hamiltonians develop exactly such clusters at weak
/// coupling, where general-purpose iterations lose the spectrum while still
/// returning an orthogonal basis.
fn diagonalize_symmetric(dense: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = dense.nrows();
    if n == 1 {
        let lambda = dense[(0, 0)];
        return Ok((DVector::from_element(1, lambda), DMatrix::identity(1, 1)));
    }
    let (mut z, diag, off) = dense.symmetric_tridiagonalize().unpack();
    let mut d: Vec<f64> = diag.iter().copied().collect();
    let mut e: Vec<f64> = off.iter().copied().collect();
    e.push(0.0);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            // First off-diagonal at or after l that is negligible next to
            // its neighbors; everything before it still couples.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_MAX_SWEEPS {
                return Err(Error::IterationBudget);
            }
            // Shift from the leading 2x2 block; e[l] is nonzero here
            // because the deflation scan passed it.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // The rotated off-diagonal vanished early: absorb the
                    // accumulated shift and restart the sweep from l.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&j| d[j]));
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (col, &j) in order.iter().enumerate() {
        eigenvectors.column_mut(col).copy_from(&z.column(j));
    }
    Ok((eigenvalues, eigenvectors))
}

struct SectorBlock {
    indices: Vec<u32>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// Eigenbasis coordinates of the initial state, `V^T psi0`.
    weights: Vec<C64>,
}

impl SectorBlock {
    /// Writes this sector's amplitudes at time `t` into the global vector.
    fn fill_at(&self, t: f64, out: &mut [C64]) {
        let s = self.indices.len();
        let mut rotated = Vec::with_capacity(s);
        for k in 0..s {
            let phase = C64::new(0.0, -self.eigenvalues[k] * t).exp();
            rotated.push(self.weights[k] * phase);
        }
        for (row, &global) in self.indices.iter().enumerate() {
            let mut amp = C64::new(0.0, 0.0);
            for (k, r) in rotated.iter().enumerate() {
                amp += C64::new(self.eigenvectors[(row, k)], 0.0) * r;
            }
            out[global as usize] = amp;
        }
    }
}

/// Exact evolution of `|alpha, 0, 0>` to time `tau`.
///
/// Per-charge-sector eigendecomposition makes each checkpoint an exact
/// unitary map, so norm is preserved to roundoff. Fails with
/// [`Error::CutoffInsufficient`] if boundary probability ever exceeds the
/// convergence tolerance, naming the saturated mode.
pub fn evolve(
    model: &ModelParams,
    config: &FockOracleConfig,
    tau: f64,
) -> Result<(FockState, LeakageReport)> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: "must be finite and >= 0",
        });
    }
    let h = build_hamiltonian(model, config)?;
    let basis = Basis {
        cutoffs: h.cutoffs,
    };
    let dim = h.dim;

    let (coherent, neglected) = truncated_coherent(model.alpha, config.cutoff_a);
    if neglected >= config.truncation_tol {
        return Err(Error::TruncatedWeight { neglected });
    }
    let renorm = 1.0
        / coherent
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
    let mut psi0 = vec![C64::new(0.0, 0.0); dim];
    for (na, c) in coherent.iter().enumerate() {
        psi0[basis.index([na, 0, 0])] = c * renorm;
    }

    // Group populated charge sectors. The couplings preserve Q, so only
    // sectors holding initial weight ever evolve.
    let mut sector_of = vec![usize::MAX; dim];
    let mut blocks_indices: Vec<Vec<u32>> = Vec::new();
    let mut charge_to_block: Vec<(i64, usize)> = Vec::new();
    for na in 0..=config.cutoff_a {
        if psi0[basis.index([na, 0, 0])].norm_sqr() == 0.0 {
            continue;
        }
        let q = na as i64;
        if !charge_to_block.iter().any(|&(c, _)| c == q) {
            charge_to_block.push((q, blocks_indices.len()));
            blocks_indices.push(Vec::new());
        }
    }
    for idx in 0..dim {
        let q = basis.charge(idx);
        if let Some(&(_, block)) = charge_to_block.iter().find(|&&(c, _)| c == q) {
            sector_of[idx] = block;
            blocks_indices[block].push(idx as u32);
        }
    }

    let mut blocks = Vec::with_capacity(blocks_indices.len());
    for indices in blocks_indices {
        let s = indices.len();
        let mut position = vec![u32::MAX; dim];
        for (row, &global) in indices.iter().enumerate() {
            position[global as usize] = row as u32;
        }
        let mut dense = DMatrix::<f64>::zeros(s, s);
        for (row, &global) in indices.iter().enumerate() {
            dense[(row, row)] = h.diagonal[global as usize];
        }
        for &(a, b, v) in &h.couplings {
            let (pa, pb) = (position[a as usize], position[b as usize]);
            if pa != u32::MAX && pb != u32::MAX {
                dense[(pa as usize, pb as usize)] = v;
                dense[(pb as usize, pa as usize)] = v;
            }
        }
        let (eigenvalues, eigenvectors) = diagonalize_symmetric(dense)?;
        let mut weights = vec![C64::new(0.0, 0.0); s];
        for k in 0..s {
            let mut w = C64::new(0.0, 0.0);
            for (row, &global) in indices.iter().enumerate() {
                w += C64::new(eigenvectors[(row, k)], 0.0) * psi0[global as usize];
            }
            weights[k] = w;
        }
        blocks.push(SectorBlock {
            indices,
            eigenvalues,
            eigenvectors,
            weights,
        });
    }

    let mut amplitudes = psi0;
    let mut per_mode = [0.0f64; 3];
    let record_leakage = |amps: &[C64], per_mode: &mut [f64; 3]| {
        let mut here = [0.0f64; 3];
        for (idx, amp) in amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let n = basis.decode(idx);
            for m in 0..3 {
                if n[m] == basis.cutoffs[m] {
                    here[m] += p;
                }
            }
        }
        for m in 0..3 {
            per_mode[m] = per_mode[m].max(here[m]);
        }
    };

    record_leakage(&amplitudes, &mut per_mode);
    let mut k = 1u64;
    loop {
        let t = k as f64 * config.time_step;
        if t >= tau {
            break;
        }
        for block in &blocks {
            block.fill_at(t, &mut amplitudes);
        }
        record_leakage(&amplitudes, &mut per_mode);
        k += 1;
    }
    for block in &blocks {
        block.fill_at(tau, &mut amplitudes);
    }
    record_leakage(&amplitudes, &mut per_mode);

    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (worst_idx, max_leakage) = per_mode
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &v)| (i, v))
        .unwrap();
    let report = LeakageReport {
        per_mode,
        worst_mode: Mode::ALL[worst_idx],
        max_leakage,
        norm_drift: (norm - 1.0).abs(),
    };
    if max_leakage > config.convergence_tol {
        return Err(Error::CutoffInsufficient {
            mode: report.worst_mode,
            leakage: max_leakage,
        });
    }
    Ok((
        FockState {
            cutoffs: basis.cutoffs,
            amplitudes,
            norm,
            tau,
        },
        report,
    ))
}

/// Applies the annihilation operator of one mode: `out = c_mode |state>`.
pub fn apply_lowering(state: &FockState, mode: Mode) -> Vec<C64> {
    let basis = Basis {
        cutoffs: state.cutoffs,
    };
    let m = mode.index();
    let mut out = vec![C64::new(0.0, 0.0); state.amplitudes.len()];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut n = basis.decode(idx);
        if n[m] == 0 {
            continue;
        }
        let factor = (n[m] as f64).sqrt();
        n[m] -= 1;
        out[basis.index(n)] += amp * factor;
    }
    out
}

/// `<a|b>` over basis amplitudes.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `<n_mode>`.
pub fn expectation_n(state: &FockState, mode: Mode) -> f64 {
    let basis = Basis {
        cutoffs: state.cutoffs,
    };
    let m = mode.index();
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(idx, amp)| basis.decode(idx)[m] as f64 * amp.norm_sqr())
        .sum()
}

/// `<n_i n_j>` (or `<n_i (n_i - 1)>` when `i == j`, the normally ordered
/// square).
pub fn expectation_nn(state: &FockState, i: Mode, j: Mode) -> f64 {
    let basis = Basis {
        cutoffs: state.cutoffs,
    };
    let (mi, mj) = (i.index(), j.index());
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(idx, amp)| {
            let n = basis.decode(idx);
            let second = if mi == mj {
                n[mj] as f64 - 1.0
            } else {
                n[mj] as f64
            };
            n[mi] as f64 * second * amp.norm_sqr()
        })
        .sum()
}

fn mode_mean(state: &FockState, mode: Mode) -> C64 {
    inner(&state.amplitudes, &apply_lowering(state, mode))
}

fn mode_squared_mean(state: &FockState, mode: Mode) -> C64 {
    let lowered_once = FockState {
        cutoffs: state.cutoffs,
        amplitudes: apply_lowering(state, mode),
        norm: state.norm,
        tau: state.tau,
    };
    inner(&state.amplitudes, &apply_lowering(&lowered_once, mode))
}

/// Every observable of the record, by direct matrix-element sums with no
/// Gaussian assumption. Truncation error shows up here as-is; nothing is
/// asserted against the conservation identities.
pub fn oracle_moments(state: &FockState, atom_count: f64) -> Result<ObservablesRecord> {
    if !(atom_count > 0.0) || !atom_count.is_finite() {
        return Err(Error::InvalidParameter {
            name: "atom_count",
            reason: "must be finite and > 0",
        });
    }
    let intensity = [
        expectation_n(state, Mode::Probe),
        expectation_n(state, Mode::Minus),
        expectation_n(state, Mode::Plus),
    ];
    let means = [
        mode_mean(state, Mode::Probe),
        mode_mean(state, Mode::Minus),
        mode_mean(state, Mode::Plus),
    ];

    let g2_of = |mode: Mode| {
        let i = intensity[mode.index()];
        if i < INTENSITY_FLOOR {
            return None;
        }
        Some(expectation_nn(state, mode, mode) / (i * i))
    };
    let g2 = [g2_of(Mode::Probe), g2_of(Mode::Minus), g2_of(Mode::Plus)];

    let cross_of = |i: Mode, j: Mode| {
        let (int_i, int_j) = (intensity[i.index()], intensity[j.index()]);
        if int_i < INTENSITY_FLOOR || int_j < INTENSITY_FLOOR {
            return None;
        }
        let (g2_i, g2_j) = (g2[i.index()].unwrap(), g2[j.index()].unwrap());
        let value = expectation_nn(state, i, j) / (int_i * int_j);
        let cs_bound = (g2_i * g2_j).sqrt();
        let quantum_bound = ((g2_i + 1.0 / int_i) * (g2_j + 1.0 / int_j)).sqrt();
        Some(CrossStats {
            g2: value,
            cs_bound,
            quantum_bound,
            violates_cs: value > cs_bound * (1.0 + 1e-12),
        })
    };

    let mut amp_uncert = [None; 3];
    let mut phase_uncert = [None; 3];
    for mode in Mode::ALL {
        let mean = means[mode.index()];
        let len = mean.norm();
        if len < INTENSITY_FLOOR {
            continue;
        }
        let i = intensity[mode.index()];
        let phase_sq = (mean.conj() / len) * (mean.conj() / len);
        let anomalous = 2.0 * (mode_squared_mean(state, mode) * phase_sq).re;
        let var_par = (0.25 * (anomalous + 2.0 * i + 1.0) - len * len).max(0.0);
        let var_perp = (0.25 * (2.0 * i + 1.0 - anomalous)).max(0.0);
        amp_uncert[mode.index()] = Some(var_par.sqrt() / len);
        phase_uncert[mode.index()] = Some(var_perp.sqrt() / len);
    }

    let lowered_plus = FockState {
        cutoffs: state.cutoffs,
        amplitudes: apply_lowering(state, Mode::Plus),
        norm: state.norm,
        tau: state.tau,
    };
    let minus_plus = inner(
        &state.amplitudes,
        &apply_lowering(&lowered_plus, Mode::Minus),
    );
    let bunching_mean =
        (means[1].conj() + means[2]) / C64::new(atom_count.sqrt(), 0.0);
    let bunching_intensity =
        (intensity[1] + 1.0 + intensity[2] + 2.0 * minus_plus.re) / atom_count;

    Ok(ObservablesRecord {
        tau: state.tau,
        mean_probe: means[0],
        mean_minus: means[1],
        mean_plus: means[2],
        intensity_a: intensity[0],
        intensity_minus: intensity[1],
        intensity_plus: intensity[2],
        g2_a: g2[0],
        g2_minus: g2[1],
        g2_plus: g2[2],
        cross_aminus: cross_of(Mode::Probe, Mode::Minus),
        cross_aplus: cross_of(Mode::Probe, Mode::Plus),
        cross_minusplus: cross_of(Mode::Minus, Mode::Plus),
        amp_uncert,
        phase_uncert,
        bunching_mean,
        bunching_intensity,
        depletion_fraction: (intensity[1] + intensity[2]) / atom_count,
    })
}

/// Difference of two field values on the scale of the values themselves.
/// Near-vacuum intensities turn the `1/I`-shaped fields (cross coherences
/// and their ceilings) into noise amplifiers, where no cutoff increase can
/// shrink an absolute difference; agreement on those fields only means
/// anything relative to their magnitude.
fn scaled_delta(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(1.0)
}

fn complex_delta(x: C64, y: C64) -> f64 {
    (x - y).norm() / x.norm().max(y.norm()).max(1.0)
}

fn option_delta(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => scaled_delta(x, y),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

fn cross_delta(a: Option<CrossStats>, b: Option<CrossStats>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => scaled_delta(x.g2, y.g2)
            .max(scaled_delta(x.cs_bound, y.cs_bound))
            .max(scaled_delta(x.quantum_bound, y.quantum_bound)),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Largest field-scaled difference over every defined field of two records.
/// Mismatched definedness counts as infinite.
pub fn record_delta(a: &ObservablesRecord, b: &ObservablesRecord) -> f64 {
    let mut d = 0.0f64;
    d = d.max(complex_delta(a.mean_probe, b.mean_probe));
    d = d.max(complex_delta(a.mean_minus, b.mean_minus));
    d = d.max(complex_delta(a.mean_plus, b.mean_plus));
    d = d.max(scaled_delta(a.intensity_a, b.intensity_a));
    d = d.max(scaled_delta(a.intensity_minus, b.intensity_minus));
    d = d.max(scaled_delta(a.intensity_plus, b.intensity_plus));
    d = d.max(option_delta(a.g2_a, b.g2_a));
    d = d.max(option_delta(a.g2_minus, b.g2_minus));
    d = d.max(option_delta(a.g2_plus, b.g2_plus));
    d = d.max(cross_delta(a.cross_aminus, b.cross_aminus));
    d = d.max(cross_delta(a.cross_aplus, b.cross_aplus));
    d = d.max(cross_delta(a.cross_minusplus, b.cross_minusplus));
    for m in 0..3 {
        d = d.max(option_delta(a.amp_uncert[m], b.amp_uncert[m]));
        d = d.max(option_delta(a.phase_uncert[m], b.phase_uncert[m]));
    }
    d = d.max(complex_delta(a.bunching_mean, b.bunching_mean));
    d = d.max(scaled_delta(a.bunching_intensity, b.bunching_intensity));
    d = d.max(scaled_delta(a.depletion_fraction, b.depletion_fraction));
    d
}

/// Evolves at cutoffs scaled by 1, 1.5, and 2 until two successive usable
/// records agree within the convergence tolerance.
///
/// A rung whose cutoffs leak is skipped (that is exactly what escalation is
/// for); the error surfaces only if the final rung still leaks or the ladder
/// ends without agreement.
pub fn convergence_ladder(
    model: &ModelParams,
    config: &FockOracleConfig,
    tau: f64,
    atom_count: f64,
) -> Result<(ObservablesRecord, ConvergenceCertificate)> {
    config.validate()?;
    let mut previous: Option<ObservablesRecord> = None;
    let mut evaluations = 0usize;
    let mut last_error: Option<Error> = None;
    let mut last_delta = f64::INFINITY;
    for factor in [1.0, 1.5, 2.0] {
        let rung = config.scaled(factor);
        match evolve(model, &rung, tau) {
            Ok((state, _)) => {
                evaluations += 1;
                let record = oracle_moments(&state, atom_count)?;
                if let Some(prev) = &previous {
                    last_delta = record_delta(prev, &record);
                    if last_delta < config.convergence_tol {
                        return Ok((
                            record,
                            ConvergenceCertificate {
                                evaluations,
                                final_cutoffs: rung.cutoffs(),
                                last_delta,
                            },
                        ));
                    }
                }
                previous = Some(record);
                last_error = None;
            }
            Err(e @ Error::CutoffInsufficient { .. }) => {
                last_error = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(e) = last_error {
        return Err(e);
    }
    Err(Error::LadderNotConverged { last_delta })
}
