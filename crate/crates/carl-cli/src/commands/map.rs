//! Coupling-detuning plane scan: regime, gain, fluctuation ratio, and the
//! growth-regime Cauchy-Schwarz violation margin of the probe/minus pair.

use std::io::Write;

use rayon::prelude::*;

use carl_core::model::ModelParams;
use carl_core::moments::{intensities, record_from_propagator};
use carl_core::propagator::propagate_exact;
use carl_core::spectral::{characteristic_roots, classify_regime, eigensystem, Regime, SpectralData};
use carl_core::C64;

use crate::commands::emit_table;
use crate::config::{MapConfig, DEFAULT_ATOM_COUNT};
use crate::csvfmt::{fmt_f64, fmt_opt};
use crate::{CliResult, Failure};

pub const MAP_HEADER: &str = "chi,delta,regime,gamma,f,cs_margin_aminus";

/// The margin is probed on this time grid, stopping at the first point where
/// the minus mode reaches unit occupation.
const MARGIN_TAU_STEP: f64 = 0.05;
const MARGIN_TAU_CAP: f64 = 400.0;

struct MapRow {
    chi: f64,
    delta: f64,
    regime: Regime,
    gamma: f64,
    fluctuation: Option<f64>,
    margin: Option<f64>,
}

pub fn run(cfg: &MapConfig, out: &mut dyn Write) -> CliResult<()> {
    let mut points = Vec::with_capacity(cfg.chi_steps * cfg.delta_steps);
    for i in 0..cfg.chi_steps {
        for j in 0..cfg.delta_steps {
            points.push((cfg.chi_at(i), cfg.delta_at(j)));
        }
    }
    // Grid points evaluate concurrently; the indexed collect keeps row-major
    // order with the coupling as the outer axis.
    let rows: Vec<MapRow> = points
        .par_iter()
        .map(|&(chi, delta)| map_point(chi, delta))
        .collect::<Result<_, Failure>>()?;

    let mut table = String::with_capacity(64 + 96 * rows.len());
    table.push_str(MAP_HEADER);
    table.push('\n');
    for row in &rows {
        let fields = [
            fmt_f64(row.chi),
            fmt_f64(row.delta),
            row.regime.to_string(),
            fmt_f64(row.gamma),
            fmt_opt(row.fluctuation),
            fmt_opt(row.margin),
        ];
        table.push_str(&fields.join(","));
        table.push('\n');
    }
    emit_table(out, cfg.out.as_deref(), &table, rows.len())
}

fn map_point(chi: f64, delta: f64) -> Result<MapRow, Failure> {
    let model = ModelParams::spontaneous(chi, delta)?;
    let roots = characteristic_roots(&model);
    let regime = classify_regime(&roots);
    let gamma = (-roots[2].im).max(0.0);
    if regime != Regime::Unstable {
        return Ok(MapRow {
            chi,
            delta,
            regime,
            gamma,
            fluctuation: None,
            margin: None,
        });
    }
    // An unstable spectrum keeps its conjugate pair at least the imaginary
    // tolerance away from the real root, so the eigenbasis exists.
    let spectral = eigensystem(&model)?;
    let margin = growth_margin(&spectral)?;
    Ok(MapRow {
        chi,
        delta,
        regime,
        gamma,
        fluctuation: spectral.fluctuation_f,
        margin,
    })
}

/// Probe/minus correlation margin `g2 - cs_bound` at the first probed time
/// with `I_- >= 1`; `None` when the occupation never gets there before the
/// cap.
fn growth_margin(spectral: &SpectralData) -> Result<Option<f64>, Failure> {
    let alpha = C64::new(0.0, 0.0);
    let steps = (MARGIN_TAU_CAP / MARGIN_TAU_STEP) as usize;
    for k in 1..=steps {
        let tau = MARGIN_TAU_STEP * k as f64;
        let u = propagate_exact(spectral, tau)?;
        if intensities(&u, alpha)[1] >= 1.0 {
            let rec = record_from_propagator(&u, alpha, DEFAULT_ATOM_COUNT)?;
            return Ok(rec.cross_aminus.map(|c| c.g2 - c.cs_bound));
        }
    }
    Ok(None)
}
