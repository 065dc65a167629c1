//! Observables along one swept parameter at a fixed time.

use std::io::Write;

use rayon::prelude::*;

use carl_core::moments::record_from_propagator;
use carl_core::propagator::{propagate_exact, propagate_series};
use carl_core::spectral::eigensystem;
use carl_core::{Error, ObservablesRecord};

use crate::commands::{emit_table, intensity_plot};
use crate::config::SweepConfig;
use crate::csvfmt::{fmt_f64, record_row, EVOLVE_HEADER};
use crate::{CliResult, Failure};

pub fn run(cfg: &SweepConfig, out: &mut dyn Write) -> CliResult<()> {
    let values: Vec<f64> = (0..cfg.steps).map(|k| cfg.value_at(k)).collect();
    // Points evaluate concurrently; the indexed collect keeps grid order.
    let records: Vec<ObservablesRecord> = values
        .par_iter()
        .map(|&value| point_record(cfg, value))
        .collect::<Result<_, Failure>>()?;

    let mut table = String::with_capacity(64 + 512 * records.len());
    table.push_str(cfg.param.name());
    table.push(',');
    table.push_str(EVOLVE_HEADER);
    table.push('\n');
    for (value, rec) in values.iter().zip(&records) {
        table.push_str(&fmt_f64(*value));
        table.push(',');
        table.push_str(&record_row(rec));
        table.push('\n');
    }
    emit_table(out, cfg.out.as_deref(), &table, records.len())?;

    if let Some(path) = &cfg.svg {
        let svg = intensity_plot("mode intensities", cfg.param.name(), &values, &records);
        std::fs::write(path, svg)?;
        writeln!(out, "wrote plot to {}", path.display())?;
    }
    Ok(())
}

fn point_record(cfg: &SweepConfig, value: f64) -> Result<ObservablesRecord, Failure> {
    let model = cfg.model_at(value)?;
    let u = match eigensystem(&model) {
        Ok(spectral) => propagate_exact(&spectral, cfg.tau_max)?,
        // Swept axes routinely cross spectral degeneracies; fall back to the
        // series propagator there.
        Err(Error::DegenerateSpectrum { .. }) => propagate_series(&model, cfg.tau_max)?,
        Err(e) => return Err(e.into()),
    };
    Ok(record_from_propagator(&u, model.alpha, cfg.atom_count)?)
}
