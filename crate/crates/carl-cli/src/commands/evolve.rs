//! Observables over a uniform time grid.

use std::io::Write;

use carl_core::moments::{record_from_propagator, record_unchecked};
use carl_core::propagator::{propagate_asymptotic, propagate_exact, propagate_series};
use carl_core::spectral::eigensystem;
use carl_core::{Error, ObservablesRecord};

use crate::commands::{emit_table, intensity_plot};
use crate::config::EvolveConfig;
use crate::csvfmt::records_table;
use crate::CliResult;

pub fn run(cfg: &EvolveConfig, out: &mut dyn Write) -> CliResult<()> {
    let records = time_series(cfg)?;
    let table = records_table(&records);
    emit_table(out, cfg.out.as_deref(), &table, records.len())?;
    if let Some(path) = &cfg.svg {
        let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
        let svg = intensity_plot("mode intensities", "tau", &taus, &records);
        std::fs::write(path, svg)?;
        writeln!(out, "wrote plot to {}", path.display())?;
    }
    Ok(())
}

fn time_series(cfg: &EvolveConfig) -> CliResult<Vec<ObservablesRecord>> {
    let model = &cfg.input.model;
    let atoms = cfg.input.atom_count;
    let n = cfg.tau_points;
    let taus: Vec<f64> = (0..n)
        .map(|k| cfg.tau_max * k as f64 / (n - 1) as f64)
        .collect();

    if cfg.asymptotic {
        let spectral = eigensystem(model)?;
        return taus
            .iter()
            .map(|&tau| {
                let u = propagate_asymptotic(&spectral, tau)?;
                // The single-branch map does not conserve the mode charge,
                // so the checked record constructor would reject it.
                Ok(record_unchecked(&u, model.alpha, atoms)?)
            })
            .collect();
    }

    match eigensystem(model) {
        Ok(spectral) => taus
            .iter()
            .map(|&tau| {
                let u = propagate_exact(&spectral, tau)?;
                Ok(record_from_propagator(&u, model.alpha, atoms)?)
            })
            .collect(),
        // Near a spectral degeneracy the eigenbasis is unusable; the series
        // propagator works in every regime.
        Err(Error::DegenerateSpectrum { .. }) => taus
            .iter()
            .map(|&tau| {
                let u = propagate_series(model, tau)?;
                Ok(record_from_propagator(&u, model.alpha, atoms)?)
            })
            .collect(),
        Err(e) => Err(e.into()),
    }
}
