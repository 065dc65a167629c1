//! One module per subcommand, plus the shared table/plot plumbing.

pub mod eigen;
pub mod evolve;
pub mod map;
pub mod sweep;
pub mod validate;

use std::io::Write;
use std::path::Path;

use carl_core::ObservablesRecord;

use crate::svg::{line_plot, Series};
use crate::CliResult;

/// Sends a finished table to the file named by `path`, or to `out` when no
/// path is given.
pub fn emit_table(
    out: &mut dyn Write,
    path: Option<&Path>,
    table: &str,
    rows: usize,
) -> CliResult<()> {
    match path {
        Some(p) => {
            std::fs::write(p, table)?;
            writeln!(out, "wrote {rows} rows to {}", p.display())?;
        }
        None => out.write_all(table.as_bytes())?,
    }
    Ok(())
}

/// Line plot of the three mode intensities against `xs`.
pub fn intensity_plot(
    title: &str,
    x_label: &str,
    xs: &[f64],
    records: &[ObservablesRecord],
) -> String {
    let pick = |f: fn(&ObservablesRecord) -> f64, label: &str| Series {
        label: label.to_string(),
        points: xs
            .iter()
            .zip(records)
            .map(|(&x, r)| (x, f(r)))
            .collect(),
    };
    let series = [
        pick(|r| r.intensity_a, "I_a"),
        pick(|r| r.intensity_minus, "I_minus"),
        pick(|r| r.intensity_plus, "I_plus"),
    ];
    line_plot(title, x_label, "intensity", &series)
}
