//! CSV rendering. Every numeric field uses 17 significant digits, which
//! round-trips any double exactly; undefined quantities render as empty
//! fields.

use carl_core::{CrossStats, ObservablesRecord};

/// Column order of the observables table. Kept as a single literal so tests
/// can assert the exact header bytes.
pub const EVOLVE_HEADER: &str = "tau,I_a,I_minus,I_plus,g2_a,g2_minus,g2_plus,g2_aminus,g2_aplus,g2_minusplus,cs_aminus,qb_aminus,cs_minusplus,qb_minusplus,cs_aplus,qb_aplus,dl_a,dphi_a,dl_minus,dphi_minus,dl_plus,dphi_plus,B_re,B_im,BdagB,depletion";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn cross_g2(c: Option<CrossStats>) -> Option<f64> {
    c.map(|c| c.g2)
}

fn cross_cs(c: Option<CrossStats>) -> Option<f64> {
    c.map(|c| c.cs_bound)
}

fn cross_qb(c: Option<CrossStats>) -> Option<f64> {
    c.map(|c| c.quantum_bound)
}

/// One observables row in [`EVOLVE_HEADER`] order, without a line ending.
pub fn record_row(rec: &ObservablesRecord) -> String {
    let fields: [String; 26] = [
        fmt_f64(rec.tau),
        fmt_f64(rec.intensity_a),
        fmt_f64(rec.intensity_minus),
        fmt_f64(rec.intensity_plus),
        fmt_opt(rec.g2_a),
        fmt_opt(rec.g2_minus),
        fmt_opt(rec.g2_plus),
        fmt_opt(cross_g2(rec.cross_aminus)),
        fmt_opt(cross_g2(rec.cross_aplus)),
        fmt_opt(cross_g2(rec.cross_minusplus)),
        fmt_opt(cross_cs(rec.cross_aminus)),
        fmt_opt(cross_qb(rec.cross_aminus)),
        fmt_opt(cross_cs(rec.cross_minusplus)),
        fmt_opt(cross_qb(rec.cross_minusplus)),
        fmt_opt(cross_cs(rec.cross_aplus)),
        fmt_opt(cross_qb(rec.cross_aplus)),
        fmt_opt(rec.amp_uncert[0]),
        fmt_opt(rec.phase_uncert[0]),
        fmt_opt(rec.amp_uncert[1]),
        fmt_opt(rec.phase_uncert[1]),
        fmt_opt(rec.amp_uncert[2]),
        fmt_opt(rec.phase_uncert[2]),
        fmt_f64(rec.bunching_mean.re),
        fmt_f64(rec.bunching_mean.im),
        fmt_f64(rec.bunching_intensity),
        fmt_f64(rec.depletion_fraction),
    ];
    fields.join(",")
}

/// Full observables table: header plus one row per record.
pub fn records_table(records: &[ObservablesRecord]) -> String {
    let mut csv = String::with_capacity(64 + 512 * records.len());
    csv.push_str(EVOLVE_HEADER);
    csv.push('\n');
    for rec in records {
        csv.push_str(&record_row(rec));
        csv.push('\n');
    }
    csv
}
