//! Spectral report for one parameter point.

use std::io::Write;

use carl_core::spectral::{characteristic_roots, classify_regime, eigensystem};

use crate::config::EigenConfig;
use crate::csvfmt::{fmt_f64, fmt_opt};
use crate::CliResult;

pub const EIGEN_HEADER: &str =
    "chi,delta,regime,lambda1_re,lambda1_im,lambda2_re,lambda2_im,lambda3_re,lambda3_im,gamma,omega,f";

pub fn run(cfg: &EigenConfig, out: &mut dyn Write) -> CliResult<()> {
    let model = &cfg.input.model;
    let roots = characteristic_roots(model);
    let regime = classify_regime(&roots);
    let gain = (-roots[2].im).max(0.0);
    let oscillation = roots[2].re;
    // The fluctuation ratio needs the eigenvector basis, which can be
    // unusable near degeneracies even when the roots themselves are fine.
    let f = eigensystem(model).ok().and_then(|s| s.fluctuation_f);

    if let Some(d) = &cfg.input.derived {
        writeln!(out, "recoil_frequency = {} rad/s", fmt_f64(d.recoil_frequency))?;
        writeln!(out, "coupling_g = {} rad/s", fmt_f64(d.coupling_g))?;
    }
    writeln!(out, "chi    = {}", fmt_f64(model.chi))?;
    writeln!(out, "delta  = {}", fmt_f64(model.delta))?;
    writeln!(out, "regime = {regime}")?;
    for (k, root) in roots.iter().enumerate() {
        writeln!(
            out,
            "lambda_{} = {} {}",
            k + 1,
            fmt_f64(root.re),
            fmt_f64(root.im)
        )?;
    }
    writeln!(out, "gain   = {}", fmt_f64(gain))?;
    writeln!(out, "omega  = {}", fmt_f64(oscillation))?;
    match f {
        Some(f) => writeln!(out, "f      = {}", fmt_f64(f))?,
        None => writeln!(out, "f      = UNDEFINED")?,
    }

    if let Some(path) = &cfg.out {
        let fields = [
            fmt_f64(model.chi),
            fmt_f64(model.delta),
            regime.to_string(),
            fmt_f64(roots[0].re),
            fmt_f64(roots[0].im),
            fmt_f64(roots[1].re),
            fmt_f64(roots[1].im),
            fmt_f64(roots[2].re),
            fmt_f64(roots[2].im),
            fmt_f64(gain),
            fmt_f64(oscillation),
            fmt_opt(f),
        ];
        let csv = format!("{EIGEN_HEADER}\n{}\n", fields.join(","));
        std::fs::write(path, csv)?;
        writeln!(out, "wrote 1 row to {}", path.display())?;
    }
    Ok(())
}
