//! Result persistence and console formatting.

use itersurv_core::estimation::{ExperimentOutcome, SurvivalEstimate};
use itersurv_core::{Error, Result};
use std::path::{Path, PathBuf};

/// Writes one result file under `dir`, creating the directory tree.
pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn estimate_line(e: &SurvivalEstimate) -> String {
    format!(
        "T = {:>10}  p = {:.6}  [{:.6}, {:.6}]  survivors {}/{}",
        e.horizon, e.p_hat, e.ci_low, e.ci_high, e.n_survived, e.n_samples
    )
}

pub fn print_outcome(outcome: &ExperimentOutcome) {
    for e in &outcome.estimates {
        println!("{}", estimate_line(e));
    }
    let fit = &outcome.fit;
    println!(
        "slope {:.4} +/- {:.4}  intercept {:.4}  r2 {:.4}  ({} points)",
        fit.slope, fit.slope_stderr, fit.intercept, fit.r_squared, fit.points_used
    );
    match fit.predicted {
        Some(p) => {
            println!(
                "predicted exponent {} ({}): deviation {:.4}",
                p.theta,
                p.theorem,
                outcome.deviation.unwrap_or(f64::NAN)
            );
        }
        None => println!("no predicted exponent for this scenario"),
    }
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
}
