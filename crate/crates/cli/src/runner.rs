//! Runs a plan end to end: estimates, fit, result files, exit code.

use crate::manifest::{plan_digest, unix_now, RunManifest};
use crate::output::{print_outcome, write_text};
use itersurv_core::estimation::{fit_csv, predicted_exponent, run_experiment, survival_csv, ExperimentPlan};
use itersurv_core::{Error, Result};
use std::path::Path;

pub struct RunOutcome {
    /// 0 when the slope lands within tolerance (or the run is not gating).
    pub exit_code: i32,
}

pub struct RunSpec {
    pub name: String,
    pub plan: ExperimentPlan,
    /// Gate half-width on |slope + theta_pred|; None runs ungated.
    pub tolerance: Option<f64>,
    pub gating: bool,
}

pub fn execute(spec: &RunSpec, out_dir: &Path) -> Result<RunOutcome> {
    let started = unix_now();
    println!("running {} (seed {})", spec.name, spec.plan.seed.0);
    let outcome = run_experiment(&spec.plan)?;
    print_outcome(&outcome);

    let survival = write_text(out_dir, "survival.csv", &survival_csv(&outcome.estimates))?;
    let fit = write_text(out_dir, "fit.csv", &fit_csv(&outcome.fit))?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        preset: spec.name.clone(),
        seed: spec.plan.seed.0,
        scenario: format!("{:?}", spec.plan.scenario),
        barrier: spec.plan.barrier,
        grid_t0: spec.plan.grid.t0,
        grid_ratio: spec.plan.grid.ratio,
        grid_count: spec.plan.grid.count,
        budgets: spec.plan.budgets(),
        k_min: spec.plan.k_min,
        ci_level: spec.plan.ci_level,
        parallel: spec.plan.parallel,
        config_digest: plan_digest(&spec.plan),
        tolerance: spec.tolerance,
        gating: spec.gating,
        theta_pred: outcome.fit.predicted.map(|p| p.theta),
        theorem: outcome.fit.predicted.map(|p| p.theorem.to_string()),
        slope: outcome.fit.slope,
        slope_stderr: outcome.fit.slope_stderr,
        deviation: outcome.deviation,
        started_unix: started,
        finished_unix: unix_now(),
        files: vec!["survival.csv".into(), "fit.csv".into()],
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::config(format!("manifest serialization: {e}")))?;
    let manifest_path = write_text(out_dir, "manifest.json", &manifest_json)?;
    println!(
        "wrote {}, {}, {}",
        survival.display(),
        fit.display(),
        manifest_path.display()
    );

    let exit_code = match (spec.gating, spec.tolerance, outcome.deviation) {
        (false, _, _) => {
            if let Some(dev) = outcome.deviation {
                let tol = spec.tolerance.unwrap_or(f64::INFINITY);
                println!(
                    "informative run: deviation {:.4} vs tolerance {} (not gating)",
                    dev, tol
                );
            }
            0
        }
        (true, Some(tol), Some(dev)) => {
            if dev <= tol {
                println!("PASS: deviation {dev:.4} within {tol}");
                0
            } else {
                println!("FAIL: deviation {dev:.4} exceeds {tol}");
                1
            }
        }
        (true, Some(_), None) => {
            println!("no prediction to gate against; exiting 0");
            0
        }
        (true, None, _) => 0,
    };
    Ok(RunOutcome { exit_code })
}

/// Sanity gate for tolerance overrides; the prediction itself comes from the
/// scenario, never from the caller.
pub fn check_gate_inputs(plan: &ExperimentPlan, tolerance: Option<f64>) -> Result<()> {
    if let Some(tol) = tolerance {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::config(format!("tolerance must be positive, got {tol}")));
        }
        if predicted_exponent(&plan.scenario).prediction.is_none() {
            // An explicit tolerance on an unpredicted scenario is a user
            // mistake worth surfacing rather than silently ignoring.
            return Err(Error::config(
                "this scenario has no predicted exponent; drop the tolerance or pick a predicted scenario",
            ));
        }
    }
    Ok(())
}
