//! Run manifests: everything needed to reproduce a result file.
//!
//! The digest covers the full plan (scenario, grid, budgets, barrier, seed,
//! fit settings), so two manifests with equal digests describe runs that
//! produce byte-identical CSVs.

use itersurv_core::estimation::ExperimentPlan;
use serde::Serialize;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub preset: String,
    pub seed: u64,
    /// Full parameter dump; paired with the seed it pins the run.
    pub scenario: String,
    pub barrier: f64,
    pub grid_t0: f64,
    pub grid_ratio: f64,
    pub grid_count: usize,
    pub budgets: Vec<u64>,
    pub k_min: u64,
    pub ci_level: f64,
    pub parallel: bool,
    pub config_digest: String,
    pub tolerance: Option<f64>,
    pub gating: bool,
    pub theta_pred: Option<f64>,
    pub theorem: Option<String>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub deviation: Option<f64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// FNV-1a over the canonical plan description.
pub fn plan_digest(plan: &ExperimentPlan) -> String {
    let canon = format!(
        "{:?}|{:?}|{:?}|barrier={}|seed={}|k_min={}|ci={}|idx={}",
        plan.scenario,
        plan.grid,
        plan.budget,
        plan.barrier,
        plan.seed.0,
        plan.k_min,
        plan.ci_level,
        plan.scenario_index,
    );
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canon.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::lookup_preset;
    use itersurv_core::Seed;

    #[test]
    fn digest_tracks_the_plan() {
        let a = lookup_preset("counterexample").unwrap();
        let mut b = lookup_preset("counterexample").unwrap();
        assert_eq!(plan_digest(&a.plan), plan_digest(&b.plan));
        b.plan.seed = Seed(99);
        assert_ne!(plan_digest(&a.plan), plan_digest(&b.plan));
    }
}
