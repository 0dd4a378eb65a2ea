//! Named experiments, one per predicted-exponent regime.
//!
//! Predicted exponents are never stored here: the runner asks
//! `predicted_exponent` on the preset's scenario, so a preset cannot drift
//! out of sync with the prediction table.

use itersurv_core::composition::CompositionMode;
use itersurv_core::estimation::{
    BudgetRule, ExperimentPlan, GeometricGrid, InnerKind, OuterKind, Scenario, SupMode,
};
use itersurv_core::generators::{FbmSpec, IbmSpec, IncrementLaw, LevySpec, ProcessSpec};
use itersurv_core::{Error, Result, Seed};

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub summary: String,
    pub plan: ExperimentPlan,
    pub tolerance: f64,
    /// Non-gating presets report the deviation but always exit 0.
    pub gating: bool,
}

fn plan(
    scenario: Scenario,
    grid: GeometricGrid,
    budget: BudgetRule,
    seed: u64,
) -> ExperimentPlan {
    ExperimentPlan::new(scenario, grid, budget, Seed(seed))
}

fn grid(t0: f64, ratio: f64, count: usize) -> GeometricGrid {
    GeometricGrid { t0, ratio, count }
}

fn auto(n_min: u64, survivor_target: u64) -> BudgetRule {
    BudgetRule::Auto { n_min, survivor_target }
}

fn laplace_jump_outer() -> OuterKind {
    OuterKind::Levy(LevySpec::compensated(
        1.0,
        1.0,
        IncrementLaw::Laplace { mean: 0.0, scale: 1.0 },
    ))
}

fn bm_inner() -> InnerKind {
    InnerKind::ContinuousGrid { spec: ProcessSpec::Levy(LevySpec::brownian(1.0)) }
}

fn preset(name: &str, summary: &str, plan: ExperimentPlan, tolerance: f64) -> Preset {
    Preset { name: name.into(), summary: summary.into(), plan, tolerance, gating: true }
}

/// Largest chain depth a desk-scale budget resolves against a flat slope.
const MAX_CHAIN: usize = 4;
/// Deeper integrators need budgets growing like T^{(2n+1)/4}.
const MAX_INTEGRATOR: usize = 2;

pub fn lookup_preset(name: &str) -> Result<Preset> {
    if let Some(rest) = name.strip_prefix("ibm-chain-") {
        let k: usize = rest
            .parse()
            .map_err(|_| Error::config(format!("chain depth in '{name}' must be an integer")))?;
        if k == 0 || k > MAX_CHAIN {
            return Err(Error::config(format!(
                "chain depth must lie in 1..={MAX_CHAIN}; slope resolution dies out beyond that"
            )));
        }
        let tol = if k <= 2 { 0.05 } else { 0.06 };
        return Ok(preset(
            name,
            &format!("Brownian outer over {k} nested Brownian ranges, exponent 2^-{}", k + 1),
            plan(Scenario::Chain { inner_stages: k }, grid(256.0, 4.0, 6), auto(20_000, 5_000), 1),
            tol,
        ));
    }
    if let Some(rest) = name.strip_prefix("integrated-inner-") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::config(format!("integrator order in '{name}' must be an integer")))?;
        if n == 0 || n > MAX_INTEGRATOR {
            return Err(Error::config(format!(
                "integrator order must lie in 1..={MAX_INTEGRATOR}; budgets grow like T^(2n+1)/4"
            )));
        }
        let (g, budget, tol) = if n == 1 {
            (grid(128.0, 2.0, 5), auto(20_000, 3_000), 0.08)
        } else {
            (grid(32.0, 2.0, 5), auto(20_000, 2_000), 0.10)
        };
        return Ok(preset(
            name,
            &format!("Brownian outer over |{n}-fold integrated BM|, exponent (2n+1)/4"),
            plan(
                Scenario::Composed {
                    outer: OuterKind::CenteredDiffusion { sigma: 1.0 },
                    inner: InnerKind::ContinuousGrid {
                        spec: ProcessSpec::IntegratedBm(IbmSpec { order: n }),
                    },
                    mode: CompositionMode::OneSidedAbs,
                },
                g,
                budget,
                1,
            ),
            tol,
        ));
    }
    if let Some(rest) = name.strip_prefix("fbm-outer-") {
        let hurst: f64 = rest
            .parse()
            .map_err(|_| Error::config(format!("Hurst index in '{name}' must be a number")))?;
        if !(hurst >= 0.1 && hurst <= 0.9) {
            return Err(Error::config(
                "Hurst index outside [0.1, 0.9]: the outer grid pitch no longer resolves the increments",
            ));
        }
        return Ok(preset(
            name,
            "two-sided fractional outer over a Brownian range; exponent 1/2 for every H",
            plan(
                Scenario::Composed {
                    outer: OuterKind::FbmGrid { hurst },
                    inner: bm_inner(),
                    mode: CompositionMode::TwoSided,
                },
                grid(256.0, 2.0, 6),
                auto(20_000, 3_000),
                1,
            ),
            0.07,
        ));
    }
    match name {
        "bm-baseline" => Ok(preset(
            name,
            "Brownian motion below a unit barrier, exact bridge supremum; exponent 1/2",
            plan(
                Scenario::Bare {
                    spec: ProcessSpec::Levy(LevySpec::brownian(1.0)),
                    sup: SupMode::BridgeExact { step: 1.0 / 64.0 },
                },
                grid(256.0, 2.0, 7),
                BudgetRule::Uniform(200_000),
                1,
            ),
            0.05,
        )),
        "ibm-one-sided" => Ok(preset(
            name,
            "Brownian outer over a Brownian range; exponent 1/4",
            plan(
                Scenario::Composed {
                    outer: OuterKind::CenteredDiffusion { sigma: 1.0 },
                    inner: bm_inner(),
                    mode: CompositionMode::OneSidedAbs,
                },
                grid(1024.0, 2.0, 7),
                auto(20_000, 2_000),
                1,
            ),
            0.05,
        )),
        "levy-rw-centered" => Ok(preset(
            name,
            "jump diffusion at the visited sites of a centered walk; exponent 1/4",
            plan(
                Scenario::Composed {
                    outer: laplace_jump_outer(),
                    inner: InnerKind::Walk { law: IncrementLaw::Rademacher },
                    mode: CompositionMode::OneSidedAbs,
                },
                grid(1024.0, 2.0, 7),
                auto(20_000, 2_000),
                1,
            ),
            0.05,
        )),
        "levy-rw-drift" => Ok(preset(
            name,
            "jump diffusion at the visited sites of a drifted walk; exponent 1/2",
            plan(
                Scenario::Composed {
                    outer: laplace_jump_outer(),
                    inner: InnerKind::Walk {
                        law: IncrementLaw::Gaussian { mean: 0.5, sd: 1.0 },
                    },
                    mode: CompositionMode::OneSidedAbs,
                },
                grid(128.0, 2.0, 6),
                auto(20_000, 2_000),
                1,
            ),
            0.06,
        )),
        "levy-subordinator" => Ok(preset(
            name,
            "symmetric jump diffusion at Poisson subordinator times; exponent 1/2 despite the drift",
            plan(
                Scenario::Composed {
                    outer: laplace_jump_outer(),
                    inner: InnerKind::LevyUnitGrid {
                        spec: LevySpec {
                            drift: 0.0,
                            sigma: 0.0,
                            jump_rate: 1.0,
                            jump_law: IncrementLaw::Constant(1.0),
                            centered: false,
                        },
                    },
                    mode: CompositionMode::OneSidedAbs,
                },
                grid(128.0, 2.0, 6),
                auto(20_000, 2_000),
                1,
            ),
            0.07,
        )),
        "iterated-bm-two-sided" => Ok(preset(
            name,
            "Brownian outer over both branches of a Brownian range; exponent 1/2",
            plan(
                Scenario::Composed {
                    outer: OuterKind::CenteredDiffusion { sigma: 1.0 },
                    inner: bm_inner(),
                    mode: CompositionMode::TwoSided,
                },
                grid(256.0, 2.0, 6),
                auto(20_000, 3_000),
                1,
            ),
            0.07,
        )),
        "two-sided-levy-rw" => Ok(preset(
            name,
            "jump diffusion over both walk branches; exponent 1/2 with or without drift",
            plan(
                Scenario::Composed {
                    outer: laplace_jump_outer(),
                    inner: InnerKind::Walk { law: IncrementLaw::Rademacher },
                    mode: CompositionMode::TwoSided,
                },
                grid(256.0, 2.0, 6),
                auto(20_000, 3_000),
                1,
            ),
            0.07,
        )),
        "fbm-one-sided-molchan" => Ok(Preset {
            name: name.into(),
            summary: "bare fractional path below a unit barrier, H = 0.25; exponent 1 - H. \
                      Convergence is log-slow; informative, not gating"
                .into(),
            plan: plan(
                Scenario::Bare {
                    spec: ProcessSpec::Fbm(FbmSpec { hurst: 0.25, two_sided: false }),
                    sup: SupMode::Endpoint { step: 1.0 / 16.0 },
                },
                grid(16.0, 2.0, 6),
                BudgetRule::Uniform(200_000),
                1,
            ),
            tolerance: 0.10,
            gating: false,
        }),
        "counterexample" => Ok(preset(
            name,
            "spike process with the exact survival law 1/(floor(T + 1/2) + 1)",
            plan(
                Scenario::Bare { spec: ProcessSpec::Counterexample, sup: SupMode::Discrete },
                grid(1.5, 3.0, 8),
                auto(50_000, 20_000),
                7,
            ),
            0.10,
        )),
        _ => Err(Error::config(format!("unknown preset '{name}'"))),
    }
}

/// Rows for `list-presets` and for the unknown-preset error.
pub fn preset_listing() -> Vec<(String, String)> {
    let fixed = [
        "bm-baseline",
        "ibm-one-sided",
        "levy-rw-centered",
        "levy-rw-drift",
        "levy-subordinator",
        "iterated-bm-two-sided",
        "two-sided-levy-rw",
        "fbm-one-sided-molchan",
        "counterexample",
    ];
    let mut rows: Vec<(String, String)> = fixed
        .iter()
        .map(|n| {
            let p = lookup_preset(n).expect("fixed presets resolve");
            (p.name, p.summary)
        })
        .collect();
    rows.push((
        "ibm-chain-<k>".into(),
        format!("k nested Brownian stages, k in 1..={MAX_CHAIN}; exponent 2^-(k+1)"),
    ));
    rows.push((
        "integrated-inner-<n>".into(),
        format!("n-fold integrated inner, n in 1..={MAX_INTEGRATOR}; exponent (2n+1)/4"),
    ));
    rows.push((
        "fbm-outer-<H>".into(),
        "fractional outer with Hurst H in [0.1, 0.9], e.g. fbm-outer-0.25; exponent 1/2".into(),
    ));
    rows
}

/// Multiplies every sample budget; floors at one sample.
pub fn scale_budget(rule: &mut BudgetRule, factor: f64) -> Result<()> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::config(format!("budget scale must be positive, got {factor}")));
    }
    let scale = |n: u64| ((n as f64 * factor).ceil() as u64).max(1);
    match rule {
        BudgetRule::Uniform(n) => *n = scale(*n),
        BudgetRule::PerHorizon(v) => v.iter_mut().for_each(|n| *n = scale(*n)),
        BudgetRule::Auto { n_min, survivor_target } => {
            *n_min = scale(*n_min);
            *survivor_target = scale(*survivor_target);
        }
    }
    Ok(())
}
