//! TOML experiment configs.
//!
//! Mirror types keep the file grammar independent of the library types and
//! reject unknown keys at every table. Enum tables are externally tagged:
//! `[scenario.bare]`, `[budget.auto]`, `law = "rademacher"`,
//! `law = { gaussian = { mean = 0.5, sd = 1.0 } }`.

use itersurv_core::composition::CompositionMode;
use itersurv_core::estimation::{
    BudgetRule, ExperimentPlan, GeometricGrid, InnerKind, OuterKind, Scenario, SupMode,
};
use itersurv_core::generators::{FbmSpec, IbmSpec, IncrementLaw, LevySpec, ProcessSpec};
use itersurv_core::{Error, Result, Seed};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub seed: u64,
    pub scenario: ScenarioCfg,
    pub grid: GridCfg,
    pub budget: BudgetCfg,
    #[serde(default = "one")]
    pub barrier: f64,
    /// Gates the exit code when the scenario has a predicted exponent.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "default_k_min")]
    pub k_min: u64,
    #[serde(default = "default_ci")]
    pub ci_level: f64,
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_k_min() -> u64 {
    25
}
fn default_ci() -> f64 {
    0.99
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum ScenarioCfg {
    Bare {
        process: ProcessCfg,
        sup: SupCfg,
    },
    Composed {
        mode: ModeCfg,
        outer: OuterCfg,
        inner: InnerCfg,
    },
    Chain {
        stages: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum ProcessCfg {
    Walk { law: LawCfg },
    Levy(LevyCfg),
    IntegratedBm { order: usize },
    Fbm { hurst: f64, #[serde(default)] two_sided: bool },
    Counterexample,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct LevyCfg {
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default)]
    pub jump_law: Option<LawCfg>,
    #[serde(default)]
    pub centered: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum LawCfg {
    Rademacher,
    Gaussian { mean: f64, sd: f64 },
    Laplace { mean: f64, scale: f64 },
    SignedWeibull { shape: f64, scale: f64, offset: f64 },
    Constant(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum SupCfg {
    Endpoint { step: f64 },
    BridgeExact { step: f64 },
    Discrete,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeCfg {
    OneSidedAbs,
    TwoSided,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum OuterCfg {
    CenteredDiffusion { sigma: f64 },
    Levy(LevyCfg),
    Counterexample,
    FbmGrid { hurst: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum InnerCfg {
    ContinuousGrid { process: ProcessCfg },
    Walk { law: LawCfg },
    LevyUnitGrid(LevyCfg),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum BudgetCfg {
    Uniform(u64),
    PerHorizon(Vec<u64>),
    Auto { n_min: u64, survivor_target: u64 },
}

impl LawCfg {
    fn build(self) -> IncrementLaw {
        match self {
            LawCfg::Rademacher => IncrementLaw::Rademacher,
            LawCfg::Gaussian { mean, sd } => IncrementLaw::Gaussian { mean, sd },
            LawCfg::Laplace { mean, scale } => IncrementLaw::Laplace { mean, scale },
            LawCfg::SignedWeibull { shape, scale, offset } => {
                IncrementLaw::SignedWeibull { shape, scale, offset }
            }
            LawCfg::Constant(v) => IncrementLaw::Constant(v),
        }
    }
}

impl LevyCfg {
    fn build(self) -> LevySpec {
        LevySpec {
            drift: self.drift,
            sigma: self.sigma,
            jump_rate: self.jump_rate,
            jump_law: self.jump_law.map_or(IncrementLaw::Constant(0.0), LawCfg::build),
            centered: self.centered,
        }
    }
}

impl ProcessCfg {
    fn build(self) -> ProcessSpec {
        match self {
            ProcessCfg::Walk { law } => ProcessSpec::Walk { law: law.build() },
            ProcessCfg::Levy(l) => ProcessSpec::Levy(l.build()),
            ProcessCfg::IntegratedBm { order } => ProcessSpec::IntegratedBm(IbmSpec { order }),
            ProcessCfg::Fbm { hurst, two_sided } => ProcessSpec::Fbm(FbmSpec { hurst, two_sided }),
            ProcessCfg::Counterexample => ProcessSpec::Counterexample,
        }
    }
}

impl ScenarioCfg {
    fn build(self) -> Scenario {
        match self {
            ScenarioCfg::Bare { process, sup } => Scenario::Bare {
                spec: process.build(),
                sup: match sup {
                    SupCfg::Endpoint { step } => SupMode::Endpoint { step },
                    SupCfg::BridgeExact { step } => SupMode::BridgeExact { step },
                    SupCfg::Discrete => SupMode::Discrete,
                },
            },
            ScenarioCfg::Composed { mode, outer, inner } => Scenario::Composed {
                outer: match outer {
                    OuterCfg::CenteredDiffusion { sigma } => OuterKind::CenteredDiffusion { sigma },
                    OuterCfg::Levy(l) => OuterKind::Levy(l.build()),
                    OuterCfg::Counterexample => OuterKind::Counterexample,
                    OuterCfg::FbmGrid { hurst } => OuterKind::FbmGrid { hurst },
                },
                inner: match inner {
                    InnerCfg::ContinuousGrid { process } => {
                        InnerKind::ContinuousGrid { spec: process.build() }
                    }
                    InnerCfg::Walk { law } => InnerKind::Walk { law: law.build() },
                    InnerCfg::LevyUnitGrid(l) => InnerKind::LevyUnitGrid { spec: l.build() },
                },
                mode: match mode {
                    ModeCfg::OneSidedAbs => CompositionMode::OneSidedAbs,
                    ModeCfg::TwoSided => CompositionMode::TwoSided,
                },
            },
            ScenarioCfg::Chain { stages } => Scenario::Chain { inner_stages: stages },
        }
    }
}

/// A plan plus the file-level report settings that are not the library's
/// business.
#[derive(Debug)]
pub struct ParsedConfig {
    pub plan: ExperimentPlan,
    pub tolerance: Option<f64>,
}

/// Parses and validates; every accepted config yields a runnable plan.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
    if let Some(tol) = file.tolerance {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::config(format!("tolerance must be positive, got {tol}")));
        }
    }
    let mut plan = ExperimentPlan::new(
        file.scenario.build(),
        GeometricGrid { t0: file.grid.t0, ratio: file.grid.ratio, count: file.grid.count },
        match file.budget {
            BudgetCfg::Uniform(n) => BudgetRule::Uniform(n),
            BudgetCfg::PerHorizon(v) => BudgetRule::PerHorizon(v),
            BudgetCfg::Auto { n_min, survivor_target } => {
                BudgetRule::Auto { n_min, survivor_target }
            }
        },
        Seed(file.seed),
    );
    plan.barrier = file.barrier;
    plan.k_min = file.k_min;
    plan.ci_level = file.ci_level;
    plan.parallel = file.parallel;
    plan.validate()?;
    Ok(ParsedConfig { plan, tolerance: file.tolerance })
}

pub fn parse_config_file(path: &std::path::Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
