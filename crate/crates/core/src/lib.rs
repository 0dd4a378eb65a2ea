//! Monte Carlo laboratory for survival probabilities of iterated stochastic
//! processes `Z = X∘|Y|` (one-sided) and `Z = X∘Y` (two-sided): keyed random
//! streams, exact-at-grid path generators, outer-over-inner composition,
//! fluctuation probes, and survival-exponent estimation with exact small-case
//! oracles.

pub mod bridge;
pub mod composition;
pub mod error;
pub mod estimation;
pub mod fluctuation;
pub mod generators;
pub mod grid;
pub mod linalg;
pub mod oracles;
pub mod rng;
pub mod special;
pub mod validate;

pub use error::Error;
pub use estimation::{
    BudgetRule, ExperimentOutcome, ExperimentPlan, ExponentFit, GeometricGrid, InnerKind,
    OuterKind, Scenario, SupMode, SurvivalEstimate,
};
pub use generators::{FbmSpec, IbmSpec, IncrementLaw, LevySpec, ProcessSpec};
pub use grid::{PathSkeleton, TimeGrid, TwoSidedPath};
pub use rng::{Seed, Stream, StreamKey};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
