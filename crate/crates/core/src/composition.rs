//! Evaluation of an outer process over the range of an inner path.
//!
//! The composed process is Z = X∘|Y| (one-sided) or Z = X∘Y with
//! independent branches X⁺, X⁻ (two-sided). The inner path contributes its
//! grid values as query points; the outer process is sampled exactly at
//! those points and the supremum is compared against a barrier.
//!
//! The anchor Z_0 = X(0) = 0 always participates in the supremum. It is a
//! constant, not a query, so query sets cover inner indices k ≥ 1 only.
//! With a negative barrier the anchor kills every path; that regime is
//! outside the supported survival asymptotics and the estimation layer
//! flags it.

use crate::error::Error;
use crate::generators::{IbmSpec, IncrementLaw, LevySpec, ProcessSpec};
use crate::grid::PathSkeleton;
use crate::linalg::Cholesky;
use crate::rng::Stream;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    /// Z_t = X(|Y_t|): one outer branch queried at absolute inner values.
    OneSidedAbs,
    /// Z_t = X(Y_t): plus branch for Y_t ≥ 0, minus branch for Y_t < 0.
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Sorted unique nonnegative query points, with the provenance map from
/// inner grid indices (k ≥ 1) back to positions in `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    values: Vec<f64>,
    back_map: Vec<(usize, usize)>,
}

impl QuerySet {
    fn empty() -> Self {
        QuerySet { values: Vec::new(), back_map: Vec::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pairs (inner grid index, query index), ascending in inner index.
    pub fn back_map(&self) -> &[(usize, usize)] {
        &self.back_map
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest query, i.e. the reach of this branch of the inner range.
    pub fn reach(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeStrategy {
    /// Outer evaluated at the inner grid values only. The right event for
    /// discrete inner processes.
    ExactAtQueries,
    /// Queries augmented with a lattice of pitch `fill_step` (capped at
    /// 10⁻² of the branch reach per path) so the supremum approaches the
    /// sup over the full swept interval. Valid for continuous inner only.
    DenseRange { fill_step: f64 },
}

impl RangeStrategy {
    /// Default fill pitch for a continuous inner sampled at `inner_step`.
    pub fn dense_for_inner_step(inner_step: f64) -> Self {
        RangeStrategy::DenseRange { fill_step: inner_step.powf(1.5) }
    }

    pub fn validate(&self, inner_continuous: bool) -> Result<()> {
        match *self {
            RangeStrategy::ExactAtQueries => Ok(()),
            RangeStrategy::DenseRange { fill_step } => {
                if !(fill_step > 0.0) || !fill_step.is_finite() {
                    Err(Error::config(format!("fill step must be positive, got {fill_step}")))
                } else if !inner_continuous {
                    Err(Error::config(
                        "range filling assumes the inner range is an interval; \
                         a discrete inner visits isolated points, use ExactAtQueries",
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Outer-branch streams: `plus` drives X⁺ (and the single branch in
/// one-sided mode), `minus` drives X⁻.
pub struct OuterStreams {
    pub plus: Stream,
    pub minus: Stream,
}

/// Splits the post-anchor inner values into branch query sets.
pub fn build_queries(inner: &PathSkeleton, mode: CompositionMode) -> (QuerySet, QuerySet) {
    let values = inner.values();
    let mut tagged: Vec<(usize, Branch, f64)> = Vec::with_capacity(values.len() - 1);
    for (k, &v) in values.iter().enumerate().skip(1) {
        match mode {
            CompositionMode::OneSidedAbs => tagged.push((k, Branch::Plus, v.abs())),
            CompositionMode::TwoSided => {
                // Zero goes to the plus branch: X⁺(0) = X⁻(0) = 0 so the
                // choice is observationally neutral, fixing it keeps runs
                // deterministic.
                if v >= 0.0 {
                    tagged.push((k, Branch::Plus, v));
                } else {
                    tagged.push((k, Branch::Minus, -v));
                }
            }
        }
    }
    let mut plus = QuerySet::empty();
    let mut minus = QuerySet::empty();
    for branch in [Branch::Plus, Branch::Minus] {
        let mut pairs: Vec<(f64, usize)> = tagged
            .iter()
            .filter(|(_, b, _)| *b == branch)
            .map(|&(k, _, q)| (q, k))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let set = match branch {
            Branch::Plus => &mut plus,
            Branch::Minus => &mut minus,
        };
        for (q, k) in pairs {
            if set.values.last() != Some(&q) {
                set.values.push(q);
            }
            set.back_map.push((k, set.values.len() - 1));
        }
        set.back_map.sort_by_key(|&(k, _)| k);
    }
    (plus, minus)
}

/// Samples a Lévy process at sorted unique nonnegative points by exact
/// sequential increments over the gaps; X(0) = 0.
pub fn evaluate_levy_at(queries: &[f64], spec: &LevySpec, stream: &mut Stream) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(queries.len());
    let mut t = 0.0;
    let mut x = 0.0;
    for &q in queries {
        debug_assert!(q >= t, "queries must be sorted unique nonnegative");
        if q > t {
            x += spec.sample_increment(q - t, stream);
            t = q;
        }
        out.push(x);
    }
    Ok(out)
}

/// Samples a unit-step random walk at integer query points.
pub fn evaluate_walk_at(queries: &[f64], law: &IncrementLaw, stream: &mut Stream) -> Result<Vec<f64>> {
    law.validate()?;
    let mut out = Vec::with_capacity(queries.len());
    let mut pos = 0u64;
    let mut x = 0.0;
    for &q in queries {
        let rounded = q.round();
        if (q - rounded).abs() > 1e-9 || rounded < 0.0 {
            return Err(Error::config(format!(
                "walk outer is defined on integer times, got query {q}"
            )));
        }
        let target = rounded as u64;
        while pos < target {
            x += law.sample(stream);
            pos += 1;
        }
        out.push(x);
    }
    Ok(out)
}

/// Samples the n-fold Brownian integrator at sorted points by the exact
/// state recursion over the gaps.
pub fn evaluate_ibm_at(queries: &[f64], spec: IbmSpec, stream: &mut Stream) -> Result<Vec<f64>> {
    spec.validate()?;
    let dim = spec.order + 1;
    let mut state = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut eta = vec![0.0; dim];
    let mut transition = vec![0.0; dim * dim];
    let mut chol: Option<(f64, Cholesky)> = None;
    let mut out = Vec::with_capacity(queries.len());
    let mut t = 0.0;
    for &q in queries {
        if q > t {
            let h = q - t;
            let reuse = matches!(&chol, Some((hh, _)) if *hh == h);
            if !reuse {
                let factor =
                    Cholesky::factor(&crate::generators::ibm_step_covariance(spec.order, h), dim, "integrator gap noise")?;
                chol = Some((h, factor));
            }
            for k in 0..dim {
                for j in 0..=k {
                    transition[k * dim + j] = h.powi((k - j) as i32) / factorial(k - j);
                }
            }
            for zi in z.iter_mut() {
                *zi = stream.next_standard_normal();
            }
            chol.as_ref().unwrap().1.multiply(&z, &mut eta);
            for k in 0..dim {
                let mut s = eta[k];
                for j in 0..=k {
                    s += transition[k * dim + j] * state[j];
                }
                next[k] = s;
            }
            std::mem::swap(&mut state, &mut next);
            t = q;
        }
        out.push(state[dim - 1]);
    }
    Ok(out)
}

/// Spike-process values: nonzero only at times n − 1/2, n ≥ 1, where the
/// value is 2 with probability 1/(n+1). One draw per spike query; sorted
/// unique queries visit each spike at most once, so the joint law is that
/// of independent spikes.
pub fn evaluate_counterexample_at(queries: &[f64], stream: &mut Stream) -> Vec<f64> {
    queries
        .iter()
        .map(|&q| {
            let n = (q + 0.5).round();
            if n >= 1.0 && (q + 0.5 - n).abs() < 1e-9 {
                if stream.next_uniform() * (n + 1.0) < 1.0 {
                    2.0
                } else {
                    0.0
                }
            } else {
                0.0
            }
        })
        .collect()
}

const GAUSSIAN_QUERY_CAP: usize = 4096;

/// Exact joint Gaussian draw at arbitrary (signed) coordinates via dense
/// factorization of the covariance matrix.
pub fn evaluate_gaussian_at<F>(coords: &[f64], covariance: F, stream: &mut Stream) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    let m = coords.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    if m > GAUSSIAN_QUERY_CAP {
        return Err(Error::QueryCapExceeded { count: m, cap: GAUSSIAN_QUERY_CAP });
    }
    let mut cov = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let c = covariance(coords[i], coords[j]);
            cov[i * m + j] = c;
            cov[j * m + i] = c;
        }
    }
    let chol = Cholesky::factor(&cov, m, "outer covariance at query points")?;
    let z: Vec<f64> = (0..m).map(|_| stream.next_standard_normal()).collect();
    let mut out = vec![0.0; m];
    chol.multiply(&z, &mut out);
    Ok(out)
}

/// Two-sided fBm covariance ½(|s|^2H + |t|^2H − |t−s|^2H), valid for
/// signed coordinates.
pub fn fbm_covariance(hurst: f64) -> impl Fn(f64, f64) -> f64 {
    let two_h = 2.0 * hurst;
    move |s: f64, t: f64| {
        0.5 * (s.abs().powf(two_h) + t.abs().powf(two_h) - (t - s).abs().powf(two_h))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Merges a branch's queries with a fill lattice of pitch
/// min(fill_step, reach/100) covering (0, reach].
fn fill_branch(values: &[f64], fill_step: f64) -> Vec<f64> {
    let reach = values.last().copied().unwrap_or(0.0);
    if reach <= 0.0 {
        return values.to_vec();
    }
    let step = fill_step.min(reach / 100.0);
    let n_fill = (reach / step).ceil() as usize;
    let mut merged = Vec::with_capacity(values.len() + n_fill);
    merged.extend_from_slice(values);
    for j in 1..=n_fill {
        merged.push((j as f64 * step).min(reach));
    }
    merged.sort_by(f64::total_cmp);
    merged.dedup();
    merged
}

fn branch_queries(
    plus: &QuerySet,
    minus: &QuerySet,
    strategy: &RangeStrategy,
) -> (Vec<f64>, Vec<f64>) {
    match *strategy {
        RangeStrategy::ExactAtQueries => (plus.values.clone(), minus.values.clone()),
        RangeStrategy::DenseRange { fill_step } => (
            fill_branch(&plus.values, fill_step),
            fill_branch(&minus.values, fill_step),
        ),
    }
}

fn evaluate_branch(
    outer: &ProcessSpec,
    queries: &[f64],
    stream: &mut Stream,
) -> Result<Vec<f64>> {
    match outer {
        ProcessSpec::Levy(spec) => evaluate_levy_at(queries, spec, stream),
        ProcessSpec::Walk { law } => evaluate_walk_at(queries, law, stream),
        ProcessSpec::IntegratedBm(spec) => evaluate_ibm_at(queries, *spec, stream),
        ProcessSpec::Counterexample => Ok(evaluate_counterexample_at(queries, stream)),
        ProcessSpec::Fbm(spec) => {
            evaluate_gaussian_at(queries, fbm_covariance(spec.hurst), stream)
        }
    }
}

/// Evaluates both branches of the composition. For fBm outers the branches
/// are dependent; a single joint draw on the plus stream covers signed
/// coordinates. All other outers use independent branch streams.
fn evaluate_branches(
    outer: &ProcessSpec,
    plus_queries: &[f64],
    minus_queries: &[f64],
    streams: &mut OuterStreams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if let ProcessSpec::Fbm(spec) = outer {
        let mut coords = Vec::with_capacity(plus_queries.len() + minus_queries.len());
        coords.extend_from_slice(plus_queries);
        coords.extend(minus_queries.iter().map(|&q| -q));
        let joint = evaluate_gaussian_at(&coords, fbm_covariance(spec.hurst), &mut streams.plus)?;
        let (p, m) = joint.split_at(plus_queries.len());
        return Ok((p.to_vec(), m.to_vec()));
    }
    let plus_vals = evaluate_branch(outer, plus_queries, &mut streams.plus)?;
    let minus_vals = evaluate_branch(outer, minus_queries, &mut streams.minus)?;
    Ok((plus_vals, minus_vals))
}

/// Whether sup Z over the inner's swept range stays at or below `barrier`.
///
/// Returns the indicator together with the full supremum (anchor Z_0 = 0
/// included), so one simulation serves a whole barrier sweep.
pub fn compose_survival_indicator(
    outer: &ProcessSpec,
    inner: &PathSkeleton,
    inner_continuous: bool,
    barrier: f64,
    mode: CompositionMode,
    strategy: &RangeStrategy,
    streams: &mut OuterStreams,
) -> Result<(bool, f64)> {
    outer.validate()?;
    strategy.validate(inner_continuous)?;
    let (plus, minus) = build_queries(inner, mode);
    let (plus_queries, minus_queries) = branch_queries(&plus, &minus, strategy);
    let (plus_vals, minus_vals) = evaluate_branches(outer, &plus_queries, &minus_queries, streams)?;
    let mut max_value = 0.0f64;
    for v in plus_vals.iter().chain(minus_vals.iter()) {
        max_value = max_value.max(*v);
    }
    Ok((max_value <= barrier, max_value))
}

/// Reconstructs the composed path Z on the inner grid (exact queries only).
pub fn compose_path(
    outer: &ProcessSpec,
    inner: &PathSkeleton,
    mode: CompositionMode,
    streams: &mut OuterStreams,
) -> Result<PathSkeleton> {
    outer.validate()?;
    let (plus, minus) = build_queries(inner, mode);
    let (plus_vals, minus_vals) = evaluate_branches(outer, &plus.values, &minus.values, streams)?;
    let mut z = vec![0.0; inner.values().len()];
    for &(k, qi) in &plus.back_map {
        z[k] = plus_vals[qi];
    }
    for &(k, qi) in &minus.back_map {
        z[k] = minus_vals[qi];
    }
    PathSkeleton::new(inner.grid(), z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_random_walk;
    use crate::grid::TimeGrid;
    use crate::oracles::srw_iterated_enum;
    use crate::rng::{derive_stream, Seed, StreamKey, CHANNEL_INNER, CHANNEL_OUTER_MINUS, CHANNEL_OUTER_PLUS};
    use proptest::prelude::*;

    fn streams(seed: u64, sample: u64) -> OuterStreams {
        OuterStreams {
            plus: derive_stream(Seed(seed), StreamKey::new(0, 0, sample, CHANNEL_OUTER_PLUS)),
            minus: derive_stream(Seed(seed), StreamKey::new(0, 0, sample, CHANNEL_OUTER_MINUS)),
        }
    }

    fn inner_stream(seed: u64, sample: u64) -> Stream {
        derive_stream(Seed(seed), StreamKey::new(0, 0, sample, CHANNEL_INNER))
    }

    fn path(values: &[f64]) -> PathSkeleton {
        let grid = TimeGrid::new(1.0, values.len() - 1).unwrap();
        PathSkeleton::new(grid, values.to_vec()).unwrap()
    }

    #[test]
    fn queries_one_sided_abs() {
        let (plus, minus) = build_queries(&path(&[0.0, 0.5, -1.0]), CompositionMode::OneSidedAbs);
        assert_eq!(plus.values(), &[0.5, 1.0]);
        assert!(minus.is_empty());
        assert_eq!(plus.back_map(), &[(1, 0), (2, 1)]);
    }

    #[test]
    fn queries_two_sided_split() {
        let (plus, minus) = build_queries(&path(&[0.0, 0.5, -1.0]), CompositionMode::TwoSided);
        assert_eq!(plus.values(), &[0.5]);
        assert_eq!(minus.values(), &[1.0]);
        assert_eq!(plus.back_map(), &[(1, 0)]);
        assert_eq!(minus.back_map(), &[(2, 0)]);
    }

    #[test]
    fn queries_zero_goes_to_plus() {
        let (plus, minus) = build_queries(&path(&[0.0, 0.0, 0.0]), CompositionMode::TwoSided);
        assert_eq!(plus.values(), &[0.0]);
        assert!(minus.is_empty());
        let (plus, minus) = build_queries(&path(&[0.0, 0.0]), CompositionMode::OneSidedAbs);
        assert_eq!(plus.values(), &[0.0]);
        assert!(minus.is_empty());
    }

    #[test]
    fn levy_at_zero_query_is_zero() {
        let spec = LevySpec::brownian(1.0);
        let mut s = streams(20, 0).plus;
        assert_eq!(evaluate_levy_at(&[0.0], &spec, &mut s).unwrap(), vec![0.0]);
    }

    #[test]
    fn levy_pure_drift_at_queries() {
        let spec = LevySpec {
            drift: 2.0,
            sigma: 0.0,
            jump_rate: 0.0,
            jump_law: IncrementLaw::Constant(0.0),
            centered: false,
        };
        let mut s = streams(21, 0).plus;
        let vals = evaluate_levy_at(&[0.5, 1.5], &spec, &mut s).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn levy_gap_increments_have_exact_moments() {
        let spec = LevySpec {
            drift: 0.5,
            sigma: 1.0,
            jump_rate: 0.0,
            jump_law: IncrementLaw::Constant(0.0),
            centered: false,
        };
        let queries = [0.3, 1.0, 2.5];
        let n = 100_000u64;
        let mut sums = [0.0f64; 3];
        let mut sumsqs = [0.0f64; 3];
        for i in 0..n {
            let mut s = streams(22, i).plus;
            let vals = evaluate_levy_at(&queries, &spec, &mut s).unwrap();
            let incs = [vals[0], vals[1] - vals[0], vals[2] - vals[1]];
            for (j, d) in incs.iter().enumerate() {
                sums[j] += d;
                sumsqs[j] += d * d;
            }
        }
        let gaps = [0.3, 0.7, 1.5];
        for j in 0..3 {
            let mean = sums[j] / n as f64;
            let var = sumsqs[j] / n as f64 - mean * mean;
            let se_mean = (gaps[j] / n as f64).sqrt();
            let se_var = gaps[j] * (2.0 / n as f64).sqrt();
            assert!((mean - 0.5 * gaps[j]).abs() < 5.0 * se_mean, "gap {j} mean {mean}");
            assert!((var - gaps[j]).abs() < 5.0 * se_var, "gap {j} var {var}");
        }
    }

    #[test]
    fn brownian_variance_at_query_two() {
        let spec = LevySpec::brownian(1.0);
        let n = 100_000u64;
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut s = streams(23, i).plus;
            let vals = evaluate_levy_at(&[2.0], &spec, &mut s).unwrap();
            sumsq += vals[0] * vals[0];
        }
        let var = sumsq / n as f64;
        assert!((var - 2.0).abs() < 5.0 * 2.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn gaussian_at_empty_and_marginal() {
        let mut s = streams(24, 0).plus;
        let empty = evaluate_gaussian_at(&[], fbm_covariance(0.5), &mut s).unwrap();
        assert!(empty.is_empty());

        let n = 100_000u64;
        let t = 1.7;
        let cov = fbm_covariance(0.3);
        let target = cov(t, t);
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut s = streams(25, i).plus;
            let vals = evaluate_gaussian_at(&[t], &cov, &mut s).unwrap();
            sumsq += vals[0] * vals[0];
        }
        let var = sumsq / n as f64;
        assert!((var - target).abs() < 5.0 * target * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn gaussian_two_sided_half_is_uncorrelated() {
        // H = 1/2: branch values at ±1 are independent.
        let cov = fbm_covariance(0.5);
        assert_eq!(cov(1.0, -1.0), 0.0);
        let n = 100_000u64;
        let mut cross = 0.0;
        for i in 0..n {
            let mut s = streams(26, i).plus;
            let vals = evaluate_gaussian_at(&[1.0, -1.0], &cov, &mut s).unwrap();
            cross += vals[0] * vals[1];
        }
        let emp = cross / n as f64;
        assert!(emp.abs() < 5.0 / (n as f64).sqrt(), "cross {emp}");
    }

    #[test]
    fn gaussian_query_cap_enforced() {
        let coords = vec![0.5; GAUSSIAN_QUERY_CAP + 1];
        let mut s = streams(27, 0).plus;
        assert!(matches!(
            evaluate_gaussian_at(&coords, fbm_covariance(0.5), &mut s),
            Err(Error::QueryCapExceeded { .. })
        ));
    }

    #[test]
    fn walk_outer_rejects_fractional_queries() {
        let mut s = streams(28, 0).plus;
        let r = evaluate_walk_at(&[1.0, 2.5], &IncrementLaw::Rademacher, &mut s);
        assert!(r.is_err());
    }

    #[test]
    fn zero_inner_survives_any_levy_outer() {
        let inner = path(&[0.0, 0.0, 0.0, 0.0]);
        let outer = ProcessSpec::Levy(LevySpec::brownian(1.0));
        let (survived, max) = compose_survival_indicator(
            &outer,
            &inner,
            false,
            1.0,
            CompositionMode::OneSidedAbs,
            &RangeStrategy::ExactAtQueries,
            &mut streams(29, 0),
        )
        .unwrap();
        assert!(survived);
        assert_eq!(max, 0.0);
    }

    #[test]
    fn spike_outer_never_sees_integer_queries() {
        let outer = ProcessSpec::Counterexample;
        for i in 0..50u64 {
            let mut s = inner_stream(30, i);
            let inner = gen_random_walk(40, &IncrementLaw::Rademacher, &mut s).unwrap();
            let (survived, max) = compose_survival_indicator(
                &outer,
                &inner,
                false,
                1.0,
                CompositionMode::OneSidedAbs,
                &RangeStrategy::ExactAtQueries,
                &mut streams(30, i),
            )
            .unwrap();
            assert!(survived);
            assert_eq!(max, 0.0);
        }
    }

    #[test]
    fn spike_outer_hits_half_integers() {
        // Query at 0.5 is spike 1: value 2 with probability 1/2.
        let n = 20_000u64;
        let mut hits = 0u64;
        for i in 0..n {
            let mut s = streams(31, i).plus;
            let vals = evaluate_counterexample_at(&[0.5, 1.0], &mut s);
            assert_eq!(vals[1], 0.0);
            if vals[0] == 2.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        assert!((p - 0.5).abs() < 5.0 * (0.25 / n as f64).sqrt(), "p {p}");
    }

    #[test]
    fn iterated_walk_matches_enumeration() {
        // Two-step inner, unit barrier at 0: survival probability 1/2.
        let exact = srw_iterated_enum(2, 0).unwrap().value;
        let n = 40_000u64;
        let mut survived = 0u64;
        for i in 0..n {
            let mut s = inner_stream(32, i);
            let inner = gen_random_walk(2, &IncrementLaw::Rademacher, &mut s).unwrap();
            let (ok, _) = compose_survival_indicator(
                &ProcessSpec::Walk { law: IncrementLaw::Rademacher },
                &inner,
                false,
                0.0,
                CompositionMode::OneSidedAbs,
                &RangeStrategy::ExactAtQueries,
                &mut streams(32, i),
            )
            .unwrap();
            if ok {
                survived += 1;
            }
        }
        let p = survived as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 5.0 * se, "p {p} vs exact {exact}");
    }

    #[test]
    fn dense_range_needs_continuous_inner() {
        let inner = path(&[0.0, 1.0]);
        let r = compose_survival_indicator(
            &ProcessSpec::Levy(LevySpec::brownian(1.0)),
            &inner,
            false,
            1.0,
            CompositionMode::OneSidedAbs,
            &RangeStrategy::DenseRange { fill_step: 0.1 },
            &mut streams(33, 0),
        );
        assert!(r.is_err());
    }

    #[test]
    fn dense_fill_covers_reach() {
        let filled = fill_branch(&[0.4, 2.0], 0.5);
        assert_eq!(*filled.last().unwrap(), 2.0);
        assert!(filled.windows(2).all(|w| w[1] > w[0]));
        assert!(filled.contains(&0.4));
        // Pitch capped at reach/100.
        assert!(filled.len() >= 100);
        assert!(fill_branch(&[], 0.5).is_empty());
    }

    #[test]
    fn dense_range_runs_on_continuous_inner() {
        let mut s = inner_stream(34, 0);
        let grid = TimeGrid::new(0.125, 32).unwrap();
        let inner = crate::generators::gen_levy_path(grid, &LevySpec::brownian(1.0), &mut s).unwrap();
        let (_, max_dense) = compose_survival_indicator(
            &ProcessSpec::Levy(LevySpec::brownian(1.0)),
            &inner,
            true,
            1.0,
            CompositionMode::OneSidedAbs,
            &RangeStrategy::dense_for_inner_step(0.125),
            &mut streams(34, 0),
        )
        .unwrap();
        assert!(max_dense.is_finite());
    }

    #[test]
    fn composed_path_shares_duplicate_queries() {
        let inner = path(&[0.0, 1.0, -1.0, 1.0]);
        let z = compose_path(
            &ProcessSpec::Levy(LevySpec::brownian(1.0)),
            &inner,
            CompositionMode::OneSidedAbs,
            &mut streams(35, 0),
        )
        .unwrap();
        assert_eq!(z.values()[0], 0.0);
        assert_eq!(z.values()[1], z.values()[2]);
        assert_eq!(z.values()[2], z.values()[3]);
        assert_ne!(z.values()[1], 0.0);
    }

    fn compose_with(seed: u64, inner: &PathSkeleton, barrier: f64, mode: CompositionMode) -> (bool, f64) {
        compose_survival_indicator(
            &ProcessSpec::Levy(LevySpec::brownian(1.0)),
            inner,
            false,
            barrier,
            mode,
            &RangeStrategy::ExactAtQueries,
            &mut streams(seed, 7),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn barrier_monotonicity(steps in prop::collection::vec(-3.0f64..3.0, 1..12), b1 in -1.0f64..2.0, shift in 0.0f64..2.0) {
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for s in steps {
                acc += s;
                values.push(acc);
            }
            let inner = path(&values);
            let b2 = b1 + shift;
            let (s1, m1) = compose_with(36, &inner, b1, CompositionMode::OneSidedAbs);
            let (s2, m2) = compose_with(36, &inner, b2, CompositionMode::OneSidedAbs);
            prop_assert!(u8::from(s1) <= u8::from(s2));
            prop_assert_eq!(m1, m2);
        }

        #[test]
        fn one_and_two_sided_agree_on_nonnegative_inner(steps in prop::collection::vec(0.0f64..2.0, 1..10), seed in 0u64..500) {
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for s in steps {
                acc += s;
                values.push(acc);
            }
            let inner = path(&values);
            let one = compose_with(seed, &inner, 1.0, CompositionMode::OneSidedAbs);
            let two = compose_with(seed, &inner, 1.0, CompositionMode::TwoSided);
            prop_assert_eq!(one, two);
        }

        #[test]
        fn query_sets_partition_inner_indices(steps in prop::collection::vec(-2.0f64..2.0, 1..15)) {
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for s in steps {
                acc += s;
                values.push(acc);
            }
            let inner = path(&values);
            for mode in [CompositionMode::OneSidedAbs, CompositionMode::TwoSided] {
                let (plus, minus) = build_queries(&inner, mode);
                let mut seen: Vec<usize> = plus.back_map().iter().chain(minus.back_map()).map(|&(k, _)| k).collect();
                seen.sort_unstable();
                let expect: Vec<usize> = (1..values.len()).collect();
                prop_assert_eq!(seen, expect);
                for set in [&plus, &minus] {
                    prop_assert!(set.values().windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(set.values().iter().all(|&q| q >= 0.0));
                    for &(k, qi) in set.back_map() {
                        prop_assert_eq!(set.values()[qi], values[k].abs());
                    }
                }
            }
        }

        #[test]
        fn spike_composition_on_integer_walks_always_survives(seed in 0u64..300, n_steps in 1usize..30) {
            let mut s = inner_stream(37, seed);
            let inner = gen_random_walk(n_steps, &IncrementLaw::Rademacher, &mut s).unwrap();
            let (survived, max) = compose_survival_indicator(
                &ProcessSpec::Counterexample,
                &inner,
                false,
                1.0,
                CompositionMode::OneSidedAbs,
                &RangeStrategy::ExactAtQueries,
                &mut streams(37, seed),
            ).unwrap();
            prop_assert!(survived);
            prop_assert_eq!(max, 0.0);
        }
    }

    #[test]
    fn two_sided_fbm_outer_uses_one_joint_draw() {
        // Branch dependence: with H = 0.75 the branches are negatively
        // correlated, so the empirical cross moment at ±1 is negative.
        let inner = path(&[0.0, 1.0, -1.0]);
        let n = 30_000u64;
        let mut cross = 0.0;
        for i in 0..n {
            let z = compose_path(
                &ProcessSpec::Fbm(crate::generators::FbmSpec { hurst: 0.75, two_sided: true }),
                &inner,
                CompositionMode::TwoSided,
                &mut streams(38, i),
            )
            .unwrap();
            cross += z.values()[1] * z.values()[2];
        }
        let emp = cross / n as f64;
        let target = 1.0 - 2f64.sqrt();
        assert!((emp - target).abs() < 5.0 * (1.5 / n as f64).sqrt(), "cross {emp}");
    }
}
