//! Path functionals from fluctuation theory (running extrema, ladder
//! records) and the sampling probes that check the hypotheses behind the
//! survival asymptotics: small deviations, negative moments of the range,
//! the normalized-barrier ratio, and ladder-height tails.

use crate::bridge::two_barrier_stay_prob;
use crate::error::Error;
use crate::estimation::wilson_interval;
use crate::generators::{gen_counterexample_values, IncrementLaw, ProcessSpec};
use crate::grid::{PathSkeleton, TimeGrid};
use crate::rng::{derive_stream, Seed, Stream, StreamKey};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct RunningExtrema {
    /// maxima[n−1] = max of values[1..=n].
    pub maxima: Vec<f64>,
    /// minima[n−1] = min of values[1..=n].
    pub minima: Vec<f64>,
}

/// Running max/min over the post-anchor values.
pub fn running_extrema(path: &PathSkeleton) -> RunningExtrema {
    let values = &path.values()[1..];
    let mut maxima = Vec::with_capacity(values.len());
    let mut minima = Vec::with_capacity(values.len());
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for &v in values {
        hi = hi.max(v);
        lo = lo.min(v);
        maxima.push(hi);
        minima.push(lo);
    }
    RunningExtrema { maxima, minima }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderDirection {
    Ascending,
    Descending,
}

/// Strict record times and heights relative to the 0 anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderDecomposition {
    pub direction: LadderDirection,
    /// Indices k with values[k] strictly above every earlier value and 0.
    pub epochs: Vec<usize>,
    /// heights[n] = values[epochs[n]] − values[epochs[n−1]] (anchor for n=0);
    /// strictly positive by the record property.
    pub heights: Vec<f64>,
}

pub fn ladder_decomposition(path: &PathSkeleton, direction: LadderDirection) -> LadderDecomposition {
    let sign = match direction {
        LadderDirection::Ascending => 1.0,
        LadderDirection::Descending => -1.0,
    };
    let mut epochs = Vec::new();
    let mut heights = Vec::new();
    let mut record = 0.0;
    for (k, &raw) in path.values().iter().enumerate().skip(1) {
        let v = sign * raw;
        if v > record {
            epochs.push(k);
            heights.push(v - record);
            record = v;
        }
    }
    LadderDecomposition { direction, epochs, heights }
}

const PROBE_GRID_CELLS: usize = 1024;

/// One point of the small-deviation curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationEstimate {
    pub eps: f64,
    pub n_samples: u64,
    pub n_inside: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Estimates P(sup_{t∈[0,1]} |Y_t| ≤ ε) for each ε.
///
/// Driftless-or-drifted diffusions get the exact event: per-cell stay
/// probabilities of the Brownian bridge between the barriers ±ε multiply
/// into the exact survival probability, so the estimate carries no grid
/// bias. Other processes use the sup over a 2⁻¹⁰-step grid, which
/// overestimates the probability; that residual is documented where it
/// matters.
pub fn small_deviation_curve(
    spec: &ProcessSpec,
    eps_list: &[f64],
    samples: u64,
    seed: Seed,
) -> Result<Vec<DeviationEstimate>> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::config("need at least one sample"));
    }
    for &eps in eps_list {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::config(format!("deviation level must be positive, got {eps}")));
        }
    }
    let exact_diffusion = matches!(spec, ProcessSpec::Levy(l) if l.is_diffusion());
    let mut out = Vec::with_capacity(eps_list.len());
    for (j, &eps) in eps_list.iter().enumerate() {
        let mut inside = 0u64;
        for i in 0..samples {
            let mut stream = derive_stream(seed, StreamKey::new(0, j as u64, i, 0));
            let ok = if exact_diffusion {
                let spec = match spec {
                    ProcessSpec::Levy(l) => l,
                    _ => unreachable!(),
                };
                diffusion_stays_inside(spec.drift / spec.sigma, eps / spec.sigma, &mut stream)
            } else {
                sup_abs_unit_interval(spec, &mut stream) <= eps
            };
            if ok {
                inside += 1;
            }
        }
        let p_hat = inside as f64 / samples as f64;
        let (ci_low, ci_high) = wilson_interval(inside, samples, 0.99);
        out.push(DeviationEstimate { eps, n_samples: samples, n_inside: inside, p_hat, ci_low, ci_high });
    }
    Ok(out)
}

/// Exact Bernoulli draw of {sup_{[0,1]}|X| ≤ eps} for a unit-diffusion path
/// with the given drift: endpoint checks plus the product of per-cell
/// bridge stay probabilities, compared against a single uniform.
fn diffusion_stays_inside(drift: f64, eps: f64, stream: &mut Stream) -> bool {
    let u = stream.next_uniform();
    let h = 1.0 / PROBE_GRID_CELLS as f64;
    let sh = h.sqrt();
    let mut x = 0.0;
    let mut product = 1.0;
    for _ in 0..PROBE_GRID_CELLS {
        let y = x + drift * h + sh * stream.next_standard_normal();
        if y.abs() >= eps {
            return false;
        }
        product *= two_barrier_stay_prob(x, y, h, -eps, eps);
        if product <= u {
            return false;
        }
        x = y;
    }
    true
}

/// Grid functional sup_{k} |Y_{t_k}| over [0,1] at step 2⁻¹⁰ (or the
/// process's own support for discrete-time specs).
fn sup_abs_unit_interval(spec: &ProcessSpec, stream: &mut Stream) -> f64 {
    match spec {
        ProcessSpec::Counterexample => {
            // One spike time (1/2) lies in [0,1].
            gen_counterexample_values(1, stream)[0]
        }
        ProcessSpec::Walk { law } => {
            // Unit-step walk: one step fits in the unit interval.
            law.sample(stream).abs()
        }
        _ => {
            let grid = TimeGrid::over_horizon(1.0, PROBE_GRID_CELLS).expect("unit grid");
            spec.sample(grid, stream).expect("validated spec").grid_max_abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeMomentEstimate {
    pub eta: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Set when the top 0.1% of summands carry more than half the total
    /// mass: the empirical mean is then dominated by rare near-zero sups
    /// and the moment may be infinite.
    pub unstable: bool,
    pub n_samples: u64,
}

/// Monte Carlo estimate of E[(sup_{t∈[0,1]}|Y_t|)^{−η}].
pub fn negative_moment_estimate(
    spec: &ProcessSpec,
    eta: f64,
    samples: u64,
    seed: Seed,
) -> Result<NegativeMomentEstimate> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::config("need at least one sample"));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::config(format!("moment order must be ≥ 0, got {eta}")));
    }
    let degenerate = match spec {
        ProcessSpec::Counterexample => true,
        ProcessSpec::Walk { law } => matches!(law, IncrementLaw::Constant(c) if *c == 0.0),
        _ => false,
    };
    if degenerate {
        return Err(Error::degenerate(
            "P(sup = 0) > 0 for this process, the negative moment is undefined",
        ));
    }
    let mut summands = Vec::with_capacity(samples as usize);
    for i in 0..samples {
        let mut stream = derive_stream(seed, StreamKey::new(0, 0, i, 0));
        let sup = sup_abs_unit_interval(spec, &mut stream);
        summands.push(sup.powf(-eta));
    }
    let n = samples as f64;
    let total: f64 = summands.iter().sum();
    let mean = total / n;
    let var = summands.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std_error = (var / n).sqrt();
    let top = (samples as usize / 1000).max(1);
    let cut = summands.len() - top;
    let top_mass: f64 = if cut == 0 {
        total
    } else {
        summands.select_nth_unstable_by(cut, f64::total_cmp);
        summands[cut..].iter().sum()
    };
    let unstable = top_mass > 0.5 * total;
    Ok(NegativeMomentEstimate { eta, estimate: mean, std_error, unstable, n_samples: samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierRatioCheck {
    /// P̂(M_N ≤ N^a) · √N / N^a.
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// √(2/(π·E[Y₁²])), the limit of the ratio as N → ∞.
    pub target: f64,
    pub barrier: f64,
    pub n_samples: u64,
    pub n_survived: u64,
}

/// Checks the normalized sub-√N barrier law P(M_N ≤ N^a) ≈ target·N^{a−1/2}
/// for a centered step law.
pub fn normalized_barrier_check(
    law: &IncrementLaw,
    n_steps: u64,
    a: f64,
    samples: u64,
    seed: Seed,
) -> Result<BarrierRatioCheck> {
    law.validate()?;
    if !law.is_centered() {
        return Err(Error::config("the normalized barrier law holds for centered steps only"));
    }
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::config(format!("barrier exponent must lie in (0, 1/2), got {a}")));
    }
    if n_steps == 0 || samples == 0 {
        return Err(Error::config("need at least one step and one sample"));
    }
    let barrier = (n_steps as f64).powf(a);
    let mut survived = 0u64;
    for i in 0..samples {
        let mut stream = derive_stream(seed, StreamKey::new(0, 0, i, 0));
        let ok = match law {
            IncrementLaw::Rademacher => rademacher_max_leq(n_steps, barrier.floor() as i64, &mut stream),
            _ => walk_max_leq(law, n_steps, barrier, &mut stream),
        };
        if ok {
            survived += 1;
        }
    }
    let p_hat = survived as f64 / samples as f64;
    let (lo, hi) = wilson_interval(survived, samples, 0.99);
    let scale = (n_steps as f64).sqrt() / barrier;
    Ok(BarrierRatioCheck {
        ratio: p_hat * scale,
        ci_low: lo * scale,
        ci_high: hi * scale,
        target: (2.0 / (std::f64::consts::PI * law.variance())).sqrt(),
        barrier,
        n_samples: samples,
        n_survived: survived,
    })
}

/// M_N ≤ b for a simple ±1 walk, processing 64 steps per word: a block that
/// cannot reach the barrier advances by its popcount balance, only blocks
/// ending near the barrier walk bit by bit.
pub(crate) fn rademacher_max_leq(n_steps: u64, barrier: i64, stream: &mut Stream) -> bool {
    if barrier < -1 {
        // S_1 ∈ {−1, +1} already exceeds the barrier.
        return false;
    }
    let mut pos = 0i64;
    let mut left = n_steps;
    while left >= 64 {
        let w = stream.next_u64();
        if pos + 64 <= barrier {
            pos += 2 * w.count_ones() as i64 - 64;
        } else {
            for bit in 0..64 {
                pos += if w >> bit & 1 == 1 { 1 } else { -1 };
                if pos > barrier {
                    return false;
                }
            }
        }
        left -= 64;
    }
    if left > 0 {
        let w = stream.next_u64();
        for bit in 0..left {
            pos += if w >> bit & 1 == 1 { 1 } else { -1 };
            if pos > barrier {
                return false;
            }
        }
    }
    true
}

fn walk_max_leq(law: &IncrementLaw, n_steps: u64, barrier: f64, stream: &mut Stream) -> bool {
    let mut s = 0.0;
    for _ in 0..n_steps {
        s += law.sample(stream);
        if s > barrier {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderTailProbe {
    pub thresholds: Vec<f64>,
    /// tail[j] = P̂(ℋ₁ > thresholds[j]) among samples that produced a ladder
    /// epoch within the step cap.
    pub tail: Vec<f64>,
    pub n_used: u64,
    /// Samples with no ladder epoch within the cap, excluded from the tail.
    pub n_excluded: u64,
}

const LADDER_STEP_CAP: u64 = 1_000_000;

/// Empirical tail of the first ascending ladder height ℋ₁ = S_{σ(1)}.
pub fn ladder_height_tail_probe(
    law: &IncrementLaw,
    samples: u64,
    seed: Seed,
    thresholds: &[f64],
) -> Result<LadderTailProbe> {
    law.validate()?;
    if law.mean() < 0.0 {
        return Err(Error::config(
            "ladder probe needs E[Y₁] ≥ 0; a negative-drift walk may never set a record",
        ));
    }
    if samples == 0 {
        return Err(Error::config("need at least one sample"));
    }
    let mut counts = vec![0u64; thresholds.len()];
    let mut excluded = 0u64;
    for i in 0..samples {
        let mut stream = derive_stream(seed, StreamKey::new(0, 0, i, 0));
        let mut s = 0.0;
        let mut height = None;
        for _ in 0..LADDER_STEP_CAP {
            s += law.sample(&mut stream);
            if s > 0.0 {
                height = Some(s);
                break;
            }
        }
        match height {
            None => excluded += 1,
            Some(h) => {
                for (j, &x) in thresholds.iter().enumerate() {
                    if h > x {
                        counts[j] += 1;
                    }
                }
            }
        }
    }
    let used = samples - excluded;
    if used == 0 {
        return Err(Error::degenerate("no sample produced a ladder epoch within the step cap"));
    }
    Ok(LadderTailProbe {
        thresholds: thresholds.to_vec(),
        tail: counts.iter().map(|&c| c as f64 / used as f64).collect(),
        n_used: used,
        n_excluded: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::LevySpec;
    use crate::oracles::{bm_small_dev_exact, srw_max_dp};
    use proptest::prelude::*;

    fn path(values: &[f64]) -> PathSkeleton {
        let grid = TimeGrid::new(1.0, values.len() - 1).unwrap();
        PathSkeleton::new(grid, values.to_vec()).unwrap()
    }

    #[test]
    fn extrema_by_definition() {
        let e = running_extrema(&path(&[0.0, 1.0, -2.0, 3.0]));
        assert_eq!(e.maxima, vec![1.0, 1.0, 3.0]);
        assert_eq!(e.minima, vec![1.0, -2.0, -2.0]);
    }

    #[test]
    fn extrema_monotone_and_constant_paths() {
        let e = running_extrema(&path(&[0.0, 1.0, 2.0, 3.0]));
        assert_eq!(e.maxima, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.minima, vec![1.0, 1.0, 1.0]);
        let e = running_extrema(&path(&[0.0, 0.7, 0.7]));
        assert_eq!(e.maxima, vec![0.7, 0.7]);
        assert_eq!(e.minima, vec![0.7, 0.7]);
    }

    #[test]
    fn ladder_epochs_and_heights() {
        let d = ladder_decomposition(&path(&[0.0, 1.0, -1.0, 2.0, 0.0, 3.0]), LadderDirection::Ascending);
        assert_eq!(d.epochs, vec![1, 3, 5]);
        assert_eq!(d.heights, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn ladder_empty_when_never_positive() {
        let d = ladder_decomposition(&path(&[0.0, -1.0, -2.0]), LadderDirection::Ascending);
        assert!(d.epochs.is_empty());
        assert!(d.heights.is_empty());
        let d = ladder_decomposition(&path(&[0.0, -1.0, -2.0]), LadderDirection::Descending);
        assert_eq!(d.epochs, vec![1, 2]);
        assert_eq!(d.heights, vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn ladder_heights_positive_and_reconstruct(steps in prop::collection::vec(-2.5f64..2.5, 1..40)) {
            let mut values = vec![0.0];
            let mut acc = 0.0;
            for s in steps {
                acc += s;
                values.push(acc);
            }
            let p = path(&values);
            let d = ladder_decomposition(&p, LadderDirection::Ascending);
            let extrema = running_extrema(&p);
            let mut partial = 0.0;
            for (n, &k) in d.epochs.iter().enumerate() {
                prop_assert!(d.heights[n] > 0.0);
                partial += d.heights[n];
                // Partial height sums recover the running maximum at epochs.
                prop_assert!((partial - extrema.maxima[k - 1]).abs() < 1e-12);
                prop_assert!((partial - values[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn descending_is_ascending_of_negation(steps in prop::collection::vec(-2.5f64..2.5, 1..40)) {
            let mut values = vec![0.0];
            let mut neg = vec![0.0];
            let mut acc = 0.0;
            for s in steps {
                acc += s;
                values.push(acc);
                neg.push(-acc);
            }
            let desc = ladder_decomposition(&path(&values), LadderDirection::Descending);
            let asc = ladder_decomposition(&path(&neg), LadderDirection::Ascending);
            prop_assert_eq!(desc.epochs, asc.epochs);
            prop_assert_eq!(desc.heights, asc.heights);
        }
    }

    #[test]
    fn small_deviation_huge_barrier_is_certain() {
        let spec = ProcessSpec::Levy(LevySpec::brownian(1.0));
        let pts = small_deviation_curve(&spec, &[100.0], 2_000, Seed(40)).unwrap();
        assert_eq!(pts[0].n_inside, 2_000);
        assert!(pts[0].ci_high >= 1.0 - 1e-12);
    }

    #[test]
    fn small_deviation_matches_series() {
        let spec = ProcessSpec::Levy(LevySpec::brownian(1.0));
        let pts = small_deviation_curve(&spec, &[0.5, 1.0], 30_000, Seed(41)).unwrap();
        for pt in &pts {
            let exact = bm_small_dev_exact(pt.eps).value;
            assert!(
                pt.ci_low <= exact && exact <= pt.ci_high,
                "eps {}: [{}, {}] misses {exact}",
                pt.eps,
                pt.ci_low,
                pt.ci_high
            );
        }
    }

    #[test]
    fn small_deviation_scales_with_sigma() {
        // σ = 2 halves the effective level: P(sup|2W| ≤ 1) = P(sup|W| ≤ 1/2).
        let spec = ProcessSpec::Levy(LevySpec::brownian(2.0));
        let pts = small_deviation_curve(&spec, &[1.0], 30_000, Seed(42)).unwrap();
        let exact = bm_small_dev_exact(0.5).value;
        assert!(pts[0].ci_low <= exact && exact <= pts[0].ci_high, "{pts:?} vs {exact}");
    }

    #[test]
    fn small_deviation_curve_is_monotone_up_to_overlap() {
        let spec = ProcessSpec::Levy(LevySpec::brownian(1.0));
        let eps = [0.4, 0.6, 0.8, 1.0, 1.3, 1.6];
        let pts = small_deviation_curve(&spec, &eps, 5_000, Seed(43)).unwrap();
        for w in pts.windows(2) {
            assert!(
                w[0].ci_low <= w[1].ci_high,
                "p({}) significantly exceeds p({})",
                w[0].eps,
                w[1].eps
            );
        }
    }

    #[test]
    fn negative_moment_constant_walk() {
        let spec = ProcessSpec::Walk { law: IncrementLaw::Constant(2.0) };
        let est = negative_moment_estimate(&spec, 0.5, 100, Seed(44)).unwrap();
        assert!((est.estimate - 2f64.powf(-0.5)).abs() < 1e-15);
        // Identical draws; only rounding noise survives the variance sum.
        assert!(est.std_error < 1e-8, "{}", est.std_error);
        assert!(!est.unstable);
    }

    #[test]
    fn negative_moment_zeroth_is_one() {
        let spec = ProcessSpec::Levy(LevySpec::brownian(1.0));
        let est = negative_moment_estimate(&spec, 0.0, 50, Seed(45)).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn negative_moment_brownian_stable_and_seed_consistent() {
        let spec = ProcessSpec::Levy(LevySpec::brownian(1.0));
        let a = negative_moment_estimate(&spec, 0.5, 4_000, Seed(46)).unwrap();
        let b = negative_moment_estimate(&spec, 0.5, 4_000, Seed(47)).unwrap();
        assert!(!a.unstable);
        assert!(!b.unstable);
        assert!(a.estimate.is_finite() && a.estimate > 0.0);
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 3.0 * joint, "{} vs {}", a.estimate, b.estimate);
    }

    #[test]
    fn negative_moment_degenerate_specs_rejected() {
        assert!(negative_moment_estimate(&ProcessSpec::Counterexample, 0.5, 10, Seed(48)).is_err());
        let zero = ProcessSpec::Walk { law: IncrementLaw::Constant(0.0) };
        assert!(negative_moment_estimate(&zero, 0.5, 10, Seed(48)).is_err());
    }

    #[test]
    fn barrier_targets_closed_form() {
        let r = normalized_barrier_check(&IncrementLaw::Rademacher, 256, 0.4, 100, Seed(49)).unwrap();
        assert!((r.target - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let g = IncrementLaw::Gaussian { mean: 0.0, sd: 2.0 };
        let r = normalized_barrier_check(&g, 256, 0.4, 100, Seed(49)).unwrap();
        assert!((r.target - (2.0 / (4.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn barrier_check_rejects_uncentered() {
        let law = IncrementLaw::Gaussian { mean: 0.1, sd: 1.0 };
        assert!(normalized_barrier_check(&law, 100, 0.4, 10, Seed(50)).is_err());
        assert!(normalized_barrier_check(&IncrementLaw::Rademacher, 100, 0.6, 10, Seed(50)).is_err());
    }

    #[test]
    fn lattice_walk_survival_matches_dp() {
        // The block-parallel and generic simulators both reproduce the exact
        // law of the running maximum.
        for &(n, b) in &[(32u64, 0i64), (32, 3), (17, 5)] {
            let exact = srw_max_dp(n as u32, b).value;
            let samples = 40_000u64;
            let mut fast = 0u64;
            for i in 0..samples {
                let mut s = derive_stream(Seed(51), StreamKey::new(0, 0, i, 0));
                if rademacher_max_leq(n, b, &mut s) {
                    fast += 1;
                }
            }
            let mut slow = 0u64;
            for i in 0..samples {
                let mut s = derive_stream(Seed(52), StreamKey::new(0, 0, i, 0));
                if walk_max_leq(&IncrementLaw::Rademacher, n, b as f64, &mut s) {
                    slow += 1;
                }
            }
            let se = (exact * (1.0 - exact) / samples as f64).sqrt();
            let pf = fast as f64 / samples as f64;
            let ps = slow as f64 / samples as f64;
            assert!((pf - exact).abs() < 5.0 * se, "fast N={n} b={b}: {pf} vs {exact}");
            assert!((ps - exact).abs() < 5.0 * se, "slow N={n} b={b}: {ps} vs {exact}");
        }
    }

    #[test]
    fn block_walk_long_horizon_smoke() {
        // Block arithmetic and the bit loop agree across the 64-step seam.
        let mut survived = 0u64;
        let n = 1_000u64;
        for i in 0..n {
            let mut s = derive_stream(Seed(53), StreamKey::new(0, 0, i, 0));
            if rademacher_max_leq(1_000, 40, &mut s) {
                survived += 1;
            }
        }
        let exact = srw_max_dp(1_000, 40).value;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((survived as f64 / n as f64 - exact).abs() < 5.0 * se);
    }

    #[test]
    fn ladder_tail_deterministic_laws() {
        let probe = ladder_height_tail_probe(&IncrementLaw::Constant(1.0), 500, Seed(54), &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(probe.n_excluded, 0);
        assert_eq!(probe.tail, vec![1.0, 0.0, 0.0]);

        let probe = ladder_height_tail_probe(&IncrementLaw::Rademacher, 20_000, Seed(55), &[0.5, 1.0]).unwrap();
        // First strict record of a ±1 walk is the first up-step: height 1.
        assert_eq!(probe.tail[1], 0.0);
        assert_eq!(probe.tail[0], 1.0);
        assert_eq!(probe.n_used + probe.n_excluded, 20_000);
    }

    #[test]
    fn ladder_tail_laplace_is_exponential() {
        // Memoryless overshoot: ℋ₁ is exactly Exp(1) for unit Laplace steps.
        let thresholds = [1.0, 2.0, 3.0, 4.0, 5.0];
        let samples = 50_000u64;
        let probe = ladder_height_tail_probe(
            &IncrementLaw::Laplace { mean: 0.0, scale: 1.0 },
            samples,
            Seed(56),
            &thresholds,
        )
        .unwrap();
        let n = probe.n_used as f64;
        for (j, &x) in thresholds.iter().enumerate() {
            let target = (-x).exp();
            let se = (target * (1.0 - target) / n).sqrt();
            assert!((probe.tail[j] - target).abs() < 5.0 * se, "x={x}: {} vs {target}", probe.tail[j]);
        }
        // Decreasing, log-concave up to noise.
        for w in probe.tail.windows(2) {
            assert!(w[1] < w[0]);
        }
        for j in 0..thresholds.len() - 2 {
            let d1 = (probe.tail[j + 1] / probe.tail[j]).ln();
            let d2 = (probe.tail[j + 2] / probe.tail[j + 1]).ln();
            let slack = 3.0 * (1.0 / (n * probe.tail[j + 2]) + 1.0 / (n * probe.tail[j + 1])).sqrt();
            assert!(d2 <= d1 + slack, "log-tail convex at index {j}: {d1} then {d2}");
        }
    }

    #[test]
    fn ladder_probe_rejects_negative_drift() {
        let law = IncrementLaw::Gaussian { mean: -0.5, sd: 1.0 };
        assert!(ladder_height_tail_probe(&law, 10, Seed(57), &[1.0]).is_err());
    }
}
