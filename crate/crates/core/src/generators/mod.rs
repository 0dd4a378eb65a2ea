//! Sample-path generators, exact at the grid times.
//!
//! Each generator produces the correct joint law of the target process at
//! the grid points. Jumps inside a Lévy cell are aggregated at the cell
//! endpoint: grid-time values stay exact, the within-cell supremum is not
//! represented (the estimation layer decides whether that matters and
//! compensates with bridge corrections where it does).

pub mod fbm;

pub use fbm::{gen_fbm_path, gen_fbm_two_sided, EmbeddingMethod, FgnSampler};

use crate::error::Error;
use crate::grid::{PathSkeleton, TimeGrid};
use crate::linalg::Cholesky;
use crate::rng::Stream;
use crate::special::gamma;
use crate::Result;

/// Step law of a random walk, or jump law of a compound-Poisson component.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementLaw {
    Rademacher,
    Gaussian { mean: f64, sd: f64 },
    Laplace { mean: f64, scale: f64 },
    /// W·sign + offset with W Weibull(shape, scale): stretched-exponential
    /// tails exp(−(x/scale)^shape), the heaviest tail class handled here.
    SignedWeibull { shape: f64, scale: f64, offset: f64 },
    Constant(f64),
}

impl IncrementLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IncrementLaw::Rademacher => Ok(()),
            IncrementLaw::Gaussian { mean, sd } => {
                if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
                    Err(Error::config(format!("Gaussian law needs sd > 0, got sd = {sd}")))
                } else {
                    Ok(())
                }
            }
            IncrementLaw::Laplace { mean, scale } => {
                if !(scale > 0.0) || !mean.is_finite() || !scale.is_finite() {
                    Err(Error::config(format!("Laplace law needs scale > 0, got scale = {scale}")))
                } else {
                    Ok(())
                }
            }
            IncrementLaw::SignedWeibull { shape, scale, offset } => {
                if !(shape > 0.0 && shape <= 1.0) {
                    Err(Error::config(format!(
                        "SignedWeibull shape must lie in (0, 1], got {shape}"
                    )))
                } else if !(scale > 0.0) || !offset.is_finite() {
                    Err(Error::config(format!(
                        "SignedWeibull needs scale > 0, got scale = {scale}"
                    )))
                } else {
                    Ok(())
                }
            }
            IncrementLaw::Constant(c) => {
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config("Constant increment must be finite"))
                }
            }
        }
    }

    pub fn sample(&self, stream: &mut Stream) -> f64 {
        match *self {
            IncrementLaw::Rademacher => {
                if stream.next_u64() >> 63 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementLaw::Gaussian { mean, sd } => mean + sd * stream.next_standard_normal(),
            IncrementLaw::Laplace { mean, scale } => {
                let v = stream.next_uniform() - 0.5;
                // Inverse CDF on each half; 1 − 2|v| ∈ (0, 1] so the log is finite.
                mean - scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
            }
            IncrementLaw::SignedWeibull { shape, scale, offset } => {
                let sign = if stream.next_u64() >> 63 == 1 { 1.0 } else { -1.0 };
                let w = scale * (-stream.next_uniform_open().ln()).powf(1.0 / shape);
                sign * w + offset
            }
            IncrementLaw::Constant(c) => c,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            IncrementLaw::Rademacher => 0.0,
            IncrementLaw::Gaussian { mean, .. } => mean,
            IncrementLaw::Laplace { mean, .. } => mean,
            IncrementLaw::SignedWeibull { offset, .. } => offset,
            IncrementLaw::Constant(c) => c,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            IncrementLaw::Rademacher => 1.0,
            IncrementLaw::Gaussian { sd, .. } => sd * sd,
            IncrementLaw::Laplace { scale, .. } => 2.0 * scale * scale,
            IncrementLaw::SignedWeibull { shape, scale, .. } => {
                scale * scale * gamma(1.0 + 2.0 / shape)
            }
            IncrementLaw::Constant(_) => 0.0,
        }
    }

    /// Largest γ with E[exp(|X − E X|^γ)] < ∞, capped at 1: the tail class
    /// that controls the logarithmic corrections in the survival asymptotics.
    pub fn moment_class(&self) -> f64 {
        match *self {
            IncrementLaw::SignedWeibull { shape, .. } => shape,
            _ => 1.0,
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean() == 0.0
    }

    /// Law of X equals law of −X.
    pub fn is_symmetric(&self) -> bool {
        match self {
            IncrementLaw::Rademacher => true,
            IncrementLaw::Gaussian { mean, .. } => *mean == 0.0,
            IncrementLaw::Laplace { mean, .. } => *mean == 0.0,
            IncrementLaw::SignedWeibull { offset, .. } => *offset == 0.0,
            IncrementLaw::Constant(c) => *c == 0.0,
        }
    }

    /// Support contained in [0, ∞).
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, IncrementLaw::Constant(c) if *c >= 0.0)
    }

    /// E[X²] about zero, not about the mean.
    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }
}

/// Lévy process: drift + Brownian part + compound-Poisson jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct LevySpec {
    /// Drift per unit time.
    pub drift: f64,
    /// Diffusion coefficient.
    pub sigma: f64,
    /// Jump intensity per unit time.
    pub jump_rate: f64,
    pub jump_law: IncrementLaw,
    /// Declares E[X_1] = 0; validation enforces drift = −rate·E[jump].
    pub centered: bool,
}

impl LevySpec {
    /// Driftless Brownian motion with diffusion coefficient σ.
    pub fn brownian(sigma: f64) -> Self {
        LevySpec {
            drift: 0.0,
            sigma,
            jump_rate: 0.0,
            jump_law: IncrementLaw::Constant(0.0),
            centered: true,
        }
    }

    /// Jump diffusion with the drift set to compensate the jumps exactly.
    pub fn compensated(sigma: f64, jump_rate: f64, jump_law: IncrementLaw) -> Self {
        LevySpec {
            drift: -jump_rate * jump_law.mean(),
            sigma,
            jump_rate,
            jump_law,
            centered: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::config(format!("diffusion must be ≥ 0, got {}", self.sigma)));
        }
        if !(self.jump_rate >= 0.0) || !self.jump_rate.is_finite() {
            return Err(Error::config(format!("jump rate must be ≥ 0, got {}", self.jump_rate)));
        }
        if !self.drift.is_finite() {
            return Err(Error::config("drift must be finite"));
        }
        if self.jump_rate > 0.0 {
            self.jump_law.validate()?;
        }
        // Nondegeneracy means E[X_1²] > 0: the identically-zero process is
        // rejected, deterministic drift is not.
        if self.variance_rate() + self.mean_rate().powi(2) <= 0.0 {
            return Err(Error::config("degenerate process: X is identically zero"));
        }
        if self.centered {
            let mean_rate = self.mean_rate();
            let scale = 1.0 + self.drift.abs() + self.jump_rate * self.jump_law.mean().abs();
            if mean_rate.abs() > 1e-9 * scale {
                return Err(Error::config(format!(
                    "declared centered but E[X_1] = {mean_rate}; set drift = −rate·E[jump]"
                )));
            }
        }
        Ok(())
    }

    /// E[X_1].
    pub fn mean_rate(&self) -> f64 {
        self.drift + self.jump_rate * self.jump_law.mean()
    }

    /// Var(X_1) = σ² + rate·E[jump²].
    pub fn variance_rate(&self) -> f64 {
        self.sigma * self.sigma + self.jump_rate * self.jump_law.second_moment()
    }

    /// True when the paths are continuous (no jump component).
    pub fn is_diffusion(&self) -> bool {
        self.jump_rate == 0.0 && self.sigma > 0.0
    }

    /// Driftless diffusion: the class with exact interval-supremum laws.
    pub fn is_centered_diffusion(&self) -> bool {
        self.is_diffusion() && self.drift == 0.0
    }

    /// Law of X_t equals law of −X_t for all t.
    pub fn is_symmetric(&self) -> bool {
        self.drift == 0.0 && (self.jump_rate == 0.0 || self.jump_law.is_symmetric())
    }

    /// Nondecreasing paths: nonnegative drift, no diffusion part,
    /// nonnegative jumps.
    pub fn is_subordinator(&self) -> bool {
        self.drift >= 0.0 && self.sigma == 0.0 && (self.jump_rate == 0.0 || self.jump_law.is_nonnegative())
    }

    /// Exact increment over a cell of length dt.
    pub(crate) fn sample_increment(&self, dt: f64, stream: &mut Stream) -> f64 {
        let mut dx = self.drift * dt;
        if self.sigma > 0.0 {
            dx += self.sigma * dt.sqrt() * stream.next_standard_normal();
        }
        if self.jump_rate > 0.0 {
            let k = stream.next_poisson(self.jump_rate * dt);
            for _ in 0..k {
                dx += self.jump_law.sample(stream);
            }
        }
        dx
    }
}

/// n-fold integrated Brownian motion; n = 0 is Brownian motion itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IbmSpec {
    pub order: usize,
}

impl IbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order > MAX_IBM_ORDER {
            Err(Error::config(format!(
                "integrator order capped at {MAX_IBM_ORDER}, got {}",
                self.order
            )))
        } else {
            Ok(())
        }
    }
}

/// Fractional Brownian motion with Hurst index H ∈ (0,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmSpec {
    pub hurst: f64,
    pub two_sided: bool,
}

impl FbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hurst > 0.0 && self.hurst < 1.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "Hurst index must lie in (0,1), got {}",
                self.hurst
            )))
        }
    }
}

/// Process description shared by the composition and estimation layers.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    /// Unit-time random walk.
    Walk { law: IncrementLaw },
    Levy(LevySpec),
    IntegratedBm(IbmSpec),
    Fbm(FbmSpec),
    /// The spike process: value 2 with probability 1/(n+1) at time n − 1/2,
    /// zero elsewhere.
    Counterexample,
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Walk { law } => law.validate(),
            ProcessSpec::Levy(spec) => spec.validate(),
            ProcessSpec::IntegratedBm(spec) => spec.validate(),
            ProcessSpec::Counterexample => Ok(()),
            ProcessSpec::Fbm(spec) => spec.validate(),
        }
    }

    /// Continuous-path processes: the range over [0,T] is a full interval,
    /// so range-filling strategies are meaningful.
    pub fn is_continuous(&self) -> bool {
        match self {
            ProcessSpec::Walk { .. } | ProcessSpec::Counterexample => false,
            ProcessSpec::Levy(spec) => spec.jump_rate == 0.0 && spec.sigma > 0.0,
            ProcessSpec::IntegratedBm(_) | ProcessSpec::Fbm(_) => true,
        }
    }

    /// Scaling index H with (Y_ct) =d (c^H Y_t), when the process has one.
    pub fn self_similar_index(&self) -> Option<f64> {
        match self {
            ProcessSpec::Levy(spec) if spec.is_centered_diffusion() => Some(0.5),
            ProcessSpec::IntegratedBm(spec) => Some((2 * spec.order + 1) as f64 / 2.0),
            ProcessSpec::Fbm(spec) => Some(spec.hurst),
            _ => None,
        }
    }

    /// E[increment per unit time] = 0, where the notion applies.
    pub fn is_centered(&self) -> bool {
        match self {
            ProcessSpec::Walk { law } => law.is_centered(),
            ProcessSpec::Levy(spec) => spec.mean_rate() == 0.0,
            ProcessSpec::IntegratedBm(_) | ProcessSpec::Fbm(_) => true,
            ProcessSpec::Counterexample => false,
        }
    }

    /// Samples one path on `grid`. Fails for specs with no grid sampling
    /// (two-sided fBm, spike process), which have dedicated generators.
    pub fn sample(&self, grid: TimeGrid, stream: &mut Stream) -> Result<PathSkeleton> {
        match self {
            ProcessSpec::Walk { law } => {
                if (grid.step() - 1.0).abs() > 1e-12 {
                    return Err(Error::config("random walks live on the unit-step grid"));
                }
                gen_random_walk(grid.count(), law, stream)
            }
            ProcessSpec::Levy(spec) => gen_levy_path(grid, spec, stream),
            ProcessSpec::IntegratedBm(spec) => gen_ibm_path(grid, *spec, stream),
            ProcessSpec::Fbm(spec) => gen_fbm_path(grid, spec, stream),
            ProcessSpec::Counterexample => Err(Error::config(
                "the spike process is sampled by gen_counterexample_values, not on a grid",
            )),
        }
    }
}

/// Random walk S_k = Y_1 + … + Y_k on the unit-step grid.
pub fn gen_random_walk(n_steps: usize, law: &IncrementLaw, stream: &mut Stream) -> Result<PathSkeleton> {
    law.validate()?;
    let grid = TimeGrid::new(1.0, n_steps)?;
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(0.0);
    let mut s = 0.0;
    for _ in 0..n_steps {
        s += law.sample(stream);
        values.push(s);
    }
    PathSkeleton::new(grid, values)
}

/// Lévy path with exact marginals at the grid times.
pub fn gen_levy_path(grid: TimeGrid, spec: &LevySpec, stream: &mut Stream) -> Result<PathSkeleton> {
    spec.validate()?;
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.count() + 1);
    values.push(0.0);
    let mut x = 0.0;
    for _ in 0..grid.count() {
        x += spec.sample_increment(h, stream);
        values.push(x);
    }
    PathSkeleton::new(grid, values)
}

const MAX_IBM_ORDER: usize = 12;

/// Noise covariance of one exact integrator step of length h:
/// Cov(η_j, η_k) = h^{j+k+1}/(j!·k!·(j+k+1)), row-major over 0..=order.
pub fn ibm_step_covariance(order: usize, h: f64) -> Vec<f64> {
    let dim = order + 1;
    let mut cov = vec![0.0; dim * dim];
    for j in 0..dim {
        for k in 0..dim {
            let p = (j + k + 1) as i32;
            cov[j * dim + k] = h.powi(p) / (factorial(j) * factorial(k) * p as f64);
        }
    }
    cov
}

/// n-fold integrated Brownian motion by the exact joint recursion on the
/// state (W, Y⁽¹⁾, …, Y⁽ⁿ⁾); returns component n. No discretization error:
/// the state propagates with the closed-form transition and exactly
/// correlated Gaussian noise.
pub fn gen_ibm_path(grid: TimeGrid, spec: IbmSpec, stream: &mut Stream) -> Result<PathSkeleton> {
    spec.validate()?;
    let dim = spec.order + 1;
    let h = grid.step();
    let chol = Cholesky::factor(&ibm_step_covariance(spec.order, h), dim, "integrator step noise")?;
    // transition[k][j] = h^(k−j)/(k−j)! for j ≤ k.
    let mut transition = vec![0.0; dim * dim];
    for k in 0..dim {
        for j in 0..=k {
            transition[k * dim + j] = h.powi((k - j) as i32) / factorial(k - j);
        }
    }
    let mut state = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut eta = vec![0.0; dim];
    let mut values = Vec::with_capacity(grid.count() + 1);
    values.push(0.0);
    for _ in 0..grid.count() {
        for zi in z.iter_mut() {
            *zi = stream.next_standard_normal();
        }
        chol.multiply(&z, &mut eta);
        for k in 0..dim {
            let mut s = eta[k];
            for j in 0..=k {
                s += transition[k * dim + j] * state[j];
            }
            next[k] = s;
        }
        std::mem::swap(&mut state, &mut next);
        values.push(state[dim - 1]);
    }
    PathSkeleton::new(grid, values)
}

/// Independent spike values: entry n (1-based) is 2 with probability
/// 1/(n+1) and 0 otherwise; entry n is the process value at time n − 1/2.
pub fn gen_counterexample_values(m: usize, stream: &mut Stream) -> Vec<f64> {
    (1..=m)
        .map(|n| {
            if stream.next_uniform() * (n as f64 + 1.0) < 1.0 {
                2.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Number of spike times n − 1/2 in [0, T].
pub fn counterexample_spike_count(t: f64) -> usize {
    (t + 0.5).floor().max(0.0) as usize
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, Seed, StreamKey};

    fn stream(seed: u64, sample: u64) -> Stream {
        derive_stream(Seed(seed), StreamKey::new(0, 0, sample, 0))
    }

    #[test]
    fn constant_walk_is_deterministic() {
        let mut s = stream(1, 0);
        let p = gen_random_walk(3, &IncrementLaw::Constant(1.0), &mut s).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0, 2.0, 3.0]);
        let p = gen_random_walk(5, &IncrementLaw::Constant(0.0), &mut s).unwrap();
        assert_eq!(p.values(), &[0.0; 6]);
    }

    #[test]
    fn rademacher_walk_has_unit_steps() {
        let mut s = stream(2, 0);
        let p = gen_random_walk(1000, &IncrementLaw::Rademacher, &mut s).unwrap();
        for w in p.values().windows(2) {
            assert_eq!((w[1] - w[0]).abs(), 1.0);
        }
    }

    #[test]
    fn walk_law_of_large_numbers() {
        let n = 10_000usize;
        let paths = 1_000u64;
        let mut acc = 0.0;
        for i in 0..paths {
            let mut s = stream(3, i);
            let law = IncrementLaw::Gaussian { mean: 0.5, sd: 1.0 };
            let p = gen_random_walk(n, &law, &mut s).unwrap();
            acc += p.values()[n] / n as f64;
        }
        let avg = acc / paths as f64;
        // Var of the average is 1/(n·paths) = 1e−7.
        assert!((avg - 0.5).abs() < 5.0 / (1e7f64).sqrt(), "avg {avg}");
    }

    #[test]
    fn pure_drift_levy_path() {
        let mut s = stream(4, 0);
        let spec = LevySpec {
            drift: 2.0,
            sigma: 0.0,
            jump_rate: 0.0,
            jump_law: IncrementLaw::Constant(0.0),
            centered: false,
        };
        let grid = TimeGrid::new(0.5, 3).unwrap();
        let p = gen_levy_path(grid, &spec, &mut s).unwrap();
        assert_eq!(p.values(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn identically_zero_process_is_rejected() {
        let spec = LevySpec {
            drift: 0.0,
            sigma: 0.0,
            jump_rate: 0.0,
            jump_law: IncrementLaw::Constant(0.0),
            centered: true,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn diffusion_variance_at_unit_time() {
        let n = 100_000u64;
        let spec = LevySpec::brownian(1.0);
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut s = stream(5, i);
            let p = gen_levy_path(grid, &spec, &mut s).unwrap();
            let x = p.values()[4];
            sum += x;
            sumsq += x * x;
        }
        let var = sumsq / n as f64 - (sum / n as f64).powi(2);
        // se(var) ≈ √(2/n) for Gaussian data.
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn compensated_jumps_have_zero_mean() {
        let n = 100_000u64;
        let spec = LevySpec::compensated(0.0, 1.0, IncrementLaw::Laplace { mean: 1.0, scale: 1.0 });
        spec.validate().unwrap();
        assert_eq!(spec.drift, -1.0);
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let mut sum = 0.0;
        for i in 0..n {
            let mut s = stream(6, i);
            sum += gen_levy_path(grid, &spec, &mut s).unwrap().values()[2];
        }
        let mean = sum / n as f64;
        let se = (spec.variance_rate() / n as f64).sqrt();
        assert!(mean.abs() < 5.0 * se, "mean {mean}");
    }

    #[test]
    fn step_covariance_closed_form_values() {
        let c = ibm_step_covariance(0, 2.0);
        assert_eq!(c, vec![2.0]);
        let c = ibm_step_covariance(1, 1.0);
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert!((c[1] - 0.5).abs() < 1e-15);
        assert!((c[2] - 0.5).abs() < 1e-15);
        assert!((c[3] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn integrator_marginal_variance() {
        // Var(Y⁽¹⁾(1)) = 1/3 exactly, independent of the number of steps.
        let n = 20_000u64;
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut s = stream(7, i);
            let p = gen_ibm_path(grid, IbmSpec { order: 1 }, &mut s).unwrap();
            sumsq += p.values()[4].powi(2);
        }
        let var = sumsq / n as f64;
        let se = (2.0 / n as f64).sqrt() / 3.0;
        assert!((var - 1.0 / 3.0).abs() < 5.0 * se, "var {var}");
    }

    #[test]
    fn integrator_order_zero_is_brownian() {
        let n = 20_000u64;
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut s = stream(8, i);
            let p = gen_ibm_path(grid, IbmSpec { order: 0 }, &mut s).unwrap();
            sumsq += p.values()[2].powi(2);
        }
        let var = sumsq / n as f64;
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n as f64).sqrt(), "var {var}");
    }

    #[test]
    fn spike_values_support_and_frequencies() {
        let n = 100_000u64;
        let mut count1 = 0u64;
        let mut count9 = 0u64;
        for i in 0..n {
            let mut s = stream(9, i);
            let v = gen_counterexample_values(9, &mut s);
            assert!(v.iter().all(|&x| x == 0.0 || x == 2.0));
            if v[0] == 2.0 {
                count1 += 1;
            }
            if v[8] == 2.0 {
                count9 += 1;
            }
        }
        let p1 = count1 as f64 / n as f64;
        let p9 = count9 as f64 / n as f64;
        let se1 = (0.5 * 0.5 / n as f64).sqrt();
        let se9 = (0.1 * 0.9 / n as f64).sqrt();
        assert!((p1 - 0.5).abs() < 5.0 * se1, "p1 {p1}");
        assert!((p9 - 0.1).abs() < 5.0 * se9, "p9 {p9}");
    }

    #[test]
    fn spike_count_boundaries() {
        assert_eq!(counterexample_spike_count(0.4), 0);
        assert_eq!(counterexample_spike_count(0.5), 1);
        assert_eq!(counterexample_spike_count(1.5), 2);
        assert_eq!(counterexample_spike_count(10.5), 11);
    }

    #[test]
    fn law_moments_match_samples() {
        let laws = [
            IncrementLaw::Laplace { mean: 0.3, scale: 1.2 },
            IncrementLaw::SignedWeibull { shape: 0.7, scale: 1.0, offset: 0.2 },
            IncrementLaw::Gaussian { mean: -1.0, sd: 2.0 },
        ];
        for law in laws {
            law.validate().unwrap();
            let n = 200_000u64;
            let mut s = stream(10, 0);
            let (mut sum, mut sumsq, mut sum4) = (0.0, 0.0, 0.0);
            let samples: Vec<f64> = (0..n).map(|_| law.sample(&mut s)).collect();
            for &x in &samples {
                sum += x;
            }
            let mean = sum / n as f64;
            for &x in &samples {
                let d = x - mean;
                sumsq += d * d;
                sum4 += d * d * d * d;
            }
            let var = sumsq / n as f64;
            let se_mean = (law.variance() / n as f64).sqrt();
            assert!((mean - law.mean()).abs() < 5.0 * se_mean, "{law:?} mean {mean}");
            let se_var = ((sum4 / n as f64 - var * var) / n as f64).sqrt();
            assert!(
                (var - law.variance()).abs() < 5.0 * se_var,
                "{law:?} var {var} vs {}",
                law.variance()
            );
        }
    }

    #[test]
    fn invalid_laws_are_rejected() {
        assert!(IncrementLaw::Gaussian { mean: 0.0, sd: 0.0 }.validate().is_err());
        assert!(IncrementLaw::Laplace { mean: 0.0, scale: -1.0 }.validate().is_err());
        assert!(IncrementLaw::SignedWeibull { shape: 1.5, scale: 1.0, offset: 0.0 }
            .validate()
            .is_err());
        assert!(IncrementLaw::SignedWeibull { shape: 0.0, scale: 1.0, offset: 0.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn centered_flag_is_checked() {
        let bad = LevySpec {
            drift: 0.0,
            sigma: 1.0,
            jump_rate: 1.0,
            jump_law: IncrementLaw::Laplace { mean: 1.0, scale: 1.0 },
            centered: true,
        };
        assert!(bad.validate().is_err());
        let good = LevySpec::compensated(1.0, 1.0, IncrementLaw::Laplace { mean: 1.0, scale: 1.0 });
        assert!(good.validate().is_ok());
        assert_eq!(good.mean_rate(), 0.0);
    }
}
