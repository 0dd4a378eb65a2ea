//! Exact reference values that anchor the Monte Carlo machinery.
//!
//! Everything here is computed by counting, series summation, or closed
//! form, sharing no code with the samplers it checks. These values are the
//! authoritative targets: when a simulation disagrees, the simulation is
//! wrong.

use crate::error::Error;
use crate::special::normal_cdf;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dp,
    Enumeration,
    Series,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Enumeration => "enumeration",
            Method::Series => "series",
            Method::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExactProbability {
    pub value: f64,
    pub method: Method,
}

/// Max number of steps enumerated exhaustively (2^N paths).
pub const ENUM_CAP: u32 = 25;
/// Path counts stay exact in 128-bit integers up to this many steps.
const DP_EXACT_CAP: u32 = 64;

/// P(max_{1≤n≤N} S_n ≤ barrier) for the simple symmetric walk, by dynamic
/// programming over lattice positions. Exact integer counts for N ≤ 64,
/// floating-point probabilities beyond.
pub fn srw_max_dp(n: u32, barrier: i64) -> ExactProbability {
    assert!(n >= 1, "walk needs at least one step");
    if barrier >= n as i64 {
        return ExactProbability {
            value: 1.0,
            method: Method::Dp,
        };
    }
    if barrier < -(n as i64) {
        return ExactProbability {
            value: 0.0,
            method: Method::Dp,
        };
    }
    let size = 2 * n as usize + 1;
    let off = n as i64;
    let value = if n <= DP_EXACT_CAP {
        let mut dp = vec![0u128; size];
        dp[off as usize] = 1;
        let mut next = vec![0u128; size];
        for _ in 0..n {
            next.iter_mut().for_each(|v| *v = 0);
            for (i, &c) in dp.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let p = i as i64 - off;
                for q in [p - 1, p + 1] {
                    if q <= barrier && q >= -off {
                        next[(q + off) as usize] += c;
                    }
                }
            }
            std::mem::swap(&mut dp, &mut next);
        }
        let total: u128 = dp.iter().sum();
        total as f64 / 2f64.powi(n as i32)
    } else {
        let mut dp = vec![0f64; size];
        dp[off as usize] = 1.0;
        let mut next = vec![0f64; size];
        for _ in 0..n {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (i, &c) in dp.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let p = i as i64 - off;
                for q in [p - 1, p + 1] {
                    if q <= barrier && q >= -off {
                        next[(q + off) as usize] += 0.5 * c;
                    }
                }
            }
            std::mem::swap(&mut dp, &mut next);
        }
        dp.iter().sum()
    };
    ExactProbability {
        value,
        method: Method::Dp,
    }
}

/// Same event by brute-force enumeration of all 2^N sign patterns.
pub fn srw_max_enum(n: u32, barrier: i64) -> Result<ExactProbability> {
    if n > ENUM_CAP {
        return Err(Error::EnumTooLarge {
            n,
            cap: ENUM_CAP,
        });
    }
    let mut hits = 0u64;
    for mask in 0u64..(1u64 << n) {
        let mut s = 0i64;
        let mut ok = true;
        for bit in 0..n {
            s += if mask >> bit & 1 == 1 { 1 } else { -1 };
            if s > barrier {
                ok = false;
                break;
            }
        }
        if ok {
            hits += 1;
        }
    }
    Ok(ExactProbability {
        value: hits as f64 / (1u64 << n) as f64,
        method: Method::Enumeration,
    })
}

/// P(sup_{1≤n≤N} X(|S_n|) ≤ barrier) with X, S independent simple symmetric
/// walks, by enumerating every inner path and counting admissible outer
/// paths exactly. The value at query 0 is X(0) = 0.
pub fn srw_iterated_enum(n: u32, barrier: i64) -> Result<ExactProbability> {
    const CAP: u32 = 12;
    if n == 0 || n > CAP {
        return Err(Error::EnumTooLarge {
            n,
            cap: CAP,
        });
    }
    let nn = n as usize;
    // Σ over inner paths of (outer count)·2^(N − q_m), over denominator 2^(2N):
    // counts stay below 2^(2N) ≤ 2^24, comfortably inside u64.
    let mut numerator = 0u64;
    let mut is_query = vec![false; nn + 1];
    for mask in 0u64..(1u64 << n) {
        is_query.iter_mut().for_each(|v| *v = false);
        let mut s = 0i64;
        let mut q_max = 0usize;
        for bit in 0..n {
            s += if mask >> bit & 1 == 1 { 1 } else { -1 };
            let q = s.unsigned_abs() as usize;
            is_query[q] = true;
            q_max = q_max.max(q);
        }
        let count = outer_walk_count(&is_query, q_max, barrier);
        numerator += count << (nn - q_max);
    }
    Ok(ExactProbability {
        value: numerator as f64 / 4f64.powi(n as i32),
        method: Method::Enumeration,
    })
}

/// Number of outer SRW paths of length q_max with X(q) ≤ barrier at every
/// marked query time (including the fixed X(0) = 0 when 0 is marked).
fn outer_walk_count(is_query: &[bool], q_max: usize, barrier: i64) -> u64 {
    if is_query[0] && barrier < 0 {
        return 0;
    }
    if q_max == 0 {
        return 1;
    }
    let off = q_max as i64;
    let size = 2 * q_max + 1;
    let mut dp = vec![0u64; size];
    dp[off as usize] = 1;
    let mut next = vec![0u64; size];
    for t in 1..=q_max {
        next.iter_mut().for_each(|v| *v = 0);
        for (i, &c) in dp.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p = i as i64 - off;
            for q in [p - 1, p + 1] {
                if q >= -off && q <= off && !(is_query[t] && q > barrier) {
                    next[(q + off) as usize] += c;
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
    }
    dp.iter().sum()
}

/// P(sup_{t∈[0,1]} |B_t| ≤ ε) for standard Brownian motion, exact to 1e-12.
///
/// Two complementary expansions of the same law: a theta series that
/// converges fast for small ε, and an image/reflection series in normal CDFs
/// that converges fast for large ε.
pub fn bm_small_dev_exact(eps: f64) -> ExactProbability {
    assert!(eps > 0.0, "small-deviation level must be positive");
    let value = if eps <= 1.5 {
        small_dev_theta_form(eps)
    } else {
        small_dev_reflection_form(eps)
    };
    ExactProbability {
        value: value.clamp(0.0, 1.0),
        method: Method::Series,
    }
}

fn small_dev_theta_form(eps: f64) -> f64 {
    let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * eps * eps);
    let mut s = 0.0;
    let mut k = 0u32;
    loop {
        let m = (2 * k + 1) as f64;
        let term = (if k % 2 == 0 { 1.0 } else { -1.0 }) / m * (-m * m * c).exp();
        s += term;
        if term.abs() < 1e-16 || k > 2000 {
            break;
        }
        k += 1;
    }
    4.0 / std::f64::consts::PI * s
}

fn small_dev_reflection_form(eps: f64) -> f64 {
    // Σ_{k∈ℤ} (−1)^k [Φ((2k+1)ε) − Φ((2k−1)ε)]; fold ±k together.
    let mut s = 2.0 * normal_cdf(eps) - 1.0;
    let mut k = 1i32;
    loop {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let hi = normal_cdf((2 * k + 1) as f64 * eps);
        let lo = normal_cdf((2 * k - 1) as f64 * eps);
        let term = 2.0 * sign * (hi - lo);
        s += term;
        if term.abs() < 1e-16 || k > 200 {
            break;
        }
        k += 1;
    }
    s
}

/// Survival of the spike process with barrier 1: spikes at times n − 1/2
/// take value 2 with probability 1/(n+1), so survival to T is the
/// telescoping product ∏_{n≤m} n/(n+1) = 1/(m+1) over m = ⌊T + 1/2⌋ spikes.
pub fn counterexample_survival_exact(t: f64) -> ExactProbability {
    assert!(t > 0.0);
    let m = (t + 0.5).floor();
    ExactProbability {
        value: 1.0 / (m + 1.0),
        method: Method::ClosedForm,
    }
}

/// P(sup_{t∈[0,T]} B_t ≤ x) = 2Φ(x/√T) − 1 by the reflection principle.
pub fn bm_survival_closed_form(t: f64, x: f64) -> ExactProbability {
    assert!(t > 0.0 && x > 0.0);
    ExactProbability {
        value: 2.0 * normal_cdf(x / t.sqrt()) - 1.0,
        method: Method::ClosedForm,
    }
}
