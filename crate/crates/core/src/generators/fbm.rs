//! Fractional Gaussian noise by circulant embedding.
//!
//! The covariance of M unit-step increments embeds into a 2M-circulant
//! whose eigenvalues come from one FFT of the first row. Synthesis is one
//! FFT per path over independent spectral normals, giving the exact joint
//! law. Spectra and FFT plans are cached per (Hurst, M).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::Error;
use crate::grid::{PathSkeleton, TimeGrid, TwoSidedPath};
use crate::linalg::Cholesky;
use crate::rng::Stream;
use crate::Result;

use super::FbmSpec;

/// How the fGn covariance square root was realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMethod {
    /// Nonnegative circulant spectrum, one FFT per path.
    Circulant,
    /// Embedding spectrum had a material negative eigenvalue; dense
    /// factorization of the M×M covariance instead.
    DenseCholesky,
}

impl EmbeddingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingMethod::Circulant => "circulant",
            EmbeddingMethod::DenseCholesky => "dense_cholesky",
        }
    }
}

const DENSE_CAP: usize = 4096;
// Relative tolerance for spectrum negativity before falling back.
const EIGEN_TOL: f64 = 1e-8;

enum Backend {
    Circulant {
        // factors[k] = √(λ_k/n) at k ∈ {0, M}, √(λ_k/(2n)) for 0 < k < M;
        // the spectral normals are premultiplied so synthesis is one FFT.
        factors: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Dense(Cholesky),
}

impl Backend {
    fn method(&self) -> EmbeddingMethod {
        match self {
            Backend::Circulant { .. } => EmbeddingMethod::Circulant,
            Backend::Dense(_) => EmbeddingMethod::DenseCholesky,
        }
    }
}

/// Autocovariance of unit-step fGn: c(k) = ½(|k+1|^2H − 2|k|^2H + |k−1|^2H).
fn fgn_autocov(two_h: f64, k: usize) -> f64 {
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn build_circulant(hurst: f64, count: usize) -> Option<Backend> {
    let n = 2 * count;
    let two_h = 2.0 * hurst;
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|j| {
            let lag = if j <= count { j } else { n - j };
            Complex::new(fgn_autocov(two_h, lag), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let lambda: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let max = lambda.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = lambda.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min < -EIGEN_TOL * max {
        return None;
    }
    let nf = n as f64;
    let factors: Vec<f64> = (0..=count)
        .map(|k| {
            let lam = lambda[k].max(0.0);
            if k == 0 || k == count {
                (lam / nf).sqrt()
            } else {
                (lam / (2.0 * nf)).sqrt()
            }
        })
        .collect();
    Some(Backend::Circulant { factors, fft })
}

fn build_dense(hurst: f64, count: usize) -> Result<Backend> {
    if count > DENSE_CAP {
        return Err(Error::config(format!(
            "dense fGn factorization capped at {DENSE_CAP} steps, got {count}"
        )));
    }
    let two_h = 2.0 * hurst;
    let mut cov = vec![0.0; count * count];
    for i in 0..count {
        for j in 0..count {
            cov[i * count + j] = fgn_autocov(two_h, i.abs_diff(j));
        }
    }
    Ok(Backend::Dense(Cholesky::factor(&cov, count, "fGn covariance")?))
}

type CacheKey = (u64, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<Backend>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Backend>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Samples M fractional Gaussian noise increments with the exact joint law.
/// Cheap to construct after the first call for a given (Hurst, M).
pub struct FgnSampler {
    hurst: f64,
    count: usize,
    backend: Arc<Backend>,
}

impl FgnSampler {
    pub fn new(hurst: f64, count: usize) -> Result<Self> {
        FbmSpec { hurst, two_sided: false }.validate()?;
        if count == 0 {
            return Err(Error::config("fGn sampler needs at least one step"));
        }
        let key = (hurst.to_bits(), count);
        if let Some(backend) = cache().lock().unwrap().get(&key).cloned() {
            return Ok(FgnSampler { hurst, count, backend });
        }
        let backend = match build_circulant(hurst, count) {
            Some(b) => Arc::new(b),
            None => Arc::new(build_dense(hurst, count)?),
        };
        cache().lock().unwrap().insert(key, backend.clone());
        Ok(FgnSampler { hurst, count, backend })
    }

    /// Forces a specific backend; bypasses the cache.
    pub fn new_with_method(hurst: f64, count: usize, method: EmbeddingMethod) -> Result<Self> {
        FbmSpec { hurst, two_sided: false }.validate()?;
        if count == 0 {
            return Err(Error::config("fGn sampler needs at least one step"));
        }
        let backend = match method {
            EmbeddingMethod::Circulant => build_circulant(hurst, count).ok_or_else(|| {
                Error::NotPositiveDefinite { index: 0, context: "circulant fGn spectrum".into() }
            })?,
            EmbeddingMethod::DenseCholesky => build_dense(hurst, count)?,
        };
        Ok(FgnSampler { hurst, count, backend: Arc::new(backend) })
    }

    pub fn method(&self) -> EmbeddingMethod {
        self.backend.method()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Appends M unit-step increments to `out`.
    pub fn sample_unit_into(&self, stream: &mut Stream, out: &mut Vec<f64>) {
        match &*self.backend {
            Backend::Circulant { factors, fft } => {
                let m = self.count;
                let n = 2 * m;
                let mut buf = vec![Complex::new(0.0, 0.0); n];
                buf[0] = Complex::new(factors[0] * stream.next_standard_normal(), 0.0);
                buf[m] = Complex::new(factors[m] * stream.next_standard_normal(), 0.0);
                for k in 1..m {
                    let re = factors[k] * stream.next_standard_normal();
                    let im = factors[k] * stream.next_standard_normal();
                    buf[k] = Complex::new(re, im);
                    buf[n - k] = Complex::new(re, -im);
                }
                fft.process(&mut buf);
                out.extend(buf[..m].iter().map(|c| c.re));
            }
            Backend::Dense(chol) => {
                let m = self.count;
                let z: Vec<f64> = (0..m).map(|_| stream.next_standard_normal()).collect();
                let start = out.len();
                out.resize(start + m, 0.0);
                chol.multiply(&z, &mut out[start..]);
            }
        }
    }

    /// Appends M increments over cells of length `step` (scaled by step^H).
    pub fn sample_into(&self, step: f64, stream: &mut Stream, out: &mut Vec<f64>) {
        let start = out.len();
        self.sample_unit_into(stream, out);
        let scale = step.powf(self.hurst);
        for v in &mut out[start..] {
            *v *= scale;
        }
    }
}

/// Reports which backend serves a given (Hurst, grid size) without sampling.
pub fn embedding_method(hurst: f64, count: usize) -> Result<EmbeddingMethod> {
    Ok(FgnSampler::new(hurst, count)?.method())
}

/// One-sided fBm path. Two-sided specs carry a signed index that a forward
/// path cannot represent; those go through [`gen_fbm_two_sided`].
pub fn gen_fbm_path(grid: TimeGrid, spec: &FbmSpec, stream: &mut Stream) -> Result<PathSkeleton> {
    spec.validate()?;
    if spec.two_sided {
        return Err(Error::config(
            "two-sided paths are indexed over [−T, T]; use gen_fbm_two_sided",
        ));
    }
    let sampler = FgnSampler::new(spec.hurst, grid.count())?;
    let mut increments = Vec::with_capacity(grid.count());
    sampler.sample_into(grid.step(), stream, &mut increments);
    let mut values = Vec::with_capacity(grid.count() + 1);
    values.push(0.0);
    let mut x = 0.0;
    for d in increments {
        x += d;
        values.push(x);
    }
    PathSkeleton::new(grid, values)
}

/// Two-sided fBm over [−T, T], T = step·half_count. One fGn draw spans the
/// whole window and the path is re-anchored at time 0, so the two branches
/// keep their exact joint law (they are dependent; independent branches
/// would have the wrong cross-covariance).
pub fn gen_fbm_two_sided(
    step: f64,
    half_count: usize,
    hurst: f64,
    stream: &mut Stream,
) -> Result<TwoSidedPath> {
    FbmSpec { hurst, two_sided: true }.validate()?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::config(format!("step must be positive, got {step}")));
    }
    if half_count == 0 {
        return Err(Error::config("two-sided window needs at least one cell per side"));
    }
    let sampler = FgnSampler::new(hurst, 2 * half_count)?;
    let mut increments = Vec::with_capacity(2 * half_count);
    sampler.sample_into(step, stream, &mut increments);
    let mut values = Vec::with_capacity(2 * half_count + 1);
    values.push(0.0);
    let mut x = 0.0;
    for d in increments {
        x += d;
        values.push(x);
    }
    let anchor = values[half_count];
    for v in &mut values {
        *v -= anchor;
    }
    values[half_count] = 0.0;
    TwoSidedPath::new(step, half_count, values)
}
