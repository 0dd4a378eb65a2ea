//! Small dense Cholesky factorization for exact Gaussian sampling.
//!
//! Sizes here are tiny (integrator state dimensions) up to a few thousand
//! (dense fractional-noise fallback), so a plain O(n³) factorization without
//! blocking is the right tool.

use crate::error::Error;
use crate::Result;

/// Lower-triangular factor L with A = L·Lᵀ, stored row-major and dense.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    factor: Vec<f64>,
}

impl Cholesky {
    /// Factors the symmetric positive-definite `matrix` (row-major, dim×dim).
    /// Only the lower triangle is read.
    pub fn factor(matrix: &[f64], dim: usize, context: &str) -> Result<Self> {
        assert_eq!(matrix.len(), dim * dim, "matrix buffer size mismatch");
        let mut l = vec![0.0f64; dim * dim];
        let scale = (0..dim)
            .map(|i| matrix[i * dim + i].abs())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..dim {
            for j in 0..=i {
                let mut s = matrix[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    // Pivot must stay clearly positive relative to the matrix
                    // scale; this rejects indefinite input instead of emitting
                    // NaNs downstream.
                    if s <= scale * 1e-12 {
                        return Err(Error::NotPositiveDefinite {
                            index: i,
                            context: context.to_string(),
                        });
                    }
                    l[i * dim + j] = s.sqrt();
                } else {
                    l[i * dim + j] = s / l[j * dim + j];
                }
            }
        }
        Ok(Cholesky { dim, factor: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// out = L·z, the map sending i.i.d. standard normals to the target law.
    pub fn multiply(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            let row = &self.factor[i * self.dim..i * self.dim + i + 1];
            let mut s = 0.0;
            for (k, &l) in row.iter().enumerate() {
                s += l * z[k];
            }
            out[i] = s;
        }
    }

    #[cfg(test)]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.factor[i * self.dim + j]
    }
}
