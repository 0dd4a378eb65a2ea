//! Time grids and sampled paths.
//!
//! A `PathSkeleton` stores exact values of one sample path on a uniform grid.
//! "Exact" means the joint law at the grid times matches the target process;
//! what happens between grid points is the concern of the estimation layer
//! (bridge corrections or endpoint mode), not of the path container.

use crate::error::Error;
use crate::Result;

/// Uniform time grid t_k = k·step for k = 0..=count; horizon T = step·count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::config(format!("grid step must be positive, got {step}")));
        }
        if count == 0 {
            return Err(Error::config("grid needs at least one step"));
        }
        Ok(TimeGrid { step, count })
    }

    /// Grid covering [0, horizon] with `count` cells.
    pub fn over_horizon(horizon: f64, count: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        Self::new(horizon / count as f64, count)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn horizon(&self) -> f64 {
        self.step * self.count as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.step * k as f64
    }
}

/// One sample path: values[k] at time k·step, anchored at values[0] = 0.
#[derive(Debug, Clone)]
pub struct PathSkeleton {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl PathSkeleton {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() + 1 {
            return Err(Error::config(format!(
                "path length {} does not match grid size {}",
                values.len(),
                grid.count() + 1
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::config(format!(
                "paths are anchored at zero, got values[0] = {}",
                values[0]
            )));
        }
        Ok(PathSkeleton { grid, values })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of post-anchor values.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    /// Max over grid values including the anchor (so always ≥ 0).
    pub fn grid_max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn grid_min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn grid_max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Path on a symmetric grid spanning [-T, T], anchored at the middle:
/// values[half_count + i] is the value at time i·step for i in -half..=half.
#[derive(Debug, Clone)]
pub struct TwoSidedPath {
    step: f64,
    half_count: usize,
    values: Vec<f64>,
}

impl TwoSidedPath {
    pub fn new(step: f64, half_count: usize, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || half_count == 0 {
            return Err(Error::config("two-sided grid needs positive step and half-count"));
        }
        if values.len() != 2 * half_count + 1 {
            return Err(Error::config(format!(
                "two-sided path length {} does not match 2·{}+1",
                values.len(),
                half_count
            )));
        }
        if values[half_count] != 0.0 {
            return Err(Error::config("two-sided paths are anchored at zero at time 0"));
        }
        Ok(TwoSidedPath {
            step,
            half_count,
            values,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    /// Value at signed grid index i ∈ [-half_count, half_count].
    pub fn value(&self, i: isize) -> f64 {
        let idx = i + self.half_count as isize;
        self.values[idx as usize]
    }

    /// Max over signed indices lo..=hi (clamped to the grid).
    pub fn max_over(&self, lo: isize, hi: isize) -> f64 {
        let h = self.half_count as isize;
        let lo = lo.max(-h);
        let hi = hi.min(h);
        let mut m = f64::NEG_INFINITY;
        for i in lo..=hi {
            m = m.max(self.value(i));
        }
        m
    }
}
