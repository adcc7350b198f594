//! Uniform periodic sample grids.
//!
//! A grid covers `[min, max)` with `count` points; the right end point is
//! excluded so that the grid is the natural domain of a discrete Fourier
//! transform. Every grid has a reciprocal (dual) grid centered on zero.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::DegenerateGrid(format!(
                "need max > min, got [{min}, {max}]"
            )));
        }
        if count < 8 {
            return Err(Error::DegenerateGrid(format!(
                "need at least 8 points, got {count}"
            )));
        }
        if !count.is_power_of_two() {
            return Err(Error::DegenerateGrid(format!(
                "point count {count} is not a power of two"
            )));
        }
        Ok(Self { min, max, count })
    }

    /// Symmetric grid `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.count as f64
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Last sample position (`max` itself is not a sample).
    pub fn last(&self) -> f64 {
        self.point(self.count - 1)
    }

    /// Reciprocal grid: spacing `2π / width`, index `count / 2` at zero.
    pub fn dual(&self) -> GridSpec {
        let dk = 2.0 * PI / self.width();
        let half = (self.count / 2) as f64;
        GridSpec {
            min: -half * dk,
            max: half * dk,
            count: self.count,
        }
    }

    /// Same spacing, `factor` times as many points, centered on the same
    /// midpoint.
    pub fn widened(&self, factor: usize) -> GridSpec {
        let extra = (factor - 1) as f64 * self.count as f64 / 2.0 * self.spacing();
        GridSpec {
            min: self.min - extra,
            max: self.max + extra,
            count: self.count * factor,
        }
    }

    /// Fractional index of `x`.
    pub fn index_of(&self, x: f64) -> f64 {
        (x - self.min) / self.spacing()
    }

    /// Whether `x` lies within the sampled span `[min, last]`.
    pub fn covers(&self, x: f64) -> bool {
        x >= self.min - 1e-12 * self.spacing() && x <= self.last() + 1e-12 * self.spacing()
    }

    pub fn approx_eq(&self, other: &GridSpec) -> bool {
        let tol = 1e-12 * self.width().max(other.width());
        self.count == other.count
            && (self.min - other.min).abs() <= tol
            && (self.max - other.max).abs() <= tol
    }
}

/// Product grid over phase space: `q` (rows) by `p` (columns).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub q: GridSpec,
    pub p: GridSpec,
}

impl PhaseGrid {
    pub fn new(q: GridSpec, p: GridSpec) -> Self {
        Self { q, p }
    }

    pub fn square(half_width: f64, count: usize) -> Result<Self> {
        let g = GridSpec::symmetric(half_width, count)?;
        Ok(Self { q: g, p: g })
    }

    pub fn cell_area(&self) -> f64 {
        self.q.spacing() * self.p.spacing()
    }

    /// Reciprocal grid `(k, ω)`.
    pub fn dual(&self) -> PhaseGrid {
        PhaseGrid {
            q: self.q.dual(),
            p: self.p.dual(),
        }
    }

    pub fn approx_eq(&self, other: &PhaseGrid) -> bool {
        self.q.approx_eq(&other.q) && self.p.approx_eq(&other.p)
    }
}
