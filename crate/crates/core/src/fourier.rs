//! Discrete Fourier machinery on uniform grids with explicit physical
//! conventions, plus interpolation of sampled fields.
//!
//! For a grid `x_j` with dual grid `k_a` the transform pair is
//!
//! ```text
//! F(k_a) = Δx Σ_j f(x_j) e^{s i k_a x_j}
//! f(x_j) = (Δk / 2π) Σ_a F(k_a) e^{-s i k_a x_j}
//! ```
//!
//! with `s = ±1`. The pair is exact (not an approximation of the continuous
//! transform): composing the two is the identity up to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GridSpec, PhaseGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Transform plans for one grid axis.
#[derive(Clone)]
pub struct SpectralAxis {
    grid: GridSpec,
    dual: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralAxis {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            dual: grid.dual(),
            fwd: planner.plan_fft_forward(grid.count),
            inv: planner.plan_fft_inverse(grid.count),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn dual(&self) -> GridSpec {
        self.dual
    }

    /// In place: samples on the grid to samples on the dual grid.
    pub fn forward(&self, data: &mut [C64], sign: Sign) {
        let n = self.grid.count;
        debug_assert_eq!(data.len(), n);
        for (j, v) in data.iter_mut().enumerate() {
            if j % 2 == 1 {
                *v = -*v;
            }
        }
        match sign {
            Sign::Plus => self.inv.process(data),
            Sign::Minus => self.fwd.process(data),
        }
        let s = sign.value();
        let dx = self.grid.spacing();
        let x0 = self.grid.min;
        for (a, v) in data.iter_mut().enumerate() {
            let k = self.dual.point(a);
            *v *= C64::from_polar(dx, s * k * x0);
        }
    }

    /// In place: samples on the dual grid back to the grid.
    pub fn inverse(&self, data: &mut [C64], sign: Sign) {
        let n = self.grid.count;
        debug_assert_eq!(data.len(), n);
        let s = sign.value();
        let x0 = self.grid.min;
        for (a, v) in data.iter_mut().enumerate() {
            let k = self.dual.point(a);
            *v *= C64::from_polar(1.0, -s * k * x0);
        }
        match sign {
            Sign::Plus => self.fwd.process(data),
            Sign::Minus => self.inv.process(data),
        }
        let scale = self.dual.spacing() / (2.0 * PI);
        for (j, v) in data.iter_mut().enumerate() {
            *v *= if j % 2 == 1 { -scale } else { scale };
        }
    }

    /// Spectral derivative of order `order` of periodic samples, in place.
    /// The Nyquist mode is dropped for odd orders.
    pub fn derivative(&self, data: &mut [C64], order: u32) {
        let n = self.grid.count;
        self.fwd.process(data);
        let dk = self.dual.spacing();
        for (a, v) in data.iter_mut().enumerate() {
            let m = if a < n / 2 {
                a as i64
            } else {
                a as i64 - n as i64
            };
            if order % 2 == 1 && a == n / 2 {
                *v = C64::new(0.0, 0.0);
                continue;
            }
            let ik = C64::new(0.0, m as f64 * dk);
            *v *= ik.powu(order) / n as f64;
        }
        self.inv.process(data);
    }

    /// Angular wavenumbers in FFT storage order, Nyquist mode last-negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.grid.count;
        let dk = self.dual.spacing();
        (0..n)
            .map(|a| {
                let m = if a < n / 2 {
                    a as i64
                } else {
                    a as i64 - n as i64
                };
                m as f64 * dk
            })
            .collect()
    }

    /// Raw forward FFT (no phases, no scaling).
    pub fn raw_forward(&self, data: &mut [C64]) {
        self.fwd.process(data);
    }

    /// Raw inverse FFT (no phases, no scaling).
    pub fn raw_inverse(&self, data: &mut [C64]) {
        self.inv.process(data);
    }
}

/// Apply `op` to every lane of `arr` along `axis`. Lanes run in parallel;
/// each lane's result depends only on its own input.
pub fn map_lanes<F>(arr: &mut Array2<C64>, axis: usize, op: F)
where
    F: Fn(&mut [C64]) + Sync,
{
    let len = arr.len_of(Axis(axis));
    Zip::from(arr.lanes_mut(Axis(axis))).par_for_each(|mut lane| {
        if let Some(slice) = lane.as_slice_mut() {
            op(slice);
        } else {
            let mut buf: Vec<C64> = lane.iter().copied().collect();
            debug_assert_eq!(buf.len(), len);
            op(&mut buf);
            for (dst, src) in lane.iter_mut().zip(buf) {
                *dst = src;
            }
        }
    });
}

/// Two-dimensional transform of samples on `grid` (axis 0 = q, axis 1 = p).
pub fn forward_2d(arr: &mut Array2<C64>, grid: &PhaseGrid, sign: Sign) {
    let aq = SpectralAxis::new(grid.q);
    let ap = SpectralAxis::new(grid.p);
    map_lanes(arr, 1, |l| ap.forward(l, sign));
    map_lanes(arr, 0, |l| aq.forward(l, sign));
}

pub fn inverse_2d(arr: &mut Array2<C64>, grid: &PhaseGrid, sign: Sign) {
    let aq = SpectralAxis::new(grid.q);
    let ap = SpectralAxis::new(grid.p);
    map_lanes(arr, 1, |l| ap.inverse(l, sign));
    map_lanes(arr, 0, |l| aq.inverse(l, sign));
}

/// Lagrange interpolation weights for stencil nodes `first..first+m` at
/// fractional index `u`.
pub fn lagrange_weights(u: f64, first: i64, m: usize, out: &mut [f64]) {
    for (j, w) in out.iter_mut().enumerate().take(m) {
        let uj = (first + j as i64) as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            let ul = (first + l as i64) as f64;
            num *= u - ul;
            den *= uj - ul;
        }
        *w = num / den;
    }
}

/// Stencil start for an `m`-point centered stencil around fractional index
/// `u` on `n` nodes, or `None` when `u` falls outside the sampled span.
pub fn stencil_start(u: f64, n: usize, m: usize) -> Option<i64> {
    let eps = 1e-9;
    if u < -eps || u > (n - 1) as f64 + eps {
        return None;
    }
    let base = u.floor() as i64 - (m as i64 / 2 - 1);
    Some(base.clamp(0, n as i64 - m as i64))
}

/// Tensor-product Lagrange interpolation of a complex field sampled on a
/// uniform 2-D grid. Points outside the sampled span evaluate to zero.
#[derive(Clone)]
pub struct LagrangeSampler {
    pub grid: PhaseGrid,
    pub values: Array2<C64>,
    pub order: usize,
}

impl LagrangeSampler {
    pub fn new(grid: PhaseGrid, values: Array2<C64>, order: usize) -> Self {
        assert!(order >= 2 && order <= grid.q.count && order <= grid.p.count);
        Self {
            grid,
            values,
            order,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.grid.q.covers(x) && self.grid.p.covers(y)
    }

    pub fn sample(&self, x: f64, y: f64) -> C64 {
        let m = self.order;
        let ux = self.grid.q.index_of(x);
        let uy = self.grid.p.index_of(y);
        let (Some(ix), Some(iy)) = (
            stencil_start(ux, self.grid.q.count, m),
            stencil_start(uy, self.grid.p.count, m),
        ) else {
            return C64::new(0.0, 0.0);
        };
        let mut wx = [0.0; 16];
        let mut wy = [0.0; 16];
        lagrange_weights(ux, ix, m, &mut wx);
        lagrange_weights(uy, iy, m, &mut wy);
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..m {
            let row = self.values.row(ix as usize + a);
            let mut inner = C64::new(0.0, 0.0);
            for b in 0..m {
                inner += row[iy as usize + b] * wy[b];
            }
            acc += inner * wx[a];
        }
        acc
    }

    /// Largest magnitude on the outermost ring of samples.
    pub fn boundary_max(&self) -> f64 {
        let (nq, np) = self.values.dim();
        let mut m: f64 = 0.0;
        for i in 0..nq {
            m = m
                .max(self.values[[i, 0]].norm())
                .max(self.values[[i, np - 1]].norm());
        }
        for j in 0..np {
            m = m
                .max(self.values[[0, j]].norm())
                .max(self.values[[nq - 1, j]].norm());
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// One-dimensional Lagrange interpolation on a uniform grid; zero outside.
pub fn lagrange_1d(grid: &GridSpec, values: &[C64], x: f64, order: usize) -> C64 {
    let u = grid.index_of(x);
    let Some(i0) = stencil_start(u, grid.count, order) else {
        return C64::new(0.0, 0.0);
    };
    let mut w = [0.0; 16];
    lagrange_weights(u, i0, order, &mut w);
    (0..order).map(|j| values[i0 as usize + j] * w[j]).sum()
}

/// Spectrally refined samples of the phase-space Fourier image
/// `Λ(k, ω) = (1/2π) ∫ W e^{i(kq + ωp)} dq dp` of `w` on `grid`.
///
/// The spatial samples are zero-padded `factor`-fold before transforming,
/// which yields exact discrete-transform values on a grid `factor` times
/// finer in `(k, ω)`; a Lagrange stencil interpolates between them.
pub fn refined_lambda_sampler(
    w: &Array2<C64>,
    grid: &PhaseGrid,
    factor: usize,
    order: usize,
) -> LagrangeSampler {
    let (nq, np) = w.dim();
    let wide = PhaseGrid::new(grid.q.widened(factor), grid.p.widened(factor));
    let mut padded = Array2::<C64>::zeros((nq * factor, np * factor));
    let oq = (factor - 1) * nq / 2;
    let op = (factor - 1) * np / 2;
    padded
        .slice_mut(ndarray::s![oq..oq + nq, op..op + np])
        .assign(w);
    forward_2d(&mut padded, &wide, Sign::Plus);
    padded.mapv_inplace(|v| v / (2.0 * PI));
    LagrangeSampler::new(wide.dual(), padded, order)
}
