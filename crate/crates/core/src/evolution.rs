//! Time evolution of θ-parametrized phase-space fields for the driven
//! oscillator and for separable Hamiltonians p²/2 + Φ(q, t).
//!
//! In Fourier space the partial Wigner function obeys
//!
//! ```text
//! ∂_t Λ_θ = a k ∂_ω Λ + b Ω² ω ∂_k Λ + c iφω Λ + d (i/2)(1 − 2θ)(Ω²ω² − k²) Λ
//! ```
//!
//! with (a, b, c, d) = (+1, −1, +1, +1); [`sign_sweep`] re-derives these
//! signs from the exact-state anchors. The transport part moves Λ along the
//! linear characteristics dk/dt = −bΩ²ω, dω/dt = −ak while the remaining
//! terms only add a phase. Because the characteristics are linear, the whole
//! history collapses into a foot map `B` plus a quadratic and a linear phase,
//! so the initial field is interpolated exactly once per output.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{lagrange_1d, refined_lambda_sampler, LagrangeSampler, Sign, SpectralAxis};
use crate::grid::{GridSpec, PhaseGrid};
use crate::ode::{self, Tolerance};
use crate::oscillator::{integrate_trajectory, DriveSpec, DEFAULT_TOL};
use crate::phasespace::{
    closed_form_lambda_theta, fourier_image, inverse_fourier_image, lambda_driven_oracle,
    FourierImage, Tag, WignerField,
};
use crate::schemes::SymmetrizationScheme;
use crate::tomography::{Tomogram, REFINE, STENCIL};

const MAX_CELLS_PER_STEP: f64 = 2.0;
/// Λ₀ counts as negligible on its boundary below this fraction of its peak.
const BOUNDARY_TOL: f64 = 1e-10;
const ALIASING_TOL: f64 = 1e-6;
const TOMOGRAM_PADDING: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignConvention {
    pub a: i8,
    pub b: i8,
    pub c: i8,
    pub d: i8,
}

impl SignConvention {
    pub const RESOLVED: SignConvention = SignConvention {
        a: 1,
        b: -1,
        c: 1,
        d: 1,
    };

    pub fn all() -> Vec<SignConvention> {
        let s = [1i8, -1];
        let mut out = Vec::with_capacity(16);
        for a in s {
            for b in s {
                for c in s {
                    for d in s {
                        out.push(SignConvention { a, b, c, d });
                    }
                }
            }
        }
        out
    }
}

impl std::fmt::Display for SignConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = |v: i8| if v > 0 { '+' } else { '-' };
        write!(f, "({}{}{}{})", s(self.a), s(self.b), s(self.c), s(self.d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SemiLagrangian,
    SplitStep,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "semi_lagrangian" => Ok(Method::SemiLagrangian),
            "split_step" => Ok(Method::SplitStep),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::SemiLagrangian => "semi_lagrangian",
            Method::SplitStep => "split_step",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionConfig {
    pub drive: DriveSpec,
    pub nodes: Vec<(f64, f64)>,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
}

impl EvolutionConfig {
    pub fn new(
        drive: DriveSpec,
        nodes: Vec<(f64, f64)>,
        dt: f64,
        t_end: f64,
        method: Method,
    ) -> Result<Self> {
        if !(dt > 0.0) || !(t_end >= dt) {
            return Err(Error::Config(format!(
                "need dt > 0 and t_end >= dt, got dt = {dt}, t_end = {t_end}"
            )));
        }
        let mass: f64 = nodes.iter().map(|n| n.1).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("node weights sum to {mass}")));
        }
        Ok(Self {
            drive,
            nodes,
            dt,
            t_end,
            method,
        })
    }

    pub fn for_theta(drive: DriveSpec, theta: f64, dt: f64, t_end: f64) -> Result<Self> {
        Self::new(drive, vec![(theta, 1.0)], dt, t_end, Method::SemiLagrangian)
    }

    pub fn for_scheme(
        drive: DriveSpec,
        scheme: &SymmetrizationScheme,
        dt: f64,
        t_end: f64,
        method: Method,
    ) -> Result<Self> {
        Self::new(drive, scheme.nodes(), dt, t_end, method)
    }

    /// Step count and the step that divides `t_end` evenly.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

type M2 = [[f64; 2]; 2];
type Q2 = [[C64; 2]; 2];

fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

fn inverse(m: &M2) -> M2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// Fᵀ Q F
fn congruence(q: &Q2, f: &M2) -> Q2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..2 {
                for c in 0..2 {
                    s += q[r][c] * (f[r][i] * f[c][j]);
                }
            }
            out[i][j] = s;
        }
    }
    out
}

/// Accumulated transport and phase after some number of steps:
/// Λ(z, t) = Λ₀(B z) exp((1 − 2θ) zᵀQz + lᵀz).
#[derive(Clone, Copy, Debug)]
pub struct TrackState {
    pub t: f64,
    pub step: usize,
    pub b: M2,
    pub quad: Q2,
    pub lin: [C64; 2],
}

impl TrackState {
    fn initial() -> Self {
        Self {
            t: 0.0,
            step: 0,
            b: [[1.0, 0.0], [0.0, 1.0]],
            quad: [[C64::new(0.0, 0.0); 2]; 2],
            lin: [C64::new(0.0, 0.0); 2],
        }
    }

    fn pull_back(&mut self, f: &M2) {
        self.b = mat_mul(&self.b, f);
        self.quad = congruence(&self.quad, f);
        self.lin = [
            self.lin[0] * f[0][0] + self.lin[1] * f[1][0],
            self.lin[0] * f[0][1] + self.lin[1] * f[1][1],
        ];
    }

    pub fn foot(&self, k: f64, w: f64) -> (f64, f64) {
        (
            self.b[0][0] * k + self.b[0][1] * w,
            self.b[1][0] * k + self.b[1][1] * w,
        )
    }

    pub fn phase(&self, theta: f64, k: f64, w: f64) -> C64 {
        let s = 1.0 - 2.0 * theta;
        let lin = self.lin[0] * k + self.lin[1] * w;
        if s == 0.0 {
            return lin.exp();
        }
        let quad = self.quad[0][0] * (k * k)
            + (self.quad[0][1] + self.quad[1][0]) * (k * w)
            + self.quad[1][1] * (w * w);
        (quad * s + lin).exp()
    }
}

/// Strang-split characteristic history shared by every θ.
#[derive(Clone, Debug)]
pub struct EvolutionTrack {
    pub dt: f64,
    pub states: Vec<TrackState>,
    /// Largest per-step ‖M − I‖ over the run (M the per-step foot map).
    pub max_step_strain: f64,
    pub sign: SignConvention,
}

impl EvolutionTrack {
    pub fn last(&self) -> &TrackState {
        self.states.last().unwrap()
    }

    /// Largest per-step displacement, in cells, of any point of `grid`.
    pub fn cells_per_step(&self, grid: &PhaseGrid) -> f64 {
        let r = grid
            .q
            .min
            .abs()
            .max(grid.q.max.abs())
            .hypot(grid.p.min.abs().max(grid.p.max.abs()));
        let cell = grid.q.spacing().min(grid.p.spacing());
        self.max_step_strain * r / cell
    }
}

fn characteristic_flow(drive: &DriveSpec, sign: SignConvention, t0: f64, t1: f64) -> Result<M2> {
    let (a, b) = (sign.a as f64, sign.b as f64);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let w2 = drive.omega(t).powi(2);
        // columns of the fundamental matrix, each obeying
        // dk/dt = −bΩ²ω, dω/dt = −ak
        for col in 0..2 {
            let (k, w) = (y[2 * col], y[2 * col + 1]);
            dy[2 * col] = -b * w2 * w;
            dy[2 * col + 1] = -a * k;
        }
    };
    let mut opts = Tolerance::new(1e-14);
    opts.h_init = t1 - t0;
    opts.h_max = t1 - t0;
    opts.h_min = 1e-16;
    let (ys, _) = ode::integrate(rhs, t0, &[1.0, 0.0, 0.0, 1.0], &[t1], opts)?;
    let y = &ys[0];
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

/// Build the characteristic history for `steps` steps of size `dt`.
pub fn build_track(
    drive: &DriveSpec,
    dt: f64,
    steps: usize,
    sign: SignConvention,
) -> Result<EvolutionTrack> {
    let (c, d) = (sign.c as f64, sign.d as f64);
    let mut state = TrackState::initial();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(state);
    let mut strain: f64 = 0.0;
    for n in 0..steps {
        let t = n as f64 * dt;
        let mid = t + 0.5 * dt;
        let f1 = inverse(&characteristic_flow(drive, sign, t, mid)?);
        state.pull_back(&f1);
        let w2 = drive.omega(mid).powi(2);
        let half_i = C64::new(0.0, 0.5 * d * dt);
        state.quad[0][0] += half_i * -1.0;
        state.quad[1][1] += half_i * w2;
        state.lin[1] += C64::new(0.0, c * drive.phi(mid) * dt);
        let f2 = inverse(&characteristic_flow(drive, sign, mid, t + dt)?);
        state.pull_back(&f2);
        let m = mat_mul(&f1, &f2);
        let dev = (m[0][0] - 1.0).abs().max(m[1][1] - 1.0).abs() + m[0][1].abs().max(m[1][0].abs());
        strain = strain.max(dev);
        state.t = (n + 1) as f64 * dt;
        state.step = n + 1;
        states.push(state);
    }
    Ok(EvolutionTrack {
        dt,
        states,
        max_step_strain: strain,
        sign,
    })
}

fn check_theta_tag(tag: &Tag, theta: f64) -> Result<()> {
    match tag {
        Tag::Theta(t) if (t - theta).abs() <= 1e-12 => Ok(()),
        other => Err(Error::TagMismatch(format!(
            "field tagged {other}, evolution asked for theta={theta}"
        ))),
    }
}

/// Interpolating view of an initial Fourier image.
pub fn lambda_sampler(l0: &FourierImage) -> LagrangeSampler {
    let w = inverse_fourier_image(l0);
    refined_lambda_sampler(&w.values, &w.grid, REFINE, STENCIL)
}

fn check_cfl(track: &EvolutionTrack, grid: &PhaseGrid) -> Result<()> {
    let cells = track.cells_per_step(grid);
    if cells > MAX_CELLS_PER_STEP {
        return Err(Error::CflExceeded(cells));
    }
    Ok(())
}

/// Λ_θ at a track state, sampled on `dual`.
pub fn materialize(
    sampler: &LagrangeSampler,
    state: &TrackState,
    theta: f64,
    dual: &PhaseGrid,
) -> Result<Array2<C64>> {
    let mut values = Array2::<C64>::zeros((dual.q.count, dual.p.count));
    let boundary_ok = sampler.boundary_max() <= BOUNDARY_TOL * sampler.max_abs();
    let left = std::sync::atomic::AtomicBool::new(false);
    Zip::indexed(&mut values).par_for_each(|(a, b), v| {
        let (k, w) = (dual.q.point(a), dual.p.point(b));
        let (fk, fw) = state.foot(k, w);
        if !sampler.contains(fk, fw) {
            left.store(true, std::sync::atomic::Ordering::Relaxed);
            return;
        }
        *v = sampler.sample(fk, fw) * state.phase(theta, k, w);
    });
    if left.into_inner() && !boundary_ok {
        return Err(Error::CharacteristicLeftGrid(format!(
            "feet leave the initial (k, ω) grid at t = {} while the field is not negligible on its boundary",
            state.t
        )));
    }
    Ok(values)
}

/// Transport Λ_θ to `cfg.t_end` along the driven-oscillator characteristics.
pub fn evolve_lambda_theta(
    l0: &FourierImage,
    cfg: &EvolutionConfig,
    theta: f64,
) -> Result<FourierImage> {
    evolve_lambda_theta_with(l0, cfg, theta, SignConvention::RESOLVED)
}

pub fn evolve_lambda_theta_with(
    l0: &FourierImage,
    cfg: &EvolutionConfig,
    theta: f64,
    sign: SignConvention,
) -> Result<FourierImage> {
    check_theta_tag(&l0.tag, theta)?;
    let (steps, dt) = cfg.steps();
    let track = build_track(&cfg.drive, dt, steps, sign)?;
    check_cfl(&track, &l0.dual)?;
    let sampler = lambda_sampler(l0);
    let values = materialize(&sampler, track.last(), theta, &l0.dual)?;
    Ok(FourierImage {
        values,
        ..l0.clone()
    })
}

/// Polar interpolation of F(s; α) given on uniform α ∈ [0, π) and a fine s
/// grid, using F(s; α + π) = F(−s; α) across the wrap.
struct PolarSampler {
    s: GridSpec,
    angles: Vec<f64>,
    rows: Vec<Vec<C64>>,
}

impl PolarSampler {
    fn sample(&self, k: f64, w: f64) -> C64 {
        let r = k.hypot(w);
        let mut alpha = w.atan2(k);
        let mut s = r;
        if alpha < 0.0 {
            alpha += PI;
            s = -s;
        }
        let na = self.angles.len() as i64;
        let da = PI / na as f64;
        let u = (alpha - self.angles[0]) / da;
        let i0 = u.floor() as i64 - (STENCIL as i64 / 2 - 1);
        let mut wts = [0.0; 16];
        crate::fourier::lagrange_weights(u, i0, STENCIL, &mut wts);
        let mut acc = C64::new(0.0, 0.0);
        for (j, wt) in wts.iter().enumerate().take(STENCIL) {
            let idx = i0 + j as i64;
            let wraps = idx.div_euclid(na);
            let row = idx.rem_euclid(na) as usize;
            let sv = if wraps % 2 == 0 { s } else { -s };
            acc += lagrange_1d(&self.s, &self.rows[row], sv, STENCIL) * *wt;
        }
        acc
    }
}

/// Evolve a θ-tomogram through its characteristic function
/// F(s; α) = 2πΛ(s cos α, s sin α).
pub fn evolve_tomogram_theta(f0: &Tomogram, cfg: &EvolutionConfig, theta: f64) -> Result<Tomogram> {
    check_theta_tag(&f0.tag, theta)?;
    let na = f0.angles.len();
    if na < STENCIL {
        return Err(Error::AngularUndersampling(format!(
            "{na} angles, need at least {STENCIL}"
        )));
    }
    let step = PI / na as f64;
    if f0
        .angles
        .iter()
        .enumerate()
        .any(|(i, a)| (a - f0.angles[0] - i as f64 * step).abs() > 1e-9)
    {
        return Err(Error::AngularUndersampling(
            "angles must be uniform and cover [0, π)".into(),
        ));
    }
    let (steps, dt) = cfg.steps();
    let track = build_track(&cfg.drive, dt, steps, SignConvention::RESOLVED)?;

    let xi = f0.xi;
    let n = xi.count;
    let wide = xi.widened(TOMOGRAM_PADDING);
    let wide_ax = SpectralAxis::new(wide);
    let offset = (TOMOGRAM_PADDING - 1) * n / 2;
    let rows: Vec<Vec<C64>> = f0
        .values
        .rows()
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|row| {
            let mut buf = vec![C64::new(0.0, 0.0); wide.count];
            for (j, v) in row.iter().enumerate() {
                buf[offset + j] = *v;
            }
            wide_ax.forward(&mut buf, Sign::Plus);
            buf
        })
        .collect();
    let polar = PolarSampler {
        s: wide.dual(),
        angles: f0.angles.clone(),
        rows,
    };

    let s = xi.dual();
    let cell = s.spacing();
    let reach = s.min.abs().max(s.max.abs());
    if track.max_step_strain * reach / cell > MAX_CELLS_PER_STEP {
        return Err(Error::CflExceeded(track.max_step_strain * reach / cell));
    }
    let last = track.last();
    let ax = SpectralAxis::new(xi);
    let mut values = Array2::<C64>::zeros((na, n));
    let limit = polar.s.last().min(-polar.s.min);
    let boundary: f64 = polar
        .rows
        .iter()
        .map(|r| r[0].norm().max(r[r.len() - 1].norm()))
        .fold(0.0, f64::max);
    let left = std::sync::atomic::AtomicBool::new(false);
    Zip::from(values.rows_mut())
        .and(&f0.angles)
        .par_for_each(|mut row, &alpha| {
            let (c, sn) = (alpha.cos(), alpha.sin());
            let mut buf: Vec<C64> = (0..n)
                .map(|b| {
                    let sb = s.point(b);
                    let (k, w) = (sb * c, sb * sn);
                    let (fk, fw) = last.foot(k, w);
                    if fk.hypot(fw) > limit {
                        left.store(true, std::sync::atomic::Ordering::Relaxed);
                        return C64::new(0.0, 0.0);
                    }
                    polar.sample(fk, fw) * last.phase(theta, k, w)
                })
                .collect();
            ax.inverse(&mut buf, Sign::Plus);
            row.assign(&ndarray::Array1::from(buf));
        });
    if left.into_inner() && boundary > BOUNDARY_TOL {
        return Err(Error::CharacteristicLeftGrid(
            "feet leave the resolved s band while F is not negligible there".into(),
        ));
    }
    Ok(Tomogram {
        xi,
        angles: f0.angles.clone(),
        values,
        tag: f0.tag.clone(),
    })
}

/// Potential energy Φ(q, t) of a separable Hamiltonian p²/2 + Φ.
pub trait Potential: Sync {
    fn value(&self, q: f64, t: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64 + Sync> Potential for F {
    fn value(&self, q: f64, t: f64) -> f64 {
        self(q, t)
    }
}

/// Ω²(t) q²/2 − φ(t) q
pub struct DrivenHarmonic(pub DriveSpec);

impl Potential for DrivenHarmonic {
    fn value(&self, q: f64, t: f64) -> f64 {
        0.5 * self.0.omega(t).powi(2) * q * q - self.0.phi(t) * q
    }
}

/// Time-independent Φ from samples; Lagrange interpolation inside the
/// sampled span, the nearest end value outside it.
pub struct SampledPotential {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Potential for SampledPotential {
    fn value(&self, q: f64, _t: f64) -> f64 {
        let x = q.clamp(self.grid.min, self.grid.last());
        let vals: Vec<C64> = self.values.iter().map(|v| C64::new(*v, 0.0)).collect();
        lagrange_1d(&self.grid, &vals, x, STENCIL.min(self.grid.count)).re
    }
}

/// z grid whose dual is the (symmetric) p grid.
fn z_grid(p: &GridSpec) -> Result<GridSpec> {
    if (p.min + p.max).abs() > 1e-12 * p.width() {
        return Err(Error::GridMismatch(
            "split-step needs a symmetric p grid".into(),
        ));
    }
    GridSpec::symmetric(p.count as f64 * PI / p.max / 2.0, p.count)
}

fn high_band_fraction(spectrum: impl Iterator<Item = (f64, f64)>, cutoff: f64) -> f64 {
    let (mut hi, mut total) = (0.0, 0.0);
    for (freq, e) in spectrum {
        total += e;
        if freq.abs() > cutoff {
            hi += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        hi / total
    }
}

/// Strang split-step for W_θ under H = p²/2 + Φ(q, t):
/// kinetic factor exp(−ih(pκ + (1−2θ)κ²/2)) in (κ, p), potential factor
/// exp(−ih[Φ(q − θz) − Φ(q + (1−θ)z)]) in (q, z).
pub fn evolve_wigner_separable(
    w0: &WignerField,
    theta: f64,
    potential: &dyn Potential,
    dt: f64,
    t_end: f64,
) -> Result<WignerField> {
    check_theta_tag(&w0.tag, theta)?;
    if !(dt > 0.0) || !(t_end >= dt) {
        return Err(Error::Config(format!("bad step {dt} or end time {t_end}")));
    }
    let grid = w0.grid;
    let zg = z_grid(&grid.p)?;
    let q_ax = SpectralAxis::new(grid.q);
    let z_ax = SpectralAxis::new(zg);
    let kappa = q_ax.wavenumbers();
    let nq = grid.q.count as f64;
    let (qs, ps, zs) = (grid.q.points(), grid.p.points(), zg.points());
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let s = 1.0 - 2.0 * theta;

    let kinetic = |w: &mut Array2<C64>, tau: f64| {
        // lanes along q (axis 0), one per p
        Zip::from(w.columns_mut())
            .and(&ps)
            .par_for_each(|mut col, &p| {
                let mut buf = col.to_vec();
                q_ax.raw_forward(&mut buf);
                for (v, &k) in buf.iter_mut().zip(&kappa) {
                    *v *= C64::from_polar(1.0 / nq, -tau * (p * k + 0.5 * s * k * k));
                }
                q_ax.raw_inverse(&mut buf);
                col.assign(&ndarray::Array1::from(buf));
            });
    };
    let potential_step = |w: &mut Array2<C64>, t: f64| {
        Zip::from(w.rows_mut())
            .and(&qs)
            .par_for_each(|mut row, &q| {
                let mut buf = row.to_vec();
                z_ax.inverse(&mut buf, Sign::Plus);
                for (v, &z) in buf.iter_mut().zip(&zs) {
                    let dphi = potential.value(q - theta * z, t)
                        - potential.value(q + (1.0 - theta) * z, t);
                    *v *= C64::from_polar(1.0, -h * dphi);
                }
                z_ax.forward(&mut buf, Sign::Plus);
                row.assign(&ndarray::Array1::from(buf));
            });
    };

    let mut w = w0.values.clone();
    kinetic(&mut w, 0.5 * h);
    for n in 0..steps {
        potential_step(&mut w, (n as f64 + 0.5) * h);
        kinetic(&mut w, if n + 1 == steps { 0.5 * h } else { h });
    }

    check_aliasing(&w, &grid, &zg)?;
    Ok(WignerField {
        grid,
        values: w,
        tag: w0.tag.clone(),
    })
}

fn check_aliasing(w: &Array2<C64>, grid: &PhaseGrid, zg: &GridSpec) -> Result<()> {
    let q_ax = SpectralAxis::new(grid.q);
    let z_ax = SpectralAxis::new(*zg);
    let kappa = q_ax.wavenumbers();
    let kmax = kappa.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let mut q_spec = Vec::new();
    for col in w.columns() {
        let mut buf = col.to_vec();
        q_ax.raw_forward(&mut buf);
        q_spec.extend(buf.iter().zip(&kappa).map(|(v, k)| (*k, v.norm_sqr())));
    }
    let mut z_spec = Vec::new();
    let zs = zg.points();
    for row in w.rows() {
        let mut buf = row.to_vec();
        z_ax.inverse(&mut buf, Sign::Plus);
        z_spec.extend(buf.iter().zip(&zs).map(|(v, z)| (*z, v.norm_sqr())));
    }
    let fq = high_band_fraction(q_spec.into_iter(), 2.0 * kmax / 3.0);
    let zmax = zg.max;
    let fz = high_band_fraction(z_spec.into_iter(), 2.0 * zmax / 3.0);
    let worst = fq.max(fz);
    if worst > ALIASING_TOL {
        return Err(Error::Aliasing(worst));
    }
    Ok(())
}

/// Independent θ-node fields on shared grids.
#[derive(Clone, Debug)]
pub struct FieldFamily {
    pub nodes: Vec<(f64, f64)>,
    pub fields: Vec<FourierImage>,
    pub t: f64,
}

impl FieldFamily {
    pub fn new(nodes: Vec<(f64, f64)>, fields: Vec<FourierImage>, t: f64) -> Result<Self> {
        if nodes.len() != fields.len() {
            return Err(Error::InvalidScheme(format!(
                "{} nodes but {} fields",
                nodes.len(),
                fields.len()
            )));
        }
        for (i, (&(th, _), f)) in nodes.iter().zip(&fields).enumerate() {
            check_theta_tag(&f.tag, th).map_err(|e| Error::Node {
                node: i,
                theta: th,
                source: Box::new(e),
            })?;
            if !f.dual.approx_eq(&fields[0].dual) {
                return Err(Error::GridMismatch(
                    "family fields on different grids".into(),
                ));
            }
        }
        Ok(Self { nodes, fields, t })
    }

    /// Fields built per node by `make(θ)`.
    pub fn from_scheme(
        scheme: &SymmetrizationScheme,
        t: f64,
        make: impl Fn(f64) -> Result<FourierImage> + Sync,
    ) -> Result<Self> {
        let nodes = scheme.nodes();
        let fields = nodes
            .par_iter()
            .enumerate()
            .map(|(i, &(th, _))| {
                make(th).map_err(|e| Error::Node {
                    node: i,
                    theta: th,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, fields, t)
    }

    /// Largest |Λ_θ(k,ω) − conj Λ_{1−θ}(−k,−ω)| over node pairs.
    pub fn pairing_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &(th, _)) in self.nodes.iter().enumerate() {
            let Some(j) = self
                .nodes
                .iter()
                .position(|&(t2, _)| (t2 - (1.0 - th)).abs() <= 1e-12)
            else {
                continue;
            };
            let (a, b) = (&self.fields[i].values, &self.fields[j].values);
            let (nk, nw) = a.dim();
            for x in 1..nk {
                for y in 1..nw {
                    worst = worst.max((a[[x, y]] - b[[nk - x, nw - y]].conj()).norm());
                }
            }
        }
        worst
    }
}

fn node_err(i: usize, theta: f64, e: Error) -> Error {
    Error::Node {
        node: i,
        theta,
        source: Box::new(e),
    }
}

/// Evolve every node to `cfg.t_end`. Nodes are uncoupled; they run in
/// parallel and share one characteristic track.
pub fn evolve_family(family0: &FieldFamily, cfg: &EvolutionConfig) -> Result<FieldFamily> {
    let (steps, _) = cfg.steps();
    Ok(evolve_family_history(family0, cfg, &[steps])?
        .pop()
        .unwrap())
}

/// Family snapshots after each of the given step counts.
pub fn evolve_family_history(
    family0: &FieldFamily,
    cfg: &EvolutionConfig,
    at_steps: &[usize],
) -> Result<Vec<FieldFamily>> {
    check_nodes(&family0.nodes, &cfg.nodes)?;
    let (steps, dt) = cfg.steps();
    if let Some(&bad) = at_steps.iter().find(|&&s| s > steps) {
        return Err(Error::Config(format!("snapshot step {bad} beyond {steps}")));
    }
    match cfg.method {
        Method::SemiLagrangian => {
            let track = build_track(&cfg.drive, dt, steps, SignConvention::RESOLVED)?;
            check_cfl(&track, &family0.fields[0].dual)?;
            let samplers: Vec<LagrangeSampler> =
                family0.fields.par_iter().map(lambda_sampler).collect();
            at_steps
                .iter()
                .map(|&s| {
                    let state = &track.states[s];
                    let fields = family0
                        .nodes
                        .par_iter()
                        .zip(&samplers)
                        .zip(&family0.fields)
                        .enumerate()
                        .map(|(i, ((&(th, _), sampler), f0))| {
                            let values = materialize(sampler, state, th, &f0.dual)
                                .map_err(|e| node_err(i, th, e))?;
                            Ok(FourierImage {
                                values,
                                ..f0.clone()
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(FieldFamily {
                        nodes: family0.nodes.clone(),
                        fields,
                        t: family0.t + state.t,
                    })
                })
                .collect()
        }
        Method::SplitStep => {
            let pot = DrivenHarmonic(cfg.drive.clone());
            let mut out = Vec::with_capacity(at_steps.len());
            for &s in at_steps {
                let fields = family0
                    .nodes
                    .par_iter()
                    .zip(&family0.fields)
                    .enumerate()
                    .map(|(i, (&(th, _), f0))| {
                        if s == 0 {
                            return Ok(f0.clone());
                        }
                        let w0 = inverse_fourier_image(f0);
                        let w = evolve_wigner_separable(&w0, th, &pot, dt, s as f64 * dt)
                            .map_err(|e| node_err(i, th, e))?;
                        Ok(fourier_image(&w))
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.push(FieldFamily {
                    nodes: family0.nodes.clone(),
                    fields,
                    t: family0.t + s as f64 * dt,
                });
            }
            Ok(out)
        }
    }
}

fn check_nodes(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<()> {
    let same = a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.0 - y.0).abs() <= 1e-12 && (x.1 - y.1).abs() <= 1e-12);
    if !same {
        return Err(Error::InvalidScheme(
            "family nodes do not match the scheme".into(),
        ));
    }
    Ok(())
}

/// Full image Σ wᵢ Λ_θᵢ and the quantum correction
/// (i/2)(∂_q² − Ω²∂_p²) Σ wᵢ (1 − 2θᵢ) W_θᵢ, both at the family's time.
pub fn synthesize_full(
    family: &FieldFamily,
    scheme: &SymmetrizationScheme,
    drive: &DriveSpec,
) -> Result<(FourierImage, WignerField)> {
    check_nodes(&family.nodes, &scheme.nodes())?;
    let first = &family.fields[0];
    let mut full = Array2::<C64>::zeros(first.values.dim());
    let mut odd = Array2::<C64>::zeros(first.values.dim());
    let mut any_odd = false;
    for (&(th, w), f) in family.nodes.iter().zip(&family.fields) {
        full.scaled_add(C64::new(w, 0.0), &f.values);
        let s = 1.0 - 2.0 * th;
        if s != 0.0 {
            odd.scaled_add(C64::new(w * s, 0.0), &f.values);
            any_odd = true;
        }
    }
    let tag = Tag::Scheme(scheme.label.clone());
    let full = FourierImage {
        values: full,
        tag: tag.clone(),
        ..first.clone()
    };
    let correction = if any_odd {
        let w2 = drive.omega(family.t).powi(2);
        let dual = first.dual;
        Zip::indexed(&mut odd).par_for_each(|(a, b), v| {
            let (k, w) = (dual.q.point(a), dual.p.point(b));
            *v *= C64::new(0.0, 0.5 * (w2 * w * w - k * k));
        });
        let img = FourierImage {
            values: odd,
            tag: tag.clone(),
            ..first.clone()
        };
        inverse_fourier_image(&img)
    } else {
        WignerField {
            grid: first.spatial,
            values: Array2::zeros((first.spatial.q.count, first.spatial.p.count)),
            tag,
        }
    };
    Ok((full, correction))
}

/// max |∂_tW + p∂_qW + (φ − Ω²q)∂_pW − correction| at the middle of three
/// consecutive, equally spaced snapshots.
pub fn residual_full_equation(
    history: &[FieldFamily],
    scheme: &SymmetrizationScheme,
    drive: &DriveSpec,
) -> Result<f64> {
    if history.len() < 3 {
        return Err(Error::InsufficientHistory(format!(
            "{} snapshots, need 3",
            history.len()
        )));
    }
    let mid = history.len() / 2;
    let (prev, now, next) = (&history[mid - 1], &history[mid], &history[mid + 1]);
    let dt = now.t - prev.t;
    if !(dt > 0.0) || ((next.t - now.t) - dt).abs() > 1e-9 * dt {
        return Err(Error::InsufficientHistory(
            "snapshots must be equally spaced in time".into(),
        ));
    }
    let (full_prev, _) = synthesize_full(prev, scheme, drive)?;
    let (full_now, correction) = synthesize_full(now, scheme, drive)?;
    let (full_next, _) = synthesize_full(next, scheme, drive)?;
    let w_prev = inverse_fourier_image(&full_prev);
    let w_next = inverse_fourier_image(&full_next);

    let dual = full_now.dual;
    let derivative = |axis: usize| {
        let mut img = full_now.clone();
        Zip::indexed(&mut img.values).for_each(|(a, b), v| {
            let f = if axis == 0 {
                dual.q.point(a)
            } else {
                dual.p.point(b)
            };
            *v *= C64::new(0.0, -f);
        });
        inverse_fourier_image(&img).values
    };
    let dq = derivative(0);
    let dp = derivative(1);
    let grid = full_now.spatial;
    let t = now.t;
    let (w2, phi) = (drive.omega(t).powi(2), drive.phi(t));
    let mut worst: f64 = 0.0;
    for ((i, j), c) in correction.values.indexed_iter() {
        let (q, p) = (grid.q.point(i), grid.p.point(j));
        let dt_w = (w_next.values[[i, j]] - w_prev.values[[i, j]]) / (2.0 * dt);
        let lhs = dt_w + dq[[i, j]] * p + dp[[i, j]] * (phi - w2 * q);
        worst = worst.max((lhs - c).norm());
    }
    Ok(worst)
}

/// Outcome of one sign convention against the two anchors.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub sign: SignConvention,
    /// max ‖Λ(2π) − Λ(0)‖ for an undriven eigenstate
    pub stationarity: f64,
    /// max ‖Λ(5) − oracle‖ for the driven ground state
    pub driven: f64,
    pub passed: bool,
}

pub struct AnchorSetup {
    pub grid: PhaseGrid,
    pub rho_grid: GridSpec,
    pub dt: f64,
    pub stationarity_tol: f64,
    pub driven_tol: f64,
}

impl Default for AnchorSetup {
    fn default() -> Self {
        Self {
            grid: PhaseGrid::square(8.0, 128).unwrap(),
            rho_grid: GridSpec::symmetric(10.0, 256).unwrap(),
            dt: 1e-3,
            stationarity_tol: 1e-5,
            driven_tol: 1e-4,
        }
    }
}

pub const ANCHOR_THETAS: [f64; 3] = [0.0, 0.5, 1.0];
pub const ANCHOR_LEVEL: usize = 2;
pub const ANCHOR_DRIVE: &str = "0.5*cos(0.9*t)";
pub const ANCHOR_T_DRIVEN: f64 = 5.0;

/// Anchor 1 error: undriven eigenstate n = 2 over one period.
pub fn anchor_stationarity(setup: &AnchorSetup, sign: SignConvention) -> Result<f64> {
    let drive = DriveSpec::free();
    let t_end = 2.0 * PI;
    let (steps, dt) = EvolutionConfig::for_theta(drive.clone(), 0.5, setup.dt, t_end)?.steps();
    let track = build_track(&drive, dt, steps, sign)?;
    check_cfl(&track, &setup.grid.dual())?;
    let mut worst: f64 = 0.0;
    for &theta in &ANCHOR_THETAS {
        let l0 = FourierImage::from_fn(setup.grid, Tag::Theta(theta), |k, w| {
            closed_form_lambda_theta(ANCHOR_LEVEL, theta, k, w)
        });
        let sampler = lambda_sampler(&l0);
        let v = materialize(&sampler, track.last(), theta, &l0.dual)?;
        worst = worst.max(crate::phasespace::max_abs_diff(&v, &l0.values));
    }
    Ok(worst)
}

/// Exact-state Fourier images of the anchor-2 drive at `t`, per θ.
pub fn anchor_oracles(setup: &AnchorSetup, t: f64) -> Result<Vec<FourierImage>> {
    let drive = DriveSpec::parse("1", ANCHOR_DRIVE)?;
    let traj = integrate_trajectory(&drive, &[0.0, t], DEFAULT_TOL)?;
    ANCHOR_THETAS
        .par_iter()
        .map(|&th| lambda_driven_oracle(&traj, 0, th, 1, &setup.rho_grid, &setup.grid))
        .collect()
}

/// Anchor 2 error: driven ground state against the exact-state oracle.
pub fn anchor_driven(
    setup: &AnchorSetup,
    sign: SignConvention,
    oracles: &[FourierImage],
) -> Result<f64> {
    let drive = DriveSpec::parse("1", ANCHOR_DRIVE)?;
    let cfg = EvolutionConfig::for_theta(drive.clone(), 0.5, setup.dt, ANCHOR_T_DRIVEN)?;
    let (steps, dt) = cfg.steps();
    let track = build_track(&drive, dt, steps, sign)?;
    check_cfl(&track, &setup.grid.dual())?;
    let mut worst: f64 = 0.0;
    for (&theta, oracle) in ANCHOR_THETAS.iter().zip(oracles) {
        let l0 = FourierImage::from_fn(setup.grid, Tag::Theta(theta), |k, w| {
            closed_form_lambda_theta(0, theta, k, w)
        });
        let sampler = lambda_sampler(&l0);
        let v = match materialize(&sampler, track.last(), theta, &l0.dual) {
            Ok(v) => v,
            Err(Error::CharacteristicLeftGrid(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        worst = worst.max(crate::phasespace::max_abs_diff(&v, &oracle.values));
    }
    Ok(worst)
}

/// Run both anchors for all sixteen sign conventions.
pub fn sign_sweep(setup: &AnchorSetup) -> Result<Vec<SweepEntry>> {
    let oracles = anchor_oracles(setup, ANCHOR_T_DRIVEN)?;
    SignConvention::all()
        .into_par_iter()
        .map(|sign| {
            let stationarity = anchor_stationarity(setup, sign)?;
            let driven = anchor_driven(setup, sign, &oracles)?;
            Ok(SweepEntry {
                sign,
                stationarity,
                driven,
                passed: stationarity <= setup.stationarity_tol && driven <= setup.driven_tol,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_w(grid: PhaseGrid, theta: f64, q0: f64, p0: f64) -> WignerField {
        WignerField::from_fn(grid, Tag::Theta(theta), |q, p| {
            crate::phasespace::closed_form_wigner_ground(theta, q - q0, p - p0)
        })
    }

    #[test]
    fn steps_divide_evenly() {
        let cfg = EvolutionConfig::for_theta(DriveSpec::free(), 0.5, 1e-3, 2.0 * PI).unwrap();
        let (n, dt) = cfg.steps();
        assert_eq!(n, 6284);
        assert!((n as f64 * dt - 2.0 * PI).abs() < 1e-12);
        assert!(EvolutionConfig::for_theta(DriveSpec::free(), 0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn free_rotation_track_is_a_rotation() {
        let tr = build_track(&DriveSpec::free(), 0.01, 100, SignConvention::RESOLVED).unwrap();
        let b = tr.last().b;
        // foot of (k, ω) after t = 1: rotate back by −1
        let (c, s) = (1f64.cos(), 1f64.sin());
        let want = [[c, -s], [s, c]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[i][j] - want[i][j]).abs() < 1e-12, "{b:?}");
            }
        }
    }

    #[test]
    fn weyl_eigenstate_is_stationary() {
        let grid = PhaseGrid::square(8.0, 64).unwrap();
        let l0 = FourierImage::from_fn(grid, Tag::Theta(0.3), |k, w| {
            closed_form_lambda_theta(1, 0.3, k, w)
        });
        let run = |dt: f64| {
            let cfg = EvolutionConfig::for_theta(DriveSpec::free(), 0.3, dt, 1.3).unwrap();
            evolve_lambda_theta(&l0, &cfg, 0.3)
                .unwrap()
                .max_abs_diff(&l0)
                .unwrap()
        };
        let (coarse, fine) = (run(1e-2), run(5e-3));
        assert!(fine < 1e-6, "{fine:e}");
        // second order in the step
        assert!((coarse / fine).log2() > 1.8, "{coarse:e} {fine:e}");
        let cfg = EvolutionConfig::for_theta(DriveSpec::free(), 0.3, 1e-2, 1.3).unwrap();
        assert!(evolve_lambda_theta(&l0, &cfg, 0.5).is_err());
    }

    #[test]
    fn free_streaming_split_step() {
        let grid = PhaseGrid::square(8.0, 64).unwrap();
        for theta in [0.0, 0.5, 0.8] {
            let w0 = gaussian_w(grid, theta, -1.0, 0.5);
            let free = |_: f64, _: f64| 0.0;
            let w = evolve_wigner_separable(&w0, theta, &free, 0.05, 1.0).unwrap();
            // one step composes the kinetic factor exactly
            let exact = evolve_wigner_separable(&w0, theta, &free, 1.0, 1.0).unwrap();
            assert!(w.max_abs_diff(&exact).unwrap() < 1e-12);
            // and against the translated closed form for Weyl
            if theta == 0.5 {
                let want = WignerField::from_fn(grid, Tag::Theta(0.5), |q, p| {
                    crate::phasespace::closed_form_wigner_ground(0.5, q - p + 1.0, p - 0.5)
                });
                let err = w.max_abs_diff(&want).unwrap();
                assert!(err < 1e-8, "{err:e}");
            }
        }
    }

    #[test]
    fn weyl_harmonic_rotation_period() {
        let grid = PhaseGrid::square(8.0, 64).unwrap();
        let w0 = WignerField::from_fn(grid, Tag::Theta(0.5), |q, p| {
            C64::new((-(q - 1.0).powi(2) - p * p).exp() / PI, 0.0)
        });
        let pot = DrivenHarmonic(DriveSpec::free());
        let w = evolve_wigner_separable(&w0, 0.5, &pot, 1e-2, 2.0 * PI).unwrap();
        assert!(w.max_abs_diff(&w0).unwrap() < 1e-4);
    }

    #[test]
    fn correction_vanishes_for_weyl() {
        let grid = PhaseGrid::square(8.0, 32).unwrap();
        let weyl = SymmetrizationScheme::weyl();
        let fam = FieldFamily::from_scheme(&weyl, 0.0, |th| {
            Ok(FourierImage::from_fn(grid, Tag::Theta(th), |k, w| {
                closed_form_lambda_theta(0, th, k, w)
            }))
        })
        .unwrap();
        let (_, corr) = synthesize_full(&fam, &weyl, &DriveSpec::free()).unwrap();
        assert!(corr.values.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }
}
