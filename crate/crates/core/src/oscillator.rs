//! Driven parametric oscillator `H = p²/2 + Ω²(t) q²/2 − φ(t) q`: master
//! trajectory ε, δ and the exact Fock-like states built on it.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fourier::SpectralAxis;
use crate::grid::GridSpec;
use crate::ode::{self, Tolerance};
use crate::special::{factorial, hermite};

pub const MAX_LEVEL: usize = 12;

/// Trajectory tolerance used unless a caller asks otherwise.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DriveSpec {
    pub omega: Expr,
    pub phi: Expr,
}

impl DriveSpec {
    /// The trajectory always starts from ε(0) = 1, ε̇(0) = i, so α = 1
    /// whatever Ω(0) is; configs additionally insist on Ω(0) = 1 through
    /// [`DriveSpec::check_unit_start`].
    pub fn new(omega: Expr, phi: Expr) -> Result<Self> {
        Ok(Self { omega, phi })
    }

    pub fn check_unit_start(&self) -> Result<()> {
        let w0 = self.omega.eval(0.0);
        if (w0 - 1.0).abs() > 1e-12 {
            return Err(Error::Drive(format!("Omega(0) = {w0}, expected 1")));
        }
        Ok(())
    }

    pub fn parse(omega: &str, phi: &str) -> Result<Self> {
        Self::new(Expr::parse(omega)?, Expr::parse(phi)?)
    }

    pub fn free() -> Self {
        Self::parse("1", "0").unwrap()
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.omega.eval(t)
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.phi.eval(t)
    }

    pub fn is_undriven(&self) -> bool {
        !self.phi.depends_on_t() && self.phi.eval(0.0) == 0.0
    }

    /// Ω(t) > 0 and finite, φ finite, on sample points of `[0, t_end]`.
    pub fn check_window(&self, t_end: f64) -> Result<()> {
        let n = 1000;
        for i in 0..=n {
            let t = t_end * i as f64 / n as f64;
            let (w, f) = (self.omega(t), self.phi(t));
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Drive(format!("Omega({t}) = {w} is not positive")));
            }
            if !f.is_finite() {
                return Err(Error::Drive(format!("phi({t}) = {f} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub eps: Vec<C64>,
    pub deps: Vec<C64>,
    pub delta: Vec<C64>,
    /// Continuous branch of arg ε.
    pub arg_eps: Vec<f64>,
    /// ∫₀ᵗ δ²/ε² dτ
    pub delta_phase: Vec<C64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the stored sample closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn max_wronskian_defect(&self) -> f64 {
        self.alpha.iter().fold(0.0, |m, a| m.max((a - 1.0).abs()))
    }

    /// Columns t, Re ε, Im ε, Re ε̇, Im ε̇, Re δ, Im δ, α, β, γ.
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("t,re_eps,im_eps,re_deps,im_deps,re_delta,im_delta,alpha,beta,gamma\n");
        for i in 0..self.len() {
            let cols = [
                self.times[i],
                self.eps[i].re,
                self.eps[i].im,
                self.deps[i].re,
                self.deps[i].im,
                self.delta[i].re,
                self.delta[i].im,
                self.alpha[i],
                self.beta[i],
                self.gamma[i],
            ];
            let line: Vec<String> = cols.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

/// `count` uniformly spaced samples covering `[0, t_end]`.
pub fn uniform_times(t_end: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| t_end * i as f64 / (count - 1) as f64)
        .collect()
}

/// Integrate ε̈ = −Ω²ε, δ̇ = −(i/√2)εφ from ε(0) = 1, ε̇(0) = i, δ(0) = 0,
/// storing the state at every time in `times` (ascending, starting at or
/// after 0).
pub fn integrate_trajectory(drive: &DriveSpec, times: &[f64], tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::Config(format!("tolerance {tol} outside (0, 1e-4]")));
    }
    let Some(&t_end) = times.last() else {
        return Err(Error::Config("no sample times".into()));
    };
    if !(t_end > 0.0) || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "sample times must be ascending, non-negative, and end after 0".into(),
        ));
    }
    drive.check_window(t_end)?;

    // ε, ε̇, δ, arg ε, ∫δ²/ε²
    let y0 = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let eps = C64::new(y[0], y[1]);
        let deps = C64::new(y[2], y[3]);
        let delta = C64::new(y[4], y[5]);
        let w2 = drive.omega(t).powi(2);
        let phi = drive.phi(t);
        let dd = C64::new(0.0, -phi / SQRT_2) * eps;
        let dphase = (delta / eps).powi(2);
        dy[0] = deps.re;
        dy[1] = deps.im;
        dy[2] = -w2 * eps.re;
        dy[3] = -w2 * eps.im;
        dy[4] = dd.re;
        dy[5] = dd.im;
        dy[6] = (deps * eps.conj()).im / eps.norm_sqr();
        dy[7] = dphase.re;
        dy[8] = dphase.im;
    };
    let mut opts = Tolerance::new(tol);
    opts.h_init = 1e-3;
    let (states, _) = ode::integrate(rhs, 0.0, &y0, times, opts)?;

    let n = times.len();
    let mut tr = Trajectory {
        times: times.to_vec(),
        eps: Vec::with_capacity(n),
        deps: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        arg_eps: Vec::with_capacity(n),
        delta_phase: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
    };
    for (t, y) in times.iter().zip(states) {
        let eps = C64::new(y[0], y[1]);
        let deps = C64::new(y[2], y[3]);
        let delta = C64::new(y[4], y[5]);
        if eps.norm() < 1e-300 {
            return Err(Error::VanishingEpsilon(*t));
        }
        // i(ε ε̄̇ − ε̇ ε̄)/2 = Im(ε̇ ε̄)
        let alpha = (deps * eps.conj()).im;
        // (δ ε̄ + δ̄ ε)/2, real by construction
        let beta = (delta * eps.conj()).re;
        // (ε φ δ̄ + ε̄ φ δ)/√2
        let gamma = SQRT_2 * drive.phi(*t) * beta;
        tr.eps.push(eps);
        tr.deps.push(deps);
        tr.delta.push(delta);
        tr.arg_eps.push(y[6]);
        tr.delta_phase.push(C64::new(y[7], y[8]));
        tr.alpha.push(alpha);
        tr.beta.push(beta);
        tr.gamma.push(gamma);
    }
    Ok(tr)
}

fn check_index(traj: &Trajectory, idx: usize) -> Result<()> {
    if idx >= traj.len() {
        return Err(Error::Config(format!(
            "sample index {idx} outside trajectory of {} samples",
            traj.len()
        )));
    }
    if traj.eps[idx].norm() < 1e-300 {
        return Err(Error::VanishingEpsilon(traj.times[idx]));
    }
    Ok(())
}

pub fn l2_norm(grid: &GridSpec, psi: &[C64]) -> f64 {
    (grid.spacing() * psi.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
}

fn normalize(grid: &GridSpec, psi: &mut [C64]) {
    let n = l2_norm(grid, psi);
    for v in psi.iter_mut() {
        *v /= n;
    }
}

/// Ground state at sample `idx`:
/// `π^{-1/4} ε^{-1/2} exp(iε̇x²/(2ε) − √2δx/ε + i∫δ²/ε²)`, renormalized on
/// the grid.
pub fn ground_state(traj: &Trajectory, idx: usize, grid: &GridSpec) -> Result<Vec<C64>> {
    check_index(traj, idx)?;
    let eps = traj.eps[idx];
    let deps = traj.deps[idx];
    let delta = traj.delta[idx];
    let prefactor = C64::from_polar(PI.powf(-0.25) / eps.norm().sqrt(), -0.5 * traj.arg_eps[idx])
        * (C64::i() * traj.delta_phase[idx]).exp();
    let a = C64::i() * deps / (2.0 * eps);
    let b = -SQRT_2 * delta / eps;
    let mut psi: Vec<C64> = grid
        .points()
        .iter()
        .map(|&x| prefactor * (a * x * x + b * x).exp())
        .collect();
    normalize(grid, &mut psi);
    Ok(psi)
}

/// n-th excited state: `e^{−in arg ε} (2ⁿn!)^{-1/2} H_n((x + √2β)/|ε|) ψ₀`,
/// renormalized.
pub fn excited_state(traj: &Trajectory, n: usize, idx: usize, grid: &GridSpec) -> Result<Vec<C64>> {
    if n > MAX_LEVEL {
        return Err(Error::StateIndex(n));
    }
    let psi0 = ground_state(traj, idx, grid)?;
    if n == 0 {
        return Ok(psi0);
    }
    let mag = traj.eps[idx].norm();
    let shift = SQRT_2 * traj.beta[idx];
    let phase = C64::from_polar(
        1.0 / (2f64.powi(n as i32) * factorial(n)).sqrt(),
        -(n as f64) * traj.arg_eps[idx],
    );
    let mut psi: Vec<C64> = grid
        .points()
        .iter()
        .zip(&psi0)
        .map(|(&x, p)| phase * hermite(n, (x + shift) / mag) * p)
        .collect();
    normalize(grid, &mut psi);
    Ok(psi)
}

/// −i dψ/dx by spectral differentiation.
pub fn apply_momentum(grid: &GridSpec, psi: &[C64]) -> Vec<C64> {
    let ax = SpectralAxis::new(*grid);
    let mut d = psi.to_vec();
    ax.derivative(&mut d, 1);
    d.iter().map(|v| v * C64::new(0.0, -1.0)).collect()
}

/// ‖Â(t)ψ₀‖₂ with Â = (i/√2)(ε p̂ − ε̇ x) + δ.
pub fn lowering_operator_residual(traj: &Trajectory, idx: usize, grid: &GridSpec) -> Result<f64> {
    let psi = ground_state(traj, idx, grid)?;
    let p = apply_momentum(grid, &psi);
    let (eps, deps, delta) = (traj.eps[idx], traj.deps[idx], traj.delta[idx]);
    let c = C64::new(0.0, 1.0 / SQRT_2);
    let r: Vec<C64> = grid
        .points()
        .iter()
        .zip(psi.iter().zip(&p))
        .map(|(&x, (v, pv))| c * (eps * pv - deps * x * v) + delta * v)
        .collect();
    Ok(l2_norm(grid, &r))
}

/// ‖iΔ_tψ − Ĥψ‖₂ at time `t` using a centered difference of step `h`.
pub fn schrodinger_residual(
    drive: &DriveSpec,
    n: usize,
    t: f64,
    h: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<f64> {
    let traj = integrate_trajectory(drive, &[t - h, t, t + h], tol)?;
    let before = excited_state(&traj, n, 0, grid)?;
    let now = excited_state(&traj, n, 1, grid)?;
    let after = excited_state(&traj, n, 2, grid)?;
    let ax = SpectralAxis::new(*grid);
    let mut lap = now.clone();
    ax.derivative(&mut lap, 2);
    let (w2, phi) = (drive.omega(t).powi(2), drive.phi(t));
    let r: Vec<C64> = grid
        .points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let dt = C64::i() * (after[i] - before[i]) / (2.0 * h);
            let h_psi = -0.5 * lap[i] + (0.5 * w2 * x * x - phi * x) * now[i];
            dt - h_psi
        })
        .collect();
    Ok(l2_norm(grid, &r))
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub grid: GridSpec,
    pub entries: Array2<C64>,
}

impl DensityMatrix {
    pub fn pure(grid: GridSpec, psi: &[C64]) -> Self {
        let n = grid.count;
        let entries = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj());
        Self { grid, entries }
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum() * self.grid.spacing()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.entries;
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1e-300);
        let mut d: f64 = 0.0;
        for ((i, j), v) in m.indexed_iter() {
            d = d.max((v - m[[j, i]].conj()).norm());
        }
        d / scale
    }

    /// max |ρ·ρ − ρ| with the grid quadrature as matrix product.
    pub fn purity_defect(&self) -> f64 {
        let sq = self.entries.dot(&self.entries) * C64::new(self.grid.spacing(), 0.0);
        (&sq - &self.entries)
            .iter()
            .fold(0.0, |a, v| a.max(v.norm()))
    }
}

pub fn density_matrix(
    traj: &Trajectory,
    n: usize,
    idx: usize,
    grid: &GridSpec,
) -> Result<DensityMatrix> {
    let psi = excited_state(traj, n, idx, grid)?;
    Ok(DensityMatrix::pure(*grid, &psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::symmetric(10.0, 512).unwrap()
    }

    #[test]
    fn rejects_bad_drives() {
        assert!(DriveSpec::parse("2", "0")
            .unwrap()
            .check_unit_start()
            .is_err());
        assert!(DriveSpec::parse("1 + sin(t)", "0")
            .unwrap()
            .check_unit_start()
            .is_ok());
        let d = DriveSpec::parse("1 - t", "0").unwrap();
        assert!(integrate_trajectory(&d, &[0.5, 2.0], 1e-10).is_err());
        assert!(integrate_trajectory(&DriveSpec::free(), &[1.0], 1e-3).is_err());
    }

    #[test]
    fn free_oscillator_trajectory() {
        let times = uniform_times(2.0 * PI, 65);
        let tr = integrate_trajectory(&DriveSpec::free(), &times, DEFAULT_TOL).unwrap();
        for (i, &t) in times.iter().enumerate() {
            assert!((tr.eps[i] - C64::from_polar(1.0, t)).norm() < 1e-9);
            assert_eq!(tr.delta[i], C64::new(0.0, 0.0));
            assert_eq!(tr.beta[i], 0.0);
            assert_eq!(tr.gamma[i], 0.0);
        }
        assert!(tr.max_wronskian_defect() < 1e-10);
    }

    #[test]
    fn wronskian_with_parametric_drive() {
        let d = DriveSpec::parse("1 + 0.1*cos(t)", "0").unwrap();
        let tr = integrate_trajectory(&d, &uniform_times(20.0, 201), DEFAULT_TOL).unwrap();
        assert!(tr.max_wronskian_defect() < 1e-10);
    }

    #[test]
    fn constant_force_delta() {
        let d = DriveSpec::parse("1", "0.3").unwrap();
        let times = uniform_times(6.0, 31);
        let tr = integrate_trajectory(&d, &times, 1e-10).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let want = -(0.3 / SQRT_2) * (C64::from_polar(1.0, t) - 1.0);
            assert!((tr.delta[i] - want).norm() < 1e-8);
        }
    }

    #[test]
    fn ground_state_at_start() {
        let g = grid();
        let tr = integrate_trajectory(
            &DriveSpec::parse("1 + 0.2*sin(t)", "cos(t)").unwrap(),
            &[0.0, 1.0],
            1e-10,
        )
        .unwrap();
        let psi = ground_state(&tr, 0, &g).unwrap();
        for (x, v) in g.points().iter().zip(&psi) {
            assert!((v - PI.powf(-0.25) * (-x * x / 2.0).exp()).norm() < 1e-10);
        }
    }

    #[test]
    fn phase_integral_matches_printed_amplitude() {
        // Im ∫δ²/ε² = β²/|ε|²
        let d = DriveSpec::parse("1 + 0.1*cos(t)", "0.5*cos(0.9*t)").unwrap();
        let tr = integrate_trajectory(&d, &uniform_times(8.0, 17), 1e-11).unwrap();
        for i in 0..tr.len() {
            let want = tr.beta[i].powi(2) / tr.eps[i].norm_sqr();
            assert!((tr.delta_phase[i].im - want).abs() < 1e-8);
        }
    }

    #[test]
    fn first_excited_state_structure() {
        let g = grid();
        let d = DriveSpec::parse("1", "0.5*cos(0.9*t)").unwrap();
        let tr = integrate_trajectory(&d, &[0.0, 3.0], 1e-11).unwrap();
        let psi0 = ground_state(&tr, 1, &g).unwrap();
        let psi1 = excited_state(&tr, 1, 1, &g).unwrap();
        let (eps, beta) = (tr.eps[1], tr.beta[1]);
        let mut built: Vec<C64> = g
            .points()
            .iter()
            .zip(&psi0)
            .map(|(x, p)| SQRT_2 / eps * (x + SQRT_2 * beta) * p)
            .collect();
        let nrm = l2_norm(&g, &built);
        built.iter_mut().for_each(|v| *v /= nrm);
        for (a, b) in psi1.iter().zip(&built) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_levels() {
        let g = grid();
        let d = DriveSpec::parse("1 + 0.1*cos(t)", "0.5*cos(0.9*t)").unwrap();
        let tr = integrate_trajectory(&d, &[0.0, 4.0], 1e-11).unwrap();
        let states: Vec<Vec<C64>> = (0..=5)
            .map(|n| excited_state(&tr, n, 1, &g).unwrap())
            .collect();
        for m in 0..=5 {
            for n in 0..=5 {
                let ip: C64 = states[m]
                    .iter()
                    .zip(&states[n])
                    .map(|(a, b)| a.conj() * b)
                    .sum::<C64>()
                    * g.spacing();
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-8, "{m} {n} {ip}");
            }
        }
        assert!(matches!(
            excited_state(&tr, 13, 0, &g),
            Err(Error::StateIndex(13))
        ));
    }

    #[test]
    fn lowering_and_schrodinger_residuals() {
        let g = grid();
        let d = DriveSpec::parse("1", "0.5*cos(0.9*t)").unwrap();
        let tr = integrate_trajectory(&d, &[0.0, 5.0], 1e-11).unwrap();
        assert!(lowering_operator_residual(&tr, 0, &g).unwrap() < 1e-8);
        assert!(lowering_operator_residual(&tr, 1, &g).unwrap() < 1e-6);
        for n in [0, 2] {
            let r = schrodinger_residual(&d, n, 5.0, 1e-4, &g, 1e-12).unwrap();
            assert!(r < 1e-4, "n={n}: {r}");
        }
        let d2 = DriveSpec::parse("1 + 0.1*cos(t)", "sin(t)").unwrap();
        assert!(schrodinger_residual(&d2, 1, 3.0, 1e-4, &g, 1e-12).unwrap() < 1e-4);
    }

    #[test]
    fn density_matrix_properties() {
        let g = GridSpec::symmetric(10.0, 256).unwrap();
        let tr = integrate_trajectory(&DriveSpec::free(), &[0.0, 1.0], 1e-10).unwrap();
        let rho = density_matrix(&tr, 0, 1, &g).unwrap();
        for ((i, j), v) in rho.entries.indexed_iter() {
            let (x, y) = (g.point(i), g.point(j));
            let want = (-(x * x + y * y) / 2.0).exp() / PI.sqrt();
            assert!((v - want).norm() < 1e-10);
        }
        let d = DriveSpec::parse("1", "0.5*cos(0.9*t)").unwrap();
        let tr = integrate_trajectory(&d, &[0.0, 2.0], 1e-10).unwrap();
        let rho = density_matrix(&tr, 3, 1, &g).unwrap();
        assert!((rho.trace() - 1.0).norm() < 1e-8);
        assert!(rho.hermiticity_defect() < 1e-10);
        assert!(rho.purity_defect() < 1e-8);
    }
}
