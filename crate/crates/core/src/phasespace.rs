//! Partial (θ) and scheme-averaged Wigner functions, their Fourier images,
//! and the harmonic-oscillator closed forms used as oracles.
//!
//! Conventions:
//!
//! ```text
//! W_θ(q,p) = (1/2π) ∫ e^{ipz} ρ(q − θz, q + (1−θ)z) dz
//! ρ(x,y)   = ∫ e^{ip(x−y)} W_θ((1−θ)x + θy, p) dp
//! Λ(k,ω)   = (1/2π) ∫∫ W(q,p) e^{i(kq + ωp)} dq dp
//! ```

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fourier::{forward_2d, inverse_2d, map_lanes, Sign, SpectralAxis};
use crate::grid::{GridSpec, PhaseGrid};
use crate::oscillator::{density_matrix, DensityMatrix, Trajectory};
use crate::schemes::{OperatorMatrix, Symbol, SymmetrizationScheme};
use crate::special::{factorial, gauss_hermite, hermite, laguerre};

/// Relative magnitude below which a shear column of ρ is dropped.
const COLUMN_CUTOFF: f64 = 1e-18;

#[derive(Clone, Debug, PartialEq)]
pub enum Tag {
    Theta(f64),
    Scheme(String),
}

impl Tag {
    pub fn theta(&self) -> Option<f64> {
        match self {
            Tag::Theta(t) => Some(*t),
            Tag::Scheme(_) => None,
        }
    }
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tag::Theta(t) => write!(f, "theta={t}"),
            Tag::Scheme(s) => write!(f, "scheme={s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WignerField {
    pub grid: PhaseGrid,
    /// `values[[i, j]] = W(q_i, p_j)`
    pub values: Array2<C64>,
    pub tag: Tag,
}

impl WignerField {
    pub fn from_fn(grid: PhaseGrid, tag: Tag, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let values = Array2::from_shape_fn((grid.q.count, grid.p.count), |(i, j)| {
            f(grid.q.point(i), grid.p.point(j))
        });
        Self { grid, values, tag }
    }

    /// ∫∫ W dq dp by the rectangle rule.
    pub fn integral(&self) -> C64 {
        sum_fixed_order(&self.values) * self.grid.cell_area()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn conj(&self) -> Self {
        let tag = match &self.tag {
            Tag::Theta(t) => Tag::Theta(1.0 - t),
            other => other.clone(),
        };
        Self {
            grid: self.grid,
            values: self.values.mapv(|v| v.conj()),
            tag,
        }
    }

    pub fn max_abs_diff(&self, other: &WignerField) -> Result<f64> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(Error::GridMismatch(
                "Wigner fields on different grids".into(),
            ));
        }
        Ok(max_abs_diff(&self.values, &other.values))
    }
}

#[derive(Clone, Debug)]
pub struct FourierImage {
    /// Phase-space grid the image was taken from.
    pub spatial: PhaseGrid,
    /// `(k, ω)` grid, the dual of `spatial`.
    pub dual: PhaseGrid,
    /// `values[[a, b]] = Λ(k_a, ω_b)`
    pub values: Array2<C64>,
    pub tag: Tag,
}

impl FourierImage {
    pub fn from_fn(spatial: PhaseGrid, tag: Tag, f: impl Fn(f64, f64) -> C64) -> Self {
        let dual = spatial.dual();
        let values = Array2::from_shape_fn((dual.q.count, dual.p.count), |(a, b)| {
            f(dual.q.point(a), dual.p.point(b))
        });
        Self {
            spatial,
            dual,
            values,
            tag,
        }
    }

    /// Λ(0, 0)
    pub fn origin(&self) -> C64 {
        self.values[[self.dual.q.count / 2, self.dual.p.count / 2]]
    }

    pub fn max_abs_diff(&self, other: &FourierImage) -> Result<f64> {
        if !self.dual.approx_eq(&other.dual) {
            return Err(Error::GridMismatch(
                "Fourier images on different grids".into(),
            ));
        }
        Ok(max_abs_diff(&self.values, &other.values))
    }
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.norm()))
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Row-major sum with a fixed association order.
pub fn sum_fixed_order(a: &Array2<C64>) -> C64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().fold(C64::new(0.0, 0.0), |s, v| s + v))
        .fold(C64::new(0.0, 0.0), |s, v| s + v)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    Ok(())
}

pub fn partial_wigner(rho: &DensityMatrix, theta: f64, grid: &PhaseGrid) -> Result<WignerField> {
    check_theta(theta)?;
    let values = wigner_average(rho, &[(theta, 1.0)], grid)?;
    Ok(WignerField {
        grid: *grid,
        values,
        tag: Tag::Theta(theta),
    })
}

/// Σ w_i W_{θ_i} over the scheme's atoms and nodes.
pub fn full_wigner(
    rho: &DensityMatrix,
    scheme: &SymmetrizationScheme,
    grid: &PhaseGrid,
) -> Result<WignerField> {
    let values = wigner_average(rho, &scheme.nodes(), grid)?;
    Ok(WignerField {
        grid: *grid,
        values,
        tag: Tag::Scheme(scheme.label.clone()),
    })
}

/// Shears ρ so that every z-column is exact grid data, trigonometrically
/// interpolates each column to `q − θz`, and transforms in z. Averaging
/// over θ nodes happens inside the interpolation kernel, so a scheme costs
/// the same as a single θ.
fn wigner_average(
    rho: &DensityMatrix,
    nodes: &[(f64, f64)],
    grid: &PhaseGrid,
) -> Result<Array2<C64>> {
    let xg = rho.grid;
    if !(xg.covers(grid.q.min) && xg.covers(grid.q.last())) {
        return Err(Error::OutOfBounds(format!(
            "q range [{}, {}] not inside the density-matrix grid [{}, {}]",
            grid.q.min,
            grid.q.last(),
            xg.min,
            xg.last()
        )));
    }
    let n = xg.count;
    let dx = xg.spacing();

    // G[j, m] = ρ(x_j, x_j + z_m), z_m = (m − n) Δx
    let mut g = Array2::<C64>::zeros((n, 2 * n));
    Zip::indexed(&mut g).par_for_each(|(j, m), v| {
        let col = j as isize + m as isize - n as isize;
        if (0..n as isize).contains(&col) {
            *v = rho.entries[[j, col as usize]];
        }
    });
    let scale = max_abs(&g);
    if scale == 0.0 {
        return Ok(Array2::zeros((grid.q.count, grid.p.count)));
    }
    let col_max: Vec<f64> = (0..2 * n)
        .map(|m| g.column(m).iter().fold(0.0f64, |a, v| a.max(v.norm())))
        .collect();
    let m_lo = col_max
        .iter()
        .position(|&c| c > COLUMN_CUTOFF * scale)
        .unwrap();
    let m_hi = col_max
        .iter()
        .rposition(|&c| c > COLUMN_CUTOFF * scale)
        .unwrap()
        + 1;
    let mut g = g.slice_move(ndarray::s![.., m_lo..m_hi]);
    let z: Vec<f64> = (m_lo..m_hi).map(|m| (m as f64 - n as f64) * dx).collect();

    let ax = SpectralAxis::new(xg);
    let fft = FftPlanner::new().plan_fft_forward(n);
    map_lanes(&mut g, 0, |lane| {
        fft.process(lane);
        for v in lane.iter_mut() {
            *v /= n as f64;
        }
        lane[n / 2] = C64::new(0.0, 0.0);
    });
    let kappa = ax.wavenumbers();

    let phi = Array2::from_shape_fn((n, z.len()), |(a, m)| {
        nodes
            .iter()
            .map(|&(th, w)| C64::from_polar(w, -kappa[a] * th * z[m]))
            .sum::<C64>()
    });
    let cphi = g * phi;
    let e = Array2::from_shape_fn((grid.q.count, n), |(i, a)| {
        C64::from_polar(1.0, kappa[a] * (grid.q.point(i) - xg.min))
    });
    let r = e.dot(&cphi);
    let zmat = Array2::from_shape_fn((z.len(), grid.p.count), |(m, l)| {
        C64::from_polar(dx / (2.0 * PI), grid.p.point(l) * z[m])
    });
    Ok(r.dot(&zmat))
}

/// Exact inverse of the partial Wigner transform onto `out`.
pub fn inverse_partial_wigner(w: &WignerField, out: &GridSpec) -> Result<DensityMatrix> {
    let Tag::Theta(theta) = w.tag else {
        return Err(Error::TagMismatch(
            "inversion needs a theta-tagged field, got a scheme average".into(),
        ));
    };
    let n = out.count;
    let dx = out.spacing();
    let (qg, pg) = (w.grid.q, w.grid.p);
    let nq = qg.count;
    let z: Vec<f64> = (0..2 * n).map(|m| (m as f64 - n as f64) * dx).collect();

    // R[i, m] = Σ_l W(q_i, p_l) Δp e^{−i p_l z_m}
    let zinv = Array2::from_shape_fn((pg.count, 2 * n), |(l, m)| {
        C64::from_polar(pg.spacing(), -pg.point(l) * z[m])
    });
    let mut r = w.values.dot(&zinv);

    let fft = FftPlanner::new().plan_fft_forward(nq);
    map_lanes(&mut r, 0, |lane| {
        fft.process(lane);
        for v in lane.iter_mut() {
            *v /= nq as f64;
        }
        lane[nq / 2] = C64::new(0.0, 0.0);
    });
    let kappa = SpectralAxis::new(qg).wavenumbers();
    let shift = Array2::from_shape_fn((nq, 2 * n), |(a, m)| {
        C64::from_polar(1.0, kappa[a] * theta * z[m])
    });
    let c = r * shift;
    let e = Array2::from_shape_fn((n, nq), |(j, a)| {
        C64::from_polar(1.0, kappa[a] * (out.point(j) - qg.min))
    });
    let sheared = e.dot(&c);

    let mut entries = Array2::<C64>::zeros((n, n));
    Zip::indexed(&mut entries).par_for_each(|(j, col), v| {
        let m = col + n - j;
        let q = out.point(j) + theta * z[m];
        if qg.covers(q) {
            *v = sheared[[j, m]];
        }
    });
    Ok(DensityMatrix {
        grid: *out,
        entries,
    })
}

/// Λ = (1/2π) ∫∫ W e^{i(kq + ωp)} on the dual grid.
pub fn fourier_image(w: &WignerField) -> FourierImage {
    let mut values = w.values.clone();
    forward_2d(&mut values, &w.grid, Sign::Plus);
    values.mapv_inplace(|v| v / (2.0 * PI));
    FourierImage {
        spatial: w.grid,
        dual: w.grid.dual(),
        values,
        tag: w.tag.clone(),
    }
}

pub fn inverse_fourier_image(l: &FourierImage) -> WignerField {
    let mut values = l.values.clone();
    inverse_2d(&mut values, &l.spatial, Sign::Plus);
    values.mapv_inplace(|v| v * (2.0 * PI));
    WignerField {
        grid: l.spatial,
        values,
        tag: l.tag.clone(),
    }
}

/// Λ_{θ,n}(k, ω) = (1/2π) e^{−(k²+ω²)/4 − ikω(θ−½)} L_n((k²+ω²)/2).
pub fn closed_form_lambda_theta(n: usize, theta: f64, k: f64, omega: f64) -> C64 {
    let r2 = k * k + omega * omega;
    C64::from_polar(
        (-r2 / 4.0).exp() * laguerre(n, r2 / 2.0) / (2.0 * PI),
        -k * omega * (theta - 0.5),
    )
}

/// Scheme average of [`closed_form_lambda_theta`]:
/// `(1/2π) G(−kω) e^{ikω/2} e^{−(k²+ω²)/4} L_n((k²+ω²)/2)`.
pub fn closed_form_lambda_scheme(
    n: usize,
    scheme: &SymmetrizationScheme,
    k: f64,
    omega: f64,
) -> C64 {
    let r2 = k * k + omega * omega;
    scheme.characteristic_g(-k * omega)
        * C64::from_polar(1.0, k * omega / 2.0)
        * ((-r2 / 4.0).exp() * laguerre(n, r2 / 2.0) / (2.0 * PI))
}

/// Partial Wigner function of the oscillator ground state.
pub fn closed_form_wigner_ground(theta: f64, q: f64, p: f64) -> C64 {
    let a = theta * theta + (1.0 - theta) * (1.0 - theta);
    let u = C64::new((2.0 * theta - 1.0) * q, p);
    (u * u / (2.0 * a) - q * q).exp() / (PI * (2.0 * a).sqrt())
}

/// Weyl Wigner function of the n-th oscillator level,
/// `((−1)ⁿ/π) e^{−q²−p²} L_n(2q² + 2p²)`.
pub fn closed_form_wigner_weyl(n: usize, q: f64, p: f64) -> f64 {
    let r2 = q * q + p * p;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign / PI * (-r2).exp() * laguerre(n, 2.0 * r2)
}

pub fn closed_form_wigner_jordan_ground(q: f64, p: f64) -> f64 {
    (-(q * q + p * p) / 2.0).exp() * (p * q).cos() / (PI * 2f64.sqrt())
}

/// Fourier image of the exact driven state, computed numerically through
/// ρ → W_θ → Λ_θ.
pub fn lambda_driven_oracle(
    traj: &Trajectory,
    n: usize,
    theta: f64,
    idx: usize,
    rho_grid: &GridSpec,
    grid: &PhaseGrid,
) -> Result<FourierImage> {
    let rho = density_matrix(traj, n, idx, rho_grid)?;
    Ok(fourier_image(&partial_wigner(&rho, theta, grid)?))
}

/// |∫e^{−x²}H_n(x+a)H_n(x+b)dx − 2ⁿn!√π L_n(−2ab)| / (2ⁿn!√π), by
/// Gauss–Hermite quadrature of order 4n + 20 (exact for this integrand).
///
/// The residual is scaled by 2ⁿn!√π because the raw values reach ~10⁸ for
/// n = 6, where an absolute 1e-8 is below double-precision resolution.
pub fn verify_hermite_identity(n: usize, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_hermite(4 * n + 20);
    let lhs: f64 = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| w * hermite(n, x + a) * hermite(n, x + b))
        .sum();
    let norm = 2f64.powi(n as i32) * factorial(n) * PI.sqrt();
    (lhs / norm - laguerre(n, -2.0 * a * b)).abs()
}

/// ⟨A⟩ two ways: Tr(Â ρ) and ∫∫ A W dq dp.
pub fn expectation(
    op: &OperatorMatrix,
    rho: &DensityMatrix,
    symbol: &Symbol,
    w: &WignerField,
) -> Result<(f64, f64)> {
    if !op.grid.approx_eq(&rho.grid) {
        return Err(Error::GridMismatch(
            "operator and density matrix live on different grids".into(),
        ));
    }
    let n = rho.grid.count;
    let trace: C64 = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| op.entries[[i, j]] * rho.entries[[j, i]])
                .fold(C64::new(0.0, 0.0), |s, v| s + v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(C64::new(0.0, 0.0), |s, v| s + v)
        * rho.grid.spacing();
    let weighted = Array2::from_shape_fn(w.values.dim(), |(i, j)| {
        w.values[[i, j]] * symbol.eval(w.grid.q.point(i), w.grid.p.point(j))
    });
    let phase = sum_fixed_order(&weighted) * w.grid.cell_area();
    Ok((trace.re, phase.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{integrate_trajectory, DriveSpec, DEFAULT_TOL};

    fn ground_rho(grid: &GridSpec) -> DensityMatrix {
        let psi: Vec<C64> = grid
            .points()
            .iter()
            .map(|x| C64::new(PI.powf(-0.25) * (-x * x / 2.0).exp(), 0.0))
            .collect();
        DensityMatrix::pure(*grid, &psi)
    }

    #[test]
    fn ground_state_partial_wigner_closed_form() {
        let xg = GridSpec::symmetric(10.0, 256).unwrap();
        let pg = PhaseGrid::square(6.0, 64).unwrap();
        let rho = ground_rho(&xg);
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let w = partial_wigner(&rho, theta, &pg).unwrap();
            let want = WignerField::from_fn(pg, Tag::Theta(theta), |q, p| {
                closed_form_wigner_ground(theta, q, p)
            });
            assert!(w.max_abs_diff(&want).unwrap() < 1e-10, "theta {theta}");
        }
        let w0 = closed_form_wigner_ground(0.0, 0.0, 0.0);
        assert!((w0.re - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn jordan_and_weyl_ground_states() {
        let xg = GridSpec::symmetric(10.0, 256).unwrap();
        let pg = PhaseGrid::square(6.0, 64).unwrap();
        let rho = ground_rho(&xg);
        let j = full_wigner(&rho, &SymmetrizationScheme::jordan(), &pg).unwrap();
        let want = WignerField::from_fn(pg, Tag::Scheme("jordan".into()), |q, p| {
            C64::new(closed_form_wigner_jordan_ground(q, p), 0.0)
        });
        assert!(j.max_abs_diff(&want).unwrap() < 1e-10);
        assert!(j.max_imag() < 1e-12);
        let w = full_wigner(&rho, &SymmetrizationScheme::weyl(), &pg).unwrap();
        let p = partial_wigner(&rho, 0.5, &pg).unwrap();
        assert_eq!(w.values, p.values);
    }

    #[test]
    fn theta_conjugation_and_inverse() {
        let xg = GridSpec::symmetric(8.0, 128).unwrap();
        let pg = PhaseGrid::square(8.0, 128).unwrap();
        let d = DriveSpec::parse("1", "0.5*cos(0.9*t)").unwrap();
        let tr = integrate_trajectory(&d, &[0.0, 2.0], DEFAULT_TOL).unwrap();
        let rho = density_matrix(&tr, 2, 1, &xg).unwrap();
        let a = partial_wigner(&rho, 0.3, &pg).unwrap();
        let b = partial_wigner(&rho, 0.7, &pg).unwrap();
        assert!(a.max_abs_diff(&b.conj()).unwrap() < 1e-12);
        let back = inverse_partial_wigner(&a, &xg).unwrap();
        let err = max_abs_diff(&back.entries, &rho.entries);
        assert!(err < 1e-9, "{err}");
        assert!(back.hermiticity_defect() < 1e-9);
        let bad = full_wigner(&rho, &SymmetrizationScheme::jordan(), &pg).unwrap();
        assert!(matches!(
            inverse_partial_wigner(&bad, &xg),
            Err(Error::TagMismatch(_))
        ));
    }

    #[test]
    fn rejects_phase_grid_outside_rho_grid() {
        let xg = GridSpec::symmetric(5.0, 64).unwrap();
        let pg = PhaseGrid::square(6.0, 32).unwrap();
        assert!(matches!(
            partial_wigner(&ground_rho(&xg), 0.5, &pg),
            Err(Error::OutOfBounds(_))
        ));
        assert!(partial_wigner(&ground_rho(&xg), 1.5, &pg).is_err());
    }

    #[test]
    fn fourier_image_of_ground_state() {
        let xg = GridSpec::symmetric(10.0, 256).unwrap();
        let pg = PhaseGrid::square(8.0, 64).unwrap();
        let rho = ground_rho(&xg);
        for theta in [0.0, 0.3, 0.5] {
            let l = fourier_image(&partial_wigner(&rho, theta, &pg).unwrap());
            assert!((l.origin() - 1.0 / (2.0 * PI)).norm() < 1e-12);
            let want = FourierImage::from_fn(pg, Tag::Theta(theta), |k, w| {
                closed_form_lambda_theta(0, theta, k, w)
            });
            assert!(l.max_abs_diff(&want).unwrap() < 1e-10);
            let back = inverse_fourier_image(&l);
            let w = partial_wigner(&rho, theta, &pg).unwrap();
            assert!(back.max_abs_diff(&w).unwrap() < 1e-13);
        }
    }

    #[test]
    fn closed_form_spot_values() {
        assert!((closed_form_lambda_theta(0, 0.5, 0.0, 0.0).re - 1.0 / (2.0 * PI)).abs() < 1e-16);
        let k = 1.0;
        let w = 1.0;
        assert!(closed_form_lambda_theta(1, 0.2, k, w).norm() < 1e-16);
        let r = PI.sqrt();
        let j = closed_form_lambda_scheme(0, &SymmetrizationScheme::jordan(), r, r);
        assert!(j.norm() < 1e-16);
        // Weyl scheme form equals θ = 1/2
        let a = closed_form_lambda_scheme(3, &SymmetrizationScheme::weyl(), 0.7, -1.3);
        let b = closed_form_lambda_theta(3, 0.5, 0.7, -1.3);
        assert!((a - b).norm() < 1e-16);
    }

    #[test]
    fn hermite_identity() {
        assert!(verify_hermite_identity(0, 0.3, -1.0) < 1e-12);
        assert!(verify_hermite_identity(1, 0.0, 0.0) < 1e-12);
        for n in 0..=10 {
            assert!(verify_hermite_identity(n, 1.7, -1.9) < 1e-10, "{n}");
        }
    }

    #[test]
    fn expectation_two_ways() {
        let xg = GridSpec::symmetric(10.0, 256).unwrap();
        let pg = PhaseGrid::square(7.0, 128).unwrap();
        let tr = integrate_trajectory(&DriveSpec::free(), &[0.0, 1.0], DEFAULT_TOL).unwrap();
        let weyl = SymmetrizationScheme::weyl();
        let sym = Symbol::harmonic_energy();
        let op = crate::schemes::quantize_symbol(&sym, &weyl, &xg).unwrap();
        for n in [0, 2] {
            let rho = density_matrix(&tr, n, 1, &xg).unwrap();
            let w = full_wigner(&rho, &weyl, &pg).unwrap();
            let (a, b) = expectation(&op, &rho, &sym, &w).unwrap();
            assert!((a - (n as f64 + 0.5)).abs() < 1e-8, "{a}");
            assert!((b - (n as f64 + 0.5)).abs() < 1e-8, "{b}");
        }
    }
}
