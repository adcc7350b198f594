//! Symplectic tomograms f(ξ; α) of Wigner fields along the lines
//! ξ = q cos α + p sin α, their characteristic functions, filtered
//! back-projection, and density-matrix reconstruction from Fourier images.
//!
//! Tomograms carry unit mass, ∫f dξ = 1, and F(s; α) = ∫f e^{isξ} dξ =
//! 2πΛ(s cos α, s sin α).

use std::f64::consts::PI;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{lagrange_1d, refined_lambda_sampler, LagrangeSampler, Sign, SpectralAxis};
use crate::grid::{GridSpec, PhaseGrid};
use crate::phasespace::{inverse_fourier_image, FourierImage, Tag, WignerField};

pub const MIN_ANGLES: usize = 64;
const NORMALIZATION_TOL: f64 = 1e-3;
const HERMITICITY_TOL: f64 = 1e-6;
pub(crate) const REFINE: usize = 4;
pub(crate) const STENCIL: usize = 8;

#[derive(Clone, Debug)]
pub struct Tomogram {
    pub xi: GridSpec,
    pub angles: Vec<f64>,
    /// `values[[i, j]] = f(ξ_j; α_i)`
    pub values: Array2<C64>,
    pub tag: Tag,
}

impl Tomogram {
    /// ∫ f dξ per angle.
    pub fn masses(&self) -> Vec<C64> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().fold(C64::new(0.0, 0.0), |s, v| s + v) * self.xi.spacing())
            .collect()
    }

    pub fn max_mass_defect(&self) -> f64 {
        self.masses()
            .iter()
            .fold(0.0, |m, v| m.max((v - 1.0).norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.re))
    }

    /// f(ξ, μ, ν) through homogeneity, f(ξ, λμ̂) = |λ|⁻¹ f(ξ/λ, μ̂). The
    /// direction must be one of the stored angles (mod π).
    pub fn value_at(&self, xi: f64, mu: f64, nu: f64) -> Option<C64> {
        let lambda = mu.hypot(nu);
        if lambda == 0.0 {
            return None;
        }
        let mut alpha = nu.atan2(mu);
        let mut sign = 1.0;
        if alpha < 0.0 {
            alpha += PI;
            sign = -1.0;
        }
        if alpha >= PI - 1e-12 {
            alpha -= PI;
            sign = -sign;
        }
        let i = self.angles.iter().position(|a| (a - alpha).abs() < 1e-9)?;
        let row = self.values.row(i).to_vec();
        Some(lagrange_1d(&self.xi, &row, sign * xi / lambda, STENCIL) / lambda)
    }

    /// F(s; α) on the grid dual to ξ.
    pub fn characteristic(&self) -> CharacteristicFunction {
        let ax = SpectralAxis::new(self.xi);
        let mut values = self.values.clone();
        for mut row in values.rows_mut() {
            let mut buf = row.to_vec();
            ax.forward(&mut buf, Sign::Plus);
            row.assign(&ndarray::Array1::from(buf));
        }
        CharacteristicFunction {
            s: self.xi.dual(),
            angles: self.angles.clone(),
            values,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CharacteristicFunction {
    pub s: GridSpec,
    pub angles: Vec<f64>,
    /// `values[[i, b]] = F(s_b; α_i)`
    pub values: Array2<C64>,
}

impl CharacteristicFunction {
    pub fn max_origin_defect(&self) -> f64 {
        let zero = self.s.index_of(0.0).round() as usize;
        if (self.s.point(zero)).abs() > 1e-12 {
            return f64::NAN;
        }
        self.values
            .column(zero)
            .iter()
            .fold(0.0, |m, v| m.max((v - 1.0).norm()))
    }
}

/// `n` equally spaced directions covering [0, π).
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * i as f64 / n as f64).collect()
}

/// Projection-slice route: F(s; α) = 2πΛ(s cos α, s sin α) sampled from a
/// spectrally refined Fourier image, then transformed back in s.
pub fn radon_tomogram(w: &WignerField, xi: &GridSpec, angles: &[f64]) -> Result<Tomogram> {
    let sampler = refined_lambda_sampler(&w.values, &w.grid, REFINE, STENCIL);
    radon_from_sampler(&sampler, xi, angles, w.tag.clone())
}

pub(crate) fn radon_from_sampler(
    sampler: &LagrangeSampler,
    xi: &GridSpec,
    angles: &[f64],
    tag: Tag,
) -> Result<Tomogram> {
    let s = xi.dual();
    let ax = SpectralAxis::new(*xi);
    let mut values = Array2::<C64>::zeros((angles.len(), xi.count));
    Zip::from(values.axis_iter_mut(Axis(0)))
        .and(angles)
        .par_for_each(|mut row, &alpha| {
            let (c, sn) = (alpha.cos(), alpha.sin());
            let mut buf: Vec<C64> = (0..s.count)
                .map(|b| {
                    let sb = s.point(b);
                    sampler.sample(sb * c, sb * sn) * (2.0 * PI)
                })
                .collect();
            ax.inverse(&mut buf, Sign::Plus);
            row.assign(&ndarray::Array1::from(buf));
        });
    let tomo = Tomogram {
        xi: *xi,
        angles: angles.to_vec(),
        values,
        tag,
    };
    let defect = tomo.max_mass_defect();
    if defect > NORMALIZATION_TOL {
        return Err(Error::InsufficientSupport(format!(
            "tomogram mass differs from 1 by {defect:.3e}"
        )));
    }
    Ok(tomo)
}

/// Band-limited ramp kernel h(nΔ) for filtered back-projection.
fn ramp_kernel(n: i64, d: f64) -> f64 {
    if n == 0 {
        PI / (2.0 * d * d)
    } else if n % 2 == 0 {
        0.0
    } else {
        -2.0 / (PI * (n * n) as f64 * d * d)
    }
}

fn check_angles(angles: &[f64]) -> Result<()> {
    let n = angles.len();
    if n < MIN_ANGLES {
        return Err(Error::AngularUndersampling(format!(
            "{n} angles, need at least {MIN_ANGLES}"
        )));
    }
    let step = PI / n as f64;
    for (i, a) in angles.iter().enumerate() {
        if (a - angles[0] - i as f64 * step).abs() > 1e-9 {
            return Err(Error::AngularUndersampling(
                "angles must be uniform and cover [0, π)".into(),
            ));
        }
    }
    Ok(())
}

/// Filtered back-projection:
/// W(q,p) = (1/2π)(π/N_α) Σ_α (f_α ∗ h)(q cos α + p sin α).
pub fn inverse_radon(f: &Tomogram, grid: &PhaseGrid) -> Result<WignerField> {
    check_angles(&f.angles)?;
    let n = f.xi.count;
    let d = f.xi.spacing();
    // filtered projections on a grid twice as wide, so that the slowly
    // decaying filtered tails are available wherever the phase grid reaches
    let wide = f.xi.widened(2);
    let offset = n / 2;
    let filtered: Vec<Vec<C64>> = f
        .values
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| {
            (0..2 * n)
                .map(|m| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, v) in row.iter().enumerate() {
                        let lag = m as i64 - offset as i64 - j as i64;
                        let h = ramp_kernel(lag, d);
                        if h != 0.0 {
                            acc += v * h;
                        }
                    }
                    acc * d
                })
                .collect()
        })
        .collect();

    let scale = 1.0 / (2.0 * f.angles.len() as f64);
    let trig: Vec<(f64, f64)> = f.angles.iter().map(|a| (a.cos(), a.sin())).collect();
    let mut values = Array2::<C64>::zeros((grid.q.count, grid.p.count));
    Zip::indexed(&mut values).par_for_each(|(i, j), v| {
        let (q, p) = (grid.q.point(i), grid.p.point(j));
        let mut acc = C64::new(0.0, 0.0);
        for (g, &(c, s)) in filtered.iter().zip(&trig) {
            acc += lagrange_1d(&wide, g, q * c + p * s, STENCIL);
        }
        *v = acc * scale;
    });
    Ok(WignerField {
        grid: *grid,
        values,
        tag: f.tag.clone(),
    })
}

/// F(s; α) = 2πΛ(s cos α, s sin α) along rays of a Fourier image.
pub fn characteristic_function(
    l: &FourierImage,
    angles: &[f64],
    s: &GridSpec,
) -> Result<CharacteristicFunction> {
    let reach = s.min.abs().max(s.last().abs());
    for &a in angles {
        let (k, w) = (reach * a.cos().abs(), reach * a.sin().abs());
        let inside = |g: &GridSpec, v: f64| v <= g.last().min(-g.min) + 1e-12;
        if !(inside(&l.dual.q, k) && inside(&l.dual.p, w)) {
            return Err(Error::RayExitsGrid(format!(
                "|s| up to {reach} along α = {a} leaves the (k, ω) grid"
            )));
        }
    }
    let w = inverse_fourier_image(l);
    let sampler = refined_lambda_sampler(&w.values, &w.grid, REFINE, STENCIL);
    let mut values = Array2::<C64>::zeros((angles.len(), s.count));
    Zip::indexed(&mut values).par_for_each(|(i, b), v| {
        let sb = s.point(b);
        *v = sampler.sample(sb * angles[i].cos(), sb * angles[i].sin()) * (2.0 * PI);
    });
    Ok(CharacteristicFunction {
        s: *s,
        angles: angles.to_vec(),
        values,
    })
}

/// ρ̃(k, k′) = ∫ Λ_θ(k′ − k, ω) e^{−iω(θk + (1−θ)k′)} dω on `out`, which
/// must share the spacing and lattice of the image's k axis.
///
/// With ρ̃(k,k′) = (1/2π)∫∫ e^{−ikx + ik′y} ρ(x,y) dx dy this is the
/// momentum-space density matrix; its diagonal integrates to the trace.
pub fn reconstruct_density(l: &FourierImage, theta: f64, out: &GridSpec) -> Result<Array2<C64>> {
    match l.tag {
        Tag::Theta(t) if (t - theta).abs() <= 1e-12 => {}
        _ => {
            return Err(Error::TagMismatch(format!(
                "image tagged {}, reconstruction asked for theta={theta}",
                l.tag
            )))
        }
    }
    let kg = l.dual.q;
    let wg = l.dual.p;
    let dk = kg.spacing();
    let shift = (out.min - kg.min) / dk;
    if (out.spacing() - dk).abs() > 1e-12 * dk || (shift - shift.round()).abs() > 1e-9 {
        return Err(Error::GridMismatch(
            "output grid must lie on the image's k lattice".into(),
        ));
    }
    let nk = kg.count as i64;
    let zero = (kg.count / 2) as i64;
    let omegas = wg.points();
    let dw = wg.spacing();
    let n = out.count;
    let mut rho = Array2::<C64>::zeros((n, n));
    Zip::indexed(&mut rho).par_for_each(|(j, jp), v| {
        let a = zero + jp as i64 - j as i64;
        if a < 0 || a >= nk {
            return;
        }
        let (k, kp) = (out.point(j), out.point(jp));
        let beta = theta * k + (1.0 - theta) * kp;
        let row = l.values.row(a as usize);
        let mut acc = C64::new(0.0, 0.0);
        for (lam, w) in row.iter().zip(&omegas) {
            acc += lam * C64::from_polar(1.0, -w * beta);
        }
        *v = acc * dw;
    });
    let scale = rho.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let defect = hermiticity_defect(&rho) / scale.max(1e-300);
    if defect > HERMITICITY_TOL {
        return Err(Error::BandTooNarrow(defect));
    }
    Ok(rho)
}

/// max |A − A†| (absolute).
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let mut d: f64 = 0.0;
    for ((i, j), v) in a.indexed_iter() {
        d = d.max((v - a[[j, i]].conj()).norm());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::DensityMatrix;
    use crate::phasespace::{
        closed_form_lambda_theta, closed_form_wigner_weyl, fourier_image, partial_wigner,
    };

    fn weyl_level(n: usize, grid: PhaseGrid) -> WignerField {
        WignerField::from_fn(grid, Tag::Theta(0.5), |q, p| {
            C64::new(closed_form_wigner_weyl(n, q, p), 0.0)
        })
    }

    #[test]
    fn gaussian_marginals() {
        let w = weyl_level(0, PhaseGrid::square(8.0, 64).unwrap());
        let xi = GridSpec::symmetric(8.0, 256).unwrap();
        let t = radon_tomogram(&w, &xi, &uniform_angles(16)).unwrap();
        for row in t.values.rows() {
            for (x, v) in xi.points().iter().zip(row) {
                assert!((v.re - (-x * x).exp() / PI.sqrt()).abs() < 1e-9);
                assert!(v.im.abs() < 1e-12);
            }
        }
        assert!(t.max_mass_defect() < 1e-12);
        let v = t.value_at(0.4, -2.0, 0.0).unwrap();
        assert!((v.re - (-0.04f64).exp() / PI.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn insufficient_support() {
        let mut w = weyl_level(0, PhaseGrid::square(8.0, 64).unwrap());
        w.values.mapv_inplace(|v| v * 0.9);
        let xi = GridSpec::symmetric(8.0, 128).unwrap();
        assert!(matches!(
            radon_tomogram(&w, &xi, &[0.0]),
            Err(Error::InsufficientSupport(_))
        ));
    }

    #[test]
    fn back_projection_round_trip() {
        let grid = PhaseGrid::square(6.0, 64).unwrap();
        let w = weyl_level(2, grid);
        let xi = GridSpec::symmetric(8.0, 256).unwrap();
        let t = radon_tomogram(&w, &xi, &uniform_angles(64)).unwrap();
        let back = inverse_radon(&t, &grid).unwrap();
        let err = back.max_abs_diff(&w).unwrap();
        assert!(err < 1e-4, "{err}");
        assert!(matches!(
            inverse_radon(
                &radon_tomogram(&w, &xi, &uniform_angles(32)).unwrap(),
                &grid
            ),
            Err(Error::AngularUndersampling(_))
        ));
    }

    #[test]
    fn characteristic_function_along_rays() {
        let grid = PhaseGrid::square(8.0, 64).unwrap();
        let l = FourierImage::from_fn(grid, Tag::Theta(0.2), |k, w| {
            closed_form_lambda_theta(1, 0.2, k, w)
        });
        let s = GridSpec::symmetric(6.0, 32).unwrap();
        let angles = uniform_angles(8);
        let cf = characteristic_function(&l, &angles, &s).unwrap();
        assert!(cf.max_origin_defect() < 1e-10);
        for (i, a) in angles.iter().enumerate() {
            for b in 0..s.count {
                let sb = s.point(b);
                let want = closed_form_lambda_theta(1, 0.2, sb * a.cos(), sb * a.sin()) * 2.0 * PI;
                assert!(
                    (cf.values[[i, b]] - want).norm() < 1e-8,
                    "{} {}",
                    cf.values[[i, b]],
                    want
                );
            }
        }
        let far = GridSpec::symmetric(60.0, 32).unwrap();
        assert!(matches!(
            characteristic_function(&l, &angles, &far),
            Err(Error::RayExitsGrid(_))
        ));
    }

    #[test]
    fn density_reconstruction() {
        let xg = GridSpec::symmetric(8.0, 128).unwrap();
        let psi: Vec<C64> = xg
            .points()
            .iter()
            .map(|x| {
                C64::from_polar(
                    PI.powf(-0.25) * (-(x - 0.5f64).powi(2) / 2.0).exp(),
                    0.7 * x,
                )
            })
            .collect();
        let rho = DensityMatrix::pure(xg, &psi);
        let pg = PhaseGrid::square(8.0, 64).unwrap();
        let theta = 0.3;
        let l = fourier_image(&partial_wigner(&rho, theta, &pg).unwrap());
        // keep within one period of the ω quadrature (2π/Δω = 16)
        let kg = l.dual.q;
        let out = GridSpec::new(kg.point(16), kg.point(48), 32).unwrap();
        let rt = reconstruct_density(&l, theta, &out).unwrap();
        // direct transform at a few points
        for &(j, jp) in &[(16usize, 16usize), (14, 19), (20, 17)] {
            let (k, kp) = (out.point(j), out.point(jp));
            let mut acc = C64::new(0.0, 0.0);
            for (a, x) in xg.points().iter().enumerate() {
                for (b, y) in xg.points().iter().enumerate() {
                    acc += rho.entries[[a, b]] * C64::from_polar(1.0, -k * x + kp * y);
                }
            }
            let want = acc * xg.spacing().powi(2) / (2.0 * PI);
            assert!((rt[[j, jp]] - want).norm() < 1e-9, "{j} {jp}");
        }
        let trace: C64 = rt.diag().sum() * out.spacing();
        assert!((trace - 1.0).norm() < 1e-9, "{trace}");
        assert!(reconstruct_density(&l, 0.5, &out).is_err());
    }
}
