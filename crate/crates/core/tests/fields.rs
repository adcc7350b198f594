use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use qtomo_core::oscillator::{density_matrix, integrate_trajectory, DensityMatrix, DriveSpec, DEFAULT_TOL};
use qtomo_core::phasespace::{
    expectation, fourier_image, full_wigner, max_abs_diff, partial_wigner, WignerField,
};
use qtomo_core::schemes::{quantize_symbol, Symbol, SymmetrizationScheme};
use qtomo_core::tomography::{radon_tomogram, uniform_angles};
use qtomo_core::{GridSpec, PhaseGrid};

fn x_grid() -> GridSpec {
    GridSpec::symmetric(10.0, 256).unwrap()
}

fn state(drive: &DriveSpec, n: usize, t: f64) -> DensityMatrix {
    let traj = integrate_trajectory(drive, &[0.0, t], DEFAULT_TOL).unwrap();
    density_matrix(&traj, n, 1, &x_grid()).unwrap()
}

fn driven() -> DriveSpec {
    DriveSpec::parse("1 + 0.1*sin(t)", "0.5*cos(0.9*t)").unwrap()
}

fn schemes() -> [SymmetrizationScheme; 3] {
    [
        SymmetrizationScheme::weyl(),
        SymmetrizationScheme::jordan(),
        SymmetrizationScheme::born_jordan(),
    ]
}

#[test]
fn conjugate_theta_pairs() {
    let grid = PhaseGrid::square(8.0, 64).unwrap();
    let rho = state(&driven(), 2, 3.0);
    for theta in [0.0, 0.2, 0.5] {
        let a = partial_wigner(&rho, theta, &grid).unwrap();
        let b = partial_wigner(&rho, 1.0 - theta, &grid).unwrap();
        assert!(a.max_abs_diff(&b.conj()).unwrap() < 1e-9);
    }
}

#[test]
fn averaging_commutes_with_fourier_image() {
    let grid = PhaseGrid::square(8.0, 64).unwrap();
    let rho = state(&driven(), 1, 2.0);
    let bj = SymmetrizationScheme::born_jordan();
    let full = fourier_image(&full_wigner(&rho, &bj, &grid).unwrap());
    let mut sum = ndarray::Array2::<C64>::zeros(full.values.dim());
    for (th, w) in bj.nodes() {
        let l = fourier_image(&partial_wigner(&rho, th, &grid).unwrap());
        sum.scaled_add(C64::new(w, 0.0), &l.values);
    }
    assert!(max_abs_diff(&full.values, &sum) < 1e-10);
}

#[test]
fn expectations_both_routes() {
    let grid = PhaseGrid::square(8.0, 128).unwrap();
    let x = x_grid();
    let free = DriveSpec::free();
    let energy = Symbol::harmonic_energy();
    for scheme in schemes() {
        let op = quantize_symbol(&energy, &scheme, &x).unwrap();
        for n in [0, 1, 3] {
            let rho = state(&free, n, 1.0);
            let w = full_wigner(&rho, &scheme, &grid).unwrap();
            let (tr, ph) = expectation(&op, &rho, &energy, &w).unwrap();
            let want = n as f64 + 0.5;
            assert!((tr - want).abs() < 1e-6 && (ph - want).abs() < 1e-6, "{tr} {ph}");
        }
    }
    // ⟨q⟩ of the driven ground state against direct quadrature of x|ψ|²
    let rho = state(&driven(), 0, 4.0);
    let q = Symbol::monomial(&[0.0, 1.0], 0);
    let w = full_wigner(&rho, &SymmetrizationScheme::jordan(), &grid).unwrap();
    let (tr, ph) = expectation(&quantize_symbol(&q, &SymmetrizationScheme::jordan(), &x).unwrap(), &rho, &q, &w).unwrap();
    let direct: f64 = x
        .points()
        .iter()
        .enumerate()
        .map(|(i, xi)| xi * rho.entries[[i, i]].re)
        .sum::<f64>()
        * x.spacing();
    assert!((tr - direct).abs() < 1e-6 && (ph - direct).abs() < 1e-6);
    let one = Symbol::monomial(&[1.0], 0);
    let (tr, ph) = expectation(&quantize_symbol(&one, &SymmetrizationScheme::weyl(), &x).unwrap(), &rho, &one, &w).unwrap();
    assert!((tr - 1.0).abs() < 1e-10 && (ph - 1.0).abs() < 1e-10);
}

#[test]
fn tomogram_reality_and_positivity_audit() {
    let grid = PhaseGrid::square(10.0, 128).unwrap();
    let xi = GridSpec::symmetric(12.0, 256).unwrap();
    let angles = uniform_angles(128);
    for (n, t) in [(0usize, 0.0), (1, 2.5), (3, 5.0)] {
        let rho = if t > 0.0 { state(&driven(), n, t) } else { state(&DriveSpec::free(), n, 1.0) };
        for scheme in schemes() {
            let f = radon_tomogram(&full_wigner(&rho, &scheme, &grid).unwrap(), &xi, &angles).unwrap();
            assert!(f.max_imag() < 1e-8, "{} imag {}", scheme.label, f.max_imag());
            if scheme.label == "weyl" {
                assert!(f.min_real() >= -1e-8, "n={n}: {}", f.min_real());
            } else if f.min_real() < -1e-6 {
                // positivity is claimed for every hermitian scheme but fails
                // here; e.g. jordan n=0 at α = π/4 has F = cos(s²/4)e^{−s²/4},
                // whose transform changes sign. Logged, not asserted.
                eprintln!("audit: {} n={n} t={t} min f = {:e}", scheme.label, f.min_real());
            }
        }
    }
}

/// Brute-force Radon integral with the delta replaced by a Gaussian of
/// width σ; the error against the spectral tomogram must fall like σ².
#[test]
fn mollified_radon_oracle() {
    let grid = PhaseGrid::square(6.0, 128).unwrap();
    let rho = state(&driven(), 1, 1.5);
    let w: WignerField = partial_wigner(&rho, 0.3, &grid).unwrap();
    let xi = GridSpec::symmetric(8.0, 256).unwrap();
    let angles = [0.0, 0.7, 2.0];
    let f = radon_tomogram(&w, &xi, &angles).unwrap();
    let brute = |sigma: f64| {
        let mut worst: f64 = 0.0;
        for (i, a) in angles.iter().enumerate() {
            for j in (96..160).step_by(8) {
                let x = xi.point(j);
                let mut acc = C64::new(0.0, 0.0);
                for ((qi, pj), v) in w.values.indexed_iter() {
                    let d = x - grid.q.point(qi) * a.cos() - grid.p.point(pj) * a.sin();
                    acc += v * (-d * d / (2.0 * sigma * sigma)).exp();
                }
                let val = acc * grid.cell_area() / (sigma * (2.0 * PI).sqrt());
                worst = worst.max((val - f.values[[i, j]]).norm());
            }
        }
        worst
    };
    let s = 2.0 * xi.spacing();
    let (e1, e2) = (brute(s), brute(s / 2.0));
    assert!(e1 < 5e-2, "{e1}");
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}
