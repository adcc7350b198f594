use std::time::Instant;

use qtomo_core::evolution::*;
use qtomo_core::oscillator::{integrate_trajectory, DriveSpec, DEFAULT_TOL};
use qtomo_core::phasespace::{
    closed_form_lambda_theta, inverse_fourier_image, lambda_driven_oracle, FourierImage, Tag,
};
use qtomo_core::schemes::SymmetrizationScheme;
use qtomo_core::tomography::{radon_tomogram, uniform_angles};
use qtomo_core::{GridSpec, PhaseGrid};

#[test]
fn sign_sweep_singles_out_one_convention() {
    let start = Instant::now();
    let report = sign_sweep(&AnchorSetup::default()).unwrap();
    for e in &report {
        eprintln!(
            "{} {:.3e} {:.3e} {}",
            e.sign, e.stationarity, e.driven, e.passed
        );
    }
    let passing: Vec<_> = report.iter().filter(|e| e.passed).collect();
    assert_eq!(passing.len(), 1);
    assert_eq!(passing[0].sign, SignConvention::RESOLVED);
    eprintln!("sweep took {:?}", start.elapsed());
}

fn driven() -> DriveSpec {
    DriveSpec::parse("1", "0.5*cos(0.9*t)").unwrap()
}

#[test]
fn driven_tomogram_matches_exact_state() {
    let grid = PhaseGrid::square(8.0, 128).unwrap();
    let rho = GridSpec::symmetric(10.0, 256).unwrap();
    let xi = GridSpec::symmetric(12.0, 256).unwrap();
    let angles = uniform_angles(128);
    let traj = integrate_trajectory(&driven(), &[0.0, 5.0], DEFAULT_TOL).unwrap();
    for theta in [0.0, 0.5, 1.0] {
        let l0 = lambda_driven_oracle(&traj, 0, theta, 0, &rho, &grid).unwrap();
        let l1 = lambda_driven_oracle(&traj, 0, theta, 1, &rho, &grid).unwrap();
        let f0 = radon_tomogram(&inverse_fourier_image(&l0), &xi, &angles).unwrap();
        let want = radon_tomogram(&inverse_fourier_image(&l1), &xi, &angles).unwrap();
        let cfg = EvolutionConfig::for_theta(driven(), theta, 1e-3, 5.0).unwrap();
        let f = evolve_tomogram_theta(&f0, &cfg, theta).unwrap();
        let err = qtomo_core::phasespace::max_abs_diff(&f.values, &want.values);
        eprintln!(
            "theta {theta}: tomogram err {err:e}, mass {:e}",
            f.max_mass_defect()
        );
        assert!(err < 1e-4);
    }
}

#[test]
fn lagrangian_and_split_step_agree() {
    let grid = PhaseGrid::square(8.0, 128).unwrap();
    let drive = DriveSpec::parse("1", "0.3").unwrap();
    for theta in [0.0, 0.25, 0.5] {
        let l0 = FourierImage::from_fn(grid, Tag::Theta(theta), |k, w| {
            closed_form_lambda_theta(0, theta, k, w)
        });
        let cfg = EvolutionConfig::for_theta(drive.clone(), theta, 1e-3, 1.0).unwrap();
        let a = inverse_fourier_image(&evolve_lambda_theta(&l0, &cfg, theta).unwrap());
        let w0 = inverse_fourier_image(&l0);
        let b =
            evolve_wigner_separable(&w0, theta, &DrivenHarmonic(drive.clone()), 1e-3, 1.0).unwrap();
        let err = a.max_abs_diff(&b).unwrap();
        eprintln!("theta {theta}: cross {err:e}");
        assert!(err < 1e-5);
    }
}

#[test]
fn full_equation_residual_converges() {
    let grid = PhaseGrid::square(8.0, 64).unwrap();
    let bj = SymmetrizationScheme::born_jordan();
    let drive = driven();
    let fam0 = FieldFamily::from_scheme(&bj, 0.0, |th| {
        Ok(FourierImage::from_fn(grid, Tag::Theta(th), |k, w| {
            closed_form_lambda_theta(0, th, k, w)
        }))
    })
    .unwrap();
    let mut res = Vec::new();
    for dt in [2e-2f64, 1e-2] {
        let n = (1.0 / dt).round() as usize;
        let cfg =
            EvolutionConfig::for_scheme(drive.clone(), &bj, dt, 1.0 + dt, Method::SemiLagrangian)
                .unwrap();
        let hist = evolve_family_history(&fam0, &cfg, &[n - 1, n, n + 1]).unwrap();
        res.push(residual_full_equation(&hist, &bj, &drive).unwrap());
    }
    let order = (res[0] / res[1]).log2();
    eprintln!("residuals {res:?} order {order}");
    assert!(res[1] < 1e-3 && order > 1.8);
}

#[test]
fn family_pairing_and_mass() {
    let grid = PhaseGrid::square(8.0, 64).unwrap();
    let scheme = SymmetrizationScheme::born_jordan_with(4);
    let fam0 = FieldFamily::from_scheme(&scheme, 0.0, |th| {
        Ok(FourierImage::from_fn(grid, Tag::Theta(th), |k, w| {
            closed_form_lambda_theta(1, th, k, w)
        }))
    })
    .unwrap();
    let cfg =
        EvolutionConfig::for_scheme(driven(), &scheme, 1e-3, 2.0, Method::SemiLagrangian).unwrap();
    let fam = evolve_family(&fam0, &cfg).unwrap();
    eprintln!("pairing {:e}", fam.pairing_defect());
    assert!(fam.pairing_defect() < 1e-10);
    for f in &fam.fields {
        assert!((f.origin() - fam0.fields[0].origin()).norm() < 1e-14);
    }
}
