//! The acceptance suite: ten criteria, each a list of measured values
//! against pinned tolerances plus a runtime budget.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qtomo_core::evolution::{
    anchor_oracles, evolve_family_history, evolve_lambda_theta, evolve_tomogram_theta,
    evolve_wigner_separable, residual_full_equation, sign_sweep, synthesize_full, AnchorSetup,
    DrivenHarmonic, EvolutionConfig, FieldFamily, Method, SignConvention, ANCHOR_T_DRIVEN,
};
use qtomo_core::oscillator::{
    density_matrix, integrate_trajectory, lowering_operator_residual, uniform_times, DriveSpec,
    DEFAULT_TOL,
};
use qtomo_core::phasespace::{
    closed_form_lambda_scheme, closed_form_lambda_theta, closed_form_wigner_ground,
    closed_form_wigner_jordan_ground, closed_form_wigner_weyl, fourier_image, full_wigner,
    inverse_fourier_image, lambda_driven_oracle, partial_wigner, verify_hermite_identity,
    FourierImage, Tag, WignerField,
};
use qtomo_core::schemes::SymmetrizationScheme;
use qtomo_core::tomography::{
    characteristic_function, hermiticity_defect, inverse_radon, radon_tomogram,
    reconstruct_density, uniform_angles,
};
use qtomo_core::{GridSpec, PhaseGrid, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost,
    AtLeast,
    Exactly,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
}

impl Check {
    fn at_most(label: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            tolerance,
            bound: Bound::AtMost,
        }
    }

    fn at_least(label: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            tolerance,
            bound: Bound::AtLeast,
        }
    }

    fn exactly(label: impl Into<String>, measured: f64, target: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            tolerance: target,
            bound: Bound::Exactly,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.measured <= self.tolerance,
            Bound::AtLeast => self.measured >= self.tolerance,
            Bound::Exactly => self.measured == self.tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
            Bound::Exactly => "==",
        };
        write!(
            f,
            "{} {}: {:.3e} {op} {:.1e}",
            if self.passed() { "ok  " } else { "FAIL" },
            self.label,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    /// Set when the run itself failed.
    pub error: Option<String>,
    pub seconds: f64,
    pub budget: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(Check::passed) && self.seconds <= self.budget
    }

    /// The worst check relative to its tolerance.
    fn headline(&self) -> Option<&Check> {
        let score = |c: &Check| match c.bound {
            Bound::AtMost => c.measured / c.tolerance,
            Bound::AtLeast => c.tolerance / c.measured,
            Bound::Exactly if c.passed() => 0.0,
            Bound::Exactly => f64::INFINITY,
        };
        self.checks.iter().max_by(|a, b| {
            score(a)
                .partial_cmp(&score(b))
                .unwrap_or(std::cmp::Ordering::Greater)
        })
    }

    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let detail = match (&self.error, self.headline()) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => format!(
                "worst {} = {:.3e} (tol {:.1e})",
                c.label, c.measured, c.tolerance
            ),
            (None, None) => "no checks".into(),
        };
        format!(
            "{status} [{:>2}] {}: {detail}; {:.1}s of {:.0}s",
            self.id, self.title, self.seconds, self.budget
        )
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for c in &self.checks {
            writeln!(f, "      {c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    ClosedForms,
    Laguerre,
    Identity,
    Trajectory,
    Evolution,
    CrossMethod,
    Residual,
    Tomography,
    Factorization,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::ClosedForms,
        Suite::Laguerre,
        Suite::Identity,
        Suite::Trajectory,
        Suite::Evolution,
        Suite::CrossMethod,
        Suite::Residual,
        Suite::Tomography,
        Suite::Factorization,
        Suite::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ClosedForms => "closed-forms",
            Suite::Laguerre => "laguerre",
            Suite::Identity => "identity",
            Suite::Trajectory => "trajectory",
            Suite::Evolution => "evolution",
            Suite::CrossMethod => "cross-method",
            Suite::Residual => "residual",
            Suite::Tomography => "tomography",
            Suite::Factorization => "factorization",
            Suite::Determinism => "determinism",
        }
    }

    /// `all` or a suite name.
    pub fn parse_list(s: &str) -> Option<Vec<Suite>> {
        if s == "all" {
            return Some(Self::ALL.to_vec());
        }
        Self::ALL.iter().find(|x| x.name() == s).map(|x| vec![*x])
    }

    fn meta(self) -> (u8, &'static str, f64) {
        match self {
            Suite::ClosedForms => (1, "closed-form Wigner functions", 5.0),
            Suite::Laguerre => (2, "Laguerre forms and Fourier images", 20.0),
            Suite::Identity => (3, "Hermite product identity", 1.0),
            Suite::Trajectory => (4, "oscillator trajectories", 2.0),
            Suite::Evolution => (5, "evolution anchors and sign sweep", 60.0),
            Suite::CrossMethod => (6, "split-step vs characteristics", 60.0),
            Suite::Residual => (7, "full-equation residual", 90.0),
            Suite::Tomography => (8, "tomography", 60.0),
            Suite::Factorization => (9, "theta factorization", 10.0),
            Suite::Determinism => (10, "determinism across thread counts", 120.0),
        }
    }

    pub fn run(self) -> Criterion {
        let (id, title, budget) = self.meta();
        let start = Instant::now();
        let result = match self {
            Suite::ClosedForms => closed_forms(),
            Suite::Laguerre => laguerre_forms(),
            Suite::Identity => hermite_identity(),
            Suite::Trajectory => trajectories(),
            Suite::Evolution => evolution_anchors(),
            Suite::CrossMethod => cross_method(),
            Suite::Residual => full_residual(),
            Suite::Tomography => tomography(),
            Suite::Factorization => factorization(),
            Suite::Determinism => determinism(),
        };
        let seconds = start.elapsed().as_secs_f64();
        let (checks, error) = match result {
            Ok(c) => (c, None),
            Err(e) => (vec![], Some(e.to_string())),
        };
        Criterion {
            id,
            title,
            checks,
            error,
            seconds,
            budget,
        }
    }
}

fn driven() -> DriveSpec {
    DriveSpec::parse("1", "0.5*cos(0.9*t)").unwrap()
}

fn undriven_density(n: usize, x: &GridSpec) -> Result<qtomo_core::oscillator::DensityMatrix> {
    let traj = integrate_trajectory(&DriveSpec::free(), &[0.0, 1.0], DEFAULT_TOL)?;
    density_matrix(&traj, n, 0, x)
}

fn max_diff_with(w: &WignerField, f: impl Fn(f64, f64) -> C64) -> f64 {
    let mut worst: f64 = 0.0;
    for ((i, j), v) in w.values.indexed_iter() {
        worst = worst.max((v - f(w.grid.q.point(i), w.grid.p.point(j))).norm());
    }
    worst
}

fn image_diff_with(l: &FourierImage, f: impl Fn(f64, f64) -> C64) -> f64 {
    let mut worst: f64 = 0.0;
    for ((a, b), v) in l.values.indexed_iter() {
        worst = worst.max((v - f(l.dual.q.point(a), l.dual.p.point(b))).norm());
    }
    worst
}

fn closed_forms() -> Result<Vec<Check>> {
    let grid = PhaseGrid::square(6.0, 256)?;
    let rho = undriven_density(0, &GridSpec::symmetric(10.0, 256)?)?;
    let mut checks = Vec::new();
    for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let w = partial_wigner(&rho, theta, &grid)?;
        let rel = max_diff_with(&w, |q, p| closed_form_wigner_ground(theta, q, p)) / w.max_abs();
        checks.push(Check::at_most(
            format!("ground theta={theta} rel err"),
            rel,
            1e-6,
        ));
    }
    let weyl = full_wigner(&rho, &SymmetrizationScheme::weyl(), &grid)?;
    checks.push(Check::at_most(
        "weyl n=0 vs exp(-q^2-p^2)/pi",
        max_diff_with(&weyl, |q, p| C64::new((-q * q - p * p).exp() / PI, 0.0)),
        1e-8,
    ));
    let jordan = full_wigner(&rho, &SymmetrizationScheme::jordan(), &grid)?;
    checks.push(Check::at_most(
        "jordan ground state",
        max_diff_with(&jordan, |q, p| {
            C64::new(closed_form_wigner_jordan_ground(q, p), 0.0)
        }),
        1e-7,
    ));
    Ok(checks)
}

fn laguerre_forms() -> Result<Vec<Check>> {
    let grid = PhaseGrid::square(8.0, 128)?;
    let x = GridSpec::symmetric(10.0, 256)?;
    let schemes = [
        SymmetrizationScheme::weyl(),
        SymmetrizationScheme::jordan(),
        SymmetrizationScheme::born_jordan(),
    ];
    let (mut wigner_err, mut image_err): (f64, f64) = (0.0, 0.0);
    for n in 0..=5 {
        let rho = undriven_density(n, &x)?;
        let w = full_wigner(&rho, &schemes[0], &grid)?;
        wigner_err = wigner_err.max(max_diff_with(&w, |q, p| {
            C64::new(closed_form_wigner_weyl(n, q, p), 0.0)
        }));
        for s in &schemes {
            let l = fourier_image(&full_wigner(&rho, s, &grid)?);
            image_err = image_err.max(image_diff_with(&l, |k, w| {
                closed_form_lambda_scheme(n, s, k, w)
            }));
        }
        // the point-θ family through the same route
        let theta = 0.2;
        let l = fourier_image(&partial_wigner(&rho, theta, &grid)?);
        image_err = image_err.max(image_diff_with(&l, |k, w| {
            closed_form_lambda_theta(n, theta, k, w)
        }));
    }
    Ok(vec![
        Check::at_most("weyl n<=5 Laguerre form", wigner_err, 1e-6),
        Check::at_most("Fourier images n<=5, builtin schemes", image_err, 1e-6),
    ])
}

fn hermite_identity() -> Result<Vec<Check>> {
    let mut rng = StdRng::seed_from_u64(25);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0));
        for n in 0..=6 {
            worst = worst.max(verify_hermite_identity(n, a, b));
        }
    }
    Ok(vec![Check::at_most("n<=6, 100 random (a,b)", worst, 1e-8)])
}

fn trajectories() -> Result<Vec<Check>> {
    let times = uniform_times(20.0, 2001);
    let modulated = DriveSpec::parse("1 + 0.1*cos(t)", "0")?;
    let traj = integrate_trajectory(&modulated, &times, DEFAULT_TOL)?;
    let free = integrate_trajectory(&DriveSpec::free(), &times, DEFAULT_TOL)?;
    let eps_err = free.times.iter().zip(&free.eps).fold(0.0f64, |m, (t, e)| {
        m.max((e - C64::from_polar(1.0, *t)).norm())
    });
    let d = integrate_trajectory(&driven(), &[0.0, 5.0], DEFAULT_TOL)?;
    let lowering = lowering_operator_residual(&d, 1, &GridSpec::symmetric(10.0, 256)?)?;
    Ok(vec![
        Check::at_most(
            "Wronskian |alpha-1|, Omega=1+0.1cos t",
            traj.max_wronskian_defect(),
            1e-10,
        ),
        Check::at_most("undriven eps = e^{it}", eps_err, 1e-9),
        Check::at_most("lowering-operator residual, driven", lowering, 1e-6),
    ])
}

fn evolution_anchors() -> Result<Vec<Check>> {
    let setup = AnchorSetup::default();
    let sweep = sign_sweep(&setup)?;
    let resolved = sweep
        .iter()
        .find(|e| e.sign == SignConvention::RESOLVED)
        .expect("sweep covers every convention");
    let passing = sweep.iter().filter(|e| e.passed).count();
    let runner_up = sweep
        .iter()
        .filter(|e| e.sign != SignConvention::RESOLVED)
        .map(|e| (e.stationarity / setup.stationarity_tol).max(e.driven / setup.driven_tol))
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::at_most(
            "stationarity n=2, t=2pi",
            resolved.stationarity,
            setup.stationarity_tol,
        ),
        Check::at_most(
            "driven vs exact state, t=5",
            resolved.driven,
            setup.driven_tol,
        ),
        Check::exactly("conventions passing both anchors", passing as f64, 1.0),
        Check::at_least("best rejected convention, error/tol", runner_up, 1.0),
    ])
}

fn cross_method() -> Result<Vec<Check>> {
    let grid = PhaseGrid::square(8.0, 128)?;
    let drive = driven();
    let mut worst: f64 = 0.0;
    for theta in [0.0, 0.25, 0.5, 1.0] {
        let l0 = FourierImage::from_fn(grid, Tag::Theta(theta), |k, w| {
            closed_form_lambda_theta(1, theta, k, w)
        });
        let cfg = EvolutionConfig::for_theta(drive.clone(), theta, 1e-3, 1.0)?;
        let a = inverse_fourier_image(&evolve_lambda_theta(&l0, &cfg, theta)?);
        let b = evolve_wigner_separable(
            &inverse_fourier_image(&l0),
            theta,
            &DrivenHarmonic(drive.clone()),
            1e-3,
            1.0,
        )?;
        worst = worst.max(a.max_abs_diff(&b)?);
    }
    Ok(vec![Check::at_most(
        "max |W_char - W_split| at t=1",
        worst,
        1e-5,
    )])
}

fn residual_family(scheme: &SymmetrizationScheme, grid: PhaseGrid) -> Result<FieldFamily> {
    FieldFamily::from_scheme(scheme, 0.0, |th| {
        Ok(FourierImage::from_fn(grid, Tag::Theta(th), |k, w| {
            closed_form_lambda_theta(1, th, k, w)
        }))
    })
}

fn full_residual() -> Result<Vec<Check>> {
    let grid = PhaseGrid::square(8.0, 128)?;
    let drive = DriveSpec::parse("1 + 0.1*cos(t)", "0.5*cos(0.9*t)")?;
    let t_mid = 1.0;
    let mut checks = Vec::new();
    for scheme in [SymmetrizationScheme::weyl(), SymmetrizationScheme::jordan()] {
        let fam0 = residual_family(&scheme, grid)?;
        let mut res = Vec::new();
        let mut correction_imag = 0.0;
        let mut correction_max = 0.0;
        for dt in [2e-3f64, 1e-3] {
            let n = (t_mid / dt).round() as usize;
            let cfg = EvolutionConfig::for_scheme(
                drive.clone(),
                &scheme,
                dt,
                (n + 1) as f64 * dt,
                Method::SemiLagrangian,
            )?;
            let hist = evolve_family_history(&fam0, &cfg, &[n - 1, n, n + 1])?;
            res.push(residual_full_equation(&hist, &scheme, &drive)?);
            let (_, corr) = synthesize_full(&hist[1], &scheme, &drive)?;
            correction_imag = corr.max_imag();
            correction_max = corr.max_abs();
        }
        let order = (res[0] / res[1]).log2();
        let name = scheme.label.clone();
        checks.push(Check::at_most(
            format!("{name} residual, dt=1e-3"),
            res[1],
            1e-3,
        ));
        checks.push(Check::at_least(
            format!("{name} convergence order"),
            order,
            1.8,
        ));
        if name == "weyl" {
            checks.push(Check::at_most(
                "weyl correction max |.|",
                correction_max,
                0.0,
            ));
        } else {
            checks.push(Check::at_most(
                format!("{name} correction max |Im|"),
                correction_imag,
                1e-9,
            ));
        }
    }
    Ok(checks)
}

fn tomography() -> Result<Vec<Check>> {
    let grid = PhaseGrid::square(8.0, 128)?;
    let x = GridSpec::symmetric(10.0, 256)?;
    let xi = GridSpec::symmetric(12.0, 256)?;
    let angles = uniform_angles(128);
    let mut checks = Vec::new();

    // projection-slice: FT of the Radon projections vs rays through Λ
    let traj = integrate_trajectory(&driven(), &[0.0, 5.0], DEFAULT_TOL)?;
    let rho = density_matrix(&traj, 1, 1, &x)?;
    let w = full_wigner(&rho, &SymmetrizationScheme::born_jordan(), &grid)?;
    let f = radon_tomogram(&w, &xi, &angles)?;
    // central 64 s-samples, inside the (k, ω) grid for every angle
    let sd = xi.dual();
    let lo = sd.count / 2 - 32;
    let band = GridSpec::new(sd.point(lo), sd.point(lo + 64), 64)?;
    let slice = characteristic_function(&fourier_image(&w), &angles, &band)?;
    let cf = f.characteristic();
    let mut ps: f64 = 0.0;
    for i in 0..angles.len() {
        for b in 0..band.count {
            ps = ps.max((cf.values[[i, lo + b]] - slice.values[[i, b]]).norm());
        }
    }
    checks.push(Check::at_most("projection-slice consistency", ps, 1e-6));

    let back = inverse_radon(&f, &grid)?;
    checks.push(Check::at_most(
        "radon / inverse round trip",
        back.max_abs_diff(&w)?,
        1e-4,
    ));

    // normalization drift of an evolved θ-tomogram over 5000 steps
    let theta = 0.25;
    let l0 = lambda_driven_oracle(&traj, 1, theta, 0, &x, &grid)?;
    let f0 = radon_tomogram(&inverse_fourier_image(&l0), &xi, &angles)?;
    let cfg = EvolutionConfig::for_theta(driven(), theta, 1e-3, 5.0)?;
    let f5 = evolve_tomogram_theta(&f0, &cfg, theta)?;
    checks.push(Check::at_most(
        "mass drift after 5000 steps",
        (f5.max_mass_defect() - f0.max_mass_defect())
            .abs()
            .max(f5.max_mass_defect()),
        1e-6,
    ));

    // closed-form characteristic functions of the undriven levels
    let s = GridSpec::symmetric(8.0, 64)?;
    let coarse = uniform_angles(16);
    let (mut theta_err, mut scheme_err): (f64, f64) = (0.0, 0.0);
    for n in [0usize, 1, 3] {
        let rho = undriven_density(n, &x)?;
        for th in [0.0, 0.3, 1.0] {
            let l = fourier_image(&partial_wigner(&rho, th, &grid)?);
            let cf = characteristic_function(&l, &coarse, &s)?;
            for ((i, b), v) in cf.values.indexed_iter() {
                let (k, w) = (s.point(b) * coarse[i].cos(), s.point(b) * coarse[i].sin());
                theta_err =
                    theta_err.max((v - closed_form_lambda_theta(n, th, k, w) * 2.0 * PI).norm());
            }
        }
        for scheme in [
            SymmetrizationScheme::jordan(),
            SymmetrizationScheme::born_jordan(),
        ] {
            let l = fourier_image(&full_wigner(&rho, &scheme, &grid)?);
            let cf = characteristic_function(&l, &coarse, &s)?;
            for ((i, b), v) in cf.values.indexed_iter() {
                let (k, w) = (s.point(b) * coarse[i].cos(), s.point(b) * coarse[i].sin());
                scheme_err = scheme_err
                    .max((v - closed_form_lambda_scheme(n, &scheme, k, w) * 2.0 * PI).norm());
            }
        }
    }
    checks.push(Check::at_most(
        "characteristic fn, point theta",
        theta_err,
        1e-6,
    ));
    checks.push(Check::at_most(
        "characteristic fn, schemes",
        scheme_err,
        1e-6,
    ));

    // density reconstruction from a θ image vs the direct transform of ρ
    let rg = GridSpec::symmetric(8.0, 128)?;
    let small = PhaseGrid::square(8.0, 64)?;
    let rho = density_matrix(&traj, 1, 1, &rg)?;
    let theta = 0.3;
    let l = fourier_image(&partial_wigner(&rho, theta, &small)?);
    let kg = l.dual.q;
    let out = GridSpec::new(kg.point(16), kg.point(48), 32)?;
    let rt = reconstruct_density(&l, theta, &out)?;
    checks.push(Check::at_most(
        "reconstruction hermiticity",
        hermiticity_defect(&rt),
        1e-6,
    ));
    let xs = rg.points();
    let mut oracle: f64 = 0.0;
    for j in (0..out.count).step_by(3) {
        for jp in (0..out.count).step_by(3) {
            let (k, kp) = (out.point(j), out.point(jp));
            let mut acc = C64::new(0.0, 0.0);
            for (a, xa) in xs.iter().enumerate() {
                let ea = C64::from_polar(1.0, -k * xa);
                for (b, yb) in xs.iter().enumerate() {
                    acc += rho.entries[[a, b]] * ea * C64::from_polar(1.0, kp * yb);
                }
            }
            let want = acc * rg.spacing().powi(2) / (2.0 * PI);
            oracle = oracle.max((rt[[j, jp]] - want).norm());
        }
    }
    checks.push(Check::at_most(
        "reconstruction vs direct transform",
        oracle,
        1e-5,
    ));
    Ok(checks)
}

/// max |Λ_θ / Λ_½ − e^{−ikω(θ−½)}| where |Λ_½| > 1e-6.
fn factor_defect(l: &FourierImage, half: &FourierImage, theta: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for ((a, b), v) in l.values.indexed_iter() {
        let h = half.values[[a, b]];
        if h.norm() <= 1e-6 {
            continue;
        }
        let (k, w) = (l.dual.q.point(a), l.dual.p.point(b));
        worst = worst.max((v / h - C64::from_polar(1.0, -k * w * (theta - 0.5))).norm());
    }
    worst
}

fn factorization() -> Result<Vec<Check>> {
    let setup = AnchorSetup::default();
    let oracles = anchor_oracles(&setup, ANCHOR_T_DRIVEN)?;
    let half = &oracles[1];
    let oracle_err =
        factor_defect(&oracles[0], half, 0.0).max(factor_defect(&oracles[2], half, 1.0));

    let grid = setup.grid;
    let evolved = |theta: f64| -> Result<FourierImage> {
        let l0 = FourierImage::from_fn(grid, Tag::Theta(theta), |k, w| {
            closed_form_lambda_theta(0, theta, k, w)
        });
        let cfg = EvolutionConfig::for_theta(driven(), theta, setup.dt, ANCHOR_T_DRIVEN)?;
        evolve_lambda_theta(&l0, &cfg, theta)
    };
    let eh = evolved(0.5)?;
    let mut evolved_err: f64 = 0.0;
    for th in [0.0, 0.25, 1.0] {
        evolved_err = evolved_err.max(factor_defect(&evolved(th)?, &eh, th));
    }
    Ok(vec![
        Check::at_most("exact driven states, t=5", oracle_err, 1e-5),
        Check::at_most("evolved fields, t=5", evolved_err, 1e-5),
    ])
}

/// Same `evolve` config on one and four worker threads.
pub fn determinism() -> Result<Vec<Check>> {
    let root = std::env::temp_dir().join(format!("qtomo-determinism-{}", std::process::id()));
    let text = "[scheme]\nname = born_jordan\n[drive]\nomega = 1 + 0.1*sin(t)\nphi = 0.5*cos(0.9*t)\n\
                [grid]\nhalf_width = 8\ncount = 64\nrho_count = 128\n[state]\nlevel = 1\n\
                [evolution]\ndt = 1e-3\nt_end = 0.5\ncheckpoint_every = 250\n[output]\ncsv = false\n";
    let mut dirs = Vec::new();
    for threads in [1usize, 4] {
        let mut cfg = crate::config::RunConfig::parse(text)?;
        cfg.output.dir = root.join(format!("threads-{threads}"));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| qtomo_core::Error::Config(e.to_string()))?;
        pool.install(|| crate::commands::evolve(&cfg))?;
        dirs.push(cfg.output.dir);
    }
    let same = crate::commands::same_outputs(&dirs[0], &dirs[1])?;
    let _ = std::fs::remove_dir_all(&root);
    Ok(vec![Check::at_most(
        "differing output files (1 vs 4 threads)",
        if same { 0.0 } else { 1.0 },
        0.0,
    )])
}

pub fn run_suites(suites: &[Suite], mut on_done: impl FnMut(&Criterion)) -> Vec<Criterion> {
    suites
        .iter()
        .map(|s| {
            let c = s.run();
            on_done(&c);
            c
        })
        .collect()
}
