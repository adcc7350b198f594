//! Subcommand bodies. Each returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use qtomo_core::evolution::{
    evolve_family_history, synthesize_full, EvolutionConfig, FieldFamily, SignConvention,
};
use qtomo_core::io::{fmt_f64, gnuplot_blocks, QtgArray};
use qtomo_core::oscillator::{
    density_matrix, excited_state, integrate_trajectory, uniform_times, DensityMatrix, Trajectory,
};
use qtomo_core::phasespace::{
    fourier_image, full_wigner, inverse_fourier_image, partial_wigner, WignerField,
};
use qtomo_core::schemes::SymmetrizationScheme;
use qtomo_core::tomography::{radon_tomogram, uniform_angles};
use qtomo_core::Result;

use crate::config::RunConfig;

/// Comma-separated moments σ₀..σ_K, then G(s) lines if asked.
pub fn scheme_report(scheme: &SymmetrizationScheme, moments: usize, g_at: &[f64]) -> String {
    let table = scheme.moments(moments);
    let mut out = table
        .sigma
        .iter()
        .map(|s| format!("{s}"))
        .collect::<Vec<_>>()
        .join(", ");
    out.push('\n');
    for &s in g_at {
        let g = scheme.characteristic_g(s);
        out.push_str(&format!("G({s}) = {} {:+}i\n", g.re, g.im));
    }
    out
}

struct Sink<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    fn qtg(&mut self, name: &str, a: &QtgArray) -> Result<()> {
        let path = self.dir.join(name);
        a.save(&path)?;
        self.written.push(path);
        Ok(())
    }

    fn field(&mut self, cfg: &RunConfig, stem: &str, w: &WignerField) -> Result<()> {
        self.qtg(&format!("{stem}.qtg"), &w.to_qtg())?;
        if cfg.output.csv {
            self.text(&format!("{stem}.csv"), &w.to_csv())?;
        }
        if cfg.output.gnuplot {
            self.text(&format!("{stem}.dat"), &gnuplot_blocks(&w.grid, &w.values))?;
        }
        Ok(())
    }
}

/// Trajectory, ψ_n and ρ at `state.time`.
pub fn states(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut sink = Sink::new(&cfg.output.dir)?;
    let (traj, idx) = trajectory_to(cfg, cfg.time)?;
    sink.text("trajectory.csv", &traj.to_csv())?;
    let x = cfg.rho_grid;
    let psi = excited_state(&traj, cfg.level, idx, &x)?;
    let mut csv = String::from("x,re,im\n");
    for (xi, v) in x.points().iter().zip(&psi) {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(*xi),
            fmt_f64(v.re),
            fmt_f64(v.im)
        ));
    }
    sink.text("psi.csv", &csv)?;
    let rho = density_matrix(&traj, cfg.level, idx, &x)?;
    sink.qtg(
        "rho.qtg",
        &QtgArray::from_2d([(x.min, x.max), (x.min, x.max)], &rho.entries),
    )?;
    Ok(sink.written)
}

/// Trajectory sampled on [0, t] and the index of `t` in it.
fn trajectory_to(cfg: &RunConfig, t: f64) -> Result<(Trajectory, usize)> {
    if t > 0.0 {
        let samples = ((t / 0.01).ceil() as usize).max(1) + 1;
        let traj = integrate_trajectory(&cfg.drive, &uniform_times(t, samples), cfg.ode_tol)?;
        let idx = traj.len() - 1;
        Ok((traj, idx))
    } else {
        Ok((
            integrate_trajectory(&cfg.drive, &[0.0, 1.0], cfg.ode_tol)?,
            0,
        ))
    }
}

fn exact_state_density(cfg: &RunConfig, t: f64) -> Result<DensityMatrix> {
    let (traj, idx) = trajectory_to(cfg, t)?;
    density_matrix(&traj, cfg.level, idx, &cfg.rho_grid)
}

/// Scheme Wigner function of the exact state and its Fourier image.
pub fn wigner(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut sink = Sink::new(&cfg.output.dir)?;
    let rho = exact_state_density(cfg, cfg.time)?;
    let w = full_wigner(&rho, &cfg.scheme, &cfg.grid)?;
    sink.field(cfg, "wigner", &w)?;
    let l = fourier_image(&w);
    sink.qtg("lambda.qtg", &l.to_qtg())?;
    if cfg.output.csv {
        sink.text("lambda.csv", &l.to_csv())?;
    }
    Ok(sink.written)
}

pub fn tomogram(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut sink = Sink::new(&cfg.output.dir)?;
    let rho = exact_state_density(cfg, cfg.time)?;
    let w = full_wigner(&rho, &cfg.scheme, &cfg.grid)?;
    let f = radon_tomogram(&w, &cfg.tomogram.xi, &uniform_angles(cfg.tomogram.angles))?;
    sink.qtg("tomogram.qtg", &f.to_qtg())?;
    if cfg.output.csv {
        sink.text("tomogram.csv", &f.to_csv())?;
        let cf = f.characteristic();
        let mut csv = String::from("alpha,s,re,im\n");
        for ((i, b), v) in cf.values.indexed_iter() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(cf.angles[i]),
                fmt_f64(cf.s.point(b)),
                fmt_f64(v.re),
                fmt_f64(v.im)
            ));
        }
        sink.text("characteristic.csv", &csv)?;
    }
    Ok(sink.written)
}

/// Node family of the exact level-n state at t = 0.
pub fn initial_family(cfg: &RunConfig) -> Result<FieldFamily> {
    let rho = exact_state_density(cfg, 0.0)?;
    FieldFamily::from_scheme(&cfg.scheme, 0.0, |th| {
        Ok(fourier_image(&partial_wigner(&rho, th, &cfg.grid)?))
    })
}

/// Evolve the scheme family from t = 0 to `evolution.t_end`.
pub fn evolve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ecfg = EvolutionConfig::for_scheme(
        cfg.drive.clone(),
        &cfg.scheme,
        cfg.evolution.dt,
        cfg.evolution.t_end,
        cfg.evolution.method,
    )?;
    let (steps, dt_eff) = ecfg.steps();
    let mut at: Vec<usize> = Vec::new();
    if cfg.evolution.checkpoint_every > 0 {
        at.extend((1..steps).filter(|s| s % cfg.evolution.checkpoint_every == 0));
    }
    at.push(steps);
    let family0 = initial_family(cfg)?;
    let history = evolve_family_history(&family0, &ecfg, &at)?;

    let mut sink = Sink::new(&cfg.output.dir)?;
    for (fam, &step) in history.iter().zip(&at) {
        let (full, correction) = synthesize_full(fam, &cfg.scheme, &cfg.drive)?;
        let w = inverse_fourier_image(&full);
        if step == steps {
            sink.field(cfg, "final", &w)?;
            sink.qtg("final_lambda.qtg", &full.to_qtg())?;
            sink.field(cfg, "correction", &correction)?;
        } else {
            sink.qtg(&format!("checkpoint_{step:06}.qtg"), &w.to_qtg())?;
        }
    }
    let manifest = format!(
        "{}\n[manifest]\nversion = {}\nsign_convention = {}\nsteps = {steps}\ndt_effective = {dt_eff:?}\ncheckpoints = {}\nnodes = {}\n",
        cfg.echo(),
        env!("CARGO_PKG_VERSION"),
        SignConvention::RESOLVED,
        at.len() - 1,
        cfg.scheme.nodes().len(),
    );
    sink.text("manifest.ini", &manifest)?;
    Ok(sink.written)
}

/// Byte-level comparison of two output directories.
pub fn same_outputs(a: &Path, b: &Path) -> Result<bool> {
    let list = |d: &Path| -> Result<Vec<String>> {
        let mut v = fs::read_dir(d)?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::io::Result<Vec<_>>>()?;
        v.sort();
        Ok(v)
    };
    let (la, lb) = (list(a)?, list(b)?);
    if la != lb {
        return Ok(false);
    }
    // manifests echo their own output directory
    for name in la.iter().filter(|n| *n != "manifest.ini") {
        if fs::read(a.join(name))? != fs::read(b.join(name))? {
            return Ok(false);
        }
    }
    Ok(true)
}
