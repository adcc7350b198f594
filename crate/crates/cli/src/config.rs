//! INI run configuration.
//!
//! ```ini
//! [scheme]
//! name = born_jordan          ; weyl | jordan | born_jordan | point(θ) | custom
//! ; custom only:
//! label = half-jordan
//! atom = [0, 0.25]            ; repeatable
//! atom = [1, 0.25]
//! density = uniform           ; or nodes([[0.3, 0.25], [0.7, 0.25]])
//! density_nodes = 16          ; node count for `uniform`
//!
//! [drive]
//! omega = 1 + 0.1*cos(t)      ; must equal 1 at t = 0
//! phi = 0.5*cos(0.9*t)
//!
//! [grid]
//! half_width = 8              ; or q_min/q_max/p_min/p_max
//! count = 128                 ; or q_count/p_count
//! rho_half_width = 10
//! rho_count = 256
//!
//! [state]
//! level = 0
//! time = 0
//!
//! [evolution]
//! dt = 1e-3
//! t_end = 1
//! method = semi_lagrangian    ; or split_step
//! checkpoint_every = 0
//!
//! [tomogram]
//! xi_half_width = 12
//! xi_count = 256
//! angles = 128
//!
//! [output]
//! dir = out
//! csv = true
//! gnuplot = false
//!
//! [tolerances]
//! ode = 1e-12
//! ```
//!
//! Every section except `[drive]` is optional. A `[manifest]` section is
//! ignored on load, so run manifests can be fed back in.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use ini::Ini;
use qtomo_core::evolution::Method;
use qtomo_core::oscillator::{DriveSpec, DEFAULT_TOL, MAX_LEVEL};
use qtomo_core::schemes::{uniform_nodes, SymmetrizationScheme};
use qtomo_core::{Error, GridSpec, PhaseGrid, Result};

#[derive(Clone, Debug)]
pub struct EvolutionSettings {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub checkpoint_every: usize,
}

#[derive(Clone, Debug)]
pub struct TomogramSettings {
    pub xi: GridSpec,
    pub angles: usize,
}

#[derive(Clone, Debug)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub csv: bool,
    pub gnuplot: bool,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scheme: SymmetrizationScheme,
    pub drive: DriveSpec,
    pub grid: PhaseGrid,
    pub rho_grid: GridSpec,
    pub level: usize,
    pub time: f64,
    pub evolution: EvolutionSettings,
    pub tomogram: TomogramSettings,
    pub output: OutputSettings,
    pub ode_tol: f64,
}

const KNOWN: &[(&str, &[&str])] = &[
    (
        "scheme",
        &["name", "label", "atom", "density", "density_nodes"],
    ),
    ("drive", &["omega", "phi"]),
    (
        "grid",
        &[
            "half_width",
            "count",
            "q_min",
            "q_max",
            "p_min",
            "p_max",
            "q_count",
            "p_count",
            "rho_half_width",
            "rho_count",
        ],
    ),
    ("state", &["level", "time"]),
    ("evolution", &["dt", "t_end", "method", "checkpoint_every"]),
    ("tomogram", &["xi_half_width", "xi_count", "angles"]),
    ("output", &["dir", "csv", "gnuplot"]),
    ("tolerances", &["ode"]),
];

fn cfg_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

/// Flat `section.key → values` view.
struct Table(BTreeMap<String, Vec<String>>);

impl Table {
    fn from_ini(ini: &Ini) -> Result<Self> {
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(cfg_err(k, "key outside any section"));
                }
                continue;
            };
            if sec == "manifest" {
                continue;
            }
            let keys = KNOWN
                .iter()
                .find(|(s, _)| *s == sec)
                .ok_or_else(|| Error::Config(format!("[{sec}]: unknown section")))?
                .1;
            for (k, v) in props.iter() {
                if !keys.contains(&k) {
                    return Err(cfg_err(&format!("{sec}.{k}"), "unknown key"));
                }
                map.entry(format!("{sec}.{k}"))
                    .or_default()
                    .push(v.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).and_then(|v| v.last()).map(|s| s.as_str())
    }

    fn all(&self, key: &str) -> &[String] {
        self.0.get(key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| cfg_err(key, format!("cannot parse `{s}`")))
            })
            .transpose()
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(other) => Err(cfg_err(key, format!("expected a boolean, got `{other}`"))),
        }
    }
}

/// `[a, b]`
fn parse_pair(s: &str) -> Option<(f64, f64)> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let mut it = inner.split(',');
    let a = it.next()?.trim().parse().ok()?;
    let b = it.next()?.trim().parse().ok()?;
    it.next().is_none().then_some((a, b))
}

/// `nodes([[θ, w], ...])`
fn parse_nodes(s: &str) -> Option<Vec<(f64, f64)>> {
    let inner = s.trim().strip_prefix("nodes(")?.strip_suffix(')')?.trim();
    let inner = inner.strip_prefix('[')?.strip_suffix(']')?.trim();
    if inner.is_empty() {
        return Some(vec![]);
    }
    let mut out = Vec::new();
    let mut rest = inner;
    loop {
        let open = rest.find('[')?;
        let close = rest.find(']')?;
        out.push(parse_pair(&rest[open..=close])?);
        rest = rest[close + 1..].trim_start();
        match rest.strip_prefix(',') {
            Some(r) => rest = r,
            None if rest.is_empty() => return Some(out),
            None => return None,
        }
    }
}

fn load_scheme(t: &Table) -> Result<SymmetrizationScheme> {
    let name = t.raw("scheme.name").unwrap_or("weyl");
    if name != "custom" {
        for key in ["scheme.atom", "scheme.density", "scheme.label"] {
            if t.raw(key).is_some() {
                return Err(cfg_err(key, "only allowed with name = custom"));
            }
        }
        return SymmetrizationScheme::builtin(name).map_err(|e| cfg_err("scheme.name", e));
    }
    let atoms = t
        .all("scheme.atom")
        .iter()
        .map(|a| {
            parse_pair(a).ok_or_else(|| {
                cfg_err(
                    "scheme.atom",
                    format!("expected [theta, weight], got `{a}`"),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let atom_mass: f64 = atoms.iter().map(|a| a.1).sum();
    let density = match t.raw("scheme.density") {
        None => vec![],
        Some("uniform") => {
            let n = t.or("scheme.density_nodes", 16usize)?;
            uniform_nodes(1.0 - atom_mass, n)
        }
        Some(other) => parse_nodes(other).ok_or_else(|| {
            cfg_err(
                "scheme.density",
                format!("expected `uniform` or `nodes([[theta, weight], ...])`, got `{other}`"),
            )
        })?,
    };
    let label = t.raw("scheme.label").unwrap_or("custom");
    SymmetrizationScheme::new(label, atoms, density).map_err(|e| cfg_err("scheme", e))
}

fn load_grid(t: &Table) -> Result<(PhaseGrid, GridSpec)> {
    let half = t.or("grid.half_width", 8.0)?;
    let count = t.or("grid.count", 128usize)?;
    let axis = |a: &str| -> Result<GridSpec> {
        let lo = t.or(&format!("grid.{a}_min"), -half)?;
        let hi = t.or(&format!("grid.{a}_max"), half)?;
        let n = t.or(&format!("grid.{a}_count"), count)?;
        GridSpec::new(lo, hi, n).map_err(|e| cfg_err(&format!("grid.{a}"), e))
    };
    let grid = PhaseGrid::new(axis("q")?, axis("p")?);
    let rho = GridSpec::symmetric(
        t.or("grid.rho_half_width", 10.0)?,
        t.or("grid.rho_count", 256usize)?,
    )
    .map_err(|e| cfg_err("grid.rho", e))?;
    Ok((grid, rho))
}

fn required<'a>(t: &'a Table, key: &str) -> Result<&'a str> {
    match t.raw(key) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(cfg_err(key, "required")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| Error::Config(e.to_string()))?;
        let t = Table::from_ini(&ini)?;

        let omega = required(&t, "drive.omega")?;
        let phi = required(&t, "drive.phi")?;
        let drive = DriveSpec::new(
            omega.parse().map_err(|e| cfg_err("drive.omega", e))?,
            phi.parse().map_err(|e| cfg_err("drive.phi", e))?,
        )?;
        drive
            .check_unit_start()
            .map_err(|e| cfg_err("drive.omega", e))?;

        let scheme = load_scheme(&t)?;
        let (grid, rho_grid) = load_grid(&t)?;

        let level = t.or("state.level", 0usize)?;
        if level > MAX_LEVEL {
            return Err(cfg_err("state.level", format!("at most {MAX_LEVEL}")));
        }
        let time = t.or("state.time", 0.0)?;

        let dt = t.or("evolution.dt", 1e-3)?;
        let t_end: f64 = t.or("evolution.t_end", 1.0)?;
        if !(dt > 0.0 && t_end >= dt) {
            return Err(cfg_err("evolution", "need dt > 0 and t_end >= dt"));
        }
        let method: Method = t
            .raw("evolution.method")
            .unwrap_or("semi_lagrangian")
            .parse()
            .map_err(|e| cfg_err("evolution.method", e))?;
        let checkpoint_every = t.or("evolution.checkpoint_every", 0usize)?;
        drive
            .check_window(t_end.max(time))
            .map_err(|e| cfg_err("drive", e))?;

        let xi = GridSpec::symmetric(
            t.or("tomogram.xi_half_width", 12.0)?,
            t.or("tomogram.xi_count", 256usize)?,
        )
        .map_err(|e| cfg_err("tomogram.xi", e))?;
        let angles = t.or("tomogram.angles", 128usize)?;

        let mut dir = PathBuf::from(t.raw("output.dir").unwrap_or("out"));
        if let Ok(env) = std::env::var("QTOMO_OUTPUT_DIR") {
            if !env.is_empty() {
                dir = PathBuf::from(env);
            }
        }
        let ode_tol = t.or("tolerances.ode", DEFAULT_TOL)?;
        if !(ode_tol > 0.0 && ode_tol <= 1e-4) {
            return Err(cfg_err("tolerances.ode", "must lie in (0, 1e-4]"));
        }

        Ok(Self {
            scheme,
            drive,
            grid,
            rho_grid,
            level,
            time,
            evolution: EvolutionSettings {
                dt,
                t_end,
                method,
                checkpoint_every,
            },
            tomogram: TomogramSettings { xi, angles },
            output: OutputSettings {
                dir,
                csv: t.bool_or("output.csv", true)?,
                gnuplot: t.bool_or("output.gnuplot", false)?,
            },
            ode_tol,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fully resolved configuration; parsing it gives back this config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let s_ = &mut s;
        let f = |x: f64| format!("{x:?}");
        let _ = writeln!(s_, "[scheme]\nname = custom\nlabel = {}", self.scheme.label);
        for (th, w) in &self.scheme.atoms {
            let _ = writeln!(s_, "atom = [{}, {}]", f(*th), f(*w));
        }
        if !self.scheme.density_nodes.is_empty() {
            let nodes: Vec<String> = self
                .scheme
                .density_nodes
                .iter()
                .map(|(th, w)| format!("[{}, {}]", f(*th), f(*w)))
                .collect();
            let _ = writeln!(s_, "density = nodes([{}])", nodes.join(", "));
        }
        let _ = writeln!(
            s_,
            "\n[drive]\nomega = {}\nphi = {}",
            self.drive.omega, self.drive.phi
        );
        let g = &self.grid;
        let _ = writeln!(
            s_,
            "\n[grid]\nq_min = {}\nq_max = {}\nq_count = {}\np_min = {}\np_max = {}\np_count = {}\nrho_half_width = {}\nrho_count = {}",
            f(g.q.min), f(g.q.max), g.q.count, f(g.p.min), f(g.p.max), g.p.count,
            f(self.rho_grid.max), self.rho_grid.count
        );
        let _ = writeln!(
            s_,
            "\n[state]\nlevel = {}\ntime = {}",
            self.level,
            f(self.time)
        );
        let e = &self.evolution;
        let _ = writeln!(
            s_,
            "\n[evolution]\ndt = {}\nt_end = {}\nmethod = {}\ncheckpoint_every = {}",
            f(e.dt),
            f(e.t_end),
            e.method,
            e.checkpoint_every
        );
        let _ = writeln!(
            s_,
            "\n[tomogram]\nxi_half_width = {}\nxi_count = {}\nangles = {}",
            f(self.tomogram.xi.max),
            self.tomogram.xi.count,
            self.tomogram.angles
        );
        let _ = writeln!(
            s_,
            "\n[output]\ndir = {}\ncsv = {}\ngnuplot = {}",
            self.output.dir.display(),
            self.output.csv,
            self.output.gnuplot
        );
        let _ = writeln!(s_, "\n[tolerances]\node = {}", f(self.ode_tol));
        s
    }
}
