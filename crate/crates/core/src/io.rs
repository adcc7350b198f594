//! File formats: QTG1 binary grids, CSV, gnuplot data blocks.
//!
//! QTG1 layout (all little-endian): `b"QTG1"`, u32 version, u32 rank,
//! rank × u64 dims, rank × (f64 min, f64 max), then the row-major samples
//! as interleaved (re, im) f64 pairs.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseGrid};
use crate::phasespace::{FourierImage, WignerField};
use crate::tomography::Tomogram;

pub const QTG_MAGIC: &[u8; 4] = b"QTG1";
pub const QTG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct QtgArray {
    /// (min, max) per axis; `max` is the exclusive end of a uniform grid.
    pub axes: Vec<(f64, f64)>,
    pub data: ArrayD<C64>,
}

impl QtgArray {
    pub fn from_2d(axes: [(f64, f64); 2], values: &Array2<C64>) -> Self {
        Self {
            axes: axes.to_vec(),
            data: values.clone().into_dyn(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let rank = self.data.ndim();
        if self.axes.len() != rank {
            return Err(Error::Format(format!(
                "{} axis ranges for rank {rank}",
                self.axes.len()
            )));
        }
        let mut buf = Vec::with_capacity(16 + 24 * rank + 16 * self.data.len());
        buf.extend_from_slice(QTG_MAGIC);
        buf.extend_from_slice(&QTG_VERSION.to_le_bytes());
        buf.extend_from_slice(&(rank as u32).to_le_bytes());
        for &d in self.data.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &(lo, hi) in &self.axes {
            buf.extend_from_slice(&lo.to_le_bytes());
            buf.extend_from_slice(&hi.to_le_bytes());
        }
        // iter() walks in logical (row-major) order whatever the layout
        for v in self.data.iter() {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor {
            bytes: &bytes,
            at: 0,
        };
        if cur.take(4)? != QTG_MAGIC {
            return Err(Error::Format("missing QTG1 magic".into()));
        }
        let version = cur.u32()?;
        if version != QTG_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let rank = cur.u32()? as usize;
        let dims = (0..rank)
            .map(|_| cur.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let axes = (0..rank)
            .map(|_| Ok((cur.f64()?, cur.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Format("dimension overflow".into()))?;
        if bytes.len() - cur.at != 16 * len {
            return Err(Error::Format(format!(
                "expected {} sample bytes, found {}",
                16 * len,
                bytes.len() - cur.at
            )));
        }
        let data = (0..len)
            .map(|_| Ok(C64::new(cur.f64()?, cur.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        let data =
            ArrayD::from_shape_vec(IxDyn(&dims), data).map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { axes, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    /// Two-axis grids rebuilt from the stored ranges.
    pub fn phase_grid(&self) -> Result<PhaseGrid> {
        if self.data.ndim() != 2 {
            return Err(Error::Format(format!("rank {} is not 2", self.data.ndim())));
        }
        let s = self.data.shape();
        Ok(PhaseGrid::new(
            GridSpec::new(self.axes[0].0, self.axes[0].1, s[0])?,
            GridSpec::new(self.axes[1].0, self.axes[1].1, s[1])?,
        ))
    }

    pub fn into_2d(self) -> Result<Array2<C64>> {
        self.data
            .into_dimensionality()
            .map_err(|e| Error::Format(e.to_string()))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.at..self.at + n)
            .ok_or_else(|| Error::Format("truncated file".into()))?;
        self.at += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn axes_of(g: &PhaseGrid) -> [(f64, f64); 2] {
    [(g.q.min, g.q.max), (g.p.min, g.p.max)]
}

impl WignerField {
    pub fn to_qtg(&self) -> QtgArray {
        QtgArray::from_2d(axes_of(&self.grid), &self.values)
    }
}

impl FourierImage {
    pub fn to_qtg(&self) -> QtgArray {
        QtgArray::from_2d(axes_of(&self.dual), &self.values)
    }
}

impl Tomogram {
    /// Axes: angle over [0, π) (as stored), then ξ.
    pub fn to_qtg(&self) -> QtgArray {
        let na = self.angles.len() as f64;
        let step = if self.angles.len() > 1 {
            self.angles[1] - self.angles[0]
        } else {
            std::f64::consts::PI
        };
        let lo = self.angles.first().copied().unwrap_or(0.0);
        QtgArray::from_2d(
            [(lo, lo + na * step), (self.xi.min, self.xi.max)],
            &self.values,
        )
    }
}

/// Lossless decimal: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `header` then one line per sample: x, y, Re, Im.
pub fn grid_csv(header: &str, grid: &PhaseGrid, values: &Array2<C64>) -> String {
    let mut out = String::with_capacity(80 * values.len());
    out.push_str(header);
    out.push('\n');
    for ((i, j), v) in values.indexed_iter() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(grid.q.point(i)),
            fmt_f64(grid.p.point(j)),
            fmt_f64(v.re),
            fmt_f64(v.im)
        );
    }
    out
}

impl WignerField {
    pub fn to_csv(&self) -> String {
        grid_csv("q,p,re,im", &self.grid, &self.values)
    }
}

impl FourierImage {
    pub fn to_csv(&self) -> String {
        grid_csv("k,omega,re,im", &self.dual, &self.values)
    }
}

impl Tomogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,xi,re,im\n");
        for ((i, j), v) in self.values.indexed_iter() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.angles[i]),
                fmt_f64(self.xi.point(j)),
                fmt_f64(v.re),
                fmt_f64(v.im)
            );
        }
        out
    }
}

/// gnuplot `splot` blocks: "x y re im", a blank line after each x.
pub fn gnuplot_blocks(grid: &PhaseGrid, values: &Array2<C64>) -> String {
    let mut out = String::new();
    for (i, row) in values.rows().into_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                fmt_f64(grid.q.point(i)),
                fmt_f64(grid.p.point(j)),
                fmt_f64(v.re),
                fmt_f64(v.im)
            );
        }
        out.push('\n');
    }
    out
}
