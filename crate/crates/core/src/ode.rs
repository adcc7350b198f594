//! Dormand–Prince 5(4) with step-size control.
//!
//! Steps are clamped so that every requested output time is hit exactly;
//! no dense-output interpolant is needed and stored samples carry the full
//! order-5 accuracy.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            h_init: 1e-3,
            h_max: 0.1,
            h_min: 1e-14,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrate `y' = f(t, y)` from `t0` through every time in `outputs`
/// (strictly increasing, all `>= t0`), returning the state at each.
pub fn integrate<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    opts: Tolerance,
) -> Result<(Vec<Vec<f64>>, Stats)>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = opts.h_init;
    let mut stats = Stats::default();

    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut out = Vec::with_capacity(outputs.len());

    f(t, &y, &mut k[0]);
    for &target in outputs {
        while target - t > 1e-14 * target.abs().max(1.0) {
            let remaining = target - t;
            let mut step = h.min(opts.h_max);
            let landing = step >= remaining;
            if landing {
                step = remaining;
            }

            for i in 0..n {
                tmp[i] = y[i] + step * A21 * k[0][i];
            }
            f(t + C2 * step, &tmp, &mut k[1]);
            for i in 0..n {
                tmp[i] = y[i] + step * (A31 * k[0][i] + A32 * k[1][i]);
            }
            f(t + C3 * step, &tmp, &mut k[2]);
            for i in 0..n {
                tmp[i] = y[i] + step * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            f(t + C4 * step, &tmp, &mut k[3]);
            for i in 0..n {
                tmp[i] =
                    y[i] + step * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            f(t + C5 * step, &tmp, &mut k[4]);
            for i in 0..n {
                tmp[i] = y[i]
                    + step
                        * (A61 * k[0][i]
                            + A62 * k[1][i]
                            + A63 * k[2][i]
                            + A64 * k[3][i]
                            + A65 * k[4][i]);
            }
            f(t + step, &tmp, &mut k[5]);
            for i in 0..n {
                y5[i] = y[i]
                    + step
                        * (B1 * k[0][i]
                            + B3 * k[2][i]
                            + B4 * k[3][i]
                            + B5 * k[4][i]
                            + B6 * k[5][i]);
            }
            f(t + step, &y5, &mut k[6]);

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let scale = opts.tol * y[i].abs().max(y5[i].abs()).max(1.0);
                err = err.max((e / scale).abs());
            }

            if err <= 1.0 {
                stats.accepted += 1;
                t = if landing { target } else { t + step };
                std::mem::swap(&mut y, &mut y5);
                k.swap(0, 6);
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // don't let a short landing step shrink the working size
                if !landing || step * grow > h {
                    h = step * grow;
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            if h < opts.h_min {
                return Err(Error::StepUnderflow { t });
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}
