//! Adaptive Dormand–Prince 5(4) integrator for small dense ODE systems.

use crate::error::{Error, Result};

/// Error control settings. The defaults match the accuracy used to verify
/// synthesized inputs.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th order weights are the last row of A; difference to the embedded 4th order:
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1`, returning `y(t1)`.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, y0: &[f64], tol: Tolerance) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    if t1 == t0 {
        return Ok(y);
    }
    let span = t1 - t0;
    let dir = span.signum();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut incr = vec![0.0; dim];
    // running compensation for the rounding lost in y += incr
    let mut comp = vec![0.0; dim];

    f(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], span.abs(), tol) * dir;
    let mut steps = 0usize;

    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::Numerical(format!(
                "ODE integration exceeded {} steps",
                tol.max_steps
            )));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            let (_, rest) = k.split_at_mut(s);
            f(t + C[s] * h, &stage, &mut rest[0]);
            if s == 6 {
                for i in 0..dim {
                    incr[i] = h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>();
                }
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err = 0.0f64;
        for i in 0..dim {
            let e: f64 = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::Numerical("ODE integration produced non-finite values".into()));
        }
        if err <= 1.0 {
            t += h;
            if (t1 - t) * dir <= 0.0 {
                t = t1;
            }
            for i in 0..dim {
                let d = incr[i] + comp[i];
                let sum = y[i] + d;
                comp[i] = d - (sum - y[i]);
                y[i] = sum;
            }
            // first-same-as-last
            let (first, rest) = k.split_at_mut(6);
            first[0].copy_from_slice(&rest[0]);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < 1e-14 * span.abs() {
            return Err(Error::Numerical("ODE step size underflow".into()));
        }
    }
    Ok(y)
}

fn initial_step(y: &[f64], dy: &[f64], span: f64, tol: Tolerance) -> f64 {
    let sc = |v: f64| tol.atol + tol.rtol * v.abs();
    let d0 = y.iter().map(|v| (v / sc(*v)).powi(2)).sum::<f64>().sqrt();
    let d1 = dy.iter().zip(y).map(|(d, v)| (d / sc(*v)).powi(2)).sum::<f64>().sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(span * 1e-10)
}
