//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (degrees 3, 5, 7, 9 or 13 picked from the 1-norm).

use super::{ensure_finite, ensure_square, Matrix};
use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Computes `e^m`.
pub fn matrix_exponential(m: &Matrix) -> Result<Matrix> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    let ident = Matrix::identity(n, n);
    if n == 0 {
        return Ok(ident);
    }
    let norm = norm1(m);

    for &(deg, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(m, coeffs);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::Numerical(format!(
            "matrix exponential overflow: 1-norm {norm:.3e} needs 2^{s} scaling"
        )));
    }
    let scaled = m * 2f64.powi(-s);
    let mut r = pade13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "matrix exponential overflow: 1-norm {norm:.3e} produced non-finite entries"
        )));
    }
    Ok(r)
}

fn solve_pade(u: Matrix, v: Matrix) -> Result<Matrix> {
    let p = &v + &u;
    let q = &v - &u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    // even powers I, A², A⁴, …
    let mut powers = vec![ident.clone()];
    for i in 1..b.len() / 2 {
        let next = &powers[i - 1] * &a2;
        powers.push(next);
    }
    let mut odd = Matrix::zeros(n, n);
    let mut even = Matrix::zeros(n, n);
    for (i, p) in powers.iter().enumerate() {
        odd += p * b[2 * i + 1];
        even += p * b[2 * i];
    }
    let u = a * odd;
    solve_pade(u, even)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * &inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * &inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    solve_pade(u, v)
}
