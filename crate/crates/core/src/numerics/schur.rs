//! Real Schur decomposition by Householder reduction to Hessenberg form
//! followed by implicitly shifted Francis double-shift QR sweeps.

use super::{ensure_finite, ensure_square, Complex, Matrix};
use crate::error::{Error, Result};

/// `m = q · t · qᵀ` with `q` orthogonal and `t` upper quasi-triangular.
///
/// Diagonal blocks of `t` are 1×1 (real eigenvalues) or 2×2 in standard form
/// `[[a, b], [c, a]]` with `b·c < 0` (a complex conjugate pair).
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub q: Matrix,
    pub t: Matrix,
}

/// A diagonal block of a quasi-triangular matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub size: usize,
}

impl RealSchur {
    /// Diagonal block layout of `t`, top to bottom.
    pub fn blocks(&self) -> Vec<Block> {
        quasi_triangular_blocks(&self.t)
    }

    /// Eigenvalues read off the diagonal blocks, in block order.
    pub fn eigenvalues(&self) -> Vec<Complex> {
        let t = &self.t;
        let mut out = Vec::with_capacity(t.nrows());
        for b in self.blocks() {
            let i = b.start;
            if b.size == 1 {
                out.push(Complex::new(t[(i, i)], 0.0));
            } else {
                let (re, im) = block_eigenvalues(t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                out.push(Complex::new(re, im));
                out.push(Complex::new(re, -im));
            }
        }
        out
    }

    /// `q · t · qᵀ`
    pub fn reconstruct(&self) -> Matrix {
        &self.q * &self.t * self.q.transpose()
    }
}

pub(crate) fn quasi_triangular_blocks(t: &Matrix) -> Vec<Block> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push(Block { start: i, size: 2 });
            i += 2;
        } else {
            blocks.push(Block { start: i, size: 1 });
            i += 1;
        }
    }
    blocks
}

// Real and (nonnegative) imaginary part of one eigenvalue of a 2x2 block.
fn block_eigenvalues(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    let mid = 0.5 * (a + d);
    if disc >= 0.0 {
        // not expected for standardized blocks
        (mid + disc.sqrt(), 0.0)
    } else {
        (mid, (-disc).sqrt())
    }
}

/// Computes the real Schur form of a square matrix.
pub fn real_schur(m: &Matrix) -> Result<RealSchur> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    let mut t = m.clone();
    let mut q = Matrix::identity(n, n);
    if n <= 1 {
        return Ok(RealSchur { q, t });
    }
    hessenberg_reduce(&mut t, &mut q);
    francis_qr(&mut t, &mut q)?;
    for j in 0..n {
        for i in (j + 2)..n {
            t[(i, j)] = 0.0;
        }
    }
    Ok(RealSchur { q, t })
}

// Elementary reflector `I - tau·v·vᵀ` with v[0] = 1 mapping (alpha, x) to (beta, 0).
// Returns (tau, beta, v[1..]).
fn reflector(alpha: f64, x: &mut [f64]) -> (f64, f64) {
    let xnorm = x.iter().fold(0.0_f64, |acc, v| acc.hypot(*v));
    if xnorm == 0.0 {
        return (0.0, alpha);
    }
    let beta = -alpha.signum() * alpha.hypot(xnorm);
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    x.iter_mut().for_each(|v| *v *= scale);
    (tau, beta)
}

fn hessenberg_reduce(h: &mut Matrix, q: &mut Matrix) {
    let n = h.nrows();
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        for i in 1..len {
            v[i] = h[(k + 1 + i, k)];
        }
        let (tau, beta) = reflector(h[(k + 1, k)], &mut v[1..len]);
        if tau == 0.0 {
            continue;
        }
        v[0] = 1.0;
        let v = &v[..len];
        h[(k + 1, k)] = beta;
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
        // left: rows k+1.., columns k+1..
        for j in (k + 1)..n {
            let s: f64 = (0..len).map(|i| v[i] * h[(k + 1 + i, j)]).sum::<f64>() * tau;
            for i in 0..len {
                h[(k + 1 + i, j)] -= s * v[i];
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let s: f64 = (0..len).map(|j| h[(i, k + 1 + j)] * v[j]).sum::<f64>() * tau;
            for j in 0..len {
                h[(i, k + 1 + j)] -= s * v[j];
            }
        }
        for i in 0..n {
            let s: f64 = (0..len).map(|j| q[(i, k + 1 + j)] * v[j]).sum::<f64>() * tau;
            for j in 0..len {
                q[(i, k + 1 + j)] -= s * v[j];
            }
        }
    }
}

fn francis_qr(h: &mut Matrix, q: &mut Matrix) -> Result<()> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let max_sweeps = 40 * n.max(10);
    let hnorm = h.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if hnorm == 0.0 {
        return Ok(());
    }
    let small = f64::MIN_POSITIVE * (n as f64 / eps);
    // Defective clusters can leave subdiagonals at round-off level above the
    // local threshold indefinitely; once stalled, accept the normwise
    // n·ε·‖H‖ bound that the algorithm's backward error carries anyway.
    let global = n as f64 * eps * h.norm();

    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    loop {
        // locate the top of the unreduced window ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let mut scale = h[(lo - 1, lo - 1)].abs() + h[(lo, lo)].abs();
            if scale == 0.0 {
                scale = hnorm;
            }
            let sub = h[(lo, lo - 1)].abs();
            if sub <= small || sub <= eps * scale || (since_deflation > 30 && sub <= global) {
                h[(lo, lo - 1)] = 0.0;
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            since_deflation = 0;
            if hi == 0 {
                break;
            }
            hi -= 1;
            continue;
        }
        if lo + 1 == hi {
            standardize_block(h, q, lo);
            since_deflation = 0;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            if hi == 0 {
                break;
            }
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(Error::Numerical(format!(
                "real Schur QR iteration did not converge after {max_sweeps} sweeps"
            )));
        }

        let (h11, h12, h21, h22) = if since_deflation % 20 == 10 {
            let s = h[(lo + 1, lo)].abs() + h[(lo + 2, lo + 1)].abs();
            let d = 0.75 * s + h[(lo, lo)];
            (d, -0.4375 * s, s, d)
        } else if since_deflation.is_multiple_of(20) {
            let s = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
            let d = 0.75 * s + h[(hi, hi)];
            (d, -0.4375 * s, s, d)
        } else {
            (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        let tr = h11 + h22;
        let det = h11 * h22 - h12 * h21;

        let mut x = h[(lo, lo)] * h[(lo, lo)] + h[(lo, lo + 1)] * h[(lo + 1, lo)] - tr * h[(lo, lo)] + det;
        let mut y = h[(lo + 1, lo)] * (h[(lo, lo)] + h[(lo + 1, lo + 1)] - tr);
        let mut z = h[(lo + 1, lo)] * h[(lo + 2, lo + 1)];

        for k in lo..hi {
            let nr = (hi - k + 1).min(3);
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
                z = if nr == 3 { h[(k + 2, k - 1)] } else { 0.0 };
            }
            let mut tail = [y, z];
            let tail = &mut tail[..nr - 1];
            let (tau, beta) = reflector(x, tail);
            if tau == 0.0 {
                continue;
            }
            let v1 = tail[0];
            let v2 = if nr == 3 { tail[1] } else { 0.0 };
            if k > lo {
                h[(k, k - 1)] = beta;
                h[(k + 1, k - 1)] = 0.0;
                if nr == 3 {
                    h[(k + 2, k - 1)] = 0.0;
                }
            }
            let jstart = if k > lo { k } else { lo };
            for j in jstart..n {
                let mut s = h[(k, j)] + v1 * h[(k + 1, j)];
                if nr == 3 {
                    s += v2 * h[(k + 2, j)];
                }
                s *= tau;
                h[(k, j)] -= s;
                h[(k + 1, j)] -= s * v1;
                if nr == 3 {
                    h[(k + 2, j)] -= s * v2;
                }
            }
            let iend = (k + 3).min(hi);
            for i in 0..=iend {
                let mut s = h[(i, k)] + v1 * h[(i, k + 1)];
                if nr == 3 {
                    s += v2 * h[(i, k + 2)];
                }
                s *= tau;
                h[(i, k)] -= s;
                h[(i, k + 1)] -= s * v1;
                if nr == 3 {
                    h[(i, k + 2)] -= s * v2;
                }
            }
            for i in 0..n {
                let mut s = q[(i, k)] + v1 * q[(i, k + 1)];
                if nr == 3 {
                    s += v2 * q[(i, k + 2)];
                }
                s *= tau;
                q[(i, k)] -= s;
                q[(i, k + 1)] -= s * v1;
                if nr == 3 {
                    q[(i, k + 2)] -= s * v2;
                }
            }
        }
    }
    Ok(())
}

// Reduces the 2x2 block at (l, l) to standard form: upper triangular when its
// eigenvalues are real, otherwise equal diagonal with off-diagonals of opposite sign.
fn standardize_block(h: &mut Matrix, q: &mut Matrix, l: usize) {
    let n = h.nrows();
    let (a, b, c, d, cs, sn) = standard_2x2(h[(l, l)], h[(l, l + 1)], h[(l + 1, l)], h[(l + 1, l + 1)]);
    h[(l, l)] = a;
    h[(l, l + 1)] = b;
    h[(l + 1, l)] = c;
    h[(l + 1, l + 1)] = d;
    if cs == 1.0 && sn == 0.0 {
        return;
    }
    for j in (l + 2)..n {
        let (x, y) = (h[(l, j)], h[(l + 1, j)]);
        h[(l, j)] = cs * x + sn * y;
        h[(l + 1, j)] = cs * y - sn * x;
    }
    for i in 0..l {
        let (x, y) = (h[(i, l)], h[(i, l + 1)]);
        h[(i, l)] = cs * x + sn * y;
        h[(i, l + 1)] = cs * y - sn * x;
    }
    for i in 0..n {
        let (x, y) = (q[(i, l)], q[(i, l + 1)]);
        q[(i, l)] = cs * x + sn * y;
        q[(i, l + 1)] = cs * y - sn * x;
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

// Schur factorization of a real 2x2 matrix (LAPACK dlanv2 convention):
// [[a b][c d]] = [[cs -sn][sn cs]] · [[a' b'][c' d']] · [[cs sn][-sn cs]].
fn standard_2x2(mut a: f64, mut b: f64, mut c: f64, mut d: f64) -> (f64, f64, f64, f64, f64, f64) {
    let eps = f64::EPSILON;
    let (mut cs, mut sn);
    if c == 0.0 {
        cs = 1.0;
        sn = 0.0;
    } else if b == 0.0 {
        cs = 0.0;
        sn = 1.0;
        std::mem::swap(&mut a, &mut d);
        b = -c;
        c = 0.0;
    } else if a - d == 0.0 && b.signum() != c.signum() {
        cs = 1.0;
        sn = 0.0;
    } else {
        let temp = a - d;
        let mut p = 0.5 * temp;
        let bcmax = b.abs().max(c.abs());
        let bcmis = b.abs().min(c.abs()) * b.signum() * c.signum();
        let scale = p.abs().max(bcmax);
        let mut z = p / scale * p + bcmax / scale * bcmis;
        if z >= 4.0 * eps {
            // real eigenvalues
            z = p + sign(scale.sqrt() * z.sqrt(), p);
            a = d + z;
            d -= bcmax / z * bcmis;
            let tau = c.hypot(z);
            cs = z / tau;
            sn = c / tau;
            b -= c;
            c = 0.0;
        } else {
            let sigma = b + c;
            let tau = sigma.hypot(temp);
            cs = (0.5 * (1.0 + sigma.abs() / tau)).sqrt();
            sn = -(p / (tau * cs)) * sign(1.0, sigma);
            let aa = a * cs + b * sn;
            let bb = -a * sn + b * cs;
            let cc = c * cs + d * sn;
            let dd = -c * sn + d * cs;
            a = aa * cs + cc * sn;
            b = bb * cs + dd * sn;
            c = -aa * sn + cc * cs;
            d = -bb * sn + dd * cs;
            let mid = 0.5 * (a + d);
            a = mid;
            d = mid;
            if c != 0.0 {
                if b != 0.0 {
                    if b.signum() == c.signum() {
                        let sab = b.abs().sqrt();
                        let sac = c.abs().sqrt();
                        p = sign(sab * sac, c);
                        let tau = 1.0 / (b + c).abs().sqrt();
                        a = mid + p;
                        d = mid - p;
                        b -= c;
                        c = 0.0;
                        let cs1 = sab * tau;
                        let sn1 = sac * tau;
                        let t = cs * cs1 - sn * sn1;
                        sn = cs * sn1 + sn * cs1;
                        cs = t;
                    }
                } else {
                    b = -c;
                    c = 0.0;
                    let t = cs;
                    cs = -sn;
                    sn = t;
                }
            }
        }
    }
    (a, b, c, d, cs, sn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::symmetrize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn check(m: &Matrix) -> RealSchur {
        let s = real_schur(m).unwrap();
        let n = m.nrows();
        let recon = (s.reconstruct() - m).norm();
        assert!(
            recon <= 1e-12 * m.norm().max(1.0) * (n as f64).max(1.0),
            "reconstruction {recon}"
        );
        let orth = (s.q.transpose() * &s.q - Matrix::identity(n, n)).norm();
        assert!(orth <= 1e-12 * n as f64, "orthogonality {orth}");
        for j in 0..n {
            for i in (j + 2)..n {
                assert_eq!(s.t[(i, j)], 0.0);
            }
        }
        for b in s.blocks() {
            if b.size == 2 {
                let i = b.start;
                assert!(s.t[(i, i + 1)] * s.t[(i + 1, i)] < 0.0, "non-standard 2x2 block");
            }
        }
        s
    }

    #[test]
    fn upper_triangular_is_fixed_point() {
        let m = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 0.0, 0.0, 6.0]);
        let s = check(&m);
        assert_eq!(s.q, Matrix::identity(3, 3));
        assert_eq!(s.t, m);
    }

    #[test]
    fn symmetric_input_gives_diagonal_t() {
        let r = random_matrix(7, 3);
        let m = symmetrize(&r);
        let s = check(&m);
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    assert!(s.t[(i, j)].abs() < 1e-12, "t[{i},{j}] = {}", s.t[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..40 {
            for n in [2, 3, 5, 6, 11, 30] {
                let m = random_matrix(n, seed * 100 + n as u64);
                let s = check(&m);
                let recon = (s.reconstruct() - &m).norm();
                assert!(recon <= 1e-10 * m.norm().max(1.0));
            }
        }
    }

    #[test]
    fn rotation_generator_has_one_complex_block() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = check(&m);
        let ev = s.eigenvalues();
        assert!((ev[0].im.abs() - 1.0).abs() < 1e-15 && ev[0].re.abs() < 1e-15);
        assert_eq!(s.blocks().len(), 1);
    }

    #[test]
    fn two_by_two_with_real_eigenvalues_is_split() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let s = check(&m);
        assert_eq!(s.t[(1, 0)], 0.0);
        let mut ev: Vec<f64> = s.eigenvalues().iter().map(|c| c.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r = 33f64.sqrt();
        assert!((ev[0] - (5.0 - r) / 2.0).abs() < 1e-14);
        assert!((ev[1] - (5.0 + r) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_complex_pairs_converge() {
        // cycle graph rotation structure yields many equal-modulus eigenvalues
        let n = 40;
        let m = Matrix::from_fn(n, n, |i, j| if (i + 1) % n == j { 1.0 } else { 0.0 });
        check(&m);
        let z = Matrix::zeros(5, 5);
        let s = check(&z);
        assert_eq!(s.t, z);
    }

    #[test]
    fn defective_cluster_deflates() {
        // sparse matrix whose shifted nilpotent part leaves a 5-fold
        // defective eigenvalue; subdiagonals stall just above round-off
        for (n, density, seed) in [
            (14, 0.14877959114370745, 2176249310553169697),
            (21, 0.10594210039746743, 5890008129710576747),
        ] {
            check(&crate::models::random_hurwitz_system(n, 1, density, seed).unwrap().a);
        }
        for size in [3, 4, 6] {
            let mut j = Matrix::identity(size, size) * -0.5;
            for i in 0..size - 1 {
                j[(i, i + 1)] = 1.0;
            }
            let q = crate::numerics::symmetric_eigen(&symmetrize(&random_matrix(size, 5)))
                .unwrap()
                .vectors;
            check(&(&q * j * q.transpose()));
        }
    }
}
