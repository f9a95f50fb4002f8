//! Controllability and observability Gramians.
//!
//! Infinite-horizon Gramians solve `A·W + W·Aᵀ + B·Bᵀ = 0` with a Schur-based
//! (Bartels–Stewart) solver. Finite-horizon Gramians come from the block
//! exponential of `[[-A, B·Bᵀ], [0, Aᵀ]]` on a short step, extended to the full
//! horizon by repeated doubling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::schur::{quasi_triangular_blocks, Block};
use crate::numerics::{
    ensure_finite, ensure_square, matrix_exponential, numerical_rank, real_schur, symmetric_eigen, symmetrize, Matrix,
    RealSchur, DEFAULT_STABILITY_MARGIN,
};

/// Integration horizon of a Gramian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Infinite,
    Finite(f64),
}

/// Symmetric positive semidefinite Gramian with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    matrix: Matrix,
    horizon: Horizon,
    source: String,
}

impl Gramian {
    /// Wraps `matrix` after symmetrizing it.
    pub fn new(matrix: Matrix, horizon: Horizon, source: impl Into<String>) -> Self {
        Gramian {
            matrix: symmetrize(&matrix),
            horizon,
            source: source.into(),
        }
    }

    /// Gramian of the empty input set.
    pub fn zero(n: usize, horizon: Horizon) -> Self {
        Gramian {
            matrix: Matrix::zeros(n, n),
            horizon,
            source: "empty".into(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Smallest eigenvalue. Small negative values from round-off are reported
    /// as-is rather than clipped.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let e = symmetric_eigen(&self.matrix)?;
        Ok(e.values.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Numerical rank with singular values below `rel_tol·σ_max` treated as zero.
    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.matrix, rel_tol)
    }

    /// Sum of two Gramians over the same horizon.
    pub fn add(&self, other: &Gramian) -> Result<Gramian> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "cannot add {}-dim and {}-dim Gramians",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Gramian {
            matrix: &self.matrix + &other.matrix,
            horizon: self.horizon,
            source: format!("{}+{}", self.source, other.source),
        })
    }
}

/// Reusable Lyapunov solver for a fixed Hurwitz `A`.
///
/// The real Schur form of `A` is computed once, so solving for many
/// right-hand sides costs one quasi-triangular back-substitution each.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    n: usize,
    schur: RealSchur,
    // row-major copy of T so that row sweeps are contiguous
    t_rows: Vec<f64>,
    blocks: Vec<Block>,
    spectral_abscissa: f64,
}

impl LyapunovSolver {
    pub fn new(a: &Matrix) -> Result<Self> {
        Self::with_margin(a, DEFAULT_STABILITY_MARGIN)
    }

    /// Factors `a`, failing with [`Error::Stability`] unless every eigenvalue
    /// has real part below `-margin`.
    pub fn with_margin(a: &Matrix, margin: f64) -> Result<Self> {
        ensure_square(a, "A")?;
        ensure_finite(a, "A")?;
        let schur = real_schur(a)?;
        let abscissa = schur
            .eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(abscissa < -margin) {
            return Err(Error::Stability {
                max_real: abscissa,
                margin,
            });
        }
        let n = a.nrows();
        let t_rows = schur.t.transpose().as_slice().to_vec();
        let blocks = quasi_triangular_blocks(&schur.t);
        Ok(LyapunovSolver {
            n,
            schur,
            t_rows,
            blocks,
            spectral_abscissa: abscissa,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.spectral_abscissa
    }

    pub fn schur(&self) -> &RealSchur {
        &self.schur
    }

    /// Solves `A·W + W·Aᵀ + q = 0` for symmetric `q`.
    pub fn solve(&self, q: &Matrix) -> Result<Matrix> {
        if q.nrows() != self.n || q.ncols() != self.n {
            return Err(Error::Dimension(format!(
                "Q is {}x{}, A is {n}x{n}",
                q.nrows(),
                q.ncols(),
                n = self.n
            )));
        }
        ensure_finite(q, "Q")?;
        let asym = (q - q.transpose()).norm();
        if asym > 1e-10 * q.norm() {
            return Err(Error::Domain(format!("Q is not symmetric: ‖Q - Qᵀ‖ = {asym:.3e}")));
        }
        let u = &self.schur.q;
        let c = -(u.transpose() * q * u);
        self.finish(c)
    }

    /// Solves `A·W + W·Aᵀ + b·bᵀ = 0` where `b` has `n` rows and any number of
    /// columns.
    pub fn solve_factored(&self, b: &Matrix) -> Result<Matrix> {
        if b.nrows() != self.n {
            return Err(Error::Dimension(format!(
                "input matrix has {} rows, A is {n}x{n}",
                b.nrows(),
                n = self.n
            )));
        }
        ensure_finite(b, "B")?;
        let ub = self.schur.q.transpose() * b;
        let c = -(&ub * ub.transpose());
        self.finish(c)
    }

    fn finish(&self, c: Matrix) -> Result<Matrix> {
        let mut y = c;
        self.solve_transformed(y.as_mut_slice())?;
        let u = &self.schur.q;
        Ok(symmetrize(&(u * y * u.transpose())))
    }

    // Solves T·Y + Y·Tᵀ = C in place (column-major `c`), T quasi-upper-triangular.
    fn solve_transformed(&self, c: &mut [f64]) -> Result<()> {
        let n = self.n;
        let tr = &self.t_rows;
        let tij = |i: usize, j: usize| tr[i * n + j];

        for jb in self.blocks.iter().rev() {
            let (j0, sj) = (jb.start, jb.size);
            let jend = j0 + sj;
            // C[:, j] -= Σ_{k ≥ jend} T[j, k] · Y[:, k]
            for j in j0..jend {
                for k in jend..n {
                    let f = tij(j, k);
                    if f != 0.0 {
                        let (head, tail) = c.split_at_mut(k * n);
                        let yk = &tail[..n];
                        let cj = &mut head[j * n..(j + 1) * n];
                        for (dst, src) in cj.iter_mut().zip(yk) {
                            *dst -= f * src;
                        }
                    }
                }
            }
            // row blocks, bottom to top
            for ib in self.blocks.iter().rev() {
                let (i0, si) = (ib.start, ib.size);
                let iend = i0 + si;
                let mut rhs = [0.0; 4];
                for jj in 0..sj {
                    let col = &c[(j0 + jj) * n..(j0 + jj + 1) * n];
                    for ii in 0..si {
                        let row = &tr[(i0 + ii) * n..(i0 + ii + 1) * n];
                        let dot: f64 = row[iend..].iter().zip(&col[iend..]).map(|(a, b)| a * b).sum();
                        rhs[ii + si * jj] = col[i0 + ii] - dot;
                    }
                }
                let x = solve_small_sylvester(|r, s| tij(i0 + r, i0 + s), si, |r, s| tij(j0 + r, j0 + s), sj, &rhs)?;
                for jj in 0..sj {
                    for ii in 0..si {
                        c[(j0 + jj) * n + i0 + ii] = x[ii + si * jj];
                    }
                }
            }
        }
        Ok(())
    }
}

// Solves P·X + X·Sᵀ = R for X (p×q, column-major) with p, q ∈ {1, 2}.
fn solve_small_sylvester(
    p_at: impl Fn(usize, usize) -> f64,
    p: usize,
    s_at: impl Fn(usize, usize) -> f64,
    q: usize,
    r: &[f64; 4],
) -> Result<[f64; 4]> {
    let dim = p * q;
    // (I_q ⊗ P + S ⊗ I_p) vec(X) = vec(R)
    let mut m = [[0.0f64; 5]; 4];
    for jj in 0..q {
        for ii in 0..p {
            let row = ii + p * jj;
            for kk in 0..p {
                m[row][kk + p * jj] += p_at(ii, kk);
            }
            for ll in 0..q {
                m[row][ii + p * ll] += s_at(jj, ll);
            }
            m[row][4] = r[row];
        }
    }
    let scale = m
        .iter()
        .take(dim)
        .flat_map(|row| row[..dim].iter())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    for col in 0..dim {
        let piv = (col..dim)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[piv][col].abs() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(
                "Lyapunov operator is singular: eigenvalues of A sum to zero".into(),
            ));
        }
        m.swap(col, piv);
        for row in (col + 1)..dim {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                let pivot_row = m[col];
                for (x, p) in m[row][col..dim].iter_mut().zip(&pivot_row[col..dim]) {
                    *x -= f * p;
                }
                m[row][4] -= f * m[col][4];
            }
        }
    }
    let mut x = [0.0; 4];
    for row in (0..dim).rev() {
        let mut acc = m[row][4];
        for k in (row + 1)..dim {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

/// Solves `a·W + W·aᵀ + q = 0` for Hurwitz `a` and symmetric `q`.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    LyapunovSolver::new(a)?.solve(q)
}

/// `‖A·W + W·Aᵀ + Q‖_F / (‖A‖_F·‖W‖_F + ‖Q‖_F)`
pub fn lyapunov_relative_residual(a: &Matrix, w: &Matrix, q: &Matrix) -> f64 {
    let r = a * w + w * a.transpose() + q;
    let denom = a.norm() * w.norm() + q.norm();
    if denom == 0.0 {
        r.norm()
    } else {
        r.norm() / denom
    }
}

fn describe_inputs(b: &Matrix) -> String {
    format!("B[{}x{}]", b.nrows(), b.ncols())
}

/// Infinite-horizon controllability Gramian `∫₀^∞ e^{Aτ}BBᵀe^{Aᵀτ} dτ`.
pub fn controllability_gramian(a: &Matrix, b: &Matrix) -> Result<Gramian> {
    let solver = LyapunovSolver::new(a)?;
    let w = solver.solve_factored(b)?;
    Ok(Gramian::new(w, Horizon::Infinite, describe_inputs(b)))
}

/// Observability Gramian of `(a, c)`, computed as the controllability Gramian
/// of the dual pair `(aᵀ, cᵀ)`.
pub fn observability_gramian(a: &Matrix, c: &Matrix) -> Result<Gramian> {
    if c.ncols() != a.nrows() {
        return Err(Error::Dimension(format!(
            "C has {} columns, A is {}x{}",
            c.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    controllability_gramian(&a.transpose(), &c.transpose())
}

/// Controllability Gramian over `[0, t]`. `A` need not be stable.
pub fn finite_horizon_gramian(a: &Matrix, b: &Matrix, t: f64) -> Result<Gramian> {
    let (w, _) = finite_horizon_parts(a, b, t)?;
    Ok(Gramian::new(w, Horizon::Finite(t), describe_inputs(b)))
}

// Returns (W(t), e^{At}).
pub(crate) fn finite_horizon_parts(a: &Matrix, b: &Matrix, t: f64) -> Result<(Matrix, Matrix)> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("horizon must be positive and finite, got {t}")));
    }
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows, A is {n}x{n}", b.nrows())));
    }
    let q = b * b.transpose();
    // keep the base step short enough that e^{-Ah} stays well scaled
    let a_norm = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let doublings = if a_norm * t > 1.0 {
        (a_norm * t).log2().ceil() as i32
    } else {
        0
    };
    let h = t / 2f64.powi(doublings);

    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a * h));
    block.view_mut((0, n), (n, n)).copy_from(&(&q * h));
    block.view_mut((n, n), (n, n)).copy_from(&(a.transpose() * h));
    let f = matrix_exponential(&block)?;
    let f12 = f.view((0, n), (n, n)).into_owned();
    let mut e = f.view((n, n), (n, n)).transpose();
    let mut w = symmetrize(&(&e * f12));
    for _ in 0..doublings {
        w = symmetrize(&(&w + &e * &w * e.transpose()));
        e = &e * &e;
    }
    if w.iter().chain(e.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "finite-horizon Gramian overflowed at t = {t}"
        )));
    }
    Ok((w, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{controllability_matrix, Vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(v))
    }

    // (I ⊗ A + A ⊗ I) vec(W) = -vec(Q)
    fn kronecker_oracle(a: &Matrix, q: &Matrix) -> Matrix {
        let n = a.nrows();
        let eye = Matrix::identity(n, n);
        let k = eye.kronecker(a) + a.kronecker(&eye);
        let rhs = -Vector::from_column_slice(q.as_slice());
        let x = k.lu().solve(&rhs).unwrap();
        Matrix::from_column_slice(n, n, x.as_slice())
    }

    fn random_stable(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let s = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let alpha = crate::numerics::spectral_abscissa(&s).unwrap();
        s - Matrix::identity(n, n) * (alpha + 0.3)
    }

    #[test]
    fn scalar_and_diagonal() {
        let w = solve_lyapunov(&diag(&[-1.0]), &diag(&[1.0])).unwrap();
        assert!((w[(0, 0)] - 0.5).abs() < 1e-15);
        let w = solve_lyapunov(&diag(&[-1.0, -2.0]), &Matrix::identity(2, 2)).unwrap();
        assert!((w - diag(&[0.5, 0.25])).norm() < 1e-15);
    }

    #[test]
    fn jordan_block_matches_kronecker_value() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let w = solve_lyapunov(&a, &Matrix::identity(2, 2)).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.5]);
        assert!((w - expect).norm() < 1e-14);
    }

    #[test]
    fn matches_kronecker_oracle_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..5 {
                let a = random_stable(n, &mut rng);
                let b = Matrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
                let q = &b * b.transpose();
                let w = solve_lyapunov(&a, &q).unwrap();
                let oracle = kronecker_oracle(&a, &q);
                assert!((&w - &oracle).norm() <= 1e-10 * oracle.norm().max(1.0));
                assert!(lyapunov_relative_residual(&a, &w, &q) < 1e-13);
            }
        }
    }

    #[test]
    fn unstable_matrix_reports_abscissa() {
        let err = solve_lyapunov(&diag(&[-1.0, 0.5]), &Matrix::identity(2, 2)).unwrap_err();
        match err {
            Error::Stability { max_real, .. } => assert!((max_real - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            solve_lyapunov(&diag(&[0.0]), &diag(&[1.0])),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            solve_lyapunov(&diag(&[-1.0, -2.0]), &Matrix::identity(3, 3)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            controllability_gramian(&diag(&[-1.0, -2.0]), &Matrix::zeros(3, 1)),
            Err(Error::Dimension(_))
        ));
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            solve_lyapunov(&diag(&[-1.0, -2.0]), &asym),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unreachable_state_gives_zero_block() {
        let a = -Matrix::identity(2, 2);
        let b = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let w = controllability_gramian(&a, &b).unwrap();
        assert!((w.matrix() - diag(&[0.5, 0.0])).norm() < 1e-15);
        assert_eq!(w.rank(1e-8), 1);
    }

    #[test]
    fn observability_is_dual() {
        let a = diag(&[-1.0, -2.0]);
        let c = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let m = observability_gramian(&a, &c).unwrap();
        assert!((m.matrix() - diag(&[0.5, 0.0])).norm() < 1e-15);
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 3.0, 0.2, -2.0]);
        let c = Matrix::from_row_slice(1, 2, &[0.3, 1.0]);
        let m = observability_gramian(&a, &c).unwrap();
        let w = controllability_gramian(&a.transpose(), &c.transpose()).unwrap();
        assert_eq!(m.matrix(), w.matrix());
    }

    #[test]
    fn finite_horizon_scalars() {
        let w = finite_horizon_gramian(&diag(&[-1.0]), &diag(&[1.0]), 1.0).unwrap();
        assert!((w.matrix()[(0, 0)] - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-15);
        let w = finite_horizon_gramian(&diag(&[0.0]), &diag(&[1.0]), 3.0).unwrap();
        assert!((w.matrix()[(0, 0)] - 3.0).abs() < 1e-14);
        // unstable scalar: (e^{2t} - 1) / 2
        let w = finite_horizon_gramian(&diag(&[1.0]), &diag(&[1.0]), 2.0).unwrap();
        let expect = ((4f64).exp() - 1.0) / 2.0;
        assert!((w.matrix()[(0, 0)] - expect).abs() < 1e-13 * expect);
        assert!(matches!(
            finite_horizon_gramian(&diag(&[-1.0]), &diag(&[1.0]), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn finite_horizon_converges_to_infinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 4, 7] {
            let a = random_stable(n, &mut rng);
            let b = Matrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
            let inf = controllability_gramian(&a, &b).unwrap();
            let abscissa = crate::numerics::spectral_abscissa(&a).unwrap();
            let t = 50.0 / abscissa.abs();
            let fin = finite_horizon_gramian(&a, &b, t).unwrap();
            let rel = (fin.matrix() - inf.matrix()).norm() / inf.matrix().norm();
            assert!(rel < 1e-8, "n={n} rel={rel}");
        }
    }

    #[test]
    fn additivity_over_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_stable(6, &mut rng);
        let b = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
        let full = controllability_gramian(&a, &b).unwrap();
        let mut sum = Gramian::zero(6, Horizon::Infinite);
        for j in 0..4 {
            let g = controllability_gramian(&a, &b.columns(j, 1).into_owned()).unwrap();
            sum = sum.add(&g).unwrap();
        }
        assert!((full.matrix() - sum.matrix()).norm() <= 1e-9 * full.matrix().norm());
    }

    #[test]
    fn rank_matches_controllability_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..=6 {
            // block-diagonal A with B touching only the first block is uncontrollable
            let mut a = random_stable(n, &mut rng);
            let split = n / 2;
            for i in split..n {
                for j in 0..split {
                    a[(i, j)] = 0.0;
                }
            }
            let a = {
                let alpha = crate::numerics::spectral_abscissa(&a).unwrap();
                if alpha >= -0.1 {
                    a - Matrix::identity(n, n) * (alpha + 0.3)
                } else {
                    a
                }
            };
            let mut b = Matrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
            for i in split..n {
                b[(i, 0)] = 0.0;
            }
            let w = controllability_gramian(&a, &b).unwrap();
            let ctrb = controllability_matrix(&a, &b).unwrap();
            assert_eq!(w.rank(1e-8), numerical_rank(&ctrb, 1e-8), "n={n}");
        }
    }
}
