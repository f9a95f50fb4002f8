//! Dense linear-algebra primitives: spectra, real Schur form, the matrix
//! exponential and stability tests.

mod eigen;
mod expm;
pub(crate) mod schur;

pub use eigen::{eigenvalues, is_hurwitz, spectral_abscissa, symmetric_eigen, Spectrum, SymmetricEigen};
pub use expm::matrix_exponential;
pub use schur::{real_schur, Block, RealSchur};

use crate::error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;
/// Complex scalar used for eigenvalues of real matrices.
pub type Complex = nalgebra::Complex<f64>;

/// Stability margin used when callers do not supply one.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-9;

/// Builds a matrix from row-major data, rejecting non-finite entries.
pub fn matrix_from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix> {
    if rows * cols != data.len() {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, data);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    match m.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(idx) => {
            let (r, c) = (idx % m.nrows(), idx / m.nrows());
            Err(Error::Domain(format!(
                "{what} has non-finite entry {} at ({r}, {c})",
                m[(r, c)]
            )))
        }
    }
}

pub fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `(m + mᵀ) / 2`
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Numerical rank from singular values, counting those above `rel_tol * σ_max`.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// `[B, AB, A²B, …, Aⁿ⁻¹B]`
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    ensure_square(a, "A")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B has {} rows, A is {n}x{n}", b.nrows())));
    }
    let m = b.ncols();
    let mut out = Matrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        out.columns_mut(i * m, m).copy_from(&block);
        block = a * &block;
    }
    Ok(out)
}
