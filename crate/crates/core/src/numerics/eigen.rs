use std::cmp::Ordering;

use super::{ensure_finite, ensure_square, real_schur, Complex, Matrix, Vector};
use crate::error::Result;

/// Eigenvalues of a square matrix, with orthonormal eigenvectors when the
/// input was symmetric.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex>,
    pub eigenvectors: Option<Matrix>,
}

impl Spectrum {
    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vector,
    /// Column `i` pairs with `values[i]`.
    pub vectors: Matrix,
}

fn is_exactly_symmetric(m: &Matrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

/// Symmetric eigensolver. Only the lower triangle of `m` is read.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
    });
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymmetricEigen { values, vectors })
}

/// All eigenvalues of `m`, sorted by descending real part then descending
/// imaginary part. Exactly symmetric inputs also get eigenvectors.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    if is_exactly_symmetric(m) {
        let se = symmetric_eigen(m)?;
        return Ok(Spectrum {
            eigenvalues: se.values.iter().map(|&v| Complex::new(v, 0.0)).collect(),
            eigenvectors: Some(se.vectors),
        });
    }
    let mut ev = real_schur(m)?.eigenvalues();
    ev.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
    });
    Ok(Spectrum {
        eigenvalues: ev,
        eigenvectors: None,
    })
}

/// Largest real part over the spectrum of `m`.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.max_real_part())
}

/// True iff every eigenvalue has real part strictly below `-margin`.
pub fn is_hurwitz(m: &Matrix, margin: f64) -> Result<bool> {
    Ok(spectral_abscissa(m)? < -margin)
}
