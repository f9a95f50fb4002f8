use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{spectral_abscissa, Matrix, Vector};
use crate::placement::Candidate;

/// Distance the generated spectrum is pushed left of the imaginary axis.
pub const RANDOM_SYSTEM_MARGIN: f64 = 0.1;

/// Seeded random stable system with unit-norm input columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSystem {
    pub a: Matrix,
    pub columns: Vec<Vector>,
}

impl RandomSystem {
    /// Columns as candidates named `c1, c2, …`.
    pub fn candidates(&self) -> Vec<Candidate> {
        let width = self.columns.len().to_string().len();
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| Candidate::new(format!("c{:0width$}", i + 1), c.clone()))
            .collect()
    }
}

/// `A = S − (α(S) + 0.1)·I` for a seeded sparse Gaussian `S` with the given
/// density of nonzeros, where `α` is the spectral abscissa.
pub fn random_hurwitz_system(n: usize, m: usize, density: f64, seed: u64) -> Result<RandomSystem> {
    if n == 0 || m == 0 {
        return Err(Error::Domain(format!("need n, m >= 1, got n={n} m={m}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Domain(format!("density must be in (0, 1], got {density}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let keep = density >= 1.0 || rng.random_bool(density);
            if keep {
                s[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    let alpha = spectral_abscissa(&s)?;
    let a = s - Matrix::identity(n, n) * (alpha + RANDOM_SYSTEM_MARGIN);
    let columns = (0..m)
        .map(|_| loop {
            let v = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = v.norm();
            if norm > 1e-8 {
                break v / norm;
            }
        })
        .collect();
    Ok(RandomSystem { a, columns })
}
