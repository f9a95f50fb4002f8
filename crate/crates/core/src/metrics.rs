//! Scalar functionals of Gramians and minimum-energy quantities.

use crate::error::{Error, Result};
use crate::gramian::Gramian;
use crate::numerics::{symmetric_eigen, Matrix, SymmetricEigen, Vector};

/// Eigenvalues below this fraction of the largest one are treated as zero.
pub const SINGULAR_REL_TOL: f64 = 1e-12;

/// The kinds of metric that are linear in the Gramian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Trace,
    WeightedTrace,
    H2,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Trace => "trace",
            MetricKind::WeightedTrace => "weighted_trace",
            MetricKind::H2 => "h2",
        }
    }
}

/// Linear Gramian metric.
///
/// `WeightedTrace(C̄)` evaluates `tr(C̄·W)` for any square `C̄`; with an
/// indefinite `C̄` the value may be negative but remains linear in `W`.
/// `H2(C)` evaluates `tr(C·W·Cᵀ)`, the squared H2 norm of `(A, B, C)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Trace,
    WeightedTrace(Matrix),
    H2(Matrix),
}

impl MetricSpec {
    pub fn kind(&self) -> MetricKind {
        match self {
            MetricSpec::Trace => MetricKind::Trace,
            MetricSpec::WeightedTrace(_) => MetricKind::WeightedTrace,
            MetricSpec::H2(_) => MetricKind::H2,
        }
    }

    pub fn weight(&self) -> Option<&Matrix> {
        match self {
            MetricSpec::Trace => None,
            MetricSpec::WeightedTrace(m) | MetricSpec::H2(m) => Some(m),
        }
    }

    /// Checks the weight shape against state dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            MetricSpec::Trace => Ok(()),
            MetricSpec::WeightedTrace(c) => {
                if c.nrows() != n || c.ncols() != n {
                    return Err(Error::Dimension(format!(
                        "weighted_trace weight must be {n}x{n}, got {}x{}",
                        c.nrows(),
                        c.ncols()
                    )));
                }
                Ok(())
            }
            MetricSpec::H2(c) => {
                if c.ncols() != n {
                    return Err(Error::Dimension(format!(
                        "h2 output matrix must have {n} columns, got {}",
                        c.ncols()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Evaluates the metric on a raw symmetric matrix.
    pub fn evaluate_matrix(&self, w: &Matrix) -> Result<f64> {
        self.validate(w.nrows())?;
        Ok(match self {
            MetricSpec::Trace => w.trace(),
            // tr(C̄ W) = Σ_ij C̄_ij W_ji
            MetricSpec::WeightedTrace(c) => c.iter().zip(w.transpose().iter()).map(|(x, y)| x * y).sum(),
            MetricSpec::H2(c) => (c * w * c.transpose()).trace(),
        })
    }
}

/// Evaluates `spec` on `w`.
pub fn evaluate_metric(spec: &MetricSpec, w: &Gramian) -> Result<f64> {
    spec.evaluate_matrix(w.matrix())
}

/// Square root of the `H2` metric, clipped at zero.
pub fn h2_norm(spec_value: f64) -> f64 {
    spec_value.max(0.0).sqrt()
}

fn eigen_checked(w: &Gramian) -> Result<(SymmetricEigen, f64)> {
    let e = symmetric_eigen(w.matrix())?;
    let lmax = e.values.iter().copied().fold(0.0, f64::max);
    Ok((e, SINGULAR_REL_TOL * lmax))
}

/// Mean minimum control energy over the unit sphere, `tr(W⁻¹) / n`.
pub fn average_energy_tr_inverse(w: &Gramian) -> Result<f64> {
    let n = w.dim();
    if n == 0 {
        return Err(Error::Dimension("empty Gramian".into()));
    }
    let (e, thr) = eigen_checked(w)?;
    let lmin = e.values[n - 1];
    if !(lmin > thr) {
        return Err(Error::Singular {
            eigenvalue: lmin,
            threshold: thr,
        });
    }
    Ok(e.values.iter().map(|l| 1.0 / l).sum::<f64>() / n as f64)
}

/// Result of [`min_energy_to_reach`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachEnergy {
    pub energy: f64,
    /// Set when `W` is singular and the target lies in its range, so the
    /// value is a pseudo-inverse quadratic form.
    pub degenerate: bool,
}

/// `x_fᵀ·W⁻¹·x_f`, the least input energy that steers the origin to `x_f`.
pub fn min_energy_to_reach(w: &Gramian, x_f: &Vector) -> Result<ReachEnergy> {
    let n = w.dim();
    if x_f.len() != n {
        return Err(Error::Dimension(format!(
            "target has length {}, state dimension is {n}",
            x_f.len()
        )));
    }
    if x_f.iter().all(|v| *v == 0.0) {
        return Ok(ReachEnergy {
            energy: 0.0,
            degenerate: false,
        });
    }
    let (e, thr) = eigen_checked(w)?;
    let mut energy = 0.0;
    let mut null_sq = 0.0;
    let mut degenerate = false;
    for (i, &l) in e.values.iter().enumerate() {
        let c = e.vectors.column(i).dot(x_f);
        if l > thr {
            energy += c * c / l;
        } else {
            degenerate = true;
            null_sq += c * c;
        }
    }
    let residual = null_sq.sqrt();
    if residual > 1e-9 * x_f.norm() {
        return Err(Error::Unreachable { residual });
    }
    Ok(ReachEnergy { energy, degenerate })
}

/// Semi-axes of the unit-energy reachability ellipsoid `{x : xᵀW⁻¹x ≤ 1}`.
#[derive(Debug, Clone)]
pub struct EllipsoidAxes {
    /// Column `i` is the direction of the `i`-th semi-axis.
    pub directions: Matrix,
    /// Descending.
    pub lengths: Vec<f64>,
}

pub fn reachability_ellipsoid(w: &Gramian) -> Result<EllipsoidAxes> {
    let e = symmetric_eigen(w.matrix())?;
    Ok(EllipsoidAxes {
        lengths: e.values.iter().map(|l| l.max(0.0).sqrt()).collect(),
        directions: e.vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramian::{controllability_gramian, Horizon};

    fn gram(v: &[f64]) -> Gramian {
        Gramian::new(
            Matrix::from_diagonal(&Vector::from_row_slice(v)),
            Horizon::Infinite,
            "test",
        )
    }

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(v))
    }

    #[test]
    fn metric_examples() {
        let w = gram(&[0.5, 0.25]);
        assert_eq!(evaluate_metric(&MetricSpec::Trace, &w).unwrap(), 0.75);
        let wt = MetricSpec::WeightedTrace(diag(&[1.0, 0.0]));
        assert_eq!(evaluate_metric(&wt, &w).unwrap(), 0.5);
        let g = controllability_gramian(&diag(&[-1.0]), &diag(&[1.0])).unwrap();
        let h2 = evaluate_metric(&MetricSpec::H2(diag(&[1.0])), &g).unwrap();
        assert!((h2 - 0.5).abs() < 1e-15);
        assert!((h2_norm(h2) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trace_equals_identity_weight() {
        let w = Gramian::new(
            Matrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.7]),
            Horizon::Infinite,
            "t",
        );
        let a = evaluate_metric(&MetricSpec::Trace, &w).unwrap();
        let b = evaluate_metric(&MetricSpec::WeightedTrace(Matrix::identity(3, 3)), &w).unwrap();
        let c = evaluate_metric(&MetricSpec::H2(Matrix::identity(3, 3)), &w).unwrap();
        assert!((a - b).abs() < 1e-15 && (a - c).abs() < 1e-15);
    }

    #[test]
    fn weight_shape_errors() {
        let w = gram(&[1.0, 1.0]);
        assert!(matches!(
            evaluate_metric(&MetricSpec::WeightedTrace(Matrix::zeros(2, 3)), &w),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            evaluate_metric(&MetricSpec::H2(Matrix::zeros(1, 3)), &w),
            Err(Error::Dimension(_))
        ));
        assert!(evaluate_metric(&MetricSpec::H2(Matrix::zeros(4, 2)), &w).is_ok());
    }

    #[test]
    fn average_energy() {
        assert!((average_energy_tr_inverse(&gram(&[1.0, 1.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!((average_energy_tr_inverse(&gram(&[0.5, 0.25])).unwrap() - 3.0).abs() < 1e-14);
        let half = average_energy_tr_inverse(&gram(&[0.5, 0.5])).unwrap();
        let quarter = average_energy_tr_inverse(&gram(&[0.25, 0.25])).unwrap();
        assert!((half - 2.0).abs() < 1e-14 && (quarter - 4.0).abs() < 1e-14);
        match average_energy_tr_inverse(&gram(&[0.5, 0.0])) {
            Err(Error::Singular { eigenvalue, .. }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reach_energy() {
        let w = gram(&[0.5]);
        let e = min_energy_to_reach(&w, &Vector::from_vec(vec![1.0])).unwrap();
        assert!((e.energy - 2.0).abs() < 1e-15 && !e.degenerate);
        assert_eq!(min_energy_to_reach(&w, &Vector::zeros(1)).unwrap().energy, 0.0);

        let flat = gram(&[0.5, 0.0]);
        let inside = min_energy_to_reach(&flat, &Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(inside.degenerate && (inside.energy - 2.0).abs() < 1e-14);
        assert!(matches!(
            min_energy_to_reach(&flat, &Vector::from_vec(vec![0.0, 1.0])),
            Err(Error::Unreachable { .. })
        ));
        assert!(matches!(
            min_energy_to_reach(&flat, &Vector::zeros(3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn ellipsoid_examples() {
        let e = reachability_ellipsoid(&gram(&[4.0, 1.0])).unwrap();
        assert_eq!(e.lengths, vec![2.0, 1.0]);
        assert!((e.directions.column(0).abs() - Vector::from_vec(vec![1.0, 0.0])).norm() < 1e-15);
        let e = reachability_ellipsoid(&gram(&[1.0, 1.0, 1.0])).unwrap();
        assert!(e.lengths.iter().all(|l| (l - 1.0).abs() < 1e-15));
        let e = reachability_ellipsoid(&gram(&[0.5, 0.0])).unwrap();
        assert!((e.lengths[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.lengths[1], 0.0);
    }
}
