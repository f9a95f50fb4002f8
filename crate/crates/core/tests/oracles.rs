//! Library results against independent reference computations written here:
//! fixed-step quadrature for Gramians and polynomial root finding for
//! eigenvalues.

use gramplace::models::random_hurwitz_system;
use gramplace::numerics::{eigenvalues, spectral_abscissa, Complex};
use gramplace::placement::candidate_weights;
use gramplace::{finite_horizon_gramian, CandidateSet, Matrix, MetricSpec, Vector};

// Classical RK4 on ẋ = A·x with ∫‖x‖² accumulated by Simpson's rule.
fn quadrature_trace(a: &Matrix, b: &Vector, t_end: f64, steps: usize) -> f64 {
    let h = t_end / steps as f64;
    let mut x = b.clone();
    let mut total = 0.0;
    for _ in 0..steps {
        let k1 = a * &x;
        let k2 = a * (&x + &k1 * (h / 2.0));
        let k3 = a * (&x + &k2 * (h / 2.0));
        let k4 = a * (&x + &k3 * h);
        let half = {
            // RK4 half step for the Simpson midpoint
            let hh = h / 2.0;
            let j1 = a * &x;
            let j2 = a * (&x + &j1 * (hh / 2.0));
            let j3 = a * (&x + &j2 * (hh / 2.0));
            let j4 = a * (&x + &j3 * hh);
            &x + (j1 + j2 * 2.0 + j3 * 2.0 + j4) * (hh / 6.0)
        };
        let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        total += h / 6.0 * (x.norm_squared() + 4.0 * half.norm_squared() + next.norm_squared());
        x = next;
    }
    total
}

#[test]
fn candidate_weights_match_quadrature() {
    for seed in 0..6 {
        let sys = random_hurwitz_system(4, 3, 0.7, 100 + seed).unwrap();
        let cs = CandidateSet::new(sys.a.clone(), sys.candidates(), MetricSpec::Trace).unwrap();
        let weights = candidate_weights(&cs).unwrap();
        let alpha = spectral_abscissa(&sys.a).unwrap();
        let t_end = 40.0 / alpha.abs();
        let rate = sys.a.norm();
        let steps = ((t_end * rate * 20.0) as usize).max(2000);
        for c in cs.candidates() {
            let q = quadrature_trace(&sys.a, &c.column, t_end, steps);
            let w = weights[&c.id];
            assert!((w - q).abs() <= 1e-6 * w, "seed {seed} {}: {w} vs {q}", c.id);
        }
    }
}

// RK4 on Ẇ = A·W + W·Aᵀ + B·Bᵀ from W(0) = 0.
fn lyapunov_ode(a: &Matrix, b: &Matrix, t_end: f64, steps: usize) -> Matrix {
    let q = b * b.transpose();
    let f = |w: &Matrix| a * w + w * a.transpose() + &q;
    let h = t_end / steps as f64;
    let mut w = Matrix::zeros(a.nrows(), a.nrows());
    for _ in 0..steps {
        let k1 = f(&w);
        let k2 = f(&(&w + &k1 * (h / 2.0)));
        let k3 = f(&(&w + &k2 * (h / 2.0)));
        let k4 = f(&(&w + &k3 * h));
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    w
}

#[test]
fn finite_horizon_matches_lyapunov_differential_equation() {
    for seed in 0..5 {
        let sys = random_hurwitz_system(5, 2, 0.6, 200 + seed).unwrap();
        let b = Matrix::from_columns(&sys.columns);
        for t in [0.3, 1.7, 6.0] {
            let w = finite_horizon_gramian(&sys.a, &b, t).unwrap().into_matrix();
            let steps = ((t * sys.a.norm() * 40.0) as usize).max(400);
            let r = lyapunov_ode(&sys.a, &b, t, steps);
            assert!((&w - &r).norm() <= 1e-9 * r.norm(), "seed {seed} t {t}");
        }
    }
}

// Faddeev–LeVerrier: coefficients of det(λI − A), leading coefficient first.
fn characteristic_polynomial(a: &Matrix) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = Matrix::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + Matrix::identity(n, n) * c;
        c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn horner(p: &[f64], z: Complex) -> Complex {
    p.iter().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn horner_derivative(p: &[f64], z: Complex) -> Complex {
    let n = p.len() - 1;
    p[..n]
        .iter()
        .enumerate()
        .fold(Complex::new(0.0, 0.0), |acc, (i, &c)| acc * z + c * (n - i) as f64)
}

// Durand–Kerner iteration followed by Newton polishing.
fn roots(p: &[f64]) -> Vec<Complex> {
    let n = p.len() - 1;
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex> = (0..n).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(Complex::new(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            let step = horner(p, z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in &mut z {
        for _ in 0..5 {
            let d = horner_derivative(p, *r);
            if d.norm() > 0.0 {
                *r -= horner(p, *r) / d;
            }
        }
    }
    z
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    for seed in 0..20 {
        let n = 2 + (seed as usize % 4);
        let sys = random_hurwitz_system(n, 1, 1.0, 300 + seed).unwrap();
        let expected = roots(&characteristic_polynomial(&sys.a));
        let got = eigenvalues(&sys.a).unwrap().eigenvalues;
        assert_eq!(got.len(), n);
        let mut used = vec![false; n];
        for g in &got {
            let (best, dist) = expected
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, e)| (i, (e - g).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            used[best] = true;
            assert!(dist <= 1e-10 * g.norm().max(1.0), "seed {seed}: {g} off by {dist:e}");
        }
    }
}
