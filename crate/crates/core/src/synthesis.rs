//! Minimum-energy input synthesis over a finite horizon and its verification
//! by direct simulation.
//!
//! The optimal input steering `ẋ = A·x + B·u` from the origin to `x_f` in time
//! `t` is `u*(τ) = Bᵀ·e^{Aᵀ(t−τ)}·λ` with `λ = W(t)⁻¹·x_f`; the vector
//! `p(τ) = e^{Aᵀ(t−τ)}·λ` is carried as a costate.

use crate::error::{Error, Result};
use crate::gramian::{finite_horizon_parts, Gramian, Horizon};
use crate::metrics::SINGULAR_REL_TOL;
use crate::numerics::{matrix_exponential, symmetric_eigen, Matrix, Vector};
use crate::ode::{integrate, Tolerance};

/// Closed-form minimum-energy steering problem, solved.
#[derive(Debug, Clone)]
pub struct MinEnergyPlan {
    a: Matrix,
    b: Matrix,
    horizon: f64,
    target: Vector,
    gramian: Gramian,
    costate_final: Vector,
    energy: f64,
}

impl MinEnergyPlan {
    pub fn new(a: &Matrix, b: &Matrix, t: f64, x_f: &Vector) -> Result<Self> {
        let n = a.nrows();
        if x_f.len() != n {
            return Err(Error::Dimension(format!(
                "target has length {}, state dimension is {n}",
                x_f.len()
            )));
        }
        let (w, _) = finite_horizon_parts(a, b, t)?;
        let gramian = Gramian::new(w, Horizon::Finite(t), format!("B[{}x{}]", b.nrows(), b.ncols()));
        let (costate_final, energy) = if x_f.iter().all(|v| *v == 0.0) {
            (Vector::zeros(n), 0.0)
        } else {
            let e = symmetric_eigen(gramian.matrix())?;
            let lmax = e.values.iter().copied().fold(0.0, f64::max);
            let lmin = e.values[n - 1];
            if !(lmin > SINGULAR_REL_TOL * lmax) {
                let residual = (0..n)
                    .filter(|&i| !(e.values[i] > SINGULAR_REL_TOL * lmax))
                    .map(|i| e.vectors.column(i).dot(x_f).powi(2))
                    .sum::<f64>()
                    .sqrt();
                return Err(Error::Unreachable { residual });
            }
            // λ = V·diag(1/σ)·Vᵀ·x_f, refined against the residual since W
            // may be badly conditioned for short horizons
            let apply_inverse = |r: &Vector| {
                let coords = e.vectors.transpose() * r;
                let scaled = Vector::from_iterator(n, coords.iter().zip(e.values.iter()).map(|(c, l)| c / l));
                &e.vectors * scaled
            };
            let w = gramian.matrix();
            let mut lambda = apply_inverse(x_f);
            let mut res_norm = (x_f - w * &lambda).norm();
            for _ in 0..3 {
                let r = x_f - w * &lambda;
                let candidate = &lambda + apply_inverse(&r);
                let next = (x_f - w * &candidate).norm();
                if !(next < res_norm) {
                    break;
                }
                lambda = candidate;
                res_norm = next;
            }
            let energy = x_f.dot(&lambda);
            (lambda, energy)
        };
        Ok(MinEnergyPlan {
            a: a.clone(),
            b: b.clone(),
            horizon: t,
            target: x_f.clone(),
            gramian,
            costate_final,
            energy,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn target(&self) -> &Vector {
        &self.target
    }

    pub fn gramian(&self) -> &Gramian {
        &self.gramian
    }

    /// `x_fᵀ·W(t)⁻¹·x_f`
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `e^{Aᵀ(t−τ)}·λ`
    pub fn costate_at(&self, tau: f64) -> Result<Vector> {
        let phi = matrix_exponential(&(self.a.transpose() * (self.horizon - tau)))?;
        Ok(phi * &self.costate_final)
    }

    pub fn input_at(&self, tau: f64) -> Result<Vector> {
        Ok(self.b.transpose() * self.costate_at(tau)?)
    }

    /// Samples `u*` on a uniform grid of `samples` points over `[0, t]`.
    pub fn sample(&self, samples: usize) -> Result<InputTrajectory> {
        if samples < 2 {
            return Err(Error::Domain(format!("need at least 2 samples, got {samples}")));
        }
        let n = self.a.nrows();
        let dt = self.horizon / (samples - 1) as f64;
        let times: Vec<f64> = (0..samples).map(|k| k as f64 * dt).collect();
        // p(τ_k) = e^{Aᵀ·dt}·p(τ_{k+1}), swept back from p(t) = λ
        let step = matrix_exponential(&(self.a.transpose() * dt))?;
        let mut costates = vec![Vector::zeros(n); samples];
        costates[samples - 1] = self.costate_final.clone();
        for k in (0..samples - 1).rev() {
            costates[k] = &step * &costates[k + 1];
        }
        let inputs = costates.iter().map(|p| self.b.transpose() * p).collect();
        Ok(InputTrajectory {
            times,
            inputs,
            costates,
        })
    }
}

/// Uniformly sampled minimum-energy input.
#[derive(Debug, Clone)]
pub struct InputTrajectory {
    pub times: Vec<f64>,
    pub inputs: Vec<Vector>,
    /// Costate `p(τ_k)`, from which `u*` is reconstructed exactly between
    /// samples as `Bᵀ·e^{Aᵀ(τ_k−τ)}·p(τ_k)`.
    pub costates: Vec<Vector>,
}

/// Synthesizes the minimum-energy input reaching `x_f` at time `t` and
/// samples it on `samples` uniformly spaced points.
pub fn synthesize_min_energy_input(
    a: &Matrix,
    b: &Matrix,
    t: f64,
    x_f: &Vector,
    samples: usize,
) -> Result<(MinEnergyPlan, InputTrajectory)> {
    let plan = MinEnergyPlan::new(a, b, t, x_f)?;
    let traj = plan.sample(samples)?;
    Ok((plan, traj))
}

/// Outcome of simulating the closed-form input from the origin.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// State at each sample time.
    pub states: Vec<Vector>,
    /// `∫₀ᵗ ‖u*(τ)‖² dτ`
    pub energy: f64,
    /// `‖x(t) − x_f‖`
    pub terminal_error: f64,
}

/// Integrates `ẋ = A·x + B·u*` from `x(0) = 0` with the adaptive integrator,
/// restarting the costate from its exact sample value on each interval.
pub fn simulate(plan: &MinEnergyPlan, traj: &InputTrajectory, tol: Tolerance) -> Result<Simulation> {
    let n = plan.a.nrows();
    let a = &plan.a;
    let bbt = &plan.b * plan.b.transpose();
    let mut x = vec![0.0; n];
    let mut energy = 0.0;
    let mut states = vec![Vector::zeros(n)];
    // z = [x, p, e]: ẋ = A x + B Bᵀ p, ṗ = -Aᵀ p, ė = pᵀ B Bᵀ p
    let rhs = |_: f64, z: &[f64], dz: &mut [f64]| {
        let (xs, rest) = z.split_at(n);
        let p = &rest[..n];
        let mut g = vec![0.0; n];
        for i in 0..n {
            g[i] = (0..n).map(|j| bbt[(i, j)] * p[j]).sum();
        }
        for i in 0..n {
            dz[i] = (0..n).map(|j| a[(i, j)] * xs[j]).sum::<f64>() + g[i];
            dz[n + i] = -(0..n).map(|j| a[(j, i)] * p[j]).sum::<f64>();
        }
        dz[2 * n] = p.iter().zip(&g).map(|(x, y)| x * y).sum();
    };
    for k in 0..traj.times.len() - 1 {
        let mut z0 = Vec::with_capacity(2 * n + 1);
        z0.extend_from_slice(&x);
        z0.extend(traj.costates[k].iter());
        z0.push(0.0);
        let z1 = integrate(rhs, traj.times[k], traj.times[k + 1], &z0, tol)?;
        x.copy_from_slice(&z1[..n]);
        energy += z1[2 * n];
        states.push(Vector::from_column_slice(&x));
    }
    let terminal_error = (Vector::from_column_slice(&x) - &plan.target).norm();
    Ok(Simulation {
        states,
        energy,
        terminal_error,
    })
}
