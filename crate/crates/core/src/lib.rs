//! Actuator and sensor placement for linear networks by Gramian-trace
//! metrics.
//!
//! The trace (and any weighted trace) of the controllability Gramian is a
//! modular function of the set of actuators: it is the sum of the traces
//! contributed by each actuator on its own. Optimal placement therefore
//! reduces to scoring every candidate independently and keeping the best
//! `k`, which [`placement::select_top_k`] does. The remaining modules supply
//! the linear algebra, Gramians, energy metrics, problem generators and an
//! exhaustive-search oracle.

// Negated float comparisons are used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gramian;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod ode;
pub mod placement;
pub mod synthesis;

pub use error::{Error, Result};
pub use gramian::{
    controllability_gramian, finite_horizon_gramian, observability_gramian, solve_lyapunov, Gramian, Horizon,
    LyapunovSolver,
};
pub use metrics::{
    average_energy_tr_inverse, evaluate_metric, min_energy_to_reach, reachability_ellipsoid, EllipsoidAxes, MetricKind,
    MetricSpec, ReachEnergy,
};
pub use models::{GridModel, GridParams, LinearizedGrid, Problem, ProblemFile};
pub use numerics::{Matrix, Vector};
pub use placement::{
    brute_force_best, candidate_weights, controllability_centrality, select_top_k, verify_modularity, Candidate,
    CandidateSet, Functional, ModularityReport, PlacementResult, ScoredCandidate,
};
pub use synthesis::{simulate, synthesize_min_energy_input, InputTrajectory, MinEnergyPlan, Simulation};
