//! Problem generation and loading.

pub mod grid;
pub mod problem;
pub mod random;

pub use grid::{
    assemble_swing_matrix, build_swing_matrix, hvdc_candidates, Bus, BusStates, GridModel, GridParams, Line,
    LinearizedGrid,
};
pub use problem::{load_problem, parse_problem, save_problem, Problem, ProblemFile};
pub use random::{random_hurwitz_system, RandomSystem};
