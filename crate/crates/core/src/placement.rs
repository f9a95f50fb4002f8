//! Actuator and sensor placement over a finite candidate set.
//!
//! For the linear Gramian metrics in [`MetricSpec`], the value of a placement
//! `S` is the sum of per-candidate weights `w(s) = metric(W_s)` where `W_s` is
//! the Gramian of candidate `s` alone, and `w(∅) = 0`. The best `k`-subset is
//! therefore found by scoring each candidate once and sorting. Exhaustive
//! search and a randomized modularity check are provided to confirm this
//! independently.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::{controllability_gramian, Gramian, Horizon, LyapunovSolver};
use crate::metrics::{evaluate_metric, MetricSpec, SINGULAR_REL_TOL};
use crate::numerics::{ensure_finite, ensure_square, symmetric_eigen, Matrix, Vector, DEFAULT_STABILITY_MARGIN};

/// Default cap on the number of subsets [`brute_force_best`] will evaluate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Tolerance of the modular identity check.
pub const MODULARITY_TOL: f64 = 1e-8;

/// Scores within this relative distance of the selection boundary are
/// reported as ties.
pub const TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub column: Vector,
}

impl Candidate {
    pub fn new(id: impl Into<String>, column: Vector) -> Self {
        Candidate { id: id.into(), column }
    }
}

/// Dynamics, candidate input columns and the metric they are judged by.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    a: Matrix,
    candidates: Vec<Candidate>,
    metric: MetricSpec,
    margin: f64,
}

impl CandidateSet {
    pub fn new(a: Matrix, candidates: Vec<Candidate>, metric: MetricSpec) -> Result<Self> {
        ensure_square(&a, "A")?;
        ensure_finite(&a, "A")?;
        let n = a.nrows();
        let mut seen = HashSet::new();
        for c in &candidates {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Domain(format!("duplicate candidate id {:?}", c.id)));
            }
            if c.column.len() != n {
                return Err(Error::Dimension(format!(
                    "candidate {:?} has length {}, state dimension is {n}",
                    c.id,
                    c.column.len()
                )));
            }
            if c.column.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("candidate {:?} has a non-finite entry", c.id)));
            }
        }
        metric.validate(n)?;
        Ok(CandidateSet {
            a,
            candidates,
            metric,
            margin: DEFAULT_STABILITY_MARGIN,
        })
    }

    /// Overrides the stability margin used when factoring `A`.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// Same dynamics and candidates judged by another metric.
    pub fn with_metric(&self, metric: MetricSpec) -> Result<Self> {
        metric.validate(self.dim())?;
        Ok(CandidateSet { metric, ..self.clone() })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id)
    }

    /// Input matrix whose columns are the candidates at `indices`.
    pub fn input_matrix(&self, indices: &[usize]) -> Matrix {
        let mut b = Matrix::zeros(self.dim(), indices.len());
        for (j, &i) in indices.iter().enumerate() {
            b.set_column(j, &self.candidates[i].column);
        }
        b
    }

    /// Metric of the from-scratch Gramian of the combined input matrix;
    /// zero for the empty set.
    pub fn subset_value(&self, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Ok(0.0);
        }
        let w = controllability_gramian(&self.a, &self.input_matrix(indices))?;
        evaluate_metric(&self.metric, &w)
    }

    fn solver(&self) -> Result<LyapunovSolver> {
        LyapunovSolver::with_margin(&self.a, self.margin)
    }
}

/// Gramian of a single column using a prefactored solver.
pub fn single_column_gramian(solver: &LyapunovSolver, id: &str, column: &Vector) -> Result<Gramian> {
    let b = Matrix::from_column_slice(column.len(), 1, column.as_slice());
    Ok(Gramian::new(solver.solve_factored(&b)?, Horizon::Infinite, id))
}

/// Per-candidate weights in candidate order. The Schur form of `A` is shared;
/// candidates are scored in parallel and each score depends only on its own
/// column.
pub fn score_candidates(cs: &CandidateSet) -> Result<Vec<f64>> {
    let solver = cs.solver()?;
    cs.candidates
        .par_iter()
        .map(|c| {
            let w = single_column_gramian(&solver, &c.id, &c.column)?;
            evaluate_metric(&cs.metric, &w)
        })
        .collect()
}

/// `w(s) = metric(W_s)` for every candidate.
pub fn candidate_weights(cs: &CandidateSet) -> Result<BTreeMap<String, f64>> {
    let scores = score_candidates(cs)?;
    Ok(cs.candidates.iter().map(|c| c.id.clone()).zip(scores).collect())
}

/// Sensor weights: candidate rows `c_s` scored by the observability Gramian of
/// `(A, c_s)`, i.e. actuator weights of the dual system `(Aᵀ, c_sᵀ)`.
pub fn sensor_weights(a: &Matrix, sensors: Vec<Candidate>, metric: MetricSpec) -> Result<BTreeMap<String, f64>> {
    let dual = CandidateSet::new(a.transpose(), sensors, metric)?;
    candidate_weights(&dual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub id: String,
    pub score: f64,
}

/// Outcome of a top-`k` selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    /// All candidates by descending score, ties by ascending id.
    pub ranked: Vec<ScoredCandidate>,
    /// First `k` entries of `ranked`.
    pub selected: Vec<ScoredCandidate>,
    /// Sum of selected scores.
    pub total_score: f64,
    /// Metric of the Gramian of the combined selected columns.
    pub combined_score: f64,
    /// Groups of equal score that straddle the selection boundary.
    pub ties: Vec<Vec<String>>,
}

fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.id.cmp(&b.id))
}

/// Candidates with precomputed weights, reusable across `k`.
#[derive(Debug, Clone)]
pub struct ScoredSet<'a> {
    cs: &'a CandidateSet,
    ranked: Vec<ScoredCandidate>,
}

impl<'a> ScoredSet<'a> {
    pub fn new(cs: &'a CandidateSet) -> Result<Self> {
        let scores = score_candidates(cs)?;
        Ok(Self::from_scores(cs, scores))
    }

    pub fn from_scores(cs: &'a CandidateSet, scores: Vec<f64>) -> Self {
        let mut ranked: Vec<ScoredCandidate> = cs
            .candidates
            .iter()
            .zip(scores)
            .map(|(c, score)| ScoredCandidate {
                id: c.id.clone(),
                score,
            })
            .collect();
        ranked.sort_by(rank_order);
        ScoredSet { cs, ranked }
    }

    pub fn ranked(&self) -> &[ScoredCandidate] {
        &self.ranked
    }

    pub fn into_ranked(self) -> Vec<ScoredCandidate> {
        self.ranked
    }

    /// Best `k` candidates, with the combined-Gramian value checked against
    /// the sum of weights.
    pub fn select(&self, k: usize) -> Result<PlacementResult> {
        let m = self.ranked.len();
        if k == 0 || k > m {
            return Err(Error::Domain(format!("k must be in 1..={m}, got {k}")));
        }
        let selected: Vec<ScoredCandidate> = self.ranked[..k].to_vec();
        let total_score: f64 = selected.iter().map(|s| s.score).sum();
        let indices: Vec<usize> = selected
            .iter()
            .map(|s| self.cs.index_of(&s.id).expect("ranked ids come from the set"))
            .collect();
        let combined_score = self.cs.subset_value(&indices)?;
        let scale: f64 = selected
            .iter()
            .map(|s| s.score.abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        if (combined_score - total_score).abs() > 1e-9 * scale.max(combined_score.abs()) {
            return Err(Error::Numerical(format!(
                "combined metric {combined_score:.17e} disagrees with weight sum {total_score:.17e}"
            )));
        }
        Ok(PlacementResult {
            ranked: self.ranked.clone(),
            selected,
            total_score,
            combined_score,
            ties: boundary_ties(&self.ranked, k),
        })
    }
}

fn boundary_ties(ranked: &[ScoredCandidate], k: usize) -> Vec<Vec<String>> {
    if k >= ranked.len() {
        return Vec::new();
    }
    let pivot = ranked[k - 1].score;
    let tol = TIE_REL_TOL * pivot.abs().max(f64::MIN_POSITIVE);
    let group: Vec<String> = ranked
        .iter()
        .filter(|s| (s.score - pivot).abs() <= tol)
        .map(|s| s.id.clone())
        .collect();
    let straddles = ranked[k..].iter().any(|s| (s.score - pivot).abs() <= tol);
    if straddles {
        vec![group]
    } else {
        Vec::new()
    }
}

/// Exact best `k`-subset for a modular metric: score, sort, take the top `k`.
pub fn select_top_k(cs: &CandidateSet, k: usize) -> Result<PlacementResult> {
    if k == 0 || k > cs.len() {
        return Err(Error::Domain(format!("k must be in 1..={}, got {k}", cs.len())));
    }
    ScoredSet::new(cs)?.select(k)
}

/// Scalar functional of a Gramian used by the exhaustive search. Only the
/// `Metric` variant is modular; the others are for comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Metric(MetricSpec),
    /// Smallest eigenvalue of `W`.
    MinEigenvalue,
    /// `log det W`, `-∞` when `W` is singular.
    LogDet,
    /// `-tr(W⁻¹)/n`, `-∞` when `W` is singular.
    NegAverageEnergy,
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::Metric(m) => m.kind().name(),
            Functional::MinEigenvalue => "min_eigenvalue",
            Functional::LogDet => "log_det",
            Functional::NegAverageEnergy => "neg_average_energy",
        }
    }

    pub fn evaluate(&self, w: &Gramian) -> Result<f64> {
        match self {
            Functional::Metric(m) => evaluate_metric(m, w),
            Functional::MinEigenvalue => w.min_eigenvalue(),
            Functional::LogDet | Functional::NegAverageEnergy => {
                let e = symmetric_eigen(w.matrix())?;
                let lmax = e.values.iter().copied().fold(0.0, f64::max);
                if e.values.iter().any(|&l| !(l > SINGULAR_REL_TOL * lmax)) {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(match self {
                    Functional::LogDet => e.values.iter().map(|l| l.ln()).sum(),
                    _ => -e.values.iter().map(|l| 1.0 / l).sum::<f64>() / w.dim() as f64,
                })
            }
        }
    }
}

/// `C(m, k)`, exact when it fits in `u128`.
pub fn binomial(m: usize, k: usize) -> Option<u128> {
    if k > m {
        return Some(0);
    }
    let k = k.min(m - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c·(m−i)/(i+1) is exact at every step
        c = c.checked_mul((m - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

/// `C(m, k)` as a float, by summing logarithms.
pub fn binomial_f64(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    let k = k.min(m - k);
    (0..k)
        .map(|i| ((m - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum::<f64>()
        .exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    /// Chosen ids, sorted ascending.
    pub subset: Vec<String>,
    pub value: f64,
    pub evaluated: u64,
}

/// Evaluates every `k`-subset from scratch and returns the maximizer of
/// `functional`. Values within a relative `1e-12` are treated as equal and
/// resolved to the lexicographically smallest sorted id list.
pub fn brute_force_best(cs: &CandidateSet, k: usize, functional: &Functional, cap: u64) -> Result<BruteForceResult> {
    brute_force_best_with(cs, k, cap, |w| functional.evaluate(w))
}

pub fn brute_force_best_with<F>(cs: &CandidateSet, k: usize, cap: u64, f: F) -> Result<BruteForceResult>
where
    F: Fn(&Gramian) -> Result<f64> + Sync,
{
    let m = cs.len();
    if k == 0 || k > m {
        return Err(Error::Domain(format!("k must be in 1..={m}, got {k}")));
    }
    let count = binomial(m, k);
    if count.is_none_or(|c| c > cap as u128) {
        return Err(Error::EnumerationTooLarge {
            m,
            k,
            count: count.map_or_else(|| binomial_f64(m, k), |c| c as f64),
            cap,
        });
    }
    let subsets = combinations(m, k);
    let values: Vec<f64> = subsets
        .par_iter()
        .map(|idx| {
            let w = controllability_gramian(cs.a(), &cs.input_matrix(idx))?;
            f(&w)
        })
        .collect::<Result<_>>()?;

    let ids_of = |idx: &[usize]| -> Vec<String> {
        let mut ids: Vec<String> = idx.iter().map(|&i| cs.candidates[i].id.clone()).collect();
        ids.sort();
        ids
    };
    let mut best: Option<(f64, Vec<String>)> = None;
    for (idx, &v) in subsets.iter().zip(&values) {
        if v.is_nan() {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((bv, bids)) => {
                let tol = 1e-12 * bv.abs().max(v.abs()).max(f64::MIN_POSITIVE);
                if bv.is_infinite() || v.is_infinite() {
                    v > *bv || (v == *bv && ids_of(idx) < *bids)
                } else if (v - bv).abs() <= tol {
                    ids_of(idx) < *bids
                } else {
                    v > *bv
                }
            }
        };
        if replace {
            best = Some((v, ids_of(idx)));
        }
    }
    let (value, subset) = best.ok_or_else(|| Error::Numerical("every subset evaluated to NaN".into()))?;
    Ok(BruteForceResult {
        subset,
        value,
        evaluated: subsets.len() as u64,
    })
}

// All k-subsets of 0..m in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Result of [`verify_modularity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularityReport {
    pub trials: usize,
    /// Largest `|f(A)+f(B)−f(A∪B)−f(A∩B)| / max(1, |f(A)|+|f(B)|)`.
    pub max_violation: f64,
    /// Largest unnormalized violation.
    pub max_abs_violation: f64,
    pub threshold: f64,
    pub failures: usize,
    pub passed: bool,
    /// Subset pair attaining `max_violation`.
    pub worst_pair: Option<(Vec<String>, Vec<String>)>,
}

/// Draws `trials` random subset pairs (each candidate included with
/// probability 1/2) and checks `f(A) + f(B) = f(A∪B) + f(A∩B)` using
/// from-scratch Gramians of the combined columns.
pub fn verify_modularity(cs: &CandidateSet, trials: usize, seed: u64) -> Result<ModularityReport> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = cs.len();
    let pairs: Vec<(Vec<bool>, Vec<bool>)> = (0..trials)
        .map(|_| {
            let a = (0..m).map(|_| rng.random_bool(0.5)).collect();
            let b = (0..m).map(|_| rng.random_bool(0.5)).collect();
            (a, b)
        })
        .collect();
    let pick = |mask: &[bool]| -> Vec<usize> { (0..m).filter(|&i| mask[i]).collect() };

    let results: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let union: Vec<bool> = a.iter().zip(b).map(|(x, y)| *x || *y).collect();
            let inter: Vec<bool> = a.iter().zip(b).map(|(x, y)| *x && *y).collect();
            let fa = cs.subset_value(&pick(a))?;
            let fb = cs.subset_value(&pick(b))?;
            let fu = cs.subset_value(&pick(&union))?;
            let fi = cs.subset_value(&pick(&inter))?;
            let abs = (fa + fb - fu - fi).abs();
            Ok((abs / 1f64.max(fa.abs() + fb.abs()), abs))
        })
        .collect::<Result<_>>()?;

    let mut report = ModularityReport {
        trials,
        max_violation: 0.0,
        max_abs_violation: 0.0,
        threshold: MODULARITY_TOL,
        failures: 0,
        passed: true,
        worst_pair: None,
    };
    let ids = |mask: &[bool]| -> Vec<String> { pick(mask).into_iter().map(|i| cs.candidates[i].id.clone()).collect() };
    for ((rel, abs), (a, b)) in results.iter().zip(&pairs) {
        if *rel > MODULARITY_TOL || rel.is_nan() {
            report.failures += 1;
        }
        if *rel > report.max_violation || report.worst_pair.is_none() {
            report.max_violation = *rel;
            report.worst_pair = Some((ids(a), ids(b)));
        }
        report.max_abs_violation = report.max_abs_violation.max(*abs);
    }
    report.passed = report.failures == 0;
    Ok(report)
}

/// Average energy controllability centrality: `tr(W_i)` where `W_i` is the
/// Gramian for a single actuator on state `i`.
pub fn controllability_centrality(a: &Matrix) -> Result<Vec<f64>> {
    centrality_with_margin(a, DEFAULT_STABILITY_MARGIN)
}

pub fn centrality_with_margin(a: &Matrix, margin: f64) -> Result<Vec<f64>> {
    let solver = LyapunovSolver::with_margin(a, margin)?;
    let n = solver.dim();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            Ok(single_column_gramian(&solver, "", &e)?.trace())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(v))
    }

    fn unit(n: usize, i: usize) -> Vector {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        e
    }

    fn basis_set(a: Matrix) -> CandidateSet {
        let n = a.nrows();
        let cands = (0..n)
            .map(|i| Candidate::new(format!("e{}", i + 1), unit(n, i)))
            .collect();
        CandidateSet::new(a, cands, MetricSpec::Trace).unwrap()
    }

    #[test]
    fn weights_examples() {
        let w = candidate_weights(&basis_set(-Matrix::identity(2, 2))).unwrap();
        assert!((w["e1"] - 0.5).abs() < 1e-15 && (w["e2"] - 0.5).abs() < 1e-15);
        let w = candidate_weights(&basis_set(diag(&[-1.0, -2.0]))).unwrap();
        assert!((w["e1"] - 0.5).abs() < 1e-15 && (w["e2"] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn candidate_validation() {
        let a = -Matrix::identity(2, 2);
        let dup = vec![Candidate::new("x", unit(2, 0)), Candidate::new("x", unit(2, 1))];
        assert!(matches!(
            CandidateSet::new(a.clone(), dup, MetricSpec::Trace),
            Err(Error::Domain(_))
        ));
        let short = vec![Candidate::new("bad", Vector::zeros(3))];
        match CandidateSet::new(a, short, MetricSpec::Trace) {
            Err(Error::Dimension(msg)) => assert!(msg.contains("bad")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unstable_dynamics_rejected() {
        let cs = basis_set(diag(&[-1.0, 0.0]));
        assert!(matches!(candidate_weights(&cs), Err(Error::Stability { .. })));
        assert!(matches!(
            controllability_centrality(&diag(&[1.0])),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn sorting_selection() {
        // weights 3, 1, 2 from scaled unit columns on -I/2: w = c²·1
        let a = -Matrix::identity(3, 3) * 0.5;
        let cands = vec![
            Candidate::new("a", unit(3, 0) * 3f64.sqrt()),
            Candidate::new("b", unit(3, 1)),
            Candidate::new("c", unit(3, 2) * 2f64.sqrt()),
        ];
        let cs = CandidateSet::new(a, cands, MetricSpec::Trace).unwrap();
        let r = select_top_k(&cs, 2).unwrap();
        let ids: Vec<&str> = r.selected.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert!((r.total_score - 5.0).abs() < 1e-13);
        assert!((r.combined_score - 5.0).abs() < 1e-13);
        assert!(r.ties.is_empty());
        let all = select_top_k(&cs, 3).unwrap();
        assert!((all.total_score - cs.subset_value(&[0, 1, 2]).unwrap()).abs() < 1e-13);
        assert!(matches!(select_top_k(&cs, 0), Err(Error::Domain(_))));
        assert!(matches!(select_top_k(&cs, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn ties_break_by_id_and_are_reported() {
        let cs = basis_set(-Matrix::identity(3, 3));
        let r = select_top_k(&cs, 1).unwrap();
        assert_eq!(r.selected[0].id, "e1");
        assert_eq!(r.ties, vec![vec!["e1".to_string(), "e2".into(), "e3".into()]]);
        let bf = brute_force_best(&cs, 1, &Functional::Metric(MetricSpec::Trace), 100).unwrap();
        assert_eq!(bf.subset, vec!["e1"]);
    }

    #[test]
    fn brute_force_full_set_and_cap() {
        let cs = basis_set(diag(&[-1.0, -2.0, -3.0]));
        let bf = brute_force_best(&cs, 3, &Functional::Metric(MetricSpec::Trace), 10).unwrap();
        assert_eq!(bf.subset, vec!["e1", "e2", "e3"]);
        assert_eq!(bf.evaluated, 1);
        match brute_force_best(&cs, 2, &Functional::LogDet, 2) {
            Err(Error::EnumerationTooLarge { count, .. }) => assert_eq!(count, 3.0),
            other => panic!("unexpected {other:?}"),
        }
        // singular Gramians for k < n
        let bf = brute_force_best(&cs, 2, &Functional::LogDet, 10).unwrap();
        assert_eq!(bf.value, f64::NEG_INFINITY);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(74 * 73 / 2, 2), Some(2701 * 2700 / 2));
        assert_eq!(binomial(2701, 10), Some(5_600_654_078_863_236_522_271_048_830));
        assert!((binomial_f64(2701, 10) / 5.600654078863237e27 - 1.0).abs() < 1e-12);
        assert_eq!(binomial(3, 4), Some(0));
        assert_eq!(binomial(10_000, 5_000), None);
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let c = combinations(4, 2);
        assert_eq!(
            c,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn centrality_examples() {
        let c = controllability_centrality(&-Matrix::identity(2, 2)).unwrap();
        assert!(c.iter().all(|v| (v - 0.5).abs() < 1e-15));
        let c = controllability_centrality(&diag(&[-1.0, -2.0])).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn modularity_identity_on_trivial_pairs() {
        let a = Matrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 0.3, -1.5, 0.4, 0.0, -0.2, -1.0]);
        let cands = vec![
            Candidate::new("x", Vector::from_vec(vec![1.0, 0.5, 0.0])),
            Candidate::new("y", Vector::from_vec(vec![0.0, 1.0, -1.0])),
            Candidate::new("z", Vector::from_vec(vec![0.3, 0.0, 1.0])),
        ];
        let cs = CandidateSet::new(a, cands, MetricSpec::Trace).unwrap();
        let fx = cs.subset_value(&[0]).unwrap();
        let fyz = cs.subset_value(&[1, 2]).unwrap();
        let fall = cs.subset_value(&[0, 1, 2]).unwrap();
        assert!((fx + fyz - fall).abs() < 1e-12 * fall);
        let rep = verify_modularity(&cs, 50, 1).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(matches!(verify_modularity(&cs, 0, 1), Err(Error::Domain(_))));
    }
}
