use std::path::Path;
use std::process::ExitCode;

use clap::ValueEnum;

use serde::Serialize;

use gramplace::gramian::LyapunovSolver;
use gramplace::metrics::h2_norm;
use gramplace::models::problem::GridEntry;
use gramplace::models::{random_hurwitz_system, GridParams, Problem, ProblemFile};
use gramplace::ode::Tolerance;
use gramplace::placement::{
    binomial, brute_force_best, centrality_with_margin, score_candidates, Functional, ScoredSet,
};
use gramplace::{
    simulate, synthesize_min_energy_input, verify_modularity, CandidateSet, Error, Matrix, MetricKind, MetricSpec,
    Result, Vector,
};

use crate::report::{emit, num, sha256_hex, Csv, RunReport, Timer};
use crate::{Cli, Command, Common, GenCommand, MetricArg, WeightArg};

pub fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.common.threads {
        if threads == 0 {
            return Err(Error::Domain("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    }
    if !(cli.common.margin >= 0.0 && cli.common.margin.is_finite()) {
        return Err(Error::Domain(format!(
            "--margin must be a finite non-negative number, got {}",
            cli.common.margin
        )));
    }
    let c = &cli.common;
    match &cli.command {
        Command::Rank { problem } => rank(c, problem),
        Command::Select { problem, k } => select(c, problem, *k),
        Command::Centrality { problem } => centrality(c, problem),
        Command::Verify { problem, trials, seed } => verify(c, problem, *trials, *seed),
        Command::Bruteforce { problem, k, cap } => bruteforce(c, problem, *k, *cap),
        Command::Synthesize {
            problem,
            ids,
            t,
            xf,
            samples,
        } => synthesize(c, problem, ids, *t, xf, *samples),
        Command::Gen(g) => generate(c, g),
    }
}

struct Loaded {
    problem: Problem,
    digest: String,
}

fn load(timer: &mut Timer, path: &Path, margin: f64) -> Result<Loaded> {
    timer.time("load", || {
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let text =
            std::str::from_utf8(&bytes).map_err(|e| Error::Parse(format!("{}: not UTF-8: {e}", path.display())))?;
        let mut problem = ProblemFile::parse(text)?.build()?;
        problem.set = problem.set.with_margin(margin);
        Ok(Loaded {
            problem,
            digest: sha256_hex(&bytes),
        })
    })
}

fn weight_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let c = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || c == 0 || rows.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension(format!(
            "{}: weight must be a non-empty rectangular array",
            path.display()
        )));
    }
    Ok(Matrix::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

fn frequency_weight(problem: &Problem, kind: MetricKind) -> Result<Matrix> {
    let grid = problem
        .grid
        .as_ref()
        .ok_or_else(|| Error::Domain("--weight frequencies needs a problem with a `grid` block".into()))?;
    let s = grid.frequency_selector();
    Ok(match kind {
        MetricKind::WeightedTrace => s.transpose() * s,
        _ => s,
    })
}

/// The linear metric requested on the command line, or the file's own.
fn resolve_metric(c: &Common, problem: &Problem) -> Result<Option<MetricSpec>> {
    if c.weight.is_some() && c.weight_file.is_some() {
        return Err(Error::Domain("give --weight or --weight-file, not both".into()));
    }
    let kind = match c.metric {
        None if c.weight.is_some() => MetricKind::H2,
        None if c.weight_file.is_some() => {
            return Err(Error::Domain(
                "--weight-file needs --metric weighted or --metric h2".into(),
            ))
        }
        None => return Ok(None),
        Some(MetricArg::Trace) => MetricKind::Trace,
        Some(MetricArg::Weighted) => MetricKind::WeightedTrace,
        Some(MetricArg::H2) => MetricKind::H2,
        Some(_) => return Ok(None),
    };
    let weight = match (c.weight, &c.weight_file) {
        (Some(WeightArg::Frequencies), _) => Some(frequency_weight(problem, kind)?),
        (None, Some(path)) => Some(weight_matrix(path)?),
        (None, None) => None,
    };
    let spec = match (kind, weight) {
        (MetricKind::Trace, None) => MetricSpec::Trace,
        (MetricKind::Trace, Some(_)) => return Err(Error::Domain("--metric trace takes no weight".into())),
        (MetricKind::WeightedTrace, Some(w)) => MetricSpec::WeightedTrace(w),
        (MetricKind::H2, Some(w)) => MetricSpec::H2(w),
        (k, None) if problem.set.metric().kind() == k => problem.set.metric().clone(),
        (k, None) => {
            return Err(Error::Domain(format!(
                "metric {} needs --weight-file or --weight, and the problem file has no such weight",
                k.name()
            )))
        }
    };
    Ok(Some(spec))
}

/// Candidate set under the modular metric selected by the flags.
fn modular_set(c: &Common, problem: &Problem) -> Result<CandidateSet> {
    if let Some(m @ (MetricArg::MinEig | MetricArg::LogDet | MetricArg::AvgEnergy)) = c.metric {
        return Err(Error::Domain(format!(
            "metric {} is not modular; only `bruteforce` accepts it",
            m.to_possible_value()
                .map(|v| v.get_name().to_string())
                .unwrap_or_default()
        )));
    }
    match resolve_metric(c, problem)? {
        Some(spec) => problem.set.with_metric(spec),
        None => Ok(problem.set.clone()),
    }
}

fn finish<T: Serialize>(c: &Common, timer: Timer, digest: String, results: T, csv: Option<Csv>) -> Result<()> {
    let report = RunReport::new(digest, timer.into_phases(), results);
    match csv {
        Some(table) if c.csv => {
            log::info!("input {}", report.input_digest);
            emit(c.out.as_deref(), &table.render())
        }
        _ => emit(c.out.as_deref(), &report.to_json()?),
    }
}

#[derive(Debug, Serialize)]
struct RankRow {
    rank: usize,
    id: String,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    h2_norm: Option<f64>,
}

fn rows(ranked: &[gramplace::ScoredCandidate], h2: bool) -> Vec<RankRow> {
    ranked
        .iter()
        .enumerate()
        .map(|(i, s)| RankRow {
            rank: i + 1,
            id: s.id.clone(),
            score: s.score,
            h2_norm: h2.then(|| h2_norm(s.score)),
        })
        .collect()
}

fn rank_csv(rows: &[RankRow], h2: bool) -> Csv {
    let mut header = vec!["rank", "id", "score"];
    if h2 {
        header.push("h2_norm");
    }
    let mut csv = Csv::new(header);
    for r in rows {
        let mut line = vec![r.rank.to_string(), r.id.clone(), num(r.score)];
        if let Some(n) = r.h2_norm {
            line.push(num(n));
        }
        csv.push(line);
    }
    csv
}

#[derive(Debug, Serialize)]
struct RankResults {
    metric: &'static str,
    states: usize,
    candidates: usize,
    ranked: Vec<RankRow>,
}

fn rank(c: &Common, path: &Path) -> Result<ExitCode> {
    let mut timer = Timer::default();
    let loaded = load(&mut timer, path, c.margin)?;
    let cs = modular_set(c, &loaded.problem)?;
    let scores = timer.time("solve", || score_candidates(&cs))?;
    let scored = timer.time("sort", || ScoredSet::from_scores(&cs, scores));
    let h2 = cs.metric().kind() == MetricKind::H2;
    let results = RankResults {
        metric: cs.metric().kind().name(),
        states: cs.dim(),
        candidates: cs.len(),
        ranked: rows(scored.ranked(), h2),
    };
    let csv = rank_csv(&results.ranked, h2);
    finish(c, timer, loaded.digest, results, Some(csv))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct SelectResults {
    metric: &'static str,
    k: usize,
    selected: Vec<RankRow>,
    total_score: f64,
    combined_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_h2_norm: Option<f64>,
    ties: Vec<Vec<String>>,
}

fn select(c: &Common, path: &Path, k: usize) -> Result<ExitCode> {
    let mut timer = Timer::default();
    let loaded = load(&mut timer, path, c.margin)?;
    let cs = modular_set(c, &loaded.problem)?;
    if k == 0 || k > cs.len() {
        return Err(Error::Domain(format!("--k must be in 1..={}, got {k}", cs.len())));
    }
    let scores = timer.time("solve", || score_candidates(&cs))?;
    let scored = timer.time("sort", || ScoredSet::from_scores(&cs, scores));
    let result = timer.time("combine", || scored.select(k))?;
    let h2 = cs.metric().kind() == MetricKind::H2;
    let results = SelectResults {
        metric: cs.metric().kind().name(),
        k,
        selected: rows(&result.selected, h2),
        total_score: result.total_score,
        combined_score: result.combined_score,
        total_h2_norm: h2.then(|| h2_norm(result.total_score)),
        ties: result.ties,
    };
    for group in &results.ties {
        log::warn!("tie at the selection boundary: {}", group.join(", "));
    }
    let csv = rank_csv(&results.selected, h2);
    finish(c, timer, loaded.digest, results, Some(csv))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct CentralityRow {
    node: usize,
    label: String,
    score: f64,
}

#[derive(Debug, Serialize)]
struct CentralityResults {
    nodes: Vec<CentralityRow>,
    sum: f64,
    /// `tr(W)` for `B = I`, which the node scores must sum to.
    full_input_trace: f64,
    relative_gap: f64,
}

fn state_labels(problem: &Problem) -> Vec<String> {
    let n = problem.set.dim();
    match &problem.grid {
        Some(g) => g
            .bus_ids
            .iter()
            .flat_map(|id| [format!("{id}.angle"), format!("{id}.frequency")])
            .collect(),
        None => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

fn centrality(c: &Common, path: &Path) -> Result<ExitCode> {
    let mut timer = Timer::default();
    let loaded = load(&mut timer, path, c.margin)?;
    let a = loaded.problem.set.a();
    let scores = timer.time("solve", || centrality_with_margin(a, c.margin))?;
    let full = timer.time("identity", || -> Result<f64> {
        let solver = LyapunovSolver::with_margin(a, c.margin)?;
        Ok(solver.solve_factored(&Matrix::identity(a.nrows(), a.nrows()))?.trace())
    })?;
    let sum: f64 = scores.iter().sum();
    let labels = state_labels(&loaded.problem);
    let results = CentralityResults {
        nodes: scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (s, label))| CentralityRow {
                node: i + 1,
                label,
                score: *s,
            })
            .collect(),
        sum,
        full_input_trace: full,
        relative_gap: (sum - full).abs() / full.abs().max(f64::MIN_POSITIVE),
    };
    let mut csv = Csv::new(["node", "label", "score"]);
    for r in &results.nodes {
        csv.push(vec![r.node.to_string(), r.label.clone(), num(r.score)]);
    }
    finish(c, timer, loaded.digest, results, Some(csv))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct VerifyResults {
    metric: &'static str,
    seed: u64,
    #[serde(flatten)]
    report: gramplace::ModularityReport,
}

fn verify(c: &Common, path: &Path, trials: usize, seed: u64) -> Result<ExitCode> {
    let mut timer = Timer::default();
    let loaded = load(&mut timer, path, c.margin)?;
    let cs = modular_set(c, &loaded.problem)?;
    let report = timer.time("verify", || verify_modularity(&cs, trials, seed))?;
    let passed = report.passed;
    if passed {
        log::info!("modular identity holds: max violation {:.3e}", report.max_violation);
    } else {
        log::error!(
            "modular identity violated in {} of {} trials: max violation {:.3e} > {:.1e}",
            report.failures,
            report.trials,
            report.max_violation,
            report.threshold
        );
    }
    let mut csv = Csv::new([
        "metric",
        "trials",
        "max_violation",
        "max_abs_violation",
        "threshold",
        "failures",
        "passed",
    ]);
    csv.push(vec![
        cs.metric().kind().name().to_string(),
        report.trials.to_string(),
        num(report.max_violation),
        num(report.max_abs_violation),
        num(report.threshold),
        report.failures.to_string(),
        report.passed.to_string(),
    ]);
    let results = VerifyResults {
        metric: cs.metric().kind().name(),
        seed,
        report,
    };
    finish(c, timer, loaded.digest, results, Some(csv))?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

#[derive(Debug, Serialize)]
struct BruteForceResults {
    functional: &'static str,
    k: usize,
    subset: Vec<String>,
    value: f64,
    evaluated: u64,
}

fn bruteforce(c: &Common, path: &Path, k: usize, cap: u64) -> Result<ExitCode> {
    let mut timer = Timer::default();
    let loaded = load(&mut timer, path, c.margin)?;
    let (cs, functional) = match c.metric {
        Some(MetricArg::MinEig) => (loaded.problem.set.clone(), Functional::MinEigenvalue),
        Some(MetricArg::LogDet) => (loaded.problem.set.clone(), Functional::LogDet),
        Some(MetricArg::AvgEnergy) => (loaded.problem.set.clone(), Functional::NegAverageEnergy),
        _ => {
            let cs = modular_set(c, &loaded.problem)?;
            let f = Functional::Metric(cs.metric().clone());
            (cs, f)
        }
    };
    let best = timer.time("enumerate", || brute_force_best(&cs, k, &functional, cap));
    let best = match best {
        Err(e @ Error::EnumerationTooLarge { m, k, .. }) => {
            match binomial(m, k) {
                Some(exact) => eprintln!("C({m}, {k}) = {exact}"),
                None => eprintln!("C({m}, {k}) exceeds 2^128"),
            }
            return Err(e);
        }
        other => other?,
    };
    let results = BruteForceResults {
        functional: functional.name(),
        k,
        subset: best.subset,
        value: best.value,
        evaluated: best.evaluated,
    };
    let mut csv = Csv::new(["functional", "k", "value", "evaluated", "subset"]);
    csv.push(vec![
        results.functional.to_string(),
        k.to_string(),
        num(results.value),
        results.evaluated.to_string(),
        results.subset.join(" "),
    ]);
    finish(c, timer, loaded.digest, results, Some(csv))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct Sample {
    t: f64,
    u: Vec<f64>,
    x: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SynthesisResults {
    ids: Vec<String>,
    horizon: f64,
    target: Vec<f64>,
    /// `x_fᵀ·W(t)⁻¹·x_f`
    energy: f64,
    /// `∫‖u‖²` along the simulated trajectory.
    simulated_energy: f64,
    terminal_error: f64,
    samples: Vec<Sample>,
}

fn synthesize(c: &Common, path: &Path, ids: &[String], t: f64, xf: &[f64], samples: usize) -> Result<ExitCode> {
    let mut timer = Timer::default();
    let loaded = load(&mut timer, path, c.margin)?;
    let cs = &loaded.problem.set;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("--t must be positive and finite, got {t}")));
    }
    if xf.len() != cs.dim() {
        return Err(Error::Dimension(format!(
            "--xf has {} entries, the state has {}",
            xf.len(),
            cs.dim()
        )));
    }
    if xf.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("--xf entries must be finite".into()));
    }
    let indices = ids
        .iter()
        .map(|id| {
            cs.index_of(id)
                .ok_or_else(|| Error::Domain(format!("unknown candidate id {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let b = cs.input_matrix(&indices);
    let target = Vector::from_column_slice(xf);
    let (plan, traj) = timer.time("synthesize", || {
        synthesize_min_energy_input(cs.a(), &b, t, &target, samples)
    })?;
    let sim = timer.time("simulate", || simulate(&plan, &traj, Tolerance::default()))?;
    log::info!(
        "terminal error {:.3e}, energy {:.6e} (simulated {:.6e})",
        sim.terminal_error,
        plan.energy(),
        sim.energy
    );
    let results = SynthesisResults {
        ids: ids.to_vec(),
        horizon: t,
        target: xf.to_vec(),
        energy: plan.energy(),
        simulated_energy: sim.energy,
        terminal_error: sim.terminal_error,
        samples: traj
            .times
            .iter()
            .zip(&traj.inputs)
            .zip(&sim.states)
            .map(|((t, u), x)| Sample {
                t: *t,
                u: u.iter().copied().collect(),
                x: x.iter().copied().collect(),
            })
            .collect(),
    };
    let mut header = vec!["t".to_string()];
    header.extend(ids.iter().map(|id| format!("u_{id}")));
    header.extend((1..=cs.dim()).map(|i| format!("x{i}")));
    let mut csv = Csv::new(header);
    for s in &results.samples {
        let mut line = vec![num(s.t)];
        line.extend(s.u.iter().map(|v| num(*v)));
        line.extend(s.x.iter().map(|v| num(*v)));
        csv.push(line);
    }
    finish(c, timer, loaded.digest, results, Some(csv))?;
    Ok(ExitCode::SUCCESS)
}

fn generate(c: &Common, g: &GenCommand) -> Result<ExitCode> {
    let file = match *g {
        GenCommand::Ring {
            buses,
            chords,
            seed,
            inertia,
            damping,
            susceptance,
            grounding,
        } => {
            let params = GridParams {
                inertia,
                damping,
                susceptance,
                grounding,
            };
            let file = ProblemFile::from_grid(GridEntry::ring(buses, chords, seed, params), None);
            // validate before writing
            file.build()?;
            file
        }
        GenCommand::Random { n, m, density, seed } => {
            let sys = random_hurwitz_system(n, m, density, seed)?;
            ProblemFile::from_parts(&sys.a, &sys.candidates(), None)
        }
    };
    let mut text = file.to_json();
    text.push('\n');
    log::info!("generated problem {}", sha256_hex(text.as_bytes()));
    emit(c.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
