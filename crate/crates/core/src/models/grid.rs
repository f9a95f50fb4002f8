//! Linearized swing-equation model of a power grid.
//!
//! Per bus `i` with inertia `Mᵢ`, damping `Dᵢ` and grounding stiffness `gᵢ`:
//!
//! ```text
//! dθᵢ/dt = ωᵢ
//! Mᵢ·dωᵢ/dt = −Dᵢ·ωᵢ − gᵢ·θᵢ − Σⱼ bᵢⱼ·(θᵢ − θⱼ)
//! ```
//!
//! States are interleaved `(θ₁, ω₁, θ₂, ω₂, …)`.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{spectral_abscissa, Matrix, Vector, DEFAULT_STABILITY_MARGIN};
use crate::placement::Candidate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub inertia: f64,
    pub damping: f64,
    #[serde(default)]
    pub grounding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub susceptance: f64,
}

/// Uniform parameters for generated topologies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub inertia: f64,
    pub damping: f64,
    pub susceptance: f64,
    pub grounding: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            inertia: 1.0,
            damping: 0.5,
            susceptance: 1.0,
            grounding: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    buses: Vec<Bus>,
    lines: Vec<Line>,
}

impl GridModel {
    /// Validates bus parameters, line endpoints and connectivity.
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate bus id {:?}", b.id)));
            }
            if !(b.inertia > 0.0 && b.inertia.is_finite()) || !(b.damping > 0.0 && b.damping.is_finite()) {
                return Err(Error::Domain(format!(
                    "bus {:?} needs positive inertia and damping, got M={} D={}",
                    b.id, b.inertia, b.damping
                )));
            }
            if !(b.grounding >= 0.0 && b.grounding.is_finite()) {
                return Err(Error::Domain(format!(
                    "bus {:?} has negative grounding {}",
                    b.id, b.grounding
                )));
            }
        }
        if buses.is_empty() {
            return Err(Error::Domain("grid has no buses".into()));
        }
        let mut pairs = BTreeSet::new();
        for l in &lines {
            let (Some(&i), Some(&j)) = (index.get(&l.from), index.get(&l.to)) else {
                return Err(Error::Domain(format!(
                    "line {}-{} references an unknown bus",
                    l.from, l.to
                )));
            };
            if i == j {
                return Err(Error::Domain(format!("self-loop at bus {:?}", l.from)));
            }
            if !pairs.insert((i.min(j), i.max(j))) {
                return Err(Error::Domain(format!("duplicate line {}-{}", l.from, l.to)));
            }
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                return Err(Error::Domain(format!(
                    "line {}-{} needs positive susceptance, got {}",
                    l.from, l.to, l.susceptance
                )));
            }
        }
        let grid = GridModel { buses, lines };
        grid.check_connected(&index)?;
        Ok(grid)
    }

    /// `n` buses on a ring with uniform parameters.
    pub fn ring(n: usize, params: GridParams) -> Result<Self> {
        Self::ring_with_chords(n, 0, 0, params)
    }

    /// Ring plus `chords` extra lines between seeded random non-adjacent bus
    /// pairs.
    pub fn ring_with_chords(n: usize, chords: usize, seed: u64, params: GridParams) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("a ring needs at least 2 buses, got {n}")));
        }
        let width = n.to_string().len();
        let id = |i: usize| format!("{:0width$}", i + 1);
        let buses = (0..n)
            .map(|i| Bus {
                id: id(i),
                inertia: params.inertia,
                damping: params.damping,
                grounding: params.grounding,
            })
            .collect();
        let mut edges = BTreeSet::new();
        let ring_edges = if n == 2 { 1 } else { n };
        for i in 0..ring_edges {
            let j = (i + 1) % n;
            edges.insert((i.min(j), i.max(j)));
        }
        let free = n * (n - 1) / 2 - edges.len();
        if chords > free {
            return Err(Error::Domain(format!(
                "only {free} chords fit on a {n}-bus ring, asked for {chords}"
            )));
        }
        let mut ordered: Vec<(usize, usize)> = edges.iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while ordered.len() < ring_edges + chords {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j && edges.insert((i.min(j), i.max(j))) {
                ordered.push((i.min(j), i.max(j)));
            }
        }
        let lines = ordered
            .into_iter()
            .map(|(i, j)| Line {
                from: id(i),
                to: id(j),
                susceptance: params.susceptance,
            })
            .collect();
        Self::new(buses, lines)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    fn check_connected(&self, index: &HashMap<String, usize>) -> Result<()> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            let (i, j) = (index[&l.from], index[&l.to]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            None => Ok(()),
            Some(i) => Err(Error::Topology(format!(
                "bus {:?} is not reachable from bus {:?}",
                self.buses[i].id, self.buses[0].id
            ))),
        }
    }

    /// Weighted graph Laplacian in bus order.
    pub fn laplacian(&self) -> Matrix {
        let n = self.buses.len();
        let index: HashMap<&str, usize> = self.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
        let mut l = Matrix::zeros(n, n);
        for line in &self.lines {
            let (i, j) = (index[line.from.as_str()], index[line.to.as_str()]);
            l[(i, j)] -= line.susceptance;
            l[(j, i)] -= line.susceptance;
            l[(i, i)] += line.susceptance;
            l[(j, j)] += line.susceptance;
        }
        l
    }
}

/// State indices of a bus in the linearized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusStates {
    pub angle: usize,
    pub frequency: usize,
}

/// Linear dynamics `ẋ = A·x` of a grid about zero angle differences.
#[derive(Debug, Clone)]
pub struct LinearizedGrid {
    pub a: Matrix,
    pub bus_ids: Vec<String>,
    pub inertia: Vec<f64>,
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
}

impl LinearizedGrid {
    pub fn n_buses(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn states_of(&self, bus: usize) -> BusStates {
        BusStates {
            angle: 2 * bus,
            frequency: 2 * bus + 1,
        }
    }

    pub fn bus_index_map(&self) -> HashMap<String, BusStates> {
        self.bus_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), self.states_of(i)))
            .collect()
    }

    /// `I_N ⊗ [0, 1]`: output matrix picking every bus frequency.
    pub fn frequency_selector(&self) -> Matrix {
        let n = self.n_buses();
        let mut c = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            c[(i, self.states_of(i).frequency)] = 1.0;
        }
        c
    }
}

/// Assembles the linearized swing dynamics and records whether they are
/// Hurwitz, without failing when they are not.
pub fn assemble_swing_matrix(grid: &GridModel) -> Result<LinearizedGrid> {
    let n = grid.buses.len();
    let lap = grid.laplacian();
    let mut a = Matrix::zeros(2 * n, 2 * n);
    for (i, bus) in grid.buses.iter().enumerate() {
        let (th, om) = (2 * i, 2 * i + 1);
        a[(th, om)] = 1.0;
        a[(om, om)] = -bus.damping / bus.inertia;
        for j in 0..n {
            let coupling = lap[(i, j)] + if i == j { bus.grounding } else { 0.0 };
            if coupling != 0.0 {
                a[(om, 2 * j)] = -coupling / bus.inertia;
            }
        }
    }
    let abscissa = spectral_abscissa(&a)?;
    Ok(LinearizedGrid {
        a,
        bus_ids: grid.buses.iter().map(|b| b.id.clone()).collect(),
        inertia: grid.buses.iter().map(|b| b.inertia).collect(),
        hurwitz: abscissa < -DEFAULT_STABILITY_MARGIN,
        spectral_abscissa: abscissa,
    })
}

/// Linearized swing dynamics, required to be Hurwitz.
pub fn build_swing_matrix(grid: &GridModel) -> Result<LinearizedGrid> {
    let lin = assemble_swing_matrix(grid)?;
    if !lin.hurwitz {
        return Err(Error::Stability {
            max_real: lin.spectral_abscissa,
            margin: DEFAULT_STABILITY_MARGIN,
        });
    }
    Ok(lin)
}

/// One balanced injection candidate per unordered bus pair `(i, j)`:
/// `+1/Mᵢ` on bus `i`'s frequency and `−1/Mⱼ` on bus `j`'s.
pub fn hvdc_candidates(grid: &LinearizedGrid) -> Vec<Candidate> {
    let n = grid.n_buses();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut col = Vector::zeros(2 * n);
            col[grid.states_of(i).frequency] = 1.0 / grid.inertia[i];
            col[grid.states_of(j).frequency] = -1.0 / grid.inertia[j];
            out.push(Candidate::new(format!("{}-{}", grid.bus_ids[i], grid.bus_ids[j]), col));
        }
    }
    out
}
