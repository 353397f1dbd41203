//! Python bindings for `stopgame-core`.
//!
//! ```python
//! import stopgame
//! game = stopgame.Game.random(horizon=3, branching=2, seed=7)
//! eq = stopgame.solve_seq(game)
//! assert eq.passed and eq.gaps == (0.0, 0.0)
//! ```

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use stopgame_core::verify::{EnumLimits, DEFAULT_CAP, DEFAULT_EPS};
use stopgame_core::{
    certified_saddle, enumerate_oracle, generate_random_game, seq_equilibrium, sim_equilibrium, EquilibriumReport,
    Error, GameFile, Mode, Player, ProfileFile,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    Mode::parse(mode).ok_or_else(|| PyValueError::new_err(format!("unknown mode {mode:?}; expected sim, seq or zs")))
}

/// A validated game: an event tree with payoff fields for both players.
///
/// A document holding only player-1 sections is a zero-sum game and can
/// only be passed to `solve_zs` and to zero-sum `verify`/`enumerate`.
#[pyclass(frozen, module = "stopgame")]
struct Game {
    file: GameFile,
    general: Option<stopgame_core::Game>,
    zero_sum: Option<stopgame_core::Game>,
}

impl Game {
    fn from_file(file: GameFile) -> PyResult<Game> {
        let general = file.to_game(false);
        let zero_sum = file.to_game(true).ok();
        if let (Err(e), None) = (&general, &zero_sum) {
            return Err(py_err(e.clone()));
        }
        Ok(Game {
            general: general.ok(),
            zero_sum,
            file,
        })
    }

    fn general(&self) -> PyResult<&stopgame_core::Game> {
        match &self.general {
            Some(g) => Ok(g),
            None => Err(py_err(self.file.to_game(false).unwrap_err())),
        }
    }

    fn zero_sum(&self) -> PyResult<&stopgame_core::Game> {
        match &self.zero_sum {
            Some(g) => Ok(g),
            None => Err(py_err(self.file.to_game(true).unwrap_err())),
        }
    }

    fn for_mode(&self, mode: Mode) -> PyResult<&stopgame_core::Game> {
        if mode == Mode::ZeroSum {
            self.zero_sum()
        } else {
            self.general()
        }
    }

    fn any(&self) -> &stopgame_core::Game {
        self.general
            .as_ref()
            .or(self.zero_sum.as_ref())
            .expect("validated on construction")
    }
}

#[pymethods]
impl Game {
    /// Parse a game from its JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Game> {
        Game::from_file(GameFile::parse(text).map_err(py_err)?)
    }

    /// Load a game from a JSON file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Game> {
        Game::from_file(GameFile::load(&path).map_err(py_err)?)
    }

    /// Seeded random game with uniform branching and payoffs uniform in `[lo, hi]`.
    #[staticmethod]
    #[pyo3(signature = (horizon, branching, seed, lo=-1.0, hi=1.0))]
    fn random(horizon: usize, branching: usize, seed: u64, lo: f64, hi: f64) -> PyResult<Game> {
        if branching == 0 || !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(PyValueError::new_err("need branching >= 1 and finite lo <= hi"));
        }
        Game::from_file(generate_random_game(horizon, branching, seed, (lo, hi)))
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.file.name.clone()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.file.horizon
    }

    /// Node ids in tree order.
    #[getter]
    fn nodes(&self) -> Vec<String> {
        let tree = &self.any().tree;
        tree.nodes().map(|n| tree.id(n).to_string()).collect()
    }

    /// Time of a node.
    fn time(&self, node: &str) -> PyResult<usize> {
        let tree = &self.any().tree;
        let n = tree
            .lookup(node)
            .ok_or_else(|| PyValueError::new_err(format!("unknown node {node}")))?;
        Ok(tree.time(n))
    }

    /// `U^player(s, t)` at `node`, which must lie at level `max(s, t)` or below.
    fn payoff(&self, player: u8, s: usize, t: usize, node: &str) -> PyResult<f64> {
        let g = self.any();
        let p = match player {
            1 => Player::One,
            2 => Player::Two,
            _ => return Err(PyValueError::new_err("player must be 1 or 2")),
        };
        let n = g
            .tree
            .lookup(node)
            .ok_or_else(|| PyValueError::new_err(format!("unknown node {node}")))?;
        if s.max(t) > g.tree.horizon() || g.tree.time(n) < s.max(t) {
            return Err(PyValueError::new_err(format!("U({s},{t}) is not known at {node}")));
        }
        Ok(g.payoffs.value(p, s, t, g.tree.ancestor_at(n, s.max(t))))
    }

    fn __repr__(&self) -> String {
        let g = self.any();
        format!(
            "Game(name={:?}, horizon={}, nodes={})",
            self.file.name.as_deref().unwrap_or(""),
            g.tree.horizon(),
            g.tree.len()
        )
    }
}

/// Outcome of a solve or verify call.
#[pyclass(frozen, get_all, module = "stopgame")]
struct Solution {
    /// "sim", "seq" or "zs".
    mode: String,
    values: (f64, f64),
    best_responses: (f64, f64),
    gaps: (f64, f64),
    eps: f64,
    /// Both gaps within `eps`.
    passed: bool,
    /// Internal consistency defects; empty on a healthy run.
    defects: Vec<String>,
    /// Zero-sum game value, for `solve_zs`.
    value: Option<f64>,
    /// For `solve_seq`: "threshold" or "backward induction".
    assembly: Option<String>,
    /// The profile as a JSON document accepted by `verify`.
    profile: String,
}

impl Solution {
    fn new(r: &EquilibriumReport, defects: Vec<String>, profile: String) -> Solution {
        Solution {
            mode: r.mode.name().to_string(),
            values: r.values,
            best_responses: r.br_values,
            gaps: r.gaps,
            eps: r.eps,
            passed: r.pass,
            defects,
            value: None,
            assembly: None,
            profile,
        }
    }
}

#[pymethods]
impl Solution {
    /// Passed and free of defects.
    #[getter]
    fn certified(&self) -> bool {
        self.passed && self.defects.is_empty()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(mode={:?}, values={:?}, gaps={:?}, certified={})",
            self.mode,
            self.values,
            self.gaps,
            if self.certified() { "True" } else { "False" }
        )
    }
}

/// Mixed equilibrium of the simultaneous-move game.
#[pyfunction]
#[pyo3(signature = (game, eps=DEFAULT_EPS))]
fn solve_sim(game: &Game, eps: f64) -> PyResult<Solution> {
    let g = game.general()?;
    let eq = sim_equilibrium(&g.tree, &g.payoffs, eps).map_err(py_err)?;
    let profile = ProfileFile::sim(&g.tree, &eq.rho, &eq.tau).to_json();
    Ok(Solution::new(&eq.report, eq.defects, profile))
}

/// Pure equilibrium of the sequential-move game.
#[pyfunction]
#[pyo3(signature = (game, eps=DEFAULT_EPS))]
fn solve_seq(game: &Game, eps: f64) -> PyResult<Solution> {
    let g = game.general()?;
    let eq = seq_equilibrium(&g.tree, &g.payoffs, eps).map_err(py_err)?;
    let profile = ProfileFile::seq(&g.tree, Mode::Seq, &eq.rho_star, &eq.tau_star, None).to_json();
    let mut out = Solution::new(&eq.report, eq.defects, profile);
    out.assembly = Some(eq.assembly.name().to_string());
    Ok(out)
}

/// Saddle point of the zero-sum game `U² = -U¹` started at time `sigma`.
#[pyfunction]
#[pyo3(signature = (game, sigma=0, eps=DEFAULT_EPS))]
fn solve_zs(game: &Game, sigma: usize, eps: f64) -> PyResult<Solution> {
    let g = game.zero_sum()?;
    let z = certified_saddle(&g.tree, &g.payoffs, sigma, eps).map_err(py_err)?;
    let profile = ProfileFile::seq(
        &g.tree,
        Mode::ZeroSum,
        &z.saddle.rho_star,
        &z.saddle.tau_star,
        Some(sigma),
    )
    .to_json();
    let mut out = Solution::new(&z.report, z.defects, profile);
    out.value = Some(z.saddle.value);
    Ok(out)
}

/// Check a profile document (as written by the solvers) in `mode`.
#[pyfunction]
#[pyo3(signature = (game, profile, mode, eps=DEFAULT_EPS))]
fn verify(game: &Game, profile: &str, mode: &str, eps: f64) -> PyResult<Solution> {
    let mode = parse_mode(mode)?;
    let g = game.for_mode(mode)?;
    let doc = ProfileFile::parse(profile).map_err(py_err)?;
    let report = doc.check(&g.tree, &g.payoffs, mode, eps).map_err(py_err)?;
    Ok(Solution::new(&report, Vec::new(), doc.to_json()))
}

/// Exhaustive table of pure profiles.
///
/// Returns a dict with `rows` and `cols` (strategy counts), `payoffs`
/// (row-major list of `(u1, u2)`) and `equilibria` (list of `(row, col)`).
#[pyfunction]
#[pyo3(signature = (game, mode, cap=DEFAULT_CAP))]
fn enumerate<'py>(py: Python<'py>, game: &Game, mode: &str, cap: u128) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let mode = parse_mode(mode)?;
    let g = game.for_mode(mode)?;
    let table = enumerate_oracle(&g.tree, &g.payoffs, mode, EnumLimits { cap, floor: 0 }).map_err(py_err)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("mode", mode.name())?;
    out.set_item("rows", table.rows.len())?;
    out.set_item("cols", table.cols.len())?;
    out.set_item("payoffs", table.payoffs.clone())?;
    out.set_item("equilibria", table.equilibria.clone())?;
    Ok(out)
}

/// Nash equilibrium of a 2×2 bimatrix game with row/column 0 = stop.
///
/// Returns `(p, q, value1, value2, kind)` with `p`, `q` the stop probabilities.
#[pyfunction]
fn stage_nash_2x2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> (f64, f64, f64, f64, String) {
    let s = stopgame_core::stage_nash_2x2(a, b);
    (s.p, s.q, s.value1, s.value2, format!("{:?}", s.kind).to_lowercase())
}

#[pymodule]
fn stopgame(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve_sim, m)?)?;
    m.add_function(wrap_pyfunction!(solve_seq, m)?)?;
    m.add_function(wrap_pyfunction!(solve_zs, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(stage_nash_2x2, m)?)?;
    m.add("DEFAULT_EPS", DEFAULT_EPS)?;
    Ok(())
}
