//! Exact best responses, equilibrium certificates and exhaustive enumeration.
//!
//! Against a fixed opponent, the best response splits into two optimal
//! stopping problems: the reaction after the opponent's stop at `t` (a Snell
//! problem in one argument of `U`), and the initial rule, whose stop and
//! continuation rewards at a node account for whether the opponent stops
//! there too. Both are solved exactly by backward induction, so the oracle
//! ranges over the player's whole pure strategy class. Against a behavioral
//! opponent the expected payoff is linear in each of the player's own stop
//! probabilities, so a pure best response is also optimal among mixed ones.

use crate::error::{Error, Result};
use crate::probspace::{EventTree, NodeIx};
use crate::snell::{reaction_value, Direction, Side, Window};
use crate::strategies::{
    payoff_mixed_sim, payoff_pure, response_values, MixedStrategyA, PayoffField, Player, PureProfile, StoppingTime,
    StrategyA, StrategyB,
};

/// Default equilibrium tolerance.
pub const DEFAULT_EPS: f64 = 1e-9;
/// A best response may undercut the candidate by at most this much.
pub const COHERENCE_TOL: f64 = 1e-9;
/// Tolerance for comparing enumerated payoffs.
pub const ENUM_TOL: f64 = 1e-12;
pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Simultaneous moves, mixed type-A strategies for both players.
    Sim,
    /// Player 1 acts first at each stage: type A against type B.
    Seq,
    /// Sequential zero-sum game, `U² = -U¹`.
    ZeroSum,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sim => "sim",
            Mode::Seq => "seq",
            Mode::ZeroSum => "zs",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "sim" => Some(Mode::Sim),
            "seq" => Some(Mode::Seq),
            "zs" | "zero-sum" => Some(Mode::ZeroSum),
            _ => None,
        }
    }

    fn sequential(self) -> bool {
        self != Mode::Sim
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Profile<'a> {
    Sim(&'a MixedStrategyA, &'a MixedStrategyA),
    Seq(&'a StrategyA, &'a StrategyB),
    ZeroSum(&'a StrategyA, &'a StrategyB),
}

impl Profile<'_> {
    pub fn mode(&self) -> Mode {
        match self {
            Profile::Sim(..) => Mode::Sim,
            Profile::Seq(..) => Mode::Seq,
            Profile::ZeroSum(..) => Mode::ZeroSum,
        }
    }

    pub fn values(&self, tree: &EventTree, u: &PayoffField) -> (f64, f64) {
        match *self {
            Profile::Sim(rho, tau) => payoff_mixed_sim(tree, u, rho, tau),
            Profile::Seq(rho, tau) | Profile::ZeroSum(rho, tau) => payoff_pure(tree, u, PureProfile::Seq(rho, tau)),
        }
    }
}

/// A fixed opponent strategy.
#[derive(Clone, Copy, Debug)]
pub enum Opponent<'a> {
    Mixed(&'a MixedStrategyA),
    TypeA(&'a StrategyA),
    TypeB(&'a StrategyB),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Response {
    A(StrategyA),
    B(StrategyB),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub value: f64,
    pub strategy: Response,
}

/// Opponent behavior at each node, as seen by the responding player.
struct Stage<'a> {
    /// Probability that the opponent's initial rule stops at the node.
    opp_stops: Box<dyn Fn(NodeIx) -> f64 + 'a>,
    /// Payoff from stopping alone (the opponent then reacts).
    stop_alone: Vec<crate::probspace::LeveledValue>,
}

/// Exact best response of `player` against `opponent`, optionally restricted
/// to initial rules that do not stop before `floor`.
pub fn best_response(
    tree: &EventTree,
    u: &PayoffField,
    mode: Mode,
    player: Player,
    opponent: Opponent<'_>,
    floor: Option<&StoppingTime>,
) -> Result<BestResponse> {
    let horizon = tree.horizon();
    let allowed = |n: NodeIx| floor.is_none_or(|f| f.has_stopped(n));
    let first_fixed = player == Player::One;

    let (stage, own) = match (mode.sequential(), player, opponent) {
        (false, _, Opponent::Mixed(opp)) => {
            let side = if first_fixed { Side::First } else { Side::Second };
            let own = reaction_value(tree, u, player, side, Window::Strict, Direction::Max)?;
            let stage = Stage {
                opp_stops: Box::new(move |n| opp.initial.stop_prob(n)),
                stop_alone: response_values(tree, u, player, opp.adjust.rules(), first_fixed),
            };
            (stage, own)
        }
        (true, Player::One, Opponent::TypeB(opp)) => {
            let own = reaction_value(tree, u, player, Side::First, Window::Strict, Direction::Max)?;
            let stage = Stage {
                opp_stops: Box::new(move |n| if opp.initial.stops_at(tree, n) { 1.0 } else { 0.0 }),
                stop_alone: response_values(tree, u, player, opp.adjust.rules(), true),
            };
            (stage, own)
        }
        (true, Player::Two, Opponent::TypeA(opp)) => {
            let own = reaction_value(tree, u, player, Side::Second, Window::Inclusive, Direction::Max)?;
            let stage = Stage {
                opp_stops: Box::new(move |n| if opp.initial.stops_at(tree, n) { 1.0 } else { 0.0 }),
                stop_alone: response_values(tree, u, player, opp.adjust.rules(), false),
            };
            (stage, own)
        }
        (seq, p, _) => {
            return Err(Error::ClassMismatch(format!(
                "player {} in {} mode needs a {} opponent",
                p.number(),
                if seq { "sequential" } else { "simultaneous" },
                match (seq, p) {
                    (false, _) => "mixed type-A",
                    (true, Player::One) => "type-B",
                    (true, Player::Two) => "type-A",
                }
            )))
        }
    };

    let mut v = vec![0.0; tree.len()];
    let mut stop = vec![false; tree.len()];
    for level in (0..=horizon).rev() {
        for &n in tree.level(level) {
            let pi = (stage.opp_stops)(n);
            let alone = stage.stop_alone[level].at(n);
            let react = own.values.at(n);
            let next = if level == horizon {
                0.0
            } else {
                tree.one_step(n, |c| v[c.0])
            };
            let (stop_val, cont_val) = match (mode.sequential(), player) {
                (false, _) => (
                    pi * u.value(player, level, level, n) + (1.0 - pi) * alone,
                    pi * react + (1.0 - pi) * next,
                ),
                // a tie goes to player 1 acting first, so player 2 reacts
                (true, Player::One) => (alone, pi * react + (1.0 - pi) * next),
                // player 1 stops here: player 2's own choice is moot
                (true, Player::Two) if pi == 1.0 => (react, react),
                (true, Player::Two) => (alone, next),
            };
            let can_stop = level == horizon || allowed(n);
            let must_stop = level == horizon;
            stop[n.0] = must_stop || (can_stop && stop_val >= cont_val);
            v[n.0] = if stop[n.0] { stop_val } else { cont_val };
        }
    }

    let initial = StoppingTime::from_decisions(tree, |n| stop[n.0]);
    let strategy = match (mode.sequential(), player) {
        (true, Player::Two) => Response::B(StrategyB {
            initial,
            adjust: own.family_b(tree)?,
        }),
        _ => Response::A(StrategyA {
            initial,
            adjust: own.family_a(tree)?,
        }),
    };
    Ok(BestResponse {
        value: v[tree.root().0],
        strategy,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub mode: Mode,
    pub values: (f64, f64),
    pub br_values: (f64, f64),
    /// `br_value - value` per player.
    pub gaps: (f64, f64),
    pub eps: f64,
    pub pass: bool,
}

impl EquilibriumReport {
    /// No best response undercuts the candidate by more than [`COHERENCE_TOL`].
    pub fn coherent(&self) -> bool {
        self.gaps.0 >= -COHERENCE_TOL && self.gaps.1 >= -COHERENCE_TOL
    }
}

/// Evaluates the profile and both players' best responses against it.
pub fn check_equilibrium(
    tree: &EventTree,
    u: &PayoffField,
    profile: Profile<'_>,
    floor: Option<&StoppingTime>,
    eps: f64,
) -> Result<EquilibriumReport> {
    let mode = profile.mode();
    let values = profile.values(tree, u);
    let (br1, br2) = match profile {
        Profile::Sim(rho, tau) => (
            best_response(tree, u, mode, Player::One, Opponent::Mixed(tau), floor)?,
            best_response(tree, u, mode, Player::Two, Opponent::Mixed(rho), floor)?,
        ),
        Profile::Seq(rho, tau) | Profile::ZeroSum(rho, tau) => (
            best_response(tree, u, mode, Player::One, Opponent::TypeB(tau), floor)?,
            best_response(tree, u, mode, Player::Two, Opponent::TypeA(rho), floor)?,
        ),
    };
    let gaps = (br1.value - values.0, br2.value - values.1);
    Ok(EquilibriumReport {
        mode,
        values,
        br_values: (br1.value, br2.value),
        gaps,
        eps,
        pass: gaps.0 <= eps && gaps.1 <= eps,
    })
}

/// Number of stopping times that never stop before `min_level` (saturating).
pub fn count_stopping_times(tree: &EventTree, min_level: usize) -> u128 {
    let mut c = vec![0u128; tree.len()];
    for n in tree.nodes().rev() {
        let kids = tree.children(n);
        c[n.0] = if kids.is_empty() {
            1
        } else {
            let prod = kids.iter().fold(1u128, |acc, k| acc.saturating_mul(c[k.0]));
            prod.saturating_add((tree.time(n) >= min_level) as u128)
        };
    }
    c[tree.root().0]
}

/// All stopping times that never stop before `min_level`.
pub fn enumerate_stopping_times(tree: &EventTree, min_level: usize) -> Vec<StoppingTime> {
    fn sets(tree: &EventTree, n: NodeIx, min_level: usize) -> Vec<Vec<NodeIx>> {
        let kids = tree.children(n);
        if kids.is_empty() {
            return vec![vec![n]];
        }
        let mut out = Vec::new();
        if tree.time(n) >= min_level {
            out.push(vec![n]);
        }
        let mut acc: Vec<Vec<NodeIx>> = vec![Vec::new()];
        for &k in kids {
            let sub = sets(tree, k, min_level);
            acc = acc
                .iter()
                .flat_map(|a| {
                    sub.iter().map(move |s| {
                        let mut v = a.clone();
                        v.extend_from_slice(s);
                        v
                    })
                })
                .collect();
        }
        out.extend(acc);
        out
    }
    sets(tree, tree.root(), min_level.min(tree.horizon()))
        .into_iter()
        .map(|s| StoppingTime::from_stop_nodes(tree, &s))
        .collect()
}

fn class_levels(tree: &EventTree, strict: bool) -> Vec<usize> {
    (0..=tree.horizon())
        .map(|t| if strict { (t + 1).min(tree.horizon()) } else { t })
        .collect()
}

fn class_size(tree: &EventTree, floor: usize, strict: bool) -> u128 {
    class_levels(tree, strict)
        .into_iter()
        .fold(count_stopping_times(tree, floor), |acc, l| {
            acc.saturating_mul(count_stopping_times(tree, l))
        })
}

/// `|{(ρ₀, ρ₁) : ρ₀ ≥ floor}|` for type A.
pub fn class_a_size(tree: &EventTree, floor: usize) -> u128 {
    class_size(tree, floor, true)
}

pub fn class_b_size(tree: &EventTree, floor: usize) -> u128 {
    class_size(tree, floor, false)
}

fn enumerate_class(tree: &EventTree, floor: usize, strict: bool) -> Vec<(StoppingTime, Vec<StoppingTime>)> {
    let initial = enumerate_stopping_times(tree, floor);
    let slots: Vec<Vec<StoppingTime>> = class_levels(tree, strict)
        .into_iter()
        .map(|l| enumerate_stopping_times(tree, l))
        .collect();
    let mut out = Vec::new();
    for init in &initial {
        let mut idx = vec![0usize; slots.len()];
        loop {
            let rules = idx.iter().zip(&slots).map(|(&i, s)| s[i].clone()).collect();
            out.push((init.clone(), rules));
            // odometer over the adjustment slots, last slot fastest
            let mut k = slots.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < slots[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX {
                break;
            }
        }
    }
    out
}

pub fn enumerate_class_a(tree: &EventTree, floor: usize) -> Result<Vec<StrategyA>> {
    enumerate_class(tree, floor, true)
        .into_iter()
        .map(|(initial, rules)| {
            Ok(StrategyA {
                initial,
                adjust: crate::strategies::AdjustmentFamilyA::new(tree, rules)?,
            })
        })
        .collect()
}

pub fn enumerate_class_b(tree: &EventTree, floor: usize) -> Result<Vec<StrategyB>> {
    enumerate_class(tree, floor, false)
        .into_iter()
        .map(|(initial, rules)| {
            Ok(StrategyB {
                initial,
                adjust: crate::strategies::AdjustmentFamilyB::new(tree, rules)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumLimits {
    pub cap: u128,
    /// Initial rules may not stop before this time.
    pub floor: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits {
            cap: DEFAULT_CAP,
            floor: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    A(Vec<StrategyA>),
    B(Vec<StrategyB>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::A(v) => v.len(),
            Column::B(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Every pure profile of the mode's strategy classes with its payoffs.
#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationTable {
    pub mode: Mode,
    pub rows: Vec<StrategyA>,
    pub cols: Column,
    /// Row-major payoffs.
    pub payoffs: Vec<(f64, f64)>,
    /// Pure Nash equilibria as (row, column).
    pub equilibria: Vec<(usize, usize)>,
}

impl EnumerationTable {
    pub fn payoff(&self, row: usize, col: usize) -> (f64, f64) {
        self.payoffs[row * self.cols.len() + col]
    }

    pub fn row_of(&self, s: &StrategyA) -> Option<usize> {
        self.rows.iter().position(|r| r == s)
    }

    pub fn col_of_a(&self, s: &StrategyA) -> Option<usize> {
        match &self.cols {
            Column::A(v) => v.iter().position(|c| c == s),
            Column::B(_) => None,
        }
    }

    pub fn col_of_b(&self, s: &StrategyB) -> Option<usize> {
        match &self.cols {
            Column::B(v) => v.iter().position(|c| c == s),
            Column::A(_) => None,
        }
    }

    pub fn is_equilibrium(&self, row: usize, col: usize) -> bool {
        self.equilibria.binary_search(&(row, col)).is_ok()
    }

    /// Largest unilateral gain from the profile `(row, col)`.
    pub fn deviation_gain(&self, row: usize, col: usize) -> (f64, f64) {
        let (u1, u2) = self.payoff(row, col);
        let best1 = (0..self.rows.len())
            .map(|r| self.payoff(r, col).0)
            .fold(f64::NEG_INFINITY, f64::max);
        let best2 = (0..self.cols.len())
            .map(|c| self.payoff(row, c).1)
            .fold(f64::NEG_INFINITY, f64::max);
        (best1 - u1, best2 - u2)
    }
}

pub fn profile_count(tree: &EventTree, mode: Mode, floor: usize) -> u128 {
    let rows = class_a_size(tree, floor);
    let cols = match mode {
        Mode::Sim => class_a_size(tree, floor),
        Mode::Seq | Mode::ZeroSum => class_b_size(tree, floor),
    };
    rows.saturating_mul(cols)
}

/// Exhaustive table of pure profiles, refusing above `limits.cap` profiles.
pub fn enumerate_oracle(tree: &EventTree, u: &PayoffField, mode: Mode, limits: EnumLimits) -> Result<EnumerationTable> {
    let count = profile_count(tree, mode, limits.floor);
    if count > limits.cap {
        return Err(Error::CapExceeded { count, cap: limits.cap });
    }
    let rows = enumerate_class_a(tree, limits.floor)?;
    let cols = match mode {
        Mode::Sim => Column::A(enumerate_class_a(tree, limits.floor)?),
        Mode::Seq | Mode::ZeroSum => Column::B(enumerate_class_b(tree, limits.floor)?),
    };
    let mut payoffs = Vec::with_capacity(rows.len() * cols.len());
    for r in &rows {
        match &cols {
            Column::A(cs) => payoffs.extend(cs.iter().map(|c| payoff_pure(tree, u, PureProfile::Sim(r, c)))),
            Column::B(cs) => payoffs.extend(cs.iter().map(|c| payoff_pure(tree, u, PureProfile::Seq(r, c)))),
        }
    }
    let mut table = EnumerationTable {
        mode,
        rows,
        cols,
        payoffs,
        equilibria: Vec::new(),
    };
    let ncols = table.cols.len();
    let col_best: Vec<f64> = (0..ncols)
        .map(|c| {
            (0..table.rows.len())
                .map(|r| table.payoff(r, c).0)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    for r in 0..table.rows.len() {
        let row_best = (0..ncols)
            .map(|c| table.payoff(r, c).1)
            .fold(f64::NEG_INFINITY, f64::max);
        for (c, &best) in col_best.iter().enumerate() {
            let (u1, u2) = table.payoff(r, c);
            if u1 >= best - ENUM_TOL && u2 >= row_best - ENUM_TOL {
                table.equilibria.push((r, c));
            }
        }
    }
    Ok(table)
}
