//! Optimal stopping by backward induction (Snell envelopes).

use crate::error::{Error, Result};
use crate::probspace::{EventTree, LeveledValue};
use crate::strategies::{AdjustmentFamilyA, AdjustmentFamilyB, PayoffField, Player, StoppingTime};

/// Absolute tolerance when matching the reward against the envelope.
pub const OPTIMIZER_TOL: f64 = 1e-9;

/// Which stopping times are admissible at query level `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    /// `{σ ≥ t}`
    Inclusive,
    /// `{σ ≥ (t+1) ∧ T}`
    Strict,
}

impl Window {
    pub fn start(self, t: usize, horizon: usize) -> usize {
        match self {
            Window::Inclusive => t,
            Window::Strict => (t + 1).min(horizon),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    pub fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Direction::Max => a.max(b),
            Direction::Min => a.min(b),
        }
    }

    /// Whether `a` is at least as good as `b`.
    pub fn no_worse(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Max => a >= b,
            Direction::Min => a <= b,
        }
    }
}

/// Which argument of `U^i(s, t)` the stopping player controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Optimize `s` in `U(s, t)`: rewards `W_u = U(u, t)`.
    First,
    /// Optimize `t` in `U(s, t)`: rewards `W_u = U(t, u)`.
    Second,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnellResult {
    pub level: usize,
    pub window: Window,
    pub direction: Direction,
    /// Optimal value at each node of the query level.
    pub value: LeveledValue,
    /// Earliest optimal stopping time.
    pub optimizer: StoppingTime,
    /// Envelope on the window levels.
    pub envelope: LeveledValue,
}

/// Solves `opt_{σ in window} E_t[W_σ]` for every level-`t` node.
pub fn snell(
    tree: &EventTree,
    reward: &LeveledValue,
    t: usize,
    window: Window,
    direction: Direction,
) -> Result<SnellResult> {
    let horizon = tree.horizon();
    if t > horizon {
        return Err(Error::LevelMismatch(format!("level {t} beyond horizon {horizon}")));
    }
    let start = window.start(t, horizon);
    let mut w = vec![0.0; tree.len()];
    let mut s = vec![0.0; tree.len()];
    for level in (start..=horizon).rev() {
        for &n in tree.level(level) {
            w[n.0] = reward.value_or_missing(tree, n)?;
            s[n.0] = if level == horizon {
                w[n.0]
            } else {
                direction.pick(w[n.0], tree.one_step(n, |c| s[c.0]))
            };
        }
    }
    let value = LeveledValue::at_level(tree, t, |n| {
        if window == Window::Inclusive || t == horizon {
            s[n.0]
        } else {
            tree.one_step(n, |c| s[c.0])
        }
    });
    let optimizer = StoppingTime::from_decisions(tree, |n| {
        tree.time(n) >= start && (w[n.0] - s[n.0]).abs() <= OPTIMIZER_TOL
    });
    let envelope = LeveledValue::from_fn(tree, start..=horizon, |n| s[n.0]);
    Ok(SnellResult {
        level: t,
        window,
        direction,
        value,
        optimizer,
        envelope,
    })
}

/// One-sided stopping problems in `U^player`, one per opponent stop time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub window: Window,
    /// Value process: at level `t`, the optimal value of problem `t`.
    pub values: LeveledValue,
    pub results: Vec<SnellResult>,
}

impl Reaction {
    pub fn rules(&self) -> Vec<StoppingTime> {
        self.results.iter().map(|r| r.optimizer.clone()).collect()
    }

    pub fn family_a(&self, tree: &EventTree) -> Result<AdjustmentFamilyA> {
        if self.window != Window::Strict {
            return Err(Error::ClassMismatch("type A adjustments need a strict window".into()));
        }
        AdjustmentFamilyA::new(tree, self.rules())
    }

    pub fn family_b(&self, tree: &EventTree) -> Result<AdjustmentFamilyB> {
        AdjustmentFamilyB::new(tree, self.rules())
    }
}

/// The best reaction of `player` to an opponent stop at each `t`.
pub fn reaction_value(
    tree: &EventTree,
    u: &PayoffField,
    player: Player,
    side: Side,
    window: Window,
    direction: Direction,
) -> Result<Reaction> {
    let horizon = tree.horizon();
    let mut results = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let start = window.start(t, horizon);
        let reward = LeveledValue::from_fn(tree, start..=horizon, |n| {
            let level = tree.time(n);
            match side {
                Side::First => u.value(player, level, t, n),
                Side::Second => u.value(player, t, level, n),
            }
        });
        results.push(snell(tree, &reward, t, window, direction)?);
    }
    let values = LeveledValue::full(tree, |n| results[tree.time(n)].value.at(n));
    Ok(Reaction {
        window,
        values,
        results,
    })
}
