//! Stopping times, strategy classes and exact payoff evaluation.
//!
//! A strategy is a pair (initial stopping rule, adjustment family). The
//! adjustment family says how a player re-plans after observing the other
//! player stop at time `t`: type A adjustments must stop strictly later
//! (at `(t+1) ∧ T` or after), type B adjustments may stop at `t` itself.
//! Payoffs `U^i(s, t)` are revealed at `s ∨ t`.

use crate::error::{Error, Result};
use crate::probspace::{EventTree, LeveledValue, NodeIx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn number(self) -> u8 {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }

    pub fn index(self) -> usize {
        self.number() as usize - 1
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

/// A pure stopping time, stored as the time of the first stop at or before
/// each node (`None` while the rule is still running). Two rules with the same
/// realized times compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StoppingTime {
    first: Vec<Option<usize>>,
}

impl StoppingTime {
    pub(crate) fn from_first_stops(first: Vec<Option<usize>>) -> StoppingTime {
        StoppingTime { first }
    }

    /// Builds the rule that stops at the first node where `stop_here` holds,
    /// and at the horizon otherwise. `stop_here` is only consulted on nodes the
    /// rule has not yet stopped before.
    pub fn from_decisions<F: FnMut(NodeIx) -> bool>(tree: &EventTree, mut stop_here: F) -> StoppingTime {
        let horizon = tree.horizon();
        let mut first = vec![None; tree.len()];
        for n in tree.nodes() {
            let t = tree.time(n);
            first[n.0] = match tree.parent(n).and_then(|p| first[p.0]) {
                Some(s) => Some(s),
                None if t == horizon || stop_here(n) => Some(t),
                None => None,
            };
        }
        StoppingTime { first }
    }

    /// Stops at the listed nodes (or earlier ancestors among them) and at the horizon.
    pub fn from_stop_nodes(tree: &EventTree, nodes: &[NodeIx]) -> StoppingTime {
        let mut mark = vec![false; tree.len()];
        for n in nodes {
            mark[n.0] = true;
        }
        StoppingTime::from_decisions(tree, |n| mark[n.0])
    }

    /// The deterministic time `min(t, T)`.
    pub fn constant(tree: &EventTree, t: usize) -> StoppingTime {
        StoppingTime::from_decisions(tree, |n| tree.time(n) >= t)
    }

    pub fn has_stopped(&self, n: NodeIx) -> bool {
        self.first[n.0].is_some()
    }

    /// Time of the first stop on the path to `n`, if it happened by `n`.
    pub fn stop_time_by(&self, n: NodeIx) -> Option<usize> {
        self.first[n.0]
    }

    /// Whether `n` is the node where the rule stops on paths through it.
    pub fn stops_at(&self, tree: &EventTree, n: NodeIx) -> bool {
        self.first[n.0] == Some(tree.time(n))
    }

    pub fn realized_time(&self, leaf: NodeIx) -> usize {
        self.first[leaf.0].expect("stopping time stops at the horizon")
    }

    pub fn stop_node(&self, tree: &EventTree, leaf: NodeIx) -> NodeIx {
        tree.ancestor_at(leaf, self.realized_time(leaf))
    }

    /// Nodes where the rule stops, in canonical order (an antichain).
    pub fn stop_nodes(&self, tree: &EventTree) -> Vec<NodeIx> {
        tree.nodes().filter(|&n| self.stops_at(tree, n)).collect()
    }

    /// Whether the realized time is at least `k` on every path.
    pub fn is_at_least(&self, tree: &EventTree, k: usize) -> bool {
        tree.leaves()
            .iter()
            .all(|&l| self.realized_time(l) >= k.min(tree.horizon()))
    }

    /// Whether the realized time is at least that of `other` on every path.
    pub fn dominates(&self, tree: &EventTree, other: &StoppingTime) -> bool {
        tree.leaves()
            .iter()
            .all(|&l| self.realized_time(l) >= other.realized_time(l))
    }

    pub fn validate(&self, tree: &EventTree) -> Result<()> {
        if self.first.len() != tree.len() {
            return Err(Error::InvalidStrategy(format!(
                "stopping time covers {} nodes, tree has {}",
                self.first.len(),
                tree.len()
            )));
        }
        for n in tree.nodes() {
            let expected = match tree.parent(n).and_then(|p| self.first[p.0]) {
                Some(s) => Some(s),
                None => self.first[n.0].filter(|&s| s == tree.time(n)),
            };
            if self.first[n.0] != expected {
                return Err(Error::InvalidStrategy(format!(
                    "inconsistent stop record at {}",
                    tree.id(n)
                )));
            }
            if tree.time(n) == tree.horizon() && self.first[n.0].is_none() {
                return Err(Error::InvalidStrategy(format!(
                    "does not stop at horizon node {}",
                    tree.id(n)
                )));
            }
        }
        Ok(())
    }
}

/// A behavioral randomized stopping time: the probability of stopping at each
/// node given that the rule has not stopped earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedStoppingTime {
    stop_prob: Vec<f64>,
}

impl RandomizedStoppingTime {
    /// Stop probabilities from `f`; horizon nodes are forced to one.
    pub fn new<F: FnMut(NodeIx) -> f64>(tree: &EventTree, mut f: F) -> Result<RandomizedStoppingTime> {
        let mut stop_prob = Vec::with_capacity(tree.len());
        for n in tree.nodes() {
            let p = if tree.time(n) == tree.horizon() { 1.0 } else { f(n) };
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidStrategy(format!(
                    "stop probability {p} at {}",
                    tree.id(n)
                )));
            }
            stop_prob.push(p);
        }
        Ok(RandomizedStoppingTime { stop_prob })
    }

    pub fn from_pure(tree: &EventTree, rule: &StoppingTime) -> RandomizedStoppingTime {
        RandomizedStoppingTime {
            stop_prob: tree
                .nodes()
                .map(|n| if rule.has_stopped(n) { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn stop_prob(&self, n: NodeIx) -> f64 {
        self.stop_prob[n.0]
    }

    /// The pure rule when every probability is zero or one.
    pub fn as_pure(&self, tree: &EventTree) -> Option<StoppingTime> {
        if self.stop_prob.iter().any(|&p| p != 0.0 && p != 1.0) {
            return None;
        }
        Some(StoppingTime::from_decisions(tree, |n| self.stop_prob[n.0] == 1.0))
    }

    pub fn validate(&self, tree: &EventTree) -> Result<()> {
        if self.stop_prob.len() != tree.len() {
            return Err(Error::InvalidStrategy("randomized rule has wrong length".into()));
        }
        for n in tree.nodes() {
            let p = self.stop_prob[n.0];
            if !(0.0..=1.0).contains(&p) || (tree.time(n) == tree.horizon() && p != 1.0) {
                return Err(Error::InvalidStrategy(format!(
                    "stop probability {p} at {}",
                    tree.id(n)
                )));
            }
        }
        Ok(())
    }
}

fn check_family(tree: &EventTree, rules: &[StoppingTime], strict: bool, kind: &str) -> Result<()> {
    if rules.len() != tree.horizon() + 1 {
        return Err(Error::InvalidStrategy(format!(
            "{kind} adjustment family needs {} rules, got {}",
            tree.horizon() + 1,
            rules.len()
        )));
    }
    for (t, rule) in rules.iter().enumerate() {
        rule.validate(tree)?;
        let start = if strict { (t + 1).min(tree.horizon()) } else { t };
        if !rule.is_at_least(tree, start) {
            return Err(Error::InvalidStrategy(format!(
                "{kind} adjustment rule for t={t} stops before {start}"
            )));
        }
    }
    Ok(())
}

/// Adjustments of type A: after an opponent stop at `t`, stop at `(t+1) ∧ T` or later.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjustmentFamilyA {
    rules: Vec<StoppingTime>,
}

impl AdjustmentFamilyA {
    pub fn new(tree: &EventTree, rules: Vec<StoppingTime>) -> Result<AdjustmentFamilyA> {
        check_family(tree, &rules, true, "type A")?;
        Ok(AdjustmentFamilyA { rules })
    }

    /// Every rule stops as early as allowed.
    pub fn earliest(tree: &EventTree) -> AdjustmentFamilyA {
        let rules = (0..=tree.horizon())
            .map(|t| StoppingTime::constant(tree, t + 1))
            .collect();
        AdjustmentFamilyA { rules }
    }

    pub fn rule(&self, t: usize) -> &StoppingTime {
        &self.rules[t]
    }

    pub fn rules(&self) -> &[StoppingTime] {
        &self.rules
    }
}

/// Adjustments of type B: after an opponent stop at `t`, stop at `t` or later.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjustmentFamilyB {
    rules: Vec<StoppingTime>,
}

impl AdjustmentFamilyB {
    pub fn new(tree: &EventTree, rules: Vec<StoppingTime>) -> Result<AdjustmentFamilyB> {
        check_family(tree, &rules, false, "type B")?;
        Ok(AdjustmentFamilyB { rules })
    }

    pub fn immediate(tree: &EventTree) -> AdjustmentFamilyB {
        let rules = (0..=tree.horizon()).map(|t| StoppingTime::constant(tree, t)).collect();
        AdjustmentFamilyB { rules }
    }

    pub fn rule(&self, t: usize) -> &StoppingTime {
        &self.rules[t]
    }

    pub fn rules(&self) -> &[StoppingTime] {
        &self.rules
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyA {
    pub initial: StoppingTime,
    pub adjust: AdjustmentFamilyA,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyB {
    pub initial: StoppingTime,
    pub adjust: AdjustmentFamilyB,
}

/// Type-A strategy with a randomized initial rule; adjustments stay pure.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedStrategyA {
    pub initial: RandomizedStoppingTime,
    pub adjust: AdjustmentFamilyA,
}

impl MixedStrategyA {
    pub fn from_pure(tree: &EventTree, s: &StrategyA) -> MixedStrategyA {
        MixedStrategyA {
            initial: RandomizedStoppingTime::from_pure(tree, &s.initial),
            adjust: s.adjust.clone(),
        }
    }

    pub fn as_pure(&self, tree: &EventTree) -> Option<StrategyA> {
        Some(StrategyA {
            initial: self.initial.as_pure(tree)?,
            adjust: self.adjust.clone(),
        })
    }
}

/// The payoff families `U^1`, `U^2`, with `U^i(s, t)` defined on level `s ∨ t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffField {
    horizon: usize,
    slices: Vec<LeveledValue>,
    bound: f64,
}

impl PayoffField {
    fn slot(horizon: usize, player: Player, s: usize, t: usize) -> usize {
        (player.index() * (horizon + 1) + s) * (horizon + 1) + t
    }

    pub fn try_from_fn<F>(tree: &EventTree, mut f: F) -> Result<PayoffField>
    where
        F: FnMut(Player, usize, usize, NodeIx) -> Option<f64>,
    {
        let horizon = tree.horizon();
        let mut slices = Vec::with_capacity(2 * (horizon + 1) * (horizon + 1));
        for player in Player::BOTH {
            for s in 0..=horizon {
                for t in 0..=horizon {
                    let level = s.max(t);
                    let slice =
                        LeveledValue::try_from_fn(tree, [level], |n| f(player, s, t, n)).map_err(|e| match e {
                            Error::MissingValue { node, .. } => Error::MissingPayoff {
                                player: player.number(),
                                s,
                                t,
                                node,
                            },
                            other => other,
                        })?;
                    slices.push(slice);
                }
            }
        }
        let bound = slices.iter().fold(0.0f64, |m, v| m.max(v.sup_norm()));
        Ok(PayoffField { horizon, slices, bound })
    }

    pub fn from_fn<F>(tree: &EventTree, mut f: F) -> PayoffField
    where
        F: FnMut(Player, usize, usize, NodeIx) -> f64,
    {
        PayoffField::try_from_fn(tree, |p, s, t, n| Some(f(p, s, t, n)))
            .expect("payoff function must return finite values")
    }

    /// Zero-sum field `U^1 = U`, `U^2 = -U`.
    pub fn zero_sum<F>(tree: &EventTree, mut u: F) -> PayoffField
    where
        F: FnMut(usize, usize, NodeIx) -> f64,
    {
        PayoffField::from_fn(tree, |p, s, t, n| match p {
            Player::One => u(s, t, n),
            Player::Two => -u(s, t, n),
        })
    }

    /// The zero-sum field built from this field's player-1 payoffs.
    pub fn zero_sum_from_first(&self, tree: &EventTree) -> PayoffField {
        PayoffField::zero_sum(tree, |s, t, n| self.value(Player::One, s, t, n))
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn slice(&self, player: Player, s: usize, t: usize) -> &LeveledValue {
        &self.slices[PayoffField::slot(self.horizon, player, s, t)]
    }

    /// `U^player(s, t)` at `n`, which must sit at level `s ∨ t`.
    pub fn value(&self, player: Player, s: usize, t: usize, n: NodeIx) -> f64 {
        self.slice(player, s, t).at(n)
    }

    /// `U^player(s, t)` on the path ending at `leaf`.
    pub fn on_path(&self, tree: &EventTree, player: Player, s: usize, t: usize, leaf: NodeIx) -> f64 {
        self.value(player, s, t, tree.ancestor_at(leaf, s.max(t)))
    }
}

/// Effective stopping times `(ρ[τ], τ[ρ])` on the path to `leaf` when both
/// players act simultaneously.
pub fn effective_times_sim(rho: &StrategyA, tau: &StrategyA, leaf: NodeIx) -> (usize, usize) {
    let r = rho.initial.realized_time(leaf);
    let s = tau.initial.realized_time(leaf);
    match r.cmp(&s) {
        std::cmp::Ordering::Equal => (r, r),
        std::cmp::Ordering::Less => (r, tau.adjust.rule(r).realized_time(leaf)),
        std::cmp::Ordering::Greater => (rho.adjust.rule(s).realized_time(leaf), s),
    }
}

/// Effective stopping times `(ρ⟨τ⟩, τ⟨ρ⟩)` when player 1 acts first at each
/// stage: on `{τ₀ ≥ ρ₀}` player 2 responds with `τ₁(ρ₀)`.
pub fn effective_times_seq(rho: &StrategyA, tau: &StrategyB, leaf: NodeIx) -> (usize, usize) {
    let r = rho.initial.realized_time(leaf);
    let s = tau.initial.realized_time(leaf);
    if r <= s {
        (r, tau.adjust.rule(r).realized_time(leaf))
    } else {
        (rho.adjust.rule(s).realized_time(leaf), s)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PureProfile<'a> {
    Sim(&'a StrategyA, &'a StrategyA),
    Seq(&'a StrategyA, &'a StrategyB),
}

impl PureProfile<'_> {
    pub fn effective_times(&self, leaf: NodeIx) -> (usize, usize) {
        match *self {
            PureProfile::Sim(rho, tau) => effective_times_sim(rho, tau, leaf),
            PureProfile::Seq(rho, tau) => effective_times_seq(rho, tau, leaf),
        }
    }
}

/// Exact expected payoffs of a pure profile, summed over paths.
pub fn payoff_pure(tree: &EventTree, u: &PayoffField, profile: PureProfile<'_>) -> (f64, f64) {
    let mut acc = (0.0, 0.0);
    for &leaf in tree.leaves() {
        let (s, t) = profile.effective_times(leaf);
        let w = tree.path_prob(leaf);
        acc.0 += w * u.on_path(tree, Player::One, s, t, leaf);
        acc.1 += w * u.on_path(tree, Player::Two, s, t, leaf);
    }
    acc
}

/// `E_n[reward(σ, node at σ)]` at every level-`t` node `n`, for a rule `σ`
/// that does not stop before `t`.
pub(crate) fn value_of_rule<F>(tree: &EventTree, rule: &StoppingTime, t: usize, mut reward: F) -> LeveledValue
where
    F: FnMut(usize, NodeIx) -> f64,
{
    let mut v = vec![0.0; tree.len()];
    for level in (t..=tree.horizon()).rev() {
        for &n in tree.level(level) {
            v[n.0] = if rule.stops_at(tree, n) {
                reward(level, n)
            } else {
                tree.one_step(n, |c| v[c.0])
            };
        }
    }
    debug_assert!(tree
        .level(t)
        .iter()
        .all(|&n| rule.stop_time_by(n).is_none_or(|s| s == t)));
    LeveledValue::at_level(tree, t, |n| v[n.0])
}

/// For each `t`, the level-`t` process `E_t[U^player(t, rule_t)]`
/// (`first_fixed`) or `E_t[U^player(rule_t, t)]`.
pub(crate) fn response_values(
    tree: &EventTree,
    u: &PayoffField,
    player: Player,
    rules: &[StoppingTime],
    first_fixed: bool,
) -> Vec<LeveledValue> {
    rules
        .iter()
        .enumerate()
        .map(|(t, rule)| {
            value_of_rule(tree, rule, t, |stop, n| {
                if first_fixed {
                    u.value(player, t, stop, n)
                } else {
                    u.value(player, stop, t, n)
                }
            })
        })
        .collect()
}

/// Exact payoffs of two mixed type-A strategies in the simultaneous game.
///
/// Initial stop decisions are independent per node; once exactly one player
/// has stopped at `t`, the other follows its (pure) adjustment rule for `t`.
pub fn payoff_mixed_sim(tree: &EventTree, u: &PayoffField, rho: &MixedStrategyA, tau: &MixedStrategyA) -> (f64, f64) {
    let mut out = [0.0; 2];
    for player in Player::BOTH {
        // player 1 stopped first: player 2 adjusts with tau's rule
        let p1_first = response_values(tree, u, player, tau.adjust.rules(), true);
        let p2_first = response_values(tree, u, player, rho.adjust.rules(), false);
        let mut v = vec![0.0; tree.len()];
        for level in (0..=tree.horizon()).rev() {
            for &n in tree.level(level) {
                let p = rho.initial.stop_prob(n);
                let q = tau.initial.stop_prob(n);
                let both = u.value(player, level, level, n);
                let cont = if level == tree.horizon() {
                    0.0
                } else {
                    tree.one_step(n, |c| v[c.0])
                };
                v[n.0] = p * q * both
                    + p * (1.0 - q) * p1_first[level].at(n)
                    + (1.0 - p) * q * p2_first[level].at(n)
                    + (1.0 - p) * (1.0 - q) * cont;
            }
        }
        out[player.index()] = v[tree.root().0];
    }
    (out[0], out[1])
}
