//! JSON game and profile documents, and seeded random instances.
//!
//! A game document lists the tree nodes with their parent and transition
//! probability, then one payoff section per `(player, s, t)` holding the
//! values at every node of level `s ∨ t`:
//!
//! ```json
//! {
//!   "name": "example",
//!   "horizon": 1,
//!   "tree": { "nodes": [
//!     { "id": "r", "parent": null },
//!     { "id": "r.0", "parent": "r", "prob": 1.0 }
//!   ] },
//!   "payoffs": [
//!     { "player": 1, "s": 0, "t": 0, "values": [["r", 1.0]] }
//!   ]
//! }
//! ```

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probspace::{EventTree, NodeSpec, TreeSpec};
use crate::strategies::{
    AdjustmentFamilyA, AdjustmentFamilyB, MixedStrategyA, PayoffField, Player, RandomizedStoppingTime, StoppingTime,
    StrategyA, StrategyB,
};
use crate::verify::{check_equilibrium, EquilibriumReport, Mode, Profile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub horizon: usize,
    pub tree: TreeSection,
    pub payoffs: Vec<PayoffSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub nodes: Vec<NodeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSection {
    pub player: u8,
    pub s: usize,
    pub t: usize,
    pub values: Vec<(String, f64)>,
}

/// A parsed, validated game.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub tree: EventTree,
    pub payoffs: PayoffField,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl GameFile {
    pub fn parse(text: &str) -> Result<GameFile> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<GameFile> {
        GameFile::parse(&read(path)?)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("game documents serialize");
        s.push('\n');
        s
    }

    pub fn tree_spec(&self) -> TreeSpec {
        TreeSpec {
            horizon: self.horizon,
            nodes: self
                .tree
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.id.clone(),
                    parent: n.parent.clone(),
                    prob: n.prob,
                    time: None,
                })
                .collect(),
        }
    }

    /// Builds the game. With `zero_sum`, player-2 sections may be omitted and
    /// `U² = -U¹` is used; any player-2 sections present must agree with it.
    pub fn to_game(&self, zero_sum: bool) -> Result<Game> {
        let tree = EventTree::build(&self.tree_spec())?;
        let horizon = tree.horizon();
        let mut table: HashMap<(u8, usize, usize, usize), f64> = HashMap::new();
        for (k, sec) in self.payoffs.iter().enumerate() {
            let here = |msg: String| Error::Format(format!("payoffs[{k}]: {msg}"));
            if sec.player != 1 && sec.player != 2 {
                return Err(here(format!("player must be 1 or 2, got {}", sec.player)));
            }
            if sec.s > horizon || sec.t > horizon {
                return Err(here(format!(
                    "(s, t) = ({}, {}) beyond horizon {horizon}",
                    sec.s, sec.t
                )));
            }
            let level = sec.s.max(sec.t);
            for (id, value) in &sec.values {
                let n = tree.lookup(id).ok_or_else(|| here(format!("unknown node {id}")))?;
                if tree.time(n) != level {
                    return Err(here(format!(
                        "node {id} is at time {}, payoff needs level {level}",
                        tree.time(n)
                    )));
                }
                if !value.is_finite() {
                    return Err(Error::NonFinite { node: id.clone() });
                }
                if table.insert((sec.player, sec.s, sec.t, n.0), *value).is_some() {
                    return Err(here(format!(
                        "duplicate value for U{}({}, {}) at {id}",
                        sec.player, sec.s, sec.t
                    )));
                }
            }
        }
        let payoffs = PayoffField::try_from_fn(&tree, |p, s, t, n| {
            let own = table.get(&(p.number(), s, t, n.0)).copied();
            match (zero_sum, p) {
                (true, Player::Two) => table.get(&(1, s, t, n.0)).map(|v| -v),
                _ => own,
            }
        })?;
        if zero_sum {
            for (&(p, s, t, n), &v) in &table {
                if p == 2 && v != -payoffs.value(Player::One, s, t, crate::probspace::NodeIx(n)) {
                    return Err(Error::Format(format!(
                        "zero-sum game: U2({s}, {t}) at {} is not -U1",
                        tree.id(crate::probspace::NodeIx(n))
                    )));
                }
            }
        }
        Ok(Game {
            name: self.name.clone(),
            seed: self.seed,
            tree,
            payoffs,
        })
    }

    /// The document for a game, nodes and payoffs in canonical order.
    pub fn from_game(game: &Game) -> GameFile {
        let tree = &game.tree;
        let horizon = tree.horizon();
        let nodes = tree
            .nodes()
            .map(|n| NodeEntry {
                id: tree.id(n).to_string(),
                parent: tree.parent(n).map(|p| tree.id(p).to_string()),
                prob: tree.parent(n).map(|_| tree.prob(n)),
            })
            .collect();
        let mut payoffs = Vec::new();
        for player in Player::BOTH {
            for s in 0..=horizon {
                for t in 0..=horizon {
                    let values = tree
                        .level(s.max(t))
                        .iter()
                        .map(|&n| (tree.id(n).to_string(), game.payoffs.value(player, s, t, n)))
                        .collect();
                    payoffs.push(PayoffSection {
                        player: player.number(),
                        s,
                        t,
                        values,
                    });
                }
            }
        }
        GameFile {
            name: game.name.clone(),
            seed: game.seed,
            horizon,
            tree: TreeSection { nodes },
            payoffs,
        }
    }
}

/// A uniform tree with seeded transition probabilities and i.i.d. uniform
/// payoffs in `range`.
pub fn generate_random_game(horizon: usize, branching: usize, seed: u64, range: (f64, f64)) -> GameFile {
    assert!(branching >= 1, "branching must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (branching - 1).to_string().len();
    let mut nodes = vec![NodeEntry {
        id: "r".into(),
        parent: None,
        prob: None,
    }];
    let mut levels: Vec<Vec<String>> = vec![vec!["r".into()]];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for parent in levels.last().unwrap() {
            let weights: Vec<f64> = (0..branching).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for (k, w) in weights.iter().enumerate() {
                let id = format!("{parent}.{k:0width$}");
                nodes.push(NodeEntry {
                    id: id.clone(),
                    parent: Some(parent.clone()),
                    prob: Some(w / total),
                });
                next.push(id);
            }
        }
        levels.push(next);
    }
    let (lo, hi) = range;
    let mut payoffs = Vec::new();
    for player in [1u8, 2] {
        for s in 0..=horizon {
            for t in 0..=horizon {
                let values = levels[s.max(t)]
                    .iter()
                    .map(|id| (id.clone(), lo + (hi - lo) * rng.gen::<f64>()))
                    .collect();
                payoffs.push(PayoffSection { player, s, t, values });
            }
        }
    }
    GameFile {
        name: Some(format!("random-h{horizon}-b{branching}-s{seed}")),
        seed: Some(seed),
        horizon,
        tree: TreeSection { nodes },
        payoffs,
    }
}

/// A stopping rule in a profile document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RuleDoc {
    /// Stops at the listed nodes (and at the horizon).
    Pure { stops: Vec<String> },
    /// Behavioral stop probabilities; unlisted nodes continue.
    Mixed { stop_prob: Vec<(String, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyDoc {
    pub initial: RuleDoc,
    pub adjust: Vec<RuleDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<usize>,
    pub player1: StrategyDoc,
    pub player2: StrategyDoc,
}

/// A profile resolved against a tree.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedProfile {
    Sim(MixedStrategyA, MixedStrategyA),
    Seq(StrategyA, StrategyB),
}

fn lookup(tree: &EventTree, id: &str) -> Result<crate::probspace::NodeIx> {
    tree.lookup(id)
        .ok_or_else(|| Error::Format(format!("profile refers to unknown node {id}")))
}

impl RuleDoc {
    pub fn from_pure(tree: &EventTree, rule: &StoppingTime) -> RuleDoc {
        RuleDoc::Pure {
            stops: rule
                .stop_nodes(tree)
                .into_iter()
                .map(|n| tree.id(n).to_string())
                .collect(),
        }
    }

    pub fn from_mixed(tree: &EventTree, rule: &RandomizedStoppingTime) -> RuleDoc {
        match rule.as_pure(tree) {
            Some(p) => RuleDoc::from_pure(tree, &p),
            None => RuleDoc::Mixed {
                stop_prob: tree
                    .nodes()
                    .filter(|&n| rule.stop_prob(n) > 0.0)
                    .map(|n| (tree.id(n).to_string(), rule.stop_prob(n)))
                    .collect(),
            },
        }
    }

    pub fn to_pure(&self, tree: &EventTree) -> Result<StoppingTime> {
        match self {
            RuleDoc::Pure { stops } => {
                let nodes = stops.iter().map(|id| lookup(tree, id)).collect::<Result<Vec<_>>>()?;
                Ok(StoppingTime::from_stop_nodes(tree, &nodes))
            }
            RuleDoc::Mixed { .. } => self
                .to_mixed(tree)?
                .as_pure(tree)
                .ok_or_else(|| Error::InvalidStrategy("randomized rule where a pure one is required".into())),
        }
    }

    pub fn to_mixed(&self, tree: &EventTree) -> Result<RandomizedStoppingTime> {
        match self {
            RuleDoc::Pure { .. } => Ok(RandomizedStoppingTime::from_pure(tree, &self.to_pure(tree)?)),
            RuleDoc::Mixed { stop_prob } => {
                let mut p = vec![0.0; tree.len()];
                for (id, q) in stop_prob {
                    p[lookup(tree, id)?.0] = *q;
                }
                RandomizedStoppingTime::new(tree, |n| p[n.0])
            }
        }
    }
}

fn pure_rules(tree: &EventTree, docs: &[RuleDoc]) -> Result<Vec<StoppingTime>> {
    docs.iter().map(|d| d.to_pure(tree)).collect()
}

impl StrategyDoc {
    pub fn from_a(tree: &EventTree, s: &StrategyA) -> StrategyDoc {
        StrategyDoc {
            initial: RuleDoc::from_pure(tree, &s.initial),
            adjust: s.adjust.rules().iter().map(|r| RuleDoc::from_pure(tree, r)).collect(),
        }
    }

    pub fn from_b(tree: &EventTree, s: &StrategyB) -> StrategyDoc {
        StrategyDoc {
            initial: RuleDoc::from_pure(tree, &s.initial),
            adjust: s.adjust.rules().iter().map(|r| RuleDoc::from_pure(tree, r)).collect(),
        }
    }

    pub fn from_mixed(tree: &EventTree, s: &MixedStrategyA) -> StrategyDoc {
        StrategyDoc {
            initial: RuleDoc::from_mixed(tree, &s.initial),
            adjust: s.adjust.rules().iter().map(|r| RuleDoc::from_pure(tree, r)).collect(),
        }
    }

    pub fn to_a(&self, tree: &EventTree) -> Result<StrategyA> {
        Ok(StrategyA {
            initial: self.initial.to_pure(tree)?,
            adjust: AdjustmentFamilyA::new(tree, pure_rules(tree, &self.adjust)?)?,
        })
    }

    pub fn to_b(&self, tree: &EventTree) -> Result<StrategyB> {
        Ok(StrategyB {
            initial: self.initial.to_pure(tree)?,
            adjust: AdjustmentFamilyB::new(tree, pure_rules(tree, &self.adjust)?)?,
        })
    }

    pub fn to_mixed(&self, tree: &EventTree) -> Result<MixedStrategyA> {
        Ok(MixedStrategyA {
            initial: self.initial.to_mixed(tree)?,
            adjust: AdjustmentFamilyA::new(tree, pure_rules(tree, &self.adjust)?)?,
        })
    }
}

impl ProfileFile {
    pub fn parse(text: &str) -> Result<ProfileFile> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<ProfileFile> {
        ProfileFile::parse(&read(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile documents serialize");
        s.push('\n');
        s
    }

    pub fn sim(tree: &EventTree, rho: &MixedStrategyA, tau: &MixedStrategyA) -> ProfileFile {
        ProfileFile {
            mode: Some(Mode::Sim.name().into()),
            sigma: None,
            player1: StrategyDoc::from_mixed(tree, rho),
            player2: StrategyDoc::from_mixed(tree, tau),
        }
    }

    pub fn seq(tree: &EventTree, mode: Mode, rho: &StrategyA, tau: &StrategyB, sigma: Option<usize>) -> ProfileFile {
        ProfileFile {
            mode: Some(mode.name().into()),
            sigma,
            player1: StrategyDoc::from_a(tree, rho),
            player2: StrategyDoc::from_b(tree, tau),
        }
    }

    /// Resolves the strategies for `mode`; a `mode` field in the document must agree.
    pub fn resolve(&self, tree: &EventTree, mode: Mode) -> Result<LoadedProfile> {
        if let Some(m) = &self.mode {
            if Mode::parse(m) != Some(mode) {
                return Err(Error::Format(format!(
                    "profile is for mode {m}, requested {}",
                    mode.name()
                )));
            }
        }
        match mode {
            Mode::Sim => Ok(LoadedProfile::Sim(
                self.player1.to_mixed(tree)?,
                self.player2.to_mixed(tree)?,
            )),
            Mode::Seq | Mode::ZeroSum => Ok(LoadedProfile::Seq(self.player1.to_a(tree)?, self.player2.to_b(tree)?)),
        }
    }

    /// Resolves the profile and checks it in `mode`. A `sigma` entry is only
    /// accepted in zero-sum mode, where it floors both initial rules.
    pub fn check(&self, tree: &EventTree, u: &PayoffField, mode: Mode, eps: f64) -> Result<EquilibriumReport> {
        let floor = match self.sigma {
            Some(s) if s > tree.horizon() => {
                return Err(Error::Format(format!("sigma {s} beyond horizon {}", tree.horizon())))
            }
            Some(s) if mode == Mode::ZeroSum => Some(StoppingTime::constant(tree, s)),
            Some(_) => return Err(Error::Format("sigma is only meaningful in zs mode".into())),
            None => None,
        };
        let loaded = self.resolve(tree, mode)?;
        let profile = match (&loaded, mode) {
            (LoadedProfile::Sim(r, t), _) => Profile::Sim(r, t),
            (LoadedProfile::Seq(r, t), Mode::ZeroSum) => Profile::ZeroSum(r, t),
            (LoadedProfile::Seq(r, t), _) => Profile::Seq(r, t),
        };
        if let (Some(f), LoadedProfile::Seq(r, t)) = (&floor, &loaded) {
            if !r.initial.dominates(tree, f) || !t.initial.dominates(tree, f) {
                return Err(Error::InvalidStrategy("initial rule stops before sigma".into()));
            }
        }
        check_equilibrium(tree, u, profile, floor.as_ref(), eps)
    }
}
