//! Finite filtered probability spaces represented as event trees.
//!
//! The time-`t` nodes of an [`EventTree`] are the atoms of the information
//! available at time `t`; a root-to-leaf path is one state of the world. An
//! adapted process is a [`LeveledValue`]: one number per node at each level it
//! is defined on, so measurability holds by construction and every essential
//! supremum over stopping times reduces to a per-node maximum.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::strategies::StoppingTime;

/// Tolerance for child probabilities summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Index of a node in canonical order (by time, then id).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIx(pub usize);

impl NodeIx {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One node of a raw tree description.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub parent: Option<String>,
    /// Transition probability from the parent. Ignored for the root unless it
    /// differs from one.
    pub prob: Option<f64>,
    /// Optional declared time, checked against the depth.
    pub time: Option<usize>,
}

impl NodeSpec {
    pub fn root(id: impl Into<String>) -> Self {
        NodeSpec {
            id: id.into(),
            parent: None,
            prob: None,
            time: None,
        }
    }

    pub fn child(id: impl Into<String>, parent: impl Into<String>, prob: f64) -> Self {
        NodeSpec {
            id: id.into(),
            parent: Some(parent.into()),
            prob: Some(prob),
            time: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeSpec {
    pub horizon: usize,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub time: usize,
    pub parent: Option<NodeIx>,
    /// Transition probability from the parent (one at the root).
    pub prob: f64,
    /// Unconditional probability of reaching this node.
    pub path_prob: f64,
    pub children: Vec<NodeIx>,
    ancestors: Vec<NodeIx>,
    leaf_span: (usize, usize),
}

/// A validated finite event tree with canonical node ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct EventTree {
    horizon: usize,
    nodes: Vec<Node>,
    levels: Vec<Vec<NodeIx>>,
    leaves: Vec<NodeIx>,
    index: BTreeMap<String, NodeIx>,
}

impl EventTree {
    /// Validates a raw description and builds the tree.
    pub fn build(spec: &TreeSpec) -> Result<EventTree> {
        let horizon = spec.horizon;
        let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
        let mut root: Option<usize> = None;
        for (i, n) in spec.nodes.iter().enumerate() {
            if by_id.insert(n.id.as_str(), i).is_some() {
                return Err(Error::DuplicateNode(n.id.clone()));
            }
            if n.parent.is_none() {
                if let Some(r) = root {
                    return Err(Error::MultipleRoots(spec.nodes[r].id.clone(), n.id.clone()));
                }
                root = Some(i);
            }
        }
        let root = root.ok_or(Error::NoRoot)?;

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); spec.nodes.len()];
        for (i, n) in spec.nodes.iter().enumerate() {
            if let Some(p) = &n.parent {
                let pi = *by_id.get(p.as_str()).ok_or_else(|| Error::OrphanNode {
                    node: n.id.clone(),
                    parent: p.clone(),
                })?;
                children[pi].push(i);
            }
        }

        // depths by BFS from the root; anything unreached sits on a cycle
        let mut depth: Vec<Option<usize>> = vec![None; spec.nodes.len()];
        depth[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let d = depth[i].unwrap();
            for &c in &children[i] {
                depth[c] = Some(d + 1);
                queue.push_back(c);
            }
        }

        for (i, n) in spec.nodes.iter().enumerate() {
            let d = depth[i].ok_or_else(|| Error::Disconnected(n.id.clone()))?;
            if let Some(declared) = n.time {
                if declared != d {
                    return Err(Error::TimeInconsistency {
                        node: n.id.clone(),
                        reason: format!("declared time {declared} but depth is {d}"),
                    });
                }
            }
            if d > horizon {
                return Err(Error::TimeInconsistency {
                    node: n.id.clone(),
                    reason: format!("depth {d} exceeds horizon {horizon}"),
                });
            }
            if children[i].is_empty() && d < horizon {
                return Err(Error::LeafBeforeHorizon {
                    node: n.id.clone(),
                    time: d,
                    horizon,
                });
            }
            match (n.parent.is_some(), n.prob) {
                (true, Some(p)) if p > 0.0 && p <= 1.0 => {}
                (true, p) => {
                    return Err(Error::InvalidProbability {
                        node: n.id.clone(),
                        prob: p.unwrap_or(f64::NAN),
                    })
                }
                (false, Some(p)) if (p - 1.0).abs() > PROB_SUM_TOL => {
                    return Err(Error::InvalidProbability {
                        node: n.id.clone(),
                        prob: p,
                    })
                }
                (false, _) => {}
            }
        }

        for (i, n) in spec.nodes.iter().enumerate() {
            if children[i].is_empty() {
                continue;
            }
            let sum: f64 = children[i].iter().map(|&c| spec.nodes[c].prob.unwrap()).sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::ProbabilitySum {
                    node: n.id.clone(),
                    sum,
                });
            }
        }

        // canonical order: by time, then id
        let mut order: Vec<usize> = (0..spec.nodes.len()).collect();
        order.sort_by(|&a, &b| (depth[a], spec.nodes[a].id.as_str()).cmp(&(depth[b], spec.nodes[b].id.as_str())));
        let mut canon = vec![0usize; spec.nodes.len()];
        for (k, &i) in order.iter().enumerate() {
            canon[i] = k;
        }

        let mut nodes: Vec<Node> = order
            .iter()
            .map(|&i| {
                let s = &spec.nodes[i];
                let parent = s.parent.as_ref().map(|p| NodeIx(canon[by_id[p.as_str()]]));
                let mut kids: Vec<NodeIx> = children[i].iter().map(|&c| NodeIx(canon[c])).collect();
                kids.sort();
                Node {
                    id: s.id.clone(),
                    time: depth[i].unwrap(),
                    parent,
                    prob: if parent.is_some() { s.prob.unwrap() } else { 1.0 },
                    path_prob: 0.0,
                    children: kids,
                    ancestors: Vec::new(),
                    leaf_span: (0, 0),
                }
            })
            .collect();

        // parents precede children in canonical order
        for k in 0..nodes.len() {
            let (path_prob, mut ancestors) = match nodes[k].parent {
                Some(p) => (nodes[p.0].path_prob * nodes[k].prob, nodes[p.0].ancestors.clone()),
                None => (1.0, Vec::new()),
            };
            ancestors.push(NodeIx(k));
            nodes[k].path_prob = path_prob;
            nodes[k].ancestors = ancestors;
        }

        let mut leaves = Vec::new();
        assign_leaf_spans(&mut nodes, NodeIx(0), &mut leaves);

        let mut levels = vec![Vec::new(); horizon + 1];
        for (k, n) in nodes.iter().enumerate() {
            levels[n.time].push(NodeIx(k));
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| (n.id.clone(), NodeIx(k)))
            .collect();

        Ok(EventTree {
            horizon,
            nodes,
            levels,
            leaves,
            index,
        })
    }

    /// A single path of length `horizon` with transition probability one.
    pub fn deterministic(horizon: usize) -> EventTree {
        let mut nodes = vec![NodeSpec::root("r")];
        for t in 1..=horizon {
            nodes.push(NodeSpec::child(format!("t{t}"), node_name(t - 1), 1.0));
        }
        fn node_name(t: usize) -> String {
            if t == 0 {
                "r".to_string()
            } else {
                format!("t{t}")
            }
        }
        EventTree::build(&TreeSpec { horizon, nodes }).expect("deterministic path is valid")
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeIx {
        NodeIx(0)
    }

    pub fn node(&self, n: NodeIx) -> &Node {
        &self.nodes[n.0]
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = NodeIx> + ExactSizeIterator + Clone {
        (0..self.nodes.len()).map(NodeIx)
    }

    pub fn id(&self, n: NodeIx) -> &str {
        &self.nodes[n.0].id
    }

    pub fn time(&self, n: NodeIx) -> usize {
        self.nodes[n.0].time
    }

    pub fn parent(&self, n: NodeIx) -> Option<NodeIx> {
        self.nodes[n.0].parent
    }

    pub fn children(&self, n: NodeIx) -> &[NodeIx] {
        &self.nodes[n.0].children
    }

    pub fn prob(&self, n: NodeIx) -> f64 {
        self.nodes[n.0].prob
    }

    pub fn path_prob(&self, n: NodeIx) -> f64 {
        self.nodes[n.0].path_prob
    }

    pub fn lookup(&self, id: &str) -> Option<NodeIx> {
        self.index.get(id).copied()
    }

    /// Nodes at time `t`, in canonical order.
    pub fn level(&self, t: usize) -> &[NodeIx] {
        &self.levels[t]
    }

    /// Leaves (time-`T` nodes) in depth-first order.
    pub fn leaves(&self) -> &[NodeIx] {
        &self.leaves
    }

    /// Leaves below `n`, in depth-first order.
    pub fn leaves_under(&self, n: NodeIx) -> &[NodeIx] {
        let (a, b) = self.nodes[n.0].leaf_span;
        &self.leaves[a..b]
    }

    /// The ancestor of `n` at level `t` (`n` itself when `t` is its time).
    pub fn ancestor_at(&self, n: NodeIx, t: usize) -> NodeIx {
        self.nodes[n.0].ancestors[t]
    }

    /// The root-to-`n` path, indexed by time.
    pub fn path(&self, n: NodeIx) -> &[NodeIx] {
        &self.nodes[n.0].ancestors
    }

    /// `Σ_c p(c) f(c)` over the children of `n`.
    pub fn one_step<F: FnMut(NodeIx) -> f64>(&self, n: NodeIx, mut f: F) -> f64 {
        self.children(n).iter().map(|&c| self.prob(c) * f(c)).sum()
    }
}

fn assign_leaf_spans(nodes: &mut [Node], n: NodeIx, leaves: &mut Vec<NodeIx>) {
    let start = leaves.len();
    if nodes[n.0].children.is_empty() {
        leaves.push(n);
    } else {
        for c in nodes[n.0].children.clone() {
            assign_leaf_spans(nodes, c, leaves);
        }
    }
    nodes[n.0].leaf_span = (start, leaves.len());
}

/// An adapted process: one finite value per node on each level of its domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LeveledValue {
    levels: Vec<bool>,
    values: Vec<Option<f64>>,
}

impl LeveledValue {
    /// Defines the process on `levels` from `f`, which must return finite values.
    pub fn from_fn<I, F>(tree: &EventTree, levels: I, mut f: F) -> LeveledValue
    where
        I: IntoIterator<Item = usize>,
        F: FnMut(NodeIx) -> f64,
    {
        let mut mask = vec![false; tree.horizon() + 1];
        let mut values = vec![None; tree.len()];
        for l in levels {
            mask[l] = true;
            for &n in tree.level(l) {
                let v = f(n);
                debug_assert!(v.is_finite(), "non-finite process value at {}", tree.id(n));
                values[n.0] = Some(v);
            }
        }
        LeveledValue { levels: mask, values }
    }

    /// Like [`from_fn`](Self::from_fn) but reports missing or non-finite values.
    pub fn try_from_fn<I, F>(tree: &EventTree, levels: I, mut f: F) -> Result<LeveledValue>
    where
        I: IntoIterator<Item = usize>,
        F: FnMut(NodeIx) -> Option<f64>,
    {
        let mut mask = vec![false; tree.horizon() + 1];
        let mut values = vec![None; tree.len()];
        for l in levels {
            if l > tree.horizon() {
                return Err(Error::LevelMismatch(format!(
                    "level {l} beyond horizon {}",
                    tree.horizon()
                )));
            }
            mask[l] = true;
            for &n in tree.level(l) {
                let v = f(n).ok_or_else(|| Error::MissingValue {
                    node: tree.id(n).to_string(),
                    level: l,
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        node: tree.id(n).to_string(),
                    });
                }
                values[n.0] = Some(v);
            }
        }
        Ok(LeveledValue { levels: mask, values })
    }

    /// A process defined on every level.
    pub fn full<F: FnMut(NodeIx) -> f64>(tree: &EventTree, f: F) -> LeveledValue {
        LeveledValue::from_fn(tree, 0..=tree.horizon(), f)
    }

    /// A random variable measurable at time `level`.
    pub fn at_level<F: FnMut(NodeIx) -> f64>(tree: &EventTree, level: usize, f: F) -> LeveledValue {
        LeveledValue::from_fn(tree, [level], f)
    }

    pub fn constant(tree: &EventTree, c: f64) -> LeveledValue {
        LeveledValue::full(tree, |_| c)
    }

    pub fn get(&self, n: NodeIx) -> Option<f64> {
        self.values[n.0]
    }

    /// Value at `n`; panics when `n` lies outside the domain.
    pub fn at(&self, n: NodeIx) -> f64 {
        self.values[n.0].expect("node outside the process domain")
    }

    pub fn has_level(&self, level: usize) -> bool {
        self.levels.get(level).copied().unwrap_or(false)
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.iter().enumerate().filter_map(|(l, &on)| on.then_some(l))
    }

    pub(crate) fn value_or_missing(&self, tree: &EventTree, n: NodeIx) -> Result<f64> {
        self.get(n).ok_or_else(|| Error::MissingValue {
            node: tree.id(n).to_string(),
            level: tree.time(n),
        })
    }

    /// Largest absolute value over the domain.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `E[X | F_t]` at `node`, computed as the sum over level-`u` descendants of
/// the product of edge probabilities times `X`.
pub fn conditional_expectation(tree: &EventTree, x: &LeveledValue, u: usize, node: NodeIx) -> Result<f64> {
    let t = tree.time(node);
    if !x.has_level(u) {
        return Err(Error::LevelMismatch(format!("process not defined at level {u}")));
    }
    if t > u {
        return Err(Error::LevelMismatch(format!(
            "conditioning node {} at time {t} is after level {u}",
            tree.id(node)
        )));
    }
    fn descend(tree: &EventTree, x: &LeveledValue, u: usize, n: NodeIx, w: f64) -> Result<f64> {
        if tree.time(n) == u {
            return Ok(w * x.value_or_missing(tree, n)?);
        }
        let mut acc = 0.0;
        for &c in tree.children(n) {
            acc += descend(tree, x, u, c, w * tree.prob(c))?;
        }
        Ok(acc)
    }
    if t == u {
        return x.value_or_missing(tree, node);
    }
    descend(tree, x, u, node, 1.0)
}

/// The level-`t` process `E_t[X]` for `X` measurable at level `u ≥ t`, by
/// one-step backward averaging.
pub fn expect_at_level(tree: &EventTree, x: &LeveledValue, u: usize, t: usize) -> Result<LeveledValue> {
    if t > u || u > tree.horizon() {
        return Err(Error::LevelMismatch(format!("cannot condition level {u} on level {t}")));
    }
    let mut cur: Vec<f64> = vec![0.0; tree.len()];
    for &n in tree.level(u) {
        cur[n.0] = x.value_or_missing(tree, n)?;
    }
    for l in (t..u).rev() {
        for &n in tree.level(l) {
            cur[n.0] = tree.one_step(n, |c| cur[c.0]);
        }
    }
    Ok(LeveledValue::at_level(tree, t, |n| cur[n.0]))
}

/// Result of a first-hitting-time construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingTime {
    pub time: StoppingTime,
    /// Leaves (canonical order) whose path never met the flag; the time is
    /// clamped to the horizon there.
    pub clamped: Vec<NodeIx>,
}

impl HittingTime {
    pub fn is_clamped(&self) -> bool {
        !self.clamped.is_empty()
    }
}

/// `inf{t ≥ from : flag}` pathwise, clamped to the horizon where the flag never holds.
pub fn hitting_time<F>(tree: &EventTree, mut flag: F, from: &StoppingTime) -> HittingTime
where
    F: FnMut(NodeIx) -> bool,
{
    let horizon = tree.horizon();
    let mut first: Vec<Option<usize>> = vec![None; tree.len()];
    let mut clamped = Vec::new();
    for n in tree.nodes() {
        let t = tree.time(n);
        let inherited = tree.parent(n).and_then(|p| first[p.0]);
        first[n.0] = match inherited {
            Some(s) => Some(s),
            None if from.has_stopped(n) && flag(n) => Some(t),
            None if t == horizon => {
                clamped.push(n);
                Some(t)
            }
            None => None,
        };
    }
    HittingTime {
        time: StoppingTime::from_first_stops(first),
        clamped,
    }
}
