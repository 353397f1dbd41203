//! Independent brute-force oracles and instance generators for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stopgame_core::{
    generate_random_game, EventTree, Game, LeveledValue, NodeIx, NodeSpec, PayoffField, Player, TreeSpec,
};

/// Horizon in 0..=4 and branching in 1..=3, cycling through every combination.
pub fn shape_for(seed: u64) -> (usize, usize) {
    ((seed % 5) as usize, 1 + ((seed / 5) % 3) as usize)
}

pub fn random_game(seed: u64) -> Game {
    let (h, b) = shape_for(seed);
    generate_random_game(h, b, seed, (-1.0, 1.0)).to_game(false).unwrap()
}

/// Zero-sum game built from the player-1 payoffs of a random game.
pub fn random_zero_sum(seed: u64) -> Game {
    let (h, b) = shape_for(seed);
    let mut file = generate_random_game(h, b, seed, (-1.0, 1.0));
    file.payoffs.retain(|p| p.player == 1);
    file.to_game(true).unwrap()
}

/// A tree with random per-node branching in `1..=max_branch` and random probabilities.
pub fn random_tree(rng: &mut ChaCha8Rng, horizon: usize, max_branch: usize) -> EventTree {
    let mut nodes = vec![NodeSpec::root("r")];
    let mut level = vec!["r".to_string()];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for parent in &level {
            let k = rng.gen_range(1..=max_branch);
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            for (i, wi) in w.iter().enumerate() {
                let id = format!("{parent}.{i}");
                nodes.push(NodeSpec::child(id.clone(), parent.clone(), wi / total));
                next.push(id);
            }
        }
        level = next;
    }
    EventTree::build(&TreeSpec { horizon, nodes }).unwrap()
}

/// Number of stopping times, saturating at `u64::MAX`.
pub fn count_stopping_times(tree: &EventTree) -> u64 {
    fn go(tree: &EventTree, n: NodeIx) -> u64 {
        let kids = tree.children(n);
        if kids.is_empty() {
            return 1;
        }
        kids.iter()
            .fold(1u64, |acc, &c| acc.saturating_mul(go(tree, c)))
            .saturating_add(1)
    }
    go(tree, tree.root())
}

/// Stopping times as per-leaf realized times, by recursion over stop-node sets.
pub fn all_stopping_times(tree: &EventTree) -> Vec<Vec<usize>> {
    fn go(tree: &EventTree, n: NodeIx) -> Vec<Vec<(NodeIx, usize)>> {
        let leaves = tree.leaves_under(n);
        let here = vec![leaves.iter().map(|&l| (l, tree.time(n))).collect::<Vec<_>>()];
        if tree.children(n).is_empty() {
            return here;
        }
        let mut combos: Vec<Vec<(NodeIx, usize)>> = vec![Vec::new()];
        for &c in tree.children(n) {
            let sub = go(tree, c);
            combos = combos
                .iter()
                .flat_map(|a| sub.iter().map(move |s| [a.clone(), s.clone()].concat()))
                .collect();
        }
        here.into_iter().chain(combos).collect()
    }
    let leaves = tree.leaves();
    go(tree, tree.root())
        .into_iter()
        .map(|assign| {
            leaves
                .iter()
                .map(|l| assign.iter().find(|(x, _)| x == l).unwrap().1)
                .collect()
        })
        .collect()
}

/// `(sup_ρ inf_τ, inf_τ sup_ρ)` of `E[F_ρ 1{ρ≤τ} + G_τ 1{ρ>τ}]` by exhaustion.
pub fn dynkin_brute_force(tree: &EventTree, f: &LeveledValue, g: &LeveledValue) -> (f64, f64) {
    let times = all_stopping_times(tree);
    let leaves = tree.leaves();
    let payoff = |rho: &[usize], tau: &[usize]| -> f64 {
        leaves
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let w = tree.path_prob(l);
                if rho[k] <= tau[k] {
                    w * f.at(tree.ancestor_at(l, rho[k]))
                } else {
                    w * g.at(tree.ancestor_at(l, tau[k]))
                }
            })
            .sum()
    };
    let lower = times
        .iter()
        .map(|r| times.iter().map(|t| payoff(r, t)).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = times
        .iter()
        .map(|t| times.iter().map(|r| payoff(r, t)).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    (lower, upper)
}

/// `E[X_u | node]` by summing over the leaves below `node`.
pub fn path_sum_expectation(tree: &EventTree, x: &LeveledValue, u: usize, node: NodeIx) -> f64 {
    let base = tree.path_prob(node);
    tree.leaves_under(node)
        .iter()
        .map(|&l| tree.path_prob(l) / base * x.at(tree.ancestor_at(l, u)))
        .sum()
}

pub fn max_abs_diff(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// The level-`T` slice `U^player(T, T)` as a process.
pub fn terminal_slice(tree: &EventTree, u: &PayoffField, player: Player) -> LeveledValue {
    let h = tree.horizon();
    LeveledValue::at_level(tree, h, |n| u.value(player, h, h, n))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
