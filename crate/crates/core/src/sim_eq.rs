//! Mixed equilibrium of the simultaneous-move game.
//!
//! Fix each player's reaction to an opponent stop as the optimal one-sided
//! stopping rule. What remains is a non-zero-sum Dynkin game in which a lone
//! stop by player 1 at `t` pays `X_t`, a lone stop by player 2 pays `Y_t` and a
//! joint stop pays `Z_t = U(t, t)`. That game is solved by backward induction,
//! one 2×2 bimatrix stage game per node; the per-node mixed actions are the
//! randomized initial rules of the equilibrium.

use crate::error::Result;
use crate::probspace::{EventTree, LeveledValue, NodeIx};
use crate::snell::{reaction_value, Direction, Side, Window};
use crate::strategies::{
    payoff_mixed_sim, response_values, AdjustmentFamilyA, MixedStrategyA, PayoffField, Player, RandomizedStoppingTime,
};
use crate::verify::{check_equilibrium, EquilibriumReport, Profile};

/// Tolerance for accepting a pure stage profile.
pub const STAGE_TOL: f64 = 1e-12;
/// Mixed-equilibrium denominators below this are treated as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Allowed mismatch between the evaluated payoff and the backward-induction value.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SimProcessBundle {
    /// `X¹_t = E_t[U¹(t, τ₁*(t))]`
    pub x1: LeveledValue,
    /// `X²_t = ess sup_{σ ≥ (t+1)∧T} E_t[U²(t, σ)]`
    pub x2: LeveledValue,
    /// `Y¹_t = ess sup_{σ ≥ (t+1)∧T} E_t[U¹(σ, t)]`
    pub y1: LeveledValue,
    /// `Y²_t = E_t[U²(ρ₁*(t), t)]`
    pub y2: LeveledValue,
    pub z1: LeveledValue,
    pub z2: LeveledValue,
    pub rho1_star: AdjustmentFamilyA,
    pub tau1_star: AdjustmentFamilyA,
}

pub fn sim_processes(tree: &EventTree, u: &PayoffField) -> Result<SimProcessBundle> {
    let y1 = reaction_value(tree, u, Player::One, Side::First, Window::Strict, Direction::Max)?;
    let x2 = reaction_value(tree, u, Player::Two, Side::Second, Window::Strict, Direction::Max)?;
    let rho1_star = y1.family_a(tree)?;
    let tau1_star = x2.family_a(tree)?;
    let x1_levels = response_values(tree, u, Player::One, tau1_star.rules(), true);
    let y2_levels = response_values(tree, u, Player::Two, rho1_star.rules(), false);
    let x1 = LeveledValue::full(tree, |n| x1_levels[tree.time(n)].at(n));
    let y2 = LeveledValue::full(tree, |n| y2_levels[tree.time(n)].at(n));
    let diag = |p: Player| {
        LeveledValue::full(tree, |n| {
            let t = tree.time(n);
            u.value(p, t, t, n)
        })
    };
    Ok(SimProcessBundle {
        x1,
        x2: x2.values,
        y1: y1.values,
        y2,
        z1: diag(Player::One),
        z2: diag(Player::Two),
        rho1_star,
        tau1_star,
    })
}

/// A 2×2 bimatrix game. Row/column 0 is "stop", 1 is "continue"; rows belong
/// to player 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageGame {
    pub a: [[f64; 2]; 2],
    pub b: [[f64; 2]; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    /// Both players must stop (horizon node).
    Forced,
    Pure,
    Mixed,
    /// No pure equilibrium passed and a mixed denominator vanished.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageSolution {
    /// Player-1 stop probability.
    pub p: f64,
    /// Player-2 stop probability.
    pub q: f64,
    pub value1: f64,
    pub value2: f64,
    pub kind: StageKind,
}

impl StageGame {
    fn weights(x: f64) -> [f64; 2] {
        [x, 1.0 - x]
    }

    /// Expected payoffs when player 1 stops with `p` and player 2 with `q`.
    pub fn values(&self, p: f64, q: f64) -> (f64, f64) {
        let (pw, qw) = (StageGame::weights(p), StageGame::weights(q));
        let mut v = (0.0, 0.0);
        for (r, pr) in pw.iter().enumerate() {
            for (c, qc) in qw.iter().enumerate() {
                v.0 += pr * qc * self.a[r][c];
                v.1 += pr * qc * self.b[r][c];
            }
        }
        v
    }

    /// Best gain available to each player from a unilateral pure deviation.
    pub fn deviation_gains(&self, p: f64, q: f64) -> (f64, f64) {
        let (v1, v2) = self.values(p, q);
        let (pw, qw) = (StageGame::weights(p), StageGame::weights(q));
        let row = |r: usize| qw[0] * self.a[r][0] + qw[1] * self.a[r][1];
        let col = |c: usize| pw[0] * self.b[0][c] + pw[1] * self.b[1][c];
        (row(0).max(row(1)) - v1, col(0).max(col(1)) - v2)
    }
}

const PRIORITY: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

fn pure_gains(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2], r: usize, c: usize) -> (f64, f64) {
    (a[1 - r][c] - a[r][c], b[r][1 - c] - b[r][c])
}

/// One Nash equilibrium of a 2×2 bimatrix game: the first pure profile in the
/// order (stop,stop), (stop,cont), (cont,stop), (cont,cont) that passes, else
/// the interior mixed equilibrium.
pub fn stage_nash_2x2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> StageSolution {
    let game = StageGame { a, b };
    let prob = |x: usize| if x == 0 { 1.0 } else { 0.0 };
    for &(r, c) in &PRIORITY {
        let (g1, g2) = pure_gains(&a, &b, r, c);
        if g1 <= STAGE_TOL && g2 <= STAGE_TOL {
            return StageSolution {
                p: prob(r),
                q: prob(c),
                value1: a[r][c],
                value2: b[r][c],
                kind: StageKind::Pure,
            };
        }
    }
    let den_q = a[0][0] - a[0][1] - a[1][0] + a[1][1];
    let den_p = b[0][0] - b[1][0] - b[0][1] + b[1][1];
    if den_q.abs() < DEGENERATE_TOL || den_p.abs() < DEGENERATE_TOL {
        let (r, c) = PRIORITY
            .iter()
            .copied()
            .min_by(|&(r1, c1), &(r2, c2)| {
                let g = |r, c| {
                    let (x, y) = pure_gains(&a, &b, r, c);
                    x.max(y)
                };
                g(r1, c1).total_cmp(&g(r2, c2))
            })
            .unwrap();
        return StageSolution {
            p: prob(r),
            q: prob(c),
            value1: a[r][c],
            value2: b[r][c],
            kind: StageKind::Degenerate,
        };
    }
    let q = ((a[1][1] - a[0][1]) / den_q).clamp(0.0, 1.0);
    let p = ((b[1][1] - b[1][0]) / den_p).clamp(0.0, 1.0);
    let (value1, value2) = game.values(p, q);
    StageSolution {
        p,
        q,
        value1,
        value2,
        kind: StageKind::Mixed,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub node: NodeIx,
    pub game: StageGame,
    pub solution: StageSolution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedDynkinEquilibrium {
    pub alpha: RandomizedStoppingTime,
    pub beta: RandomizedStoppingTime,
    /// Continuation equilibrium values.
    pub w1: LeveledValue,
    pub w2: LeveledValue,
    /// Indexed by node.
    pub stage_record: Vec<StageRecord>,
}

impl RandomizedDynkinEquilibrium {
    pub fn root_values(&self, tree: &EventTree) -> (f64, f64) {
        (self.w1.at(tree.root()), self.w2.at(tree.root()))
    }

    pub fn degenerate_nodes(&self) -> impl Iterator<Item = NodeIx> + '_ {
        self.stage_record
            .iter()
            .filter(|r| r.solution.kind == StageKind::Degenerate)
            .map(|r| r.node)
    }
}

pub fn randomized_dynkin_equilibrium(
    tree: &EventTree,
    bundle: &SimProcessBundle,
) -> Result<RandomizedDynkinEquilibrium> {
    let horizon = tree.horizon();
    let mut w1 = vec![0.0; tree.len()];
    let mut w2 = vec![0.0; tree.len()];
    let mut records: Vec<Option<StageRecord>> = vec![None; tree.len()];
    for level in (0..=horizon).rev() {
        for &n in tree.level(level) {
            let (z1, z2) = (bundle.z1.at(n), bundle.z2.at(n));
            let (game, solution) = if level == horizon {
                let game = StageGame {
                    a: [[z1; 2]; 2],
                    b: [[z2; 2]; 2],
                };
                let sol = StageSolution {
                    p: 1.0,
                    q: 1.0,
                    value1: z1,
                    value2: z2,
                    kind: StageKind::Forced,
                };
                (game, sol)
            } else {
                let c1 = tree.one_step(n, |c| w1[c.0]);
                let c2 = tree.one_step(n, |c| w2[c.0]);
                let a = [[z1, bundle.x1.at(n)], [bundle.y1.at(n), c1]];
                let b = [[z2, bundle.x2.at(n)], [bundle.y2.at(n), c2]];
                (StageGame { a, b }, stage_nash_2x2(a, b))
            };
            w1[n.0] = solution.value1;
            w2[n.0] = solution.value2;
            records[n.0] = Some(StageRecord {
                node: n,
                game,
                solution,
            });
        }
    }
    let stage_record: Vec<StageRecord> = records.into_iter().map(|r| r.unwrap()).collect();
    let alpha = RandomizedStoppingTime::new(tree, |n| stage_record[n.0].solution.p)?;
    let beta = RandomizedStoppingTime::new(tree, |n| stage_record[n.0].solution.q)?;
    Ok(RandomizedDynkinEquilibrium {
        alpha,
        beta,
        w1: LeveledValue::full(tree, |n| w1[n.0]),
        w2: LeveledValue::full(tree, |n| w2[n.0]),
        stage_record,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimEquilibrium {
    pub rho: MixedStrategyA,
    pub tau: MixedStrategyA,
    /// Payoffs of `(rho, tau)` evaluated directly.
    pub values: (f64, f64),
    pub bundle: SimProcessBundle,
    pub dynkin: RandomizedDynkinEquilibrium,
    pub report: EquilibriumReport,
    /// Internal inconsistencies; empty on a healthy run.
    pub defects: Vec<String>,
}

impl SimEquilibrium {
    pub fn is_certified(&self) -> bool {
        self.report.pass && self.defects.is_empty()
    }
}

/// Solves the simultaneous game and certifies the result at tolerance `eps`.
pub fn sim_equilibrium(tree: &EventTree, u: &PayoffField, eps: f64) -> Result<SimEquilibrium> {
    let bundle = sim_processes(tree, u)?;
    let dynkin = randomized_dynkin_equilibrium(tree, &bundle)?;
    let rho = MixedStrategyA {
        initial: dynkin.alpha.clone(),
        adjust: bundle.rho1_star.clone(),
    };
    let tau = MixedStrategyA {
        initial: dynkin.beta.clone(),
        adjust: bundle.tau1_star.clone(),
    };
    let values = payoff_mixed_sim(tree, u, &rho, &tau);
    let mut defects = Vec::new();
    let root = dynkin.root_values(tree);
    if (values.0 - root.0).abs() > CONSISTENCY_TOL || (values.1 - root.1).abs() > CONSISTENCY_TOL {
        defects.push(format!(
            "evaluated payoffs ({}, {}) differ from backward-induction values ({}, {})",
            values.0, values.1, root.0, root.1
        ));
    }
    let report = check_equilibrium(tree, u, Profile::Sim(&rho, &tau), None, eps)?;
    if !report.pass {
        defects.push(format!(
            "best-response gaps ({:e}, {:e}) exceed {eps:e}",
            report.gaps.0, report.gaps.1
        ));
    }
    Ok(SimEquilibrium {
        rho,
        tau,
        values,
        bundle,
        dynkin,
        report,
        defects,
    })
}
