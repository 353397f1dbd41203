//! Pure equilibrium of the sequential-move game.
//!
//! Two auxiliary Dynkin games are solved, one per player, each pitting the
//! player's own interest against the opponent's most punishing reaction.
//! `μ¹` and `μ²` are the first times each player prefers to act now; whoever
//! comes first stops, while the other plays the saddle strategy of that
//! player's game until then. Adjustments after a deviation are the punishing
//! optimizers.
//!
//! This threshold assembly can fail when `μ² < μ¹` and `v² = F²` already at
//! `μ²`: player 1 then stops in the same period as player 2 and receives
//! `H¹ < G¹`. The solver certifies the threshold profile and, when it is not an
//! equilibrium, returns the equilibrium obtained by backward induction over
//! per-node stage games instead.

use crate::dynkin::{dynkin_value, submartingale_defect, HIT_TOL};
use crate::error::Result;
use crate::probspace::{hitting_time, EventTree, HittingTime, LeveledValue, NodeIx};
use crate::snell::{reaction_value, Direction, Side, Window};
use crate::strategies::{
    payoff_pure, response_values, AdjustmentFamilyA, AdjustmentFamilyB, PayoffField, Player, PureProfile, StoppingTime,
    StrategyA, StrategyB,
};
use crate::verify::{check_equilibrium, EquilibriumReport, Profile};

/// Tolerance of the pointwise ordering certificates.
pub const ORDER_TOL: f64 = 1e-12;
/// Tolerance of the stopped sub-martingale certificates.
pub const SUBMARTINGALE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SeqProcessBundle {
    /// `ess inf_{ξ ≥ t} E_t[U¹(t, ξ)]`
    pub f1: LeveledValue,
    /// `(ess sup_{ξ ≥ (t+1)∧T} E_t[U¹(ξ, t)]) ∨ F¹_t`
    pub g1: LeveledValue,
    /// `ess sup_{ξ ≥ (t+1)∧T} E_t[U¹(ξ, t)]`, before the floor at `F¹`.
    pub g1_reaction: LeveledValue,
    /// `ess sup_{ξ ≥ t} E_t[U²(t, ξ)]`
    pub f2: LeveledValue,
    /// `(ess inf_{ξ ≥ (t+1)∧T} E_t[U²(ξ, t)]) ∧ F²_t`
    pub g2: LeveledValue,
    /// `E_t[U¹(t, τ̃²(t))]`
    pub h1: LeveledValue,
    /// `E_t[U²(ρ̃¹(t), t)]`
    pub h2: LeveledValue,
    pub v1: LeveledValue,
    pub v2: LeveledValue,
    pub tau_t1: AdjustmentFamilyB,
    pub rho_t1: AdjustmentFamilyA,
    pub tau_t2: AdjustmentFamilyB,
    pub rho_t2: AdjustmentFamilyA,
}

pub fn seq_processes(tree: &EventTree, u: &PayoffField) -> Result<SeqProcessBundle> {
    let f1 = reaction_value(tree, u, Player::One, Side::Second, Window::Inclusive, Direction::Min)?;
    let g1 = reaction_value(tree, u, Player::One, Side::First, Window::Strict, Direction::Max)?;
    let f2 = reaction_value(tree, u, Player::Two, Side::Second, Window::Inclusive, Direction::Max)?;
    let g2 = reaction_value(tree, u, Player::Two, Side::First, Window::Strict, Direction::Min)?;
    let tau_t1 = f1.family_b(tree)?;
    let rho_t1 = g1.family_a(tree)?;
    let tau_t2 = f2.family_b(tree)?;
    let rho_t2 = g2.family_a(tree)?;
    let g1v = LeveledValue::full(tree, |n| g1.values.at(n).max(f1.values.at(n)));
    let g2v = LeveledValue::full(tree, |n| g2.values.at(n).min(f2.values.at(n)));
    let v1 = dynkin_value(tree, &f1.values, &g1v)?;
    let v2 = dynkin_value(tree, &f2.values, &g2v)?;
    let h1_levels = response_values(tree, u, Player::One, tau_t2.rules(), true);
    let h2_levels = response_values(tree, u, Player::Two, rho_t1.rules(), false);
    Ok(SeqProcessBundle {
        f1: f1.values,
        g1: g1v,
        g1_reaction: g1.values,
        f2: f2.values,
        g2: g2v,
        h1: LeveledValue::full(tree, |n| h1_levels[tree.time(n)].at(n)),
        h2: LeveledValue::full(tree, |n| h2_levels[tree.time(n)].at(n)),
        v1,
        v2,
        tau_t1,
        rho_t1,
        tau_t2,
        rho_t2,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeqDiagnostics {
    /// Leaves where a hitting time was clamped to the horizon.
    pub clamped_mu1: Vec<NodeIx>,
    pub clamped_mu2: Vec<NodeIx>,
    pub clamped_rho2: Vec<NodeIx>,
    pub clamped_tau1: Vec<NodeIx>,
    /// `μ¹ ≤ inf{t : v¹ = F¹}` on every path.
    pub mu1_precedes_f1_hit: bool,
    /// Worst violation of `F¹ ≤ H¹`.
    pub f1_above_h1: f64,
    /// Worst violation of `H² ∧ F² ≥ G²`.
    pub g2_above_h2_f2: f64,
    pub submartingale_v1: f64,
    pub submartingale_v2: f64,
}

impl SeqDiagnostics {
    pub fn any_clamp(&self) -> bool {
        !(self.clamped_mu1.is_empty()
            && self.clamped_mu2.is_empty()
            && self.clamped_rho2.is_empty()
            && self.clamped_tau1.is_empty())
    }

    fn defects(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, set) in [
            ("mu1", &self.clamped_mu1),
            ("mu2", &self.clamped_mu2),
            ("rho2", &self.clamped_rho2),
            ("tau1", &self.clamped_tau1),
        ] {
            if !set.is_empty() {
                out.push(format!("{name} clamped on {} paths", set.len()));
            }
        }
        if !self.mu1_precedes_f1_hit {
            out.push("mu1 later than the first time v1 meets F1".into());
        }
        if self.f1_above_h1 > ORDER_TOL {
            out.push(format!("F1 exceeds H1 by {:e}", self.f1_above_h1));
        }
        if self.g2_above_h2_f2 > ORDER_TOL {
            out.push(format!("G2 exceeds H2 ∧ F2 by {:e}", self.g2_above_h2_f2));
        }
        for (name, d) in [("v1", self.submartingale_v1), ("v2", self.submartingale_v2)] {
            if d > SUBMARTINGALE_TOL {
                out.push(format!("stopped {name} fails the sub-martingale check by {d:e}"));
            }
        }
        out
    }
}

/// How the returned profile was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assembly {
    /// The threshold profile built from `μ¹`, `μ²` and the hitting times.
    Threshold,
    /// Backward induction over stage games, used when the threshold profile
    /// fails certification.
    BackwardInduction,
}

impl Assembly {
    pub fn name(self) -> &'static str {
        match self {
            Assembly::Threshold => "threshold",
            Assembly::BackwardInduction => "backward induction",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqEquilibrium {
    pub mu1: StoppingTime,
    pub mu2: StoppingTime,
    pub rho2_mu2: StoppingTime,
    pub tau1_mu1: StoppingTime,
    /// The threshold profile and its certificate.
    pub threshold: (StrategyA, StrategyB),
    pub threshold_report: EquilibriumReport,
    pub assembly: Assembly,
    /// The returned profile.
    pub rho_star: StrategyA,
    pub tau_star: StrategyB,
    pub values: (f64, f64),
    pub bundle: SeqProcessBundle,
    pub diagnostics: SeqDiagnostics,
    pub report: EquilibriumReport,
    pub defects: Vec<String>,
}

impl SeqEquilibrium {
    pub fn is_certified(&self) -> bool {
        self.report.pass && self.defects.is_empty()
    }
}

/// Which player's threshold is reached first at a node, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Lead {
    None,
    /// `μ¹ ≤ μ²`, with `μ¹` reached at the given time.
    One(usize),
    /// `μ² < μ¹`, with `μ²` reached at the given time.
    Two(usize),
}

fn lead(mu1: &StoppingTime, mu2: &StoppingTime, n: NodeIx) -> Lead {
    match (mu1.stop_time_by(n), mu2.stop_time_by(n)) {
        (Some(x), b) if b.is_none_or(|y| y >= x) => Lead::One(x),
        (a, Some(y)) if a.is_none_or(|x| x > y) => Lead::Two(y),
        _ => Lead::None,
    }
}

/// Rule `t` follows `primary` on paths through level-`t` nodes where `use_primary`
/// holds, and `fallback` elsewhere.
fn switch_rule<F>(
    tree: &EventTree,
    t: usize,
    primary: &StoppingTime,
    fallback: &StoppingTime,
    use_primary: F,
) -> StoppingTime
where
    F: Fn(NodeIx) -> bool,
{
    StoppingTime::from_decisions(tree, |n| {
        let time = tree.time(n);
        if time < t {
            return false;
        }
        let rule = if use_primary(tree.ancestor_at(n, t)) {
            primary
        } else {
            fallback
        };
        rule.stops_at(tree, n)
    })
}

fn clamped(h: &HittingTime) -> Vec<NodeIx> {
    h.clamped.clone()
}

/// Pure equilibrium by backward induction. At each node player 2 stops iff
/// stopping alone beats continuing; player 1 stops iff `H¹` beats the outcome
/// of continuing against that choice. Ties go to stopping.
pub fn stage_equilibrium(tree: &EventTree, b: &SeqProcessBundle) -> (StrategyA, StrategyB) {
    let horizon = tree.horizon();
    let mut w1 = vec![0.0; tree.len()];
    let mut w2 = vec![0.0; tree.len()];
    let mut stop1 = vec![false; tree.len()];
    let mut stop2 = vec![false; tree.len()];
    for level in (0..=horizon).rev() {
        for &n in tree.level(level) {
            if level == horizon {
                stop1[n.0] = true;
                stop2[n.0] = true;
                w1[n.0] = b.h1.at(n);
                w2[n.0] = b.f2.at(n);
                continue;
            }
            let c1 = tree.one_step(n, |c| w1[c.0]);
            let c2 = tree.one_step(n, |c| w2[c.0]);
            stop2[n.0] = b.h2.at(n) >= c2;
            let (cont1, cont2) = if stop2[n.0] {
                (b.g1_reaction.at(n), b.h2.at(n))
            } else {
                (c1, c2)
            };
            stop1[n.0] = b.h1.at(n) >= cont1;
            (w1[n.0], w2[n.0]) = if stop1[n.0] {
                (b.h1.at(n), b.f2.at(n))
            } else {
                (cont1, cont2)
            };
        }
    }
    (
        StrategyA {
            initial: StoppingTime::from_decisions(tree, |n| stop1[n.0]),
            adjust: b.rho_t1.clone(),
        },
        StrategyB {
            initial: StoppingTime::from_decisions(tree, |n| stop2[n.0]),
            adjust: b.tau_t2.clone(),
        },
    )
}

/// Solves the sequential game and certifies the result at tolerance `eps`.
pub fn seq_equilibrium(tree: &EventTree, u: &PayoffField, eps: f64) -> Result<SeqEquilibrium> {
    let b = seq_processes(tree, u)?;
    let zero = StoppingTime::constant(tree, 0);
    let mu1 = hitting_time(tree, |n| b.v1.at(n) <= b.h1.at(n) + HIT_TOL, &zero);
    let mu2 = hitting_time(tree, |n| b.v2.at(n) <= b.h2.at(n).min(b.f2.at(n)) + HIT_TOL, &zero);
    let rho2 = hitting_time(tree, |n| (b.v2.at(n) - b.f2.at(n)).abs() <= HIT_TOL, &mu2.time);
    let tau1 = hitting_time(tree, |n| (b.v1.at(n) - b.g1.at(n)).abs() <= HIT_TOL, &mu1.time);
    let (m1, m2) = (&mu1.time, &mu2.time);

    let rho_initial = StoppingTime::from_decisions(tree, |n| match lead(m1, m2, n) {
        Lead::One(_) => true,
        Lead::Two(_) => rho2.time.has_stopped(n),
        Lead::None => false,
    });
    let tau_initial = StoppingTime::from_decisions(tree, |n| match lead(m1, m2, n) {
        Lead::One(_) => tau1.time.has_stopped(n),
        Lead::Two(_) => true,
        Lead::None => false,
    });
    let horizon = tree.horizon();
    let rho_rules = (0..=horizon)
        .map(|t| {
            switch_rule(
                tree,
                t,
                b.rho_t2.rule(t),
                b.rho_t1.rule(t),
                |n| matches!(lead(m1, m2, n), Lead::Two(y) if y < t),
            )
        })
        .collect();
    let tau_rules = (0..=horizon)
        .map(|t| {
            switch_rule(
                tree,
                t,
                b.tau_t1.rule(t),
                b.tau_t2.rule(t),
                |n| matches!(lead(m1, m2, n), Lead::One(x) if x < t),
            )
        })
        .collect();
    let rho_star = StrategyA {
        initial: rho_initial,
        adjust: AdjustmentFamilyA::new(tree, rho_rules)?,
    };
    let tau_star = StrategyB {
        initial: tau_initial,
        adjust: AdjustmentFamilyB::new(tree, tau_rules)?,
    };
    let threshold_report = check_equilibrium(tree, u, Profile::Seq(&rho_star, &tau_star), None, eps)?;
    let (assembly, out_rho, out_tau) = if threshold_report.pass {
        (Assembly::Threshold, rho_star.clone(), tau_star.clone())
    } else {
        let (r, t) = stage_equilibrium(tree, &b);
        (Assembly::BackwardInduction, r, t)
    };
    let values = payoff_pure(tree, u, PureProfile::Seq(&out_rho, &out_tau));

    let f1_hit = hitting_time(tree, |n| (b.v1.at(n) - b.f1.at(n)).abs() <= HIT_TOL, &zero);
    let worst = |f: &dyn Fn(NodeIx) -> f64| tree.nodes().map(f).fold(0.0f64, f64::max);
    let diagnostics = SeqDiagnostics {
        clamped_mu1: clamped(&mu1),
        clamped_mu2: clamped(&mu2),
        clamped_rho2: clamped(&rho2),
        clamped_tau1: clamped(&tau1),
        mu1_precedes_f1_hit: f1_hit.time.dominates(tree, m1),
        f1_above_h1: worst(&|n| b.f1.at(n) - b.h1.at(n)),
        g2_above_h2_f2: worst(&|n| b.g2.at(n) - b.h2.at(n).min(b.f2.at(n))),
        submartingale_v1: submartingale_defect(tree, &b.v1, m1, &zero),
        submartingale_v2: submartingale_defect(tree, &b.v2, m2, &zero),
    };
    let mut defects = diagnostics.defects();
    let report = check_equilibrium(tree, u, Profile::Seq(&out_rho, &out_tau), None, eps)?;
    if !report.pass {
        defects.push(format!(
            "best-response gaps ({:e}, {:e}) exceed {eps:e}",
            report.gaps.0, report.gaps.1
        ));
    }
    Ok(SeqEquilibrium {
        mu1: mu1.time,
        mu2: mu2.time,
        rho2_mu2: rho2.time,
        tau1_mu1: tau1.time,
        threshold: (rho_star, tau_star),
        threshold_report,
        assembly,
        rho_star: out_rho,
        tau_star: out_tau,
        values,
        bundle: b,
        diagnostics,
        report,
        defects,
    })
}
