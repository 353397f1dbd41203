//! Zero-sum Dynkin games and the saddle point of the zero-sum stopping game
//! with adjustable strategies.
//!
//! The Dynkin value is computed by the median recursion
//! `v_T = F_T`, `v_t = median(F_t, G_t, E_t[v_{t+1}])`. With `F ≤ G` this is
//! the value of the game where the maximizer stopping first (or together with
//! the minimizer) receives `F` and a strictly earlier minimizer stop pays `G`;
//! with `G ≤ F` the same recursion gives the value with the roles of the
//! maximizer and minimizer exchanged.

use crate::error::{Error, Result};
use crate::probspace::{hitting_time, EventTree, HittingTime, LeveledValue};
use crate::report::fmt_num;
use crate::snell::{reaction_value, Direction, Side, Window};
use crate::strategies::{PayoffField, Player, StoppingTime, StrategyA, StrategyB};
use crate::verify::{check_equilibrium, EquilibriumReport, Profile};

/// Tolerance for `v = F` / `v = G` tests in hitting sets.
pub const HIT_TOL: f64 = 1e-9;
/// Consistency tolerance between the game value and the saddle payoff.
pub const VALUE_TOL: f64 = 1e-9;

pub fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

pub fn dynkin_value(tree: &EventTree, f: &LeveledValue, g: &LeveledValue) -> Result<LeveledValue> {
    let horizon = tree.horizon();
    let mut v = vec![0.0; tree.len()];
    for level in (0..=horizon).rev() {
        for &n in tree.level(level) {
            let fv = f.value_or_missing(tree, n)?;
            v[n.0] = if level == horizon {
                fv
            } else {
                let gv = g.value_or_missing(tree, n)?;
                median3(fv, gv, tree.one_step(n, |c| v[c.0]))
            };
        }
    }
    Ok(LeveledValue::full(tree, |n| v[n.0]))
}

/// `(ρ_σ, τ_σ)`: first times from `σ` where `v` meets `F`, resp. `G`.
pub fn dynkin_hitting_saddle(
    tree: &EventTree,
    v: &LeveledValue,
    f: &LeveledValue,
    g: &LeveledValue,
    sigma: &StoppingTime,
) -> (HittingTime, HittingTime) {
    let rho = hitting_time(tree, |n| (v.at(n) - f.at(n)).abs() <= HIT_TOL, sigma);
    let tau = hitting_time(tree, |n| (v.at(n) - g.at(n)).abs() <= HIT_TOL, sigma);
    (rho, tau)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynkinSolution {
    pub v: LeveledValue,
    pub rho: StoppingTime,
    /// May be clamped to the horizon; clamping never changes the payoff
    /// because `ρ_σ ≤ T`.
    pub tau: HittingTime,
    /// `E[v_σ]`.
    pub value_at_root: f64,
}

/// Value and hitting-time saddle point of the Dynkin game from `σ`.
pub fn solve_dynkin(
    tree: &EventTree,
    f: &LeveledValue,
    g: &LeveledValue,
    sigma: &StoppingTime,
) -> Result<DynkinSolution> {
    let v = dynkin_value(tree, f, g)?;
    let (rho, tau) = dynkin_hitting_saddle(tree, &v, f, g, sigma);
    if rho.is_clamped() {
        return Err(Error::Defect(format!(
            "rho_sigma clamped on {} paths although v_T = F_T",
            rho.clamped.len()
        )));
    }
    let value_at_root = value_at(tree, &v, sigma);
    Ok(DynkinSolution {
        v,
        rho: rho.time,
        tau,
        value_at_root,
    })
}

/// `E[X_σ]` for an adapted process `X`.
pub fn value_at(tree: &EventTree, x: &LeveledValue, sigma: &StoppingTime) -> f64 {
    tree.leaves()
        .iter()
        .map(|&l| tree.path_prob(l) * x.at(sigma.stop_node(tree, l)))
        .sum()
}

/// Largest violation of `E_t[X_{(t+1)∧μ}] ≥ X_{t∧μ}` over nodes with `t < T`
/// that `from` has reached. Zero when the stopped process is a submartingale.
pub fn submartingale_defect(tree: &EventTree, x: &LeveledValue, mu: &StoppingTime, from: &StoppingTime) -> f64 {
    let mut worst = 0.0f64;
    for n in tree.nodes() {
        if tree.time(n) == tree.horizon() || !from.has_stopped(n) || mu.has_stopped(n) {
            // once μ has stopped the stopped process is constant
            continue;
        }
        let next = tree.one_step(n, |c| x.at(c));
        worst = worst.max(x.at(n) - next);
    }
    worst
}

/// Saddle point `(ρ*_σ, τ*_σ)` of the zero-sum game with payoff `U` to player 1
/// (who plays type A) and `-U` to player 2 (type B).
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumSaddle {
    pub rho_star: StrategyA,
    pub tau_star: StrategyB,
    /// `E[v_σ]`.
    pub value: f64,
    pub sigma: StoppingTime,
    /// `F_t = ess inf_{ξ ≥ t} E_t[U(t, ξ)]`
    pub f: LeveledValue,
    /// `G_t = (ess sup_{ξ ≥ (t+1)∧T} E_t[U(ξ, t)]) ∨ F_t`
    pub g: LeveledValue,
    pub dynkin: DynkinSolution,
}

/// Builds the saddle point from the player-1 slices of `u`.
pub fn zero_sum_saddle(tree: &EventTree, u: &PayoffField, sigma: &StoppingTime) -> Result<ZeroSumSaddle> {
    sigma.validate(tree)?;
    let f_react = reaction_value(tree, u, Player::One, Side::Second, Window::Inclusive, Direction::Min)?;
    let g_react = reaction_value(tree, u, Player::One, Side::First, Window::Strict, Direction::Max)?;
    let f = f_react.values.clone();
    let g = LeveledValue::full(tree, |n| g_react.values.at(n).max(f.at(n)));
    let dynkin = solve_dynkin(tree, &f, &g, sigma)?;
    let rho_star = StrategyA {
        initial: dynkin.rho.clone(),
        adjust: g_react.family_a(tree)?,
    };
    let tau_star = StrategyB {
        initial: dynkin.tau.time.clone(),
        adjust: f_react.family_b(tree)?,
    };
    Ok(ZeroSumSaddle {
        rho_star,
        tau_star,
        value: dynkin.value_at_root,
        sigma: sigma.clone(),
        f,
        g,
        dynkin,
    })
}

/// A saddle point from the constant start `sigma`, with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedSaddle {
    pub saddle: ZeroSumSaddle,
    pub report: EquilibriumReport,
    pub defects: Vec<String>,
}

impl CertifiedSaddle {
    pub fn is_certified(&self) -> bool {
        self.report.pass && self.defects.is_empty()
    }
}

pub fn certified_saddle(tree: &EventTree, u: &PayoffField, sigma: usize, eps: f64) -> Result<CertifiedSaddle> {
    if sigma > tree.horizon() {
        return Err(Error::Format(format!(
            "sigma {sigma} beyond horizon {}",
            tree.horizon()
        )));
    }
    let floor = StoppingTime::constant(tree, sigma);
    let saddle = zero_sum_saddle(tree, u, &floor)?;
    let report = check_equilibrium(
        tree,
        u,
        Profile::ZeroSum(&saddle.rho_star, &saddle.tau_star),
        Some(&floor),
        eps,
    )?;
    let mut defects = Vec::new();
    if (report.values.0 - saddle.value).abs() > VALUE_TOL {
        defects.push(format!(
            "saddle payoff {} differs from the game value {}",
            fmt_num(report.values.0),
            fmt_num(saddle.value)
        ));
    }
    Ok(CertifiedSaddle {
        saddle,
        report,
        defects,
    })
}
