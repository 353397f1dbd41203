//! Equilibria of two-player stopping games with adjustable strategies on
//! finite event trees.
//!
//! Each player picks an initial stopping rule and, for every time the
//! opponent might stop first, a follow-up rule. The crate solves the
//! simultaneous-move game (mixed equilibrium), the sequential-move game (pure
//! equilibrium) and the zero-sum game (saddle point), and certifies every
//! solution against exact best responses.

pub mod cli;
pub mod dynkin;
pub mod error;
pub mod game_file;
pub mod probspace;
pub mod report;
pub mod seq_eq;
pub mod sim_eq;
pub mod snell;
pub mod strategies;
pub mod verify;

pub use dynkin::{
    certified_saddle, dynkin_value, solve_dynkin, zero_sum_saddle, CertifiedSaddle, DynkinSolution, ZeroSumSaddle,
};
pub use error::{Error, Result};
pub use game_file::{generate_random_game, Game, GameFile, ProfileFile};
pub use probspace::{conditional_expectation, hitting_time, EventTree, LeveledValue, NodeIx, NodeSpec, TreeSpec};
pub use seq_eq::{seq_equilibrium, Assembly, SeqEquilibrium};
pub use sim_eq::{sim_equilibrium, stage_nash_2x2, SimEquilibrium};
pub use snell::{snell, Direction, Window};
pub use strategies::{
    payoff_mixed_sim, payoff_pure, AdjustmentFamilyA, AdjustmentFamilyB, MixedStrategyA, PayoffField, Player,
    PureProfile, RandomizedStoppingTime, StoppingTime, StrategyA, StrategyB,
};
pub use verify::{best_response, check_equilibrium, enumerate_oracle, EquilibriumReport, Mode, Profile};
