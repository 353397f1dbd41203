mod common;

use proptest::prelude::*;
use stopgame_core::dynkin::{dynkin_value, median3};
use stopgame_core::seq_eq::seq_equilibrium;
use stopgame_core::sim_eq::{sim_equilibrium, StageGame};
use stopgame_core::strategies::{effective_times_seq, effective_times_sim, payoff_mixed_sim, PureProfile};
use stopgame_core::verify::{best_response, enumerate_oracle, Column, EnumLimits, Mode, Opponent};
use stopgame_core::{
    generate_random_game, payoff_pure, stage_nash_2x2, EventTree, GameFile, LeveledValue, MixedStrategyA, PayoffField,
    Player,
};

fn small_game() -> impl Strategy<Value = (usize, usize, u64)> {
    (0usize..=2, 1usize..=2, any::<u64>())
}

fn random_payoffs(tree: &EventTree, seed: u64) -> PayoffField {
    use rand::Rng;
    let mut rng = common::rng(seed);
    PayoffField::from_fn(tree, |_, _, _, _| rng.gen_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seq_best_response_matches_enumeration((h, b, seed) in small_game()) {
        let game = generate_random_game(h, b, seed, (-1.0, 1.0)).to_game(false).unwrap();
        let (tree, u) = (&game.tree, &game.payoffs);
        let table = enumerate_oracle(tree, u, Mode::Seq, EnumLimits::default()).unwrap();
        let Column::B(cols) = &table.cols else { panic!("seq columns are type B") };
        for (c, tau) in cols.iter().enumerate() {
            let best = (0..table.rows.len()).map(|r| table.payoff(r, c).0).fold(f64::NEG_INFINITY, f64::max);
            let br = best_response(tree, u, Mode::Seq, Player::One, Opponent::TypeB(tau), None).unwrap();
            prop_assert!((br.value - best).abs() <= 1e-12, "col {c}: {} vs {best}", br.value);
        }
        for (r, rho) in table.rows.iter().enumerate() {
            let best = (0..cols.len()).map(|c| table.payoff(r, c).1).fold(f64::NEG_INFINITY, f64::max);
            let br = best_response(tree, u, Mode::Seq, Player::Two, Opponent::TypeA(rho), None).unwrap();
            prop_assert!((br.value - best).abs() <= 1e-12, "row {r}: {} vs {best}", br.value);
        }
    }

    #[test]
    fn sim_best_response_matches_enumeration((h, b, seed) in small_game()) {
        let game = generate_random_game(h, b, seed, (-1.0, 1.0)).to_game(false).unwrap();
        let (tree, u) = (&game.tree, &game.payoffs);
        let table = enumerate_oracle(tree, u, Mode::Sim, EnumLimits::default()).unwrap();
        let Column::A(cols) = &table.cols else { panic!("sim columns are type A") };
        for (c, tau) in cols.iter().enumerate() {
            let best = (0..table.rows.len()).map(|r| table.payoff(r, c).0).fold(f64::NEG_INFINITY, f64::max);
            let mixed = MixedStrategyA::from_pure(tree, tau);
            let br = best_response(tree, u, Mode::Sim, Player::One, Opponent::Mixed(&mixed), None).unwrap();
            prop_assert!((br.value - best).abs() <= 1e-12, "col {c}: {} vs {best}", br.value);
        }
    }

    #[test]
    fn mixed_payoff_of_pure_profiles_is_pure_payoff((h, b, seed) in small_game()) {
        let game = generate_random_game(h, b, seed, (-1.0, 1.0)).to_game(false).unwrap();
        let (tree, u) = (&game.tree, &game.payoffs);
        let table = enumerate_oracle(tree, u, Mode::Sim, EnumLimits::default()).unwrap();
        let Column::A(cols) = &table.cols else { panic!("sim columns are type A") };
        for rho in table.rows.iter().take(6) {
            for tau in cols.iter().take(6) {
                let pure = payoff_pure(tree, u, PureProfile::Sim(rho, tau));
                let mixed = payoff_mixed_sim(
                    tree, u, &MixedStrategyA::from_pure(tree, rho), &MixedStrategyA::from_pure(tree, tau),
                );
                prop_assert!((pure.0 - mixed.0).abs() <= 1e-12 && (pure.1 - mixed.1).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn effective_times_respect_strategy_classes((h, b, seed) in small_game()) {
        let game = generate_random_game(h, b, seed, (-1.0, 1.0)).to_game(false).unwrap();
        let tree = &game.tree;
        let table = enumerate_oracle(tree, &game.payoffs, Mode::Seq, EnumLimits::default()).unwrap();
        let Column::B(cols) = &table.cols else { panic!("seq columns are type B") };
        for rho in &table.rows {
            for tau in cols {
                for &leaf in tree.leaves() {
                    let (r, s) = (rho.initial.realized_time(leaf), tau.initial.realized_time(leaf));
                    let (x, y) = effective_times_seq(rho, tau, leaf);
                    prop_assert!(x.min(y) == r.min(s));
                    if r <= s {
                        prop_assert!(x == r && y >= r);
                    } else {
                        prop_assert!(y == s && (x > s || s == h));
                    }
                }
            }
        }
        for rho in &table.rows {
            for tau in &table.rows {
                for &leaf in tree.leaves() {
                    let (x, y) = effective_times_sim(rho, tau, leaf);
                    let (r, s) = (rho.initial.realized_time(leaf), tau.initial.realized_time(leaf));
                    prop_assert!(x.min(y) == r.min(s));
                    if r != s {
                        prop_assert!(x != y || x == h);
                    }
                }
            }
        }
    }

    #[test]
    fn dynkin_sandwich(h in 0usize..=4, b in 1usize..=3, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = common::rng(seed);
        let tree = common::random_tree(&mut rng, h, b);
        let f = LeveledValue::full(&tree, |_| rng.gen_range(-1.0..1.0));
        let g = LeveledValue::full(&tree, |n| f.at(n) + rng.gen_range(0.0..1.0));
        let v = dynkin_value(&tree, &f, &g).unwrap();
        for n in tree.nodes() {
            prop_assert!(f.at(n) <= v.at(n) && v.at(n) <= g.at(n));
            if tree.time(n) == h {
                prop_assert_eq!(v.at(n), f.at(n));
            } else {
                let cont = tree.one_step(n, |c| v.at(c));
                prop_assert_eq!(v.at(n), median3(f.at(n), g.at(n), cont));
            }
        }
    }

    #[test]
    fn stage_nash_has_no_profitable_deviation(xs in prop::array::uniform8(-1.0f64..1.0)) {
        let a = [[xs[0], xs[1]], [xs[2], xs[3]]];
        let b = [[xs[4], xs[5]], [xs[6], xs[7]]];
        let sol = stage_nash_2x2(a, b);
        prop_assert!((0.0..=1.0).contains(&sol.p) && (0.0..=1.0).contains(&sol.q));
        let (g1, g2) = StageGame { a, b }.deviation_gains(sol.p, sol.q);
        prop_assert!(g1 <= 1e-12 && g2 <= 1e-12, "gains {g1} {g2}");
        let (v1, v2) = StageGame { a, b }.values(sol.p, sol.q);
        prop_assert!((v1 - sol.value1).abs() <= 1e-12 && (v2 - sol.value2).abs() <= 1e-12);
    }

    #[test]
    fn solvers_certify_on_irregular_trees(h in 0usize..=3, b in 1usize..=3, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let tree = common::random_tree(&mut rng, h, b);
        let u = random_payoffs(&tree, seed ^ 0x5eed);
        let seq = seq_equilibrium(&tree, &u, 1e-9).unwrap();
        prop_assert!(seq.is_certified(), "{:?} {:?}", seq.report.gaps, seq.defects);
        let sim = sim_equilibrium(&tree, &u, 1e-9).unwrap();
        prop_assert!(sim.is_certified(), "{:?} {:?}", sim.report.gaps, sim.defects);
    }

    #[test]
    fn game_file_round_trip(h in 0usize..=3, b in 1usize..=3, seed in any::<u64>()) {
        let file = generate_random_game(h, b, seed, (-2.0, 3.0));
        let text = file.to_json();
        prop_assert_eq!(&GameFile::parse(&text).unwrap(), &file);
        let game = file.to_game(false).unwrap();
        prop_assert_eq!(GameFile::from_game(&game).to_game(false).unwrap(), game);
    }
}
