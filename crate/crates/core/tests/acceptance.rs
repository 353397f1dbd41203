//! Acceptance suite: one line per criterion on standard error, then a single
//! assertion that every criterion passed.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;
use stopgame_core::dynkin::{dynkin_value, zero_sum_saddle};
use stopgame_core::probspace::expect_at_level;
use stopgame_core::seq_eq::{seq_equilibrium, Assembly};
use stopgame_core::sim_eq::sim_equilibrium;
use stopgame_core::verify::{check_equilibrium, enumerate_oracle, profile_count, EnumLimits, Mode, Profile};
use stopgame_core::{cli, conditional_expectation, EventTree, GameFile, LeveledValue, Player, StoppingTime};

const EPS: f64 = 1e-9;
const EXACT: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn matching_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("games/matching.json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        std::iter::once("stopgame").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, out)
}

fn matching_game() -> Outcome {
    let start = Instant::now();
    let path = matching_path();
    let path = path.to_str().unwrap();
    let game = GameFile::load(&matching_path()).unwrap().to_game(false).unwrap();
    let tree = &game.tree;

    let table = enumerate_oracle(tree, &game.payoffs, Mode::Sim, EnumLimits::default()).unwrap();
    check(table.rows.len() == 2 && table.cols.len() == 2, || {
        format!("table is {}x{}", table.rows.len(), table.cols.len())
    })?;
    check(table.equilibria.is_empty(), || {
        format!("{} pure equilibria", table.equilibria.len())
    })?;

    let eq = sim_equilibrium(tree, &game.payoffs, EPS).unwrap();
    let root = tree.root();
    let (p, q) = (eq.rho.initial.stop_prob(root), eq.tau.initial.stop_prob(root));
    check((p - 0.5).abs() <= EXACT && (q - 0.5).abs() <= EXACT, || {
        format!("root stop probabilities {p}, {q}")
    })?;
    check(
        (eq.values.0 - 0.5).abs() <= EXACT && (eq.values.1 + 0.5).abs() <= EXACT,
        || format!("values {:?}", eq.values),
    )?;
    check(eq.is_certified(), || format!("defects {:?}", eq.defects))?;

    let (code, out) = run_cli(&["enumerate", path, "--mode", "sim"]);
    let text = String::from_utf8(out).unwrap();
    check(code == 0 && text.contains("pure equilibria: 0\n"), || {
        format!("enumerate exit {code}")
    })?;
    let (code, out) = run_cli(&["solve-sim", path]);
    let text = String::from_utf8(out).unwrap();
    check(code == 0 && text.contains("values: 0.5 -0.5\n"), || {
        format!("solve-sim exit {code}")
    })?;

    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "no pure equilibrium in 2x2 table; mixed (1/2, 1/2) with values (0.5, -0.5); {elapsed:.2?}"
    ))
}

fn sequential_pure_equilibrium() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut fallback = 0;
    for seed in 0..1000 {
        let game = common::random_game(seed);
        let eq = seq_equilibrium(&game.tree, &game.payoffs, EPS).unwrap();
        if eq.assembly != Assembly::Threshold {
            fallback += 1;
        }
        let r = &eq.report;
        worst = worst.max(r.gaps.0).max(r.gaps.1);
        check(r.pass && r.coherent(), || format!("seed {seed}: gaps {:?}", r.gaps))?;
        check(!eq.diagnostics.any_clamp(), || {
            format!("seed {seed}: clamped hitting time")
        })?;
        check(eq.defects.is_empty(), || format!("seed {seed}: {:?}", eq.defects))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "1000 games, max gap {worst:.1e}, no clamps, threshold assembly rejected on {fallback}; {elapsed:.2?}"
    ))
}

fn simultaneous_mixed_equilibrium() -> Outcome {
    let start = Instant::now();
    let (mut worst_gap, mut worst_consistency): (f64, f64) = (0.0, 0.0);
    for seed in 0..1000 {
        let game = common::random_game(seed);
        let eq = sim_equilibrium(&game.tree, &game.payoffs, EPS).unwrap();
        let r = &eq.report;
        worst_gap = worst_gap.max(r.gaps.0).max(r.gaps.1);
        check(r.pass && r.coherent(), || format!("seed {seed}: gaps {:?}", r.gaps))?;
        let root = eq.dynkin.root_values(&game.tree);
        let d = (eq.values.0 - root.0).abs().max((eq.values.1 - root.1).abs());
        worst_consistency = worst_consistency.max(d);
        check(d <= EPS, || {
            format!("seed {seed}: payoff differs from backward induction by {d:e}")
        })?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "1000 games, max gap {worst_gap:.1e}, max value mismatch {worst_consistency:.1e}; {elapsed:.2?}"
    ))
}

fn zero_sum_saddle_points() -> Outcome {
    let start = Instant::now();
    let mut enumerated = 0;
    for seed in 0..500 {
        let game = common::random_zero_sum(seed);
        let (tree, u) = (&game.tree, &game.payoffs);
        let sigma = StoppingTime::constant(tree, 0);
        let z = zero_sum_saddle(tree, u, &sigma).unwrap();
        let r = check_equilibrium(tree, u, Profile::ZeroSum(&z.rho_star, &z.tau_star), None, EPS).unwrap();
        check(r.pass && r.coherent(), || format!("seed {seed}: gaps {:?}", r.gaps))?;
        check((r.values.0 - z.value).abs() <= EPS, || {
            format!("seed {seed}: payoff {} vs value {}", r.values.0, z.value)
        })?;
        if profile_count(tree, Mode::ZeroSum, 0) <= 400 {
            enumerated += 1;
            let t = enumerate_oracle(tree, u, Mode::ZeroSum, EnumLimits::default()).unwrap();
            let row = t
                .row_of(&z.rho_star)
                .ok_or(format!("seed {seed}: rho* not enumerated"))?;
            let col = t
                .col_of_b(&z.tau_star)
                .ok_or(format!("seed {seed}: tau* not enumerated"))?;
            let v = t.payoff(row, col).0;
            for k in 0..t.rows.len() {
                let w = t.payoff(k, col).0;
                check(w <= v + EXACT, || {
                    format!("seed {seed}: row {k} beats the saddle ({w} > {v})")
                })?;
            }
            for k in 0..t.cols.len() {
                let w = t.payoff(row, k).0;
                check(w >= v - EXACT, || {
                    format!("seed {seed}: column {k} beats the saddle ({w} < {v})")
                })?;
            }
        }
    }
    let elapsed = start.elapsed();
    Ok(format!(
        "500 games certified, {enumerated} confirmed by enumeration; {elapsed:.2?}"
    ))
}

fn dynkin_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(2024);
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    while solved < 200 {
        let tree = if rng.gen_bool(0.2) {
            EventTree::deterministic(rng.gen_range(0..=19))
        } else {
            let h = rng.gen_range(0..=4);
            let b = rng.gen_range(1..=4);
            common::random_tree(&mut rng, h, b)
        };
        if common::count_stopping_times(&tree) > 20 {
            continue;
        }
        let fv: Vec<f64> = (0..tree.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gv: Vec<f64> = (0..tree.len())
            .map(|k| {
                if rng.gen_bool(0.2) {
                    fv[k]
                } else {
                    fv[k] + rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let f = LeveledValue::full(&tree, |n| fv[n.0]);
        let g = LeveledValue::full(&tree, |n| gv[n.0]);
        let v = dynkin_value(&tree, &f, &g).unwrap();
        let (lower, upper) = common::dynkin_brute_force(&tree, &f, &g);
        let root = v.at(tree.root());
        let d = (root - lower).abs().max((root - upper).abs());
        worst = worst.max(d);
        check(d <= EXACT, || {
            format!("instance {solved}: v = {root}, brute force ({lower}, {upper})")
        })?;
        for n in tree.nodes() {
            check(f.at(n) <= v.at(n) && v.at(n) <= g.at(n), || {
                format!("instance {solved}: sandwich fails")
            })?;
            if tree.time(n) == tree.horizon() {
                check(v.at(n) == f.at(n), || format!("instance {solved}: v_T != F_T"))?;
            }
        }
        solved += 1;
    }
    Ok(format!(
        "200 instances, max deviation {worst:.1e}; {:.2?}",
        start.elapsed()
    ))
}

fn tower_defect(tree: &EventTree, x: &LeveledValue) -> f64 {
    let h = tree.horizon();
    let mut worst: f64 = 0.0;
    for t in 0..=h {
        let inner = expect_at_level(tree, x, h, t).unwrap();
        for s in 0..=t {
            let outer = expect_at_level(tree, &inner, t, s).unwrap();
            for &n in tree.level(s) {
                let direct = common::path_sum_expectation(tree, x, h, n);
                let ce = conditional_expectation(tree, x, h, n).unwrap();
                worst = worst.max((outer.at(n) - direct).abs()).max((ce - direct).abs());
            }
        }
    }
    worst
}

fn structural_certificates() -> Outcome {
    let start = Instant::now();
    let (mut tower, mut order, mut sub): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..1000 {
        let game = common::random_game(seed);
        let tree = &game.tree;
        let d = tower_defect(tree, &common::terminal_slice(tree, &game.payoffs, Player::One));
        tower = tower.max(d);
        check(d <= EXACT, || format!("seed {seed}: tower property off by {d:e}"))?;

        let eq = seq_equilibrium(tree, &game.payoffs, EPS).unwrap();
        let dg = &eq.diagnostics;
        order = order.max(dg.f1_above_h1).max(dg.g2_above_h2_f2);
        sub = sub.max(dg.submartingale_v1).max(dg.submartingale_v2);
        check(dg.f1_above_h1 <= EXACT, || {
            format!("seed {seed}: F1 above H1 by {:e}", dg.f1_above_h1)
        })?;
        check(dg.g2_above_h2_f2 <= EXACT, || {
            format!("seed {seed}: G2 above H2 ∧ F2 by {:e}", dg.g2_above_h2_f2)
        })?;
        check(dg.submartingale_v1 <= EPS && dg.submartingale_v2 <= EPS, || {
            format!(
                "seed {seed}: sub-martingale defects {:e}, {:e}",
                dg.submartingale_v1, dg.submartingale_v2
            )
        })?;
        check(dg.mu1_precedes_f1_hit, || format!("seed {seed}: mu1 after v1 meets F1"))?;
    }
    Ok(format!(
        "1000 games; tower {tower:.1e}, ordering {order:.1e}, sub-martingale {sub:.1e}; {:.2?}",
        start.elapsed()
    ))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let game = scratch("det-game.json");
    let game2 = scratch("det-game-2.json");
    let profile = scratch("det-profile.json");
    let (g, g2, p) = (
        game.to_str().unwrap(),
        game2.to_str().unwrap(),
        profile.to_str().unwrap(),
    );
    let matching = matching_path();
    let matching = matching.to_str().unwrap();

    let gen = ["gen", "--horizon", "3", "--branching", "2", "--seed", "7"];
    let (c1, _) = run_cli(&[&gen[..], &["-o", g]].concat());
    let (c2, _) = run_cli(&[&gen[..], &["-o", g2]].concat());
    check(c1 == 0 && c2 == 0, || "gen failed".into())?;
    check(std::fs::read(&game).unwrap() == std::fs::read(&game2).unwrap(), || {
        "gen output differs between runs".into()
    })?;
    let zs = scratch("det-zs.json");
    let mut zs_file = GameFile::load(&game).unwrap();
    zs_file.payoffs.retain(|p| p.player == 1);
    std::fs::write(&zs, zs_file.to_json()).unwrap();
    let zs = zs.to_str().unwrap();

    let commands: Vec<Vec<&str>> = vec![
        gen.to_vec(),
        vec!["solve-sim", g],
        vec!["solve-seq", g, "--save-profile", p],
        vec!["verify", g, "--profile", p, "--mode", "seq"],
        vec!["solve-zs", zs, "--sigma", "1"],
        vec!["solve-sim", matching],
        vec!["enumerate", matching, "--mode", "seq"],
    ];
    for cmd in &commands {
        let first = run_cli(cmd);
        let second = run_cli(cmd);
        check(first == second, || format!("`{}` differs between runs", cmd.join(" ")))?;
        check(first.0 == 0, || format!("`{}` exited {}", cmd.join(" "), first.0))?;
    }
    Ok(format!(
        "{} commands byte-identical across runs; {:.2?}",
        commands.len(),
        start.elapsed()
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("matching game", matching_game),
        ("sequential pure equilibrium", sequential_pure_equilibrium),
        ("simultaneous mixed equilibrium", simultaneous_mixed_equilibrium),
        ("zero-sum saddle point", zero_sum_saddle_points),
        ("dynkin recursion vs brute force", dynkin_oracle_equivalence),
        ("structural certificates", structural_certificates),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    let stderr = std::io::stderr();
    let _ = writeln!(stderr.lock());
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = f();
        let line = match &outcome {
            Ok(detail) => format!("[PASS] {} {name}: {detail}", k + 1),
            Err(why) => format!("[FAIL] {} {name}: {why}", k + 1),
        };
        let _ = writeln!(stderr.lock(), "{line}");
        if outcome.is_err() {
            failed.push(line);
        }
    }
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
