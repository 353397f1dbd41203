//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dynkin::certified_saddle;
use crate::error::{Error, Result};
use crate::game_file::{generate_random_game, Game, GameFile, ProfileFile};
use crate::report::{self, fmt_num};
use crate::seq_eq::{seq_equilibrium, Assembly};
use crate::sim_eq::{sim_equilibrium, StageKind};
use crate::verify::{enumerate_oracle, EnumLimits, Mode, DEFAULT_EPS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "stopgame",
    version,
    about = "Equilibria of two-player stopping games on finite event trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Sim,
    Seq,
    Zs,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Sim => Mode::Sim,
            ModeArg::Seq => Mode::Seq,
            ModeArg::Zs => Mode::ZeroSum,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mixed equilibrium of the simultaneous-move game
    SolveSim {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Write the equilibrium profile as JSON
        #[arg(long)]
        save_profile: Option<PathBuf>,
    },
    /// Pure equilibrium of the sequential-move game
    SolveSeq {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        save_profile: Option<PathBuf>,
    },
    /// Saddle point of the zero-sum game (player-2 payoffs are -U1)
    SolveZs {
        file: PathBuf,
        /// Start the game at this deterministic time
        #[arg(long)]
        sigma: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        save_profile: Option<PathBuf>,
    },
    /// Check a saved profile against exact best responses
    Verify {
        file: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Tabulate every pure profile and mark pure equilibria
    Enumerate {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u128,
    },
    /// Write a seeded random game
    Gen {
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        branching: usize,
        #[arg(long)]
        seed: u64,
        /// Payoff range as lo,hi
        #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
        range: String,
        /// Output file (standard output if omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn load_game(path: &Path, zero_sum: bool) -> Result<Game> {
    GameFile::load(path)?.to_game(zero_sum)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn exit_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Format(format!("range must be lo,hi with lo <= hi, got {s}"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn dispatch(command: Command) -> Result<(String, i32)> {
    let mut out = String::new();
    match command {
        Command::SolveSim {
            file,
            eps,
            save_profile,
        } => {
            let game = load_game(&file, false)?;
            let tree = &game.tree;
            let eq = sim_equilibrium(tree, &game.payoffs, eps)?;
            report::header(&mut out, "solve-sim", game.name.as_deref(), tree);
            report::equilibrium_block(&mut out, &eq.report);
            let root = eq.dynkin.root_values(tree);
            out += &format!("backward induction: {} {}\n", fmt_num(root.0), fmt_num(root.1));
            let count = |k: StageKind| eq.dynkin.stage_record.iter().filter(|r| r.solution.kind == k).count();
            out += &format!(
                "stages: pure {} mixed {} degenerate {} terminal {}\n",
                count(StageKind::Pure),
                count(StageKind::Mixed),
                count(StageKind::Degenerate),
                count(StageKind::Forced)
            );
            report::strategy_mixed(&mut out, tree, "player 1", &eq.rho);
            report::strategy_mixed(&mut out, tree, "player 2", &eq.tau);
            report::status_block(&mut out, eq.report.pass, &eq.defects);
            if let Some(p) = save_profile {
                write_file(&p, &ProfileFile::sim(tree, &eq.rho, &eq.tau).to_json())?;
            }
            Ok((out, exit_code(eq.is_certified())))
        }
        Command::SolveSeq {
            file,
            eps,
            save_profile,
        } => {
            let game = load_game(&file, false)?;
            let tree = &game.tree;
            let eq = seq_equilibrium(tree, &game.payoffs, eps)?;
            report::header(&mut out, "solve-seq", game.name.as_deref(), tree);
            report::equilibrium_block(&mut out, &eq.report);
            out += &format!("assembly: {}\n", eq.assembly.name());
            if eq.assembly != Assembly::Threshold {
                let g = eq.threshold_report.gaps;
                out += &format!("threshold gaps: {} {}\n", report::fmt_num(g.0), report::fmt_num(g.1));
            }
            let cols = [
                ("mu1", &eq.mu1),
                ("mu2", &eq.mu2),
                ("rho2", &eq.rho2_mu2),
                ("tau1", &eq.tau1_mu1),
            ]
            .iter()
            .map(|(name, rule)| {
                (
                    name.to_string(),
                    tree.nodes().map(|n| report::pure_cell(tree, rule, n)).collect(),
                )
            })
            .collect::<Vec<_>>();
            out += "thresholds\n";
            report::node_table(&mut out, tree, &cols);
            report::strategy_a(&mut out, tree, "player 1", &eq.rho_star);
            report::strategy_b(&mut out, tree, "player 2", &eq.tau_star);
            report::status_block(&mut out, eq.report.pass, &eq.defects);
            if let Some(p) = save_profile {
                write_file(
                    &p,
                    &ProfileFile::seq(tree, Mode::Seq, &eq.rho_star, &eq.tau_star, None).to_json(),
                )?;
            }
            Ok((out, exit_code(eq.is_certified())))
        }
        Command::SolveZs {
            file,
            sigma,
            eps,
            save_profile,
        } => {
            let game = load_game(&file, true)?;
            let tree = &game.tree;
            let start = sigma.unwrap_or(0);
            let z = certified_saddle(tree, &game.payoffs, start, eps)?;
            report::header(&mut out, "solve-zs", game.name.as_deref(), tree);
            out += &format!("sigma: {start}\n");
            out += &format!("value: {}\n", fmt_num(z.saddle.value));
            report::equilibrium_block(&mut out, &z.report);
            report::strategy_a(&mut out, tree, "player 1", &z.saddle.rho_star);
            report::strategy_b(&mut out, tree, "player 2", &z.saddle.tau_star);
            report::status_block(&mut out, z.report.pass, &z.defects);
            if let Some(p) = save_profile {
                let doc = ProfileFile::seq(tree, Mode::ZeroSum, &z.saddle.rho_star, &z.saddle.tau_star, sigma);
                write_file(&p, &doc.to_json())?;
            }
            Ok((out, exit_code(z.is_certified())))
        }
        Command::Verify {
            file,
            profile,
            mode,
            eps,
        } => {
            let mode = Mode::from(mode);
            let game = load_game(&file, mode == Mode::ZeroSum)?;
            let tree = &game.tree;
            let check = ProfileFile::load(&profile)?.check(tree, &game.payoffs, mode, eps)?;
            report::header(&mut out, "verify", game.name.as_deref(), tree);
            out += &format!("mode: {}\n", mode.name());
            report::equilibrium_block(&mut out, &check);
            report::status_block(&mut out, check.pass, &[]);
            Ok((out, exit_code(check.pass)))
        }
        Command::Enumerate { file, mode, cap } => {
            let mode = Mode::from(mode);
            let game = load_game(&file, mode == Mode::ZeroSum)?;
            let tree = &game.tree;
            let table = enumerate_oracle(tree, &game.payoffs, mode, EnumLimits { cap, floor: 0 })?;
            report::header(&mut out, "enumerate", game.name.as_deref(), tree);
            report::enumeration(&mut out, tree, &table);
            Ok((out, EXIT_PASS))
        }
        Command::Gen {
            horizon,
            branching,
            seed,
            range,
            output,
        } => {
            if branching == 0 {
                return Err(Error::Format("branching must be at least 1".into()));
            }
            let range = parse_range(&range)?;
            let text = generate_random_game(horizon, branching, seed, range).to_json();
            match output {
                Some(p) => write_file(&p, &text)?,
                None => out = text,
            }
            Ok((out, EXIT_PASS))
        }
    }
}
