//! Plain-text reports with fixed formatting.

use std::fmt::Write;

use crate::probspace::{EventTree, NodeIx};
use crate::strategies::{MixedStrategyA, RandomizedStoppingTime, StoppingTime, StrategyA, StrategyB};
use crate::verify::{Column, EnumerationTable, EquilibriumReport};

/// `x` with 12 significant digits in `%g` style; negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn pair(p: (f64, f64)) -> String {
    format!("{} {}", fmt_num(p.0), fmt_num(p.1))
}

/// Summary block of an equilibrium check.
pub fn equilibrium_block(out: &mut String, r: &EquilibriumReport) {
    let _ = writeln!(out, "values: {}", pair(r.values));
    let _ = writeln!(out, "best responses: {}", pair(r.br_values));
    let _ = writeln!(out, "gaps: {}", pair(r.gaps));
    let _ = writeln!(out, "eps: {}", fmt_num(r.eps));
}

pub fn status_block(out: &mut String, pass: bool, defects: &[String]) {
    for d in defects {
        let _ = writeln!(out, "defect: {d}");
    }
    let _ = writeln!(
        out,
        "status: {}",
        if pass && defects.is_empty() { "PASS" } else { "FAIL" }
    );
}

pub fn header(out: &mut String, command: &str, name: Option<&str>, tree: &EventTree) {
    let _ = writeln!(out, "command: {command}");
    if let Some(name) = name {
        let _ = writeln!(out, "game: {name}");
    }
    let _ = writeln!(out, "horizon: {}", tree.horizon());
    let _ = writeln!(out, "nodes: {}", tree.len());
}

/// Cell for a pure rule at a node: `S` stops here, `-` stopped earlier, `.` continues.
pub fn pure_cell(tree: &EventTree, rule: &StoppingTime, n: NodeIx) -> String {
    if rule.stops_at(tree, n) {
        "S".into()
    } else if rule.has_stopped(n) {
        "-".into()
    } else {
        ".".into()
    }
}

/// Stop probability at a node, or `-` where the rule has surely stopped earlier.
pub fn mixed_cell(tree: &EventTree, rule: &RandomizedStoppingTime, n: NodeIx) -> String {
    let stopped = tree.path(n)[..tree.time(n)].iter().any(|&a| rule.stop_prob(a) == 1.0);
    if stopped {
        "-".into()
    } else {
        fmt_num(rule.stop_prob(n))
    }
}

/// Per-node table sorted by `(time, id)` with one column per rule.
pub fn node_table(out: &mut String, tree: &EventTree, columns: &[(String, Vec<String>)]) {
    let mut order: Vec<NodeIx> = tree.nodes().collect();
    order.sort_by(|&a, &b| (tree.time(a), tree.id(a)).cmp(&(tree.time(b), tree.id(b))));
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("t".to_string())
        .chain(std::iter::once("node".to_string()))
        .chain(columns.iter().map(|(h, _)| h.clone()))
        .collect()];
    for &n in &order {
        let mut row = vec![tree.time(n).to_string(), tree.id(n).to_string()];
        row.extend(columns.iter().map(|(_, cells)| cells[n.0].clone()));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    for row in rows {
        let line = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        let _ = writeln!(out, "  {}", line.trim_end());
    }
}

fn rule_column(tree: &EventTree, name: String, rule: &StoppingTime) -> (String, Vec<String>) {
    (name, tree.nodes().map(|n| pure_cell(tree, rule, n)).collect())
}

fn adjust_columns(tree: &EventTree, rules: &[StoppingTime]) -> Vec<(String, Vec<String>)> {
    rules
        .iter()
        .enumerate()
        .map(|(t, r)| rule_column(tree, format!("adj{t}"), r))
        .collect()
}

pub fn strategy_a(out: &mut String, tree: &EventTree, title: &str, s: &StrategyA) {
    let _ = writeln!(out, "{title} (type A)");
    let mut cols = vec![rule_column(tree, "init".into(), &s.initial)];
    cols.extend(adjust_columns(tree, s.adjust.rules()));
    node_table(out, tree, &cols);
}

pub fn strategy_b(out: &mut String, tree: &EventTree, title: &str, s: &StrategyB) {
    let _ = writeln!(out, "{title} (type B)");
    let mut cols = vec![rule_column(tree, "init".into(), &s.initial)];
    cols.extend(adjust_columns(tree, s.adjust.rules()));
    node_table(out, tree, &cols);
}

pub fn strategy_mixed(out: &mut String, tree: &EventTree, title: &str, s: &MixedStrategyA) {
    let _ = writeln!(out, "{title} (mixed type A)");
    let mut cols = vec![(
        "init".to_string(),
        tree.nodes().map(|n| mixed_cell(tree, &s.initial, n)).collect(),
    )];
    cols.extend(adjust_columns(tree, s.adjust.rules()));
    node_table(out, tree, &cols);
}

fn describe(tree: &EventTree, initial: &StoppingTime, rules: &[StoppingTime]) -> String {
    let ids = |r: &StoppingTime| {
        r.stop_nodes(tree)
            .iter()
            .map(|&n| tree.id(n))
            .collect::<Vec<_>>()
            .join(",")
    };
    let adj = rules
        .iter()
        .map(|r| format!("{{{}}}", ids(r)))
        .collect::<Vec<_>>()
        .join(" ");
    format!("init {{{}}} adj {adj}", ids(initial))
}

/// Dump of an enumeration table.
pub fn enumeration(out: &mut String, tree: &EventTree, table: &EnumerationTable) {
    let _ = writeln!(out, "mode: {}", table.mode.name());
    let _ = writeln!(out, "player 1 strategies: {}", table.rows.len());
    let _ = writeln!(out, "player 2 strategies: {}", table.cols.len());
    let _ = writeln!(out, "profiles: {}", table.payoffs.len());
    let _ = writeln!(out, "pure equilibria: {}", table.equilibria.len());
    let _ = writeln!(out, "player 1");
    for (k, s) in table.rows.iter().enumerate() {
        let _ = writeln!(out, "  {k}: {}", describe(tree, &s.initial, s.adjust.rules()));
    }
    let _ = writeln!(out, "player 2");
    match &table.cols {
        Column::A(v) => {
            for (k, s) in v.iter().enumerate() {
                let _ = writeln!(out, "  {k}: {}", describe(tree, &s.initial, s.adjust.rules()));
            }
        }
        Column::B(v) => {
            for (k, s) in v.iter().enumerate() {
                let _ = writeln!(out, "  {k}: {}", describe(tree, &s.initial, s.adjust.rules()));
            }
        }
    }
    let _ = writeln!(out, "table (row col u1 u2 ne)");
    let ncols = table.cols.len();
    for (k, &(u1, u2)) in table.payoffs.iter().enumerate() {
        let (r, c) = (k / ncols, k % ncols);
        let ne = if table.is_equilibrium(r, c) { "yes" } else { "no" };
        let _ = writeln!(out, "  {r} {c} {} {} {ne}", fmt_num(u1), fmt_num(u2));
    }
    let _ = writeln!(out, "equilibria");
    for &(r, c) in &table.equilibria {
        let _ = writeln!(out, "  {r} {c}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(-0.5), "-0.5");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1e-9), "1e-09");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 100.0), "66.6666666667");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
        assert_eq!(fmt_num(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_num(0.0001), "0.0001");
        assert_eq!(fmt_num(0.00001), "1e-05");
        assert_eq!(fmt_num(-2.5e-17), "-2.5e-17");
    }

    #[test]
    fn table_layout() {
        let tree = EventTree::deterministic(1);
        let rule = StoppingTime::constant(&tree, 0);
        let mut out = String::new();
        node_table(&mut out, &tree, &[rule_column(&tree, "init".into(), &rule)]);
        assert_eq!(out, "  t  node  init\n  0  r     S\n  1  t1    -\n");
    }
}
