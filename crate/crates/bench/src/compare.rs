//! Batch comparison of every policy and solver mode.

use ehrelay::{PolicyTag, SolverConfig};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{BenchError, Result};
use crate::scenario::Scenario;
use crate::{fmt_machine, run_policy};

/// Machine-readable column order.
pub const COLUMNS: [&str; 12] = [
    "scenario",
    "e1",
    "e2",
    "total_subopt",
    "disjoint",
    "solver_no_et",
    "solver_one_way",
    "two_way",
    "solver_two_way",
    "greedy_applicable",
    "one_way_applicable",
    "error",
];

const MARKDOWN_HEADER: [&str; 8] = [
    "Scenario",
    "E1",
    "E2",
    "Total suboptimal",
    "Disjoint",
    "Solver, no ET",
    "Solver, one-way ET",
    "Two-way ET",
];

/// Throughputs in Mbits. `None` means the computation failed; see `error`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scenario: String,
    #[serde(serialize_with = "machine_vec")]
    pub e1: Vec<f64>,
    #[serde(serialize_with = "machine_vec")]
    pub e2: Vec<f64>,
    #[serde(serialize_with = "machine_opt")]
    pub total_subopt: Option<f64>,
    #[serde(serialize_with = "machine_opt")]
    pub disjoint: Option<f64>,
    #[serde(serialize_with = "machine_opt")]
    pub solver_no_et: Option<f64>,
    #[serde(serialize_with = "machine_opt")]
    pub solver_one_way: Option<f64>,
    /// Closed-form two-way policy.
    #[serde(serialize_with = "machine_opt")]
    pub two_way: Option<f64>,
    #[serde(serialize_with = "machine_opt")]
    pub solver_two_way: Option<f64>,
    /// Whether the greedy policy's gate passed.
    pub greedy_applicable: Option<bool>,
    /// Whether the one-way policy's gate passed.
    pub one_way_applicable: Option<bool>,
    /// Failures, `policy: message` joined by `; `.
    pub error: Option<String>,
}

fn machine_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| round15(*x)))
}

fn machine_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(round15(*x)),
        None => s.serialize_none(),
    }
}

pub(crate) fn round15(x: f64) -> f64 {
    format!("{x:.14e}").parse().unwrap_or(x)
}

pub fn compare_one(scenario: &Scenario, cfg: &SolverConfig) -> ComparisonRow {
    let mut errors = Vec::new();
    let mut run = |tag: PolicyTag| match run_policy(scenario, tag, cfg) {
        Ok(outcome) => Some(outcome),
        Err(e) => {
            errors.push(format!("{tag}: {e}"));
            None
        }
    };
    let throughput = |o: Option<ehrelay::PolicyOutcome>| o.and_then(|o| o.allocated().map(|r| r.throughput));

    let greedy_applicable = run(PolicyTag::Greedy).map(|o| o.allocated().is_some());
    let total_subopt = throughput(run(PolicyTag::TotalSuboptimal));
    let disjoint = throughput(run(PolicyTag::Disjoint));
    let solver_no_et = throughput(run(PolicyTag::SolveNoTransfer));
    let one_way_applicable = run(PolicyTag::OneWay).map(|o| o.allocated().is_some());
    let solver_one_way = throughput(run(PolicyTag::SolveOneWay));
    let two_way = throughput(run(PolicyTag::TwoWay));
    let solver_two_way = throughput(run(PolicyTag::SolveTwoWay));

    ComparisonRow {
        scenario: scenario.name.clone(),
        e1: scenario.profile.e1().to_vec(),
        e2: scenario.profile.e2().to_vec(),
        total_subopt,
        disjoint,
        solver_no_et,
        solver_one_way,
        two_way,
        solver_two_way,
        greedy_applicable,
        one_way_applicable,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    }
}

/// Rows come back in input order whatever order the workers finish in.
pub fn run_comparison(scenarios: &[Scenario], cfg: &SolverConfig) -> Vec<ComparisonRow> {
    scenarios.par_iter().map(|s| compare_one(s, cfg)).collect()
}

fn pattern(e: &[f64]) -> String {
    let parts: Vec<String> = e.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

/// The reference table layout, 4 decimals. Failed scenarios are listed below it.
pub fn render_markdown(rows: &[ComparisonRow]) -> String {
    let mut out = format!("| {} |\n", MARKDOWN_HEADER.join(" | "));
    out += &format!("|{}\n", "---|".repeat(MARKDOWN_HEADER.len()));
    for r in rows {
        let cells = [
            r.scenario.clone(),
            pattern(&r.e1),
            pattern(&r.e2),
            cell(r.total_subopt),
            cell(r.disjoint),
            cell(r.solver_no_et),
            cell(r.solver_one_way),
            cell(r.two_way),
        ];
        out += &format!("| {} |\n", cells.join(" | "));
    }
    let failed: Vec<_> = rows.iter().filter_map(|r| r.error.as_ref().map(|e| (&r.scenario, e))).collect();
    if !failed.is_empty() {
        out += "\nErrors:\n";
        for (name, e) in failed {
            out += &format!("- {name}: {e}\n");
        }
    }
    out
}

pub fn render_csv(rows: &[ComparisonRow]) -> Result<String> {
    let out = |e: csv::Error| BenchError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(out)?;
    let num = |v: Option<f64>| v.map(fmt_machine).unwrap_or_default();
    let flag = |v: Option<bool>| v.map(|b| b.to_string()).unwrap_or_default();
    let joined = |e: &[f64]| e.iter().map(|x| fmt_machine(*x)).collect::<Vec<_>>().join(" ");
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            joined(&r.e1),
            joined(&r.e2),
            num(r.total_subopt),
            num(r.disjoint),
            num(r.solver_no_et),
            num(r.solver_one_way),
            num(r.two_way),
            num(r.solver_two_way),
            flag(r.greedy_applicable),
            flag(r.one_way_applicable),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Output(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of numbers and names is UTF-8"))
}

pub fn render_json(rows: &[ComparisonRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize to JSON") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use ehrelay::{ChannelModel, EHProfile};

    fn scenario_two() -> Scenario {
        let p = EHProfile::new(vec![0., 2., 4., 6.], vec![10., 9., 14., 8.], vec![7., 5., 5., 5.], 7.).unwrap();
        Scenario::new("s2", ChannelModel::default(), p)
    }

    #[test]
    fn empty_list_gives_header_only() {
        let rows = run_comparison(&[], &SolverConfig::default());
        assert!(rows.is_empty());
        assert_eq!(render_markdown(&rows).lines().count(), 2);
        assert_eq!(render_csv(&rows).unwrap().lines().count(), 1);
    }

    #[test]
    fn scenario_two_row() {
        let row = compare_one(&scenario_two(), &SolverConfig::default());
        assert_eq!(row.error, None);
        assert!((row.total_subopt.unwrap() - 29.7968).abs() < 5e-4);
        assert!((row.disjoint.unwrap() - 29.7821).abs() < 5e-4);
        assert_eq!(row.one_way_applicable, Some(true));
        let md = render_markdown(&[row]);
        assert!(md.contains("| s2 | [10, 9, 14, 8] | [7, 5, 5, 5] | 29.7968 | 29.7821 |"), "{md}");
    }

    #[test]
    fn failures_stay_in_their_row() {
        let weak = ChannelModel::new(0.5, 2.0, 1.0).unwrap();
        let bad = Scenario::new("weak", weak, scenario_two().profile);
        let rows = run_comparison(&[scenario_two(), bad, scenario_two()], &SolverConfig::default());
        assert_eq!(rows.len(), 3);
        assert!(rows[0].error.is_none() && rows[2].error.is_none());
        let e = rows[1].error.as_deref().unwrap();
        assert!(e.contains("degenerate relay"), "{e}");
        assert!(rows[1].two_way.is_none());
        assert!(render_markdown(&rows).contains("- weak: "));
    }

    #[test]
    fn machine_output_keeps_fifteen_digits() {
        assert_eq!(round15(0.1 + 0.2), 0.3);
        assert_eq!(round15(29.79684123456789), 29.7968412345679);
    }
}
