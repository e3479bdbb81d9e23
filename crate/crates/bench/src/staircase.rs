//! Cumulative harvested/consumed curves for plotting.

use std::path::Path;

use ehrelay::{cumulative, modified_eh_patterns, AllocationResult, Error};

use crate::error::{BenchError, Result};
use crate::scenario::Scenario;

pub const BASE_COLUMNS: [&str; 7] = [
    "time",
    "harvested_source",
    "harvested_relay",
    "consumed_source",
    "consumed_relay",
    "harvested_total",
    "consumed_total",
];
pub const MODIFIED_COLUMNS: [&str; 2] = ["modified_source", "modified_relay"];

/// One sample. Harvested columns include any harvest arriving at `time`;
/// totals are in the scaled domain `E1 + b²E2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseRow {
    pub time: f64,
    pub harvested_source: f64,
    pub harvested_relay: f64,
    pub consumed_source: f64,
    pub consumed_relay: f64,
    pub harvested_total: f64,
    pub consumed_total: f64,
    /// Cumulative effective harvests after transfers, when there are any.
    pub modified: Option<(f64, f64)>,
}

/// Samples at every harvest instant and at the deadline. Powers are
/// constant within epochs, so these are all the breakpoints.
pub fn staircase_rows(scenario: &Scenario, result: &AllocationResult) -> Result<Vec<StaircaseRow>> {
    let profile = &scenario.profile;
    let ch = &scenario.channel;
    let k = profile.num_epochs();
    if result.schedule.num_epochs() != k || result.transfers.len() != k {
        return Err(BenchError::Core(Error::GridMismatch(format!(
            "result has {} epochs and {} transfer instants, scenario `{}` has {k}",
            result.schedule.num_epochs(),
            result.transfers.len(),
            scenario.name
        ))));
    }
    let b2 = ch.b_squared();
    let lengths = profile.epoch_lengths();
    let s = &result.schedule;
    let used1: Vec<f64> = (0..k).map(|i| s.p1()[i] * lengths[i]).collect();
    let used2: Vec<f64> = (0..k).map(|i| s.p2()[i] * lengths[i]).collect();
    let modified = if result.transfers.is_zero() {
        None
    } else {
        let m = modified_eh_patterns(profile, &result.transfers, ch)?;
        Some((cumulative(&m.source), cumulative(&m.relay)))
    };

    let h1 = cumulative(profile.e1());
    let h2 = cumulative(profile.e2());
    let (mut c1, mut c2) = (0.0, 0.0);
    let mut rows = Vec::with_capacity(k + 1);
    for (i, time) in profile.boundaries().into_iter().enumerate() {
        if i > 0 {
            c1 += used1[i - 1];
            c2 += used2[i - 1];
        }
        // The deadline row repeats the final harvested levels.
        let j = i.min(k - 1);
        rows.push(StaircaseRow {
            time,
            harvested_source: h1[j],
            harvested_relay: h2[j],
            consumed_source: c1,
            consumed_relay: c2,
            harvested_total: h1[j] + b2 * h2[j],
            consumed_total: c1 + b2 * c2,
            modified: modified.as_ref().map(|(m1, m2)| (m1[j], m2[j])),
        });
    }
    Ok(rows)
}

pub fn staircase_csv(rows: &[StaircaseRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let with_modified = rows.iter().any(|r| r.modified.is_some());
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if with_modified {
        header.extend(MODIFIED_COLUMNS);
    }
    let out = |e: csv::Error| BenchError::Output(e.to_string());
    w.write_record(&header).map_err(out)?;
    for r in rows {
        let mut rec: Vec<String> = [
            r.time,
            r.harvested_source,
            r.harvested_relay,
            r.consumed_source,
            r.consumed_relay,
            r.harvested_total,
            r.consumed_total,
        ]
        .iter()
        .map(|v| crate::fmt_machine(*v))
        .collect();
        if let Some((m1, m2)) = r.modified {
            rec.push(crate::fmt_machine(m1));
            rec.push(crate::fmt_machine(m2));
        }
        w.write_record(&rec).map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Output(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of numbers is UTF-8"))
}

pub fn emit_staircase(scenario: &Scenario, result: &AllocationResult, path: &Path) -> Result<()> {
    let text = staircase_csv(&staircase_rows(scenario, result)?)?;
    crate::scenario::write(path, &text)
}
