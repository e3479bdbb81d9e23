//! Scenario files, result files and staircase exports.

use std::fs;
use std::path::Path;

use ehrelay::{
    check_feasible, excess_energy, single_user_alloc, AllocationResult, CheckMode, FeasibilityReport, PolicyTag,
    PowerSchedule, SolverConfig, TransferSchedule,
};
use ehrelay_bench::scenario::{save_scenarios, scenarios_to_toml};
use ehrelay_bench::staircase::staircase_rows;
use ehrelay_bench::{generate_poisson, load_scenario, load_scenarios, run_policy, save_result, save_scenario, ResultRecord};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn fixtures_are_canonical() {
    for name in ["example-1.toml", "example-2.toml", "example-3.toml"] {
        let text = fs::read_to_string(fixture(name)).unwrap();
        assert_eq!(load_scenario(&fixture(name)).unwrap().to_toml(), text, "{name}");
    }
    let set = fs::read_to_string(fixture("table1.toml")).unwrap();
    assert_eq!(scenarios_to_toml(&load_scenarios(&fixture("table1.toml")).unwrap()), set);
}

#[test]
fn save_then_load_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    for s in generate_poisson(5, 10, 7.5, &[0.0, 0.5, 3.25], 4.0) {
        let path = dir.path().join(format!("{}.toml", s.name));
        save_scenario(&s, &path).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(back, s);
        let again = dir.path().join("again.toml");
        save_scenario(&back, &again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }
    let set = generate_poisson(6, 4, 10.0, &[0.0, 2.0, 4.0, 6.0], 7.0);
    let path = dir.path().join("set.toml");
    save_scenarios(&set, &path).unwrap();
    assert_eq!(load_scenarios(&path).unwrap(), set);
}

#[test]
fn result_file_holds_segments_and_gate() {
    let dir = tempfile::tempdir().unwrap();
    let s = load_scenario(&fixture("example-1.toml")).unwrap();
    let outcome = run_policy(&s, PolicyTag::OneWay, &SolverConfig::default()).unwrap();
    let record = ResultRecord::new(&s, PolicyTag::OneWay, &outcome);
    let path = dir.path().join("declined.json");
    save_result(&record, &path).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["applicable"], false);
    assert!(json["not_applicable"]["reason"].is_string());
    assert_eq!(json["not_applicable"]["constraint"]["kind"], "source");
}

#[test]
fn example_one_relay_curve() {
    let s = load_scenario(&fixture("example-1.toml")).unwrap();
    let r = run_policy(&s, PolicyTag::Greedy, &SolverConfig::default()).unwrap().into_allocated().unwrap();
    let rows = staircase_rows(&s, &r).unwrap();
    let last = rows.last().unwrap();
    assert_eq!(last.time, 7.0);
    assert!((last.consumed_relay - 20.25).abs() < 1e-9);
    assert_eq!(last.harvested_relay, 30.0);
    assert!((last.harvested_relay - last.consumed_relay - 9.75).abs() < 1e-9);
    assert!(rows.iter().all(|r| r.modified.is_none()));
}

#[test]
fn zero_schedule_consumes_nothing() {
    let s = load_scenario(&fixture("example-2.toml")).unwrap();
    let k = s.profile.num_epochs();
    let (schedule, transfers) = (PowerSchedule::zeros(k), TransferSchedule::zeros(k));
    let feasibility: FeasibilityReport =
        check_feasible(&schedule, &transfers, &s.profile, &s.channel, CheckMode::NoTransfer).unwrap();
    let r = AllocationResult {
        policy: PolicyTag::Disjoint,
        excess_energy: excess_energy(&schedule, &transfers, &s.profile, &s.channel),
        schedule,
        transfers,
        throughput: 0.0,
        feasibility,
    };
    for row in staircase_rows(&s, &r).unwrap() {
        assert_eq!((row.consumed_source, row.consumed_relay, row.consumed_total), (0.0, 0.0, 0.0));
    }
}

#[test]
fn example_three_total_is_the_taut_string() {
    let s = load_scenario(&fixture("example-3.toml")).unwrap();
    let r = run_policy(&s, PolicyTag::TwoWay, &SolverConfig::default()).unwrap().into_allocated().unwrap();
    let rows = staircase_rows(&s, &r).unwrap();
    let string = single_user_alloc(s.profile.instants(), &[18., 49., 47., 61.], 7.0).unwrap();
    let mut t = 0.0;
    let mut used = 0.0;
    let mut knots = vec![(0.0, 0.0)];
    for seg in &string.segments {
        t += seg.duration;
        used += seg.power * seg.duration;
        knots.push((t, used));
    }
    let at = |x: f64| {
        let w = knots.windows(2).find(|w| x <= w[1].0 + 1e-12).unwrap();
        w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / (w[1].0 - w[0].0)
    };
    for row in &rows {
        assert!((row.consumed_total - at(row.time)).abs() < 1e-9, "{row:?}");
    }
    let harvested: Vec<f64> = rows.iter().map(|r| r.harvested_total).collect();
    assert_eq!(harvested, [18., 67., 114., 175., 175.]);
    assert!(rows.iter().all(|r| r.modified.is_some()));
}

#[test]
fn curves_stay_under_their_staircases() {
    let cfg = SolverConfig::default();
    for s in generate_poisson(77, 40, 10.0, &[0.0, 2.0, 4.0, 6.0], 7.0) {
        for tag in PolicyTag::ALL {
            let Some(r) = run_policy(&s, tag, &cfg).unwrap().into_allocated() else { continue };
            let rows = staircase_rows(&s, &r).unwrap();
            for w in rows.windows(2) {
                assert!(w[1].consumed_source >= w[0].consumed_source);
                assert!(w[1].consumed_relay >= w[0].consumed_relay);
                assert!(w[1].consumed_total >= w[0].consumed_total);
            }
            for row in &rows {
                assert!(row.consumed_total <= row.harvested_total + 1e-9, "{tag}: {row:?}");
                match row.modified {
                    // Policies with transfers are bounded by what each node
                    // holds after them; the one-way solver's transfers are
                    // advisory and only the source side is checked.
                    Some((m1, m2)) => {
                        assert!(row.consumed_source <= m1 + 1e-9, "{tag}: {row:?}");
                        if tag != PolicyTag::SolveOneWay {
                            assert!(row.consumed_relay <= m2 + 1e-9, "{tag}: {row:?}");
                        }
                    }
                    None if !matches!(tag, PolicyTag::SolveOneWay | PolicyTag::SolveTwoWay) => {
                        assert!(row.consumed_source <= row.harvested_source + 1e-9, "{tag}: {row:?}");
                        assert!(row.consumed_relay <= row.harvested_relay + 1e-9, "{tag}: {row:?}");
                    }
                    None => {}
                }
            }
        }
    }
}
