//! Scenario files, Poisson scenario generation, batch comparison and
//! staircase export for the `ehrelay` CLI.

pub mod compare;
pub mod error;
pub mod generate;
pub mod scenario;
pub mod staircase;

use ehrelay::{PolicyOutcome, PolicyTag, SolverConfig};

pub use compare::{run_comparison, ComparisonRow};
pub use error::{BenchError, Result};
pub use generate::generate_poisson;
pub use scenario::{load_scenario, load_scenarios, save_result, save_scenario, ResultRecord, Scenario};
pub use staircase::emit_staircase;

/// Runs one policy or solver mode. Policies without a gate always allocate.
pub fn run_policy(scenario: &Scenario, tag: PolicyTag, cfg: &SolverConfig) -> ehrelay::Result<PolicyOutcome> {
    let (p, ch) = (&scenario.profile, &scenario.channel);
    let allocated = PolicyOutcome::Allocated;
    match tag {
        PolicyTag::Greedy => ehrelay::greedy_no_et(p, ch),
        PolicyTag::TotalSuboptimal => ehrelay::total_suboptimal_no_et(p, ch).map(allocated),
        PolicyTag::Disjoint => ehrelay::disjoint(p, ch).map(allocated),
        PolicyTag::OneWay => ehrelay::one_way_optimal(p, ch),
        PolicyTag::TwoWay => ehrelay::two_way_optimal(p, ch).map(allocated),
        PolicyTag::SolveNoTransfer => ehrelay::solve_no_et(p, ch, cfg).map(allocated),
        PolicyTag::SolveOneWay => ehrelay::solve_one_way(p, ch, cfg).map(allocated),
        PolicyTag::SolveTwoWay => ehrelay::solve_two_way(p, ch, cfg).map(allocated),
    }
}

/// Number text for machine output: 15 significant digits, shortest form.
pub fn fmt_machine(x: f64) -> String {
    format!("{}", compare::round15(x))
}
