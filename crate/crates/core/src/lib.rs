//! Offline power and energy-transfer scheduling for an energy-harvesting
//! full-duplex decode-and-forward relay channel.
//!
//! A source and a relay harvest known amounts of energy at known instants
//! and must deliver as many bits as possible to a destination before a
//! deadline. [`policies`] holds the closed-form schedules built from taut
//! strings ([`string`]); [`solver`] is an interior-point reference optimizer
//! used to certify them.

pub mod channel;
pub mod error;
pub mod feasibility;
pub mod policies;
pub mod profile;
pub mod schedule;
pub mod solver;
pub mod string;

pub use channel::{rate_nc, Branch, ChannelModel, PhysicalLink, RateEval};
pub use error::{Error, Result};
pub use feasibility::{
    check_feasible, excess_energy, scaled_totals, CheckMode, ConstraintKind, ConstraintRef,
    ExcessEnergy, FeasibilityReport,
};
pub use policies::{
    construct_delta_one_way, construct_deltas_two_way, disjoint, greedy_no_et,
    modified_eh_patterns, one_way_optimal, total_suboptimal_no_et, two_way_optimal,
    AllocationResult, GateFailure, ModifiedPatterns, Node, PolicyOutcome, PolicyTag,
};
pub use profile::{cumulative, EHProfile};
pub use schedule::{merge_segments, throughput, PowerSchedule, Segment, TransferSchedule};
pub use solver::{solve_no_et, solve_one_way, solve_two_way, SolverConfig};
pub use string::{single_user_alloc, tight_string, Point, Staircase, StringSolution};
