//! Closed-form scheduling policies for the relay channel.
//!
//! All relay policies start from taut strings: either on one node's own
//! harvests or on the scaled network total `E1 + b²E2`. Splitting a total
//! power `P̃` as `P1 = P̃/[a²]†`, `b²P2 = ([a²]† − 1)·P̃/[a²]†` makes both rate
//! branches equal, so the delivered rate is `C(P̃/N0)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::feasibility::{
    check_feasible, excess_energy, scaled_totals, CheckMode, ConstraintKind, ConstraintRef,
    ExcessEnergy, FeasibilityReport, FEASIBILITY_TOL,
};
use crate::profile::{cumulative, EHProfile};
use crate::schedule::{throughput, PowerSchedule, Segment, TransferSchedule};
use crate::string::{single_user_alloc, tight_string, Point, Staircase, StringSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyTag {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "total-subopt")]
    TotalSuboptimal,
    #[serde(rename = "disjoint")]
    Disjoint,
    #[serde(rename = "one-way")]
    OneWay,
    #[serde(rename = "two-way")]
    TwoWay,
    #[serde(rename = "solve-no-et")]
    SolveNoTransfer,
    #[serde(rename = "solve-one-way")]
    SolveOneWay,
    #[serde(rename = "solve-two-way")]
    SolveTwoWay,
}

impl PolicyTag {
    pub const ALL: [PolicyTag; 8] = [
        PolicyTag::Greedy,
        PolicyTag::TotalSuboptimal,
        PolicyTag::Disjoint,
        PolicyTag::OneWay,
        PolicyTag::TwoWay,
        PolicyTag::SolveNoTransfer,
        PolicyTag::SolveOneWay,
        PolicyTag::SolveTwoWay,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyTag::Greedy => "greedy",
            PolicyTag::TotalSuboptimal => "total-subopt",
            PolicyTag::Disjoint => "disjoint",
            PolicyTag::OneWay => "one-way",
            PolicyTag::TwoWay => "two-way",
            PolicyTag::SolveNoTransfer => "solve-no-et",
            PolicyTag::SolveOneWay => "solve-one-way",
            PolicyTag::SolveTwoWay => "solve-two-way",
        }
    }
}

impl fmt::Display for PolicyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyTag::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub policy: PolicyTag,
    /// Epoch-resolution powers; see [`PowerSchedule::source_segments`] for
    /// the merged view.
    pub schedule: PowerSchedule,
    /// All zero for policies without energy transfer.
    pub transfers: TransferSchedule,
    /// Delivered Mbits, recomputed from `schedule`.
    pub throughput: f64,
    pub feasibility: FeasibilityReport,
    pub excess_energy: ExcessEnergy,
}

impl AllocationResult {
    pub(crate) fn assemble(
        policy: PolicyTag,
        profile: &EHProfile,
        ch: &ChannelModel,
        schedule: PowerSchedule,
        transfers: TransferSchedule,
        mode: CheckMode,
    ) -> Result<Self> {
        let feasibility = check_feasible(&schedule, &transfers, profile, ch, mode)?;
        let throughput = throughput(&schedule, profile, ch)?;
        let excess_energy = excess_energy(&schedule, &transfers, profile, ch);
        Ok(Self {
            policy,
            schedule,
            transfers,
            throughput,
            feasibility,
            excess_energy,
        })
    }

    pub fn source_segments(&self, profile: &EHProfile) -> Vec<Segment> {
        self.schedule.source_segments(profile)
    }

    pub fn relay_segments(&self, profile: &EHProfile) -> Vec<Segment> {
        self.schedule.relay_segments(profile)
    }
}

/// Why a policy with an applicability gate declined a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateFailure {
    pub reason: String,
    /// The first constraint the candidate schedule violates.
    pub constraint: ConstraintRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum PolicyOutcome {
    Allocated(AllocationResult),
    NotApplicable(GateFailure),
}

impl PolicyOutcome {
    pub fn allocated(&self) -> Option<&AllocationResult> {
        match self {
            PolicyOutcome::Allocated(r) => Some(r),
            PolicyOutcome::NotApplicable(_) => None,
        }
    }

    pub fn into_allocated(self) -> Option<AllocationResult> {
        match self {
            PolicyOutcome::Allocated(r) => Some(r),
            PolicyOutcome::NotApplicable(_) => None,
        }
    }
}

fn epoch_powers(profile: &EHProfile, segments: &[Segment]) -> Result<Vec<f64>> {
    let s = PowerSchedule::from_segments(profile, segments, segments)?;
    Ok(s.p1().to_vec())
}

fn node_string(profile: &EHProfile, energies: &[f64]) -> Result<StringSolution> {
    single_user_alloc(profile.instants(), energies, profile.deadline())
}

/// Per-epoch taut-string power on the scaled total `E1 + b²E2`.
pub fn total_power(profile: &EHProfile, ch: &ChannelModel) -> Result<Vec<f64>> {
    let totals = scaled_totals(profile, ch);
    epoch_powers(profile, &node_string(profile, &totals.per_instant)?.segments)
}

/// Splits per-epoch scaled total power so both rate branches are equal.
fn balanced_split(total: &[f64], ch: &ChannelModel) -> Result<PowerSchedule> {
    let gain = ch.relay_gain();
    let p1 = total.iter().map(|p| p / gain).collect();
    let p2 = total
        .iter()
        .map(|p| (gain - 1.0) * p / (gain * ch.b_squared()))
        .collect();
    PowerSchedule::new(p1, p2)
}

/// Greedy no-transfer policy: source on its own taut string, relay at the
/// least power that keeps it from being the bottleneck. Applicable only when
/// the relay's harvests can fund that power.
pub fn greedy_no_et(profile: &EHProfile, ch: &ChannelModel) -> Result<PolicyOutcome> {
    ch.require_relay()?;
    let p1 = epoch_powers(profile, &node_string(profile, profile.e1())?.segments)?;
    let ratio = (ch.relay_gain() - 1.0) / ch.b_squared();
    let p2 = p1.iter().map(|p| ratio * p).collect();
    let schedule = PowerSchedule::new(p1, p2)?;
    let result = AllocationResult::assemble(
        PolicyTag::Greedy,
        profile,
        ch,
        schedule,
        TransferSchedule::zeros(profile.num_epochs()),
        CheckMode::NoTransfer,
    )?;
    Ok(gate(result, "relay harvests cannot fund the greedy relay power"))
}

fn gate(result: AllocationResult, reason: &str) -> PolicyOutcome {
    match result.feasibility.first_violation() {
        None => PolicyOutcome::Allocated(result),
        Some(c) => PolicyOutcome::NotApplicable(GateFailure {
            reason: reason.to_string(),
            constraint: *c,
        }),
    }
}

/// Instants `t^k` (k ≥ 1) where the total taut string exhausts the scaled
/// network energy, followed by the deadline.
fn exhaustion_slots(profile: &EHProfile, ch: &ChannelModel, total: &[f64]) -> Vec<f64> {
    let harvested = scaled_totals(profile, ch).cumulative;
    let used = cumulative(
        &total
            .iter()
            .zip(profile.epoch_lengths())
            .map(|(p, l)| p * l)
            .collect::<Vec<_>>(),
    );
    let mut ends: Vec<f64> = (1..profile.num_epochs())
        .filter(|&k| (harvested[k - 1] - used[k - 1]).abs() <= 1e-9 * harvested[k - 1].max(1.0))
        .map(|k| profile.instants()[k])
        .collect();
    ends.push(profile.deadline());
    ends
}

/// Runs a node's taut string slot by slot, emptying its battery at each slot
/// end (energy harvested at the slot end belongs to the next slot).
fn slotted_string(profile: &EHProfile, energies: &[f64], slot_ends: &[f64]) -> Result<Vec<Segment>> {
    let stair = Staircase::from_harvests(profile.instants(), energies, profile.deadline())?;
    let mut segments = Vec::new();
    let mut start = 0.0;
    for &end in slot_ends {
        let sol = tight_string(
            &stair,
            Point::new(start, stair.level_before(start)),
            Point::new(end, stair.level_before(end)),
        )?;
        segments.extend(sol.segments);
        start = end;
    }
    Ok(segments)
}

/// Suboptimal no-transfer policy built around the optimal total power.
///
/// The scaled total `E1 + b²E2` gets its taut string; wherever that string
/// exhausts the network energy both nodes must be empty too, so each node
/// runs its own taut string inside every such slot.
pub fn total_suboptimal_no_et(profile: &EHProfile, ch: &ChannelModel) -> Result<AllocationResult> {
    ch.require_relay()?;
    let total = total_power(profile, ch)?;
    let slots = exhaustion_slots(profile, ch, &total);
    let source = slotted_string(profile, profile.e1(), &slots)?;
    let relay = slotted_string(profile, profile.e2(), &slots)?;
    let schedule = PowerSchedule::from_segments(profile, &source, &relay)?;
    let result = AllocationResult::assemble(
        PolicyTag::TotalSuboptimal,
        profile,
        ch,
        schedule,
        TransferSchedule::zeros(profile.num_epochs()),
        CheckMode::NoTransfer,
    )?;
    debug_assert!(result.feasibility.ok, "{:?}", result.feasibility);
    Ok(result)
}

/// Each node on its own point-to-point taut string.
pub fn disjoint(profile: &EHProfile, ch: &ChannelModel) -> Result<AllocationResult> {
    ch.require_relay()?;
    let source = node_string(profile, profile.e1())?;
    let relay = node_string(profile, profile.e2())?;
    let schedule = PowerSchedule::from_segments(profile, &source.segments, &relay.segments)?;
    AllocationResult::assemble(
        PolicyTag::Disjoint,
        profile,
        ch,
        schedule,
        TransferSchedule::zeros(profile.num_epochs()),
        CheckMode::NoTransfer,
    )
}

/// Cumulative source slack `Σ_{j<k} E1 − Σ_{i≤k} P1·l` for k = 1..=K+1.
fn source_slack(profile: &EHProfile, schedule: &PowerSchedule) -> Vec<f64> {
    let harvested = cumulative(profile.e1());
    let used = cumulative(
        &schedule
            .p1()
            .iter()
            .zip(profile.epoch_lengths())
            .map(|(p, l)| p * l)
            .collect::<Vec<_>>(),
    );
    harvested.iter().zip(&used).map(|(h, u)| h - u).collect()
}

/// Source-to-relay transfers for a source schedule that its own harvests can
/// fund.
///
/// The cumulative transfer up to instant `m` is the smallest source slack at
/// any later constraint, which is the largest non-decreasing transfer
/// sequence the source can afford. Its total equals the source's final slack,
/// so the source ends with an empty battery.
pub fn construct_delta_one_way(profile: &EHProfile, schedule: &PowerSchedule) -> Result<Vec<f64>> {
    schedule.check_grid(profile)?;
    let slack = source_slack(profile, schedule);
    if let Some(k) = slack.iter().position(|s| *s < -FEASIBILITY_TOL) {
        return Err(Error::ContractViolation(format!(
            "source overspends by {} at constraint k = {}; no transfer schedule exists",
            -slack[k],
            k + 1
        )));
    }
    let n = slack.len();
    let mut cum = vec![0.0; n];
    let mut running = f64::INFINITY;
    for m in (0..n).rev() {
        running = running.min(slack[m].max(0.0));
        cum[m] = running;
    }
    let mut prev = 0.0;
    Ok(cum
        .into_iter()
        .map(|c| {
            let d = c - prev;
            prev = c;
            d
        })
        .collect())
}

/// One-way transfer policy: balanced split of the total taut string, funded
/// by source-to-relay transfers. Declines when the source cannot fund its
/// share or no non-decreasing transfer sequence keeps the relay causal.
pub fn one_way_optimal(profile: &EHProfile, ch: &ChannelModel) -> Result<PolicyOutcome> {
    ch.require_relay()?;
    let schedule = balanced_split(&total_power(profile, ch)?, ch)?;
    let slack = source_slack(profile, &schedule);
    if let Some(k) = slack.iter().position(|s| *s < -FEASIBILITY_TOL) {
        return Ok(PolicyOutcome::NotApplicable(GateFailure {
            reason: "source cannot fund its share of the total power".into(),
            constraint: ConstraintRef {
                kind: ConstraintKind::Source,
                index: k + 1,
                slack: slack[k],
            },
        }));
    }
    let delta = construct_delta_one_way(profile, &schedule)?;
    let transfers = TransferSchedule::new(delta, vec![0.0; profile.num_epochs()])?;
    let result = AllocationResult::assemble(
        PolicyTag::OneWay,
        profile,
        ch,
        schedule,
        transfers,
        CheckMode::OneWay,
    )?;
    Ok(gate(
        result,
        "relay stays short of energy even with the largest feasible transfers",
    ))
}

/// Two-way transfer policy; optimal for every profile.
pub fn two_way_optimal(profile: &EHProfile, ch: &ChannelModel) -> Result<AllocationResult> {
    ch.require_relay()?;
    let schedule = balanced_split(&total_power(profile, ch)?, ch)?;
    let transfers = construct_deltas_two_way(profile, &schedule, ch)?;
    let result = AllocationResult::assemble(
        PolicyTag::TwoWay,
        profile,
        ch,
        schedule,
        transfers,
        CheckMode::TwoWay,
    )?;
    debug_assert!(result.feasibility.ok, "{:?}", result.feasibility);
    Ok(result)
}

/// Transfers that make a total-feasible schedule causal at both nodes.
///
/// With `Δ^i = b²E2^{i−1} − b²P2^i·l^i`, a surplus `Δ > 0` is sent from the
/// relay to the source at `t^{i−1}` and a deficit is covered by the source.
/// The relay then spends exactly what it holds in every epoch.
pub fn construct_deltas_two_way(
    profile: &EHProfile,
    schedule: &PowerSchedule,
    ch: &ChannelModel,
) -> Result<TransferSchedule> {
    schedule.check_grid(profile)?;
    let b2 = ch.b_squared();
    let (mut to_relay, mut to_source) = (Vec::new(), Vec::new());
    for ((e2, p2), l) in profile
        .e2()
        .iter()
        .zip(schedule.p2())
        .zip(profile.epoch_lengths())
    {
        let delta = b2 * e2 - b2 * p2 * l;
        to_source.push(delta.max(0.0));
        to_relay.push((-delta).max(0.0));
    }
    TransferSchedule::new(to_relay, to_source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Node {
    Source,
    Relay,
}

/// Effective harvests after transfers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedPatterns {
    /// `E1 − δ1 + δ2`.
    pub source: Vec<f64>,
    /// `E2 − δ2/b² + δ1/b²`.
    pub relay: Vec<f64>,
    /// Instants where a modified amount came out negative.
    pub negative: Vec<(Node, usize)>,
}

pub fn modified_eh_patterns(
    profile: &EHProfile,
    transfers: &TransferSchedule,
    ch: &ChannelModel,
) -> Result<ModifiedPatterns> {
    transfers.check_grid(profile)?;
    let b2 = ch.b_squared();
    let d1 = transfers.to_relay();
    let d2 = transfers.to_source();
    let source: Vec<f64> = (0..d1.len()).map(|i| profile.e1()[i] - d1[i] + d2[i]).collect();
    let relay: Vec<f64> = (0..d1.len())
        .map(|i| profile.e2()[i] - d2[i] / b2 + d1[i] / b2)
        .collect();
    let negative = source
        .iter()
        .enumerate()
        .filter(|(_, e)| **e < -FEASIBILITY_TOL)
        .map(|(i, _)| (Node::Source, i))
        .chain(
            relay
                .iter()
                .enumerate()
                .filter(|(_, e)| **e < -FEASIBILITY_TOL)
                .map(|(i, _)| (Node::Relay, i)),
        )
        .collect();
    Ok(ModifiedPatterns {
        source,
        relay,
        negative,
    })
}
