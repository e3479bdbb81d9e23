use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::Result;
use crate::profile::{cumulative, EHProfile};
use crate::schedule::{PowerSchedule, TransferSchedule};
use crate::string::Staircase;

/// Slack at or above `-FEASIBILITY_TOL` (mJ) counts as satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Which constraint system to audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Separate source and relay causality, transfers ignored.
    NoTransfer,
    /// Source-to-relay transfers only; relay-to-source amounts are ignored.
    OneWay,
    /// Transfers in both directions.
    TwoWay,
    /// Source causality without transfers plus total causality. This is the
    /// transfer-free form of the one-way problem solved by the reference
    /// optimizer; relay causality is not audited.
    SourceTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Source,
    Relay,
    Total,
    Nonnegativity,
}

/// A constraint identified by kind and its 1-based index `k`: causality
/// constraint `k` bounds consumption over epochs `1..=k` (up to `t^k`,
/// with `t^{K+1} = T`); nonnegativity `k` refers to epoch `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRef {
    pub kind: ConstraintKind,
    pub index: usize,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub mode: CheckMode,
    /// Source causality slack in mJ, one per `k = 1..=K+1`.
    pub source: Vec<f64>,
    /// Relay causality slack in physical mJ (scaled slack divided by `b²`).
    /// Empty in [`CheckMode::SourceTotal`].
    pub relay: Vec<f64>,
    /// Total causality slack in the scaled domain `E1 + b²E2`.
    pub total: Vec<f64>,
    /// `min(p1, p2)` per epoch.
    pub nonnegativity: Vec<f64>,
    pub ok: bool,
    /// Constraints holding with equality (|slack| ≤ tolerance).
    pub active: Vec<ConstraintRef>,
    pub violated: Vec<ConstraintRef>,
}

impl FeasibilityReport {
    pub fn is_active(&self, kind: ConstraintKind, index: usize) -> bool {
        self.active.iter().any(|c| c.kind == kind && c.index == index)
    }

    pub fn first_violation(&self) -> Option<&ConstraintRef> {
        self.violated.first()
    }
}

/// Energy left unused at the deadline by each node, in physical mJ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessEnergy {
    pub source: f64,
    pub relay: f64,
}

/// Evaluates every cumulative constraint of `mode` at `t^1, ..., t^K, T`.
pub fn check_feasible(
    schedule: &PowerSchedule,
    transfers: &TransferSchedule,
    profile: &EHProfile,
    ch: &ChannelModel,
    mode: CheckMode,
) -> Result<FeasibilityReport> {
    schedule.check_grid(profile)?;
    transfers.check_grid(profile)?;
    let n = profile.num_epochs();
    let lengths = profile.epoch_lengths();
    let b2 = ch.b_squared();

    let zeros = vec![0.0; n];
    let (d1, d2): (&[f64], &[f64]) = match mode {
        CheckMode::NoTransfer | CheckMode::SourceTotal => (&zeros, &zeros),
        CheckMode::OneWay => (transfers.to_relay(), &zeros),
        CheckMode::TwoWay => (transfers.to_relay(), transfers.to_source()),
    };

    let used1 = cumulative(&mul(schedule.p1(), &lengths));
    let used2 = cumulative(&mul(schedule.p2(), &lengths));
    let budget1 = cumulative(
        &(0..n)
            .map(|i| profile.e1()[i] - d1[i] + d2[i])
            .collect::<Vec<_>>(),
    );
    let budget2 = cumulative(
        &(0..n)
            .map(|i| profile.e2()[i] + (d1[i] - d2[i]) / b2)
            .collect::<Vec<_>>(),
    );
    let totals = scaled_totals(profile, ch);

    let source: Vec<f64> = (0..n).map(|k| budget1[k] - used1[k]).collect();
    let relay: Vec<f64> = match mode {
        CheckMode::SourceTotal => Vec::new(),
        _ => (0..n).map(|k| budget2[k] - used2[k]).collect(),
    };
    let total: Vec<f64> = (0..n)
        .map(|k| totals.cumulative[k] - (used1[k] + b2 * used2[k]))
        .collect();
    let nonnegativity: Vec<f64> = schedule
        .p1()
        .iter()
        .zip(schedule.p2())
        .map(|(a, b)| a.min(*b))
        .collect();

    let mut active = Vec::new();
    let mut violated = Vec::new();
    for (kind, slacks) in [
        (ConstraintKind::Source, &source),
        (ConstraintKind::Relay, &relay),
        (ConstraintKind::Total, &total),
        (ConstraintKind::Nonnegativity, &nonnegativity),
    ] {
        for (k, &slack) in slacks.iter().enumerate() {
            let c = ConstraintRef {
                kind,
                index: k + 1,
                slack,
            };
            if slack < -FEASIBILITY_TOL {
                violated.push(c);
            } else if slack <= FEASIBILITY_TOL {
                active.push(c);
            }
        }
    }

    Ok(FeasibilityReport {
        mode,
        source,
        relay,
        total,
        nonnegativity,
        ok: violated.is_empty(),
        active,
        violated,
    })
}

/// Unused energy at the deadline given the transfers actually applied.
pub fn excess_energy(
    schedule: &PowerSchedule,
    transfers: &TransferSchedule,
    profile: &EHProfile,
    ch: &ChannelModel,
) -> ExcessEnergy {
    let lengths = profile.epoch_lengths();
    let spent1: f64 = mul(schedule.p1(), &lengths).iter().sum();
    let spent2: f64 = mul(schedule.p2(), &lengths).iter().sum();
    let sent: f64 = transfers.to_relay().iter().sum();
    let received: f64 = transfers.to_source().iter().sum();
    ExcessEnergy {
        source: profile.total_e1() - sent + received - spent1,
        relay: profile.total_e2() + (sent - received) / ch.b_squared() - spent2,
    }
}

/// Per-instant scaled network harvest `E1 + b²·E2` and its running sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledTotals {
    pub per_instant: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl ScaledTotals {
    pub fn staircase(&self, profile: &EHProfile) -> Staircase {
        Staircase::new(
            profile.instants().to_vec(),
            self.cumulative.clone(),
            profile.deadline(),
        )
        .expect("a valid profile yields a valid staircase")
    }
}

pub fn scaled_totals(profile: &EHProfile, ch: &ChannelModel) -> ScaledTotals {
    let b2 = ch.b_squared();
    let per_instant: Vec<f64> = profile
        .e1()
        .iter()
        .zip(profile.e2())
        .map(|(e1, e2)| e1 + b2 * e2)
        .collect();
    let cumulative = cumulative(&per_instant);
    ScaledTotals {
        per_instant,
        cumulative,
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_one() -> EHProfile {
        EHProfile::new(
            vec![0., 2., 4., 6.],
            vec![2., 9., 7., 9.],
            vec![9., 2., 9., 10.],
            7.,
        )
        .unwrap()
    }

    fn example_one_greedy() -> PowerSchedule {
        PowerSchedule::new(vec![1., 4., 4., 9.], vec![0.75, 3., 3., 6.75]).unwrap()
    }

    #[test]
    fn greedy_example_one_is_feasible() {
        let prof = example_one();
        let ch = ChannelModel::default();
        let r = check_feasible(
            &example_one_greedy(),
            &TransferSchedule::zeros(4),
            &prof,
            &ch,
            CheckMode::NoTransfer,
        )
        .unwrap();
        assert!(r.ok, "{r:?}");
        // t = 2 and t = 6 are k = 1 and k = 3.
        assert!(r.is_active(ConstraintKind::Source, 1));
        assert!(r.is_active(ConstraintKind::Source, 3));
        assert!(!r.is_active(ConstraintKind::Source, 2));
        assert_abs_diff_eq!(r.relay[3], 9.75, epsilon = 1e-12);
        let excess = excess_energy(&example_one_greedy(), &TransferSchedule::zeros(4), &prof, &ch);
        assert_abs_diff_eq!(excess.relay, 9.75, epsilon = 1e-12);
        assert_abs_diff_eq!(excess.source, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn overspending_first_epoch_is_flagged() {
        let prof = example_one();
        let s = PowerSchedule::new(vec![1.5, 0., 0., 0.], vec![0.; 4]).unwrap();
        let r = check_feasible(
            &s,
            &TransferSchedule::zeros(4),
            &prof,
            &ChannelModel::default(),
            CheckMode::NoTransfer,
        )
        .unwrap();
        assert!(!r.ok);
        let v = r.first_violation().unwrap();
        assert_eq!((v.kind, v.index), (ConstraintKind::Source, 1));
        assert_abs_diff_eq!(v.slack, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_way_ignores_reverse_transfers() {
        let prof = example_one();
        let ch = ChannelModel::default();
        let t = TransferSchedule::new(vec![0.; 4], vec![20., 0., 0., 0.]).unwrap();
        let s = PowerSchedule::new(vec![5., 0., 0., 0.], vec![0.; 4]).unwrap();
        assert!(check_feasible(&s, &t, &prof, &ch, CheckMode::TwoWay).unwrap().ok);
        assert!(!check_feasible(&s, &t, &prof, &ch, CheckMode::OneWay).unwrap().ok);
    }

    #[test]
    fn scaled_totals_of_examples() {
        let ch = ChannelModel::default();
        let ex3 = EHProfile::new(
            vec![0., 2., 4., 6.],
            vec![10., 9., 7., 9.],
            vec![2., 10., 10., 13.],
            7.,
        )
        .unwrap();
        let s = scaled_totals(&ex3, &ch);
        assert_eq!(s.per_instant, vec![18., 49., 47., 61.]);
        assert_eq!(s.cumulative, vec![18., 67., 114., 175.]);

        let ex2 = EHProfile::new(
            vec![0., 2., 4., 6.],
            vec![10., 9., 14., 8.],
            vec![7., 5., 5., 5.],
            7.,
        )
        .unwrap();
        assert_eq!(scaled_totals(&ex2, &ch).per_instant, vec![38., 29., 34., 28.]);

        let unit = ChannelModel::new(2., 1., 1.).unwrap();
        let tiny = EHProfile::new(vec![0., 1.], vec![3., 4.], vec![1e-300, 0.], 2.).unwrap();
        let c = scaled_totals(&tiny, &unit).cumulative;
        assert_abs_diff_eq!(c[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], 7.0, epsilon = 1e-12);
    }
}
