use serde::{Deserialize, Serialize};

use crate::channel::{rate_unchecked, ChannelModel};
use crate::error::{Error, Result};
use crate::profile::EHProfile;

/// Adjacent segments whose powers differ by at most this much are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// A constant-power stretch of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Power in mW.
    pub power: f64,
    /// Duration in seconds.
    pub duration: f64,
}

/// Per-epoch transmit powers of the source (`p1`) and the relay (`p2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSchedule {
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl PowerSchedule {
    pub fn new(p1: Vec<f64>, p2: Vec<f64>) -> Result<Self> {
        if p1.len() != p2.len() {
            return Err(Error::GridMismatch(format!(
                "{} source powers but {} relay powers",
                p1.len(),
                p2.len()
            )));
        }
        for (name, ps) in [("source", &p1), ("relay", &p2)] {
            if let Some(i) = ps.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Domain(format!(
                    "{name} power in epoch {} must be non-negative, got {}",
                    i + 1,
                    ps[i]
                )));
            }
        }
        Ok(Self { p1, p2 })
    }

    pub fn zeros(epochs: usize) -> Self {
        Self {
            p1: vec![0.0; epochs],
            p2: vec![0.0; epochs],
        }
    }

    /// Expands per-node segment lists onto the profile's epoch grid. Every
    /// segment boundary must fall on an epoch boundary.
    pub fn from_segments(profile: &EHProfile, source: &[Segment], relay: &[Segment]) -> Result<Self> {
        Ok(Self {
            p1: expand_segments(profile, source)?,
            p2: expand_segments(profile, relay)?,
        })
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn p2(&self) -> &[f64] {
        &self.p2
    }

    pub fn num_epochs(&self) -> usize {
        self.p1.len()
    }

    pub(crate) fn check_grid(&self, profile: &EHProfile) -> Result<()> {
        if self.p1.len() != profile.num_epochs() {
            return Err(Error::GridMismatch(format!(
                "schedule has {} epochs, profile has {}",
                self.p1.len(),
                profile.num_epochs()
            )));
        }
        Ok(())
    }

    /// Canonical source segments: epochs merged where the power is unchanged.
    pub fn source_segments(&self, profile: &EHProfile) -> Vec<Segment> {
        merge_segments(&self.p1, &profile.epoch_lengths())
    }

    pub fn relay_segments(&self, profile: &EHProfile) -> Vec<Segment> {
        merge_segments(&self.p2, &profile.epoch_lengths())
    }

    /// Per-epoch scaled total `P1 + b²·P2`.
    pub fn scaled_total(&self, ch: &ChannelModel) -> Vec<f64> {
        let b2 = ch.b_squared();
        self.p1.iter().zip(&self.p2).map(|(p1, p2)| p1 + b2 * p2).collect()
    }
}

pub fn merge_segments(powers: &[f64], lengths: &[f64]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(powers.len());
    for (&power, &duration) in powers.iter().zip(lengths) {
        match out.last_mut() {
            Some(last) if (last.power - power).abs() <= MERGE_TOL => last.duration += duration,
            _ => out.push(Segment { power, duration }),
        }
    }
    out
}

fn expand_segments(profile: &EHProfile, segments: &[Segment]) -> Result<Vec<f64>> {
    let bounds = profile.boundaries();
    let tol = 1e-9 * profile.deadline().max(1.0);
    let mut powers = Vec::with_capacity(profile.num_epochs());
    let mut seg_start = 0.0;
    let mut iter = segments.iter().peekable();
    for w in bounds.windows(2) {
        loop {
            let seg = iter.peek().ok_or_else(|| {
                Error::GridMismatch(format!("segments end before the epoch ending at {}", w[1]))
            })?;
            let seg_end = seg_start + seg.duration;
            if seg_end <= w[0] + tol {
                seg_start = seg_end;
                iter.next();
                continue;
            }
            if seg_start > w[0] + tol || seg_end < w[1] - tol {
                return Err(Error::GridMismatch(format!(
                    "segment [{seg_start}, {seg_end}] does not cover epoch [{}, {}]",
                    w[0], w[1]
                )));
            }
            powers.push(seg.power);
            break;
        }
    }
    let total: f64 = segments.iter().map(|s| s.duration).sum();
    if (total - profile.deadline()).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "segment durations sum to {total}, deadline is {}",
            profile.deadline()
        )));
    }
    Ok(powers)
}

/// Total delivered bits in Mbits, `Σ rate(p1, p2)·l`.
pub fn throughput(schedule: &PowerSchedule, profile: &EHProfile, ch: &ChannelModel) -> Result<f64> {
    schedule.check_grid(profile)?;
    Ok(schedule
        .p1
        .iter()
        .zip(&schedule.p2)
        .zip(profile.epoch_lengths())
        .map(|((&p1, &p2), l)| rate_unchecked(p1, p2, ch).rate * l)
        .sum())
}

/// Energy moved between the nodes at each harvest instant, in the scaled
/// domain where the relay's budget is `b²·E2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSchedule {
    /// `δ1`: source to relay.
    to_relay: Vec<f64>,
    /// `δ2`: relay to source.
    to_source: Vec<f64>,
}

impl TransferSchedule {
    pub fn new(to_relay: Vec<f64>, to_source: Vec<f64>) -> Result<Self> {
        if to_relay.len() != to_source.len() {
            return Err(Error::GridMismatch(format!(
                "{} source-to-relay transfers but {} relay-to-source transfers",
                to_relay.len(),
                to_source.len()
            )));
        }
        for (i, (d1, d2)) in to_relay.iter().zip(&to_source).enumerate() {
            if !(d1.is_finite() && *d1 >= 0.0 && d2.is_finite() && *d2 >= 0.0) {
                return Err(Error::Domain(format!(
                    "transfers at instant {i} must be non-negative, got {d1} and {d2}"
                )));
            }
            if *d1 > 0.0 && *d2 > 0.0 {
                return Err(Error::Invalid(format!(
                    "instant {i} sends ({d1}) and receives ({d2}) energy at once"
                )));
            }
        }
        Ok(Self {
            to_relay,
            to_source,
        })
    }

    pub fn zeros(instants: usize) -> Self {
        Self {
            to_relay: vec![0.0; instants],
            to_source: vec![0.0; instants],
        }
    }

    pub fn to_relay(&self) -> &[f64] {
        &self.to_relay
    }

    pub fn to_source(&self) -> &[f64] {
        &self.to_source
    }

    pub fn len(&self) -> usize {
        self.to_relay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_relay.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.to_relay.iter().chain(&self.to_source).all(|d| *d == 0.0)
    }

    /// Energy the relay physically gains at each instant, `(δ1 − δ2)/b²`.
    pub fn relay_net_gain(&self, ch: &ChannelModel) -> Vec<f64> {
        let b2 = ch.b_squared();
        self.to_relay
            .iter()
            .zip(&self.to_source)
            .map(|(d1, d2)| (d1 - d2) / b2)
            .collect()
    }

    pub(crate) fn check_grid(&self, profile: &EHProfile) -> Result<()> {
        if self.len() != profile.num_epochs() {
            return Err(Error::GridMismatch(format!(
                "{} transfer instants, profile has {}",
                self.len(),
                profile.num_epochs()
            )));
        }
        Ok(())
    }
}
