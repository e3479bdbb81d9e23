use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Known harvest instants and amounts for the source and the relay.
///
/// Harvest `j` happens at `instants[j]`; epoch `i` (1-based) spans
/// `(t^{i-1}, t^i]` with `t^{K+1}` equal to the deadline. Energy harvested at
/// `t^j` can only be spent in epochs after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct EHProfile {
    instants: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
    deadline: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    instants: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
    deadline: f64,
}

impl TryFrom<RawProfile> for EHProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        EHProfile::new(raw.instants, raw.e1, raw.e2, raw.deadline)
    }
}

impl From<EHProfile> for RawProfile {
    fn from(p: EHProfile) -> Self {
        RawProfile {
            instants: p.instants,
            e1: p.e1,
            e2: p.e2,
            deadline: p.deadline,
        }
    }
}

impl EHProfile {
    pub fn new(instants: Vec<f64>, e1: Vec<f64>, e2: Vec<f64>, deadline: f64) -> Result<Self> {
        if instants.is_empty() {
            return Err(Error::Invalid("at least one harvest instant is required".into()));
        }
        if e1.len() != instants.len() || e2.len() != instants.len() {
            return Err(Error::Invalid(format!(
                "{} instants but {} source and {} relay harvest amounts",
                instants.len(),
                e1.len(),
                e2.len()
            )));
        }
        if instants[0] != 0.0 {
            return Err(Error::Invalid(format!(
                "first harvest instant must be 0, got {}",
                instants[0]
            )));
        }
        if let Some(w) = instants
            .windows(2)
            .position(|w| !(w[1].is_finite() && w[1] > w[0]))
        {
            return Err(Error::Invalid(format!(
                "harvest instants must be strictly increasing: t[{}] = {} follows {}",
                w + 1,
                instants[w + 1],
                instants[w]
            )));
        }
        let last = instants[instants.len() - 1];
        if !(deadline.is_finite() && deadline > last) {
            return Err(Error::Invalid(format!(
                "deadline {deadline} must exceed the last harvest instant {last}"
            )));
        }
        for (name, amounts) in [("source", &e1), ("relay", &e2)] {
            if let Some(j) = amounts.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(Error::Invalid(format!(
                    "{name} harvest {j} must be finite and non-negative, got {}",
                    amounts[j]
                )));
            }
            if amounts[0] <= 0.0 {
                return Err(Error::Invalid(format!(
                    "{name} must harvest a positive amount at t = 0"
                )));
            }
        }
        Ok(Self {
            instants,
            e1,
            e2,
            deadline,
        })
    }

    /// Builds a profile from unordered `(time, source, relay)` harvest events.
    /// Events at the same time are summed and a zero harvest is inserted at
    /// `t = 0` when no event happens there.
    pub fn from_events(events: &[(f64, f64, f64)], deadline: f64) -> Result<Self> {
        let mut sorted = events.to_vec();
        if sorted.iter().any(|e| !e.0.is_finite()) {
            return Err(Error::Invalid("event times must be finite".into()));
        }
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut instants: Vec<f64> = vec![0.0];
        let mut e1 = vec![0.0];
        let mut e2 = vec![0.0];
        for (t, a, b) in sorted {
            if t < 0.0 {
                return Err(Error::Invalid(format!("event time {t} is negative")));
            }
            if t == *instants.last().unwrap() {
                *e1.last_mut().unwrap() += a;
                *e2.last_mut().unwrap() += b;
            } else {
                instants.push(t);
                e1.push(a);
                e2.push(b);
            }
        }
        Self::new(instants, e1, e2, deadline)
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    /// Source harvest amounts, one per instant.
    pub fn e1(&self) -> &[f64] {
        &self.e1
    }

    /// Relay harvest amounts, one per instant.
    pub fn e2(&self) -> &[f64] {
        &self.e2
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    /// Number of epochs, `K + 1`.
    pub fn num_epochs(&self) -> usize {
        self.instants.len()
    }

    /// Epoch boundaries `t^0, ..., t^K, T`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = self.instants.clone();
        b.push(self.deadline);
        b
    }

    pub fn epoch_lengths(&self) -> Vec<f64> {
        self.boundaries().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn total_e1(&self) -> f64 {
        self.e1.iter().sum()
    }

    pub fn total_e2(&self) -> f64 {
        self.e2.iter().sum()
    }
}

/// Running sums, `out[k] = xs[0] + ... + xs[k]`.
pub fn cumulative(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}
