//! Reference optimizer for the no-transfer, one-way and two-way problems.
//!
//! Each problem is written in epigraph form over per-epoch variables
//! `(p1, q, r)`: maximize `Σ l·r` subject to `r ≤ C(branch)` for both rate
//! branches and linear cumulative energy constraints. `q` is `b²·p2` without
//! transfers and the scaled total power `p1 + b²p2` otherwise. The program is
//! concave and solved by a log-barrier interior point method with damped
//! Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::feasibility::{scaled_totals, CheckMode};
use crate::policies::{construct_delta_one_way, construct_deltas_two_way, AllocationResult, PolicyTag};
use crate::profile::{cumulative, EHProfile};
use crate::schedule::{PowerSchedule, TransferSchedule};

/// Epochs shorter than this (seconds) are rejected.
pub const MIN_EPOCH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Separate source and relay causality; `q = b²p2`.
    NoTransfer,
    /// Source causality plus total causality; `q = p1 + b²p2`.
    OneWay,
    /// Total causality only; `q = p1 + b²p2`.
    TwoWay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub barrier_start: f64,
    pub barrier_multiplier: f64,
    /// Centering stops once half the squared Newton decrement drops below this.
    pub newton_tol: f64,
    /// Cap on Newton steps summed over all barrier stages.
    pub max_iterations: usize,
    /// Stop when the duality-gap bound `m/t` is below this times |objective|.
    pub rel_objective_tol: f64,
    /// Initial distance of each `r` below its two rate bounds.
    pub restoration_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            barrier_start: 1.0,
            barrier_multiplier: 10.0,
            newton_tol: 1e-10,
            max_iterations: 500,
            rel_objective_tol: 1e-8,
            restoration_margin: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.barrier_start,
            self.newton_tol,
            self.rel_objective_tol,
            self.restoration_margin,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_iterations == 0 || !(self.barrier_multiplier > 1.0) {
            return Err(Error::Invalid(format!(
                "solver settings must be positive with multiplier > 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// `r ≤ scale·ln(1 + (α1·p1 + α2·q)/noise)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RateCut {
    alpha: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpigraphProblem {
    kind: ProblemKind,
    lengths: Vec<f64>,
    /// Rows of `A·x ≤ h`; `x = [p1; q; r]`.
    rows: Vec<Vec<f64>>,
    bounds: Vec<f64>,
    cuts: [RateCut; 2],
    scale: f64,
    noise: f64,
    b_squared: f64,
    start: Vec<f64>,
}

/// Converged iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct EpigraphSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub gap: f64,
}

impl EpigraphProblem {
    pub fn build(profile: &EHProfile, ch: &ChannelModel, kind: ProblemKind) -> Result<Self> {
        ch.require_relay()?;
        let lengths = profile.epoch_lengths();
        if let Some(i) = lengths.iter().position(|l| *l < MIN_EPOCH) {
            return Err(Error::Invalid(format!(
                "epoch {} lasts {} s, below {MIN_EPOCH} s",
                i + 1,
                lengths[i]
            )));
        }
        let n = lengths.len();
        let b2 = ch.b_squared();
        let cum_e1 = cumulative(profile.e1());
        let cum_relay: Vec<f64> = cumulative(profile.e2()).iter().map(|e| b2 * e).collect();
        let cum_total = scaled_totals(profile, ch).cumulative;

        let mut rows = Vec::new();
        let mut bounds = Vec::new();
        let mut cumulative_rows = |var: usize, budget: &[f64]| {
            for k in 0..n {
                let mut row = vec![0.0; 3 * n];
                for i in 0..=k {
                    row[var * n + i] = lengths[i];
                }
                rows.push(row);
                bounds.push(budget[k]);
            }
        };
        let q_budget = match kind {
            ProblemKind::NoTransfer => {
                cumulative_rows(0, &cum_e1);
                cumulative_rows(1, &cum_relay);
                &cum_relay
            }
            ProblemKind::OneWay => {
                cumulative_rows(0, &cum_e1);
                cumulative_rows(1, &cum_total);
                &cum_total
            }
            ProblemKind::TwoWay => {
                cumulative_rows(1, &cum_total);
                &cum_total
            }
        };
        for i in 0..n {
            let mut row = vec![0.0; 3 * n];
            row[i] = -1.0;
            rows.push(row);
            bounds.push(0.0);
            let mut row = vec![0.0; 3 * n];
            match kind {
                ProblemKind::NoTransfer => row[n + i] = -1.0,
                // p2 ≥ 0 ⇔ q ≥ p1.
                _ => {
                    row[i] = 1.0;
                    row[n + i] = -1.0;
                }
            }
            rows.push(row);
            bounds.push(0.0);
        }

        let multiple_access = match kind {
            ProblemKind::NoTransfer => RateCut { alpha: [1.0, 1.0] },
            _ => RateCut { alpha: [0.0, 1.0] },
        };
        let source_relay = RateCut {
            alpha: [ch.relay_gain(), 0.0],
        };

        let ends = &profile.boundaries()[1..];
        let min_rate = |budget: &[f64]| {
            budget
                .iter()
                .zip(ends)
                .map(|(e, t)| e / t)
                .fold(f64::INFINITY, f64::min)
        };
        let p1_0 = 0.5 * min_rate(&cum_e1);
        let q_0 = 0.5 * min_rate(q_budget);
        let mut problem = Self {
            kind,
            lengths,
            rows,
            bounds,
            cuts: [multiple_access, source_relay],
            scale: ch.bandwidth_mhz / std::f64::consts::LN_2,
            noise: ch.noise,
            b_squared: b2,
            start: Vec::new(),
        };
        let mut x = vec![p1_0; n];
        x.extend(vec![q_0; n]);
        x.extend(vec![0.0; n]);
        for i in 0..n {
            let (p1, q) = (x[i], x[n + i]);
            x[2 * n + i] = problem.cut_rate(0, p1, q).min(problem.cut_rate(1, p1, q));
        }
        problem.start = x;
        Ok(problem)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn num_epochs(&self) -> usize {
        self.lengths.len()
    }

    /// Number of inequality constraints (linear rows plus two rate cuts per
    /// epoch).
    pub fn num_constraints(&self) -> usize {
        self.rows.len() + 2 * self.num_epochs()
    }

    /// Strictly feasible start, with every `r` placed `margin` below its
    /// rate bounds.
    pub fn initial_point(&self, margin: f64) -> Vec<f64> {
        let n = self.num_epochs();
        let mut x = self.start.clone();
        for r in &mut x[2 * n..] {
            *r -= margin;
        }
        x
    }

    /// `Σ l·r`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.num_epochs();
        self.lengths.iter().zip(&x[2 * n..]).map(|(l, r)| l * r).sum()
    }

    fn cut_rate(&self, c: usize, p1: f64, q: f64) -> f64 {
        let a = self.cuts[c].alpha;
        self.scale * ((a[0] * p1 + a[1] * q) / self.noise).ln_1p()
    }

    fn linear_slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.bounds)
            .map(|(row, h)| h - dot(row, x))
            .collect()
    }

    /// Slack `C(branch) − r` of each rate cut, epoch-major.
    fn cut_slacks(&self, x: &[f64]) -> Vec<[f64; 2]> {
        let n = self.num_epochs();
        (0..n)
            .map(|i| {
                let (p1, q, r) = (x[i], x[n + i], x[2 * n + i]);
                [self.cut_rate(0, p1, q) - r, self.cut_rate(1, p1, q) - r]
            })
            .collect()
    }

    pub fn is_strictly_feasible(&self, x: &[f64]) -> bool {
        self.linear_slacks(x).iter().all(|s| *s > 0.0)
            && self.cut_slacks(x).iter().all(|s| s[0] > 0.0 && s[1] > 0.0)
    }

    /// `−t·Σ l·r − Σ log(slack)`, or `None` outside the strict interior.
    pub fn barrier(&self, x: &[f64], t: f64) -> Option<f64> {
        let mut value = -t * self.objective(x);
        for s in self.linear_slacks(x) {
            if !(s > 0.0) {
                return None;
            }
            value -= s.ln();
        }
        for s in self.cut_slacks(x).iter().flatten() {
            if !(*s > 0.0) {
                return None;
            }
            value -= s.ln();
        }
        Some(value)
    }

    pub fn barrier_gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.derivatives(x, t, false).0.as_slice().to_vec()
    }

    fn derivatives(&self, x: &[f64], t: f64, hessian: bool) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.num_epochs();
        let dim = 3 * n;
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(if hessian { dim } else { 0 }, if hessian { dim } else { 0 });
        for i in 0..n {
            grad[2 * n + i] -= t * self.lengths[i];
        }
        for (row, s) in self.rows.iter().zip(self.linear_slacks(x)) {
            let a = DVector::from_column_slice(row);
            grad += &a / s;
            if hessian {
                hess.ger(1.0 / (s * s), &a, &a, 1.0);
            }
        }
        for i in 0..n {
            let (p1, q, r) = (x[i], x[n + i], x[2 * n + i]);
            let idx = [i, n + i, 2 * n + i];
            for cut in &self.cuts {
                let a = cut.alpha;
                let inner = self.noise + a[0] * p1 + a[1] * q;
                let g = self.scale * ((a[0] * p1 + a[1] * q) / self.noise).ln_1p() - r;
                let dg = [self.scale * a[0] / inner, self.scale * a[1] / inner, -1.0];
                for u in 0..3 {
                    grad[idx[u]] -= dg[u] / g;
                }
                if hessian {
                    // ∇²(−log g) = ∇g∇gᵀ/g² − ∇²g/g, with ∇²g = −scale·ααᵀ/inner².
                    for u in 0..3 {
                        for v in 0..3 {
                            let mut h = dg[u] * dg[v] / (g * g);
                            if u < 2 && v < 2 {
                                h += self.scale * a[u] * a[v] / (inner * inner * g);
                            }
                            hess[(idx[u], idx[v])] += h;
                        }
                    }
                }
            }
        }
        (grad, hess)
    }

    /// Largest step along `dx` keeping every linear slack positive.
    fn max_linear_step(&self, x: &[f64], dx: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(self.linear_slacks(x))
            .filter_map(|(row, s)| {
                let rate = dot(row, dx);
                (rate > 0.0).then(|| s / rate)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<EpigraphSolution> {
        cfg.validate()?;
        let m = self.num_constraints() as f64;
        let mut x = self.initial_point(cfg.restoration_margin);
        let mut t = cfg.barrier_start;
        let mut iterations = 0;
        loop {
            loop {
                if iterations >= cfg.max_iterations {
                    return Err(self.non_convergence(&x, iterations, m / t));
                }
                iterations += 1;
                let (grad, hess) = self.derivatives(&x, t, true);
                let dx = newton_direction(hess, &grad)
                    .ok_or_else(|| self.non_convergence(&x, iterations, m / t))?;
                let decrement = -grad.dot(&dx);
                if decrement / 2.0 <= cfg.newton_tol {
                    break;
                }
                let dx = dx.as_slice();
                let current = self.barrier(&x, t).expect("iterates stay interior");
                let mut step = (0.99 * self.max_linear_step(&x, dx)).min(1.0);
                let accepted = loop {
                    let trial: Vec<f64> = x.iter().zip(dx).map(|(a, d)| a + step * d).collect();
                    if let Some(v) = self.barrier(&trial, t) {
                        // At large t the Armijo margin can fall below the
                        // resolution of the barrier value; demand strict
                        // decrease so a stalled iterate ends centering.
                        if v < current && v <= current - 0.01 * step * decrement {
                            break Some(trial);
                        }
                    }
                    step *= 0.5;
                    if step < 1e-16 {
                        break None;
                    }
                };
                match accepted {
                    Some(trial) => x = trial,
                    // No progress is possible at this precision.
                    None => break,
                }
            }
            let objective = self.objective(&x);
            let gap = m / t;
            if gap < cfg.rel_objective_tol * objective.abs().max(1e-6) {
                return Ok(EpigraphSolution {
                    x,
                    objective,
                    iterations,
                    gap,
                });
            }
            t *= cfg.barrier_multiplier;
        }
    }

    /// Splits an iterate into physical source and relay powers.
    pub fn powers(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_epochs();
        let p1: Vec<f64> = x[..n].iter().map(|p| p.max(0.0)).collect();
        let p2 = (0..n)
            .map(|i| {
                let relay = match self.kind {
                    ProblemKind::NoTransfer => x[n + i],
                    _ => x[n + i] - x[i],
                };
                (relay / self.b_squared).max(0.0)
            })
            .collect();
        (p1, p2)
    }

    fn non_convergence(&self, x: &[f64], iterations: usize, gap: f64) -> Error {
        let (best_p1, best_p2) = self.powers(x);
        Error::NonConvergence {
            iterations,
            gap,
            best_objective: self.objective(x),
            best_p1,
            best_p2,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `H·dx = −g`, adding diagonal regularization if `H` is not
/// numerically positive definite.
fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().amax().max(1.0);
    let mut shift = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += shift;
        }
        if let Some(chol) = h.cholesky() {
            return Some(-chol.solve(grad));
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
    }
    None
}

fn solve_kind(
    profile: &EHProfile,
    ch: &ChannelModel,
    cfg: &SolverConfig,
    kind: ProblemKind,
) -> Result<AllocationResult> {
    let problem = EpigraphProblem::build(profile, ch, kind)?;
    let solution = problem.solve(cfg)?;
    let (p1, p2) = problem.powers(&solution.x);
    let schedule = PowerSchedule::new(p1, p2)?;
    let n = profile.num_epochs();
    let (policy, transfers, mode) = match kind {
        ProblemKind::NoTransfer => (
            PolicyTag::SolveNoTransfer,
            TransferSchedule::zeros(n),
            CheckMode::NoTransfer,
        ),
        ProblemKind::OneWay => (
            PolicyTag::SolveOneWay,
            TransferSchedule::new(construct_delta_one_way(profile, &schedule)?, vec![0.0; n])?,
            CheckMode::SourceTotal,
        ),
        ProblemKind::TwoWay => (
            PolicyTag::SolveTwoWay,
            construct_deltas_two_way(profile, &schedule, ch)?,
            CheckMode::TwoWay,
        ),
    };
    AllocationResult::assemble(policy, profile, ch, schedule, transfers, mode)
}

/// Optimal throughput without energy transfer.
pub fn solve_no_et(profile: &EHProfile, ch: &ChannelModel, cfg: &SolverConfig) -> Result<AllocationResult> {
    solve_kind(profile, ch, cfg, ProblemKind::NoTransfer)
}

/// Optimum of the one-way problem with the relay constraint replaced by
/// total causality. The reported transfers are the largest non-decreasing
/// sequence the source can afford; the feasibility report audits the source
/// and total constraints.
pub fn solve_one_way(profile: &EHProfile, ch: &ChannelModel, cfg: &SolverConfig) -> Result<AllocationResult> {
    solve_kind(profile, ch, cfg, ProblemKind::OneWay)
}

/// Optimal throughput with transfers in both directions.
pub fn solve_two_way(profile: &EHProfile, ch: &ChannelModel, cfg: &SolverConfig) -> Result<AllocationResult> {
    solve_kind(profile, ch, cfg, ProblemKind::TwoWay)
}
