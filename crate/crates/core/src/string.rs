//! Taut-string ("shortest path") allocation below a cumulative energy
//! staircase.
//!
//! For a concave, increasing rate the throughput-optimal single-node policy
//! is the shortest piecewise-linear curve from the origin to the final
//! cumulative energy that never rises above the harvest staircase. Its slopes
//! are the transmit powers. Starting from the current point the next
//! breakpoint is the staircase corner reachable with the smallest slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Segment;

/// Relative tolerance when comparing candidate slopes.
const SLOPE_TIE_TOL: f64 = 1e-12;

/// Cumulative harvested energy. `levels[j]` is the energy available from
/// `times[j]` onwards (harvest at `times[j]` included); the staircase ends at
/// `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    times: Vec<f64>,
    levels: Vec<f64>,
    end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub time: f64,
    pub energy: f64,
}

impl Point {
    pub fn new(time: f64, energy: f64) -> Self {
        Self { time, energy }
    }
}

impl Staircase {
    pub fn new(times: Vec<f64>, levels: Vec<f64>, end: f64) -> Result<Self> {
        if times.is_empty() || times.len() != levels.len() {
            return Err(Error::Invalid(format!(
                "staircase needs matching non-empty times and levels ({} vs {})",
                times.len(),
                levels.len()
            )));
        }
        if times.iter().chain(&levels).any(|x| !x.is_finite()) || !end.is_finite() {
            return Err(Error::Invalid("staircase values must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("staircase times must be strictly increasing".into()));
        }
        if levels[0] < 0.0 || levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid(
                "staircase levels must be non-negative and non-decreasing".into(),
            ));
        }
        if end <= times[times.len() - 1] {
            return Err(Error::Invalid(format!(
                "staircase end {end} must follow the last vertex {}",
                times[times.len() - 1]
            )));
        }
        Ok(Self { times, levels, end })
    }

    /// Staircase of running sums of per-instant harvest amounts.
    pub fn from_harvests(instants: &[f64], amounts: &[f64], end: f64) -> Result<Self> {
        if let Some(a) = amounts.iter().find(|a| **a < 0.0) {
            return Err(Error::Invalid(format!("negative harvest amount {a}")));
        }
        Self::new(instants.to_vec(), crate::profile::cumulative(amounts), end)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn total(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    /// Energy harvested at instants `≤ t`.
    pub fn level_at(&self, t: f64) -> f64 {
        let n = self.times.partition_point(|&x| x <= t);
        if n == 0 {
            0.0
        } else {
            self.levels[n - 1]
        }
    }

    /// Energy harvested at instants `< t`; the most a node may have spent by
    /// time `t`.
    pub fn level_before(&self, t: f64) -> f64 {
        let n = self.times.partition_point(|&x| x < t);
        if n == 0 {
            0.0
        } else {
            self.levels[n - 1]
        }
    }

    fn tol(&self) -> f64 {
        1e-9 * self.total().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringSolution {
    /// Staircase vertex index where each segment ends; `times.len()` marks
    /// the requested end point.
    pub breakpoints: Vec<usize>,
    pub segments: Vec<Segment>,
}

impl StringSolution {
    pub fn powers(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.power).collect()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.duration).collect()
    }

    /// Energy consumed over the whole string.
    pub fn consumed(&self) -> f64 {
        self.segments.iter().map(|s| s.power * s.duration).sum()
    }
}

/// Taut string from `start` to `end` below `min(stair, end.energy)`.
///
/// Consumption by time `τ` never exceeds the energy harvested strictly before
/// `τ`, and equals `end.energy` at `end.time`. Among equal-slope corners the
/// latest one is taken, so the result has the fewest segments.
pub fn tight_string(stair: &Staircase, start: Point, end: Point) -> Result<StringSolution> {
    let tol = stair.tol();
    if !(start.time.is_finite() && end.time.is_finite()) || start.time >= end.time {
        return Err(Error::Invalid(format!(
            "string must move forward in time: start {} end {}",
            start.time, end.time
        )));
    }
    if start.time < stair.times[0] || end.time > stair.end + tol {
        return Err(Error::Invalid(format!(
            "string [{}, {}] leaves the staircase span [{}, {}]",
            start.time, end.time, stair.times[0], stair.end
        )));
    }
    if start.energy < -tol || start.energy > stair.level_at(start.time) + tol {
        return Err(Error::Infeasible(format!(
            "start energy {} exceeds the {} available at t = {}",
            start.energy,
            stair.level_at(start.time),
            start.time
        )));
    }
    let available = stair.level_before(end.time);
    if end.energy > available + tol {
        return Err(Error::Infeasible(format!(
            "end energy {} exceeds the {available} harvested before t = {}",
            end.energy, end.time
        )));
    }
    if end.energy < start.energy - tol {
        return Err(Error::Infeasible(format!(
            "end energy {} is below the start energy {}",
            end.energy, start.energy
        )));
    }

    let cap = end.energy;
    let terminal = stair.times.len();
    let mut time = start.time;
    let mut energy = start.energy;
    let mut breakpoints = Vec::new();
    let mut segments = Vec::new();

    while time < end.time {
        let corners = stair
            .times
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &t)| t > time && t < end.time)
            .map(|(j, &t)| (j, t, stair.levels[j - 1].min(cap)))
            .chain(std::iter::once((terminal, end.time, cap)));

        let mut best: Option<(usize, f64, f64, f64)> = None;
        for (j, t, bound) in corners {
            let slope = (bound - energy) / (t - time);
            match best {
                Some((_, _, _, s)) if slope > s + SLOPE_TIE_TOL * s.abs().max(f64::MIN_POSITIVE) => {}
                _ => best = Some((j, t, bound, slope)),
            }
        }
        let (j, t, bound, slope) = best.expect("the end point is always a candidate");
        if slope < -tol {
            return Err(Error::Infeasible(format!(
                "string would need negative power {slope} before t = {t}"
            )));
        }
        segments.push(Segment {
            power: slope.max(0.0),
            duration: t - time,
        });
        breakpoints.push(j);
        time = t;
        energy = bound;
    }

    Ok(StringSolution {
        breakpoints,
        segments,
    })
}

/// Point-to-point optimum: the taut string from the origin to the total
/// harvested energy at the deadline.
pub fn single_user_alloc(instants: &[f64], energies: &[f64], deadline: f64) -> Result<StringSolution> {
    let stair = Staircase::from_harvests(instants, energies, deadline)?;
    let total = stair.total();
    tight_string(&stair, Point::new(instants[0], 0.0), Point::new(deadline, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const GRID: [f64; 4] = [0., 2., 4., 6.];

    fn assert_string(sol: &StringSolution, powers: &[f64], durations: &[f64]) {
        assert_eq!(sol.segments.len(), powers.len(), "{sol:?}");
        for (s, (&p, &l)) in sol.segments.iter().zip(powers.iter().zip(durations)) {
            assert_abs_diff_eq!(s.power, p, epsilon = 5e-5);
            assert_abs_diff_eq!(s.duration, l, epsilon = 1e-12);
        }
    }

    #[test]
    fn example_one_source_string() {
        let stair = Staircase::from_harvests(&GRID, &[2., 9., 7., 9.], 7.).unwrap();
        let sol = tight_string(&stair, Point::new(0., 0.), Point::new(7., 27.)).unwrap();
        assert_string(&sol, &[1., 4., 9.], &[2., 4., 1.]);
        assert_eq!(sol.breakpoints, vec![1, 3, 4]);
    }

    #[test]
    fn single_vertex_is_one_slope() {
        let sol = single_user_alloc(&[0.], &[10.], 5.).unwrap();
        assert_string(&sol, &[2.], &[5.]);
        let sol = single_user_alloc(&[0.], &[10.], 4.).unwrap();
        assert_string(&sol, &[2.5], &[4.]);
    }

    #[test]
    fn string_inside_a_slot() {
        let stair = Staircase::new(vec![0., 2.], vec![7., 18.], 4.).unwrap();
        let sol = tight_string(&stair, Point::new(0., 0.), Point::new(4., 18.)).unwrap();
        assert_string(&sol, &[3.5, 5.5], &[2., 2.]);
    }

    #[test]
    fn disjoint_rows_of_scenario_two() {
        let s = single_user_alloc(&GRID, &[10., 9., 14., 8.], 7.).unwrap();
        assert_string(&s, &[4.75, 7., 8.], &[4., 2., 1.]);
        let r = single_user_alloc(&GRID, &[7., 5., 5., 5.], 7.).unwrap();
        assert_string(&r, &[17. / 6., 5.], &[6., 1.]);
    }

    #[test]
    fn equal_slopes_take_the_latest_corner() {
        // Corners at (2, 4) and (4, 8) lie on one line with the end (6, 12).
        let sol = single_user_alloc(&[0., 2., 4.], &[4., 4., 4.], 6.).unwrap();
        assert_string(&sol, &[2.], &[6.]);
        assert_eq!(sol.breakpoints, vec![3]);
    }

    #[test]
    fn start_mid_staircase() {
        // Slot [4, 6] of scenario 2: source entered with 19 mJ spent.
        let stair = Staircase::from_harvests(&GRID, &[10., 9., 14., 8.], 7.).unwrap();
        let sol = tight_string(&stair, Point::new(4., 19.), Point::new(6., 33.)).unwrap();
        assert_string(&sol, &[7.], &[2.]);
    }

    #[test]
    fn capped_endpoint_below_total() {
        let stair = Staircase::from_harvests(&GRID, &[10., 9., 14., 8.], 7.).unwrap();
        let sol = tight_string(&stair, Point::new(0., 0.), Point::new(7., 12.)).unwrap();
        assert_abs_diff_eq!(sol.consumed(), 12.0, epsilon = 1e-12);
        let p = sol.powers();
        assert!(p.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn infeasible_endpoints() {
        let stair = Staircase::from_harvests(&GRID, &[2., 9., 7., 9.], 7.).unwrap();
        // Only 18 mJ is harvested before t = 6.
        assert!(matches!(
            tight_string(&stair, Point::new(0., 0.), Point::new(6., 19.)),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            tight_string(&stair, Point::new(0., 3.), Point::new(7., 27.)),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            tight_string(&stair, Point::new(2., 5.), Point::new(7., 4.)),
            Err(Error::Infeasible(_))
        ));
        assert!(tight_string(&stair, Point::new(3., 0.), Point::new(3., 0.)).is_err());
        assert!(tight_string(&stair, Point::new(0., 0.), Point::new(8., 0.)).is_err());
    }

    #[test]
    fn staircase_levels() {
        let stair = Staircase::from_harvests(&GRID, &[2., 9., 7., 9.], 7.).unwrap();
        assert_eq!(stair.level_at(2.), 11.);
        assert_eq!(stair.level_before(2.), 2.);
        assert_eq!(stair.level_before(0.), 0.);
        assert_eq!(stair.level_before(7.), 27.);
        assert!(Staircase::new(vec![0., 1.], vec![2., 1.], 3.).is_err());
        assert!(Staircase::new(vec![0., 1.], vec![1., 2.], 1.).is_err());
    }
}
