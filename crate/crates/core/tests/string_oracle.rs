//! Taut strings against brute-force throughput maximization.

use ehrelay::{single_user_alloc, tight_string, Point, Staircase};
use proptest::prelude::*;

const GRID_STEP: f64 = 0.01;

fn bits(energy: f64, length: f64) -> f64 {
    length * (energy / length).ln_1p() / std::f64::consts::LN_2
}

/// Best `Σ l·log2(1 + p)` given consumption is fixed up to the first `fixed`
/// boundaries; the remaining boundaries are optimized by nested ternary
/// search (the partial maximum of a concave function stays concave).
fn best_tail(caps: &[f64], lengths: &[f64], fixed: &mut Vec<f64>) -> f64 {
    let k = fixed.len();
    let prev = *fixed.last().unwrap_or(&0.0);
    if k == caps.len() {
        let mut c = 0.0;
        return fixed
            .iter()
            .zip(lengths)
            .map(|(&x, &l)| {
                let v = bits(x - c, l);
                c = x;
                v
            })
            .sum();
    }
    if k + 1 == caps.len() {
        fixed.push(caps[k]);
        let v = best_tail(caps, lengths, fixed);
        fixed.pop();
        return v;
    }
    let (mut lo, mut hi) = (prev, caps[k].max(prev));
    let eval = |x: f64, fixed: &mut Vec<f64>| {
        fixed.push(x);
        let v = best_tail(caps, lengths, fixed);
        fixed.pop();
        v
    };
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if eval(m1, fixed) < eval(m2, fixed) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    eval(0.5 * (lo + hi), fixed)
}

/// Grid scan over consumption at the first boundary, exact search beyond.
fn brute_force(times: &[f64], energies: &[f64], end: f64) -> f64 {
    let mut bounds = times.to_vec();
    bounds.push(end);
    let lengths: Vec<f64> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
    // Consumption by the end of epoch i is capped by harvests 0..=i.
    let caps: Vec<f64> = energies
        .iter()
        .scan(0.0, |acc, e| {
            *acc += e;
            Some(*acc)
        })
        .collect();
    if caps.len() == 1 {
        return bits(caps[0], lengths[0]);
    }
    let steps = (caps[0] / GRID_STEP).round() as usize;
    (0..=steps)
        .map(|s| best_tail(&caps, &lengths, &mut vec![s as f64 * GRID_STEP]))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn string_bits(times: &[f64], energies: &[f64], end: f64) -> f64 {
    single_user_alloc(times, energies, end)
        .unwrap()
        .segments
        .iter()
        .map(|s| bits(s.power * s.duration, s.duration))
        .sum()
}

fn staircase() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(1u32..=4, n),
                1u32..=20,
                prop::collection::vec(0u32..=20, n - 1),
            )
        })
        .prop_map(|(gaps, first, rest)| {
            let mut times = vec![0.0];
            for g in &gaps[..gaps.len() - 1] {
                times.push(times.last().unwrap() + *g as f64);
            }
            let end = times.last().unwrap() + *gaps.last().unwrap() as f64;
            let mut energies = vec![first as f64];
            energies.extend(rest.iter().map(|e| *e as f64));
            (times, energies, end)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matches_brute_force((times, energies, end) in staircase()) {
        let ours = string_bits(&times, &energies, end);
        let oracle = brute_force(&times, &energies, end);
        prop_assert!(ours >= oracle - 1e-9);
        prop_assert!(ours - oracle <= GRID_STEP);
    }
}

proptest! {
    #[test]
    fn shape_of_the_full_string((times, energies, end) in staircase()) {
        let sol = single_user_alloc(&times, &energies, end).unwrap();
        let total: f64 = energies.iter().sum();
        for w in sol.segments.windows(2) {
            prop_assert!(w[1].power > w[0].power);
        }
        prop_assert!((sol.consumed() - total).abs() <= 1e-12 * total);

        let stair = Staircase::from_harvests(&times, &energies, end).unwrap();
        let mut t = 0.0;
        let mut used = 0.0;
        for s in &sol.segments {
            for &v in times.iter().filter(|&&v| v > t && v <= t + s.duration + 1e-12) {
                prop_assert!(used + s.power * (v - t) <= stair.level_before(v) + 1e-9);
            }
            t += s.duration;
            used += s.power * s.duration;
        }
    }

    #[test]
    fn no_small_transfer_between_segments_helps((times, energies, end) in staircase()) {
        let sol = single_user_alloc(&times, &energies, end).unwrap();
        let value = |p: &[f64]| -> f64 {
            p.iter().zip(sol.durations()).map(|(p, l)| l * p.ln_1p()).sum::<f64>()
        };
        let base = sol.powers();
        let eps = 1e-6;
        for i in 0..base.len().saturating_sub(1) {
            // Moving energy later is always causal; moving it earlier crosses
            // a corner where the string touches the staircase.
            let mut later = base.clone();
            later[i] -= eps / sol.segments[i].duration;
            later[i + 1] += eps / sol.segments[i + 1].duration;
            prop_assert!(value(&later) <= value(&base) + 1e-12);
        }
    }

    #[test]
    fn capped_string_stays_below_cap(
        (times, energies, end) in staircase(),
        frac in 0.05f64..1.0,
    ) {
        let stair = Staircase::from_harvests(&times, &energies, end).unwrap();
        let cap = frac * stair.level_before(end);
        prop_assume!(cap > 0.0);
        let sol = tight_string(&stair, Point::new(0.0, 0.0), Point::new(end, cap)).unwrap();
        for w in sol.segments.windows(2) {
            prop_assert!(w[1].power >= w[0].power);
        }
        prop_assert!((sol.consumed() - cap).abs() <= 1e-12 * cap.max(1.0));
    }
}
