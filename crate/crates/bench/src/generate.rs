//! Seeded Poisson harvest scenarios.
//!
//! The stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`).
//! Each sample takes one `f64` uniform `u` in [0, 1) (53-bit, as drawn by
//! `rand`'s `StandardUniform`) and returns the smallest `k` with
//! `F(k) > u`, accumulating `F` by the recurrence `p(k) = p(k−1)·λ/k`.
//! A scenario draws all source amounts, then all relay amounts, in
//! instant order; a zero at instant 0 is redrawn immediately.

use ehrelay::{ChannelModel, EHProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::Scenario;

/// Largest mean accepted: `e^{-λ}` must stay a normal `f64`.
pub const MAX_MEAN: f64 = 700.0;

/// One Poisson(`mean`) sample by sequential inversion.
pub fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    let u: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    // The cap only guards against `cdf` stalling just below 1 from rounding.
    let cap = (mean + 40.0 * mean.sqrt() + 40.0) as u64;
    while u >= cdf && k < cap {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

fn draw_pattern(rng: &mut impl Rng, mean: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = poisson(rng, mean);
        while i == 0 && e == 0 {
            e = poisson(rng, mean);
        }
        out.push(e as f64);
    }
    out
}

/// `count` scenarios named `poisson-<seed>-<index>` on the default channel.
///
/// Panics if `mean` is outside (0, [`MAX_MEAN`]] or the instants and deadline
/// do not form a valid profile grid.
pub fn generate_poisson(seed: u64, count: usize, mean: f64, instants: &[f64], deadline: f64) -> Vec<Scenario> {
    assert!(mean > 0.0 && mean <= MAX_MEAN, "Poisson mean must lie in (0, {MAX_MEAN}], got {mean}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let e1 = draw_pattern(&mut rng, mean, instants.len());
            let e2 = draw_pattern(&mut rng, mean, instants.len());
            let profile = EHProfile::new(instants.to_vec(), e1, e2, deadline).expect("generator grid must be valid");
            Scenario::new(format!("poisson-{seed}-{i}"), ChannelModel::default(), profile)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: [f64; 4] = [0.0, 2.0, 4.0, 6.0];

    #[test]
    fn same_seed_same_scenarios() {
        let a = generate_poisson(7, 20, 10.0, &GRID, 7.0);
        let b = generate_poisson(7, 20, 10.0, &GRID, 7.0);
        assert_eq!(a, b);
        assert_ne!(a, generate_poisson(8, 20, 10.0, &GRID, 7.0));
    }

    #[test]
    fn samples_are_nonnegative_integers_with_positive_first() {
        for s in generate_poisson(1, 200, 10.0, &GRID, 7.0) {
            for e in s.profile.e1().iter().chain(s.profile.e2()) {
                assert!(*e >= 0.0 && e.fract() == 0.0);
            }
            assert!(s.profile.e1()[0] > 0.0 && s.profile.e2()[0] > 0.0);
        }
    }

    #[test]
    fn sample_mean_near_ten() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let total: u64 = (0..n).map(|_| poisson(&mut rng, 10.0)).sum();
        let mean = total as f64 / n as f64;
        assert!((9.8..=10.2).contains(&mean), "{mean}");
    }

    #[test]
    fn small_and_large_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let small: u64 = (0..n).map(|_| poisson(&mut rng, 0.2)).sum();
        assert!((small as f64 / n as f64 - 0.2).abs() < 0.02);
        let large: u64 = (0..2_000).map(|_| poisson(&mut rng, 500.0)).sum();
        assert!((large as f64 / 2_000.0 - 500.0).abs() < 2.0);
    }

    #[test]
    fn default_channel() {
        let s = &generate_poisson(0, 1, 10.0, &GRID, 7.0)[0];
        assert_eq!(s.channel, ChannelModel::default());
        assert_eq!(s.name, "poisson-0-0");
    }
}
