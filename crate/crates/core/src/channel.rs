//! Gaussian relay channel gains and the noncoherent decode-and-forward rate.
//!
//! Powers are in mW, energies in mJ, times in seconds and rates in Mbits/s.
//! The default normalization (`noise = 1`, 1 MHz) corresponds to a noise
//! density of 1e-19 W/Hz over 1 MHz with 100 dB path loss, where the
//! received SNR equals the transmit power in mW.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used to declare the two rate branches equal.
pub const BRANCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Source to relay amplitude gain.
    pub a: f64,
    /// Relay to destination amplitude gain.
    pub b: f64,
    /// Effective noise level in mW (received SNR = power / noise).
    pub noise: f64,
    /// Bandwidth in MHz; rates scale linearly with it.
    pub bandwidth_mhz: f64,
}

/// Physical link budget, converted to the normalized form by
/// [`ChannelModel::from_physical`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalLink {
    pub noise_density_w_per_hz: f64,
    pub bandwidth_hz: f64,
    pub path_loss_db: f64,
}

impl PhysicalLink {
    /// Noise density 1e-19 W/Hz, 1 MHz, 100 dB path loss.
    pub const REFERENCE: PhysicalLink = PhysicalLink {
        noise_density_w_per_hz: 1e-19,
        bandwidth_hz: 1e6,
        path_loss_db: 100.0,
    };
}

impl ChannelModel {
    pub fn new(a: f64, b: f64, noise: f64) -> Result<Self> {
        Self::with_bandwidth(a, b, noise, 1.0)
    }

    pub fn with_bandwidth(a: f64, b: f64, noise: f64, bandwidth_mhz: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Invalid(format!("gain a must be finite, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Invalid(format!("gain b must be positive, got {b}")));
        }
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::Invalid(format!("noise must be positive, got {noise}")));
        }
        if !(bandwidth_mhz.is_finite() && bandwidth_mhz > 0.0) {
            return Err(Error::Invalid(format!(
                "bandwidth must be positive, got {bandwidth_mhz} MHz"
            )));
        }
        Ok(Self {
            a,
            b,
            noise,
            bandwidth_mhz,
        })
    }

    /// Converts a physical link budget into the normalized mW / Mbit form.
    ///
    /// The received power of a `P` mW transmission is `P·1e-3·10^(-PL/10)` W
    /// and the noise power is `N0·W`, so the equivalent noise level in
    /// transmit-side mW is `N0·W / (1e-3·10^(-PL/10))`.
    pub fn from_physical(a: f64, b: f64, link: PhysicalLink) -> Result<Self> {
        let PhysicalLink {
            noise_density_w_per_hz: n0,
            bandwidth_hz: w,
            path_loss_db: pl,
        } = link;
        if !(n0.is_finite() && n0 > 0.0 && w.is_finite() && w > 0.0 && pl.is_finite()) {
            return Err(Error::Invalid(format!(
                "physical link needs positive N0 and bandwidth and a finite path loss, got {link:?}"
            )));
        }
        let path_gain = 10f64.powf(-pl / 10.0);
        let noise = n0 * w / (1e-3 * path_gain);
        Self::with_bandwidth(a, b, noise, w / 1e6)
    }

    /// `[a²]† = max(1, a²)`.
    pub fn relay_gain(&self) -> f64 {
        (self.a * self.a).max(1.0)
    }

    pub fn b_squared(&self) -> f64 {
        self.b * self.b
    }

    /// Fraction of the scaled total power `P1 + b²P2` carried by the source
    /// when both rate branches are balanced: `1 / [a²]†`.
    pub fn source_share(&self) -> f64 {
        1.0 / self.relay_gain()
    }

    /// Rejects `a² < 1`, where the relay is useless and the relay policies
    /// are not defined.
    pub fn require_relay(&self) -> Result<()> {
        let a_squared = self.a * self.a;
        if a_squared < 1.0 {
            Err(Error::DegenerateRelay { a_squared })
        } else {
            Ok(())
        }
    }

    /// Capacity `W·log2(1 + snr)` in Mbits/s for a received power in mW.
    pub fn capacity(&self, received_mw: f64) -> f64 {
        self.bandwidth_mhz * (received_mw / self.noise).ln_1p() / std::f64::consts::LN_2
    }
}

impl Default for ChannelModel {
    /// `a = b = 2` with the reference normalization.
    fn default() -> Self {
        Self {
            a: 2.0,
            b: 2.0,
            noise: 1.0,
            bandwidth_mhz: 1.0,
        }
    }
}

/// Which term of the rate minimum is binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Multiple-access term `C((P1 + b²P2)/N0)`.
    MultipleAccess,
    /// Source-relay term `C([a²]†·P1/N0)`.
    SourceRelay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEval {
    pub rate: f64,
    pub multiple_access: f64,
    pub source_relay: f64,
    pub binding: Branch,
    /// Both branches agree within [`BRANCH_TOL`].
    pub balanced: bool,
}

/// Noncoherent decode-and-forward rate for source power `p1` and relay power
/// `p2`.
pub fn rate_nc(p1: f64, p2: f64, ch: &ChannelModel) -> Result<RateEval> {
    if !(p1.is_finite() && p1 >= 0.0) || !(p2.is_finite() && p2 >= 0.0) {
        return Err(Error::Domain(format!(
            "powers must be finite and non-negative, got p1 = {p1}, p2 = {p2}"
        )));
    }
    Ok(rate_unchecked(p1, p2, ch))
}

pub(crate) fn rate_unchecked(p1: f64, p2: f64, ch: &ChannelModel) -> RateEval {
    let multiple_access = ch.capacity(p1 + ch.b_squared() * p2);
    let source_relay = ch.capacity(ch.relay_gain() * p1);
    let binding = if multiple_access < source_relay {
        Branch::MultipleAccess
    } else {
        Branch::SourceRelay
    };
    RateEval {
        rate: multiple_access.min(source_relay),
        multiple_access,
        source_relay,
        binding,
        balanced: (multiple_access - source_relay).abs() <= BRANCH_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn balanced_point_from_example_two() {
        let ch = ChannelModel::default();
        let r = rate_nc(4.1875, 3.140625, &ch).unwrap();
        assert!(r.balanced);
        assert_abs_diff_eq!(r.rate, 17.75f64.log2(), epsilon = 1e-12);

        let rounded = rate_nc(4.1875, 3.1406, &ch).unwrap();
        // log2(1 + 4·4.1875) = log2(17.75) = 4.14974; rounding P2 moves it by 1e-5.
        assert_abs_diff_eq!(rounded.rate, 4.14974, epsilon = 2e-5);
        assert!(!rounded.balanced);
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let r = rate_nc(0.0, 0.0, &ChannelModel::default()).unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn source_relay_branch_binds() {
        let r = rate_nc(3.5, 4.25, &ChannelModel::default()).unwrap();
        assert_eq!(r.binding, Branch::SourceRelay);
        assert_abs_diff_eq!(r.multiple_access, 21.5f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rate, 15f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.rate, 3.9069, epsilon = 5e-5);
    }

    #[test]
    fn negative_power_is_a_domain_error() {
        let ch = ChannelModel::default();
        assert!(matches!(rate_nc(-1.0, 0.0, &ch), Err(Error::Domain(_))));
        assert!(matches!(rate_nc(1.0, -1e-3, &ch), Err(Error::Domain(_))));
        assert!(matches!(rate_nc(f64::NAN, 0.0, &ch), Err(Error::Domain(_))));
    }

    #[test]
    fn reference_link_normalizes_to_unit_noise() {
        let ch = ChannelModel::from_physical(2.0, 2.0, PhysicalLink::REFERENCE).unwrap();
        assert_abs_diff_eq!(ch.noise, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ch.bandwidth_mhz, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn relay_gain_is_clamped_at_one() {
        let ch = ChannelModel::new(0.5, 1.0, 1.0).unwrap();
        assert_eq!(ch.relay_gain(), 1.0);
        assert!(matches!(ch.require_relay(), Err(Error::DegenerateRelay { .. })));
        assert!(ChannelModel::new(1.0, 0.0, 1.0).is_err());
        assert!(ChannelModel::new(1.0, 1.0, 0.0).is_err());
    }
}
