//! Hardware clocks with bounded, piecewise-constant additive drift.
//!
//! A clock's reading at real time `t` is the integral of `1 + rho(r)` over
//! `[0, t]`. With piecewise-constant drift the integral is a sum of linear
//! pieces, so every reading is exact up to floating-point rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn check_rho_hat(rho_hat: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho_hat) {
        Ok(())
    } else {
        Err(Error::RhoHatOutOfRange(rho_hat))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct DriftSchedule {
    rho_hat: f64,
    breakpoints: Vec<f64>,
    rates: Vec<f64>,
    horizon: f64,
}

#[derive(Deserialize)]
struct RawSchedule {
    rho_hat: f64,
    breakpoints: Vec<f64>,
    rates: Vec<f64>,
    horizon: f64,
}

impl TryFrom<RawSchedule> for DriftSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        DriftSchedule::new(raw.rho_hat, raw.breakpoints, raw.rates, raw.horizon)
    }
}

impl DriftSchedule {
    /// Segment `k` covers `[breakpoints[k], breakpoints[k + 1])`; the last one
    /// runs through `horizon` inclusive.
    pub fn new(rho_hat: f64, breakpoints: Vec<f64>, rates: Vec<f64>, horizon: f64) -> Result<Self> {
        check_rho_hat(rho_hat)?;
        if !(horizon > 0.0) {
            return Err(Error::NonPositive("horizon", horizon));
        }
        let invalid = |msg: String| Err(Error::Invalid(vec![msg]));
        if breakpoints.is_empty() || breakpoints.len() != rates.len() {
            return invalid("drift schedule needs one rate per breakpoint".into());
        }
        if breakpoints[0] != 0.0 {
            return invalid("drift schedule must start at time 0".into());
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("drift breakpoints must be strictly increasing".into());
        }
        if breakpoints[breakpoints.len() - 1] >= horizon {
            return invalid("last drift breakpoint must precede the horizon".into());
        }
        if let Some(&rate) = rates.iter().find(|r| !(r.abs() <= rho_hat)) {
            return Err(Error::DriftOutOfRange { rate, rho_hat });
        }
        Ok(DriftSchedule {
            rho_hat,
            breakpoints,
            rates,
            horizon,
        })
    }

    pub fn constant(rho_hat: f64, rate: f64, horizon: f64) -> Result<Self> {
        Self::new(rho_hat, vec![0.0], vec![rate], horizon)
    }

    pub fn rho_hat(&self) -> f64 {
        self.rho_hat
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn segment(&self, t: f64) -> usize {
        self.breakpoints
            .partition_point(|&b| b <= t)
            .saturating_sub(1)
    }

    /// Drift in effect on the segment starting at or containing `t`.
    pub fn drift_at(&self, t: f64) -> f64 {
        self.rates[self.segment(t)]
    }
}

/// How a single node's drift evolves over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftMode {
    Constant(f64),
    PiecewiseRandom,
    /// Pinned at `+rho_hat` when `fast`, `-rho_hat` otherwise.
    AdversarialExtreme {
        fast: bool,
    },
}

pub fn make_drift_schedule(
    mode: DriftMode,
    rho_hat: f64,
    seed: u64,
    dwell: f64,
    horizon: f64,
) -> Result<DriftSchedule> {
    check_rho_hat(rho_hat)?;
    if !(dwell > 0.0) {
        return Err(Error::NonPositive("dwell", dwell));
    }
    match mode {
        DriftMode::Constant(rate) => DriftSchedule::constant(rho_hat, rate, horizon),
        DriftMode::AdversarialExtreme { fast } => {
            DriftSchedule::constant(rho_hat, if fast { rho_hat } else { -rho_hat }, horizon)
        }
        DriftMode::PiecewiseRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut breakpoints = Vec::new();
            let mut rates = Vec::new();
            let mut k = 0u32;
            loop {
                let b = f64::from(k) * dwell;
                if b >= horizon {
                    break;
                }
                breakpoints.push(b);
                rates.push(rng.gen_range(-rho_hat..=rho_hat));
                k += 1;
            }
            DriftSchedule::new(rho_hat, breakpoints, rates, horizon)
        }
    }
}

/// Evaluates `H(t)` for a drift schedule, with `H(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareClock {
    schedule: DriftSchedule,
    /// `H` at each breakpoint.
    cumulative: Vec<f64>,
}

impl HardwareClock {
    pub fn new(schedule: DriftSchedule) -> Self {
        let mut cumulative = Vec::with_capacity(schedule.breakpoints.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for (w, rate) in schedule.breakpoints.windows(2).zip(&schedule.rates) {
            acc += (1.0 + rate) * (w[1] - w[0]);
            cumulative.push(acc);
        }
        HardwareClock {
            schedule,
            cumulative,
        }
    }

    pub fn schedule(&self) -> &DriftSchedule {
        &self.schedule
    }

    pub fn hardware_time(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t > self.schedule.horizon {
            return Err(Error::BeyondHorizon {
                t,
                horizon: self.schedule.horizon,
            });
        }
        let k = self.schedule.segment(t);
        Ok(
            self.cumulative[k]
                + (1.0 + self.schedule.rates[k]) * (t - self.schedule.breakpoints[k]),
        )
    }

    /// `dH/dt` on the segment starting at or containing `t`.
    pub fn rate_at(&self, t: f64) -> f64 {
        1.0 + self.schedule.drift_at(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        let unit = HardwareClock::new(DriftSchedule::constant(0.0, 0.0, 10.0).unwrap());
        assert_eq!(unit.hardware_time(7.0).unwrap(), 7.0);

        let fast = HardwareClock::new(DriftSchedule::constant(0.1, 0.1, 10.0).unwrap());
        assert!((fast.hardware_time(5.0).unwrap() - 5.5).abs() < 1e-12);

        let two = DriftSchedule::new(0.1, vec![0.0, 2.0], vec![0.1, -0.1], 5.0).unwrap();
        let clock = HardwareClock::new(two);
        assert!((clock.hardware_time(5.0).unwrap() - 4.9).abs() < 1e-12);
        assert!((clock.hardware_time(2.0).unwrap() - 2.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        let clock = HardwareClock::new(DriftSchedule::constant(0.0, 0.0, 3.0).unwrap());
        assert!(matches!(
            clock.hardware_time(3.5),
            Err(Error::BeyondHorizon { .. })
        ));
        assert!(clock.hardware_time(3.0).is_ok());
        assert_eq!(
            DriftSchedule::constant(1.0, 0.0, 3.0),
            Err(Error::RhoHatOutOfRange(1.0))
        );
        assert!(matches!(
            DriftSchedule::constant(0.1, 0.2, 3.0),
            Err(Error::DriftOutOfRange { .. })
        ));
        assert!(DriftSchedule::new(0.1, vec![0.0, 0.0], vec![0.0, 0.0], 3.0).is_err());
        assert!(make_drift_schedule(DriftMode::PiecewiseRandom, 0.1, 0, 0.0, 3.0).is_err());
        assert!(make_drift_schedule(DriftMode::PiecewiseRandom, -0.1, 0, 1.0, 3.0).is_err());
    }

    #[test]
    fn drift_modes() {
        let s = make_drift_schedule(DriftMode::Constant(0.0), 0.0, 0, 1.0, 10.0).unwrap();
        assert_eq!(s.rates(), &[0.0]);

        let s = make_drift_schedule(
            DriftMode::AdversarialExtreme { fast: true },
            0.1,
            0,
            1.0,
            10.0,
        )
        .unwrap();
        assert_eq!((s.breakpoints(), s.rates()), (&[0.0][..], &[0.1][..]));
        let s = make_drift_schedule(
            DriftMode::AdversarialExtreme { fast: false },
            0.1,
            0,
            1.0,
            10.0,
        )
        .unwrap();
        assert_eq!(s.rates(), &[-0.1]);

        let s = make_drift_schedule(DriftMode::PiecewiseRandom, 0.1, 42, 1.0, 10_000.0).unwrap();
        assert_eq!(s.rates().len(), 10_000);
        assert!(s.rates().iter().all(|r| (-0.1..=0.1).contains(r)));
        assert!(s.rates().iter().any(|&r| r > 0.05) && s.rates().iter().any(|&r| r < -0.05));
        assert_eq!(s.breakpoints()[1], 1.0);
        let again =
            make_drift_schedule(DriftMode::PiecewiseRandom, 0.1, 42, 1.0, 10_000.0).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn schedule_serde_validates() {
        let s = DriftSchedule::new(0.1, vec![0.0, 2.0], vec![0.1, -0.1], 5.0).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: DriftSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
        let bad = json.replace("-0.1", "-0.5");
        assert!(serde_json::from_str::<DriftSchedule>(&bad).is_err());
    }

    /// Left Riemann sum of `1 + rho` with step `h`, independent of the
    /// closed-form segment sums.
    fn riemann(s: &DriftSchedule, t: f64, h: f64) -> f64 {
        let rate = |x: f64| {
            let mut r = s.rates()[0];
            for (b, v) in s.breakpoints().iter().zip(s.rates()) {
                if *b <= x {
                    r = *v;
                }
            }
            1.0 + r
        };
        let mut acc = 0.0;
        let mut k = 0u64;
        loop {
            let x = k as f64 * h;
            if x >= t {
                break;
            }
            let step = h.min(t - x);
            acc += rate(x) * step;
            k += 1;
        }
        acc
    }

    fn schedule_strategy() -> impl Strategy<Value = DriftSchedule> {
        (
            0.0..0.5f64,
            prop::collection::vec((0.05..3.0f64, -1.0..=1.0f64), 1..4),
            -1.0..=1.0f64,
        )
            .prop_map(|(rho_hat, pieces, first)| {
                let mut bps = vec![0.0];
                let mut rates = vec![first * rho_hat];
                let mut at = 0.0;
                for (len, u) in pieces {
                    at += len;
                    bps.push(at);
                    rates.push(u * rho_hat);
                }
                DriftSchedule::new(rho_hat, bps, rates, at + 1.0).unwrap()
            })
    }

    proptest! {
        #[test]
        fn monotone_with_bounded_rate(s in schedule_strategy(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let clock = HardwareClock::new(s.clone());
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (t0, t1) = (lo * s.horizon(), hi * s.horizon());
            let (h0, h1) = (clock.hardware_time(t0).unwrap(), clock.hardware_time(t1).unwrap());
            let dt = t1 - t0;
            prop_assert!(h1 >= h0);
            if dt > 0.0 {
                prop_assert!(h1 > h0);
            }
            prop_assert!(h1 - h0 >= (1.0 - s.rho_hat()) * dt - 1e-9);
            prop_assert!(h1 - h0 <= (1.0 + s.rho_hat()) * dt + 1e-9);
        }

        #[test]
        fn agrees_with_riemann_sum(s in schedule_strategy(), frac in 0.0..1.0f64) {
            let h = 1e-4;
            let t = frac * s.horizon();
            let exact = HardwareClock::new(s.clone()).hardware_time(t).unwrap();
            let approx = riemann(&s, t, h);
            prop_assert!((exact - approx).abs() <= 2.0 * (1.0 + s.rho_hat()) * h,
                "exact {exact} riemann {approx}");
        }
    }
}
