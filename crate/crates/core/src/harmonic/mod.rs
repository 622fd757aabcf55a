//! Harmonic-broadcast arithmetic.
//!
//! Everything here is a pure function of the scheme parameters: harmonic
//! numbers and the segment count they allow, the admissible loss bound per
//! client slot, the first-slot success probability and its large-λ limit,
//! and the startup delay that redundancy channels cost. The periodic
//! broadcast schedule lives in [`schedule`].

mod schedule;
mod tail;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use schedule::{build_schedule, verify_schedule, Schedule, ScheduleReport, Violation};
pub use tail::{binomial_upper_tail, first_slot_success_prob};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Every parameter of one broadcast scheme instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Segment count.
    pub n: usize,
    /// Content channels.
    pub m: usize,
    /// Redundancy channels.
    pub r: usize,
    /// Subchannels per channel.
    pub lambda: usize,
    /// Packets per subsegment.
    pub k: usize,
    pub payload_bytes: usize,
    /// Content rate in bits per second.
    pub content_rate: f64,
    /// Content duration in seconds.
    pub content_duration: f64,
    pub seed: u64,
    /// Content rows of every coding matrix are the identity.
    pub systematic: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 32,
            m: 7,
            r: 1,
            lambda: 4,
            k: 16,
            payload_bytes: 8,
            content_rate: 2_000_000.0,
            content_duration: 7200.0,
            seed: 1,
            systematic: false,
        }
    }
}

impl SystemConfig {
    /// Total channel count `M + R`.
    pub fn channels(&self) -> usize {
        self.m + self.r
    }

    pub fn slot_duration(&self) -> f64 {
        self.content_duration / self.n as f64
    }

    /// Bytes carried by one segment (`λ·k·payload_bytes`).
    pub fn segment_bytes(&self) -> usize {
        self.lambda * self.k * self.payload_bytes
    }

    /// Packets emitted per slot, `λ(M+R)·k`.
    pub fn packets_per_slot(&self) -> usize {
        self.lambda * self.channels() * self.k
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.m == 0 {
            return bad("M must be positive".into());
        }
        if self.lambda == 0 {
            return bad("lambda must be positive".into());
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.payload_bytes == 0 {
            return bad("payload_bytes must be positive".into());
        }
        if self.content_rate.is_nan() || self.content_rate <= 0.0 {
            return bad("content_rate must be positive".into());
        }
        if self.content_duration.is_nan() || self.content_duration <= 0.0 {
            return bad("content_duration must be positive".into());
        }
        if self.n < self.m {
            return bad(format!(
                "n = {} is smaller than M = {}; every slot carries M distinct segments",
                self.n, self.m
            ));
        }
        if self.n > max_segments(self.m)? {
            // H_n > M: the scheduler reports the first missed deadline.
            build_schedule(self, 2 * self.n)?;
            return Err(Error::ScheduleInfeasible { segment: self.n as u32, slot: 2 * self.n });
        }
        Ok(())
    }
}

/// `H_n = Σ_{k=1..n} 1/k`, summed smallest term first.
pub fn harmonic_number(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("harmonic number of 0".into()));
    }
    Ok(harmonic_or_zero(n))
}

// H_0 = 0 so the admissible bound is defined at b = 1.
fn harmonic_or_zero(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

/// `H_n` as an exact rational. `H_0 = 0`.
pub fn harmonic_number_exact(n: usize) -> BigRational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for k in 1..=n {
        // num/den + 1/k
        let k = BigInt::from(k);
        num = num * &k + &den;
        den *= k;
        let g = gcd(&num, &den);
        num /= &g;
        den /= &g;
    }
    BigRational::new_raw(num, den)
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// Largest `n` with `H_n ≤ M`.
pub fn max_segments(m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::InvalidArgument("M must be positive".into()));
    }
    let bound = m as f64;
    // Kahan-compensated running sum; boundaries are far above f64 noise for
    // every practical M.
    let (mut sum, mut comp) = (1.0_f64, 0.0_f64);
    let mut n = 1usize;
    loop {
        let term = 1.0 / (n + 1) as f64 - comp;
        let next = sum + term;
        let next_comp = (next - sum) - term;
        if next > bound {
            return Ok(n);
        }
        sum = next;
        comp = next_comp;
        n += 1;
    }
}

/// Minimum server bandwidth `H_n · r` for `n` segments at content rate `r`.
pub fn min_bandwidth(n: usize, content_rate: f64) -> Result<f64> {
    if content_rate.is_nan() || content_rate <= 0.0 {
        return Err(Error::InvalidArgument("content rate must be positive".into()));
    }
    Ok(harmonic_number(n)? * content_rate)
}

fn check_slot(n: usize, b: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if b == 0 || b > n {
        return Err(Error::InvalidArgument(format!("client slot {b} outside 1..={n}")));
    }
    Ok(())
}

/// Maximum packet loss probability that still lets a client decode every
/// segment of client slot `b`: `(H_{b−1} + R) / (H_n + R)`.
///
/// Subchanneling scales both the received and the required packet counts by
/// λ, so `lambda` does not change the value; it is validated and otherwise
/// ignored.
pub fn admissible_loss(n: usize, b: usize, r: usize, lambda: usize) -> Result<f64> {
    check_slot(n, b)?;
    if lambda == 0 {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let r = r as f64;
    Ok((harmonic_or_zero(b - 1) + r) / (harmonic_or_zero(n) + r))
}

/// [`admissible_loss`] in exact rational arithmetic.
pub fn admissible_loss_exact(n: usize, b: usize, r: usize) -> Result<BigRational> {
    check_slot(n, b)?;
    let r = BigRational::from_integer(BigInt::from(r));
    Ok((harmonic_number_exact(b - 1) + &r) / (harmonic_number_exact(n) + r))
}

/// [`admissible_loss_exact`] for every `b = 1..=n`, accumulating `H_{b−1}`
/// instead of recomputing it.
pub fn admissible_curve_exact(n: usize, r: usize) -> Result<Vec<BigRational>> {
    check_slot(n, 1)?;
    let r = BigRational::from_integer(BigInt::from(r));
    let denominator = harmonic_number_exact(n) + &r;
    let mut h = BigRational::zero();
    let mut curve = Vec::with_capacity(n);
    for b in 1..=n {
        curve.push((&h + &r) / &denominator);
        h += BigRational::new(BigInt::one(), BigInt::from(b));
    }
    Ok(curve)
}

/// Limit of the first-slot success probability as λ → ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticLimit {
    Zero,
    Half,
    One,
}

impl AsymptoticLimit {
    pub fn value(self) -> f64 {
        match self {
            AsymptoticLimit::Zero => 0.0,
            AsymptoticLimit::Half => 0.5,
            AsymptoticLimit::One => 1.0,
        }
    }
}

/// Largest denominator used when snapping a floating loss probability to a
/// rational before the three-way comparison.
pub const SNAP_DENOMINATOR: u64 = 1_000_000;

/// Branch of the large-λ limit for a floating `p_e`, snapped to the closest
/// rational with denominator at most [`SNAP_DENOMINATOR`].
pub fn asymptotic_success(m: usize, r: usize, p_e: f64) -> Result<AsymptoticLimit> {
    let p = snap_probability(p_e)?;
    Ok(asymptotic_success_exact(m, r, &p))
}

/// Exact three-way comparison of `(1 − p)(M + R)` against `M`.
pub fn asymptotic_success_exact(m: usize, r: usize, p_e: &BigRational) -> AsymptoticLimit {
    let expected = (BigRational::one() - p_e) * BigRational::from_integer(BigInt::from(m + r));
    let required = BigRational::from_integer(BigInt::from(m));
    match expected.cmp(&required) {
        std::cmp::Ordering::Greater => AsymptoticLimit::One,
        std::cmp::Ordering::Equal => AsymptoticLimit::Half,
        std::cmp::Ordering::Less => AsymptoticLimit::Zero,
    }
}

/// Closest rational to `p` with denominator ≤ [`SNAP_DENOMINATOR`].
pub fn snap_probability(p: f64) -> Result<BigRational> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    let exact = BigRational::from_float(p).expect("finite probability");
    Ok(limit_denominator(&exact, &BigInt::from(SNAP_DENOMINATOR)))
}

// Best rational approximation with bounded denominator via continued
// fraction convergents and the final semiconvergent.
fn limit_denominator(x: &BigRational, max_den: &BigInt) -> BigRational {
    if x.denom() <= max_den {
        return x.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    loop {
        let a = &n / &d;
        let q2 = &q0 + &a * &q1;
        if &q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let rem = &n - &a * &d;
        n = std::mem::replace(&mut d, rem);
    }
    let kk = (max_den - &q0) / &q1;
    let bound1 = BigRational::new(&p0 + &kk * &p1, &q0 + &kk * &q1);
    let bound2 = BigRational::new(p1, q1);
    if (&bound2 - x).abs() <= (&bound1 - x).abs() {
        bound2
    } else {
        bound1
    }
}

/// Startup delay in seconds: one slot of a scheme whose `I − R` content
/// channels carry `max_segments(I − R)` segments.
pub fn initial_delay(content_duration: f64, i: usize, r: usize) -> Result<f64> {
    if i <= r {
        return Err(Error::InvalidArgument(format!("I = {i} must exceed R = {r}")));
    }
    if content_duration.is_nan() || content_duration <= 0.0 {
        return Err(Error::InvalidArgument("content duration must be positive".into()));
    }
    Ok(content_duration / max_segments(i - r)? as f64)
}

/// Factor `e^R` by which `R` redundancy channels stretch the startup delay.
pub fn redundancy_delay_factor(r: usize) -> f64 {
    (r as f64).exp()
}

/// `γ + ln n`, the large-n approximation of `H_n` behind the `e^R` factor.
pub fn harmonic_approx(n: usize) -> f64 {
    EULER_GAMMA + (n as f64).ln()
}

/// Client slot `b'` of a scheme with `R` redundancy channels that matches
/// slot `b` of the redundancy-free scheme, `(b − 1) ≈ (b' − 1)·e^R`.
pub fn redundancy_equivalent_slot(b: usize, r: usize) -> usize {
    let scaled = (b.saturating_sub(1)) as f64 / redundancy_delay_factor(r);
    1 + scaled.round() as usize
}

/// Float view of an exact rational, for reporting.
pub fn ratio_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic_number(1).unwrap(), 1.0);
        assert_eq!(harmonic_number(2).unwrap(), 1.5);
        assert!((harmonic_number(4).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        assert!(harmonic_number(0).is_err());
        assert_eq!(harmonic_number_exact(4), ratio(25, 12));
        assert!(harmonic_number_exact(0).is_zero());
    }

    #[test]
    fn max_segments_matches_exact_boundaries() {
        assert_eq!(max_segments(1).unwrap(), 1);
        assert_eq!(max_segments(2).unwrap(), 3);
        assert_eq!(max_segments(3).unwrap(), 10);
        // Exact rational scan: H_1673 = 7.99989..., H_1674 = 8.00049...
        assert_eq!(max_segments(8).unwrap(), 1673);
        assert_eq!(max_segments(7).unwrap(), 615);
        assert_eq!(max_segments(6).unwrap(), 226);
        assert!(max_segments(0).is_err());
        for m in 1..=5 {
            let n = max_segments(m).unwrap();
            let m_ratio = BigRational::from_integer(BigInt::from(m));
            assert!(harmonic_number_exact(n) <= m_ratio);
            assert!(harmonic_number_exact(n + 1) > m_ratio);
        }
    }

    #[test]
    fn bandwidth() {
        assert_eq!(min_bandwidth(1, 3.0).unwrap(), 3.0);
        assert!((min_bandwidth(4, 12.0).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(min_bandwidth(2, 2e6).unwrap(), 3e6);
        assert!(min_bandwidth(2, 0.0).is_err());
        assert!(min_bandwidth(2, -1.0).is_err());
    }

    #[test]
    fn admissible_loss_examples() {
        assert_eq!(admissible_loss(10, 1, 0, 1).unwrap(), 0.0);
        let n = max_segments(7).unwrap();
        let p = admissible_loss(n, 1, 1, 1).unwrap();
        assert!((p - 0.125).abs() < 1e-3, "{p}");
        assert_eq!(admissible_loss(10, 4, 0, 3).unwrap(), admissible_loss(10, 4, 0, 1).unwrap());
        assert!(admissible_loss(10, 0, 0, 1).is_err());
        assert!(admissible_loss(10, 11, 0, 1).is_err());
        assert!(admissible_loss(10, 2, 0, 0).is_err());
    }

    #[test]
    fn admissible_exact_agrees_with_float() {
        for b in 1..=20 {
            let exact = ratio_to_f64(&admissible_loss_exact(20, b, 2).unwrap());
            let float = admissible_loss(20, b, 2, 1).unwrap();
            assert!((exact - float).abs() < 1e-14);
        }
        let curve = admissible_curve_exact(20, 2).unwrap();
        assert_eq!(curve.len(), 20);
        for (b, value) in curve.iter().enumerate() {
            assert_eq!(*value, admissible_loss_exact(20, b + 1, 2).unwrap());
        }
    }

    #[test]
    fn asymptotic_branches() {
        assert_eq!(asymptotic_success(7, 1, 0.1).unwrap(), AsymptoticLimit::One);
        assert_eq!(asymptotic_success(7, 1, 0.125).unwrap(), AsymptoticLimit::Half);
        assert_eq!(asymptotic_success(7, 1, 0.2).unwrap(), AsymptoticLimit::Zero);
        // 1/3 is not representable; snapping recovers the equality branch.
        assert_eq!(asymptotic_success(2, 1, 1.0 / 3.0).unwrap(), AsymptoticLimit::Half);
        assert_eq!(asymptotic_success_exact(7, 1, &ratio(1, 8)), AsymptoticLimit::Half);
        assert!(asymptotic_success(7, 1, 1.5).is_err());
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_probability(0.1).unwrap(), ratio(1, 10));
        assert_eq!(snap_probability(1.0 / 7.0).unwrap(), ratio(1, 7));
        assert_eq!(snap_probability(0.0).unwrap(), ratio(0, 1));
        assert_eq!(snap_probability(1.0).unwrap(), ratio(1, 1));
        // pi snaps to a convergent with denominator under the cap
        let pi_frac = snap_probability(std::f64::consts::PI - 3.0).unwrap();
        assert!(pi_frac.denom() <= &BigInt::from(SNAP_DENOMINATOR));
    }

    #[test]
    fn delay() {
        let d0 = initial_delay(7200.0, 8, 0).unwrap();
        assert!((d0 - 7200.0 / 1673.0).abs() < 1e-9);
        assert!(d0 < 5.0);
        assert!(initial_delay(7200.0, 8, 2).unwrap() < 32.0);
        assert_eq!(initial_delay(100.0, 1, 0).unwrap(), 100.0);
        assert!(initial_delay(100.0, 2, 2).is_err());
    }

    #[test]
    fn delay_factor() {
        assert_eq!(redundancy_delay_factor(0), 1.0);
        assert!((redundancy_delay_factor(1) - std::f64::consts::E).abs() < 1e-12);
        assert!((redundancy_delay_factor(2) - 7.389_056_098_930_65).abs() < 1e-12);
        // γ + ln n tracks H_n to within 1/(2n)
        for n in [10usize, 100, 1000] {
            let gap = harmonic_number(n).unwrap() - harmonic_approx(n);
            assert!(gap > 0.0 && gap < 1.0 / (2.0 * n as f64) + 1e-12);
        }
    }

    #[test]
    fn equivalent_slot() {
        assert_eq!(redundancy_equivalent_slot(1, 1), 1);
        assert_eq!(redundancy_equivalent_slot(10, 0), 10);
        assert_eq!(redundancy_equivalent_slot(28, 1), 11);
    }

    #[test]
    fn config_validation() {
        let mut c = SystemConfig::default();
        c.validate().unwrap();
        c.n = 3;
        c.m = 7;
        assert!(c.validate().is_err());
        c.m = 2;
        c.validate().unwrap();
        c.n = 4; // H_4 > 2
        assert!(matches!(c.validate(), Err(Error::ScheduleInfeasible { .. })));
        c.n = 3;
        c.lambda = 0;
        assert!(c.validate().is_err());
    }
}
