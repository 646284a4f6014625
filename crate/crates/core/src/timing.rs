//! Static per-sample timing check against a linear cycle-count model.
//!
//! One filter step costs one multiply-accumulate worth of cycles per
//! coefficient tap plus a fixed per-sample overhead. The deadline holds when
//! the step finishes within one sampling period:
//! `cycles / clock_hz <= 1 / sample_rate_hz`, compared exactly as
//! `cycles * sample_rate_hz <= clock_hz`.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::filter_model::FilterSpec;
use crate::fixedpoint::Rational;

/// Cycle cost model for one target processor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleTable {
    pub name: String,
    /// Cycles for one coefficient tap: load, multiply, accumulate, store.
    pub mac_cycles: u64,
    /// Fixed cycles per sample regardless of filter order.
    #[serde(default)]
    pub per_sample_overhead: u64,
}

impl CycleTable {
    /// Cost model for the MSP430G2231, a 16-bit microcontroller with no
    /// hardware multiplier: 35 cycles per tap for the shift-and-add
    /// multiply-accumulate sequence.
    pub fn msp430g2231() -> CycleTable {
        CycleTable {
            name: "msp430g2231".to_string(),
            mac_cycles: 35,
            per_sample_overhead: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TimingSpecError {
    #[error("clock frequency must be positive")]
    ZeroClock,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
}

/// Deployment constraints: processor clock and sampling rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingSpec {
    pub clock_hz: u64,
    pub sample_rate_hz: u64,
}

impl TimingSpec {
    pub fn new(clock_hz: u64, sample_rate_hz: u64) -> Result<TimingSpec, TimingSpecError> {
        if clock_hz == 0 {
            return Err(TimingSpecError::ZeroClock);
        }
        if sample_rate_hz == 0 {
            return Err(TimingSpecError::ZeroSampleRate);
        }
        Ok(TimingSpec { clock_hz, sample_rate_hz })
    }
}

/// Cycles for one filter step: `(N + M + 1) * mac + overhead`.
pub fn estimate_cycles(spec: &FilterSpec, table: &CycleTable) -> u64 {
    (spec.tap_count() as u64)
        .saturating_mul(table.mac_cycles)
        .saturating_add(table.per_sample_overhead)
}

/// Outcome of the deadline comparison; all durations are exact rationals in
/// seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingCheck {
    pub cycles: u64,
    /// Wall time of one step, `cycles / clock_hz`.
    pub elapsed: Rational,
    /// Sampling period, `1 / sample_rate_hz`.
    pub deadline: Rational,
    /// `deadline - elapsed`; negative when the deadline is missed.
    pub slack: Rational,
    pub meets_deadline: bool,
}

/// Exact deadline check via `cycles * sample_rate_hz <= clock_hz` in
/// 128-bit integers; no rounding is involved anywhere.
pub fn verify_timing(spec: &FilterSpec, timing: &TimingSpec, table: &CycleTable) -> TimingCheck {
    let cycles = estimate_cycles(spec, table);
    let meets = (cycles as u128) * (timing.sample_rate_hz as u128) <= timing.clock_hz as u128;
    let elapsed = Rational::new(BigInt::from(cycles), BigInt::from(timing.clock_hz));
    let deadline = Rational::new(BigInt::from(1u8), BigInt::from(timing.sample_rate_hz));
    let slack = &deadline - &elapsed;
    TimingCheck {
        cycles,
        elapsed,
        deadline,
        slack,
        meets_deadline: meets,
    }
}
