//! Direct Form I difference-equation evaluation with fully quantized
//! intermediates, plus ideal-arithmetic range estimation.
//!
//! One step evaluates `y(n) = -sum a_k y(n-k) + sum b_k x(n-k)` tap by tap:
//! feedforward taps in ascending `k`, then feedback taps in ascending `k`,
//! quantizing after every multiply and every add/subtract. The accumulation
//! order is normative: it decides which operator overflows first.

use std::fmt;

use num_traits::{Signed, ToPrimitive};

use crate::fixedpoint::{
    fx_add, fx_mul, fx_sub, quantize, FixedFormat, FxNum, OverflowMode, OverflowViolation,
    Rational,
};

/// Identity of one adder or multiplier inside a single filter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpId {
    /// Product `b_k * x(n-k)`.
    MulB(usize),
    /// Accumulation of the `b_k` product, `k >= 1`.
    AddB(usize),
    /// Product `a_k * y(n-k)`.
    MulA(usize),
    /// Subtraction of the `a_k` product.
    SubA(usize),
}

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpId::MulB(k) => write!(f, "multiplier b[{k}]"),
            OpId::AddB(k) => write!(f, "adder b[{k}]"),
            OpId::MulA(k) => write!(f, "multiplier a[{k}]"),
            OpId::SubA(k) => write!(f, "subtractor a[{k}]"),
        }
    }
}

/// A quantized intermediate produced while evaluating one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpRecord {
    pub op: OpId,
    pub result: FxNum,
}

/// The first operator of a step that overflowed in error mode.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("overflow at {op}: {violation}")]
pub struct StepError {
    pub op: OpId,
    pub violation: OverflowViolation,
}

/// A coefficient that does not fit the chosen format.
#[derive(Debug, Clone, PartialEq)]
pub struct BadCoefficient {
    /// `"a[k]"` or `"b[k]"`.
    pub position: String,
    pub value: Rational,
    /// Nearest representable value (the range endpoint it exceeds).
    pub nearest: Rational,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterSpecError {
    #[error("b_0 is required: the feedforward coefficient list is empty")]
    EmptyFeedforward,
    #[error("input range is empty: lo > hi")]
    EmptyInputRange,
    #[error("{} coefficient(s) out of range {range}: {}", .coefficients.len(),
            .coefficients.iter().map(|c| format!("{} = {} (nearest representable {})",
                c.position, c.value, c.nearest)).collect::<Vec<_>>().join(", "))]
    UnrepresentableCoefficients {
        range: String,
        coefficients: Vec<BadCoefficient>,
    },
}

/// A fully specified fixed-point Direct Form I filter.
///
/// Coefficients are quantized to `format` once, at construction; a
/// coefficient outside the representable range is a configuration error.
/// The unquantized coefficients are kept (as doubles) for the
/// ideal-arithmetic analysis routines.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    a: Vec<FxNum>,
    b: Vec<FxNum>,
    a_ideal: Vec<f64>,
    b_ideal: Vec<f64>,
    format: FixedFormat,
    input_range: (Rational, Rational),
    overflow_mode: OverflowMode,
}

impl FilterSpec {
    pub fn new(
        a: Vec<Rational>,
        b: Vec<Rational>,
        format: FixedFormat,
        input_range: (Rational, Rational),
        overflow_mode: OverflowMode,
    ) -> Result<FilterSpec, FilterSpecError> {
        if b.is_empty() {
            return Err(FilterSpecError::EmptyFeedforward);
        }
        if input_range.0 > input_range.1 {
            return Err(FilterSpecError::EmptyInputRange);
        }
        let mut bad = Vec::new();
        let mut quantize_all = |coeffs: &[Rational], tag: &str, offset: usize| -> Vec<FxNum> {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| match quantize(c, format, OverflowMode::Error) {
                    Ok(q) => q,
                    Err(v) => {
                        let nearest = if v.value.is_positive() {
                            format.max_value()
                        } else {
                            format.min_value()
                        };
                        bad.push(BadCoefficient {
                            position: format!("{tag}[{}]", i + offset),
                            value: c.clone(),
                            nearest,
                        });
                        FxNum::zero(format)
                    }
                })
                .collect()
        };
        let qa = quantize_all(&a, "a", 1);
        let qb = quantize_all(&b, "b", 0);
        if !bad.is_empty() {
            return Err(FilterSpecError::UnrepresentableCoefficients {
                range: format!("[{}, {}]", format.min_value(), format.max_value()),
                coefficients: bad,
            });
        }
        let to_f64 = |r: &Rational| r.to_f64().unwrap_or(f64::NAN);
        Ok(FilterSpec {
            a_ideal: a.iter().map(to_f64).collect(),
            b_ideal: b.iter().map(to_f64).collect(),
            a: qa,
            b: qb,
            format,
            input_range,
            overflow_mode,
        })
    }

    /// Feedback coefficients `a_1..a_N` (quantized).
    pub fn a(&self) -> &[FxNum] {
        &self.a
    }

    /// Feedforward coefficients `b_0..b_M` (quantized).
    pub fn b(&self) -> &[FxNum] {
        &self.b
    }

    /// Feedback order `N`.
    pub fn feedback_order(&self) -> usize {
        self.a.len()
    }

    /// Feedforward order `M`.
    pub fn feedforward_order(&self) -> usize {
        self.b.len() - 1
    }

    /// Number of coefficient taps, `N + M + 1`.
    pub fn tap_count(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn format(&self) -> FixedFormat {
        self.format
    }

    pub fn input_range(&self) -> (&Rational, &Rational) {
        (&self.input_range.0, &self.input_range.1)
    }

    pub fn overflow_mode(&self) -> OverflowMode {
        self.overflow_mode
    }

    pub fn with_overflow_mode(&self, mode: OverflowMode) -> FilterSpec {
        FilterSpec {
            overflow_mode: mode,
            ..self.clone()
        }
    }

    /// Input grid admissible during verification: every representable
    /// mantissa inside the input range, endpoints tightened inward.
    pub fn input_grid_mantissas(&self) -> std::ops::RangeInclusive<i64> {
        let scale = crate::fixedpoint::pow2(self.format.frac_bits() as i64);
        let lo = (&self.input_range.0 * &scale).ceil().to_integer();
        let hi = (&self.input_range.1 * &scale).floor().to_integer();
        let lo = lo
            .to_i64()
            .unwrap_or(i64::MIN)
            .max(self.format.min_mantissa());
        let hi = hi
            .to_i64()
            .unwrap_or(i64::MAX)
            .min(self.format.max_mantissa());
        lo..=hi
    }
}

/// The complete dynamical state: `y(n-1)..y(n-N)` and `x(n-1)..x(n-M)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FilterState {
    y_hist: Vec<FxNum>,
    x_hist: Vec<FxNum>,
}

impl FilterState {
    pub fn zero(spec: &FilterSpec) -> FilterState {
        FilterState {
            y_hist: vec![FxNum::zero(spec.format()); spec.feedback_order()],
            x_hist: vec![FxNum::zero(spec.format()); spec.feedforward_order()],
        }
    }

    /// `y_hist` newest first (`y(n-1)` at index 0), likewise `x_hist`.
    pub fn new(y_hist: Vec<FxNum>, x_hist: Vec<FxNum>) -> FilterState {
        FilterState { y_hist, x_hist }
    }

    pub fn y_hist(&self) -> &[FxNum] {
        &self.y_hist
    }

    pub fn x_hist(&self) -> &[FxNum] {
        &self.x_hist
    }

    pub fn is_zero(&self) -> bool {
        self.y_hist.iter().all(FxNum::is_zero) && self.x_hist.iter().all(FxNum::is_zero)
    }

    /// Flattened mantissas, outputs first: the canonical component order for
    /// state comparison and lexicographic enumeration.
    pub fn mantissas(&self) -> Vec<i64> {
        self.y_hist
            .iter()
            .chain(&self.x_hist)
            .map(FxNum::mantissa)
            .collect()
    }
}

/// Everything one step produced, whether or not it completed.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Quantized intermediates in evaluation order, up to the point of
    /// failure.
    pub ops: Vec<OpRecord>,
    pub result: Result<(FxNum, FilterState), StepError>,
}

/// One Direct Form I step with per-operation quantization and op recording.
pub fn df1_step_recorded(spec: &FilterSpec, state: &FilterState, x_n: FxNum) -> StepOutcome {
    let mode = spec.overflow_mode();
    let mut ops = Vec::with_capacity(2 * spec.tap_count());
    let mut run = || -> Result<FxNum, StepError> {
        let mut record = |op: OpId, r: Result<FxNum, OverflowViolation>| -> Result<FxNum, StepError> {
            let v = r.map_err(|violation| StepError { op, violation })?;
            ops.push(OpRecord { op, result: v });
            Ok(v)
        };
        let mut acc = record(OpId::MulB(0), fx_mul(spec.b[0], x_n, mode))?;
        for k in 1..=spec.feedforward_order() {
            let t = record(OpId::MulB(k), fx_mul(spec.b[k], state.x_hist[k - 1], mode))?;
            acc = record(OpId::AddB(k), fx_add(acc, t, mode))?;
        }
        for k in 1..=spec.feedback_order() {
            let t = record(OpId::MulA(k), fx_mul(spec.a[k - 1], state.y_hist[k - 1], mode))?;
            acc = record(OpId::SubA(k), fx_sub(acc, t, mode))?;
        }
        Ok(acc)
    };
    let result = run().map(|y_n| {
        let mut y_hist = state.y_hist.clone();
        if !y_hist.is_empty() {
            y_hist.rotate_right(1);
            y_hist[0] = y_n;
        }
        let mut x_hist = state.x_hist.clone();
        if !x_hist.is_empty() {
            x_hist.rotate_right(1);
            x_hist[0] = x_n;
        }
        (y_n, FilterState { y_hist, x_hist })
    });
    StepOutcome { ops, result }
}

/// One Direct Form I step; the first violating operation aborts the step.
pub fn df1_step(
    spec: &FilterSpec,
    state: &FilterState,
    x_n: FxNum,
) -> Result<(FxNum, FilterState), StepError> {
    df1_step_recorded(spec, state, x_n).result
}

/// First `horizon` samples of the ideal (unquantized, double-precision)
/// impulse response.
pub fn impulse_response(spec: &FilterSpec, horizon: usize) -> Vec<f64> {
    assert!(horizon >= 1);
    let m = spec.b_ideal.len() - 1;
    let mut h = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut y = 0.0;
        for (k, b) in spec.b_ideal.iter().enumerate() {
            // impulse input: x(t-k) = 1 iff t == k
            if t == k && k <= m {
                y += b;
            }
        }
        for (k, a) in spec.a_ideal.iter().enumerate() {
            if t > k {
                y -= a * h[t - k - 1];
            }
        }
        h.push(y);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("impulse-response sum did not converge within {max_horizon} terms")]
pub struct NotConverged {
    pub max_horizon: usize,
}

/// Truncated `sum |h_k|`. Stops once `|h_K| < tol` and the sum gained less
/// than `tol` over the last `N + 1` terms; `NotConverged` signals possible
/// instability.
pub fn l1_norm(spec: &FilterSpec, tol: f64, max_horizon: usize) -> Result<f64, NotConverged> {
    assert!(tol > 0.0);
    let n = spec.a_ideal.len();
    let window = n + 1;
    let mut h_state: Vec<f64> = Vec::new(); // full response so far
    let mut sum = 0.0;
    let mut recent = std::collections::VecDeque::with_capacity(window);
    for t in 0..max_horizon {
        let mut y = 0.0;
        if t < spec.b_ideal.len() {
            y += spec.b_ideal[t];
        }
        for (k, a) in spec.a_ideal.iter().enumerate() {
            if t > k {
                y -= a * h_state[t - k - 1];
            }
        }
        h_state.push(y);
        let term = y.abs();
        sum += term;
        if recent.len() == window {
            recent.pop_front();
        }
        recent.push_back(term);
        if term < tol && recent.len() == window && recent.iter().sum::<f64>() < tol {
            return Ok(sum);
        }
        // FIR tail: once past the last tap the response is identically zero
        if n == 0 && t + 1 >= spec.b_ideal.len() {
            return Ok(sum);
        }
    }
    Err(NotConverged { max_horizon })
}

/// BIBO output-range estimate `x_max * sum |h_k|` for the spec's input range.
pub fn output_bound(spec: &FilterSpec, tol: f64, max_horizon: usize) -> Result<f64, NotConverged> {
    let (lo, hi) = spec.input_range();
    let x_max = lo.abs().max(hi.abs()).to_f64().unwrap_or(f64::NAN);
    if x_max == 0.0 {
        return Ok(0.0);
    }
    Ok(x_max * l1_norm(spec, tol, max_horizon)?)
}

/// Smallest format whose integer part covers `[-bound, bound - 2^-l]`:
/// the least `k` with `2^(k-1) >= bound`.
pub fn suggest_format(bound: f64, frac_bits: u32) -> Result<FixedFormat, crate::fixedpoint::FormatError> {
    assert!(bound > 0.0);
    let mut k = 1u32;
    while k + frac_bits <= 64 && f64::powi(2.0, k as i32 - 1) < bound {
        k += 1;
    }
    FixedFormat::new(k, frac_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse_decimal;
    use proptest::prelude::*;

    pub(crate) fn rats(strs: &[&str]) -> Vec<Rational> {
        strs.iter().map(|s| parse_decimal(s).unwrap()).collect()
    }

    fn single_pole() -> FilterSpec {
        FilterSpec::new(
            rats(&["-0.5"]),
            rats(&["1"]),
            FixedFormat::new(2, 4).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap()
    }

    fn fx(s: &str, f: FixedFormat) -> FxNum {
        quantize(&parse_decimal(s).unwrap(), f, OverflowMode::Error).unwrap()
    }

    #[test]
    fn step_examples() {
        let spec = single_pole();
        let f = spec.format();
        let one = fx("1", f);

        let state = FilterState::new(vec![fx("1.875", f)], vec![]);
        let (y, _) = df1_step(&spec, &state, one).unwrap();
        assert_eq!(y, fx("1.9375", f));

        let state = FilterState::new(vec![fx("1.9375", f)], vec![]);
        let err = df1_step(&spec, &state, one).unwrap_err();
        assert_eq!(err.op, OpId::SubA(1));

        let zero = FilterState::zero(&spec);
        let (y, next) = df1_step(&spec, &zero, FxNum::zero(f)).unwrap();
        assert!(y.is_zero());
        assert!(next.is_zero());
    }

    #[test]
    fn golden_step_sequence() {
        let spec = single_pole();
        let f = spec.format();
        let one = fx("1", f);
        let mut state = FilterState::zero(&spec);
        let expected = ["1", "1.5", "1.75", "1.875", "1.9375"];
        for want in expected {
            let (y, next) = df1_step(&spec, &state, one).unwrap();
            assert_eq!(y, fx(want, f));
            state = next;
        }
        let err = df1_step(&spec, &state, one).unwrap_err();
        assert_eq!(err.op, OpId::SubA(1));
    }

    #[test]
    fn impulse_responses() {
        let spec = single_pole();
        let h = impulse_response(&spec, 4);
        assert_eq!(h, vec![1.0, 0.5, 0.25, 0.125]);

        let fir = FilterSpec::new(
            vec![],
            rats(&["1", "2"]),
            FixedFormat::new(3, 2).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        assert_eq!(impulse_response(&fir, 4), vec![1.0, 2.0, 0.0, 0.0]);

        let marginal = FilterSpec::new(
            rats(&["1"]),
            rats(&["1"]),
            FixedFormat::new(2, 2).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        assert_eq!(impulse_response(&marginal, 4), vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn l1_norm_examples() {
        let spec = single_pole();
        let norm = l1_norm(&spec, 1e-9, 10_000).unwrap();
        assert!((norm - 2.0).abs() < 1e-6, "norm = {norm}");

        let fir = FilterSpec::new(
            vec![],
            rats(&["0.5", "0.5"]),
            FixedFormat::new(2, 4).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        assert_eq!(l1_norm(&fir, 1e-9, 100).unwrap(), 1.0);

        let marginal = FilterSpec::new(
            rats(&["1"]),
            rats(&["1"]),
            FixedFormat::new(2, 2).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        assert!(l1_norm(&marginal, 1e-9, 1000).is_err());
    }

    #[test]
    fn output_bound_examples() {
        let spec = single_pole();
        let bound = output_bound(&spec, 1e-9, 10_000).unwrap();
        assert!((bound - 2.0).abs() < 1e-6);

        let zero_input = FilterSpec::new(
            rats(&["-0.5"]),
            rats(&["1"]),
            FixedFormat::new(2, 4).unwrap(),
            (parse_decimal("0").unwrap(), parse_decimal("0").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        assert_eq!(output_bound(&zero_input, 1e-9, 10_000).unwrap(), 0.0);

        let scaled = FilterSpec::new(
            vec![],
            rats(&["0.6"]),
            FixedFormat::new(2, 10).unwrap(),
            (parse_decimal("-1.5").unwrap(), parse_decimal("1.5").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        let b = output_bound(&scaled, 1e-9, 100).unwrap();
        assert!((b - 0.9).abs() < 1e-9, "b = {b}");
    }

    #[test]
    fn suggest_format_examples() {
        let f = |k, l| FixedFormat::new(k, l).unwrap();
        assert_eq!(suggest_format(2.0, 4).unwrap(), f(2, 4));
        assert_eq!(suggest_format(1.0, 0).unwrap(), f(1, 0));
        // strict reading of the output-bound rule: least k with 2^(k-1) >= 5.39
        assert_eq!(suggest_format(5.39, 13).unwrap(), f(4, 13));
    }

    #[test]
    fn bad_coefficient_is_a_spec_error() {
        let err = FilterSpec::new(
            rats(&["3.0"]),
            rats(&["1"]),
            FixedFormat::new(2, 4).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap_err();
        match err {
            FilterSpecError::UnrepresentableCoefficients { coefficients, .. } => {
                assert_eq!(coefficients.len(), 1);
                assert_eq!(coefficients[0].position, "a[1]");
                assert_eq!(coefficients[0].nearest, parse_decimal("1.9375").unwrap());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_b_is_a_spec_error() {
        let err = FilterSpec::new(
            vec![],
            vec![],
            FixedFormat::new(2, 4).unwrap(),
            (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
            OverflowMode::Error,
        )
        .unwrap_err();
        assert_eq!(err, FilterSpecError::EmptyFeedforward);
    }

    #[test]
    fn input_grid_tightens_inward() {
        let spec = FilterSpec::new(
            vec![],
            rats(&["1"]),
            FixedFormat::new(2, 2).unwrap(),
            (parse_decimal("-0.3").unwrap(), parse_decimal("0.6").unwrap()),
            OverflowMode::Error,
        )
        .unwrap();
        // representable grid step 0.25: [-0.25, 0.5] -> mantissas -1..=2
        assert_eq!(spec.input_grid_mantissas(), -1..=2);
    }

    proptest! {
        // linearity of the ideal model for FIR specs
        #[test]
        fn fir_impulse_response_is_linear(coeffs in proptest::collection::vec(-8i32..8, 1..5), scale in 1i32..5) {
            let f = FixedFormat::new(5, 2).unwrap();
            let range = (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap());
            let base: Vec<Rational> = coeffs.iter()
                .map(|&c| Rational::new(c.into(), 4.into()))
                .collect();
            let scaled: Vec<Rational> = base.iter()
                .map(|c| c * Rational::from_integer(scale.into()))
                .collect();
            let s1 = FilterSpec::new(vec![], base, f, range.clone(), OverflowMode::Error);
            let s2 = FilterSpec::new(vec![], scaled, f, range, OverflowMode::Error);
            prop_assume!(s1.is_ok() && s2.is_ok());
            let h1 = impulse_response(&s1.unwrap(), 8);
            let h2 = impulse_response(&s2.unwrap(), 8);
            for (x, y) in h1.iter().zip(&h2) {
                prop_assert!((x * scale as f64 - y).abs() < 1e-12);
            }
        }

        // BIBO: ideal simulation never exceeds the output bound
        #[test]
        fn ideal_outputs_stay_within_bound(inputs in proptest::collection::vec(-100i32..=100, 1..40)) {
            let spec = FilterSpec::new(
                rats(&["-0.5"]),
                rats(&["1"]),
                FixedFormat::new(2, 4).unwrap(),
                (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
                OverflowMode::Error,
            ).unwrap();
            let bound = output_bound(&spec, 1e-12, 10_000).unwrap();
            let mut y_prev = 0.0;
            for &i in &inputs {
                let x = i as f64 / 100.0;
                let y = 0.5 * y_prev + x;
                prop_assert!(y.abs() <= bound + 1e-9);
                y_prev = y;
            }
        }

        // zero-input FIR state dies within M steps
        #[test]
        fn fir_state_decays(ms in proptest::collection::vec(-8i64..8, 1..4)) {
            let f = FixedFormat::new(3, 2).unwrap();
            let spec = FilterSpec::new(
                vec![],
                rats(&["0.5", "0.25", "-0.5", "0.75"]),
                f,
                (parse_decimal("-1").unwrap(), parse_decimal("1").unwrap()),
                OverflowMode::Error,
            ).unwrap();
            let m = spec.feedforward_order();
            let mut hist: Vec<FxNum> = ms.iter().map(|&v| FxNum::from_mantissa(v, f).unwrap()).collect();
            hist.resize(m, FxNum::zero(f));
            let mut state = FilterState::new(vec![], hist);
            for _ in 0..m {
                let (_, next) = df1_step(&spec, &state, FxNum::zero(f)).unwrap();
                state = next;
            }
            prop_assert!(state.is_zero());
        }
    }
}
