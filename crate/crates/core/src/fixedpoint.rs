//! Two's-complement fixed-point representation with a round-off quantizer.
//!
//! A value in format `<k,l>` is an integer mantissa scaled by `2^-l`, stored
//! in `w = k + l` bits of two's complement (the sign bit counts towards `k`).
//! Arithmetic is exact first, then quantized: rounding is to the nearest
//! representable value with ties away from zero, and a result outside
//! `[MIN, MAX]` either raises [`OverflowViolation`] or wraps modulo `2^w`
//! depending on the [`OverflowMode`].

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational arithmetic used everywhere a value has not yet been
/// quantized.
pub type Rational = num_rational::BigRational;

/// Returns `2^exp` as an exact rational (negative exponents allowed).
pub fn pow2(exp: i64) -> Rational {
    let one = BigInt::one();
    if exp >= 0 {
        Rational::from_integer(one << exp as usize)
    } else {
        Rational::new(one.clone(), one << (-exp) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("integer bits must be at least 1 (the sign bit)")]
    NoSignBit,
    #[error("total width {0} exceeds 64 bits")]
    TooWide(u32),
}

/// Word-length descriptor `<k,l>`: `k` integer bits including sign, `l`
/// fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedFormat {
    int_bits: u32,
    frac_bits: u32,
}

impl FixedFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<FixedFormat, FormatError> {
        if int_bits == 0 {
            return Err(FormatError::NoSignBit);
        }
        let w = int_bits + frac_bits;
        if w > 64 {
            return Err(FormatError::TooWide(w));
        }
        Ok(FixedFormat { int_bits, frac_bits })
    }

    pub fn int_bits(&self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Total width `w = k + l`.
    pub fn width(&self) -> u32 {
        self.int_bits + self.frac_bits
    }

    /// Smallest representable mantissa, `-2^(w-1)`.
    pub fn min_mantissa(&self) -> i64 {
        ((-1i128) << (self.width() - 1)) as i64
    }

    /// Largest representable mantissa, `2^(w-1) - 1`.
    pub fn max_mantissa(&self) -> i64 {
        ((1i128 << (self.width() - 1)) - 1) as i64
    }

    /// `-2^(k-1)`.
    pub fn min_value(&self) -> Rational {
        pow2(self.int_bits as i64 - 1) * -Rational::one()
    }

    /// `2^(k-1) - 2^-l`.
    pub fn max_value(&self) -> Rational {
        pow2(self.int_bits as i64 - 1) - self.resolution()
    }

    /// `2^-l`, the gap between adjacent representable values.
    pub fn resolution(&self) -> Rational {
        pow2(-(self.frac_bits as i64))
    }
}

impl fmt::Display for FixedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.int_bits, self.frac_bits)
    }
}

/// Returns `(min, max)` of the representable range of `fmt`.
pub fn range(fmt: FixedFormat) -> (Rational, Rational) {
    (fmt.min_value(), fmt.max_value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverflowMode {
    /// Out-of-range results are violations.
    Error,
    /// Out-of-range results wrap modulo `2^w` into two's-complement range.
    Wrap,
}

/// An arithmetic result that left `[MIN, MAX]` while in [`OverflowMode::Error`].
/// Carries the exact (pre-quantization) value that did not fit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("value {value} out of range [{min}, {max}] of format {format}",
        min = format.min_value(), max = format.max_value())]
pub struct OverflowViolation {
    pub value: Rational,
    pub format: FixedFormat,
}

/// A fixed-point number: mantissa `m` in format `<k,l>` with real value
/// `m * 2^-l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxNum {
    mantissa: i64,
    format: FixedFormat,
}

impl FxNum {
    /// Wraps a raw mantissa; `None` if it is outside the `w`-bit range.
    pub fn from_mantissa(mantissa: i64, format: FixedFormat) -> Option<FxNum> {
        if mantissa < format.min_mantissa() || mantissa > format.max_mantissa() {
            return None;
        }
        Some(FxNum { mantissa, format })
    }

    pub fn zero(format: FixedFormat) -> FxNum {
        FxNum { mantissa: 0, format }
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn format(&self) -> FixedFormat {
        self.format
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    /// Exact real value `mantissa * 2^-l`.
    pub fn to_real(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.mantissa))
            * pow2(-(self.format.frac_bits as i64))
    }

    /// Exact decimal rendering (a dyadic rational always terminates),
    /// trailing zeros trimmed: mantissa 31 in `<2,4>` prints `1.9375`.
    pub fn to_decimal_string(&self) -> String {
        let l = self.format.frac_bits;
        let neg = self.mantissa < 0;
        // |m| / 2^l == |m| * 5^l / 10^l
        let scaled = BigInt::from(self.mantissa).abs() * BigInt::from(5u8).pow(l);
        let ten_l = BigInt::from(10u8).pow(l);
        let int_part = &scaled / &ten_l;
        let frac_part = &scaled % &ten_l;
        let mut s = String::new();
        if neg && !self.mantissa.is_zero() {
            s.push('-');
        }
        s.push_str(&int_part.to_string());
        if !frac_part.is_zero() {
            let digits = format!("{:0>width$}", frac_part.to_string(), width = l as usize);
            s.push('.');
            s.push_str(digits.trim_end_matches('0'));
        }
        s
    }

    /// Two's-complement bit rendering with a point between the integer and
    /// fractional fields: mantissa -8 in `<2,4>` prints `11.1000`.
    pub fn to_binary_string(&self) -> String {
        let w = self.format.width();
        let k = self.format.int_bits;
        let pattern = (self.mantissa as u64) & mask(w);
        let mut s = String::with_capacity(w as usize + 1);
        for i in (0..w).rev() {
            s.push(if pattern >> i & 1 == 1 { '1' } else { '0' });
            if i == self.format.frac_bits && i != 0 {
                s.push('.');
            }
        }
        let _ = k;
        s
    }
}

impl fmt::Display for FxNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string())
    }
}

fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

/// Rounds an exact rational to the nearest integer, ties away from zero.
fn round_half_away(x: &Rational) -> BigInt {
    let n = x.numer();
    let d = x.denom(); // always positive
    let two_abs_n = n.abs() << 1;
    let q: BigInt = (two_abs_n + d) / (d << 1);
    if n.is_negative() {
        -q
    } else {
        q
    }
}

/// Reduces an arbitrary mantissa modulo `2^w` into two's-complement range.
fn wrap_mantissa_big(m: &BigInt, fmt: FixedFormat) -> i64 {
    let w = fmt.width();
    let modulus = BigInt::one() << w as usize;
    let mut r = ((m % &modulus) + &modulus) % &modulus;
    if r > BigInt::from(fmt.max_mantissa()) {
        r -= &modulus;
    }
    r.to_i64().expect("wrapped mantissa fits the word")
}

fn wrap_mantissa_i128(m: i128, fmt: FixedFormat) -> i64 {
    let modulus = 1i128 << fmt.width();
    let mut r = m.rem_euclid(modulus);
    if r > fmt.max_mantissa() as i128 {
        r -= modulus;
    }
    r as i64
}

/// Quantizes an exact rational: mantissa `round(x * 2^l)` with ties away
/// from zero, then range check or wrap per `mode`.
pub fn quantize(
    x: &Rational,
    fmt: FixedFormat,
    mode: OverflowMode,
) -> Result<FxNum, OverflowViolation> {
    let m = round_half_away(&(x * pow2(fmt.frac_bits as i64)));
    if m >= BigInt::from(fmt.min_mantissa()) && m <= BigInt::from(fmt.max_mantissa()) {
        return Ok(FxNum {
            mantissa: m.to_i64().unwrap(),
            format: fmt,
        });
    }
    match mode {
        OverflowMode::Wrap => Ok(FxNum {
            mantissa: wrap_mantissa_big(&m, fmt),
            format: fmt,
        }),
        OverflowMode::Error => Err(OverflowViolation {
            value: x.clone(),
            format: fmt,
        }),
    }
}

fn finish(sum_or_prod: i128, fmt: FixedFormat, mode: OverflowMode, exact: impl FnOnce() -> Rational)
    -> Result<FxNum, OverflowViolation>
{
    if sum_or_prod >= fmt.min_mantissa() as i128 && sum_or_prod <= fmt.max_mantissa() as i128 {
        return Ok(FxNum {
            mantissa: sum_or_prod as i64,
            format: fmt,
        });
    }
    match mode {
        OverflowMode::Wrap => Ok(FxNum {
            mantissa: wrap_mantissa_i128(sum_or_prod, fmt),
            format: fmt,
        }),
        OverflowMode::Error => Err(OverflowViolation {
            value: exact(),
            format: fmt,
        }),
    }
}

/// Exact mantissa sum (no precision loss at matching `l`), then range check
/// or wrap.
pub fn fx_add(a: FxNum, b: FxNum, mode: OverflowMode) -> Result<FxNum, OverflowViolation> {
    assert_eq!(a.format, b.format, "fx_add operands must share a format");
    let sum = a.mantissa as i128 + b.mantissa as i128;
    let fmt = a.format;
    finish(sum, fmt, mode, || {
        Rational::from_integer(BigInt::from(sum)) * pow2(-(fmt.frac_bits as i64))
    })
}

/// Exact mantissa difference, then range check or wrap.
pub fn fx_sub(a: FxNum, b: FxNum, mode: OverflowMode) -> Result<FxNum, OverflowViolation> {
    assert_eq!(a.format, b.format, "fx_sub operands must share a format");
    let diff = a.mantissa as i128 - b.mantissa as i128;
    let fmt = a.format;
    finish(diff, fmt, mode, || {
        Rational::from_integer(BigInt::from(diff)) * pow2(-(fmt.frac_bits as i64))
    })
}

/// Exact double-width product (2l fractional bits) rounded back to `l`
/// fractional bits with ties away from zero, then range check or wrap.
pub fn fx_mul(a: FxNum, b: FxNum, mode: OverflowMode) -> Result<FxNum, OverflowViolation> {
    assert_eq!(a.format, b.format, "fx_mul operands must share a format");
    let fmt = a.format;
    let l = fmt.frac_bits;
    let p = a.mantissa as i128 * b.mantissa as i128;
    let rounded = if l == 0 {
        p
    } else {
        let half = 1i128 << (l - 1);
        if p >= 0 {
            (p + half) >> l
        } else {
            -((-p + half) >> l)
        }
    };
    finish(rounded, fmt, mode, || {
        Rational::from_integer(BigInt::from(p)) * pow2(-2 * l as i64)
    })
}
