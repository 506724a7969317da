use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Real number type the dynamics and analysis run over: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Significant decimal digits needed for an exact text round trip.
    const ROUND_TRIP_DIGITS: usize;

    /// Absolute slack allowed by per-step invariant checks.
    fn invariant_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("agent counts are representable")
    }

    fn lossless_f64(self) -> f64 {
        self.to_f64().expect("f32 and f64 widen to f64")
    }
}

impl Scalar for f64 {
    const ROUND_TRIP_DIGITS: usize = 17;

    fn invariant_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    const ROUND_TRIP_DIGITS: usize = 9;

    fn invariant_tolerance() -> Self {
        1e-5
    }
}

/// Formats `x` like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, scientific notation outside `1e-4 <= |x| < 10^digits`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -4 || exponent >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exponent.abs())
    } else {
        let decimals = (digits as i32 - 1 - exponent) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
