//! Scaled machine arithmetic and arbitrary-precision reals.
//!
//! Trace values grow like `e^(2^n γ)`, far beyond the `f64` exponent range
//! after a dozen doubling steps. Two escape hatches are provided:
//!
//! - [`ScaledReal`] and [`ScaledMat2`] keep a machine mantissa next to an
//!   explicit base-2 exponent, so magnitudes never overflow while the
//!   relative accuracy stays at machine level.
//! - [`PrecisionReal`] is an arbitrary-precision float with an explicit bit
//!   count, used wherever cancellation destroys machine accuracy.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
const TWO64: f64 = 18_446_744_073_709_551_616.0;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Returns `x * 2^e`, splitting large shifts so intermediate powers stay finite.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    if e < -1000 + 60 {
        // two half steps avoid a subnormal power of two
        let h = e / 2;
        return x * 2f64.powi(h as i32) * 2f64.powi((e - h) as i32);
    }
    x * 2f64.powi(e as i32)
}

/// `floor(log2 |x|)` for finite non-zero `x`.
fn ilogb(x: f64) -> i64 {
    let bits = x.abs().to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        ilogb(x * TWO64) - 64
    } else {
        raw - 1023
    }
}

// ---------------------------------------------------------------------------
// ScaledReal
// ---------------------------------------------------------------------------

/// A real number `mantissa * 2^exp2` with `|mantissa|` in `[1, 2)` or zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledReal {
    mantissa: f64,
    exp2: i64,
}

impl ScaledReal {
    pub const ZERO: ScaledReal = ScaledReal { mantissa: 0.0, exp2: 0 };
    pub const ONE: ScaledReal = ScaledReal { mantissa: 1.0, exp2: 0 };

    /// Normalizes a machine real.
    pub fn new(x: f64) -> Self {
        Self::from_parts(x, 0)
    }

    /// Normalizes `m * 2^e`.
    pub fn from_parts(m: f64, e: i64) -> Self {
        if m == 0.0 || !m.is_finite() {
            return Self { mantissa: if m == 0.0 { 0.0 } else { m }, exp2: 0 };
        }
        let k = ilogb(m);
        Self { mantissa: ldexp(m, -k), exp2: e + k }
    }

    pub fn mantissa(self) -> f64 {
        self.mantissa
    }

    pub fn exp2(self) -> i64 {
        self.exp2
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    /// Denormalizes, overflowing to infinity or underflowing to zero outside the `f64` range.
    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exp2)
    }

    /// Natural log of the absolute value; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().ln() + self.exp2 as f64 * std::f64::consts::LN_2
        }
    }

    pub fn abs(self) -> Self {
        Self { mantissa: self.mantissa.abs(), exp2: self.exp2 }
    }

    pub fn signum(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    /// Square root of a non-negative value.
    pub fn sqrt(self) -> Self {
        if self.is_zero() {
            return self;
        }
        if self.exp2 % 2 == 0 {
            Self::from_parts(self.mantissa.sqrt(), self.exp2 / 2)
        } else {
            Self::from_parts((2.0 * self.mantissa).sqrt(), (self.exp2 - 1) / 2)
        }
    }
}

impl Mul for ScaledReal {
    type Output = ScaledReal;
    fn mul(self, rhs: Self) -> Self {
        Self::from_parts(self.mantissa * rhs.mantissa, self.exp2 + rhs.exp2)
    }
}

impl Div for ScaledReal {
    type Output = ScaledReal;
    fn div(self, rhs: Self) -> Self {
        Self::from_parts(self.mantissa / rhs.mantissa, self.exp2 - rhs.exp2)
    }
}

impl Add for ScaledReal {
    type Output = ScaledReal;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let d = self.exp2 - rhs.exp2;
        if d > 64 {
            return self;
        }
        if d < -64 {
            return rhs;
        }
        Self::from_parts(self.mantissa + ldexp(rhs.mantissa, -d), self.exp2)
    }
}

impl Neg for ScaledReal {
    type Output = ScaledReal;
    fn neg(self) -> Self {
        Self { mantissa: -self.mantissa, exp2: self.exp2 }
    }
}

impl Sub for ScaledReal {
    type Output = ScaledReal;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl PartialOrd for ScaledReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (*self - *other).mantissa.partial_cmp(&0.0)
    }
}

// ---------------------------------------------------------------------------
// ScaledMat2
// ---------------------------------------------------------------------------

/// A 2x2 real matrix `m * 2^exp2` whose largest mantissa entry lies in `[1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMat2 {
    m: [[f64; 2]; 2],
    exp2: i64,
}

impl ScaledMat2 {
    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0], [0.0, 1.0]], exp2: 0 }
    }

    /// Normalizes a machine matrix.
    pub fn new(m: [[f64; 2]; 2]) -> Self {
        Self::from_parts(m, 0)
    }

    /// Normalizes `m * 2^e`.
    pub fn from_parts(m: [[f64; 2]; 2], e: i64) -> Self {
        let big = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        if big == 0.0 || !big.is_finite() {
            return Self { m, exp2: 0 };
        }
        let k = ilogb(big);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ldexp(m[i][j], -k);
            }
        }
        Self { m: out, exp2: e + k }
    }

    pub fn mantissa(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().flatten().all(|x| *x == 0.0)
    }

    pub fn entry(&self, i: usize, j: usize) -> ScaledReal {
        ScaledReal::from_parts(self.m[i][j], self.exp2)
    }

    /// Denormalized entries; may overflow.
    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ldexp(self.m[i][j], self.exp2);
            }
        }
        out
    }

    pub fn trace(&self) -> ScaledReal {
        ScaledReal::from_parts(self.m[0][0] + self.m[1][1], self.exp2)
    }

    /// Determinant of the represented matrix.
    pub fn det(&self) -> ScaledReal {
        let d = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        ScaledReal::from_parts(d, 2 * self.exp2)
    }

    /// `|det(m) - 2^(-2 exp2)|` relative to `|m|_F^2`: the unit-determinant defect
    /// measured against the size of the rounding in the mantissa products.
    pub fn det_defect(&self) -> f64 {
        let d = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        let f2: f64 = self.m.iter().flatten().map(|x| x * x).sum();
        (d - ldexp(1.0, -2 * self.exp2)).abs() / f2
    }

    /// Inverse of a unit-determinant matrix (the adjugate).
    pub fn inverse_unimodular(&self) -> Self {
        let m = self.m;
        Self { m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]], exp2: self.exp2 }
    }

    pub fn transpose(&self) -> Self {
        let m = self.m;
        Self { m: [[m[0][0], m[1][0]], [m[0][1], m[1][1]]], exp2: self.exp2 }
    }

    /// Multiplies by a scalar.
    pub fn scale(&self, s: ScaledReal) -> Self {
        let mut out = self.m;
        for row in out.iter_mut() {
            for x in row.iter_mut() {
                *x *= s.mantissa();
            }
        }
        Self::from_parts(out, self.exp2 + s.exp2())
    }

    /// Entrywise sum, aligned on the larger exponent.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let e = self.exp2.max(other.exp2);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = ldexp(self.m[i][j], self.exp2 - e) + ldexp(other.m[i][j], other.exp2 - e);
            }
        }
        Self::from_parts(out, e)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(ScaledReal::new(-1.0)))
    }

    /// Largest absolute entry of the represented matrix.
    pub fn max_abs(&self) -> ScaledReal {
        let big = self.m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        ScaledReal::from_parts(big, self.exp2)
    }

    /// Applies the matrix to a machine vector.
    pub fn apply(&self, v: [f64; 2]) -> [ScaledReal; 2] {
        [
            ScaledReal::from_parts(self.m[0][0] * v[0] + self.m[0][1] * v[1], self.exp2),
            ScaledReal::from_parts(self.m[1][0] * v[0] + self.m[1][1] * v[1], self.exp2),
        ]
    }

    /// Natural log of the spectral norm.
    pub fn log_norm(&self) -> Result<f64> {
        log_norm(self)
    }
}

/// Product of two scaled matrices, renormalized.
pub fn scaled_mul(a: &ScaledMat2, b: &ScaledMat2) -> ScaledMat2 {
    let (x, y) = (a.m, b.m);
    let m = [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ];
    ScaledMat2::from_parts(m, a.exp2 + b.exp2)
}

/// Largest singular value of a machine 2x2 matrix, from the trace of `AᵀA` and the determinant.
pub fn spectral_norm(m: &[[f64; 2]; 2]) -> f64 {
    let s: f64 = m.iter().flatten().map(|x| x * x).sum();
    let d = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let disc = ((s - 2.0 * d) * (s + 2.0 * d)).max(0.0);
    ((s + disc.sqrt()) / 2.0).sqrt()
}

/// Natural log of the spectral norm of the represented matrix.
pub fn log_norm(a: &ScaledMat2) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::ZeroNorm);
    }
    Ok(spectral_norm(&a.m).ln() + a.exp2 as f64 * std::f64::consts::LN_2)
}

// ---------------------------------------------------------------------------
// PrecisionReal
// ---------------------------------------------------------------------------

/// An arbitrary-precision real carrying its working precision in bits.
///
/// Arithmetic between two values runs at the smaller of the two precisions.
/// The backing float rounds its storage up to whole 64-bit words.
#[derive(Clone, Debug)]
pub struct PrecisionReal {
    value: BigFloat,
    prec: usize,
}

impl PrecisionReal {
    pub const DEFAULT_BITS: usize = 256;
    pub const MIN_BITS: usize = 64;

    fn wrap(value: BigFloat, prec: usize) -> Self {
        Self { value, prec }
    }

    pub fn from_f64(x: f64, bits: usize) -> Self {
        let p = bits.max(Self::MIN_BITS);
        Self::wrap(BigFloat::from_f64(x, p), p)
    }

    pub fn from_i64(i: i64, bits: usize) -> Self {
        let p = bits.max(Self::MIN_BITS);
        Self::wrap(BigFloat::from_i64(i, p), p)
    }

    /// `num / den` rounded once.
    pub fn from_ratio(num: i64, den: i64, bits: usize) -> Self {
        Self::from_i64(num, bits) / Self::from_i64(den, bits)
    }

    pub fn zero(bits: usize) -> Self {
        Self::from_i64(0, bits)
    }

    pub fn one(bits: usize) -> Self {
        Self::from_i64(1, bits)
    }

    pub fn pi(bits: usize) -> Self {
        let p = bits.max(Self::MIN_BITS);
        Self::wrap(with_consts(|cc| cc.pi(p, RM)), p)
    }

    /// An integer constant at this value's precision.
    pub fn lit(&self, i: i64) -> Self {
        Self::from_i64(i, self.prec)
    }

    /// Parses a decimal, `a/b`, `pi`, or `sqrt(x)` / `sqrtx`, optionally negated.
    pub fn parse(s: &str, bits: usize) -> Result<Self> {
        let p = bits.max(Self::MIN_BITS);
        let t = s.trim();
        if let Some(rest) = t.strip_prefix('-') {
            if !rest.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
                return Ok(-Self::parse(rest, p)?);
            }
        }
        if t == "pi" {
            return Ok(Self::pi(p));
        }
        if let Some(rest) = t.strip_prefix("sqrt") {
            let inner = rest.trim().trim_start_matches('(').trim_end_matches(')');
            let x = Self::parse(inner, p)?;
            if x.is_negative() {
                return Err(Error::Parse(s.to_string()));
            }
            return Ok(x.sqrt());
        }
        if let Some((a, b)) = t.split_once('/') {
            return Ok(Self::parse(a, p)? / Self::parse(b, p)?);
        }
        let ok = !t.is_empty()
            && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
        if !ok {
            return Err(Error::Parse(s.to_string()));
        }
        let v = with_consts(|cc| BigFloat::parse(t, Radix::Dec, p, RM, cc));
        if v.is_nan() || v.is_inf() {
            return Err(Error::Parse(s.to_string()));
        }
        Ok(Self::wrap(v, p))
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    /// Rounds or zero-extends to `bits`.
    pub fn with_precision(&self, bits: usize) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::PrecisionTooLow { bits });
        }
        let mut v = self.value.clone();
        v.set_precision(bits, RM).map_err(|e| Error::Parse(format!("{e:?}")))?;
        Ok(Self::wrap(v, bits))
    }

    pub fn as_bigfloat(&self) -> &BigFloat {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !(self.value.is_nan() || self.value.is_inf())
    }

    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.value.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && self.value.is_positive()
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.value.is_negative() {
            -1
        } else {
            1
        }
    }

    /// Top 128 bits of the mantissa as a value in `[0.5, 1)` and the binary exponent.
    fn frexp(&self) -> Option<(f64, i64, bool)> {
        if self.is_zero() {
            return None;
        }
        let (words, _, sign, e, _) = self.value.as_raw_parts()?;
        let n = words.len();
        let hi = words[n - 1] as f64;
        let lo = if n >= 2 { words[n - 2] as f64 } else { 0.0 };
        let frac = (hi + lo / TWO64) / TWO64;
        Some((frac, e as i64, sign == Sign::Neg))
    }

    pub fn to_f64(&self) -> f64 {
        if self.value.is_nan() {
            return f64::NAN;
        }
        if self.value.is_inf() {
            return if self.value.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        match self.frexp() {
            None => 0.0,
            Some((f, e, neg)) => {
                let v = ldexp(f, e);
                if neg {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Scaled machine copy; exact up to mantissa rounding whatever the magnitude.
    pub fn to_scaled(&self) -> ScaledReal {
        match self.frexp() {
            None => ScaledReal::ZERO,
            Some((f, e, neg)) => ScaledReal::from_parts(if neg { -f } else { f }, e),
        }
    }

    /// Natural log of the absolute value as a machine real; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        match self.frexp() {
            None => f64::NEG_INFINITY,
            Some((f, e, _)) => f.ln() + e as f64 * std::f64::consts::LN_2,
        }
    }

    /// Base-2 log of the absolute value as a machine real; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        match self.frexp() {
            None => f64::NEG_INFINITY,
            Some((f, e, _)) => f.log2() + e as f64,
        }
    }

    /// Full-precision decimal in scientific notation.
    pub fn to_decimal(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        with_consts(|cc| self.value.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".to_string())
    }

    /// Decimal in scientific notation with `digits` significant digits, rounded half up.
    pub fn to_decimal_digits(&self, digits: usize) -> String {
        let full = self.to_decimal();
        if full == "0" || full == "NaN" {
            return full;
        }
        let (mant, exp) = full.split_once('e').unwrap_or((&full, "0"));
        let neg = mant.starts_with('-');
        let all: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
        let point = mant.trim_start_matches('-').find('.').unwrap_or(all.len()) as i64;
        let lead = all.iter().position(|d| *d != 0).unwrap_or(0);
        let mut e10 = exp.parse::<i64>().unwrap_or(0) + point - 1 - lead as i64;
        let sig = &all[lead..];
        let digits = digits.max(1);
        let mut kept: Vec<u8> = sig.iter().take(digits).copied().collect();
        kept.resize(digits, 0);
        if sig.get(digits).is_some_and(|d| *d >= 5) {
            let mut i = digits;
            loop {
                if i == 0 {
                    kept.insert(0, 1);
                    kept.pop();
                    e10 += 1;
                    break;
                }
                i -= 1;
                if kept[i] == 9 {
                    kept[i] = 0;
                } else {
                    kept[i] += 1;
                    break;
                }
            }
        }
        let body: String = kept.iter().map(|d| char::from(b'0' + d)).collect();
        let (first, rest) = body.split_at(1);
        let sign = if neg { "-" } else { "" };
        if rest.is_empty() {
            format!("{sign}{first}e{e10}")
        } else {
            format!("{sign}{first}.{rest}e{e10}")
        }
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.value.abs(), self.prec)
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(self.value.sqrt(self.prec, RM), self.prec)
    }

    /// Multiplies by `2^k` exactly.
    pub fn mul_pow2(&self, k: i32) -> Self {
        let two = BigFloat::from_i64(2, 64);
        let f = if k >= 0 {
            two.powi(k as usize, self.prec, RM)
        } else {
            two.powi((-k) as usize, self.prec, RM).reciprocal(self.prec, RM)
        };
        Self::wrap(self.value.mul(&f, self.prec, RM), self.prec)
    }

    pub fn sin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.value.sin(self.prec, RM, cc)), self.prec)
    }

    pub fn cos(&self) -> Self {
        Self::wrap(with_consts(|cc| self.value.cos(self.prec, RM, cc)), self.prec)
    }

    pub fn asin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.value.asin(self.prec, RM, cc)), self.prec)
    }

    pub fn atan(&self) -> Self {
        Self::wrap(with_consts(|cc| self.value.atan(self.prec, RM, cc)), self.prec)
    }

    pub fn ln(&self) -> Self {
        Self::wrap(with_consts(|cc| self.value.ln(self.prec, RM, cc)), self.prec)
    }

    pub fn exp(&self) -> Self {
        Self::wrap(with_consts(|cc| self.value.exp(self.prec, RM, cc)), self.prec)
    }

    pub fn min_prec(&self, other: &Self) -> usize {
        self.prec.min(other.prec)
    }

    /// `log2(|a - b| / max(1, |a|))`: the mixed absolute/relative disagreement of two
    /// evaluations of the same quantity, as a machine real (`-inf` when equal).
    pub fn log2_mixed_diff(a: &Self, b: &Self) -> f64 {
        let p = a.prec.max(b.prec);
        let d = Self::wrap(a.value.sub(&b.value, p, RM), p);
        d.log2_abs() - a.log2_abs().max(0.0)
    }
}

/// Rounds `x` to `bits`, clamping at the minimum precision.
pub fn with_precision(x: &PrecisionReal, bits: usize) -> Result<PrecisionReal> {
    x.with_precision(bits)
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&PrecisionReal> for &PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: &PrecisionReal) -> PrecisionReal {
                let p = self.prec.min(rhs.prec);
                PrecisionReal::wrap(self.value.$m(&rhs.value, p, RM), p)
            }
        }
        impl $tr<PrecisionReal> for PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: PrecisionReal) -> PrecisionReal {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&PrecisionReal> for PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: &PrecisionReal) -> PrecisionReal {
                (&self).$m(rhs)
            }
        }
        impl $tr<PrecisionReal> for &PrecisionReal {
            type Output = PrecisionReal;
            fn $m(self, rhs: PrecisionReal) -> PrecisionReal {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal::wrap(BigFloat::neg(&self.value), self.prec)
    }
}

impl Neg for &PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal::wrap(BigFloat::neg(&self.value), self.prec)
    }
}

impl PartialEq for PrecisionReal {
    fn eq(&self, other: &Self) -> bool {
        self.value.cmp(&other.value) == Some(0)
    }
}

impl PartialOrd for PrecisionReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.cmp(&other.value).map(|c| c.cmp(&0))
    }
}

impl fmt::Display for PrecisionReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

impl Serialize for PrecisionReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal())
    }
}
