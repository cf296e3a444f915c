//! Truncated solution norms and the norm-ratio proxy for the Weyl m-function.
//!
//! A half-line solution with boundary angle `β` starts from
//! `(u(1), u(0)) = v_β = (cos β, -sin β)`, so `u(0) cos β + u(1) sin β = 0`.
//! Its squares are kept as logarithms with logarithmic prefix sums, which
//! keeps growing solutions representable far past the f64 range of `u` itself.
//!
//! The potential is symmetric about `1/2`, so the left half-line problem is a
//! copy of the right one and only right half-line solutions are computed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::PrecisionReal;
use crate::sequence::{tm_letter, Letter};

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Clone, Debug)]
pub struct HalfLineSolution {
    /// Boundary angle, reduced to `(-π/2, π/2]`.
    pub beta: f64,
    /// `ln u(n)²` for `n = 0..=range`.
    ln_sq: Vec<f64>,
    /// `ln Σ_{m=1}^{n} u(m)²`, index `n = 0..=range`.
    ln_prefix: Vec<f64>,
    /// `u(0), u(1)` as machine reals, for the boundary check.
    seed: [f64; 2],
}

fn reduce_angle(b: f64) -> f64 {
    use std::f64::consts::PI;
    let mut b = b.rem_euclid(PI);
    if b > PI / 2.0 {
        b -= PI;
    }
    b
}

impl HalfLineSolution {
    /// Solution with boundary angle `β`, computed to index `range + 1`.
    pub fn new(e: &PrecisionReal, lambda: &PrecisionReal, beta: &PrecisionReal, range: usize) -> Result<Self> {
        let v = [beta.cos(), -beta.sin()];
        Self::from_vector(e, lambda, &v, range)
    }

    /// Solution with `(u(1), u(0)) = v`, `v` a unit vector.
    pub fn from_vector(e: &PrecisionReal, lambda: &PrecisionReal, v: &[PrecisionReal; 2], range: usize) -> Result<Self> {
        if lambda.is_zero() {
            return Err(Error::ZeroCoupling);
        }
        if range < 2 {
            return Err(Error::InvalidArgument("range must be at least 2".into()));
        }
        let (ea, eb) = (e - lambda, e + lambda);
        let mut prev = v[1].clone();
        let mut cur = v[0].clone();
        let mut ln_sq = Vec::with_capacity(range + 2);
        ln_sq.push(2.0 * prev.ln_abs());
        ln_sq.push(2.0 * cur.ln_abs());
        for k in 1..=range as i64 {
            let c = match tm_letter(k) {
                Letter::A => &ea,
                Letter::B => &eb,
            };
            let next = c * &cur - &prev;
            ln_sq.push(2.0 * next.ln_abs());
            prev = cur;
            cur = next;
        }
        let mut ln_prefix = vec![f64::NEG_INFINITY; ln_sq.len()];
        for n in 1..ln_sq.len() {
            ln_prefix[n] = ln_add(ln_prefix[n - 1], ln_sq[n]);
        }
        let beta = reduce_angle((-v[1].to_f64()).atan2(v[0].to_f64()));
        Ok(HalfLineSolution { beta, ln_sq, ln_prefix, seed: [v[1].to_f64(), v[0].to_f64()] })
    }

    /// Largest `L` accepted by [`truncated_norm`].
    pub fn range(&self) -> usize {
        self.ln_sq.len() - 2
    }

    /// `u(0) cos β + u(1) sin β`.
    pub fn boundary_residual(&self) -> f64 {
        self.seed[0] * self.beta.cos() + self.seed[1] * self.beta.sin()
    }

    /// `ln |u(n)|`.
    pub fn ln_abs(&self, n: usize) -> f64 {
        self.ln_sq[n] / 2.0
    }

    /// `(S, a)` with `‖u‖_{N+f}² = S + f·a`, as logarithms.
    fn segment(&self, n: usize) -> (f64, f64) {
        (self.ln_prefix[n], self.ln_sq[n + 1])
    }
}

/// `ln ‖u‖_L` with `‖u‖_L² = Σ_{n=1}^{[L]} u(n)² + (L - [L]) u([L]+1)²`.
pub fn ln_truncated_norm(u: &HalfLineSolution, l: f64) -> Result<f64> {
    if !(l >= 0.0) || l > u.range() as f64 {
        return Err(Error::InvalidArgument(format!("length {l} outside 0..={}", u.range())));
    }
    let n = l.floor() as usize;
    let f = l - n as f64;
    let (s, a) = u.segment(n);
    let frac = if f > 0.0 { f.ln() + a } else { f64::NEG_INFINITY };
    Ok(ln_add(s, frac) / 2.0)
}

pub fn truncated_norm(u: &HalfLineSolution, l: f64) -> Result<f64> {
    ln_truncated_norm(u, l).map(f64::exp)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LengthScale {
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Set when `ε` is so large that the target is met before `L = 1`.
    pub clamped: bool,
}

/// The pair `u_β`, `u_{β+π/2}` whose truncated norms define `L(ε)`.
#[derive(Clone, Debug)]
pub struct HalfLinePair {
    pub u: HalfLineSolution,
    pub u_perp: HalfLineSolution,
}

impl HalfLinePair {
    pub fn new(e: &PrecisionReal, lambda: &PrecisionReal, beta: &PrecisionReal, range: usize) -> Result<Self> {
        let perp = beta + &PrecisionReal::pi(beta.precision()).mul_pow2(-1);
        let (u, u_perp) = rayon::join(
            || HalfLineSolution::new(e, lambda, beta, range),
            || HalfLineSolution::new(e, lambda, &perp, range),
        );
        Ok(HalfLinePair { u: u?, u_perp: u_perp? })
    }

    pub fn range(&self) -> usize {
        self.u.range().min(self.u_perp.range())
    }

    fn ln_product(&self, n: usize) -> f64 {
        (self.u.ln_prefix[n] + self.u_perp.ln_prefix[n]) / 2.0
    }

    /// `L` with `‖u_β‖_L ‖u_{β+π/2}‖_L = 1/(2ε)`.
    ///
    /// The integer part comes from bisection on the increasing product; on the
    /// last unit segment both squared norms are linear in the fraction, so the
    /// fraction solves a quadratic exactly.
    pub fn length_scale(&self, epsilon: f64) -> Result<LengthScale> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        let target = -(2.0 * epsilon).ln();
        let top = self.range();
        if self.ln_product(top) < target {
            return Err(Error::EpsilonTooSmall);
        }
        if self.ln_product(1) >= target {
            return Ok(LengthScale { epsilon, l: 1.0, clamped: true });
        }
        let (mut lo, mut hi) = (1usize, top);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ln_product(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (s1, a1) = self.u.segment(lo);
        let (s2, a2) = self.u_perp.segment(lo);
        let (r1, r2) = ((a1 - s1).exp(), (a2 - s2).exp());
        let k1 = (2.0 * target - s1 - s2).exp_m1();
        let b = r1 + r2;
        let f = 2.0 * k1 / (b + (b * b + 4.0 * r1 * r2 * k1).sqrt());
        Ok(LengthScale { epsilon, l: lo as f64 + f.clamp(0.0, 1.0), clamped: false })
    }

    /// `ln(‖u_{β+π/2}‖_L / ‖u_β‖_L)` at `L = L(ε)`.
    pub fn ln_m_ratio(&self, epsilon: f64) -> Result<(LengthScale, f64)> {
        let ls = self.length_scale(epsilon)?;
        let r = ln_truncated_norm(&self.u_perp, ls.l)? - ln_truncated_norm(&self.u, ls.l)?;
        Ok((ls, r))
    }
}

/// The norm-ratio proxy for `|m_β(E + iε)|`.
pub fn m_magnitude(e: &PrecisionReal, lambda: &PrecisionReal, beta: &PrecisionReal, epsilon: f64, range: usize) -> Result<f64> {
    let pair = HalfLinePair::new(e, lambda, beta, range)?;
    Ok(pair.ln_m_ratio(epsilon)?.1.exp())
}

/// Proxy for `|M|` from two m-magnitudes, `(m₁ m₂ + 1)/(m₁ + m₂)`, in logs.
pub fn ln_m_proxy(ln_m1: f64, ln_m2: f64) -> f64 {
    ln_add(ln_m1 + ln_m2, 0.0) - ln_add(ln_m1, ln_m2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Diverging,
    Vanishing,
    Bounded,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndicatorRow {
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub m_ratio: f64,
    #[serde(rename = "M_proxy")]
    pub m_proxy: f64,
    #[serde(rename = "eps_power_M")]
    pub eps_power_m: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalDimReport {
    pub beta: f64,
    pub exponent: f64,
    pub rows: Vec<IndicatorRow>,
    /// Least-squares slope of `ln(ε^{1-η}|M|)` against `ln ε`.
    pub slope: f64,
    pub threshold: f64,
    pub trend: Trend,
}

pub const TREND_THRESHOLD: f64 = 0.1;

/// `ε = 2^{-j}` for `j = 4..=40`.
pub fn default_eps_grid() -> Vec<f64> {
    (4..=40).map(|j| 2f64.powi(-j)).collect()
}

/// `ε^{1-η}|M(E+iε)|` over the grid with the proxy built from `β` and `π/2 - β`.
/// Grid points past the solution range are dropped; at least three must remain.
pub fn local_dim_indicator(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    beta: &PrecisionReal,
    exponent: f64,
    eps_grid: &[f64],
    range: usize,
) -> Result<LocalDimReport> {
    let bits = beta.precision();
    let mirror = &PrecisionReal::pi(bits).mul_pow2(-1) - beta;
    let (p, q) = rayon::join(
        || HalfLinePair::new(e, lambda, beta, range),
        || HalfLinePair::new(e, lambda, &mirror, range),
    );
    let (p, q) = (p?, q?);
    let rows: Vec<IndicatorRow> = eps_grid
        .par_iter()
        .map(|&eps| -> Result<Option<IndicatorRow>> {
            let (ls, m1) = match p.ln_m_ratio(eps) {
                Ok(x) => x,
                Err(Error::EpsilonTooSmall) => return Ok(None),
                Err(x) => return Err(x),
            };
            let m2 = match q.ln_m_ratio(eps) {
                Ok(x) => x.1,
                Err(Error::EpsilonTooSmall) => return Ok(None),
                Err(x) => return Err(x),
            };
            let mp = ln_m_proxy(m1, m2);
            Ok(Some(IndicatorRow {
                epsilon: eps,
                l: ls.l,
                m_ratio: m1.exp(),
                m_proxy: mp.exp(),
                eps_power_m: ((1.0 - exponent) * eps.ln() + mp).exp(),
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if rows.len() < 3 {
        return Err(Error::EpsilonTooSmall);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.eps_power_m.ln()).collect();
    let slope = slope(&xs, &ys);
    let trend = if slope > TREND_THRESHOLD {
        Trend::Vanishing
    } else if slope < -TREND_THRESHOLD {
        Trend::Diverging
    } else {
        Trend::Bounded
    };
    Ok(LocalDimReport { beta: reduce_angle(beta.to_f64()), exponent, rows, slope, threshold: TREND_THRESHOLD, trend })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Boundary angle whose solution has the smallest truncated norm at its own
/// length scale `L_β(ε)`, from a fixed-point iteration started at `start`.
///
/// At fixed `L`, `‖u_β‖_L²` is the quadratic form of the Gram matrix of the
/// solutions with `v = (1, 0)` and `v = (0, 1)`, so the minimiser is its
/// lowest eigenvector.
pub fn subordinate_angle(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    start: f64,
    epsilon: f64,
    range: usize,
) -> Result<f64> {
    let bits = e.min_prec(lambda);
    let one = PrecisionReal::one(bits);
    let zero = PrecisionReal::zero(bits);
    let a = signed_values(e, lambda, &[one.clone(), zero.clone()], range);
    let b = signed_values(e, lambda, &[zero, one], range);
    let mut beta = reduce_angle(start);
    for _ in 0..8 {
        let l = HalfLinePair::new(e, lambda, &PrecisionReal::from_f64(beta, bits), range)?.length_scale(epsilon)?.l;
        let n = l.floor() as usize;
        let f = l - n as f64;
        let scale = (1..=n + 1).map(|k| a[k].abs().max(b[k].abs())).fold(f64::MIN_POSITIVE, f64::max);
        let mut g = [[0.0f64; 2]; 2];
        for k in 1..=n + 1 {
            let w = if k <= n { 1.0 } else { f };
            let (x, y) = (a[k] / scale, b[k] / scale);
            g[0][0] += w * x * x;
            g[0][1] += w * x * y;
            g[1][1] += w * y * y;
        }
        // u_β = cos β · a - sin β · b; lowest eigenvector of the Gram matrix in (cos β, -sin β).
        let phi = 0.5 * (2.0 * g[0][1]).atan2(g[0][0] - g[1][1]);
        let next = reduce_angle(-(phi + std::f64::consts::FRAC_PI_2));
        if (next - beta).abs() < 1e-14 {
            return Ok(next);
        }
        beta = next;
    }
    Ok(beta)
}

/// `u(n)` for `n = 0..=range+1` as machine reals.
fn signed_values(e: &PrecisionReal, lambda: &PrecisionReal, v: &[PrecisionReal; 2], range: usize) -> Vec<f64> {
    let (ea, eb) = (e - lambda, e + lambda);
    let mut prev = v[1].clone();
    let mut cur = v[0].clone();
    let mut out = vec![prev.to_f64(), cur.to_f64()];
    for k in 1..=range as i64 {
        let c = match tm_letter(k) {
            Letter::A => &ea,
            Letter::B => &eb,
        };
        let next = c * &cur - &prev;
        out.push(next.to_f64());
        prev = cur;
        cur = next;
    }
    out
}
