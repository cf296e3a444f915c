//! Trace polynomials `t_n(E)` and the auxiliary sequences `μ_n, ν_n, ω_n`.
//!
//! `t_n` is the trace of the transfer matrix over the first `2^n` sites. The
//! auxiliary sequences measure `A_n - B_n` in the basis `U, V, W` and obey
//! multiplicative recurrences driven by the traces. All evaluation is
//! pointwise in arbitrary precision.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::PrecisionReal;

/// Traces `t_1..t_N` and auxiliary values `μ_n, ν_n, ω_n` for `n = 1..N/2`.
#[derive(Clone, Debug, Serialize)]
pub struct TraceSequence {
    energy: PrecisionReal,
    lambda: PrecisionReal,
    t: Vec<PrecisionReal>,
    mu: Vec<PrecisionReal>,
    nu: Vec<PrecisionReal>,
    omega: Vec<PrecisionReal>,
}

impl TraceSequence {
    pub fn energy(&self) -> &PrecisionReal {
        &self.energy
    }

    pub fn lambda(&self) -> &PrecisionReal {
        &self.lambda
    }

    /// Number of traces `N`.
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn precision(&self) -> usize {
        self.energy.min_prec(&self.lambda)
    }

    /// `t_n`, one-based.
    pub fn t(&self, n: usize) -> &PrecisionReal {
        &self.t[n - 1]
    }

    /// `μ_n`, one-based; pairs with `t_{2n-1}`.
    pub fn mu(&self, n: usize) -> &PrecisionReal {
        &self.mu[n - 1]
    }

    /// `ν_n`, one-based; pairs with `t_{2n}`.
    pub fn nu(&self, n: usize) -> &PrecisionReal {
        &self.nu[n - 1]
    }

    /// `ω_n`, one-based; pairs with `t_{2n}`.
    pub fn omega(&self, n: usize) -> &PrecisionReal {
        &self.omega[n - 1]
    }

    pub fn traces(&self) -> &[PrecisionReal] {
        &self.t
    }

    pub fn mus(&self) -> &[PrecisionReal] {
        &self.mu
    }

    pub fn nus(&self) -> &[PrecisionReal] {
        &self.nu
    }

    pub fn omegas(&self) -> &[PrecisionReal] {
        &self.omega
    }

    /// The first `n` traces with the matching auxiliary values.
    pub fn truncated(&self, n: usize) -> TraceSequence {
        let n = n.min(self.len());
        let h = n / 2;
        TraceSequence {
            energy: self.energy.clone(),
            lambda: self.lambda.clone(),
            t: self.t[..n].to_vec(),
            mu: self.mu[..h].to_vec(),
            nu: self.nu[..h].to_vec(),
            omega: self.omega[..h].to_vec(),
        }
    }
}

/// `t_1(E) = E² - λ² - 2`.
pub fn t1(e: &PrecisionReal, lambda: &PrecisionReal) -> PrecisionReal {
    e.square() - lambda.square() - e.lit(2)
}

/// `t_2(E) = (E² - λ²)² - 4E² + 2`.
pub fn t2(e: &PrecisionReal, lambda: &PrecisionReal) -> PrecisionReal {
    let d = e.square() - lambda.square();
    d.square() - e.square() * e.lit(4) + e.lit(2)
}

/// One step of the trace recurrence: `t_{n+1} = t_{n-1}² (t_n - 2) + 2`.
pub fn next_trace(prev: &PrecisionReal, cur: &PrecisionReal) -> PrecisionReal {
    prev.square() * (cur - cur.lit(2)) + cur.lit(2)
}

/// Traces `t_1..t_n` without auxiliary sequences or precision checks.
pub fn traces_only(e: &PrecisionReal, lambda: &PrecisionReal, n: usize) -> Vec<PrecisionReal> {
    let p = e.min_prec(lambda);
    let e = e.with_precision(p).expect("precision");
    let lambda = lambda.with_precision(p).expect("precision");
    let mut t = Vec::with_capacity(n.max(2));
    t.push(t1(&e, &lambda));
    t.push(t2(&e, &lambda));
    while t.len() < n {
        let k = t.len();
        let next = next_trace(&t[k - 2], &t[k - 1]);
        t.push(next);
    }
    t.truncate(n);
    t
}

fn build(e: &PrecisionReal, lambda: &PrecisionReal, n: usize) -> TraceSequence {
    let p = e.min_prec(lambda);
    let e = e.with_precision(p).expect("precision");
    let lambda = lambda.with_precision(p).expect("precision");
    let t = traces_only(&e, &lambda, n);
    let h = n / 2;
    let two = e.lit(2);
    let mut mu = Vec::with_capacity(h);
    let mut nu = Vec::with_capacity(h);
    let mut omega = Vec::with_capacity(h);
    if h >= 1 {
        mu.push(-(&lambda * &two));
        nu.push(&lambda * &e * e.lit(4));
        omega.push(&lambda * &two * (e.square() - lambda.square()));
    }
    for m in 1..h {
        // advance from index m to m + 1
        let mu_f = (&t[2 * m - 1] - &two) * &t[2 * m - 2];
        mu.push(&mu_f * &mu[m - 1]);
        let nu_f = (&t[2 * m] - &two) * &t[2 * m - 1];
        nu.push(&nu_f * &nu[m - 1]);
        omega.push(&nu_f * &omega[m - 1]);
    }
    TraceSequence { energy: e, lambda, t, mu, nu, omega }
}

/// First index where a half-precision rerun disagrees with the full run by
/// more than `2^(-prec/8)` in the mixed absolute/relative sense.
pub fn shadow_divergence(e: &PrecisionReal, lambda: &PrecisionReal, n: usize) -> Option<usize> {
    let p = e.min_prec(lambda);
    let q = (p / 2).max(PrecisionReal::MIN_BITS);
    let full = traces_only(e, lambda, n);
    let half = traces_only(&e.with_precision(q).ok()?, &lambda.with_precision(q).ok()?, n);
    let limit = -(p as f64) / 8.0;
    full.iter()
        .zip(&half)
        .position(|(a, b)| PrecisionReal::log2_mixed_diff(a, b) > limit)
        .map(|i| i + 1)
}

/// Traces `t_1..t_N` and auxiliary sequences at the common precision of `E` and `λ`.
///
/// Fails with [`Error::PrecisionExhausted`] at the first index where the
/// half-precision shadow run disagrees.
pub fn trace_seq(e: &PrecisionReal, lambda: &PrecisionReal, n: usize) -> Result<TraceSequence> {
    if lambda.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least two traces, got {n}")));
    }
    if let Some(index) = shadow_divergence(e, lambda, n) {
        return Err(Error::PrecisionExhausted { index });
    }
    Ok(build(e, lambda, n))
}

/// Like [`trace_seq`], but truncates at the last index the shadow run confirms
/// instead of failing. Returns the sequence and the flagged index, if any.
pub fn reliable_trace_seq(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    n: usize,
) -> Result<(TraceSequence, Option<usize>)> {
    if lambda.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    let flagged = shadow_divergence(e, lambda, n.max(2));
    let keep = match flagged {
        Some(i) if i <= 2 => return Err(Error::PrecisionExhausted { index: i }),
        Some(i) => i - 1,
        None => n.max(2),
    };
    Ok((build(e, lambda, keep), flagged))
}

/// `κ(E) = (E² - λ²)/(2E)` and `θ = arcsin κ`.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingAngle {
    pub kappa: PrecisionReal,
    pub theta: PrecisionReal,
}

impl CouplingAngle {
    pub fn sec(&self) -> PrecisionReal {
        self.theta.lit(1) / self.theta.cos()
    }

    pub fn tan(&self) -> PrecisionReal {
        self.theta.sin() / self.theta.cos()
    }
}

pub fn coupling_angle(e: &PrecisionReal, lambda: &PrecisionReal) -> Result<CouplingAngle> {
    if e.is_zero() {
        return Err(Error::ZeroEnergy);
    }
    let kappa = (e.square() - lambda.square()) / (e * e.lit(2));
    if kappa.abs() >= kappa.lit(1) {
        return Err(Error::NotCandidate { kappa: kappa.to_f64() });
    }
    let theta = kappa.asin();
    Ok(CouplingAngle { kappa, theta })
}

fn max_abs<'a>(xs: impl IntoIterator<Item = &'a PrecisionReal>, p: usize) -> PrecisionReal {
    let mut m = PrecisionReal::one(p);
    for x in xs {
        let a = x.abs();
        if a > m {
            m = a;
        }
    }
    m
}

/// Residuals of the four exact trace identities, each the largest absolute
/// defect divided by the largest term entering it (at least 1):
///
/// 0. the trace recurrence,
/// 1. `t_{2n} = t_{2n-1}² - μ_n² - 2`,
/// 2. `t_{2n+1} = t_{2n}² - ν_n² + ω_n² - 2`,
/// 3. `t_1² - t_2 - 2 = 4λ²`.
pub fn invariant_residuals(seq: &TraceSequence) -> Vec<PrecisionReal> {
    let p = seq.precision();
    let two = PrecisionReal::from_i64(2, p);
    let zero = PrecisionReal::zero(p);
    let mut out = vec![zero.clone(), zero.clone(), zero.clone(), zero];
    let bump = |slot: &mut PrecisionReal, r: PrecisionReal| {
        if r > *slot {
            *slot = r;
        }
    };
    for n in 2..seq.len() {
        let big = seq.t(n - 1).square() * (seq.t(n) - &two);
        let r = (seq.t(n + 1) - (&big + &two)).abs() / max_abs([&big], p);
        bump(&mut out[0], r);
    }
    for n in 1..=seq.mu.len() {
        if 2 * n > seq.len() {
            break;
        }
        let a = seq.t(2 * n - 1).square();
        let b = seq.mu(n).square();
        let r = (seq.t(2 * n) - (&a - &b - &two)).abs() / max_abs([&a, &b], p);
        bump(&mut out[1], r);
    }
    for n in 1..=seq.nu.len() {
        if 2 * n + 1 > seq.len() {
            break;
        }
        let a = seq.t(2 * n).square();
        let b = seq.nu(n).square();
        let c = seq.omega(n).square();
        let r = (seq.t(2 * n + 1) - (&a - &b + &c - &two)).abs() / max_abs([&a, &b, &c], p);
        bump(&mut out[2], r);
    }
    let a = seq.t(1).square();
    let four_l2 = seq.lambda.square() * PrecisionReal::from_i64(4, p);
    let r = (&a - seq.t(2) - &two - &four_l2).abs() / max_abs([&a], p);
    bump(&mut out[3], r);
    out
}
