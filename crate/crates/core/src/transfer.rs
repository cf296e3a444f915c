//! Transfer matrices over the Thue-Morse potential.
//!
//! `M_k = [[E - λw(k), -1], [1, 0]]` is the one-step matrix at site `k` and
//! `T_{m→n} = M_n ⋯ M_{m+1}`. The dyadic blocks `A_n = T_{0→2^n}` and their
//! partners `B_n` (the same product with the letters exchanged) satisfy
//! `A_{n+1} = B_n A_n`, `B_{n+1} = A_n B_n`.
//!
//! Two arithmetic paths exist: [`ScaledMat2`] at machine mantissa precision
//! and [`PrecisionMat2`] with arbitrary-precision entries for the deep
//! structure checks, where the interesting quantities sit far below
//! machine epsilon.

use crate::error::{Error, Result};
use crate::numerics::{log_norm, scaled_mul, PrecisionReal, ScaledMat2, ScaledReal};
use crate::sequence::{tm_letter, Letter};

/// The swap matrix.
pub const U: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
/// The reflection `diag(1, -1)`.
pub const V: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];
/// The rotation generator.
pub const W: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];

/// The one-step matrix at a single site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMatrix {
    pub value: [[f64; 2]; 2],
}

impl LocalMatrix {
    pub fn new(e: f64, lambda: f64, site: i64) -> Self {
        let v = lambda * tm_letter(site).weight() as f64;
        Self { value: [[e - v, -1.0], [1.0, 0.0]] }
    }

    /// `ρ(letter)`.
    pub fn of_letter(e: f64, lambda: f64, letter: Letter) -> Self {
        let v = lambda * letter.weight() as f64;
        Self { value: [[e - v, -1.0], [1.0, 0.0]] }
    }
}

/// Left-multiplies a scaled matrix by `[[c, -1], [1, 0]]`.
fn step_scaled(c: f64, x: &ScaledMat2) -> ScaledMat2 {
    let m = x.mantissa();
    let out = [[c * m[0][0] - m[1][0], c * m[0][1] - m[1][1]], m[0]];
    ScaledMat2::from_parts(out, x.exp2())
}

/// Left-multiplies by `[[c, -1], [1, 0]]^{-1} = [[0, 1], [-1, c]]`.
fn step_back_scaled(c: f64, x: &ScaledMat2) -> ScaledMat2 {
    let m = x.mantissa();
    let out = [m[1], [-m[0][0] + c * m[1][0], -m[0][1] + c * m[1][1]]];
    ScaledMat2::from_parts(out, x.exp2())
}

fn check_coupling(lambda: &PrecisionReal) -> Result<()> {
    if lambda.is_zero() {
        Err(Error::ZeroCoupling)
    } else {
        Ok(())
    }
}

/// `T_{m→n}(E)` at machine mantissa precision, with `E` and `λ` rounded once.
pub fn transfer_product(e: &PrecisionReal, lambda: &PrecisionReal, m: i64, n: i64) -> Result<ScaledMat2> {
    check_coupling(lambda)?;
    let (ef, lf) = (e.to_f64(), lambda.to_f64());
    let (lo, hi) = (m.min(n), m.max(n));
    let mut acc = ScaledMat2::identity();
    for k in lo + 1..=hi {
        let c = ef - lf * tm_letter(k).weight() as f64;
        acc = step_scaled(c, &acc);
    }
    Ok(if m > n { acc.inverse_unimodular() } else { acc })
}

/// `T_{0→-n}` built directly by stepping backwards from site 0.
pub fn transfer_backward(e: &PrecisionReal, lambda: &PrecisionReal, n: i64) -> Result<ScaledMat2> {
    check_coupling(lambda)?;
    let (ef, lf) = (e.to_f64(), lambda.to_f64());
    let mut acc = ScaledMat2::identity();
    for k in (-n + 1..=0).rev() {
        let c = ef - lf * tm_letter(k).weight() as f64;
        acc = step_back_scaled(c, &acc);
    }
    Ok(acc)
}

/// The pair `(A_n, B_n)` at one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicPair {
    pub n: usize,
    pub a: ScaledMat2,
    pub b: ScaledMat2,
}

/// `(A_n, B_n)` for `n = 0..=N` by the doubling recurrence.
pub fn dyadic_pairs(e: &PrecisionReal, lambda: &PrecisionReal, levels: usize) -> Result<Vec<DyadicPair>> {
    check_coupling(lambda)?;
    let (ef, lf) = (e.to_f64(), lambda.to_f64());
    let mut a = ScaledMat2::new(LocalMatrix::of_letter(ef, lf, Letter::A).value);
    let mut b = ScaledMat2::new(LocalMatrix::of_letter(ef, lf, Letter::B).value);
    let mut out = vec![DyadicPair { n: 0, a, b }];
    for n in 1..=levels {
        let (na, nb) = (scaled_mul(&b, &a), scaled_mul(&a, &b));
        a = na;
        b = nb;
        out.push(DyadicPair { n, a, b });
    }
    Ok(out)
}

/// `log ‖T_{0→k}‖` for `k = 1..=N`, one local multiply per step.
pub fn norm_profile(e: &PrecisionReal, lambda: &PrecisionReal, len: usize) -> Result<Vec<(usize, f64)>> {
    check_coupling(lambda)?;
    let (ef, lf) = (e.to_f64(), lambda.to_f64());
    let mut acc = ScaledMat2::identity();
    let mut out = Vec::with_capacity(len);
    for k in 1..=len {
        let c = ef - lf * tm_letter(k as i64).weight() as f64;
        acc = step_scaled(c, &acc);
        out.push((k, log_norm(&acc)?));
    }
    Ok(out)
}

/// Entrywise difference between `T_{0→-n}` built directly and `U T_{0→n} U`,
/// relative to the largest entry.
pub fn reflection_check(e: &PrecisionReal, lambda: &PrecisionReal, n: i64) -> Result<f64> {
    let direct = transfer_backward(e, lambda, n)?;
    let forward = transfer_product(e, lambda, 0, n)?;
    let u = ScaledMat2::new(U);
    let conj = scaled_mul(&u, &scaled_mul(&forward, &u));
    let diff = direct.sub(&conj).max_abs();
    Ok((diff / conj.max_abs()).to_f64())
}

// ---------------------------------------------------------------------------
// High-precision path
// ---------------------------------------------------------------------------

/// A 2x2 matrix with arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionMat2 {
    pub m: [[PrecisionReal; 2]; 2],
}

impl PrecisionMat2 {
    pub fn from_f64(m: [[f64; 2]; 2], bits: usize) -> Self {
        let f = |x: f64| PrecisionReal::from_f64(x, bits);
        Self { m: [[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]] }
    }

    pub fn identity(bits: usize) -> Self {
        Self::from_f64([[1.0, 0.0], [0.0, 1.0]], bits)
    }

    pub fn local(e: &PrecisionReal, lambda: &PrecisionReal, letter: Letter) -> Self {
        let c = match letter {
            Letter::A => e - lambda,
            Letter::B => e + lambda,
        };
        let p = c.precision();
        Self { m: [[c, PrecisionReal::from_i64(-1, p)], [PrecisionReal::one(p), PrecisionReal::zero(p)]] }
    }

    pub fn precision(&self) -> usize {
        self.m.iter().flatten().map(|x| x.precision()).min().unwrap_or(PrecisionReal::MIN_BITS)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (x, y) = (&self.m, &o.m);
        Self {
            m: [
                [&x[0][0] * &y[0][0] + &x[0][1] * &y[1][0], &x[0][0] * &y[0][1] + &x[0][1] * &y[1][1]],
                [&x[1][0] * &y[0][0] + &x[1][1] * &y[1][0], &x[1][0] * &y[0][1] + &x[1][1] * &y[1][1]],
            ],
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(&PrecisionReal, &PrecisionReal) -> PrecisionReal) -> Self {
        Self {
            m: [
                [f(&self.m[0][0], &o.m[0][0]), f(&self.m[0][1], &o.m[0][1])],
                [f(&self.m[1][0], &o.m[1][0]), f(&self.m[1][1], &o.m[1][1])],
            ],
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: &PrecisionReal) -> Self {
        Self { m: self.m.clone().map(|r| r.map(|x| &x * s)) }
    }

    pub fn trace(&self) -> PrecisionReal {
        &self.m[0][0] + &self.m[1][1]
    }

    pub fn det(&self) -> PrecisionReal {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn inverse_unimodular(&self) -> Self {
        let m = &self.m;
        Self { m: [[m[1][1].clone(), -&m[0][1]], [-&m[1][0], m[0][0].clone()]] }
    }

    pub fn apply(&self, v: &[PrecisionReal; 2]) -> [PrecisionReal; 2] {
        [&self.m[0][0] * &v[0] + &self.m[0][1] * &v[1], &self.m[1][0] * &v[0] + &self.m[1][1] * &v[1]]
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> PrecisionReal {
        let s = self.m.iter().flatten().fold(PrecisionReal::zero(self.precision()), |acc, x| acc + x.square());
        s.sqrt()
    }

    /// Scaled machine copy: each entry keeps machine relative accuracy.
    pub fn to_scaled(&self) -> ScaledMat2 {
        let s: Vec<ScaledReal> = self.m.iter().flatten().map(|x| x.to_scaled()).collect();
        let e = s.iter().filter(|x| !x.is_zero()).map(|x| x.exp2()).max().unwrap_or(0);
        let g = |x: ScaledReal| ScaledReal::from_parts(x.mantissa(), x.exp2() - e).to_f64();
        ScaledMat2::from_parts([[g(s[0]), g(s[1])], [g(s[2]), g(s[3])]], e)
    }

    pub fn log_norm(&self) -> Result<f64> {
        log_norm(&self.to_scaled())
    }

    /// Left-multiplication by `[[c, -1], [1, 0]]`.
    fn step(&self, c: &PrecisionReal) -> Self {
        let m = &self.m;
        Self {
            m: [[c * &m[0][0] - &m[1][0], c * &m[0][1] - &m[1][1]], [m[0][0].clone(), m[0][1].clone()]],
        }
    }
}

/// The fixed matrices `U`, `V`, `W` at a given precision.
pub fn basis(bits: usize) -> [PrecisionMat2; 3] {
    [PrecisionMat2::from_f64(U, bits), PrecisionMat2::from_f64(V, bits), PrecisionMat2::from_f64(W, bits)]
}

fn site_coefficient(e: &PrecisionReal, lambda: &PrecisionReal, k: i64) -> PrecisionReal {
    match tm_letter(k) {
        Letter::A => e - lambda,
        Letter::B => e + lambda,
    }
}

/// `T_{m→n}(E)` with arbitrary-precision entries.
pub fn transfer_product_hp(e: &PrecisionReal, lambda: &PrecisionReal, m: i64, n: i64) -> Result<PrecisionMat2> {
    check_coupling(lambda)?;
    let p = e.min_prec(lambda);
    let (lo, hi) = (m.min(n), m.max(n));
    let mut acc = PrecisionMat2::identity(p);
    for k in lo + 1..=hi {
        acc = acc.step(&site_coefficient(e, lambda, k));
    }
    Ok(if m > n { acc.inverse_unimodular() } else { acc })
}

/// High-precision dyadic pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionDyadicPair {
    pub n: usize,
    pub a: PrecisionMat2,
    pub b: PrecisionMat2,
}

/// `(A_n, B_n)` for `n = 0..=N` with arbitrary-precision entries.
pub fn dyadic_pairs_hp(e: &PrecisionReal, lambda: &PrecisionReal, levels: usize) -> Result<Vec<PrecisionDyadicPair>> {
    check_coupling(lambda)?;
    let mut a = PrecisionMat2::local(e, lambda, Letter::A);
    let mut b = PrecisionMat2::local(e, lambda, Letter::B);
    let mut out = vec![PrecisionDyadicPair { n: 0, a: a.clone(), b: b.clone() }];
    for n in 1..=levels {
        let (na, nb) = (b.mul(&a), a.mul(&b));
        a = na;
        b = nb;
        out.push(PrecisionDyadicPair { n, a: a.clone(), b: b.clone() });
    }
    Ok(out)
}

/// `log ‖T_{0→k}‖` for `k = 1..=N` with the running product held at the
/// precision of `E`. Needed when `E` is a hunted energy whose digits beyond
/// machine precision decide the long-range behaviour.
pub fn norm_profile_hp(e: &PrecisionReal, lambda: &PrecisionReal, len: usize) -> Result<Vec<(usize, f64)>> {
    check_coupling(lambda)?;
    let p = e.min_prec(lambda);
    let mut acc = PrecisionMat2::identity(p);
    let mut out = Vec::with_capacity(len);
    for k in 1..=len {
        acc = acc.step(&site_coefficient(e, lambda, k as i64));
        out.push((k, acc.log_norm()?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pr(x: f64) -> PrecisionReal {
        PrecisionReal::from_f64(x, 256)
    }

    #[test]
    fn empty_product_is_identity() {
        assert_eq!(transfer_product(&pr(1.3), &pr(1.0), 7, 7).unwrap(), ScaledMat2::identity());
    }

    #[test]
    fn two_site_product_by_hand() {
        // M_2 M_1 = [[3,-1],[1,0]] [[1,-1],[1,0]]
        let t = transfer_product(&pr(2.0), &pr(1.0), 0, 2).unwrap();
        assert_eq!(t.to_f64(), [[2.0, -3.0], [1.0, -1.0]]);
        assert_eq!(t.trace().to_f64(), 1.0);
    }

    #[test]
    fn first_dyadic_matrix() {
        let d = dyadic_pairs(&pr(2.0), &pr(0.5), 0).unwrap();
        assert_eq!(d[0].a.to_f64(), [[1.5, -1.0], [1.0, 0.0]]);
        assert_eq!(d[0].b.to_f64(), [[2.5, -1.0], [1.0, 0.0]]);
    }

    #[test]
    fn u_conjugation_inverts_local_matrix() {
        let a = ScaledMat2::new(LocalMatrix::of_letter(0.7, 1.0, Letter::A).value);
        let u = ScaledMat2::new(U);
        assert_eq!(scaled_mul(&u, &scaled_mul(&a, &u)), a.inverse_unimodular());
    }

    #[test]
    fn type_one_energy_is_periodic() {
        let e = PrecisionReal::parse("sqrt3", 256).unwrap();
        let prof = norm_profile(&e, &pr(1.0), 64).unwrap();
        for (k, l) in prof {
            if k % 8 == 0 {
                assert!(l.abs() < 1e-12, "k = {k}: {l}");
            }
        }
    }

    #[test]
    fn reflection_single_site() {
        assert!(reflection_check(&pr(0.9), &pr(1.3), 1).unwrap() < 1e-12);
    }

    #[test]
    fn high_precision_matches_machine_path() {
        let d = dyadic_pairs(&pr(1.1), &pr(0.8), 6).unwrap();
        let h = dyadic_pairs_hp(&pr(1.1), &pr(0.8), 6).unwrap();
        for (x, y) in d.iter().zip(&h) {
            let diff = x.a.sub(&y.a.to_scaled()).max_abs() / x.a.max_abs();
            assert!(diff.to_f64() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn dyadic_trace_and_determinant(e in -3.5f64..3.5, l in 0.2f64..2.0) {
            let d = dyadic_pairs(&pr(e), &pr(l), 10).unwrap();
            let s = crate::tracemap::trace_seq(&pr(e), &pr(l), 10).unwrap();
            for p in &d[1..] {
                let t = s.t(p.n).to_scaled();
                let scale = p.a.max_abs() + ScaledReal::ONE;
                prop_assert!(((p.a.trace() - t).abs() / scale).to_f64() < 1e-9);
                prop_assert!(((p.b.trace() - t).abs() / scale).to_f64() < 1e-9);
                prop_assert!(p.a.det_defect() < 1e-9);
            }
        }

        #[test]
        fn backward_equals_forward_inverse(e in -3.0f64..3.0, l in 0.2f64..2.0, n in 1i64..200) {
            let back = transfer_product(&pr(e), &pr(l), 0, -n).unwrap();
            let direct = transfer_backward(&pr(e), &pr(l), n).unwrap();
            prop_assert!((back.sub(&direct).max_abs() / direct.max_abs()).to_f64() < 1e-9);
        }
    }
}
