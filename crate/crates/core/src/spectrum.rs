//! Bands of the periodic approximants `σ_n = {E : |t_n(E)| ≤ 2}`.
//!
//! The edges come from two polynomial equations. For `n ≥ 3` the upper one
//! factors completely:
//!
//! ```text
//! t_n - 2 = t_{n-2}² t_{n-3}² ⋯ t_1² (t_2 - 2),   t_2 - 2 = (E² - λ² - 2E)(E² - λ² + 2E)
//! ```
//!
//! so the `+2` edges are the four numbers `±1 ± √(1+λ²)` together with every
//! zero of `t_j`, `j ≤ n-2`, each counted twice (two bands touching). The
//! `-2` edges are simple. Sorted, the `+2` edges pair up as the two ends of
//! a `-2` gap, alternating with `+2` gaps; the unique critical point of
//! `t_n` inside each `-2` gap is found by golden-section search and the two
//! `-2` edges by bisection on either side.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::PrecisionReal;
use crate::tracemap::traces_only;

/// Highest level accepted by the band search.
pub const MAX_LEVEL: usize = 24;

/// One monotone branch of `t_n` spanning `[-2, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Band {
    pub lo: PrecisionReal,
    pub hi: PrecisionReal,
    pub trace_lo: i32,
    pub trace_hi: i32,
    #[serde(skip)]
    pub level: usize,
}

impl Band {
    pub fn width(&self) -> PrecisionReal {
        &self.hi - &self.lo
    }

    pub fn contains(&self, e: &PrecisionReal) -> bool {
        &self.lo <= e && e <= &self.hi
    }
}

/// The export shape `{level, bands: [{lo, hi, trace_lo, trace_hi}]}`.
#[derive(Clone, Debug, Serialize)]
pub struct BandList {
    pub level: usize,
    pub bands: Vec<Band>,
}

/// `σ_n ∪ σ_{n+1}`.
#[derive(Clone, Debug)]
pub struct SpectrumApprox {
    pub level: usize,
    /// Bands of both levels, sorted by lower edge.
    pub bands: Vec<Band>,
    /// Maximal intervals of the union, sorted and disjoint.
    pub components: Vec<(PrecisionReal, PrecisionReal)>,
}

impl SpectrumApprox {
    pub fn contains(&self, e: &PrecisionReal) -> bool {
        self.components.iter().any(|(a, b)| a <= e && e <= b)
    }

    /// Total length of the union.
    pub fn measure(&self) -> PrecisionReal {
        let p = self.components.first().map_or(PrecisionReal::MIN_BITS, |c| c.0.precision());
        self.components.iter().fold(PrecisionReal::zero(p), |acc, (a, b)| acc + (b - a))
    }

    /// Whether every component lies inside some component of `coarser`, up to `tol`.
    pub fn nests_within(&self, coarser: &SpectrumApprox, tol: &PrecisionReal) -> bool {
        self.components
            .iter()
            .all(|(a, b)| coarser.components.iter().any(|(c, d)| &(c - tol) <= a && b <= &(d + tol)))
    }
}

/// Default band-edge tolerance `2^(-bits/4)`.
pub fn default_tol(bits: usize) -> PrecisionReal {
    PrecisionReal::one(bits).mul_pow2(-((bits / 4) as i32))
}

pub(crate) fn trace_at(e: &PrecisionReal, lambda: &PrecisionReal, n: usize) -> PrecisionReal {
    traces_only(e, lambda, n).pop().expect("n >= 1")
}

/// Bisects `g` on `[a, b]` where `g(a)` and `g(b)` have opposite signs.
/// Stops once the bracket is narrower than `tol` and `|g(mid)| ≤ tol`, or
/// at the precision floor.
pub(crate) fn bisect(
    g: impl Fn(&PrecisionReal) -> PrecisionReal,
    a: &PrecisionReal,
    b: &PrecisionReal,
    tol: &PrecisionReal,
) -> PrecisionReal {
    let (mut a, mut b) = (a.clone(), b.clone());
    let sa = g(&a).signum();
    let cap = 4 * a.precision();
    for _ in 0..cap {
        let mid = (&a + &b).mul_pow2(-1);
        if mid == a || mid == b {
            return mid;
        }
        let gm = g(&mid);
        if &(&b - &a) <= tol && &gm.abs() <= tol {
            return mid;
        }
        if gm.signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    (&a + &b).mul_pow2(-1)
}

/// A point of `[a, b]` where the unimodal `g` drops below `level`.
fn golden_below(
    g: impl Fn(&PrecisionReal) -> PrecisionReal,
    a: &PrecisionReal,
    b: &PrecisionReal,
    level: &PrecisionReal,
) -> Option<PrecisionReal> {
    let p = a.precision();
    let r = (PrecisionReal::from_i64(5, p).sqrt() - a.lit(1)).mul_pow2(-1);
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut c = &b - &(&b - &a) * &r;
    let mut d = &a + &(&b - &a) * &r;
    let (mut gc, mut gd) = (g(&c), g(&d));
    for _ in 0..2 * p {
        if &gc < level {
            return Some(c);
        }
        if &gd < level {
            return Some(d);
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = &b - &(&b - &a) * &r;
            gc = g(&c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = &a + &(&b - &a) * &r;
            gd = g(&d);
        }
        if c >= d {
            break;
        }
    }
    None
}

/// Bands and type-I energies for every level up to some `n`.
#[derive(Clone, Debug)]
pub struct BandLadder {
    pub lambda: PrecisionReal,
    pub tol: PrecisionReal,
    /// `bands[n - 1]` holds `σ_n`.
    pub bands: Vec<Vec<Band>>,
    /// `zeros[n - 1]` holds the zeros of `t_n`, ascending.
    pub zeros: Vec<Vec<PrecisionReal>>,
}

impl BandLadder {
    pub fn new(lambda: &PrecisionReal, tol: &PrecisionReal) -> Result<Self> {
        if lambda.is_zero() {
            return Err(Error::ZeroCoupling);
        }
        if !tol.is_positive() {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(Self { lambda: lambda.clone(), tol: tol.clone(), bands: Vec::new(), zeros: Vec::new() })
    }

    pub fn levels(&self) -> usize {
        self.bands.len()
    }

    /// Extends the ladder through level `n`.
    pub fn extend_to(&mut self, n: usize) -> Result<()> {
        if n > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!("level {n} exceeds {MAX_LEVEL}")));
        }
        while self.levels() < n {
            let level = self.levels() + 1;
            let bands = self.compute_level(level)?;
            let zeros = self.zeros_in(level, &bands);
            self.bands.push(bands);
            self.zeros.push(zeros);
        }
        Ok(())
    }

    pub fn level(&self, n: usize) -> &[Band] {
        &self.bands[n - 1]
    }

    fn upper_edges(&self, n: usize) -> Vec<PrecisionReal> {
        let l2 = self.lambda.square();
        let one = l2.lit(1);
        let mut edges = if n == 1 {
            let r = (&l2 + l2.lit(4)).sqrt();
            vec![-&r, r]
        } else {
            let s = (&one + &l2).sqrt();
            vec![-(&one + &s), -(&s - &one), &s - &one, &one + &s]
        };
        for j in 1..n.saturating_sub(1) {
            for z in &self.zeros[j - 1] {
                edges.push(z.clone());
                edges.push(z.clone());
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).expect("finite edge"));
        edges
    }

    fn compute_level(&self, n: usize) -> Result<Vec<Band>> {
        let expected = 1usize << n;
        let upper = self.upper_edges(n);
        if upper.len() != expected {
            return Err(Error::BandIsolation { level: n, found: upper.len(), expected });
        }
        let lambda = &self.lambda;
        let tol = &self.tol;
        let g = |e: &PrecisionReal| trace_at(e, lambda, n);
        let lower_level = lambda.lit(-2);
        let pairs: Vec<(PrecisionReal, PrecisionReal)> =
            upper.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect();
        let found: Vec<Option<[Band; 2]>> = pairs
            .par_iter()
            .map(|(p, q)| {
                let m = golden_below(g, p, q, &lower_level)?;
                let plus2 = |e: &PrecisionReal| g(e) + e.lit(2);
                let r1 = bisect(plus2, p, &m, tol);
                let r2 = bisect(plus2, &m, q, tol);
                Some([
                    Band { lo: p.clone(), hi: r1, trace_lo: 2, trace_hi: -2, level: n },
                    Band { lo: r2, hi: q.clone(), trace_lo: -2, trace_hi: 2, level: n },
                ])
            })
            .collect();
        let bands: Vec<Band> = found.into_iter().flatten().flatten().collect();
        if bands.len() != expected {
            return Err(Error::BandIsolation { level: n, found: bands.len(), expected });
        }
        Ok(bands)
    }

    fn zeros_in(&self, n: usize, bands: &[Band]) -> Vec<PrecisionReal> {
        let lambda = &self.lambda;
        bands
            .par_iter()
            .map(|b| bisect(|e| trace_at(e, lambda, n), &b.lo, &b.hi, &self.tol))
            .collect()
    }
}

/// The `2^n` bands of `σ_n`.
pub fn sigma_bands(lambda: &PrecisionReal, n: usize, tol: &PrecisionReal) -> Result<Vec<Band>> {
    if n == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let mut ladder = BandLadder::new(lambda, tol)?;
    ladder.extend_to(n)?;
    Ok(ladder.bands.pop().expect("nonempty"))
}

fn merge(bands: &[Band]) -> Vec<(PrecisionReal, PrecisionReal)> {
    let mut out: Vec<(PrecisionReal, PrecisionReal)> = Vec::new();
    for b in bands {
        match out.last_mut() {
            Some(last) if b.lo <= last.1 => {
                if b.hi > last.1 {
                    last.1 = b.hi.clone();
                }
            }
            _ => out.push((b.lo.clone(), b.hi.clone())),
        }
    }
    out
}

/// `σ_n ∪ σ_{n+1}` from an already extended ladder.
pub fn approx_from_ladder(ladder: &BandLadder, n: usize) -> SpectrumApprox {
    let mut bands: Vec<Band> = ladder.level(n).iter().chain(ladder.level(n + 1)).cloned().collect();
    bands.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite edge"));
    let components = merge(&bands);
    SpectrumApprox { level: n, bands, components }
}

/// `σ_n ∪ σ_{n+1}`.
pub fn spectrum_approx(lambda: &PrecisionReal, n: usize, tol: &PrecisionReal) -> Result<SpectrumApprox> {
    if n == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let mut ladder = BandLadder::new(lambda, tol)?;
    ladder.extend_to(n + 1)?;
    Ok(approx_from_ladder(&ladder, n))
}

/// The zeros of `t_k`, one inside each band of `σ_k`.
pub fn type1_energies(lambda: &PrecisionReal, k: usize, tol: &PrecisionReal) -> Result<Vec<PrecisionReal>> {
    if k == 0 || k > 20 {
        return Err(Error::InvalidArgument(format!("type-I level {k} outside 1..=20")));
    }
    let mut ladder = BandLadder::new(lambda, tol)?;
    ladder.extend_to(k)?;
    Ok(ladder.zeros.pop().expect("nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(x: f64) -> PrecisionReal {
        PrecisionReal::from_f64(x, 256)
    }

    fn close(a: &PrecisionReal, b: &PrecisionReal, eps: f64) -> bool {
        (a - b).abs().to_f64() < eps
    }

    #[test]
    fn first_level_closed_form() {
        let b = sigma_bands(&pr(1.0), 1, &pr(1e-12)).unwrap();
        let r5 = pr(5.0).sqrt();
        assert_eq!(b.len(), 2);
        assert!(close(&b[0].lo, &-&r5, 1e-12) && close(&b[0].hi, &pr(-1.0), 1e-12));
        assert!(close(&b[1].lo, &pr(1.0), 1e-12) && close(&b[1].hi, &r5, 1e-12));
        assert_eq!((b[1].trace_lo, b[1].trace_hi), (-2, 2));
    }

    #[test]
    fn second_level_inside_annulus() {
        let b = sigma_bands(&pr(1.0), 2, &pr(1e-12)).unwrap();
        assert_eq!(b.len(), 4);
        let s2 = pr(2.0).sqrt();
        let (lo, hi) = (&s2 - pr(1.0), &s2 + pr(1.0));
        for band in &b {
            for e in [band.lo.abs(), band.hi.abs()] {
                assert!(e >= &lo - pr(1e-12) && e <= &hi + pr(1e-12));
            }
        }
    }

    #[test]
    fn edges_hit_their_trace_values() {
        let tol = default_tol(256);
        for l in [0.5, 1.0, 2.0] {
            let b = sigma_bands(&pr(l), 6, &tol).unwrap();
            assert_eq!(b.len(), 64);
            for band in &b {
                assert!(band.lo < band.hi);
                let tl = trace_at(&band.lo, &pr(l), 6);
                let th = trace_at(&band.hi, &pr(l), 6);
                assert!(close(&tl, &pr(band.trace_lo as f64), 1e-9), "{l}: {tl}");
                assert!(close(&th, &pr(band.trace_hi as f64), 1e-9), "{l}: {th}");
            }
        }
    }

    #[test]
    fn trace_is_monotone_inside_bands() {
        let b = sigma_bands(&pr(1.0), 5, &default_tol(256)).unwrap();
        for band in &b {
            let vals: Vec<f64> = (0..=16)
                .map(|i| {
                    let e = &band.lo + &(band.width() * pr(i as f64 / 16.0));
                    trace_at(&e, &pr(1.0), 5).to_f64()
                })
                .collect();
            let up = band.trace_hi > band.trace_lo;
            assert!(vals.windows(2).all(|w| if up { w[1] >= w[0] } else { w[1] <= w[0] }));
        }
    }

    #[test]
    fn zero_is_never_in_a_band() {
        let z = pr(0.0);
        for l in [0.3, 1.0, 2.5] {
            let a = spectrum_approx(&pr(l), 5, &default_tol(256)).unwrap();
            assert!(!a.contains(&z));
        }
    }

    #[test]
    fn approximation_covers_first_type_one_energy() {
        let a = spectrum_approx(&pr(1.0), 1, &default_tol(256)).unwrap();
        assert!(a.contains(&pr(3.0).sqrt()));
    }

    #[test]
    fn type_one_closed_form() {
        let z = type1_energies(&pr(1.0), 1, &default_tol(256)).unwrap();
        let r3 = pr(3.0).sqrt();
        assert_eq!(z.len(), 2);
        assert!(close(&z[0], &-&r3, 1e-18) && close(&z[1], &r3, 1e-18));
    }

    #[test]
    fn type_one_energies_freeze_later_traces() {
        let tol = default_tol(256);
        let z = type1_energies(&pr(1.0), 4, &tol).unwrap();
        assert_eq!(z.len(), 16);
        for e in &z {
            let t = traces_only(e, &pr(1.0), 12);
            assert!(t[3].abs() < tol);
            for tj in &t[5..12] {
                assert!(close(tj, &pr(2.0), 1e-9));
            }
        }
    }

    #[test]
    fn zero_coupling_rejected() {
        assert_eq!(sigma_bands(&pr(0.0), 2, &pr(1e-9)).unwrap_err(), Error::ZeroCoupling);
    }
}
