//! The trace map `f(x, y) = (x²(y-2)+2, x²y²(y-2)+2)`, its inverse branches,
//! the strip `S = {|x| ≤ 1, y ≤ x² - 2}`, and the search for energies whose
//! trace orbit stays in `S`.
//!
//! One unit of depth is one application of `f`, which advances the trace
//! index by two: `f(t_k, t_{k+1}) = (t_{k+2}, t_{k+3})`.
//!
//! The search narrows an energy interval one step at a time. On `I_j` the
//! coordinate `x_j = t_{k+2j}` covers `[-1, 1]`. If it changes sign, the
//! half on the side of the wanted symbol is kept, starting at the zero `c`
//! where `x_{j+1} = 2`, and cut down to where `x_{j+1}` runs from `1` to `-1`.
//! Otherwise the sign must already match, and the first component of
//! `{|x_{j+1}| ≤ 1}` found on a grid becomes `I_{j+1}`. The result is
//! re-verified by iterating `f` at the final energy with a shadow run.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::PrecisionReal;
use crate::tracemap::{shadow_divergence, traces_only};

/// Precision ceiling for the adaptive search.
pub const MAX_BITS: usize = 1 << 15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point2 {
    pub x: PrecisionReal,
    pub y: PrecisionReal,
}

impl Point2 {
    pub fn new(x: PrecisionReal, y: PrecisionReal) -> Self {
        Self { x, y }
    }

    pub fn from_f64(x: f64, y: f64, bits: usize) -> Self {
        Self::new(PrecisionReal::from_f64(x, bits), PrecisionReal::from_f64(y, bits))
    }

    pub fn precision(&self) -> usize {
        self.x.min_prec(&self.y)
    }

    pub fn with_precision(&self, bits: usize) -> Result<Self> {
        Ok(Self::new(self.x.with_precision(bits)?, self.y.with_precision(bits)?))
    }

    pub fn in_strip(&self) -> bool {
        let one = self.x.lit(1);
        self.x.abs() <= one && self.y <= self.x.square() - self.x.lit(2)
    }

    /// `x² - y - 2`, nonnegative on `S`.
    pub fn parabola_gap(&self) -> PrecisionReal {
        self.x.square() - &self.y - self.x.lit(2)
    }
}

pub fn f_map(p: &Point2) -> Point2 {
    let two = p.x.lit(2);
    let x2 = p.x.square();
    let ym2 = &p.y - &two;
    let x1 = &x2 * &ym2 + &two;
    let y1 = x2 * p.y.square() * ym2 + two;
    Point2::new(x1, y1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    fn apply(self, x: PrecisionReal) -> PrecisionReal {
        match self {
            Sign::Minus => -x,
            Sign::Plus => x,
        }
    }
}

/// The inverse branch with `x`-sign `eps` and `y`-sign `eta`.
/// `F_0 = (-, -)`, `F_1 = (+, -)`, `F_2 = (-, +)`, `F_3 = (+, +)`.
pub fn inverse_branch(p: &Point2, eps: Sign, eta: Sign) -> Result<Point2> {
    let two = p.x.lit(2);
    let lower = p.x < two && p.y < two;
    let upper = p.x > two && p.y > two;
    let line = &p.y - p.x.lit(4) * &p.x + p.x.lit(6);
    let in_domain = match eta {
        Sign::Minus => lower,
        Sign::Plus => (lower || upper) && line.is_positive(),
    };
    if !in_domain {
        return Err(Error::OutsideBranchDomain);
    }
    let r = ((&two - &p.y) / (&two - &p.x)).sqrt();
    let y = eta.apply(r);
    let x = eps.apply(((&two - &p.x) / (&two - &y)).sqrt());
    Ok(Point2::new(x, y))
}

/// `F_0 .. F_3` by index.
pub fn branch_signs(index: usize) -> (Sign, Sign) {
    match index {
        0 => (Sign::Minus, Sign::Minus),
        1 => (Sign::Plus, Sign::Minus),
        2 => (Sign::Minus, Sign::Plus),
        _ => (Sign::Plus, Sign::Plus),
    }
}

/// Symbol `0` for `x < 0`, `1` for `x > 0`; an exact zero goes to `0`.
pub fn symbol(x: &PrecisionReal) -> u8 {
    u8::from(x.is_positive())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub start: Point2,
    pub points: Vec<Point2>,
    pub in_s: Vec<bool>,
    /// One symbol per point before the escape.
    pub itinerary: Vec<u8>,
    pub escape_index: Option<usize>,
    /// `a_j = x_j² - y_j - 2` for each point in `S`.
    pub parabola_gaps: Vec<PrecisionReal>,
    /// Indices where `x` was exactly zero.
    pub ties: Vec<usize>,
}

impl OrbitRecord {
    /// Whether `a_j ≥ 3^j a_0` along the recorded points in `S`.
    pub fn escape_rate_holds(&self) -> bool {
        let Some(a0) = self.parabola_gaps.first() else { return true };
        let mut bound = a0.clone();
        for a in &self.parabola_gaps {
            if a < &bound {
                return false;
            }
            bound = bound * a0.lit(3);
        }
        true
    }

    /// Length of the run in `S` from the start.
    pub fn run_length(&self) -> usize {
        self.in_s.iter().take_while(|&&b| b).count()
    }
}

/// Iterates `f` from `p` up to `max_iter` times, stopping at the first point
/// outside `S`. A shadow orbit at half precision guards every point.
pub fn orbit_in_s(p: &Point2, max_iter: usize) -> Result<OrbitRecord> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let bits = p.precision();
    let shadow_bits = (bits / 2).max(PrecisionReal::MIN_BITS);
    let limit = -((bits / 8) as f64);
    let mut cur = p.clone();
    let mut shadow = p.with_precision(shadow_bits)?;
    let mut rec = OrbitRecord {
        start: p.clone(),
        points: Vec::new(),
        in_s: Vec::new(),
        itinerary: Vec::new(),
        escape_index: None,
        parabola_gaps: Vec::new(),
        ties: Vec::new(),
    };
    for j in 0..=max_iter {
        if bits > PrecisionReal::MIN_BITS
            && (PrecisionReal::log2_mixed_diff(&cur.x, &shadow.x) > limit
                || PrecisionReal::log2_mixed_diff(&cur.y, &shadow.y) > limit)
        {
            return Err(Error::PrecisionExhausted { index: j.saturating_sub(1) });
        }
        let inside = cur.in_strip();
        rec.points.push(cur.clone());
        rec.in_s.push(inside);
        if !inside {
            rec.escape_index = Some(j);
            break;
        }
        if cur.x.is_zero() {
            rec.ties.push(j);
        }
        rec.itinerary.push(symbol(&cur.x));
        rec.parabola_gaps.push(cur.parabola_gap());
        if j < max_iter {
            cur = f_map(&cur);
            shadow = f_map(&shadow);
        }
    }
    Ok(rec)
}

/// `φ_k(E) = (t_k(E), t_{k+1}(E))`.
pub fn trace_point(e: &PrecisionReal, lambda: &PrecisionReal, k: usize) -> Point2 {
    let mut t = traces_only(e, lambda, k + 1);
    let y = t.pop().expect("k >= 1");
    let x = t.pop().expect("k >= 1");
    Point2::new(x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    TypeII,
    TypeIII,
}

impl Target {
    fn parity(self) -> usize {
        match self {
            Target::TypeII => 0,
            Target::TypeIII => 1,
        }
    }
}

/// Report of a successful search.
#[derive(Clone, Debug, Serialize)]
pub struct HuntResult {
    pub lambda: PrecisionReal,
    #[serde(rename = "E")]
    pub energy: PrecisionReal,
    pub prec_bits: usize,
    pub witness_k: usize,
    pub itinerary: Vec<u8>,
    pub depth_verified: usize,
}

enum Failure {
    Precision,
    Infeasible(usize),
}

type Step<T> = std::result::Result<T, Failure>;

const VALUE_TOL_BITS: i32 = 40;
const GRID: usize = 64;
const GRID_MAX: usize = 4096;

fn mid(a: &PrecisionReal, b: &PrecisionReal) -> PrecisionReal {
    (a + b).mul_pow2(-1)
}

/// Bisects `g` between `a` and `b` (either order) until `done` accepts the midpoint.
fn bisect_until(
    g: &dyn Fn(&PrecisionReal) -> PrecisionReal,
    done: &dyn Fn(&PrecisionReal, &PrecisionReal) -> bool,
    a: &PrecisionReal,
    b: &PrecisionReal,
) -> Step<PrecisionReal> {
    let (mut a, mut b) = (a.clone(), b.clone());
    let sa = g(&a).signum();
    loop {
        let m = mid(&a, &b);
        if m == a || m == b {
            return Err(Failure::Precision);
        }
        let gm = g(&m);
        if done(&m, &gm) {
            return Ok(m);
        }
        if gm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
}

/// Zero of `g` between `a` and `b`, to `|g| < 2^-40`.
fn bisect_value(g: &dyn Fn(&PrecisionReal) -> PrecisionReal, a: &PrecisionReal, b: &PrecisionReal) -> Step<PrecisionReal> {
    let tol = a.lit(1).mul_pow2(-VALUE_TOL_BITS);
    bisect_until(g, &|_, gm| gm.abs() < tol, a, b)
}

/// Boundary of `pred` between `good` and `bad`, to a relative width `2^-48`.
fn bisect_pred(pred: &dyn Fn(&PrecisionReal) -> bool, good: &PrecisionReal, bad: &PrecisionReal) -> PrecisionReal {
    let floor = (bad - good).abs().mul_pow2(-48);
    let (mut good, mut bad) = (good.clone(), bad.clone());
    while (&bad - &good).abs() > floor {
        let m = mid(&good, &bad);
        if m == good || m == bad {
            break;
        }
        if pred(&m) {
            good = m;
        } else {
            bad = m;
        }
    }
    good
}

/// First component of `{pred}` in `[a, b]`, located on a grid that doubles
/// until a hit appears.
fn first_component(
    pred: &(dyn Fn(&PrecisionReal) -> bool + Sync),
    a: &PrecisionReal,
    b: &PrecisionReal,
) -> Option<(PrecisionReal, PrecisionReal)> {
    let mut n = GRID;
    while n <= GRID_MAX {
        let step = (b - a) / PrecisionReal::from_i64(n as i64, a.precision());
        let pts: Vec<PrecisionReal> = (0..=n).map(|i| a + &(&step * &a.lit(i as i64))).collect();
        let ok: Vec<bool> = pts.par_iter().map(pred).collect();
        if let Some(g) = ok.iter().position(|&v| v) {
            let mut lo = g;
            while lo > 0 && ok[lo - 1] {
                lo -= 1;
            }
            let mut hi = g;
            while hi < n && ok[hi + 1] {
                hi += 1;
            }
            let p = if lo == 0 { pts[0].clone() } else { bisect_pred(pred, &pts[lo], &pts[lo - 1]) };
            let q = if hi == n { pts[n].clone() } else { bisect_pred(pred, &pts[hi], &pts[hi + 1]) };
            return Some((p, q));
        }
        n *= 2;
    }
    None
}

/// One nesting round: from `I_j` on which `x_j` covers `[-1, 1]` to `I_{j+1}`.
fn refine(
    x: &(dyn Fn(&PrecisionReal, usize) -> PrecisionReal + Sync),
    interval: (PrecisionReal, PrecisionReal),
    j: usize,
    want: u8,
) -> Step<(PrecisionReal, PrecisionReal)> {
    let (a, b) = interval;
    let (xa, xb) = (x(&a, j), x(&b, j));
    let next = |e: &PrecisionReal| x(e, j + 1);
    if xa.is_positive() != xb.is_positive() {
        // x_{j+1} = 2 - x_j² |y_j| near the zero of x_j, and |y_j| grows doubly
        // exponentially, so the zero is refined until x_{j+1} is near 2.
        let high = PrecisionReal::from_ratio(3, 2, a.precision());
        let c = bisect_until(&|e| x(e, j), &|m, _| next(m) > high, &a, &b)?;
        let end = if symbol(&xa) == want { a.clone() } else { b.clone() };
        let at_end = next(&end);
        if at_end >= at_end.lit(1) {
            return Err(Failure::Infeasible(j));
        }
        let p = bisect_value(&|e| next(e) - e.lit(1), &c, &end)?;
        let q = if at_end < at_end.lit(-1) { bisect_value(&|e| next(e) + e.lit(1), &p, &end)? } else { end };
        Ok(if p < q { (p, q) } else { (q, p) })
    } else {
        if symbol(&xa) != want {
            return Err(Failure::Infeasible(j));
        }
        let pred = |e: &PrecisionReal| next(e).abs() <= e.lit(1);
        first_component(&pred, &a, &b).ok_or(Failure::Infeasible(j))
    }
}

fn symbol_at(itinerary: &[u8], j: usize) -> u8 {
    itinerary[j.min(itinerary.len() - 1)]
}

/// Nested-interval search on a one-parameter curve. `x(s, j)` is the
/// `x`-coordinate of the `j`-th iterate at parameter `s`.
fn nest(
    x: &(dyn Fn(&PrecisionReal, usize) -> PrecisionReal + Sync),
    start: (PrecisionReal, PrecisionReal),
    itinerary: &[u8],
    depth: usize,
) -> Step<PrecisionReal> {
    let mut interval = start;
    for j in 0..depth {
        interval = refine(x, interval, j, symbol_at(itinerary, j))?;
    }
    Ok(mid(&interval.0, &interval.1))
}

fn check_itinerary(itinerary: &[u8], depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if itinerary.is_empty() || itinerary.iter().any(|&s| s > 1) {
        return Err(Error::InvalidArgument("itinerary must be a nonempty word over {0, 1}".into()));
    }
    Ok(())
}

fn padded(itinerary: &[u8], depth: usize) -> Vec<u8> {
    (0..depth).map(|j| symbol_at(itinerary, j)).collect()
}

/// Smallest `k` of the target parity whose point `φ_k` lies in `S` somewhere
/// in the window, with the component of `{|t_k| ≤ 1}` around the first hit.
fn locate_start(
    lambda: &PrecisionReal,
    window: &(PrecisionReal, PrecisionReal),
    target: Target,
) -> Option<(usize, (PrecisionReal, PrecisionReal))> {
    let first = if target.parity() == 1 { 1 } else { 2 };
    for k in (first..=16).step_by(2) {
        let in_s = |e: &PrecisionReal| trace_point(e, lambda, k).in_strip();
        if let Some((lo, hi)) = first_component(&in_s, &window.0, &window.1) {
            let small = |e: &PrecisionReal| trace_at_k(e, lambda, k).abs() <= e.lit(1);
            let (a, b) = grow(&small, &lo, &hi, window);
            return Some((k, (a, b)));
        }
    }
    None
}

fn trace_at_k(e: &PrecisionReal, lambda: &PrecisionReal, k: usize) -> PrecisionReal {
    traces_only(e, lambda, k).pop().expect("k >= 1")
}

/// Extends `[lo, hi]` to the full component of `pred` inside the window.
fn grow(
    pred: &dyn Fn(&PrecisionReal) -> bool,
    lo: &PrecisionReal,
    hi: &PrecisionReal,
    window: &(PrecisionReal, PrecisionReal),
) -> (PrecisionReal, PrecisionReal) {
    let a = if pred(&window.0) { window.0.clone() } else { bisect_pred(pred, lo, &window.0) };
    let b = if pred(&window.1) { window.1.clone() } else { bisect_pred(pred, hi, &window.1) };
    (a, b)
}

/// Finds an energy in `window` whose orbit `φ_k(E), f(φ_k(E)), …` stays in `S`
/// for `depth` steps with the given itinerary, `k` odd for type III and even
/// for type II. Precision starts at `max(256, bits of λ)` and doubles until
/// a shadow run confirms every verified level.
pub fn find_typed_energy(
    lambda: &PrecisionReal,
    window: (PrecisionReal, PrecisionReal),
    target: Target,
    itinerary: &[u8],
    depth: usize,
) -> Result<HuntResult> {
    check_itinerary(itinerary, depth)?;
    if lambda.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    let (wa, wb) = window;
    if wa >= wb {
        return Err(Error::InvalidArgument("empty window".into()));
    }
    let mut bits = lambda.precision().max(PrecisionReal::DEFAULT_BITS);
    let mut last_failure = Error::PrecisionExhausted { index: 0 };
    while bits <= MAX_BITS {
        let l = lambda.with_precision(bits)?;
        let win = (wa.with_precision(bits)?, wb.with_precision(bits)?);
        let (k, start) = locate_start(&l, &win, target).ok_or(Error::WindowMissesSpectrum)?;
        let x = |e: &PrecisionReal, j: usize| trace_at_k(e, &l, k + 2 * j);
        match nest(&x, start, itinerary, depth) {
            Ok(e) => {
                let top = k + 2 * depth + 1;
                if shadow_divergence(&e, &l, top).is_none() {
                    match orbit_in_s(&trace_point(&e, &l, k), depth) {
                        Ok(rec) if rec.run_length() > depth && rec.itinerary[..depth] == padded(itinerary, depth)[..] => {
                            return Ok(HuntResult {
                                lambda: l,
                                energy: e,
                                prec_bits: bits,
                                witness_k: k,
                                itinerary: padded(itinerary, depth),
                                depth_verified: depth,
                            });
                        }
                        Ok(rec) => {
                            last_failure = Error::ItineraryInfeasible { depth: rec.run_length().min(depth) };
                        }
                        Err(err) => last_failure = err,
                    }
                }
            }
            Err(Failure::Precision) => last_failure = Error::PrecisionExhausted { index: k },
            Err(Failure::Infeasible(j)) => return Err(Error::ItineraryInfeasible { depth: j }),
        }
        bits *= 2;
    }
    Err(last_failure)
}

/// Samples the coupling set where `E = ±λ` is type III: finds `y ∈ [5/4, 7/4]`
/// whose orbit from `f(-2, y)` follows the itinerary for `depth` steps and
/// returns `(λ, y)` with `λ = √(2-y)/2`.
pub fn gamma_coupling_sample(itinerary: &[u8], depth: usize, bits: usize) -> Result<(PrecisionReal, PrecisionReal)> {
    check_itinerary(itinerary, depth)?;
    let mut bits = bits.max(PrecisionReal::DEFAULT_BITS);
    let mut last_failure = Error::PrecisionExhausted { index: 0 };
    while bits <= MAX_BITS {
        let start = |y: &PrecisionReal| f_map(&Point2::new(y.lit(-2), y.clone()));
        let x = |y: &PrecisionReal, j: usize| {
            let mut p = start(y);
            for _ in 0..j {
                p = f_map(&p);
            }
            p.x
        };
        let lo = PrecisionReal::from_ratio(5, 4, bits);
        let hi = PrecisionReal::from_ratio(7, 4, bits);
        match nest(&x, (lo, hi), itinerary, depth) {
            Ok(y) => match orbit_in_s(&start(&y), depth) {
                Ok(rec) if rec.run_length() > depth && rec.itinerary[..depth] == padded(itinerary, depth)[..] => {
                    let lambda = (y.lit(2) - &y).sqrt().mul_pow2(-1);
                    return Ok((lambda, y));
                }
                Ok(rec) => last_failure = Error::ItineraryInfeasible { depth: rec.run_length().min(depth) },
                Err(err) => last_failure = err,
            },
            Err(Failure::Precision) => last_failure = Error::PrecisionExhausted { index: 0 },
            Err(Failure::Infeasible(j)) => return Err(Error::ItineraryInfeasible { depth: j }),
        }
        bits *= 2;
    }
    Err(last_failure)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EnergyClass {
    TypeI,
    TypeII,
    TypeIII,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyClassification {
    pub class: EnergyClass,
    pub witness_k: Option<usize>,
    pub depth_verified: usize,
    /// First orbit step outside `S`, when the run ended inside the data.
    pub escape_step: Option<usize>,
    pub diagnostic: Option<String>,
}

/// Classifies `E` from its trace orbit.
///
/// Type I when some reliable `|t_k| < tol`. Otherwise the smallest `k` whose
/// orbit `φ_k, φ_{k+2}, …` stays in `S` for at least two points decides the
/// class by its parity; the run length is reported as the verified depth.
pub fn classify_energy(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    depth: usize,
    tol: &PrecisionReal,
) -> Result<EnergyClassification> {
    if depth < 2 {
        return Err(Error::InvalidArgument("depth must be at least 2".into()));
    }
    if lambda.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    let n = 2 * depth + 2;
    let flagged = shadow_divergence(e, lambda, n);
    let reliable = flagged.map_or(n, |i| i - 1);
    let t = traces_only(e, lambda, n);
    let t = &t[..reliable.min(n)];
    let undetermined = |msg: &str| EnergyClassification {
        class: EnergyClass::Undetermined,
        witness_k: None,
        depth_verified: 0,
        escape_step: None,
        diagnostic: Some(msg.to_string()),
    };
    if let Some(k) = t.iter().position(|x| &x.abs() < tol) {
        return Ok(EnergyClassification {
            class: EnergyClass::TypeI,
            witness_k: Some(k + 1),
            depth_verified: 0,
            escape_step: None,
            diagnostic: None,
        });
    }
    for k in 1..t.len() {
        let mut run = 0;
        let mut escape = None;
        let mut i = k;
        while i < t.len() {
            let p = Point2::new(t[i - 1].clone(), t[i].clone());
            if !p.in_strip() {
                escape = Some(run);
                break;
            }
            run += 1;
            i += 2;
        }
        if run >= 2 {
            return Ok(EnergyClassification {
                class: if k % 2 == 0 { EnergyClass::TypeII } else { EnergyClass::TypeIII },
                witness_k: Some(k),
                depth_verified: run,
                escape_step: escape,
                diagnostic: escape.map(|s| format!("orbit leaves the strip after {s} steps")),
            });
        }
    }
    let two = e.lit(2);
    if t.windows(2).any(|w| w[0].abs() > two && w[1].abs() > two) {
        return Ok(undetermined("outside spectrum approximation"));
    }
    Ok(undetermined("no stabilized pattern"))
}
