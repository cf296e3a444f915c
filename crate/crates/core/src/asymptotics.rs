//! Rates and limit shapes at type-II and type-III energies.
//!
//! For a type-II energy the odd traces diverge and the even ones vanish:
//! `|t_{2n-1}| ≈ e^{2^n γ}/2`, `|t_{2n}| ≈ 2 e^{-2^n γ}`. Type III swaps the
//! parities: `|t_{2n}| ≈ e^{2^n γ}/2`, `|t_{2n+1}| ≈ 2 e^{-2^n γ}`. Everything
//! here is driven by a trace sequence and high-precision dyadic matrices
//! at an energy found by [`crate::dynamics::find_typed_energy`].
//!
//! Residuals that shrink like `e^{-2^n γ}` leave the machine range after a
//! handful of levels, so they are reported as natural logarithms.

use serde::Serialize;

use crate::dynamics::Target;
use crate::error::{Error, Result};
use crate::numerics::PrecisionReal;
use crate::tracemap::{coupling_angle, trace_seq, TraceSequence};
use crate::transfer::{basis, dyadic_pairs_hp, PrecisionDyadicPair, PrecisionMat2};

/// Signs read off a trace sequence.
///
/// `eta` is the eventual sign of `μ_n`, `eta_hat` that of `ν_n`;
/// `xi[n-1] = -sign t_{2n}`, `xi_hat[n-1] = -sign t_{2n-1}`, and the
/// deltas are their running products.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Signs {
    pub eta: i32,
    pub eta_hat: i32,
    pub xi: Vec<i32>,
    pub delta: Vec<i32>,
    pub xi_hat: Vec<i32>,
    pub delta_hat: Vec<i32>,
}

impl Signs {
    /// `δ_n` for `n ≥ 1`.
    pub fn delta(&self, n: usize) -> i32 {
        self.delta[n - 1]
    }

    /// `δ̂_n` for `n ≥ 1`.
    pub fn delta_hat(&self, n: usize) -> i32 {
        self.delta_hat[n - 1]
    }
}

fn running_product(xs: &[i32]) -> Vec<i32> {
    xs.iter()
        .scan(1, |acc, &x| {
            *acc *= x;
            Some(*acc)
        })
        .collect()
}

pub fn sign_bookkeeping(seq: &TraceSequence) -> Signs {
    let len = seq.len();
    let xi: Vec<i32> = (1..=len / 2).map(|n| -seq.t(2 * n).signum()).collect();
    let xi_hat: Vec<i32> = (1..=len.div_ceil(2)).map(|n| -seq.t(2 * n - 1).signum()).collect();
    let eta = seq.mus().last().map_or(0, |m| m.signum());
    let eta_hat = seq.nus().last().map_or(0, |m| m.signum());
    Signs { eta, eta_hat, delta: running_product(&xi), xi, delta_hat: running_product(&xi_hat), xi_hat }
}

/// One level of the refined products, each expected to approach its constant.
#[derive(Clone, Debug, Serialize)]
pub struct RefinedRate {
    pub n: usize,
    /// `e^{2^n γ} |t_small|`, limit 2.
    pub small: f64,
    /// `e^{-2^n γ} |t_large|`, limit 1/2.
    pub large: f64,
    /// `|μ_n| e^{-2^n γ}` (limit 1/2) for type II, `|μ_n| e^{-2^{n-1} γ}` (limit 1/√2) for type III.
    pub mu: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    pub gamma: PrecisionReal,
    /// `(trace index m, γ_m)`.
    pub residuals: Vec<(usize, f64)>,
    /// Telescoped gaps `2^{n+1}(γ_{next} - γ_{prev})` of the divergent subsequence, limit `ln 2`.
    pub telescoped: Vec<(usize, f64)>,
    /// `ln |telescoped_n - ln 2|`, computed before rounding to machine precision.
    pub telescoped_ln_dev: Vec<(usize, f64)>,
    pub refined: Vec<RefinedRate>,
    /// Difference of the last two extrapolated values.
    pub error: f64,
    pub type_tag: Target,
}

/// Indices `(large, small)` of the trace pair at level `n`.
fn pair(tag: Target, n: usize) -> (usize, usize) {
    match tag {
        Target::TypeII => (2 * n - 1, 2 * n),
        Target::TypeIII => (2 * n, 2 * n + 1),
    }
}

/// Estimates `γ` from the divergent trace subsequence with the `ln 2 / 2^n`
/// correction, and reports the rate diagnostics at every level.
pub fn estimate_gamma(seq: &TraceSequence, tag: Target) -> Result<GammaEstimate> {
    let levels = (1..).take_while(|&n| pair(tag, n).1 <= seq.len()).count();
    if levels < 3 {
        return Err(Error::NotAsymptotic("fewer than three trace pairs".into()));
    }
    let p = seq.precision();
    let ln2 = PrecisionReal::from_i64(2, p).ln();
    let mut residuals = Vec::new();
    let mut large_rates = Vec::new();
    let mut extrapolated = Vec::new();
    for n in 1..=levels {
        let (li, si) = pair(tag, n);
        let scale = PrecisionReal::one(p).mul_pow2(n as i32);
        let g_large = seq.t(li).abs().ln() / &scale;
        let g_small = -(seq.t(si).abs().ln()) / &scale;
        residuals.push((li, g_large.to_f64()));
        residuals.push((si, g_small.to_f64()));
        extrapolated.push(&g_large + &(&ln2 / &scale));
        large_rates.push(g_large);
    }
    residuals.sort_by_key(|r| r.0);
    let gamma = extrapolated.last().expect("levels >= 3").clone();
    if !gamma.is_positive() {
        return Err(Error::NotAsymptotic("nonpositive rate".into()));
    }
    let error = (&extrapolated[levels - 1] - &extrapolated[levels - 2]).abs().to_f64();
    let gaps: Vec<PrecisionReal> =
        (1..levels).map(|n| (&large_rates[n] - &large_rates[n - 1]).mul_pow2(n as i32 + 1)).collect();
    let telescoped: Vec<(usize, f64)> = gaps.iter().enumerate().map(|(i, g)| (i + 1, g.to_f64())).collect();
    let telescoped_ln_dev: Vec<(usize, f64)> =
        gaps.iter().enumerate().map(|(i, g)| (i + 1, (g - &ln2).ln_abs())).collect();
    let gf = gamma.to_f64();
    let refined = (1..=levels)
        .map(|n| {
            let (li, si) = pair(tag, n);
            let x = gf * 2f64.powi(n as i32);
            let mu_shift = match tag {
                Target::TypeII => x,
                Target::TypeIII => x / 2.0,
            };
            RefinedRate {
                n,
                small: (seq.t(si).ln_abs() + x).exp(),
                large: (seq.t(li).ln_abs() - x).exp(),
                mu: (seq.mu(n.min(seq.mus().len())).ln_abs() - mu_shift).exp(),
            }
        })
        .collect();
    let best = telescoped_ln_dev.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let last = telescoped_ln_dev.last().expect("levels >= 3").1;
    if last > best + 10f64.ln() && last > 1e-6f64.ln() {
        return Err(Error::NotAsymptotic("telescoped gaps diverge from ln 2".into()));
    }
    Ok(GammaEstimate { gamma, residuals, telescoped, telescoped_ln_dev, refined, error, type_tag: tag })
}

/// Natural-log residuals of one limit law, level by level.
#[derive(Clone, Debug, Serialize)]
pub struct LawResidual {
    pub law: String,
    pub entries: Vec<(usize, f64)>,
}

impl LawResidual {
    /// Whether each of the last `count` steps drops the residual by at least `factor`.
    pub fn decays_over_last(&self, count: usize, factor: f64) -> bool {
        if self.entries.len() < count + 1 {
            return false;
        }
        let tail = &self.entries[self.entries.len() - count - 1..];
        tail.windows(2).all(|w| w[0].1 - w[1].1 >= factor.ln())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub type_tag: Target,
    pub signs: Signs,
    pub laws: Vec<LawResidual>,
    /// Fitted scalar in front of the limit matrix, per level:
    /// `c` for type II even levels, the odd-level scalar for type III.
    pub scalars: Vec<(usize, f64)>,
    pub scalars_hat: Vec<(usize, f64)>,
}

fn frob_inner(a: &PrecisionMat2, b: &PrecisionMat2) -> PrecisionReal {
    let mut acc = PrecisionReal::zero(a.precision());
    for i in 0..2 {
        for j in 0..2 {
            acc = acc + &a.m[i][j] * &b.m[i][j];
        }
    }
    acc
}

fn ln_frob(m: &PrecisionMat2) -> f64 {
    m.frobenius().ln_abs()
}

fn sign_real(s: i32, bits: usize) -> PrecisionReal {
    PrecisionReal::from_i64(s as i64, bits)
}

/// `C_± = I ∓ sec θ V ∓ tan θ W`.
pub fn c_matrix(sign: i32, sec: &PrecisionReal, tan: &PrecisionReal) -> PrecisionMat2 {
    let bits = sec.precision();
    let [_, v, w] = basis(bits);
    let s = sign_real(-sign, bits);
    PrecisionMat2::identity(bits).add(&v.scale(&(&s * sec))).add(&w.scale(&(&s * tan)))
}

/// Fits `x ≈ σ·shape` and returns `(σ, ln ‖x - σ·shape‖)`.
fn fit_shape(x: &PrecisionMat2, shape: &PrecisionMat2) -> (PrecisionReal, f64) {
    let sigma = frob_inner(x, shape) / frob_inner(shape, shape);
    let r = x.sub(&shape.scale(&sigma));
    (sigma, ln_frob(&r))
}

/// Log of `exp(a) + exp(b)`.
fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Residuals of the matrix limit laws for levels `n = 1..=depth`.
///
/// Type II: `A_{2n+1}/t_{2n+1} → (I - ηU)/2`, `B_{2n+1}/t_{2n+1} → (I + ηU)/2`,
/// `δ_n t_{2n} A_{2n} → c(V + ηW)`, `δ_n t_{2n} B_{2n} → ĉ(V - ηW)`.
/// Type III: `A_{2n}/t_{2n} → C_{η̂}/2`, `B_{2n}/t_{2n} → C_{-η̂}/2`,
/// `δ̂_n t_{2n-1} A_{2n-1} → c U C_{η̂}`, `δ̂_n t_{2n-1} B_{2n-1} → ĉ U C_{-η̂}`.
/// For the laws with an unknown scalar the residual is the distance to the
/// fitted multiple plus the step to the next level.
pub fn structure_limits(e: &PrecisionReal, lambda: &PrecisionReal, tag: Target, depth: usize) -> Result<StructureReport> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let top = 2 * depth + 2;
    let seq = trace_seq(e, lambda, top)?;
    let dy = dyadic_pairs_hp(e, lambda, top)?;
    structure_from(&seq, &dy, tag, depth)
}

pub fn structure_from(
    seq: &TraceSequence,
    dy: &[PrecisionDyadicPair],
    tag: Target,
    depth: usize,
) -> Result<StructureReport> {
    let signs = sign_bookkeeping(seq);
    let bits = seq.precision();
    let [u, v, w] = basis(bits);
    let id = PrecisionMat2::identity(bits);
    let half = PrecisionReal::from_ratio(1, 2, bits);
    let mut laws = Vec::new();
    let mut scalars = Vec::new();
    let mut scalars_hat = Vec::new();
    let need = 2 * depth + 2;
    if seq.len() < need || dy.len() <= need {
        return Err(Error::InvalidArgument(format!("data shorter than level {need}")));
    }
    match tag {
        Target::TypeII => {
            let eta = sign_real(signs.eta, bits);
            let odd_a = id.sub(&u.scale(&eta)).scale(&half);
            let odd_b = id.add(&u.scale(&eta)).scale(&half);
            let even_a = v.add(&w.scale(&eta));
            let even_b = v.sub(&w.scale(&eta));
            let mut ra = Vec::new();
            let mut rb = Vec::new();
            let mut ea = Vec::new();
            let mut eb = Vec::new();
            for n in 1..=depth {
                let t = seq.t(2 * n + 1);
                ra.push((n, ln_frob(&dy[2 * n + 1].a.scale(&(t.lit(1) / t)).sub(&odd_a))));
                rb.push((n, ln_frob(&dy[2 * n + 1].b.scale(&(t.lit(1) / t)).sub(&odd_b))));
                let x = |k: usize, m: &PrecisionMat2| m.scale(&(seq.t(2 * k) * sign_real(signs.delta(k), bits)));
                let (xa, xa1) = (x(n, &dy[2 * n].a), x(n + 1, &dy[2 * n + 2].a));
                let (xb, xb1) = (x(n, &dy[2 * n].b), x(n + 1, &dy[2 * n + 2].b));
                let (ca, sa) = fit_shape(&xa, &even_a);
                let (cb, sb) = fit_shape(&xb, &even_b);
                ea.push((n, ln_add(sa, ln_frob(&xa1.sub(&xa)))));
                eb.push((n, ln_add(sb, ln_frob(&xb1.sub(&xb)))));
                scalars.push((n, ca.to_f64()));
                scalars_hat.push((n, cb.to_f64()));
            }
            laws.push(LawResidual { law: "odd-A".into(), entries: ra });
            laws.push(LawResidual { law: "odd-B".into(), entries: rb });
            laws.push(LawResidual { law: "even-A".into(), entries: ea });
            laws.push(LawResidual { law: "even-B".into(), entries: eb });
        }
        Target::TypeIII => {
            let ang = coupling_angle(seq.energy(), seq.lambda())?;
            let (sec, tan) = (ang.sec(), ang.tan());
            let ch = signs.eta_hat;
            let c_plus = c_matrix(ch, &sec, &tan);
            let c_minus = c_matrix(-ch, &sec, &tan);
            let even_a = c_plus.scale(&half);
            let even_b = c_minus.scale(&half);
            let odd_a = u.mul(&c_plus);
            let odd_b = u.mul(&c_minus);
            let mut ra = Vec::new();
            let mut rb = Vec::new();
            let mut oa = Vec::new();
            let mut ob = Vec::new();
            for n in 1..=depth {
                let t = seq.t(2 * n);
                ra.push((n, ln_frob(&dy[2 * n].a.scale(&(t.lit(1) / t)).sub(&even_a))));
                rb.push((n, ln_frob(&dy[2 * n].b.scale(&(t.lit(1) / t)).sub(&even_b))));
                let x = |k: usize, m: &PrecisionMat2| {
                    m.scale(&(seq.t(2 * k - 1) * sign_real(signs.delta_hat(k), bits)))
                };
                let (xa, xa1) = (x(n, &dy[2 * n - 1].a), x(n + 1, &dy[2 * n + 1].a));
                let (xb, xb1) = (x(n, &dy[2 * n - 1].b), x(n + 1, &dy[2 * n + 1].b));
                let (ca, sa) = fit_shape(&xa, &odd_a);
                let (cb, sb) = fit_shape(&xb, &odd_b);
                oa.push((n, ln_add(sa, ln_frob(&xa1.sub(&xa)))));
                ob.push((n, ln_add(sb, ln_frob(&xb1.sub(&xb)))));
                scalars.push((n, ca.to_f64()));
                scalars_hat.push((n, cb.to_f64()));
            }
            laws.push(LawResidual { law: "even-A".into(), entries: ra });
            laws.push(LawResidual { law: "even-B".into(), entries: rb });
            laws.push(LawResidual { law: "odd-A".into(), entries: oa });
            laws.push(LawResidual { law: "odd-B".into(), entries: ob });
        }
    }
    Ok(StructureReport { type_tag: tag, signs, laws, scalars, scalars_hat })
}

/// Angle of a direction in the convention `v_θ = (cos θ, -sin θ)`, reduced to `(-π/2, π/2]`.
pub fn direction_angle(v: [f64; 2]) -> f64 {
    use std::f64::consts::PI;
    let mut a = (-v[1]).atan2(v[0]);
    while a <= -PI / 2.0 {
        a += PI;
    }
    while a > PI / 2.0 {
        a -= PI;
    }
    a
}

/// Distance between two directions modulo `π`.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    use std::f64::consts::PI;
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// `v_θ` at the given precision.
pub fn unit_vector(theta: &PrecisionReal) -> [PrecisionReal; 2] {
    [theta.cos(), -theta.sin()]
}

/// Angle `β ∈ (-π/2, π/2]` with `v_β ∥ v`, at the precision of `v`.
pub fn precise_angle(v: &[PrecisionReal; 2]) -> PrecisionReal {
    let bits = v[0].precision();
    let half_pi = PrecisionReal::pi(bits).mul_pow2(-1);
    if v[0].abs() >= v[1].abs() {
        (-(&v[1]) / &v[0]).atan()
    } else {
        // v_β with β near ±π/2: use the cotangent form.
        let b = &half_pi - (-(&v[0]) / &v[1]).atan();
        if b > half_pi {
            b - PrecisionReal::pi(bits)
        } else {
            b
        }
    }
}

/// Right singular direction of the smallest singular value.
pub fn smallest_direction(m: &PrecisionMat2) -> [PrecisionReal; 2] {
    let [[p, q], [r, s]] = &m.m;
    let a = p.square() + r.square();
    let b = p * q + r * s;
    let d = q.square() + s.square();
    let mean = (&a + &d).mul_pow2(-1);
    let rad = ((&a - &d).mul_pow2(-1).square() + b.square()).sqrt();
    let top = &mean + &rad;
    let v1 = [b.clone(), &top - &a];
    let v2 = [&top - &d, b];
    let n1 = v1[0].square() + v1[1].square();
    let n2 = v2[0].square() + v2[1].square();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    let n = n.sqrt();
    // The smallest direction is orthogonal to the largest one.
    [-(&v[1] / &n), &v[0] / &n]
}

fn to_f64_vec(v: &[PrecisionReal; 2]) -> [f64; 2] {
    [v[0].to_f64(), v[1].to_f64()]
}

/// `|sin ∠(a, b)|` for unit vectors.
fn sin_between(a: &[PrecisionReal; 2], b: &[PrecisionReal; 2]) -> f64 {
    (&a[0] * &b[1] - &a[1] * &b[0]).abs().to_f64()
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionPair {
    pub s: [f64; 2],
    pub s_hat: [f64; 2],
    pub angle_s: f64,
    pub angle_s_hat: f64,
    /// `|sin ∠(s_n, s_{n+1})|` along the selected subsequence.
    pub convergence: Vec<(usize, f64)>,
    #[serde(skip)]
    pub s_hp: [PrecisionReal; 2],
    #[serde(skip)]
    pub s_hat_hp: [PrecisionReal; 2],
}

/// Stable directions of `A_{2n}`, `B_{2n}` (type II) or `A_{2n-1}`, `B_{2n-1}`
/// (type III), taken at level `n = depth`.
pub fn stable_direction(e: &PrecisionReal, lambda: &PrecisionReal, tag: Target, depth: usize) -> Result<DirectionPair> {
    if depth < 2 {
        return Err(Error::InvalidArgument("depth must be at least 2".into()));
    }
    let dy = dyadic_pairs_hp(e, lambda, 2 * depth)?;
    direction_from(&dy, tag, depth)
}

pub fn direction_from(dy: &[PrecisionDyadicPair], tag: Target, depth: usize) -> Result<DirectionPair> {
    let level = |n: usize| match tag {
        Target::TypeII => 2 * n,
        Target::TypeIII => 2 * n - 1,
    };
    let s_seq: Vec<[PrecisionReal; 2]> = (1..=depth).map(|n| smallest_direction(&dy[level(n)].a)).collect();
    let h_seq: Vec<[PrecisionReal; 2]> = (1..=depth).map(|n| smallest_direction(&dy[level(n)].b)).collect();
    let convergence: Vec<(usize, f64)> =
        (1..depth).map(|n| (n, sin_between(&s_seq[n - 1], &s_seq[n]))).collect();
    let last = convergence.last().map_or(1.0, |c| c.1);
    if last > 1e-10 {
        return Err(Error::DirectionNotResolved);
    }
    let s_hp = s_seq.last().expect("depth >= 2").clone();
    let s_hat_hp = h_seq.last().expect("depth >= 2").clone();
    let (s, s_hat) = (to_f64_vec(&s_hp), to_f64_vec(&s_hat_hp));
    Ok(DirectionPair {
        s,
        s_hat,
        angle_s: direction_angle(s),
        angle_s_hat: direction_angle(s_hat),
        convergence,
        s_hp,
        s_hat_hp,
    })
}

/// The direction minimising `‖T_n v‖` for a single long product.
pub fn global_stable_direction(e: &PrecisionReal, lambda: &PrecisionReal, n: i64) -> Result<[f64; 2]> {
    let t = crate::transfer::transfer_product_hp(e, lambda, 0, n)?;
    Ok(to_f64_vec(&smallest_direction(&t)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionProfile {
    #[serde(rename = "E")]
    pub energy: PrecisionReal,
    pub lambda: PrecisionReal,
    pub initial_angle: f64,
    /// `(n, log ‖ψ_n‖)` for `-n_max ≤ n ≤ n_max`.
    pub samples: Vec<(i64, f64)>,
    /// `(m, log ‖ψ_{2^m}‖)` from the dyadic matrices.
    pub dyadic: Vec<(usize, f64)>,
    /// Slope of the dyadic-block maxima of `log ‖ψ_n‖` against `log n`, over `|n|`
    /// for type II and over `n > 0` for type III.
    pub fitted_alpha: f64,
    /// Slope of the decaying dyadic subsequence against `2^n`; about `-γ`.
    pub fitted_decay_rate: f64,
}

impl SolutionProfile {
    pub fn at(&self, n: i64) -> Option<f64> {
        let n_max = (self.samples.len() as i64 - 1) / 2;
        if n.abs() > n_max {
            return None;
        }
        Some(self.samples[(n + n_max) as usize].1)
    }
}

/// Solution values `u_n` for `n` between `-n_max` and `n_max + 1`, from
/// `(u_1, u_0) = v`.
pub fn solution_values(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    v: &[PrecisionReal; 2],
    n_max: usize,
) -> Result<Vec<(i64, PrecisionReal)>> {
    if lambda.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    let coeff = |k: i64| match crate::sequence::tm_letter(k) {
        crate::sequence::Letter::A => e - lambda,
        crate::sequence::Letter::B => e + lambda,
    };
    let (fwd, back) = rayon::join(
        || {
            let mut u = vec![v[1].clone(), v[0].clone()];
            for k in 1..=n_max as i64 {
                let next = coeff(k) * &u[k as usize] - &u[k as usize - 1];
                u.push(next);
            }
            u
        },
        || {
            // u_{k-1} = (E - V(k)) u_k - u_{k+1}
            let mut u = vec![v[0].clone(), v[1].clone()];
            for k in 0..n_max as i64 {
                let i = u.len();
                let prev = coeff(-k) * &u[i - 1] - &u[i - 2];
                u.push(prev);
            }
            u
        },
    );
    let mut out: Vec<(i64, PrecisionReal)> =
        back.into_iter().enumerate().skip(2).map(|(i, x)| (1 - i as i64, x)).collect();
    out.reverse();
    out.extend(fwd.into_iter().enumerate().map(|(i, x)| (i as i64, x)));
    Ok(out)
}

fn ln_pair_norm(a: &PrecisionReal, b: &PrecisionReal) -> f64 {
    (a.square() + b.square()).sqrt().ln_abs()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// `ψ_n = T_{0→n} v` for `|n| ≤ n_max`, plus `A_m v` for `m ≤ dyadic_levels`.
/// The decay rate is fitted on even `m` for type II and odd `m` for type III.
pub fn solution_profile(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    v: &[PrecisionReal; 2],
    n_max: usize,
    dyadic_levels: usize,
    tag: Target,
) -> Result<SolutionProfile> {
    let u = solution_values(e, lambda, v, n_max)?;
    // ψ_n = (u_{n+1}, u_n); u runs from -n_max to n_max + 1.
    let samples: Vec<(i64, f64)> = u.windows(2).map(|w| (w[0].0, ln_pair_norm(&w[1].1, &w[0].1))).collect();
    let dy = dyadic_pairs_hp(e, lambda, dyadic_levels)?;
    let dyadic: Vec<(usize, f64)> = dy
        .iter()
        .map(|p| {
            let r = p.a.apply(v);
            (p.n, ln_pair_norm(&r[0], &r[1]))
        })
        .collect();
    let mut bx = Vec::new();
    let mut by = Vec::new();
    // Type III solutions are subordinate on the right only.
    let side = |n: i64| match tag {
        Target::TypeII => n.abs(),
        Target::TypeIII => n,
    };
    let mut j = 2;
    while (1i64 << (j + 1)) <= n_max as i64 {
        let (lo, hi) = (1i64 << j, 1i64 << (j + 1));
        let m = samples
            .iter()
            .filter(|s| side(s.0) >= lo && side(s.0) < hi)
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max);
        bx.push((hi as f64).ln());
        by.push(m);
        j += 1;
    }
    let parity = match tag {
        Target::TypeII => 0,
        Target::TypeIII => 1,
    };
    let (dx, dyv): (Vec<f64>, Vec<f64>) = dyadic
        .iter()
        .filter(|d| d.0 >= 2 && d.0 % 2 == parity)
        .map(|d| (2f64.powi((d.0 / 2) as i32), d.1))
        .unzip();
    let initial_angle = direction_angle([v[0].to_f64(), v[1].to_f64()]);
    Ok(SolutionProfile {
        energy: e.clone(),
        lambda: lambda.clone(),
        initial_angle,
        samples,
        dyadic,
        fitted_alpha: slope(&bx, &by),
        fitted_decay_rate: slope(&dx, &dyv),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeReport {
    /// Smallest `C ≥ 1` satisfying the dyadic-block inequalities.
    pub c: f64,
    pub alpha: f64,
    pub block_violations: Vec<usize>,
    /// Violations of the √n envelope for `n ≥ 4` with the constants for this type.
    pub sqrt_violations: Vec<usize>,
    /// `(m, log ‖T_{2^m}‖ / 2^{m/2})`.
    pub dyadic_ratios: Vec<(usize, f64)>,
    /// Mean of the ratios at even and odd `m ≥ 4`.
    pub ratio_even: f64,
    pub ratio_odd: f64,
    /// Whether the two ratio groups are separated by more than their spreads.
    pub ratios_split: bool,
}

/// Exponents of the block inequalities at `k`: `(block n, lower rate, upper rate, power)`,
/// meaning `C^{-power} e^{lower γ} ≤ ‖T_k‖ ≤ C^{power} e^{upper γ}`.
fn block(k: usize, tag: Target) -> (usize, f64, f64, f64) {
    let lg = usize::BITS - 1 - k.leading_zeros();
    match tag {
        Target::TypeII => {
            let n = (lg / 2) as usize;
            (n, 2f64.powi(n as i32), 2f64.powi(n as i32 + 1), n as f64 + 1.0)
        }
        Target::TypeIII => {
            let n = lg.div_ceil(2) as usize;
            (n, 2f64.powi(n as i32 - 1), 2f64.powi(n as i32), n as f64 + 2.0)
        }
    }
}

/// `√n` envelope constants `(lower, upper, α multiplier)` for this type.
pub fn envelope_constants(tag: Target) -> (f64, f64, f64) {
    match tag {
        Target::TypeII => (0.5, 2.0, 1.0),
        Target::TypeIII => (0.5 / 2f64.sqrt(), 2f64.sqrt(), 3.0),
    }
}

/// Fits the block constant `C` to a norm profile `(k, log ‖T_k‖)` and checks
/// the √n envelope `n^{-α} e^{a γ √n} ≤ ‖T_n‖ ≤ n^{α} e^{b γ √n}` for `n ≥ 4`.
pub fn envelope_check(profile: &[(usize, f64)], gamma: f64, tag: Target) -> EnvelopeReport {
    let mut ln_c: f64 = 0.0;
    for &(k, l) in profile {
        let (_, lo, hi, pw) = block(k, tag);
        ln_c = ln_c.max((l - hi * gamma) / pw).max((lo * gamma - l) / pw);
    }
    let c = ln_c.exp();
    let slack = 1e-12;
    let block_violations = profile
        .iter()
        .filter(|&&(k, l)| {
            let (_, lo, hi, pw) = block(k, tag);
            l > hi * gamma + pw * ln_c + slack || l < lo * gamma - pw * ln_c - slack
        })
        .map(|p| p.0)
        .collect();
    let (a, b, mult) = envelope_constants(tag);
    let alpha = mult * ln_c / std::f64::consts::LN_2;
    let sqrt_violations = sqrt_envelope_violations(profile, gamma, alpha, a, b);
    let dyadic_ratios: Vec<(usize, f64)> = profile
        .iter()
        .filter(|p| p.0.is_power_of_two())
        .map(|&(k, l)| {
            let m = k.trailing_zeros() as usize;
            (m, l / 2f64.powf(m as f64 / 2.0))
        })
        .collect();
    let group = |par: usize| -> Vec<f64> {
        dyadic_ratios.iter().filter(|r| r.0 >= 4 && r.0 % 2 == par).map(|r| r.1).collect()
    };
    let (ev, od) = (group(0), group(1));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let spread = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (el, eh) = spread(&ev);
    let (ol, oh) = spread(&od);
    let ratios_split = !ev.is_empty() && !od.is_empty() && (el > oh || ol > eh);
    EnvelopeReport {
        c,
        alpha,
        block_violations,
        sqrt_violations,
        dyadic_ratios,
        ratio_even: mean(&ev),
        ratio_odd: mean(&od),
        ratios_split,
    }
}

/// Indices `n ≥ 4` where `n^{-α} e^{a γ √n} ≤ ‖T_n‖ ≤ n^{α} e^{b γ √n}` fails.
pub fn sqrt_envelope_violations(profile: &[(usize, f64)], gamma: f64, alpha: f64, a: f64, b: f64) -> Vec<usize> {
    profile
        .iter()
        .filter(|p| p.0 >= 4)
        .filter(|&&(k, l)| {
            let (ln_k, rk) = ((k as f64).ln(), (k as f64).sqrt());
            l > alpha * ln_k + b * gamma * rk + 1e-12 || l < -alpha * ln_k + a * gamma * rk - 1e-12
        })
        .map(|p| p.0)
        .collect()
}

/// The JSON report shape `{gamma, gamma_residuals, direction_angles, structure_residuals, envelope_C, alpha}`.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticsReport {
    pub gamma: PrecisionReal,
    pub gamma_residuals: Vec<(usize, f64)>,
    pub direction_angles: [f64; 2],
    pub structure_residuals: Vec<LawResidual>,
    #[serde(rename = "envelope_C")]
    pub envelope_c: f64,
    pub alpha: f64,
}

/// Gathers every diagnostic at one energy. `depth` counts trace pairs; the
/// norm profile runs to `profile_len` sites at the precision of `E`.
pub fn full_report(
    e: &PrecisionReal,
    lambda: &PrecisionReal,
    tag: Target,
    depth: usize,
    profile_len: usize,
) -> Result<AsymptoticsReport> {
    let top = 2 * depth + 2;
    let seq = trace_seq(e, lambda, top)?;
    let gamma = estimate_gamma(&seq.truncated(2 * depth + 1), tag)?;
    let dy = dyadic_pairs_hp(e, lambda, top)?;
    let structure = structure_from(&seq, &dy, tag, depth)?;
    let dirs = direction_from(&dy, tag, depth)?;
    let profile = crate::transfer::norm_profile_hp(e, lambda, profile_len)?;
    let env = envelope_check(&profile, gamma.gamma.to_f64(), tag);
    Ok(AsymptoticsReport {
        gamma: gamma.gamma,
        gamma_residuals: gamma.residuals,
        direction_angles: [dirs.angle_s, dirs.angle_s_hat],
        structure_residuals: structure.laws,
        envelope_c: env.c,
        alpha: env.alpha,
    })
}
