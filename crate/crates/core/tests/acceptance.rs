//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thuemorse::asymptotics::{
    angle_gap, direction_angle, envelope_check, estimate_gamma, precise_angle, solution_profile, solution_values,
    sqrt_envelope_violations, stable_direction, structure_limits, DirectionPair, SolutionProfile,
};
use thuemorse::dynamics::{classify_energy, find_typed_energy, gamma_coupling_sample, EnergyClass, HuntResult, Target};
use thuemorse::numerics::PrecisionReal;
use thuemorse::spectrum::{default_tol, sigma_bands, spectrum_approx, BandLadder};
use thuemorse::subordinacy::{default_eps_grid, local_dim_indicator, Trend};
use thuemorse::tracemap::{coupling_angle, trace_seq};
use thuemorse::transfer::{basis, dyadic_pairs_hp, norm_profile, norm_profile_hp, transfer_product_hp, PrecisionMat2};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn pr(x: f64, bits: usize) -> PrecisionReal {
    PrecisionReal::from_f64(x, bits)
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------------------
// Shared hunted energies
// ---------------------------------------------------------------------------

const HUNT_DEPTH: usize = 8;

fn type_two() -> &'static HuntResult {
    static CELL: OnceLock<HuntResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let one = PrecisionReal::one(256);
        find_typed_energy(&one, (pr(0.6, 256), pr(0.87, 256)), Target::TypeII, &[0], HUNT_DEPTH)
            .expect("type-II hunt in [0.6, 0.87]")
    })
}

fn reference_three() -> &'static HuntResult {
    static CELL: OnceLock<HuntResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let one = PrecisionReal::one(256);
        find_typed_energy(&one, (pr(1.55, 256), pr(1.60, 256)), Target::TypeIII, &[0], HUNT_DEPTH)
            .expect("hunt in [1.55, 1.60]")
    })
}

/// The type-III-1 sample: `E = λ` on the all-zero fiber.
fn type_three_one() -> &'static (PrecisionReal, PrecisionReal) {
    static CELL: OnceLock<(PrecisionReal, PrecisionReal)> = OnceLock::new();
    CELL.get_or_init(|| {
        let (l, _) = gamma_coupling_sample(&[0], 10, 256).expect("coupling sample");
        (l.clone(), l)
    })
}

/// Highest trace index trusted for a hunted energy: the verified orbit reaches
/// `t_{k+2D+1}`; four levels are held back as margin.
fn trusted_index(h: &HuntResult) -> usize {
    h.witness_k + 2 * h.depth_verified - 4
}

fn gamma_of(h: &HuntResult, tag: Target) -> f64 {
    let seq = trace_seq(&h.energy, &h.lambda, trusted_index(h)).unwrap();
    estimate_gamma(&seq, tag).unwrap().gamma.to_f64()
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence
// ---------------------------------------------------------------------------

/// Thue-Morse word of length `2^n` by repeated substitution, starting from `first`.
fn word(first: char, n: usize) -> String {
    let mut w = first.to_string();
    for _ in 0..n {
        w = w.chars().map(|c| if c == 'a' { "ab" } else { "ba" }).collect();
    }
    w
}

type Mat = [[PrecisionReal; 2]; 2];

/// `M(x) · acc` with `M(x) = [[E - λw, -1], [1, 0]]`, written out by hand.
fn left_step(e: &PrecisionReal, lambda: &PrecisionReal, letter: char, acc: &Mat) -> Mat {
    let c = if letter == 'a' { e - lambda } else { e + lambda };
    [
        [&c * &acc[0][0] - &acc[1][0], &c * &acc[0][1] - &acc[1][1]],
        [acc[0][0].clone(), acc[0][1].clone()],
    ]
}

/// Word products at every power-of-two prefix, `out[n]` covering `2^n` letters.
fn prefix_products(e: &PrecisionReal, lambda: &PrecisionReal, w: &str, bits: usize) -> Vec<Mat> {
    let one = PrecisionReal::one(bits);
    let zero = PrecisionReal::zero(bits);
    let mut acc: Mat = [[one.clone(), zero.clone()], [zero, one]];
    let mut out = Vec::new();
    for (i, c) in w.chars().enumerate() {
        acc = left_step(e, lambda, c, &acc);
        if (i + 1).is_power_of_two() {
            out.push(acc.clone());
        }
    }
    out
}

fn entry_rel(got: &PrecisionReal, want: &PrecisionReal) -> f64 {
    let d = (got - want).abs();
    if want.is_zero() {
        d.to_f64()
    } else {
        (d / want.abs()).to_f64()
    }
}

fn oracle_equivalence() -> Outcome {
    const BITS: usize = 512;
    const LEVELS: usize = 14;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (wa, wb) = (word('a', LEVELS), word('b', LEVELS));
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for lf in [0.5, 1.0, 2.0] {
        let lambda = pr(lf, BITS);
        for _ in 0..20 {
            let e = pr(rng.gen_range(-(2.0 + lf)..(2.0 + lf)), BITS);
            let dy = dyadic_pairs_hp(&e, &lambda, LEVELS).map_err(|x| x.to_string())?;
            let pa = prefix_products(&e, &lambda, &wa, BITS);
            let pb = prefix_products(&e, &lambda, &wb, BITS);
            for n in 0..=LEVELS {
                for i in 0..2 {
                    for j in 0..2 {
                        worst = worst.max(entry_rel(&dy[n].a.m[i][j], &pa[n][i][j]));
                        worst = worst.max(entry_rel(&dy[n].b.m[i][j], &pb[n][i][j]));
                    }
                }
            }
            cases += 1;
        }
    }
    ensure(worst < 1e-9, format!("worst entrywise relative error {worst:.3e}"))?;
    Ok(format!("{cases} energies, n <= {LEVELS}, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 2. Exact identities
// ---------------------------------------------------------------------------

fn max_abs(xs: &[&PrecisionReal], bits: usize) -> PrecisionReal {
    xs.iter().fold(PrecisionReal::one(bits), |m, x| {
        let a = x.abs();
        if a > m {
            a
        } else {
            m
        }
    })
}

fn mat_scale(m: &PrecisionMat2) -> PrecisionReal {
    let p = m.precision();
    let entries: Vec<&PrecisionReal> = m.m.iter().flatten().collect();
    max_abs(&entries, p)
}

fn mat_resid(d: &PrecisionMat2, scale: &PrecisionReal) -> f64 {
    let big = d.m.iter().flatten().map(|x| x.abs()).fold(PrecisionReal::zero(d.precision()), |m, a| if a > m { a } else { m });
    (big / scale).log2_abs()
}

fn inner(a: &PrecisionMat2, b: &PrecisionMat2) -> PrecisionReal {
    let mut acc = PrecisionReal::zero(a.precision());
    for i in 0..2 {
        for j in 0..2 {
            acc = acc + &a.m[i][j] * &b.m[i][j];
        }
    }
    acc
}

/// Largest `log2` residual over every identity at one `(E, λ)`, with its label.
fn identity_residual(e: &PrecisionReal, lambda: &PrecisionReal, levels: usize) -> Result<(f64, &'static str), String> {
    let bits = e.min_prec(lambda);
    let seq = trace_seq(e, lambda, levels + 1).map_err(|x| x.to_string())?;
    let dy = dyadic_pairs_hp(e, lambda, levels + 1).map_err(|x| x.to_string())?;
    let [u, v, w] = basis(bits);
    let id = PrecisionMat2::identity(bits);
    let two = e.lit(2);
    let half = PrecisionReal::from_ratio(1, 2, bits);
    let mut worst = (f64::NEG_INFINITY, "");
    let mut bump = |label: &'static str, r: f64| {
        if r > worst.0 {
            worst = (r, label);
        }
    };

    // Traces taken from the matrices, checked against the recursion.
    let tr: Vec<PrecisionReal> = dy.iter().map(|p| p.a.trace()).collect();
    for n in 1..=levels {
        bump("trace vs recursion", ((&tr[n] - seq.t(n)).abs() / max_abs(&[seq.t(n)], bits)).log2_abs());
        bump("trace of B", ((&tr[n] - &dy[n].b.trace()).abs() / max_abs(&[&tr[n]], bits)).log2_abs());
    }
    for n in 2..levels {
        let big = tr[n - 1].square() * (&tr[n] - &two);
        let r = (&tr[n + 1] - &(&big + &two)).abs() / max_abs(&[&big], bits);
        bump("recurrence", r.log2_abs());
    }
    let four_l2 = lambda.square().mul_pow2(2);
    let r = (tr[1].square() - &tr[2] - &two - &four_l2).abs() / max_abs(&[&tr[1].square()], bits);
    bump("initial condition", r.log2_abs());

    // Difference structure with μ, ν, ω read off the matrices.
    let mut n = 1;
    while 2 * n < levels {
        let (a, b) = (&dy[2 * n - 1].a, &dy[2 * n - 1].b);
        let d = a.sub(b);
        let scale = max_abs(&[&mat_scale(a), &mat_scale(b)], bits);
        let mu = inner(&d, &u) * &half;
        bump("odd difference", mat_resid(&d.sub(&u.scale(&mu)), &scale));
        bump("mu", ((&mu - seq.mu(n)).abs() / &scale).log2_abs());
        let t_odd = &tr[2 * n - 1];
        let r = (&tr[2 * n] - &(t_odd.square() - mu.square() - &two)).abs()
            / max_abs(&[&t_odd.square(), &mu.square()], bits);
        bump("even trace identity", r.log2_abs());

        let (a, b) = (&dy[2 * n].a, &dy[2 * n].b);
        let d = a.sub(b);
        let scale = max_abs(&[&mat_scale(a), &mat_scale(b)], bits);
        let nu = inner(&d, &v) * &half;
        let om = inner(&d, &w) * &half;
        bump("even difference", mat_resid(&d.sub(&v.scale(&nu)).sub(&w.scale(&om)), &scale));
        bump("nu", ((&nu - seq.nu(n)).abs() / &scale).log2_abs());
        bump("omega", ((&om - seq.omega(n)).abs() / &scale).log2_abs());
        let t_even = &tr[2 * n];
        let r = (&tr[2 * n + 1] - &(t_even.square() - nu.square() + om.square() - &two)).abs()
            / max_abs(&[&t_even.square(), &nu.square(), &om.square()], bits);
        bump("odd trace identity", r.log2_abs());
        n += 1;
    }

    // Cayley-Hamilton consequences; they need tr A_n = tr B_n, which fails at n = 0.
    for n in 1..levels - 1 {
        let (a, b) = (&dy[n].a, &dy[n].b);
        let t = &tr[n];
        let c1 = t * &(&tr[n + 1] - &e.lit(1));
        let c3 = e.lit(1) - t.square();
        let scale = max_abs(&[&mat_scale(&dy[n + 2].a), &mat_scale(&dy[n + 2].b), &(&c1 * &mat_scale(a))], bits);
        let rhs_a = a.scale(&c1).add(&b.scale(t)).add(&id.scale(&c3));
        let rhs_b = b.scale(&c1).add(&a.scale(t)).add(&id.scale(&c3));
        bump("CH A", mat_resid(&dy[n + 2].a.sub(&rhs_a), &scale));
        bump("CH B", mat_resid(&dy[n + 2].b.sub(&rhs_b), &scale));
        let lhs = b.mul(b).mul(a);
        let rhs = dy[n + 1].a.scale(t).sub(a);
        bump("CH BBA", mat_resid(&lhs.sub(&rhs), &max_abs(&[&mat_scale(&lhs), &mat_scale(&rhs)], bits)));
        let lhs = a.mul(a).mul(b);
        let rhs = dy[n + 1].b.scale(t).sub(b);
        bump("CH AAB", mat_resid(&lhs.sub(&rhs), &max_abs(&[&mat_scale(&lhs), &mat_scale(&rhs)], bits)));
    }

    // Reflection about 1/2.
    for n in [1i64, 7, 64, 300] {
        let back = transfer_product_hp(e, lambda, 0, -n).map_err(|x| x.to_string())?;
        let fwd = transfer_product_hp(e, lambda, 0, n).map_err(|x| x.to_string())?;
        let conj = u.mul(&fwd).mul(&u);
        bump("reflection", mat_resid(&back.sub(&conj), &mat_scale(&conj)));
    }
    Ok(worst)
}

fn exact_identities() -> Outcome {
    const BITS: usize = 256;
    const LEVELS: usize = 11;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = (f64::NEG_INFINITY, "");
    for _ in 0..100 {
        let lf: f64 = rng.gen_range(0.2..2.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let ef: f64 = rng.gen_range(-(2.0 + lf.abs())..(2.0 + lf.abs()));
        let r = identity_residual(&pr(ef, BITS), &pr(lf, BITS), LEVELS)?;
        if r.0 > worst.0 {
            worst = r;
        }
    }
    ensure(worst.0 < -100.0, format!("worst residual 2^{:.1} ({})", worst.0, worst.1))?;
    Ok(format!("100 pairs, n <= {LEVELS}, worst residual 2^{:.1} ({})", worst.0, worst.1))
}

// ---------------------------------------------------------------------------
// 3. Band structure
// ---------------------------------------------------------------------------

fn band_structure() -> Outcome {
    const BITS: usize = 256;
    let tol = default_tol(BITS);
    let one = PrecisionReal::one(BITS);
    let s5 = 5f64.sqrt();
    let bands = sigma_bands(&one, 1, &tol).map_err(|x| x.to_string())?;
    let edges: Vec<f64> = bands.iter().flat_map(|b| [b.lo.to_f64(), b.hi.to_f64()]).collect();
    ensure(edges.len() == 4, "level 1 does not have two bands")?;
    for (got, want) in edges.iter().zip([-s5, -1.0, 1.0, s5]) {
        ensure((got - want).abs() < 1e-10, format!("edge {got} vs {want}"))?;
    }
    let zero = PrecisionReal::zero(BITS);
    let mut summary = Vec::new();
    for lf in [0.5, 1.0, 2.0] {
        let lambda = pr(lf, BITS);
        let mut ladder = BandLadder::new(&lambda, &tol).map_err(|x| x.to_string())?;
        ladder.extend_to(10).map_err(|x| x.to_string())?;
        for n in 1..=10 {
            let count = ladder.level(n).len();
            ensure(count == 1 << n, format!("λ = {lf}: level {n} has {count} bands"))?;
        }
        let approx: Vec<_> = (1..=9).map(|n| thuemorse::spectrum::approx_from_ladder(&ladder, n)).collect();
        for n in 1..=8 {
            ensure(approx[n].nests_within(&approx[n - 1], &tol), format!("λ = {lf}: nesting fails at n = {n}"))?;
        }
        for (i, a) in approx.iter().enumerate() {
            ensure(!a.contains(&zero), format!("λ = {lf}: 0 inside σ_{0} ∪ σ_{1}", i + 1, i + 2))?;
        }
        summary.push(format!("λ={lf}"));
    }
    Ok(format!("edges ±1, ±√5; 2^n bands to n = 10, nesting to n = 8, 0 excluded ({})", summary.join(", ")))
}

// ---------------------------------------------------------------------------
// 4. Type I
// ---------------------------------------------------------------------------

fn type_one() -> Outcome {
    let bits = 256;
    let e = PrecisionReal::parse("sqrt3", bits).map_err(|x| x.to_string())?;
    let one = PrecisionReal::one(bits);
    let prof = norm_profile_hp(&e, &one, 1 << 12).map_err(|x| x.to_string())?;
    let worst_zero = prof.iter().filter(|p| p.0 % 8 == 0).map(|p| p.1.abs()).fold(0.0, f64::max);
    ensure(worst_zero < 1e-9, format!("log norm {worst_zero:.2e} at a multiple of 8"))?;
    let head = prof.iter().take(8).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let all = prof.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    ensure((all - head).abs() < 1e-9, format!("sup {all} vs first-period max {head}"))?;
    Ok(format!("zero at multiples of 8 (worst {worst_zero:.1e}); sup = {all:.12}"))
}

// ---------------------------------------------------------------------------
// 5. Reference type-III energy
// ---------------------------------------------------------------------------

fn reference_energy() -> Outcome {
    let h = reference_three();
    let digits = h.energy.to_decimal_digits(20);
    ensure(digits.starts_with("1.571613"), format!("E = {digits}"))?;
    let class = classify_energy(&h.energy, &h.lambda, HUNT_DEPTH, &default_tol(h.prec_bits)).map_err(|x| x.to_string())?;
    let tag = match class.class {
        EnergyClass::TypeII => Target::TypeII,
        EnergyClass::TypeIII => Target::TypeIII,
        c => return Err(format!("classified as {c:?}")),
    };
    let gamma = gamma_of(h, tag);
    let prof = norm_profile_hp(&h.energy, &h.lambda, 4096).map_err(|x| x.to_string())?;
    let env = envelope_check(&prof, gamma, tag);
    let literal = sqrt_envelope_violations(&prof, gamma, env.alpha, 0.5, 2.0);
    ensure(literal.is_empty(), format!("{} violations of the √n envelope, first at {:?}", literal.len(), literal.first()))?;
    ensure(env.ratios_split, format!("dyadic ratios not split: even {:.3}, odd {:.3}", env.ratio_even, env.ratio_odd))?;
    Ok(format!(
        "E = {digits} (computed {:?}, k = {}; reference label TypeII), γ = {gamma:.6}, α = {:.3}, 0 violations, ratio bands {:.3} / {:.3}",
        class.class, h.witness_k, env.alpha, env.ratio_even, env.ratio_odd
    ))
}

// ---------------------------------------------------------------------------
// 6. Rates
// ---------------------------------------------------------------------------

/// First telescoped level whose trace indices sit at or past the witness.
fn first_asymptotic_level(h: &HuntResult, tag: Target) -> usize {
    let lower = |n: usize| match tag {
        Target::TypeII => 2 * n - 1,
        Target::TypeIII => 2 * n,
    };
    (1..).find(|&n| lower(n) >= h.witness_k).unwrap()
}

fn rate_check(h: &HuntResult, tag: Target) -> Result<String, String> {
    ensure(h.depth_verified >= 6, "fewer than six verified steps")?;
    let seq = trace_seq(&h.energy, &h.lambda, trusted_index(h)).map_err(|x| x.to_string())?;
    let est = estimate_gamma(&seq, tag).map_err(|x| x.to_string())?;
    let start = first_asymptotic_level(h, tag);
    let devs: Vec<(usize, f64)> = est.telescoped_ln_dev.iter().filter(|d| d.0 >= start).cloned().collect();
    ensure(devs.len() >= 3, "fewer than three telescoped levels")?;
    for w in devs.windows(2) {
        ensure(w[1].1 < w[0].1, format!("{tag:?}: gap deviation grows from level {} to {}", w[0].0, w[1].0))?;
    }
    for r in &est.refined[est.refined.len() - 2..] {
        ensure((r.small / 2.0 - 1.0).abs() < 0.1, format!("{tag:?}: small product {:.4} at level {}", r.small, r.n))?;
        ensure((r.large * 2.0 - 1.0).abs() < 0.1, format!("{tag:?}: large product {:.4} at level {}", r.large, r.n))?;
    }
    let last = est.refined.last().unwrap();
    Ok(format!(
        "{tag:?} γ = {:.10}, ln|gap - ln 2| {:.1} -> {:.1}, products {:.4} / {:.4}",
        est.gamma.to_f64(),
        devs[0].1,
        devs.last().unwrap().1,
        last.large,
        last.small
    ))
}

fn rates() -> Outcome {
    let a = rate_check(type_two(), Target::TypeII)?;
    let b = rate_check(reference_three(), Target::TypeIII)?;
    Ok(format!("{a}; {b}"))
}

// ---------------------------------------------------------------------------
// 7. Structure
// ---------------------------------------------------------------------------

fn structure_depth(h: &HuntResult, tag: Target) -> usize {
    let top = trusted_index(h);
    match tag {
        Target::TypeII => (top - 2) / 2,
        Target::TypeIII => (top - 1) / 2,
    }
}

fn structure() -> Outcome {
    let mut notes = Vec::new();
    for (h, tag) in [(type_two(), Target::TypeII), (reference_three(), Target::TypeIII)] {
        let depth = structure_depth(h, tag);
        let rep = structure_limits(&h.energy, &h.lambda, tag, depth).map_err(|x| x.to_string())?;
        for law in &rep.laws {
            ensure(law.decays_over_last(3, 5.0), format!("{tag:?} {} residuals {:?}", law.law, law.entries))?;
        }
        let last = rep.laws.iter().map(|l| l.entries.last().unwrap().1).fold(f64::NEG_INFINITY, f64::max);
        notes.push(format!("{tag:?} depth {depth}, last ln residual <= {last:.1}"));
        if tag == Target::TypeIII {
            let c = rep.scalars.last().unwrap().1.abs();
            let want = 0.5f64.sqrt();
            ensure((c / want - 1.0).abs() < 0.05, format!("odd-level scalar {c}"))?;
            notes.push(format!("scalar {c:.8}"));
        }
    }
    Ok(notes.join("; "))
}

// ---------------------------------------------------------------------------
// 8. Directions
// ---------------------------------------------------------------------------

fn direction_depth(h: &HuntResult, tag: Target) -> usize {
    let top = trusted_index(h);
    match tag {
        Target::TypeII => top / 2,
        Target::TypeIII => top.div_ceil(2),
    }
}

fn directions_of(h: &HuntResult, tag: Target) -> Result<DirectionPair, String> {
    stable_direction(&h.energy, &h.lambda, tag, direction_depth(h, tag)).map_err(|x| x.to_string())
}

fn check_type_three_pair(e: &PrecisionReal, lambda: &PrecisionReal, d: &DirectionPair) -> Result<String, String> {
    let theta = coupling_angle(e, lambda).map_err(|x| x.to_string())?.theta.to_f64();
    let targets = [-theta / 2.0, (theta - std::f64::consts::PI) / 2.0];
    let off = targets.iter().map(|t| angle_gap(d.angle_s, *t)).fold(f64::INFINITY, f64::min);
    ensure(off < 1e-6, format!("s at {} misses {targets:?} by {off:.2e}", d.angle_s))?;
    let cross = angle_gap(d.angle_s, d.angle_s_hat);
    ensure(cross > 1e-3, "s parallel to ŝ")?;
    let us = direction_angle([d.s[1], d.s[0]]);
    let swap = angle_gap(us, d.angle_s_hat);
    ensure(swap < 1e-6, format!("U s misses ŝ by {swap:.2e}"))?;
    Ok(format!("s {:.8} (θ = {theta:.6}), U s ∥ ŝ within {swap:.1e}", d.angle_s))
}

fn directions() -> Outcome {
    let h = type_two();
    let d = directions_of(h, Target::TypeII)?;
    let off = [FRAC_PI_4, -FRAC_PI_4].iter().map(|t| angle_gap(d.angle_s, *t)).fold(f64::INFINITY, f64::min);
    ensure(off < 1e-6, format!("type II s at {}", d.angle_s))?;
    let a = format!("type II s {:.8} (off {off:.1e})", d.angle_s);
    let h3 = reference_three();
    let b = check_type_three_pair(&h3.energy, &h3.lambda, &directions_of(h3, Target::TypeIII)?)?;
    let (l, e) = type_three_one();
    let d1 = stable_direction(e, l, Target::TypeIII, 8).map_err(|x| x.to_string())?;
    let c = check_type_three_pair(e, l, &d1)?;
    Ok(format!("{a}; E ≈ 1.5716 {b}; E = λ {c}"))
}

// ---------------------------------------------------------------------------
// 9. Subordinate versus generic solutions
// ---------------------------------------------------------------------------

const PROFILE_LEN: usize = 4096;

fn unit(theta: f64, bits: usize) -> [PrecisionReal; 2] {
    let t = pr(theta, bits);
    [t.cos(), -t.sin()]
}

/// `max (log‖ψ_n‖ - α ln n)` over `lo ≤ |n| < hi` on the given side.
fn poly_excess(p: &SolutionProfile, alpha: f64, lo: i64, hi: i64, sign: i64) -> f64 {
    (lo..hi).map(|n| p.at(sign * n).unwrap() - alpha * (n as f64).ln()).fold(f64::NEG_INFINITY, f64::max)
}

/// `min (log‖ψ_n‖ - (γ/4)√n)` over `lo ≤ |n| < hi` on the given side.
fn growth_margin(p: &SolutionProfile, gamma: f64, lo: i64, hi: i64, sign: i64) -> f64 {
    (lo..hi).map(|n| p.at(sign * n).unwrap() - gamma / 4.0 * (n as f64).sqrt()).fold(f64::INFINITY, f64::min)
}

/// Polynomial envelope on one side: constant fitted on `[2, 256)`, checked on `[256, 4096]`.
fn polynomial_side(p: &SolutionProfile, sign: i64) -> Result<f64, String> {
    let alpha = p.fitted_alpha;
    ensure(alpha.is_finite(), "fitted α is not finite")?;
    let early = poly_excess(p, alpha, 2, 256, sign);
    let late = poly_excess(p, alpha, 256, PROFILE_LEN as i64 + 1, sign);
    ensure(late <= early, format!("side {sign}: log‖ψ‖ - α ln n reaches {late:.3} past 256, early bound {early:.3}"))?;
    Ok(early)
}

/// Growth on one side: constant fitted on `[256, 1024)`, checked on `[1024, 4096]`.
fn growth_side(p: &SolutionProfile, gamma: f64, sign: i64) -> Result<f64, String> {
    let c = -growth_margin(p, gamma, 256, 1024, sign);
    let late = growth_margin(p, gamma, 1024, PROFILE_LEN as i64 + 1, sign);
    ensure(late >= -c, format!("side {sign}: growth margin {late:.3} below {:.3}", -c))?;
    Ok(c)
}

/// Dyadic dips `log‖A_m s‖ + 2^{⌊m/2⌋} γ` on the decaying parity. They must
/// converge, so the dips sit below `-2^{⌊m/2⌋} γ + const`. The top two trusted
/// levels are left out: there the hunted energy's own error shows.
fn dips(p: &SolutionProfile, gamma: f64, tag: Target, top: usize) -> Result<String, String> {
    let parity = match tag {
        Target::TypeII => 0,
        Target::TypeIII => 1,
    };
    let q: Vec<(usize, f64)> = p
        .dyadic
        .iter()
        .filter(|d| d.0 >= 2 && d.0 % 2 == parity && d.0 + 2 <= top)
        .map(|&(m, l)| (m, l + 2f64.powi((m / 2) as i32) * gamma))
        .collect();
    ensure(q.len() >= 4, "too few dyadic dips")?;
    let steps: Vec<f64> = q.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    for (i, w) in steps.windows(2).enumerate() {
        ensure(w[1] <= w[0] || w[1] < 1e-12, format!("dip offsets {q:?} stop settling at 2^{}", q[i + 2].0))?;
    }
    let last = *steps.last().unwrap();
    ensure(last < 1e-3, format!("dip offsets still moving by {last:.2e}"))?;
    let c = q.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let (m, deepest) = *p.dyadic.iter().find(|d| d.0 == q.last().unwrap().0).unwrap();
    Ok(format!("dips to {deepest:.1} at 2^{m}, const {c:.4}"))
}

fn dichotomy() -> Outcome {
    let mut notes = Vec::new();

    let h = type_two();
    let tag = Target::TypeII;
    let gamma = gamma_of(h, tag);
    let d = directions_of(h, tag)?;
    let top = trusted_index(h);
    let p = solution_profile(&h.energy, &h.lambda, &d.s_hp, PROFILE_LEN, top, tag).map_err(|x| x.to_string())?;
    polynomial_side(&p, 1)?;
    polynomial_side(&p, -1)?;
    notes.push(format!("type II α = {:.3}, {}", p.fitted_alpha, dips(&p, gamma, tag, top)?));
    for off in [0.1, -0.1, 0.5, FRAC_PI_2] {
        let v = unit(d.angle_s + off, h.prec_bits);
        let g = solution_profile(&h.energy, &h.lambda, &v, PROFILE_LEN, 2, tag).map_err(|x| x.to_string())?;
        growth_side(&g, gamma, 1)?;
        growth_side(&g, gamma, -1)?;
    }

    let h = reference_three();
    let tag = Target::TypeIII;
    let gamma = gamma_of(h, tag);
    let d = directions_of(h, tag)?;
    let top = trusted_index(h);
    let right = solution_profile(&h.energy, &h.lambda, &d.s_hp, PROFILE_LEN, top, tag).map_err(|x| x.to_string())?;
    polynomial_side(&right, 1)?;
    growth_side(&right, gamma, -1)?;
    notes.push(format!("type III α = {:.3}, {}", right.fitted_alpha, dips(&right, gamma, tag, top)?));
    for off in [0.1, -0.1, 0.5, FRAC_PI_2] {
        let v = unit(d.angle_s + off, h.prec_bits);
        let g = solution_profile(&h.energy, &h.lambda, &v, PROFILE_LEN, 2, tag).map_err(|x| x.to_string())?;
        growth_side(&g, gamma, 1)?;
    }
    // The left-subordinate solution starts from U s and mirrors the right one.
    let us = [d.s_hp[1].clone(), d.s_hp[0].clone()];
    let ur = solution_values(&h.energy, &h.lambda, &d.s_hp, PROFILE_LEN).map_err(|x| x.to_string())?;
    let ul = solution_values(&h.energy, &h.lambda, &us, PROFILE_LEN).map_err(|x| x.to_string())?;
    let n_max = PROFILE_LEN as i64;
    let idx = |n: i64| (n + n_max) as usize;
    let mut mirror: f64 = 0.0;
    for n in 1 - n_max..=n_max {
        let (a, b) = (&ul[idx(n)], &ur[idx(1 - n)]);
        assert_eq!((a.0, b.0), (n, 1 - n));
        let scale = max_abs(&[&b.1], h.prec_bits);
        mirror = mirror.max(((&a.1 - &b.1).abs() / scale).to_f64());
    }
    ensure(mirror < 1e-30, format!("mirror residual {mirror:.2e}"))?;
    let left = solution_profile(&h.energy, &h.lambda, &us, PROFILE_LEN, 2, tag).map_err(|x| x.to_string())?;
    growth_side(&left, gamma, 1)?;
    notes.push(format!("offsets ±0.1, 0.5, π/2 grow past (γ/4)√n; mirror residual {mirror:.1e}"));
    Ok(notes.join("; "))
}

// ---------------------------------------------------------------------------
// 10. Local dimension trends
// ---------------------------------------------------------------------------

fn local_dimension() -> Outcome {
    let grid = default_eps_grid();
    let h = type_two();
    let d = directions_of(h, Target::TypeII)?;
    let range = 1usize << trusted_index(h).min(16);
    let two = local_dim_indicator(&h.energy, &h.lambda, &precise_angle(&d.s_hp), 0.5, &grid, range)
        .map_err(|x| x.to_string())?;
    ensure(two.trend == Trend::Diverging && two.slope <= -0.1, format!("type II slope {:.4}", two.slope))?;

    let bits = 256;
    let e = PrecisionReal::parse("sqrt3", bits).map_err(|x| x.to_string())?;
    let one = PrecisionReal::one(bits);
    let quarter = PrecisionReal::pi(bits).mul_pow2(-2);
    let first = local_dim_indicator(&e, &one, &quarter, 0.9, &grid, 1 << 16).map_err(|x| x.to_string())?;
    ensure(first.trend == Trend::Vanishing && first.slope >= 0.1, format!("type I slope {:.4}", first.slope))?;

    let (l, e3) = type_three_one();
    let d3 = stable_direction(e3, l, Target::TypeIII, 8).map_err(|x| x.to_string())?;
    let three = local_dim_indicator(e3, l, &precise_angle(&d3.s_hp), 1.5, &grid, 1 << 14).map_err(|x| x.to_string())?;
    ensure(three.trend == Trend::Vanishing && three.slope >= 0.1, format!("type III-1 slope {:.4}", three.slope))?;
    Ok(format!(
        "slopes: type II {:.3} ({} pts), type I {:.4} ({} pts), type III-1 {:.3} ({} pts)",
        two.slope,
        two.rows.len(),
        first.slope,
        first.rows.len(),
        three.slope,
        three.rows.len()
    ))
}

// ---------------------------------------------------------------------------
// 11. Global bound
// ---------------------------------------------------------------------------

fn global_bound() -> Outcome {
    let bits = 256;
    let one = PrecisionReal::one(bits);
    let approx = spectrum_approx(&one, 8, &default_tol(bits)).map_err(|x| x.to_string())?;
    let comps: Vec<(f64, f64)> = approx.components.iter().map(|(a, b)| (a.to_f64(), b.to_f64())).collect();
    let total: f64 = comps.iter().map(|c| c.1 - c.0).sum();
    let c = 2.0 * (LN_2 + 3f64.ln()) + 12f64.ln();
    let k = 2f64.sqrt() * c / (2f64.sqrt() - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tightest = f64::INFINITY;
    for _ in 0..50 {
        let mut x = rng.gen_range(0.0..total);
        let mut e = comps[0].0;
        for &(a, b) in &comps {
            if x <= b - a {
                e = a + x;
                break;
            }
            x -= b - a;
        }
        let prof = norm_profile(&pr(e, 53), &one, 1 << 12).map_err(|x| x.to_string())?;
        for &(n, l) in &prof {
            let bound = k * (n as f64).sqrt();
            ensure(l <= bound, format!("E = {e}: log‖T_{n}‖ = {l} above {bound}"))?;
            tightest = tightest.min(bound - l);
        }
    }
    Ok(format!("50 energies, bound constant {k:.3}, smallest margin {tightest:.3}"))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 oracle equivalence", Duration::from_secs(60), oracle_equivalence),
        ("2 exact identities", Duration::from_secs(60), exact_identities),
        ("3 band structure", Duration::from_secs(120), band_structure),
        ("4 type-I behaviour", Duration::from_secs(10), type_one),
        ("5 reference energy", Duration::from_secs(300), reference_energy),
        ("6 rate laws", Duration::from_secs(300), rates),
        ("7 structure laws", Duration::from_secs(300), structure),
        ("8 stable directions", Duration::from_secs(60), directions),
        ("9 subordinate dichotomy", Duration::from_secs(180), dichotomy),
        ("10 local-dimension trends", Duration::from_secs(180), local_dimension),
        ("11 global upper bound", Duration::from_secs(180), global_bound),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > budget => Err(format!("over budget ({msg})")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS  {name:<26} {:>7.2}s  {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name:<26} {:>7.2}s  {msg}", took.as_secs_f64());
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
