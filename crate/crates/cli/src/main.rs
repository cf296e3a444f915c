//! `thuemorse`: command-line access to the numerics library.
//!
//! Exit codes: 0 ok, 1 configuration, 2 band isolation, 3 hunt,
//! 4 flagged or undetermined result, 5 precision exhausted.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thuemorse::asymptotics::{
    direction_from, envelope_check, estimate_gamma, full_report, precise_angle, solution_profile, stable_direction,
    structure_from, unit_vector,
};
use thuemorse::dynamics::{classify_energy, find_typed_energy, gamma_coupling_sample, EnergyClass, Target};
use thuemorse::error::Error;
use thuemorse::numerics::PrecisionReal;
use thuemorse::spectrum::{default_tol, sigma_bands, spectrum_approx, type1_energies, BandList};
use thuemorse::subordinacy::{default_eps_grid, local_dim_indicator};
use thuemorse::tracemap::{t1, t2, trace_seq};
use thuemorse::transfer::{dyadic_pairs_hp, norm_profile_hp, reflection_check};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "thuemorse", version, about = "Thue-Morse Hamiltonian numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Coupling constant, as a decimal string.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    lambda: String,
    /// Working precision in bits.
    #[arg(long = "precision", default_value_t = 256)]
    precision_bits: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized grids.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ii,
    Iii,
    GammaCoupling,
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    Ii,
    Iii,
}

impl From<TypeArg> for Target {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::Ii => Target::TypeII,
            TypeArg::Iii => Target::TypeIII,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    I,
    Ii,
    Iii,
}

#[derive(Subcommand)]
enum Command {
    /// Bands of σ_n.
    Bands {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: usize,
    },
    /// Components of σ_n ∪ σ_{n+1}.
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: usize,
    },
    /// Zeros of t_k.
    Type1 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
    },
    /// Energy search along a symbolic itinerary.
    Hunt {
        #[command(flatten)]
        common: Common,
        /// Window `a:b`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long = "type", value_enum, default_value_t = Kind::Iii)]
        kind: Kind,
        #[arg(long, default_value = "0")]
        itinerary: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Type of one energy.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value = "1e-30")]
        tol: String,
    },
    /// Transfer-matrix norms or a solution profile.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// Profile the solution started from `v_θ` instead of the matrix norms.
        #[arg(long)]
        solution: bool,
        /// Initial angle; `stable` uses the stable direction for `--type`.
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<String>,
        #[arg(long = "type", value_enum)]
        kind: Option<TypeArg>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Write rate and envelope data for the norm profile to this file.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Rate estimate from the trace sequence.
    Gamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long = "type", value_enum)]
        kind: TypeArg,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Matrix limit laws, stable directions and the combined report.
    Structure {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long = "type", value_enum)]
        kind: TypeArg,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 4096)]
        profile_len: usize,
    },
    /// Local-dimension indicator ε^{1-η}|M| over the ε grid.
    Locdim {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        energy: String,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        /// Boundary angle, or `auto` to pick it from `--class`.
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        beta: String,
        #[arg(long, value_enum, default_value_t = ClassArg::Ii)]
        class: ClassArg,
        #[arg(long, default_value_t = 1 << 14)]
        range: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Quick invariant suite.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ZeroCoupling
            | Error::ZeroEnergy
            | Error::PrecisionTooLow { .. }
            | Error::Parse(_)
            | Error::InvalidArgument(_) => 1,
            Error::BandIsolation { .. } => 2,
            Error::WindowMissesSpectrum
            | Error::ItineraryInfeasible { .. }
            | Error::NotCandidate { .. }
            | Error::OutsideBranchDomain => 3,
            Error::PrecisionExhausted { .. } => 5,
            _ => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into() }
}

/// Bits needed to hold a decimal string: the explicit `@bits` tag, or enough
/// for every digit given, and never less than `floor`.
fn parse_number(s: &str, floor: usize) -> Result<PrecisionReal, Failure> {
    let (body, tag) = match s.split_once('@') {
        Some((b, t)) => (b, Some(t.parse::<usize>().map_err(|_| config(format!("bad precision tag in {s}")))?)),
        None => (s, None),
    };
    let digits = body.chars().filter(|c| c.is_ascii_digit()).count();
    let bits = tag.unwrap_or(((digits as f64) * 3.33).ceil() as usize + 64).max(floor);
    Ok(PrecisionReal::parse(body, bits)?)
}

struct Ctx {
    lambda: PrecisionReal,
    bits: usize,
    format: Format,
    output: Option<PathBuf>,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self, Failure> {
        if c.precision_bits < 64 {
            return Err(Error::PrecisionTooLow { bits: c.precision_bits }.into());
        }
        let lambda = parse_number(&c.lambda, c.precision_bits)?;
        if lambda.is_zero() {
            return Err(Error::ZeroCoupling.into());
        }
        Ok(Ctx { lambda, bits: c.precision_bits, format: c.format, output: c.output.clone() })
    }

    fn energy(&self, s: &str) -> Result<(PrecisionReal, PrecisionReal), Failure> {
        let e = parse_number(s, self.bits)?;
        let lambda = self.lambda.with_precision(e.precision())?;
        Ok((e, lambda))
    }

    fn sink(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    /// JSON goes out wrapped with the schema version; CSV gets a leading
    /// `# schema_version` comment line followed by a header row.
    fn emit<R: Serialize, T: Serialize>(&self, command: &str, result: &T, rows: &[R]) -> Result<(), Failure> {
        let mut out = self.sink()?;
        match self.format {
            Format::Json => {
                let doc = json!({ "schema_version": SCHEMA_VERSION, "command": command, "result": result });
                serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| config(e.to_string()))?;
                writeln!(out)?;
            }
            Format::Csv => {
                writeln!(out, "# schema_version: {SCHEMA_VERSION}")?;
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                for r in rows {
                    w.serialize(r).map_err(|e| config(e.to_string()))?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct BandRow {
    level: usize,
    lo: String,
    hi: String,
    trace_lo: i32,
    trace_hi: i32,
}

#[derive(Serialize)]
struct IntervalRow {
    lo: String,
    hi: String,
}

#[derive(Serialize)]
struct ValueRow {
    index: usize,
    energy: String,
}

#[derive(Serialize)]
struct NormRow {
    n: i64,
    log_norm: f64,
}

#[derive(Serialize)]
struct PsiRow {
    n: i64,
    log_psi_norm: f64,
}

#[derive(Serialize)]
struct GammaRow {
    index: usize,
    gamma_n: f64,
}

fn digits(x: &PrecisionReal) -> String {
    x.to_decimal_digits(((x.precision() as f64) / 3.33) as usize)
}

fn cmd_bands(ctx: &Ctx, level: usize) -> Outcome {
    let bands = sigma_bands(&ctx.lambda, level, &default_tol(ctx.bits))?;
    let measure = bands.iter().fold(PrecisionReal::zero(ctx.bits), |acc, b| acc + b.width());
    eprintln!("level  bands  measure");
    eprintln!("{level:>5}  {:>5}  {:.12}", bands.len(), measure.to_f64());
    let rows: Vec<BandRow> = bands
        .iter()
        .map(|b| BandRow { level, lo: b.lo.to_decimal(), hi: b.hi.to_decimal(), trace_lo: b.trace_lo, trace_hi: b.trace_hi })
        .collect();
    ctx.emit("bands", &BandList { level, bands }, &rows)?;
    Ok(0)
}

fn cmd_approx(ctx: &Ctx, level: usize) -> Outcome {
    let a = spectrum_approx(&ctx.lambda, level, &default_tol(ctx.bits))?;
    let rows: Vec<IntervalRow> =
        a.components.iter().map(|(lo, hi)| IntervalRow { lo: lo.to_decimal(), hi: hi.to_decimal() }).collect();
    let result = json!({ "level": level, "components": rows, "measure": a.measure() });
    ctx.emit("approx", &result, &rows)?;
    Ok(0)
}

fn cmd_type1(ctx: &Ctx, k: usize) -> Outcome {
    let zs = type1_energies(&ctx.lambda, k, &default_tol(ctx.bits))?;
    let rows: Vec<ValueRow> = zs.iter().enumerate().map(|(i, z)| ValueRow { index: i, energy: z.to_decimal() }).collect();
    ctx.emit("type1", &json!({ "k": k, "energies": zs }), &rows)?;
    Ok(0)
}

fn parse_itinerary(s: &str) -> Result<Vec<u8>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(config(format!("itinerary symbols must be 0 or 1, got {c}"))),
        })
        .collect()
}

fn cmd_hunt(ctx: &Ctx, window: Option<&str>, kind: Kind, itinerary: &str, depth: usize) -> Outcome {
    let omega = parse_itinerary(itinerary)?;
    let target = match kind {
        Kind::GammaCoupling => {
            let (lambda, y) = gamma_coupling_sample(&omega, depth, ctx.bits)?;
            let result = json!({
                "lambda": digits(&lambda),
                "E": [digits(&lambda), digits(&(-&lambda))],
                "y": digits(&y),
                "itinerary": omega,
                "depth_verified": depth,
            });
            ctx.emit("hunt", &result, &[json!({ "lambda": digits(&lambda), "y": digits(&y) })])?;
            return Ok(0);
        }
        Kind::Ii => Target::TypeII,
        Kind::Iii => Target::TypeIII,
    };
    let w = window.ok_or_else(|| config("--window a:b is required"))?;
    let (a, b) = w.split_once(':').ok_or_else(|| config("window must look like a:b"))?;
    let (a, b) = (parse_number(a, ctx.bits)?, parse_number(b, ctx.bits)?);
    let h = find_typed_energy(&ctx.lambda, (a, b), target, &omega, depth)?;
    let row = json!({ "E": digits(&h.energy), "prec_bits": h.prec_bits, "witness_k": h.witness_k, "depth_verified": h.depth_verified });
    let result = json!({
        "lambda": h.lambda,
        "E": digits(&h.energy),
        "prec_bits": h.prec_bits,
        "witness_k": h.witness_k,
        "itinerary": h.itinerary,
        "depth_verified": h.depth_verified,
    });
    ctx.emit("hunt", &result, &[row])?;
    Ok(0)
}

fn cmd_classify(ctx: &Ctx, energy: &str, depth: usize, tol: &str) -> Outcome {
    let (e, l) = ctx.energy(energy)?;
    let tol = parse_number(tol, e.precision())?;
    let c = classify_energy(&e, &l, depth, &tol)?;
    let flagged = c.class == EnergyClass::Undetermined;
    ctx.emit("classify", &c, &[&c])?;
    Ok(if flagged { 4 } else { 0 })
}

fn resolve_angle(
    e: &PrecisionReal,
    l: &PrecisionReal,
    angle: &str,
    kind: Option<TypeArg>,
    depth: usize,
) -> Result<PrecisionReal, Failure> {
    if angle == "stable" {
        let t = kind.ok_or_else(|| config("--angle stable needs --type"))?;
        let d = stable_direction(e, l, t.into(), depth)?;
        Ok(precise_angle(&d.s_hp))
    } else {
        parse_number(angle, e.precision())
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_profile(
    ctx: &Ctx,
    energy: &str,
    n: usize,
    solution: bool,
    angle: Option<&str>,
    kind: Option<TypeArg>,
    depth: usize,
    sidecar: Option<&PathBuf>,
) -> Outcome {
    let (e, l) = ctx.energy(energy)?;
    if solution {
        let theta = resolve_angle(&e, &l, angle.unwrap_or("0"), kind, depth)?;
        let tag = kind.map_or(Target::TypeII, Target::from);
        let levels = (usize::BITS - n.leading_zeros()) as usize;
        let p = solution_profile(&e, &l, &unit_vector(&theta), n, levels, tag)?;
        let rows: Vec<PsiRow> = p.samples.iter().map(|&(n, v)| PsiRow { n, log_psi_norm: v }).collect();
        ctx.emit("profile", &p, &rows)?;
        return Ok(0);
    }
    let prof = norm_profile_hp(&e, &l, n)?;
    let rows: Vec<NormRow> = prof.iter().map(|&(k, v)| NormRow { n: k as i64, log_norm: v }).collect();
    if let Some(path) = sidecar {
        let t: Target = kind.ok_or_else(|| config("--sidecar needs --type"))?.into();
        let seq = trace_seq(&e, &l, 2 * depth + 1)?;
        let g = estimate_gamma(&seq, t)?;
        let env = envelope_check(&prof, g.gamma.to_f64(), t);
        let doc = json!({ "schema_version": SCHEMA_VERSION, "gamma": g, "envelope": env });
        let f = File::create(path)?;
        serde_json::to_writer_pretty(f, &doc).map_err(|e| config(e.to_string()))?;
    }
    ctx.emit("profile", &json!({ "E": digits(&e), "profile": prof }), &rows)?;
    Ok(0)
}

fn cmd_gamma(ctx: &Ctx, energy: &str, kind: TypeArg, depth: usize) -> Outcome {
    let (e, l) = ctx.energy(energy)?;
    let seq = trace_seq(&e, &l, 2 * depth + 1)?;
    let g = estimate_gamma(&seq, kind.into())?;
    let rows: Vec<GammaRow> = g.residuals.iter().map(|&(i, v)| GammaRow { index: i, gamma_n: v }).collect();
    ctx.emit("gamma", &g, &rows)?;
    Ok(0)
}

fn cmd_structure(ctx: &Ctx, energy: &str, kind: TypeArg, depth: usize, profile_len: usize) -> Outcome {
    let (e, l) = ctx.energy(energy)?;
    let t: Target = kind.into();
    let top = 2 * depth + 2;
    let seq = trace_seq(&e, &l, top)?;
    let dy = dyadic_pairs_hp(&e, &l, top)?;
    let structure = structure_from(&seq, &dy, t, depth)?;
    let directions = direction_from(&dy, t, depth)?;
    let report = full_report(&e, &l, t, depth, profile_len)?;
    #[derive(Serialize)]
    struct Row {
        law: String,
        level: usize,
        ln_residual: f64,
    }
    let rows: Vec<Row> = structure
        .laws
        .iter()
        .flat_map(|law| law.entries.iter().map(|&(n, r)| Row { law: law.law.clone(), level: n, ln_residual: r }))
        .collect();
    ctx.emit("structure", &json!({ "report": report, "structure": structure, "directions": directions }), &rows)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_locdim(ctx: &Ctx, energy: &str, eta: f64, beta: &str, class: ClassArg, range: usize, depth: usize) -> Outcome {
    let (e, l) = ctx.energy(energy)?;
    let b = if beta == "auto" {
        match class {
            ClassArg::I => PrecisionReal::pi(e.precision()).mul_pow2(-2),
            ClassArg::Ii => resolve_angle(&e, &l, "stable", Some(TypeArg::Ii), depth)?,
            ClassArg::Iii => resolve_angle(&e, &l, "stable", Some(TypeArg::Iii), depth)?,
        }
    } else {
        parse_number(beta, e.precision())?
    };
    let r = local_dim_indicator(&e, &l, &b, eta, &default_eps_grid(), range)?;
    ctx.emit("locdim", &r, &r.rows)?;
    Ok(0)
}

fn cmd_selftest(ctx: &Ctx, seed: u64) -> Outcome {
    let bits = ctx.bits;
    let l = &ctx.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = (l.square().to_f64() + 4.0).sqrt();
    let energies: Vec<PrecisionReal> =
        (0..8).map(|_| PrecisionReal::from_f64(rng.gen_range(-bound..bound), bits)).collect();
    let mut lines: Vec<(String, bool)> = Vec::new();
    let init_ok = energies.iter().all(|e| {
        let lhs = t1(e, l).square() - t2(e, l) - e.lit(2);
        (lhs - l.square().mul_pow2(2)).abs().to_f64() < 1e-60
    });
    lines.push(("initial relation t1^2 - t2 - 2 = 4 lambda^2".into(), init_ok));
    let mut rec_ok = true;
    let mut refl_ok = true;
    for e in &energies {
        let seq = trace_seq(e, l, 10)?;
        rec_ok &= (3..=10).all(|n| {
            let r = seq.t(n - 2).square() * (seq.t(n - 1) - e.lit(2)) + e.lit(2);
            (&r - seq.t(n)).abs().to_f64() <= 1e-50 * seq.t(n).abs().to_f64().max(1.0)
        });
        refl_ok &= reflection_check(e, l, 200)? < 1e-9;
    }
    lines.push(("trace recurrence".into(), rec_ok));
    lines.push(("reflection T_-n = U T_n U".into(), refl_ok));
    let bands = sigma_bands(l, 5, &default_tol(bits))?;
    lines.push(("32 bands at level 5".into(), bands.len() == 32));
    let zero = classify_energy(&PrecisionReal::zero(bits), l, 6, &PrecisionReal::from_f64(1e-30, bits))?;
    lines.push(("zero energy undetermined".into(), zero.class == EnergyClass::Undetermined));
    let all = lines.iter().all(|x| x.1);
    let mut out = ctx.sink()?;
    for (name, ok) in &lines {
        writeln!(out, "{} {name}", if *ok { "PASS" } else { "FAIL" })?;
    }
    Ok(if all { 0 } else { 4 })
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Bands { common, level } => cmd_bands(&Ctx::new(common)?, *level),
        Command::Approx { common, level } => cmd_approx(&Ctx::new(common)?, *level),
        Command::Type1 { common, k } => cmd_type1(&Ctx::new(common)?, *k),
        Command::Hunt { common, window, kind, itinerary, depth } => {
            cmd_hunt(&Ctx::new(common)?, window.as_deref(), *kind, itinerary, *depth)
        }
        Command::Classify { common, energy, depth, tol } => cmd_classify(&Ctx::new(common)?, energy, *depth, tol),
        Command::Profile { common, energy, n, solution, angle, kind, depth, sidecar } => cmd_profile(
            &Ctx::new(common)?,
            energy,
            *n,
            *solution,
            angle.as_deref(),
            *kind,
            *depth,
            sidecar.as_ref(),
        ),
        Command::Gamma { common, energy, kind, depth } => cmd_gamma(&Ctx::new(common)?, energy, *kind, *depth),
        Command::Structure { common, energy, kind, depth, profile_len } => {
            cmd_structure(&Ctx::new(common)?, energy, *kind, *depth, *profile_len)
        }
        Command::Locdim { common, energy, eta, beta, class, range, depth } => {
            cmd_locdim(&Ctx::new(common)?, energy, *eta, beta, *class, *range, *depth)
        }
        Command::Selftest { common } => cmd_selftest(&Ctx::new(common)?, common.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
