//! Command-line frontend for the `isoform` library.
//!
//! Every subcommand writes a single JSON document or CSV table to standard output.
//! Numbers are rendered as strings. Exit status is 0 on success, 1 when a check
//! fails and 2 on invalid input.

use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use isoform::dist::{self, RankDistribution};
use isoform::gf::field_of_order;
use isoform::lift;
use isoform::maxiso::{self, PackedHyperbolic, DEFAULT_ENUMERATION_CAP};
use isoform::numeric::format_float;
use isoform::quadspace::{QuadraticSpace, SpaceType};
use isoform::splitu;
use isoform::verify::{self, Suite, VerifyRecord};

#[derive(Parser, Debug)]
#[command(name = "isoform", version, about = "Maximal isotropic subspaces of quadratic spaces over finite fields")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Digits after the decimal point for floating-point values.
    #[arg(long, global = true, default_value_t = 12)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct SpaceArgs {
    /// Field order.
    #[arg(long)]
    q: u64,
    /// Half the dimension of the hyperbolic space.
    #[arg(long)]
    n: u32,
    /// Space type: ort, sym, uni (or δ = 0, 1, 1/2).
    #[arg(long = "type", value_parser = parse_type)]
    ty: SpaceType,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of maximal isotropic subspaces of the hyperbolic space.
    Count(SpaceArgs),
    /// List every maximal isotropic subspace, one reduced echelon basis per line.
    Enumerate {
        #[command(flatten)]
        space: SpaceArgs,
        /// Refuse to enumerate more subspaces than this.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Distribution of dim(Z ∩ W) for a uniformly random maximal isotropic Z.
    Dist {
        #[arg(long)]
        q: u64,
        #[arg(long = "type", value_parser = parse_type)]
        ty: SpaceType,
        /// Finite half-dimension; exact rational masses.
        #[arg(long, conflicts_with = "limit", required_unless_present = "limit")]
        n: Option<u32>,
        /// Use the n → ∞ limit with tail bounds.
        #[arg(long)]
        limit: bool,
        /// Largest rank reported in the limit.
        #[arg(long, requires = "limit")]
        dmax: Option<u32>,
    },
    /// Draw uniform maximal isotropic subspaces.
    Sample {
        #[command(flatten)]
        space: SpaceArgs,
        /// Number of samples.
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Empirical model Selmer rank dim(Z ∩ W) against the exact and limit laws.
    SelmerSim {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Split-unitary intersection laws: the limit law of type m, or with --n the
    /// exact finite law for fixed types m and m1.
    SuDist {
        /// Order of the base field k0.
        #[arg(long)]
        q0: u64,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, default_value_t = 20)]
        rmax: u32,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, allow_hyphen_values = true, requires = "n")]
        m1: Option<i64>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
    },
    /// Randomized trace-lifting round trips.
    LiftCheck {
        /// Field order; all grid cases when omitted.
        #[arg(long, requires_all = ["ty", "d"])]
        q: Option<u64>,
        #[arg(long = "type", value_parser = parse_type)]
        ty: Option<SpaceType>,
        /// Dimension over k.
        #[arg(long)]
        d: Option<usize>,
        /// Instances per case.
        #[arg(long, default_value_t = 1)]
        instances: u32,
    },
}

fn parse_type(s: &str) -> Result<SpaceType, String> {
    dist::parse_delta(s).ok_or_else(|| format!("unknown type {s:?}; expected ort, sym, uni, 0, 1/2 or 1"))
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).map_err(|e| e.to_string())
}

/// Rendered output and whether all checks it contains passed.
struct Outcome {
    text: String,
    pass: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, pass: true }
    }
}

type CliResult = Result<Outcome, String>;

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn hyperbolic(space: &SpaceArgs) -> Result<QuadraticSpace, String> {
    let field = Arc::new(field_of_order(space.q).map_err(|e| e.to_string())?);
    QuadraticSpace::hyperbolic_of_type(field, space.n as usize, space.ty).map_err(|e| e.to_string())
}

fn rational_json(r: &BigRational) -> Value {
    json!({ "numerator": r.numer().to_string(), "denominator": r.denom().to_string() })
}

fn cmd_count(cli: &Cli, space: &SpaceArgs) -> CliResult {
    let count = maxiso::count_formula(space.q, space.n, space.ty).map_err(|e| e.to_string())?;
    let delta = match space.ty {
        SpaceType::Orthogonal => "0",
        SpaceType::Unitary => "1/2",
        SpaceType::Symplectic => "1",
    };
    Ok(Outcome::ok(match cli.format {
        Format::Json => render_json(&json!({
            "q": space.q.to_string(),
            "n": space.n.to_string(),
            "type": space.ty.short_name(),
            "delta": delta,
            "count": count.to_string(),
        })),
        Format::Csv => format!("q,n,type,delta,count\n{},{},{},{},{}\n", space.q, space.n, space.ty.short_name(), delta, count),
    }))
}

fn cmd_enumerate(cli: &Cli, space: &SpaceArgs, cap: u64) -> CliResult {
    let v = hyperbolic(space)?;
    let set = maxiso::enumerate_maximal_isotropic(&v, cap).map_err(|e| e.to_string())?;
    Ok(Outcome::ok(match cli.format {
        Format::Json => {
            let members: Vec<String> = set.members().iter().map(|m| m.to_text(v.field())).collect();
            render_json(&json!({
                "q": space.q.to_string(),
                "n": space.n.to_string(),
                "type": space.ty.short_name(),
                "count": set.len().to_string(),
                "members": members,
            }))
        }
        Format::Csv => set.to_text(),
    }))
}

fn cmd_dist(cli: &Cli, q: u64, ty: SpaceType, n: Option<u32>, dmax: Option<u32>) -> CliResult {
    let d = match n {
        Some(n) => dist::finite_distribution(q, n, ty),
        None => dist::limit_distribution(q, ty, dmax),
    }
    .map_err(|e| e.to_string())?;
    Ok(Outcome::ok(render_dist(cli, &d)))
}

fn render_dist(cli: &Cli, d: &RankDistribution) -> String {
    match cli.format {
        Format::Json => render_json(&d.to_json(cli.precision)),
        Format::Csv => d.to_csv(cli.precision),
    }
}

fn cmd_sample(cli: &Cli, space: &SpaceArgs, count: u64) -> CliResult {
    let v = hyperbolic(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let packed = PackedHyperbolic::from_space(&v);
    let mut lines = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let z = match &packed {
            Some(p) => {
                let rows = p.sample(&mut rng).map_err(|e| e.to_string())?;
                p.to_subspace(v.field(), &rows)
            }
            None => maxiso::sample_uniform(&v, &mut rng).map_err(|e| e.to_string())?,
        };
        lines.push(z.to_text(v.field()));
    }
    Ok(Outcome::ok(match cli.format {
        Format::Json => render_json(&json!({
            "q": space.q.to_string(),
            "n": space.n.to_string(),
            "type": space.ty.short_name(),
            "seed": cli.seed.to_string(),
            "samples": lines,
        })),
        Format::Csv => lines.iter().map(|l| format!("{l}\n")).collect(),
    }))
}

fn cmd_selmer(cli: &Cli, space: &SpaceArgs, samples: u64) -> CliResult {
    if samples == 0 {
        return Err("--samples must be positive".into());
    }
    let report =
        maxiso::selmer_simulation(space.q, space.ty, space.n, samples, cli.seed).map_err(|e| e.to_string())?;
    let text = match cli.format {
        Format::Json => render_json(&report.to_json(cli.precision)),
        Format::Csv => report.to_csv(cli.precision),
    };
    Ok(Outcome { text, pass: report.pass })
}

fn cmd_su_dist(cli: &Cli, q0: u64, m: i64, rmax: u32, n: Option<u32>, m1: Option<i64>) -> CliResult {
    if let Some(n) = n {
        let m1 = m1.unwrap_or(m);
        let mut rows = Vec::new();
        for j in 0..=n {
            let p = splitu::fixed_type_intersection_prob(q0, n, m, m1, j).map_err(|e| e.to_string())?;
            rows.push((j, p));
        }
        let total: BigRational = rows.iter().map(|(_, p)| p.clone()).sum();
        if total != BigRational::from_integer(BigInt::from(1)) {
            return Ok(Outcome { text: format!("total mass {total} differs from 1\n"), pass: false });
        }
        return Ok(Outcome::ok(match cli.format {
            Format::Json => {
                let masses: Vec<Value> = rows
                    .iter()
                    .map(|(j, p)| {
                        json!({ "r": j.to_string(), "mass_numerator": p.numer().to_string(),
                                "mass_denominator": p.denom().to_string() })
                    })
                    .collect();
                render_json(&json!({
                    "q0": q0.to_string(), "n": n.to_string(), "m0": m.to_string(), "m1": m1.to_string(),
                    "masses": masses, "total": rational_json(&total),
                }))
            }
            Format::Csv => {
                let mut s = String::from("r,mass_numerator,mass_denominator\n");
                for (j, p) in &rows {
                    s.push_str(&format!("{j},{},{}\n", p.numer(), p.denom()));
                }
                s
            }
        }));
    }
    let mut rows = Vec::new();
    let mut total = 0.0;
    for r in 0..=rmax {
        let v = dist::su_limit_dist(q0, m, r).map_err(|e| e.to_string())?;
        total += v.value;
        rows.push((r, v));
    }
    let p = cli.precision;
    Ok(Outcome::ok(match cli.format {
        Format::Json => {
            let masses: Vec<Value> = rows
                .iter()
                .map(|(r, v)| {
                    json!({ "r": r.to_string(), "mass": format_float(v.value, p),
                            "tail_bound": format_float(v.tail_bound, p) })
                })
                .collect();
            render_json(&json!({
                "q0": q0.to_string(), "m": m.to_string(), "masses": masses,
                "reported_mass": format_float(total, p),
            }))
        }
        Format::Csv => {
            let mut s = String::from("r,mass,tail_bound\n");
            for (r, v) in &rows {
                s.push_str(&format!("{r},{},{}\n", format_float(v.value, p), format_float(v.tail_bound, p)));
            }
            s
        }
    }))
}

fn render_records(cli: &Cli, records: &[VerifyRecord]) -> String {
    match cli.format {
        Format::Json => render_json(&serde_json::to_value(records).expect("records serialize")),
        Format::Csv => {
            let mut s = format!("{}\n", verify::CSV_HEADER);
            for r in records {
                s.push_str(&r.to_csv_row());
                s.push('\n');
            }
            s
        }
    }
}

fn cmd_verify(cli: &Cli, suite: Suite) -> CliResult {
    let records = verify::run_suite(suite, cli.seed, cli.precision).map_err(|e| e.to_string())?;
    let pass = records.iter().all(|r| r.pass);
    Ok(Outcome { text: render_records(cli, &records), pass })
}

fn cmd_lift_check(cli: &Cli, q: Option<u64>, ty: Option<SpaceType>, d: Option<usize>, instances: u32) -> CliResult {
    let cases: Vec<(u64, SpaceType, usize)> = match (q, ty, d) {
        (Some(q), Some(ty), Some(d)) => vec![(q, ty, d)],
        (None, None, None) => verify::LIFT_GRID.to_vec(),
        _ => return Err("--q, --type and --d must be given together".into()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut reports = Vec::new();
    for (q, ty, d) in cases {
        let k = Arc::new(field_of_order(q).map_err(|e| e.to_string())?);
        for _ in 0..instances {
            reports.push(lift::lift_round_trip(k.clone(), ty, d, &mut rng).map_err(|e| e.to_string())?);
        }
    }
    let pass = reports.iter().all(|r| r.pass());
    let text = match cli.format {
        Format::Json => render_json(&Value::Array(reports.iter().map(|r| r.to_json()).collect())),
        Format::Csv => {
            let mut s = String::from(
                "q,type,d,trace_ok,unique,hermitian_ok,round_trip,subspaces,mi_disagreements,perp_disagreements,pass\n",
            );
            for r in &reports {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.q,
                    r.ty.short_name(),
                    r.d,
                    r.trace_ok,
                    r.unique,
                    r.hermitian_ok,
                    r.round_trip,
                    r.subspaces,
                    r.mi_disagreements,
                    r.perp_disagreements,
                    r.pass()
                ));
            }
            s
        }
    };
    Ok(Outcome { text, pass })
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Count(space) => cmd_count(cli, space),
        Command::Enumerate { space, cap } => cmd_enumerate(cli, space, *cap),
        Command::Dist { q, ty, n, limit: _, dmax } => cmd_dist(cli, *q, *ty, *n, *dmax),
        Command::Sample { space, count } => cmd_sample(cli, space, *count),
        Command::SelmerSim { space, samples } => cmd_selmer(cli, space, *samples),
        Command::SuDist { q0, m, rmax, n, m1 } => cmd_su_dist(cli, *q0, *m, *rmax, *n, *m1),
        Command::Verify { suite } => cmd_verify(cli, *suite),
        Command::LiftCheck { q, ty, d, instances } => cmd_lift_check(cli, *q, *ty, *d, *instances),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
