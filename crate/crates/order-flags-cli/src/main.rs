//! `otflag` — command-line interface to the order-type flag algebra.
//!
//! The binary wires the library into offline workflows: enumerating the
//! order-type database, querying densities and splits, lifting and
//! averaging algebra elements, building and verifying semidefinite
//! certificates, and running the Monte Carlo models.  Every run echoes
//! its effective configuration into the report, and every subcommand is
//! deterministic given the database, the flags, and the seed.
//!
//! Exit codes: 0 on success, 1 on domain errors (which print the
//! offending object), 2 on usage errors (which print the synopsis).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use order_flags::algebra::{flag_basis, AlgebraElement, DensityCache};
use order_flags::chirotope::{CanonicalCode, Chirotope};
use order_flags::geometry::{format_rational, parse_rational};
use order_flags::limits::{
    cantor_vs_words_crosscheck, estimate_density, exact_cup_probability, reports_to_csv,
    two_circles_experiment, two_circles_experiment_biased, MeasureModel,
};
use order_flags::sdp::{
    build_instance, emit_sdpa, ingest_solution, sdpa_problem, toy_solve,
    verify_certificate, Certificate, TargetSpec,
};
use order_flags::store::OrderTypeStore;

/// Default database location when neither `--db` nor the environment
/// variable is given.
const DEFAULT_DB: &str = "order-types.json";
/// Environment variable overriding the default database path.
const DB_ENV: &str = "ORDER_FLAGS_DB";

#[derive(Parser)]
#[command(
    name = "otflag",
    version,
    about = "Exact flag algebras over planar order types",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Path to the order-type database (default: $ORDER_FLAGS_DB, then
    /// ./order-types.json).
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Random seed for Monte Carlo subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Trial count for Monte Carlo subcommands.
    #[arg(long, global = true, default_value_t = 100_000)]
    trials: u64,
    /// Worker threads (0 keeps the library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all order types up to a size and save the database.
    Enumerate {
        /// Largest point-set size to enumerate.
        #[arg(long)]
        max_size: usize,
    },
    /// Exact density p(small, big) of one order type in another.
    Density {
        /// The pattern order type (code or alias).
        #[arg(long)]
        small: String,
        /// The ambient order type (code or alias).
        #[arg(long)]
        big: String,
    },
    /// Exact split probability p(small1, small2; big).
    Split {
        /// First pattern (code or alias).
        #[arg(long)]
        small1: String,
        /// Second pattern, drawn from the complement (code or alias).
        #[arg(long)]
        small2: String,
        /// The ambient order type (code or alias).
        #[arg(long)]
        big: String,
    },
    /// Lift an order type to a linear combination at a higher level.
    Lift {
        /// The order type to lift (code or alias).
        #[arg(long)]
        code: String,
        /// Target level.
        #[arg(long)]
        to: usize,
    },
    /// Average a rooted flag down to an unrooted combination.
    Average {
        /// Root order type (code or alias; `empty` for the trivial root).
        #[arg(long)]
        root: String,
        /// Size of the rooted flag.
        #[arg(long)]
        flag_size: usize,
        /// Index of the flag in the canonical basis for this root and size.
        #[arg(long)]
        index: usize,
    },
    /// Inspect rooted flag bases.
    Flags {
        #[command(subcommand)]
        command: FlagsCommand,
    },
    /// Semidefinite bound workflows.
    Sdp {
        #[command(subcommand)]
        command: SdpCommand,
    },
    /// Monte Carlo estimate of a limit density.
    Estimate {
        /// Measure model, e.g. `two-circles:1/100`, `two-circles-limit`,
        /// `cantor:1/4,1/16`, `square`, `words:48`.
        #[arg(long)]
        model: String,
        /// Target order type (code or alias).
        #[arg(long)]
        omega: String,
    },
    /// Larger randomized experiments.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Cross-checks between independent implementations.
    Crosscheck {
        #[command(subcommand)]
        command: CrosscheckCommand,
    },
    /// Exact probability that s coin-tossing words form a cup.
    CupProb {
        /// Number of points.
        #[arg(long)]
        s: usize,
    },
}

#[derive(Subcommand)]
enum FlagsCommand {
    /// Count the flags of a given size on a given root.
    Count {
        /// Root order type (code or alias; `empty` for the trivial root).
        #[arg(long)]
        root: String,
        /// Size of the flags to count.
        #[arg(long)]
        flag_size: usize,
    },
}

#[derive(Subcommand)]
enum SdpCommand {
    /// Build an SDP instance minimizing a density and write it in SDPA
    /// sparse format.
    Build {
        /// Level: the size of the order types the bound quantifies over.
        #[arg(long)]
        level: usize,
        /// The order type whose density is minimized (code or alias).
        #[arg(long)]
        minimize: String,
        /// Root order types (repeatable; defaults to the standard layout).
        #[arg(long = "root")]
        roots: Vec<String>,
        /// Output path for the SDPA file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the instance with the built-in solver, round the solution
    /// to an exact certificate, and print the certified bound.
    Bound {
        /// Level of the bound.
        #[arg(long)]
        level: usize,
        /// The order type whose density is minimized (code or alias).
        #[arg(long)]
        minimize: String,
        /// Root order types (repeatable; defaults to the standard layout).
        #[arg(long = "root")]
        roots: Vec<String>,
        /// Iterations of the built-in solver.
        #[arg(long, default_value_t = 400)]
        iterations: usize,
        /// Denominator used when rounding solver output to rationals.
        #[arg(long, default_value_t = 32)]
        round_bits: u32,
        /// Optional path to save the verified certificate as JSON.
        #[arg(long)]
        cert_out: Option<PathBuf>,
        /// Optional path to a solver output file to ingest instead of
        /// running the built-in solver.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Verify an externally supplied certificate in exact arithmetic.
    Verify {
        /// Level of the bound.
        #[arg(long)]
        level: usize,
        /// The order type whose density the certificate bounds.
        #[arg(long)]
        minimize: String,
        /// Certificate file (JSON).
        #[arg(long)]
        certificate: PathBuf,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Sample n-side² points on two concentric circles and record hull
    /// fractions and covering edges.
    TwoCircles {
        /// Square root of the number of points per trial.
        #[arg(long)]
        n_side: usize,
        /// Inner circle radius.
        #[arg(long, value_parser = rational_arg, default_value = "1/100")]
        t: BigRational,
        /// Probability of the outer circle (default 1/2).
        #[arg(long, value_parser = rational_arg)]
        outer_probability: Option<BigRational>,
    },
}

#[derive(Subcommand)]
enum CrosscheckCommand {
    /// Compare geometric Cantor-rectangle estimates with the pure word
    /// model (requires the flatness condition).
    CantorWords {
        /// Horizontal contraction ratio.
        #[arg(long, value_parser = rational_arg)]
        a: BigRational,
        /// Vertical contraction ratio.
        #[arg(long, value_parser = rational_arg)]
        b: BigRational,
        /// Target order type (code or alias).
        #[arg(long)]
        omega: String,
    },
}

fn rational_arg(s: &str) -> Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// The effective configuration echoed into every report.
#[derive(Serialize, Clone)]
struct EffectiveConfig {
    db: String,
    format: String,
    seed: u64,
    trials: u64,
    threads: usize,
}

impl EffectiveConfig {
    fn comment_line(&self) -> String {
        format!(
            "# db={} format={} seed={} trials={} threads={}",
            self.db, self.format, self.seed, self.trials, self.threads
        )
    }
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    config: EffectiveConfig,
    command: String,
    result: T,
}

/// A fully rendered report in all three formats.
struct Rendered {
    json: String,
    csv: String,
    text: String,
}

struct Context {
    config: EffectiveConfig,
    db_path: PathBuf,
    format: Format,
    seed: u64,
    trials: u64,
    store: Option<OrderTypeStore>,
}

#[derive(Debug)]
struct DomainError(String);

impl std::fmt::Display for DomainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DomainError {}

macro_rules! domain_error_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for DomainError {
            fn from(e: $ty) -> DomainError {
                DomainError(e.to_string())
            }
        })*
    };
}

domain_error_from!(
    order_flags::store::StoreError,
    order_flags::algebra::AlgebraError,
    order_flags::sdp::SdpError,
    order_flags::limits::LimitsError,
    order_flags::geometry::GeometryError,
    std::io::Error,
);

type CliResult<T> = Result<T, DomainError>;

fn domain(msg: impl Into<String>) -> DomainError {
    DomainError(msg.into())
}

impl Context {
    fn new(global: &GlobalArgs) -> Context {
        let db_path = global
            .db
            .clone()
            .or_else(|| std::env::var_os(DB_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DB));
        let config = EffectiveConfig {
            db: db_path.display().to_string(),
            format: global.format.name().to_string(),
            seed: global.seed,
            trials: global.trials,
            threads: global.threads,
        };
        Context {
            config,
            db_path,
            format: global.format,
            seed: global.seed,
            trials: global.trials,
            store: None,
        }
    }

    /// Loads the database on first use.
    fn store(&mut self) -> CliResult<&OrderTypeStore> {
        if self.store.is_none() {
            if !self.db_path.exists() {
                return Err(domain(format!(
                    "database {} does not exist; run `otflag enumerate --max-size N` first",
                    self.db_path.display()
                )));
            }
            self.store = Some(OrderTypeStore::load(&self.db_path)?);
        }
        Ok(self.store.as_ref().expect("store was just loaded"))
    }

    fn emit(&self, rendered: Rendered) {
        match self.format {
            Format::Json => println!("{}", rendered.json),
            Format::Csv => {
                println!("{}", self.config.comment_line());
                print!("{}", rendered.csv);
                if !rendered.csv.ends_with('\n') {
                    println!();
                }
            }
            Format::Text => {
                println!("{}", self.config.comment_line());
                println!("{}", rendered.text);
            }
        }
    }

    fn render<T: Serialize>(&self, command: &str, result: T, text: String, csv: String) -> Rendered {
        let envelope = Envelope {
            config: self.config.clone(),
            command: command.to_string(),
            result,
        };
        Rendered {
            json: serde_json::to_string_pretty(&envelope)
                .expect("report serialization cannot fail"),
            csv,
            text,
        }
    }
}

/// Resolves a command-line name to a canonical code.
///
/// Accepts raw canonical codes (`size:hex`) and the friendly aliases
/// `convex-k`, `triangle-point`, `size-n` (unique types only), and
/// `hull<h>-size<n>` where unambiguous.
fn resolve_code(store: &OrderTypeStore, name: &str) -> CliResult<CanonicalCode> {
    if name.contains(':') {
        let code: CanonicalCode = name
            .parse()
            .map_err(|e| domain(format!("cannot parse code {name:?}: {e}")))?;
        if store.get(&code).is_none() {
            return Err(domain(format!(
                "code {code} is not in the database (enumerated sizes: {:?})",
                store.sizes()
            )));
        }
        return Ok(code);
    }
    if name == "triangle-point" {
        let mut found = store.codes_with_hull(4, 3);
        if found.len() == 1 {
            return Ok(found.remove(0));
        }
        return Err(domain(
            "triangle-point needs size 4 in the database".to_string(),
        ));
    }
    if let Some(k) = name.strip_prefix("convex-") {
        let k: usize = k
            .parse()
            .map_err(|_| domain(format!("bad convex alias {name:?}")))?;
        return store
            .convex_code(k)
            .ok_or_else(|| domain(format!("size {k} is not in the database")));
    }
    if let Some(k) = name.strip_prefix("size-") {
        let k: usize = k
            .parse()
            .map_err(|_| domain(format!("bad size alias {name:?}")))?;
        let codes = store.codes(k);
        return match codes.len() {
            0 => Err(domain(format!("size {k} is not in the database"))),
            1 => Ok(codes.into_iter().next().expect("length checked")),
            n => Err(domain(format!(
                "alias {name:?} is ambiguous: {n} order types of size {k}"
            ))),
        };
    }
    if let Some(rest) = name.strip_prefix("hull") {
        if let Some((h, n)) = rest.split_once("-size") {
            let h: usize = h
                .parse()
                .map_err(|_| domain(format!("bad hull alias {name:?}")))?;
            let n: usize = n
                .parse()
                .map_err(|_| domain(format!("bad hull alias {name:?}")))?;
            let codes = store.codes_with_hull(n, h);
            return match codes.len() {
                0 => Err(domain(format!(
                    "no order type of size {n} with hull size {h} in the database"
                ))),
                1 => Ok(codes.into_iter().next().expect("length checked")),
                k => Err(domain(format!(
                    "alias {name:?} is ambiguous: {k} candidates: {}",
                    codes
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))),
            };
        }
    }
    Err(domain(format!(
        "unknown order type {name:?}; use a canonical code or one of \
         convex-k, triangle-point, size-n, hull<h>-size<n>"
    )))
}

/// Resolves a root name: `empty` and tiny convex roots work without a
/// database entry; everything else goes through [`resolve_code`].
fn resolve_root(store: &OrderTypeStore, name: &str) -> CliResult<Chirotope> {
    match name {
        "empty" | "convex-0" | "size-0" => return Ok(Chirotope::convex(0)),
        "convex-1" | "size-1" => return Ok(Chirotope::convex(1)),
        "convex-2" | "size-2" => return Ok(Chirotope::convex(2)),
        _ => {}
    }
    Ok(resolve_code(store, name)?.decode())
}

fn parse_model(spec: &str) -> CliResult<MeasureModel> {
    if spec == "two-circles-limit" {
        return Ok(MeasureModel::two_circles_limit());
    }
    if spec == "square" {
        return Ok(MeasureModel::unit_square());
    }
    if let Some(t) = spec.strip_prefix("two-circles:") {
        let t = parse_rational(t).map_err(|e| domain(format!("bad radius {t:?}: {e}")))?;
        return Ok(MeasureModel::two_circles(t)?);
    }
    if let Some(ab) = spec.strip_prefix("cantor:") {
        let (a, b) = ab
            .split_once(',')
            .ok_or_else(|| domain(format!("cantor model needs a,b — got {ab:?}")))?;
        let a = parse_rational(a).map_err(|e| domain(format!("bad ratio {a:?}: {e}")))?;
        let b = parse_rational(b).map_err(|e| domain(format!("bad ratio {b:?}: {e}")))?;
        return Ok(MeasureModel::cantor_rect(a, b)?);
    }
    if let Some(depth) = spec.strip_prefix("words:") {
        let depth: usize = depth
            .parse()
            .map_err(|_| domain(format!("bad word depth {depth:?}")))?;
        return Ok(MeasureModel::binary_words(depth)?);
    }
    Err(domain(format!(
        "unknown model {spec:?}; use two-circles:<t>, two-circles-limit, \
         cantor:<a>,<b>, square, or words:<depth>"
    )))
}

fn element_rows(element: &AlgebraElement) -> Vec<(String, String)> {
    element
        .terms()
        .iter()
        .map(|(code, coeff)| (code.to_string(), format_rational(coeff)))
        .collect()
}

fn rows_to_text(rows: &[(String, String)]) -> String {
    rows.iter()
        .map(|(code, value)| format!("{code} {value}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn rows_to_csv(header: &str, rows: &[(String, String)]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (code, value) in rows {
        out.push_str(&format!("{code},{value}\n"));
    }
    out
}

#[derive(Serialize)]
struct ScalarResult {
    value: String,
}

#[derive(Serialize)]
struct ElementResult {
    level: usize,
    terms: Vec<ElementTerm>,
}

#[derive(Serialize)]
struct ElementTerm {
    code: String,
    coefficient: String,
}

#[derive(Serialize)]
struct EnumerateResult {
    max_size: usize,
    counts: Vec<SizeCount>,
    db: String,
}

#[derive(Serialize)]
struct SizeCount {
    size: usize,
    order_types: usize,
}

#[derive(Serialize)]
struct FlagCountResult {
    root: String,
    flag_size: usize,
    count: usize,
}

#[derive(Serialize)]
struct SdpBuildResult {
    out: String,
    level: usize,
    constraints: usize,
    blocks: Vec<i64>,
    roots: Vec<String>,
}

#[derive(Serialize)]
struct SdpBoundResult {
    level: usize,
    bound: String,
    bound_decimal: f64,
    squares: usize,
    dropped_pivots: usize,
    certificate: Option<String>,
}

#[derive(Serialize)]
struct SdpVerifyResult {
    level: usize,
    bound: String,
    bound_decimal: f64,
    squares: usize,
}

fn scalar(ctx: &Context, command: &str, value: String) -> Rendered {
    let csv = format!("value\n{value}\n");
    ctx.render(command, ScalarResult { value: value.clone() }, value, csv)
}

fn element_report(ctx: &Context, command: &str, element: &AlgebraElement) -> Rendered {
    let rows = element_rows(element);
    let text = rows_to_text(&rows);
    let csv = rows_to_csv("code,coefficient", &rows);
    let result = ElementResult {
        level: element.level(),
        terms: rows
            .iter()
            .map(|(code, coefficient)| ElementTerm {
                code: code.clone(),
                coefficient: coefficient.clone(),
            })
            .collect(),
    };
    ctx.render(command, result, text, csv)
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.global.threads > 0 {
        // A second initialization in the same process is harmless: the
        // first pool wins and we keep going.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global();
    }
    let mut ctx = Context::new(&cli.global);
    match cli.command {
        Command::Enumerate { max_size } => {
            let mut store = if ctx.db_path.exists() {
                OrderTypeStore::load(&ctx.db_path)?
            } else {
                OrderTypeStore::new()
            };
            store.enumerate_up_to(max_size)?;
            store.save(&ctx.db_path)?;
            let counts: Vec<SizeCount> = (3..=max_size)
                .map(|size| SizeCount {
                    size,
                    order_types: store.codes(size).len(),
                })
                .collect();
            let rows: Vec<(String, String)> = counts
                .iter()
                .map(|c| (c.size.to_string(), c.order_types.to_string()))
                .collect();
            let text = rows_to_text(&rows);
            let csv = rows_to_csv("size,order_types", &rows);
            let result = EnumerateResult {
                max_size,
                counts,
                db: ctx.config.db.clone(),
            };
            let rendered = ctx.render("enumerate", result, text, csv);
            ctx.emit(rendered);
        }
        Command::Density { small, big } => {
            let store = ctx.store()?;
            let small = resolve_code(store, &small)?;
            let big = resolve_code(store, &big)?;
            let cache = DensityCache::new(store);
            let value = cache.density(&small, &big)?;
            let rendered = scalar(&ctx, "density", format_rational(&value));
            ctx.emit(rendered);
        }
        Command::Split { small1, small2, big } => {
            let store = ctx.store()?;
            let a = resolve_code(store, &small1)?;
            let b = resolve_code(store, &small2)?;
            let c = resolve_code(store, &big)?;
            let cache = DensityCache::new(store);
            let value = cache.split_probability(&a, &b, &c)?;
            let rendered = scalar(&ctx, "split", format_rational(&value));
            ctx.emit(rendered);
        }
        Command::Lift { code, to } => {
            let store = ctx.store()?;
            let code = resolve_code(store, &code)?;
            let cache = DensityCache::new(store);
            let lifted = AlgebraElement::of_type(&code).lift(to, &cache)?;
            let rendered = element_report(&ctx, "lift", &lifted);
            ctx.emit(rendered);
        }
        Command::Average {
            root,
            flag_size,
            index,
        } => {
            let store = ctx.store()?;
            let root = resolve_root(store, &root)?;
            let basis = flag_basis(store, &root, flag_size)?;
            let flag = basis.get(index).ok_or_else(|| {
                domain(format!(
                    "flag index {index} out of range: {} flags of size {flag_size} on this root",
                    basis.len()
                ))
            })?;
            let cache = DensityCache::new(store);
            let averaged = AlgebraElement::of_flag(flag).average(&cache)?;
            let rendered = element_report(&ctx, "average", &averaged);
            ctx.emit(rendered);
        }
        Command::Flags { command } => match command {
            FlagsCommand::Count { root, flag_size } => {
                let store = ctx.store()?;
                let root_chi = resolve_root(store, &root)?;
                let basis = flag_basis(store, &root_chi, flag_size)?;
                let result = FlagCountResult {
                    root,
                    flag_size,
                    count: basis.len(),
                };
                let text = result.count.to_string();
                let csv = format!("count\n{}\n", result.count);
                let rendered = ctx.render("flags count", result, text, csv);
                ctx.emit(rendered);
            }
        },
        Command::Sdp { command } => run_sdp(&mut ctx, command)?,
        Command::Estimate { model, omega } => {
            let model = parse_model(&model)?;
            let store = ctx.store()?;
            let omega = resolve_code(store, &omega)?;
            let est = estimate_density(&model, &omega, ctx.trials, ctx.seed)?;
            let report = est.report(&model, &omega);
            let text = format!(
                "{} {} mean={} ci95={} trials={}",
                report.model, report.omega, report.mean, report.ci95, report.trials
            );
            let csv = reports_to_csv(std::slice::from_ref(&report));
            let rendered = ctx.render("estimate", report, text, csv);
            ctx.emit(rendered);
        }
        Command::Experiment { command } => match command {
            ExperimentCommand::TwoCircles {
                n_side,
                t,
                outer_probability,
            } => {
                let trials = usize::try_from(ctx.trials).unwrap_or(usize::MAX);
                let report = match &outer_probability {
                    Some(p) => {
                        two_circles_experiment_biased(n_side, &t, trials, ctx.seed, p)?
                    }
                    None => two_circles_experiment(n_side, &t, trials, ctx.seed)?,
                };
                let mean_fraction: f64 = report.hull_fractions.iter().sum::<f64>()
                    / report.hull_fractions.len().max(1) as f64;
                let text = format!(
                    "n_points={} trials={} mean_hull_fraction={:.6} \
                     in_[0.49,0.51]={} covering_edge_median={}",
                    report.n_points,
                    report.trials,
                    mean_fraction,
                    report.fraction_within(0.49, 0.51),
                    report.covering_edge_median()
                );
                let mut csv = String::from("trial,hull_fraction,covering_edges\n");
                for (i, (f, c)) in report
                    .hull_fractions
                    .iter()
                    .zip(&report.covering_edges)
                    .enumerate()
                {
                    csv.push_str(&format!("{i},{f},{c}\n"));
                }
                let rendered = ctx.render("experiment two-circles", report, text, csv);
                ctx.emit(rendered);
            }
        },
        Command::Crosscheck { command } => match command {
            CrosscheckCommand::CantorWords { a, b, omega } => {
                let store = ctx.store()?;
                let omega = resolve_code(store, &omega)?;
                let report = cantor_vs_words_crosscheck(&a, &b, &omega, ctx.trials, ctx.seed)?;
                let text = format!(
                    "cantor={} words={} difference={} combined_ci={} agree={}",
                    report.cantor.mean,
                    report.words.mean,
                    report.difference,
                    report.combined_ci,
                    report.agree
                );
                let csv = reports_to_csv(&[report.cantor.clone(), report.words.clone()]);
                let rendered = ctx.render("crosscheck cantor-words", report, text, csv);
                ctx.emit(rendered);
            }
        },
        Command::CupProb { s } => {
            let value = exact_cup_probability(s)?;
            let rendered = scalar(&ctx, "cup-prob", format_rational(&value));
            ctx.emit(rendered);
        }
    }
    Ok(())
}

fn build_sdp_instance<'a>(
    store: &'a OrderTypeStore,
    level: usize,
    minimize: &str,
    roots: &[String],
) -> CliResult<order_flags::sdp::SdpInstance<'a>> {
    let code = resolve_code(store, minimize)?;
    let cache = DensityCache::new(store);
    let target = TargetSpec::density_of(&cache, &code, level)?;
    let root_chis = if roots.is_empty() {
        order_flags::sdp::default_roots(store, level)?
    } else {
        roots
            .iter()
            .map(|name| resolve_root(store, name))
            .collect::<CliResult<Vec<_>>>()?
    };
    Ok(build_instance(store, target, root_chis)?)
}

fn run_sdp(ctx: &mut Context, command: SdpCommand) -> CliResult<()> {
    match command {
        SdpCommand::Build {
            level,
            minimize,
            roots,
            out,
        } => {
            let store = ctx.store()?;
            let instance = build_sdp_instance(store, level, &minimize, &roots)?;
            emit_sdpa(&instance, &out)?;
            let problem = sdpa_problem(&instance)?;
            let result = SdpBuildResult {
                out: out.display().to_string(),
                level,
                constraints: problem.constraints,
                blocks: problem.block_sizes.clone(),
                roots: instance
                    .roots()
                    .iter()
                    .map(|r| r.canonical_code().to_string())
                    .collect(),
            };
            let text = format!(
                "wrote {} (constraints={}, blocks={:?})",
                result.out, result.constraints, result.blocks
            );
            let csv = format!(
                "out,constraints,blocks\n{},{},{}\n",
                result.out,
                result.constraints,
                result
                    .blocks
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            );
            let rendered = ctx.render("sdp build", result, text, csv);
            ctx.emit(rendered);
        }
        SdpCommand::Bound {
            level,
            minimize,
            roots,
            iterations,
            round_bits,
            cert_out,
            solution,
        } => {
            let store = ctx.store()?;
            let instance = build_sdp_instance(store, level, &minimize, &roots)?;
            let solution_text = match &solution {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| domain(format!("cannot read {}: {e}", path.display())))?,
                None => toy_solve(&instance, iterations)?,
            };
            let denominator = BigInt::one() << round_bits;
            let (cert, ingest) = ingest_solution(&instance, &solution_text, &denominator)?;
            let bound = verify_certificate(&instance, &cert)?;
            if let Some(path) = &cert_out {
                cert.save(path)?;
            }
            let result = SdpBoundResult {
                level,
                bound: format_rational(&bound),
                bound_decimal: rational_to_f64(&bound),
                squares: cert.squares.len(),
                dropped_pivots: ingest.dropped_pivots.len(),
                certificate: cert_out.as_ref().map(|p| p.display().to_string()),
            };
            let text = format!(
                "bound {} (≈ {:.6}) from {} squares",
                result.bound, result.bound_decimal, result.squares
            );
            let csv = format!(
                "bound,decimal,squares\n{},{},{}\n",
                result.bound, result.bound_decimal, result.squares
            );
            let rendered = ctx.render("sdp bound", result, text, csv);
            ctx.emit(rendered);
        }
        SdpCommand::Verify {
            level,
            minimize,
            certificate,
        } => {
            let store = ctx.store()?;
            let cert = Certificate::load(&certificate)?;
            let code = resolve_code(store, &minimize)?;
            let cache = DensityCache::new(store);
            let target = TargetSpec::density_of(&cache, &code, level)?;
            let instance = build_instance(store, target, cert.roots.clone())?;
            let bound = verify_certificate(&instance, &cert)?;
            let result = SdpVerifyResult {
                level,
                bound: format_rational(&bound),
                bound_decimal: rational_to_f64(&bound),
                squares: cert.squares.len(),
            };
            let text = format!(
                "certificate verifies: bound {} (≈ {:.6})",
                result.bound, result.bound_decimal
            );
            let csv = format!(
                "bound,decimal,squares\n{},{},{}\n",
                result.bound, result.bound_decimal, result.squares
            );
            let rendered = ctx.render("sdp verify", result, text, csv);
            ctx.emit(rendered);
        }
    }
    Ok(())
}

fn rational_to_f64(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
