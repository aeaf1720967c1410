//! `lawless`: seeded experiments and certificate checking.
//!
//! Exit status is 0 on success, 1 when an experiment fails or a
//! certificate does not verify, and 2 on a usage error or malformed input.

mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lawless_core::montecarlo::{
    alter_sweep, check_bound, decay_verdict, estimate_nontrivial_prob, exact_prob_small, finperm_bound, rational_cell,
    freeness_experiment, substream, ExperimentTable, Row, Verdict, DEFAULT_EXACT_BUDGET,
};
use lawless_core::perm::{separation_order, Bsgs, GroupKind, PermGroup, Permutation, SeparationMode};
use lawless_core::separation::{certify_not_law, Certificate, PermAction, SeparatingAction, ThompsonAction, TreeAction};
use lawless_core::thompson::{Dyadic, DyadicPLMap};
use lawless_core::trees::{grigorchuk_generators, rist_search, IteratedWreath, Portrait, VertexString};
use lawless_core::words::Word;
use serde::Serialize;
use thiserror::Error;

use crate::spec::GroupSpec;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl ToString) -> CliError {
    CliError::Failure(e.to_string())
}

#[derive(Parser)]
#[command(name = "lawless", version, about = "Refute group laws and measure freeness, reproducibly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the available experiments
    List,
    /// Estimate P(w != 1) in a finite group and test it against (1 - n/a)^n
    BoundCheck(BoundCheckArgs),
    /// Build a certificate that a word is not a law of an action
    Witness(WitnessArgs),
    /// Re-check a certificate file from scratch
    Verify {
        /// Certificate JSON as written by `witness`
        file: PathBuf,
    },
    /// Sweep alternating degrees for one word
    AlterSweep(SweepArgs),
    /// Fraction of Haar-random tuples with a short relation, per depth
    Freeness(FreenessArgs),
    /// Separation order (n, a) of a permutation group
    SeparationOrder(SeparationArgs),
    /// Exact nontriviality probability by full enumeration
    ExactProb(ExactArgs),
    /// Words in the Grigorchuk generators supported below a vertex
    Rist(RistArgs),
}

#[derive(Args, Serialize)]
struct Sampling {
    /// Number of samples per row
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Master seed
    #[arg(long, env = "LAWLESS_SEED", default_value_t = 0)]
    seed: u64,
    /// Two-sided confidence level of the Hoeffding intervals
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    /// Worker threads; 0 uses all cores. Results do not depend on it
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    workers: usize,
}

#[derive(Args)]
struct Output {
    /// Write `<OUT>.csv` and `<OUT>.json` (certificates: `<OUT>.cert.json`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BoundCheckArgs {
    /// Group spec: alt:k, sym:k or tree:d,D
    #[arg(long)]
    group: GroupSpec,
    #[arg(long)]
    word: String,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct WitnessArgs {
    /// Action spec: alt:k, sym:k, tree:d,D or thompson
    #[arg(long)]
    action: GroupSpec,
    #[arg(long)]
    word: String,
    /// Starting point: an integer, a leaf string such as 010, or a dyadic such as 1/2^1
    #[arg(long)]
    point: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    word: String,
    /// Comma-separated alternating degrees
    #[arg(long, value_delimiter = ',', required = true)]
    degrees: Vec<usize>,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct FreenessArgs {
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Comma-separated truncation depths
    #[arg(long, value_delimiter = ',', required = true)]
    depths: Vec<usize>,
    /// Tuple size
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Longest relation searched for
    #[arg(long, default_value_t = 6)]
    max_len: usize,
    /// Significance level of the decay tests
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct SeparationArgs {
    /// Group spec: alt:k or sym:k
    #[arg(long)]
    group: GroupSpec,
    /// Size of the fixed set
    #[arg(long)]
    n: usize,
    /// Sample this many n-sets instead of enumerating all of them
    #[arg(long)]
    trials: Option<usize>,
    /// Largest number of n-sets enumerated exactly
    #[arg(long, default_value_t = 200_000)]
    budget: u128,
    #[arg(long, env = "LAWLESS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct ExactArgs {
    /// Group spec: alt:k or sym:k
    #[arg(long)]
    group: GroupSpec,
    #[arg(long)]
    word: String,
    /// Largest |G|^k enumerated
    #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
    budget: u128,
}

#[derive(Args, Serialize)]
struct RistArgs {
    /// Vertex string, e.g. 1 or 01
    #[arg(long)]
    vertex: String,
    #[arg(long, default_value_t = 1)]
    max_len: usize,
    #[arg(long, default_value_t = 10)]
    depth: usize,
}

const EXPERIMENTS: &[(&str, &str)] = &[
    (
        "bound-check",
        "estimate P(w != 1) in a finite group; checks the (1 - n/a)^n lower bound for groups separating with order (n, a)",
    ),
    (
        "witness",
        "certificate that a word is not a law; exercises the inductive construction for separating actions",
    ),
    ("verify", "re-check a witness certificate: distinct trajectory, recomputation, moved point"),
    (
        "alter-sweep",
        "P(w != 1) over A_k for growing k; shows the bound tending to 1 for alternating composition factors",
    ),
    (
        "freeness",
        "short relations among Haar-random tuples of truncated tree automorphisms; freeness of random elements in compact groups",
    ),
    ("separation-order", "the largest a with every n-point stabilizer orbit outside the fixed set of size >= a"),
    ("exact-prob", "exact P(w != 1) by enumerating all tuples; the oracle behind the estimates"),
    ("rist", "Grigorchuk words acting only below a vertex; rigid stabilizers of a weakly branch group"),
];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let result = run(cli.command);
    match result {
        Ok(()) => {
            eprintln!("done in {:.2}s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::List => {
            for (name, about) in EXPERIMENTS {
                println!("{name:<17} {about}");
            }
            Ok(())
        }
        Command::BoundCheck(args) => bound_check(&args),
        Command::Witness(args) => witness(&args),
        Command::Verify { file } => verify(&file),
        Command::AlterSweep(args) => sweep(&args),
        Command::Freeness(args) => freeness(&args),
        Command::SeparationOrder(args) => separation(&args),
        Command::ExactProb(args) => exact(&args),
        Command::Rist(args) => rist(&args),
    }
}

fn parse_word(text: &str) -> Result<Word, CliError> {
    let word = Word::parse_any(text).map_err(usage)?;
    if word.is_empty() {
        return Err(usage("the word reduces to the empty word, which is a law in every group"));
    }
    Ok(word)
}

fn perm_chain(spec: GroupSpec) -> Result<Bsgs, CliError> {
    let group = match spec {
        GroupSpec::Alt(k) => PermGroup::standard(GroupKind::Alternating, k),
        GroupSpec::Sym(k) => PermGroup::standard(GroupKind::Symmetric, k),
        other => return Err(usage(format!("{other} is not a finite permutation group"))),
    };
    Ok(group.map_err(usage)?.bsgs())
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    config: &'a C,
    table: &'a ExperimentTable,
}

fn with_extension(prefix: &Path, extension: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(extension);
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| failure(format!("cannot write {}: {e}", path.display())))
}

fn emit_table<C: Serialize>(config: &C, table: &ExperimentTable, out: &Output) -> Result<(), CliError> {
    let csv = table.to_csv();
    print!("{csv}");
    if let Some(prefix) = &out.out {
        let report = Report { config, table };
        let json = serde_json::to_string_pretty(&report).map_err(failure)?;
        write_file(&with_extension(prefix, ".csv"), &csv)?;
        write_file(&with_extension(prefix, ".json"), &(json + "\n"))?;
    }
    Ok(())
}

fn table_outcome(table: &ExperimentTable) -> Result<(), CliError> {
    if table.any_fail() {
        Err(failure("at least one row failed its bound"))
    } else {
        Ok(())
    }
}

fn bound_check(args: &BoundCheckArgs) -> Result<(), CliError> {
    let word = parse_word(&args.word)?;
    let s = &args.sampling;
    let n = word.len();
    let mut table = ExperimentTable::new("bound-check");
    table.metadata.insert("group".into(), args.group.to_string());
    table.metadata.insert("seed".into(), s.seed.to_string());
    table.metadata.insert("interval".into(), "hoeffding".into());
    table.metadata.insert("confidence".into(), s.confidence.to_string());
    let mut params = std::collections::BTreeMap::from([
        ("group".to_string(), args.group.to_string()),
        ("word".to_string(), word.to_string()),
        ("n".to_string(), n.to_string()),
    ]);
    let row = match args.group {
        GroupSpec::Alt(_) | GroupSpec::Sym(_) => {
            let chain = perm_chain(args.group)?;
            let mut rng = substream(s.seed, u64::MAX);
            let order = separation_order(&chain, n, SeparationMode::exact(), &mut rng).map_err(failure)?;
            params.insert("a".to_string(), order.a.to_string());
            let bound = finperm_bound(n, order.a);
            let estimate =
                estimate_nontrivial_prob(&chain, &word, s.samples, s.confidence, s.seed, s.workers).map_err(usage)?;
            let check = check_bound(&estimate, &bound);
            Row {
                params,
                estimate: Some(estimate),
                bound: Some(rational_cell(&bound)),
                verdict: check.verdict,
                seed: s.seed,
                note: None,
            }
        }
        GroupSpec::Tree { arity, depth } => {
            let group = IteratedWreath::full(arity, depth);
            let estimate =
                estimate_nontrivial_prob(&group, &word, s.samples, s.confidence, s.seed, s.workers).map_err(usage)?;
            Row {
                params,
                estimate: Some(estimate),
                bound: None,
                verdict: Verdict::NotApplicable,
                seed: s.seed,
                note: Some("no separation bound for tree truncations".into()),
            }
        }
        other => return Err(usage(format!("{other} has no uniform sampler; use alt:k, sym:k or tree:d,D"))),
    };
    eprintln!("{} {}: verdict {}", args.group, word, row.verdict);
    table.rows.push(row);
    emit_table(args, &table, &args.output)?;
    table_outcome(&table)
}

fn witness(args: &WitnessArgs) -> Result<(), CliError> {
    let word = parse_word(&args.word)?;
    let point = args.point.as_deref();
    let json = match args.action {
        GroupSpec::Alt(k) | GroupSpec::Sym(k) => {
            let kind = if matches!(args.action, GroupSpec::Alt(_)) {
                GroupKind::Alternating
            } else {
                GroupKind::Symmetric
            };
            let action = PermAction::standard(kind, k).map_err(usage)?;
            let x0: usize = point.unwrap_or("1").parse().map_err(|_| usage("point must be an integer"))?;
            certificate_json(&word, &action, &x0)?
        }
        GroupSpec::Tree { arity, depth } => {
            let action = TreeAction::new(arity, depth).map_err(usage)?;
            let default = "0".repeat(depth);
            let x0 = VertexString::parse(point.unwrap_or(&default), arity).map_err(usage)?;
            certificate_json(&word, &action, &x0)?
        }
        GroupSpec::Thompson => {
            let x0: Dyadic = point.unwrap_or("1/2^1").parse().map_err(usage)?;
            certificate_json(&word, &ThompsonAction, &x0)?
        }
        GroupSpec::Grig => return Err(usage("grig has no separating action adapter; use rist")),
    };
    println!("{json}");
    if let Some(prefix) = &args.output.out {
        write_file(&with_extension(prefix, ".cert.json"), &(json + "\n"))?;
    }
    Ok(())
}

fn certificate_json<A>(word: &Word, action: &A, x0: &A::Point) -> Result<String, CliError>
where
    A: SeparatingAction,
    A::Element: Serialize,
    A::Point: Serialize,
{
    action.check_point(x0).map_err(usage)?;
    let cert = certify_not_law(word, action, x0).map_err(failure)?;
    eprintln!(
        "{word} is not a law of {}: x_0 moves to x_{} through {} distinct points",
        action.name(),
        word.len(),
        word.len() + 1
    );
    serde_json::to_string_pretty(&cert).map_err(failure)
}

fn verify(file: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(file).map_err(|e| usage(format!("cannot read {}: {e}", file.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| usage(format!("malformed certificate: {e}")))?;
    let name = value
        .get("action")
        .and_then(|a| a.as_str())
        .ok_or_else(|| usage("certificate has no action field"))?;
    let spec: GroupSpec = name.parse().map_err(usage)?;
    match spec {
        GroupSpec::Alt(k) => check_certificate::<_, Permutation, usize>(value, &PermAction::standard(GroupKind::Alternating, k).map_err(usage)?),
        GroupSpec::Sym(k) => check_certificate::<_, Permutation, usize>(value, &PermAction::standard(GroupKind::Symmetric, k).map_err(usage)?),
        GroupSpec::Tree { arity, depth } => {
            check_certificate::<_, Portrait, VertexString>(value, &TreeAction::new(arity, depth).map_err(usage)?)
        }
        GroupSpec::Thompson => check_certificate::<_, DyadicPLMap, Dyadic>(value, &ThompsonAction),
        GroupSpec::Grig => Err(usage("no certificates exist for grig")),
    }
}

fn check_certificate<A, E, P>(value: serde_json::Value, action: &A) -> Result<(), CliError>
where
    A: SeparatingAction<Element = E, Point = P>,
    E: Clone + PartialEq + serde::de::DeserializeOwned,
    P: PartialEq + serde::de::DeserializeOwned,
{
    let cert: Certificate<E, P> =
        serde_json::from_value(value).map_err(|e| usage(format!("malformed certificate: {e}")))?;
    cert.check(action).map_err(|v| failure(format!("certificate rejected: {v}")))?;
    println!("ok: {} is not a law of {}", cert.trace.word, cert.action);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let word = parse_word(&args.word)?;
    let s = &args.sampling;
    let table = alter_sweep(&word, &args.degrees, s.samples, s.confidence, s.seed, s.workers).map_err(usage)?;
    for row in &table.rows {
        eprintln!("k={}: {}", row.params["k"], row.verdict);
    }
    emit_table(args, &table, &args.output)?;
    table_outcome(&table)
}

fn freeness(args: &FreenessArgs) -> Result<(), CliError> {
    let s = &args.sampling;
    let table = freeness_experiment(
        args.arity,
        &args.depths,
        args.rank,
        args.max_len,
        s.samples,
        s.confidence,
        s.seed,
        s.workers,
    )
    .map_err(usage)?;
    let (non_increasing, decreased) = decay_verdict(&table, args.alpha);
    eprintln!("no significant increase between consecutive depths: {non_increasing}");
    eprintln!("last depth significantly below first: {decreased}");
    emit_table(args, &table, &args.output)?;
    table_outcome(&table)
}

fn separation(args: &SeparationArgs) -> Result<(), CliError> {
    let chain = perm_chain(args.group)?;
    let mode = match args.trials {
        Some(trials) => SeparationMode::Sampled { trials },
        None => SeparationMode::Exact { budget: args.budget },
    };
    let mut rng = substream(args.seed, 0);
    let order = separation_order(&chain, args.n, mode, &mut rng).map_err(failure)?;
    let how = if order.exact { "exact" } else { "sampled, an upper bound" };
    println!("({}, {}) over {} sets, {how}", order.n, order.a, order.sets_checked);
    Ok(())
}

fn exact(args: &ExactArgs) -> Result<(), CliError> {
    let word = parse_word(&args.word)?;
    let chain = perm_chain(args.group)?;
    let p = exact_prob_small(&chain, &word, args.budget).map_err(failure)?;
    let approx = num_traits::ToPrimitive::to_f64(&p).unwrap_or(f64::NAN);
    println!("{p} ({approx:.6})");
    Ok(())
}

fn rist(args: &RistArgs) -> Result<(), CliError> {
    let v = VertexString::parse(&args.vertex, 2).map_err(usage)?;
    let words = rist_search(&grigorchuk_generators(), &v, args.max_len, args.depth).map_err(usage)?;
    for w in &words {
        println!("{w}");
    }
    eprintln!("{} words of length <= {} act only below {}", words.len(), args.max_len, args.vertex);
    Ok(())
}
