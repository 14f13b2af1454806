//! One-binary pipeline over the curation toolkit.
//!
//! Every output artifact starts with a provenance header line carrying the
//! fully resolved configuration, so any pipeline composed of subcommands is
//! reproducible byte-for-byte from its inputs plus that header. Outputs are
//! written atomically (temp file + rename).
//!
//! Exit codes: 0 ok, 2 usage, 3 input/schema, 4 internal.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use pathset_core::canon::{dedup, kn_curve, kn_curve_csv, path_stats};
use pathset_core::corpus::ingest::{import_file, IngestConfig};
use pathset_core::corpus::synth::{manifest_to_jsonl, synthesize_corpus, DupSpec, SynthSpec};
use pathset_core::corpus::{scan_file, Corpus, CorpusError, Stage};
use pathset_core::exec::{
    filter_correct, grade, ground_truth, run_corpus, AnswerValue, CorrectnessFilter, GradeMode,
    GradePolicy, DEFAULT_BUDGET, DEFAULT_EPSILON,
};
use pathset_core::genprob::{generate_corpus, PerturbMode, PerturbSpec};
use pathset_core::select::{
    census, mix, ClusterConfig, MixError, MixSpec, Strategy, SubsetSpec,
};
use pathset_core::{corpus::group_by_question, lang};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// Errors in flag values or flag combinations; exit code 2, like clap's
/// own parse failures.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

#[derive(Parser)]
#[command(
    name = "pathset",
    version,
    about = "Curate math-reasoning path corpora: dedup, select, mix, execute, perturb"
)]
struct Cli {
    /// Worker threads for group-parallel stages (default: all cores, or
    /// PATHSET_THREADS). `--threads 1` forces serial mode; output is
    /// identical either way.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file: schema per line, ids, fence structure.
    LoadCheck {
        input: PathBuf,
        /// Import from a foreign layout first: gsm8k, gsm-hard, svamp, math.
        #[arg(long)]
        format: Option<String>,
    },
    /// Dump each record's fenced code block (optionally with its AST).
    Extract {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Emit a stable s-expression rendering of the parsed AST.
        #[arg(long)]
        dump_ast: bool,
    },
    /// Deduplicate per question by canonical code form.
    Dedup {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Per-question path-count histogram, median, and mean.
    Stats {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// k-N curve: corpus size after capping each question at k paths.
    Kcurve {
        input: PathBuf,
        /// Comma-separated k values; infinity is always included.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Keep at most k paths per question, randomly or by clustering.
    Select(SelectArgs),
    /// Merge corpora with source tags rewritten.
    Mix {
        /// path:tag pairs, repeatable.
        #[arg(long = "input", required = true)]
        inputs: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        shuffle_seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Execute every record; emit per-record outcome rows.
    Exec {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Split a corpus into kept/rejected by executability and correctness.
    Filter {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        rejected: Option<PathBuf>,
        /// exact | round | abs | gsmhard-raw | off (off keeps all executable).
        #[arg(long, default_value = "exact")]
        policy: String,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Grade a prediction against a truth value (one-shot or batch).
    Grade(GradeArgs),
    /// Generate numerically perturbed problems with validated answers.
    Perturb(PerturbArgs),
    /// Fabricate a synthetic corpus plus its class-count manifest.
    Synth(SynthArgs),
    /// Distinct canonical classes per question.
    Census {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SelectArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Paths per question; a number or `inf`.
    #[arg(long, default_value = "9")]
    k: String,
    #[arg(long, default_value = "random")]
    strategy: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lsa_dims: Option<usize>,
    #[arg(long)]
    ngram: Option<usize>,
    #[arg(long)]
    kmeans_iters: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GradeArgs {
    /// One-shot prediction value.
    #[arg(long)]
    pred: Option<String>,
    /// One-shot truth value.
    #[arg(long)]
    truth: Option<String>,
    /// Batch mode: outcome rows from `exec`.
    #[arg(long)]
    outcomes: Option<PathBuf>,
    /// Batch mode: corpus carrying ground-truth answers.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value = "exact")]
    policy: String,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// dist | lang | noise
    #[arg(long, default_value = "dist")]
    mode: String,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    decimal_places: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    retries: Option<usize>,
    #[arg(long)]
    require_nonnegative: Option<bool>,
    #[arg(long)]
    require_integer: Option<bool>,
    #[arg(long)]
    word_bound: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    questions: usize,
    /// Distinct classes per question, cycled (e.g. 2,4,1).
    #[arg(long, value_delimiter = ',', default_value = "3")]
    distinct: Vec<usize>,
    /// Uniform duplicates per class.
    #[arg(long, default_value_t = 2)]
    dup: usize,
    /// Per-class duplicate counts, cycled; overrides --dup.
    #[arg(long, value_delimiter = ',')]
    dup_per_class: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Values from `--config`, consulted when a flag is absent.
#[derive(Default)]
struct FileConfig(serde_json::Value);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig(serde_json::Value::Null)),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                let value: serde_json::Value = serde_json::from_str(&text)
                    .with_context(|| format!("config {} is not valid JSON", p.display()))?;
                Ok(FileConfig(value))
            }
        }
    }

    fn get(&self, section: &str, key: &str) -> Option<&serde_json::Value> {
        // Per-subcommand block first, then top level.
        self.0
            .get(section)
            .and_then(|s| s.get(key))
            .or_else(|| self.0.get(key))
    }

    fn u64_or(&self, section: &str, key: &str, flag: Option<u64>, default: u64) -> u64 {
        flag.or_else(|| self.get(section, key).and_then(|v| v.as_u64()))
            .unwrap_or(default)
    }

    fn usize_or(&self, section: &str, key: &str, flag: Option<usize>, default: usize) -> usize {
        flag.or_else(|| {
            self.get(section, key)
                .and_then(|v| v.as_u64())
                .map(|v| v as usize)
        })
        .unwrap_or(default)
    }

    fn f64_or(&self, section: &str, key: &str, flag: Option<f64>, default: f64) -> f64 {
        flag.or_else(|| self.get(section, key).and_then(|v| v.as_f64()))
            .unwrap_or(default)
    }

    fn bool_or(&self, section: &str, key: &str, flag: Option<bool>, default: bool) -> bool {
        flag.or_else(|| self.get(section, key).and_then(|v| v.as_bool()))
            .unwrap_or(default)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("PATHSET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            emit_error("internal", &format!("thread pool: {}", e));
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, class) = classify(&e);
            emit_error(class, &format!("{:#}", e));
            ExitCode::from(code)
        }
    }
}

fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return (EXIT_USAGE, "usage");
        }
        if cause.downcast_ref::<CorpusError>().is_some() {
            return (EXIT_SCHEMA, "schema");
        }
        if cause.downcast_ref::<MixError>().is_some() {
            return (EXIT_SCHEMA, "schema");
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (EXIT_SCHEMA, "schema");
        }
    }
    (EXIT_INTERNAL, "internal")
}

fn emit_error(class: &str, message: &str) {
    let row = json!({ "error": class, "message": message });
    eprintln!("{}", row);
}

fn run(cli: Cli) -> Result<()> {
    let config = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::LoadCheck { input, format } => cmd_load_check(&input, format.as_deref()),
        Command::Extract {
            input,
            output,
            dump_ast,
        } => cmd_extract(&input, output.as_deref(), dump_ast),
        Command::Dedup {
            input,
            output,
            report,
        } => cmd_dedup(&input, &output, report.as_deref()),
        Command::Stats { input, output } => cmd_stats(&input, output.as_deref()),
        Command::Kcurve { input, ks, output } => cmd_kcurve(&input, &ks, output.as_deref()),
        Command::Select(args) => cmd_select(args, &config),
        Command::Mix {
            inputs,
            output,
            shuffle_seed,
            report,
        } => cmd_mix(&inputs, &output, shuffle_seed, report.as_deref(), &config),
        Command::Exec {
            input,
            output,
            budget,
        } => cmd_exec(&input, output.as_deref(), budget, &config),
        Command::Filter {
            input,
            output,
            rejected,
            policy,
            epsilon,
            budget,
            report,
        } => cmd_filter(
            &input,
            &output,
            rejected.as_deref(),
            &policy,
            epsilon,
            budget,
            report.as_deref(),
            &config,
        ),
        Command::Grade(args) => cmd_grade(args, &config),
        Command::Perturb(args) => cmd_perturb(args, &config),
        Command::Synth(args) => cmd_synth(args, &config),
        Command::Census { input, output } => cmd_census(&input, output.as_deref()),
    }
}

/// Provenance header embedded in every artifact.
fn pipeline_header(
    subcommand: &str,
    stage: Option<Stage>,
    options: serde_json::Value,
) -> serde_json::Value {
    json!({
        "pipeline": {
            "tool": "pathset",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "stage": stage.map(|s| s.to_string()),
            "options": options,
        }
    })
}

/// Atomic write: temp file in the destination directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .context("create temp file")?;
    tmp.write_all(contents.as_bytes())
        .context("write temp file")?;
    tmp.persist(path)
        .with_context(|| format!("rename into {}", path.display()))?;
    Ok(())
}

/// Writes to the path, or stdout when no path is given.
fn write_out(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{}", contents);
            std::io::stdout().flush().context("flush stdout")?;
            Ok(())
        }
    }
}

fn write_corpus(path: &Path, corpus: &Corpus, header: serde_json::Value) -> Result<()> {
    let mut corpus = corpus.clone();
    corpus.header = Some(header.to_string());
    write_atomic(path, &corpus.to_jsonl())
}

fn write_report(path: &Path, header: serde_json::Value, body: serde_json::Value) -> Result<()> {
    let mut object = serde_json::Map::new();
    if let serde_json::Value::Object(h) = header {
        object.extend(h);
    }
    if let serde_json::Value::Object(b) = body {
        object.extend(b);
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(object))?;
    write_atomic(path, &format!("{}\n", text))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::load(path).with_context(|| format!("loading {}", path.display()))
}

fn cmd_load_check(input: &Path, format: Option<&str>) -> Result<()> {
    if let Some(name) = format {
        let cfg = IngestConfig::preset(name)
            .ok_or_else(|| anyhow!("unknown format `{}` (gsm8k, gsm-hard, svamp, math)", name))?;
        let corpus = import_file(input, &cfg)?;
        println!(
            "{}",
            json!({ "records": corpus.len(), "format": name, "errors": [] })
        );
        return Ok(());
    }
    let report = scan_file(input)?;
    let ok = report.errors.is_empty();
    println!("{}", serde_json::to_string(&report)?);
    if !ok {
        return Err(anyhow!(CorpusError::Line {
            line: 0,
            message: format!("{} malformed line(s)", report.errors.len()),
        }));
    }
    Ok(())
}

fn cmd_extract(input: &Path, output: Option<&Path>, dump_ast: bool) -> Result<()> {
    let corpus = load_corpus(input)?;
    let mut out = String::new();
    out.push_str(&pipeline_header("extract", None, json!({ "dump_ast": dump_ast })).to_string());
    out.push('\n');
    for record in &corpus.records {
        let row = match record.extract_code() {
            Ok(block) => {
                if dump_ast {
                    match lang::parse(&block.text) {
                        Ok(program) => {
                            json!({ "id": record.id, "code": block.text, "ast": program.to_sexpr() })
                        }
                        Err(e) => {
                            json!({ "id": record.id, "code": block.text, "error": e.to_string() })
                        }
                    }
                } else {
                    json!({ "id": record.id, "code": block.text })
                }
            }
            Err(e) => json!({ "id": record.id, "error": e.to_string() }),
        };
        out.push_str(&row.to_string());
        out.push('\n');
    }
    write_out(output, &out)
}

fn cmd_dedup(input: &Path, output: &Path, report_path: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(input)?;
    let (deduped, report) = dedup(&corpus);
    let header = pipeline_header("dedup", Some(Stage::Deduped), json!({ "input": input }));
    write_corpus(output, &deduped, header.clone())?;
    if let Some(path) = report_path {
        write_report(path, header, serde_json::to_value(&report)?)?;
    }
    log::info!(
        "dedup: {} -> {} records ({} quarantined)",
        corpus.len(),
        deduped.len(),
        report.quarantined
    );
    Ok(())
}

fn cmd_stats(input: &Path, output: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(input)?;
    let stats = path_stats(&corpus);
    let header = pipeline_header("stats", None, json!({ "input": input }));
    let mut body = serde_json::Map::new();
    if let serde_json::Value::Object(h) = header {
        body.extend(h);
    }
    if let serde_json::Value::Object(s) = serde_json::to_value(&stats)? {
        body.extend(s);
    }
    let text = format!("{}\n", serde_json::Value::Object(body));
    write_out(output, &text)
}

fn cmd_kcurve(input: &Path, ks: &[usize], output: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(input)?;
    let points = kn_curve(&corpus, ks);
    let header = pipeline_header("kcurve", None, json!({ "input": input, "ks": ks }));
    let text = format!("# {}\n{}", header, kn_curve_csv(&points));
    write_out(output, &text)
}

fn cmd_select(args: SelectArgs, config: &FileConfig) -> Result<()> {
    let k = match args.k.as_str() {
        "inf" | "infinity" => None,
        text => Some(
            text.parse::<usize>()
                .map_err(|_| anyhow!("--k must be a positive integer or `inf`"))?,
        ),
    };
    if k == Some(0) {
        return Err(anyhow!("--k must be at least 1"));
    }
    let strategy = match args.strategy.as_str() {
        "random" => Strategy::Random,
        "cluster" => Strategy::Cluster,
        other => return Err(anyhow!("unknown strategy `{}` (random, cluster)", other)),
    };
    let spec = SubsetSpec {
        k,
        strategy,
        seed: config.u64_or("select", "seed", args.seed, 0),
    };
    let cfg = ClusterConfig {
        ngram: config.usize_or("select", "ngram", args.ngram, 3),
        lsa_dims: config.usize_or("select", "lsa_dims", args.lsa_dims, 32),
        kmeans_iters: config.usize_or("select", "kmeans_iters", args.kmeans_iters, 100),
        seed: config.u64_or("select", "seed", args.seed, 0),
    };
    let corpus = load_corpus(&args.input)?;
    let (selected, report) = pathset_core::select::select(&corpus, &spec, &cfg);
    let header = pipeline_header(
        "select",
        Some(Stage::Selected),
        json!({ "input": args.input, "spec": spec, "cluster": cfg }),
    );
    write_corpus(&args.output, &selected, header.clone())?;
    if let Some(path) = args.report.as_deref() {
        write_report(path, header, serde_json::to_value(&report)?)?;
    }
    Ok(())
}

fn cmd_mix(
    inputs: &[String],
    output: &Path,
    shuffle_seed: Option<u64>,
    report_path: Option<&Path>,
    config: &FileConfig,
) -> Result<()> {
    let shuffle_seed =
        shuffle_seed.or_else(|| config.get("mix", "shuffle_seed").and_then(|v| v.as_u64()));
    let mut parsed = Vec::new();
    for spec in inputs {
        let (path, tag) = spec
            .rsplit_once(':')
            .ok_or_else(|| anyhow!("--input must be path:tag, got `{}`", spec))?;
        if tag.is_empty() || path.is_empty() {
            return Err(anyhow!("--input must be path:tag, got `{}`", spec));
        }
        parsed.push((PathBuf::from(path), tag.to_string()));
    }
    let spec = MixSpec {
        inputs: parsed,
        shuffle_seed,
    };
    let (mixed, report) = mix(&spec)?;
    let header = pipeline_header(
        "mix",
        Some(Stage::Mixed),
        json!({ "inputs": inputs, "shuffle_seed": shuffle_seed }),
    );
    write_corpus(output, &mixed, header.clone())?;
    if let Some(path) = report_path {
        write_report(path, header, serde_json::to_value(&report)?)?;
    }
    Ok(())
}

fn cmd_exec(
    input: &Path,
    output: Option<&Path>,
    budget: Option<u64>,
    config: &FileConfig,
) -> Result<()> {
    let budget = config.u64_or("exec", "budget", budget, DEFAULT_BUDGET);
    let corpus = load_corpus(input)?;
    let outcomes = run_corpus(&corpus, budget);
    let mut out = String::new();
    out.push_str(
        &pipeline_header("exec", None, json!({ "input": input, "budget": budget })).to_string(),
    );
    out.push('\n');
    for (record, outcome) in corpus.records.iter().zip(&outcomes) {
        out.push_str(&outcome.to_json_row(&record.id).to_string());
        out.push('\n');
    }
    write_out(output, &out)
}

fn parse_policy(name: &str, epsilon: Option<f64>) -> Result<Option<GradePolicy>> {
    let mode = match name {
        "off" => return Ok(None),
        "exact" => GradeMode::Exact,
        "round" => GradeMode::Round,
        "abs" => GradeMode::Abs,
        "gsmhard-raw" | "gsmhard_raw" => GradeMode::GsmhardRaw,
        other => {
            return Err(anyhow!(
                "unknown policy `{}` (exact, round, abs, gsmhard-raw, off)",
                other
            ))
        }
    };
    Ok(Some(GradePolicy {
        mode,
        epsilon: epsilon.unwrap_or(DEFAULT_EPSILON),
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_filter(
    input: &Path,
    output: &Path,
    rejected_path: Option<&Path>,
    policy: &str,
    epsilon: Option<f64>,
    budget: Option<u64>,
    report_path: Option<&Path>,
    config: &FileConfig,
) -> Result<()> {
    let budget = config.u64_or("filter", "budget", budget, DEFAULT_BUDGET);
    let epsilon = Some(config.f64_or("filter", "epsilon", epsilon, DEFAULT_EPSILON));
    let filter = match parse_policy(policy, epsilon)? {
        None => CorrectnessFilter::KeepAllExecutable,
        Some(p) => CorrectnessFilter::Graded(p),
    };
    let corpus = load_corpus(input)?;
    let (kept, rejected, report) = filter_correct(&corpus, &filter, budget);
    let header = pipeline_header(
        "filter",
        Some(corpus.stage),
        json!({ "input": input, "policy": policy, "epsilon": epsilon, "budget": budget }),
    );
    write_corpus(output, &kept, header.clone())?;
    if let Some(path) = rejected_path {
        write_corpus(path, &rejected, header.clone())?;
    }
    if let Some(path) = report_path {
        write_report(path, header, serde_json::to_value(&report)?)?;
    }
    Ok(())
}

fn cmd_grade(args: GradeArgs, config: &FileConfig) -> Result<()> {
    let epsilon = Some(config.f64_or("grade", "epsilon", args.epsilon, DEFAULT_EPSILON));
    let policy = parse_policy(&args.policy, epsilon)?
        .ok_or_else(|| anyhow!("`off` is not a grading policy; pick a mode"))?;
    if let (Some(pred), Some(truth)) = (args.pred.as_deref(), args.truth.as_deref()) {
        let correct = grade(
            &AnswerValue::Text(pred.to_string()),
            &AnswerValue::Text(truth.to_string()),
            &policy,
        );
        println!(
            "{}",
            json!({ "pred": pred, "truth": truth, "correct": correct })
        );
        return Ok(());
    }
    let (Some(outcomes_path), Some(corpus_path)) =
        (args.outcomes.as_deref(), args.corpus.as_deref())
    else {
        return Err(anyhow!(
            "grade needs either --pred/--truth or --outcomes/--corpus"
        ));
    };
    let corpus = load_corpus(corpus_path)?;
    let truths: std::collections::HashMap<&str, Option<AnswerValue>> = corpus
        .records
        .iter()
        .map(|r| (r.id.as_str(), ground_truth(r)))
        .collect();
    let text = std::fs::read_to_string(outcomes_path)
        .with_context(|| format!("reading {}", outcomes_path.display()))?;
    let mut out = String::new();
    out.push_str(
        &pipeline_header(
            "grade",
            None,
            json!({ "outcomes": outcomes_path, "corpus": corpus_path, "policy": args.policy }),
        )
        .to_string(),
    );
    out.push('\n');
    let mut total = 0usize;
    let mut correct_count = 0usize;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let row: serde_json::Value = serde_json::from_str(line)?;
        if row.get("pipeline").is_some() {
            continue;
        }
        let id = row
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| anyhow!("outcome row without id"))?;
        let pred = row.get("answer").and_then(json_to_answer);
        let truth = truths.get(id).cloned().flatten();
        let verdict = match (&pred, &truth) {
            (Some(p), Some(t)) => grade(p, t, &policy),
            _ => false,
        };
        total += 1;
        if verdict {
            correct_count += 1;
        }
        out.push_str(&json!({ "id": id, "correct": verdict }).to_string());
        out.push('\n');
    }
    out.push_str(&json!({ "summary": { "total": total, "correct": correct_count } }).to_string());
    out.push('\n');
    write_out(args.output.as_deref(), &out)
}

fn json_to_answer(value: &serde_json::Value) -> Option<AnswerValue> {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(AnswerValue::Int(i.into()))
            } else {
                n.as_f64().map(AnswerValue::Dec)
            }
        }
        serde_json::Value::String(s) => Some(AnswerValue::Text(s.clone())),
        _ => None,
    }
}

fn cmd_perturb(args: PerturbArgs, config: &FileConfig) -> Result<()> {
    let mode = match args.mode.as_str() {
        "dist" | "distribution" => PerturbMode::Distribution,
        "lang" | "language" => PerturbMode::Language,
        "noise" => PerturbMode::Noise,
        other => return Err(anyhow!("unknown mode `{}` (dist, lang, noise)", other)),
    };
    let defaults = PerturbSpec::default();
    let spec = PerturbSpec {
        mode,
        mu: config.f64_or("perturb", "mu", args.mu, defaults.mu),
        sigma: config.f64_or("perturb", "sigma", args.sigma, defaults.sigma),
        decimal_places: config.usize_or(
            "perturb",
            "decimal_places",
            args.decimal_places,
            defaults.decimal_places,
        ),
        seed: config.u64_or("perturb", "seed", args.seed, defaults.seed),
        retry_limit: config.usize_or("perturb", "retries", args.retries, defaults.retry_limit),
        require_nonnegative: config.bool_or(
            "perturb",
            "require_nonnegative",
            args.require_nonnegative,
            defaults.require_nonnegative,
        ),
        require_integer: config.bool_or(
            "perturb",
            "require_integer",
            args.require_integer,
            defaults.require_integer,
        ),
        word_bound: config.u64_or("perturb", "word_bound", args.word_bound, defaults.word_bound),
    };
    spec.validate().map_err(|m| anyhow!(m))?;
    let budget = config.u64_or("perturb", "budget", args.budget, DEFAULT_BUDGET);
    let corpus = load_corpus(&args.input)?;
    let (problems, _rejections, report) = generate_corpus(&corpus, &spec, budget);
    let header = pipeline_header(
        "perturb",
        Some(Stage::Generated),
        json!({ "input": args.input, "spec": spec, "budget": budget }),
    );
    let mut out = String::new();
    out.push_str(&header.to_string());
    out.push('\n');
    for problem in &problems {
        out.push_str(&problem.to_json_row(&spec).to_string());
        out.push('\n');
    }
    write_atomic(&args.output, &out)?;
    if let Some(path) = args.report.as_deref() {
        write_report(path, header, serde_json::to_value(&report)?)?;
    }
    log::info!(
        "perturb: {} generated, {} rejected",
        report.generated,
        report.rejections.values().sum::<usize>()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs, config: &FileConfig) -> Result<()> {
    let duplicates = match &args.dup_per_class {
        Some(counts) => DupSpec::PerClass(counts.clone()),
        None => DupSpec::Uniform(args.dup),
    };
    let spec = SynthSpec {
        questions: args.questions,
        distinct: args.distinct.clone(),
        duplicates,
        seed: config.u64_or("synth", "seed", args.seed, 0),
    };
    if spec.questions < 1 || spec.distinct.iter().any(|&d| d < 1) {
        return Err(anyhow!("synth counts must be at least 1"));
    }
    let (corpus, manifest) = synthesize_corpus(&spec);
    let header = pipeline_header("synth", Some(Stage::Initial), json!({ "spec": spec }));
    write_corpus(&args.output, &corpus, header)?;
    if let Some(path) = args.manifest.as_deref() {
        write_atomic(path, &manifest_to_jsonl(&manifest))?;
    }
    Ok(())
}

fn cmd_census(input: &Path, output: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(input)?;
    let groups = group_by_question(&corpus);
    let rows: Vec<serde_json::Value> = groups
        .iter()
        .map(|g| {
            json!({
                "question_id": g.question_id,
                "paths": g.members.len(),
                "census": census(g),
            })
        })
        .collect();
    let mut out = String::new();
    out.push_str(&pipeline_header("census", None, json!({ "input": input })).to_string());
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_string());
        out.push('\n');
    }
    write_out(output, &out)
}
