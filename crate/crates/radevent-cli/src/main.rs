//! `radevent` — command-line toolkit for event-annotated report corpora.
//!
//! Exit codes: 0 success; 1 blocking annotation violations (validation
//! findings, score refusals, conversion refusals); 2 usage errors; 3 I/O or
//! parse errors. Diagnostics go to stderr, data to stdout. All JSON outputs
//! carry a `tool_version` field, and every subcommand is byte-deterministic
//! for fixed inputs and flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use radevent::agreement::pairwise_agreement;
use radevent::bootstrap::{
    paired_bootstrap, paired_bootstrap_exhaustive, BootstrapError, BootstrapResult, Metric,
};
use radevent::corpus::{load_corpus, write_corpus, CorpusError};
use radevent::equivalence::MatchMode;
use radevent::graph::{from_json_document, to_json_document, GraphError, JsonDocument};
use radevent::schema::{load_schema, validate_corpus, Schema, SchemaError, Violation};
use radevent::scoring::{score_corpus, ScoreError, ScoreReport};
use radevent::stats::{
    corpus_summary, make_splits, Grouping, SplitManifest, StatsError, StatsReport,
};
use radevent::{generate_synthetic_corpus, Document};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "radevent",
    version,
    about = "Parse, validate, convert, and score event annotations over report text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Brat,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check every document in a corpus directory against the schema.
    Validate {
        /// Corpus directory (<id>.txt/<id>.ann pairs + optional manifest.json)
        dir: PathBuf,
        /// Schema config file (JSON); defaults to the built-in schema
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Emit violations as JSON instead of tab-separated lines
        #[arg(long)]
        json: bool,
    },
    /// Score a prediction corpus against a reference corpus.
    Score {
        /// Reference corpus directory
        #[arg(long = "ref")]
        ref_dir: PathBuf,
        /// Prediction corpus directory
        #[arg(long = "pred")]
        pred_dir: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Span equivalence criterion
        #[arg(long, default_value = "overlap")]
        mode: MatchMode,
        /// Emit the full report as JSON
        #[arg(long, conflicts_with = "table")]
        json: bool,
        /// Emit aligned tables (the default)
        #[arg(long)]
        table: bool,
        /// Also print the span-error breakdown table
        #[arg(long)]
        errors: bool,
    },
    /// Pairwise inter-annotator agreement between two annotators' corpora.
    Agree {
        /// First annotator's corpus directory (reference side)
        #[arg(long = "a")]
        a_dir: PathBuf,
        /// Second annotator's corpus directory (prediction side)
        #[arg(long = "b")]
        b_dir: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, default_value = "overlap")]
        mode: MatchMode,
        #[arg(long, conflicts_with = "table")]
        json: bool,
        #[arg(long)]
        table: bool,
        #[arg(long)]
        errors: bool,
    },
    /// Corpus distribution statistics.
    Stats {
        dir: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Group rows by: all | modality | split
        #[arg(long, default_value = "all")]
        group: Grouping,
        #[arg(long, conflicts_with = "table")]
        json: bool,
        #[arg(long)]
        table: bool,
    },
    /// Paired bootstrap significance test between two systems.
    Sigtest {
        /// Reference corpus directory
        #[arg(long = "ref")]
        ref_dir: PathBuf,
        /// System A prediction directory
        #[arg(long = "a")]
        a_dir: PathBuf,
        /// System B prediction directory
        #[arg(long = "b")]
        b_dir: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, default_value = "overlap")]
        mode: MatchMode,
        /// Which F1 to compare: "overall" or a category like "Lesion/TRIGGER"
        #[arg(long, default_value = "overall")]
        metric: Metric,
        #[arg(long, default_value_t = 10000)]
        replicates: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Enumerate all resample sequences exactly (tiny corpora only)
        #[arg(long)]
        exhaustive: bool,
        /// Emit the full result as JSON instead of the one-line verdict
        #[arg(long)]
        json: bool,
    },
    /// Convert a corpus between standoff directories and JSON files.
    Convert {
        #[arg(long, value_enum)]
        from: Format,
        #[arg(long, value_enum)]
        to: Format,
        /// Input: corpus directory (brat) or JSON file (json)
        input: PathBuf,
        /// Output: corpus directory (brat) or JSON file (json)
        output: PathBuf,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Generate a deterministic synthetic corpus.
    Synth {
        /// Output corpus directory
        outdir: PathBuf,
        /// Number of documents
        #[arg(long = "n")]
        n_docs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Assign every document to train/validation/test and print the manifest.
    Split {
        dir: PathBuf,
        /// Comma-separated train,validation,test ratios summing to 1
        #[arg(long, value_parser = parse_ratios, default_value = "0.7,0.1,0.2")]
        ratios: (f64, f64, f64),
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write the assignments into the corpus manifest.json
        #[arg(long)]
        apply: bool,
    },
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated ratios, e.g. 0.7,0.1,0.2".to_owned());
    }
    let parse = |part: &str| {
        part.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad ratio '{part}': {e}"))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

/// Failures mapped onto the documented exit codes.
enum AppError {
    /// Exit 1: the inputs were readable but the annotations block the task.
    Blocking(String),
    /// Exit 2: bad parameters.
    Usage(String),
    /// Exit 3: I/O failure or unparseable input.
    Input(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Blocking(_) => 1,
            AppError::Usage(_) => 2,
            AppError::Input(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            AppError::Blocking(m) | AppError::Usage(m) | AppError::Input(m) => m,
        }
    }
}

impl From<CorpusError> for AppError {
    fn from(e: CorpusError) -> Self {
        AppError::Input(e.to_string())
    }
}
impl From<SchemaError> for AppError {
    fn from(e: SchemaError) -> Self {
        AppError::Input(format!("schema config: {e}"))
    }
}
impl From<ScoreError> for AppError {
    fn from(e: ScoreError) -> Self {
        AppError::Blocking(e.to_string())
    }
}
impl From<GraphError> for AppError {
    fn from(e: GraphError) -> Self {
        AppError::Blocking(e.to_string())
    }
}
impl From<BootstrapError> for AppError {
    fn from(e: BootstrapError) -> Self {
        match e {
            BootstrapError::Score(inner) => AppError::Blocking(inner.to_string()),
            BootstrapError::Parameter(msg) => AppError::Usage(msg),
        }
    }
}
impl From<StatsError> for AppError {
    fn from(e: StatsError) -> Self {
        AppError::Usage(e.to_string())
    }
}
impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Input(format!("JSON: {e}"))
    }
}

/// Wraps any JSON payload with the tool version.
#[derive(Serialize)]
struct Versioned<T: Serialize> {
    tool_version: &'static str,
    #[serde(flatten)]
    data: T,
}

fn print_json<T: Serialize>(data: T) -> Result<(), AppError> {
    let wrapped = Versioned {
        tool_version: TOOL_VERSION,
        data,
    };
    println!("{}", serde_json::to_string_pretty(&wrapped)?);
    Ok(())
}

fn load_schema_arg(path: &Option<PathBuf>) -> Result<Schema, AppError> {
    match path {
        None => Ok(Schema::builtin()),
        Some(path) => {
            let content = fs::read_to_string(path)
                .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
            Ok(load_schema(&content)?)
        }
    }
}

fn read_json_corpus(path: &Path, schema: &Schema) -> Result<Vec<Document>, AppError> {
    let content = fs::read_to_string(path)
        .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&content)?;
    let json_docs: Vec<JsonDocument> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        #[derive(serde::Deserialize)]
        struct JsonCorpus {
            documents: Vec<JsonDocument>,
        }
        serde_json::from_value::<JsonCorpus>(value)?.documents
    };
    let mut docs = Vec::with_capacity(json_docs.len());
    for json_doc in &json_docs {
        docs.push(from_json_document(json_doc, schema)?);
    }
    Ok(docs)
}

fn write_json_corpus(path: &Path, docs: &[Document], schema: &Schema) -> Result<(), AppError> {
    #[derive(Serialize)]
    struct JsonCorpus {
        documents: Vec<JsonDocument>,
    }
    let mut documents = Vec::with_capacity(docs.len());
    for doc in docs {
        documents.push(to_json_document(doc, schema)?);
    }
    let wrapped = Versioned {
        tool_version: TOOL_VERSION,
        data: JsonCorpus { documents },
    };
    let body = serde_json::to_string_pretty(&wrapped)?;
    fs::write(path, body + "\n")
        .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn print_score_report(
    report: &ScoreReport,
    json: bool,
    errors: bool,
    agree_dirs: Option<(&Path, &Path)>,
) -> Result<(), AppError> {
    if json {
        #[derive(Serialize)]
        struct AgreeReport<'a> {
            annotator_a: String,
            annotator_b: String,
            #[serde(flatten)]
            report: &'a ScoreReport,
        }
        match agree_dirs {
            Some((a, b)) => print_json(AgreeReport {
                annotator_a: a.display().to_string(),
                annotator_b: b.display().to_string(),
                report,
            })?,
            None => print_json(report)?,
        }
    } else {
        if let Some((a, b)) = agree_dirs {
            println!(
                "annotator A (reference side): {}\nannotator B (prediction side): {}",
                a.display(),
                b.display()
            );
        }
        print!("{}", report.render_table());
        if errors {
            println!();
            print!("{}", report.render_error_table());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateOutput {
    documents: usize,
    violations: Vec<Violation>,
}

fn cmd_validate(dir: &Path, schema: &Option<PathBuf>, json: bool) -> Result<u8, AppError> {
    let schema = load_schema_arg(schema)?;
    let docs = load_corpus(dir)?;
    let violations = validate_corpus(&schema, &docs);
    let count = violations.len();
    if json {
        print_json(ValidateOutput {
            documents: docs.len(),
            violations,
        })?;
    } else {
        for violation in &violations {
            println!("{violation}");
        }
    }
    eprintln!("{count} violation(s) across {} document(s)", docs.len());
    Ok(if count == 0 { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sigtest(
    ref_dir: &Path,
    a_dir: &Path,
    b_dir: &Path,
    schema: &Option<PathBuf>,
    mode: MatchMode,
    metric: Metric,
    replicates: u64,
    seed: u64,
    exhaustive: bool,
    json: bool,
) -> Result<u8, AppError> {
    let schema = load_schema_arg(schema)?;
    let refs = load_corpus(ref_dir)?;
    let preds_a = load_corpus(a_dir)?;
    let preds_b = load_corpus(b_dir)?;
    let result: BootstrapResult = if exhaustive {
        paired_bootstrap_exhaustive(&refs, &preds_a, &preds_b, &schema, mode, metric)?
    } else {
        paired_bootstrap(
            &refs, &preds_a, &preds_b, &schema, mode, metric, replicates, seed,
        )?
    };
    if json {
        print_json(&result)?;
    } else {
        let verdict = if result.p_value < 0.05 {
            "significant"
        } else {
            "not significant"
        };
        println!("{verdict} (p={:.3})", result.p_value);
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, AppError> {
    match cli.command {
        Command::Validate { dir, schema, json } => cmd_validate(&dir, &schema, json),
        Command::Score {
            ref_dir,
            pred_dir,
            schema,
            mode,
            json,
            table: _,
            errors,
        } => {
            let schema = load_schema_arg(&schema)?;
            let refs = load_corpus(&ref_dir)?;
            let preds = load_corpus(&pred_dir)?;
            let report = score_corpus(&refs, &preds, &schema, mode)?;
            print_score_report(&report, json, errors, None)?;
            Ok(0)
        }
        Command::Agree {
            a_dir,
            b_dir,
            schema,
            mode,
            json,
            table: _,
            errors,
        } => {
            let schema = load_schema_arg(&schema)?;
            let docs_a = load_corpus(&a_dir)?;
            let docs_b = load_corpus(&b_dir)?;
            let report = pairwise_agreement(&docs_a, &docs_b, &schema, mode)?;
            print_score_report(&report, json, errors, Some((&a_dir, &b_dir)))?;
            Ok(0)
        }
        Command::Stats {
            dir,
            schema,
            group,
            json,
            table: _,
        } => {
            let schema = load_schema_arg(&schema)?;
            let docs = load_corpus(&dir)?;
            let report: StatsReport = corpus_summary(&docs, &schema, group);
            if json {
                print_json(&report)?;
            } else {
                print!("{}", report.render_table());
            }
            Ok(0)
        }
        Command::Sigtest {
            ref_dir,
            a_dir,
            b_dir,
            schema,
            mode,
            metric,
            replicates,
            seed,
            exhaustive,
            json,
        } => cmd_sigtest(
            &ref_dir, &a_dir, &b_dir, &schema, mode, metric, replicates, seed, exhaustive, json,
        ),
        Command::Convert {
            from,
            to,
            input,
            output,
            schema,
        } => {
            let schema = load_schema_arg(&schema)?;
            let docs = match from {
                Format::Brat => load_corpus(&input)?,
                Format::Json => read_json_corpus(&input, &schema)?,
            };
            match to {
                Format::Brat => write_corpus(&output, &docs)?,
                Format::Json => write_json_corpus(&output, &docs, &schema)?,
            }
            eprintln!("converted {} document(s)", docs.len());
            Ok(0)
        }
        Command::Synth {
            outdir,
            n_docs,
            seed,
            schema,
        } => {
            let schema = load_schema_arg(&schema)?;
            let docs = generate_synthetic_corpus(&schema, n_docs, seed);
            write_corpus(&outdir, &docs)?;
            eprintln!(
                "wrote {} synthetic document(s) to {}",
                docs.len(),
                outdir.display()
            );
            Ok(0)
        }
        Command::Split {
            dir,
            ratios,
            seed,
            apply,
        } => {
            let docs = load_corpus(&dir)?;
            let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
            let manifest: SplitManifest = make_splits(&ids, ratios, seed)?;
            if apply {
                let mut docs = docs;
                for doc in &mut docs {
                    doc.metadata.split = manifest.assignments.get(&doc.id).copied();
                }
                write_corpus(&dir, &docs)?;
            }
            let (train, validation, test) = manifest.counts();
            print_json(&manifest)?;
            eprintln!("train={train} validation={validation} test={test}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
