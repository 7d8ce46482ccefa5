//! `fmtprof`: profile web archives by format, analyse the resulting
//! dataset, generate synthetic corpora and check signature files.
//!
//! Exit codes: 0 success, 1 runtime data error, 2 configuration, schema or
//! parse error.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use fmtprof_core::analyzer::{write_report, ReportConfig, Tool, TrendReport};
use fmtprof_core::corpusgen::{corpus_digest, generate, load_spec};
use fmtprof_core::profiler::{emit, load, profile_archives, ProfileError};
use fmtprof_core::sig_engine::{compile_signatures, shipped_broad, shipped_fine, SignatureSet};
use fmtprof_core::warc_ingest::{discover_archives, DEFAULT_MAX_PAYLOAD};

const LOG_ENV: &str = "FMTPROF_LOG";

#[derive(Parser)]
#[command(name = "fmtprof", version, about = "Format profiling for web archives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify every record in the inputs and write the profile TSV.
    Profile(ProfileArgs),
    /// Compute trend analyses from a profile TSV.
    Analyze(AnalyzeArgs),
    /// Write a synthetic corpus and its ground-truth manifest.
    GenCorpus(GenArgs),
    /// Compile a signature file and list its weak signatures.
    ValidateSignatures(ValidateArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Archive files or directories (searched recursively).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Fine-grained signature file; the built-in set when omitted.
    #[arg(long)]
    fine_sig: Option<PathBuf>,
    /// Broad signature file; the built-in set when omitted.
    #[arg(long)]
    broad_sig: Option<PathBuf>,
    /// Profile TSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    shards: u16,
    /// Payload bytes kept per record.
    #[arg(long, default_value_t = DEFAULT_MAX_PAYLOAD)]
    max_payload: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Profile TSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    report_dir: PathBuf,
    /// Tool whose base types drive lifespans and format counts.
    #[arg(long, default_value = "broad")]
    format_tool: Tool,
}

#[derive(Args)]
struct GenArgs {
    /// Corpus spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Signature file.
    path: PathBuf,
}

enum Failure {
    Data(anyhow::Error),
    Config(anyhow::Error),
}

type Outcome = Result<(), Failure>;

trait Classify<T> {
    fn data(self) -> Result<T, Failure>;
    fn config(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Profile(a) => cmd_profile(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::GenCorpus(a) => cmd_gen_corpus(a),
        Command::ValidateSignatures(a) => cmd_validate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_signatures(path: &Path) -> anyhow::Result<SignatureSet> {
    let bytes = fs::read(path)
        .with_context(|| format!("SchemaError: cannot read signature file {}", path.display()))?;
    compile_signatures(&bytes).with_context(|| format!("in {}", path.display()))
}

fn signatures(path: Option<&Path>, builtin: fn() -> SignatureSet) -> anyhow::Result<SignatureSet> {
    match path {
        Some(p) => read_signatures(p),
        None => Ok(builtin()),
    }
}

fn cmd_profile(a: ProfileArgs) -> Outcome {
    for p in &a.input {
        if !p.exists() {
            return Err(Failure::Config(anyhow!(
                "input {} does not exist",
                p.display()
            )));
        }
    }
    let fine = signatures(a.fine_sig.as_deref(), shipped_fine).config()?;
    let broad = signatures(a.broad_sig.as_deref(), shipped_broad).config()?;
    let files = discover_archives(&a.input).config()?;
    if files.is_empty() {
        log::warn!("no archive files found under the given inputs");
    }
    let (data, stats) =
        profile_archives(&files, &fine, &broad, usize::from(a.shards), a.max_payload).map_err(
            |e| match e {
                ProfileError::ModeMismatch { .. } => Failure::Config(e.into()),
                e => Failure::Data(e.into()),
            },
        )?;

    match &a.output {
        Some(path) => {
            let f = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .data()?;
            let mut w = BufWriter::new(f);
            emit(&data, &mut w).and_then(|()| w.flush()).data()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            emit(&data, &mut w).and_then(|()| w.flush()).data()?;
        }
    }

    let summary: String = [
        ("files", stats.files.to_string()),
        ("records", stats.records.to_string()),
        ("payload_bytes", stats.payload_bytes.to_string()),
        ("truncated_payloads", stats.truncated.to_string()),
        ("corrupt_skipped", stats.corrupt.to_string()),
        ("bad_timestamp_skipped", stats.bad_timestamp.to_string()),
        ("broad_unidentified", stats.broad_unidentified.to_string()),
        ("fine_unidentified", stats.fine_unidentified.to_string()),
        ("profile_lines", data.len().to_string()),
        ("shards", a.shards.to_string()),
        (
            "elapsed_seconds",
            format!("{:.3}", stats.elapsed.as_secs_f64()),
        ),
        (
            "records_per_second",
            format!("{:.1}", stats.records_per_second()),
        ),
    ]
    .iter()
    .map(|(k, v)| format!("{k}: {v}\n"))
    .collect();
    // With the TSV on stdout the summary moves to stderr.
    if a.output.is_some() {
        io::stdout().write_all(summary.as_bytes()).data()?;
    } else {
        io::stderr().write_all(summary.as_bytes()).data()?;
    }
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Outcome {
    let f = File::open(&a.input)
        .with_context(|| format!("cannot open {}", a.input.display()))
        .config()?;
    let data = load(BufReader::new(f)).map_err(|e| {
        let e = anyhow::Error::from(e).context(format!("malformed profile {}", a.input.display()));
        Failure::Config(e)
    })?;
    let config = ReportConfig {
        format_tool: a.format_tool,
        ..ReportConfig::default()
    };
    let report = TrendReport::compute(&data, &config);
    let written = write_report(&report, &a.report_dir).data()?;
    let mut out = io::stdout().lock();
    let r = (|| -> io::Result<()> {
        writeln!(out, "resources: {}", report.total)?;
        writeln!(out, "profile_lines: {}", data.len())?;
        writeln!(out, "format_tool: {}", report.format_tool)?;
        writeln!(out, "formats: {}", report.lifespans.len())?;
        writeln!(out, "conflict_pairs: {}", report.conflicts.distinct_pairs())?;
        for tool in Tool::BOTH {
            let (u, t) = report
                .failure_rates
                .iter()
                .filter(|f| f.tool == tool)
                .fold((0, 0), |(u, t), f| (u + f.unidentified, t + f.total));
            writeln!(out, "{tool}_unidentified: {u}/{t}")?;
        }
        match &report.fit {
            Some(fit) => {
                writeln!(out, "fit_slope: {:.6}", fit.slope)?;
                writeln!(out, "fit_intercept: {:.6}", fit.intercept)?;
                writeln!(out, "fit_r2: {:.6}", fit.r2)?;
            }
            None => writeln!(out, "fit: none")?,
        }
        writeln!(out, "report_dir: {}", a.report_dir.display())?;
        writeln!(out, "files_written: {}", written.len())
    })();
    r.data()
}

fn cmd_gen_corpus(a: GenArgs) -> Outcome {
    let mut spec = load_spec(&a.spec).config()?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    spec.validate().config()?;
    let g = generate(&spec, &a.output).data()?;
    let digest = corpus_digest(&g).data()?;
    let mut out = io::stdout().lock();
    let r = (|| -> io::Result<()> {
        writeln!(out, "seed: {}", spec.seed)?;
        writeln!(out, "records: {}", g.manifest.len())?;
        writeln!(out, "files: {}", g.files.len())?;
        writeln!(out, "manifest: {}", g.manifest_path.display())?;
        writeln!(out, "sha256: {digest}")
    })();
    r.data()
}

fn cmd_validate(a: ValidateArgs) -> Outcome {
    let set = read_signatures(&a.path).config()?;
    let weak = set.weak_signatures();
    let mut out = io::stdout().lock();
    let r = (|| -> io::Result<()> {
        writeln!(out, "name: {}", set.name)?;
        writeln!(out, "mode: {}", set.mode)?;
        writeln!(out, "signatures: {}", set.len())?;
        writeln!(out, "errors: 0")?;
        writeln!(out, "weak_signatures: {}", weak.len())?;
        for id in weak {
            writeln!(out, "weak: {id}")?;
        }
        Ok(())
    })();
    r.data()
}
