use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atomsplit::cli::{
    ingest_wikisplit, normalize_corpus, read_conllu_file, read_config_file, report_atom_records, run_pipeline,
    split_corpus, AtomRecord, PipelineError, DEFAULT_SEPARATOR,
};

#[derive(Parser)]
#[command(name = "atomsplit", version, about = "Split parsed sentences into atomic sentences and evaluate them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split every sentence of a CoNLL-U file; writes atoms as JSON lines.
    Split {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split, align against gold atoms, score, classify errors and report.
    Eval {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Token embeddings JSONL keyed by atom id.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Plain-text report; printed to stdout when neither report path is given.
        #[arg(long)]
        report_text: Option<PathBuf>,
        /// Also write every predicted and gold atom with its id, for embedding.
        #[arg(long)]
        atoms_out: Option<PathBuf>,
    },
    /// Extract complex sentences from a WikiSplit TSV, lowercased and deduplicated.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = DEFAULT_SEPARATOR)]
        separator: String,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_output(path: Option<&Path>, body: &str) -> Result<(), PipelineError> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(io_err(p)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn jsonl(records: &[AtomRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("atom record serializes") + "\n")
        .collect()
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Split { conllu, config, out } => {
            let trees = read_conllu_file(&conllu)?;
            let config = config.as_deref().map(read_config_file).transpose()?.unwrap_or_default();
            write_output(out.as_deref(), &jsonl(&split_corpus(&trees, &config)))
        }
        Command::Eval {
            conllu,
            gold,
            config,
            embeddings,
            report,
            report_text,
            atoms_out,
        } => {
            let result = run_pipeline(&conllu, &gold, config.as_deref(), embeddings.as_deref())?;
            if let Some(p) = &report {
                write_output(Some(p), &result.to_json())?;
            }
            if let Some(p) = &atoms_out {
                write_output(Some(p), &jsonl(&report_atom_records(&result)))?;
            }
            if report_text.is_some() || report.is_none() {
                write_output(report_text.as_deref(), &result.render_text())?;
            }
            Ok(())
        }
        Command::Ingest { input, separator, out } => {
            let file = File::open(&input).map_err(io_err(&input))?;
            let outcome = ingest_wikisplit(BufReader::new(file), &separator).map_err(io_err(&input))?;
            if outcome.skipped > 0 {
                eprintln!("warning: skipped {} line(s) without a TAB", outcome.skipped);
            }
            let sources = normalize_corpus(&outcome.sources());
            let body: String = sources.iter().map(|s| format!("{s}\n")).collect();
            write_output(out.as_deref(), &body)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
