//! End-to-end pipeline behind the command-line tool: corpus ingestion,
//! splitting, evaluation against gold atoms and report generation.

mod config;
mod ingest;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{parse_conllu, ConlluError, DepTree, TokenId};
use crate::diagnostics::{diagnose, error_distribution};
use crate::metrics::{
    align_atoms, corpus_scores, length_verb_stats, metric_tokenize, read_embeddings, semantic_score,
    MetricError, Score, TokenEmbeddings,
};
use crate::splitter::{split_sentence_traced, AtomicSentence, RuleApplication, SplitConfig};

pub use config::{parse_split_config, render_split_config};
pub use ingest::{ingest_wikisplit, normalize_corpus, IngestOutcome, WikiSplitRecord, DEFAULT_SEPARATOR};
pub use report::{AtomLength, CorpusSizes, EvalReport, PairRow, SentenceRow, StatsTable};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Conllu {
        path: PathBuf,
        #[source]
        source: ConlluError,
    },
    #[error("gold line {line}: {message}")]
    Gold { line: usize, message: String },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("duplicate {what} id {id:?}")]
    DuplicateId { what: &'static str, id: String },
    #[error("gold ids without a parse: {}", .0.join(", "))]
    MissingParses(Vec<String>),
    #[error("embeddings: {0}")]
    Embeddings(#[from] MetricError),
    #[error("no embeddings for atom {0:?}")]
    MissingEmbedding(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl PipelineError {
    /// 1 for bad input, 2 for an internal invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

/// One line of the gold JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    pub source: String,
    pub atoms: Vec<String>,
}

pub fn read_gold<R: BufRead>(reader: R) -> Result<Vec<GoldRecord>, PipelineError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let bad = |message: String| PipelineError::Gold {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GoldRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if rec.source.trim().is_empty() {
            return Err(bad("empty source".into()));
        }
        if rec.atoms.is_empty() || rec.atoms.iter().any(|a| a.trim().is_empty()) {
            return Err(bad("atoms must be a non-empty list of non-empty strings".into()));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn predicted_atom_id(sent_id: &str, index: usize) -> String {
    format!("{sent_id}/pred/{index}")
}

pub fn gold_atom_id(sent_id: &str, index: usize) -> String {
    format!("{sent_id}/gold/{index}")
}

/// One line of an atoms JSONL file. Trace fields are present only for
/// system output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clause_root: Option<TokenId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub token_ids: Vec<TokenId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<RuleApplication>,
}

impl AtomRecord {
    fn predicted(sent_id: &str, index: usize, atom: &AtomicSentence) -> Self {
        AtomRecord {
            id: predicted_atom_id(sent_id, index),
            text: atom.text.clone(),
            clause_root: Some(atom.clause_root),
            token_ids: atom.tokens.iter().map(|t| t.id).collect(),
            rules: atom.rules.clone(),
        }
    }

    fn plain(id: String, text: &str) -> Self {
        AtomRecord {
            id,
            text: text.to_string(),
            clause_root: None,
            token_ids: Vec::new(),
            rules: Vec::new(),
        }
    }
}

/// Splits every tree, keeping input order.
pub fn split_corpus(trees: &[DepTree], config: &SplitConfig) -> Vec<AtomRecord> {
    trees
        .par_iter()
        .map(|tree| {
            split_sentence_traced(tree, config)
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| AtomRecord::predicted(tree.sent_id(), i, a))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Predicted then gold atoms of every evaluated sentence, in report order.
/// This is the list an embedding tool needs to cover.
pub fn report_atom_records(report: &EvalReport) -> Vec<AtomRecord> {
    report
        .sentences
        .iter()
        .flat_map(|s| {
            let pred = s
                .predicted
                .iter()
                .enumerate()
                .map(|(i, t)| AtomRecord::plain(predicted_atom_id(&s.id, i), t));
            let gold = s
                .gold
                .iter()
                .enumerate()
                .map(|(j, t)| AtomRecord::plain(gold_atom_id(&s.id, j), t));
            pred.chain(gold).collect::<Vec<_>>()
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path).map(BufReader::new).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_conllu_file(path: &Path) -> Result<Vec<DepTree>, PipelineError> {
    parse_conllu(open(path)?).map_err(|source| PipelineError::Conllu {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_config_file(path: &Path) -> Result<SplitConfig, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_split_config(&text)
}

/// Reads the inputs, evaluates and self-checks the report.
pub fn run_pipeline(
    conllu: &Path,
    gold: &Path,
    config: Option<&Path>,
    embeddings: Option<&Path>,
) -> Result<EvalReport, PipelineError> {
    let trees = read_conllu_file(conllu)?;
    let gold = read_gold(open(gold)?)?;
    let config = config.map(read_config_file).transpose()?.unwrap_or_default();
    let embeddings = embeddings
        .map(|p| read_embeddings(open(p)?).map_err(PipelineError::from))
        .transpose()?;
    evaluate(&trees, &gold, &config, embeddings.as_ref())
}

/// Form-to-UPOS table for tagging gold tokens; the first occurrence of a
/// form wins.
fn upos_lookup(tree: &DepTree) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for t in tree.tokens() {
        for piece in metric_tokenize(&t.form) {
            out.entry(piece).or_insert_with(|| t.upos.clone());
        }
    }
    out
}

fn length_of(tokens: &[String], tags: &[String]) -> AtomLength {
    AtomLength {
        tokens: tokens.len(),
        verbs: tags.iter().filter(|t| *t == "VERB").count(),
    }
}

struct Tagged {
    tokens: Vec<String>,
    tags: Vec<String>,
}

fn tag_predicted(tree: &DepTree, atom: &AtomicSentence) -> Tagged {
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for t in &atom.tokens {
        let tok = tree.tok(t.id);
        for piece in metric_tokenize(&tok.form) {
            tokens.push(piece);
            tags.push(tok.upos.clone());
        }
    }
    Tagged { tokens, tags }
}

fn tag_gold(lookup: &HashMap<String, String>, text: &str) -> Tagged {
    let tokens = metric_tokenize(text);
    let tags = tokens
        .iter()
        .map(|t| lookup.get(t).cloned().unwrap_or_else(|| "_".to_string()))
        .collect();
    Tagged { tokens, tags }
}

struct SentenceResult {
    row: SentenceRow,
    pairs: Vec<PairRow>,
    aligned: Vec<crate::metrics::AlignedPair>,
    model: Vec<Tagged>,
    gold: Vec<Tagged>,
}

fn evaluate_sentence(
    tree: &DepTree,
    record: &GoldRecord,
    config: &SplitConfig,
    embeddings: Option<&BTreeMap<String, TokenEmbeddings>>,
) -> Result<SentenceResult, PipelineError> {
    let id = record.id.as_str();
    let outcome = split_sentence_traced(tree, config);
    let mut aligned = align_atoms(&outcome.atoms, &record.atoms)
        .map_err(|e| PipelineError::Invariant(format!("sentence {id}: {e}")))?;

    let lookup = upos_lookup(tree);
    let model: Vec<Tagged> = outcome.atoms.iter().map(|a| tag_predicted(tree, a)).collect();
    let gold: Vec<Tagged> = record.atoms.iter().map(|g| tag_gold(&lookup, g)).collect();

    let mut pairs = Vec::with_capacity(aligned.len());
    for pair in &mut aligned {
        let predicted_id = pair.predicted_index.map(|i| predicted_atom_id(id, i));
        let gold_id = pair.gold_index.map(|j| gold_atom_id(id, j));
        if let Some(table) = embeddings {
            pair.semantic = Some(match (&predicted_id, &gold_id) {
                (Some(p), Some(g)) => {
                    let lookup = |k: &String| {
                        table
                            .get(k)
                            .ok_or_else(|| PipelineError::MissingEmbedding(k.clone()))
                    };
                    semantic_score(lookup(p)?, lookup(g)?)?
                }
                _ => Score::zero(),
            });
        }
        let diagnosis = match pair.gold {
            Some(_) => Some(
                diagnose(pair, tree).map_err(|e| PipelineError::Invariant(format!("sentence {id}: {e}")))?,
            ),
            None => None,
        };
        pairs.push(PairRow {
            sent_id: id.to_string(),
            predicted_id,
            gold_id,
            predicted: pair.predicted.as_ref().map(|a| a.text.clone()),
            gold: pair.gold.clone(),
            clause_root: pair.predicted.as_ref().map(|a| a.clause_root),
            rules: pair.predicted.as_ref().map(|a| a.rules.clone()).unwrap_or_default(),
            rouge1: pair.rouge1,
            rouge2: pair.rouge2,
            rouge_l: pair.rouge_l,
            semantic: pair.semantic,
            label: diagnosis.as_ref().map(|d| d.label),
            conditions: diagnosis.map(|d| d.fired).unwrap_or_default(),
            predicted_length: pair
                .predicted_index
                .map(|i| length_of(&model[i].tokens, &model[i].tags)),
            gold_length: pair.gold_index.map(|j| length_of(&gold[j].tokens, &gold[j].tags)),
        });
    }

    Ok(SentenceResult {
        row: SentenceRow {
            id: id.to_string(),
            source: record.source.clone(),
            predicted: outcome.atoms.iter().map(|a| a.text.clone()).collect(),
            gold: record.atoms.clone(),
            suppressed: outcome.suppressed,
            discarded: outcome.discarded,
        },
        pairs,
        aligned,
        model,
        gold,
    })
}

/// Splits, aligns, scores and classifies every gold sentence. Sentences are
/// processed in parallel; the report is ordered by sentence id.
pub fn evaluate(
    trees: &[DepTree],
    gold: &[GoldRecord],
    config: &SplitConfig,
    embeddings: Option<&BTreeMap<String, TokenEmbeddings>>,
) -> Result<EvalReport, PipelineError> {
    let mut by_id: HashMap<&str, &DepTree> = HashMap::new();
    for tree in trees {
        if by_id.insert(tree.sent_id(), tree).is_some() {
            return Err(PipelineError::DuplicateId {
                what: "sentence",
                id: tree.sent_id().to_string(),
            });
        }
    }
    let mut records: BTreeMap<&str, &GoldRecord> = BTreeMap::new();
    for rec in gold {
        if records.insert(rec.id.as_str(), rec).is_some() {
            return Err(PipelineError::DuplicateId {
                what: "gold",
                id: rec.id.clone(),
            });
        }
    }
    let missing: Vec<String> = records
        .keys()
        .filter(|id| !by_id.contains_key(*id))
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingParses(missing));
    }
    if records.is_empty() {
        return Err(PipelineError::Gold {
            line: 0,
            message: "no gold records".into(),
        });
    }

    let work: Vec<(&DepTree, &GoldRecord)> = records.iter().map(|(id, rec)| (by_id[id], *rec)).collect();
    let results = work
        .par_iter()
        .map(|(tree, rec)| evaluate_sentence(tree, rec, config, embeddings))
        .collect::<Result<Vec<_>, _>>()?;

    let mut sentences = Vec::with_capacity(results.len());
    let mut pairs = Vec::new();
    let mut aligned = Vec::new();
    let mut model = Vec::new();
    let mut gold_tags = Vec::new();
    for r in results {
        sentences.push(r.row);
        pairs.extend(r.pairs);
        aligned.extend(r.aligned);
        model.extend(r.model.into_iter().map(|t| (t.tokens, t.tags)));
        gold_tags.extend(r.gold.into_iter().map(|t| (t.tokens, t.tags)));
    }

    let invariant = |e: MetricError| PipelineError::Invariant(e.to_string());
    let scores = corpus_scores(&aligned).map_err(invariant)?;
    let stats = StatsTable {
        model: (!model.is_empty())
            .then(|| length_verb_stats(&model))
            .transpose()
            .map_err(invariant)?,
        gold: Some(length_verb_stats(&gold_tags).map_err(invariant)?),
    };
    let labels: Vec<_> = pairs.iter().filter_map(|p| p.label).collect();
    let corpus = CorpusSizes {
        parsed_sentences: trees.len(),
        gold_records: records.len(),
        predicted_atoms: model.len(),
        gold_atoms: gold_tags.len(),
        pairs: pairs.len(),
        matched_pairs: pairs.iter().filter(|p| p.is_matched()).count(),
        discarded_atoms: sentences.iter().map(|s| s.discarded.len()).sum(),
    };
    let report = EvalReport {
        config: *config,
        corpus,
        scores,
        stats,
        errors: error_distribution(&labels),
        sentences,
        pairs,
    };
    report.verify().map_err(PipelineError::Invariant)?;
    Ok(report)
}
