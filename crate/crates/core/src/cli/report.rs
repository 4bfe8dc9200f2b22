use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::depgraph::TokenId;
use crate::diagnostics::{error_distribution, ErrorDistribution, ErrorLabel};
use crate::metrics::{CorpusScores, CorpusStats, MetricTable, Score};
use crate::splitter::{ClauseSite, DiscardedAtom, RuleApplication, SplitConfig};

/// Token and `VERB` counts of one atom under the metric tokenizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomLength {
    pub tokens: usize,
    pub verbs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub sent_id: String,
    pub predicted_id: Option<String>,
    pub gold_id: Option<String>,
    pub predicted: Option<String>,
    pub gold: Option<String>,
    pub clause_root: Option<TokenId>,
    pub rules: Vec<RuleApplication>,
    pub rouge1: Score,
    pub rouge2: Score,
    pub rouge_l: Score,
    pub semantic: Option<Score>,
    /// Absent for pairs without a gold atom.
    pub label: Option<ErrorLabel>,
    pub conditions: Vec<ErrorLabel>,
    pub predicted_length: Option<AtomLength>,
    pub gold_length: Option<AtomLength>,
}

impl PairRow {
    pub fn is_matched(&self) -> bool {
        self.predicted.is_some() && self.gold.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub id: String,
    pub source: String,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    pub suppressed: Vec<ClauseSite>,
    pub discarded: Vec<DiscardedAtom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSizes {
    pub parsed_sentences: usize,
    pub gold_records: usize,
    pub predicted_atoms: usize,
    pub gold_atoms: usize,
    pub pairs: usize,
    pub matched_pairs: usize,
    pub discarded_atoms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub model: Option<CorpusStats>,
    pub gold: Option<CorpusStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: SplitConfig,
    pub corpus: CorpusSizes,
    pub scores: CorpusScores,
    pub stats: StatsTable,
    pub errors: ErrorDistribution,
    pub sentences: Vec<SentenceRow>,
    pub pairs: Vec<PairRow>,
}

fn mean(scores: &[Score]) -> Score {
    let n = scores.len() as f64;
    Score {
        precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
    }
}

fn table_from_rows(rows: &[&PairRow]) -> MetricTable {
    let pick = |f: fn(&PairRow) -> Score| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
    let semantic: Vec<Score> = rows.iter().filter_map(|r| r.semantic).collect();
    MetricTable {
        pairs: rows.len(),
        rouge1: mean(&pick(|r| r.rouge1)),
        rouge2: mean(&pick(|r| r.rouge2)),
        rouge_l: mean(&pick(|r| r.rouge_l)),
        semantic: (!semantic.is_empty()).then(|| mean(&semantic)),
    }
}

fn stats_from_lengths(lengths: &[AtomLength]) -> Option<CorpusStats> {
    if lengths.is_empty() {
        return None;
    }
    let n = lengths.len() as f64;
    Some(CorpusStats {
        avg_tokens_per_atom: lengths.iter().map(|l| l.tokens).sum::<usize>() as f64 / n,
        avg_verbs_per_atom: lengths.iter().map(|l| l.verbs).sum::<usize>() as f64 / n,
        atom_count: lengths.len(),
    })
}

type ScoreOf = fn(&MetricTable) -> Score;
type StatOf = fn(&CorpusStats) -> String;

impl EvalReport {
    /// Checks that every aggregate equals its recomputation from the rows and
    /// that every per-pair score lies in [0, 1].
    pub fn verify(&self) -> Result<(), String> {
        for (i, row) in self.pairs.iter().enumerate() {
            let scores = [Some(row.rouge1), Some(row.rouge2), Some(row.rouge_l), row.semantic];
            if scores.iter().flatten().any(|s| !s.in_unit_range()) {
                return Err(format!("pair {i}: score outside [0, 1]"));
            }
            if row.predicted.is_none() && row.gold.is_none() {
                return Err(format!("pair {i}: both sides empty"));
            }
            if row.label.is_some() != row.gold.is_some() {
                return Err(format!("pair {i}: label present without gold atom or vice versa"));
            }
        }
        if !self.sentences.windows(2).all(|w| w[0].id < w[1].id) {
            return Err("sentences are not ordered by id".into());
        }
        if !self.pairs.windows(2).all(|w| w[0].sent_id <= w[1].sent_id) {
            return Err("pairs are not grouped by sentence id".into());
        }

        let all: Vec<&PairRow> = self.pairs.iter().collect();
        let matched: Vec<&PairRow> = self.pairs.iter().filter(|r| r.is_matched()).collect();
        if all.is_empty() {
            return Err("report has no pairs".into());
        }
        let scores = CorpusScores {
            all_pairs: table_from_rows(&all),
            matched_pairs: (!matched.is_empty()).then(|| table_from_rows(&matched)),
        };
        if scores != self.scores {
            return Err("score tables differ from per-pair rows".into());
        }

        let model: Vec<AtomLength> = self.pairs.iter().filter_map(|r| r.predicted_length).collect();
        let gold: Vec<AtomLength> = self.pairs.iter().filter_map(|r| r.gold_length).collect();
        let stats = StatsTable {
            model: stats_from_lengths(&model),
            gold: stats_from_lengths(&gold),
        };
        if stats != self.stats {
            return Err("length/verb table differs from per-pair rows".into());
        }

        let labels: Vec<ErrorLabel> = self.pairs.iter().filter_map(|r| r.label).collect();
        if error_distribution(&labels) != self.errors {
            return Err("error table differs from per-pair labels".into());
        }

        let c = &self.corpus;
        let expected = (
            self.pairs.len(),
            matched.len(),
            model.len(),
            gold.len(),
            self.sentences.iter().map(|s| s.discarded.len()).sum::<usize>(),
        );
        if (c.pairs, c.matched_pairs, c.predicted_atoms, c.gold_atoms, c.discarded_atoms) != expected {
            return Err("corpus sizes differ from rows".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// Plain-text rendering: ROUGE, semantic similarity, length and verb
    /// statistics, error distribution.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let c = &self.corpus;
        let matched = self.scores.matched_pairs.as_ref();
        let _ = writeln!(
            out,
            "Corpus: {} sentences evaluated ({} parsed), {} predicted atoms, {} gold atoms, {} pairs ({} matched), {} discarded atoms",
            c.gold_records, c.parsed_sentences, c.predicted_atoms, c.gold_atoms, c.pairs, c.matched_pairs, c.discarded_atoms
        );
        out.push('\n');

        let _ = writeln!(out, "Table 1. ROUGE");
        let _ = writeln!(out, "{:<10}{:<10}{:>10}{:>10}{:>10}", "Metric", "Variant", "Precision", "Recall", "F1");
        let rouge_rows: [(&str, ScoreOf); 3] = [
            ("ROUGE-1", |t| t.rouge1),
            ("ROUGE-2", |t| t.rouge2),
            ("ROUGE-L", |t| t.rouge_l),
        ];
        for (name, pick) in rouge_rows {
            score_line(&mut out, name, "all", Some(pick(&self.scores.all_pairs)));
            score_line(&mut out, name, "matched", matched.map(pick));
        }
        out.push('\n');

        let _ = writeln!(out, "Table 2. Semantic similarity");
        if self.scores.all_pairs.semantic.is_some() {
            let _ = writeln!(out, "{:<10}{:<10}{:>10}{:>10}{:>10}", "Metric", "Variant", "Precision", "Recall", "F1");
            score_line(&mut out, "Semantic", "all", self.scores.all_pairs.semantic);
            score_line(&mut out, "Semantic", "matched", matched.and_then(|t| t.semantic));
        } else {
            let _ = writeln!(out, "not computed (no embeddings supplied)");
        }
        out.push('\n');

        let _ = writeln!(out, "Table 3. Length and verb statistics");
        let _ = writeln!(out, "{:<28}{:>10}{:>10}", "Measure", "Model", "Gold");
        let cell = |s: Option<CorpusStats>, f: fn(&CorpusStats) -> String| s.as_ref().map_or("-".to_string(), f);
        let stat_rows: [(&str, StatOf); 3] = [
            ("Avg tokens per atom", |s| format!("{:.4}", s.avg_tokens_per_atom)),
            ("Avg verbs per atom", |s| format!("{:.4}", s.avg_verbs_per_atom)),
            ("Atoms", |s| s.atom_count.to_string()),
        ];
        for (name, f) in stat_rows {
            let _ = writeln!(out, "{:<28}{:>10}{:>10}", name, cell(self.stats.model, f), cell(self.stats.gold, f));
        }
        out.push('\n');

        let e = &self.errors;
        let _ = writeln!(out, "Table 4. Error distribution");
        let _ = writeln!(out, "{:<28}{:>10}{:>10}", "Error", "Count", "Share");
        for label in ErrorLabel::ALL.into_iter().filter(|&l| l != ErrorLabel::Correct) {
            let count = e.counts.get(&label).copied().unwrap_or(0);
            let share = e.proportions.get(&label).map_or("-".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(out, "{:<28}{:>10}{:>10}", label.display_name(), count, share);
        }
        let _ = writeln!(
            out,
            "{} of {} gold-bearing pairs classified as errors; {} correct",
            e.errors,
            e.total,
            e.counts.get(&ErrorLabel::Correct).copied().unwrap_or(0)
        );
        out
    }
}

fn score_line(out: &mut String, name: &str, variant: &str, score: Option<Score>) {
    match score {
        Some(s) => {
            let _ = writeln!(
                out,
                "{:<10}{:<10}{:>10.4}{:>10.4}{:>10.4}",
                name, variant, s.precision, s.recall, s.f1
            );
        }
        None => {
            let _ = writeln!(out, "{:<10}{:<10}{:>10}{:>10}{:>10}", name, variant, "-", "-", "-");
        }
    }
}
