use serde::{Deserialize, Serialize};

use super::{metric_tokenize, rouge_l, rouge_n, MetricError, Score};
use crate::splitter::AtomicSentence;

/// One predicted atom matched to one gold atom. Either side may be missing,
/// never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub predicted: Option<AtomicSentence>,
    pub predicted_index: Option<usize>,
    pub gold: Option<String>,
    pub gold_index: Option<usize>,
    pub rouge1: Score,
    pub rouge2: Score,
    pub rouge_l: Score,
    pub semantic: Option<Score>,
}

impl AlignedPair {
    pub fn is_matched(&self) -> bool {
        self.predicted.is_some() && self.gold.is_some()
    }

    pub fn predicted_text(&self) -> &str {
        self.predicted.as_ref().map_or("", |a| a.text.as_str())
    }

    pub fn gold_text(&self) -> &str {
        self.gold.as_deref().unwrap_or("")
    }
}

fn scored(
    predicted: Option<(usize, &AtomicSentence)>,
    gold: Option<(usize, &String)>,
) -> AlignedPair {
    let (rouge1, rouge2, rouge_l) = match (predicted, gold) {
        (Some((_, p)), Some((_, g))) => {
            let p = metric_tokenize(&p.text);
            let g = metric_tokenize(g);
            (rouge_n(&p, &g, 1), rouge_n(&p, &g, 2), rouge_l(&p, &g))
        }
        _ => (Score::zero(), Score::zero(), Score::zero()),
    };
    AlignedPair {
        predicted: predicted.map(|(_, a)| a.clone()),
        predicted_index: predicted.map(|(i, _)| i),
        gold: gold.map(|(_, g)| g.clone()),
        gold_index: gold.map(|(j, _)| j),
        rouge1,
        rouge2,
        rouge_l,
        semantic: None,
    }
}

/// Greedy one-to-one matching on the ROUGE-1 F1 matrix.
///
/// The highest remaining cell is taken first; ties go to the lower predicted
/// index, then the lower gold index. Output lists every predicted atom in
/// order (matched or not), followed by the unmatched gold atoms in order.
pub fn align_atoms(
    predicted: &[AtomicSentence],
    gold: &[String],
) -> Result<Vec<AlignedPair>, MetricError> {
    if predicted.is_empty() && gold.is_empty() {
        return Err(MetricError::EmptyAlignment);
    }
    let pred_tokens: Vec<Vec<String>> = predicted.iter().map(|a| metric_tokenize(&a.text)).collect();
    let gold_tokens: Vec<Vec<String>> = gold.iter().map(|g| metric_tokenize(g)).collect();

    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity(predicted.len() * gold.len());
    for (i, p) in pred_tokens.iter().enumerate() {
        for (j, g) in gold_tokens.iter().enumerate() {
            cells.push((rouge_n(p, g, 1).f1, i, j));
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pred_match: Vec<Option<usize>> = vec![None; predicted.len()];
    let mut gold_taken = vec![false; gold.len()];
    for (_, i, j) in cells {
        if pred_match[i].is_none() && !gold_taken[j] {
            pred_match[i] = Some(j);
            gold_taken[j] = true;
        }
    }

    let mut pairs: Vec<AlignedPair> = predicted
        .iter()
        .enumerate()
        .map(|(i, a)| scored(Some((i, a)), pred_match[i].map(|j| (j, &gold[j]))))
        .collect();
    pairs.extend(
        gold.iter()
            .enumerate()
            .filter(|(j, _)| !gold_taken[*j])
            .map(|(j, g)| scored(None, Some((j, g)))),
    );
    Ok(pairs)
}

/// Macro-averaged scores for one set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub pairs: usize,
    pub rouge1: Score,
    pub rouge2: Score,
    pub rouge_l: Score,
    pub semantic: Option<Score>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    /// Every pair, unmatched ones scoring zero.
    pub all_pairs: MetricTable,
    /// Only pairs with both a predicted and a gold atom.
    pub matched_pairs: Option<MetricTable>,
}

fn mean(scores: &[Score]) -> Score {
    let n = scores.len() as f64;
    let sum = |f: fn(&Score) -> f64| scores.iter().map(f).sum::<f64>() / n;
    Score {
        precision: sum(|s| s.precision),
        recall: sum(|s| s.recall),
        f1: sum(|s| s.f1),
    }
}

fn table<'a>(pairs: &[&'a AlignedPair]) -> MetricTable {
    let collect = |f: fn(&'a AlignedPair) -> Score| pairs.iter().map(|p| f(p)).collect::<Vec<_>>();
    let semantic: Vec<Score> = pairs.iter().filter_map(|p| p.semantic).collect();
    MetricTable {
        pairs: pairs.len(),
        rouge1: mean(&collect(|p| p.rouge1)),
        rouge2: mean(&collect(|p| p.rouge2)),
        rouge_l: mean(&collect(|p| p.rouge_l)),
        semantic: (!semantic.is_empty()).then(|| mean(&semantic)),
    }
}

/// Averages precision, recall and F1 independently over pairs.
pub fn corpus_scores(pairs: &[AlignedPair]) -> Result<CorpusScores, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyPairs);
    }
    let all: Vec<&AlignedPair> = pairs.iter().collect();
    let matched: Vec<&AlignedPair> = pairs.iter().filter(|p| p.is_matched()).collect();
    Ok(CorpusScores {
        all_pairs: table(&all),
        matched_pairs: (!matched.is_empty()).then(|| table(&matched)),
    })
}
