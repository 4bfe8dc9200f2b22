//! Lexical, structural and embedding-based scores for atom pairs.

mod align;
mod rouge;
mod semantic;
mod stats;
mod tokenize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::{align_atoms, corpus_scores, AlignedPair, CorpusScores, MetricTable};
pub use rouge::{rouge_l, rouge_n};
pub use semantic::{read_embeddings, semantic_score, EmbeddingRecord, TokenEmbeddings};
pub use stats::{length_verb_stats, CorpusStats};
pub use tokenize::metric_tokenize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding list is empty")]
    EmptyEmbeddings,
    #[error("{tokens} tokens but {vectors} vectors")]
    LengthMismatch { tokens: usize, vectors: usize },
    #[error("vector {index} has norm {norm}, expected 1")]
    NotNormalized { index: usize, norm: f64 },
    #[error("cannot align two empty atom lists")]
    EmptyAlignment,
    #[error("no pairs to aggregate")]
    EmptyPairs,
    #[error("no atoms to compute statistics over")]
    EmptyStats,
    #[error("atom {index}: {tokens} tokens but {tags} tags")]
    MisalignedTags {
        index: usize,
        tokens: usize,
        tags: usize,
    },
    #[error("embeddings line {line}: {message}")]
    EmbeddingsFormat { line: usize, message: String },
}

/// Precision / recall / F1 triple.
///
/// Per-pair scores always satisfy `f1 = 2pr / (p + r)` (0 when `p + r = 0`);
/// corpus averages built by [`corpus_scores`] average each field separately.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            precision,
            recall,
            f1,
        }
    }

    pub const fn zero() -> Self {
        Score {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        }
    }

    pub const fn perfect() -> Self {
        Score {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        }
    }

    pub fn in_unit_range(&self) -> bool {
        [self.precision, self.recall, self.f1]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_is_harmonic_mean() {
        let s = Score::new(1.0, 4.0 / 7.0);
        assert!((s.f1 - 8.0 / 11.0).abs() < 1e-12);
        assert_eq!(Score::new(0.0, 0.0), Score::zero());
        assert_eq!(Score::new(1.0, 1.0), Score::perfect());
        assert_eq!(Score::new(0.0, 0.5).f1, 0.0);
    }
}
