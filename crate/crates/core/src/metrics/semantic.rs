use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{MetricError, Score};

const NORM_TOLERANCE: f64 = 1e-6;

/// Contextual token vectors for one text, every vector L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl TokenEmbeddings {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        if tokens.len() != vectors.len() {
            return Err(MetricError::LengthMismatch {
                tokens: tokens.len(),
                vectors: vectors.len(),
            });
        }
        if let Some(first) = vectors.first() {
            let dim = first.len();
            for (index, v) in vectors.iter().enumerate() {
                if v.len() != dim {
                    return Err(MetricError::DimensionMismatch {
                        left: dim,
                        right: v.len(),
                    });
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    return Err(MetricError::NotNormalized { index, norm });
                }
            }
        }
        Ok(TokenEmbeddings { tokens, vectors })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// One line of an embeddings JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

/// Reads an embeddings JSONL file into a map keyed by atom id.
pub fn read_embeddings<R: BufRead>(
    reader: R,
) -> Result<BTreeMap<String, TokenEmbeddings>, MetricError> {
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let format_err = |message: String| MetricError::EmbeddingsFormat {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| format_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| format_err(e.to_string()))?;
        let emb =
            TokenEmbeddings::new(rec.tokens, rec.vectors).map_err(|e| format_err(e.to_string()))?;
        if out.insert(rec.id.clone(), emb).is_some() {
            return Err(format_err(format!("duplicate id {:?}", rec.id)));
        }
    }
    Ok(out)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

fn mean_best(rows: &[Vec<f64>], cols: &[Vec<f64>]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|r| cols.iter().map(|c| cosine(r, c)).fold(0.0, f64::max))
        .sum();
    total / rows.len() as f64
}

/// Greedy token matching: each token is paired with its most similar
/// counterpart on the other side. Negative cosines count as 0.
pub fn semantic_score(
    candidate: &TokenEmbeddings,
    reference: &TokenEmbeddings,
) -> Result<Score, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyEmbeddings);
    }
    if candidate.dim() != reference.dim() {
        return Err(MetricError::DimensionMismatch {
            left: candidate.dim(),
            right: reference.dim(),
        });
    }
    let precision = mean_best(&candidate.vectors, &reference.vectors);
    let recall = mean_best(&reference.vectors, &candidate.vectors);
    Ok(Score::new(precision, recall))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(vectors: Vec<Vec<f64>>) -> TokenEmbeddings {
        let tokens = (0..vectors.len()).map(|i| format!("t{i}")).collect();
        TokenEmbeddings::new(tokens, vectors).unwrap()
    }

    #[test]
    fn self_match_is_perfect() {
        let s = 0.5f64.sqrt();
        let e = emb(vec![vec![1.0, 0.0, 0.0], vec![s, s, 0.0]]);
        let score = semantic_score(&e, &e).unwrap();
        assert!((score.precision - 1.0).abs() < 1e-9);
        assert!((score.recall - 1.0).abs() < 1e-9);
        assert!((score.f1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_candidate() {
        let cand = emb(vec![vec![0.0, 0.0, 1.0]]);
        let refs = emb(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(semantic_score(&cand, &refs).unwrap().precision, 0.0);
    }

    #[test]
    fn two_by_one_example() {
        let cand = emb(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let refs = emb(vec![vec![1.0, 0.0]]);
        let s = semantic_score(&cand, &refs).unwrap();
        assert!((s.precision - 0.5).abs() < 1e-12);
        assert!((s.recall - 1.0).abs() < 1e-12);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_cosine_is_floored() {
        let cand = emb(vec![vec![-1.0, 0.0]]);
        let refs = emb(vec![vec![1.0, 0.0]]);
        assert_eq!(semantic_score(&cand, &refs).unwrap(), Score::zero());
    }

    #[test]
    fn invalid_inputs() {
        let a = emb(vec![vec![1.0, 0.0]]);
        let b = emb(vec![vec![1.0, 0.0, 0.0]]);
        assert!(matches!(
            semantic_score(&a, &b),
            Err(MetricError::DimensionMismatch { .. })
        ));
        let empty = emb(vec![]);
        assert_eq!(semantic_score(&empty, &a), Err(MetricError::EmptyEmbeddings));
        assert!(matches!(
            TokenEmbeddings::new(vec!["x".into()], vec![vec![2.0]]),
            Err(MetricError::NotNormalized { .. })
        ));
        assert!(matches!(
            TokenEmbeddings::new(vec!["x".into()], vec![]),
            Err(MetricError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn reads_jsonl() {
        let input = r#"{"id": "s1/pred/0", "tokens": ["a"], "vectors": [[0.6, 0.8]]}

{"id": "s1/gold/0", "tokens": ["a", "b"], "vectors": [[1.0, 0.0], [0.0, 1.0]]}
"#;
        let map = read_embeddings(input.as_bytes()).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["s1/gold/0"].tokens(), ["a", "b"]);

        let bad = r#"{"id": "x", "tokens": ["a"], "vectors": [[3.0]]}"#;
        assert!(matches!(
            read_embeddings(bad.as_bytes()),
            Err(MetricError::EmbeddingsFormat { line: 1, .. })
        ));
        let dup = "{\"id\": \"x\", \"tokens\": [], \"vectors\": []}\n{\"id\": \"x\", \"tokens\": [], \"vectors\": []}\n";
        assert!(matches!(
            read_embeddings(dup.as_bytes()),
            Err(MetricError::EmbeddingsFormat { line: 2, .. })
        ));
    }
}
