use std::collections::HashMap;

use super::Score;

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

fn same_tokens<S: AsRef<str>>(a: &[S], b: &[S]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.as_ref() == y.as_ref())
}

/// ROUGE-N with clipped n-gram counts.
///
/// When neither side has an n-gram (both shorter than `n`) the pair scores 1
/// if the token sequences are identical and 0 otherwise.
pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Score {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    if cand_total == 0 && ref_total == 0 {
        return if same_tokens(candidate, reference) {
            Score::perfect()
        } else {
            Score::zero()
        };
    }
    let overlap: usize = cand
        .iter()
        .map(|(gram, &c)| refs.get(gram).map_or(0, |&r| c.min(r)))
        .sum();
    let ratio = |total: usize| {
        if total == 0 {
            0.0
        } else {
            overlap as f64 / total as f64
        }
    };
    Score::new(ratio(cand_total), ratio(ref_total))
}

fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L from the longest common subsequence, with a plain harmonic-mean F1.
pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Score {
    match (candidate.is_empty(), reference.is_empty()) {
        (true, true) => Score::perfect(),
        (true, false) | (false, true) => Score::zero(),
        (false, false) => {
            let l = lcs_len(candidate, reference) as f64;
            Score::new(l / candidate.len() as f64, l / reference.len() as f64)
        }
    }
}
