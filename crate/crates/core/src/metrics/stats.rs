use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub avg_tokens_per_atom: f64,
    pub avg_verbs_per_atom: f64,
    pub atom_count: usize,
}

/// Mean token count and mean `VERB` count (auxiliaries excluded) per atom.
/// Each atom is a token list with a parallel UPOS list.
pub fn length_verb_stats<S: AsRef<str>>(
    atoms: &[(Vec<S>, Vec<S>)],
) -> Result<CorpusStats, MetricError> {
    if atoms.is_empty() {
        return Err(MetricError::EmptyStats);
    }
    let mut tokens = 0usize;
    let mut verbs = 0usize;
    for (index, (toks, tags)) in atoms.iter().enumerate() {
        if toks.len() != tags.len() {
            return Err(MetricError::MisalignedTags {
                index,
                tokens: toks.len(),
                tags: tags.len(),
            });
        }
        tokens += toks.len();
        verbs += tags.iter().filter(|t| t.as_ref() == "VERB").count();
    }
    let n = atoms.len() as f64;
    Ok(CorpusStats {
        avg_tokens_per_atom: tokens as f64 / n,
        avg_verbs_per_atom: verbs as f64 / n,
        atom_count: atoms.len(),
    })
}
