//! Automatic error taxonomy for aligned atom pairs.
//!
//! Each condition looks for a dependency structure of the source clause whose
//! words are all missing from the prediction. A pair gets the label of the
//! single condition that fires; several firing, or none firing on an
//! imperfect pair, yields `Other`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{DepTree, TokenId, RELCL};
use crate::metrics::{metric_tokenize, AlignedPair};
use crate::splitter::{is_clausal_conj, is_clause_like, AtomicSentence};

/// Minimum ROUGE-1 F1 for a pair with nothing missing to count as correct.
pub const CORRECT_F1: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorLabel {
    Correct,
    MissingSubject,
    MissingObject,
    CoordinationError,
    RelativeClauseError,
    AdverbialClauseError,
    AppositiveError,
    Truncated,
    Other,
}

impl ErrorLabel {
    pub const ALL: [ErrorLabel; 9] = [
        ErrorLabel::Correct,
        ErrorLabel::MissingSubject,
        ErrorLabel::MissingObject,
        ErrorLabel::CoordinationError,
        ErrorLabel::RelativeClauseError,
        ErrorLabel::AdverbialClauseError,
        ErrorLabel::AppositiveError,
        ErrorLabel::Truncated,
        ErrorLabel::Other,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ErrorLabel::Correct => "Correct",
            ErrorLabel::MissingSubject => "Missing Subject",
            ErrorLabel::MissingObject => "Missing Object",
            ErrorLabel::CoordinationError => "Coordination Error",
            ErrorLabel::RelativeClauseError => "Relative Clause Error",
            ErrorLabel::AdverbialClauseError => "Adverbial Clause Error",
            ErrorLabel::AppositiveError => "Appositive Error",
            ErrorLabel::Truncated => "Truncated",
            ErrorLabel::Other => "Multiple / Other",
        }
    }
}

impl fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticsError {
    #[error("pair has no gold atom")]
    EmptyGold,
    #[error("clause root {0} is not a token of the source tree")]
    UnknownClauseRoot(TokenId),
}

/// Label plus the individual conditions that fired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub label: ErrorLabel,
    pub fired: Vec<ErrorLabel>,
}

pub fn classify_error(pair: &AlignedPair, source: &DepTree) -> Result<ErrorLabel, DiagnosticsError> {
    diagnose(pair, source).map(|d| d.label)
}

type Bag = HashMap<String, usize>;

fn bag<'a, I: IntoIterator<Item = &'a String>>(tokens: I) -> Bag {
    let mut out = Bag::new();
    for t in tokens {
        *out.entry(t.clone()).or_insert(0) += 1;
    }
    out
}

fn bag_minus(a: &Bag, b: &Bag) -> Bag {
    a.iter()
        .filter_map(|(k, &n)| {
            let left = n.saturating_sub(b.get(k).copied().unwrap_or(0));
            (left > 0).then(|| (k.clone(), left))
        })
        .collect()
}

/// Non-empty and contained in `within`, counting multiplicity.
fn covered(tokens: &[String], within: &Bag) -> bool {
    !tokens.is_empty() && bag_minus(&bag(tokens), within).is_empty()
}

struct ClauseView<'a> {
    tree: &'a DepTree,
    heads: BTreeSet<TokenId>,
}

impl<'a> ClauseView<'a> {
    fn new(tree: &'a DepTree) -> Self {
        let mut heads: BTreeSet<TokenId> = tree
            .tokens()
            .iter()
            .map(|t| t.id)
            .filter(|&id| is_clause_like(tree, id))
            .collect();
        heads.insert(tree.root());
        ClauseView { tree, heads }
    }

    /// Nearest clause head strictly above `id`.
    fn governor(&self, id: TokenId) -> Option<TokenId> {
        let mut cur = self.tree.head(id);
        while cur != 0 {
            if self.heads.contains(&cur) {
                return Some(cur);
            }
            cur = self.tree.head(cur);
        }
        None
    }

    /// Metric tokens of the subtree at `id`, minus nested clauses.
    fn content(&self, id: TokenId) -> Vec<String> {
        let mut excluded = self.heads.clone();
        excluded.remove(&id);
        self.tree
            .collect_subtree(id, &excluded)
            .into_iter()
            .flat_map(|t| metric_tokenize(&self.tree.tok(t).form))
            .collect()
    }

    fn form_tokens(&self, id: TokenId) -> Vec<String> {
        metric_tokenize(&self.tree.tok(id).form)
    }

    fn subject(&self, root: TokenId) -> Option<TokenId> {
        let mut cur = root;
        while cur != 0 {
            if let Some(s) = self.tree.subject_of(cur) {
                return Some(s);
            }
            cur = self.tree.head(cur);
        }
        None
    }

    /// Direct objects of the clause root; a conjunct without its own object
    /// shares the one attached to its head.
    fn objects(&self, root: TokenId) -> Vec<TokenId> {
        let direct = |id: TokenId| -> Vec<TokenId> {
            self.tree
                .children(id)
                .iter()
                .copied()
                .filter(|&c| self.tree.tok(c).base_deprel() == "obj")
                .collect()
        };
        let own = direct(root);
        if own.is_empty() && self.tree.tok(root).base_deprel() == "conj" {
            direct(self.tree.head(root))
        } else {
            own
        }
    }

    fn governed_by(&self, root: TokenId, pred: impl Fn(TokenId) -> bool) -> Vec<TokenId> {
        self.tree
            .tokens()
            .iter()
            .map(|t| t.id)
            .filter(|&id| id != root && pred(id) && self.governor(id) == Some(root))
            .collect()
    }
}

/// Label for a gold atom with no prediction at all: the kind of clause the
/// gold atom corresponds to.
fn missing_atom_label(tree: &DepTree, gold: &str) -> ErrorLabel {
    let root = AtomicSentence::from_text(tree, gold).clause_root;
    let tok = tree.tok(root);
    if tok.deprel == RELCL || tok.deprel == "advcl:relcl" {
        ErrorLabel::RelativeClauseError
    } else {
        match tok.base_deprel() {
            "conj" => ErrorLabel::CoordinationError,
            "advcl" => ErrorLabel::AdverbialClauseError,
            "appos" => ErrorLabel::AppositiveError,
            _ => ErrorLabel::Other,
        }
    }
}

pub fn diagnose(pair: &AlignedPair, source: &DepTree) -> Result<Diagnosis, DiagnosticsError> {
    let gold = pair.gold.as_deref().ok_or(DiagnosticsError::EmptyGold)?;
    let predicted_tokens = metric_tokenize(pair.predicted_text());
    let gold_tokens = metric_tokenize(gold);
    let missing = bag_minus(&bag(&gold_tokens), &bag(&predicted_tokens));

    if pair.rouge1.f1 >= CORRECT_F1 && missing.is_empty() {
        return Ok(Diagnosis {
            label: ErrorLabel::Correct,
            fired: Vec::new(),
        });
    }
    let Some(predicted) = &pair.predicted else {
        return Ok(Diagnosis {
            label: missing_atom_label(source, gold),
            fired: Vec::new(),
        });
    };
    let root = predicted.clause_root;
    if !source.contains(root) {
        return Err(DiagnosticsError::UnknownClauseRoot(root));
    }

    let view = ClauseView::new(source);
    let tree = source;
    let root_form = view.form_tokens(root);
    let object_content: Vec<String> = view
        .objects(root)
        .into_iter()
        .flat_map(|o| view.content(o))
        .collect();

    let mut fired = Vec::new();

    // A prediction that stops early explains everything after it, unless the
    // only thing cut off is the object.
    let is_prefix = !predicted_tokens.is_empty()
        && predicted_tokens.len() < gold_tokens.len()
        && gold_tokens.starts_with(&predicted_tokens);
    let suffix = &gold_tokens[predicted_tokens.len().min(gold_tokens.len())..];
    let truncated = is_prefix && !covered(suffix, &bag(&object_content));
    let missing = if truncated {
        bag_minus(&missing, &bag(suffix))
    } else {
        missing
    };
    if truncated {
        fired.push(ErrorLabel::Truncated);
    }

    let subject_content = view.subject(root).map(|s| view.content(s)).unwrap_or_default();
    let starts_with_verb = !root_form.is_empty()
        && predicted_tokens.first() == root_form.first()
        && matches!(tree.tok(root).upos.as_str(), "VERB" | "AUX");
    if covered(&subject_content, &missing) || starts_with_verb {
        fired.push(ErrorLabel::MissingSubject);
    }

    let verb_present = root_form.iter().all(|f| predicted_tokens.contains(f));
    if verb_present && covered(&object_content, &missing) {
        fired.push(ErrorLabel::MissingObject);
    }

    let lost = |ids: Vec<TokenId>| ids.iter().any(|&id| covered(&view.content(id), &missing));

    if lost(view.governed_by(root, |id| is_clausal_conj(tree, id))) {
        fired.push(ErrorLabel::CoordinationError);
    }

    let is_relcl = |id: TokenId| {
        let d = &tree.tok(id).deprel;
        d == RELCL || d == "advcl:relcl"
    };
    let matrix_lost = is_relcl(root)
        && view
            .governor(root)
            .map(|m| covered(&view.form_tokens(m), &missing))
            .unwrap_or(false);
    if matrix_lost || lost(view.governed_by(root, is_relcl)) {
        fired.push(ErrorLabel::RelativeClauseError);
    }

    let adverbial = |id: TokenId| {
        let t = tree.tok(id);
        (t.base_deprel() == "advcl" && !is_relcl(id)) || t.base_deprel() == "obl"
    };
    if lost(view.governed_by(root, adverbial)) {
        fired.push(ErrorLabel::AdverbialClauseError);
    }

    if lost(view.governed_by(root, |id| tree.tok(id).base_deprel() == "appos")) {
        fired.push(ErrorLabel::AppositiveError);
    }

    let label = match fired.as_slice() {
        [one] => *one,
        _ => ErrorLabel::Other,
    };
    Ok(Diagnosis { label, fired })
}

/// Label counts plus proportions over the non-`Correct` labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub total: usize,
    pub errors: usize,
    pub counts: BTreeMap<ErrorLabel, usize>,
    pub proportions: BTreeMap<ErrorLabel, f64>,
}

pub fn error_distribution(labels: &[ErrorLabel]) -> ErrorDistribution {
    let mut counts: BTreeMap<ErrorLabel, usize> = ErrorLabel::ALL.iter().map(|&l| (l, 0)).collect();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let errors = labels.iter().filter(|&&l| l != ErrorLabel::Correct).count();
    let proportions = if errors == 0 {
        BTreeMap::new()
    } else {
        counts
            .iter()
            .filter(|&(&l, &n)| l != ErrorLabel::Correct && n > 0)
            .map(|(&l, &n)| (l, n as f64 / errors as f64))
            .collect()
    };
    ErrorDistribution {
        total: labels.len(),
        errors,
        counts,
        proportions,
    }
}
