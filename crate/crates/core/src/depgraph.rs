//! CoNLL-U ingestion and read-only queries over basic dependency trees.
//!
//! Only integer-id rows become tokens; multiword-token ranges (`3-4`) and
//! empty nodes (`3.1`) are skipped. A handful of legacy relation labels are
//! rewritten to their UD v2 spelling at parse time so the splitting rules can
//! match on a single label.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based token position within a sentence.
pub type TokenId = usize;

/// Deprel used internally for relative clauses (`relcl` is folded into it).
pub const RELCL: &str = "acl:relcl";

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sentence {sent_id}: {source}")]
    Validation {
        sent_id: String,
        #[source]
        source: TreeError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("sentence has no tokens")]
    Empty,
    #[error("token ids must run 1..n without gaps: expected {expected}, found {found}")]
    IdGap { expected: TokenId, found: TokenId },
    #[error("token {id} has an empty form")]
    EmptyForm { id: TokenId },
    #[error("token {id} is its own head")]
    SelfLoop { id: TokenId },
    #[error("token {id} points at missing head {head}")]
    MissingHead { id: TokenId, head: TokenId },
    #[error("no token attaches to the root")]
    NoRoot,
    #[error("multiple root tokens: {0:?}")]
    MultipleRoots(Vec<TokenId>),
    #[error("root token {id} has deprel {deprel:?}, expected \"root\"")]
    RootDeprel { id: TokenId, deprel: String },
    #[error("head chain starting at token {id} contains a cycle")]
    Cycle { id: TokenId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("unknown token id {0}")]
    UnknownToken(TokenId),
    #[error("span realizes to an empty string")]
    EmptyAtom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: TokenId,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub head: TokenId,
    pub deprel: String,
}

impl Token {
    pub fn new(
        id: TokenId,
        form: &str,
        lemma: &str,
        upos: &str,
        head: TokenId,
        deprel: &str,
    ) -> Self {
        Token {
            id,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            head,
            deprel: normalize_deprel(deprel),
        }
    }

    pub fn is_punct(&self) -> bool {
        self.upos == "PUNCT"
    }

    /// Relation label without its subtype (`nsubj:pass` -> `nsubj`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or(&self.deprel)
    }

    pub fn is_subject(&self) -> bool {
        self.deprel == "nsubj" || self.deprel == "nsubj:pass"
    }
}

/// Maps older tagset labels onto UD v2 ones. Labels are lowercased so that
/// `ROOT` from some parsers is accepted.
pub fn normalize_deprel(deprel: &str) -> String {
    let lower = deprel.to_lowercase();
    match lower.as_str() {
        "relcl" => RELCL.to_string(),
        "dobj" => "obj".to_string(),
        "nsubjpass" => "nsubj:pass".to_string(),
        _ => lower,
    }
}

/// Sorted, duplicate-free set of token ids belonging to one tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSpan(Vec<TokenId>);

impl TokenSpan {
    pub fn from_ids<I: IntoIterator<Item = TokenId>>(ids: I) -> Self {
        let set: BTreeSet<TokenId> = ids.into_iter().collect();
        TokenSpan(set.into_iter().collect())
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: TokenId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.0.iter().copied()
    }
}

/// A validated dependency tree. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    sent_id: String,
    text: String,
    tokens: Vec<Token>,
    children: Vec<Vec<TokenId>>,
    root: TokenId,
}

impl DepTree {
    /// Builds a tree, checking ids, heads, the single root and acyclicity.
    pub fn new(
        sent_id: impl Into<String>,
        text: impl Into<String>,
        tokens: Vec<Token>,
    ) -> Result<Self, TreeError> {
        if tokens.is_empty() {
            return Err(TreeError::Empty);
        }
        let n = tokens.len();
        let mut roots = Vec::new();
        for (idx, tok) in tokens.iter().enumerate() {
            if tok.id != idx + 1 {
                return Err(TreeError::IdGap {
                    expected: idx + 1,
                    found: tok.id,
                });
            }
            if tok.form.is_empty() {
                return Err(TreeError::EmptyForm { id: tok.id });
            }
            if tok.head == tok.id {
                return Err(TreeError::SelfLoop { id: tok.id });
            }
            if tok.head > n {
                return Err(TreeError::MissingHead {
                    id: tok.id,
                    head: tok.head,
                });
            }
            if tok.head == 0 {
                roots.push(tok.id);
            }
        }
        let root = match roots.as_slice() {
            [] => return Err(TreeError::NoRoot),
            [r] => *r,
            _ => return Err(TreeError::MultipleRoots(roots)),
        };
        if tokens[root - 1].deprel != "root" {
            return Err(TreeError::RootDeprel {
                id: root,
                deprel: tokens[root - 1].deprel.clone(),
            });
        }
        for tok in &tokens {
            let mut cur = tok.id;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(TreeError::Cycle { id: tok.id });
                }
                cur = tokens[cur - 1].head;
            }
        }

        let mut children = vec![Vec::new(); n + 1];
        for tok in &tokens {
            children[tok.head].push(tok.id);
        }

        let text = text.into();
        let text = if text.is_empty() {
            tokens
                .iter()
                .map(|t| t.form.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            text
        };

        Ok(DepTree {
            sent_id: sent_id.into(),
            text,
            tokens,
            children,
            root,
        })
    }

    pub fn sent_id(&self) -> &str {
        &self.sent_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> TokenId {
        self.root
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id >= 1 && id <= self.tokens.len()
    }

    pub fn token(&self, id: TokenId) -> Result<&Token, SpanError> {
        if self.contains(id) {
            Ok(&self.tokens[id - 1])
        } else {
            Err(SpanError::UnknownToken(id))
        }
    }

    /// Panicking accessor for ids already known to be valid.
    pub(crate) fn tok(&self, id: TokenId) -> &Token {
        &self.tokens[id - 1]
    }

    /// Dependents of `id` in ascending order. `children(0)` is the root.
    pub fn children(&self, id: TokenId) -> &[TokenId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn head(&self, id: TokenId) -> TokenId {
        self.tok(id).head
    }

    /// Number of edges between `id` and the root token.
    pub fn depth(&self, id: TokenId) -> usize {
        let mut depth = 0;
        let mut cur = self.tok(id).head;
        while cur != 0 {
            depth += 1;
            cur = self.tok(cur).head;
        }
        depth
    }

    /// True when `ancestor` lies on the head chain of `id` (or equals it).
    pub fn dominates(&self, ancestor: TokenId, id: TokenId) -> bool {
        let mut cur = id;
        while cur != 0 {
            if cur == ancestor {
                return true;
            }
            cur = self.tok(cur).head;
        }
        false
    }

    /// The subject dependent (`nsubj` / `nsubj:pass`) of `id`, if any.
    pub fn subject_of(&self, id: TokenId) -> Option<TokenId> {
        self.children(id)
            .iter()
            .copied()
            .find(|&c| self.tok(c).is_subject())
    }

    /// Tokens reachable from `root_id`, never descending into a branch whose
    /// top node is in `excluded_roots`. `root_id` itself is always kept.
    pub fn subtree_span(
        &self,
        root_id: TokenId,
        excluded_roots: &BTreeSet<TokenId>,
    ) -> Result<TokenSpan, SpanError> {
        self.token(root_id)?;
        if let Some(&bad) = excluded_roots.iter().find(|&&id| !self.contains(id)) {
            return Err(SpanError::UnknownToken(bad));
        }
        Ok(TokenSpan::from_ids(self.collect_subtree(root_id, excluded_roots)))
    }

    pub(crate) fn collect_subtree(
        &self,
        root_id: TokenId,
        excluded_roots: &BTreeSet<TokenId>,
    ) -> BTreeSet<TokenId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![root_id];
        while let Some(id) = stack.pop() {
            out.insert(id);
            for &child in self.children(id) {
                if !excluded_roots.contains(&child) {
                    stack.push(child);
                }
            }
        }
        out
    }

    /// Surface string for `span` minus `drop`: ascending id order, single
    /// spaces, edge punctuation removed, lowercased.
    pub fn linearize(
        &self,
        span: &TokenSpan,
        drop: &BTreeSet<TokenId>,
    ) -> Result<String, SpanError> {
        if let Some(bad) = span.iter().find(|&id| !self.contains(id)) {
            return Err(SpanError::UnknownToken(bad));
        }
        let kept: Vec<&Token> = span
            .iter()
            .filter(|id| !drop.contains(id))
            .map(|id| self.tok(id))
            .collect();
        let trimmed = trim_edge_punct(&kept, |t| t.is_punct());
        if trimmed.is_empty() {
            return Err(SpanError::EmptyAtom);
        }
        Ok(trimmed
            .iter()
            .map(|t| t.form.to_lowercase())
            .collect::<Vec<_>>()
            .join(" "))
    }

    /// Serializes the tree as one CoNLL-U block (including the trailing blank line).
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sent_id = {}", self.sent_id);
        let _ = writeln!(out, "# text = {}", self.text);
        for t in &self.tokens {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                t.id, t.form, t.lemma, t.upos, t.head, t.deprel
            );
        }
        out.push('\n');
        out
    }
}

/// Strips items matching `is_punct` from both ends of a slice.
pub(crate) fn trim_edge_punct<T>(items: &[T], is_punct: impl Fn(&T) -> bool) -> &[T] {
    let start = items.iter().position(|t| !is_punct(t)).unwrap_or(items.len());
    let end = items
        .iter()
        .rposition(|t| !is_punct(t))
        .map_or(start, |p| p + 1);
    &items[start..end]
}

#[derive(Default)]
struct Block {
    sent_id: Option<String>,
    text: Option<String>,
    tokens: Vec<Token>,
    first_line: usize,
}

/// Parses every sentence block of a CoNLL-U document.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<DepTree>, ConlluError> {
    let mut trees = Vec::new();
    let mut block = Block::default();
    let mut seen_rows = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if seen_rows || block.sent_id.is_some() || block.text.is_some() {
                trees.push(finish_block(std::mem::take(&mut block), trees.len() + 1)?);
                seen_rows = false;
            }
            continue;
        }
        if block.first_line == 0 {
            block.first_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => block.sent_id = Some(value.trim().to_string()),
                    "text" => block.text = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        if let Some(tok) = parse_row(line, line_no)? {
            block.tokens.push(tok);
        }
        seen_rows = true;
    }
    if seen_rows {
        trees.push(finish_block(block, trees.len() + 1)?);
    }
    Ok(trees)
}

pub fn parse_conllu_str(input: &str) -> Result<Vec<DepTree>, ConlluError> {
    parse_conllu(input.as_bytes())
}

fn finish_block(block: Block, index: usize) -> Result<DepTree, ConlluError> {
    let sent_id = block.sent_id.unwrap_or_else(|| index.to_string());
    if block.tokens.is_empty() {
        return Err(ConlluError::Parse {
            line: block.first_line,
            message: format!("sentence {sent_id} has no token rows"),
        });
    }
    let text = block.text.unwrap_or_default();
    DepTree::new(sent_id.clone(), text, block.tokens)
        .map_err(|source| ConlluError::Validation { sent_id, source })
}

fn parse_row(line: &str, line_no: usize) -> Result<Option<Token>, ConlluError> {
    let err = |message: String| ConlluError::Parse {
        line: line_no,
        message,
    };
    let mut cols: Vec<&str> = line.split('\t').collect();
    // Hand-written files sometimes use runs of spaces instead of tabs.
    if cols.len() == 1 {
        cols = line.split_whitespace().collect();
    }
    if cols.len() != 10 {
        return Err(err(format!("expected 10 columns, found {}", cols.len())));
    }
    let id_col = cols[0];
    if id_col.contains('-') || id_col.contains('.') {
        return Ok(None);
    }
    let id: TokenId = id_col
        .parse()
        .map_err(|_| err(format!("non-integer token id {id_col:?}")))?;
    if id == 0 {
        return Err(err("token id must be positive".to_string()));
    }
    let head: TokenId = cols[6]
        .parse()
        .map_err(|_| err(format!("non-integer head {:?}", cols[6])))?;
    if cols[1].is_empty() {
        return Err(err("empty form".to_string()));
    }
    Ok(Some(Token::new(id, cols[1], cols[2], cols[3], head, cols[7])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apple_tree() -> DepTree {
        // anna ate an apple and a banana
        DepTree::new(
            "apple",
            "",
            vec![
                Token::new(1, "Anna", "anna", "PROPN", 2, "nsubj"),
                Token::new(2, "ate", "eat", "VERB", 0, "root"),
                Token::new(3, "an", "a", "DET", 4, "det"),
                Token::new(4, "apple", "apple", "NOUN", 2, "obj"),
                Token::new(5, "and", "and", "CCONJ", 7, "cc"),
                Token::new(6, "a", "a", "DET", 7, "det"),
                Token::new(7, "banana", "banana", "NOUN", 4, "conj"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn parses_minimal_block() {
        let trees =
            parse_conllu_str("1\tanna\tanna\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tsang\tsing\tVERB\t_\t_\t0\troot\t_\t_\n")
                .unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].len(), 2);
        assert_eq!(trees[0].root(), 2);
        assert_eq!(trees[0].sent_id(), "1");
        assert_eq!(trees[0].text(), "anna sang");
    }

    #[test]
    fn space_separated_rows_are_accepted() {
        let trees = parse_conllu_str(
            "1 anna anna NOUN _ _ 2 nsubj _ _\n2 sang sing VERB _ _ 0 root _ _",
        )
        .unwrap();
        assert_eq!(trees[0].root(), 2);
    }

    #[test]
    fn comments_and_skipped_rows() {
        let input = "# sent_id = s7\n# text = Don't go.\n1-2\tDon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
                     1\tDo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
                     2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n\
                     4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n\n";
        let trees = parse_conllu_str(input).unwrap();
        assert_eq!(trees[0].sent_id(), "s7");
        assert_eq!(trees[0].text(), "Don't go.");
        assert_eq!(trees[0].len(), 4);
    }

    #[test]
    fn legacy_labels_are_normalized() {
        let input = "1\tit\tit\tPRON\t_\t_\t2\tnsubjpass\t_\t_\n2\twas\tbe\tAUX\t_\t_\t0\tROOT\t_\t_\n\
                     3\tx\tx\tNOUN\t_\t_\t2\tdobj\t_\t_\n4\ty\ty\tVERB\t_\t_\t3\trelcl\t_\t_\n";
        let t = &parse_conllu_str(input).unwrap()[0];
        let rels: Vec<&str> = t.tokens().iter().map(|t| t.deprel.as_str()).collect();
        assert_eq!(rels, ["nsubj:pass", "root", "obj", "acl:relcl"]);
    }

    #[test]
    fn multiple_blocks_get_index_ids() {
        let row = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n";
        let trees = parse_conllu_str(&format!("{row}\n\n{row}\n")).unwrap();
        let ids: Vec<&str> = trees.iter().map(|t| t.sent_id()).collect();
        assert_eq!(ids, ["1", "2"]);
    }

    #[test]
    fn self_loop_is_rejected() {
        let input = "# sent_id = bad\n1\tanna\tanna\tNOUN\t_\t_\t0\troot\t_\t_\n2\tsang\tsing\tVERB\t_\t_\t2\tdep\t_\t_\n";
        match parse_conllu_str(input) {
            Err(ConlluError::Validation { sent_id, source }) => {
                assert_eq!(sent_id, "bad");
                assert_eq!(source, TreeError::SelfLoop { id: 2 });
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let input = "1\tanna\tanna\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tsang\tsing\tVERB\t_\t_\tx\troot\t_\t_\n";
        match parse_conllu_str(input) {
            Err(ConlluError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_conllu_str("\n\n1\tanna\tanna\n") {
            Err(ConlluError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn structural_violations() {
        let t = |id, head, rel: &str| Token::new(id, "w", "w", "X", head, rel);
        assert_eq!(
            DepTree::new("x", "", vec![t(1, 0, "root"), t(2, 0, "root")]).unwrap_err(),
            TreeError::MultipleRoots(vec![1, 2])
        );
        assert_eq!(
            DepTree::new("x", "", vec![t(1, 2, "dep"), t(2, 1, "dep"), t(3, 0, "root")])
                .unwrap_err(),
            TreeError::Cycle { id: 1 }
        );
        assert_eq!(
            DepTree::new("x", "", vec![t(1, 2, "dep"), t(2, 1, "dep")]).unwrap_err(),
            TreeError::NoRoot
        );
        assert_eq!(
            DepTree::new("x", "", vec![t(1, 0, "root"), t(3, 1, "dep")]).unwrap_err(),
            TreeError::IdGap {
                expected: 2,
                found: 3
            }
        );
        assert_eq!(
            DepTree::new("x", "", vec![t(1, 0, "root"), t(2, 5, "dep")]).unwrap_err(),
            TreeError::MissingHead { id: 2, head: 5 }
        );
        assert_eq!(
            DepTree::new("x", "", vec![t(1, 0, "dep")]).unwrap_err(),
            TreeError::RootDeprel {
                id: 1,
                deprel: "dep".into()
            }
        );
        assert_eq!(DepTree::new("x", "", vec![]).unwrap_err(), TreeError::Empty);
    }

    #[test]
    fn subtree_span_cases() {
        let tree = apple_tree();
        let none = BTreeSet::new();
        assert_eq!(
            tree.subtree_span(2, &none).unwrap().ids(),
            &[1, 2, 3, 4, 5, 6, 7]
        );
        assert_eq!(tree.subtree_span(3, &none).unwrap().ids(), &[3]);
        let pruned = tree.subtree_span(2, &BTreeSet::from([7])).unwrap();
        assert_eq!(pruned.ids(), &[1, 2, 3, 4]);
        assert_eq!(
            tree.subtree_span(9, &none).unwrap_err(),
            SpanError::UnknownToken(9)
        );
        assert_eq!(
            tree.subtree_span(2, &BTreeSet::from([0])).unwrap_err(),
            SpanError::UnknownToken(0)
        );
    }

    #[test]
    fn linearize_cases() {
        let tree = apple_tree();
        let span = TokenSpan::from_ids([1, 2, 3, 4, 5]);
        assert_eq!(
            tree.linearize(&span, &BTreeSet::from([5])).unwrap(),
            "anna ate an apple"
        );
        assert_eq!(
            tree.linearize(&TokenSpan::from_ids([5]), &BTreeSet::from([5])),
            Err(SpanError::EmptyAtom)
        );

        let punct = DepTree::new(
            "p",
            "",
            vec![
                Token::new(1, ",", ",", "PUNCT", 3, "punct"),
                Token::new(2, "Anna", "anna", "PROPN", 3, "nsubj"),
                Token::new(3, "sang", "sing", "VERB", 0, "root"),
                Token::new(4, ".", ".", "PUNCT", 3, "punct"),
            ],
        )
        .unwrap();
        let all = TokenSpan::from_ids(1..=4);
        assert_eq!(punct.linearize(&all, &BTreeSet::new()).unwrap(), "anna sang");
        assert_eq!(
            punct.linearize(&TokenSpan::from_ids([1, 4]), &BTreeSet::new()),
            Err(SpanError::EmptyAtom)
        );
    }

    #[test]
    fn trim_edge_punct_handles_all_punct() {
        let xs = [true, true];
        assert!(trim_edge_punct(&xs, |&p| p).is_empty());
        let ys = [true, false, true, false, true];
        assert_eq!(trim_edge_punct(&ys, |&p| p), &[false, true, false]);
    }
}
