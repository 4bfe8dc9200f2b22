//! Rule-based decomposition of one dependency tree into atomic sentences.
//!
//! Clause-level sites (verbal conjuncts, relative, adverbial and, when
//! enabled, appositive clauses) partition the tree into clauses. Each clause
//! is then cloned once per conjunct of any phrase-level coordination it
//! contains, and clauses without a subject borrow one from the nearest
//! enclosing clause that has it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::depgraph::{trim_edge_punct, DepTree, TokenId, TokenSpan, RELCL};

/// Lemmas accepted as relative pronouns / adverbs.
const RELATIVE_WORDS: &[&str] = &["who", "whom", "which", "that", "where", "when", "whose"];

/// Dependents that belong to a nominal phrase rather than to the clause frame
/// around it. Used when the phrase head is itself a clause root.
const NOMINAL_INTERNAL: &[&str] = &[
    "det", "amod", "nummod", "compound", "flat", "fixed", "nmod", "case", "clf",
];

/// Rule kinds, declared in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    CoordClause,
    RelativeClause,
    AdverbialClause,
    Appositive,
    CoordPhrase,
    SubjectCopy,
}

impl RuleKind {
    fn is_clause_level(self) -> bool {
        matches!(
            self,
            RuleKind::CoordClause
                | RuleKind::RelativeClause
                | RuleKind::AdverbialClause
                | RuleKind::Appositive
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RuleApplication {
    pub rule: RuleKind,
    pub anchor: TokenId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub enable_appositive_rule: bool,
    pub keep_subordinator: bool,
    pub max_atoms_per_sentence: usize,
    pub min_atom_tokens: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            enable_appositive_rule: false,
            keep_subordinator: false,
            max_atoms_per_sentence: 8,
            min_atom_tokens: 2,
        }
    }
}

/// Where a realized token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    /// Belongs to the atom's own clause.
    Own,
    /// Copied subject of an enclosing clause.
    Subject,
    /// Antecedent substituted for a relative pronoun.
    Antecedent,
    /// Head nominal prefixed to an appositive.
    AppositiveHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomToken {
    pub id: TokenId,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicSentence {
    pub text: String,
    pub source_sent_id: String,
    /// Every source token used, copied ones included.
    pub span: TokenSpan,
    /// Realization order with provenance.
    pub tokens: Vec<AtomToken>,
    pub clause_root: TokenId,
    pub rules: Vec<RuleApplication>,
}

impl AtomicSentence {
    /// Builds an atom from free text by greedily aligning its words to the
    /// source tree left to right. The clause root is the shallowest verb whose
    /// head is not aligned, else the shallowest aligned verb, else an
    /// auxiliary or any token whose head is not aligned. Falls back to the
    /// tree root when nothing aligns.
    pub fn from_text(tree: &DepTree, text: &str) -> Self {
        let mut used = BTreeSet::new();
        let mut tokens = Vec::new();
        for word in text.split_whitespace() {
            let word = word.to_lowercase();
            let hit = tree
                .tokens()
                .iter()
                .find(|t| !used.contains(&t.id) && t.form.to_lowercase() == word);
            if let Some(t) = hit {
                used.insert(t.id);
                tokens.push(AtomToken {
                    id: t.id,
                    origin: Origin::Own,
                });
            }
        }
        let tops: Vec<TokenId> = tokens
            .iter()
            .map(|t| t.id)
            .filter(|&id| !used.contains(&tree.head(id)))
            .collect();
        let is = |id: TokenId, upos: &str| tree.tok(id).upos == upos;
        let shallowest = |ids: &mut dyn Iterator<Item = TokenId>| ids.min_by_key(|&id| (tree.depth(id), id));
        let clause_root = shallowest(&mut tops.iter().copied().filter(|&id| is(id, "VERB")))
            .or_else(|| shallowest(&mut tokens.iter().map(|t| t.id).filter(|&id| is(id, "VERB"))))
            .or_else(|| shallowest(&mut tops.iter().copied().filter(|&id| is(id, "AUX"))))
            .or_else(|| shallowest(&mut tops.iter().copied()))
            .unwrap_or(tree.root());
        AtomicSentence {
            text: text.trim().to_string(),
            source_sent_id: tree.sent_id().to_string(),
            span: TokenSpan::from_ids(used),
            tokens,
            clause_root,
            rules: Vec::new(),
        }
    }

    pub fn has_rule(&self, rule: RuleKind) -> bool {
        self.rules.iter().any(|r| r.rule == rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClauseSite {
    pub anchor: TokenId,
    pub kind: RuleKind,
}

/// An atom that realized to nothing and was therefore not emitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardedAtom {
    pub clause_root: TokenId,
    pub token_ids: Vec<TokenId>,
    pub rules: Vec<RuleApplication>,
}

/// Full result of splitting one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub atoms: Vec<AtomicSentence>,
    /// Tokens removed on purpose: coordinators, subordinators, relative
    /// pronouns and edge punctuation.
    pub dropped: BTreeSet<TokenId>,
    pub discarded: Vec<DiscardedAtom>,
    /// Sites left unsplit because of the atom cap or the minimum atom length.
    pub suppressed: Vec<ClauseSite>,
}

/// True for a `conj` token that heads a clause of its own.
pub fn is_clausal_conj(tree: &DepTree, id: TokenId) -> bool {
    let tok = tree.tok(id);
    tok.base_deprel() == "conj"
        && (tok.upos == "VERB" || tok.upos == "AUX" || tree.subject_of(id).is_some())
}

fn site_kind(tree: &DepTree, id: TokenId, config: &SplitConfig) -> Option<RuleKind> {
    let tok = tree.tok(id);
    match tok.deprel.as_str() {
        RELCL | "advcl:relcl" => return Some(RuleKind::RelativeClause),
        _ => {}
    }
    match tok.base_deprel() {
        "advcl" => Some(RuleKind::AdverbialClause),
        "appos" if config.enable_appositive_rule => Some(RuleKind::Appositive),
        "conj" if is_clausal_conj(tree, id) => Some(RuleKind::CoordClause),
        "conj" => Some(RuleKind::CoordPhrase),
        _ => None,
    }
}

/// Every splitting site in the tree, ordered by anchor id.
pub fn detect_clause_sites(tree: &DepTree, config: &SplitConfig) -> Vec<ClauseSite> {
    tree.tokens()
        .iter()
        .filter_map(|t| site_kind(tree, t.id, config).map(|kind| ClauseSite { anchor: t.id, kind }))
        .collect()
}

/// Dependents that head a clause-like structure, regardless of config.
pub(crate) fn is_clause_like(tree: &DepTree, id: TokenId) -> bool {
    let tok = tree.tok(id);
    matches!(tok.base_deprel(), "advcl" | "appos")
        || tok.deprel == RELCL
        || tok.deprel == "advcl:relcl"
        || is_clausal_conj(tree, id)
}

/// Subject span borrowed from the innermost enclosing clause that has one.
/// The subject's subtree is pruned of clause-like branches and edge
/// punctuation.
pub fn propagate_subject(
    tree: &DepTree,
    _clause_root: TokenId,
    enclosing_clause_roots: &[TokenId],
) -> Option<TokenSpan> {
    let subject = enclosing_clause_roots
        .iter()
        .find_map(|&root| tree.subject_of(root))?;
    Some(TokenSpan::from_ids(subject_block(tree, subject)))
}

fn subject_block(tree: &DepTree, subject: TokenId) -> Vec<TokenId> {
    let clause_like: BTreeSet<TokenId> = tree
        .tokens()
        .iter()
        .filter(|t| t.id != subject && is_clause_like(tree, t.id))
        .map(|t| t.id)
        .collect();
    let ids: Vec<TokenId> = tree.collect_subtree(subject, &clause_like).into_iter().collect();
    trim_edge_punct(&ids, |&id| tree.tok(id).is_punct()).to_vec()
}

pub fn split_sentence(tree: &DepTree, config: &SplitConfig) -> Vec<AtomicSentence> {
    split_sentence_traced(tree, config).atoms
}

/// Runs the rule pipeline, merging sites back until every atom satisfies
/// the length floor and the per-sentence cap.
pub fn split_sentence_traced(tree: &DepTree, config: &SplitConfig) -> SplitOutcome {
    let sites = detect_clause_sites(tree, config);
    let mut suppressed: BTreeSet<TokenId> = BTreeSet::new();
    let cap = config.max_atoms_per_sentence.max(1);

    loop {
        let active: Vec<ClauseSite> = sites
            .iter()
            .copied()
            .filter(|s| !suppressed.contains(&s.anchor))
            .collect();
        let built = Builder::new(tree, config, &active).build();

        let short = built
            .candidates
            .iter()
            .find(|c| c.atom.tokens.len() < config.min_atom_tokens && c.responsible.is_some());
        if let Some(c) = short {
            suppressed.insert(c.responsible.unwrap());
            continue;
        }
        if built.candidates.len() > cap {
            if let Some(last) = active.iter().map(|s| s.anchor).max() {
                suppressed.insert(last);
                continue;
            }
        }

        return SplitOutcome {
            atoms: built.candidates.into_iter().map(|c| c.atom).collect(),
            dropped: built.dropped,
            discarded: built.discarded,
            suppressed: sites
                .iter()
                .copied()
                .filter(|s| suppressed.contains(&s.anchor))
                .collect(),
        };
    }
}

struct Clause {
    root: TokenId,
    site: Option<RuleKind>,
    parent: Option<usize>,
    own: BTreeSet<TokenId>,
    /// Relative pronoun and the antecedent that replaces it.
    substitution: Option<(TokenId, Vec<TokenId>)>,
    appositive_head: Vec<TokenId>,
    rules: Vec<RuleApplication>,
}

struct Variant {
    own: BTreeSet<TokenId>,
    rules: Vec<RuleApplication>,
    responsible: Option<TokenId>,
}

struct Candidate {
    atom: AtomicSentence,
    /// Site to merge back if this atom turns out too short.
    responsible: Option<TokenId>,
    order: (TokenId, usize),
}

struct Built {
    candidates: Vec<Candidate>,
    dropped: BTreeSet<TokenId>,
    discarded: Vec<DiscardedAtom>,
}

struct Builder<'a> {
    tree: &'a DepTree,
    config: &'a SplitConfig,
    sites: &'a [ClauseSite],
    clause_roots: BTreeSet<TokenId>,
    dropped: BTreeSet<TokenId>,
}

impl<'a> Builder<'a> {
    fn new(tree: &'a DepTree, config: &'a SplitConfig, sites: &'a [ClauseSite]) -> Self {
        let mut clause_roots: BTreeSet<TokenId> = sites
            .iter()
            .filter(|s| s.kind.is_clause_level())
            .map(|s| s.anchor)
            .collect();
        clause_roots.insert(tree.root());
        Builder {
            tree,
            config,
            sites,
            clause_roots,
            dropped: BTreeSet::new(),
        }
    }

    fn build(mut self) -> Built {
        let mut clauses = self.partition();
        self.apply_clause_rules(&mut clauses);

        let mut candidates = Vec::new();
        let mut discarded = Vec::new();
        for idx in 0..clauses.len() {
            let variants = self.expand_coordination(&clauses[idx]);
            let subject = self.subject_copy(&clauses, idx);
            for (v_idx, variant) in variants.into_iter().enumerate() {
                match self.realize(&clauses[idx], variant, subject.as_ref()) {
                    Ok((atom, responsible)) => candidates.push(Candidate {
                        atom,
                        responsible,
                        order: (clauses[idx].root, v_idx),
                    }),
                    Err(d) => discarded.push(d),
                }
            }
        }
        candidates.sort_by_key(|c| c.order);
        Built {
            candidates,
            dropped: self.dropped,
            discarded,
        }
    }

    /// One clause per clause root; each owns its subtree minus nested clauses.
    fn partition(&self) -> Vec<Clause> {
        let tree = self.tree;
        let kinds: BTreeMap<TokenId, RuleKind> =
            self.sites.iter().map(|s| (s.anchor, s.kind)).collect();
        let roots: Vec<TokenId> = self.clause_roots.iter().copied().collect();
        let index: BTreeMap<TokenId, usize> =
            roots.iter().enumerate().map(|(i, &r)| (r, i)).collect();

        roots
            .iter()
            .map(|&root| {
                let mut excluded = self.clause_roots.clone();
                excluded.remove(&root);
                let mut parent = None;
                let mut cur = tree.head(root);
                while cur != 0 {
                    if let Some(&p) = index.get(&cur) {
                        parent = Some(p);
                        break;
                    }
                    cur = tree.head(cur);
                }
                let site = if root == tree.root() {
                    None
                } else {
                    kinds.get(&root).copied()
                };
                Clause {
                    root,
                    site,
                    parent,
                    own: tree.collect_subtree(root, &excluded),
                    substitution: None,
                    appositive_head: Vec::new(),
                    rules: site
                        .map(|rule| vec![RuleApplication { rule, anchor: root }])
                        .unwrap_or_default(),
                }
            })
            .collect()
    }

    fn apply_clause_rules(&mut self, clauses: &mut [Clause]) {
        let tree = self.tree;
        for idx in 0..clauses.len() {
            let Some(kind) = clauses[idx].site else {
                continue;
            };
            let root = clauses[idx].root;
            if let Some(p) = clauses[idx].parent {
                clauses[p].rules.push(RuleApplication { rule: kind, anchor: root });
            }
            match kind {
                RuleKind::CoordClause => {
                    for c in coordinators(tree, root) {
                        self.drop_token(clauses, c);
                    }
                }
                RuleKind::RelativeClause => {
                    let pronoun = clauses[idx]
                        .own
                        .iter()
                        .copied()
                        .find(|&id| is_relative_word(tree, id));
                    if let Some(pronoun) = pronoun {
                        let antecedent = self.phrase_of(tree.head(root));
                        let antecedent =
                            trim_edge_punct(&antecedent, |&id| tree.tok(id).is_punct()).to_vec();
                        self.dropped.insert(pronoun);
                        clauses[idx].substitution = Some((pronoun, antecedent));
                    }
                }
                RuleKind::AdverbialClause => {
                    if !self.config.keep_subordinator {
                        let marks: Vec<TokenId> = tree
                            .children(root)
                            .iter()
                            .copied()
                            .filter(|&c| tree.tok(c).deprel == "mark")
                            .collect();
                        for m in marks {
                            self.drop_token(clauses, m);
                        }
                    }
                }
                RuleKind::Appositive => {
                    let head = self.phrase_of(tree.head(root));
                    clauses[idx].appositive_head =
                        trim_edge_punct(&head, |&id| tree.tok(id).is_punct()).to_vec();
                }
                RuleKind::CoordPhrase | RuleKind::SubjectCopy => {}
            }
        }
    }

    fn drop_token(&mut self, clauses: &mut [Clause], id: TokenId) {
        for clause in clauses.iter_mut() {
            clause.own.remove(&id);
        }
        self.dropped.insert(id);
    }

    /// The nominal phrase headed by `head`, excluding nested clauses.
    fn phrase_of(&self, head: TokenId) -> Vec<TokenId> {
        let tree = self.tree;
        let mut excluded = self.clause_roots.clone();
        excluded.remove(&head);
        if self.clause_roots.contains(&head) {
            let mut ids = BTreeSet::from([head]);
            for &c in tree.children(head) {
                if NOMINAL_INTERNAL.contains(&tree.tok(c).base_deprel()) && !excluded.contains(&c) {
                    ids.extend(tree.collect_subtree(c, &excluded));
                }
            }
            ids.into_iter().collect()
        } else {
            tree.collect_subtree(head, &excluded).into_iter().collect()
        }
    }

    /// Clones the clause once per conjunct of each phrase-level coordination.
    fn expand_coordination(&mut self, clause: &Clause) -> Vec<Variant> {
        let tree = self.tree;
        let mut groups: BTreeMap<TokenId, Vec<TokenId>> = BTreeMap::new();
        for site in self.sites.iter().filter(|s| s.kind == RuleKind::CoordPhrase) {
            if clause.own.contains(&site.anchor) {
                groups.entry(tree.head(site.anchor)).or_default().push(site.anchor);
            }
        }
        let mut order: Vec<TokenId> = groups.keys().copied().collect();
        order.sort_by_key(|&h| (tree.depth(h), h));

        let mut variants = vec![Variant {
            own: clause.own.clone(),
            rules: clause.rules.clone(),
            responsible: clause.site.map(|_| clause.root),
        }];
        for head in order {
            let conjuncts = &groups[&head];
            let mut coords: BTreeSet<TokenId> = BTreeSet::new();
            for &c in conjuncts {
                coords.extend(coordinators(tree, c));
            }
            self.dropped.extend(coords.iter().filter(|id| clause.own.contains(id)));

            let mut next = Vec::new();
            for v in variants {
                if !v.own.contains(&head) {
                    next.push(v);
                    continue;
                }
                let branches: Vec<BTreeSet<TokenId>> = conjuncts
                    .iter()
                    .map(|&c| {
                        tree.collect_subtree(c, &self.clause_roots)
                            .intersection(&v.own)
                            .copied()
                            .filter(|id| !coords.contains(id))
                            .collect()
                    })
                    .collect();
                let mut branches = branches;
                // Conjuncts whose site was merged back travel with the
                // nearest preceding active conjunct.
                for &sib in tree.children(head) {
                    if tree.tok(sib).base_deprel() != "conj"
                        || conjuncts.contains(&sib)
                        || self.clause_roots.contains(&sib)
                    {
                        continue;
                    }
                    if let Some(k) = conjuncts.iter().rposition(|&c| c < sib) {
                        branches[k].extend(
                            tree.collect_subtree(sib, &self.clause_roots)
                                .intersection(&v.own)
                                .copied(),
                        );
                    }
                }
                let all_branches: BTreeSet<TokenId> = branches.iter().flatten().copied().collect();
                let head_phrase: BTreeSet<TokenId> = self
                    .phrase_of(head)
                    .into_iter()
                    .filter(|id| v.own.contains(id) && !all_branches.contains(id))
                    .collect();

                let base: BTreeSet<TokenId> = v
                    .own
                    .iter()
                    .copied()
                    .filter(|id| !coords.contains(id) && !all_branches.contains(id))
                    .collect();
                let mut rules = v.rules.clone();
                rules.push(RuleApplication {
                    rule: RuleKind::CoordPhrase,
                    anchor: conjuncts[0],
                });
                next.push(Variant {
                    own: base.clone(),
                    rules,
                    responsible: Some(conjuncts[0]),
                });
                for (i, &c) in conjuncts.iter().enumerate() {
                    let mut own: BTreeSet<TokenId> =
                        base.difference(&head_phrase).copied().collect();
                    own.extend(branches[i].iter().copied());
                    let mut rules = v.rules.clone();
                    rules.push(RuleApplication {
                        rule: RuleKind::CoordPhrase,
                        anchor: c,
                    });
                    next.push(Variant {
                        own,
                        rules,
                        responsible: Some(c),
                    });
                }
            }
            variants = next;
        }
        variants
    }

    fn subject_copy(&self, clauses: &[Clause], idx: usize) -> Option<(TokenId, Vec<TokenId>)> {
        let clause = &clauses[idx];
        if clause.site == Some(RuleKind::Appositive) || self.tree.subject_of(clause.root).is_some() {
            return None;
        }
        let mut enclosing = Vec::new();
        let mut cur = clause.parent;
        while let Some(p) = cur {
            enclosing.push(clauses[p].root);
            cur = clauses[p].parent;
        }
        let subject = enclosing.iter().find_map(|&r| self.tree.subject_of(r))?;
        let span = propagate_subject(self.tree, clause.root, &enclosing)?;
        Some((subject, span.ids().to_vec()))
    }

    fn realize(
        &mut self,
        clause: &Clause,
        variant: Variant,
        subject: Option<&(TokenId, Vec<TokenId>)>,
    ) -> Result<(AtomicSentence, Option<TokenId>), DiscardedAtom> {
        let tree = self.tree;
        let mut rules = variant.rules;
        let mut own_part: Vec<AtomToken> = Vec::new();
        for &id in &variant.own {
            match &clause.substitution {
                Some((pronoun, antecedent)) if *pronoun == id => {
                    own_part.extend(antecedent.iter().map(|&a| AtomToken {
                        id: a,
                        origin: Origin::Antecedent,
                    }));
                }
                _ => own_part.push(AtomToken {
                    id,
                    origin: Origin::Own,
                }),
            }
        }
        let own_trimmed = trim_edge_punct(&own_part, |t| tree.tok(t.id).is_punct());
        for t in &own_part {
            if t.origin == Origin::Own && !own_trimmed.contains(t) {
                self.dropped.insert(t.id);
            }
        }

        // A subject already present, e.g. as a substituted antecedent, is not
        // copied a second time.
        let subject = subject.filter(|(_, ids)| {
            !ids.iter()
                .any(|i| own_part.iter().any(|t| t.id == *i) || clause.appositive_head.contains(i))
        });
        let mut seq: Vec<AtomToken> = Vec::new();
        if let Some((anchor, ids)) = subject {
            rules.push(RuleApplication {
                rule: RuleKind::SubjectCopy,
                anchor: *anchor,
            });
            seq.extend(ids.iter().map(|&id| AtomToken {
                id,
                origin: Origin::Subject,
            }));
        }
        seq.extend(clause.appositive_head.iter().map(|&id| AtomToken {
            id,
            origin: Origin::AppositiveHead,
        }));
        seq.extend_from_slice(own_trimmed);
        rules.sort();
        rules.dedup();

        if own_trimmed.is_empty() {
            return Err(DiscardedAtom {
                clause_root: clause.root,
                token_ids: own_part.iter().map(|t| t.id).collect(),
                rules,
            });
        }
        let trimmed = trim_edge_punct(&seq, |t| tree.tok(t.id).is_punct()).to_vec();
        let text = trimmed
            .iter()
            .map(|t| tree.tok(t.id).form.to_lowercase())
            .collect::<Vec<_>>()
            .join(" ");
        Ok((
            AtomicSentence {
                text,
                source_sent_id: tree.sent_id().to_string(),
                span: TokenSpan::from_ids(trimmed.iter().map(|t| t.id)),
                tokens: trimmed,
                clause_root: clause.root,
                rules,
            },
            variant.responsible,
        ))
    }
}

fn is_relative_word(tree: &DepTree, id: TokenId) -> bool {
    let tok = tree.tok(id);
    let lemma = tok.lemma.to_lowercase();
    let key = if lemma == "_" || lemma.is_empty() {
        tok.form.to_lowercase()
    } else {
        lemma
    };
    RELATIVE_WORDS.contains(&key.as_str())
}

/// Tokens that only serve to join `conj` to its head: its `cc` dependents,
/// separator punctuation before it, and a `cc` attached to the first
/// conjunct between the two (the older attachment style).
fn coordinators(tree: &DepTree, conj: TokenId) -> Vec<TokenId> {
    let head = tree.head(conj);
    let mut out: Vec<TokenId> = tree
        .children(conj)
        .iter()
        .copied()
        .filter(|&c| {
            let t = tree.tok(c);
            t.deprel == "cc" || (t.deprel == "punct" && c < conj)
        })
        .collect();
    if head != 0 {
        out.extend(
            tree.children(head)
                .iter()
                .copied()
                .filter(|&c| tree.tok(c).deprel == "cc" && c > head && c < conj),
        );
    }
    out.sort_unstable();
    out.dedup();
    out
}
