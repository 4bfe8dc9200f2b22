#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use atomsplit::cli::{read_gold, GoldRecord};
use atomsplit::depgraph::{parse_conllu_str, DepTree, Token, TokenId};
use atomsplit::splitter::{detect_clause_sites, split_sentence_traced, Origin, RuleKind, SplitConfig};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_trees() -> Vec<DepTree> {
    let text = std::fs::read_to_string(fixture("corpus.conllu")).unwrap();
    parse_conllu_str(&text).unwrap()
}

pub fn fixture_tree(id: &str) -> DepTree {
    fixture_trees().into_iter().find(|t| t.sent_id() == id).unwrap()
}

pub fn fixture_gold() -> Vec<GoldRecord> {
    read_gold(std::fs::read_to_string(fixture("gold.jsonl")).unwrap().as_bytes()).unwrap()
}

/// Builds a tree from `(form, upos, head, deprel)` rows.
pub fn tree(sent_id: &str, rows: &[(&str, &str, usize, &str)]) -> DepTree {
    let tokens = rows
        .iter()
        .enumerate()
        .map(|(i, &(form, upos, head, rel))| Token::new(i + 1, form, "_", upos, head, rel))
        .collect();
    DepTree::new(sent_id, "", tokens).unwrap()
}

pub fn anna_tree() -> DepTree {
    tree(
        "anna",
        &[
            ("anna", "PROPN", 2, "nsubj"),
            ("ate", "VERB", 0, "root"),
            ("an", "DET", 4, "det"),
            ("apple", "NOUN", 2, "obj"),
            ("and", "CCONJ", 7, "cc"),
            ("a", "DET", 7, "det"),
            ("banana", "NOUN", 4, "conj"),
        ],
    )
}

pub fn alice_tree() -> DepTree {
    tree(
        "alice",
        &[
            ("alice", "PROPN", 2, "nsubj"),
            ("sang", "VERB", 0, "root"),
            ("and", "CCONJ", 4, "cc"),
            ("danced", "VERB", 2, "conj"),
        ],
    )
}

pub fn diana_tree() -> DepTree {
    tree(
        "diana",
        &[
            ("diana", "PROPN", 8, "nsubj"),
            (",", "PUNCT", 4, "punct"),
            ("who", "PRON", 4, "nsubj"),
            ("served", "VERB", 1, "acl:relcl"),
            ("as", "ADP", 6, "case"),
            ("mayor", "NOUN", 4, "obl"),
            (",", "PUNCT", 4, "punct"),
            ("resigned", "VERB", 0, "root"),
        ],
    )
}

const WORDS: &[&str] = &[
    "anna", "bob", "river", "the", "a", "ate", "saw", "left", "who", "which", "and", "or", "while", "old",
    "city", "of", "in", "it", "that", "ran",
];
const UPOS: &[&str] = &["NOUN", "PROPN", "PRON", "VERB", "AUX", "DET", "ADJ", "ADP", "CCONJ", "SCONJ", "ADV", "PUNCT"];
const DEPRELS: &[&str] = &[
    "nsubj", "nsubj:pass", "obj", "obl", "conj", "conj", "cc", "advcl", "acl:relcl", "appos", "mark", "punct",
    "det", "amod", "case", "advmod", "nmod", "compound", "xcomp",
];

/// A random well-formed tree with 1 to `max_len` tokens. Attachment order is
/// a random permutation, so heads can sit on either side of dependents.
pub fn random_tree(seed: u64, max_len: usize) -> DepTree {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_len);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(&mut rng);
    let mut heads = vec![0usize; n + 1];
    for (k, &id) in order.iter().enumerate().skip(1) {
        heads[id] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|id| {
            let upos = *UPOS.choose(&mut rng).unwrap();
            let form = if upos == "PUNCT" {
                ","
            } else {
                *WORDS.choose(&mut rng).unwrap()
            };
            let rel = if heads[id] == 0 {
                "root"
            } else if upos == "PUNCT" {
                "punct"
            } else {
                *DEPRELS.choose(&mut rng).unwrap()
            };
            Token::new(id, form, form, upos, heads[id], rel)
        })
        .collect();
    DepTree::new(format!("r{seed}"), "", tokens).unwrap()
}

pub fn random_tokens(rng: &mut StdRng, max_len: usize, vocab: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Precision, recall, F1 as plain numbers.
pub type Prf = (f64, f64, f64);

fn prf(p: f64, r: f64) -> Prf {
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// ROUGE-N by listing every n-gram and striking matches out of a copy of the
/// reference list one at a time.
pub fn oracle_rouge_n(c: &[String], r: &[String], n: usize) -> Prf {
    let grams = |t: &[String]| -> Vec<Vec<String>> {
        if t.len() < n {
            Vec::new()
        } else {
            (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
        }
    };
    let cg = grams(c);
    let mut pool = grams(r);
    let rlen = pool.len();
    if cg.is_empty() && rlen == 0 {
        return if c == r { (1.0, 1.0, 1.0) } else { (0.0, 0.0, 0.0) };
    }
    let mut hits = 0usize;
    for g in &cg {
        if let Some(pos) = pool.iter().position(|x| x == g) {
            pool.remove(pos);
            hits += 1;
        }
    }
    let p = if cg.is_empty() { 0.0 } else { hits as f64 / cg.len() as f64 };
    let rec = if rlen == 0 { 0.0 } else { hits as f64 / rlen as f64 };
    prf(p, rec)
}

/// ROUGE-L from a full LCS table.
pub fn oracle_rouge_l(c: &[String], r: &[String]) -> Prf {
    if c.is_empty() && r.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    if c.is_empty() || r.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut t = vec![vec![0usize; r.len() + 1]; c.len() + 1];
    for i in 1..=c.len() {
        for j in 1..=r.len() {
            t[i][j] = if c[i - 1] == r[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    let l = t[c.len()][r.len()] as f64;
    prf(l / c.len() as f64, l / r.len() as f64)
}

/// Greedy max-cosine matching over the full similarity matrix.
pub fn oracle_semantic(c: &[Vec<f64>], r: &[Vec<f64>]) -> Prf {
    let cos = |a: &Vec<f64>, b: &Vec<f64>| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (dot / (na * nb)).max(0.0)
    };
    let m: Vec<Vec<f64>> = c.iter().map(|a| r.iter().map(|b| cos(a, b)).collect()).collect();
    let p = m.iter().map(|row| row.iter().cloned().fold(f64::MIN, f64::max)).sum::<f64>() / c.len() as f64;
    let rec = (0..r.len())
        .map(|j| m.iter().map(|row| row[j]).fold(f64::MIN, f64::max))
        .sum::<f64>()
        / r.len() as f64;
    prf(p, rec)
}

pub fn unit_vectors(rng: &mut StdRng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

pub struct ErrorPair {
    pub sent_id: String,
    pub predicted: String,
    pub gold: String,
    pub expected: String,
    pub required: bool,
}

/// Diagnostic fixture pairs; `required` marks the five reference cases.
pub fn error_pairs() -> Vec<ErrorPair> {
    std::fs::read_to_string(fixture("error_pairs.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let s = |k: &str| v[k].as_str().unwrap().to_string();
            ErrorPair {
                sent_id: s("sent_id"),
                predicted: s("predicted"),
                gold: s("gold"),
                expected: s("expected"),
                required: v["required"].as_bool().unwrap(),
            }
        })
        .collect()
}

/// Checks determinism, provenance, order preservation, coverage and
/// site-free idempotence for one tree.
pub fn check_split_invariants(tree: &DepTree, config: &SplitConfig) -> Result<(), String> {
    let id = tree.sent_id();
    let out = split_sentence_traced(tree, config);
    if out != split_sentence_traced(tree, config) {
        return Err(format!("{id}: non-deterministic output"));
    }

    let mut source: HashMap<String, usize> = HashMap::new();
    for t in tree.tokens() {
        *source.entry(t.form.to_lowercase()).or_insert(0) += 1;
    }
    let mut own_uses: BTreeMap<TokenId, Vec<usize>> = BTreeMap::new();

    for (a, atom) in out.atoms.iter().enumerate() {
        let here = format!("{id} atom {a} {:?}", atom.text);
        if atom.text.is_empty() || atom.source_sent_id != id {
            return Err(format!("{here}: empty text or wrong sentence id"));
        }
        let ids: Vec<TokenId> = atom.tokens.iter().map(|t| t.id).collect();
        if ids.iter().any(|&i| !tree.contains(i)) {
            return Err(format!("{here}: unknown token id"));
        }
        let distinct: BTreeSet<TokenId> = ids.iter().copied().collect();
        if distinct.len() != ids.len() || distinct != atom.span.ids().iter().copied().collect() {
            return Err(format!("{here}: repeated ids or span mismatch"));
        }
        let realized: Vec<String> = ids.iter().map(|&i| tree.token(i).unwrap().form.to_lowercase()).collect();
        if realized.join(" ") != atom.text {
            return Err(format!("{here}: text is not the listed tokens"));
        }
        let mut words: HashMap<&str, usize> = HashMap::new();
        for w in atom.text.split(' ') {
            *words.entry(w).or_insert(0) += 1;
        }
        if words.iter().any(|(w, &n)| source.get(*w).copied().unwrap_or(0) < n) {
            return Err(format!("{here}: word not in source multiset"));
        }

        let own: Vec<TokenId> = atom.tokens.iter().filter(|t| t.origin == Origin::Own).map(|t| t.id).collect();
        if !own.windows(2).all(|w| w[0] < w[1]) {
            return Err(format!("{here}: own tokens out of source order"));
        }
        for (origin, rule) in [
            (Origin::Subject, RuleKind::SubjectCopy),
            (Origin::Antecedent, RuleKind::RelativeClause),
            (Origin::AppositiveHead, RuleKind::Appositive),
        ] {
            let pos: Vec<usize> = atom
                .tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| t.origin == origin)
                .map(|(i, _)| i)
                .collect();
            if pos.is_empty() {
                continue;
            }
            if pos.last().unwrap() - pos[0] + 1 != pos.len() {
                return Err(format!("{here}: copied {origin:?} block is not contiguous"));
            }
            if !atom.has_rule(rule) {
                return Err(format!("{here}: copied {origin:?} tokens without a {rule:?} entry"));
            }
        }
        for i in own {
            own_uses.entry(i).or_default().push(a);
        }
    }

    for (tok, atoms) in &own_uses {
        if atoms.len() > 1 && !atoms.iter().all(|&a| out.atoms[a].has_rule(RuleKind::CoordPhrase)) {
            return Err(format!("{id}: token {tok} repeated without a cloning rule"));
        }
    }

    let mut covered: BTreeSet<TokenId> = own_uses.keys().copied().collect();
    covered.extend(out.dropped.iter().copied());
    covered.extend(out.discarded.iter().flat_map(|d| d.token_ids.iter().copied()));
    let all: BTreeSet<TokenId> = tree.tokens().iter().map(|t| t.id).collect();
    if covered != all {
        let lost: Vec<_> = all.difference(&covered).collect();
        return Err(format!("{id}: tokens lost by the splitter: {lost:?}"));
    }

    if detect_clause_sites(tree, config).is_empty() {
        let full = tree.subtree_span(tree.root(), &BTreeSet::new()).unwrap();
        let expected: Vec<String> = tree.linearize(&full, &BTreeSet::new()).into_iter().collect();
        let got: Vec<String> = out.atoms.iter().map(|a| a.text.clone()).collect();
        if got != expected {
            return Err(format!("{id}: site-free split {got:?} differs from {expected:?}"));
        }
    }
    Ok(())
}
