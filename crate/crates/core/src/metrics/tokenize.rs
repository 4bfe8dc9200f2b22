fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercased runs of alphanumeric characters. Apostrophes survive only
/// between characters of a run (`don't`); all other punctuation splits.
pub fn metric_tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c)))
        .map(|run| run.trim_matches(is_apostrophe))
        .filter(|run| !run.is_empty())
        .map(str::to_string)
        .collect()
}
