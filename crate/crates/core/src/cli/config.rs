//! Flat `key = value` configuration files.

use crate::splitter::SplitConfig;

use super::PipelineError;

fn bad(line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        line,
        message: message.into(),
    }
}

/// Parses a [`SplitConfig`]. Blank lines and `#` comments are ignored; keys
/// not listed are left at their defaults; unknown keys are rejected.
pub fn parse_split_config(text: &str) -> Result<SplitConfig, PipelineError> {
    let mut config = SplitConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line_no, format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let flag = || match value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad(line_no, format!("{key}: expected true or false, got {value:?}"))),
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| bad(line_no, format!("{key}: expected a non-negative integer, got {value:?}")))
        };
        match key {
            "enable_appositive_rule" => config.enable_appositive_rule = flag()?,
            "keep_subordinator" => config.keep_subordinator = flag()?,
            "max_atoms_per_sentence" => {
                config.max_atoms_per_sentence = count()?;
                if config.max_atoms_per_sentence == 0 {
                    return Err(bad(line_no, "max_atoms_per_sentence must be at least 1"));
                }
            }
            "min_atom_tokens" => config.min_atom_tokens = count()?,
            _ => return Err(bad(line_no, format!("unknown key {key:?}"))),
        }
    }
    Ok(config)
}

/// Renders a config in the format [`parse_split_config`] reads.
pub fn render_split_config(config: &SplitConfig) -> String {
    format!(
        "enable_appositive_rule = {}\nkeep_subordinator = {}\nmax_atoms_per_sentence = {}\nmin_atom_tokens = {}\n",
        config.enable_appositive_rule,
        config.keep_subordinator,
        config.max_atoms_per_sentence,
        config.min_atom_tokens
    )
}
