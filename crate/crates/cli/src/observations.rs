use std::path::Path;

use crate::error::{CliError, Result};

/// Reads one nonnegative integer per line. Trailing whitespace is allowed;
/// empty lines are not. With `binary` set every value must be 0 or 1.
pub fn parse_observations(path: &Path, binary: bool) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_observation_text(&text, binary).map_err(|(line, message)| CliError::Observation {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses file contents; errors carry the 1-based line number.
pub fn parse_observation_text(text: &str, binary: bool) -> Result<Vec<u64>, (usize, String)> {
    text.lines()
        .enumerate()
        .map(|(i, raw)| {
            let line = i + 1;
            let s = raw.trim_end();
            if s.is_empty() {
                return Err((line, "empty line".to_string()));
            }
            let v: u64 = s
                .parse()
                .map_err(|_| (line, format!("{s:?} is not a nonnegative integer")))?;
            if binary && v > 1 {
                return Err((line, format!("{v} is not a binary observation")));
            }
            Ok(v)
        })
        .collect()
}
