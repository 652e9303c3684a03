//! Delimited-text and JSON file formats.
//!
//! Numbers written for machine consumption use 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly. Report tables use two
//! decimals.

mod config;
mod design;
mod params;
mod responses;
mod scores;
mod sim;
mod tables;

pub use config::ProjectConfig;
pub use design::{
    design_from_texts, format_anchor_map, format_q_matrix, load_design, parse_anchor_map, parse_q_matrix, save_design,
};
pub use params::{
    format_item_table, format_structural_table, load_parameters, parse_item_table,
    parse_structural_table, save_parameters,
};
pub use responses::{format_responses, load_responses, parse_responses, write_responses, DEFAULT_MISSING_TOKEN};
pub use scores::{format_mixing, format_scores, parse_mixing, parse_scores};
pub use sim::{format_latents, format_profiles, parse_latents, parse_profiles};
pub use tables::{exact, fixed2, format_long_table, format_table, parse_numeric_table};

use crate::error::{Error, Result};
use std::path::Path;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `text`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Splits a data line on commas, or on whitespace when it has no comma.
pub(crate) fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_error(source: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        column,
        message: message.into(),
    }
}
