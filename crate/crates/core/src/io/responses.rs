use super::{parse_error, read_text, split_fields, write_text};
use crate::error::{Error, Result};
use crate::model::responses::MISSING;
use crate::model::{LongitudinalDesign, ResponseMatrix};
use std::path::Path;

pub const DEFAULT_MISSING_TOKEN: &str = "NA";

/// Parses a response file: header `id,1,…,J` with recoded item labels, then
/// one person per line. Persons with fewer than `min_observed` observed
/// responses on any occasion are rejected together in one error.
pub fn parse_responses(
    text: &str,
    source: &str,
    design: &LongitudinalDesign,
    missing_token: &str,
    min_observed: usize,
) -> Result<ResponseMatrix> {
    let width = design.total_items();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_error(source, 1, 1, "empty response file"))?;
    let head = split_fields(header);
    if head.len() != width + 1 {
        return Err(parse_error(
            source,
            hline,
            1,
            format!("header has {} item columns, design has {}", head.len().saturating_sub(1), width),
        ));
    }
    for (j, label) in head.iter().enumerate().skip(1) {
        if label.parse::<usize>() != Ok(j) {
            return Err(parse_error(source, hline, j + 1, format!("expected item label {j}, found {label:?}")));
        }
    }
    let mut ids = Vec::new();
    let mut cells = Vec::new();
    for (line, content) in lines {
        let fields = split_fields(content);
        if fields.len() != width + 1 {
            return Err(parse_error(
                source,
                line,
                fields.len().min(width + 1),
                format!("expected {} fields, found {}", width + 1, fields.len()),
            ));
        }
        ids.push(fields[0].to_string());
        for (c, f) in fields.iter().enumerate().skip(1) {
            cells.push(match *f {
                "0" => 0,
                "1" => 1,
                m if m == missing_token => MISSING,
                other => {
                    return Err(parse_error(
                        source,
                        line,
                        c + 1,
                        format!("expected 0, 1 or {missing_token:?}, found {other:?}"),
                    ))
                }
            });
        }
    }
    let data = ResponseMatrix::new(ids, width, cells)?;
    if min_observed > 0 {
        let mut rejected = Vec::new();
        for n in 0..data.persons() {
            let row = data.row(n);
            let short = (0..design.occasions()).any(|t| {
                let start = design.occasion_offset(t);
                let end = start + design.q_matrices()[t].items();
                row[start..end].iter().filter(|&&c| c != MISSING).count() < min_observed
            });
            if short {
                rejected.push(data.ids()[n].clone());
            }
        }
        if !rejected.is_empty() {
            return Err(Error::Data(format!(
                "{source}: persons with fewer than {min_observed} observed responses on some occasion: {}",
                rejected.join(", ")
            )));
        }
    }
    Ok(data)
}

pub fn load_responses(
    path: &Path,
    design: &LongitudinalDesign,
    missing_token: &str,
    min_observed: usize,
) -> Result<ResponseMatrix> {
    let text = read_text(path)?;
    parse_responses(&text, &path.display().to_string(), design, missing_token, min_observed)
}

pub fn format_responses(data: &ResponseMatrix, missing_token: &str) -> String {
    let mut out = String::from("id");
    for j in 1..=data.items() {
        out.push(',');
        out.push_str(&j.to_string());
    }
    out.push('\n');
    for n in 0..data.persons() {
        out.push_str(&data.ids()[n]);
        for &c in data.row(n) {
            out.push(',');
            match c {
                MISSING => out.push_str(missing_token),
                v => out.push(char::from(b'0' + v)),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_responses(path: &Path, data: &ResponseMatrix, missing_token: &str) -> Result<()> {
    write_text(path, &format_responses(data, missing_token))
}
