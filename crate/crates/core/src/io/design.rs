use super::{data_lines, parse_error, read_text, split_fields};
use crate::error::{Error, Result};
use crate::model::{AnchorGroup, ItemRef, LongitudinalDesign, QMatrix};
use std::collections::BTreeMap;
use std::path::Path;

/// Parses a Q-matrix: one item per line, comma- or whitespace-separated 0/1
/// entries, `#` comments.
pub fn parse_q_matrix(text: &str, source: &str) -> Result<QMatrix> {
    let mut rows = Vec::new();
    for (line, content) in data_lines(text) {
        let row = split_fields(content)
            .iter()
            .enumerate()
            .map(|(c, f)| match *f {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(parse_error(source, line, c + 1, format!("expected 0 or 1, found {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
    }
    QMatrix::new(rows).map_err(|e| match e {
        Error::Design(m) => Error::Design(format!("{source}: {m}")),
        other => other,
    })
}

/// Parses an anchor map: rows of `group,occasion,item` (1-based). An optional
/// header line starting with a non-digit is skipped.
pub fn parse_anchor_map(text: &str, source: &str) -> Result<Vec<AnchorGroup>> {
    let mut groups: BTreeMap<usize, Vec<ItemRef>> = BTreeMap::new();
    for (n, (line, content)) in data_lines(text).enumerate() {
        if n == 0 && !content.starts_with(|c: char| c.is_ascii_digit()) {
            continue;
        }
        let fields = split_fields(content);
        if fields.len() != 3 {
            return Err(parse_error(source, line, 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let mut v = [0usize; 3];
        for (c, f) in fields.iter().enumerate() {
            v[c] = match f.parse::<usize>() {
                Ok(x) if x >= 1 => x,
                _ => return Err(parse_error(source, line, c + 1, format!("expected a positive integer, found {f:?}"))),
            };
        }
        groups.entry(v[0]).or_default().push(ItemRef {
            occasion: v[1] - 1,
            item: v[2] - 1,
        });
    }
    Ok(groups.into_iter().map(|(id, members)| AnchorGroup { id, members }).collect())
}

/// Builds a design from in-memory Q texts and an optional anchor text.
pub fn design_from_texts(q_texts: &[(&str, &str)], anchors: Option<(&str, &str)>) -> Result<LongitudinalDesign> {
    let q = q_texts
        .iter()
        .map(|(text, source)| parse_q_matrix(text, source))
        .collect::<Result<Vec<_>>>()?;
    let groups = match anchors {
        Some((text, source)) => parse_anchor_map(text, source)?,
        None => Vec::new(),
    };
    LongitudinalDesign::new(q, groups)
}

pub fn load_design<P: AsRef<Path>>(q_files: &[P], anchor_file: Option<&Path>) -> Result<LongitudinalDesign> {
    let texts = q_files
        .iter()
        .map(|p| Ok((read_text(p.as_ref())?, p.as_ref().display().to_string())))
        .collect::<Result<Vec<_>>>()?;
    let anchor = match anchor_file {
        Some(p) => Some((read_text(p)?, p.display().to_string())),
        None => None,
    };
    let refs: Vec<(&str, &str)> = texts.iter().map(|(t, s)| (t.as_str(), s.as_str())).collect();
    design_from_texts(&refs, anchor.as_ref().map(|(t, s)| (t.as_str(), s.as_str())))
}

pub fn format_q_matrix(q: &QMatrix) -> String {
    let mut out = String::new();
    for row in q.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Anchor map in the layout read by [`parse_anchor_map`].
pub fn format_anchor_map(design: &LongitudinalDesign) -> String {
    let mut out = String::from("group,occasion,item\n");
    for g in design.anchor_groups() {
        for m in &g.members {
            out.push_str(&format!("{},{},{}\n", g.id, m.occasion + 1, m.item + 1));
        }
    }
    out
}

/// Writes `q_t1.csv…` and, when the design has anchors, `anchors.csv`.
/// Returns the written Q paths and the anchor path.
pub fn save_design(dir: &Path, design: &LongitudinalDesign) -> Result<(Vec<std::path::PathBuf>, Option<std::path::PathBuf>)> {
    let mut q_paths = Vec::new();
    for (t, q) in design.q_matrices().iter().enumerate() {
        let p = dir.join(format!("q_t{}.csv", t + 1));
        super::write_text(&p, &format_q_matrix(q))?;
        q_paths.push(p);
    }
    let anchors = if design.group_count() > 0 {
        let p = dir.join("anchors.csv");
        super::write_text(&p, &format_anchor_map(design))?;
        Some(p)
    } else {
        None
    };
    Ok((q_paths, anchors))
}
