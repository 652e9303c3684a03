use super::{data_lines, parse_error, split_fields};
use crate::error::Result;

/// Lossless 17-significant-digit rendering.
pub fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Two-decimal report rendering.
pub fn fixed2(v: f64) -> String {
    format!("{v:.2}")
}

/// Comma-separated table with a header row.
pub fn format_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Tidy long-format table: key columns followed by one `value` column.
pub fn format_long_table(keys: &[&str], rows: &[(Vec<String>, f64)]) -> String {
    let mut header: Vec<&str> = keys.to_vec();
    header.push("value");
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(k, v)| {
            let mut r = k.clone();
            r.push(exact(*v));
            r
        })
        .collect();
    format_table(&header, &body)
}

/// Reads a table whose header is arbitrary text and whose body is numeric.
pub fn parse_numeric_table(text: &str, source: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (n, (line, content)) in data_lines(text).enumerate() {
        let fields = split_fields(content);
        if n == 0 {
            header = fields.iter().map(|s| s.to_string()).collect();
            continue;
        }
        if fields.len() != header.len() {
            return Err(parse_error(source, line, 1, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .map_err(|_| parse_error(source, line, c + 1, format!("expected a number, found {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
