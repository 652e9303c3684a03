use super::tables::exact;
use super::{data_lines, parse_error, split_fields};
use crate::error::{Error, Result};
use crate::model::pattern::occasion_label;
use crate::scoring::{PersonScore, PosteriorSummary};

fn score_header(t_count: usize, k_count: usize) -> Vec<String> {
    let mut h = vec!["id".to_string()];
    h.extend((1..=t_count).map(|t| format!("eap_{t}")));
    h.extend((1..=t_count).map(|t| format!("sd_{t}")));
    for t in 1..=t_count {
        h.extend((1..=k_count).map(|k| format!("p_{t}_{k}")));
    }
    h.extend(["map_index", "map_pattern", "map_posterior", "log_marginal"].map(String::from));
    h
}

/// One row per person: EAP and SD of θ, attribute posteriors, MAP pattern
/// (index and label) and the log marginal likelihood.
pub fn format_scores(summary: &PosteriorSummary) -> String {
    let (t_count, k_count) = (summary.occasions, summary.attributes);
    let mut out = score_header(t_count, k_count).join(",");
    out.push('\n');
    let kmask = (1u32 << k_count) - 1;
    for p in &summary.persons {
        let mut row = vec![p.id.clone()];
        row.extend(p.eap_theta.iter().map(|v| exact(*v)));
        row.extend(p.sd_theta.iter().map(|v| exact(*v)));
        row.extend(p.attribute_posterior.iter().map(|v| exact(*v)));
        row.push(p.map_pattern.to_string());
        let label: Vec<String> = (0..t_count)
            .map(|t| occasion_label(((p.map_pattern >> (t * k_count)) & kmask) as usize, k_count))
            .collect();
        row.push(label.join("-"));
        row.push(exact(p.map_posterior));
        row.push(exact(p.log_marginal));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads the person rows written by [`format_scores`]; mixing proportions
/// and the normalization error are not part of the file.
pub fn parse_scores(text: &str, source: &str, occasions: usize, attributes: usize) -> Result<Vec<PersonScore>> {
    let header = score_header(occasions, attributes);
    let tk = occasions * attributes;
    let mut persons = Vec::new();
    for (n, (line, content)) in data_lines(text).enumerate() {
        let f = split_fields(content);
        if n == 0 {
            if f != header {
                return Err(parse_error(source, line, 1, "unexpected score header"));
            }
            continue;
        }
        if f.len() != header.len() {
            return Err(parse_error(source, line, 1, format!("expected {} fields, found {}", header.len(), f.len())));
        }
        let num = |c: usize| {
            f[c].parse::<f64>()
                .map_err(|_| parse_error(source, line, c + 1, format!("expected a number, found {:?}", f[c])))
        };
        let range = |start: usize, len: usize| (start..start + len).map(num).collect::<Result<Vec<f64>>>();
        let base = 1 + 2 * occasions + tk;
        persons.push(PersonScore {
            id: f[0].to_string(),
            eap_theta: range(1, occasions)?,
            sd_theta: range(1 + occasions, occasions)?,
            attribute_posterior: range(1 + 2 * occasions, tk)?,
            map_pattern: f[base]
                .parse()
                .map_err(|_| parse_error(source, line, base + 1, "expected a pattern index"))?,
            map_posterior: num(base + 2)?,
            log_marginal: num(base + 3)?,
        });
    }
    Ok(persons)
}

/// Long table `occasion,pattern,proportion`.
pub fn format_mixing(mixing: &[Vec<f64>], attributes: usize) -> String {
    let mut out = String::from("occasion,pattern,proportion\n");
    for (t, row) in mixing.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", t + 1, occasion_label(a, attributes), exact(*v)));
        }
    }
    out
}

pub fn parse_mixing(text: &str, source: &str, occasions: usize, attributes: usize) -> Result<Vec<Vec<f64>>> {
    let ol = 1usize << attributes;
    let mut out = vec![vec![f64::NAN; ol]; occasions];
    for (n, (line, content)) in data_lines(text).enumerate() {
        if n == 0 {
            continue;
        }
        let f = split_fields(content);
        if f.len() != 3 {
            return Err(parse_error(source, line, 1, "expected 3 fields"));
        }
        let t = match f[0].parse::<usize>() {
            Ok(t) if (1..=occasions).contains(&t) => t - 1,
            _ => return Err(parse_error(source, line, 1, format!("invalid occasion {:?}", f[0]))),
        };
        if f[1].len() != attributes || !f[1].chars().all(|c| c == '0' || c == '1') {
            return Err(parse_error(source, line, 2, format!("invalid pattern {:?}", f[1])));
        }
        let a = f[1].chars().enumerate().fold(0usize, |acc, (k, c)| acc | (usize::from(c == '1') << k));
        out[t][a] = f[2]
            .parse()
            .map_err(|_| parse_error(source, line, 3, format!("expected a number, found {:?}", f[2])))?;
    }
    if out.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Data(format!("{source}: mixing table is incomplete")));
    }
    Ok(out)
}
