use super::tables::exact;
use super::{data_lines, parse_error, read_text, split_fields, write_json, write_text};
use crate::error::{Error, Result};
use crate::model::kernels::guess_slip_from_loglinear;
use crate::model::{ItemParameters, LongitudinalDesign, ModelParameters, StructuralParameters};
use std::path::Path;

const ITEM_HEADER: &str = "item,administrations,lambda0,lambdaK,guess,slip,group,slope";
const STRUCTURAL_HEADER: &str = "parameter,i,j,value";

/// One row per unique item with log-linear and guess/slip forms. Anchor
/// items carry their group id and specific-dimension slope.
pub fn format_item_table(design: &LongitudinalDesign, items: &ItemParameters) -> String {
    let mut out = format!("{ITEM_HEADER}\n");
    for u in 0..design.unique_item_count() {
        let admins: Vec<String> = design.unique_administrations(u).iter().map(|a| (a + 1).to_string()).collect();
        let (g, s) = guess_slip_from_loglinear(items.lambda0[u], items.lambda_k[u]);
        let (group, slope) = match design.unique_group(u) {
            Some(gi) => (design.anchor_groups()[gi].id.to_string(), exact(items.slopes[gi])),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            u + 1,
            admins.join(";"),
            exact(items.lambda0[u]),
            exact(items.lambda_k[u]),
            exact(g),
            exact(s),
            group,
            slope
        ));
    }
    out
}

pub fn parse_item_table(text: &str, source: &str, design: &LongitudinalDesign) -> Result<ItemParameters> {
    let u_count = design.unique_item_count();
    let mut items = ItemParameters {
        lambda0: vec![f64::NAN; u_count],
        lambda_k: vec![f64::NAN; u_count],
        slopes: vec![0.0; design.group_count()],
    };
    for (n, (line, content)) in data_lines(text).enumerate() {
        if n == 0 {
            if content != ITEM_HEADER {
                return Err(parse_error(source, line, 1, format!("expected header {ITEM_HEADER:?}")));
            }
            continue;
        }
        let f = split_fields(content);
        if f.len() != 8 {
            return Err(parse_error(source, line, 1, format!("expected 8 fields, found {}", f.len())));
        }
        let u = match f[0].parse::<usize>() {
            Ok(v) if (1..=u_count).contains(&v) => v - 1,
            _ => return Err(parse_error(source, line, 1, format!("invalid item index {:?}", f[0]))),
        };
        items.lambda0[u] = number(f[2], source, line, 3)?;
        items.lambda_k[u] = number(f[3], source, line, 4)?;
        if let Some(g) = design.unique_group(u) {
            items.slopes[g] = number(f[7], source, line, 8)?;
        }
    }
    if let Some(u) = items.lambda0.iter().position(|v| v.is_nan()) {
        return Err(Error::Data(format!("{source}: item {} is missing", u + 1)));
    }
    Ok(items)
}

pub fn format_structural_table(s: &StructuralParameters) -> String {
    let mut out = format!("{STRUCTURAL_HEADER}\n");
    for (k, v) in s.delta.iter().enumerate() {
        out.push_str(&format!("delta,{},,{}\n", k + 1, exact(*v)));
    }
    for (k, v) in s.beta.iter().enumerate() {
        out.push_str(&format!("beta,{},,{}\n", k + 1, exact(*v)));
    }
    for (t, v) in s.mu.iter().enumerate() {
        out.push_str(&format!("mu,{},,{}\n", t + 1, exact(*v)));
    }
    for (a, row) in s.sigma.iter().enumerate() {
        for (b, v) in row.iter().enumerate().take(a + 1) {
            out.push_str(&format!("sigma,{},{},{}\n", a + 1, b + 1, exact(*v)));
        }
    }
    out
}

pub fn parse_structural_table(text: &str, source: &str, attributes: usize, occasions: usize) -> Result<StructuralParameters> {
    let nan = f64::NAN;
    let mut s = StructuralParameters {
        delta: vec![nan; attributes],
        beta: vec![nan; attributes],
        mu: vec![nan; occasions],
        sigma: vec![vec![nan; occasions]; occasions],
    };
    for (n, (line, content)) in data_lines(text).enumerate() {
        if n == 0 {
            if content != STRUCTURAL_HEADER {
                return Err(parse_error(source, line, 1, format!("expected header {STRUCTURAL_HEADER:?}")));
            }
            continue;
        }
        let f = split_fields(content);
        if f.len() != 4 {
            return Err(parse_error(source, line, 1, format!("expected 4 fields, found {}", f.len())));
        }
        let index = |c: usize, max: usize| match f[c].parse::<usize>() {
            Ok(v) if (1..=max).contains(&v) => Ok(v - 1),
            _ => Err(parse_error(source, line, c + 1, format!("invalid index {:?}", f[c]))),
        };
        let value = number(f[3], source, line, 4)?;
        match f[0] {
            "delta" => s.delta[index(1, attributes)?] = value,
            "beta" => s.beta[index(1, attributes)?] = value,
            "mu" => s.mu[index(1, occasions)?] = value,
            "sigma" => {
                let (a, b) = (index(1, occasions)?, index(2, occasions)?);
                s.sigma[a][b] = value;
                s.sigma[b][a] = value;
            }
            other => return Err(parse_error(source, line, 1, format!("unknown parameter {other:?}"))),
        }
    }
    let complete = s.delta.iter().chain(&s.beta).chain(&s.mu).chain(s.sigma.iter().flatten()).all(|v| !v.is_nan());
    if !complete {
        return Err(Error::Data(format!("{source}: structural table is incomplete")));
    }
    Ok(s)
}

/// Writes `items.csv`, `structural.csv` and the JSON mirror `parameters.json`.
pub fn save_parameters(dir: &Path, design: &LongitudinalDesign, params: &ModelParameters) -> Result<()> {
    write_text(&dir.join("items.csv"), &format_item_table(design, &params.items))?;
    write_text(&dir.join("structural.csv"), &format_structural_table(&params.structural))?;
    write_json(&dir.join("parameters.json"), params)
}

/// Reads the CSV pair written by [`save_parameters`] and validates it.
pub fn load_parameters(dir: &Path, design: &LongitudinalDesign) -> Result<ModelParameters> {
    let ip = dir.join("items.csv");
    let sp = dir.join("structural.csv");
    let items = parse_item_table(&read_text(&ip)?, &ip.display().to_string(), design)?;
    let structural = parse_structural_table(
        &read_text(&sp)?,
        &sp.display().to_string(),
        design.attributes(),
        design.occasions(),
    )?;
    let p = ModelParameters { items, structural };
    p.validate(design)?;
    Ok(p)
}

fn number(field: &str, source: &str, line: usize, column: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| parse_error(source, line, column, format!("expected a number, found {field:?}")))
}
