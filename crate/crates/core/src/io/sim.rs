use super::tables::exact;
use super::{data_lines, parse_error, split_fields};
use crate::error::Result;
use crate::simulation::Latents;

/// `id,theta_1..theta_T,gamma_1..gamma_M`, ids `1..N`.
pub fn format_latents(latents: &Latents) -> String {
    let t_count = latents.theta.first().map_or(0, Vec::len);
    let m_count = latents.gamma.first().map_or(0, Vec::len);
    let mut head = vec!["id".to_string()];
    head.extend((1..=t_count).map(|t| format!("theta_{t}")));
    head.extend((1..=m_count).map(|m| format!("gamma_{m}")));
    let mut out = head.join(",");
    out.push('\n');
    for (n, (th, ga)) in latents.theta.iter().zip(&latents.gamma).enumerate() {
        let mut row = vec![(n + 1).to_string()];
        row.extend(th.iter().chain(ga).map(|v| exact(*v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_latents(text: &str, source: &str, occasions: usize, groups: usize) -> Result<Latents> {
    let mut theta = Vec::new();
    let mut gamma = Vec::new();
    for (n, (line, content)) in data_lines(text).enumerate() {
        if n == 0 {
            continue;
        }
        let f = split_fields(content);
        if f.len() != 1 + occasions + groups {
            return Err(parse_error(source, line, 1, format!("expected {} fields", 1 + occasions + groups)));
        }
        let v = f[1..]
            .iter()
            .enumerate()
            .map(|(c, x)| {
                x.parse::<f64>()
                    .map_err(|_| parse_error(source, line, c + 2, format!("expected a number, found {x:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        theta.push(v[..occasions].to_vec());
        gamma.push(v[occasions..].to_vec());
    }
    Ok(Latents { theta, gamma })
}

/// `id,a_1_1..a_T_K` (occasion then attribute), ids `1..N`.
pub fn format_profiles(profiles: &[Vec<u8>], attributes: usize) -> String {
    let width = profiles.first().map_or(0, Vec::len);
    let mut head = vec!["id".to_string()];
    head.extend((0..width).map(|c| format!("a_{}_{}", c / attributes + 1, c % attributes + 1)));
    let mut out = head.join(",");
    out.push('\n');
    for (n, p) in profiles.iter().enumerate() {
        let mut row = vec![(n + 1).to_string()];
        row.extend(p.iter().map(|b| b.to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_profiles(text: &str, source: &str, width: usize) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for (n, (line, content)) in data_lines(text).enumerate() {
        if n == 0 {
            continue;
        }
        let f = split_fields(content);
        if f.len() != width + 1 {
            return Err(parse_error(source, line, 1, format!("expected {} fields", width + 1)));
        }
        let row = f[1..]
            .iter()
            .enumerate()
            .map(|(c, x)| match *x {
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(parse_error(source, line, c + 2, format!("expected 0 or 1, found {x:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        out.push(row);
    }
    Ok(out)
}
