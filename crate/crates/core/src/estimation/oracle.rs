//! Exhaustive-enumeration likelihood used to check the factorized path.
//!
//! Sums over the full joint grid of θ nodes, every combination of γ nodes
//! across all anchor groups, and every longitudinal pattern, evaluating each
//! response probability directly from the item kernel. Nothing is factored.

use super::quadrature::{QuadratureSpec, ThetaGrid};
use crate::error::{Error, Result};
use crate::model::kernels::{attribute_mastery_probability, response_probability};
use crate::model::{LongitudinalDesign, ModelParameters, PatternSpace, ResponseMatrix, MISSING};

/// Joint cells per person above which enumeration is refused.
pub const MAX_JOINT_CELLS: u128 = 50_000_000;

pub fn brute_force_loglikelihood(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    params: &ModelParameters,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if data.items() != design.total_items() {
        return Err(Error::Data("response width does not match design".into()));
    }
    let space = PatternSpace::with_cap(design.occasions(), design.attributes(), 12)
        .map_err(|_| Error::TooLarge(format!("T·K = {} exceeds 12", design.occasions() * design.attributes())))?;
    let grid = ThetaGrid::new(quad, design.occasions());
    let gamma = quad.gamma_rule();
    let m = design.group_count();
    let gamma_combos = (gamma.len() as u128).pow(m as u32);
    let cells = grid.len() as u128 * gamma_combos * space.len() as u128;
    if cells > MAX_JOINT_CELLS {
        return Err(Error::TooLarge(format!("{cells} joint cells per person")));
    }
    let theta_w = grid.weights(&params.structural.mu, &params.structural.sigma)?;
    let s = &params.structural;
    let it = &params.items;
    let admins = design.administrations();
    let t_count = design.occasions();
    let k_count = design.attributes();

    let mut total = 0.0;
    for n in 0..data.persons() {
        let row = data.row(n);
        let mut person = 0.0;
        for node in 0..grid.len() {
            let theta = grid.coordinates(node);
            for combo in 0..gamma_combos as usize {
                let mut gw = 1.0;
                let mut gz = vec![0.0; m];
                let mut rest = combo;
                for z in gz.iter_mut() {
                    let idx = rest % gamma.len();
                    rest /= gamma.len();
                    gw *= gamma.weights[idx];
                    *z = gamma.nodes[idx];
                }
                for alpha in space.iter() {
                    let mut prior = 1.0;
                    for (t, &th) in theta.iter().enumerate().take(t_count) {
                        for k in 0..k_count {
                            let p = attribute_mastery_probability(s.delta[k], s.beta[k], th);
                            prior *= if space.has_attribute(alpha, t, k) { p } else { 1.0 - p };
                        }
                    }
                    let mut like = 1.0;
                    for (c, a) in admins.iter().enumerate() {
                        if row[c] == MISSING {
                            continue;
                        }
                        let eta = (0..k_count)
                            .all(|k| a.mask >> k & 1 == 0 || space.has_attribute(alpha, a.occasion, k));
                        let (slope, z) = match a.group {
                            Some(g) => (it.slopes[g], gz[g]),
                            None => (0.0, 0.0),
                        };
                        let p = response_probability(it.lambda0[a.unique], it.lambda_k[a.unique], eta, slope, z);
                        like *= if row[c] == 1 { p } else { 1.0 - p };
                    }
                    person += theta_w[node] * gw * prior * like;
                }
            }
        }
        total += person.ln();
    }
    Ok(total)
}
