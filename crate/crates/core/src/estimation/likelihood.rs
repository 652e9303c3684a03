//! Per-person pattern likelihoods with the anchor random effects integrated
//! out group by group.
//!
//! Each specific dimension γ_m loads only on the administrations of anchor
//! group m and is independent of θ and of the other γ's, so
//! `L_n(α) = ∏_{non-anchor} P(y | α) · ∏_m ∫ ∏_{i ∈ m} P(y | α, γ) dΦ(γ)`.
//! A group's integral depends on α only through the conjunctive indicators of
//! its members, i.e. through at most `2^{|m|}` distinct values.

use super::priors::PriorTables;
use super::quadrature::{GammaRule, QuadratureSpec};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ordered_sum, Execution};
use crate::model::kernels::{log_logistic, logistic};
use crate::model::{
    ItemParameters, LongitudinalDesign, ModelParameters, PatternSpace, ResponseMatrix, MISSING,
};

/// Design-only lookup tables.
#[derive(Debug, Clone)]
pub struct DesignTables {
    pub space: PatternSpace,
    /// Non-anchor administrations grouped by occasion.
    pub plain_by_occasion: Vec<Vec<usize>>,
    /// Global columns of each anchor group.
    pub group_columns: Vec<Vec<usize>>,
    /// For group m and pattern α, the member-eta tuple (bit j = η of member j).
    pub group_eta: Vec<Vec<u16>>,
}

impl DesignTables {
    pub fn new(design: &LongitudinalDesign, cap_bits: usize) -> Result<Self> {
        let space = design.pattern_space(cap_bits)?;
        let mut plain_by_occasion = vec![Vec::new(); design.occasions()];
        for (col, a) in design.administrations().iter().enumerate() {
            if a.group.is_none() {
                plain_by_occasion[a.occasion].push(col);
            }
        }
        let group_columns: Vec<Vec<usize>> = (0..design.group_count()).map(|g| design.group_columns(g)).collect();
        for (g, cols) in group_columns.iter().enumerate() {
            if cols.len() > 16 {
                return Err(Error::Design(format!(
                    "anchor group {} has {} administrations; at most 16 are supported",
                    design.anchor_groups()[g].id,
                    cols.len()
                )));
            }
        }
        let admins = design.administrations();
        let group_eta = group_columns
            .iter()
            .map(|cols| {
                space
                    .iter()
                    .map(|p| {
                        cols.iter().enumerate().fold(0u16, |acc, (j, &c)| {
                            let a = admins[c];
                            let occ = space.occasion_pattern(p, a.occasion) as u32;
                            acc | (u16::from(occ & a.mask == a.mask) << j)
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(DesignTables {
            space,
            plain_by_occasion,
            group_columns,
            group_eta,
        })
    }
}

/// Item-parameter-dependent response probabilities.
#[derive(Debug, Clone)]
pub struct ItemTables {
    /// Per administration `[ln P(y=1|η=0), ln P(y=1|η=1)]` (non-anchor only).
    log_p: Vec<[f64; 2]>,
    log_q: Vec<[f64; 2]>,
    /// Per group, per member, per η, per γ node: `P(y = 1)`.
    anchor_p: Vec<Vec<[Vec<f64>; 2]>>,
    pub gamma: GammaRule,
}

impl ItemTables {
    pub fn new(design: &LongitudinalDesign, tables: &DesignTables, items: &ItemParameters, gamma: GammaRule) -> Self {
        let admins = design.administrations();
        let mut log_p = vec![[0.0; 2]; admins.len()];
        let mut log_q = vec![[0.0; 2]; admins.len()];
        for (c, a) in admins.iter().enumerate() {
            for eta in 0..2 {
                let x = items.lambda0[a.unique] + eta as f64 * items.lambda_k[a.unique];
                log_p[c][eta] = log_logistic(x);
                log_q[c][eta] = log_logistic(-x);
            }
        }
        let anchor_p = tables
            .group_columns
            .iter()
            .enumerate()
            .map(|(g, cols)| {
                cols.iter()
                    .map(|&c| {
                        let u = admins[c].unique;
                        let row = |eta: f64| -> Vec<f64> {
                            gamma
                                .nodes
                                .iter()
                                .map(|&z| logistic(items.lambda0[u] + eta * items.lambda_k[u] + items.slopes[g] * z))
                                .collect()
                        };
                        [row(0.0), row(1.0)]
                    })
                    .collect()
            })
            .collect();
        ItemTables {
            log_p,
            log_q,
            anchor_p,
            gamma,
        }
    }

    /// `P(y_j | η_j, γ = node)` for member `j` of group `g`.
    #[inline]
    pub fn anchor_prob(&self, g: usize, member: usize, eta: usize, node: usize, y: bool) -> f64 {
        let p = self.anchor_p[g][member][eta][node];
        if y {
            p
        } else {
            1.0 - p
        }
    }
}

/// Likelihood of one person's responses under every longitudinal pattern.
#[derive(Debug, Clone)]
pub struct PersonLikelihood {
    /// `ln L_n(α)` for every pattern.
    pub log_l: Vec<f64>,
    /// Per group: `None` if no member was observed, else the integral over γ
    /// for each member-eta tuple.
    pub group_integrals: Vec<Option<Vec<f64>>>,
}

pub fn person_likelihood(
    row: &[u8],
    design: &LongitudinalDesign,
    tables: &DesignTables,
    items: &ItemTables,
) -> PersonLikelihood {
    let space = tables.space;
    let ol = space.occasion_len();
    let admins = design.administrations();
    let mut occ_ll = vec![vec![0.0; ol]; space.occasions()];
    for (t, cols) in tables.plain_by_occasion.iter().enumerate() {
        for &c in cols {
            let y = row[c];
            if y == MISSING {
                continue;
            }
            let table = if y == 1 { &items.log_p[c] } else { &items.log_q[c] };
            let mask = admins[c].mask as usize;
            for (a, slot) in occ_ll[t].iter_mut().enumerate() {
                *slot += table[usize::from(a & mask == mask)];
            }
        }
    }
    let g_nodes = items.gamma.len();
    let group_integrals: Vec<Option<Vec<f64>>> = tables
        .group_columns
        .iter()
        .enumerate()
        .map(|(g, cols)| {
            if cols.iter().all(|&c| row[c] == MISSING) {
                return None;
            }
            let tuples = 1usize << cols.len();
            Some(
                (0..tuples)
                    .map(|e| {
                        (0..g_nodes)
                            .map(|node| {
                                let mut v = items.gamma.weights[node];
                                for (j, &c) in cols.iter().enumerate() {
                                    if row[c] != MISSING {
                                        v *= items.anchor_prob(g, j, e >> j & 1, node, row[c] == 1);
                                    }
                                }
                                v
                            })
                            .sum()
                    })
                    .collect(),
            )
        })
        .collect();
    let log_groups: Vec<Option<Vec<f64>>> = group_integrals
        .iter()
        .map(|gi| gi.as_ref().map(|v| v.iter().map(|x| x.ln()).collect()))
        .collect();
    let log_l = space
        .iter()
        .map(|p| {
            let mut ll: f64 = (0..space.occasions()).map(|t| occ_ll[t][space.occasion_pattern(p, t)]).sum();
            for (g, lg) in log_groups.iter().enumerate() {
                if let Some(lg) = lg {
                    ll += lg[tables.group_eta[g][p.index()] as usize];
                }
            }
            ll
        })
        .collect();
    PersonLikelihood {
        log_l,
        group_integrals,
    }
}

/// `ln Σ_α prior(α) L(α)` and the scaled likelihood `L(α)/Σ_α prior(α) L(α)`.
pub fn normalize(log_l: &[f64], pattern_prior: &[f64]) -> (f64, Vec<f64>) {
    let max = log_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_l.iter().map(|l| (l - max).exp()).collect();
    let m: f64 = scaled.iter().zip(pattern_prior).map(|(l, a)| l * a).sum();
    (max + m.ln(), scaled.iter().map(|l| l / m).collect())
}

/// Everything needed to evaluate the model at one parameter value.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub design: &'a LongitudinalDesign,
    pub tables: DesignTables,
    pub items: ItemTables,
    pub priors: PriorTables,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        design: &'a LongitudinalDesign,
        params: &ModelParameters,
        quad: &QuadratureSpec,
        cap_bits: usize,
        contract: bool,
    ) -> Result<Self> {
        quad.validate()?;
        let tables = DesignTables::new(design, cap_bits)?;
        Self::with_tables(design, tables, params, quad, contract)
    }

    pub fn with_tables(
        design: &'a LongitudinalDesign,
        tables: DesignTables,
        params: &ModelParameters,
        quad: &QuadratureSpec,
        contract: bool,
    ) -> Result<Self> {
        let items = ItemTables::new(design, &tables, &params.items, quad.gamma_rule());
        let priors = PriorTables::new(&params.structural, tables.space, quad, contract)?;
        Ok(Evaluator {
            design,
            tables,
            items,
            priors,
        })
    }

    pub fn person(&self, row: &[u8]) -> PersonLikelihood {
        person_likelihood(row, self.design, &self.tables, &self.items)
    }

    pub fn log_likelihood(&self, data: &ResponseMatrix, execution: Execution) -> f64 {
        let mut per_person = map_indexed(data.persons(), execution, |n| {
            normalize(&self.person(data.row(n)).log_l, &self.priors.pattern_prior).0
        });
        ordered_sum(&mut per_person)
    }
}

pub(crate) fn check_data(data: &ResponseMatrix, design: &LongitudinalDesign) -> Result<()> {
    if data.items() != design.total_items() {
        return Err(Error::Data(format!(
            "response matrix has {} items, design has {}",
            data.items(),
            design.total_items()
        )));
    }
    Ok(())
}

/// `L_n(α)` for every longitudinal pattern (index order), with γ integrated
/// out. Missing cells contribute a factor of 1.
pub fn person_pattern_likelihood(
    row: &[u8],
    design: &LongitudinalDesign,
    items: &ItemParameters,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    quad.validate()?;
    if row.len() != design.total_items() {
        return Err(Error::Data(format!(
            "response row has {} cells, design has {} items",
            row.len(),
            design.total_items()
        )));
    }
    let tables = DesignTables::new(design, crate::model::pattern::DEFAULT_PATTERN_BITS_CAP)?;
    let it = ItemTables::new(design, &tables, items, quad.gamma_rule());
    Ok(person_likelihood(row, design, &tables, &it).log_l.iter().map(|l| l.exp()).collect())
}

/// Marginal log-likelihood over the θ product grid, the γ rules and all
/// attribute patterns.
pub fn marginal_loglikelihood(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    params: &ModelParameters,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_data(data, design)?;
    crate::linalg::cholesky(&params.structural.sigma)?;
    let ev = Evaluator::new(design, params, quad, crate::model::pattern::DEFAULT_PATTERN_BITS_CAP, true)?;
    Ok(ev.log_likelihood(data, Execution::default()))
}

