//! Expectation step: posterior expected counts for every parameter block.

use super::likelihood::{normalize, Evaluator};
use crate::exec::{map_indexed, ordered_column_sums, Execution};
use crate::model::{ResponseMatrix, MISSING};

/// Expected trials and successes of one anchor group, per η level and γ node.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorCells {
    pub trials: [Vec<f64>; 2],
    pub correct: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub persons: usize,
    /// Marginal log-likelihood at the parameters used for the E-step.
    pub loglik: f64,
    /// `Σ_n L_n(α) / m_n`; the posterior mass of α summed over persons is
    /// `pattern_prior(α) · pattern_weight(α)`.
    pub pattern_weight: Vec<f64>,
    /// Per unique non-anchor item: `[n̄₀, n̄₁, r̄₀, r̄₁]` (zeros for anchor items).
    pub item: Vec<[f64; 4]>,
    pub anchor: Vec<AnchorCells>,
    /// Expected number of persons at each θ node.
    pub node_counts: Vec<f64>,
    /// `[t][j]`: expected persons with θ_t at node j.
    pub exposure: Vec<Vec<f64>>,
    /// `[k][t][j]`: expected masters of attribute k among them.
    pub mastery: Vec<Vec<Vec<f64>>>,
    /// Largest `|Σ_α posterior_n(α) − 1|` over persons.
    pub max_normalization_error: f64,
}

struct Layout {
    patterns: usize,
    items: usize,
    anchors: usize,
    gamma: usize,
}

impl Layout {
    fn item_offset(&self, u: usize) -> usize {
        self.patterns + 4 * u
    }
    fn anchor_offset(&self, g: usize, eta: usize, node: usize) -> usize {
        self.patterns + 4 * self.items + ((g * 2 + eta) * self.gamma + node) * 2
    }
    fn loglik(&self) -> usize {
        self.patterns + 4 * self.items + self.anchors * 2 * self.gamma * 2
    }
    fn width(&self) -> usize {
        self.loglik() + 1
    }
}

pub fn e_step(ev: &Evaluator<'_>, data: &ResponseMatrix, execution: Execution) -> ExpectedCounts {
    let design = ev.design;
    let space = ev.tables.space;
    let ol = space.occasion_len();
    let prior = &ev.priors.pattern_prior;
    let layout = Layout {
        patterns: space.len(),
        items: design.unique_item_count(),
        anchors: design.group_count(),
        gamma: ev.items.gamma.len(),
    };
    let admins = design.administrations();

    let rows: Vec<(Vec<f64>, f64)> = map_indexed(data.persons(), execution, |n| {
        let row = data.row(n);
        let pl = ev.person(row);
        let (ll, r) = normalize(&pl.log_l, prior);
        let mut out = vec![0.0; layout.width()];
        let post: Vec<f64> = r.iter().zip(prior).map(|(r, a)| r * a).collect();
        let norm_err = (post.iter().sum::<f64>() - 1.0).abs();
        out[..layout.patterns].copy_from_slice(&r);

        let mut occ_marg = vec![vec![0.0; ol]; space.occasions()];
        for p in space.iter() {
            let v = post[p.index()];
            for (t, m) in occ_marg.iter_mut().enumerate() {
                m[space.occasion_pattern(p, t)] += v;
            }
        }
        for (t, cols) in ev.tables.plain_by_occasion.iter().enumerate() {
            for &c in cols {
                let y = row[c];
                if y == MISSING {
                    continue;
                }
                let mask = admins[c].mask as usize;
                let p1: f64 = (0..ol).filter(|a| a & mask == mask).map(|a| occ_marg[t][a]).sum();
                let p0 = 1.0 - p1;
                let o = layout.item_offset(admins[c].unique);
                out[o] += p0;
                out[o + 1] += p1;
                if y == 1 {
                    out[o + 2] += p0;
                    out[o + 3] += p1;
                }
            }
        }
        for (g, integrals) in pl.group_integrals.iter().enumerate() {
            let Some(integrals) = integrals else { continue };
            let cols = &ev.tables.group_columns[g];
            let mut pe = vec![0.0; integrals.len()];
            for (alpha, &v) in post.iter().enumerate() {
                pe[ev.tables.group_eta[g][alpha] as usize] += v;
            }
            for (e, &mass) in pe.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for node in 0..layout.gamma {
                    let mut v = ev.items.gamma.weights[node];
                    for (j, &c) in cols.iter().enumerate() {
                        if row[c] != MISSING {
                            v *= ev.items.anchor_prob(g, j, e >> j & 1, node, row[c] == 1);
                        }
                    }
                    let weight = mass * v / integrals[e];
                    for (j, &c) in cols.iter().enumerate() {
                        if row[c] == MISSING {
                            continue;
                        }
                        let o = layout.anchor_offset(g, e >> j & 1, node);
                        out[o] += weight;
                        if row[c] == 1 {
                            out[o + 1] += weight;
                        }
                    }
                }
            }
        }
        out[layout.loglik()] = ll;
        (out, norm_err)
    });
    let max_normalization_error = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
    let sums = ordered_column_sums(&rows, layout.width(), execution);

    let pattern_weight = sums[..layout.patterns].to_vec();
    let item = (0..layout.items)
        .map(|u| {
            let o = layout.item_offset(u);
            [sums[o], sums[o + 1], sums[o + 2], sums[o + 3]]
        })
        .collect();
    let anchor = (0..layout.anchors)
        .map(|g| {
            let pick = |eta: usize, k: usize| -> Vec<f64> {
                (0..layout.gamma).map(|node| sums[layout.anchor_offset(g, eta, node) + k]).collect()
            };
            AnchorCells {
                trials: [pick(0, 0), pick(1, 0)],
                correct: [pick(0, 1), pick(1, 1)],
            }
        })
        .collect();

    let projected = ev.priors.project(&pattern_weight);
    let node_counts: Vec<f64> = projected.iter().zip(&ev.priors.weights).map(|(h, w)| h * w).collect();
    let margins = ev.priors.occasion_margins(&pattern_weight);
    let q = ev.priors.grid.points();
    let k_count = space.attributes();
    let exposure: Vec<Vec<f64>> = margins
        .iter()
        .map(|m| (0..q).map(|j| m[j * ol..(j + 1) * ol].iter().sum()).collect())
        .collect();
    let mastery = (0..k_count)
        .map(|k| {
            margins
                .iter()
                .map(|m| {
                    (0..q)
                        .map(|j| (0..ol).filter(|a| a >> k & 1 == 1).map(|a| m[j * ol + a]).sum())
                        .collect()
                })
                .collect()
        })
        .collect();

    ExpectedCounts {
        persons: data.persons(),
        loglik: sums[layout.loglik()],
        pattern_weight,
        item,
        anchor,
        node_counts,
        exposure,
        mastery,
        max_normalization_error,
    }
}
