//! Posterior scoring of persons under fitted parameters.

use crate::error::{Error, Result};
use crate::estimation::likelihood::{check_data, normalize, Evaluator};
use crate::estimation::QuadratureSpec;
use crate::exec::{map_indexed, ordered_column_sums, Execution};
use crate::model::pattern::{occasion_label, DEFAULT_PATTERN_BITS_CAP};
use crate::model::{AttributePattern, LongitudinalDesign, ModelParameters, ResponseMatrix};
use serde::{Deserialize, Serialize};

/// Default posterior threshold for reporting an attribute as mastered.
pub const MASTERY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringOptions {
    pub pattern_cap_bits: usize,
    pub contract_priors: bool,
    pub execution: Execution,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            pattern_cap_bits: DEFAULT_PATTERN_BITS_CAP,
            contract_priors: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonScore {
    pub id: String,
    pub eap_theta: Vec<f64>,
    pub sd_theta: Vec<f64>,
    /// `P(α_kt = 1 | y)` at column `t·K + k`.
    pub attribute_posterior: Vec<f64>,
    /// Posterior mode over longitudinal patterns; ties go to the lowest index.
    pub map_pattern: u32,
    pub map_posterior: f64,
    pub log_marginal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub occasions: usize,
    pub attributes: usize,
    pub persons: Vec<PersonScore>,
    /// Per occasion, the mean posterior probability of each of the `2^K`
    /// occasion patterns.
    pub mixing: Vec<Vec<f64>>,
    /// Largest `|Σ_α P(α | y_n) − 1|` over persons.
    pub max_normalization_error: f64,
}

impl PosteriorSummary {
    /// MAP attribute indicators of one person, column `t·K + k`.
    pub fn map_bits(&self, person: usize) -> Vec<u8> {
        let k = self.attributes;
        let p = self.persons[person].map_pattern;
        (0..self.occasions * k).map(|b| ((p >> b) & 1) as u8).collect()
    }

    /// Thresholded attribute posteriors of one person.
    pub fn thresholded_bits(&self, person: usize, threshold: f64) -> Vec<u8> {
        self.persons[person]
            .attribute_posterior
            .iter()
            .map(|&p| u8::from(p >= threshold))
            .collect()
    }
}

/// Full per-person posterior over longitudinal patterns, `P(α | y_n)`.
pub fn pattern_posterior(ev: &Evaluator<'_>, row: &[u8]) -> (f64, Vec<f64>) {
    let (log_m, r) = normalize(&ev.person(row).log_l, &ev.priors.pattern_prior);
    let post = r.iter().zip(&ev.priors.pattern_prior).map(|(a, b)| a * b).collect();
    (log_m, post)
}

pub fn score_persons(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    params: &ModelParameters,
    quad: &QuadratureSpec,
    options: &ScoringOptions,
) -> Result<PosteriorSummary> {
    check_data(data, design)?;
    params.validate(design)?;
    let ev = Evaluator::new(design, params, quad, options.pattern_cap_bits, options.contract_priors)?;
    let space = ev.tables.space;
    let t_count = space.occasions();
    let k_count = space.attributes();
    let ol = space.occasion_len();
    let grid = &ev.priors.grid;
    let w = &ev.priors.weights;
    let mut first = Vec::with_capacity(t_count);
    let mut second = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let m1: Vec<f64> = (0..grid.len())
            .map(|j| w[j] * grid.nodes_1d[grid.coordinate_index(j, t)])
            .collect();
        let m2: Vec<f64> = (0..grid.len())
            .map(|j| w[j] * grid.nodes_1d[grid.coordinate_index(j, t)].powi(2))
            .collect();
        first.push(ev.priors.expand(&m1));
        second.push(ev.priors.expand(&m2));
    }
    let rows = map_indexed(data.persons(), options.execution, |n| {
        let (log_m, r) = normalize(&ev.person(data.row(n)).log_l, &ev.priors.pattern_prior);
        let mut eap = vec![0.0; t_count];
        let mut sd = vec![0.0; t_count];
        for t in 0..t_count {
            let e: f64 = r.iter().zip(&first[t]).map(|(a, b)| a * b).sum();
            let s: f64 = r.iter().zip(&second[t]).map(|(a, b)| a * b).sum();
            eap[t] = e;
            sd[t] = (s - e * e).max(0.0).sqrt();
        }
        let mut attr = vec![0.0; t_count * k_count];
        let mut occ = vec![0.0; t_count * ol];
        let mut total = 0.0f64;
        let mut best = (0usize, f64::NEG_INFINITY);
        for p in space.iter() {
            let post = r[p.index()] * ev.priors.pattern_prior[p.index()];
            total += post;
            if post > best.1 {
                best = (p.index(), post);
            }
            for t in 0..t_count {
                let a = space.occasion_pattern(p, t);
                occ[t * ol + a] += post;
                for k in 0..k_count {
                    if a >> k & 1 == 1 {
                        attr[t * k_count + k] += post;
                    }
                }
            }
        }
        let score = PersonScore {
            id: data.ids()[n].clone(),
            eap_theta: eap,
            sd_theta: sd,
            attribute_posterior: attr,
            map_pattern: best.0 as u32,
            map_posterior: best.1,
            log_marginal: log_m,
        };
        (score, occ, (total - 1.0).abs())
    });
    let occ_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    let sums = ordered_column_sums(&occ_rows, t_count * ol, options.execution);
    let n = data.persons().max(1) as f64;
    let mixing = (0..t_count)
        .map(|t| sums[t * ol..(t + 1) * ol].iter().map(|s| s / n).collect())
        .collect();
    let max_normalization_error = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(PosteriorSummary {
        occasions: t_count,
        attributes: k_count,
        persons: rows.into_iter().map(|r| r.0).collect(),
        mixing,
        max_normalization_error,
    })
}

/// Individual growth between successive occasions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub id: String,
    pub eap_theta: Vec<f64>,
    /// `θ̂_{t+1} − θ̂_t`.
    pub increments: Vec<f64>,
    /// Per attribute, MAP statuses across occasions, e.g. `0→1→1`.
    pub map_transitions: Vec<String>,
    /// Per attribute, thresholded posterior statuses across occasions.
    pub threshold_transitions: Vec<String>,
    /// MAP occasion patterns, e.g. `["010", "011"]`.
    pub map_occasion_patterns: Vec<String>,
}

pub fn individual_growth(summary: &PosteriorSummary, person: usize, threshold: f64) -> Result<GrowthRecord> {
    if summary.occasions < 2 {
        return Err(Error::Argument("growth needs at least two occasions".into()));
    }
    let p = summary
        .persons
        .get(person)
        .ok_or_else(|| Error::Index(format!("person {} of {}", person + 1, summary.persons.len())))?;
    let t_count = summary.occasions;
    let k_count = summary.attributes;
    let increments = p.eap_theta.windows(2).map(|w| w[1] - w[0]).collect();
    let map_bits = summary.map_bits(person);
    let thr_bits = summary.thresholded_bits(person, threshold);
    let chain = |bits: &[u8], k: usize| {
        (0..t_count)
            .map(|t| bits[t * k_count + k].to_string())
            .collect::<Vec<_>>()
            .join("→")
    };
    let kmask = (1u32 << k_count) - 1;
    Ok(GrowthRecord {
        id: p.id.clone(),
        eap_theta: p.eap_theta.clone(),
        increments,
        map_transitions: (0..k_count).map(|k| chain(&map_bits, k)).collect(),
        threshold_transitions: (0..k_count).map(|k| chain(&thr_bits, k)).collect(),
        map_occasion_patterns: (0..t_count)
            .map(|t| occasion_label(((p.map_pattern >> (t * k_count)) & kmask) as usize, k_count))
            .collect(),
    })
}

/// Index of the pattern with the largest value; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> AttributePattern {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    AttributePattern(best as u32)
}
