use crate::error::{Error, Result};
use crate::model::{LongitudinalDesign, ModelParameters};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Item-parameter classes reported separately.
pub const ITEM_CLASSES: [&str; 5] = [
    "intercept",
    "interaction",
    "anchor_intercept",
    "anchor_interaction",
    "anchor_slope",
];

/// Running error moments; bias and RMSE are derived on demand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl ErrorStats {
    pub fn push(&mut self, estimate: f64, truth: f64) {
        let e = estimate - truth;
        self.count += 1;
        self.sum += e;
        self.sum_sq += e * e;
    }

    pub fn merge(&mut self, other: &ErrorStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn bias(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn rmse(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.sum_sq / self.count as f64).sqrt()
        }
    }
}

/// `(bias, RMSE)` of paired estimates and true values.
pub fn bias_rmse(estimates: &[f64], truths: &[f64]) -> Result<(f64, f64)> {
    if estimates.len() != truths.len() {
        return Err(Error::Argument(format!("{} estimates for {} true values", estimates.len(), truths.len())));
    }
    let mut s = ErrorStats::default();
    for (e, t) in estimates.iter().zip(truths) {
        s.push(*e, *t);
    }
    Ok((s.bias(), s.rmse()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRates {
    /// `[t][k]` attribute-level agreement rate.
    pub accr: Vec<Vec<f64>>,
    /// Per occasion, rate of agreement on all K attributes.
    pub pccr: Vec<f64>,
    /// Rate of agreement on all T·K attributes.
    pub longitudinal_pccr: f64,
}

/// Agreement rates between true and estimated `N × (T·K)` indicators.
pub fn classification_rates(
    truth: &[Vec<u8>],
    estimate: &[Vec<u8>],
    occasions: usize,
    attributes: usize,
) -> Result<ClassificationRates> {
    let width = occasions * attributes;
    if truth.len() != estimate.len() || truth.is_empty() {
        return Err(Error::Argument(format!(
            "{} true and {} estimated profiles",
            truth.len(),
            estimate.len()
        )));
    }
    if let Some(n) = truth.iter().zip(estimate).position(|(a, b)| a.len() != width || b.len() != width) {
        return Err(Error::Argument(format!("profile {} does not have {width} columns", n + 1)));
    }
    let n = truth.len() as f64;
    let mut accr = vec![vec![0.0; attributes]; occasions];
    let mut pccr = vec![0.0; occasions];
    let mut longitudinal = 0.0;
    for (a, b) in truth.iter().zip(estimate) {
        let mut all = true;
        for t in 0..occasions {
            let mut occ = true;
            for k in 0..attributes {
                let hit = a[t * attributes + k] == b[t * attributes + k];
                if hit {
                    accr[t][k] += 1.0;
                }
                occ &= hit;
            }
            if occ {
                pccr[t] += 1.0;
            }
            all &= occ;
        }
        if all {
            longitudinal += 1.0;
        }
    }
    accr.iter_mut().flatten().for_each(|v| *v /= n);
    pccr.iter_mut().for_each(|v| *v /= n);
    Ok(ClassificationRates {
        accr,
        pccr,
        longitudinal_pccr: longitudinal / n,
    })
}

/// One replication's truths and estimates.
#[derive(Debug, Clone, Copy)]
pub struct RecoveryInput<'a> {
    pub design: &'a LongitudinalDesign,
    pub truth: &'a ModelParameters,
    pub estimate: &'a ModelParameters,
    pub true_profiles: &'a [Vec<u8>],
    pub estimated_profiles: &'a [Vec<u8>],
    pub true_theta: &'a [Vec<f64>],
    pub estimated_theta: &'a [Vec<f64>],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub replications: usize,
    pub rates: ClassificationRates,
    pub items: BTreeMap<String, ErrorStats>,
    /// Per step t → t+1, error of `μ̂_{t+1} − μ̂_t`.
    pub mean_growth: Vec<ErrorStats>,
    /// Per step, error of `σ̂_{t+1}/σ̂_t`.
    pub scale_growth: Vec<ErrorStats>,
    /// Per occasion, RMSE of the θ estimates over persons, averaged over
    /// replications.
    pub theta_rmse: Vec<f64>,
}

pub fn recovery_metrics(input: &RecoveryInput<'_>) -> Result<RecoveryReport> {
    let d = input.design;
    let t_count = d.occasions();
    let rates = classification_rates(input.true_profiles, input.estimated_profiles, t_count, d.attributes())?;
    let mut items: BTreeMap<String, ErrorStats> = ITEM_CLASSES.iter().map(|c| (c.to_string(), ErrorStats::default())).collect();
    let (ti, ei) = (&input.truth.items, &input.estimate.items);
    for u in 0..d.unique_item_count() {
        let prefix = if d.unique_group(u).is_some() { "anchor_" } else { "" };
        items.get_mut(&format!("{prefix}intercept")).unwrap().push(ei.lambda0[u], ti.lambda0[u]);
        items.get_mut(&format!("{prefix}interaction")).unwrap().push(ei.lambda_k[u], ti.lambda_k[u]);
    }
    for (e, t) in ei.slopes.iter().zip(&ti.slopes) {
        items.get_mut("anchor_slope").unwrap().push(*e, *t);
    }
    let (ts, es) = (&input.truth.structural, &input.estimate.structural);
    let tv = ts.variances();
    let ev = es.variances();
    let mut mean_growth = vec![ErrorStats::default(); t_count.saturating_sub(1)];
    let mut scale_growth = mean_growth.clone();
    for t in 0..t_count.saturating_sub(1) {
        mean_growth[t].push(es.mu[t + 1] - es.mu[t], ts.mu[t + 1] - ts.mu[t]);
        scale_growth[t].push((ev[t + 1] / ev[t]).sqrt(), (tv[t + 1] / tv[t]).sqrt());
    }
    if input.true_theta.len() != input.estimated_theta.len() {
        return Err(Error::Argument("true and estimated θ have different lengths".into()));
    }
    let theta_rmse = (0..t_count)
        .map(|t| {
            let mut s = ErrorStats::default();
            for (a, b) in input.estimated_theta.iter().zip(input.true_theta) {
                s.push(a[t], b[t]);
            }
            s.rmse()
        })
        .collect();
    Ok(RecoveryReport {
        replications: 1,
        rates,
        items,
        mean_growth,
        scale_growth,
        theta_rmse,
    })
}

impl RecoveryReport {
    /// Averages rates and θ RMSE over replications and pools parameter errors.
    pub fn aggregate(reports: &[RecoveryReport]) -> Result<RecoveryReport> {
        let first = reports.first().ok_or_else(|| Error::Argument("no replications to aggregate".into()))?;
        let r = reports.len() as f64;
        let mut out = first.clone();
        out.replications = reports.iter().map(|x| x.replications).sum();
        let mean = |f: &dyn Fn(&RecoveryReport) -> f64| reports.iter().map(f).sum::<f64>() / r;
        for t in 0..first.rates.pccr.len() {
            for k in 0..first.rates.accr[t].len() {
                out.rates.accr[t][k] = mean(&|x| x.rates.accr[t][k]);
            }
            out.rates.pccr[t] = mean(&|x| x.rates.pccr[t]);
            out.theta_rmse[t] = mean(&|x| x.theta_rmse[t]);
        }
        out.rates.longitudinal_pccr = mean(&|x| x.rates.longitudinal_pccr);
        for rep in &reports[1..] {
            for (k, v) in &rep.items {
                out.items.entry(k.clone()).or_default().merge(v);
            }
            for (a, b) in out.mean_growth.iter_mut().zip(&rep.mean_growth) {
                a.merge(b);
            }
            for (a, b) in out.scale_growth.iter_mut().zip(&rep.scale_growth) {
                a.merge(b);
            }
        }
        Ok(out)
    }
}
