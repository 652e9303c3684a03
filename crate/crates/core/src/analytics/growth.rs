use crate::error::{Error, Result};
use crate::linalg;
use crate::scoring::PosteriorSummary;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallGrowth {
    /// `μ_{t+1} − μ_t`.
    pub mean_increments: Vec<f64>,
    /// `σ_{t+1} / σ_t` on the standard-deviation scale.
    pub scale_ratios: Vec<f64>,
}

pub fn overall_growth(mu: &[f64], variances: &[f64]) -> Result<OverallGrowth> {
    if mu.len() != variances.len() {
        return Err(Error::Argument(format!("{} means but {} variances", mu.len(), variances.len())));
    }
    if let Some(t) = variances.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Argument(format!("variance at occasion {} must be positive", t + 1)));
    }
    Ok(OverallGrowth {
        mean_increments: mu.windows(2).map(|w| w[1] - w[0]).collect(),
        scale_ratios: variances.windows(2).map(|w| (w[1] / w[0]).sqrt()).collect(),
    })
}

pub fn covariance_to_correlation(sigma: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    linalg::cholesky(sigma)?;
    let sd: Vec<f64> = (0..sigma.len()).map(|t| sigma[t][t].sqrt()).collect();
    Ok((0..sigma.len())
        .map(|a| {
            (0..sigma.len())
                .map(|b| if a == b { 1.0 } else { (sigma[a][b] / (sd[a] * sd[b])).clamp(-1.0, 1.0) })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterySummary {
    pub threshold: f64,
    /// `[t][k]` mean posterior mastery probability.
    pub mean_probability: Vec<Vec<f64>>,
    /// `[t][k]` persons with posterior at or above the threshold.
    pub mastered: Vec<Vec<usize>>,
}

pub fn mastery_summary(summary: &PosteriorSummary, threshold: f64) -> MasterySummary {
    let t_count = summary.occasions;
    let k_count = summary.attributes;
    let n = summary.persons.len().max(1) as f64;
    let mut mean = vec![vec![0.0; k_count]; t_count];
    let mut mastered = vec![vec![0usize; k_count]; t_count];
    for t in 0..t_count {
        for k in 0..k_count {
            let col: Vec<f64> = summary.persons.iter().map(|p| p.attribute_posterior[t * k_count + k]).collect();
            mean[t][k] = col.iter().sum::<f64>() / n;
            mastered[t][k] = col.iter().filter(|&&p| p >= threshold).count();
        }
    }
    MasterySummary {
        threshold,
        mean_probability: mean,
        mastered,
    }
}
