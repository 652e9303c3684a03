use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::model::{count_parameters_with, LongitudinalDesign, SlopeConstraint};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `(AIC, BIC)` from −2 log-likelihood, parameter count and sample size.
pub fn fit_indices(neg2ll: f64, parameters: usize, persons: usize) -> (f64, f64) {
    let np = parameters as f64;
    (neg2ll + 2.0 * np, neg2ll + np * (persons as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub variant: crate::model::ModelVariant,
    pub neg2ll: f64,
    pub parameters: usize,
    pub persons: usize,
    pub aic: f64,
    pub bic: f64,
    pub cycles: usize,
    pub converged: bool,
}

pub fn fit_summary(fit: &FitResult, design: &LongitudinalDesign, persons: usize, slopes: SlopeConstraint) -> FitSummary {
    let np = count_parameters_with(design, fit.variant, slopes);
    let (aic, bic) = fit_indices(fit.neg2ll, np, persons);
    FitSummary {
        variant: fit.variant,
        neg2ll: fit.neg2ll,
        parameters: np,
        persons,
        aic,
        bic,
        cycles: fit.cycles,
        converged: fit.converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatioTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Chi-square difference test of a restricted model against a fuller one.
pub fn likelihood_ratio_test(neg2ll_restricted: f64, neg2ll_full: f64, df: usize) -> Result<LikelihoodRatioTest> {
    if df == 0 {
        return Err(Error::Argument("likelihood ratio test needs df ≥ 1".into()));
    }
    let diff = neg2ll_restricted - neg2ll_full;
    if diff < -1e-6 {
        return Err(Error::Argument(format!(
            "restricted −2LL {neg2ll_restricted} is below the full-model value {neg2ll_full}; check the argument order"
        )));
    }
    let statistic = diff.max(0.0);
    let chi = ChiSquared::new(df as f64).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(LikelihoodRatioTest {
        statistic,
        df,
        p_value: chi.sf(statistic),
    })
}
