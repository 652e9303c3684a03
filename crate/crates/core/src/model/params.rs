//! Item and structural parameter containers.

use super::design::LongitudinalDesign;
use super::kernels::{guess_slip_from_loglinear, logit};
use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

/// Complete model (one random effect per anchor group) or simple model (none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    #[default]
    Complete,
    Simple,
}

impl ModelVariant {
    pub fn has_specific_dimensions(self) -> bool {
        self == ModelVariant::Complete
    }
}

/// Constraint on the attribute slopes δ_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeConstraint {
    /// One δ_k per attribute.
    #[default]
    Free,
    /// δ_k = δ for all k.
    Common,
    /// δ_k = 1 for all k.
    Unit,
}

/// Per unique item `lambda0`/`lambda_k`; per anchor group `slopes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemParameters {
    pub lambda0: Vec<f64>,
    pub lambda_k: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl ItemParameters {
    pub fn guess_slip(&self, unique: usize) -> (f64, f64) {
        guess_slip_from_loglinear(self.lambda0[unique], self.lambda_k[unique])
    }

    /// Slope on the specific dimension for unique item `u` (0 outside anchor groups).
    pub fn slope_of(&self, design: &LongitudinalDesign, u: usize) -> f64 {
        design.unique_group(u).map_or(0.0, |g| self.slopes[g])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralParameters {
    pub delta: Vec<f64>,
    pub beta: Vec<f64>,
    /// Ability means per occasion; `mu[0]` is fixed at 0.
    pub mu: Vec<f64>,
    /// Ability covariance; `sigma[0][0]` is fixed at 1.
    pub sigma: Vec<Vec<f64>>,
}

impl StructuralParameters {
    pub fn variances(&self) -> Vec<f64> {
        (0..self.sigma.len()).map(|t| self.sigma[t][t]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub items: ItemParameters,
    pub structural: StructuralParameters,
}

impl ModelParameters {
    /// Starting values: g = s = 0.2, anchor slopes 0.5 (0 for the simple
    /// variant), δ = 1, β = 0, μ = 0, unit variances with covariances 0.5.
    pub fn initial(design: &LongitudinalDesign, variant: ModelVariant) -> Self {
        let u = design.unique_item_count();
        let t = design.occasions();
        let k = design.attributes();
        let l0 = logit(0.2);
        let lk = logit(0.8) - l0;
        let slope = if variant.has_specific_dimensions() { 0.5 } else { 0.0 };
        ModelParameters {
            items: ItemParameters {
                lambda0: vec![l0; u],
                lambda_k: vec![lk; u],
                slopes: vec![slope; design.group_count()],
            },
            structural: StructuralParameters {
                delta: vec![1.0; k],
                beta: vec![0.0; k],
                mu: vec![0.0; t],
                sigma: (0..t)
                    .map(|a| (0..t).map(|b| if a == b { 1.0 } else { 0.5 }).collect())
                    .collect(),
            },
        }
    }

    /// Checks shapes against the design and every model constraint.
    pub fn validate(&self, design: &LongitudinalDesign) -> Result<()> {
        let u = design.unique_item_count();
        let it = &self.items;
        if it.lambda0.len() != u || it.lambda_k.len() != u {
            return Err(Error::Parameters(format!(
                "expected {} unique-item parameters, found {}/{}",
                u,
                it.lambda0.len(),
                it.lambda_k.len()
            )));
        }
        if it.slopes.len() != design.group_count() {
            return Err(Error::Parameters(format!(
                "expected {} anchor slopes, found {}",
                design.group_count(),
                it.slopes.len()
            )));
        }
        for i in 0..u {
            if !it.lambda0[i].is_finite() || !it.lambda_k[i].is_finite() {
                return Err(Error::Parameters(format!("item {} has non-finite parameters", i + 1)));
            }
            if it.lambda_k[i] < 0.0 {
                return Err(Error::Parameters(format!("item {} has negative interaction", i + 1)));
            }
        }
        if let Some(g) = it.slopes.iter().position(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Parameters(format!("anchor slope {} must be finite and ≥ 0", g + 1)));
        }
        let s = &self.structural;
        let k = design.attributes();
        let t = design.occasions();
        if s.delta.len() != k || s.beta.len() != k {
            return Err(Error::Parameters(format!("expected {k} attribute slopes and intercepts")));
        }
        if s.delta.iter().any(|d| !(d.is_finite() && *d > 0.0)) || s.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameters("attribute slopes must be positive and finite".into()));
        }
        if s.mu.len() != t || s.sigma.len() != t || s.sigma.iter().any(|r| r.len() != t) {
            return Err(Error::Parameters(format!("ability mean/covariance must have dimension {t}")));
        }
        if s.mu[0] != 0.0 || s.sigma[0][0] != 1.0 {
            return Err(Error::Parameters(
                "first ability mean must be 0 and variance 1".into(),
            ));
        }
        for a in 0..t {
            for b in 0..a {
                if s.sigma[a][b] != s.sigma[b][a] {
                    return Err(Error::Parameters("ability covariance is not symmetric".into()));
                }
            }
        }
        linalg::cholesky(&s.sigma)?;
        Ok(())
    }
}
