//! Marginal maximum likelihood estimation by EM over a fixed quadrature grid.

pub mod em;
pub mod estep;
pub mod likelihood;
pub mod mstep;
pub mod oracle;
pub mod priors;
pub mod quadrature;
pub mod se;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::pattern::DEFAULT_PATTERN_BITS_CAP;
use crate::model::{ModelVariant, SlopeConstraint};
use serde::{Deserialize, Serialize};

pub use em::{fit_em, FitResult};
pub use estep::{e_step, AnchorCells, ExpectedCounts};
pub use likelihood::{marginal_loglikelihood, person_pattern_likelihood, Evaluator};
pub use mstep::m_step;
pub use oracle::brute_force_loglikelihood;
pub use quadrature::{QuadratureSpec, ThetaGrid};
pub use se::{standard_errors_fd, ParameterSe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_cycles: usize,
    pub param_change_tol: f64,
    pub inner_newton_tol: f64,
    pub inner_newton_max: usize,
    pub count_floor: f64,
    pub variant: ModelVariant,
    pub slope_constraint: SlopeConstraint,
    /// Evaluate θ-grid sums by occasion-wise tensor contraction.
    pub contract_priors: bool,
    pub pattern_cap_bits: usize,
    pub execution: Execution,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_cycles: 2000,
            param_change_tol: 1e-4,
            inner_newton_tol: 1e-7,
            inner_newton_max: 100,
            count_floor: 1e-6,
            variant: ModelVariant::Complete,
            slope_constraint: SlopeConstraint::Free,
            contract_priors: true,
            pattern_cap_bits: DEFAULT_PATTERN_BITS_CAP,
            execution: Execution::default(),
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.param_change_tol > 0.0 && self.inner_newton_tol > 0.0 && self.count_floor > 0.0) {
            return Err(Error::Argument("EM tolerances and count floor must be positive".into()));
        }
        if self.max_cycles == 0 || self.inner_newton_max == 0 {
            return Err(Error::Argument("cycle limits must be positive".into()));
        }
        Ok(())
    }
}
