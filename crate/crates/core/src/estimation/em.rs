//! EM driver.

use super::estep::e_step;
use super::likelihood::{check_data, DesignTables, Evaluator};
use super::mstep::m_step;
use super::quadrature::{QuadratureSpec, ThetaGrid};
use super::EmConfig;
use crate::error::{Error, Result};
use crate::model::{LongitudinalDesign, ModelParameters, ModelVariant, ResponseMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParameters,
    pub variant: ModelVariant,
    pub loglik: f64,
    pub neg2ll: f64,
    pub cycles: usize,
    pub converged: bool,
    /// Log-likelihood at the parameters entering each cycle, followed by the
    /// value at the returned parameters.
    pub trace: Vec<f64>,
    /// Largest absolute parameter change in the final cycle.
    pub last_change: f64,
    /// Inner solves that failed to converge, summed over cycles.
    pub inner_warnings: usize,
    /// Largest per-person posterior normalization error seen in any E-step.
    pub max_normalization_error: f64,
}

impl FitResult {
    /// Largest decrease between consecutive trace entries (0 if monotone).
    pub fn max_trace_decrease(&self) -> f64 {
        self.trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

/// Largest absolute difference over every free parameter.
pub fn max_parameter_change(a: &ModelParameters, b: &ModelParameters) -> f64 {
    let mut m = 0.0f64;
    let mut upd = |x: &[f64], y: &[f64]| {
        for (p, q) in x.iter().zip(y) {
            m = m.max((p - q).abs());
        }
    };
    upd(&a.items.lambda0, &b.items.lambda0);
    upd(&a.items.lambda_k, &b.items.lambda_k);
    upd(&a.items.slopes, &b.items.slopes);
    upd(&a.structural.delta, &b.structural.delta);
    upd(&a.structural.beta, &b.structural.beta);
    upd(&a.structural.mu, &b.structural.mu);
    for (r, s) in a.structural.sigma.iter().zip(&b.structural.sigma) {
        upd(r, s);
    }
    m
}

pub fn fit_em(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    quad: &QuadratureSpec,
    config: &EmConfig,
    init: Option<&ModelParameters>,
) -> Result<FitResult> {
    config.validate()?;
    quad.validate()?;
    check_data(data, design)?;
    if data.persons() == 0 {
        return Err(Error::Data("no persons to fit".into()));
    }
    let mut params = match init {
        Some(p) => {
            p.validate(design)?;
            p.clone()
        }
        None => ModelParameters::initial(design, config.variant),
    };
    if !config.variant.has_specific_dimensions() {
        params.items.slopes.iter_mut().for_each(|s| *s = 0.0);
    }
    let tables = DesignTables::new(design, config.pattern_cap_bits)?;
    let grid = ThetaGrid::new(quad, design.occasions());
    let gamma_nodes = quad.gamma_rule().nodes;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut cycles = 0;
    let mut last_change = f64::INFINITY;
    let mut inner_warnings = 0;
    let mut max_norm_err = 0.0f64;
    while cycles < config.max_cycles {
        let ev = Evaluator::with_tables(design, tables.clone(), &params, quad, config.contract_priors)?;
        let counts = e_step(&ev, data, config.execution);
        trace.push(counts.loglik);
        max_norm_err = max_norm_err.max(counts.max_normalization_error);
        let (next, warnings) = m_step(&counts, design, &params, &grid, &gamma_nodes, config);
        inner_warnings += warnings.total();
        last_change = max_parameter_change(&params, &next);
        params = next;
        cycles += 1;
        if last_change < config.param_change_tol {
            converged = true;
            break;
        }
    }
    let ev = Evaluator::with_tables(design, tables, &params, quad, config.contract_priors)?;
    let loglik = ev.log_likelihood(data, config.execution);
    trace.push(loglik);
    Ok(FitResult {
        params,
        variant: config.variant,
        loglik,
        neg2ll: -2.0 * loglik,
        cycles,
        converged,
        trace,
        last_change,
        inner_warnings,
        max_normalization_error: max_norm_err,
    })
}
