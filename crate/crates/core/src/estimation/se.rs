//! Standard errors from a finite-difference Hessian of the marginal
//! log-likelihood.
//!
//! The gradient is exact: by Fisher's identity it equals the gradient of the
//! expected complete-data log-likelihood evaluated with E-step counts at the
//! same parameters. The Hessian is the central difference of that gradient.

use super::estep::{e_step, ExpectedCounts};
use super::likelihood::{check_data, Evaluator};
use super::mstep::{anchor_block, attribute_block};
use super::quadrature::{QuadratureSpec, ThetaGrid};
use super::{EmConfig, FitResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::kernels::logistic;
use crate::model::{LongitudinalDesign, ModelParameters, ModelVariant, ResponseMatrix, SlopeConstraint};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSe {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    /// Set when the Hessian was singular or not negative definite.
    pub flag: Option<String>,
}

/// Free parameters in natural units, with names. Fixed quantities (μ₁, σ₁₁,
/// slopes of the simple variant, unit attribute slopes) are excluded.
pub fn free_parameters(
    params: &ModelParameters,
    variant: ModelVariant,
    slopes: SlopeConstraint,
) -> (Vec<f64>, Vec<String>) {
    let mut x = Vec::new();
    let mut names = Vec::new();
    for u in 0..params.items.lambda0.len() {
        x.push(params.items.lambda0[u]);
        names.push(format!("lambda0[{}]", u + 1));
        x.push(params.items.lambda_k[u]);
        names.push(format!("lambdaK[{}]", u + 1));
    }
    if variant.has_specific_dimensions() {
        for (g, s) in params.items.slopes.iter().enumerate() {
            x.push(*s);
            names.push(format!("s[{}]", g + 1));
        }
    }
    let st = &params.structural;
    match slopes {
        SlopeConstraint::Free => {
            for (k, d) in st.delta.iter().enumerate() {
                x.push(*d);
                names.push(format!("delta[{}]", k + 1));
            }
        }
        SlopeConstraint::Common => {
            x.push(st.delta[0]);
            names.push("delta".into());
        }
        SlopeConstraint::Unit => {}
    }
    for (k, b) in st.beta.iter().enumerate() {
        x.push(*b);
        names.push(format!("beta[{}]", k + 1));
    }
    let t_count = st.mu.len();
    for t in 1..t_count {
        x.push(st.mu[t]);
        names.push(format!("mu[{}]", t + 1));
    }
    for t in 1..t_count {
        x.push(st.sigma[t][t]);
        names.push(format!("sigma[{},{}]", t + 1, t + 1));
    }
    for t in 1..t_count {
        for s in 0..t {
            x.push(st.sigma[t][s]);
            names.push(format!("sigma[{},{}]", t + 1, s + 1));
        }
    }
    (x, names)
}

/// Inverse of [`free_parameters`], using `template` for fixed quantities.
pub fn with_free_parameters(
    template: &ModelParameters,
    x: &[f64],
    variant: ModelVariant,
    slopes: SlopeConstraint,
) -> ModelParameters {
    let mut p = template.clone();
    let mut i = 0;
    let mut next = || {
        i += 1;
        x[i - 1]
    };
    for u in 0..p.items.lambda0.len() {
        p.items.lambda0[u] = next();
        p.items.lambda_k[u] = next();
    }
    if variant.has_specific_dimensions() {
        for s in p.items.slopes.iter_mut() {
            *s = next();
        }
    }
    let st = &mut p.structural;
    match slopes {
        SlopeConstraint::Free => st.delta.iter_mut().for_each(|d| *d = next()),
        SlopeConstraint::Common => {
            let d = next();
            st.delta.iter_mut().for_each(|v| *v = d);
        }
        SlopeConstraint::Unit => {}
    }
    st.beta.iter_mut().for_each(|b| *b = next());
    let t_count = st.mu.len();
    for t in 1..t_count {
        st.mu[t] = next();
    }
    for t in 1..t_count {
        st.sigma[t][t] = next();
    }
    for t in 1..t_count {
        for s in 0..t {
            let v = next();
            st.sigma[t][s] = v;
            st.sigma[s][t] = v;
        }
    }
    p
}

/// Gradient of the expected complete-data log-likelihood at the parameters
/// that produced `counts`, in [`free_parameters`] order.
pub fn score_from_counts(
    counts: &ExpectedCounts,
    design: &LongitudinalDesign,
    params: &ModelParameters,
    grid: &ThetaGrid,
    gamma_nodes: &[f64],
    variant: ModelVariant,
    slopes: SlopeConstraint,
) -> Result<Vec<f64>> {
    let u_count = design.unique_item_count();
    let mut item_grad = vec![[0.0; 2]; u_count];
    let mut slope_grad = vec![0.0; design.group_count()];
    for u in 0..u_count {
        if design.unique_group(u).is_some() {
            continue;
        }
        let [n0, n1, r0, r1] = counts.item[u];
        let l0 = params.items.lambda0[u];
        let lk = params.items.lambda_k[u];
        let g1 = r1 - n1 * logistic(l0 + lk);
        item_grad[u] = [r0 - n0 * logistic(l0) + g1, g1];
    }
    for (g, cells) in counts.anchor.iter().enumerate() {
        let u = design.group_unique(g);
        let x = [params.items.lambda0[u], params.items.lambda_k[u], params.items.slopes[g]];
        let (_, grad, _) = anchor_block(cells, gamma_nodes, &x, 0.0);
        item_grad[u] = [grad[0], grad[1]];
        slope_grad[g] = grad[2];
    }
    let mut out = Vec::new();
    for g in &item_grad {
        out.extend_from_slice(g);
    }
    if variant.has_specific_dimensions() {
        out.extend_from_slice(&slope_grad);
    }
    let st = &params.structural;
    let k_count = st.delta.len();
    let nodes = &grid.nodes_1d;
    let mut beta_grad = vec![0.0; k_count];
    match slopes {
        SlopeConstraint::Free => {
            let mut dg = vec![0.0; k_count];
            for k in 0..k_count {
                let (_, g, _) = attribute_block(counts, nodes, &[k], None, &[st.delta[k], st.beta[k]], 0.0);
                dg[k] = g[0];
                beta_grad[k] = g[1];
            }
            out.extend(dg);
        }
        SlopeConstraint::Common => {
            let attrs: Vec<usize> = (0..k_count).collect();
            let mut x = vec![st.delta[0]];
            x.extend_from_slice(&st.beta);
            let (_, g, _) = attribute_block(counts, nodes, &attrs, None, &x, 0.0);
            out.push(g[0]);
            beta_grad.copy_from_slice(&g[1..]);
        }
        SlopeConstraint::Unit => {
            for k in 0..k_count {
                let (_, g, _) = attribute_block(counts, nodes, &[k], Some(1.0), &[st.beta[k]], 0.0);
                beta_grad[k] = g[0];
            }
        }
    }
    out.extend(beta_grad);
    out.extend(density_score(grid, &counts.node_counts, &st.mu, &st.sigma)?);
    Ok(out)
}

/// Gradient of `Σ c ln w̃` with respect to `μ_{2..T}`, `σ_tt (t ≥ 2)` and
/// `σ_ts (t > s)`.
pub fn density_score(grid: &ThetaGrid, node_counts: &[f64], mu: &[f64], sigma: &[Vec<f64>]) -> Result<Vec<f64>> {
    let t_count = mu.len();
    let inv = linalg::spd_inverse(sigma)?;
    let log_w = grid.log_density(mu, sigma)?;
    let w = super::quadrature::normalize_log_weights(&log_w);
    let total: f64 = node_counts.iter().sum();
    let n_off = t_count * (t_count - 1) / 2;
    let mut out = vec![0.0; 2 * (t_count - 1) + n_off];
    let mut v = vec![0.0; t_count];
    for node in 0..grid.len() {
        let coef = node_counts[node] - total * w[node];
        for (t, slot) in v.iter_mut().enumerate() {
            *slot = grid.nodes_1d[grid.coordinate_index(node, t)] - mu[t];
        }
        let u: Vec<f64> = (0..t_count).map(|a| (0..t_count).map(|b| inv[a][b] * v[b]).sum()).collect();
        for t in 1..t_count {
            out[t - 1] += coef * u[t];
            out[t_count - 1 + t - 1] += coef * 0.5 * (u[t] * u[t] - inv[t][t]);
        }
        let mut p = 2 * (t_count - 1);
        for t in 1..t_count {
            for s in 0..t {
                out[p] += coef * (u[t] * u[s] - inv[t][s]);
                p += 1;
            }
        }
    }
    Ok(out)
}

/// Exact gradient of the marginal log-likelihood at `params`.
pub fn loglik_gradient(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    params: &ModelParameters,
    quad: &QuadratureSpec,
    config: &EmConfig,
) -> Result<Vec<f64>> {
    let ev = Evaluator::new(design, params, quad, config.pattern_cap_bits, config.contract_priors)?;
    let counts = e_step(&ev, data, config.execution);
    let grid = ThetaGrid::new(quad, design.occasions());
    score_from_counts(
        &counts,
        design,
        params,
        &grid,
        &quad.gamma_rule().nodes,
        config.variant,
        config.slope_constraint,
    )
}

/// Symmetrized central-difference Hessian from a gradient function. Step for
/// coordinate j is `step · max(1, |x_j|)`.
pub fn fd_hessian_from_gradient<G>(grad: G, x: &[f64], step: f64) -> Result<Vec<Vec<f64>>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut h = vec![vec![0.0; n]; n];
    for j in 0..n {
        let hj = step * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += hj;
        xm[j] -= hj;
        let gp = grad(&xp)?;
        let gm = grad(&xm)?;
        for i in 0..n {
            h[i][j] = (gp[i] - gm[i]) / (2.0 * hj);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok(h)
}

/// Standard errors `√diag((−H)⁻¹)` with per-parameter flags.
pub fn standard_errors_from_hessian(hessian: &[Vec<f64>]) -> Vec<(Option<f64>, Option<String>)> {
    let n = hessian.len();
    let info: Vec<Vec<f64>> = hessian.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    if let Ok(inv) = linalg::spd_inverse(&info) {
        return (0..n).map(|i| (Some(inv[i][i].sqrt()), None)).collect();
    }
    let m = DMatrix::from_fn(n, n, |i, j| info[i][j]);
    match m.try_inverse() {
        Some(inv) => (0..n)
            .map(|i| {
                let v = inv[(i, i)];
                if v > 0.0 && v.is_finite() {
                    (Some(v.sqrt()), Some("hessian_not_negative_definite".into()))
                } else {
                    (None, Some("nonpositive_variance".into()))
                }
            })
            .collect(),
        None => vec![(None, Some("singular_hessian".into())); n],
    }
}

/// Finite-difference standard errors at a fitted solution.
pub fn standard_errors_fd(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    fit: &FitResult,
    quad: &QuadratureSpec,
    config: &EmConfig,
    step: f64,
) -> Result<Vec<ParameterSe>> {
    check_data(data, design)?;
    if !(step > 0.0) {
        return Err(Error::Argument("finite-difference step must be positive".into()));
    }
    let variant = fit.variant;
    let slopes = config.slope_constraint;
    let mut cfg = config.clone();
    cfg.variant = variant;
    let (x, names) = free_parameters(&fit.params, variant, slopes);
    let h = fd_hessian_from_gradient(
        |xv| {
            let p = with_free_parameters(&fit.params, xv, variant, slopes);
            loglik_gradient(data, design, &p, quad, &cfg)
        },
        &x,
        step,
    )?;
    Ok(standard_errors_from_hessian(&h)
        .into_iter()
        .zip(names)
        .zip(x)
        .map(|(((se, flag), name), estimate)| ParameterSe {
            name,
            estimate,
            se,
            flag,
        })
        .collect())
}
