//! Maximization step. The expected complete-data log-likelihood separates
//! into independent blocks: one per non-anchor item (closed form), one per
//! anchor group (Newton), the attribute structure (Newton) and the ability
//! distribution (quasi-Newton).

use super::estep::{AnchorCells, ExpectedCounts};
use super::quadrature::ThetaGrid;
use super::EmConfig;
use crate::linalg;
use crate::model::kernels::{log_logistic, logistic, logit};
use crate::model::{LongitudinalDesign, ModelParameters, SlopeConstraint, StructuralParameters};

/// Lower bound used for δ_k.
pub const DELTA_FLOOR: f64 = 1e-6;

pub type Objective = (f64, Vec<f64>, Vec<Vec<f64>>);

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes a concave function with optional lower bounds by projected
/// Newton steps with step halving. Coordinates sitting on their bound with
/// an outward gradient are frozen for the step.
pub fn newton_maximize<F>(f: F, x0: &[f64], lower: &[f64], tol: f64, max_iter: usize) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Objective,
{
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().zip(lower).map(|(v, l)| v.max(*l)).collect();
    let (mut value, mut grad, mut hess) = f(&x);
    for iter in 1..=max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| !(x[i] <= lower[i] && grad[i] <= 0.0)).collect();
        let mut dir = vec![0.0; n];
        if !free.is_empty() {
            let neg_h: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| -hess[i][j]).collect())
                .collect();
            let g: Vec<f64> = free.iter().map(|&i| grad[i]).collect();
            let step = match linalg::cholesky(&neg_h) {
                Ok(l) => linalg::backward_substitute_transposed(&l, &linalg::forward_substitute(&l, &g)),
                Err(_) => g.clone(),
            };
            for (k, &i) in free.iter().enumerate() {
                dir[i] = step[k];
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = (0..n).map(|i| (x[i] + t * dir[i]).max(lower[i])).collect();
            let out = f(&cand);
            if out.0.is_finite() && out.0 >= value {
                accepted = Some((cand, out));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, out)) = accepted else {
            return NewtonOutcome {
                x,
                value,
                iterations: iter,
                converged: dir.iter().all(|d| d.abs() < tol),
            };
        };
        let change = cand.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = cand;
        value = out.0;
        grad = out.1;
        hess = out.2;
        if change < tol {
            return NewtonOutcome {
                x,
                value,
                iterations: iter,
                converged: true,
            };
        }
    }
    NewtonOutcome {
        x,
        value,
        iterations: max_iter,
        converged: false,
    }
}

/// Binomial-logit cell: `r ln σ(x) + (n − r) ln(1 − σ(x))`.
#[inline]
fn cell(n: f64, r: f64, x: f64) -> (f64, f64, f64) {
    let p = logistic(x);
    (
        r * log_logistic(x) + (n - r) * log_logistic(-x),
        r - n * p,
        -n * p * (1.0 - p),
    )
}

/// Expected log-likelihood of one anchor group as a function of
/// `[λ₀, λ_K]` or `[λ₀, λ_K, s]`, with gradient and Hessian. `floor` adds
/// pseudo-counts to every cell.
pub fn anchor_block(cells: &AnchorCells, gamma_nodes: &[f64], x: &[f64], floor: f64) -> Objective {
    let dim = x.len();
    let slope = if dim == 3 { x[2] } else { 0.0 };
    let mut v = 0.0;
    let mut g = vec![0.0; dim];
    let mut h = vec![vec![0.0; dim]; dim];
    for eta in 0..2 {
        for (node, &z) in gamma_nodes.iter().enumerate() {
            let n = cells.trials[eta][node] + 2.0 * floor;
            let r = cells.correct[eta][node] + floor;
            let e = eta as f64;
            let (cv, cg, ch) = cell(n, r, x[0] + e * x[1] + slope * z);
            v += cv;
            let basis = [1.0, e, z];
            for a in 0..dim {
                g[a] += cg * basis[a];
                for b in 0..dim {
                    h[a][b] += ch * basis[a] * basis[b];
                }
            }
        }
    }
    (v, g, h)
}

/// Expected log-likelihood of the attribute structure for attributes `attrs`
/// sharing one slope. `x = [δ, β_attrs…]`, or `[β_attrs…]` when
/// `fixed_delta` is given.
pub fn attribute_block(
    counts: &ExpectedCounts,
    nodes: &[f64],
    attrs: &[usize],
    fixed_delta: Option<f64>,
    x: &[f64],
    floor: f64,
) -> Objective {
    let off = usize::from(fixed_delta.is_none());
    let delta = fixed_delta.unwrap_or(x[0]);
    let dim = x.len();
    let mut v = 0.0;
    let mut g = vec![0.0; dim];
    let mut h = vec![vec![0.0; dim]; dim];
    for (slot, &k) in attrs.iter().enumerate() {
        let bi = off + slot;
        for (t, exposure) in counts.exposure.iter().enumerate() {
            for (j, &theta) in nodes.iter().enumerate() {
                let n = exposure[j] + 2.0 * floor;
                let r = counts.mastery[k][t][j] + floor;
                let (cv, cg, ch) = cell(n, r, delta * theta + x[bi]);
                v += cv;
                g[bi] += cg;
                h[bi][bi] += ch;
                if off == 1 {
                    g[0] += cg * theta;
                    h[0][0] += ch * theta * theta;
                    h[0][bi] += ch * theta;
                    h[bi][0] += ch * theta;
                }
            }
        }
    }
    (v, g, h)
}

/// Cholesky-based parameterization of the ability distribution:
/// `[μ_2…μ_T, ln L_22…ln L_TT, L_ts (t > s)]`, with `μ_1 = 0` and `L_11 = 1`.
pub fn density_to_vector(structural: &StructuralParameters) -> Vec<f64> {
    let t_count = structural.mu.len();
    let l = linalg::cholesky(&structural.sigma).expect("validated covariance");
    let mut x: Vec<f64> = structural.mu[1..].to_vec();
    x.extend((1..t_count).map(|t| l[t][t].ln()));
    for t in 1..t_count {
        x.extend_from_slice(&l[t][..t]);
    }
    x
}

pub fn density_from_vector(x: &[f64], t_count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut mu = vec![0.0; t_count];
    mu[1..].copy_from_slice(&x[..t_count - 1]);
    let mut l = vec![vec![0.0; t_count]; t_count];
    l[0][0] = 1.0;
    let mut p = t_count - 1;
    for t in 1..t_count {
        l[t][t] = x[p].exp();
        p += 1;
    }
    for t in 1..t_count {
        for s in 0..t {
            l[t][s] = x[p];
            p += 1;
        }
    }
    (mu, l)
}

/// `Σ_node c(node) ln w̃(node)` with `w̃` the renormalized grid weights, and
/// its gradient in the Cholesky parameterization.
pub fn density_objective(grid: &ThetaGrid, node_counts: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    let t_count = grid.dims;
    let (mu, l) = density_from_vector(x, t_count);
    let half_log_det = linalg::half_log_det(&l);
    let nodes = grid.len();
    let mut ell = Vec::with_capacity(nodes);
    let mut zs = Vec::with_capacity(nodes);
    let mut v = vec![0.0; t_count];
    for n in 0..nodes {
        for (t, slot) in v.iter_mut().enumerate() {
            *slot = grid.nodes_1d[grid.coordinate_index(n, t)] - mu[t];
        }
        let z = linalg::forward_substitute(&l, &v);
        ell.push(-0.5 * z.iter().map(|a| a * a).sum::<f64>() - half_log_det);
        zs.push(z);
    }
    let max = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm: f64 = ell.iter().map(|e| (e - max).exp()).sum();
    let log_norm = max + norm.ln();
    let total: f64 = node_counts.iter().sum();
    let value: f64 = node_counts.iter().zip(&ell).map(|(c, e)| c * (e - log_norm)).sum();

    let mut grad = vec![0.0; x.len()];
    let diag_off = t_count - 1;
    let off_off = 2 * (t_count - 1);
    for n in 0..nodes {
        let coef = node_counts[n] - total * (ell[n] - log_norm).exp();
        if coef == 0.0 {
            continue;
        }
        let z = &zs[n];
        let u = linalg::backward_substitute_transposed(&l, z);
        for t in 1..t_count {
            grad[t - 1] += coef * u[t];
            grad[diag_off + t - 1] += coef * (u[t] * z[t] * l[t][t] - 1.0);
        }
        let mut p = off_off;
        for t in 1..t_count {
            for s in 0..t {
                grad[p] += coef * u[t] * z[s];
                p += 1;
            }
        }
    }
    (value, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `f` by BFGS with a backtracking Armijo line search.
pub fn bfgs_maximize<F>(f: F, x0: &[f64], gtol: f64, max_iter: usize) -> BfgsOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut value, mut grad) = f(&x);
    let identity = |n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    };
    let mut h = identity(n);
    let scale = grad.iter().map(|g| g.abs()).fold(0.0, f64::max).max(1.0);
    let mut first = true;
    for iter in 1..=max_iter {
        if grad.iter().all(|g| g.abs() < gtol) {
            return BfgsOutcome {
                x,
                value,
                iterations: iter - 1,
                converged: true,
            };
        }
        let mut dir: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * grad[j]).sum()).collect();
        let mut slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if !(slope > 0.0) {
            h = identity(n);
            dir = grad.clone();
            slope = grad.iter().map(|g| g * g).sum();
        }
        let mut t = if first { 1.0 / scale } else { 1.0 };
        first = false;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let out = f(&cand);
            if out.0.is_finite() && out.0 >= value + 1e-4 * t * slope {
                accepted = Some((cand, out));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, (new_value, new_grad))) = accepted else {
            return BfgsOutcome {
                x,
                value,
                iterations: iter,
                converged: false,
            };
        };
        let s: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
        // ascent on f is descent on -f: y = -(g_new - g)
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| b - a).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let step = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        x = cand;
        value = new_value;
        grad = new_grad;
        if step < 1e-12 {
            return BfgsOutcome {
                x,
                value,
                iterations: iter,
                converged: grad.iter().all(|g| g.abs() < gtol.max(1e-6)),
            };
        }
    }
    BfgsOutcome {
        x,
        value,
        iterations: max_iter,
        converged: false,
    }
}

/// Closed-form update of a non-anchor item from `[n̄₀, n̄₁, r̄₀, r̄₁]`.
/// When the floored estimate would give `λ_K < 0`, the pooled proportion is
/// used with `λ_K = 0`.
pub fn item_update(counts: [f64; 4], floor: f64) -> (f64, f64) {
    let [n0, n1, r0, r1] = counts;
    let p0 = (r0 + floor) / (n0 + 2.0 * floor);
    let p1 = (r1 + floor) / (n1 + 2.0 * floor);
    let (l0, l1) = (logit(p0), logit(p1));
    if l1 >= l0 {
        (l0, l1 - l0)
    } else {
        let pooled = (r0 + r1 + floor) / (n0 + n1 + 2.0 * floor);
        (logit(pooled), 0.0)
    }
}

/// Number of inner solves that failed to converge in one M-step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MStepWarnings {
    pub anchor: usize,
    pub attribute: usize,
    pub density: usize,
}

impl MStepWarnings {
    pub fn total(&self) -> usize {
        self.anchor + self.attribute + self.density
    }
}

pub fn m_step(
    counts: &ExpectedCounts,
    design: &LongitudinalDesign,
    prev: &ModelParameters,
    grid: &ThetaGrid,
    gamma_nodes: &[f64],
    config: &EmConfig,
) -> (ModelParameters, MStepWarnings) {
    let mut next = prev.clone();
    let mut warnings = MStepWarnings::default();
    let eps = config.count_floor;

    for u in 0..design.unique_item_count() {
        if design.unique_group(u).is_none() {
            let (l0, lk) = item_update(counts.item[u], eps);
            next.items.lambda0[u] = l0;
            next.items.lambda_k[u] = lk;
        }
    }

    let with_slope = config.variant.has_specific_dimensions();
    for (g, cells) in counts.anchor.iter().enumerate() {
        let u = design.group_unique(g);
        let mut x0 = vec![prev.items.lambda0[u], prev.items.lambda_k[u]];
        let mut lower = vec![f64::NEG_INFINITY, 0.0];
        if with_slope {
            x0.push(prev.items.slopes[g]);
            lower.push(0.0);
        }
        let out = newton_maximize(
            |x| anchor_block(cells, gamma_nodes, x, eps),
            &x0,
            &lower,
            config.inner_newton_tol,
            config.inner_newton_max,
        );
        if out.converged {
            next.items.lambda0[u] = out.x[0];
            next.items.lambda_k[u] = out.x[1];
            next.items.slopes[g] = if with_slope { out.x[2] } else { 0.0 };
        } else {
            warnings.anchor += 1;
        }
    }

    let s = &prev.structural;
    let nodes = &grid.nodes_1d;
    let k_count = s.delta.len();
    let groups: Vec<(Vec<usize>, Option<f64>)> = match config.slope_constraint {
        SlopeConstraint::Free => (0..k_count).map(|k| (vec![k], None)).collect(),
        SlopeConstraint::Common => vec![((0..k_count).collect(), None)],
        SlopeConstraint::Unit => (0..k_count).map(|k| (vec![k], Some(1.0))).collect(),
    };
    for (attrs, fixed) in groups {
        let mut x0 = Vec::new();
        let mut lower = Vec::new();
        if fixed.is_none() {
            x0.push(s.delta[attrs[0]].max(DELTA_FLOOR));
            lower.push(DELTA_FLOOR);
        }
        for &k in &attrs {
            x0.push(s.beta[k]);
            lower.push(f64::NEG_INFINITY);
        }
        let out = newton_maximize(
            |x| attribute_block(counts, nodes, &attrs, fixed, x, eps),
            &x0,
            &lower,
            config.inner_newton_tol,
            config.inner_newton_max,
        );
        if out.converged {
            let off = usize::from(fixed.is_none());
            for (slot, &k) in attrs.iter().enumerate() {
                next.structural.delta[k] = fixed.unwrap_or(out.x[0]);
                next.structural.beta[k] = out.x[off + slot];
            }
        } else {
            warnings.attribute += 1;
        }
    }

    let t_count = s.mu.len();
    if t_count > 1 {
        let x0 = density_to_vector(s);
        let gtol = config.inner_newton_tol * (counts.persons.max(1) as f64);
        let out = bfgs_maximize(
            |x| density_objective(grid, &counts.node_counts, x),
            &x0,
            gtol,
            config.inner_newton_max.max(200),
        );
        let (start, _) = density_objective(grid, &counts.node_counts, &x0);
        if out.value >= start {
            let (mu, l) = density_from_vector(&out.x, t_count);
            let mut sigma = linalg::outer_lower(&l);
            sigma[0][0] = 1.0;
            let mut mu = mu;
            mu[0] = 0.0;
            next.structural.mu = mu;
            next.structural.sigma = sigma;
        }
        if !out.converged {
            warnings.density += 1;
        }
    }
    (next, warnings)
}
