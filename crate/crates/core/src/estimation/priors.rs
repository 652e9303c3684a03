//! Quantities that depend only on the structural parameters: θ-node weights,
//! per-occasion attribute-pattern priors, and maps between functions of the
//! θ grid and functions of the longitudinal pattern space.
//!
//! Because the attribute prior factorizes over occasions given θ,
//! `π(α | θ) = ∏_t P(α_t | θ_t)`, every map can be evaluated as a sequence
//! of occasion-wise tensor mode products instead of a full
//! `Q^T × 2^{TK}` loop. Both routes are kept; they agree to rounding.

use super::quadrature::{QuadratureSpec, ThetaGrid};
use crate::error::Result;
use crate::model::kernels::occasion_pattern_prior;
use crate::model::{PatternSpace, StructuralParameters};

/// n-mode product of a dense tensor (mode 0 varies fastest) with a row-major
/// `out_dim × dims[mode]` matrix.
pub fn mode_product(tensor: &[f64], dims: &[usize], mode: usize, matrix: &[f64], out_dim: usize) -> Vec<f64> {
    let inner: usize = dims[..mode].iter().product();
    let outer: usize = dims[mode + 1..].iter().product();
    let in_dim = dims[mode];
    let mut out = vec![0.0; inner * out_dim * outer];
    for o in 0..outer {
        for r in 0..out_dim {
            let row = &matrix[r * in_dim..(r + 1) * in_dim];
            let dst = &mut out[(o * out_dim + r) * inner..(o * out_dim + r + 1) * inner];
            for (c, &m) in row.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let src = &tensor[(o * in_dim + c) * inner..(o * in_dim + c + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct PriorTables {
    pub grid: ThetaGrid,
    pub space: PatternSpace,
    /// Normalized MVN weight of each θ node.
    pub weights: Vec<f64>,
    /// `P(a | θ = node_j)` for one occasion, row-major `Q × 2^K`.
    pub occasion_prior: Vec<f64>,
    /// Population prior of each longitudinal pattern, `Σ_θ w(θ) π(α|θ)`.
    pub pattern_prior: Vec<f64>,
    contract: bool,
}

impl PriorTables {
    pub fn new(
        structural: &StructuralParameters,
        space: PatternSpace,
        quad: &QuadratureSpec,
        contract: bool,
    ) -> Result<Self> {
        let grid = ThetaGrid::new(quad, space.occasions());
        let weights = grid.weights(&structural.mu, &structural.sigma)?;
        let q = grid.points();
        let ol = space.occasion_len();
        let mut occasion_prior = vec![0.0; q * ol];
        for j in 0..q {
            occasion_prior_row(structural, grid.nodes_1d[j], &mut occasion_prior[j * ol..(j + 1) * ol]);
        }
        let mut tables = PriorTables {
            grid,
            space,
            weights,
            occasion_prior,
            pattern_prior: Vec::new(),
            contract,
        };
        tables.pattern_prior = tables.expand(&tables.weights);
        Ok(tables)
    }

    fn prior(&self, j: usize, a: usize) -> f64 {
        self.occasion_prior[j * self.space.occasion_len() + a]
    }

    fn transposed_prior(&self) -> Vec<f64> {
        let q = self.grid.points();
        let ol = self.space.occasion_len();
        let mut out = vec![0.0; ol * q];
        for j in 0..q {
            for a in 0..ol {
                out[a * q + j] = self.prior(j, a);
            }
        }
        out
    }

    /// `g(α) = Σ_node f(node) π(α | node)`.
    pub fn expand(&self, node_values: &[f64]) -> Vec<f64> {
        let t_count = self.space.occasions();
        let q = self.grid.points();
        let ol = self.space.occasion_len();
        if self.contract {
            let pt = self.transposed_prior();
            let mut dims = vec![q; t_count];
            let mut tensor = node_values.to_vec();
            for mode in 0..t_count {
                tensor = mode_product(&tensor, &dims, mode, &pt, ol);
                dims[mode] = ol;
            }
            tensor
        } else {
            let mut out = vec![0.0; self.space.len()];
            for (node, &f) in node_values.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                let js: Vec<usize> = (0..t_count).map(|t| self.grid.coordinate_index(node, t)).collect();
                for (alpha, slot) in out.iter_mut().enumerate() {
                    *slot += f * self.joint_prior(&js, alpha);
                }
            }
            out
        }
    }

    /// `h(node) = Σ_α π(α | node) r(α)`.
    pub fn project(&self, pattern_values: &[f64]) -> Vec<f64> {
        let t_count = self.space.occasions();
        let q = self.grid.points();
        let ol = self.space.occasion_len();
        if self.contract {
            let mut dims = vec![ol; t_count];
            let mut tensor = pattern_values.to_vec();
            for mode in 0..t_count {
                tensor = mode_product(&tensor, &dims, mode, &self.occasion_prior, q);
                dims[mode] = q;
            }
            tensor
        } else {
            (0..self.grid.len())
                .map(|node| {
                    let js: Vec<usize> = (0..t_count).map(|t| self.grid.coordinate_index(node, t)).collect();
                    pattern_values
                        .iter()
                        .enumerate()
                        .map(|(alpha, r)| r * self.joint_prior(&js, alpha))
                        .sum()
                })
                .collect()
        }
    }

    /// Per occasion `t`, the `Q × 2^K` table
    /// `Σ_{node: j_t = j} w(node) Σ_{α: α_t = a} π(α | node) r(α)`.
    pub fn occasion_margins(&self, pattern_values: &[f64]) -> Vec<Vec<f64>> {
        let t_count = self.space.occasions();
        let q = self.grid.points();
        let ol = self.space.occasion_len();
        if self.contract {
            (0..t_count)
                .map(|keep| {
                    let mut dims = vec![ol; t_count];
                    let mut tensor = pattern_values.to_vec();
                    for mode in (0..t_count).filter(|&m| m != keep) {
                        tensor = mode_product(&tensor, &dims, mode, &self.occasion_prior, q);
                        dims[mode] = q;
                    }
                    let mut strides = vec![1usize; t_count];
                    for m in 1..t_count {
                        strides[m] = strides[m - 1] * dims[m - 1];
                    }
                    let mut out = vec![0.0; q * ol];
                    for node in 0..self.grid.len() {
                        let w = self.weights[node];
                        let mut base = 0;
                        for m in (0..t_count).filter(|&m| m != keep) {
                            base += self.grid.coordinate_index(node, m) * strides[m];
                        }
                        let j = self.grid.coordinate_index(node, keep);
                        for a in 0..ol {
                            out[j * ol + a] += w * tensor[base + a * strides[keep]];
                        }
                    }
                    for j in 0..q {
                        for a in 0..ol {
                            out[j * ol + a] *= self.prior(j, a);
                        }
                    }
                    out
                })
                .collect()
        } else {
            let mut out = vec![vec![0.0; q * ol]; t_count];
            for node in 0..self.grid.len() {
                let w = self.weights[node];
                let js: Vec<usize> = (0..t_count).map(|t| self.grid.coordinate_index(node, t)).collect();
                for (alpha, r) in pattern_values.iter().enumerate() {
                    let v = w * self.joint_prior(&js, alpha) * r;
                    for (t, table) in out.iter_mut().enumerate() {
                        let a = self.space.occasion_pattern(crate::model::AttributePattern(alpha as u32), t);
                        table[js[t] * ol + a] += v;
                    }
                }
            }
            out
        }
    }

    fn joint_prior(&self, js: &[usize], alpha: usize) -> f64 {
        let p = crate::model::AttributePattern(alpha as u32);
        js.iter()
            .enumerate()
            .map(|(t, &j)| self.prior(j, self.space.occasion_pattern(p, t)))
            .product()
    }
}

fn occasion_prior_row(structural: &StructuralParameters, theta: f64, out: &mut [f64]) {
    occasion_pattern_prior(&structural.delta, &structural.beta, theta, out);
}
