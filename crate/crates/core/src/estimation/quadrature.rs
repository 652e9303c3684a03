//! Fixed rectangular quadrature over θ and γ.

use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub theta_points: usize,
    /// Grid spans `[-theta_range, theta_range]` in every dimension.
    pub theta_range: f64,
    pub gamma_points: usize,
    pub gamma_range: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            theta_points: 15,
            theta_range: 5.0,
            gamma_points: 21,
            gamma_range: 5.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, points, range) in [
            ("theta", self.theta_points, self.theta_range),
            ("gamma", self.gamma_points, self.gamma_range),
        ] {
            if points < 3 || points % 2 == 0 {
                return Err(Error::Argument(format!(
                    "{name} quadrature needs an odd number of points ≥ 3, got {points}"
                )));
            }
            if !(range > 0.0 && range.is_finite()) {
                return Err(Error::Argument(format!("{name} quadrature range must be positive")));
            }
        }
        Ok(())
    }

    pub fn theta_nodes(&self) -> Vec<f64> {
        equispaced(self.theta_points, self.theta_range)
    }

    pub fn gamma_rule(&self) -> GammaRule {
        GammaRule::standard_normal(self.gamma_points, self.gamma_range)
    }
}

/// `points` equispaced nodes on `[-half, half]`; the middle node is exactly 0.
pub fn equispaced(points: usize, half: f64) -> Vec<f64> {
    let mid = (points / 2) as f64;
    (0..points).map(|i| (i as f64 - mid) / mid * half).collect()
}

/// Standard-normal weights on an equispaced grid, renormalized to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GammaRule {
    pub fn standard_normal(points: usize, half: f64) -> Self {
        let nodes = equispaced(points, half);
        let raw: Vec<f64> = nodes.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let total: f64 = raw.iter().sum();
        GammaRule {
            nodes,
            weights: raw.iter().map(|w| w / total).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Product grid of `Q^T` ability nodes. Node `n` has occasion-`t` coordinate
/// index `(n / Q^t) % Q`, so occasion 1 varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    pub nodes_1d: Vec<f64>,
    pub dims: usize,
}

impl ThetaGrid {
    pub fn new(spec: &QuadratureSpec, dims: usize) -> Self {
        ThetaGrid {
            nodes_1d: spec.theta_nodes(),
            dims,
        }
    }

    pub fn points(&self) -> usize {
        self.nodes_1d.len()
    }

    pub fn len(&self) -> usize {
        self.points().pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coordinate_index(&self, node: usize, t: usize) -> usize {
        (node / self.points().pow(t as u32)) % self.points()
    }

    pub fn coordinates(&self, node: usize) -> Vec<f64> {
        (0..self.dims)
            .map(|t| self.nodes_1d[self.coordinate_index(node, t)])
            .collect()
    }

    /// Log MVN density (up to a constant) at every node.
    pub fn log_density(&self, mu: &[f64], sigma: &[Vec<f64>]) -> Result<Vec<f64>> {
        let l = linalg::cholesky(sigma)?;
        let half_log_det = linalg::half_log_det(&l);
        let mut v = vec![0.0; self.dims];
        Ok((0..self.len())
            .map(|n| {
                for (t, slot) in v.iter_mut().enumerate() {
                    *slot = self.nodes_1d[self.coordinate_index(n, t)] - mu[t];
                }
                let z = linalg::forward_substitute(&l, &v);
                -0.5 * z.iter().map(|x| x * x).sum::<f64>() - half_log_det
            })
            .collect())
    }

    /// MVN density weights at the nodes, renormalized to sum to 1.
    pub fn weights(&self, mu: &[f64], sigma: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(normalize_log_weights(&self.log_density(mu, sigma)?))
    }
}

pub(crate) fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}
