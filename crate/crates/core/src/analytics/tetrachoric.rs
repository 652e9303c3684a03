use crate::error::{Error, Result};
use crate::scoring::PosteriorSummary;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

const RHO_BOUND: f64 = 0.999;
const SEARCH_TOL: f64 = 1e-9;
const PANELS: usize = 8;
const GL_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TetrachoricFlag {
    /// The likelihood is maximized at ±0.999; the estimate is clamped.
    Boundary,
    /// One variable is constant, so the correlation is undefined.
    ZeroMargin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tetrachoric {
    pub r: Option<f64>,
    pub flag: Option<TetrachoricFlag>,
}

/// How attribute indicators are derived from posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationRule {
    Map,
    Threshold(f64),
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Gauss–Legendre nodes and weights on [−1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `P(X ≤ h, Y ≤ k)` for a standard bivariate normal with correlation ρ,
/// from `Φ(h)Φ(k) + (1/2π) ∫_0^{asin ρ} exp(−(h² − 2hk sin θ + k²) / (2 cos² θ)) dθ`
/// evaluated by composite Gauss–Legendre quadrature.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: f64) -> f64 {
    let nd = standard_normal();
    let base = nd.cdf(h) * nd.cdf(k);
    if rho == 0.0 {
        return base;
    }
    let upper = rho.clamp(-1.0, 1.0).asin();
    let (x, w) = gauss_legendre(GL_POINTS);
    let width = upper / PANELS as f64;
    let mut integral = 0.0;
    for p in 0..PANELS {
        let mid = (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            let th = mid + 0.5 * width * xi;
            let c = th.cos();
            integral += wi * (-(h * h - 2.0 * h * k * th.sin() + k * k) / (2.0 * c * c)).exp();
        }
    }
    (base + 0.5 * width * integral / (2.0 * PI)).clamp(0.0, 1.0)
}

/// Maximum-likelihood tetrachoric correlation of a 2×2 table, where
/// `table[i][j]` counts cases with X = i and Y = j.
pub fn tetrachoric_correlation(table: [[f64; 2]; 2]) -> Result<Tetrachoric> {
    if table.iter().flatten().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::Argument("tetrachoric counts must be finite and non-negative".into()));
    }
    let n: f64 = table.iter().flatten().sum();
    if n < 1.0 {
        return Err(Error::Argument("tetrachoric table needs at least one case".into()));
    }
    let x0 = table[0][0] + table[0][1];
    let y0 = table[0][0] + table[1][0];
    if x0 == 0.0 || x0 == n || y0 == 0.0 || y0 == n {
        return Ok(Tetrachoric {
            r: None,
            flag: Some(TetrachoricFlag::ZeroMargin),
        });
    }
    let nd = standard_normal();
    let (px, py) = (x0 / n, y0 / n);
    let (h, k) = (nd.inverse_cdf(px), nd.inverse_cdf(py));
    let loglik = |rho: f64| {
        let p00 = bivariate_normal_cdf(h, k, rho);
        let cells = [[p00, px - p00], [py - p00, 1.0 - px - py + p00]];
        let mut ll = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                if table[i][j] > 0.0 {
                    ll += table[i][j] * cells[i][j].max(1e-300).ln();
                }
            }
        }
        ll
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-RHO_BOUND, RHO_BOUND);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (loglik(c), loglik(d));
    while b - a > SEARCH_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = loglik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = loglik(d);
        }
    }
    let mut r = 0.5 * (a + b);
    let mut flag = None;
    for edge in [-RHO_BOUND, RHO_BOUND] {
        if (r - edge).abs() < 1e-6 || loglik(edge) > loglik(r) {
            r = edge;
            flag = Some(TetrachoricFlag::Boundary);
        }
    }
    Ok(Tetrachoric { r: Some(r), flag })
}

/// K × K tetrachoric matrix of classified attributes at one occasion.
pub fn attribute_correlations(
    summary: &PosteriorSummary,
    rule: ClassificationRule,
    occasion: usize,
) -> Result<Vec<Vec<Tetrachoric>>> {
    if occasion >= summary.occasions {
        return Err(Error::Index(format!("occasion {} of {}", occasion + 1, summary.occasions)));
    }
    let k_count = summary.attributes;
    let bits: Vec<Vec<u8>> = (0..summary.persons.len())
        .map(|n| match rule {
            ClassificationRule::Map => summary.map_bits(n),
            ClassificationRule::Threshold(c) => summary.thresholded_bits(n, c),
        })
        .collect();
    let mut out = vec![
        vec![
            Tetrachoric {
                r: Some(1.0),
                flag: None
            };
            k_count
        ];
        k_count
    ];
    for a in 0..k_count {
        for b in 0..a {
            let mut table = [[0.0; 2]; 2];
            for row in &bits {
                let x = row[occasion * k_count + a] as usize;
                let y = row[occasion * k_count + b] as usize;
                table[x][y] += 1.0;
            }
            let t = tetrachoric_correlation(table)?;
            out[a][b] = t;
            out[b][a] = t;
        }
    }
    Ok(out)
}
