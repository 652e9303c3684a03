#![allow(dead_code)]

use longdina::estimation::QuadratureSpec;
use longdina::{AnchorGroup, ItemRef, LongitudinalDesign, QMatrix};

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn q(rows: &[&[u8]]) -> QMatrix {
    QMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

/// Group `id` with zero-based `(occasion, item)` members.
pub fn group(id: usize, members: &[(usize, usize)]) -> AnchorGroup {
    AnchorGroup {
        id,
        members: members.iter().map(|&(occasion, item)| ItemRef { occasion, item }).collect(),
    }
}

/// T=2, K=2, three items per occasion, one anchor group on item 1.
pub fn tiny_design() -> LongitudinalDesign {
    let block = q(&[&[1, 0], &[0, 1], &[1, 1]]);
    LongitudinalDesign::new(vec![block.clone(), block], vec![group(1, &[(0, 0), (1, 0)])]).unwrap()
}

pub fn small_quad() -> QuadratureSpec {
    QuadratureSpec {
        theta_points: 7,
        theta_range: 4.0,
        gamma_points: 9,
        gamma_range: 4.0,
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

use longdina::{ItemParameters, ModelParameters, ResponseMatrix, StructuralParameters};

/// Generating values for [`tiny_design`].
pub fn tiny_params() -> ModelParameters {
    ModelParameters {
        items: ItemParameters {
            lambda0: vec![-1.8, -2.0, -1.5, -2.2, -1.2],
            lambda_k: vec![3.6, 3.9, 3.2, 4.1, 2.9],
            slopes: vec![0.9],
        },
        structural: StructuralParameters {
            delta: vec![1.2, 0.8],
            beta: vec![-0.4, 0.3],
            mu: vec![0.0, 0.6],
            sigma: vec![vec![1.0, 0.7], vec![0.7, 1.3]],
        },
    }
}

/// Posterior quantities from exhaustive enumeration of `(θ node, γ nodes, α)`.
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub loglik: Vec<f64>,
    pub pattern_posterior: Vec<Vec<f64>>,
    pub eap: Vec<Vec<f64>>,
    pub eap_sq: Vec<Vec<f64>>,
    pub item: Vec<[f64; 4]>,
    pub anchor_trials: Vec<[Vec<f64>; 2]>,
    pub anchor_correct: Vec<[Vec<f64>; 2]>,
    pub node_counts: Vec<f64>,
    pub exposure: Vec<Vec<f64>>,
    pub mastery: Vec<Vec<Vec<f64>>>,
}

pub fn equispaced(points: usize, half: f64) -> Vec<f64> {
    let mid = (points / 2) as f64;
    (0..points).map(|i| (i as f64 - mid) * half / mid).collect()
}

fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, v)| r.iter().copied().chain([*v]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

/// Node weights on the product grid, occasion 1 varying fastest.
pub fn mvn_grid(nodes: &[f64], dims: usize, mu: &[f64], sigma: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let q = nodes.len();
    let count = q.pow(dims as u32);
    let mut coords = Vec::with_capacity(count);
    let mut raw = Vec::with_capacity(count);
    for node in 0..count {
        let x: Vec<f64> = (0..dims).map(|t| nodes[(node / q.pow(t as u32)) % q]).collect();
        let d: Vec<f64> = x.iter().zip(mu).map(|(a, m)| a - m).collect();
        let z = solve(sigma, &d);
        raw.push((-0.5 * d.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).exp());
        coords.push(x);
    }
    let total: f64 = raw.iter().sum();
    (coords, raw.iter().map(|w| w / total).collect())
}

pub fn enumerate_posterior(
    data: &ResponseMatrix,
    design: &LongitudinalDesign,
    params: &ModelParameters,
    quad: &QuadratureSpec,
) -> Enumerated {
    let t_count = design.occasions();
    let k_count = design.attributes();
    let m_count = design.group_count();
    let patterns = 1usize << (t_count * k_count);
    let st = &params.structural;
    let it = &params.items;
    let (coords, theta_w) = mvn_grid(&equispaced(quad.theta_points, quad.theta_range), t_count, &st.mu, &st.sigma);
    let qn = quad.theta_points;
    let gn = equispaced(quad.gamma_points, quad.gamma_range);
    let graw: Vec<f64> = gn.iter().map(|x| (-0.5 * x * x).exp()).collect();
    let gsum: f64 = graw.iter().sum();
    let gw: Vec<f64> = graw.iter().map(|w| w / gsum).collect();
    let combos = gn.len().pow(m_count as u32);
    let admins = design.administrations();
    let full = (1u32 << k_count) - 1;

    let mut out = Enumerated {
        loglik: Vec::new(),
        pattern_posterior: Vec::new(),
        eap: Vec::new(),
        eap_sq: Vec::new(),
        item: vec![[0.0; 4]; design.unique_item_count()],
        anchor_trials: vec![[vec![0.0; gn.len()], vec![0.0; gn.len()]]; m_count],
        anchor_correct: vec![[vec![0.0; gn.len()], vec![0.0; gn.len()]]; m_count],
        node_counts: vec![0.0; coords.len()],
        exposure: vec![vec![0.0; qn]; t_count],
        mastery: vec![vec![vec![0.0; qn]; t_count]; k_count],
    };
    for n in 0..data.persons() {
        let mut cells = Vec::with_capacity(coords.len() * combos * patterns);
        for (node, theta) in coords.iter().enumerate() {
            for combo in 0..combos {
                let idx: Vec<usize> = (0..m_count).map(|m| (combo / gn.len().pow(m as u32)) % gn.len()).collect();
                let wg: f64 = idx.iter().map(|&i| gw[i]).product();
                for alpha in 0..patterns {
                    let mut w = theta_w[node] * wg;
                    for t in 0..t_count {
                        for k in 0..k_count {
                            let p = logistic(st.delta[k] * theta[t] + st.beta[k]);
                            w *= if alpha >> (t * k_count + k) & 1 == 1 { p } else { 1.0 - p };
                        }
                    }
                    for (i, a) in admins.iter().enumerate() {
                        if let Some(y) = data.get(n, i) {
                            let occ = (alpha >> (a.occasion * k_count)) as u32 & full;
                            let eta = f64::from(u8::from(occ & a.mask == a.mask));
                            let spec = a.group.map_or(0.0, |g| it.slopes[g] * gn[idx[g]]);
                            let p = logistic(it.lambda0[a.unique] + it.lambda_k[a.unique] * eta + spec);
                            w *= if y { p } else { 1.0 - p };
                        }
                    }
                    cells.push((node, idx.clone(), alpha, w));
                }
            }
        }
        let total: f64 = cells.iter().map(|c| c.3).sum();
        out.loglik.push(total.ln());
        let mut pp = vec![0.0; patterns];
        let mut eap = vec![0.0; t_count];
        let mut eap_sq = vec![0.0; t_count];
        for (node, idx, alpha, w) in &cells {
            let post = w / total;
            pp[*alpha] += post;
            out.node_counts[*node] += post;
            for t in 0..t_count {
                let th = coords[*node][t];
                eap[t] += post * th;
                eap_sq[t] += post * th * th;
                let j = (node / qn.pow(t as u32)) % qn;
                out.exposure[t][j] += post;
                for k in 0..k_count {
                    if alpha >> (t * k_count + k) & 1 == 1 {
                        out.mastery[k][t][j] += post;
                    }
                }
            }
            for (i, a) in admins.iter().enumerate() {
                if let Some(y) = data.get(n, i) {
                    let occ = (*alpha >> (a.occasion * k_count)) as u32 & full;
                    let eta = usize::from(occ & a.mask == a.mask);
                    let r = if y { post } else { 0.0 };
                    match a.group {
                        None => {
                            out.item[a.unique][eta] += post;
                            out.item[a.unique][2 + eta] += r;
                        }
                        Some(g) => {
                            out.anchor_trials[g][eta][idx[g]] += post;
                            out.anchor_correct[g][eta][idx[g]] += r;
                        }
                    }
                }
            }
        }
        out.pattern_posterior.push(pp);
        out.eap.push(eap);
        out.eap_sq.push(eap_sq);
    }
    out
}

/// T=2, K=2, six items per occasion, items 1 and 3 anchored.
pub fn medium_design() -> LongitudinalDesign {
    let block = q(&[&[1, 0], &[0, 1], &[1, 1], &[1, 0], &[0, 1], &[1, 1]]);
    LongitudinalDesign::new(
        vec![block.clone(), block],
        vec![group(1, &[(0, 0), (1, 0)]), group(2, &[(0, 2), (1, 2)])],
    )
    .unwrap()
}

pub fn medium_params() -> ModelParameters {
    let l0 = [-1.8, -2.0, -1.5, -2.2, -1.6, -1.9, -2.1, -1.7, -2.0, -1.4];
    let lk = [3.6, 3.9, 3.2, 4.1, 3.3, 3.8, 4.0, 3.5, 3.7, 3.1];
    ModelParameters {
        items: ItemParameters {
            lambda0: l0.to_vec(),
            lambda_k: lk.to_vec(),
            slopes: vec![0.9, 0.6],
        },
        structural: tiny_params().structural,
    }
}
