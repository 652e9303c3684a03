//! Seeded data generation from the three-layer model.
//!
//! Every random quantity for person `n` comes from its own ChaCha8 stream
//! (`set_stream(n)`) under a key derived from the condition seed and the
//! purpose of the draw, so output does not depend on thread count or on the
//! order in which persons are processed.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::io::design_from_texts;
use crate::linalg;
use crate::model::kernels::{attribute_mastery_probability, response_probability};
use crate::model::{
    ItemParameters, LongitudinalDesign, ModelParameters, ResponseMatrix, StructuralParameters,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

const SIM_Q: [&str; 3] = [
    include_str!("../data/sim_q_t1.csv"),
    include_str!("../data/sim_q_t2.csv"),
    include_str!("../data/sim_q_t3.csv"),
];
const STANDIN_Q: [&str; 3] = [
    include_str!("../data/standin_q_t1.csv"),
    include_str!("../data/standin_q_t2.csv"),
    include_str!("../data/standin_q_t3.csv"),
];
const STANDIN_ANCHORS: &str = include_str!("../data/standin_anchors.csv");

const TAG_LATENT: u64 = 1;
const TAG_PROFILE: u64 = 2;
const TAG_RESPONSE: u64 = 3;

/// Log-linear parameters giving g ≈ s ≈ 0.1.
pub const HIGH_QUALITY_ITEM: (f64, f64) = (-2.197, 4.394);
/// Log-linear parameters giving g ≈ s ≈ 0.2.
pub const MODERATE_QUALITY_ITEM: (f64, f64) = (-1.387, 2.774);
pub const PAPER_ANCHOR_SLOPE: f64 = 0.8;
pub const PAPER_DELTA: [f64; 3] = [1.0, 1.25, 1.5];
pub const PAPER_BETA: [f64; 3] = [-1.0, 0.0, 1.0];
pub const PAPER_CORRELATION: f64 = 0.9;
pub const PAPER_MEAN_STEP: f64 = 0.5;
pub const PAPER_SCALE_STEP: f64 = 1.25;

/// Quality level of the anchor items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorQuality {
    High,
    Moderate,
}

impl AnchorQuality {
    pub fn loglinear(self) -> (f64, f64) {
        match self {
            AnchorQuality::High => HIGH_QUALITY_ITEM,
            AnchorQuality::Moderate => MODERATE_QUALITY_ITEM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnchorQuality::High => "high",
            AnchorQuality::Moderate => "moderate",
        }
    }
}

impl FromStr for AnchorQuality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(AnchorQuality::High),
            "moderate" => Ok(AnchorQuality::Moderate),
            _ => Err(Error::Argument(format!("anchor quality must be high or moderate, not {s:?}"))),
        }
    }
}

/// A fully specified generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationCondition {
    pub design: LongitudinalDesign,
    pub persons: usize,
    /// True parameters; `params.items.slopes` are the specific-dimension slopes.
    pub params: ModelParameters,
    pub seed: u64,
}

impl SimulationCondition {
    pub fn new(design: LongitudinalDesign, persons: usize, params: ModelParameters, seed: u64) -> Result<Self> {
        params.validate(&design)?;
        Ok(SimulationCondition {
            design,
            persons,
            params,
            seed,
        })
    }
}

/// Person-level latent draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latents {
    /// N × T general abilities.
    pub theta: Vec<Vec<f64>>,
    /// N × M specific-dimension effects.
    pub gamma: Vec<Vec<f64>>,
}

/// Everything generated for one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub latents: Latents,
    /// N × (T·K) attribute indicators; column `t·K + k`.
    pub profiles: Vec<Vec<u8>>,
    pub responses: ResponseMatrix,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for `(seed, tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Stream for one person and purpose.
pub fn person_rng(seed: u64, purpose: u64, person: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose));
    rng.set_stream(person as u64);
    rng
}

/// θ ~ MVN(μ, Σ) through the Cholesky factor; γ ~ N(0, 1) independently.
pub fn draw_person_latents(condition: &SimulationCondition) -> Result<Latents> {
    let s = &condition.params.structural;
    let l = linalg::cholesky(&s.sigma)?;
    let t_count = s.mu.len();
    let m_count = condition.design.group_count();
    let rows = map_indexed(condition.persons, Execution::default(), |n| {
        let mut rng = person_rng(condition.seed, TAG_LATENT, n);
        let z: Vec<f64> = (0..t_count).map(|_| rng.sample(StandardNormal)).collect();
        let theta: Vec<f64> = (0..t_count)
            .map(|t| s.mu[t] + (0..=t).map(|j| l[t][j] * z[j]).sum::<f64>())
            .collect();
        let gamma: Vec<f64> = (0..m_count).map(|_| rng.sample(StandardNormal)).collect();
        (theta, gamma)
    });
    let (theta, gamma) = rows.into_iter().unzip();
    Ok(Latents { theta, gamma })
}

/// Independent Bernoulli mastery draws given θ.
pub fn draw_attribute_profiles(theta: &[Vec<f64>], structural: &StructuralParameters, seed: u64) -> Vec<Vec<u8>> {
    let k_count = structural.delta.len();
    map_indexed(theta.len(), Execution::default(), |n| {
        let mut rng = person_rng(seed, TAG_PROFILE, n);
        let mut row = Vec::with_capacity(theta[n].len() * k_count);
        for &th in &theta[n] {
            for k in 0..k_count {
                let p = attribute_mastery_probability(structural.delta[k], structural.beta[k], th);
                let u: f64 = rng.random();
                row.push(u8::from(u < p));
            }
        }
        row
    })
}

/// Responses for every administration; all administrations of one anchor
/// group use the person's single γ draw for that group.
pub fn draw_responses(
    profiles: &[Vec<u8>],
    gamma: &[Vec<f64>],
    design: &LongitudinalDesign,
    items: &ItemParameters,
    seed: u64,
) -> Result<ResponseMatrix> {
    let k_count = design.attributes();
    let t_count = design.occasions();
    if gamma.len() != profiles.len() {
        return Err(Error::Data(format!("{} profile rows but {} gamma rows", profiles.len(), gamma.len())));
    }
    for (n, (p, g)) in profiles.iter().zip(gamma).enumerate() {
        if p.len() != t_count * k_count || g.len() != design.group_count() {
            return Err(Error::Data(format!("person {} has inconsistent latent dimensions", n + 1)));
        }
    }
    let rows = map_indexed(profiles.len(), Execution::default(), |n| {
        let mut rng = person_rng(seed, TAG_RESPONSE, n);
        let masks: Vec<u32> = (0..t_count)
            .map(|t| (0..k_count).fold(0u32, |m, k| m | (u32::from(profiles[n][t * k_count + k]) << k)))
            .collect();
        design
            .administrations()
            .iter()
            .map(|a| {
                let eta = masks[a.occasion] & a.mask == a.mask;
                let (slope, g) = match a.group {
                    Some(g) => (items.slopes[g], gamma[n][g]),
                    None => (0.0, 0.0),
                };
                let p = response_probability(items.lambda0[a.unique], items.lambda_k[a.unique], eta, slope, g);
                let u: f64 = rng.random();
                u8::from(u < p)
            })
            .collect::<Vec<u8>>()
    });
    ResponseMatrix::from_rows(rows)
}

/// Runs all three generation steps.
pub fn simulate(condition: &SimulationCondition) -> Result<SimulatedData> {
    let latents = draw_person_latents(condition)?;
    let profiles = draw_attribute_profiles(&latents.theta, &condition.params.structural, condition.seed);
    let responses = draw_responses(
        &profiles,
        &latents.gamma,
        &condition.design,
        &condition.params.items,
        condition.seed,
    )?;
    Ok(SimulatedData {
        latents,
        profiles,
        responses,
    })
}

/// The reference simulation design: 20 items and 3 attributes per occasion,
/// items 1–4 of every occasion forming four anchor groups that span all
/// occasions.
pub fn paper_design(occasions: usize) -> Result<LongitudinalDesign> {
    if !(2..=3).contains(&occasions) {
        return Err(Error::Argument(format!("reference design has 2 or 3 occasions, not {occasions}")));
    }
    let names = ["sim_q_t1.csv", "sim_q_t2.csv", "sim_q_t3.csv"];
    let q: Vec<(&str, &str)> = (0..occasions).map(|t| (SIM_Q[t], names[t])).collect();
    let mut anchors = String::from("group,occasion,item\n");
    for g in 1..=4 {
        for t in 1..=occasions {
            anchors.push_str(&format!("{g},{t},{g}\n"));
        }
    }
    design_from_texts(&q, Some((&anchors, "reference anchors")))
}

/// Covariance with correlation `rho` between all occasions and standard
/// deviation `scale^t` at occasion t (0-based).
pub fn growth_covariance(occasions: usize, rho: f64, scale: f64) -> Vec<Vec<f64>> {
    let sd: Vec<f64> = (0..occasions).map(|t| scale.powi(t as i32)).collect();
    (0..occasions)
        .map(|a| {
            (0..occasions)
                .map(|b| if a == b { sd[a] * sd[a] } else { rho * sd[a] * sd[b] })
                .collect()
        })
        .collect()
}

/// One cell of the reference simulation study.
pub fn paper_condition(occasions: usize, persons: usize, quality: AnchorQuality, seed: u64) -> Result<SimulationCondition> {
    if persons != 200 && persons != 500 {
        return Err(Error::Argument(format!("reference sample sizes are 200 and 500, not {persons}")));
    }
    reference_condition(occasions, persons, quality, seed)
}

/// [`paper_condition`] without the restriction on `persons`.
pub fn reference_condition(occasions: usize, persons: usize, quality: AnchorQuality, seed: u64) -> Result<SimulationCondition> {
    let design = paper_design(occasions)?;
    let u_count = design.unique_item_count();
    let mut lambda0 = vec![HIGH_QUALITY_ITEM.0; u_count];
    let mut lambda_k = vec![HIGH_QUALITY_ITEM.1; u_count];
    let (a0, ak) = quality.loglinear();
    for g in 0..design.group_count() {
        let u = design.group_unique(g);
        lambda0[u] = a0;
        lambda_k[u] = ak;
    }
    let params = ModelParameters {
        items: ItemParameters {
            lambda0,
            lambda_k,
            slopes: vec![PAPER_ANCHOR_SLOPE; design.group_count()],
        },
        structural: StructuralParameters {
            delta: PAPER_DELTA.to_vec(),
            beta: PAPER_BETA.to_vec(),
            mu: (0..occasions).map(|t| PAPER_MEAN_STEP * t as f64).collect(),
            sigma: growth_covariance(occasions, PAPER_CORRELATION, PAPER_SCALE_STEP),
        },
    };
    SimulationCondition::new(design, persons, params, seed)
}

/// Two occasions, high-quality anchors, no growth: μ = 0 and unit variances
/// with correlation 0.9.
pub fn null_growth_condition(persons: usize, seed: u64) -> Result<SimulationCondition> {
    let mut c = reference_condition(2, persons, AnchorQuality::High, seed)?;
    c.params.structural.mu = vec![0.0, 0.0];
    c.params.structural.sigma = growth_covariance(2, PAPER_CORRELATION, 1.0);
    Ok(c)
}

/// Synthetic design shaped like a three-wave classroom test: 15, 15 and 17
/// items, 4 attributes and 7 anchor groups.
pub fn standin_design() -> Result<LongitudinalDesign> {
    design_from_texts(
        &[
            (STANDIN_Q[0], "standin_q_t1.csv"),
            (STANDIN_Q[1], "standin_q_t2.csv"),
            (STANDIN_Q[2], "standin_q_t3.csv"),
        ],
        Some((STANDIN_ANCHORS, "standin_anchors.csv")),
    )
}

/// Raw text of the embedded stand-in files: three Q-matrices then the anchor map.
pub fn standin_files() -> [&'static str; 4] {
    [STANDIN_Q[0], STANDIN_Q[1], STANDIN_Q[2], STANDIN_ANCHORS]
}

/// Raw text of the embedded reference Q-matrices.
pub fn reference_q_files() -> [&'static str; 3] {
    SIM_Q
}

/// Generating model for the stand-in design.
pub fn standin_condition(persons: usize, seed: u64) -> Result<SimulationCondition> {
    let design = standin_design()?;
    let u_count = design.unique_item_count();
    let params = ModelParameters {
        items: ItemParameters {
            lambda0: vec![HIGH_QUALITY_ITEM.0; u_count],
            lambda_k: vec![HIGH_QUALITY_ITEM.1; u_count],
            slopes: vec![PAPER_ANCHOR_SLOPE; design.group_count()],
        },
        structural: StructuralParameters {
            delta: vec![1.0, 1.2, 1.4, 1.1],
            beta: vec![-0.5, 0.0, 0.5, 0.25],
            mu: vec![0.0, 0.34, 0.76],
            sigma: vec![vec![1.0, 1.10, 1.43], vec![1.10, 1.34, 1.56], vec![1.43, 1.56, 2.44]],
        },
    };
    SimulationCondition::new(design, persons, params, seed)
}
