use super::recovery::{recovery_metrics, RecoveryInput, RecoveryReport};
use crate::error::{Error, Result};
use crate::estimation::{fit_em, EmConfig, QuadratureSpec};
use crate::scoring::{score_persons, ScoringOptions};
use crate::simulation::{
    derive_seed, draw_attribute_profiles, draw_person_latents, draw_responses, simulate, SimulatedData,
    SimulationCondition,
};
use serde::{Deserialize, Serialize};

/// Whether replications share one sample of persons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PersonSampling {
    /// General abilities and specific dimensions are drawn once; each
    /// replication redraws attribute profiles and responses. Per-person θ
    /// bias and RMSE are then defined across replications.
    #[default]
    Fixed,
    /// Every replication draws a new sample of persons.
    Fresh,
}

/// Seed of replication `rep` under a master seed.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, 0x5245_5000 + rep as u64)
}

/// Seed of the shared person sample under [`PersonSampling::Fixed`].
pub fn person_sample_seed(master: u64) -> u64 {
    derive_seed(master, 0x5045_5253)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub seed: u64,
    pub report: RecoveryReport,
    pub loglik: f64,
    pub cycles: usize,
    pub converged: bool,
    pub max_trace_decrease: f64,
    pub max_normalization_error: f64,
    /// Largest `|Σ mixing − 1|` over occasions.
    pub max_mixing_error: f64,
}

/// θ recovery per person across replications, averaged over persons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonThetaRecovery {
    /// Per occasion, mean over persons of `|mean_r(θ̂ − θ)|`.
    pub mean_absolute_bias: Vec<f64>,
    /// Per occasion, mean over persons of `√mean_r(θ̂ − θ)²`.
    pub mean_rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub sampling: PersonSampling,
    pub outcomes: Vec<ReplicationOutcome>,
    pub aggregate: RecoveryReport,
    /// Present under [`PersonSampling::Fixed`].
    pub person_theta: Option<PersonThetaRecovery>,
}

/// Simulates, fits and scores `reps` data sets. `condition(seed)` builds
/// the generating model; its seed drives the person draws.
pub fn replicate_condition<F>(
    condition: F,
    reps: usize,
    master_seed: u64,
    sampling: PersonSampling,
    quad: &QuadratureSpec,
    config: &EmConfig,
) -> Result<ReplicationSummary>
where
    F: Fn(u64) -> Result<SimulationCondition>,
{
    if reps == 0 {
        return Err(Error::Argument("at least one replication is required".into()));
    }
    let shared = match sampling {
        PersonSampling::Fixed => {
            let cond = condition(person_sample_seed(master_seed))?;
            let latents = draw_person_latents(&cond)?;
            Some((cond, latents))
        }
        PersonSampling::Fresh => None,
    };
    let mut outcomes = Vec::with_capacity(reps);
    let mut errors: Vec<Vec<[f64; 2]>> = Vec::new();
    for rep in 0..reps {
        let seed = replication_seed(master_seed, rep);
        let (cond, data) = match &shared {
            Some((cond, latents)) => {
                let profiles = draw_attribute_profiles(&latents.theta, &cond.params.structural, seed);
                let responses = draw_responses(&profiles, &latents.gamma, &cond.design, &cond.params.items, seed)?;
                let data = SimulatedData {
                    latents: latents.clone(),
                    profiles,
                    responses,
                };
                (cond.clone(), data)
            }
            None => {
                let cond = condition(seed)?;
                let data = simulate(&cond)?;
                (cond, data)
            }
        };
        let fit = fit_em(&data.responses, &cond.design, quad, config, None)?;
        let options = ScoringOptions {
            pattern_cap_bits: config.pattern_cap_bits,
            contract_priors: config.contract_priors,
            execution: config.execution,
        };
        let scores = score_persons(&data.responses, &cond.design, &fit.params, quad, &options)?;
        let map: Vec<Vec<u8>> = (0..scores.persons.len()).map(|n| scores.map_bits(n)).collect();
        let eap: Vec<Vec<f64>> = scores.persons.iter().map(|p| p.eap_theta.clone()).collect();
        if shared.is_some() {
            errors.resize(eap.len(), vec![[0.0; 2]; cond.design.occasions()]);
            for (n, (e, t)) in eap.iter().zip(&data.latents.theta).enumerate() {
                for (o, slot) in errors[n].iter_mut().enumerate() {
                    let d = e[o] - t[o];
                    slot[0] += d;
                    slot[1] += d * d;
                }
            }
        }
        let report = recovery_metrics(&RecoveryInput {
            design: &cond.design,
            truth: &cond.params,
            estimate: &fit.params,
            true_profiles: &data.profiles,
            estimated_profiles: &map,
            true_theta: &data.latents.theta,
            estimated_theta: &eap,
        })?;
        let max_mixing_error = scores
            .mixing
            .iter()
            .map(|m| (m.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        outcomes.push(ReplicationOutcome {
            seed,
            report,
            loglik: fit.loglik,
            cycles: fit.cycles,
            converged: fit.converged,
            max_trace_decrease: fit.max_trace_decrease(),
            max_normalization_error: fit.max_normalization_error.max(scores.max_normalization_error),
            max_mixing_error,
        });
    }
    let reports: Vec<RecoveryReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let aggregate = RecoveryReport::aggregate(&reports)?;
    let person_theta = shared.map(|_| {
        let r = reps as f64;
        let n = errors.len().max(1) as f64;
        let t_count = errors.first().map_or(0, Vec::len);
        PersonThetaRecovery {
            mean_absolute_bias: (0..t_count).map(|t| errors.iter().map(|e| (e[t][0] / r).abs()).sum::<f64>() / n).collect(),
            mean_rmse: (0..t_count).map(|t| errors.iter().map(|e| (e[t][1] / r).sqrt()).sum::<f64>() / n).collect(),
        }
    });
    Ok(ReplicationSummary {
        sampling,
        outcomes,
        aggregate,
        person_theta,
    })
}
