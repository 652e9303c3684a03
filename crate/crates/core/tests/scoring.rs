mod common;

use common::{enumerate_posterior, equispaced, logistic, mvn_grid, small_quad, tiny_design, tiny_params};
use longdina::estimation::{Evaluator, QuadratureSpec};
use longdina::exec::Execution;
use longdina::model::MISSING;
use longdina::scoring::{
    argmax_lowest, individual_growth, pattern_posterior, score_persons, PersonScore, PosteriorSummary, ScoringOptions,
};
use longdina::simulation::{simulate, SimulationCondition};
use longdina::{Error, ResponseMatrix};
use proptest::prelude::*;

fn tiny_data(n: usize, seed: u64) -> ResponseMatrix {
    simulate(&SimulationCondition::new(tiny_design(), n, tiny_params(), seed).unwrap()).unwrap().responses
}

#[test]
fn missing_data_returns_the_prior() {
    let design = tiny_design();
    let params = tiny_params();
    let quad = QuadratureSpec::default();
    let data = ResponseMatrix::from_rows(vec![vec![MISSING; 6]; 3]).unwrap();
    let summary = score_persons(&data, &design, &params, &quad, &ScoringOptions::default()).unwrap();
    let st = &params.structural;
    let (coords, w) = mvn_grid(&equispaced(15, 5.0), 2, &st.mu, &st.sigma);
    for p in &summary.persons {
        for t in 0..2 {
            assert!((p.eap_theta[t] - st.mu[t]).abs() < 1e-3, "{:?}", p.eap_theta);
            let grid_mean: f64 = coords.iter().zip(&w).map(|(c, w)| w * c[t]).sum();
            assert!((p.eap_theta[t] - grid_mean).abs() < 1e-12);
            for k in 0..2 {
                let prior: f64 = coords
                    .iter()
                    .zip(&w)
                    .map(|(c, w)| w * logistic(st.delta[k] * c[t] + st.beta[k]))
                    .sum();
                assert!((p.attribute_posterior[t * 2 + k] - prior).abs() < 1e-12);
            }
        }
        assert!(p.log_marginal.abs() < 1e-12);
    }
}

#[test]
fn scores_match_enumerated_joint_posterior() {
    let design = tiny_design();
    let params = tiny_params();
    let quad = small_quad();
    let data = tiny_data(12, 3);
    let summary = score_persons(&data, &design, &params, &quad, &ScoringOptions::default()).unwrap();
    let oracle = enumerate_posterior(&data, &design, &params, &quad);
    let mut mixing = vec![vec![0.0; 4]; 2];
    for (n, p) in summary.persons.iter().enumerate() {
        let post = &oracle.pattern_posterior[n];
        assert!((p.log_marginal - oracle.loglik[n]).abs() <= 1e-10);
        for t in 0..2 {
            assert!((p.eap_theta[t] - oracle.eap[n][t]).abs() <= 1e-10);
            let var = oracle.eap_sq[n][t] - oracle.eap[n][t].powi(2);
            assert!((p.sd_theta[t] - var.sqrt()).abs() <= 1e-10);
            for k in 0..2 {
                let marginal: f64 = (0..16).filter(|a| a >> (2 * t + k) & 1 == 1).map(|a| post[a]).sum();
                assert!((p.attribute_posterior[2 * t + k] - marginal).abs() <= 1e-10);
            }
            for (a, w) in post.iter().enumerate() {
                mixing[t][(a >> (2 * t)) & 3] += w / data.persons() as f64;
            }
        }
        let mut best = 0;
        for a in 1..16 {
            if post[a] > post[best] {
                best = a;
            }
        }
        assert_eq!(p.map_pattern as usize, best);
        assert!((p.map_posterior - post[best]).abs() <= 1e-10);
    }
    for t in 0..2 {
        for a in 0..4 {
            assert!((summary.mixing[t][a] - mixing[t][a]).abs() <= 1e-10);
        }
    }
}

#[test]
fn deterministic_items_recover_the_generating_pattern() {
    let design = tiny_design();
    let mut params = tiny_params();
    params.items.lambda0 = vec![-30.0; 5];
    params.items.lambda_k = vec![60.0; 5];
    params.items.slopes = vec![0.0];
    let sim = simulate(&SimulationCondition::new(design.clone(), 80, params.clone(), 4).unwrap()).unwrap();
    let summary =
        score_persons(&sim.responses, &design, &params, &QuadratureSpec::default(), &ScoringOptions::default()).unwrap();
    for (n, p) in summary.persons.iter().enumerate() {
        assert_eq!(summary.map_bits(n), sim.profiles[n]);
        for (b, &truth) in sim.profiles[n].iter().enumerate() {
            let post = p.attribute_posterior[b];
            assert!(if truth == 1 { post >= 0.999 } else { post <= 0.001 }, "person {n} bit {b}: {post}");
        }
    }
}

#[test]
fn structural_invariants_hold() {
    let design = tiny_design();
    let params = tiny_params();
    let quad = QuadratureSpec::default();
    let data = tiny_data(400, 9);
    let options = ScoringOptions::default();
    let summary = score_persons(&data, &design, &params, &quad, &options).unwrap();
    assert!(summary.max_normalization_error <= 1e-12);
    for occasion in &summary.mixing {
        assert!((occasion.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }
    let ev = Evaluator::new(&design, &params, &quad, 16, true).unwrap();
    for (n, p) in summary.persons.iter().enumerate() {
        assert!(p.eap_theta.iter().all(|&v| (-5.0..=5.0).contains(&v)));
        assert!(p.attribute_posterior.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let (_, post) = pattern_posterior(&ev, data.row(n));
        for b in 0..4 {
            let m: f64 = post.iter().enumerate().filter(|(a, _)| a >> b & 1 == 1).map(|(_, w)| w).sum();
            assert!((m - p.attribute_posterior[b]).abs() <= 1e-12);
        }
    }
    let sequential = ScoringOptions {
        execution: Execution::Sequential,
        contract_priors: false,
        ..options
    };
    let other = score_persons(&data, &design, &params, &quad, &sequential).unwrap();
    for (a, b) in summary.persons.iter().zip(&other.persons) {
        assert_eq!(a.map_pattern, b.map_pattern);
        for (x, y) in a.eap_theta.iter().zip(&b.eap_theta) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn map_ties_go_to_the_lowest_index() {
    assert_eq!(argmax_lowest(&[0.2, 0.5, 0.5, 0.1]).0, 1);
    assert_eq!(argmax_lowest(&[0.3, 0.3]).0, 0);
    assert_eq!(argmax_lowest(&[0.1, 0.2, 0.7]).0, 2);
}

proptest! {
    #[test]
    fn map_is_invariant_to_increasing_transforms(values in prop::collection::vec(1e-6f64..1.0, 1..64), scale in 0.1f64..10.0) {
        let best = argmax_lowest(&values);
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let scaled: Vec<f64> = values.iter().map(|v| scale * v.powi(3) + 2.0).collect();
        prop_assert_eq!(argmax_lowest(&logs), best);
        prop_assert_eq!(argmax_lowest(&scaled), best);
    }
}

fn summary_with(eap: Vec<f64>, pattern: u32, posterior: Vec<f64>, k: usize) -> PosteriorSummary {
    let t = eap.len();
    PosteriorSummary {
        occasions: t,
        attributes: k,
        persons: vec![PersonScore {
            id: "s".into(),
            sd_theta: vec![0.3; t],
            eap_theta: eap,
            attribute_posterior: posterior,
            map_pattern: pattern,
            map_posterior: 0.9,
            log_marginal: -10.0,
        }],
        mixing: vec![vec![0.0; 1 << k]; t],
        max_normalization_error: 0.0,
    }
}

#[test]
fn individual_growth_examples() {
    // α bits: occasion 1 = 010, occasion 2 = 011, occasion 3 = 111 (attribute 1 first).
    let pattern = 0b010 | 0b110 << 3 | 0b111 << 6;
    let posterior = vec![0.1, 0.8, 0.2, 0.4, 0.9, 0.7, 0.95, 0.9, 0.6];
    let s = summary_with(vec![0.37, 0.74, 1.28], pattern, posterior, 3);
    let g = individual_growth(&s, 0, 0.5).unwrap();
    assert!((g.increments[0] - 0.37).abs() < 1e-12 && (g.increments[1] - 0.54).abs() < 1e-12);
    assert_eq!(g.map_transitions, vec!["0→0→1", "1→1→1", "0→1→1"]);
    assert_eq!(g.threshold_transitions, vec!["0→0→1", "1→1→1", "0→1→1"]);
    assert_eq!(g.map_occasion_patterns, vec!["010", "011", "111"]);

    let s = summary_with(vec![-1.04, -0.94, -0.90], 0, vec![0.2; 9], 3);
    let g = individual_growth(&s, 0, 0.5).unwrap();
    assert!((g.increments[0] - 0.10).abs() < 1e-12 && (g.increments[1] - 0.04).abs() < 1e-12);

    let s = summary_with(vec![0.5, 0.5], 0, vec![0.2; 4], 2);
    assert_eq!(individual_growth(&s, 0, 0.5).unwrap().increments, vec![0.0]);
}

#[test]
fn growth_rejects_single_occasion_and_bad_index() {
    let s = summary_with(vec![0.5], 0, vec![0.2; 2], 2);
    assert!(matches!(individual_growth(&s, 0, 0.5), Err(Error::Argument(_))));
    let s = summary_with(vec![0.5, 0.6], 0, vec![0.2; 4], 2);
    assert!(matches!(individual_growth(&s, 3, 0.5), Err(Error::Index(_))));
}
