mod common;

use common::logistic;
use longdina::simulation::{
    draw_attribute_profiles, draw_person_latents, draw_responses, paper_condition, reference_condition, simulate,
    AnchorQuality, SimulatedData, HIGH_QUALITY_ITEM, PAPER_BETA, PAPER_DELTA,
};
use longdina::{Error, ItemParameters, StructuralParameters};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn cov(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

fn corr(x: &[f64], y: &[f64]) -> f64 {
    cov(x, y) / (cov(x, x) * cov(y, y)).sqrt()
}

fn column(rows: &[Vec<f64>], c: usize) -> Vec<f64> {
    rows.iter().map(|r| r[c]).collect()
}

#[test]
fn same_seed_gives_identical_output() {
    let c = paper_condition(2, 200, AnchorQuality::High, 11).unwrap();
    let a = simulate(&c).unwrap();
    let b = simulate(&c).unwrap();
    assert_eq!(a, b);
    let other = simulate(&paper_condition(2, 200, AnchorQuality::High, 12).unwrap()).unwrap();
    assert_ne!(a.responses, other.responses);
}

#[test]
fn output_is_independent_of_thread_count() {
    let c = reference_condition(3, 300, AnchorQuality::Moderate, 5).unwrap();
    let runs: Vec<SimulatedData> = [1, 2, 7].iter().map(|&n| pool(n).install(|| simulate(&c).unwrap())).collect();
    for r in &runs[1..] {
        assert_eq!(r.profiles, runs[0].profiles);
        assert_eq!(r.responses, runs[0].responses);
        for (x, y) in r.latents.theta.iter().flatten().zip(runs[0].latents.theta.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn latent_moments_match_targets() {
    let c = paper_condition(2, 200, AnchorQuality::High, 2024).unwrap();
    let big = longdina::simulation::SimulationCondition { persons: 50_000, ..c };
    let lat = draw_person_latents(&big).unwrap();
    let n = 50_000f64;
    let (t1, t2) = (column(&lat.theta, 0), column(&lat.theta, 1));
    let (v1, v2) = (1.0, 1.5625);
    assert!((mean(&t1) - 0.0).abs() < 3.0 * (v1 / n).sqrt(), "{}", mean(&t1));
    assert!((mean(&t2) - 0.5).abs() < 3.0 * (v2 / n).sqrt(), "{}", mean(&t2));
    assert!((cov(&t1, &t1) - v1).abs() < 3.0 * v1 * (2.0 / n).sqrt());
    assert!((cov(&t2, &t2) - v2).abs() < 3.0 * v2 * (2.0 / n).sqrt());
    assert!((corr(&t1, &t2) - 0.9).abs() < 3.0 * (1.0 - 0.81) / n.sqrt());

    for g in 0..4 {
        let gm = column(&lat.gamma, g);
        assert!(mean(&gm).abs() < 3.0 / n.sqrt());
        assert!((cov(&gm, &gm) - 1.0).abs() < 3.0 * (2.0 / n).sqrt());
        assert!(corr(&gm, &t1).abs() < 3.0 / n.sqrt());
    }
}

#[test]
fn identity_covariance_gives_uncorrelated_abilities() {
    let mut c = paper_condition(2, 200, AnchorQuality::High, 3).unwrap();
    c.persons = 20_000;
    c.params.structural.mu = vec![0.0, 0.0];
    c.params.structural.sigma = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let lat = draw_person_latents(&c).unwrap();
    let r = corr(&column(&lat.theta, 0), &column(&lat.theta, 1));
    assert!(r.abs() < 3.0 / 20_000f64.sqrt(), "{r}");
}

#[test]
fn non_positive_definite_covariance_is_rejected() {
    let mut c = paper_condition(2, 200, AnchorQuality::High, 3).unwrap();
    c.params.structural.sigma = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
    assert!(matches!(draw_person_latents(&c), Err(Error::NotPositiveDefinite)));
}

fn paper_structural() -> StructuralParameters {
    StructuralParameters {
        delta: PAPER_DELTA.to_vec(),
        beta: PAPER_BETA.to_vec(),
        mu: vec![0.0],
        sigma: vec![vec![1.0]],
    }
}

#[test]
fn mastery_rates_at_zero_ability() {
    let n = 40_000;
    let theta = vec![vec![0.0]; n];
    let profiles = draw_attribute_profiles(&theta, &paper_structural(), 17);
    for k in 0..3 {
        let p = logistic(PAPER_BETA[k]);
        let rate = profiles.iter().map(|r| f64::from(r[k])).sum::<f64>() / n as f64;
        assert!((rate - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "k={k} {rate} vs {p}");
    }
    assert!((logistic(-1.0) - 0.269).abs() < 5e-4 && (logistic(1.0) - 0.731).abs() < 5e-4);
    assert_eq!(profiles, draw_attribute_profiles(&theta, &paper_structural(), 17));
}

#[test]
fn high_ability_saturates_mastery() {
    let theta = vec![vec![10.0, 10.0]; 500];
    let profiles = draw_attribute_profiles(&theta, &paper_structural(), 1);
    assert!(profiles.iter().flatten().all(|&a| a == 1));
}

#[test]
fn deterministic_items_follow_eta() {
    let c = paper_condition(2, 200, AnchorQuality::High, 8).unwrap();
    let u = c.design.unique_item_count();
    let items = ItemParameters {
        lambda0: vec![-30.0; u],
        lambda_k: vec![60.0; u],
        slopes: vec![0.8; c.design.group_count()],
    };
    let data = simulate(&c).unwrap();
    let y = draw_responses(&data.profiles, &data.latents.gamma, &c.design, &items, 8).unwrap();
    for n in 0..y.persons() {
        for (i, a) in c.design.administrations().iter().enumerate() {
            let mastered = (0..3).all(|k| a.mask >> k & 1 == 0 || data.profiles[n][a.occasion * 3 + k] == 1);
            assert_eq!(y.get(n, i), Some(mastered));
        }
    }
}

#[test]
fn guess_rate_of_high_quality_items() {
    let c = paper_condition(2, 500, AnchorQuality::High, 21).unwrap();
    let n = 20_000;
    let profiles = vec![vec![0u8; 6]; n];
    let gamma = vec![vec![0.0; 4]; n];
    let y = draw_responses(&profiles, &gamma, &c.design, &c.params.items, 21).unwrap();
    let plain: Vec<usize> = (0..y.items()).filter(|&i| c.design.administrations()[i].group.is_none()).collect();
    let mut ones = 0usize;
    for p in 0..n {
        ones += plain.iter().filter(|&&i| y.get(p, i) == Some(true)).count();
    }
    let trials = (n * plain.len()) as f64;
    let rate = ones as f64 / trials;
    let g = logistic(HIGH_QUALITY_ITEM.0);
    assert!((g - 0.1).abs() < 1e-4);
    assert!((rate - 0.1).abs() < 3.0 * (0.09 / trials).sqrt(), "{rate}");
}

#[test]
fn condition_shapes() {
    let c2 = paper_condition(2, 200, AnchorQuality::High, 1).unwrap();
    let d = simulate(&c2).unwrap();
    assert_eq!((d.responses.persons(), d.responses.items()), (200, 40));
    assert_eq!(d.latents.gamma[0].len(), 4);
    assert_eq!(d.profiles[0].len(), 6);
    let q = c2.design.longitudinal_q();
    assert_eq!((q.len(), q[0].len()), (40, 6));
    assert!(c2.params.items.slopes.iter().all(|&s| s == 0.8));

    let c3 = paper_condition(3, 500, AnchorQuality::Moderate, 1).unwrap();
    let q = c3.design.longitudinal_q();
    assert_eq!((q.len(), q[0].len()), (60, 9));
    assert_eq!(c3.design.group_count(), 4);
    assert!(c3.params.items.slopes.iter().all(|&s| s == 0.8));
    let s = &c3.params.structural;
    assert_eq!(s.mu, vec![0.0, 0.5, 1.0]);
    assert!((s.sigma[2][2] - 1.25f64.powi(4)).abs() < 1e-12);
    assert!((s.sigma[1][2] / (s.sigma[1][1] * s.sigma[2][2]).sqrt() - 0.9).abs() < 1e-12);
    for g in 0..4 {
        let u = c3.design.group_unique(g);
        assert_eq!((c3.params.items.lambda0[u], c3.params.items.lambda_k[u]), (-1.387, 2.774));
    }
}

#[test]
fn unsupported_levels_are_rejected() {
    assert!(paper_condition(2, 300, AnchorQuality::High, 1).is_err());
    assert!(paper_condition(4, 200, AnchorQuality::High, 1).is_err());
    assert!(paper_condition(1, 200, AnchorQuality::High, 1).is_err());
    assert!("medium".parse::<AnchorQuality>().is_err());
    assert_eq!("moderate".parse::<AnchorQuality>().unwrap(), AnchorQuality::Moderate);
}

#[test]
fn anchor_administrations_are_positively_correlated() {
    let c = paper_condition(2, 500, AnchorQuality::High, 33).unwrap();
    let n = 30_000;
    let profiles = vec![vec![0u8; 6]; n];
    let mut big = c.clone();
    big.persons = n;
    let lat = draw_person_latents(&big).unwrap();
    let y = draw_responses(&profiles, &lat.gamma, &c.design, &c.params.items, 33).unwrap();
    let col = |i: usize| -> Vec<f64> { (0..n).map(|p| f64::from(u8::from(y.get(p, i).unwrap()))).collect() };
    // Item 1 of occasion 1 and item 1 of occasion 2 share γ_1; item 5 does not.
    let r_anchor = corr(&col(0), &col(20));
    let r_plain = corr(&col(4), &col(24));
    assert!(r_anchor > 3.0 / (n as f64).sqrt(), "{r_anchor}");
    assert!(r_plain.abs() < 3.0 / (n as f64).sqrt(), "{r_plain}");
}
