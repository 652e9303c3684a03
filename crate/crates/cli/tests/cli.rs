use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn longdina(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longdina")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = longdina(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn simulate(dir: &Path, name: &str, seed: &str, persons: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    ok(&["simulate", "--T", "2", "--N", persons, "--seed", seed, "--out", out.to_str().unwrap()]);
    out
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a", "7", "200");
    let b = simulate(dir.path(), "b", "7", "200");
    let c = simulate(dir.path(), "c", "8", "200");
    for f in ["responses.csv", "truth/latents.csv", "truth/profiles.csv", "truth/items.csv", "design/q_t1.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    assert_ne!(read(&a.join("responses.csv")), read(&c.join("responses.csv")));
    let responses = read(&a.join("responses.csv"));
    assert_eq!(responses.lines().count(), 201);
    assert_eq!(responses.lines().next().unwrap().split(',').count(), 41);
    let meta = json(&a.join("condition.json"));
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["anchor_quality"], "high");
    let project = json(&a.join("project.json"));
    assert_eq!(project["data"], "responses.csv");
}

#[test]
fn failures_emit_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let usage = longdina(&["simulate", "--T", "two", "--out", "x"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_kind(&usage), "usage");

    let missing = dir.path().join("missing.csv");
    let out = longdina(&["fit", "--q", missing.to_str().unwrap(), "--data", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "argument");

    let bad_level = longdina(&["replicate", "--N", "300", "--reps", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(!bad_level.status.success());
    assert!(!error_kind(&bad_level).is_empty());

    let sim = simulate(dir.path(), "sim", "3", "200");
    let responses = sim.join("responses.csv");
    let text = read(&responses).replacen("\n1,0,", "\n1,2,", 1).replacen("\n1,1,", "\n1,2,", 1);
    std::fs::write(&responses, text).unwrap();
    let out = longdina(&["fit", "--config", sim.join("project.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "parse");
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 2"));
}

#[test]
fn fit_score_and_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "sim", "11", "200");
    let config = sim.join("project.json");
    let cfg = config.to_str().unwrap();
    let quad = ["--theta-points", "9", "--gamma-points", "11"];
    let complete = dir.path().join("complete");
    let simple = dir.path().join("simple");
    for (variant, out) in [("complete", &complete), ("simple", &simple)] {
        let mut args = vec!["fit", "--config", cfg, "--variant", variant, "--out", out.to_str().unwrap()];
        args.extend(quad);
        ok(&args);
    }
    let full = json(&complete.join("fit_summary.json"));
    let restricted = json(&simple.join("fit_summary.json"));
    let np = |v: &Value| v["parameters"].as_u64().unwrap();
    // The reference design at T=2 has four anchor groups.
    assert_eq!(np(&full) - np(&restricted), 4);
    for s in [&full, &restricted] {
        let (neg2ll, k, n) = (s["neg2ll"].as_f64().unwrap(), np(s) as f64, s["persons"].as_f64().unwrap());
        assert!((s["aic"].as_f64().unwrap() - (neg2ll + 2.0 * k)).abs() < 1e-9);
        assert!((s["bic"].as_f64().unwrap() - (neg2ll + k * n.ln())).abs() < 1e-9);
    }
    let trace: Vec<f64> = read(&complete.join("trace.txt")).lines().map(|l| l.parse().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    assert!(read(&complete.join("items.csv")).starts_with("item,administrations,lambda0,lambdaK,guess,slip,group,slope"));
    let report = read(&complete.join("fit_report.csv"));
    assert!(report.lines().nth(1).unwrap().split(',').nth(4).unwrap().split('.').nth(1).unwrap().len() == 2);

    let reports = dir.path().join("reports");
    ok(&[
        "report",
        "--lrt",
        simple.join("fit_summary.json").to_str().unwrap(),
        complete.join("fit_summary.json").to_str().unwrap(),
        "--params",
        complete.join("parameters.json").to_str().unwrap(),
        "--out",
        reports.to_str().unwrap(),
    ]);
    let lrt = read(&reports.join("lrt.csv"));
    let fields: Vec<&str> = lrt.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[1], "4");
    let stat: f64 = fields[0].parse().unwrap();
    let expected = restricted["neg2ll"].as_f64().unwrap() - full["neg2ll"].as_f64().unwrap();
    assert!((stat - expected).abs() < 1e-9);
    assert!(read(&reports.join("growth.csv")).starts_with("step,mean_growth,scale_growth\n1->2,"));
    assert!(reports.join("ability.csv").is_file());

    let scores = dir.path().join("scores");
    let mut args = vec![
        "score",
        "--config",
        cfg,
        "--params",
        complete.to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
    ];
    args.extend(quad);
    ok(&args);
    assert_eq!(read(&scores.join("scores.csv")).lines().count(), 201);
    ok(&[
        "report",
        "--scores",
        scores.join("scores.json").to_str().unwrap(),
        "--out",
        reports.to_str().unwrap(),
    ]);
    for f in ["mastery.csv", "mixing.csv", "tetrachoric.csv", "individual_growth.csv"] {
        assert!(reports.join(f).is_file(), "{f}");
    }
    let growth = read(&reports.join("individual_growth.csv"));
    assert!(growth.starts_with("id,theta_1,theta_2,growth_1_2,map_a1,map_a2,map_a3,threshold_a1"));
    assert_eq!(growth.lines().count(), 201);
}

#[test]
fn replicate_writes_aggregate_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep");
    let args = [
        "replicate", "--T", "2", "--N", "200", "--reps", "2", "--seed", "5", "--theta-points", "9", "--gamma-points",
        "11", "--max-cycles", "200", "--out",
    ];
    let mut a = args.to_vec();
    a.push(out.to_str().unwrap());
    ok(&a);
    let recovery = read(&out.join("recovery.csv"));
    assert_eq!(
        recovery.lines().next().unwrap(),
        "T,N,QA,t,ACCR_a1,ACCR_a2,ACCR_a3,PCCR,longitudinal_PCCR"
    );
    assert!(recovery.lines().nth(1).unwrap().starts_with("2,200,high,1,"));
    assert_eq!(read(&out.join("theta.csv")).lines().next().unwrap(), "T,N,QA,t,MA_bias,M_RMSE,sample_RMSE");
    assert_eq!(
        read(&out.join("growth.csv")).lines().next().unwrap(),
        "T,N,QA,step,mean_bias,mean_RMSE,scale_bias,scale_RMSE"
    );
    let items = read(&out.join("items.csv"));
    assert_eq!(items.lines().count(), 6);
    let summary = json(&out.join("replications.json"));
    assert_eq!(summary["outcomes"].as_array().unwrap().len(), 2);

    let again = dir.path().join("rep2");
    let mut a = vec!["replicate", "--sequential"];
    a.extend(&args[1..]);
    a.push(again.to_str().unwrap());
    ok(&a);
    assert_eq!(read(&out.join("replications.json")), read(&again.join("replications.json")));
}
