use clap::{Args, Parser, Subcommand, ValueEnum};
use longdina::analytics::{
    attribute_correlations, covariance_to_correlation, fit_indices, fit_summary, likelihood_ratio_test,
    mastery_summary, overall_growth, replicate_condition, ClassificationRule, FitSummary, PersonSampling,
    ReplicationSummary, ITEM_CLASSES,
};
use longdina::estimation::{fit_em, standard_errors_fd, EmConfig, QuadratureSpec};
use longdina::exec::Execution;
use longdina::io::{self, exact, fixed2, ProjectConfig};
use longdina::scoring::{individual_growth, score_persons, PosteriorSummary, ScoringOptions, MASTERY_THRESHOLD};
use longdina::simulation::{self, AnchorQuality, SimulationCondition};
use longdina::{Error, LongitudinalDesign, ModelParameters, ModelVariant, ResponseMatrix, Result, SlopeConstraint};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "longdina", version, about = "Longitudinal higher-order DINA modelling")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate responses, true parameters and true latents.
    Simulate(SimulateArgs),
    /// Estimate parameters by EM.
    Fit(FitArgs),
    /// Score persons under fitted parameters.
    Score(ScoreArgs),
    /// Growth, mastery, mixing and correlation tables.
    Report(ReportArgs),
    /// Run a reference simulation cell for several replications.
    Replicate(ReplicateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    Complete,
    Simple,
}

impl From<Variant> for ModelVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Complete => ModelVariant::Complete,
            Variant::Simple => ModelVariant::Simple,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quality {
    High,
    Moderate,
}

impl From<Quality> for AnchorQuality {
    fn from(q: Quality) -> Self {
        match q {
            Quality::High => AnchorQuality::High,
            Quality::Moderate => AnchorQuality::Moderate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Slopes {
    Free,
    Common,
    Unit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DesignKind {
    /// The 20-item, 3-attribute reference design.
    Reference,
    /// The synthetic 15/15/17-item, 4-attribute, 7-group design.
    Standin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sampling {
    Fixed,
    Fresh,
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Project configuration (JSON). Flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Q-matrix files, one per occasion.
    #[arg(long = "q", num_args = 1..)]
    q_files: Vec<PathBuf>,
    /// Anchor map `group,occasion,item`.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// Response file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    missing: Option<String>,
    /// Minimum observed responses per person and occasion.
    #[arg(long)]
    min_observed: Option<usize>,
}

#[derive(Debug, Args)]
struct QuadArgs {
    /// θ nodes per occasion (odd).
    #[arg(long)]
    theta_points: Option<usize>,
    /// γ nodes (odd).
    #[arg(long)]
    gamma_points: Option<usize>,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long = "T", default_value_t = 2)]
    occasions: usize,
    #[arg(long = "N", default_value_t = 500)]
    persons: usize,
    #[arg(long = "QA", value_enum, default_value_t = Quality::High)]
    quality: Quality,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DesignKind::Reference)]
    design: DesignKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    #[arg(long, value_enum)]
    slopes: Option<Slopes>,
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Convergence tolerance on the largest parameter change.
    #[arg(long)]
    tol: Option<f64>,
    /// Also compute finite-difference standard errors.
    #[arg(long)]
    se: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    quad: QuadArgs,
    /// Directory holding items.csv and structural.csv.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// parameters.json written by `fit`.
    #[arg(long)]
    params: Option<PathBuf>,
    /// scores.json written by `score`.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Posterior threshold for reporting mastery.
    #[arg(long, default_value_t = MASTERY_THRESHOLD)]
    threshold: f64,
    /// Restricted and full fit_summary.json files for a likelihood ratio test.
    #[arg(long, num_args = 2, value_names = ["RESTRICTED", "FULL"])]
    lrt: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReplicateArgs {
    #[arg(long = "T", default_value_t = 2)]
    occasions: usize,
    #[arg(long = "N", default_value_t = 500)]
    persons: usize,
    #[arg(long = "QA", value_enum, default_value_t = Quality::High)]
    quality: Quality,
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Sampling::Fixed)]
    sampling: Sampling,
    /// Accept any sample size instead of the reference levels 200 and 500.
    #[arg(long)]
    any_size: bool,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long)]
    max_cycles: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::Replicate(a) => replicate(a),
    }
}

fn project(args: &DesignArgs, quad: &QuadArgs) -> Result<ProjectConfig> {
    let mut cfg = match &args.config {
        Some(p) => ProjectConfig::load(p)?,
        None => ProjectConfig::default(),
    };
    if !args.q_files.is_empty() {
        cfg.q_files = args.q_files.clone();
    }
    if args.anchors.is_some() {
        cfg.anchor_file = args.anchors.clone();
    }
    if args.data.is_some() {
        cfg.data = args.data.clone();
    }
    if let Some(m) = &args.missing {
        cfg.missing_token = m.clone();
    }
    if let Some(m) = args.min_observed {
        cfg.min_observed = m;
    }
    apply_quad(&mut cfg.quadrature, &mut cfg.em, quad);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_quad(spec: &mut QuadratureSpec, em: &mut EmConfig, quad: &QuadArgs) {
    if let Some(q) = quad.theta_points {
        spec.theta_points = q;
    }
    if let Some(q) = quad.gamma_points {
        spec.gamma_points = q;
    }
    if quad.sequential {
        em.execution = Execution::Sequential;
    }
}

fn load_inputs(cfg: &ProjectConfig) -> Result<(LongitudinalDesign, ResponseMatrix)> {
    let design = io::load_design(&cfg.q_files, cfg.anchor_file.as_deref())?;
    let data_path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Argument("no response file given (--data or config `data`)".into()))?;
    let data = io::load_responses(data_path, &design, &cfg.missing_token, cfg.min_observed)?;
    Ok((design, data))
}

fn write_condition(out: &Path, cond: &SimulationCondition, meta: serde_json::Value) -> Result<()> {
    let data = simulation::simulate(cond)?;
    let (q, anchors) = io::save_design(&out.join("design"), &cond.design)?;
    io::write_responses(&out.join("responses.csv"), &data.responses, io::DEFAULT_MISSING_TOKEN)?;
    io::save_parameters(&out.join("truth"), &cond.design, &cond.params)?;
    io::write_text(&out.join("truth").join("latents.csv"), &io::format_latents(&data.latents))?;
    io::write_text(
        &out.join("truth").join("profiles.csv"),
        &io::format_profiles(&data.profiles, cond.design.attributes()),
    )?;
    let rel = |p: &Path| p.strip_prefix(out).unwrap_or(p).to_path_buf();
    let config = ProjectConfig {
        q_files: q.iter().map(|p| rel(p)).collect(),
        anchor_file: anchors.as_deref().map(rel),
        data: Some(PathBuf::from("responses.csv")),
        output_dir: PathBuf::from("fit"),
        seed: cond.seed,
        ..ProjectConfig::default()
    };
    io::write_json(&out.join("project.json"), &config)?;
    io::write_json(&out.join("condition.json"), &meta)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cond = match a.design {
        DesignKind::Reference => simulation::reference_condition(a.occasions, a.persons, a.quality.into(), a.seed)?,
        DesignKind::Standin => simulation::standin_condition(a.persons, a.seed)?,
    };
    let meta = serde_json::json!({
        "design": format!("{:?}", a.design).to_lowercase(),
        "occasions": cond.design.occasions(),
        "persons": a.persons,
        "anchor_quality": AnchorQuality::from(a.quality).as_str(),
        "seed": a.seed,
    });
    write_condition(&a.out, &cond, meta)
}

fn fit(a: FitArgs) -> Result<()> {
    let mut cfg = project(&a.design, &a.quad)?;
    if let Some(v) = a.variant {
        cfg.variant = v.into();
    }
    if let Some(s) = a.slopes {
        cfg.em.slope_constraint = match s {
            Slopes::Free => SlopeConstraint::Free,
            Slopes::Common => SlopeConstraint::Common,
            Slopes::Unit => SlopeConstraint::Unit,
        };
    }
    if let Some(m) = a.max_cycles {
        cfg.em.max_cycles = m;
    }
    if let Some(t) = a.tol {
        cfg.em.param_change_tol = t;
    }
    let out = a.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let em = cfg.em_config();
    em.validate()?;
    let (design, data) = load_inputs(&cfg)?;
    let result = fit_em(&data, &design, &cfg.quadrature, &em, None)?;
    let summary = fit_summary(&result, &design, data.persons(), em.slope_constraint);
    io::save_parameters(&out, &design, &result.params)?;
    io::write_json(&out.join("fit.json"), &result)?;
    io::write_json(&out.join("fit_summary.json"), &summary)?;
    io::write_text(&out.join("fit_summary.csv"), &format_fit_summary(&summary, exact))?;
    io::write_text(&out.join("fit_report.csv"), &format_fit_summary(&summary, fixed2))?;
    let trace: String = result.trace.iter().map(|v| format!("{}\n", exact(*v))).collect();
    io::write_text(&out.join("trace.txt"), &trace)?;
    if a.se {
        let ses = standard_errors_fd(&data, &design, &result, &cfg.quadrature, &em, 1e-4)?;
        let rows: Vec<Vec<String>> = ses
            .iter()
            .map(|s| {
                vec![
                    s.name.clone(),
                    exact(s.estimate),
                    s.se.map(exact).unwrap_or_default(),
                    s.flag.clone().unwrap_or_default(),
                ]
            })
            .collect();
        io::write_text(
            &out.join("standard_errors.csv"),
            &io::format_table(&["parameter", "estimate", "se", "flag"], &rows),
        )?;
    }
    Ok(())
}

fn format_fit_summary(s: &FitSummary, num: fn(f64) -> String) -> String {
    let variant = match s.variant {
        ModelVariant::Complete => "complete",
        ModelVariant::Simple => "simple",
    };
    io::format_table(
        &["variant", "neg2ll", "parameters", "persons", "aic", "bic"],
        &[vec![
            variant.to_string(),
            num(s.neg2ll),
            s.parameters.to_string(),
            s.persons.to_string(),
            num(s.aic),
            num(s.bic),
        ]],
    )
}

fn score(a: ScoreArgs) -> Result<()> {
    let cfg = project(&a.design, &a.quad)?;
    let out = a.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let (design, data) = load_inputs(&cfg)?;
    let params = io::load_parameters(&a.params, &design)?;
    let options = ScoringOptions {
        pattern_cap_bits: cfg.em.pattern_cap_bits,
        contract_priors: cfg.em.contract_priors,
        execution: cfg.em.execution,
    };
    let summary = score_persons(&data, &design, &params, &cfg.quadrature, &options)?;
    io::write_text(&out.join("scores.csv"), &io::format_scores(&summary))?;
    io::write_text(&out.join("mixing.csv"), &io::format_mixing(&summary.mixing, summary.attributes))?;
    io::write_json(&out.join("scores.json"), &summary)
}

fn report(a: ReportArgs) -> Result<()> {
    if a.params.is_none() && a.scores.is_none() && a.lrt.is_empty() {
        return Err(Error::Argument("report needs --params, --scores or --lrt".into()));
    }
    let out = &a.out;
    if let Some(p) = &a.params {
        let params: ModelParameters = io::read_json(p)?;
        let s = &params.structural;
        let growth = overall_growth(&s.mu, &s.variances())?;
        let mut rows = Vec::new();
        for (t, (m, r)) in growth.mean_increments.iter().zip(&growth.scale_ratios).enumerate() {
            rows.push(vec![format!("{}->{}", t + 1, t + 2), exact(*m), exact(*r)]);
        }
        io::write_text(
            &out.join("growth.csv"),
            &io::format_table(&["step", "mean_growth", "scale_growth"], &rows),
        )?;
        let corr = covariance_to_correlation(&s.sigma)?;
        let mut cells = Vec::new();
        for (i, row) in s.sigma.iter().enumerate() {
            cells.push((vec![(i + 1).to_string(), "mean".into(), String::new()], s.mu[i]));
            for (j, v) in row.iter().enumerate() {
                cells.push((vec![(i + 1).to_string(), "covariance".into(), (j + 1).to_string()], *v));
                cells.push((vec![(i + 1).to_string(), "correlation".into(), (j + 1).to_string()], corr[i][j]));
            }
        }
        io::write_text(&out.join("ability.csv"), &io::format_long_table(&["occasion", "statistic", "with"], &cells))?;
    }
    if let Some(p) = &a.scores {
        let summary: PosteriorSummary = io::read_json(p)?;
        write_score_reports(out, &summary, a.threshold)?;
    }
    if !a.lrt.is_empty() {
        let restricted: FitSummary = io::read_json(&a.lrt[0])?;
        let full: FitSummary = io::read_json(&a.lrt[1])?;
        let df = full.parameters.checked_sub(restricted.parameters).filter(|d| *d > 0).ok_or_else(|| {
            Error::Argument("the full model must have more parameters than the restricted model".into())
        })?;
        let test = likelihood_ratio_test(restricted.neg2ll, full.neg2ll, df)?;
        let rows: Vec<Vec<String>> = [&restricted, &full]
            .iter()
            .map(|s| {
                let (aic, bic) = fit_indices(s.neg2ll, s.parameters, s.persons);
                vec![
                    format!("{:?}", s.variant).to_lowercase(),
                    fixed2(s.neg2ll),
                    s.parameters.to_string(),
                    fixed2(aic),
                    fixed2(bic),
                ]
            })
            .collect();
        io::write_text(
            &out.join("model_comparison.csv"),
            &io::format_table(&["variant", "neg2ll", "parameters", "aic", "bic"], &rows),
        )?;
        io::write_text(
            &out.join("lrt.csv"),
            &io::format_table(
                &["statistic", "df", "p_value"],
                &[vec![exact(test.statistic), test.df.to_string(), exact(test.p_value)]],
            ),
        )?;
    }
    Ok(())
}

fn write_score_reports(out: &Path, summary: &PosteriorSummary, threshold: f64) -> Result<()> {
    let t_count = summary.occasions;
    let k_count = summary.attributes;
    let mastery = mastery_summary(summary, threshold);
    let mut rows = Vec::new();
    for t in 0..t_count {
        for k in 0..k_count {
            rows.push(vec![
                (t + 1).to_string(),
                (k + 1).to_string(),
                exact(mastery.mean_probability[t][k]),
                mastery.mastered[t][k].to_string(),
            ]);
        }
    }
    io::write_text(
        &out.join("mastery.csv"),
        &io::format_table(&["occasion", "attribute", "mean_probability", "mastered"], &rows),
    )?;
    io::write_text(&out.join("mixing.csv"), &io::format_mixing(&summary.mixing, k_count))?;
    let mut cells = Vec::new();
    for t in 0..t_count {
        let m = attribute_correlations(summary, ClassificationRule::Map, t)?;
        for a in 0..k_count {
            for b in 0..a {
                let flag = m[a][b].flag.map(|f| format!("{f:?}").to_lowercase()).unwrap_or_default();
                cells.push(vec![
                    (t + 1).to_string(),
                    (a + 1).to_string(),
                    (b + 1).to_string(),
                    m[a][b].r.map(exact).unwrap_or_default(),
                    flag,
                ]);
            }
        }
    }
    io::write_text(
        &out.join("tetrachoric.csv"),
        &io::format_table(&["occasion", "attribute_a", "attribute_b", "r", "flag"], &cells),
    )?;
    if t_count >= 2 {
        let mut rows = Vec::new();
        for n in 0..summary.persons.len() {
            let g = individual_growth(summary, n, threshold)?;
            let mut row = vec![g.id.clone()];
            row.extend(g.eap_theta.iter().map(|v| fixed2(*v)));
            row.extend(g.increments.iter().map(|v| fixed2(*v)));
            row.extend(g.map_transitions.iter().cloned());
            row.extend(g.threshold_transitions.iter().cloned());
            rows.push(row);
        }
        let mut head: Vec<String> = vec!["id".into()];
        head.extend((1..=t_count).map(|t| format!("theta_{t}")));
        head.extend((1..t_count).map(|t| format!("growth_{}_{}", t, t + 1)));
        head.extend((1..=k_count).map(|k| format!("map_a{k}")));
        head.extend((1..=k_count).map(|k| format!("threshold_a{k}")));
        let head: Vec<&str> = head.iter().map(String::as_str).collect();
        io::write_text(&out.join("individual_growth.csv"), &io::format_table(&head, &rows))?;
    }
    Ok(())
}

fn replicate(a: ReplicateArgs) -> Result<()> {
    let mut quad = QuadratureSpec::default();
    let mut em = EmConfig::default();
    apply_quad(&mut quad, &mut em, &a.quad);
    if let Some(m) = a.max_cycles {
        em.max_cycles = m;
    }
    quad.validate()?;
    em.validate()?;
    let quality: AnchorQuality = a.quality.into();
    let sampling = match a.sampling {
        Sampling::Fixed => PersonSampling::Fixed,
        Sampling::Fresh => PersonSampling::Fresh,
    };
    let (t, n, any) = (a.occasions, a.persons, a.any_size);
    let build = move |seed| {
        if any {
            simulation::reference_condition(t, n, quality, seed)
        } else {
            simulation::paper_condition(t, n, quality, seed)
        }
    };
    build(0)?;
    let summary = replicate_condition(build, a.reps, a.seed, sampling, &quad, &em)?;
    write_replication(&a.out, &summary, t, n, quality)
}

fn write_replication(out: &Path, s: &ReplicationSummary, t_count: usize, n: usize, q: AnchorQuality) -> Result<()> {
    let agg = &s.aggregate;
    let k_count = agg.rates.accr.first().map_or(0, Vec::len);
    let lead = |t: usize| vec![t_count.to_string(), n.to_string(), q.as_str().to_string(), t.to_string()];
    let mut rows = Vec::new();
    for t in 0..t_count {
        let mut row = lead(t + 1);
        row.extend(agg.rates.accr[t].iter().map(|v| fixed2(*v)));
        row.push(fixed2(agg.rates.pccr[t]));
        row.push(fixed2(agg.rates.longitudinal_pccr));
        rows.push(row);
    }
    let mut head: Vec<String> = ["T", "N", "QA", "t"].map(String::from).to_vec();
    head.extend((1..=k_count).map(|k| format!("ACCR_a{k}")));
    head.extend(["PCCR", "longitudinal_PCCR"].map(String::from));
    let head: Vec<&str> = head.iter().map(String::as_str).collect();
    io::write_text(&out.join("recovery.csv"), &io::format_table(&head, &rows))?;

    let mut rows = Vec::new();
    for t in 0..t_count {
        let mut row = lead(t + 1);
        match &s.person_theta {
            Some(p) => {
                row.push(fixed2(p.mean_absolute_bias[t]));
                row.push(fixed2(p.mean_rmse[t]));
            }
            None => row.extend([String::new(), String::new()]),
        }
        row.push(fixed2(agg.theta_rmse[t]));
        rows.push(row);
    }
    io::write_text(
        &out.join("theta.csv"),
        &io::format_table(&["T", "N", "QA", "t", "MA_bias", "M_RMSE", "sample_RMSE"], &rows),
    )?;

    let mut rows = Vec::new();
    for (t, (m, sc)) in agg.mean_growth.iter().zip(&agg.scale_growth).enumerate() {
        let mut row = lead(t + 1);
        row[3] = format!("{}->{}", t + 1, t + 2);
        row.extend([fixed2(m.bias()), fixed2(m.rmse()), fixed2(sc.bias()), fixed2(sc.rmse())]);
        rows.push(row);
    }
    io::write_text(
        &out.join("growth.csv"),
        &io::format_table(
            &["T", "N", "QA", "step", "mean_bias", "mean_RMSE", "scale_bias", "scale_RMSE"],
            &rows,
        ),
    )?;

    let rows: Vec<Vec<String>> = ITEM_CLASSES
        .iter()
        .filter_map(|c| agg.items.get(*c).filter(|e| e.count > 0).map(|e| (c, e)))
        .map(|(c, e)| vec![c.to_string(), fixed2(e.bias()), fixed2(e.rmse())])
        .collect();
    io::write_text(&out.join("items.csv"), &io::format_table(&["class", "bias", "RMSE"], &rows))?;
    io::write_json(&out.join("replications.json"), s)
}
