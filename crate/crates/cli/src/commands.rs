use ordmed::inference::{
    bootstrap_effects, point_estimate, BootstrapEntry, BootstrapResult, PointEstimate,
};
use ordmed::rng::NORMAL_METHOD;
use ordmed::{
    effect_table, monte_carlo_study, simulate_dataset, CovariateGenerator, EffectKey, EffectQuery,
    FitResult, MediatorModel, ModelParameters, OutcomeModel, SimulationDesign,
};
use serde::Serialize;

use crate::error::CliError;
use crate::input::{read_dataset, read_parameters};
use crate::output::{effect_rows, key_columns, write_csv, write_json, EffectRow, Format, Metadata};
use crate::{
    AnalyzeArgs, DesignArgs, EffectsArgs, FitArgs, McStudyArgs, Preset, QueryArgs, SimulateArgs,
};

fn query(args: &QueryArgs) -> Result<EffectQuery, CliError> {
    Ok(EffectQuery::new(args.x, args.xstar, args.c.clone())?)
}

#[derive(Serialize)]
struct EffectsReport<'a> {
    parameters: ModelParameters,
    x: f64,
    xstar: f64,
    c: &'a [f64],
    effects: Vec<EffectRow>,
}

pub fn effects(args: &EffectsArgs) -> Result<(), CliError> {
    let (med, out) = read_parameters(&args.params)?;
    let q = query(&args.query)?;
    let table = effect_table(&q, &med, &out)?;
    let meta = Metadata::new(None);
    let rows = effect_rows(&table);
    match args.out.format {
        Format::Csv => write_csv(args.out.output.as_deref(), &meta, &rows),
        Format::Json => write_json(
            args.out.output.as_deref(),
            &meta,
            &EffectsReport {
                parameters: ModelParameters::from_models(&med, &out),
                x: q.x,
                xstar: q.xstar,
                c: &q.c,
                effects: rows,
            },
        ),
    }
}

/// Parameter names in the order of `to_params()` for both models.
fn parameter_names(med: &MediatorModel, out: &OutcomeModel) -> Vec<String> {
    let mut names = vec!["gamma0".to_string(), "gammaX".to_string()];
    names.extend((1..=med.dim()).map(|k| format!("gammaC{k}")));
    names.extend((1..out.levels()).map(|j| format!("alpha{j}")));
    names.extend(["betaX", "betaM", "betaXM"].map(String::from));
    names.extend((1..=out.dim()).map(|k| format!("betaC{k}")));
    names
}

#[derive(Serialize)]
struct ParameterRow {
    parameter: String,
    estimate: f64,
    std_error: f64,
}

fn parameter_rows(
    med: &FitResult<MediatorModel>,
    out: &FitResult<OutcomeModel>,
) -> Vec<ParameterRow> {
    let estimates = med
        .model
        .to_params()
        .into_iter()
        .chain(out.model.to_params());
    let errors = med.standard_errors.iter().chain(&out.standard_errors);
    parameter_names(&med.model, &out.model)
        .into_iter()
        .zip(estimates)
        .zip(errors)
        .map(|((parameter, estimate), &std_error)| ParameterRow {
            parameter,
            estimate,
            std_error,
        })
        .collect()
}

/// Standard errors laid out like a parameter file.
fn standard_error_block(
    med: &FitResult<MediatorModel>,
    out: &FitResult<OutcomeModel>,
) -> ModelParameters {
    let p = med.model.dim();
    let k = out.model.levels() - 1;
    let m = &med.standard_errors;
    let o = &out.standard_errors;
    ModelParameters {
        gamma0: m[0],
        gamma_x: m[1],
        gamma_c: m[2..].to_vec(),
        alpha: o[..k].to_vec(),
        beta_x: o[k],
        beta_m: o[k + 1],
        beta_xm: o[k + 2],
        beta_c: o[k + 3..k + 3 + p].to_vec(),
    }
}

#[derive(Serialize)]
struct PerModel<T> {
    mediator: T,
    outcome: T,
}

#[derive(Serialize)]
struct FitReport {
    observations: usize,
    levels: usize,
    parameters: ModelParameters,
    standard_errors: ModelParameters,
    loglik: PerModel<f64>,
    iterations: PerModel<usize>,
}

fn fit_report(
    med: &FitResult<MediatorModel>,
    out: &FitResult<OutcomeModel>,
    observations: usize,
) -> FitReport {
    FitReport {
        observations,
        levels: out.model.levels(),
        parameters: ModelParameters::from_models(&med.model, &out.model),
        standard_errors: standard_error_block(med, out),
        loglik: PerModel {
            mediator: med.loglik,
            outcome: out.loglik,
        },
        iterations: PerModel {
            mediator: med.iterations,
            outcome: out.iterations,
        },
    }
}

fn fit_notes(med: &FitResult<MediatorModel>, out: &FitResult<OutcomeModel>) -> Vec<String> {
    vec![
        format!(
            "log-likelihood: mediator {} outcome {}",
            med.loglik, out.loglik
        ),
        format!(
            "iterations: mediator {} outcome {}",
            med.iterations, out.iterations
        ),
    ]
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let data = read_dataset(&args.data.data, args.data.levels)?;
    let med = ordmed::fit_mediator(&data)?;
    let out = ordmed::fit_outcome(&data)?;
    let mut meta = Metadata::new(None);
    meta.notes = fit_notes(&med, &out);
    let path = args.out.output.as_deref();
    match args.out.format {
        Format::Csv => write_csv(path, &meta, &parameter_rows(&med, &out)),
        Format::Json => write_json(path, &meta, &fit_report(&med, &out, data.len())),
    }
}

/// One row of the analysis report: a fitted parameter or an effect. The
/// bootstrap columns are present only when resampling was requested.
#[derive(Serialize)]
struct AnalyzeRow {
    kind: &'static str,
    name: String,
    j: Option<usize>,
    m: Option<usize>,
    estimate: f64,
    std_error: Option<f64>,
    exp_estimate: Option<f64>,
}

#[derive(Serialize)]
struct AnalyzeBootRow {
    kind: &'static str,
    name: String,
    j: Option<usize>,
    m: Option<usize>,
    estimate: f64,
    std_error: Option<f64>,
    exp_estimate: Option<f64>,
    boot_sd: Option<f64>,
    ci_lower: Option<f64>,
    ci_upper: Option<f64>,
    exp_ci_lower: Option<f64>,
    exp_ci_upper: Option<f64>,
}

impl AnalyzeBootRow {
    fn new(row: AnalyzeRow, entry: Option<&BootstrapEntry>) -> Self {
        Self {
            kind: row.kind,
            name: row.name,
            j: row.j,
            m: row.m,
            estimate: row.estimate,
            std_error: row.std_error,
            exp_estimate: row.exp_estimate,
            boot_sd: entry.and_then(|e| e.boot_sd),
            ci_lower: entry.map(|e| e.lower),
            ci_upper: entry.map(|e| e.upper),
            exp_ci_lower: entry.map(|e| e.lower.exp()),
            exp_ci_upper: entry.map(|e| e.upper.exp()),
        }
    }
}

#[derive(Serialize)]
struct EffectEntry {
    effect: String,
    j: Option<usize>,
    m: Option<usize>,
    log_value: f64,
    exp_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    boot_sd: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exp_ci_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exp_ci_upper: Option<f64>,
}

#[derive(Serialize)]
struct BootstrapInfo {
    resamples: usize,
    level: f64,
    failures: usize,
    unreliable: bool,
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    #[serde(flatten)]
    fit: FitReport,
    x: f64,
    xstar: f64,
    c: &'a [f64],
    effects: Vec<EffectEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapInfo>,
}

fn parameter_analyze_rows(point: &PointEstimate) -> Vec<AnalyzeRow> {
    parameter_rows(&point.mediator, &point.outcome)
        .into_iter()
        .map(|p| AnalyzeRow {
            kind: "parameter",
            name: p.parameter,
            j: None,
            m: None,
            estimate: p.estimate,
            std_error: Some(p.std_error),
            exp_estimate: None,
        })
        .collect()
}

fn effect_analyze_row(point: &PointEstimate, key: EffectKey) -> AnalyzeRow {
    let (name, j, m) = key_columns(key);
    let v = point.table.get(key);
    AnalyzeRow {
        kind: "effect",
        name,
        j,
        m,
        estimate: v,
        std_error: None,
        exp_estimate: Some(v.exp()),
    }
}

fn effect_entries(point: &PointEstimate, boot: Option<&BootstrapResult>) -> Vec<EffectEntry> {
    point
        .table
        .keys()
        .into_iter()
        .map(|key| {
            let (effect, j, m) = key_columns(key);
            let v = point.table.get(key);
            let b = boot.and_then(|b| b.entry(key));
            EffectEntry {
                effect,
                j,
                m,
                log_value: v,
                exp_value: v.exp(),
                boot_sd: b.map(|e| e.boot_sd),
                ci_lower: b.map(|e| e.lower),
                ci_upper: b.map(|e| e.upper),
                exp_ci_lower: b.map(|e| e.lower.exp()),
                exp_ci_upper: b.map(|e| e.upper.exp()),
            }
        })
        .collect()
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let data = read_dataset(&args.data.data, args.data.levels)?;
    let q = query(&args.query)?;
    if args.bootstrap > 0 && args.seed.is_none() {
        return Err(CliError::validation(
            "--seed is required when --bootstrap is positive",
        ));
    }
    let (point, boot) = if args.bootstrap == 0 {
        (point_estimate(&data, &q)?, None)
    } else {
        let res = bootstrap_effects(
            &data,
            &q,
            args.bootstrap,
            args.level,
            args.seed.unwrap_or_default(),
        )?;
        (res.point.clone(), Some(res))
    };
    let mut meta = Metadata::new(args.seed.filter(|_| boot.is_some()));
    meta.notes = fit_notes(&point.mediator, &point.outcome);
    if let Some(b) = &boot {
        meta.notes.push(format!(
            "bootstrap: {} resamples, level {}, {} failed{}",
            b.resamples,
            b.level,
            b.failures,
            if b.unreliable { ", UNRELIABLE" } else { "" }
        ));
    }

    let path = args.out.output.as_deref();
    let keys = point.table.keys();
    match (args.out.format, &boot) {
        (Format::Csv, None) => {
            let mut rows = parameter_analyze_rows(&point);
            rows.extend(keys.iter().map(|&k| effect_analyze_row(&point, k)));
            write_csv(path, &meta, &rows)?;
        }
        (Format::Csv, Some(b)) => {
            let mut rows: Vec<AnalyzeBootRow> = parameter_analyze_rows(&point)
                .into_iter()
                .map(|r| AnalyzeBootRow::new(r, None))
                .collect();
            rows.extend(
                keys.iter()
                    .map(|&k| AnalyzeBootRow::new(effect_analyze_row(&point, k), b.entry(k))),
            );
            write_csv(path, &meta, &rows)?;
        }
        (Format::Json, _) => write_json(
            path,
            &meta,
            &AnalyzeReport {
                fit: fit_report(&point.mediator, &point.outcome, data.len()),
                x: q.x,
                xstar: q.xstar,
                c: &q.c,
                effects: effect_entries(&point, boot.as_ref()),
                bootstrap: boot.as_ref().map(|b| BootstrapInfo {
                    resamples: b.resamples,
                    level: b.level,
                    failures: b.failures,
                    unreliable: b.unreliable,
                }),
            },
        )?,
    }
    match boot {
        Some(b) if b.unreliable => Err(CliError::Unreliable {
            failures: b.failures,
            resamples: b.resamples,
        }),
        _ => Ok(()),
    }
}

fn build_design(args: &DesignArgs) -> Result<SimulationDesign, CliError> {
    let mut design = match args.design {
        Preset::ThreeLevel => SimulationDesign::three_level_study(args.seed),
        Preset::FiveLevel => SimulationDesign::five_level_study(args.seed),
        Preset::Sparse => SimulationDesign::sparse_example(args.seed),
    };
    if let Some(path) = &args.params {
        let (med, out) = read_parameters(path)?;
        design.mediator = med;
        design.outcome = out;
    }
    if let Some(n) = args.n {
        design.n = n;
    }
    if let Some(mean) = args.mean_x {
        design.mean_x = mean;
    }
    if let Some(sd) = args.sd_x {
        design.sd_x = sd;
    }
    if !args.cov_means.is_empty() || !args.cov_sds.is_empty() {
        design.covariates = Some(CovariateGenerator {
            means: args.cov_means.clone(),
            sds: args.cov_sds.clone(),
        });
    }
    design.validate()?;
    Ok(design)
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let design = build_design(&args.design)?;
    let data = simulate_dataset(&design)?;
    let mut meta = Metadata::new(Some(design.seed));
    meta.normal_method = Some(NORMAL_METHOD);
    meta.notes.push(format!("levels: {}", data.levels()));

    let mut out = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["x".to_string(), "m".to_string(), "y".to_string()];
    header.extend((1..=data.dim()).map(|k| format!("c{k}")));
    out.write_record(&header)?;
    for r in data.records() {
        let mut row = vec![r.x.to_string(), r.m.to_string(), r.y.to_string()];
        row.extend(r.c.iter().map(f64::to_string));
        out.write_record(&row)?;
    }
    let body = out
        .into_inner()
        .map_err(|e| CliError::validation(e.to_string()))?;
    let mut text = meta.comment_lines();
    text.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    match &args.output {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow {
    effect: String,
    j: Option<usize>,
    m: Option<usize>,
    mean: f64,
    sd: Option<f64>,
    replicates: usize,
}

#[derive(Serialize)]
struct EstimateRow {
    replicate: usize,
    effect: String,
    j: Option<usize>,
    m: Option<usize>,
    log_value: f64,
}

#[derive(Serialize)]
struct Failure {
    replicate: usize,
    reason: String,
}

#[derive(Serialize)]
struct StudyReport {
    replications: usize,
    failures: Vec<Failure>,
    summary: Vec<SummaryRow>,
    estimates: Vec<EstimateRow>,
}

pub fn mc_study(args: &McStudyArgs) -> Result<(), CliError> {
    let design = build_design(&args.design)?;
    let q = query(&args.query)?;
    let study = monte_carlo_study(&design, args.replications, &q)?;
    let mut meta = Metadata::new(Some(design.seed));
    meta.normal_method = Some(study.normal_method);
    meta.notes.push(format!(
        "replications: {}, failed: {}",
        study.replications,
        study.failures.len()
    ));
    for (index, reason) in &study.failures {
        meta.notes
            .push(format!("replicate {index} failed: {reason}"));
    }
    let succeeded = study.estimates.len();
    let summary: Vec<SummaryRow> = study
        .entries
        .iter()
        .map(|e| {
            let (effect, j, m) = key_columns(e.key);
            SummaryRow {
                effect,
                j,
                m,
                mean: e.mean,
                sd: e.sd,
                replicates: succeeded,
            }
        })
        .collect();
    let estimates: Vec<EstimateRow> = study
        .estimates
        .iter()
        .flat_map(|est| {
            est.table.keys().into_iter().map(move |key| {
                let (effect, j, m) = key_columns(key);
                EstimateRow {
                    replicate: est.index,
                    effect,
                    j,
                    m,
                    log_value: est.table.get(key),
                }
            })
        })
        .collect();
    match args.out.format {
        Format::Csv => {
            write_csv(args.out.output.as_deref(), &meta, &summary)?;
            if let Some(path) = &args.estimates {
                write_csv(Some(path), &meta, &estimates)?;
            }
        }
        Format::Json => write_json(
            args.out.output.as_deref(),
            &meta,
            &StudyReport {
                replications: study.replications,
                failures: study
                    .failures
                    .iter()
                    .map(|(replicate, reason)| Failure {
                        replicate: *replicate,
                        reason: reason.clone(),
                    })
                    .collect(),
                summary,
                estimates,
            },
        )?,
    }
    Ok(())
}
