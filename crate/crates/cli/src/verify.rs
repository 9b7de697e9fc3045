use std::path::Path;

use conjugate_core::conjugacy::{
    beta_flip_pair, normal_normal_pair, state_distance, CheckConfig, CheckReport, State,
};
use conjugate_core::continuous::LikelihoodChannel;
use conjugate_core::families::{flip_channel, normal_likelihood, NoiseLevel};
use conjugate_core::numerics::QuadConfig;
use conjugate_core::suffstat::*;
use conjugate_core::suite::{run_suite, Family, SuiteOptions};
use serde::Serialize;

use crate::output::{quad_config, write_json, CliError};
use crate::StatFamily;

#[derive(Debug, Serialize)]
struct VerifyEcho {
    command: &'static str,
    family: Family,
    seed: u64,
    tol: Option<f64>,
    grid_points: usize,
    cdf_probes: usize,
    cells: usize,
    mc_samples: usize,
    quad: QuadConfig,
}

#[derive(Debug, Serialize)]
struct Report<E: Serialize, X: Serialize> {
    version: &'static str,
    config_echo: E,
    #[serde(flatten)]
    extra: X,
    reports: Vec<CheckReport>,
}

#[derive(Debug, Serialize)]
struct NoExtra {}

fn print_reports(reports: &[CheckReport]) {
    for r in reports {
        println!(
            "{:<4} {:<44} probes {:>4}  max err {:.3e}  tol {:.1e}",
            if r.passed { "ok" } else { "FAIL" },
            r.check_name,
            r.probes,
            r.max_abs_err,
            r.tolerance
        );
    }
}

fn check_tol(tol: Option<f64>) -> Result<(), CliError> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Input(format!(
            "--tol must be a positive number, got {t}"
        ))),
        _ => Ok(()),
    }
}

pub fn run_verify(
    family: Family,
    tol: Option<f64>,
    seed: u64,
    report: Option<&Path>,
    inject_bad_translator: bool,
) -> Result<bool, CliError> {
    check_tol(tol)?;
    let cfg = CheckConfig {
        quad: quad_config()?,
        seed,
        tolerance_override: tol,
        ..CheckConfig::default()
    };
    let reports = run_suite(
        SuiteOptions {
            family,
            inject_bad_translator,
        },
        &cfg,
    )?;
    print_reports(&reports);
    let passed = reports.iter().all(|r| r.passed);
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!(
        "{} checks, {} failed: {}",
        reports.len(),
        failed,
        if passed { "PASS" } else { "FAIL" }
    );
    if let Some(path) = report {
        let doc = Report {
            version: env!("CARGO_PKG_VERSION"),
            config_echo: VerifyEcho {
                command: "verify",
                family,
                seed,
                tol,
                grid_points: cfg.grid_points,
                cdf_probes: cfg.cdf_probes,
                cells: cfg.cells,
                mc_samples: cfg.mc_samples,
                quad: cfg.quad,
            },
            extra: NoExtra {},
            reports,
        };
        write_json(path, &doc)?;
    }
    Ok(passed)
}

#[derive(Debug, Serialize)]
struct SuffstatEcho {
    command: &'static str,
    family: &'static str,
    batch: Vec<String>,
    prior: [f64; 2],
    nu: Option<f64>,
    tol: Option<f64>,
    quad: QuadConfig,
}

#[derive(Debug, Serialize)]
struct SuffstatExtra {
    summary: Summary,
    posterior: Vec<f64>,
}

fn parse_prior(s: Option<&str>, default: [f64; 2]) -> Result<[f64; 2], CliError> {
    let Some(s) = s else { return Ok(default) };
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("--prior `{s}` is not two numbers")))?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err(CliError::Input(format!("--prior `{s}` is not two numbers"))),
    }
}

pub fn run_suffstat(
    family: StatFamily,
    batch: &str,
    prior: Option<&str>,
    nu: f64,
    tol: Option<f64>,
    report: Option<&Path>,
) -> Result<bool, CliError> {
    check_tol(tol)?;
    let cfg = CheckConfig {
        quad: quad_config()?,
        tolerance_override: tol,
        ..CheckConfig::default()
    };
    let items: Vec<String> = batch.split(',').map(|s| s.trim().to_string()).collect();
    if items.iter().any(String::is_empty) {
        return Err(CliError::Input(format!(
            "--batch `{batch}` has an empty entry"
        )));
    }
    let noise = NoiseLevel::new(nu)?;
    let (name, p, model, pair, stat_probes): (_, _, LikelihoodChannel, _, Vec<f64>) = match family {
        StatFamily::BetaFlip => (
            "beta-flip",
            parse_prior(prior, [1.0, 1.0])?,
            flip_channel(),
            beta_flip_pair(),
            vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0],
        ),
        StatFamily::Normal => (
            "normal",
            parse_prior(prior, [0.0, 1.0])?,
            normal_likelihood(noise),
            normal_normal_pair(nu)?,
            vec![-1.0, 0.0, 0.5, 2.0],
        ),
    };
    let batch = ObsBatch::parse(model.obs_space(), &items)?;
    let m = batch.len();
    let (stat, fact_tol) = match family {
        StatFamily::BetaFlip => (beta_flip_stat(m)?, 1e-12),
        StatFamily::Normal => (normal_stat(m, noise)?, 1e-9),
    };
    let prior_state = pair.prior.at(&p, &cfg.quad)?;

    let mut reports = vec![check_factorization(
        &stat,
        &model,
        &batch,
        &stat_probes,
        cfg.tol(fact_tol),
    )?];
    reports.push(check_stat_update_equiv(
        &stat,
        &prior_state,
        &model,
        &batch,
        &cfg,
        cfg.tol(1e-6),
    )?);
    let fused = multi_update(&prior_state, &model, &batch, &cfg)?;
    let sequential = sequential_update(&prior_state, &model, &batch, &cfg)?;
    reports.push(CheckReport::single(
        "fold-fuse-agreement",
        state_distance(&State::Pdf(sequential), &State::Pdf(fused.clone()), &cfg)?,
        cfg.tol(1e-6),
    ));
    let posterior = pair.fold(&p, batch.obs())?;
    reports.push(CheckReport::single(
        "translator-fold-consistency",
        state_distance(
            &State::Pdf(pair.prior.at(&posterior, &cfg.quad)?),
            &State::Pdf(fused),
            &cfg,
        )?,
        cfg.tol(1e-6),
    ));

    let summary = stat.t(batch.obs())?;
    match summary {
        Summary::Counts { ones, zeros } => println!("summary          n1 = {ones}, n0 = {zeros}"),
        Summary::Sum(z) => println!("summary          m = {m}, sum = {z}"),
    }
    println!("posterior        {posterior:?}");
    print_reports(&reports);
    let passed = reports.iter().all(|r| r.passed);
    if let Some(path) = report {
        let doc = Report {
            version: env!("CARGO_PKG_VERSION"),
            config_echo: SuffstatEcho {
                command: "suffstat",
                family: name,
                batch: items,
                prior: p,
                nu: (family == StatFamily::Normal).then_some(nu),
                tol,
                quad: cfg.quad,
            },
            extra: SuffstatExtra { summary, posterior },
            reports,
        };
        write_json(path, &doc)?;
    }
    Ok(passed)
}
