use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use reflow::geom::{calibrate, coefficient_growth, report_calibrated, Budgets, GeometryReport, ReportOptions, CSV_COLUMNS};
use reflow::io::save_connection;
use reflow::liecore::{rank_oracle, RANK_TRIALS};
use reflow::zerocurv::{mc_residual, regularity_check};
use reflow::{ConnectionField, Sub, SymmetricPairSpec};

use crate::config::{RunConfig, Source};
use crate::data::{build_field, spec_of};
use crate::error::CliError;

/// Report options for the CLI: the report is always produced and the budgets
/// decide pass or fail.
fn report_options() -> ReportOptions {
    let mut opts = ReportOptions { drift_tol: f64::INFINITY, ..ReportOptions::default() };
    opts.integration.mc_tol = f64::INFINITY;
    opts
}

pub fn pair(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = spec_of(cfg)?;
    let signature = if spec.is_hyperbolic() { "indefinite" } else { "compact" };
    println!("family {} n={} k={} {signature}", spec.family.as_str(), spec.n, spec.k);
    println!("m = {}", spec.m);
    for (sub, label) in [(Sub::PP, "k'"), (Sub::PM, "k ∩ u-"), (Sub::MP, "p'⊥"), (Sub::MM, "p'")] {
        println!("dim {label} = {}", spec.subspace_basis(sub).len());
    }
    let r = rank_oracle(&spec, RANK_TRIALS, cfg.seed);
    println!("rank = {}", r.rank);
    if spec.n > r.rank {
        println!("obstructed: n={} > rank={}", spec.n, r.rank);
    } else {
        println!("possible: rank={}", r.rank);
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn summarize(field: &ConnectionField) {
    let mc = mc_residual(field);
    let powers: Vec<String> = mc.residual.iter().map(|r| format!("{r:.3e}")).collect();
    println!("mc residual by power λ^-2..λ^2: {}", powers.join(" "));
    println!("mc residual max = {:.3e}", mc.max());
    println!("regularity margin = {:.3e}", regularity_check(field, 0.0).sigma_min);
}

pub fn vacuum(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    if cfg.source == Source::File {
        return Err(CliError::Config("vacuum generates data; source = file is not allowed".into()));
    }
    let (spec, field) = build_field(cfg, 1.0)?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join("field.txt");
    save_connection(&path, &spec, &field).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    summarize(&field);
    Ok(())
}

fn fmt_lambda(l: f64) -> String {
    format!("{l}")
}

/// Reports in λ order, each with the budgets adapted to its grid spacing and
/// coefficient growth.
fn reports_for(
    cfg: &RunConfig,
    build: impl Fn(f64) -> Result<(SymmetricPairSpec, ConnectionField), CliError> + Sync,
) -> Result<Vec<(GeometryReport, Budgets)>, CliError> {
    let opts = report_options();
    cfg.lambdas
        .par_iter()
        .map(|&l| {
            let (spec, field) = build(l)?;
            let cal = calibrate(&spec, &field, &opts.integration, opts.calibration_tol)?;
            let report = report_calibrated(&field, &cal, l, &opts)?;
            let h = field.chart.spacing.iter().copied().fold(0.0, f64::max);
            Ok((report, cfg.budgets.for_grid(h, coefficient_growth(&field, l))))
        })
        .collect()
}

fn judge(reports: &[(GeometryReport, Budgets)]) -> Result<(), CliError> {
    let mut failed = Vec::new();
    for (r, budgets) in reports {
        let names = budgets.failures(r);
        if names.is_empty() {
            println!("λ={}: ok", fmt_lambda(r.lambda));
        } else {
            println!("λ={}: FAIL {}", fmt_lambda(r.lambda), names.join(", "));
            failed.push(format!("λ={}: {}", fmt_lambda(r.lambda), names.join(", ")));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn verify(cfg: &RunConfig, input: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    if let Some(path) = input {
        cfg.source = Source::File;
        cfg.path = Some(path);
    }
    cfg.validate()?;
    let (spec, field) = build_field(&cfg, 1.0)?;
    for &l in &cfg.lambdas {
        field.spectral.homothety(l)?;
    }
    let reports = reports_for(&cfg, |_| Ok((spec.clone(), field.clone())))?;
    ensure_dir(&cfg.out)?;
    write_file(&cfg.out.join("report.csv"), &csv_text(&CSV_COLUMNS, reports.iter().map(|(r, _)| r.csv_row()))?)?;
    let plain: Vec<&GeometryReport> = reports.iter().map(|(r, _)| r).collect();
    let json = serde_json::to_string_pretty(&plain).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&cfg.out.join("report.json"), &(json + "\n"))?;
    println!("wrote {} rows to {}", reports.len(), cfg.out.join("report.csv").display());
    judge(&reports)
}

pub const SCAN_COLUMNS: [&str; 13] = [
    "lambda",
    "R_lambda",
    "spacing",
    "sec_target",
    "sec_mean",
    "sec_dev",
    "metric_scaling",
    "ii_two_way",
    "normal_comm",
    "lagrangian",
    "curved_flat",
    "flat_metric",
    "asym_ratio",
];

pub fn scan(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    cfg.lambdas.sort_by(f64::total_cmp);
    let shrink = |l: f64| if cfg.adapt { cfg.spectral.homothety(l).expect("validated") } else { 1.0 };
    let reports = reports_for(&cfg, |l| build_field(&cfg, shrink(l)))?;
    let fmt = |x: f64| format!("{x:.9e}");
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_else(|| "n/a".into());
    let base = cfg.chart(1.0)?.spacing[0];
    let rows = reports.iter().map(|(r, _)| {
        vec![
            fmt(r.lambda),
            fmt(r.r_lambda),
            fmt(base / shrink(r.lambda)),
            fmt(r.sec_target),
            fmt(r.sec_mean),
            fmt(r.sec_dev),
            fmt(r.metric_scaling),
            fmt(r.ii_two_way),
            opt(r.normal_comm),
            opt(r.lagrangian),
            fmt(r.curved_flat),
            fmt(r.flat_metric),
            fmt(r.asym_ratio),
        ]
    });
    let text = csv_text(&SCAN_COLUMNS, rows)?;
    ensure_dir(&cfg.out)?;
    write_file(&cfg.out.join("scan.csv"), &text)?;
    println!("wrote {} rows to {}", reports.len(), cfg.out.join("scan.csv").display());
    judge(&reports)
}
