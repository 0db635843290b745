//! The experiment commands. Each writes its files under `cfg.out` and returns the
//! threshold checks it ran.

use std::fmt::Write as _;
use std::path::Path;

use ecosim_core::increments::{IncrementLaw, LawSpec, LimitParams, MarginalForm, Moment};
use ecosim_core::limitproc::{cov_xx, cov_xy, cov_yy, write_paths_csv};
use ecosim_core::stats::{cov_estimate, half_normal_cdf, ks_statistic, mc_estimate, normal_cdf, TestReport};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiments::{
    compare_joint, run_clt, run_glivenko, run_identity, run_limit, CltRun, GlivenkoRun, JointComparison, LimitRun,
    Setup, PATH_DUMP,
};
use crate::output::{line_plot, write_atomic, write_json, Scale, Series};

pub const KS_MARGINAL: f64 = 0.05;
pub const KS_JOINT: f64 = 0.06;
pub const CORR_TOL: f64 = 0.05;
pub const SE_BOUND: f64 = 4.0;
pub const HALF_NORMAL_MEAN_TOL: f64 = 0.05;
pub const RATIO_RANGE: (f64, f64) = (2.2, 4.5);
pub const HEAVY_SUP_BOUND: f64 = 0.1;
pub const HEAVY_FRACTION: f64 = 0.9;

/// What a command checked.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub reports: Vec<TestReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            let tag = if r.pass { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {} statistic={} threshold={}", r.test, r.statistic, r.threshold);
        }
        s
    }
}

fn finish(out: &Path, reports: Vec<TestReport>) -> Result<Outcome> {
    write_json(&out.join("report.json"), &reports)?;
    Ok(Outcome { reports })
}

fn csv_row(cells: impl IntoIterator<Item = String>) -> String {
    let mut line = cells.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn moment_text(m: Moment) -> String {
    match m {
        Moment::Finite(v) => v.to_string(),
        Moment::Infinite => "infinite".into(),
    }
}

/// Human-readable moments, limit constants and `g` on a grid.
pub fn cmd_moments(spec: &LawSpec) -> Result<String> {
    let law = IncrementLaw::from_spec(spec)?;
    let m = law.moments();
    let mut s = String::new();
    let _ = writeln!(s, "law = {law}");
    let _ = writeln!(s, "e_plus = {}", moment_text(m.e_plus));
    let _ = writeln!(s, "e_minus = {}", m.e_minus);
    let _ = writeln!(s, "e_plus2 = {}", moment_text(m.e_plus2));
    let _ = writeln!(s, "e_minus2 = {}", m.e_minus2);
    let _ = writeln!(s, "var_plus = {}", moment_text(m.var_plus));
    let _ = writeln!(s, "var_minus = {}", m.var_minus);
    let _ = writeln!(s, "drift_condition = {}", m.drift_condition());
    match m.f_c() {
        Ok(f_c) => {
            let _ = writeln!(s, "f_c = {f_c}");
        }
        Err(e) => {
            let _ = writeln!(s, "f_c = undefined ({e})");
        }
    }
    match m.limit_params() {
        Ok(p) => {
            let _ = writeln!(s, "sigma_tilde1 = {}", p.sigma_tilde1);
            let _ = writeln!(s, "sigma2 = {}", p.sigma2);
            let _ = writeln!(s, "rho = {}", p.rho);
            let _ = writeln!(s, "f,g,g_raw");
            for k in 0..=10 {
                let f = p.f_c + (1.0 - p.f_c) * k as f64 / 10.0;
                let f = f.min(1.0);
                let g = p.marginal_std(f, MarginalForm::CovarianceConsistent)?;
                let raw = p.marginal_std(f, MarginalForm::RawMoment)?;
                let _ = writeln!(s, "{f},{g},{raw}");
            }
        }
        Err(e) => {
            let _ = writeln!(s, "limit constants unavailable ({e})");
        }
    }
    Ok(s)
}

pub fn glivenko_reports(run: &GlivenkoRun) -> Vec<TestReport> {
    let mut reports = Vec::new();
    let medians = run.medians();
    let decades = run.checkpoints.len() == 3
        && run.checkpoints[0] > 0
        && run.checkpoints[1] == 10 * run.checkpoints[0]
        && run.checkpoints[2] == 10 * run.checkpoints[1];
    for (k, pair) in medians.windows(2).enumerate() {
        let (a, b) = (run.checkpoints[k], run.checkpoints[k + 1]);
        let ratio = pair[0] / pair[1];
        reports.push(TestReport::at_least(format!("median_decreasing_{a}_to_{b}"), ratio, 1.0));
        if let Some(last) = reports.last_mut() {
            last.pass = pair[1] < pair[0];
        }
        if decades && !run.heavy_tailed {
            reports.push(TestReport::at_least(format!("median_ratio_min_{a}_to_{b}"), ratio, RATIO_RANGE.0));
            reports.push(TestReport::at_most(format!("median_ratio_max_{a}_to_{b}"), ratio, RATIO_RANGE.1));
        }
    }
    if run.heavy_tailed {
        if let Some(&n) = run.checkpoints.last() {
            let devs = run.sup_devs_at(n);
            let within = devs.iter().filter(|&&d| d <= HEAVY_SUP_BOUND).count();
            let frac = within as f64 / devs.len().max(1) as f64;
            reports.push(TestReport::at_least(format!("fraction_sup_dev_le_0.1_at_{n}"), frac, HEAVY_FRACTION));
        }
    }
    reports
}

pub fn cmd_glivenko(cfg: &ExperimentConfig) -> Result<Outcome> {
    let run = run_glivenko(cfg)?;
    let out = &cfg.out;
    let mut csv = csv_row(["replica", "n", "x", "sup_dev"].map(String::from));
    for r in &run.rows {
        csv.push_str(&csv_row([
            r.replica.to_string(),
            r.n.to_string(),
            r.x.to_string(),
            r.sup_dev.to_string(),
        ]));
    }
    write_atomic(&out.join("glivenko.csv"), csv.as_bytes())?;

    let mut ecdf = csv_row(["f", "ecdf", "target"].map(String::from));
    for (f, e) in run.ecdf_grid.iter().zip(&run.ecdf) {
        let target = ecosim_core::increments::uniform_above_cdf(run.f_c, *f);
        ecdf.push_str(&csv_row([f.to_string(), e.to_string(), target.to_string()]));
    }
    write_atomic(&out.join("ecdf.csv"), ecdf.as_bytes())?;

    let medians: Vec<(f64, f64)> = run
        .checkpoints
        .iter()
        .zip(run.medians())
        .filter(|(n, _)| **n > 0)
        .map(|(&n, m)| (n as f64, m))
        .collect();
    let svg = line_plot(
        "median sup deviation",
        "n",
        "sup |F_n - F|",
        Scale::Log10,
        &[Series {
            name: "median over replicas",
            points: medians,
            color: "steelblue",
        }],
    );
    write_atomic(&out.join("sup_dev.svg"), svg.as_bytes())?;
    let grid = &run.ecdf_grid;
    let svg = line_plot(
        "empirical distribution of fitness (replica 0)",
        "f",
        "F",
        Scale::Linear,
        &[
            Series {
                name: "empirical",
                points: grid.iter().copied().zip(run.ecdf.iter().copied()).collect(),
                color: "steelblue",
            },
            Series {
                name: "uniform target",
                points: grid
                    .iter()
                    .map(|&f| (f, ecosim_core::increments::uniform_above_cdf(run.f_c, f)))
                    .collect(),
                color: "firebrick",
            },
        ],
    );
    write_atomic(&out.join("ecdf.svg"), svg.as_bytes())?;
    finish(out, glivenko_reports(&run))
}

pub fn cmd_identity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rows = run_identity(cfg)?;
    let mut csv = csv_row(["replica", "steps", "checks", "mismatches"].map(String::from));
    for r in &rows {
        csv.push_str(&csv_row([
            r.replica.to_string(),
            r.steps.to_string(),
            r.checks.to_string(),
            r.mismatches.to_string(),
        ]));
    }
    write_atomic(&cfg.out.join("identity.csv"), csv.as_bytes())?;
    let mismatches: u64 = rows.iter().map(|r| r.mismatches).sum();
    finish(&cfg.out, vec![TestReport::at_most("identity_mismatches", mismatches as f64, 0.0)])
}

/// Variance of `√n Δ̂_n(f)` against both forms of `g(f)²`, unscaled and widened by
/// the population scale.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceComparison {
    pub f: f64,
    pub var: f64,
    pub se_var: f64,
    pub g2: f64,
    pub g2_raw: f64,
    /// `|var - g2| / se_var`.
    pub z: f64,
    pub z_raw: f64,
    pub scale: f64,
    /// Same as `z` and `z_raw` with `g2` multiplied by `scale²`.
    pub z_scaled: f64,
    pub z_raw_scaled: f64,
}

pub fn variance_comparison(p: &LimitParams, f: f64, samples: &[f64]) -> Result<VarianceComparison> {
    let e = mc_estimate(samples)?;
    let g2 = p.marginal_std(f, MarginalForm::CovarianceConsistent)?.powi(2);
    let g2_raw = p.marginal_std(f, MarginalForm::RawMoment)?.powi(2);
    let scale = p.population_scale();
    let z = |target: f64| (e.var - target).abs() / e.se_var;
    Ok(VarianceComparison {
        f,
        var: e.var,
        se_var: e.se_var,
        g2,
        g2_raw,
        z: z(g2),
        z_raw: z(g2_raw),
        scale,
        z_scaled: z(g2 * scale * scale),
        z_raw_scaled: z(g2_raw * scale * scale),
    })
}

/// Grid points strictly inside `(f_c, 1)`, where the marginal is a proper normal.
fn interior(run: &CltRun) -> Vec<(usize, f64)> {
    run.f_grid
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, f)| f > run.f_c + 1e-12 && f < 1.0)
        .collect()
}

/// Checks `√n Δ̂_n` against the limit marginals as normalized by `1/EI₊`, then the
/// same checks with the limit widened by `LimitParams::population_scale`.
pub fn clt_reports(run: &CltRun, discriminate_at: f64) -> Result<(Vec<TestReport>, Vec<VarianceComparison>)> {
    let p = &run.params;
    let scale = p.population_scale();
    let mut reports = Vec::new();
    let mut variances = Vec::new();
    for (tag, k) in [("", 1.0), ("_scaled", scale)] {
        for (j, f) in interior(run) {
            let col = run.column(j);
            let g = k * p.marginal_std(f, MarginalForm::CovarianceConsistent)?;
            let ks = ks_statistic(&col, |x| normal_cdf(x, g).unwrap_or(f64::NAN))?;
            reports.push(TestReport::at_most(format!("ks_normal{tag}_f={f}"), ks, KS_MARGINAL));
            let v = variance_comparison(p, f, &col)?;
            let (z, z_raw) = if tag.is_empty() { (v.z, v.z_raw) } else { (v.z_scaled, v.z_raw_scaled) };
            reports.push(TestReport::at_most(format!("variance_se{tag}_f={f}"), z, SE_BOUND));
            if (f - discriminate_at).abs() < 1e-12 {
                reports.push(TestReport::at_least(format!("variance_raw_form_rejected{tag}_f={f}"), z_raw, SE_BOUND));
            }
            if tag.is_empty() {
                variances.push(v);
            }
        }
        let g_c = k * p.marginal_std(p.f_c, MarginalForm::CovarianceConsistent)?;
        if g_c > 0.0 {
            let ks = ks_statistic(&run.at_fc, |x| half_normal_cdf(x, g_c).unwrap_or(f64::NAN))?;
            reports.push(TestReport::at_most(format!("ks_half_normal{tag}_f_c"), ks, KS_MARGINAL));
            let mean = mc_estimate(&run.at_fc)?.mean;
            let target = g_c * (2.0 / std::f64::consts::PI).sqrt();
            reports.push(TestReport::at_most(
                format!("half_normal_mean{tag}_f_c"),
                (mean - target).abs(),
                HALF_NORMAL_MEAN_TOL,
            ));
        }
    }
    Ok((reports, variances))
}

pub fn cmd_clt(cfg: &ExperimentConfig) -> Result<Outcome> {
    let run = run_clt(cfg)?;
    let out = &cfg.out;
    let mut header = vec!["replica".to_string(), "x".to_string()];
    header.extend(run.f_grid.iter().map(|f| format!("dev({f})")));
    header.push("at_f_c".into());
    let mut csv = csv_row(header);
    for (r, row) in run.dev.iter().enumerate() {
        let mut cells = vec![r.to_string(), run.x[r].to_string()];
        cells.extend(row.iter().map(|v| v.to_string()));
        cells.push(run.at_fc[r].to_string());
        csv.push_str(&csv_row(cells));
    }
    write_atomic(&out.join("clt.csv"), csv.as_bytes())?;
    let setup = Setup::new(cfg)?;
    let (reports, variances) = clt_reports(&run, setup.joint_f(cfg))?;
    write_json(&out.join("variance.json"), &variances)?;
    finish(out, reports)
}

/// One line of the covariance report.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceEntry {
    pub pair: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub se: f64,
}

pub fn covariance_entries(run: &LimitRun) -> Result<Vec<CovarianceEntry>> {
    let p = &run.params;
    let mut entries = Vec::new();
    let mut push = |pair: String, closed_form: f64, a: &[f64], b: &[f64]| -> Result<()> {
        let c = cov_estimate(a, b)?;
        entries.push(CovarianceEntry {
            pair,
            closed_form,
            estimate: c.cov,
            se: c.se,
        });
        Ok(())
    };
    for (a, &f) in run.f_grid.iter().enumerate() {
        for (b, &f2) in run.f_grid.iter().enumerate().skip(a) {
            push(format!("xx({f},{f2})"), cov_xx(p, f, f2)?, &run.x_column(a), &run.x_column(b))?;
        }
    }
    for (a, &s) in run.t_grid.iter().enumerate() {
        for (b, &t) in run.t_grid.iter().enumerate().skip(a) {
            push(format!("yy({s},{t})"), cov_yy(p, s, t)?, &run.y_column(a), &run.y_column(b))?;
        }
    }
    for (a, &f) in run.f_grid.iter().enumerate() {
        for (b, &t) in run.t_grid.iter().enumerate() {
            push(format!("xy({f},{t})"), cov_xy(p, f, t)?, &run.x_column(a), &run.y_column(b))?;
        }
    }
    Ok(entries)
}

pub fn limit_reports(run: &LimitRun, entries: &[CovarianceEntry]) -> Result<Vec<TestReport>> {
    let p = &run.params;
    let mut reports: Vec<TestReport> = entries
        .iter()
        .map(|e| {
            let z = if e.se > 0.0 {
                (e.estimate - e.closed_form).abs() / e.se
            } else if (e.estimate - e.closed_form).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            TestReport::at_most(format!("cov_{}", e.pair), z, SE_BOUND)
        })
        .collect();
    let g_c = p.marginal_std(p.f_c, MarginalForm::CovarianceConsistent)?;
    if g_c > 0.0 {
        let ks = ks_statistic(&run.second(), |x| half_normal_cdf(x, g_c).unwrap_or(f64::NAN))?;
        reports.push(TestReport::at_most("ks_psi_half_normal", ks, KS_MARGINAL));
    }
    if p.f_c > 0.0 {
        for (j, &t) in run.t_grid.iter().enumerate() {
            let e = mc_estimate(&run.tilde_column(j))?;
            let z = (e.var - t).abs() / e.se_var;
            reports.push(TestReport::at_most(format!("tilde_w1_variance_t={t}"), z, SE_BOUND));
        }
        let ks = ks_statistic(&run.tilde_psi(), |x| half_normal_cdf(x, 1.0).unwrap_or(f64::NAN))?;
        reports.push(TestReport::at_most("ks_tilde_w1_psi", ks, KS_MARGINAL));
    }
    Ok(reports)
}

fn limit_csv(run: &LimitRun) -> String {
    let mut header = vec!["sample".to_string(), "u".to_string()];
    header.extend(run.f_grid.iter().map(|f| format!("first({f})")));
    header.push("second".into());
    header.extend(run.f_grid.iter().map(|f| format!("x_inf({f})")));
    header.extend(run.t_grid.iter().map(|t| format!("y_inf({t})")));
    header.extend(run.t_grid.iter().map(|t| format!("tilde_w1({t})")));
    header.push("tilde_w1_psi".into());
    let mut csv = csv_row(header);
    for (i, s) in run.samples.iter().enumerate() {
        let mut cells = vec![i.to_string(), s.u.to_string()];
        cells.extend(s.first.iter().map(|v| v.to_string()));
        cells.push(s.second.to_string());
        cells.extend(s.x_inf.iter().map(|v| v.to_string()));
        cells.extend(s.y_inf.iter().map(|v| v.to_string()));
        cells.extend(s.tilde_w1.iter().map(|v| v.to_string()));
        cells.push(s.tilde_w1_psi.to_string());
        csv.push_str(&csv_row(cells));
    }
    csv
}

pub fn cmd_limit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let run = run_limit(cfg, &cfg.f_grid)?;
    let out = &cfg.out;
    write_atomic(&out.join("limit.csv"), limit_csv(&run).as_bytes())?;
    let paths: Vec<_> = run
        .samples
        .iter()
        .take(PATH_DUMP)
        .filter_map(|s| s.paths.as_ref().map(|p| p.y_inf.clone()))
        .collect();
    let mut buf = Vec::new();
    write_paths_csv(&mut buf, &paths).map_err(|source| CliError::Write {
        path: out.join("paths.csv"),
        source,
    })?;
    write_atomic(&out.join("paths.csv"), &buf)?;
    let entries = covariance_entries(&run)?;
    write_json(&out.join("covariance.json"), &entries)?;
    let reports = limit_reports(&run, &entries)?;
    finish(out, reports)
}

pub fn joint_reports(c: &JointComparison) -> Vec<TestReport> {
    vec![
        TestReport::at_most(format!("ks_two_sample_first_f={}", c.f), c.ks_first, KS_JOINT),
        TestReport::at_most("ks_two_sample_second", c.ks_second, KS_JOINT),
        TestReport::at_most("correlation_difference", (c.corr_finite - c.corr_limit).abs(), CORR_TOL),
        TestReport::at_most(format!("ks_two_sample_first_scaled_f={}", c.f), c.ks_first_scaled, KS_JOINT),
        TestReport::at_most("ks_two_sample_second_scaled", c.ks_second_scaled, KS_JOINT),
    ]
}

pub fn cmd_joint(cfg: &ExperimentConfig) -> Result<Outcome> {
    let setup = Setup::new(cfg)?;
    let f = setup.joint_f(cfg);
    let mut finite_cfg = cfg.clone();
    finite_cfg.f_grid = vec![f];
    let clt = run_clt(&finite_cfg)?;
    let limit = run_limit(cfg, &[f])?;
    let out = &cfg.out;
    let mut csv = csv_row(["replica", "first", "second"].map(String::from));
    for (r, (a, b)) in clt.column(0).iter().zip(&clt.at_fc).enumerate() {
        csv.push_str(&csv_row([r.to_string(), a.to_string(), b.to_string()]));
    }
    write_atomic(&out.join("joint_finite.csv"), csv.as_bytes())?;
    let mut csv = csv_row(["sample", "first", "second"].map(String::from));
    for (i, s) in limit.samples.iter().enumerate() {
        csv.push_str(&csv_row([i.to_string(), s.first[0].to_string(), s.second.to_string()]));
    }
    write_atomic(&out.join("joint_limit.csv"), csv.as_bytes())?;
    let c = compare_joint(&clt, 0, &limit, 0)?;
    finish(out, joint_reports(&c))
}

/// Echo of the resolved configuration (without thread count or output path).
pub fn write_config_echo(cfg: &ExperimentConfig) -> Result<()> {
    write_json(&cfg.out.join("config.json"), cfg)
}
