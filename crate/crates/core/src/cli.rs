//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::brown_resnick::{correlation_curve, lag_to_h, threshold_distance};
use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::gev::{corr_gev_powers, cov_any, cov_gev_breakdown, var_any, MarginPowerSpec};
use crate::hr::HrParams;
use crate::numerics::special::set_gamma_perturbation;
use crate::output::{Cell, Document};
use crate::risk::loss_variance;
use crate::suite::{run_suite, SuiteKind};

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "powcorr", version, about = "Correlation of powers of Brown-Resnick fields")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Configuration file (TOML sections, or a previous output file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override a setting, e.g. `--set model.psi=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Beta,
    Beta2,
    Eta,
    Tau,
    Xi,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Quick,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// D against distance, or the distance where D first drops below a level.
    Curve {
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = 12.0)]
        max: f64,
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Report only the first distance with D below this level.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Correlation grid over one margin parameter at each of the two sites.
    Heatmap {
        /// Parameter varied at the first site.
        #[arg(long, value_enum, default_value = "beta")]
        axis1: Axis,
        /// `lo:hi:n`, or `lo:hi` for integer powers.
        #[arg(long, default_value = "1:12", allow_hyphen_values = true)]
        range1: String,
        /// Parameter varied at the second site.
        #[arg(long, value_enum, default_value = "beta2")]
        axis2: Axis,
        #[arg(long, default_value = "1:12", allow_hyphen_values = true)]
        range2: String,
        #[arg(long, default_value_t = 3.0)]
        distance: f64,
    },
    /// Check closed forms against both oracles.
    Validate {
        #[arg(long, value_enum, default_value = "quick")]
        suite: SuiteArg,
        /// Relative tolerance for closed form vs quadrature oracle.
        #[arg(long, default_value_t = 1e-5)]
        agreement_tol: f64,
        /// Scale every gamma-function value by `1 + x` (mutation testing).
        #[arg(long, hide = true)]
        perturb_gamma: Option<f64>,
    },
    /// Variance of the aggregated insured loss over the configured region.
    LossVariance,
    /// One covariance with every intermediate quantity.
    Cov {
        #[arg(long)]
        beta1: Option<u32>,
        #[arg(long)]
        beta2: Option<u32>,
        /// Hüsler-Reiss parameter; overrides `--distance`.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 3.0)]
        distance: f64,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. } | Error::Domain(_) | Error::Constraint { .. } => EXIT_CONFIG,
            e if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_OTHER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Failure {
    Error::config(path, message).into()
}

/// Builds the effective configuration: file, then `--set`, then the
/// dedicated flags.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for s in &g.set {
        cfg.set_override(s)?;
    }
    if let Some(p) = &g.out {
        cfg.path = Some(p.clone());
    }
    if let Some(f) = g.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(t) = g.tol {
        cfg.rel_tol = t;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn arg(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Evenly spaced values; `n = None` means every integer in `lo..=hi`.
fn parse_range(path: &str, s: &str, integer: bool) -> std::result::Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| config_error(path, format!("cannot parse `{t}` in range `{s}`")))
    };
    let (lo, hi, n) = match parts.as_slice() {
        [lo, hi] if integer => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            (lo, hi, (hi - lo).round() as usize + 1)
        }
        [lo, hi, n] => (
            num(lo)?,
            num(hi)?,
            n.parse::<usize>()
                .map_err(|_| config_error(path, format!("cannot parse count `{n}`")))?,
        ),
        _ => return Err(config_error(path, format!("expected lo:hi:n, got `{s}`"))),
    };
    if !(lo <= hi) || n < 1 || (n == 1 && lo != hi) {
        return Err(config_error(path, format!("invalid range `{s}`")));
    }
    let values: Vec<f64> = if n == 1 {
        vec![lo]
    } else {
        (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    };
    if integer && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return Err(config_error(path, format!("powers must be positive integers, got `{s}`")));
    }
    Ok(values)
}

fn with_axis(base: &MarginPowerSpec, axis: Axis, v: f64) -> Result<MarginPowerSpec> {
    let mut g = base.gev;
    let mut beta = base.beta();
    match axis {
        Axis::Beta | Axis::Beta2 => beta = v as u32,
        Axis::Eta => g.eta = v,
        Axis::Tau => g.tau = v,
        Axis::Xi => g.xi = v,
    }
    MarginPowerSpec::new(crate::gev::GevParams::new(g.eta, g.tau, g.xi)?, beta)
}

/// Short machine-readable reason for a null heatmap cell.
fn reason_code(e: &Error) -> &'static str {
    match e {
        Error::Constraint { constraint, .. } if constraint.starts_with("beta") => "beta_xi_constraint",
        Error::Constraint { .. } => "mixed_gumbel_margins",
        Error::Domain(_) => "domain",
        Error::NonConvergence { .. } => "nonconvergence",
        Error::NanIntegrand(_) => "nan_integrand",
        Error::IllConditioned { .. } => "ill_conditioned",
        _ => "error",
    }
}

fn cmd_curve(cfg: &RunConfig, min: f64, max: f64, n: usize, threshold: Option<f64>) -> Result<Document> {
    let spec = cfg.spec()?;
    let q = cfg.quadrature()?;
    if let Some(level) = threshold {
        let d = threshold_distance(&spec, level, &q)?;
        eprintln!("first distance with D < {level}: {d:.6}");
        let mut doc = Document::new("curve", vec![arg("threshold", level)]);
        doc.scalar("level", level);
        doc.scalar("threshold_distance", d);
        return Ok(doc);
    }
    if !(min >= 0.0 && min < max) || !max.is_finite() {
        return Err(Error::config("curve.min", format!("need 0 <= min < max, got {min}, {max}")));
    }
    if n < 2 {
        return Err(Error::config("curve.n", format!("need at least 2 points, got {n}")));
    }
    let distances: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { max } else { min + (max - min) * i as f64 / (n - 1) as f64 })
        .collect();
    let curve = correlation_curve(&spec, &distances, &q)?;
    let mut doc = Document::new("curve", vec![arg("min", min), arg("max", max), arg("n", n)]);
    doc.scalar("beta", cfg.beta);
    doc.columns(&["distance", "correlation"]);
    for (d, v) in curve.distances.iter().zip(&curve.values) {
        doc.row(vec![(*d).into(), (*v).into()]);
    }
    Ok(doc)
}

fn cmd_heatmap(
    cfg: &RunConfig,
    axis1: Axis,
    range1: &str,
    axis2: Axis,
    range2: &str,
    distance: f64,
) -> std::result::Result<Document, Failure> {
    let is_int = |a: Axis| matches!(a, Axis::Beta | Axis::Beta2);
    let v1 = parse_range("heatmap.range1", range1, is_int(axis1))?;
    let v2 = parse_range("heatmap.range2", range2, is_int(axis2))?;
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(config_error("heatmap.distance", format!("must be >= 0, got {distance}")));
    }
    let base = cfg.margin()?;
    let q = cfg.quadrature()?;
    let h = lag_to_h([distance, 0.0], &cfg.semivariogram()?);
    let p = HrParams::new(h)?;
    let cells: Vec<(f64, f64)> = v1.iter().flat_map(|&a| v2.iter().map(move |&b| (a, b))).collect();
    let values: Vec<std::result::Result<f64, Error>> = cells
        .par_iter()
        .map(|&(a, b)| {
            let m1 = with_axis(&base, axis1, a)?;
            let m2 = with_axis(&base, axis2, b)?;
            corr_gev_powers(&m1, &m2, &p, &q)
        })
        .collect();
    let name = |a: Axis| format!("{a:?}").to_lowercase();
    let mut doc = Document::new(
        "heatmap",
        vec![
            arg("axis1", name(axis1)),
            arg("range1", range1),
            arg("axis2", name(axis2)),
            arg("range2", range2),
            arg("distance", distance),
        ],
    );
    doc.scalar("distance", distance);
    doc.scalar("h", h);
    doc.columns(&[&format!("{}_site1", name(axis1)), &format!("{}_site2", name(axis2)), "correlation", "reason"]);
    for ((a, b), v) in cells.iter().zip(values) {
        let (value, reason) = match v {
            Ok(x) => (Cell::Num(x), Cell::Null),
            Err(e) if e.is_numerical() && !matches!(e, Error::IllConditioned { .. }) => return Err(e.into()),
            Err(e) => (Cell::Null, Cell::from(reason_code(&e))),
        };
        doc.row(vec![(*a).into(), (*b).into(), value, reason]);
    }
    Ok(doc)
}

fn cmd_validate(
    cfg: &RunConfig,
    suite: SuiteArg,
    tol: f64,
    perturb: Option<f64>,
) -> std::result::Result<(Document, bool), Failure> {
    if let Some(x) = perturb {
        set_gamma_perturbation(x);
    }
    let kind = match suite {
        SuiteArg::Quick => SuiteKind::Quick,
        SuiteArg::Full => SuiteKind::Full,
    };
    let res = run_suite(kind, &cfg.quadrature()?, &cfg.mc()?, tol)?;
    let mut args = vec![arg("suite", format!("{kind:?}").to_lowercase()), arg("agreement_tol", tol)];
    if let Some(x) = perturb {
        args.push(arg("perturb_gamma", x));
    }
    let mut doc = Document::new("validate", args);
    doc.scalar("passed", res.passed());
    doc.columns(&[
        "case",
        "h",
        "analytic",
        "quadrature_oracle",
        "quadrature_relative_error",
        "mc_estimate",
        "mc_std_error",
        "mc_z",
        "quadrature_agrees",
        "mc_agrees",
        "mc_applicable",
        "agrees",
        "error",
    ]);
    for c in &res.cases {
        let h = if c.h.is_nan() { Cell::Null } else { c.h.into() };
        match &c.report {
            Some(r) => doc.row(vec![
                c.label.clone().into(),
                h,
                r.analytic.into(),
                r.quadrature_oracle.into(),
                r.quadrature_relative_error.into(),
                r.mc_estimate.into(),
                r.mc_std_error.into(),
                r.mc_z.into(),
                r.quadrature_agrees.into(),
                r.mc_agrees.into(),
                r.mc_applicable.into(),
                r.agrees.into(),
                Cell::Null,
            ]),
            None => {
                let mut row = vec![c.label.clone().into(), h];
                row.extend(std::iter::repeat_n(Cell::Null, 9));
                row.push(false.into());
                row.push(c.error.clone().into());
                doc.row(row);
            }
        }
    }
    for a in &res.anchors {
        let mut row = vec![format!("anchor:{}", a.name).into(), Cell::Null, a.value.into()];
        row.extend(std::iter::repeat_n(Cell::Null, 8));
        row.push(a.passed.into());
        row.push(a.error.clone().into());
        doc.row(row);
    }
    for f in res.failures() {
        eprintln!("FAILED {f}");
    }
    Ok((doc, res.passed()))
}

fn cmd_loss_variance(cfg: &RunConfig) -> Result<Document> {
    let spec = cfg.spec()?;
    let damage = cfg.damage()?;
    let region = cfg.region()?;
    let q = cfg.quadrature()?;
    let fine = loss_variance(&spec, &damage, &region, cfg.exposure, &q)?;
    // the coarser grid may be too coarse to evaluate; that is not an error
    let coarse = region
        .with_resolution(2.0 * region.resolution)
        .and_then(|r| loss_variance(&spec, &damage, &r, cfg.exposure, &q))
        .ok();
    let delta = coarse.as_ref().map(|c| (fine.value - c.value).abs() / fine.value);
    let mut doc = Document::new("loss-variance", Vec::new());
    doc.scalar("value", fine.value);
    doc.scalar("point_variance", fine.point_variance);
    doc.scalar("correlation_integral", fine.correlation_integral);
    doc.scalar("refinement_delta", delta);
    doc.columns(&[
        "resolution",
        "cells_lon",
        "cells_lat",
        "cell_lon",
        "cell_lat",
        "distinct_lags",
        "correlation_integral",
        "value",
    ]);
    let mut push = |res: f64, lv: &crate::risk::LossVariance| {
        doc.row(vec![
            res.into(),
            lv.cells.0.into(),
            lv.cells.1.into(),
            lv.cell_size.0.into(),
            lv.cell_size.1.into(),
            lv.distinct_lags.into(),
            lv.correlation_integral.into(),
            lv.value.into(),
        ])
    };
    push(region.resolution, &fine);
    if let Some(c) = &coarse {
        push(2.0 * region.resolution, c);
    }
    Ok(doc)
}

fn cmd_cov(cfg: &RunConfig, beta1: Option<u32>, beta2: Option<u32>, h: Option<f64>, distance: f64) -> Result<Document> {
    let gev = cfg.gev()?;
    let m1 = MarginPowerSpec::new(gev, beta1.unwrap_or(cfg.beta))?;
    let m2 = MarginPowerSpec::new(gev, beta2.unwrap_or(cfg.beta))?;
    let h = match h {
        Some(h) => h,
        None => lag_to_h([distance, 0.0], &cfg.semivariogram()?),
    };
    let p = HrParams::new(h)?;
    let q = cfg.quadrature()?;
    let mut args = vec![arg("beta1", m1.beta()), arg("beta2", m2.beta())];
    args.push(arg("h", h));
    let mut doc = Document::new("cov", args);
    let v1 = var_any(&m1)?;
    let v2 = var_any(&m2)?;
    doc.scalar("h", h);
    doc.scalar("var1", v1);
    doc.scalar("var2", v2);
    if gev.xi != 0.0 && p.interior().is_some() {
        doc.columns(&[
            "k1", "k2", "b", "exponent1", "exponent2", "gamma_product", "bracket", "bracket_error", "i_value",
        ]);
        let bd = cov_gev_breakdown(&m1, &m2, &p, &q)?;
        doc.scalar("sum_b_i", bd.sum_b_i);
        doc.scalar("sum_b_gamma", bd.sum_b_gamma);
        doc.scalar("covariance", bd.covariance);
        doc.scalar("error_bound", bd.error_bound);
        doc.scalar("rounding_estimate", bd.rounding_estimate);
        doc.scalar("correlation", bd.covariance / (v1 * v2).sqrt());
        for t in &bd.terms {
            doc.row(vec![
                t.k1.into(),
                t.k2.into(),
                t.b.into(),
                t.exponent1.into(),
                t.exponent2.into(),
                t.gamma_product.into(),
                t.bracket.into(),
                t.bracket_error.into(),
                t.i_value().into(),
            ]);
        }
    } else {
        let c = cov_any(&m1, &m2, &p, &q)?;
        doc.scalar("covariance", c);
        doc.scalar("correlation", c / (v1 * v2).sqrt());
    }
    Ok(doc)
}

/// Runs the parsed command and writes its output; returns the exit code.
pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: EXIT_OTHER,
                message: e.to_string(),
            })?;
    }
    let cfg = resolve_config(&cli.global)?;
    let mut ok = true;
    let doc = match cli.command {
        Command::Curve { min, max, n, threshold } => cmd_curve(&cfg, min, max, n, threshold)?,
        Command::Heatmap {
            axis1,
            range1,
            axis2,
            range2,
            distance,
        } => cmd_heatmap(&cfg, axis1, &range1, axis2, &range2, distance)?,
        Command::Validate {
            suite,
            agreement_tol,
            perturb_gamma,
        } => {
            let (doc, passed) = cmd_validate(&cfg, suite, agreement_tol, perturb_gamma)?;
            ok = passed;
            doc
        }
        Command::LossVariance => cmd_loss_variance(&cfg)?,
        Command::Cov { beta1, beta2, h, distance } => cmd_cov(&cfg, beta1, beta2, h, distance)?,
    };
    doc.write(&cfg)?;
    if ok {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION,
            message: "validation failed".into(),
        })
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("r", "1:4", true).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_range("r", "2:4:3", false).unwrap(), vec![2.0, 3.0, 4.0]);
        assert!(parse_range("r", "1.5:4", true).is_err());
        assert!(parse_range("r", "4:1:3", false).is_err());
        assert!(parse_range("r", "1:2", false).is_err());
    }

    #[test]
    fn cli_parses() {
        let c = Cli::try_parse_from(["powcorr", "--set", "model.psi=2", "curve", "--threshold", "0.1"]).unwrap();
        assert!(matches!(c.command, Command::Curve { threshold: Some(_), .. }));
        assert_eq!(resolve_config(&c.global).unwrap().psi, 2.0);
        let c = Cli::try_parse_from(["powcorr", "heatmap", "--axis1", "eta", "--range1", "15:35:5"]).unwrap();
        assert!(matches!(c.command, Command::Heatmap { axis1: Axis::Eta, .. }));
    }
}
