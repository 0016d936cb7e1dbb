//! Fixed validation suites run by `powcorr validate`.

use serde::Serialize;

use crate::brown_resnick::{dependence_at_h, lag_to_h, threshold_distance, BrownResnickSpec, SemivariogramModel};
use crate::error::Result;
use crate::gev::{GevParams, MarginPowerSpec};
use crate::hr::HrParams;
use crate::numerics::QuadratureSpec;
use crate::oracle::{validate_with_sample, HrSample, McConfig, OracleReport, ValidationTarget};

/// Exponents of the simple-margin lattice.
pub const LATTICE_BETAS: [f64; 5] = [-1.0, -0.5, 0.0, 0.25, 0.45];
/// Dependence parameters shared by every oracle case.
pub const LATTICE_H: [f64; 3] = [0.2, 1.0, 3.0];
/// Joint sample size of the quick suite.
pub const QUICK_SAMPLES: usize = 100_000;
/// Marginal variance checks draw this many times the joint sample size.
pub const VAR_SAMPLE_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Quick,
    Full,
}

/// A closed-form value that must land in a fixed interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorCheck {
    pub name: String,
    pub value: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub error: Option<String>,
    pub passed: bool,
}

/// Outcome of one oracle case; `report` is missing when evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub label: String,
    pub h: f64,
    pub report: Option<OracleReport>,
    pub error: Option<String>,
}

impl CaseOutcome {
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.agrees)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub kind: SuiteKind,
    pub cases: Vec<CaseOutcome>,
    pub anchors: Vec<AnchorCheck>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(CaseOutcome::passed) && self.anchors.iter().all(|a| a.passed)
    }

    /// One line per failing case or anchor.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .cases
            .iter()
            .filter(|c| !c.passed())
            .map(|c| match (&c.report, &c.error) {
                (Some(r), _) => format!(
                    "{} at h = {}: quadrature rel. error {:.3e}, MC z = {:.2}",
                    c.label, c.h, r.quadrature_relative_error, r.mc_z
                ),
                (None, Some(e)) => format!("{} at h = {}: {e}", c.label, c.h),
                (None, None) => format!("{} at h = {}", c.label, c.h),
            })
            .collect();
        out.extend(self.anchors.iter().filter(|a| !a.passed).map(|a| match (&a.value, &a.error) {
            (Some(v), _) => format!("{}: {v} outside [{}, {}]", a.name, a.lo, a.hi),
            (None, e) => format!("{}: {}", a.name, e.clone().unwrap_or_default()),
        }));
        out
    }
}

/// Cases of the quick suite: three mixed-sign pairs at every lattice `h`.
pub fn quick_targets() -> Vec<ValidationTarget> {
    [(-1.0, -0.5), (0.25, -1.0), (0.2, 0.2)]
        .iter()
        .map(|&(beta1, beta2)| ValidationTarget::SimpleCov { beta1, beta2 })
        .collect()
}

/// The full `5 x 5` simple-margin lattice.
pub fn lattice_targets() -> Vec<ValidationTarget> {
    let mut out = Vec::new();
    for &beta1 in &LATTICE_BETAS {
        for &beta2 in &LATTICE_BETAS {
            out.push(ValidationTarget::SimpleCov { beta1, beta2 });
        }
    }
    out
}

fn case_study_margin(beta: u32) -> Result<MarginPowerSpec> {
    MarginPowerSpec::new(GevParams::case_study(), beta)
}

fn joint_cases(
    targets: &[ValidationTarget],
    hs: &[f64],
    q: &QuadratureSpec,
    cfg: &McConfig,
    tol: f64,
) -> Result<Vec<CaseOutcome>> {
    let mut out = Vec::new();
    for &h in hs {
        let p = HrParams::new(h)?;
        let sample = HrSample::draw(&p, cfg);
        for t in targets {
            let res = sample
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|s| validate_with_sample(t, &p, q, Some(s), cfg, tol));
            out.push(outcome(t, h, res));
        }
    }
    Ok(out)
}

fn outcome(t: &ValidationTarget, h: f64, res: Result<OracleReport>) -> CaseOutcome {
    match res {
        Ok(r) => CaseOutcome {
            label: t.label(),
            h,
            report: Some(r),
            error: None,
        },
        Err(e) => CaseOutcome {
            label: t.label(),
            h,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

fn anchor(name: &str, lo: f64, hi: f64, value: Result<f64>) -> AnchorCheck {
    match value {
        Ok(v) => AnchorCheck {
            name: name.to_string(),
            value: Some(v),
            lo,
            hi,
            error: None,
            passed: v >= lo && v <= hi,
        },
        Err(e) => AnchorCheck {
            name: name.to_string(),
            value: None,
            lo,
            hi,
            error: Some(e.to_string()),
            passed: false,
        },
    }
}

/// Correlation-curve and threshold values of the wind-gust case study.
pub fn case_study_anchors(q: &QuadratureSpec) -> Result<Vec<AnchorCheck>> {
    let spec = BrownResnickSpec::case_study(10)?;
    let m = case_study_margin(10)?;
    let d_at = |d: f64| dependence_at_h(&m, lag_to_h([d, 0.0], &spec.semivariogram), q);
    let smooth = BrownResnickSpec::stationary(SemivariogramModel::power(3.39, 2.0)?, m)?;
    Ok(vec![
        anchor("D(5)", 0.63, 0.67, d_at(5.0)),
        anchor("D(10)", 0.46, 0.50, d_at(10.0)),
        anchor("threshold(0.1, psi=0.81)", 43.10, 44.10, threshold_distance(&spec, 0.1, q)),
        anchor("threshold(0.1, psi=2)", 9.24, 9.84, threshold_distance(&smooth, 0.1, q)),
    ])
}

/// Runs a suite. The quick suite uses [`QUICK_SAMPLES`] joint draws; the full
/// one uses `cfg.n_samples` and adds GEV covariances (also at the `h` of
/// distance 5 in the case study), marginal variances and the case-study anchors.
pub fn run_suite(kind: SuiteKind, q: &QuadratureSpec, cfg: &McConfig, tol: f64) -> Result<SuiteResult> {
    match kind {
        SuiteKind::Quick => {
            let cfg = McConfig::new(QUICK_SAMPLES, cfg.seed, cfg.antithetic)?;
            Ok(SuiteResult {
                kind,
                cases: joint_cases(&quick_targets(), &LATTICE_H, q, &cfg, tol)?,
                anchors: Vec::new(),
            })
        }
        SuiteKind::Full => {
            let m10 = case_study_margin(10)?;
            let mut targets = lattice_targets();
            targets.push(ValidationTarget::GevCov { spec1: m10, spec2: m10 });
            targets.push(ValidationTarget::GevCov {
                spec1: case_study_margin(2)?,
                spec2: m10,
            });
            let mut cases = joint_cases(&targets, &LATTICE_H, q, cfg, tol)?;
            // the case behind the D(5) anchor
            let h5 = lag_to_h([5.0, 0.0], &SemivariogramModel::case_study());
            let anchor_case = ValidationTarget::GevCov { spec1: m10, spec2: m10 };
            cases.extend(joint_cases(&[anchor_case], &[h5], q, cfg, tol)?);
            let var_cfg = McConfig::new(cfg.n_samples * VAR_SAMPLE_FACTOR, cfg.seed, cfg.antithetic)?;
            // h plays no role for a marginal variance
            let p = HrParams::new(1.0)?;
            for beta in [1, 2, 3, 10] {
                let t = ValidationTarget::GevVar {
                    spec: case_study_margin(beta)?,
                };
                cases.push(outcome(&t, f64::NAN, validate_with_sample(&t, &p, q, None, &var_cfg, tol)));
            }
            Ok(SuiteResult {
                kind,
                cases,
                anchors: case_study_anchors(q)?,
            })
        }
    }
}
