//! Independent checks of the closed forms: direct quadrature of the joint
//! density and Monte Carlo on an exact sampler of the bivariate law.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gev::{cov_any, var_any, GevParams, MarginPowerSpec};
use crate::hr::{cov_simple_powers, ln_hr_density_at_logs, HrParams, SimplePowerPair};
use crate::numerics::special::{gamma_pos, ln_norm_cdf};
use crate::numerics::{try_integrate_real_line, QuadratureSpec};

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Pair every driver `u` of `z1` with `1 - u`.
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64, antithetic: bool) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::domain("n_samples must be >= 1"));
        }
        Ok(Self {
            n_samples,
            seed,
            antithetic,
        })
    }

    fn unit(&self) -> usize {
        if self.antithetic {
            2
        } else {
            1
        }
    }
}

/// Samples per independent random stream.
const CHUNK: usize = 8192;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Uniform on the open interval `(0, 1)`.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn chunk_len(cfg: &McConfig, chunk: usize) -> usize {
    CHUNK.min(cfg.n_samples - chunk * CHUNK)
}

fn n_chunks(cfg: &McConfig) -> usize {
    cfg.n_samples.div_ceil(CHUNK)
}

/// Drivers `(u1, u2)` of one chunk. With antithetic sampling consecutive samples
/// share `u1` reflected; `u2` is always fresh.
fn chunk_drivers(cfg: &McConfig, chunk: usize) -> Vec<(f64, f64)> {
    let mut rng = chunk_rng(cfg.seed, chunk);
    let len = chunk_len(cfg, chunk);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let u1 = open_uniform(&mut rng);
        let u2 = open_uniform(&mut rng);
        out.push((u1, u2));
        if cfg.antithetic && out.len() < len {
            let u2b = open_uniform(&mut rng);
            out.push((1.0 - u1, u2b));
        }
    }
    out
}

/// Standard Fréchet quantile.
#[inline]
fn frechet_quantile(u: f64) -> f64 {
    -1.0 / u.ln()
}

/// `ln P(Z2 <= exp(x) | Z1 = z1)` for `0 < h < inf`.
///
/// `dH/dz1 = H Phi(w) / z1^2`, so dividing by the Fréchet density leaves
/// `Phi(w) exp(Phi(-w) / z1 - Phi(v) / z2)`.
fn ln_conditional_cdf(x: f64, ln_z1: f64, h: f64) -> f64 {
    let r = (x - ln_z1) / h;
    let w = 0.5 * h + r;
    let v = 0.5 * h - r;
    ln_norm_cdf(w) + (ln_norm_cdf(-w) - ln_z1).exp() - (ln_norm_cdf(v) - x).exp()
}

/// `P(Z2 <= z2 | Z1 = z1)`.
pub fn conditional_cdf(z2: f64, z1: f64, p: &HrParams) -> Result<f64> {
    let h = interior_h(p)?;
    if !(z1 > 0.0 && z2 > 0.0) {
        return Err(Error::domain("conditional_cdf needs z1, z2 > 0"));
    }
    Ok(ln_conditional_cdf(z2.ln(), z1.ln(), h).exp())
}

fn interior_h(p: &HrParams) -> Result<f64> {
    p.interior().ok_or_else(|| {
        Error::domain(format!(
            "the oracle needs 0 < h < inf, got h = {}",
            p.h()
        ))
    })
}

/// Quantile of `Z2` given `Z1 = z1` at level `u`, by bracketed Newton in `ln z2`.
pub fn conditional_quantile(z1: f64, u: f64, h: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) || !(z1 > 0.0) || !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!(
            "conditional_quantile needs z1 > 0, 0 < u < 1, 0 < h < inf; got {z1}, {u}, {h}"
        )));
    }
    let lz1 = z1.ln();
    let target = u.ln();
    let g = |x: f64| ln_conditional_cdf(x, lz1, h) - target;
    let mut lo = 1e-8f64.ln();
    let mut hi = 1e8f64.ln();
    let mut width = hi - lo;
    let mut expansions = 0;
    while g(lo) > 0.0 {
        lo -= width;
        width *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Inversion(format!("no lower bracket for z1 = {z1}, u = {u}")));
        }
    }
    width = hi - lo;
    while g(hi) < 0.0 {
        hi += width;
        width *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Inversion(format!("no upper bracket for z1 = {z1}, u = {u}")));
        }
    }
    // ln f1(z1) of the Fréchet margin
    let ln_f1 = -2.0 * lz1 - 1.0 / z1;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            break;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d ln F / dx = z2 l(z1, z2) / (f1(z1) F)
        let ln_f = x + ln_hr_density_at_logs(lz1, x, h) - ln_f1;
        let slope = (ln_f - (gx + target)).exp();
        let newton = x - gx / slope;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs())
            || (hi - lo) <= 4.0 * f64::EPSILON * (1.0 + x.abs());
        x = next;
        if done {
            break;
        }
    }
    let gx = g(x);
    // relative accuracy of F, and of 1 - F through ln F near the top
    if !(gx.abs() <= 1e-12 * target.abs().max(1e-4)) && !(gx.abs() <= 1e-12) {
        return Err(Error::Inversion(format!(
            "conditional CDF residual {gx:e} at z1 = {z1}, u = {u}"
        )));
    }
    Ok(x.exp())
}

fn sample_chunk(p: &HrParams, cfg: &McConfig, chunk: usize) -> Result<Vec<(f64, f64)>> {
    let h = interior_h(p)?;
    chunk_drivers(cfg, chunk)
        .into_iter()
        .map(|(u1, u2)| {
            let z1 = frechet_quantile(u1);
            Ok((z1, conditional_quantile(z1, u2, h)?))
        })
        .collect()
}

/// Draws from the bivariate law, reproducible for a given configuration.
///
/// `z1` is a Fréchet quantile of a uniform and `z2` inverts the conditional law
/// of `Z2` given `Z1 = z1`. Streams are split into fixed chunks with their own
/// ChaCha stream, so the output does not depend on the thread count.
pub fn sample_hr(p: &HrParams, cfg: &McConfig) -> Result<Vec<(f64, f64)>> {
    interior_h(p)?;
    let chunks: Vec<Vec<(f64, f64)>> = (0..n_chunks(cfg))
        .into_par_iter()
        .map(|c| sample_chunk(p, cfg, c))
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// A stored sample reused for many functionals.
#[derive(Debug, Clone)]
pub struct HrSample {
    pub pairs: Vec<(f64, f64)>,
    unit: usize,
}

impl HrSample {
    pub fn draw(p: &HrParams, cfg: &McConfig) -> Result<Self> {
        Ok(Self {
            pairs: sample_hr(p, cfg)?,
            unit: cfg.unit(),
        })
    }

    /// Sample covariance of `f1(z1)` and `f2(z2)`; the standard error comes from
    /// the influence function, averaged over antithetic pairs when present.
    pub fn covariance<F1, F2>(&self, f1: F1, f2: F2) -> McEstimate
    where
        F1: Fn(f64) -> f64,
        F2: Fn(f64) -> f64,
    {
        let xy: Vec<(f64, f64)> = self.pairs.iter().map(|&(a, b)| (f1(a), f2(b))).collect();
        covariance_of(&xy, self.unit)
    }

    /// Fraction of pairs with `z1 <= a` and `z2 <= b`.
    pub fn joint_cdf(&self, a: f64, b: f64) -> McEstimate {
        let n = self.pairs.len() as f64;
        let hits = self.pairs.iter().filter(|&&(x, y)| x <= a && y <= b).count() as f64;
        let pr = hits / n;
        McEstimate {
            value: pr,
            std_error: (pr * (1.0 - pr) / n).sqrt(),
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    xs.sum::<f64>() / n as f64
}

fn unit_se(psi: &[f64], unit: usize) -> f64 {
    let units: Vec<f64> = psi
        .chunks(unit)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let m = units.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let mu = units.iter().sum::<f64>() / m as f64;
    let ss: f64 = units.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / ((m - 1) as f64 * m as f64)).sqrt()
}

fn covariance_of(xy: &[(f64, f64)], unit: usize) -> McEstimate {
    let n = xy.len();
    let mx = mean(xy.iter().map(|p| p.0), n);
    let my = mean(xy.iter().map(|p| p.1), n);
    let prods: Vec<f64> = xy.iter().map(|&(x, y)| (x - mx) * (y - my)).collect();
    let c = mean(prods.iter().copied(), n);
    let psi: Vec<f64> = prods.iter().map(|v| v - c).collect();
    McEstimate {
        value: c,
        std_error: unit_se(&psi, unit),
    }
}

/// Monte Carlo variance of `X^beta` from standard Fréchet draws pushed through
/// the GEV transform. Only `z1` drivers are used.
pub fn mc_var_gev_power(spec: &MarginPowerSpec, cfg: &McConfig) -> Result<McEstimate> {
    spec.check()?;
    let beta = spec.beta() as i32;
    let gev = spec.gev;
    let values = |c: usize| -> Vec<f64> {
        chunk_drivers(cfg, c)
            .into_iter()
            .map(|(u, _)| gev_at_log(-(-u.ln()).ln(), &gev).powi(beta))
            .collect()
    };
    let n = cfg.n_samples;
    // two passes over regenerated chunks keep memory flat for large n
    let sums: Vec<f64> = (0..n_chunks(cfg))
        .into_par_iter()
        .map(|c| values(c).iter().sum::<f64>())
        .collect();
    let m = sums.iter().sum::<f64>() / n as f64;
    let moments: Vec<(f64, Vec<f64>)> = (0..n_chunks(cfg))
        .into_par_iter()
        .map(|c| {
            let dev: Vec<f64> = values(c).iter().map(|y| (y - m) * (y - m)).collect();
            (dev.iter().sum::<f64>(), dev)
        })
        .collect();
    let v = moments.iter().map(|x| x.0).sum::<f64>() / n as f64;
    let psi: Vec<f64> = moments
        .iter()
        .flat_map(|(_, dev)| dev.iter().map(|d| d - v))
        .collect();
    Ok(McEstimate {
        value: v,
        std_error: unit_se(&psi, cfg.unit()),
    })
}

/// `X = eta + tau (z^xi - 1) / xi` given `u = ln z`, safe for huge `|u|`.
fn gev_at_log(u: f64, g: &GevParams) -> f64 {
    if g.xi == 0.0 {
        g.eta + g.tau * u
    } else {
        g.eta + g.tau * (g.xi * u).exp_m1() / g.xi
    }
}

// Mass of the Fréchet margin in u = ln z sits around u = 0 with a double
// exponential left tail and an exponential right tail.
const MARGIN_BREAKS: [f64; 12] = [
    -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0,
];

fn inner_breaks(u1: f64, h: f64) -> Vec<f64> {
    let mut v: Vec<f64> = MARGIN_BREAKS.to_vec();
    for k in [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0] {
        v.push(u1 + k * h);
    }
    v.push(u1 + 0.5 * h * h);
    v.push(u1 - 0.5 * h * h);
    v
}

fn inner_spec(q: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        relative_tolerance: (0.1 * q.relative_tolerance).max(1e-14),
        absolute_tolerance: 0.0,
        max_subdivisions: q.max_subdivisions.max(1000),
    }
}

/// `E[exp(ln_phi1(u1) + ln_phi2(u2))]` style joint expectation with integrand
/// `integrand(u1, u2, ln_density)` in log coordinates.
fn joint_expectation<F>(h: f64, integrand: F, q: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let inner = inner_spec(q);
    let outer = |u1: f64| -> Result<f64> {
        let f = |u2: f64| -> Result<f64> {
            // density of (ln Z1, ln Z2)
            let ln_dens = u1 + u2 + ln_hr_density_at_logs(u1, u2, h);
            Ok(integrand(u1, u2, ln_dens))
        };
        Ok(try_integrate_real_line(f, &inner_breaks(u1, h), &inner)?.value)
    };
    Ok(try_integrate_real_line(outer, &MARGIN_BREAKS, q)?.value)
}

/// `E[phi(Z)]` for standard Fréchet `Z`, with `phi` given in `u = ln z`.
fn marginal_expectation<F>(phi: F, q: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let f = |u: f64| -> Result<f64> {
        let dens = (-u - (-u).exp()).exp();
        if dens == 0.0 {
            return Ok(0.0);
        }
        Ok(phi(u) * dens)
    };
    Ok(try_integrate_real_line(f, &MARGIN_BREAKS, &inner_spec(q))?.value)
}

fn ln_power_integrand(b1: f64, b2: f64) -> impl Fn(f64, f64, f64) -> f64 + Sync {
    move |u1, u2, ln_dens| (b1 * u1 + b2 * u2 + ln_dens).exp()
}

/// `E[Z1^beta1 Z2^beta2]` by two-dimensional quadrature of the joint density.
pub fn moment_by_density_quadrature(
    beta1: f64,
    beta2: f64,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    SimplePowerPair::new(beta1, beta2)?;
    let h = interior_h(p)?;
    joint_expectation(h, ln_power_integrand(beta1, beta2), q)
}

/// `E[Z^beta]` for standard Fréchet `Z` by one-dimensional quadrature.
pub fn marginal_moment_by_quadrature(beta: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(beta < 1.0) {
        return Err(Error::domain(format!("E[Z^beta] needs beta < 1, got {beta}")));
    }
    marginal_expectation(|u| (beta * u).exp(), q)
}

/// `Cov(Z1^beta1, Z2^beta2)` using quadrature only.
pub fn cov_simple_by_quadrature(
    beta1: f64,
    beta2: f64,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    let joint = moment_by_density_quadrature(beta1, beta2, p, q)?;
    let m1 = marginal_moment_by_quadrature(beta1, q)?;
    let m2 = marginal_moment_by_quadrature(beta2, q)?;
    Ok(joint - m1 * m2)
}

/// `Cov(X1^beta1, X2^beta2)` for GEV margins using quadrature only.
pub fn cov_gev_by_quadrature(
    spec1: &MarginPowerSpec,
    spec2: &MarginPowerSpec,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    spec1.check()?;
    spec2.check()?;
    let h = interior_h(p)?;
    let (g1, g2) = (spec1.gev, spec2.gev);
    let (b1, b2) = (spec1.beta() as i32, spec2.beta() as i32);
    let joint = joint_expectation(
        h,
        move |u1, u2, ln_dens| {
            let d = ln_dens.exp();
            if d == 0.0 {
                return 0.0;
            }
            gev_at_log(u1, &g1).powi(b1) * gev_at_log(u2, &g2).powi(b2) * d
        },
        q,
    )?;
    let m1 = marginal_expectation(|u| gev_at_log(u, &g1).powi(b1), q)?;
    let m2 = marginal_expectation(|u| gev_at_log(u, &g2).powi(b2), q)?;
    Ok(joint - m1 * m2)
}

/// `Var(X^beta)` using quadrature only.
pub fn var_gev_by_quadrature(spec: &MarginPowerSpec, q: &QuadratureSpec) -> Result<f64> {
    spec.check()?;
    let g = spec.gev;
    let b = spec.beta() as i32;
    let m2 = marginal_expectation(|u| gev_at_log(u, &g).powi(2 * b), q)?;
    let m1 = marginal_expectation(|u| gev_at_log(u, &g).powi(b), q)?;
    Ok(m2 - m1 * m1)
}

/// What a validation run checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationTarget {
    SimpleCov { beta1: f64, beta2: f64 },
    GevCov { spec1: MarginPowerSpec, spec2: MarginPowerSpec },
    GevVar { spec: MarginPowerSpec },
}

impl ValidationTarget {
    pub fn label(&self) -> String {
        match self {
            Self::SimpleCov { beta1, beta2 } => format!("simple_cov({beta1},{beta2})"),
            Self::GevCov { spec1, spec2 } => {
                format!("gev_cov(beta1={},beta2={})", spec1.beta(), spec2.beta())
            }
            Self::GevVar { spec } => format!("gev_var(beta={})", spec.beta()),
        }
    }
}

/// Analytic value next to both oracles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub target: String,
    pub h: f64,
    pub analytic: f64,
    pub quadrature_oracle: f64,
    /// `|analytic - quadrature| / scale`
    pub quadrature_relative_error: f64,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    /// `|analytic - mc| / mc_std_error`
    pub mc_z: f64,
    pub quadrature_agrees: bool,
    /// `|analytic - mc| <= 3 mc_std_error`
    pub mc_agrees: bool,
    /// Whether the sample mean being compared has finite variance; see
    /// [`mc_variance_finite`].
    pub mc_applicable: bool,
    /// Quadrature agreement, plus Monte Carlo agreement where applicable.
    pub agrees: bool,
}

/// Exponent `e` such that `f(Z)` grows like `Z^e`: the power itself for simple
/// margins, `beta xi` for GEV margins with `xi > 0`, and zero for bounded or
/// Gumbel margins.
fn growth(beta: f64, xi: f64) -> f64 {
    (beta * xi).max(0.0)
}

/// True when the Monte Carlo estimator behind `target` has finite variance,
/// which is what a standard-error comparison presupposes.
///
/// A covariance estimate averages `f1(Z1) f2(Z2)`; its variance needs
/// `E[f1^2 f2^2] < inf`, i.e. `2 (e1 + e2) < 1` under asymptotic dependence.
/// A variance estimate needs the fourth moment, `4 e < 1`.
pub fn mc_variance_finite(target: &ValidationTarget) -> bool {
    match target {
        ValidationTarget::SimpleCov { beta1, beta2 } => {
            2.0 * (growth(*beta1, 1.0) + growth(*beta2, 1.0)) < 1.0
        }
        ValidationTarget::GevCov { spec1, spec2 } => {
            2.0 * (growth(spec1.beta() as f64, spec1.gev.xi)
                + growth(spec2.beta() as f64, spec2.gev.xi))
                < 1.0
        }
        ValidationTarget::GevVar { spec } => 4.0 * growth(spec.beta() as f64, spec.gev.xi) < 1.0,
    }
}

/// Denominator for relative comparisons. An exactly-zero covariance (a zero
/// exponent) is compared on the scale of the moments involved instead.
fn comparison_scale(target: &ValidationTarget, analytic: f64) -> Result<f64> {
    if analytic != 0.0 {
        return Ok(analytic.abs());
    }
    Ok(match target {
        ValidationTarget::SimpleCov { beta1, beta2 } => {
            gamma_pos(1.0 - beta1)
                * gamma_pos(1.0 - beta2)
        }
        ValidationTarget::GevCov { spec1, spec2 } => (var_any(spec1)? * var_any(spec2)?).sqrt(),
        ValidationTarget::GevVar { .. } => 1.0,
    })
}

fn analytic_value(target: &ValidationTarget, p: &HrParams, q: &QuadratureSpec) -> Result<f64> {
    match target {
        ValidationTarget::SimpleCov { beta1, beta2 } => {
            cov_simple_powers(SimplePowerPair::new(*beta1, *beta2)?, p, q)
        }
        ValidationTarget::GevCov { spec1, spec2 } => cov_any(spec1, spec2, p, q),
        ValidationTarget::GevVar { spec } => var_any(spec),
    }
}

fn quadrature_value(target: &ValidationTarget, p: &HrParams, q: &QuadratureSpec) -> Result<f64> {
    match target {
        ValidationTarget::SimpleCov { beta1, beta2 } => cov_simple_by_quadrature(*beta1, *beta2, p, q),
        ValidationTarget::GevCov { spec1, spec2 } => cov_gev_by_quadrature(spec1, spec2, p, q),
        ValidationTarget::GevVar { spec } => var_gev_by_quadrature(spec, q),
    }
}

fn mc_value(target: &ValidationTarget, sample: Option<&HrSample>, cfg: &McConfig) -> Result<McEstimate> {
    let need = || sample.ok_or_else(|| Error::domain("a joint sample is required"));
    Ok(match target {
        ValidationTarget::SimpleCov { beta1, beta2 } => {
            let (a, b) = (*beta1, *beta2);
            need()?.covariance(|z| z.powf(a), |z| z.powf(b))
        }
        ValidationTarget::GevCov { spec1, spec2 } => {
            let (g1, g2) = (spec1.gev, spec2.gev);
            let (b1, b2) = (spec1.beta() as i32, spec2.beta() as i32);
            need()?.covariance(
                |z| gev_at_log(z.ln(), &g1).powi(b1),
                |z| gev_at_log(z.ln(), &g2).powi(b2),
            )
        }
        ValidationTarget::GevVar { spec } => mc_var_gev_power(spec, cfg)?,
    })
}

/// Runs both oracles against the closed form.
///
/// Agreement means a relative quadrature discrepancy below `tol` and a Monte
/// Carlo discrepancy within three standard errors. The Monte Carlo condition is
/// waived when the estimator has infinite variance, as its standard error is
/// then meaningless; `mc_agrees` still records the raw comparison.
pub fn validate(
    target: &ValidationTarget,
    p: &HrParams,
    q: &QuadratureSpec,
    cfg: &McConfig,
    tol: f64,
) -> Result<OracleReport> {
    let sample = match target {
        ValidationTarget::GevVar { .. } => None,
        _ => Some(HrSample::draw(p, cfg)?),
    };
    validate_with_sample(target, p, q, sample.as_ref(), cfg, tol)
}

/// As [`validate`], reusing an existing joint sample drawn at the same `h`.
pub fn validate_with_sample(
    target: &ValidationTarget,
    p: &HrParams,
    q: &QuadratureSpec,
    sample: Option<&HrSample>,
    cfg: &McConfig,
    tol: f64,
) -> Result<OracleReport> {
    if !matches!(target, ValidationTarget::GevVar { .. }) {
        interior_h(p)?;
    }
    let analytic = analytic_value(target, p, q)?;
    let quadrature_oracle = quadrature_value(target, p, q)?;
    let mc = mc_value(target, sample, cfg)?;
    let scale = comparison_scale(target, analytic)?;
    let quadrature_relative_error = (analytic - quadrature_oracle).abs() / scale;
    let diff = (analytic - mc.value).abs();
    let mc_z = if mc.std_error > 0.0 {
        diff / mc.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let quadrature_agrees = quadrature_relative_error < tol;
    let mc_agrees = diff <= 3.0 * mc.std_error;
    let mc_applicable = mc_variance_finite(target);
    Ok(OracleReport {
        target: target.label(),
        h: p.h(),
        analytic,
        quadrature_oracle,
        quadrature_relative_error,
        mc_estimate: mc.value,
        mc_std_error: mc.std_error,
        mc_z,
        quadrature_agrees,
        mc_agrees,
        mc_applicable,
        agrees: quadrature_agrees && (mc_agrees || !mc_applicable),
    })
}
