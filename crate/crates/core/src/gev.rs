//! Integer powers of GEV-transformed Hüsler-Reiss vectors.
//!
//! With `X = (eta - tau/xi) + (tau/xi) Z^xi`, the binomial expansion of `X^beta`
//! turns every moment into a finite sum over simple-margin moments of `Z`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hr::{cov_simple_powers_estimate, Dependence, HrParams, SimplePowerPair};
use crate::numerics::quadrature::neumaier_sum;
use crate::numerics::special::{binomial, gamma_cov_bracket, gamma_pos};
use crate::numerics::QuadratureSpec;

/// Largest supported integer power; binomials stay exact in `u64` well past it.
pub const MAX_BETA: u32 = 60;

/// Location `eta`, scale `tau` and shape `xi` of a GEV margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub eta: f64,
    pub tau: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(eta: f64, tau: f64, xi: f64) -> Result<Self> {
        if !eta.is_finite() || !xi.is_finite() {
            return Err(Error::domain(format!(
                "GEV parameters must be finite, got eta = {eta}, xi = {xi}"
            )));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("GEV scale must be > 0, got tau = {tau}")));
        }
        Ok(Self { eta, tau, xi })
    }

    /// Values fitted on the full grid in the wind-gust case study.
    pub fn case_study() -> Self {
        Self {
            eta: 25.71,
            tau: 3.03,
            xi: -0.12,
        }
    }
}

/// Positive integer exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerPower(u32);

impl IntegerPower {
    pub fn new(beta: u32) -> Result<Self> {
        if beta == 0 || beta > MAX_BETA {
            return Err(Error::domain(format!(
                "power must lie in 1..={MAX_BETA}, got {beta}"
            )));
        }
        Ok(Self(beta))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// GEV margin together with the power applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginPowerSpec {
    pub gev: GevParams,
    pub power: IntegerPower,
}

impl MarginPowerSpec {
    pub fn new(gev: GevParams, beta: u32) -> Result<Self> {
        let power = IntegerPower::new(beta)?;
        let spec = Self { gev, power };
        spec.check()?;
        Ok(spec)
    }

    pub fn beta(&self) -> u32 {
        self.power.0
    }

    /// Second moment of `X^beta` exists iff `beta xi < 1/2`.
    pub fn check(&self) -> Result<()> {
        let bx = self.beta() as f64 * self.gev.xi;
        if !(bx < 0.5) {
            return Err(Error::Constraint {
                constraint: "beta * xi < 1/2",
                detail: format!("beta = {}, xi = {}", self.beta(), self.gev.xi),
            });
        }
        Ok(())
    }

    fn with_xi(self, xi: f64) -> Self {
        Self {
            gev: GevParams { xi, ..self.gev },
            ..self
        }
    }

    /// `C(beta, k) (eta - tau/xi)^k (tau/xi)^(beta-k)` for `k = 0..=beta`.
    fn factors(&self) -> Vec<f64> {
        let b = self.beta();
        let GevParams { eta, tau, xi } = self.gev;
        let ratio = tau / xi;
        let shift = eta - ratio;
        (0..=b)
            .map(|k| binomial(b, k) * shift.powi(k as i32) * ratio.powi((b - k) as i32))
            .collect()
    }

    /// Exponent of `Z` in the `k`-th expansion term.
    fn exponent(&self, k: u32) -> f64 {
        // `+ 0.0` turns the `-0.0` of `k = beta` into `0.0`
        (self.beta() - k) as f64 * self.gev.xi + 0.0
    }
}

/// `eta + tau (z^xi - 1) / xi`, or `eta + tau ln z` when `xi = 0`.
pub fn gev_transform(z: f64, g: &GevParams) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain(format!("gev_transform needs z > 0, got {z}")));
    }
    let lz = z.ln();
    Ok(if g.xi == 0.0 {
        g.eta + g.tau * lz
    } else {
        g.eta + g.tau * (g.xi * lz).exp_m1() / g.xi
    })
}

fn require_nonzero_shape(specs: &[&MarginPowerSpec]) -> Result<()> {
    for s in specs {
        s.check()?;
        if s.gev.xi == 0.0 {
            return Err(Error::domain(
                "the expansion needs xi != 0; use the Gumbel-limit evaluation for xi = 0",
            ));
        }
    }
    Ok(())
}

/// Coefficient `B` of the `(k1, k2)` term.
pub fn b_coeff(k1: u32, k2: u32, spec1: &MarginPowerSpec, spec2: &MarginPowerSpec) -> Result<f64> {
    require_nonzero_shape(&[spec1, spec2])?;
    if k1 > spec1.beta() || k2 > spec2.beta() {
        return Err(Error::domain(format!(
            "need k1 <= {} and k2 <= {}, got ({k1}, {k2})",
            spec1.beta(),
            spec2.beta()
        )));
    }
    Ok(spec1.factors()[k1 as usize] * spec2.factors()[k2 as usize])
}

/// One `(k1, k2)` term of the double sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub k1: u32,
    pub k2: u32,
    pub b: f64,
    /// `(beta1 - k1) xi1`
    pub exponent1: f64,
    /// `(beta2 - k2) xi2`
    pub exponent2: f64,
    /// `Gamma(1 - exponent1) Gamma(1 - exponent2)`
    pub gamma_product: f64,
    /// `I_{exponent1, exponent2}(h) - gamma_product`
    pub bracket: f64,
    pub bracket_error: f64,
}

impl ExpansionTerm {
    /// `I_{exponent1, exponent2}(h)`.
    pub fn i_value(&self) -> f64 {
        self.gamma_product + self.bracket
    }
}

/// Every term of the covariance expansion plus the assembled sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovBreakdown {
    pub h: f64,
    pub terms: Vec<ExpansionTerm>,
    /// `sum B I`
    pub sum_b_i: f64,
    /// `sum B Gamma Gamma`
    pub sum_b_gamma: f64,
    pub covariance: f64,
    /// Quadrature error propagated through `|B|`.
    pub error_bound: f64,
    /// Relative rounding error of `covariance` from cancellation among the terms.
    pub rounding_estimate: f64,
}

/// Largest tolerated [`rounding_estimate`](CovBreakdown::rounding_estimate).
///
/// The terms of the expansion grow like `(tau / xi)^(beta1 + beta2)` while the
/// result does not, so small `|xi|` with a large power loses every digit.
pub const MAX_ROUNDING: f64 = 1e-4;

/// `eps * sum |terms| / |sum|`: the relative error left by rounding each term once.
fn rounding_estimate(values: &[f64], sum: f64) -> f64 {
    let abs: f64 = values.iter().map(|v| v.abs()).sum();
    if abs == 0.0 {
        return 0.0;
    }
    f64::EPSILON * abs / sum.abs()
}

fn check_rounding(what: &'static str, estimate: f64) -> Result<()> {
    // NaN (an exact zero sum of non-zero terms) is rejected as well
    if estimate <= MAX_ROUNDING {
        Ok(())
    } else {
        Err(Error::IllConditioned {
            what,
            estimate,
            limit: MAX_ROUNDING,
        })
    }
}

type BracketKey = (u64, u64);

fn key(a: f64, b: f64) -> BracketKey {
    // brackets are symmetric in their two exponents
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    (a.to_bits(), b.to_bits())
}

/// Covariance brackets for every distinct exponent pair, evaluated in parallel.
fn brackets(
    pairs: &[(f64, f64)],
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<HashMap<BracketKey, (f64, f64)>> {
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in pairs {
        if seen.insert(key(a, b)) {
            distinct.push((a, b));
        }
    }
    let values: Vec<Result<(BracketKey, (f64, f64))>> = distinct
        .par_iter()
        .map(|&(a, b)| {
            let est = cov_simple_powers_estimate(SimplePowerPair::new(a, b)?, p, q)?;
            Ok((key(a, b), (est.value, est.error)))
        })
        .collect();
    values.into_iter().collect()
}

/// Compensated sum of `values` taken in descending order of `|weights|`.
fn ordered_sum(weights: &[f64], values: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| weights[j].abs().total_cmp(&weights[i].abs()).then(i.cmp(&j)));
    neumaier_sum(idx.into_iter().map(|i| values[i]))
}

/// Full expansion of `Cov(X1^beta1, X2^beta2)` with all intermediate quantities.
pub fn cov_gev_breakdown(
    spec1: &MarginPowerSpec,
    spec2: &MarginPowerSpec,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<CovBreakdown> {
    require_nonzero_shape(&[spec1, spec2])?;
    let f1 = spec1.factors();
    let f2 = spec2.factors();
    let mut skeleton = Vec::with_capacity(f1.len() * f2.len());
    for k1 in 0..=spec1.beta() {
        for k2 in 0..=spec2.beta() {
            skeleton.push((k1, k2, spec1.exponent(k1), spec2.exponent(k2)));
        }
    }
    let pairs: Vec<(f64, f64)> = skeleton.iter().map(|t| (t.2, t.3)).collect();
    let mut table = brackets(&pairs, p, q)?;
    // Bracket errors are amplified by the same cancellation as rounding errors:
    // tighten the bracket tolerance by the amplification, down to the headline one.
    let amplification = {
        let v: Vec<f64> = skeleton
            .iter()
            .map(|&(k1, k2, e1, e2)| f1[k1 as usize] * f2[k2 as usize] * table[&key(e1, e2)].0)
            .collect();
        rounding_estimate(&v, neumaier_sum(v.iter().copied())) / f64::EPSILON
    };
    let floor = QuadratureSpec::headline().relative_tolerance.min(q.relative_tolerance);
    let tight = (q.relative_tolerance / amplification).max(floor);
    if tight < 0.5 * q.relative_tolerance {
        let tq = QuadratureSpec {
            relative_tolerance: tight,
            max_subdivisions: q.max_subdivisions.max(QuadratureSpec::headline().max_subdivisions),
            ..*q
        };
        table = brackets(&pairs, p, &tq)?;
    }
    let terms: Vec<ExpansionTerm> = skeleton
        .into_iter()
        .map(|(k1, k2, e1, e2)| {
            let (bracket, bracket_error) = table[&key(e1, e2)];
            ExpansionTerm {
                k1,
                k2,
                b: f1[k1 as usize] * f2[k2 as usize],
                exponent1: e1,
                exponent2: e2,
                gamma_product: gamma_pos(1.0 - e1) * gamma_pos(1.0 - e2),
                bracket,
                bracket_error,
            }
        })
        .collect();
    let weights: Vec<f64> = terms.iter().map(|t| t.b).collect();
    let b_bracket: Vec<f64> = terms.iter().map(|t| t.b * t.bracket).collect();
    let b_gamma: Vec<f64> = terms.iter().map(|t| t.b * t.gamma_product).collect();
    let covariance = ordered_sum(&weights, &b_bracket);
    let sum_b_gamma = ordered_sum(&weights, &b_gamma);
    // sum B I as one compensated sum over both parts of every I
    let mut w2 = weights.clone();
    w2.extend_from_slice(&weights);
    let mut v2 = b_bracket.clone();
    v2.extend_from_slice(&b_gamma);
    let sum_b_i = ordered_sum(&w2, &v2);
    let error_bound = terms.iter().map(|t| t.b.abs() * t.bracket_error).sum();
    let rounding_estimate = rounding_estimate(&b_bracket, covariance);
    Ok(CovBreakdown {
        h: p.h(),
        terms,
        sum_b_i,
        sum_b_gamma,
        covariance,
        error_bound,
        rounding_estimate,
    })
}

/// `Cov(X1^beta1, X2^beta2)` for non-zero shapes.
///
/// Fails with [`Error::IllConditioned`] when cancellation exceeds [`MAX_ROUNDING`].
pub fn cov_gev_powers(
    spec1: &MarginPowerSpec,
    spec2: &MarginPowerSpec,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    require_nonzero_shape(&[spec1, spec2])?;
    if p.dependence() == Dependence::Infinite {
        return Ok(0.0);
    }
    let b = cov_gev_breakdown(spec1, spec2, p, q)?;
    check_rounding("covariance", b.rounding_estimate)?;
    Ok(b.covariance)
}

/// `Var(X^beta)` from the gamma-function expansion; fails like [`cov_gev_powers`]
/// under heavy cancellation.
pub fn var_gev_power(spec: &MarginPowerSpec) -> Result<f64> {
    require_nonzero_shape(&[spec])?;
    let f = spec.factors();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for k1 in 0..=spec.beta() {
        for k2 in 0..=spec.beta() {
            let b = f[k1 as usize] * f[k2 as usize];
            weights.push(b);
            values.push(b * gamma_cov_bracket(spec.exponent(k1), spec.exponent(k2))?);
        }
    }
    let v = ordered_sum(&weights, &values);
    check_rounding("variance", rounding_estimate(&values, v))?;
    Ok(v)
}

/// `E[X^beta]`.
pub fn mean_gev_power(spec: &MarginPowerSpec) -> Result<f64> {
    require_nonzero_shape(&[spec])?;
    let f = spec.factors();
    let values: Vec<f64> = (0..=spec.beta())
        .map(|k| f[k as usize] * gamma_pos(1.0 - spec.exponent(k)))
        .collect();
    Ok(ordered_sum(&f, &values))
}

fn same_shape_kind(spec1: &MarginPowerSpec, spec2: &MarginPowerSpec) -> Result<bool> {
    match (spec1.gev.xi == 0.0, spec2.gev.xi == 0.0) {
        (false, false) => Ok(false),
        (true, true) => Ok(true),
        _ => Err(Error::Constraint {
            constraint: "xi1 = xi2 = 0 or both non-zero",
            detail: format!(
                "mixed Gumbel and non-Gumbel margins (xi1 = {}, xi2 = {})",
                spec1.gev.xi, spec2.gev.xi
            ),
        }),
    }
}

/// Offset used for `xi = 0` margins when no explicit one is given.
pub const GUMBEL_EPSILON: f64 = 1e-4;

fn check_epsilon(specs: &[&MarginPowerSpec], eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("epsilon must be > 0, got {eps}")));
    }
    for s in specs {
        s.check()?;
        if s.gev.xi != 0.0 {
            return Err(Error::Constraint {
                constraint: "xi = 0",
                detail: format!("Gumbel-limit evaluation given xi = {}", s.gev.xi),
            });
        }
        if !(s.beta() as f64 * eps < 0.5) {
            return Err(Error::Constraint {
                constraint: "beta * epsilon < 1/2",
                detail: format!("beta = {}, epsilon = {eps}", s.beta()),
            });
        }
    }
    Ok(())
}

/// Covariance for two Gumbel margins: mean of the expansion at `xi = +eps` and
/// `xi = -eps` on both margins. The error is `O(eps)` by continuity in `xi`.
pub fn cov_gev_powers_gumbel_limit(
    spec1: &MarginPowerSpec,
    spec2: &MarginPowerSpec,
    p: &HrParams,
    q: &QuadratureSpec,
    eps: f64,
) -> Result<f64> {
    check_epsilon(&[spec1, spec2], eps)?;
    if p.dependence() == Dependence::Infinite {
        return Ok(0.0);
    }
    let plus = cov_gev_powers(&spec1.with_xi(eps), &spec2.with_xi(eps), p, q)?;
    let minus = cov_gev_powers(&spec1.with_xi(-eps), &spec2.with_xi(-eps), p, q)?;
    Ok(0.5 * (plus + minus))
}

/// Variance of a Gumbel margin's power by the same symmetric evaluation.
pub fn var_gev_power_gumbel_limit(spec: &MarginPowerSpec, eps: f64) -> Result<f64> {
    check_epsilon(&[spec], eps)?;
    let plus = var_gev_power(&spec.with_xi(eps))?;
    let minus = var_gev_power(&spec.with_xi(-eps))?;
    Ok(0.5 * (plus + minus))
}

/// Covariance for any admissible pair of margins, Gumbel ones included.
pub fn cov_any(
    spec1: &MarginPowerSpec,
    spec2: &MarginPowerSpec,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    if same_shape_kind(spec1, spec2)? {
        cov_gev_powers_gumbel_limit(spec1, spec2, p, q, GUMBEL_EPSILON)
    } else {
        cov_gev_powers(spec1, spec2, p, q)
    }
}

/// Variance for any admissible margin, Gumbel included.
pub fn var_any(spec: &MarginPowerSpec) -> Result<f64> {
    if spec.gev.xi == 0.0 {
        var_gev_power_gumbel_limit(spec, GUMBEL_EPSILON)
    } else {
        var_gev_power(spec)
    }
}

/// `Corr(X1^beta1, X2^beta2)`.
pub fn corr_gev_powers(
    spec1: &MarginPowerSpec,
    spec2: &MarginPowerSpec,
    p: &HrParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    let cov = cov_any(spec1, spec2, p, q)?;
    if cov == 0.0 {
        return Ok(0.0);
    }
    let v1 = var_any(spec1)?;
    let v2 = if spec1 == spec2 { v1 } else { var_any(spec2)? };
    Ok(cov / (v1 * v2).sqrt())
}

/// `g(h) = sum B I_{(beta-k1) xi, (beta-k2) xi}(h)` for equal margins and powers.
pub fn g_function(spec: &MarginPowerSpec, p: &HrParams, q: &QuadratureSpec) -> Result<f64> {
    require_nonzero_shape(&[spec])?;
    match p.dependence() {
        Dependence::Finite(0.0) => g_limit_zero(spec),
        Dependence::Infinite => g_limit_infinity(spec),
        _ => Ok(cov_gev_breakdown(spec, spec, p, q)?.sum_b_i),
    }
}

/// `lim_{h -> 0} g = sum B Gamma(1 - xi (2 beta - k1 - k2))`.
pub fn g_limit_zero(spec: &MarginPowerSpec) -> Result<f64> {
    require_nonzero_shape(&[spec])?;
    let f = spec.factors();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for k1 in 0..=spec.beta() {
        for k2 in 0..=spec.beta() {
            let b = f[k1 as usize] * f[k2 as usize];
            weights.push(b);
            values.push(b * gamma_pos(1.0 - spec.exponent(k1) - spec.exponent(k2)));
        }
    }
    Ok(ordered_sum(&weights, &values))
}

/// `lim_{h -> inf} g = sum B Gamma(1 - (beta-k1) xi) Gamma(1 - (beta-k2) xi)`.
pub fn g_limit_infinity(spec: &MarginPowerSpec) -> Result<f64> {
    require_nonzero_shape(&[spec])?;
    let f = spec.factors();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for k1 in 0..=spec.beta() {
        for k2 in 0..=spec.beta() {
            let b = f[k1 as usize] * f[k2 as usize];
            weights.push(b);
            values.push(
                // same association as the covariance breakdown
                b * (gamma_pos(1.0 - spec.exponent(k1)) * gamma_pos(1.0 - spec.exponent(k2))),
            );
        }
    }
    Ok(ordered_sum(&weights, &values))
}

/// Equal-margin covariance written as `g(h) - lim_{h -> inf} g`.
pub fn cov_equal_margins(spec: &MarginPowerSpec, p: &HrParams, q: &QuadratureSpec) -> Result<f64> {
    Ok(g_function(spec, p, q)? - g_limit_infinity(spec)?)
}
