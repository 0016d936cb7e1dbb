//! Bivariate Hüsler-Reiss law: distribution function, density, the kernels
//! C1-C3 and the moment integrals behind the covariance of powers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::{gamma_cov_bracket, gamma_pos, log_add_exp};
use crate::numerics::{
    ln_norm_cdf, ln_norm_pdf, norm_cdf, norm_sf, try_integrate_real_line, Estimate,
    QuadratureSpec,
};

/// Dependence state of the law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dependence {
    /// `0 <= h < inf`; `h = 0` is complete dependence.
    Finite(f64),
    /// `h = inf`, independence.
    Infinite,
}

/// Parameter `h` of the bivariate Hüsler-Reiss distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrParams {
    dependence: Dependence,
}

impl HrParams {
    /// Accepts any `h >= 0`; `f64::INFINITY` maps to the independent state.
    pub fn new(h: f64) -> Result<Self> {
        if h.is_nan() || h < 0.0 {
            return Err(Error::domain(format!("h must be >= 0, got {h}")));
        }
        if h == f64::INFINITY {
            return Ok(Self::independent());
        }
        Ok(Self {
            dependence: Dependence::Finite(h),
        })
    }

    pub fn independent() -> Self {
        Self {
            dependence: Dependence::Infinite,
        }
    }

    pub fn complete() -> Self {
        Self {
            dependence: Dependence::Finite(0.0),
        }
    }

    pub fn dependence(&self) -> Dependence {
        self.dependence
    }

    /// `h` as a float, `inf` for independence.
    pub fn h(&self) -> f64 {
        match self.dependence {
            Dependence::Finite(h) => h,
            Dependence::Infinite => f64::INFINITY,
        }
    }

    /// `Some(h)` when `0 < h < inf`.
    pub fn interior(&self) -> Option<f64> {
        match self.dependence {
            Dependence::Finite(h) if h > 0.0 => Some(h),
            _ => None,
        }
    }
}

/// Exponents `(beta1, beta2)` of a simple-margin power pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplePowerPair {
    pub beta1: f64,
    pub beta2: f64,
}

impl SimplePowerPair {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(b < 0.5) || !b.is_finite() {
                return Err(Error::Constraint {
                    constraint: "beta < 1/2",
                    detail: format!("{name} = {b}"),
                });
            }
        }
        Ok(Self { beta1, beta2 })
    }

    pub fn swapped(self) -> Self {
        Self {
            beta1: self.beta2,
            beta2: self.beta1,
        }
    }
}

fn check_positive(z1: f64, z2: f64) -> Result<()> {
    if !(z1 > 0.0 && z2 > 0.0) {
        return Err(Error::domain(format!(
            "arguments must be positive, got z1 = {z1}, z2 = {z2}"
        )));
    }
    Ok(())
}

/// `H(z1, z2; h)`.
pub fn hr_cdf(z1: f64, z2: f64, p: &HrParams) -> Result<f64> {
    check_positive(z1, z2)?;
    Ok(match p.dependence {
        Dependence::Infinite => (-1.0 / z1 - 1.0 / z2).exp(),
        Dependence::Finite(0.0) => (-1.0 / z1.min(z2)).exp(),
        Dependence::Finite(h) => {
            let r = (z2 / z1).ln() / h;
            let w = 0.5 * h + r;
            let v = 0.5 * h - r;
            (-norm_cdf(w) / z1 - norm_cdf(v) / z2).exp()
        }
    })
}

/// Log of the bivariate density for `0 < h < inf`.
///
/// The two cross terms of the first product collapse once `phi(v) / phi(w) = z2 / z1`
/// is used, which leaves a sum of two positive terms.
pub fn ln_hr_density(z1: f64, z2: f64, h: f64) -> f64 {
    ln_hr_density_at_logs(z1.ln(), z2.ln(), h)
}

/// `ln l(z1, z2)` given `u1 = ln z1` and `u2 = ln z2`; finite far beyond the
/// range where `z` itself is representable.
pub fn ln_hr_density_at_logs(u1: f64, u2: f64, h: f64) -> f64 {
    let r = (u2 - u1) / h;
    let w = 0.5 * h + r;
    let v = 0.5 * h - r;
    let lw = ln_norm_cdf(w);
    let lv = ln_norm_cdf(v);
    let exponent = -(lw - u1).exp() - (lv - u2).exp();
    let product = lw + lv - 2.0 * (u1 + u2);
    let cross = ln_norm_pdf(w) - h.ln() - 2.0 * u1 - u2;
    exponent + log_add_exp(product, cross)
}

/// Bivariate density `l(z1, z2)`; only defined for `0 < h < inf`.
pub fn hr_density(z1: f64, z2: f64, p: &HrParams) -> Result<f64> {
    check_positive(z1, z2)?;
    let h = p.interior().ok_or_else(|| {
        Error::domain(format!(
            "the density needs 0 < h < inf, got h = {}",
            p.h()
        ))
    })?;
    Ok(ln_hr_density(z1, z2, h).exp())
}

/// Kernel values at one `(theta, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, Copy)]
struct LnKernels {
    c1: f64,
    c2: f64,
    c3: f64,
}

// t = ln(theta). Using phi(a-) = theta phi(a+), C2 reduces to Phi(a+) Phi(a-) / theta^2
// and C3 to phi(a+) / (h theta), so everything stays a product of positive factors.
fn ln_kernels(t: f64, h: f64) -> LnKernels {
    let ap = 0.5 * h + t / h;
    let am = 0.5 * h - t / h;
    let lp = ln_norm_cdf(ap);
    let lm = ln_norm_cdf(am);
    LnKernels {
        c1: log_add_exp(lp, lm - t),
        c2: lp + lm - 2.0 * t,
        c3: ln_norm_pdf(ap) - t - h.ln(),
    }
}

/// `C1`, `C2`, `C3` at `(theta, h)`.
pub fn kernel_c(theta: f64, h: f64) -> Result<Kernels> {
    if !(theta > 0.0 && theta.is_finite() && h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!(
            "kernel_c needs theta > 0 and 0 < h < inf, got theta = {theta}, h = {h}"
        )));
    }
    let k = ln_kernels(theta.ln(), h);
    Ok(Kernels {
        c1: k.c1.exp(),
        c2: k.c2.exp(),
        c3: k.c3.exp(),
    })
}

/// Breakpoints in `t = ln theta` around the mass of the moment integrands: it sits
/// near `t = 0` for small `h` and near `t = +-h^2 / 2` with width `h` for large `h`.
fn t_breaks(h: f64) -> Vec<f64> {
    let c = 0.5 * h * h;
    let mut v = vec![0.0, -1.0, 1.0, -4.0, 4.0];
    for k in 0..=8 {
        let d = k as f64 * h;
        v.extend_from_slice(&[d, -d, c + d, c - d, -c + d, -c - d]);
    }
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    v
}

fn ln_gamma_pos(x: f64) -> f64 {
    gamma_pos(x).ln()
}

/// `I_{beta1,beta2}(h)` for `0 < h < inf` by direct quadrature of the paper's
/// integral, carried out in `t = ln theta`.
fn i_integral_quadrature(a: f64, b: f64, h: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let s = a + b;
    let lg2 = ln_gamma_pos(2.0 - s);
    let lg1 = ln_gamma_pos(1.0 - s);
    let f = |t: f64| -> Result<f64> {
        let k = ln_kernels(t, h);
        let base = (b + 1.0) * t;
        let t1 = base + k.c2 + (s - 2.0) * k.c1 + lg2;
        let t2 = base + k.c3 + (s - 1.0) * k.c1 + lg1;
        Ok(t1.exp() + t2.exp())
    };
    try_integrate_real_line(f, &t_breaks(h), spec)
}

/// `Cov(Z1^a, Z2^b)` for `0 < h < inf` as a single positive-integrand quadrature.
///
/// With `C1inf = 1 + 1/theta` the independence value of `C1` and
/// `L = ln(C1 / C1inf)`, the covariance equals
/// `a b Gamma(1-s) int theta^(b-1) C1inf^s (1 - exp(s L)) / s dtheta`, `s = a + b`.
/// Subtracting the independence baseline inside the integral avoids the
/// cancellation of `I - Gamma Gamma` when the covariance is small.
fn cov_quadrature(a: f64, b: f64, h: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let s = a + b;
    let prefactor = a * b * gamma_pos(1.0 - s);
    let f = |t: f64| -> Result<f64> {
        let ap = 0.5 * h + t / h;
        let am = 0.5 * h - t / h;
        let sp = norm_sf(ap);
        let sm = norm_sf(am);
        // r = C1 / C1inf - 1 and ln C1inf, arranged to avoid overflow in theta
        let (r, ln_c1inf) = if t > 0.0 {
            let e = (-t).exp();
            (-(sp + e * sm) / (1.0 + e), e.ln_1p())
        } else {
            let e = t.exp();
            (-(e * sp + sm) / (1.0 + e), -t + e.ln_1p())
        };
        let l = r.ln_1p();
        let core = if s == 0.0 { -l } else { -(s * l).exp_m1() / s };
        if core == 0.0 {
            return Ok(0.0);
        }
        Ok((b * t + s * ln_c1inf).exp() * core)
    };
    let est = try_integrate_real_line(f, &t_breaks(h), spec)?;
    Ok(Estimate {
        value: prefactor * est.value,
        error: prefactor.abs() * est.error,
    })
}

/// `I_{beta1,beta2}(h)`.
///
/// `h = 0` and `h = inf` are closed forms; a zero exponent reduces to a marginal
/// moment. Otherwise the integral is evaluated by adaptive quadrature.
pub fn i_integral(pair: SimplePowerPair, p: &HrParams, spec: &QuadratureSpec) -> Result<f64> {
    let SimplePowerPair { beta1: a, beta2: b } = SimplePowerPair::new(pair.beta1, pair.beta2)?;
    match p.dependence {
        Dependence::Finite(0.0) => Ok(gamma_pos(1.0 - a - b)),
        Dependence::Infinite => Ok(gamma_pos(1.0 - a) * gamma_pos(1.0 - b)),
        _ if a == 0.0 => Ok(gamma_pos(1.0 - b)),
        _ if b == 0.0 => Ok(gamma_pos(1.0 - a)),
        Dependence::Finite(h) => Ok(i_integral_quadrature(a, b, h, spec)?.value),
    }
}

/// `I_beta(h) = I_{beta,beta}(h)`.
pub fn i_integral_symmetric(beta: f64, p: &HrParams, spec: &QuadratureSpec) -> Result<f64> {
    i_integral(SimplePowerPair::new(beta, beta)?, p, spec)
}

/// `Cov(Z1^beta1, Z2^beta2) = I_{beta1,beta2}(h) - Gamma(1-beta1) Gamma(1-beta2)`.
pub fn cov_simple_powers(
    pair: SimplePowerPair,
    p: &HrParams,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(cov_simple_powers_estimate(pair, p, spec)?.value)
}

/// As [`cov_simple_powers`], with the quadrature error estimate.
pub fn cov_simple_powers_estimate(
    pair: SimplePowerPair,
    p: &HrParams,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let SimplePowerPair { beta1: a, beta2: b } = SimplePowerPair::new(pair.beta1, pair.beta2)?;
    let exact = |value| Estimate { value, error: 0.0 };
    match p.dependence {
        Dependence::Infinite => Ok(exact(0.0)),
        _ if a == 0.0 || b == 0.0 => Ok(exact(0.0)),
        Dependence::Finite(0.0) => Ok(exact(gamma_cov_bracket(a, b)?)),
        Dependence::Finite(h) => {
            // the integrand is not symmetric in (a, b); use a canonical order so
            // swapped pairs give bit-identical results
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            cov_quadrature(a, b, h, spec)
        }
    }
}
