//! Gamma function and standard Gaussian distribution functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// ln(sqrt(2 pi))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// 1 / sqrt(2 pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// 1/sqrt(2) - fl(1/sqrt(2))
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_456_5e-17;

// zeta(k) for k = 2..=40
const ZETA: [f64; 39] = [
    1.6449340668482264,
    1.2020569031595942,
    1.0823232337111381,
    1.03692775514337,
    1.0173430619844492,
    1.008349277381923,
    1.0040773561979444,
    1.0020083928260821,
    1.000994575127818,
    1.0004941886041194,
    1.000246086553308,
    1.0001227133475785,
    1.0000612481350588,
    1.000030588236307,
    1.0000152822594086,
    1.0000076371976379,
    1.000003817293265,
    1.0000019082127165,
    1.0000009539620338,
    1.0000004769329869,
    1.0000002384505027,
    1.000000119219926,
    1.000000059608189,
    1.0000000298035034,
    1.0000000149015549,
    1.0000000074507118,
    1.000000003725334,
    1.0000000018626598,
    1.0000000009313275,
    1.0000000004656628,
    1.000000000232831,
    1.0000000001164155,
    1.0000000000582077,
    1.0000000000291038,
    1.000000000014552,
    1.000000000007276,
    1.000000000003638,
    1.000000000001819,
    1.0000000000009095,
];

static GAMMA_PERTURBATION: AtomicU64 = AtomicU64::new(0);

/// Process-wide relative perturbation applied to every gamma evaluation.
///
/// Exists only so the validation suite can be shown to catch a corrupted
/// special function. Leave at zero.
#[doc(hidden)]
pub fn set_gamma_perturbation(relative: f64) {
    GAMMA_PERTURBATION.store(relative.to_bits(), Ordering::Relaxed);
}

#[inline]
fn gamma_perturbation() -> f64 {
    f64::from_bits(GAMMA_PERTURBATION.load(Ordering::Relaxed))
}

/// Euler gamma function for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma_fn requires x > 0, got {x}")));
    }
    Ok(gamma_pos(x))
}

/// Gamma for arguments already known to be positive and finite.
#[inline]
pub(crate) fn gamma_pos(x: f64) -> f64 {
    let g = libm::tgamma(x);
    let p = gamma_perturbation();
    if p == 0.0 {
        g
    } else {
        g * (1.0 + p)
    }
}

/// `Gamma(1 - a - b) - Gamma(1 - a) Gamma(1 - b)`, the covariance of `Z^a` and
/// `Z^b` for a standard Fréchet `Z`.
///
/// Evaluated through the zeta series of `ln Gamma(1 - x)` when all arguments
/// are small, so the result keeps full relative accuracy as `a b -> 0`.
pub fn gamma_cov_bracket(a: f64, b: f64) -> Result<f64> {
    let s = a + b;
    if !(s < 1.0) || !(a < 1.0) || !(b < 1.0) {
        return Err(Error::Constraint {
            constraint: "a + b < 1",
            detail: format!("a = {a}, b = {b}"),
        });
    }
    if a == 0.0 || b == 0.0 {
        return Ok(0.0);
    }
    let ga = gamma_pos(1.0 - a);
    let gb = gamma_pos(1.0 - b);
    if a.abs().max(b.abs()).max(s.abs()) <= 0.3 {
        Ok(ga * gb * ln_gamma_defect(a, b).exp_m1())
    } else {
        Ok(gamma_pos(1.0 - s) - ga * gb)
    }
}

/// `ln Gamma(1 - a - b) - ln Gamma(1 - a) - ln Gamma(1 - b)` for small arguments.
fn ln_gamma_defect(a: f64, b: f64) -> f64 {
    // ln Gamma(1 - x) = gamma_E x + sum_{k>=2} zeta(k) x^k / k; the linear
    // terms cancel and (a+b)^k - a^k - b^k = sum_{j=1}^{k-1} C(k,j) a^j b^(k-j).
    let mut total = 0.0;
    let mut a_pow = vec![1.0; ZETA.len() + 2];
    let mut b_pow = vec![1.0; ZETA.len() + 2];
    for i in 1..a_pow.len() {
        a_pow[i] = a_pow[i - 1] * a;
        b_pow[i] = b_pow[i - 1] * b;
    }
    for (idx, zeta) in ZETA.iter().enumerate() {
        let k = idx + 2;
        let mut cross = 0.0;
        let mut binom = 1.0;
        for j in 1..k {
            binom = binom * (k - j + 1) as f64 / j as f64;
            cross += binom * a_pow[j] * b_pow[k - j];
        }
        let term = zeta / k as f64 * cross;
        total += term;
        if term.abs() <= 1e-18 * total.abs() {
            break;
        }
    }
    total
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    // x^2 split into hi + lo so large |x| keeps full relative accuracy
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    INV_SQRT_2PI * (-0.5 * hi).exp() * (1.0 - 0.5 * lo)
}

/// Natural log of the standard normal density.
#[inline]
pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc_scaled_arg(-x)
}

/// Upper tail `1 - Phi(x)`, accurate for large positive `x`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc_scaled_arg(x)
}

/// `erfc(x / sqrt 2)` with the rounding error of `x / sqrt 2` corrected to first order.
fn erfc_scaled_arg(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x * FRAC_1_SQRT_2;
    let dz = x.mul_add(FRAC_1_SQRT_2, -z) + x * FRAC_1_SQRT_2_LO;
    let base = libm::erfc(z);
    if dz == 0.0 || base == 0.0 || base == 2.0 {
        return base;
    }
    // d/dz erfc(z) = -2/sqrt(pi) exp(-z^2)
    base - 2.0 / PI.sqrt() * (-z * z).exp() * dz
}

/// Natural log of the standard normal distribution function, finite for all finite `x`.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-norm_sf(x)).ln_1p()
    } else if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        // Mills-ratio asymptotic series, x < -30
        let inv2 = 1.0 / (x * x);
        let mut term = 1.0;
        let mut series = 1.0;
        for k in 1..16 {
            term *= -((2 * k - 1) as f64) * inv2;
            series += term;
        }
        ln_norm_pdf(x) - (-x).ln() + series.ln()
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact binomial coefficient for small arguments.
pub fn binomial(n: u32, k: u32) -> f64 {
    debug_assert!(n <= 60);
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by i + 1
        acc = acc * (n - i) / (i + 1);
    }
    acc as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // 50-digit references (mpmath)
    const GAMMA_REF: [(f64, f64); 9] = [
        (0.1, 9.5135076986687318363),
        (0.5, 1.7724538509055160273),
        (1.24, 0.90852105833995943926),
        (2.5, 1.3293403881791370205),
        (7.3, 1271.4236336639092731),
        (10.5, 1133278.3889487855673),
        (23.7, 1.0046141827585367632e22),
        (49.9, 4.1180110342530580419e62),
        (0.003, 332.75907669553345702),
    ];

    #[test]
    fn gamma_matches_reference() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!(rel(gamma_fn(0.5).unwrap(), 1.7724538509055160) < 1e-15);
        for (x, want) in GAMMA_REF {
            let got = gamma_fn(x).unwrap();
            assert!(rel(got, want) <= 1e-14, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn gamma_recurrence() {
        for i in 1..=100 {
            let x = i as f64 * 0.1;
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain(_))));
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn normal_reference_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_pdf(0.0) - 0.3989422804014327).abs() < 1e-16);
        assert!((norm_cdf(1.96) - 0.97500210485177956586).abs() <= 1e-15);
        assert!((norm_cdf(-1.96) - 0.024997895148220434137).abs() <= 1e-15);
        assert!(rel(norm_cdf(-8.5), 9.4795348222033183542e-18) < 1e-14);
        assert!(rel(norm_cdf(-20.0), 2.7536241186062336951e-89) < 1e-13);
        assert!((norm_cdf(3.3) - 0.9995165758576162228).abs() <= 1e-15);
    }

    #[test]
    fn ln_norm_cdf_reference_values() {
        let cases = [
            (1.96, -0.025315649164282112723),
            (-1.96, -3.6889636517296387016),
            (-8.5, -39.197396428217669289),
            (-20.0, -203.91715537109726394),
            (-37.5, -707.66898931750719107),
            (3.3, -0.00048354102950671969122),
            (0.7, -0.27702394227713124471),
        ];
        for (x, want) in cases {
            assert!(rel(ln_norm_cdf(x), want) < 1e-14, "x={x}");
        }
        // continuity across the asymptotic switch
        let a = ln_norm_cdf(-30.0 + 1e-9);
        let b = ln_norm_cdf(-30.0 - 1e-9);
        assert!((a - b).abs() < 1e-6);
        assert!(ln_norm_cdf(-1e4).is_finite());
    }

    #[test]
    fn cdf_symmetry() {
        for i in -400..=400 {
            let x = i as f64 * 0.02;
            assert!((norm_cdf(-x) - (1.0 - norm_cdf(x))).abs() <= 2.0 * f64::EPSILON);
            assert_eq!(norm_sf(x), norm_cdf(-x));
        }
    }

    #[test]
    fn gamma_bracket_small_arguments() {
        // Cov(Z^a, Z^b) ~ a b pi^2/6 as a, b -> 0
        let a = 1e-6;
        let got = gamma_cov_bracket(a, a).unwrap();
        assert!(rel(got, a * a * PI * PI / 6.0) < 1e-5);
        // both branches agree where they meet
        for &(a, b) in &[(0.29, 0.0005), (0.1, -0.2), (0.15, 0.15), (-0.3, 0.2)] {
            let series = gamma_cov_bracket(a, b).unwrap();
            let direct = gamma_pos(1.0 - a - b) - gamma_pos(1.0 - a) * gamma_pos(1.0 - b);
            assert!(rel(series, direct) < 1e-12, "a={a} b={b}");
        }
        assert_eq!(gamma_cov_bracket(0.0, 0.3).unwrap(), 0.0);
        assert!(gamma_cov_bracket(0.6, 0.5).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 5), 252.0);
        assert_eq!(binomial(20, 10), 184756.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
