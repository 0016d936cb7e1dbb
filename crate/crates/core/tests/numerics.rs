use powcorr::hr::kernel_c;
use powcorr::numerics::{gamma_fn, integrate_semi_infinite, norm_cdf, norm_pdf, QuadratureSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gamma_values() {
    assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
    assert!(rel(gamma_fn(0.5).unwrap(), 1.7724538509055160) < 1e-14);
    // 40-digit mpmath reference
    assert!(rel(gamma_fn(1.24).unwrap(), 0.9085210583399594392551844636966269329372) < 1e-14);
}

#[test]
fn normal_values() {
    assert_eq!(norm_cdf(0.0), 0.5);
    assert!(rel(norm_pdf(0.0), 0.3989422804014327) < 1e-15);
    assert!(rel(norm_cdf(1.96), 0.9750021048517795658634157309591628099775) < 1e-15);
}

#[test]
fn semi_infinite_analytic() {
    let q = QuadratureSpec::headline();
    let a = integrate_semi_infinite(|t| (-t).exp(), &q).unwrap();
    assert!((a.value - 1.0).abs() < 1e-12);
    let b = integrate_semi_infinite(|t| t * (-t * t).exp(), &q).unwrap();
    assert!((b.value - 0.5).abs() < 1e-12);
}

/// The moment integrand `theta^b [C2 C1^(s-2) Gamma(2-s) + C3 C1^(s-1) Gamma(1-s)]`.
fn moment_integrand(theta: f64, a: f64, b: f64, h: f64) -> f64 {
    if theta == 0.0 || !theta.is_finite() {
        return 0.0;
    }
    let s = a + b;
    let k = kernel_c(theta, h).unwrap();
    theta.powf(b)
        * (k.c2 * k.c1.powf(s - 2.0) * gamma_fn(2.0 - s).unwrap()
            + k.c3 * k.c1.powf(s - 1.0) * gamma_fn(1.0 - s).unwrap())
}

#[test]
fn moment_integrand_against_fine_trapezoid() {
    let (a, b, h) = (0.25, 0.25, 1.0);
    let q = QuadratureSpec::headline().with_relative(1e-11);
    let adaptive = integrate_semi_infinite(|th| moment_integrand(th, a, b, h), &q)
        .unwrap()
        .value;
    // trapezoid in t = ln theta: smooth, rapidly decaying, so the rule is
    // spectrally accurate on a fine uniform grid
    let (lo, hi, n) = (-60.0f64, 60.0f64, 240_000usize);
    let dt = (hi - lo) / n as f64;
    let f = |t: f64| moment_integrand(t.exp(), a, b, h) * t.exp();
    let mut sum = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        sum += f(lo + i as f64 * dt);
    }
    let trap = sum * dt;
    assert!(rel(adaptive, trap) < 1e-8, "{adaptive} vs {trap}");
}
