//! Globally adaptive Gauss-Kronrod quadrature on finite and semi-infinite ranges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy request for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(
        relative_tolerance: f64,
        absolute_tolerance: f64,
        max_subdivisions: usize,
    ) -> Result<Self> {
        if !(relative_tolerance > 0.0 && relative_tolerance <= 1e-2) {
            return Err(Error::domain(format!(
                "relative_tolerance must lie in (0, 1e-2], got {relative_tolerance}"
            )));
        }
        if !(absolute_tolerance >= 0.0) || !absolute_tolerance.is_finite() {
            return Err(Error::domain(format!(
                "absolute_tolerance must be finite and >= 0, got {absolute_tolerance}"
            )));
        }
        if max_subdivisions == 0 {
            return Err(Error::domain("max_subdivisions must be >= 1"));
        }
        Ok(Self {
            relative_tolerance,
            absolute_tolerance,
            max_subdivisions,
        })
    }

    /// 1e-13 relative, used for the headline curve values.
    pub fn headline() -> Self {
        Self {
            relative_tolerance: 1e-13,
            absolute_tolerance: 0.0,
            max_subdivisions: 2000,
        }
    }

    /// 1e-5 relative, cheap enough for wide parameter sweeps.
    pub fn sweep() -> Self {
        Self {
            relative_tolerance: 1e-5,
            absolute_tolerance: 0.0,
            max_subdivisions: 500,
        }
    }

    /// Same limits with a different relative tolerance.
    pub fn with_relative(self, relative_tolerance: f64) -> Self {
        Self {
            relative_tolerance,
            ..self
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::headline()
    }
}

/// Integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

// Gauss-Kronrod 21-point abscissae and weights (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss 10-point weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the order is fully deterministic
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * resabs;
        if floor > err {
            err = floor;
        }
    }
    err
}

fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let y = f(x)?;
        if y.is_nan() {
            Err(Error::NanIntegrand(x))
        } else {
            Ok(y)
        }
    };
    let fc = eval(center)?;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut resabs = WGK[10] * fc.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    let err = (res_k - res_g) * half;
    let resabs = resabs * scale;
    let resasc = resasc * scale;
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            subdivisions: 0,
            value,
            error: f64::INFINITY,
        });
    }
    Ok(Panel {
        a,
        b,
        value,
        error: rescale_error(err, resabs, resasc),
        abs_value: resabs,
    })
}

/// Kahan-Neumaier sum.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Adaptive integration of a fallible integrand over the consecutive intervals
/// delimited by `points` (sorted, finite, at least two entries).
pub fn try_integrate_with_breaks<F>(
    mut f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if points.len() < 2 {
        return Err(Error::domain("integration needs at least two points"));
    }
    if points.windows(2).any(|w| !(w[0] < w[1]) || !w[1].is_finite()) {
        return Err(Error::domain(
            "integration breakpoints must be finite and strictly increasing",
        ));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        heap.push(gk21(&mut f, w[0], w[1])?);
    }
    let mut subdivisions = heap.len();
    loop {
        let total = neumaier_sum(heap.iter().map(|p| p.value));
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let resabs: f64 = heap.iter().map(|p| p.abs_value).sum();
        // below ~100 eps of the absolute mass no rule can do better
        let target = (spec.relative_tolerance * total.abs())
            .max(spec.absolute_tolerance)
            .max(100.0 * f64::EPSILON * resabs);
        if error <= target {
            return Ok(Estimate {
                value: total,
                error,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                subdivisions,
                value: total,
                error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel at floating-point resolution; its error cannot shrink
            return Err(Error::NonConvergence {
                subdivisions,
                value: total,
                error,
            });
        }
        heap.push(gk21(&mut f, worst.a, mid)?);
        heap.push(gk21(&mut f, mid, worst.b)?);
        subdivisions += 1;
    }
}

/// Adaptive integration over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    try_integrate_with_breaks(|x| Ok(f(x)), &[a, b], spec)
}

/// Adaptive integration over `[points[0], points[last]]` with panels seeded at `points`.
pub fn integrate_with_breaks<F>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    try_integrate_with_breaks(|x| Ok(f(x)), points, spec)
}

/// Integral over `(0, inf)` through `theta = t / (1 - t)`, split at `theta = 1`.
pub fn integrate_semi_infinite<F>(f: F, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    try_integrate_semi_infinite(|x| Ok(f(x)), &[], spec)
}

/// As [`integrate_semi_infinite`] with extra breakpoints given in `theta`.
/// The integrand may fail; failures propagate unchanged except that NaN
/// locations are reported in `theta`.
pub fn try_integrate_semi_infinite<F>(
    mut f: F,
    theta_breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut points = vec![0.0, 0.5, 1.0];
    for &theta in theta_breaks {
        if theta > 0.0 && theta.is_finite() {
            let t = theta / (1.0 + theta);
            if t > 0.0 && t < 1.0 {
                points.push(t);
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mapped = |t: f64| -> Result<f64> {
        let one_minus = 1.0 - t;
        let theta = t / one_minus;
        let y = f(theta)?;
        if y.is_nan() {
            return Err(Error::NanIntegrand(theta));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(y / (one_minus * one_minus))
    };
    try_integrate_with_breaks(mapped, &points, spec)
}

/// Integral over the whole real line.
///
/// `breaks` locates the bulk of the mass: the span between the smallest and
/// largest breakpoint is integrated with panels seeded at every breakpoint, and
/// the two tails beyond it go through the semi-infinite map.
pub fn try_integrate_real_line<F>(
    mut f: F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut points: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    if points.len() < 2 {
        let c = points.first().copied().unwrap_or(0.0);
        points = vec![c - 1.0, c + 1.0];
    }
    let lo = points[0];
    let hi = points[points.len() - 1];
    let core = try_integrate_with_breaks(&mut f, &points, spec)?;
    // tails only need to be accurate relative to the whole integral
    let tail_spec = QuadratureSpec {
        absolute_tolerance: spec
            .absolute_tolerance
            .max(0.25 * spec.relative_tolerance * core.value.abs()),
        ..*spec
    };
    let left = try_integrate_semi_infinite(|x| f(lo - x), &[], &tail_spec)?;
    let right = try_integrate_semi_infinite(|x| f(hi + x), &[], &tail_spec)?;
    Ok(Estimate {
        value: neumaier_sum([left.value, core.value, right.value]),
        error: left.error + core.error + right.error,
    })
}
