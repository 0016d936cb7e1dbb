//! Brown-Resnick fields: semivariograms and the correlation of powers between sites.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gev::{corr_gev_powers, GevParams, MarginPowerSpec};
use crate::hr::HrParams;
use crate::numerics::QuadratureSpec;

/// A point of the plane, in degrees.
pub type Site = [f64; 2];

/// Parametric semivariogram of the underlying Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemivariogramModel {
    /// `(|x| / kappa)^psi`
    Power { kappa: f64, psi: f64 },
    /// `x' Sigma^-1 x / 2` with `Sigma = [[s11, s12], [s12, s22]]`
    Smith { s11: f64, s12: f64, s22: f64 },
}

impl SemivariogramModel {
    pub fn power(kappa: f64, psi: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::domain(format!("kappa must be > 0, got {kappa}")));
        }
        if !(psi > 0.0 && psi <= 2.0) {
            return Err(Error::domain(format!("psi must lie in (0, 2], got {psi}")));
        }
        Ok(Self::Power { kappa, psi })
    }

    pub fn smith(s11: f64, s12: f64, s22: f64) -> Result<Self> {
        let det = s11 * s22 - s12 * s12;
        if !(s11 > 0.0) || !(det > 0.0) || !det.is_finite() {
            return Err(Error::domain(format!(
                "Sigma must be positive definite, got s11 = {s11}, s12 = {s12}, s22 = {s22}"
            )));
        }
        Ok(Self::Smith { s11, s12, s22 })
    }

    /// Power model fitted on the full grid in the wind-gust case study.
    pub fn case_study() -> Self {
        Self::Power {
            kappa: 3.39,
            psi: 0.81,
        }
    }

    /// `gamma_W(lag)`.
    pub fn gamma(&self, lag: Site) -> f64 {
        match *self {
            Self::Power { kappa, psi } => {
                let r = lag[0].hypot(lag[1]);
                if r == 0.0 {
                    0.0
                } else {
                    (r / kappa).powf(psi)
                }
            }
            Self::Smith { s11, s12, s22 } => {
                let det = s11 * s22 - s12 * s12;
                let [x, y] = lag;
                0.5 * (s22 * x * x - 2.0 * s12 * x * y + s11 * y * y) / det
            }
        }
    }

    /// Distance along unit direction `dir` at which `gamma_W` reaches `gamma`.
    fn distance_for_gamma(&self, gamma: f64, dir: Site) -> f64 {
        match *self {
            Self::Power { kappa, psi } => kappa * gamma.powf(1.0 / psi),
            Self::Smith { .. } => (gamma / self.gamma(dir)).sqrt(),
        }
    }
}

/// `h = sqrt(2 gamma_W(lag))`.
pub fn lag_to_h(lag: Site, s: &SemivariogramModel) -> f64 {
    (2.0 * s.gamma(lag)).sqrt()
}

/// Marginal description of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margins {
    /// The same GEV parameters and power everywhere.
    Stationary(MarginPowerSpec),
    /// Margins given per site.
    Sites(Vec<(Site, MarginPowerSpec)>),
}

/// Semivariogram plus margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownResnickSpec {
    pub semivariogram: SemivariogramModel,
    pub margins: Margins,
}

impl BrownResnickSpec {
    pub fn stationary(semivariogram: SemivariogramModel, margin: MarginPowerSpec) -> Result<Self> {
        margin.check()?;
        Ok(Self {
            semivariogram,
            margins: Margins::Stationary(margin),
        })
    }

    pub fn with_sites(
        semivariogram: SemivariogramModel,
        sites: Vec<(Site, MarginPowerSpec)>,
    ) -> Result<Self> {
        for (_, m) in &sites {
            m.check()?;
        }
        Ok(Self {
            semivariogram,
            margins: Margins::Sites(sites),
        })
    }

    /// Case-study semivariogram and margins with power `beta`.
    pub fn case_study(beta: u32) -> Result<Self> {
        Self::stationary(
            SemivariogramModel::case_study(),
            MarginPowerSpec::new(GevParams::case_study(), beta)?,
        )
    }

    pub fn stationary_margin(&self) -> Result<&MarginPowerSpec> {
        match &self.margins {
            Margins::Stationary(m) => Ok(m),
            Margins::Sites(_) => Err(Error::domain(
                "operation needs spatially constant margins",
            )),
        }
    }

    /// Margin at `x`; for per-site margins the site must be listed exactly.
    pub fn margin_at(&self, x: Site) -> Result<&MarginPowerSpec> {
        match &self.margins {
            Margins::Stationary(m) => Ok(m),
            Margins::Sites(list) => list
                .iter()
                .find(|(s, _)| s[0] == x[0] && s[1] == x[1])
                .map(|(_, m)| m)
                .ok_or_else(|| Error::domain(format!("no margin given for site {x:?}"))),
        }
    }
}

fn lag(x1: Site, x2: Site) -> Site {
    [x2[0] - x1[0], x2[1] - x1[1]]
}

/// `D_{X,beta}(x1, x2) = Cov(X(x1)^beta, X(x2)^beta) / Var(X^beta)`.
pub fn dependence_measure(
    spec: &BrownResnickSpec,
    x1: Site,
    x2: Site,
    q: &QuadratureSpec,
) -> Result<f64> {
    let m = spec.stationary_margin()?;
    dependence_at_h(m, lag_to_h(lag(x1, x2), &spec.semivariogram), q)
}

/// `D` as a function of `h` alone.
pub fn dependence_at_h(margin: &MarginPowerSpec, h: f64, q: &QuadratureSpec) -> Result<f64> {
    corr_gev_powers(margin, margin, &HrParams::new(h)?, q)
}

/// Correlation between sites with their own margins and powers.
pub fn corr_nonstationary(
    spec: &BrownResnickSpec,
    x1: Site,
    x2: Site,
    q: &QuadratureSpec,
) -> Result<f64> {
    let m1 = spec.margin_at(x1)?;
    let m2 = spec.margin_at(x2)?;
    let h = lag_to_h(lag(x1, x2), &spec.semivariogram);
    corr_gev_powers(m1, m2, &HrParams::new(h)?, q)
}

/// `D` sampled along a ray from the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCurve {
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_distances(distances: &[f64]) -> Result<()> {
    if distances.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::domain("distances must be finite and >= 0"));
    }
    if distances.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("distances must be sorted ascending"));
    }
    Ok(())
}

/// `D` at each distance, measured along the first coordinate axis (the power
/// model is isotropic; for the Smith model this fixes the direction).
pub fn correlation_curve(
    spec: &BrownResnickSpec,
    distances: &[f64],
    q: &QuadratureSpec,
) -> Result<CorrelationCurve> {
    check_distances(distances)?;
    let m = spec.stationary_margin()?;
    let values: Result<Vec<f64>> = distances
        .par_iter()
        .map(|&d| dependence_at_h(m, lag_to_h([d, 0.0], &spec.semivariogram), q))
        .collect();
    Ok(CorrelationCurve {
        distances: distances.to_vec(),
        values: values?,
    })
}

/// Smallest distance along the first axis at which `D` falls to `level`.
///
/// `D` is strictly decreasing in `h`, so the crossing is found by bisection in
/// `ln h` and mapped back to a distance through the semivariogram.
pub fn threshold_distance(spec: &BrownResnickSpec, level: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level must lie in (0, 1), got {level}")));
    }
    let m = spec.stationary_margin()?;
    let d = |h: f64| dependence_at_h(m, h, q);
    let mut lo = 1e-3;
    let mut hi = 1.0;
    while d(lo)? < level {
        lo *= 0.1;
        if lo < 1e-12 {
            return Err(Error::domain("correlation is below the level at every distance"));
        }
    }
    while d(hi)? >= level {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::domain("correlation never falls below the level"));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) || (hi - lo) <= 1e-13 * hi {
            break;
        }
        if d(mid)? >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    Ok(spec
        .semivariogram
        .distance_for_gamma(0.5 * h * h, [1.0, 0.0]))
}

/// `D(distance, beta)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerDistanceSurface {
    pub distances: Vec<f64>,
    pub betas: Vec<u32>,
    /// `values[i][j]` is `D` at `distances[i]` and `betas[j]`.
    pub values: Vec<Vec<f64>>,
}

/// `D` for every combination of distance and power, keeping the margin's GEV parameters.
pub fn power_distance_surface(
    spec: &BrownResnickSpec,
    distances: &[f64],
    betas: &[u32],
    q: &QuadratureSpec,
) -> Result<PowerDistanceSurface> {
    check_distances(distances)?;
    let gev = spec.stationary_margin()?.gev;
    let margins: Vec<MarginPowerSpec> = betas
        .iter()
        .map(|&b| MarginPowerSpec::new(gev, b))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..distances.len())
        .flat_map(|i| (0..betas.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            dependence_at_h(
                &margins[j],
                lag_to_h([distances[i], 0.0], &spec.semivariogram),
                q,
            )
        })
        .collect::<Result<_>>()?;
    let values = flat.chunks(betas.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(PowerDistanceSurface {
        distances: distances.to_vec(),
        betas: betas.to_vec(),
        values,
    })
}
