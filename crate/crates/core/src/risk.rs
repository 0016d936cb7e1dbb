//! Insured-cost correlation under power damage functions and the variance of
//! the aggregated loss over a rectangular region.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brown_resnick::{dependence_at_h, lag_to_h, BrownResnickSpec, SemivariogramModel, Site};
use crate::error::{Error, Result};
use crate::gev::{var_any, MarginPowerSpec};
use crate::numerics::quadrature::neumaier_sum;
use crate::numerics::QuadratureSpec;

/// Destruction ratio `(w / c1)^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageFunctionSpec {
    /// Saturation wind speed in m/s.
    pub c1: f64,
    pub beta: u32,
}

impl DamageFunctionSpec {
    pub fn new(c1: f64, beta: u32) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(Error::domain(format!("c1 must be > 0, got {c1}")));
        }
        if beta == 0 {
            return Err(Error::domain("damage exponent must be >= 1"));
        }
        Ok(Self { c1, beta })
    }

    /// The case-study damage function.
    pub fn case_study() -> Self {
        Self { c1: 82.2, beta: 10 }
    }

    pub fn damage(&self, w: f64) -> f64 {
        (w / self.c1).powi(self.beta as i32)
    }

    fn margin(&self, spec: &BrownResnickSpec) -> Result<MarginPowerSpec> {
        let gev = spec.stationary_margin()?.gev;
        MarginPowerSpec::new(gev, self.beta)
    }
}

/// Longitude/latitude rectangle in degrees with a target cell edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
    pub resolution: f64,
}

impl Region {
    pub fn new(lon_min: f64, lon_max: f64, lat_min: f64, lat_max: f64, resolution: f64) -> Result<Self> {
        let r = Self {
            lon_min,
            lon_max,
            lat_min,
            lat_max,
            resolution,
        };
        r.check()?;
        Ok(r)
    }

    /// The case-study rectangle, 5.75-12 E by 49-52 N.
    pub fn case_study(resolution: f64) -> Result<Self> {
        Self::new(5.75, 12.0, 49.0, 52.0, resolution)
    }

    fn check(&self) -> Result<()> {
        let w = self.lon_max - self.lon_min;
        let h = self.lat_max - self.lat_min;
        if !(w > 0.0 && h > 0.0) || !w.is_finite() || !h.is_finite() {
            return Err(Error::domain("region must have positive area"));
        }
        if !(self.resolution > 0.0) || self.resolution > w.min(h) {
            return Err(Error::domain(format!(
                "resolution must lie in (0, {}], got {}",
                w.min(h),
                self.resolution
            )));
        }
        Ok(())
    }

    pub fn with_resolution(self, resolution: f64) -> Result<Self> {
        Self::new(self.lon_min, self.lon_max, self.lat_min, self.lat_max, resolution)
    }

    pub fn area(&self) -> f64 {
        (self.lon_max - self.lon_min) * (self.lat_max - self.lat_min)
    }

    /// Cells per edge. An edge that is not a multiple of the resolution gets
    /// one more, slightly narrower, cell so every cell has the same size.
    pub fn cells(&self) -> (usize, usize) {
        let n = |len: f64| ((len / self.resolution) - 1e-9).ceil().max(1.0) as usize;
        (n(self.lon_max - self.lon_min), n(self.lat_max - self.lat_min))
    }

    /// Actual cell edges `(dlon, dlat)`.
    pub fn cell_size(&self) -> (f64, f64) {
        let (nx, ny) = self.cells();
        (
            (self.lon_max - self.lon_min) / nx as f64,
            (self.lat_max - self.lat_min) / ny as f64,
        )
    }

    /// Cell midpoints in row-major order (latitude outer).
    pub fn midpoints(&self) -> Vec<Site> {
        let (nx, ny) = self.cells();
        let (dx, dy) = self.cell_size();
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push([
                    self.lon_min + (i as f64 + 0.5) * dx,
                    self.lat_min + (j as f64 + 0.5) * dy,
                ]);
            }
        }
        out
    }
}

/// `Corr(C(x1), C(x2))` for costs `E (X / c1)^beta`; equals `D_{X,beta}(x1, x2)`.
/// Neither `c1` nor the exposure enters.
pub fn cost_correlation(
    spec: &BrownResnickSpec,
    damage: &DamageFunctionSpec,
    x1: Site,
    x2: Site,
    q: &QuadratureSpec,
) -> Result<f64> {
    let m = damage.margin(spec)?;
    let h = lag_to_h([x2[0] - x1[0], x2[1] - x1[1]], &spec.semivariogram);
    dependence_at_h(&m, h, q)
}

/// Aggregate loss variance with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossVariance {
    pub value: f64,
    /// `Var(C(0)) = E^2 c1^(-2 beta) Var(X^beta)`
    pub point_variance: f64,
    /// Midpoint approximation of `int_A int_A Corr(C(x), C(y)) dx dy`.
    pub correlation_integral: f64,
    pub cells: (usize, usize),
    pub cell_size: (f64, f64),
    /// Number of distinct correlation evaluations.
    pub distinct_lags: usize,
}

/// Memo key: lag length for isotropic models, lag vector up to sign otherwise.
fn lag_key(model: &SemivariogramModel, di: i64, dj: i64, dx: f64, dy: f64) -> (u64, i64, i64) {
    match model {
        SemivariogramModel::Power { .. } => ((di as f64 * dx).hypot(dj as f64 * dy).to_bits(), 0, 0),
        SemivariogramModel::Smith { .. } => {
            let (a, b) = if (di, dj) < (0, 0) { (-di, -dj) } else { (di, dj) };
            (0, a, b)
        }
    }
}

/// `Var(int_A C(x) dx)` for constant exposure by the midpoint rule on the region grid.
///
/// Cell pairs only enter through their index offset `(di, dj)`, which occurs
/// `(nx - |di|)(ny - |dj|)` times; correlations are memoized per distinct lag.
pub fn loss_variance(
    spec: &BrownResnickSpec,
    damage: &DamageFunctionSpec,
    region: &Region,
    exposure: f64,
    q: &QuadratureSpec,
) -> Result<LossVariance> {
    if !(exposure > 0.0) || !exposure.is_finite() {
        return Err(Error::domain(format!("exposure must be > 0, got {exposure}")));
    }
    region.check()?;
    let (nx, ny) = region.cells();
    if nx < 2 || ny < 2 {
        return Err(Error::domain(format!(
            "grid too coarse: {nx} x {ny} cells, need at least 2 per edge"
        )));
    }
    let m = damage.margin(spec)?;
    let (dx, dy) = region.cell_size();
    let model = spec.semivariogram;

    let mut offsets = Vec::new();
    let mut keys: Vec<(u64, i64, i64)> = Vec::new();
    let mut index: HashMap<(u64, i64, i64), usize> = HashMap::new();
    let mut lags: Vec<Site> = Vec::new();
    for dj in -(ny as i64 - 1)..=(ny as i64 - 1) {
        for di in -(nx as i64 - 1)..=(nx as i64 - 1) {
            let k = lag_key(&model, di, dj, dx, dy);
            let slot = *index.entry(k).or_insert_with(|| {
                keys.push(k);
                lags.push([di as f64 * dx, dj as f64 * dy]);
                keys.len() - 1
            });
            let mult = ((nx as i64 - di.abs()) * (ny as i64 - dj.abs())) as f64;
            offsets.push((slot, mult));
        }
    }
    let corr: Vec<f64> = lags
        .par_iter()
        .map(|&lag| dependence_at_h(&m, lag_to_h(lag, &model), q))
        .collect::<Result<_>>()?;
    let cell_area = dx * dy;
    let integral =
        neumaier_sum(offsets.iter().map(|&(slot, mult)| mult * corr[slot])) * cell_area * cell_area;
    let point_variance =
        exposure * exposure * damage.c1.powi(-2 * damage.beta as i32) * var_any(&m)?;
    Ok(LossVariance {
        value: point_variance * integral,
        point_variance,
        correlation_integral: integral,
        cells: (nx, ny),
        cell_size: (dx, dy),
        distinct_lags: keys.len(),
    })
}

/// Same sum as [`loss_variance`], evaluated cell pair by cell pair without memoization.
pub fn loss_variance_brute_force(
    spec: &BrownResnickSpec,
    damage: &DamageFunctionSpec,
    region: &Region,
    exposure: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let m = damage.margin(spec)?;
    let cells = region.midpoints();
    let (dx, dy) = region.cell_size();
    let rows: Vec<f64> = cells
        .par_iter()
        .map(|a| {
            let terms: Vec<f64> = cells
                .iter()
                .map(|b| {
                    dependence_at_h(&m, lag_to_h([b[0] - a[0], b[1] - a[1]], &spec.semivariogram), q)
                })
                .collect::<Result<_>>()?;
            Ok(neumaier_sum(terms))
        })
        .collect::<Result<_>>()?;
    let integral = neumaier_sum(rows) * (dx * dy) * (dx * dy);
    Ok(exposure * exposure * damage.c1.powi(-2 * damage.beta as i32) * var_any(&m)? * integral)
}
