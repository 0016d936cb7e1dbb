//! Python bindings for `powcorr`.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use powcorr::brown_resnick as br;
use powcorr::gev;
use powcorr::hr;
use powcorr::numerics;
use powcorr::oracle;
use powcorr::risk;
use powcorr::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for powcorr::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Integration tolerances.
#[pyclass(name = "QuadratureSpec", from_py_object)]
#[derive(Clone, Copy)]
struct PyQuadratureSpec(numerics::QuadratureSpec);

#[pymethods]
impl PyQuadratureSpec {
    #[new]
    #[pyo3(signature = (relative_tolerance = 1e-13, absolute_tolerance = 0.0, max_subdivisions = 2000))]
    fn new(relative_tolerance: f64, absolute_tolerance: f64, max_subdivisions: usize) -> PyResult<Self> {
        numerics::QuadratureSpec::new(relative_tolerance, absolute_tolerance, max_subdivisions)
            .py()
            .map(Self)
    }

    #[staticmethod]
    fn headline() -> Self {
        Self(numerics::QuadratureSpec::headline())
    }

    #[staticmethod]
    fn sweep() -> Self {
        Self(numerics::QuadratureSpec::sweep())
    }

    #[getter]
    fn relative_tolerance(&self) -> f64 {
        self.0.relative_tolerance
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

fn quad(q: Option<PyQuadratureSpec>) -> numerics::QuadratureSpec {
    q.map_or_else(numerics::QuadratureSpec::headline, |q| q.0)
}

/// Husler-Reiss dependence parameter; `h = inf` means independence.
#[pyclass(name = "HrParams", from_py_object)]
#[derive(Clone, Copy)]
struct PyHrParams(hr::HrParams);

#[pymethods]
impl PyHrParams {
    #[new]
    fn new(h: f64) -> PyResult<Self> {
        hr::HrParams::new(h).py().map(Self)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    fn __repr__(&self) -> String {
        format!("HrParams(h={})", self.0.h())
    }
}

/// GEV location, scale and shape.
#[pyclass(name = "GevParams", from_py_object)]
#[derive(Clone, Copy)]
struct PyGevParams(gev::GevParams);

#[pymethods]
impl PyGevParams {
    #[new]
    fn new(eta: f64, tau: f64, xi: f64) -> PyResult<Self> {
        gev::GevParams::new(eta, tau, xi).py().map(Self)
    }

    #[staticmethod]
    fn case_study() -> Self {
        Self(gev::GevParams::case_study())
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi
    }

    /// Maps a standard Frechet value to this margin.
    fn transform(&self, z: f64) -> PyResult<f64> {
        gev::gev_transform(z, &self.0).py()
    }

    fn __repr__(&self) -> String {
        format!("GevParams(eta={}, tau={}, xi={})", self.0.eta, self.0.tau, self.0.xi)
    }
}

/// A GEV margin raised to a positive integer power.
#[pyclass(name = "MarginPowerSpec", from_py_object)]
#[derive(Clone, Copy)]
struct PyMarginPowerSpec(gev::MarginPowerSpec);

#[pymethods]
impl PyMarginPowerSpec {
    #[new]
    fn new(gev: PyGevParams, beta: u32) -> PyResult<Self> {
        gev::MarginPowerSpec::new(gev.0, beta).py().map(Self)
    }

    #[getter]
    fn gev(&self) -> PyGevParams {
        PyGevParams(self.0.gev)
    }

    #[getter]
    fn beta(&self) -> u32 {
        self.0.beta()
    }

    fn variance(&self) -> PyResult<f64> {
        gev::var_any(&self.0).py()
    }

    fn __repr__(&self) -> String {
        format!("MarginPowerSpec(gev={:?}, beta={})", self.0.gev, self.0.beta())
    }
}

/// Power or Smith semivariogram.
#[pyclass(name = "Semivariogram", from_py_object)]
#[derive(Clone, Copy)]
struct PySemivariogram(br::SemivariogramModel);

#[pymethods]
impl PySemivariogram {
    #[staticmethod]
    fn power(kappa: f64, psi: f64) -> PyResult<Self> {
        br::SemivariogramModel::power(kappa, psi).py().map(Self)
    }

    #[staticmethod]
    fn smith(s11: f64, s12: f64, s22: f64) -> PyResult<Self> {
        br::SemivariogramModel::smith(s11, s12, s22).py().map(Self)
    }

    #[staticmethod]
    fn case_study() -> Self {
        Self(br::SemivariogramModel::case_study())
    }

    fn gamma(&self, lag: [f64; 2]) -> f64 {
        self.0.gamma(lag)
    }

    fn lag_to_h(&self, lag: [f64; 2]) -> f64 {
        br::lag_to_h(lag, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Stationary Brown-Resnick field with powered GEV margins.
#[pyclass(name = "BrownResnick", from_py_object)]
#[derive(Clone)]
struct PyBrownResnick(br::BrownResnickSpec);

#[pymethods]
impl PyBrownResnick {
    #[new]
    fn new(semivariogram: PySemivariogram, margin: PyMarginPowerSpec) -> PyResult<Self> {
        br::BrownResnickSpec::stationary(semivariogram.0, margin.0).py().map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (beta = 10))]
    fn case_study(beta: u32) -> PyResult<Self> {
        br::BrownResnickSpec::case_study(beta).py().map(Self)
    }

    /// `D` between two sites.
    #[pyo3(signature = (x1, x2, q = None))]
    fn dependence(&self, x1: [f64; 2], x2: [f64; 2], q: Option<PyQuadratureSpec>) -> PyResult<f64> {
        br::dependence_measure(&self.0, x1, x2, &quad(q)).py()
    }

    /// `D` along the first axis at each distance.
    #[pyo3(signature = (distances, q = None))]
    fn curve(&self, distances: Vec<f64>, q: Option<PyQuadratureSpec>) -> PyResult<Vec<f64>> {
        Ok(br::correlation_curve(&self.0, &distances, &quad(q)).py()?.values)
    }

    /// First distance at which `D` drops below `level`.
    #[pyo3(signature = (level, q = None))]
    fn threshold(&self, level: f64, q: Option<PyQuadratureSpec>) -> PyResult<f64> {
        br::threshold_distance(&self.0, level, &quad(q)).py()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyfunction]
fn hr_cdf(z1: f64, z2: f64, p: PyHrParams) -> PyResult<f64> {
    hr::hr_cdf(z1, z2, &p.0).py()
}

#[pyfunction]
fn hr_density(z1: f64, z2: f64, p: PyHrParams) -> PyResult<f64> {
    hr::hr_density(z1, z2, &p.0).py()
}

/// `E[Z1^beta1 Z2^beta2]` for standard Frechet margins.
#[pyfunction]
#[pyo3(signature = (beta1, beta2, p, q = None))]
fn i_integral(beta1: f64, beta2: f64, p: PyHrParams, q: Option<PyQuadratureSpec>) -> PyResult<f64> {
    hr::i_integral(hr::SimplePowerPair::new(beta1, beta2).py()?, &p.0, &quad(q)).py()
}

#[pyfunction]
#[pyo3(signature = (beta1, beta2, p, q = None))]
fn cov_simple_powers(beta1: f64, beta2: f64, p: PyHrParams, q: Option<PyQuadratureSpec>) -> PyResult<f64> {
    hr::cov_simple_powers(hr::SimplePowerPair::new(beta1, beta2).py()?, &p.0, &quad(q)).py()
}

/// Covariance of powered GEV margins; Gumbel margins are allowed.
#[pyfunction]
#[pyo3(signature = (spec1, spec2, p, q = None))]
fn cov_gev_powers(
    spec1: PyMarginPowerSpec,
    spec2: PyMarginPowerSpec,
    p: PyHrParams,
    q: Option<PyQuadratureSpec>,
) -> PyResult<f64> {
    gev::cov_any(&spec1.0, &spec2.0, &p.0, &quad(q)).py()
}

#[pyfunction]
fn var_gev_power(spec: PyMarginPowerSpec) -> PyResult<f64> {
    gev::var_any(&spec.0).py()
}

#[pyfunction]
#[pyo3(signature = (spec1, spec2, p, q = None))]
fn corr_gev_powers(
    spec1: PyMarginPowerSpec,
    spec2: PyMarginPowerSpec,
    p: PyHrParams,
    q: Option<PyQuadratureSpec>,
) -> PyResult<f64> {
    gev::corr_gev_powers(&spec1.0, &spec2.0, &p.0, &quad(q)).py()
}

/// Variance of the aggregated loss over a rectangle, as a dict.
#[pyfunction]
#[pyo3(signature = (field, region, resolution, c1 = 82.2, exposure = 1.0, q = None))]
fn loss_variance<'py>(
    py: Python<'py>,
    field: &PyBrownResnick,
    region: [f64; 4],
    resolution: f64,
    c1: f64,
    exposure: f64,
    q: Option<PyQuadratureSpec>,
) -> PyResult<Bound<'py, PyDict>> {
    let beta = field.0.stationary_margin().py()?.beta();
    let damage = risk::DamageFunctionSpec::new(c1, beta).py()?;
    let r = risk::Region::new(region[0], region[1], region[2], region[3], resolution).py()?;
    let lv = risk::loss_variance(&field.0, &damage, &r, exposure, &quad(q)).py()?;
    let d = PyDict::new(py);
    d.set_item("value", lv.value)?;
    d.set_item("point_variance", lv.point_variance)?;
    d.set_item("correlation_integral", lv.correlation_integral)?;
    d.set_item("cells", lv.cells)?;
    d.set_item("cell_size", lv.cell_size)?;
    d.set_item("distinct_lags", lv.distinct_lags)?;
    Ok(d)
}

/// Checks `Cov(Z1^beta1, Z2^beta2)` against density quadrature and Monte Carlo.
#[pyfunction]
#[pyo3(signature = (beta1, beta2, h, n_samples = 100_000, seed = 20240601, tol = 1e-5))]
fn validate_simple<'py>(
    py: Python<'py>,
    beta1: f64,
    beta2: f64,
    h: f64,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let target = oracle::ValidationTarget::SimpleCov { beta1, beta2 };
    let cfg = oracle::McConfig::new(n_samples, seed, false).py()?;
    let p = hr::HrParams::new(h).py()?;
    let r = oracle::validate(&target, &p, &numerics::QuadratureSpec::headline(), &cfg, tol).py()?;
    let d = PyDict::new(py);
    d.set_item("analytic", r.analytic)?;
    d.set_item("quadrature_oracle", r.quadrature_oracle)?;
    d.set_item("quadrature_relative_error", r.quadrature_relative_error)?;
    d.set_item("mc_estimate", r.mc_estimate)?;
    d.set_item("mc_std_error", r.mc_std_error)?;
    d.set_item("mc_applicable", r.mc_applicable)?;
    d.set_item("agrees", r.agrees)?;
    Ok(d)
}

#[pymodule]
mod powcorr_py {
    #[pymodule_export]
    use super::{
        corr_gev_powers, cov_gev_powers, cov_simple_powers, hr_cdf, hr_density, i_integral, loss_variance,
        validate_simple, var_gev_power, PyBrownResnick, PyGevParams, PyHrParams, PyMarginPowerSpec,
        PyQuadratureSpec, PySemivariogram,
    };
}
