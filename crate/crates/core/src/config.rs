//! Run configuration: a flat TOML file with one table per section.
//!
//! ```text
//! [model]
//! kind = "power"
//! kappa = 3.39
//! psi = 0.81
//! ```
//!
//! Output files carry the configuration they were produced with on lines
//! starting with `#! `. When a file contains such lines only those are read,
//! so an output file can be passed back as `--config`. The `[run]` section
//! written there records the command line and is ignored on input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use toml::{Table, Value};

use crate::brown_resnick::{BrownResnickSpec, SemivariogramModel};
use crate::error::{Error, Result};
use crate::gev::{GevParams, MarginPowerSpec};
use crate::numerics::QuadratureSpec;
use crate::oracle::McConfig;
use crate::risk::{DamageFunctionSpec, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("expected csv or json, got `{other}`")),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariogramKind {
    Power,
    Smith,
}

/// Every setting in flat form. Defaults are the wind-gust case study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kind: VariogramKind,
    pub kappa: f64,
    pub psi: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    pub eta: f64,
    pub tau: f64,
    pub xi: f64,
    pub c1: f64,
    /// Damage exponent, which is also the power in `D_{X,beta}`.
    pub beta: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
    pub resolution: f64,
    pub exposure: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadratureSpec::headline();
        Self {
            kind: VariogramKind::Power,
            kappa: 3.39,
            psi: 0.81,
            s11: 1.0,
            s12: 0.0,
            s22: 1.0,
            eta: 25.71,
            tau: 3.03,
            xi: -0.12,
            c1: 82.2,
            beta: 10,
            rel_tol: q.relative_tolerance,
            abs_tol: q.absolute_tolerance,
            max_subdivisions: q.max_subdivisions,
            n_samples: 1_000_000,
            seed: 20240601,
            antithetic: false,
            format: OutputFormat::Csv,
            path: None,
            lon_min: 5.75,
            lon_max: 12.0,
            lat_min: 49.0,
            lat_max: 52.0,
            resolution: 0.25,
            exposure: 1.0,
        }
    }
}

fn as_f64(path: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::config(path, format!("expected a number, got {other}"))),
    }
}

fn as_uint<T: TryFrom<i64> + FromStr>(path: &str, v: &Value) -> Result<T> {
    let parsed = match v {
        Value::Integer(i) => T::try_from(*i).ok(),
        Value::String(s) => s.trim().parse::<T>().ok(),
        _ => None,
    };
    parsed.ok_or_else(|| Error::config(path, format!("expected a non-negative integer, got {v}")))
}

fn as_str<'a>(path: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(path, format!("expected a string, got {v}")))
}

/// Shortest decimal that parses back to the same `f64`.
fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Reattach a field path to an error raised by a constructor.
fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    }
}

impl RunConfig {
    /// Parses configuration text on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let embedded = text.lines().any(|l| l.trim_start().starts_with("#!"));
        let body: String = if embedded {
            text.lines()
                .filter_map(|l| l.trim_start().strip_prefix("#!"))
                .map(|l| format!("{}\n", l.trim()))
                .collect()
        } else {
            text.to_string()
        };
        let doc: Table = body
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let mut cfg = Self::default();
        for (section, entries) in &doc {
            if section == "run" {
                continue;
            }
            let entries = entries
                .as_table()
                .ok_or_else(|| Error::config(section.as_str(), "expected a section"))?;
            for (k, v) in entries {
                cfg.set(&format!("{section}.{k}"), v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    /// Sets one field by its `section.key` path without validating the result.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "model.kind" => {
                self.kind = match as_str(key, v)?.to_ascii_lowercase().as_str() {
                    "power" => VariogramKind::Power,
                    "smith" => VariogramKind::Smith,
                    other => {
                        return Err(Error::config(key, format!("expected power or smith, got `{other}`")))
                    }
                }
            }
            "model.kappa" => self.kappa = as_f64(key, v)?,
            "model.psi" => self.psi = as_f64(key, v)?,
            "model.s11" => self.s11 = as_f64(key, v)?,
            "model.s12" => self.s12 = as_f64(key, v)?,
            "model.s22" => self.s22 = as_f64(key, v)?,
            "model.eta" => self.eta = as_f64(key, v)?,
            "model.tau" => self.tau = as_f64(key, v)?,
            "model.xi" => self.xi = as_f64(key, v)?,
            "damage.c1" => self.c1 = as_f64(key, v)?,
            "damage.beta" => self.beta = as_uint(key, v)?,
            "quadrature.rel_tol" => self.rel_tol = as_f64(key, v)?,
            "quadrature.abs_tol" => self.abs_tol = as_f64(key, v)?,
            "quadrature.max_subdivisions" => self.max_subdivisions = as_uint(key, v)?,
            "mc.n_samples" => self.n_samples = as_uint(key, v)?,
            "mc.seed" => self.seed = as_uint(key, v)?,
            "mc.antithetic" => self.antithetic = v.as_bool().ok_or_else(|| Error::config(key, format!("expected true or false, got {v}")))?,
            "output.format" => self.format = as_str(key, v)?.parse().map_err(|e: String| Error::config(key, e))?,
            "output.path" => {
                let p = as_str(key, v)?;
                self.path = if p.is_empty() { None } else { Some(PathBuf::from(p)) }
            }
            "region.lon_min" => self.lon_min = as_f64(key, v)?,
            "region.lon_max" => self.lon_max = as_f64(key, v)?,
            "region.lat_min" => self.lat_min = as_f64(key, v)?,
            "region.lat_max" => self.lat_max = as_f64(key, v)?,
            "region.resolution" => self.resolution = as_f64(key, v)?,
            "region.exposure" => self.exposure = as_f64(key, v)?,
            _ => return Err(Error::config(key, "unknown setting")),
        }
        Ok(())
    }

    /// Applies a `section.key=value` override. The value is read as TOML and
    /// falls back to a bare string, so `model.kind=smith` works unquoted.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "expected section.key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        let value = format!("v = {v}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(v.to_string()));
        self.set(k, &value)
    }

    /// Checks every nested invariant, reporting the offending field.
    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        self.damage()?;
        self.quadrature()?;
        self.mc()?;
        self.region()?;
        if !(self.exposure > 0.0) || !self.exposure.is_finite() {
            return Err(Error::config("region.exposure", format!("must be > 0, got {}", self.exposure)));
        }
        Ok(())
    }

    pub fn semivariogram(&self) -> Result<SemivariogramModel> {
        match self.kind {
            VariogramKind::Power => {
                if !(self.kappa > 0.0) || !self.kappa.is_finite() {
                    return Err(Error::config("model.kappa", format!("must be > 0, got {}", self.kappa)));
                }
                SemivariogramModel::power(self.kappa, self.psi).map_err(at("model.psi"))
            }
            VariogramKind::Smith => {
                SemivariogramModel::smith(self.s11, self.s12, self.s22).map_err(at("model.s11"))
            }
        }
    }

    pub fn gev(&self) -> Result<GevParams> {
        let path = if !(self.tau > 0.0) {
            "model.tau"
        } else if !self.eta.is_finite() {
            "model.eta"
        } else {
            "model.xi"
        };
        GevParams::new(self.eta, self.tau, self.xi).map_err(at(path))
    }

    pub fn margin(&self) -> Result<MarginPowerSpec> {
        MarginPowerSpec::new(self.gev()?, self.beta).map_err(at("damage.beta"))
    }

    /// Stationary Brown-Resnick field with power `beta`.
    pub fn spec(&self) -> Result<BrownResnickSpec> {
        BrownResnickSpec::stationary(self.semivariogram()?, self.margin()?).map_err(at("damage.beta"))
    }

    pub fn damage(&self) -> Result<DamageFunctionSpec> {
        let path = if self.beta == 0 { "damage.beta" } else { "damage.c1" };
        DamageFunctionSpec::new(self.c1, self.beta).map_err(at(path))
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        let path = if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            "quadrature.rel_tol"
        } else if !(self.abs_tol >= 0.0) {
            "quadrature.abs_tol"
        } else {
            "quadrature.max_subdivisions"
        };
        QuadratureSpec::new(self.rel_tol, self.abs_tol, self.max_subdivisions).map_err(at(path))
    }

    pub fn mc(&self) -> Result<McConfig> {
        McConfig::new(self.n_samples, self.seed, self.antithetic).map_err(at("mc.n_samples"))
    }

    pub fn region(&self) -> Result<Region> {
        let path = if self.lon_max > self.lon_min && self.lat_max > self.lat_min {
            "region.resolution"
        } else {
            "region"
        };
        Region::new(self.lon_min, self.lon_max, self.lat_min, self.lat_max, self.resolution)
            .map_err(at(path))
    }

    /// Canonical text form; parses back to an identical configuration.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let f = fmt_f64;
        let _ = writeln!(s, "[model]");
        let _ = writeln!(
            s,
            "kind = \"{}\"",
            match self.kind {
                VariogramKind::Power => "power",
                VariogramKind::Smith => "smith",
            }
        );
        for (k, v) in [
            ("kappa", self.kappa),
            ("psi", self.psi),
            ("s11", self.s11),
            ("s12", self.s12),
            ("s22", self.s22),
            ("eta", self.eta),
            ("tau", self.tau),
            ("xi", self.xi),
        ] {
            let _ = writeln!(s, "{k} = {}", f(v));
        }
        let _ = writeln!(s, "[damage]\nc1 = {}\nbeta = {}", f(self.c1), self.beta);
        let _ = writeln!(
            s,
            "[quadrature]\nrel_tol = {}\nabs_tol = {}\nmax_subdivisions = {}",
            f(self.rel_tol),
            f(self.abs_tol),
            self.max_subdivisions
        );
        // TOML integers are signed 64-bit; larger seeds are written as strings
        let seed = if i64::try_from(self.seed).is_ok() {
            self.seed.to_string()
        } else {
            format!("\"{}\"", self.seed)
        };
        let _ = writeln!(
            s,
            "[mc]\nn_samples = {}\nseed = {seed}\nantithetic = {}",
            self.n_samples, self.antithetic
        );
        let _ = writeln!(
            s,
            "[output]\nformat = \"{}\"\npath = {:?}",
            self.format,
            self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        );
        let _ = writeln!(s, "[region]");
        for (k, v) in [
            ("lon_min", self.lon_min),
            ("lon_max", self.lon_max),
            ("lat_min", self.lat_min),
            ("lat_max", self.lat_max),
            ("resolution", self.resolution),
            ("exposure", self.exposure),
        ] {
            let _ = writeln!(s, "{k} = {}", f(v));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_of(e: Error) -> String {
        match e {
            Error::Config { path, .. } => path,
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn defaults_are_the_case_study() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.spec().unwrap(), BrownResnickSpec::case_study(10).unwrap());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.set_override("model.psi=2").unwrap();
        c.set_override("quadrature.rel_tol=1e-9").unwrap();
        c.set_override("mc.antithetic=true").unwrap();
        c.set_override("output.path=out.csv").unwrap();
        c.set_override("model.kind=smith").unwrap();
        c.xi = -0.1234567890123456;
        assert_eq!(RunConfig::parse(&c.to_ini()).unwrap(), c);
    }

    #[test]
    fn embedded_header_wins() {
        let text = "#! [model]\n#! psi = 1.5\n[model]\npsi = 0.3\ndistance,correlation\n1,2\n";
        assert_eq!(RunConfig::parse(text).unwrap().psi, 1.5);
    }

    #[test]
    fn field_paths() {
        let e = RunConfig::parse("[model]\npsi = 3\n").unwrap_err();
        assert_eq!(path_of(e), "model.psi");
        let e = RunConfig::parse("[model]\nkappa = -1\n").unwrap_err();
        assert_eq!(path_of(e), "model.kappa");
        let e = RunConfig::parse("[model]\ntau = 0\n").unwrap_err();
        assert_eq!(path_of(e), "model.tau");
        let e = RunConfig::parse("[model]\nxi = 0.1\n").unwrap_err();
        assert_eq!(path_of(e), "damage.beta");
        let e = RunConfig::parse("[damage]\nc1 = 0\n").unwrap_err();
        assert_eq!(path_of(e), "damage.c1");
        let e = RunConfig::parse("[quadrature]\nrel_tol = 0.5\n").unwrap_err();
        assert_eq!(path_of(e), "quadrature.rel_tol");
        let e = RunConfig::parse("[mc]\nn_samples = 0\n").unwrap_err();
        assert_eq!(path_of(e), "mc.n_samples");
        let e = RunConfig::parse("[mc]\nseed = -3\n").unwrap_err();
        assert_eq!(path_of(e), "mc.seed");
        let e = RunConfig::parse("[region]\nresolution = 10\n").unwrap_err();
        assert_eq!(path_of(e), "region.resolution");
        let e = RunConfig::parse("[model]\nfoo = 1\n").unwrap_err();
        assert_eq!(path_of(e), "model.foo");
        let e = RunConfig::parse("[output]\nformat = \"xml\"\n").unwrap_err();
        assert_eq!(path_of(e), "output.format");
    }

    #[test]
    fn run_section_ignored() {
        let c = RunConfig::parse("[run]\ncommand = \"curve --n 5\"\n[damage]\nbeta = 3\n").unwrap();
        assert_eq!(c.beta, 3);
    }
}
