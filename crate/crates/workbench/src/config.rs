//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; blank lines and `#` comments are ignored; keys
//! accept `-` or `_`. Flags given on the command line replace file values.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use fekete_core::domains::{EpsLaw, EpsSchedule, Shape, WeightFn};
use fekete_core::fekete::{ArraySpec, Extractor, DEFAULT_MAX_SWEEPS, DEFAULT_SLACK};
use fekete_core::perturbation::{PerturbationProbe, DEFAULT_H};
use fekete_core::Point;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specs;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey { path: String, line: usize, key: String },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: &'static str, reason: String },
    #[error("cannot read config {path}: {reason}")]
    Unreadable { path: String, reason: String },
}

fn invalid(key: &'static str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::InvalidValue {
        key,
        reason: reason.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EpsLawArg {
    Zero,
    InvN,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractorArg {
    Greedy,
    Exchange,
    Brute,
}

/// Every knob of a run. Shapes, weights, probes and points stay in their
/// textual form so the config serializes exactly as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub shape: String,
    pub weight: String,
    pub eps0: f64,
    pub eps_law: EpsLawArg,
    pub nmin: usize,
    pub nmax: usize,
    pub extractor: ExtractorArg,
    pub max_sweeps: usize,
    pub slack: f64,
    pub moment_degree: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub resolution: usize,
    /// Degree for `gram`, `bergman` and `optimal`; defaults to `nmax`.
    pub degree: Option<usize>,
    /// Measure CSV for `gram` and `bergman`.
    pub measure: Option<PathBuf>,
    /// Evaluation points for `bergman`.
    pub points: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub probe: String,
    pub h: f64,
    /// Directory that relative paths inside the config refer to.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: "interval".into(),
            weight: "constant".into(),
            eps0: 1.0,
            eps_law: EpsLawArg::InvN,
            nmin: 1,
            nmax: 10,
            extractor: ExtractorArg::Exchange,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            slack: DEFAULT_SLACK,
            moment_degree: 4,
            seed: 0,
            out: PathBuf::from("out"),
            resolution: 201,
            degree: None,
            measure: None,
            points: None,
            tol: fekete_core::gram::DEFAULT_TOL,
            max_iter: fekete_core::gram::DEFAULT_MAX_ITER,
            probe: "re2".into(),
            h: DEFAULT_H,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Command-line values that replace config entries when present.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Compact set: interval[:a,b], circle[:r], disk[:r], square, bidisk, simplex
    #[arg(long, global = true)]
    pub shape: Option<String>,
    /// Weight: constant, gaussian[:c], grid:<csv>
    #[arg(long, global = true)]
    pub weight: Option<String>,
    #[arg(long, global = true)]
    pub eps0: Option<f64>,
    #[arg(long, value_enum, global = true)]
    pub eps_law: Option<EpsLawArg>,
    #[arg(long, global = true)]
    pub nmin: Option<usize>,
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub extractor: Option<ExtractorArg>,
    #[arg(long, global = true)]
    pub max_sweeps: Option<usize>,
    #[arg(long, global = true)]
    pub slack: Option<f64>,
    #[arg(long, global = true)]
    pub moment_degree: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    #[arg(long, global = true)]
    pub measure: Option<PathBuf>,
    /// Points `z1,z2;...` with complex literals like `0.5-1i`
    #[arg(long, global = true)]
    pub points: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Test function u: const:c, re[:j], im[:j], re2[:j], abs2, affine:c0,re1,im1,...
    #[arg(long, global = true)]
    pub probe: Option<String>,
    #[arg(long, global = true)]
    pub h: Option<f64>,
}

fn parse<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| invalid(key, format!("cannot parse `{v}`")))
}

fn parse_enum<T: clap::ValueEnum>(key: &'static str, v: &str) -> Result<T, ConfigError> {
    T::from_str(v, true).map_err(|_| invalid(key, format!("unknown choice `{v}`")))
}

impl ExperimentConfig {
    /// Parse config text; `path` is used for diagnostics and relative paths.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig {
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ..ExperimentConfig::default()
        };
        let shown = path.display().to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: shown,
                    line: i + 1,
                });
            };
            let key = k.trim().replace('-', "_");
            let v = v.trim();
            match key.as_str() {
                "shape" => cfg.shape = v.into(),
                "weight" => cfg.weight = v.into(),
                "eps0" => cfg.eps0 = parse("eps0", v)?,
                "eps_law" => cfg.eps_law = parse_enum("eps_law", v)?,
                "nmin" => cfg.nmin = parse("nmin", v)?,
                "nmax" => cfg.nmax = parse("nmax", v)?,
                "extractor" => cfg.extractor = parse_enum("extractor", v)?,
                "max_sweeps" => cfg.max_sweeps = parse("max_sweeps", v)?,
                "slack" => cfg.slack = parse("slack", v)?,
                "moment_degree" => cfg.moment_degree = parse("moment_degree", v)?,
                "seed" => cfg.seed = parse("seed", v)?,
                "out" => cfg.out = v.into(),
                "resolution" => cfg.resolution = parse("resolution", v)?,
                "degree" => cfg.degree = Some(parse("degree", v)?),
                "measure" => cfg.measure = Some(v.into()),
                "points" => cfg.points = Some(v.into()),
                "tol" => cfg.tol = parse("tol", v)?,
                "max_iter" => cfg.max_iter = parse("max_iter", v)?,
                "probe" => cfg.probe = v.into(),
                "h" => cfg.h = parse("h", v)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        path: shown,
                        line: i + 1,
                        key: k.trim().into(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        ExperimentConfig::parse(&text, path)
    }

    /// The config as `key = value` text, readable by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("shape", self.shape.clone());
        put("weight", self.weight.clone());
        put("eps0", format!("{:?}", self.eps0));
        put(
            "eps_law",
            match self.eps_law {
                EpsLawArg::Zero => "zero".into(),
                EpsLawArg::InvN => "inv-n".into(),
            },
        );
        put("nmin", self.nmin.to_string());
        put("nmax", self.nmax.to_string());
        put(
            "extractor",
            match self.extractor {
                ExtractorArg::Greedy => "greedy".into(),
                ExtractorArg::Exchange => "exchange".into(),
                ExtractorArg::Brute => "brute".into(),
            },
        );
        put("max_sweeps", self.max_sweeps.to_string());
        put("slack", format!("{:?}", self.slack));
        put("moment_degree", self.moment_degree.to_string());
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        put("resolution", self.resolution.to_string());
        if let Some(d) = self.degree {
            put("degree", d.to_string());
        }
        if let Some(m) = &self.measure {
            put("measure", m.display().to_string());
        }
        if let Some(p) = &self.points {
            put("points", p.clone());
        }
        put("tol", format!("{:?}", self.tol));
        put("max_iter", self.max_iter.to_string());
        put("probe", self.probe.clone());
        put("h", format!("{:?}", self.h));
        s
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        take!(
            shape,
            weight,
            eps0,
            eps_law,
            nmin,
            nmax,
            extractor,
            max_sweeps,
            slack,
            moment_degree,
            seed,
            out,
            resolution,
            tol,
            max_iter,
            probe,
            h
        );
        if o.degree.is_some() {
            self.degree = o.degree;
        }
        if o.measure.is_some() {
            self.measure = o.measure.clone();
        }
        if o.points.is_some() {
            self.points = o.points.clone();
        }
    }

    /// Check every value and build the typed run parameters.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let shape = specs::parse_shape(&self.shape).map_err(|e| invalid("shape", e))?;
        let weight = specs::parse_weight(&self.weight, &self.base_dir).map_err(|e| invalid("weight", e))?;
        let d = shape.dim();
        let eps = match self.eps_law {
            EpsLawArg::Zero => EpsSchedule::ZERO,
            EpsLawArg::InvN => EpsSchedule::inv_n(self.eps0).map_err(|e| invalid("eps0", e))?,
        };
        if self.nmin == 0 {
            return Err(invalid("nmin", "must be >= 1"));
        }
        if self.nmax < self.nmin {
            return Err(invalid("nmax", format!("{} is below nmin = {}", self.nmax, self.nmin)));
        }
        if !(0.0..1.0).contains(&self.slack) {
            return Err(invalid("slack", "must lie in [0, 1)"));
        }
        if self.resolution < 2 {
            return Err(invalid("resolution", "must be >= 2"));
        }
        if self.moment_degree == 0 {
            return Err(invalid("moment_degree", "must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be > 0"));
        }
        if !(self.h > 0.0) {
            return Err(invalid("h", "must be > 0"));
        }
        if self.max_sweeps == 0 {
            return Err(invalid("max_sweeps", "must be >= 1"));
        }
        let extractor = match self.extractor {
            ExtractorArg::Greedy => Extractor::Greedy,
            ExtractorArg::Exchange => Extractor::Exchange {
                max_sweeps: self.max_sweeps,
            },
            ExtractorArg::Brute => Extractor::BruteForce,
        };
        let probe = specs::parse_probe(&self.probe, d).map_err(|e| invalid("probe", e))?;
        let points = match &self.points {
            Some(p) => Some(specs::parse_points(p, d).map_err(|e| invalid("points", e))?),
            None => None,
        };
        let degree = self.degree.unwrap_or(self.nmax);
        let array = ArraySpec {
            shape,
            resolution: self.resolution,
            weight,
            eps,
            n_min: self.nmin,
            n_max: self.nmax,
            extractor,
            slack: self.slack,
        };
        Ok(Resolved {
            array,
            degree,
            probe,
            points,
            measure: self.measure.as_ref().map(|m| self.base_dir.join(m)),
        })
    }
}

/// Typed parameters of a run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub array: ArraySpec,
    pub degree: usize,
    pub probe: PerturbationProbe,
    pub points: Option<Vec<Point>>,
    pub measure: Option<PathBuf>,
}

impl Resolved {
    pub fn shape(&self) -> &Shape {
        &self.array.shape
    }

    pub fn weight(&self) -> &WeightFn {
        &self.array.weight
    }

    pub fn eps_law(&self) -> EpsLaw {
        self.array.eps.law
    }
}
