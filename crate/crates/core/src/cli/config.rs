//! Flat `section.key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::diagnostics::DEFAULT_M_WEIGHT;
use crate::grid_ops::{BoundaryMode, FaceMean};
use crate::model::Params;
use crate::stepper::{SourceForm, StepConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioName {
    GaussianBump,
    ColdDenseSpot,
    SmoothedRiemann,
    Sine,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GaussianBump => "gaussian_bump",
            Self::ColdDenseSpot => "cold_dense_spot",
            Self::SmoothedRiemann => "smoothed_riemann",
            Self::Sine => "sine",
        }
    }
}

impl FromStr for ScenarioName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "gaussian_bump" => Self::GaussianBump,
            "cold_dense_spot" => Self::ColdDenseSpot,
            "smoothed_riemann" => Self::SmoothedRiemann,
            "sine" => Self::Sine,
            _ => return Err("expected gaussian_bump, cold_dense_spot, smoothed_riemann or sine".into()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
    pub bc: BoundaryMode,
    pub face_mean: FaceMean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub amplitude: f64,
    pub width: f64,
    /// Defaults to the domain midpoint.
    pub center: f64,
    pub theta_dip: f64,
    pub v_dip: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    pub ladder_l_factor: f64,
    pub ladder_k: usize,
    pub theta_tol: f64,
    pub m_weight: f64,
    pub balance_tol: f64,
    pub conservation_tol: f64,
    pub ladder_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub grid: GridConfig,
    pub scenario: ScenarioConfig,
    pub time: TimeConfig,
    pub picard: StepConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let length = 10.0;
        Self {
            params: Params::default(),
            grid: GridConfig {
                n: 257,
                length,
                bc: BoundaryMode::DirichletBackground,
                face_mean: FaceMean::Harmonic,
            },
            scenario: ScenarioConfig {
                name: ScenarioName::GaussianBump,
                amplitude: 1.0,
                width: 0.5,
                center: 0.5 * length,
                theta_dip: 0.3,
                v_dip: 0.2,
            },
            time: TimeConfig {
                t_end: 0.5,
                dt: 1e-3,
                sample_every: 1,
            },
            picard: StepConfig::default(),
            diagnostics: DiagnosticsConfig {
                ladder_l_factor: 2.0,
                ladder_k: 6,
                theta_tol: 1e-6,
                m_weight: DEFAULT_M_WEIGHT,
                balance_tol: 1e-3,
                conservation_tol: 1e-10,
                ladder_tol: 1e-6,
            },
            output: OutputConfig {
                dir: PathBuf::from("out"),
                formats: vec![Format::Csv, Format::Json],
            },
            seed: 0,
        }
    }
}

/// Every recognised key, in rendering order.
pub const KEYS: &[&str] = &[
    "params.R",
    "params.gamma",
    "params.tau",
    "params.mu",
    "params.kappa",
    "grid.n",
    "grid.L",
    "grid.bc",
    "grid.face_mean",
    "scenario.name",
    "scenario.amplitude",
    "scenario.width",
    "scenario.center",
    "scenario.theta_dip",
    "scenario.v_dip",
    "time.t_end",
    "time.dt",
    "time.sample_every",
    "picard.tol",
    "picard.max",
    "picard.dt_min",
    "picard.positivity_floor",
    "picard.sweeps",
    "picard.source_form",
    "diagnostics.ladder_L_factor",
    "diagnostics.ladder_K",
    "diagnostics.theta_tol",
    "diagnostics.M_weight",
    "diagnostics.balance_tol",
    "diagnostics.conservation_tol",
    "diagnostics.ladder_tol",
    "output.dir",
    "output.formats",
    "seed",
];

fn parse_num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

fn parse_bc(v: &str) -> Result<BoundaryMode, String> {
    match v {
        "dirichlet_background" => Ok(BoundaryMode::DirichletBackground),
        "periodic" => Ok(BoundaryMode::Periodic),
        _ => Err("expected dirichlet_background or periodic".into()),
    }
}

fn bc_str(bc: BoundaryMode) -> &'static str {
    match bc {
        BoundaryMode::DirichletBackground => "dirichlet_background",
        BoundaryMode::Periodic => "periodic",
    }
}

fn parse_face_mean(v: &str) -> Result<FaceMean, String> {
    match v {
        "harmonic" => Ok(FaceMean::Harmonic),
        "arithmetic" => Ok(FaceMean::Arithmetic),
        _ => Err("expected harmonic or arithmetic".into()),
    }
}

fn parse_source(v: &str) -> Result<SourceForm, String> {
    match v {
        "energy_consistent" => Ok(SourceForm::EnergyConsistent),
        "frozen" => Ok(SourceForm::Frozen),
        _ => Err("expected energy_consistent or frozen".into()),
    }
}

fn parse_formats(v: &str) -> Result<Vec<Format>, String> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f = match part {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => return Err(format!("unknown format {part:?} (expected csv, json)")),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let pairs = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let line = raw.split('#').next().unwrap_or("").trim();
                (!line.is_empty()).then_some((i + 1, line))
            })
            .map(|(no, line)| match line.split_once('=') {
                Some((k, v)) => Ok((no, k.trim().to_string(), v.trim().to_string())),
                None => Err(ConfigError::Syntax {
                    line: no,
                    text: line.to_string(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_pairs(pairs)
    }

    /// Builds a configuration from `(line, key, value)` triples over the defaults.
    pub fn from_pairs(pairs: Vec<(usize, String, String)>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        let mut center_given = false;
        for (line, key, value) in pairs {
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate { line, key });
            }
            cfg.set(&key, &value).map_err(|reason| ConfigError::BadValue {
                line,
                key: key.clone(),
                value: value.clone(),
                reason,
            })?;
            center_given |= key == "scenario.center";
            seen.push(key);
        }
        if !center_given {
            cfg.scenario.center = 0.5 * cfg.grid.length;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let p = &mut self.params;
        let d = &mut self.diagnostics;
        match key {
            "params.R" => p.r = parse_num(v)?,
            "params.gamma" => p.gamma = parse_num(v)?,
            "params.tau" => p.tau = parse_num(v)?,
            "params.mu" => p.mu = parse_num(v)?,
            "params.kappa" => p.kappa = parse_num(v)?,
            "grid.n" => self.grid.n = parse_num(v)?,
            "grid.L" => self.grid.length = parse_num(v)?,
            "grid.bc" => self.grid.bc = parse_bc(v)?,
            "grid.face_mean" => self.grid.face_mean = parse_face_mean(v)?,
            "scenario.name" => self.scenario.name = v.parse()?,
            "scenario.amplitude" => self.scenario.amplitude = parse_num(v)?,
            "scenario.width" => self.scenario.width = parse_num(v)?,
            "scenario.center" => self.scenario.center = parse_num(v)?,
            "scenario.theta_dip" => self.scenario.theta_dip = parse_num(v)?,
            "scenario.v_dip" => self.scenario.v_dip = parse_num(v)?,
            "time.t_end" => self.time.t_end = parse_num(v)?,
            "time.dt" => self.time.dt = parse_num(v)?,
            "time.sample_every" => self.time.sample_every = parse_num(v)?,
            "picard.tol" => self.picard.picard_tol = parse_num(v)?,
            "picard.max" => self.picard.picard_max = parse_num(v)?,
            "picard.dt_min" => self.picard.dt_min = parse_num(v)?,
            "picard.positivity_floor" => self.picard.positivity_floor = parse_num(v)?,
            "picard.sweeps" => {
                self.picard.sweeps = if v == "auto" { None } else { Some(parse_num(v)?) }
            }
            "picard.source_form" => self.picard.source = parse_source(v)?,
            "diagnostics.ladder_L_factor" => d.ladder_l_factor = parse_num(v)?,
            "diagnostics.ladder_K" => d.ladder_k = parse_num(v)?,
            "diagnostics.theta_tol" => d.theta_tol = parse_num(v)?,
            "diagnostics.M_weight" => d.m_weight = parse_num(v)?,
            "diagnostics.balance_tol" => d.balance_tol = parse_num(v)?,
            "diagnostics.conservation_tol" => d.conservation_tol = parse_num(v)?,
            "diagnostics.ladder_tol" => d.ladder_tol = parse_num(v)?,
            "output.dir" => self.output.dir = PathBuf::from(v),
            "output.formats" => self.output.formats = parse_formats(v)?,
            "seed" => self.seed = parse_num(v)?,
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.picard.clone()
            .with_dt(self.time.dt)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return bad(format!("grid.L = {} must be positive", self.grid.length));
        }
        if self.grid.n < 4 {
            return bad(format!("grid.n = {} must be at least 4", self.grid.n));
        }
        if !(self.time.t_end >= 0.0) || !self.time.t_end.is_finite() {
            return bad(format!("time.t_end = {} must be nonnegative", self.time.t_end));
        }
        if self.time.sample_every == 0 {
            return bad("time.sample_every must be at least 1".into());
        }
        if !(self.scenario.width > 0.0) {
            return bad(format!("scenario.width = {} must be positive", self.scenario.width));
        }
        let d = &self.diagnostics;
        if !(d.ladder_l_factor > 0.0) || d.ladder_k < 2 {
            return bad("ladder needs ladder_L_factor > 0 and ladder_K >= 2".into());
        }
        if !(d.m_weight > 0.0) {
            return bad(format!("diagnostics.M_weight = {} must be positive", d.m_weight));
        }
        Ok(())
    }

    pub fn step_config(&self) -> StepConfig {
        self.picard.clone().with_dt(self.time.dt)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// Resolved `(key, value)` pairs in [`KEYS`] order. Floats use the
    /// shortest representation that reads back to the same bits.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let d = &self.diagnostics;
        let f = |x: f64| format!("{x:?}");
        let formats = self
            .output
            .formats
            .iter()
            .map(|f| match f {
                Format::Csv => "csv",
                Format::Json => "json",
            })
            .collect::<Vec<_>>()
            .join(",");
        let values = vec![
            f(p.r),
            f(p.gamma),
            f(p.tau),
            f(p.mu),
            f(p.kappa),
            self.grid.n.to_string(),
            f(self.grid.length),
            bc_str(self.grid.bc).to_string(),
            match self.grid.face_mean {
                FaceMean::Harmonic => "harmonic",
                FaceMean::Arithmetic => "arithmetic",
            }
            .to_string(),
            self.scenario.name.as_str().to_string(),
            f(self.scenario.amplitude),
            f(self.scenario.width),
            f(self.scenario.center),
            f(self.scenario.theta_dip),
            f(self.scenario.v_dip),
            f(self.time.t_end),
            f(self.time.dt),
            self.time.sample_every.to_string(),
            f(self.picard.picard_tol),
            self.picard.picard_max.to_string(),
            f(self.picard.dt_min),
            f(self.picard.positivity_floor),
            self.picard
                .sweeps
                .map_or_else(|| "auto".to_string(), |s| s.to_string()),
            match self.picard.source {
                SourceForm::EnergyConsistent => "energy_consistent",
                SourceForm::Frozen => "frozen",
            }
            .to_string(),
            f(d.ladder_l_factor),
            d.ladder_k.to_string(),
            f(d.theta_tol),
            f(d.m_weight),
            f(d.balance_tol),
            f(d.conservation_tol),
            f(d.ladder_tol),
            self.output.dir.display().to_string(),
            formats,
            self.seed.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
