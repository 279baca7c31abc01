//! Flat `key=value` experiment files.
//!
//! ```text
//! # two-arm and four-arm atoms
//! model=limited_coalescent
//! mu.2=0.5
//! mu.4=0.5
//! n=100000
//! t_end=inf
//! replicas=20
//! seed=7
//! truncation=10,40
//! output=runs/limited.csv,csv
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::branching::ArmMeasure;
use crate::stochsim::{default_threshold, DegreeSampling};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    MonoCoalescent,
    LimitedCoalescent,
    ThresholdCoalescent,
    Configuration,
    OdeMono,
    OdeLimited,
    ClosedForms,
}

impl Model {
    const NAMES: [(&'static str, Model); 7] = [
        ("mono_coalescent", Model::MonoCoalescent),
        ("limited_coalescent", Model::LimitedCoalescent),
        ("threshold_coalescent", Model::ThresholdCoalescent),
        ("configuration", Model::Configuration),
        ("ode_mono", Model::OdeMono),
        ("ode_limited", Model::OdeLimited),
        ("closed_forms", Model::ClosedForms),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, m)| *m == self).expect("listed").0
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Model::MonoCoalescent
                | Model::LimitedCoalescent
                | Model::ThresholdCoalescent
                | Model::Configuration
        )
    }
}

/// Kernel evaluated by the `closed_forms` model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// Arm-multiplicative kernel, started from `mu`.
    #[default]
    Limited,
    /// Multiplicative kernel, started from unit masses.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alpha {
    /// `ceil(n^(2/3))`.
    #[default]
    Auto,
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    /// `(a, weight)` in file order. Mass-indexed initial data for `ode_mono`.
    pub mu: Vec<(u32, f64)>,
    pub n: u64,
    /// May be infinite.
    pub t_end: f64,
    pub alpha: Alpha,
    pub replicas: u32,
    pub seed: u64,
    /// Times at which tables are written; empty means `t_end` only.
    pub sample_times: Vec<f64>,
    /// `(A_max, M_max)`.
    pub truncation: (u32, u32),
    pub output: Option<Output>,
    pub kernel: Kernel,
    pub degrees: DegreeSampling,
}

impl ExperimentConfig {
    /// Defaults for every optional key.
    pub fn new(model: Model, t_end: f64) -> Self {
        Self {
            model,
            mu: Vec::new(),
            n: 1,
            t_end,
            alpha: Alpha::Auto,
            replicas: 1,
            seed: 0,
            sample_times: Vec::new(),
            truncation: (20, 60),
            output: None,
            kernel: Kernel::Limited,
            degrees: DegreeSampling::Iid,
        }
    }

    pub fn arm_measure(&self) -> Result<ArmMeasure, HarnessError> {
        if self.mu.is_empty() {
            return Err(HarnessError::Missing { key: "mu".into() });
        }
        ArmMeasure::new(self.mu.iter().copied()).map_err(|e| HarnessError::Invalid {
            key: "mu".into(),
            message: e.to_string(),
        })
    }

    pub fn threshold(&self) -> u64 {
        match self.alpha {
            Alpha::Auto => default_threshold(self.n),
            Alpha::Fixed(a) => a,
        }
    }

    /// Output times in increasing order.
    pub fn times(&self) -> Vec<f64> {
        if self.sample_times.is_empty() {
            return vec![self.t_end];
        }
        let mut times = self.sample_times.clone();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |key: &str, message: String| {
            Err(HarnessError::Invalid {
                key: key.into(),
                message,
            })
        };
        if self.replicas == 0 {
            return invalid("replicas", "need at least one replica".into());
        }
        if self.truncation.0 == 0 || self.truncation.1 == 0 {
            return invalid("truncation", "bounds must be >= 1".into());
        }
        if self.n == 0 {
            return invalid("n", "need at least one atom".into());
        }
        if let Some(t) = self.sample_times.iter().find(|t| **t > self.t_end) {
            return invalid("sample_times", format!("{t} lies beyond t_end = {}", self.t_end));
        }
        if let Alpha::Fixed(0) = self.alpha {
            return invalid("alpha", "threshold must be >= 1".into());
        }
        Ok(())
    }
}

fn fmt_real(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        let mut buf = ryu::Buffer::new();
        buf.format(x).to_string()
    }
}

/// Writes every key, so that parsing the text gives back the same config.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model={}", self.model.name())?;
        for (a, w) in &self.mu {
            writeln!(f, "mu.{a}={}", fmt_real(*w))?;
        }
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "t_end={}", fmt_real(self.t_end))?;
        match self.alpha {
            Alpha::Auto => writeln!(f, "alpha=auto")?,
            Alpha::Fixed(a) => writeln!(f, "alpha={a}")?,
        }
        writeln!(f, "replicas={}", self.replicas)?;
        writeln!(f, "seed={}", self.seed)?;
        let times: Vec<String> = self.sample_times.iter().map(|t| fmt_real(*t)).collect();
        writeln!(f, "sample_times={}", times.join(","))?;
        writeln!(f, "truncation={},{}", self.truncation.0, self.truncation.1)?;
        if let Some(out) = &self.output {
            writeln!(f, "output={},{}", out.path.display(), out.format)?;
        }
        let kernel = match self.kernel {
            Kernel::Limited => "limited",
            Kernel::Multiplicative => "multiplicative",
        };
        writeln!(f, "kernel={kernel}")?;
        let degrees = match self.degrees {
            DegreeSampling::Iid => "iid",
            DegreeSampling::Quota => "quota",
        };
        writeln!(f, "degrees={degrees}")
    }
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn error(&self, message: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            line: self.line,
            key: self.key.into(),
            message: message.into(),
        }
    }

    fn parse<T: FromStr>(&self, what: &str) -> Result<T, HarnessError> {
        self.value
            .parse()
            .map_err(|_| self.error(format!("expected {what}, got `{}`", self.value)))
    }

    /// Nonnegative real, `inf` allowed when `infinite` is set.
    fn real(&self, infinite: bool) -> Result<f64, HarnessError> {
        real(self.value, infinite).map_err(|m| self.error(m))
    }
}

fn real(text: &str, infinite: bool) -> Result<f64, String> {
    let x = if text == "inf" && infinite {
        f64::INFINITY
    } else {
        let x: f64 = text
            .parse()
            .map_err(|_| format!("expected a number, got `{text}`"))?;
        if !x.is_finite() {
            return Err(format!("expected a finite number, got `{text}`"));
        }
        x
    };
    if !(x >= 0.0) {
        return Err(format!("must be >= 0, got {text}"));
    }
    Ok(x)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Parse {
                line: i + 1,
                key: line.into(),
                message: "expected key=value".into(),
            });
        };
        entries.push(Entry {
            line: i + 1,
            key: key.trim(),
            value: value.trim(),
        });
    }

    let mut seen = std::collections::HashSet::new();
    for e in &entries {
        if !seen.insert(e.key) {
            return Err(e.error("duplicate key"));
        }
    }
    let find = |key: &str| entries.iter().find(|e| e.key == key);
    let required = |key: &str| find(key).ok_or_else(|| HarnessError::Missing { key: key.into() });

    let model_entry = required("model")?;
    let model = Model::NAMES
        .iter()
        .find(|(name, _)| *name == model_entry.value)
        .map(|(_, m)| *m)
        .ok_or_else(|| model_entry.error(format!("unknown model `{}`", model_entry.value)))?;
    let mut config = ExperimentConfig::new(model, required("t_end")?.real(true)?);

    for e in &entries {
        match e.key {
            "model" | "t_end" => {}
            "n" => config.n = e.parse("a positive integer")?,
            "alpha" => {
                config.alpha = if e.value == "auto" {
                    Alpha::Auto
                } else {
                    Alpha::Fixed(e.parse("`auto` or an integer")?)
                }
            }
            "replicas" => config.replicas = e.parse("a positive integer")?,
            "seed" => config.seed = e.parse("a 64-bit unsigned integer")?,
            "sample_times" => {
                config.sample_times = e
                    .value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| real(s, true))
                    .collect::<Result<_, _>>()
                    .map_err(|m| e.error(m))?
            }
            "truncation" => {
                let (a, m) = e
                    .value
                    .split_once(',')
                    .ok_or_else(|| e.error("expected A_max,M_max"))?;
                let bound = |s: &str| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| e.error(format!("expected A_max,M_max, got `{}`", e.value)))
                };
                config.truncation = (bound(a)?, bound(m)?);
            }
            "output" => {
                let (path, format) = match e.value.rsplit_once(',') {
                    Some((p, f)) => (p.trim(), f.trim().parse().map_err(|m: String| e.error(m))?),
                    None => (e.value, Format::Csv),
                };
                if path.is_empty() {
                    return Err(e.error("empty output path"));
                }
                config.output = Some(Output {
                    path: path.into(),
                    format,
                });
            }
            "kernel" => {
                config.kernel = match e.value {
                    "limited" => Kernel::Limited,
                    "multiplicative" => Kernel::Multiplicative,
                    other => return Err(e.error(format!("unknown kernel `{other}`"))),
                }
            }
            "degrees" => {
                config.degrees = match e.value {
                    "iid" => DegreeSampling::Iid,
                    "quota" => DegreeSampling::Quota,
                    other => return Err(e.error(format!("unknown degree sampling `{other}`"))),
                }
            }
            key if key.starts_with("mu.") => {
                let a: u32 = key[3..]
                    .parse()
                    .map_err(|_| e.error("expected mu.<arms> with integer arms"))?;
                config.mu.push((a, e.real(false)?));
            }
            _ => return Err(e.error("unknown key")),
        }
    }
    config.validate()?;
    Ok(config)
}
