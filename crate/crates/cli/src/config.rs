//! Run configuration: JSON file, command-line overrides, validation.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checks::{check_by_id, Suite};
use crate::CliError;

pub const MIN_GRID: usize = 3;
pub const DEFAULT_GRID: usize = 5;
/// Extra random points drawn when a seed is given without a count.
pub const DEFAULT_RANDOM_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: Source,
    #[serde(default)]
    pub grid: GridSpec,
    /// Suite names; all suites when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suites: Option<Vec<String>>,
    /// Overrides keyed by suite name or check id. Check ids win.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Either a catalog example or a user chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
}

/// Profile curve of a rotation example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    /// The shipped profile of the family.
    Default,
    /// The non-isoparametric `+−` profile.
    Wave,
    /// `+−` profile with constant `g`.
    ConstantG(f64),
    /// Randomized profile of the family from a seed.
    Random(u64),
}

/// Coordinate functions `a_0 … a_{n+1}` as expressions in the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub params: Vec<String>,
    pub coords: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    /// Sampling box, one `[lo, hi]` per parameter.
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub orientation: OrientationChoice,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationChoice {
    #[default]
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    /// Replaces the default sampling box.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
}

fn default_points() -> usize {
    DEFAULT_GRID
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: DEFAULT_GRID,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_fields: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Command-line values layered over a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub example: Option<String>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub grid: Option<usize>,
    pub bounds: Vec<String>,
    pub suites: Option<String>,
    pub tolerances: Vec<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub report: Option<PathBuf>,
    pub format: Option<Format>,
    pub dump_fields: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Apply overrides to `base`, or build from overrides alone.
    pub fn resolve(base: Option<RunConfig>, o: Overrides) -> Result<Self, CliError> {
        let mut cfg = match base {
            Some(c) => c,
            None => {
                let n = o.n.ok_or_else(|| {
                    CliError::Config("missing field `n` (pass --n or a config file)".into())
                })?;
                if o.example.is_none() {
                    return Err(CliError::Config(
                        "no source: pass --example or a config file with a chart".into(),
                    ));
                }
                RunConfig {
                    source: Source {
                        example: None,
                        n,
                        alpha: None,
                        k: None,
                        profile: None,
                        chart: None,
                    },
                    grid: GridSpec::default(),
                    suites: None,
                    tolerances: BTreeMap::new(),
                    seed: None,
                    random_points: None,
                    jobs: None,
                    output: OutputSpec::default(),
                }
            }
        };
        if let Some(e) = o.example {
            cfg.source.example = Some(e);
            cfg.source.chart = None;
        }
        if let Some(a) = o.alpha {
            cfg.source.alpha = Some(a);
        }
        if let Some(k) = o.k {
            cfg.source.k = Some(k);
        }
        if let Some(n) = o.n {
            cfg.source.n = n;
        }
        if let Some(g) = o.grid {
            cfg.grid.points = g;
        }
        if !o.bounds.is_empty() {
            cfg.grid.bounds = Some(
                o.bounds
                    .iter()
                    .map(|b| parse_interval(b))
                    .collect::<Result<_, _>>()?,
            );
        }
        if let Some(s) = o.suites {
            cfg.suites = Some(
                s.split(',')
                    .map(|x| x.trim().to_string())
                    .filter(|x| !x.is_empty())
                    .collect(),
            );
        }
        for t in &o.tolerances {
            let (key, val) = t.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "tolerance `{t}` is not of the form <suite>=<value>"
                ))
            })?;
            let val: f64 = val.trim().parse().map_err(|_| {
                CliError::Config(format!("tolerance `{t}` has a non-numeric value"))
            })?;
            cfg.tolerances.insert(key.trim().to_string(), val);
        }
        if o.seed.is_some() {
            cfg.seed = o.seed;
        }
        if o.jobs.is_some() {
            cfg.jobs = o.jobs;
        }
        if o.report.is_some() {
            cfg.output.report = o.report;
        }
        if let Some(f) = o.format {
            cfg.output.format = f;
        }
        if o.dump_fields.is_some() {
            cfg.output.dump_fields = o.dump_fields;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.source;
        if s.n < 1 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        match (&s.example, &s.chart) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either `example` or `chart`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config("source needs `example` or `chart`".into()))
            }
            (Some(e), None) => {
                qgv_core::catalog::FamilyId::from_str(e)
                    .map_err(|err| CliError::Config(err.to_string()))?;
            }
            (None, Some(c)) => {
                if c.params.len() != s.n {
                    return Err(CliError::Config(format!(
                        "chart has {} parameters, expected n = {}",
                        c.params.len(),
                        s.n
                    )));
                }
                if c.coords.len() != s.n + 2 {
                    return Err(CliError::Config(format!(
                        "chart has {} coordinates, expected n + 2 = {}",
                        c.coords.len(),
                        s.n + 2
                    )));
                }
                check_box(&c.domain, s.n, "chart domain")?;
            }
        }
        if self.grid.points < MIN_GRID {
            return Err(CliError::Config(format!(
                "grid needs at least {MIN_GRID} points per axis, got {}",
                self.grid.points
            )));
        }
        if let Some(b) = &self.grid.bounds {
            check_box(b, s.n, "grid box")?;
        }
        self.suites()?;
        for (key, val) in &self.tolerances {
            if !(*val > 0.0) || !val.is_finite() {
                return Err(CliError::Config(format!(
                    "tolerance for `{key}` must be positive, got {val}"
                )));
            }
            if Suite::from_str(key).is_err() && check_by_id(key).is_none() {
                return Err(CliError::Config(format!(
                    "tolerance key `{key}` is neither a suite nor a check id"
                )));
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Selected suites in registry order.
    pub fn suites(&self) -> Result<Vec<Suite>, CliError> {
        match &self.suites {
            None => Ok(Suite::ALL.to_vec()),
            Some(names) => {
                let mut out = Vec::new();
                for name in names {
                    let s = Suite::from_str(name)?;
                    if !out.contains(&s) {
                        out.push(s);
                    }
                }
                if out.is_empty() {
                    return Err(CliError::Config("no suites selected".into()));
                }
                out.sort();
                Ok(out)
            }
        }
    }

    /// The α a catalog example runs with.
    pub fn alpha(&self) -> f64 {
        let product = self.source.example.as_deref() == Some("product");
        self.source
            .alpha
            .unwrap_or(if product { FRAC_PI_4 } else { FRAC_PI_3 })
    }
}

fn check_box(b: &[[f64; 2]], n: usize, what: &str) -> Result<(), CliError> {
    if b.len() != n {
        return Err(CliError::Config(format!(
            "{what} has {} intervals, expected {n}",
            b.len()
        )));
    }
    for [lo, hi] in b {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CliError::Config(format!(
                "{what} interval [{lo}, {hi}] is empty"
            )));
        }
    }
    Ok(())
}

fn parse_interval(s: &str) -> Result<[f64; 2], CliError> {
    let bad = || CliError::Config(format!("box interval `{s}` is not of the form a,b"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok([
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ])
}
