//! The JSON run configuration and `--set` overrides.

use std::path::{Path, PathBuf};

use illiq_core::duality::linspace;
use illiq_core::illiq::{Asset, Risk};
use illiq_core::impact::SupplySpec;
use illiq_core::scenario::{load_scenarios, sample_gbm, ScenarioData, ScenarioFormat};
use illiq_core::{GbmParams, ImpactSpec, Quadrature, RiskFunctional, SupplyCurve};
use serde::Deserialize;
use serde_json::Value;

use crate::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenarios: ScenarioSource,
    /// Asset column used by single-asset commands; defaults to the only column.
    #[serde(default)]
    pub asset: Option<String>,
    #[serde(default)]
    pub impact: Option<ImpactSpec>,
    #[serde(default)]
    pub x0: Option<SupplySpec>,
    #[serde(default)]
    pub rho: Option<RiskFunctional>,
    #[serde(default)]
    pub y: Option<Grid>,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub axioms: AxiomsConfig,
    #[serde(default)]
    pub dual: Option<DualConfig>,
    #[serde(default)]
    pub portfolio: Option<PortfolioConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSource {
    Inline {
        #[serde(default)]
        labels: Option<Vec<String>>,
        #[serde(default)]
        probabilities: Option<Vec<f64>>,
        /// Asset name and price per scenario, in column order.
        assets: Vec<InlineAsset>,
    },
    File {
        path: PathBuf,
        #[serde(default)]
        format: Option<String>,
    },
    Gbm {
        #[serde(default = "default_asset_name")]
        name: String,
        params: GbmParams,
        n: usize,
        seed: u64,
    },
}

fn default_asset_name() -> String {
    "x".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineAsset {
    pub name: String,
    pub values: Vec<f64>,
}

/// Explicit points or `n` evenly spaced points on `[from, to]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range { from: f64, to: f64, n: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Points(p) => p.clone(),
            Grid::Range { from, to, n } => linspace(*from, *to, *n),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomsConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_upper")]
    pub upper: f64,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl Default for AxiomsConfig {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            upper: default_upper(),
            tolerance: None,
        }
    }
}

fn default_trials() -> usize {
    1000
}

fn default_upper() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    #[default]
    Block,
    Split,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualConfig {
    /// Grid for `f`; must contain 0.
    pub grid: Grid,
    #[serde(default)]
    pub exit: Exit,
    /// Positions at which the penalty representation is checked.
    #[serde(default)]
    pub check_y: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Recovery tolerance; the grid error bound when absent.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub assets: Vec<PortfolioAsset>,
    pub y: Vec<f64>,
    #[serde(default)]
    pub gbm: Option<GbmPortfolio>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioAsset {
    pub name: String,
    pub impact: ImpactSpec,
    pub x0: SupplySpec,
}

/// Log-price VaR of correlated GBMs under exponential impact.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmPortfolio {
    pub params: Vec<GbmParams>,
    pub a: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub delta: f64,
    /// Monte Carlo paths; 0 skips the simulation.
    #[serde(default)]
    pub paths: usize,
}

/// Reads the config file, applies `--set` overrides and deserializes.
pub fn load(path: &Path, overrides: &[String]) -> Result<(RunConfig, PathBuf), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| Failure::Config(e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

/// Sets `a.b.0.c=VALUE`; VALUE is parsed as JSON and falls back to a string.
pub fn apply_override(doc: &mut Value, item: &str) -> Result<(), Failure> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("--set {item:?} is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        cur = match cur {
            Value::Array(items) => {
                let i: usize = part.parse().map_err(|_| {
                    Failure::Config(format!("--set {key}: {part:?} is not an array index"))
                })?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| {
                    Failure::Config(format!("--set {key}: index {i} out of range ({len})"))
                })?
            }
            Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
            other => {
                if other.is_null() {
                    *other = Value::Object(Default::default());
                    other
                        .as_object_mut()
                        .expect("just set")
                        .entry(part.to_string())
                        .or_insert(Value::Null)
                } else {
                    return Err(Failure::Config(format!(
                        "--set {key}: cannot descend into a scalar at {part:?}"
                    )));
                }
            }
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    Err(Failure::Config("--set with an empty key".into()))
}

fn config_err(e: illiq_core::Error) -> Failure {
    Failure::Config(e.to_string())
}

/// A fully built single-asset setup.
pub struct Setup {
    pub asset: Asset,
    pub risk: Risk,
}

impl RunConfig {
    pub fn scenarios(&self, base: &Path) -> Result<ScenarioData, Failure> {
        match &self.scenarios {
            ScenarioSource::Inline {
                labels,
                probabilities,
                assets,
            } => {
                let n = assets.first().map_or(0, |a| a.values.len());
                let labels = labels
                    .clone()
                    .unwrap_or_else(|| (1..=n).map(|i| format!("w{i}")).collect());
                ScenarioData::from_columns(
                    labels,
                    probabilities.clone(),
                    assets.iter().map(|a| (a.name.clone(), a.values.clone())),
                )
                .map_err(config_err)
            }
            ScenarioSource::File { path, format } => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let format = match format.as_deref() {
                    Some("csv") => ScenarioFormat::Csv,
                    Some("json") => ScenarioFormat::Json,
                    Some(other) => {
                        return Err(Failure::Config(format!(
                            "scenarios.format {other:?} is not csv or json"
                        )))
                    }
                    None => ScenarioFormat::from_path(&path).ok_or_else(|| {
                        Failure::Config(format!(
                            "cannot infer the format of {}; set scenarios.format",
                            path.display()
                        ))
                    })?,
                };
                load_scenarios(&path, format).map_err(config_err)
            }
            ScenarioSource::Gbm {
                name,
                params,
                n,
                seed,
            } => {
                let (space, x) = sample_gbm(params, *n, *seed).map_err(config_err)?;
                ScenarioData::from_columns(
                    space.labels().to_vec(),
                    Some(space.probability().expect("uniform").weights().to_vec()),
                    [(name.clone(), x.values().to_vec())],
                )
                .map_err(config_err)
            }
        }
    }

    pub fn risk(&self, data: &ScenarioData) -> Result<Risk, Failure> {
        let functional = self
            .rho
            .ok_or_else(|| Failure::Config("missing field `rho`".into()))?;
        Risk::on(functional, &data.space).map_err(config_err)
    }

    pub fn supply(&self) -> Result<SupplyCurve, Failure> {
        self.x0
            .ok_or_else(|| Failure::Config("missing field `x0`".into()))?
            .build()
            .map_err(config_err)
    }

    pub fn grid(&self) -> Result<Vec<f64>, Failure> {
        let y = self
            .y
            .as_ref()
            .ok_or_else(|| Failure::Config("missing field `y`".into()))?
            .points();
        if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
            return Err(Failure::Config(
                "`y` must be a non-empty list of finite numbers".into(),
            ));
        }
        Ok(y)
    }

    pub fn seed(&self) -> Result<u64, Failure> {
        self.seed.ok_or_else(|| {
            Failure::Config("missing field `seed` (required by this command)".into())
        })
    }

    pub fn setup(&self, base: &Path) -> Result<Setup, Failure> {
        let data = self.scenarios(base)?;
        let name = match &self.asset {
            Some(name) => name.clone(),
            None if data.assets.len() == 1 => data.assets.keys().next().expect("one").clone(),
            None => {
                return Err(Failure::Config(
                    "several asset columns; set field `asset`".into(),
                ))
            }
        };
        let x = data.asset(&name).map_err(config_err)?.clone();
        let model = self
            .impact
            .as_ref()
            .ok_or_else(|| Failure::Config("missing field `impact`".into()))?
            .build(&data.space)
            .map_err(config_err)?;
        let asset = Asset::new(name, model, x).map_err(config_err)?;
        let risk = self.risk(&data)?;
        Ok(Setup { asset, risk })
    }
}
