//! Finite scenario spaces and random variables represented as per-scenario
//! value arrays.
//!
//! A [`ScenarioSpace`] is a finite sample space with unique labels and an
//! optional probability vector. A [`ScenarioVector`] holds one value per
//! scenario and carries the id of the space it lives on; operations that
//! combine vectors refuse to mix spaces.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::io::Read;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterStream;

/// Tolerance on `|sum(p) - 1|` for probability vectors.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

const GBM_CHUNK: usize = 1 << 16;

/// Identity of a scenario space, derived from its labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceId(u64);

impl SpaceId {
    fn from_labels(labels: &[String]) -> Self {
        let mut h = DefaultHasher::new();
        labels.len().hash(&mut h);
        labels.hash(&mut h);
        SpaceId(h.finish())
    }
}

/// Weights of a probability measure on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    space: SpaceId,
    weights: Vec<f64>,
}

impl ProbabilityVector {
    fn validated(space: SpaceId, weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::Probability(format!(
                "weight {w} at scenario {i} is negative or not finite"
            )));
        }
        let total = compensated_sum(&weights);
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::Probability(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { space, weights })
    }

    pub(crate) fn on_space(space: SpaceId, weights: Vec<f64>) -> Result<Self> {
        Self::validated(space, weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Point mass on scenario `index`.
    pub fn dirac(space: &ScenarioSpace, index: usize) -> Result<Self> {
        let mut w = vec![0.0; space.len()];
        *w.get_mut(index)
            .ok_or_else(|| Error::InvalidParams(format!("scenario {index} out of range")))? = 1.0;
        Self::validated(space.id(), w)
    }
}

/// Neumaier summation; keeps the normalisation check meaningful for large spaces.
fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for &x in xs {
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

/// A finite sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpace {
    id: SpaceId,
    labels: Vec<String>,
    probability: Option<ProbabilityVector>,
}

impl ScenarioSpace {
    pub fn new(labels: Vec<String>, probabilities: Option<Vec<f64>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParams(
                "a scenario space needs at least one scenario".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidParams(format!(
                "duplicate scenario label {dup:?}"
            )));
        }
        let id = SpaceId::from_labels(&labels);
        let probability = match probabilities {
            Some(p) => {
                if p.len() != labels.len() {
                    return Err(Error::Probability(format!(
                        "{} weights for {} scenarios",
                        p.len(),
                        labels.len()
                    )));
                }
                Some(ProbabilityVector::validated(id, p)?)
            }
            None => None,
        };
        Ok(Self {
            id,
            labels,
            probability,
        })
    }

    /// `n` scenarios labelled `w1..wn`, without a probability.
    pub fn unweighted(n: usize) -> Result<Self> {
        Self::new(default_labels(n), None)
    }

    /// `n` scenarios labelled `w1..wn` with the uniform probability.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(default_labels(n), Some(vec![1.0 / n as f64; n]))
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probability(&self) -> Option<&ProbabilityVector> {
        self.probability.as_ref()
    }

    /// Wraps per-scenario values as a random variable on this space.
    pub fn vector(&self, values: Vec<f64>) -> Result<ScenarioVector> {
        if values.len() != self.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} values for a space of {} scenarios",
                values.len(),
                self.len()
            )));
        }
        ScenarioVector::checked(self.id, values)
    }

    pub fn constant(&self, c: f64) -> Result<ScenarioVector> {
        self.vector(vec![c; self.len()])
    }

    /// Validates `weights` as a probability vector on this space.
    pub fn probability_vector(&self, weights: Vec<f64>) -> Result<ProbabilityVector> {
        if weights.len() != self.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} weights for a space of {} scenarios",
                weights.len(),
                self.len()
            )));
        }
        ProbabilityVector::validated(self.id, weights)
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("w{i}")).collect()
}

/// A bounded random variable on a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVector {
    space: SpaceId,
    values: Vec<f64>,
}

impl ScenarioVector {
    fn checked(space: SpaceId, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(format!(
                "value {} at scenario {i}",
                values[i]
            )));
        }
        Ok(Self { space, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every scenario value. Fails if a result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::checked(self.space, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Combines two vectors scenario by scenario.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_space(other)?;
        Self::checked(
            self.space,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    /// `self + m` in every scenario.
    pub fn shifted(&self, m: f64) -> Result<Self> {
        self.map(|v| v + m)
    }

    /// `c * self` in every scenario.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn negated(&self) -> Self {
        Self {
            space: self.space,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub(crate) fn ensure_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space || self.len() != other.len() {
            return Err(Error::SpaceMismatch(
                "random variables live on different scenario spaces".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn from_raw(space: SpaceId, values: Vec<f64>) -> Result<Self> {
        Self::checked(space, values)
    }
}

/// `E_Q[Z] = sum_i q_i Z_i`.
pub fn expectation(q: &ProbabilityVector, z: &ScenarioVector) -> Result<f64> {
    if q.space != z.space || q.len() != z.len() {
        return Err(Error::SpaceMismatch(
            "probability vector and random variable live on different spaces".into(),
        ));
    }
    Ok(q.weights.iter().zip(&z.values).map(|(p, v)| p * v).sum())
}

/// `max_w |Z(w)|`.
pub fn sup_norm(z: &ScenarioVector) -> f64 {
    z.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Parameters of a geometric Brownian motion observed at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    /// Initial price.
    pub x0: f64,
    /// Drift per unit time.
    pub mu: f64,
    /// Volatility per square-root time.
    pub sigma: f64,
    /// Horizon.
    #[serde(alias = "T")]
    pub horizon: f64,
}

impl GbmParams {
    pub fn new(x0: f64, mu: f64, sigma: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            x0,
            mu,
            sigma,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.mu, self.sigma, self.horizon]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("GBM parameters must be finite".into()));
        }
        if self.x0 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "x0 = {} must be > 0",
                self.x0
            )));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "sigma = {} must be > 0",
                self.sigma
            )));
        }
        if self.horizon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "horizon = {} must be > 0",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Mean of the log price at the horizon.
    pub fn log_mean(&self) -> f64 {
        self.x0.ln() + (self.mu - 0.5 * self.sigma * self.sigma) * self.horizon
    }

    /// Standard deviation of the log price at the horizon.
    pub fn log_sd(&self) -> f64 {
        self.sigma * self.horizon.sqrt()
    }

    /// Price at the horizon for a standard normal shock `w`.
    #[inline]
    pub fn price(&self, w: f64) -> f64 {
        (self.log_mean() + self.log_sd() * w).exp()
    }
}

/// Draws `n` unaffected horizon prices from a GBM on a uniformly weighted space.
///
/// The normals come from a counter-based stream, so the output depends only on
/// `(params, n, seed)` and not on the thread count.
pub fn sample_gbm(
    params: &GbmParams,
    n: usize,
    seed: u64,
) -> Result<(ScenarioSpace, ScenarioVector)> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams("n_scenarios must be >= 1".into()));
    }
    let shocks = standard_normals(seed, 0, n);
    let values: Vec<f64> = shocks.iter().map(|&w| params.price(w)).collect();
    let space = ScenarioSpace::uniform(n)?;
    let x = space.vector(values)?;
    Ok((space, x))
}

/// `n` standard normals from `(seed, stream)`, generated in fixed-size chunks.
pub fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let source = CounterStream::new(seed).with_stream(stream);
    let mut out = vec![0.0; n];
    out.par_chunks_mut(GBM_CHUNK)
        .enumerate()
        .for_each(|(k, chunk)| source.fill_normal((k * GBM_CHUNK) as u64, chunk));
    out
}

/// File formats accepted by [`load_scenarios`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioFormat {
    Csv,
    Json,
}

impl ScenarioFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

/// A scenario space together with named asset price vectors on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub space: ScenarioSpace,
    pub assets: IndexMap<String, ScenarioVector>,
}

impl ScenarioData {
    /// Builds a space from labels and optional probabilities, with one price column per asset.
    pub fn from_columns(
        labels: Vec<String>,
        probabilities: Option<Vec<f64>>,
        columns: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        build_data(labels, probabilities, columns)
    }

    pub fn asset(&self, name: &str) -> Result<&ScenarioVector> {
        self.assets
            .get(name)
            .ok_or_else(|| Error::InvalidParams(format!("unknown asset {name:?}")))
    }
}

/// Reads a scenario file.
pub fn load_scenarios(path: &Path, format: ScenarioFormat) -> Result<ScenarioData> {
    let mut text = String::new();
    std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .read_to_string(&mut text)?;
    match format {
        ScenarioFormat::Csv => parse_scenarios_csv(&text),
        ScenarioFormat::Json => parse_scenarios_json(&text),
    }
}

/// Parses `scenario,prob,<asset>...` CSV; the `prob` column is optional.
pub fn parse_scenarios_csv(text: &str) -> Result<ScenarioData> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    if header.get(0) != Some("scenario") {
        return Err(Error::Parse("first column must be `scenario`".into()));
    }
    let has_prob = header.get(1) == Some("prob");
    let first_asset = if has_prob { 2 } else { 1 };
    let names: Vec<String> = header.iter().skip(first_asset).map(str::to_owned).collect();
    if names.is_empty() {
        return Err(Error::Parse("no asset columns".into()));
    }

    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {}",
                row + 1,
                record.len(),
                header.len()
            )));
        }
        let num = |col: usize| -> Result<f64> {
            let s = &record[col];
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: {s:?} is not a number", row + 1)))
        };
        labels.push(record[0].to_owned());
        if has_prob {
            probs.push(num(1)?);
        }
        for (k, col) in columns.iter_mut().enumerate() {
            col.push(num(first_asset + k)?);
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse("no scenario rows".into()));
    }
    build_data(
        labels,
        has_prob.then_some(probs),
        names.into_iter().zip(columns),
    )
}

#[derive(Deserialize)]
struct JsonScenarios {
    labels: Vec<String>,
    #[serde(default)]
    probabilities: Option<Vec<f64>>,
    assets: IndexMap<String, Vec<f64>>,
}

/// Parses `{"labels":[..],"probabilities":[..],"assets":{"name":[..]}}`.
pub fn parse_scenarios_json(text: &str) -> Result<ScenarioData> {
    let doc: JsonScenarios = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    build_data(doc.labels, doc.probabilities, doc.assets)
}

fn build_data(
    labels: Vec<String>,
    probabilities: Option<Vec<f64>>,
    columns: impl IntoIterator<Item = (String, Vec<f64>)>,
) -> Result<ScenarioData> {
    let space = ScenarioSpace::new(labels, probabilities)?;
    let mut assets = IndexMap::new();
    for (name, values) in columns {
        let v = space.vector(values).map_err(|e| match e {
            Error::SpaceMismatch(m) => Error::Parse(format!("asset {name:?}: {m}")),
            other => other,
        })?;
        if assets.insert(name.clone(), v).is_some() {
            return Err(Error::Parse(format!("duplicate asset column {name:?}")));
        }
    }
    Ok(ScenarioData { space, assets })
}
