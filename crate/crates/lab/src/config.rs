use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use symflow::measures::{MarkovMeasure, MeasureSpec};
use symflow::suspension::{FlowSpec, Roof, SuspensionFlow};
use symflow::symbolic::{Subshift, SubshiftSpec, Symbol, Word};
use symflow::QuadraticReal;

use crate::Failure;

/// Experiment description read from `--config`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must name the invoked subcommand when present.
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    /// Constant roof placed over a subshift system, e.g. `"√2"`.
    #[serde(default)]
    pub roof: Option<String>,
    #[serde(default)]
    pub measure: Option<MeasureChoice>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    /// `golden-mean`, `full-shift-<k>` or `silver-sturmian`.
    Named(String),
    Flow { flow: FlowSpec },
    Subshift { subshift: SubshiftSpec },
    /// JSON file holding a flow or a subshift description.
    File { file: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MeasureChoice {
    /// `parry` (SFT systems) or `uniform`.
    Named(String),
    Spec(MeasureSpec),
    File { file: PathBuf },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub p: Option<String>,
    pub q: Option<String>,
    pub epsilon: Option<String>,
    pub delta: Option<String>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub n_values: Option<Vec<usize>>,
    pub horizon: Option<usize>,
    pub count: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub depth: Option<usize>,
    pub max_word_len: Option<usize>,
    pub max_period: Option<usize>,
    pub separation: Option<usize>,
    pub marker_depth: Option<usize>,
    pub window: Option<usize>,
    pub words: Option<Vec<String>>,
    pub a_symbols: Option<Vec<Symbol>>,
    pub labels: Option<Vec<Option<u8>>>,
}

pub enum System {
    Subshift(Subshift),
    Flow(SuspensionFlow),
}

/// A parsed config together with everything it references.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub dir: PathBuf,
    hasher: Sha256,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("config is not JSON: {e}")))?;
        // serde_json maps are ordered, so this rendering is canonical.
        let mut hasher = Sha256::new();
        hasher.update(value.to_string().as_bytes());
        let config = serde_json::from_value(value).map_err(|e| Failure::Config(format!("bad config: {e}")))?;
        Ok(Self {
            config,
            dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            hasher,
        })
    }

    /// Hex SHA-256 of the canonical config, the seed, the subcommand and
    /// the bytes of every referenced file read so far.
    pub fn hash(&self, experiment: &str, seed: u64) -> String {
        let mut h = self.hasher.clone();
        h.update(format!("\n{experiment}\n{seed}").as_bytes());
        hex::encode(h.finalize())
    }

    fn file(&mut self, path: &Path) -> Result<String, Failure> {
        let full = self.dir.join(path);
        let text = fs::read_to_string(&full)
            .map_err(|e| Failure::Config(format!("referenced file {} unreadable: {e}", full.display())))?;
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    pub fn system(&mut self) -> Result<System, Failure> {
        let spec = self
            .config
            .system
            .take()
            .ok_or_else(|| Failure::Config("missing field `system`".into()))?;
        let system = match spec {
            SystemSpec::Named(name) => System::Subshift(named_subshift(&name)?),
            SystemSpec::Flow { flow } => System::Flow(SuspensionFlow::from_spec(&flow)?),
            SystemSpec::Subshift { subshift } => System::Subshift(Subshift::from_spec(&subshift)?),
            SystemSpec::File { file } => {
                let text = self.file(&file)?;
                if let Ok(flow) = serde_json::from_str::<FlowSpec>(&text) {
                    System::Flow(SuspensionFlow::from_spec(&flow)?)
                } else {
                    let spec: SubshiftSpec = serde_json::from_str(&text)
                        .map_err(|e| Failure::Config(format!("{} is neither a flow nor a subshift: {e}", file.display())))?;
                    System::Subshift(Subshift::from_spec(&spec)?)
                }
            }
        };
        match (system, &self.config.roof) {
            (System::Subshift(base), Some(r)) => {
                let roof = Roof::constant(base.alphabet_size(), quadratic("roof", r)?)?;
                Ok(System::Flow(SuspensionFlow::new(base, roof)?))
            }
            (System::Flow(_), Some(_)) => Err(Failure::Config("`roof` applies only to subshift systems".into())),
            (s, None) => Ok(s),
        }
    }

    pub fn subshift(&mut self) -> Result<Subshift, Failure> {
        Ok(match self.system()? {
            System::Subshift(s) => s,
            System::Flow(f) => f.base().clone(),
        })
    }

    pub fn flow(&mut self) -> Result<SuspensionFlow, Failure> {
        match self.system()? {
            System::Flow(f) => Ok(f),
            System::Subshift(_) => Err(Failure::Config("this experiment needs a flow: give `roof` or a flow system".into())),
        }
    }

    pub fn measure(&mut self, base: Option<&Subshift>) -> Result<MarkovMeasure, Failure> {
        let choice = self
            .config
            .measure
            .take()
            .ok_or_else(|| Failure::Config("missing field `measure`".into()))?;
        Ok(match choice {
            MeasureChoice::Named(name) => match (name.as_str(), base) {
                ("uniform", Some(b)) => MarkovMeasure::uniform_bernoulli(b.alphabet_size()),
                ("uniform", None) => MarkovMeasure::uniform_bernoulli(2),
                ("parry", Some(Subshift::Sft(sft))) => MarkovMeasure::parry(sft)?,
                ("parry", _) => return Err(Failure::Config("the Parry measure needs an SFT system".into())),
                _ => return Err(Failure::Config(format!("unknown measure {name:?}"))),
            },
            MeasureChoice::Spec(spec) => MarkovMeasure::from_spec(&spec)?,
            MeasureChoice::File { file } => {
                let text = self.file(&file)?;
                let spec: MeasureSpec =
                    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("bad measure file: {e}")))?;
                MarkovMeasure::from_spec(&spec)?
            }
        })
    }
}

fn named_subshift(name: &str) -> Result<Subshift, Failure> {
    match name {
        "golden-mean" => Ok(Subshift::golden_mean()),
        "silver-sturmian" => Ok(Subshift::silver_sturmian()),
        _ => name
            .strip_prefix("full-shift-")
            .and_then(|k| k.parse().ok())
            .filter(|&k| (1..=36).contains(&k))
            .map(Subshift::full_shift)
            .ok_or_else(|| Failure::Config(format!("unknown system {name:?}"))),
    }
}

pub fn quadratic(field: &str, s: &str) -> Result<QuadraticReal, Failure> {
    s.parse()
        .map_err(|e| Failure::Config(format!("parameter `{field}`: {e}")))
}

pub fn required<T: Clone>(field: &str, v: &Option<T>) -> Result<T, Failure> {
    v.clone()
        .ok_or_else(|| Failure::Config(format!("missing parameter `{field}`")))
}

pub fn words(field: &str, v: &[String]) -> Result<Vec<Word>, Failure> {
    v.iter()
        .map(|w| w.parse().map_err(|e| Failure::Config(format!("parameter `{field}`: {e}"))))
        .collect()
}
