use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::credit::Mechanism;
use crate::error::{Error, Result};

/// Where training and validation examples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Directory with the four standard MNIST IDX files. Validation draws
    /// from the official test split.
    Mnist { dir: PathBuf },
    /// Synthetic blobs in 784 dimensions: `per_class` training examples per
    /// class plus a separately drawn validation set from the same means.
    Blobs { per_class: usize, spread: f64 },
}

/// Which embeddings the oracle mechanism attends over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleInference {
    /// Re-encode the stored observations with the current encoder.
    Recomputed,
    /// Use the embeddings stored at write time.
    Stored,
}

impl fmt::Display for OracleInference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleInference::Recomputed => "recomputed",
            OracleInference::Stored => "stored",
        })
    }
}

impl FromStr for OracleInference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recomputed" => Ok(Self::Recomputed),
            "stored" => Ok(Self::Stored),
            _ => Err(Error::Config(format!("oracle_inference must be recomputed|stored, got `{s}`"))),
        }
    }
}

/// Full description of one experiment (all runs of one mechanism).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mechanism: Mechanism,
    /// Memory capacity K.
    pub capacity: usize,
    pub embed_dim: usize,
    /// Hidden width of the encoder, decoder and synthetic-gradient nets.
    pub hidden: usize,
    pub tau: f64,
    pub lr_encoder: f64,
    pub lr_decoder: f64,
    pub lr_synth: f64,
    pub steps: u64,
    pub eval_every: u64,
    pub eval_size: usize,
    pub runs: usize,
    pub seed: u64,
    /// Fraction of slots credited per step by `reinstate_approx`.
    pub subset_fraction: f64,
    /// Synthetic-gradient target multiplier; `None` means the capacity K.
    pub synth_scale: Option<f64>,
    /// Most slots used per synthetic-gradient training step.
    pub synth_batch: usize,
    /// Steps of decoder-only training before any encoder credit.
    pub decoder_warmup: u64,
    pub oracle_inference: OracleInference,
    pub data: DataSource,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mechanism: Mechanism::ReinstateExact,
            capacity: 5000,
            embed_dim: 64,
            hidden: 256,
            tau: 1.0,
            lr_encoder: 1e-4,
            lr_decoder: 1e-4,
            lr_synth: 1e-4,
            steps: 20_000,
            eval_every: 250,
            eval_size: 1000,
            runs: 10,
            seed: 0,
            subset_fraction: 1.0,
            synth_scale: None,
            synth_batch: 256,
            decoder_warmup: 0,
            oracle_inference: OracleInference::Recomputed,
            data: DataSource::Mnist {
                dir: PathBuf::from("data/mnist"),
            },
            out: None,
            svg: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl TrainConfig {
    /// MNIST, K = 5000, 10 runs.
    pub fn full() -> Self {
        Self::default()
    }

    /// Small CPU-friendly setup on synthetic blobs: K = 500, 5000 steps, 3 runs.
    pub fn desk() -> Self {
        Self {
            capacity: 500,
            steps: 5000,
            runs: 3,
            data: DataSource::Blobs {
                per_class: 500,
                spread: 0.3,
            },
            ..Self::default()
        }
    }

    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::Config(format!("unknown profile `{other}` (full|desk)"))),
        }
    }

    pub fn effective_synth_scale(&self) -> f64 {
        self.synth_scale.unwrap_or(self.capacity as f64)
    }

    /// Sets one option by name. Dashes and underscores are interchangeable,
    /// so CLI flag names work as config keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "mechanism" => self.mechanism = value.parse()?,
            "capacity" => self.capacity = parse(k, value)?,
            "embed_dim" => self.embed_dim = parse(k, value)?,
            "hidden" => self.hidden = parse(k, value)?,
            "tau" => self.tau = parse(k, value)?,
            "lr" => {
                let lr = parse(k, value)?;
                self.lr_encoder = lr;
                self.lr_decoder = lr;
                self.lr_synth = lr;
            }
            "lr_encoder" => self.lr_encoder = parse(k, value)?,
            "lr_decoder" => self.lr_decoder = parse(k, value)?,
            "lr_synth" => self.lr_synth = parse(k, value)?,
            "steps" => self.steps = parse(k, value)?,
            "eval_every" => self.eval_every = parse(k, value)?,
            "eval_size" => self.eval_size = parse(k, value)?,
            "runs" => self.runs = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "subset_fraction" => self.subset_fraction = parse(k, value)?,
            "synth_scale" => {
                self.synth_scale = match value {
                    "" | "auto" | "capacity" => None,
                    v => Some(parse(k, v)?),
                }
            }
            "synth_batch" => self.synth_batch = parse(k, value)?,
            "decoder_warmup" => self.decoder_warmup = parse(k, value)?,
            "oracle_inference" => self.oracle_inference = value.parse()?,
            "data" => {
                self.data = match value {
                    "mnist" => DataSource::Mnist {
                        dir: PathBuf::from("data/mnist"),
                    },
                    "blobs" => DataSource::Blobs {
                        per_class: 500,
                        spread: 0.3,
                    },
                    other => return Err(Error::Config(format!("data must be mnist|blobs, got `{other}`"))),
                }
            }
            "data_dir" => {
                self.data = DataSource::Mnist {
                    dir: PathBuf::from(value),
                }
            }
            "blob_per_class" | "blob_spread" => {
                let (mut per_class, mut spread) = match self.data {
                    DataSource::Blobs { per_class, spread } => (per_class, spread),
                    DataSource::Mnist { .. } => (500, 0.3),
                };
                if k == "blob_per_class" {
                    per_class = parse(k, value)?;
                } else {
                    spread = parse(k, value)?;
                }
                self.data = DataSource::Blobs { per_class, spread };
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "svg" => self.svg = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment, blank lines skip.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_kv_text(&text)
    }

    /// Serializes every option in the format [`apply_kv_text`](Self::apply_kv_text) reads.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("mechanism", self.mechanism.to_string());
        line("capacity", self.capacity.to_string());
        line("embed_dim", self.embed_dim.to_string());
        line("hidden", self.hidden.to_string());
        line("tau", self.tau.to_string());
        line("lr_encoder", self.lr_encoder.to_string());
        line("lr_decoder", self.lr_decoder.to_string());
        line("lr_synth", self.lr_synth.to_string());
        line("steps", self.steps.to_string());
        line("eval_every", self.eval_every.to_string());
        line("eval_size", self.eval_size.to_string());
        line("runs", self.runs.to_string());
        line("seed", self.seed.to_string());
        line("subset_fraction", self.subset_fraction.to_string());
        line(
            "synth_scale",
            self.synth_scale.map_or_else(|| "auto".into(), |v| v.to_string()),
        );
        line("synth_batch", self.synth_batch.to_string());
        line("decoder_warmup", self.decoder_warmup.to_string());
        line("oracle_inference", self.oracle_inference.to_string());
        match &self.data {
            DataSource::Mnist { dir } => line("data_dir", dir.display().to_string()),
            DataSource::Blobs { per_class, spread } => {
                line("blob_per_class", per_class.to_string());
                line("blob_spread", spread.to_string());
            }
        }
        if let Some(p) = &self.out {
            line("out", p.display().to_string());
        }
        if let Some(p) = &self.svg {
            line("svg", p.display().to_string());
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("capacity", self.capacity as u64),
            ("embed_dim", self.embed_dim as u64),
            ("hidden", self.hidden as u64),
            ("steps", self.steps),
            ("eval_every", self.eval_every),
            ("eval_size", self.eval_size as u64),
            ("runs", self.runs as u64),
            ("synth_batch", self.synth_batch as u64),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("lr_encoder", self.lr_encoder),
            ("lr_decoder", self.lr_decoder),
            ("lr_synth", self.lr_synth),
            ("tau", self.tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "subset_fraction must be in (0, 1], got {}",
                self.subset_fraction
            )));
        }
        if let Some(s) = self.synth_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("synth_scale must be > 0, got {s}")));
            }
        }
        if let DataSource::Blobs { per_class, spread } = self.data {
            if per_class == 0 || !(spread >= 0.0) {
                return Err(Error::Config("blob_per_class >= 1 and blob_spread >= 0 required".into()));
            }
        }
        Ok(())
    }
}
