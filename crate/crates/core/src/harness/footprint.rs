use std::fmt;

use crate::error::{Error, Result};

/// Storage scenario: `memories` slots of `obs_bytes` raw bytes each, with
/// numeric arrays stored at `precision` bytes per value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub memories: u64,
    /// Bytes of one raw observation as it arrives (pixels as bytes).
    pub obs_bytes: u64,
    /// Number of observation values when stored as reals.
    pub obs_dims: u64,
    pub embed_dim: u64,
    pub hidden_dim: u64,
    pub precision: u64,
    /// Whether raw observations are counted at `obs_bytes` (native bytes)
    /// or at `obs_dims × precision` (stored as reals).
    pub raw_as_reals: bool,
}

impl Scenario {
    /// A few million Atari frames kept as raw 210×160 RGB bytes.
    pub fn atari() -> Self {
        Self {
            memories: 3_000_000,
            obs_bytes: 210 * 160 * 3,
            obs_dims: 210 * 160 * 3,
            embed_dim: 64,
            hidden_dim: 256,
            precision: 8,
            raw_as_reals: false,
        }
    }

    /// The default MNIST memory: K = 5000, d_e = 64, doubles.
    pub fn mnist() -> Self {
        Self {
            memories: 5000,
            obs_bytes: 784,
            obs_dims: 784,
            embed_dim: 64,
            hidden_dim: 256,
            precision: 8,
            raw_as_reals: true,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "atari" => Ok(Self::atari()),
            "mnist" => Ok(Self::mnist()),
            other => Err(Error::Config(format!("unknown footprint preset `{other}` (atari|mnist)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub raw_observation: u64,
    pub embedding: u64,
    /// Observation plus hidden activation per slot, as the baseline stores.
    pub baseline_activations: u64,
}

pub fn footprint_report(s: &Scenario) -> Footprint {
    let raw_per = if s.raw_as_reals {
        s.obs_dims * s.precision
    } else {
        s.obs_bytes
    };
    Footprint {
        raw_observation: s.memories * raw_per,
        embedding: s.memories * s.embed_dim * s.precision,
        baseline_activations: s.memories * (s.obs_dims + s.hidden_dim) * s.precision,
    }
}

/// Decimal (SI) units: 1 GB = 10⁹ bytes.
pub fn human_bytes(b: u64) -> String {
    const UNITS: [&str; 5] = ["B", "kB", "MB", "GB", "TB"];
    let mut v = b as f64;
    let mut u = 0;
    while v >= 1000.0 && u + 1 < UNITS.len() {
        v /= 1000.0;
        u += 1;
    }
    if u == 0 {
        format!("{b} B")
    } else {
        format!("{v:.2} {}", UNITS[u])
    }
}

impl Footprint {
    pub fn to_csv(&self) -> String {
        format!(
            "storage,bytes\nraw_observation,{}\nembedding,{}\nbaseline_activations,{}\n",
            self.raw_observation, self.embedding, self.baseline_activations
        )
    }
}

impl fmt::Display for Footprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "raw observations      {:>14}", human_bytes(self.raw_observation))?;
        writeln!(f, "embeddings            {:>14}", human_bytes(self.embedding))?;
        write!(f, "baseline activations  {:>14}", human_bytes(self.baseline_activations))
    }
}
