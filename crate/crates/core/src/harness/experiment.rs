use rayon::prelude::*;

use super::config::{DataSource, TrainConfig};
use super::metrics::{aggregate, MechanismSummary, MetricsRecord};
use super::state::RunState;
use crate::data::{load_mnist_dir, synthetic_blobs, Dataset, ExampleStream, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::Rng;

/// Blob dimensionality, matching MNIST so the same nets apply.
pub const BLOB_DIM: usize = 784;

#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: Dataset,
    pub validation: Dataset,
}

impl ExperimentData {
    pub fn load(cfg: &TrainConfig) -> Result<Self> {
        let data = match &cfg.data {
            DataSource::Mnist { dir } => {
                let (train, validation) = load_mnist_dir(dir)?;
                Self { train, validation }
            }
            DataSource::Blobs { per_class, spread } => {
                // Stream 7 of the master seed, so every run sees the same blobs.
                let val_per_class = cfg.eval_size.div_ceil(NUM_CLASSES);
                let mut rng = Rng::with_stream(cfg.seed, 7);
                let all = synthetic_blobs(
                    &mut rng,
                    NUM_CLASSES,
                    per_class + val_per_class,
                    BLOB_DIM,
                    *spread,
                )?;
                let (train, validation) = all.split_at(per_class * NUM_CLASSES);
                Self { train, validation }
            }
        };
        data.check()?;
        Ok(data)
    }

    fn check(&self) -> Result<()> {
        if self.train.is_empty() || self.validation.is_empty() {
            return Err(Error::Config("training and validation sets must be non-empty".into()));
        }
        if self.train.dim() != self.validation.dim() || self.train.dim() == 0 {
            return Err(Error::Config(format!(
                "observation dims differ: train {} vs validation {}",
                self.train.dim(),
                self.validation.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Window {
    loss: (f64, usize),
    recon: (f64, usize),
    synth: (f64, usize),
}

impl Window {
    fn push(acc: &mut (f64, usize), v: Option<f64>) {
        if let Some(v) = v {
            acc.0 += v;
            acc.1 += 1;
        }
    }

    fn mean(acc: (f64, usize)) -> Option<f64> {
        (acc.1 > 0).then(|| acc.0 / acc.1 as f64)
    }
}

/// One full run with seed `cfg.seed + run`. Divergence ends the run early
/// with a final `diverged` record; other errors propagate.
pub fn run_single(cfg: &TrainConfig, data: &ExperimentData, run: usize) -> Result<Vec<MetricsRecord>> {
    let seed = cfg.seed.wrapping_add(run as u64);
    let mut state = RunState::new(cfg, seed, data.train.dim())?;
    let mut stream = ExampleStream::new(&data.train, Rng::with_stream(seed, 1))?;
    let eval_set = data
        .validation
        .sample(cfg.eval_size, &mut Rng::with_stream(seed, 2));
    let mut records = Vec::new();
    let mut w = Window::default();
    let record = |w: &Window, step, acc, diverged| MetricsRecord {
        run,
        step,
        mechanism: cfg.mechanism,
        train_loss: Window::mean(w.loss),
        val_accuracy: acc,
        recon_loss: Window::mean(w.recon),
        synth_mse: Window::mean(w.synth),
        diverged,
    };
    for t in 1..=cfg.steps {
        let i = stream.next_index();
        let (x, y) = data.train.example(i);
        match state.train_step(&x, y) {
            Ok(m) => {
                Window::push(&mut w.loss, m.train_loss);
                Window::push(&mut w.recon, Some(m.recon_loss));
                Window::push(&mut w.synth, m.synth_mse);
            }
            Err(e) if e.is_divergence() => {
                log::info!("{} run {run} diverged at step {t}: {e}", cfg.mechanism);
                records.push(record(&w, t, None, true));
                return Ok(records);
            }
            Err(e) => return Err(e),
        }
        if t % cfg.eval_every == 0 || t == cfg.steps {
            let out = state.evaluate(&eval_set)?;
            records.push(record(&w, t, Some(out.accuracy), false));
            w = Window::default();
        }
    }
    Ok(records)
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<MetricsRecord>,
    pub summary: MechanismSummary,
}

/// All runs of one mechanism, in parallel, records ordered by run.
pub fn run_experiment(cfg: &TrainConfig, data: &ExperimentData) -> Result<ExperimentResult> {
    cfg.validate()?;
    data.check()?;
    let per_run: Vec<Vec<MetricsRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_single(cfg, data, r))
        .collect::<Result<_>>()?;
    let records: Vec<MetricsRecord> = per_run.into_iter().flatten().collect();
    let summary = aggregate(&records)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("experiment produced no records".into()))?;
    Ok(ExperimentResult { records, summary })
}
