use std::path::PathBuf;

use epicredit_core::credit::{
    assign_baseline, assign_reinstate_approx, assign_reinstate_exact, synth_apply_at_write,
    Mechanism, ObservationOracle,
};
use epicredit_core::data::{Dataset, NUM_CLASSES};
use epicredit_core::harness::{
    parse_csv, read_csv, run_experiment, to_csv, write_csv, DataSource, ExperimentData, RunState,
    TrainConfig,
};
use epicredit_core::memory::MemorySlot;
use epicredit_core::nn::{cross_entropy, AdamConfig, Matrix, Rng, LOG_FLOOR};
use epicredit_core::Error;

const OBS: usize = 16;

fn small(m: Mechanism, capacity: usize) -> TrainConfig {
    TrainConfig {
        mechanism: m,
        capacity,
        embed_dim: 4,
        hidden: 8,
        ..TrainConfig::desk()
    }
}

fn random_x(rng: &mut Rng) -> Vec<f64> {
    (0..OBS).map(|_| rng.uniform()).collect()
}

fn golden_config() -> TrainConfig {
    TrainConfig {
        capacity: 20,
        steps: 50,
        eval_every: 10,
        eval_size: 50,
        runs: 2,
        seed: 2024,
        data: DataSource::Blobs {
            per_class: 10,
            spread: 0.3,
        },
        ..TrainConfig::desk()
    }
}

fn golden_csv() -> String {
    let base = golden_config();
    let data = ExperimentData::load(&base).unwrap();
    let mut records = Vec::new();
    for m in Mechanism::ALL {
        let cfg = TrainConfig { mechanism: m, ..base.clone() };
        records.extend(run_experiment(&cfg, &data).unwrap().records);
    }
    to_csv(&records)
}

/// Set `EPICREDIT_BLESS=1` to regenerate the file after an intended change.
#[test]
fn golden_blob_run_matches_byte_for_byte() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/blobs_50_steps.csv");
    let csv = golden_csv();
    if std::env::var_os("EPICREDIT_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &csv).unwrap();
    }
    let expected = std::fs::read_to_string(&path).expect("golden file missing");
    assert_eq!(csv, expected);
}

#[test]
fn csv_file_round_trip() {
    let cfg = TrainConfig {
        mechanism: Mechanism::Synthetic,
        ..golden_config()
    };
    let data = ExperimentData::load(&cfg).unwrap();
    let recs = run_experiment(&cfg, &data).unwrap().records;
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.csv");
    write_csv(&p, &recs).unwrap();
    assert_eq!(read_csv(&p).unwrap(), recs);
    assert_eq!(parse_csv(&std::fs::read_to_string(&p).unwrap()).unwrap(), recs);
}

#[test]
fn unwritable_path_names_it() {
    let p = PathBuf::from("/nonexistent-dir/metrics.csv");
    match write_csv(&p, &[]) {
        Err(Error::Io { path, .. }) => assert_eq!(path, p),
        other => panic!("{other:?}"),
    }
}

#[test]
fn predict_then_write_with_one_slot() {
    // K = 1 and alternating labels: every step reads only the previous
    // step's slot, which always has the other label, so the true class gets
    // probability zero and the loss sits at the log floor.
    for m in Mechanism::ALL {
        let mut st = RunState::new(&small(m, 1), 3, OBS).unwrap();
        let mut rng = Rng::new(9);
        for t in 0..12u64 {
            let y = (t % 2) as usize;
            let metrics = st.train_step(&random_x(&mut rng), y).unwrap();
            if t == 0 {
                assert_eq!(metrics.train_loss, None);
            } else {
                assert_eq!(metrics.train_loss, Some(-LOG_FLOOR.ln()), "{m} step {t}");
            }
            assert_eq!(st.memory.len(), 1);
            assert_eq!(st.memory.slot(0).unwrap().write_step, t + 1);
        }
    }
}

/// Fills a state's memory with `n` steps and returns the next example.
fn warmed(m: Mechanism, n: usize) -> (RunState, Vec<f64>, usize, AdamConfig) {
    let cfg = small(m, 8);
    let mut st = RunState::new(&cfg, 5, OBS).unwrap();
    let mut rng = Rng::new(17);
    for t in 0..n {
        st.train_step(&random_x(&mut rng), t % 3).unwrap();
    }
    (st, random_x(&mut rng), 1, AdamConfig::with_lr(cfg.lr_encoder))
}

#[test]
fn scripted_step_matches_hand_composition() {
    for m in Mechanism::ALL {
        let (st, x, y, opt) = warmed(m, 4);
        let tau = 1.0;
        let mut auto = st.clone();
        let step = auto.train_step(&x, y).unwrap();

        let mut hand = st.clone();
        let xm = Matrix::column_vector(&x);
        let acts = hand.encoder.encode(&xm).unwrap();
        let e_q = acts.output.as_slice().to_vec();
        let all: Vec<usize> = (0..hand.memory.len()).collect();
        let loss = match m {
            Mechanism::ReinstateExact | Mechanism::Oracle => {
                let c = if m == Mechanism::Oracle {
                    assign_reinstate_exact(&hand.memory, &ObservationOracle, &hand.encoder, &e_q, y, tau, NUM_CLASSES)
                } else {
                    assign_reinstate_exact(&hand.memory, &hand.decoder, &hand.encoder, &e_q, y, tau, NUM_CLASSES)
                }
                .unwrap();
                hand.encoder.apply(&c.grads, &opt).unwrap();
                c.loss
            }
            _ => {
                let r = hand.memory.read(&e_q, tau, NUM_CLASSES).unwrap();
                let (loss, g_p) = cross_entropy(&r.probs, y).unwrap();
                let g = hand.memory.read_backward(&e_q, &r, &g_p, tau).unwrap();
                match m {
                    Mechanism::Baseline => {
                        let grads = assign_baseline(&hand.encoder, &hand.memory, &g).unwrap();
                        hand.encoder.apply(&grads, &opt).unwrap();
                    }
                    Mechanism::ReinstateApprox => {
                        let grads =
                            assign_reinstate_approx(&hand.memory, &hand.decoder, &hand.encoder, &g, &all)
                                .unwrap();
                        hand.encoder.apply(&grads, &opt).unwrap();
                    }
                    Mechanism::Synthetic => {
                        // synth_scale defaults to the capacity, 8 here
                        let scale = 8.0;
                        let syn = hand.synth.as_mut().unwrap();
                        syn.train(
                            &hand.memory.keys().unwrap(),
                            &hand.memory.labels(),
                            &g.scaled(scale),
                            &AdamConfig::with_lr(1e-4),
                        )
                        .unwrap();
                    }
                    _ => unreachable!(),
                }
                loss
            }
        };
        let mut slot = MemorySlot::new(e_q.clone(), y, 5);
        if m.stores_observation() {
            slot.observation = Some(x.clone());
        }
        if m.stores_hidden() {
            slot.hidden = Some(acts.hidden.as_slice().to_vec());
        }
        hand.memory.write(slot).unwrap();
        if let Some(syn) = &hand.synth {
            let g_hat: Vec<f64> = syn.predict(&e_q, y).unwrap().iter().map(|g| g / 8.0).collect();
            synth_apply_at_write(&mut hand.encoder, &xm, &acts, &g_hat, &opt).unwrap();
        }
        let recon = hand.decoder.recon_step(&e_q, &x, &opt).unwrap();

        assert!((step.train_loss.unwrap() - loss).abs() <= 1e-12, "{m}");
        assert!((step.recon_loss - recon).abs() <= 1e-12, "{m}");
        let enc_diff = auto
            .encoder
            .net
            .hidden
            .weights
            .max_abs_diff(&hand.encoder.net.hidden.weights)
            .unwrap()
            .max(
                auto.encoder
                    .net
                    .output
                    .weights
                    .max_abs_diff(&hand.encoder.net.output.weights)
                    .unwrap(),
            );
        assert!(enc_diff <= 1e-12, "{m}: encoder differs by {enc_diff}");
        let dec_diff = auto
            .decoder
            .net
            .output
            .weights
            .max_abs_diff(&hand.decoder.net.output.weights)
            .unwrap();
        assert!(dec_diff <= 1e-12, "{m}");
        assert_eq!(auto.memory.labels(), hand.memory.labels());
    }
}

#[test]
fn evaluate_is_pure_and_self_retrieves() {
    let (st, ..) = warmed(Mechanism::Baseline, 6);
    // Validation set = the stored observations with their labels.
    let xs: Vec<Vec<f64>> = st
        .memory
        .slots()
        .map(|s| s.observation.clone().unwrap())
        .collect();
    let val = Dataset::new(
        Matrix::from_columns(&xs).unwrap(),
        st.memory.labels(),
    )
    .unwrap();
    let before = st.clone();
    let _ = st.evaluate(&val).unwrap();
    assert_eq!(st, before);

    // One slot per class holding that class's encoding, queried with the
    // same inputs: each query's best match is its own slot.
    let cfg = small(Mechanism::Oracle, 3);
    let mut st = RunState::new(&cfg, 1, OBS).unwrap();
    let mut rng = Rng::new(4);
    let protos: Vec<Vec<f64>> = (0..3).map(|_| random_x(&mut rng)).collect();
    for (c, x) in protos.iter().enumerate() {
        let e = st.encoder.encode(&Matrix::column_vector(x)).unwrap().output.into_vec();
        let mut slot = MemorySlot::new(e, c, c as u64 + 1);
        slot.observation = Some(x.clone());
        st.memory.write(slot).unwrap();
    }
    let val = Dataset::new(Matrix::from_columns(&protos).unwrap(), vec![0, 1, 2]).unwrap();
    assert_eq!(st.evaluate(&val).unwrap().accuracy, 1.0);
}

#[test]
fn decoder_warmup_only_trains_decoder() {
    let mut cfg = small(Mechanism::ReinstateExact, 4);
    cfg.decoder_warmup = 5;
    let mut st = RunState::new(&cfg, 2, OBS).unwrap();
    let enc0 = st.encoder.clone();
    let mut rng = Rng::new(1);
    for t in 0..5 {
        let m = st.train_step(&random_x(&mut rng), t % 2).unwrap();
        assert_eq!(m.train_loss, None);
    }
    assert_eq!(st.encoder, enc0);
    let m = st.train_step(&random_x(&mut rng), 0).unwrap();
    assert!(m.train_loss.is_some());
    assert_ne!(st.encoder, enc0);
}
