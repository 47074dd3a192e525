//! Training loop, evaluation protocol, per-epoch metrics, and checkpoints.
//!
//! One experiment is: init the model from the seed, then for each epoch
//! walk the training batches in order (hidden state zeroed at the epoch
//! start, carried across batches), take one clipped SGD step per batch at
//! the scheduled rate, and measure validation perplexity. The best-by-
//! validation model is kept alongside the final one.
//!
//! Perplexity is always `exp(mean -ln p)` under the *exact softmax*, no
//! matter which head trained the model — the contrastive loss is a training
//! shortcut, not a different probability model, and any global `lnZ` offset
//! cancels in the softmax.

use std::fs;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use crate::config::{ExperimentConfig, HeadKind};
use crate::corpus::{make_batches, token_counts, Batch, Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::heads::NoiseSamples;
use crate::lstm::{Mode, StackState};
use crate::model::{loss_backward, ModelParams, Objective};
use crate::noise::NoiseDistribution;
use crate::optim::clip_by_global_norm;
use crate::tensor::RngStream;

pub const METRICS_HEADER: &str = "epoch,lr,train_obj,train_ppl_proxy,valid_ppl,seconds";

/// One CSV row. `epoch` is 1-based for reading comfort; the schedule's
/// 0-based index is `epoch - 1`.
#[derive(Clone, Debug)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    /// Mean per-position training objective (NLL for softmax, contrastive
    /// loss otherwise).
    pub train_obj: f64,
    /// Cheap training-perplexity signal: `exp(train_obj)` for softmax; for
    /// the contrastive head (whose objective is not an NLL) the exact
    /// perplexity of the first 5% of the training stream.
    pub train_ppl_proxy: f64,
    pub valid_ppl: f64,
    pub seconds: f64,
}

impl EpochMetrics {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.epoch, self.lr, self.train_obj, self.train_ppl_proxy, self.valid_ppl, self.seconds
        )
    }
}

/// Exact-softmax perplexity of `ids` under the model, using the same
/// contiguous batching as training (state zeroed once, carried across
/// windows). Deterministic and RNG-free.
pub fn evaluate_ppl(
    params: &ModelParams,
    ids: &[usize],
    batch_size: usize,
    unroll: usize,
) -> Result<f64> {
    let batches = make_batches(ids, batch_size, unroll)?;
    let mut state = StackState::zeros(&params.lstm, batch_size);
    let mut total_nll = 0.0;
    let mut positions = 0usize;
    for batch in &batches {
        let (hs, new_state, _) = crate::model::hidden_forward(
            params,
            &batch.inputs,
            &state,
            &crate::lstm::DropoutSpec::none(),
            Mode::Eval,
            None,
        )?;
        let log_probs = crate::heads::softmax_log_probs(&params.head, &hs)?;
        let flat = crate::model::flatten_targets(&batch.targets);
        for (row, &target) in flat.iter().enumerate() {
            total_nll -= log_probs.get(row, target);
        }
        positions += flat.len();
        state = new_state;
    }
    let ppl = (total_nll / positions as f64).exp();
    if !ppl.is_finite() {
        return Err(Error::NonFinite(format!("perplexity {ppl}")));
    }
    Ok(ppl)
}

struct NoiseSetup {
    dist: NoiseDistribution,
    k: usize,
    shared: bool,
}

fn draw_samples(setup: &NoiseSetup, positions: usize, rng: &mut RngStream) -> NoiseSamples {
    if setup.shared {
        NoiseSamples::Shared(setup.dist.sample_k(setup.k, rng))
    } else {
        NoiseSamples::PerPosition((0..positions).map(|_| setup.dist.sample_k(setup.k, rng)).collect())
    }
}

/// One pass over the training batches at a fixed learning rate. Returns
/// the mean per-position objective. Divergence (non-finite loss or
/// gradient norm) aborts with the epoch/batch context in the error.
#[allow(clippy::too_many_arguments)]
fn train_epoch(
    params: &mut ModelParams,
    batches: &[Batch],
    config: &ExperimentConfig,
    noise: Option<&NoiseSetup>,
    lr: f64,
    epoch_display: usize,
    dropout_rng: &mut RngStream,
    noise_rng: &mut RngStream,
) -> Result<f64> {
    let dropout = config.dropout_spec()?;
    let mut state = StackState::zeros(&params.lstm, config.batch_size);
    let mut total = 0.0;
    for (batch_idx, batch) in batches.iter().enumerate() {
        let positions = config.batch_size * config.unroll;
        let samples = noise.map(|n| draw_samples(n, positions, noise_rng));
        let objective = match (&samples, noise) {
            (Some(s), Some(n)) => Objective::Nce { noise: &n.dist, samples: s },
            _ => Objective::Softmax,
        };
        let (loss, mut grads, new_state) = loss_backward(
            params,
            &batch.inputs,
            &batch.targets,
            &state,
            &dropout,
            Mode::Train,
            Some(dropout_rng),
            &objective,
        )?;
        // A runaway step can saturate every gate, after which gradients
        // underflow to zero while the objective sits at some astronomical
        // but finite value — so cap the magnitude too, far beyond anything
        // a finite-vocabulary objective can legitimately reach (even 600
        // noise terms at ~700 nats apiece stay under 1e6).
        if !loss.is_finite() || loss.abs() > 1e7 {
            return Err(Error::Diverged(format!(
                "epoch {epoch_display}, batch {batch_idx}: objective is {loss} (lr {lr})"
            )));
        }
        // Losses are already per-position means, so the divisor stays 1.
        clip_by_global_norm(grads.tensors_mut(), config.clip_norm, 1.0).map_err(|e| {
            Error::Diverged(format!("epoch {epoch_display}, batch {batch_idx} (lr {lr}): {e}"))
        })?;
        params.sgd_apply(&grads, lr)?;
        total += loss;
        state = new_state;
    }
    Ok(total / batches.len() as f64)
}

/// Everything an experiment leaves behind (beyond the files on disk).
pub struct RunReport {
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_valid_ppl: f64,
    pub final_test_ppl: f64,
    pub best_test_ppl: f64,
    pub params: ModelParams,
    pub best_params: ModelParams,
}

/// Trains per the config on an encoded corpus, writing `metrics.csv` and
/// `model.ckpt` (the best-by-validation model) into `out_dir`. The
/// `on_epoch` callback fires after every epoch row.
pub fn run_experiment(
    config: &ExperimentConfig,
    corpus: &Corpus,
    out_dir: &Path,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<RunReport> {
    config.validate()?;
    let vocab_size = corpus.vocab.len();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut init_rng = RngStream::new(config.seed).split("init");
    let mut dropout_rng = RngStream::new(config.seed).split("dropout");
    let mut noise_rng = RngStream::new(config.seed).split("noise");

    let mut params =
        ModelParams::init(config.arch(vocab_size), &config.init, config.z_mode, &mut init_rng)?;
    let schedule = config.schedule()?;
    let batches = make_batches(&corpus.train, config.batch_size, config.unroll)?;

    let noise = match config.head {
        HeadKind::Softmax => None,
        HeadKind::Nce => {
            let counts = token_counts(&corpus.train, vocab_size);
            Some(NoiseSetup {
                dist: NoiseDistribution::build(config.noise_kind, &counts)?,
                k: config.noise_k,
                shared: config.noise_shared,
            })
        }
    };

    // Enough of the training stream for the contrastive head's exact-
    // perplexity proxy: 5%, but never less than one evaluation window.
    let proxy_len = (corpus.train.len() / 20).max(config.batch_size * (config.unroll + 1));
    let proxy_slice = &corpus.train[..proxy_len.min(corpus.train.len())];

    let metrics_path = out_dir.join("metrics.csv");
    let mut metrics_file = BufWriter::new(
        File::create(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?,
    );
    writeln!(metrics_file, "{METRICS_HEADER}").map_err(|e| Error::io(&metrics_path, e))?;

    let mut report_rows = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;

    for t in 0..config.epochs {
        let started = Instant::now();
        let lr = schedule.learning_rate(t);
        let train_obj = train_epoch(
            &mut params,
            &batches,
            config,
            noise.as_ref(),
            lr,
            t + 1,
            &mut dropout_rng,
            &mut noise_rng,
        )?;
        let train_ppl_proxy = match config.head {
            HeadKind::Softmax => train_obj.exp(),
            HeadKind::Nce => evaluate_ppl(&params, proxy_slice, config.batch_size, config.unroll)?,
        };
        let valid_ppl = evaluate_ppl(&params, &corpus.valid, config.batch_size, config.unroll)?;
        let row = EpochMetrics {
            epoch: t + 1,
            lr,
            train_obj,
            train_ppl_proxy,
            valid_ppl,
            seconds: started.elapsed().as_secs_f64(),
        };
        writeln!(metrics_file, "{}", row.csv_row()).map_err(|e| Error::io(&metrics_path, e))?;
        metrics_file.flush().map_err(|e| Error::io(&metrics_path, e))?;
        if best.as_ref().is_none_or(|(_, b, _)| valid_ppl < *b) {
            best = Some((t + 1, valid_ppl, params.clone()));
        }
        on_epoch(&row);
        report_rows.push(row);
    }

    let (best_epoch, best_valid_ppl, best_params) = best.expect("epochs >= 1");
    let final_test_ppl = evaluate_ppl(&params, &corpus.test, config.batch_size, config.unroll)?;
    let best_test_ppl = evaluate_ppl(&best_params, &corpus.test, config.batch_size, config.unroll)?;

    let ckpt = Checkpoint {
        config: config.clone(),
        words: corpus.vocab.words().to_vec(),
        params: best_params.clone(),
        dropout_rng: dropout_rng.snapshot(),
        noise_rng: noise_rng.snapshot(),
        best_valid_ppl,
        best_epoch,
    };
    save_checkpoint(&out_dir.join("model.ckpt"), &ckpt)?;

    Ok(RunReport {
        epochs: report_rows,
        best_epoch,
        best_valid_ppl,
        final_test_ppl,
        best_test_ppl,
        params,
        best_params,
    })
}

/// A trained model with everything needed to evaluate or resume it.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: ExperimentConfig,
    /// Vocabulary in id order.
    pub words: Vec<String>,
    pub params: ModelParams,
    pub dropout_rng: (u64, u64),
    pub noise_rng: (u64, u64),
    pub best_valid_ppl: f64,
    pub best_epoch: usize,
}

impl Checkpoint {
    pub fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::from_words(self.words.clone())
    }
}

const CKPT_MAGIC: &[u8; 6] = b"NCELM1";
const CKPT_VERSION: u32 = 1;

struct CkptWriter<W: Write> {
    w: W,
}

impl<W: Write> CkptWriter<W> {
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.u64(b.len() as u64)?;
        self.w.write_all(b)
    }
    fn f64_slice(&mut self, vals: &[f64]) -> std::io::Result<()> {
        self.u64(vals.len() as u64)?;
        let mut buf = Vec::with_capacity(vals.len() * 8);
        for v in vals {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.w.write_all(&buf)
    }
}

struct CkptReader<R: Read> {
    r: R,
}

impl<R: Read> CkptReader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b).map_err(truncated)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b).map_err(truncated)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b).map_err(truncated)?;
        Ok(f64::from_le_bytes(b))
    }
    fn bytes(&mut self) -> Result<Vec<u8>> {
        let len = self.u64()? as usize;
        if len > (1 << 32) {
            return Err(Error::Checkpoint(format!("implausible length field {len}")));
        }
        let mut buf = vec![0u8; len];
        self.r.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf)
    }
    fn string(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?)
            .map_err(|e| Error::Checkpoint(format!("invalid utf-8 string: {e}")))
    }
    fn f64_vec(&mut self) -> Result<Vec<f64>> {
        let len = self.u64()? as usize;
        if len > (1 << 32) {
            return Err(Error::Checkpoint(format!("implausible tensor length {len}")));
        }
        let mut buf = vec![0u8; len * 8];
        self.r.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn truncated(e: std::io::Error) -> Error {
    Error::Checkpoint(format!("file truncated or unreadable: {e}"))
}

/// Writes the versioned binary format: magic, version, config text,
/// vocabulary, named f64 tensors (little-endian), RNG snapshots, and the
/// selection metadata. Loading reproduces every parameter bit-for-bit.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = CkptWriter { w: BufWriter::new(file) };
    let io = |e: std::io::Error| Error::io(path, e);

    w.w.write_all(CKPT_MAGIC).map_err(io)?;
    w.u32(CKPT_VERSION).map_err(io)?;
    w.bytes(ckpt.config.serialize().as_bytes()).map_err(io)?;
    w.u64(ckpt.words.len() as u64).map_err(io)?;
    for word in &ckpt.words {
        w.bytes(word.as_bytes()).map_err(io)?;
    }
    let tensors = ckpt.params.named_tensors();
    w.u64(tensors.len() as u64).map_err(io)?;
    for (name, vals) in tensors {
        w.bytes(name.as_bytes()).map_err(io)?;
        w.f64_slice(vals).map_err(io)?;
    }
    for v in [ckpt.dropout_rng.0, ckpt.dropout_rng.1, ckpt.noise_rng.0, ckpt.noise_rng.1] {
        w.u64(v).map_err(io)?;
    }
    w.f64(ckpt.best_valid_ppl).map_err(io)?;
    w.u64(ckpt.best_epoch as u64).map_err(io)?;
    w.w.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = CkptReader { r: BufReader::new(file) };

    let mut magic = [0u8; 6];
    r.r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != CKPT_MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?}; not a model checkpoint",
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = r.u32()?;
    if version != CKPT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version} (this build reads {CKPT_VERSION})"
        )));
    }
    let config = ExperimentConfig::parse(&r.string()?)
        .map_err(|e| Error::Checkpoint(format!("embedded config: {e}")))?;
    let word_count = r.u64()? as usize;
    if word_count > (1 << 32) {
        return Err(Error::Checkpoint(format!("implausible vocabulary size {word_count}")));
    }
    let mut words = Vec::with_capacity(word_count);
    for _ in 0..word_count {
        words.push(r.string()?);
    }

    let mut params = ModelParams::init_zeroed(config.arch(words.len()), config.z_mode)?;
    let tensor_count = r.u64()? as usize;
    {
        let mut slots = params.named_tensors_mut();
        if tensor_count != slots.len() {
            return Err(Error::Checkpoint(format!(
                "{tensor_count} tensors in file, model expects {}",
                slots.len()
            )));
        }
        for _ in 0..tensor_count {
            let name = r.string()?;
            let vals = r.f64_vec()?;
            let slot = slots
                .iter_mut()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| Error::Checkpoint(format!("unexpected tensor {name:?}")))?;
            if slot.1.len() != vals.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name:?} has {} values, model expects {}",
                    vals.len(),
                    slot.1.len()
                )));
            }
            slot.1.copy_from_slice(&vals);
        }
    }
    // The partition estimate came through the tensor block; nothing else
    // to patch up.
    let dropout_rng = (r.u64()?, r.u64()?);
    let noise_rng = (r.u64()?, r.u64()?);
    let best_valid_ppl = r.f64()?;
    let best_epoch = r.u64()? as usize;
    let mut tail = [0u8; 1];
    if r.r.read(&mut tail).map_err(|e| Error::Checkpoint(e.to_string()))? != 0 {
        return Err(Error::Checkpoint("trailing bytes after checkpoint".into()));
    }

    Ok(Checkpoint { config, words, params, dropout_rng, noise_rng, best_valid_ppl, best_epoch })
}
