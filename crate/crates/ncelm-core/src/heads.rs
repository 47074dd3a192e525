//! Output heads: exact softmax and the noise-contrastive (NCE) objective.
//!
//! Both heads score a word `w` against a hidden vector `h` as
//!
//! ```text
//! s_w(h) = theta_w . h + bias_w - lnZ
//! ```
//!
//! and treat `exp(s_w)` as an unnormalized model probability. The softmax
//! path normalizes exactly (any global `lnZ` offset cancels, so evaluation
//! never depends on it). The contrastive path instead trains a classifier
//! between data words and `k` samples from a known noise distribution: with
//! `a = s_w - ln(k * P_n(w))`,
//!
//! ```text
//! P(data | w, h)  = sigmoid(a)
//! J = -(1/n) * sum_i [ ln sigmoid(a_target) + sum_j ln(1 - sigmoid(a_noise_j)) ]
//! ```
//!
//! Its gradients touch only the target and sampled rows of `theta`, which is
//! the whole point: no `V`-wide matrix product during training. `lnZ` is
//! normally pinned to 0 (unit partition function); a learned global estimate
//! is available behind [`ZMode::Learned`].

use crate::error::{Error, Result};
use crate::noise::NoiseDistribution;
use crate::tensor::{dot, log_sum_exp, Matrix};

/// Whether the global log-partition estimate `lnZ` is trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZMode {
    /// `lnZ` stays at its initial value (0 by default, i.e. `Z = 1`).
    Constant,
    /// `lnZ` is a single trainable scalar shared by every context.
    Learned,
}

/// Output-layer parameters: one row of `theta` and one bias per word.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    /// `[V x H]`.
    pub theta: Matrix,
    /// `[V]`.
    pub bias: Vec<f64>,
    /// Global log-partition estimate.
    pub ln_z: f64,
    pub z_mode: ZMode,
}

impl HeadParams {
    pub fn zeros(vocab: usize, hidden: usize, z_mode: ZMode) -> Self {
        HeadParams {
            theta: Matrix::zeros(vocab, hidden),
            bias: vec![0.0; vocab],
            ln_z: 0.0,
            z_mode,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.theta.rows()
    }

    pub fn hidden_size(&self) -> usize {
        self.theta.cols()
    }

    fn check(&self, hs: &Matrix) -> Result<()> {
        if self.bias.len() != self.theta.rows() {
            return Err(Error::shape(
                "head",
                format!("{} bias entries vs {} theta rows", self.bias.len(), self.theta.rows()),
            ));
        }
        if hs.cols() != self.theta.cols() {
            return Err(Error::shape(
                "head",
                format!("hidden dim {} vs theta cols {}", hs.cols(), self.theta.cols()),
            ));
        }
        Ok(())
    }

    /// Unnormalized log score of one word against one hidden row.
    fn score(&self, h: &[f64], word: usize) -> f64 {
        dot(self.theta.row(word), h) + self.bias[word] - self.ln_z
    }
}

/// Dense head gradients (softmax path, and the scatter target for the
/// sparse contrastive form).
#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads {
    pub theta: Matrix,
    pub bias: Vec<f64>,
    pub d_ln_z: f64,
}

impl HeadGrads {
    pub fn zeros(vocab: usize, hidden: usize) -> Self {
        HeadGrads { theta: Matrix::zeros(vocab, hidden), bias: vec![0.0; vocab], d_ln_z: 0.0 }
    }
}

/// Noise word ids for one batch of `n` positions.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSamples {
    /// The same `k` samples reused by every position; lets the noise scores
    /// be one `[n x k]` matrix product.
    Shared(Vec<usize>),
    /// Independent `k` samples per position (`n` rows).
    PerPosition(Vec<Vec<usize>>),
}

impl NoiseSamples {
    pub fn k(&self) -> usize {
        match self {
            NoiseSamples::Shared(ids) => ids.len(),
            NoiseSamples::PerPosition(rows) => rows.first().map_or(0, Vec::len),
        }
    }

    fn ids_for(&self, position: usize) -> &[usize] {
        match self {
            NoiseSamples::Shared(ids) => ids,
            NoiseSamples::PerPosition(rows) => &rows[position],
        }
    }

    fn validate(&self, n: usize, vocab: usize) -> Result<()> {
        let check_ids = |ids: &[usize]| -> Result<()> {
            if ids.is_empty() {
                return Err(Error::InvalidArgument("contrastive batch needs k >= 1 noise samples".into()));
            }
            if let Some(&bad) = ids.iter().find(|&&id| id >= vocab) {
                return Err(Error::InvalidArgument(format!("noise id {bad} out of vocabulary {vocab}")));
            }
            Ok(())
        };
        match self {
            NoiseSamples::Shared(ids) => check_ids(ids),
            NoiseSamples::PerPosition(rows) => {
                if rows.len() != n {
                    return Err(Error::shape(
                        "nce_batch",
                        format!("{} noise rows vs {} positions", rows.len(), n),
                    ));
                }
                let k = rows[0].len();
                for ids in rows {
                    if ids.len() != k {
                        return Err(Error::shape("nce_batch", "ragged per-position noise rows".to_string()));
                    }
                    check_ids(ids)?;
                }
                Ok(())
            }
        }
    }
}

/// Targets plus noise draws for one flattened batch of positions.
#[derive(Clone, Debug, PartialEq)]
pub struct NceBatch {
    pub targets: Vec<usize>,
    pub noise: NoiseSamples,
}

/// Gradients of the contrastive loss: only the touched rows.
///
/// `rows` may repeat a word id (a noise draw can collide with the target or
/// with another draw); contributions accumulate on scatter.
#[derive(Clone, Debug)]
pub struct NceGrads {
    pub rows: Vec<(usize, Vec<f64>)>,
    pub bias: Vec<(usize, f64)>,
    pub d_ln_z: f64,
}

impl NceGrads {
    /// Adds the sparse rows into a dense gradient container.
    pub fn scatter_into(&self, dense: &mut HeadGrads) {
        for (id, row) in &self.rows {
            let dst = dense.theta.row_mut(*id);
            for (d, s) in dst.iter_mut().zip(row) {
                *d += s;
            }
        }
        for (id, g) in &self.bias {
            dense.bias[*id] += g;
        }
        dense.d_ln_z += self.d_ln_z;
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln sigmoid(a)`, stable for large |a|.
#[inline]
fn log_sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        -(-a).exp().ln_1p()
    } else {
        a - a.exp().ln_1p()
    }
}

/// Exact log-softmax over the whole vocabulary: `[n x H] -> [n x V]`.
///
/// Independent of `ln_z` and `z_mode` by construction — the global offset
/// cancels against the row normalizer — so models trained with either head
/// evaluate identically.
pub fn softmax_log_probs(head: &HeadParams, hs: &Matrix) -> Result<Matrix> {
    head.check(hs)?;
    // logits = hs . theta^T + bias  (lnZ deliberately omitted; it cancels).
    let mut logits = hs.matmul_nt(&head.theta)?;
    let n = logits.rows();
    for r in 0..n {
        let row = logits.row_mut(r);
        for (l, b) in row.iter_mut().zip(&head.bias) {
            *l += b;
        }
        let lse = log_sum_exp(row)?;
        for l in row.iter_mut() {
            *l -= lse;
        }
    }
    Ok(logits)
}

/// Mean negative log-likelihood under the exact softmax, with gradients.
///
/// Returns `(loss, dL/dhs, head gradients)`. The loss averages over the `n`
/// positions. `d_ln_z` is always zero here — a shared offset has no effect
/// on the softmax.
pub fn softmax_loss_backward(
    head: &HeadParams,
    hs: &Matrix,
    targets: &[usize],
) -> Result<(f64, Matrix, HeadGrads)> {
    head.check(hs)?;
    let n = hs.rows();
    if targets.len() != n {
        return Err(Error::shape(
            "softmax_loss",
            format!("{} targets vs {} positions", targets.len(), n),
        ));
    }
    let vocab = head.vocab_size();
    if let Some(&bad) = targets.iter().find(|&&t| t >= vocab) {
        return Err(Error::InvalidArgument(format!("target id {bad} out of vocabulary {vocab}")));
    }

    let log_probs = softmax_log_probs(head, hs)?;
    let mut loss = 0.0;
    // dlogits = (softmax - onehot) / n, reusing the log-prob buffer.
    let mut dlogits = log_probs;
    let inv_n = 1.0 / n as f64;
    for r in 0..n {
        let row = dlogits.row_mut(r);
        loss -= row[targets[r]];
        for v in row.iter_mut() {
            *v = v.exp() * inv_n;
        }
        row[targets[r]] -= inv_n;
    }
    loss *= inv_n;

    let grads = HeadGrads {
        theta: dlogits.matmul_tn(hs)?,
        bias: dlogits.col_sums(),
        d_ln_z: 0.0,
    };
    let dhs = dlogits.matmul(&head.theta)?;
    Ok((loss, dhs, grads))
}

/// Per-position pieces of the contrastive objective, exposed for tests and
/// diagnostics: `log_posterior_target[i] = ln P(data | target_i)` and
/// `log_posterior_noise[i][j] = ln P(noise | noise_ij)`.
pub struct NcePosteriors {
    pub log_posterior_target: Vec<f64>,
    pub log_posterior_noise: Vec<Vec<f64>>,
}

fn check_nce_inputs(head: &HeadParams, hs: &Matrix, batch: &NceBatch, noise: &NoiseDistribution) -> Result<()> {
    head.check(hs)?;
    let n = hs.rows();
    if batch.targets.len() != n {
        return Err(Error::shape(
            "nce_batch",
            format!("{} targets vs {} positions", batch.targets.len(), n),
        ));
    }
    let vocab = head.vocab_size();
    if noise.vocab_size() != vocab {
        return Err(Error::shape(
            "nce_batch",
            format!("noise distribution over {} words vs vocabulary {}", noise.vocab_size(), vocab),
        ));
    }
    if let Some(&bad) = batch.targets.iter().find(|&&t| t >= vocab) {
        return Err(Error::InvalidArgument(format!("target id {bad} out of vocabulary {vocab}")));
    }
    batch.noise.validate(n, vocab)
}

/// Classifier posteriors for every scored word, in the log domain.
pub fn nce_posteriors(
    head: &HeadParams,
    hs: &Matrix,
    batch: &NceBatch,
    noise: &NoiseDistribution,
) -> Result<NcePosteriors> {
    check_nce_inputs(head, hs, batch, noise)?;
    let n = hs.rows();
    let k = batch.noise.k() as f64;
    let ln_k = k.ln();

    let mut log_posterior_target = Vec::with_capacity(n);
    let mut log_posterior_noise = Vec::with_capacity(n);
    for i in 0..n {
        let h = hs.row(i);
        let a_target = head.score(h, batch.targets[i]) - (ln_k + noise.log_prob(batch.targets[i]));
        log_posterior_target.push(log_sigmoid(a_target));
        let row = batch
            .noise
            .ids_for(i)
            .iter()
            .map(|&w| {
                let a = head.score(h, w) - (ln_k + noise.log_prob(w));
                log_sigmoid(-a) // ln(1 - sigmoid(a))
            })
            .collect();
        log_posterior_noise.push(row);
    }
    Ok(NcePosteriors { log_posterior_target, log_posterior_noise })
}

/// Contrastive loss only (used by finite-difference checks).
pub fn nce_loss(
    head: &HeadParams,
    hs: &Matrix,
    batch: &NceBatch,
    noise: &NoiseDistribution,
) -> Result<f64> {
    let post = nce_posteriors(head, hs, batch, noise)?;
    let n = post.log_posterior_target.len() as f64;
    let total: f64 = post
        .log_posterior_target
        .iter()
        .chain(post.log_posterior_noise.iter().flatten())
        .sum();
    Ok(-total / n)
}

/// Contrastive loss with gradients.
///
/// Returns `(loss, dL/dhs, sparse head gradients)`. Scores `k + 1` words
/// per position instead of `V`; the returned `theta` gradients cover only
/// those rows. In [`ZMode::Constant`] the `lnZ` gradient is pinned to zero.
pub fn nce_loss_backward(
    head: &HeadParams,
    hs: &Matrix,
    batch: &NceBatch,
    noise: &NoiseDistribution,
) -> Result<(f64, Matrix, NceGrads)> {
    check_nce_inputs(head, hs, batch, noise)?;
    let n = hs.rows();
    let hidden = head.hidden_size();
    let k = batch.noise.k();
    let ln_k = (k as f64).ln();
    let inv_n = 1.0 / n as f64;

    let mut loss = 0.0;
    let mut dhs = Matrix::zeros(n, hidden);
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(n * (k + 1));
    let mut bias: Vec<(usize, f64)> = Vec::with_capacity(n * (k + 1));
    let mut d_ln_z = 0.0;

    for i in 0..n {
        let target = batch.targets[i];
        // dL/ds for each scored word; ds/dtheta_w = h, ds/dbias_w = 1,
        // ds/dlnZ = -1, ds/dh accumulates theta_w.
        let mut push = |word: usize, d_score: f64, dhs: &mut Matrix, hs: &Matrix| {
            let h = hs.row(i);
            let mut drow = vec![0.0; hidden];
            for (d, &hv) in drow.iter_mut().zip(h) {
                *d = d_score * hv;
            }
            rows.push((word, drow));
            bias.push((word, d_score));
            d_ln_z -= d_score;
            let dst = dhs.row_mut(i);
            for (d, &t) in dst.iter_mut().zip(head.theta.row(word)) {
                *d += d_score * t;
            }
        };

        let a_t = head.score(hs.row(i), target) - (ln_k + noise.log_prob(target));
        loss -= log_sigmoid(a_t);
        push(target, -inv_n * (1.0 - sigmoid(a_t)), &mut dhs, hs);

        for &w in batch.noise.ids_for(i) {
            let a = head.score(hs.row(i), w) - (ln_k + noise.log_prob(w));
            loss -= log_sigmoid(-a);
            push(w, inv_n * sigmoid(a), &mut dhs, hs);
        }
    }

    if head.z_mode == ZMode::Constant {
        d_ln_z = 0.0;
    }
    Ok((loss * inv_n, dhs, NceGrads { rows, bias, d_ln_z }))
}
