//! The assembled language model: embedding table, LSTM stack, output head.
//!
//! Parameters and gradients share one layout and are reachable as named
//! flat tensors, which is what the checkpoint format, the SGD step, the
//! gradient clipper, and the finite-difference oracle all iterate over.
//! The forward pass flattens the `[B][T]` batch into a `(T*B) x H` hidden
//! matrix with row `t * B + b`, so head losses see one position per row.

use crate::error::{Error, Result};
use crate::heads::{self, HeadGrads, HeadParams, NceGrads, NoiseSamples, ZMode};
use crate::lstm::{
    stack_backward, stack_forward, DropoutSpec, LstmLayerParams, Mode, StackState, UnrollCache,
};
use crate::noise::NoiseDistribution;
use crate::optim::InitHeuristic;
use crate::tensor::{Matrix, RngStream};

/// Network dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkArch {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl NetworkArch {
    pub fn validate(&self) -> Result<()> {
        if self.vocab < 2 || self.embed == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate architecture: V={}, E={}, H={}, layers={}",
                self.vocab, self.embed, self.hidden, self.layers
            )));
        }
        Ok(())
    }
}

/// All trainable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub arch: NetworkArch,
    /// `[V x E]` input embedding table.
    pub embedding: Matrix,
    /// Bottom layer maps `E -> H`, the rest `H -> H`.
    pub lstm: Vec<LstmLayerParams>,
    pub head: HeadParams,
}

/// Gradient container mirroring [`ModelParams`] tensor-for-tensor.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub embedding: Matrix,
    pub lstm: Vec<LstmLayerParams>,
    pub head: HeadGrads,
}

impl ModelParams {
    /// Initializes every weight matrix from one resolved range — the
    /// heuristic is resolved once against the recurrent fan `(H, H)` and
    /// reused for the embedding, all gate weights, and the head, matching
    /// the convention of quoting a single init range per model size.
    /// Biases and the partition estimate start at zero. Fill order is
    /// embedding, then each layer's `w_x` and `w_h`, then `head.theta`, so
    /// a given seed always produces the same model.
    pub fn init(
        arch: NetworkArch,
        heuristic: &InitHeuristic,
        z_mode: ZMode,
        rng: &mut RngStream,
    ) -> Result<Self> {
        arch.validate()?;
        let resolved = heuristic.resolve(arch.hidden, arch.hidden)?;
        let mut embedding = Matrix::zeros(arch.vocab, arch.embed);
        resolved.fill_matrix(&mut embedding, rng);
        let mut lstm = Vec::with_capacity(arch.layers);
        for l in 0..arch.layers {
            let input = if l == 0 { arch.embed } else { arch.hidden };
            let mut layer = LstmLayerParams::zeros(input, arch.hidden);
            resolved.fill_matrix(&mut layer.w_x, rng);
            resolved.fill_matrix(&mut layer.w_h, rng);
            lstm.push(layer);
        }
        let mut head = HeadParams::zeros(arch.vocab, arch.hidden, z_mode);
        resolved.fill_matrix(&mut head.theta, rng);
        Ok(ModelParams { arch, embedding, lstm, head })
    }

    /// All-zero parameters of the right shapes — the blank slate a
    /// checkpoint loader fills in.
    pub fn init_zeroed(arch: NetworkArch, z_mode: ZMode) -> Result<Self> {
        arch.validate()?;
        let mut lstm = Vec::with_capacity(arch.layers);
        for l in 0..arch.layers {
            let input = if l == 0 { arch.embed } else { arch.hidden };
            lstm.push(LstmLayerParams::zeros(input, arch.hidden));
        }
        Ok(ModelParams {
            arch,
            embedding: Matrix::zeros(arch.vocab, arch.embed),
            lstm,
            head: HeadParams::zeros(arch.vocab, arch.hidden, z_mode),
        })
    }

    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![("embedding".into(), self.embedding.data())];
        for (l, layer) in self.lstm.iter().enumerate() {
            out.push((format!("lstm{l}.w_x"), layer.w_x.data()));
            out.push((format!("lstm{l}.w_h"), layer.w_h.data()));
            out.push((format!("lstm{l}.b"), &layer.b));
        }
        out.push(("head.theta".into(), self.head.theta.data()));
        out.push(("head.bias".into(), &self.head.bias));
        out.push(("head.ln_z".into(), std::slice::from_ref(&self.head.ln_z)));
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> =
            vec![("embedding".into(), self.embedding.data_mut())];
        for (l, layer) in self.lstm.iter_mut().enumerate() {
            out.push((format!("lstm{l}.w_x"), layer.w_x.data_mut()));
            out.push((format!("lstm{l}.w_h"), layer.w_h.data_mut()));
            out.push((format!("lstm{l}.b"), &mut layer.b));
        }
        out.push(("head.theta".into(), self.head.theta.data_mut()));
        out.push(("head.bias".into(), &mut self.head.bias));
        out.push(("head.ln_z".into(), std::slice::from_mut(&mut self.head.ln_z)));
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// `p -= lr * g` across every tensor. In [`ZMode::Constant`] the
    /// partition estimate is left untouched regardless of the gradient.
    pub fn sgd_apply(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        let z_mode = self.head.z_mode;
        let ln_z_before = self.head.ln_z;
        let mut params = self.named_tensors_mut();
        let g = grads.named_tensors();
        if params.len() != g.len() {
            return Err(Error::shape("sgd_apply", "parameter/gradient tensor count mismatch".to_string()));
        }
        for ((pname, p), (gname, gr)) in params.iter_mut().zip(&g) {
            if pname != gname || p.len() != gr.len() {
                return Err(Error::shape(
                    "sgd_apply",
                    format!("tensor {pname} ({}) vs gradient {gname} ({})", p.len(), gr.len()),
                ));
            }
            crate::optim::sgd_step(p, gr, lr);
        }
        if z_mode == ZMode::Constant {
            self.head.ln_z = ln_z_before;
        }
        Ok(())
    }
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            embedding: Matrix::zeros(params.embedding.rows(), params.embedding.cols()),
            lstm: params
                .lstm
                .iter()
                .map(|l| LstmLayerParams::zeros(l.input_size(), l.hidden_size()))
                .collect(),
            head: HeadGrads::zeros(params.head.vocab_size(), params.head.hidden_size()),
        }
    }

    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![("embedding".into(), self.embedding.data())];
        for (l, layer) in self.lstm.iter().enumerate() {
            out.push((format!("lstm{l}.w_x"), layer.w_x.data()));
            out.push((format!("lstm{l}.w_h"), layer.w_h.data()));
            out.push((format!("lstm{l}.b"), &layer.b));
        }
        out.push(("head.theta".into(), self.head.theta.data()));
        out.push(("head.bias".into(), &self.head.bias));
        out.push(("head.ln_z".into(), std::slice::from_ref(&self.head.d_ln_z)));
        out
    }

    /// Mutable flat views for the clipper.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.embedding.data_mut()];
        for layer in self.lstm.iter_mut() {
            out.push(layer.w_x.data_mut());
            out.push(layer.w_h.data_mut());
            out.push(&mut layer.b);
        }
        out.push(self.head.theta.data_mut());
        out.push(&mut self.head.bias);
        out.push(std::slice::from_mut(&mut self.head.d_ln_z));
        out
    }
}

/// What the head should compute on top of the hidden states.
pub enum Objective<'a> {
    /// Exact softmax negative log-likelihood.
    Softmax,
    /// Contrastive loss against `noise`, scoring the provided samples.
    Nce { noise: &'a NoiseDistribution, samples: &'a NoiseSamples },
}

/// Activations kept between [`hidden_forward`] and [`loss_backward`]'s
/// second half.
pub struct ModelCache {
    inputs: Vec<Vec<usize>>,
    unroll: UnrollCache,
    batch: usize,
}

fn check_batch(params: &ModelParams, seq: &[Vec<usize>]) -> Result<(usize, usize)> {
    let b = seq.len();
    if b == 0 || seq[0].is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let t = seq[0].len();
    for row in seq {
        if row.len() != t {
            return Err(Error::shape("model_forward", "ragged batch rows".to_string()));
        }
        if let Some(&bad) = row.iter().find(|&&id| id >= params.arch.vocab) {
            return Err(Error::InvalidArgument(format!(
                "token id {bad} out of vocabulary {}",
                params.arch.vocab
            )));
        }
    }
    Ok((b, t))
}

/// Targets in the same flattened order as the hidden rows (`t * B + b`).
pub fn flatten_targets(targets: &[Vec<usize>]) -> Vec<usize> {
    let b = targets.len();
    let t = targets.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(b * t);
    for step in 0..t {
        for row in targets.iter().take(b) {
            out.push(row[step]);
        }
    }
    out
}

/// Embeds the inputs and runs the LSTM stack. Returns the flattened hidden
/// matrix `(T*B) x H`, the carried state, and the cache for backward.
pub fn hidden_forward(
    params: &ModelParams,
    inputs: &[Vec<usize>],
    init_state: &StackState,
    dropout: &DropoutSpec,
    mode: Mode,
    rng: Option<&mut RngStream>,
) -> Result<(Matrix, StackState, ModelCache)> {
    let (b, t) = check_batch(params, inputs)?;
    let e = params.arch.embed;
    let mut embedded = Vec::with_capacity(t);
    for step in 0..t {
        let mut x = Matrix::zeros(b, e);
        for (row, ids) in inputs.iter().enumerate() {
            x.row_mut(row).copy_from_slice(params.embedding.row(ids[step]));
        }
        embedded.push(x);
    }
    let (outputs, final_state, unroll) =
        stack_forward(&params.lstm, &embedded, init_state, dropout, mode, rng)?;
    let h = params.arch.hidden;
    let mut hs = Matrix::zeros(t * b, h);
    for (step, out) in outputs.iter().enumerate() {
        for row in 0..b {
            hs.row_mut(step * b + row).copy_from_slice(out.row(row));
        }
    }
    let cache = ModelCache { inputs: inputs.to_vec(), unroll, batch: b };
    Ok((hs, final_state, cache))
}

fn head_loss_backward(
    params: &ModelParams,
    hs: &Matrix,
    flat_targets: &[usize],
    objective: &Objective,
) -> Result<(f64, Matrix, HeadLossGrads)> {
    match objective {
        Objective::Softmax => {
            let (loss, dhs, grads) = heads::softmax_loss_backward(&params.head, hs, flat_targets)?;
            Ok((loss, dhs, HeadLossGrads::Dense(grads)))
        }
        Objective::Nce { noise, samples } => {
            let batch = heads::NceBatch { targets: flat_targets.to_vec(), noise: (*samples).clone() };
            let (loss, dhs, grads) = heads::nce_loss_backward(&params.head, hs, &batch, noise)?;
            Ok((loss, dhs, HeadLossGrads::Sparse(grads)))
        }
    }
}

enum HeadLossGrads {
    Dense(HeadGrads),
    Sparse(NceGrads),
}

/// Mean per-position loss of one batch, without gradients (finite
/// differences and quick probes).
#[allow(clippy::too_many_arguments)]
pub fn loss_forward(
    params: &ModelParams,
    inputs: &[Vec<usize>],
    targets: &[Vec<usize>],
    init_state: &StackState,
    dropout: &DropoutSpec,
    mode: Mode,
    rng: Option<&mut RngStream>,
    objective: &Objective,
) -> Result<(f64, StackState)> {
    let (hs, final_state, _) = hidden_forward(params, inputs, init_state, dropout, mode, rng)?;
    let flat = flatten_targets(targets);
    if flat.len() != hs.rows() {
        return Err(Error::shape("loss_forward", "targets do not match inputs".to_string()));
    }
    let loss = match objective {
        Objective::Softmax => heads::softmax_loss_backward(&params.head, &hs, &flat)?.0,
        Objective::Nce { noise, samples } => {
            let batch = heads::NceBatch { targets: flat, noise: (*samples).clone() };
            heads::nce_loss(&params.head, &hs, &batch, noise)?
        }
    };
    Ok((loss, final_state))
}

/// Full forward/backward over one batch: mean per-position loss, dense
/// gradients for every tensor, and the carried state.
#[allow(clippy::too_many_arguments)]
pub fn loss_backward(
    params: &ModelParams,
    inputs: &[Vec<usize>],
    targets: &[Vec<usize>],
    init_state: &StackState,
    dropout: &DropoutSpec,
    mode: Mode,
    rng: Option<&mut RngStream>,
    objective: &Objective,
) -> Result<(f64, Gradients, StackState)> {
    let (hs, final_state, cache) = hidden_forward(params, inputs, init_state, dropout, mode, rng)?;
    let flat = flatten_targets(targets);
    if flat.len() != hs.rows() {
        return Err(Error::shape("loss_backward", "targets do not match inputs".to_string()));
    }
    let (loss, dhs, head_grads) = head_loss_backward(params, &hs, &flat, objective)?;

    let b = cache.batch;
    let t = cache.unroll.unroll_len();
    let h = params.arch.hidden;
    let mut grad_outputs = Vec::with_capacity(t);
    for step in 0..t {
        let mut g = Matrix::zeros(b, h);
        for row in 0..b {
            g.row_mut(row).copy_from_slice(dhs.row(step * b + row));
        }
        grad_outputs.push(g);
    }
    let (lstm_grads, grad_inputs, _) = stack_backward(&params.lstm, &cache.unroll, &grad_outputs)?;

    let mut grads = Gradients::zeros_like(params);
    grads.lstm = lstm_grads;
    match head_grads {
        HeadLossGrads::Dense(d) => grads.head = d,
        HeadLossGrads::Sparse(s) => s.scatter_into(&mut grads.head),
    }
    // Embedding rows receive the input gradients of the steps where their
    // word appeared.
    for (step, gi) in grad_inputs.iter().enumerate() {
        for (row, ids) in cache.inputs.iter().enumerate() {
            let dst = grads.embedding.row_mut(ids[step]);
            for (d, s) in dst.iter_mut().zip(gi.row(row)) {
                *d += s;
            }
        }
    }
    Ok((loss, grads, final_state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseKind;
    use crate::oracle::finite_diff_vec;

    fn tiny_arch() -> NetworkArch {
        NetworkArch { vocab: 6, embed: 3, hidden: 4, layers: 2 }
    }

    fn tiny_model(seed: u64, z_mode: ZMode) -> ModelParams {
        let mut rng = RngStream::new(seed).split("init");
        ModelParams::init(tiny_arch(), &InitHeuristic::Explicit { lo: -0.6, hi: 0.6 }, z_mode, &mut rng)
            .unwrap()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = tiny_model(5, ZMode::Constant);
        let b = tiny_model(5, ZMode::Constant);
        let c = tiny_model(6, ZMode::Constant);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (name, t) in a.named_tensors() {
            if name.ends_with(".b") || name == "head.bias" || name == "head.ln_z" {
                assert!(t.iter().all(|&v| v == 0.0), "{name} should start at zero");
            } else {
                assert!(t.iter().all(|&v| (-0.6..0.6).contains(&v)), "{name} out of range");
                assert!(t.iter().any(|&v| v != 0.0));
            }
        }
    }

    #[test]
    fn init_resolves_fan_from_hidden_size() {
        let mut rng = RngStream::new(9).split("init");
        let arch = NetworkArch { vocab: 50, embed: 7, hidden: 200, layers: 1 };
        let m = ModelParams::init(arch, &InitHeuristic::Glorot, ZMode::Constant, &mut rng).unwrap();
        // Range sqrt(6)/sqrt(400) applies to every matrix, embedding
        // included, even though its own fan differs.
        let r = 0.1224744871391589;
        assert!(m.embedding.data().iter().all(|&v| v.abs() <= r));
        let near_edge = m.embedding.data().iter().filter(|v| v.abs() > 0.9 * r).count();
        assert!(near_edge > 0, "range looks narrower than the recurrent fan");
    }

    #[test]
    fn named_tensors_align_and_count() {
        let m = tiny_model(7, ZMode::Learned);
        let g = Gradients::zeros_like(&m);
        let pn = m.named_tensors();
        let gn = g.named_tensors();
        assert_eq!(pn.len(), gn.len());
        for ((a, at), (b, bt)) in pn.iter().zip(&gn) {
            assert_eq!(a, b);
            assert_eq!(at.len(), bt.len());
        }
        let mut names: Vec<&String> = pn.iter().map(|(n, _)| n).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), pn.len(), "duplicate tensor names");
        // V=6, E=3, H=4: embed 18; layer0 48+64+16; layer1 64+64+16;
        // head 24+6+1.
        assert_eq!(m.num_params(), 18 + 128 + 144 + 31);
    }

    #[test]
    fn sgd_apply_moves_every_tensor_but_respects_constant_z() {
        let mut m = tiny_model(11, ZMode::Constant);
        let mut g = Gradients::zeros_like(&m);
        for t in g.tensors_mut() {
            for v in t.iter_mut() {
                *v = 1.0;
            }
        }
        let before = m.clone();
        m.sgd_apply(&g, 0.5).unwrap();
        assert!((m.embedding.get(0, 0) - (before.embedding.get(0, 0) - 0.5)).abs() < 1e-15);
        assert!((m.lstm[1].b[3] - (before.lstm[1].b[3] - 0.5)).abs() < 1e-15);
        assert_eq!(m.head.ln_z, before.head.ln_z, "constant mode must pin ln_z");

        let mut learned = tiny_model(11, ZMode::Learned);
        learned.sgd_apply(&g, 0.5).unwrap();
        assert!((learned.head.ln_z + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_params_softmax_loss_is_ln_vocab() {
        let arch = tiny_arch();
        let m = ModelParams {
            arch,
            embedding: Matrix::zeros(arch.vocab, arch.embed),
            lstm: vec![
                LstmLayerParams::zeros(arch.embed, arch.hidden),
                LstmLayerParams::zeros(arch.hidden, arch.hidden),
            ],
            head: HeadParams::zeros(arch.vocab, arch.hidden, ZMode::Constant),
        };
        let inputs = vec![vec![0, 1], vec![2, 3]];
        let targets = vec![vec![1, 2], vec![3, 4]];
        let state = StackState::zeros(&m.lstm, 2);
        let (loss, _) = loss_forward(
            &m,
            &inputs,
            &targets,
            &state,
            &DropoutSpec::none(),
            Mode::Eval,
            None,
            &Objective::Softmax,
        )
        .unwrap();
        assert!((loss - (arch.vocab as f64).ln()).abs() < 1e-12);
    }

    /// Model with every tensor (biases included) in generic position plus a
    /// nonzero carried state, so no gradient entry sits near the
    /// finite-difference noise floor.
    fn generic_model(seed: u64, z_mode: ZMode) -> (ModelParams, StackState) {
        let mut rng = RngStream::new(seed).split("init");
        let mut m = tiny_model(seed, z_mode);
        for (_, t) in m.named_tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.uniform(-0.5, 0.5);
            }
        }
        let mut state = StackState::zeros(&m.lstm, 2);
        for layer in &mut state.layers {
            for v in layer.h.data_mut().iter_mut().chain(layer.c.data_mut()) {
                *v = rng.uniform(-0.8, 0.8);
            }
        }
        (m, state)
    }

    fn fd_all_tensors(m: &ModelParams, loss_of: impl Fn(&ModelParams) -> f64, grads: &Gradients) {
        let names: Vec<String> = m.named_tensors().into_iter().map(|(n, _)| n).collect();
        for name in names {
            let base: Vec<f64> = {
                let nt = m.named_tensors();
                nt.iter().find(|(n, _)| *n == name).unwrap().1.to_vec()
            };
            let numeric = finite_diff_vec(
                |v| {
                    let mut probe = m.clone();
                    {
                        let mut nt = probe.named_tensors_mut();
                        let slot = nt.iter_mut().find(|(n, _)| *n == name).unwrap();
                        slot.1.copy_from_slice(v);
                    }
                    loss_of(&probe)
                },
                &base,
                1e-5,
            )
            .unwrap();
            let gt = grads.named_tensors();
            let analytic = gt.iter().find(|(n, _)| *n == name).unwrap().1;
            for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
                assert!(rel < 1e-4, "{name}[{i}]: analytic {a}, numeric {n}, rel {rel}");
            }
        }
    }

    #[test]
    fn softmax_model_gradients_match_fd() {
        let (m, state) = generic_model(13, ZMode::Constant);
        let inputs = vec![vec![0, 5, 2], vec![3, 1, 4]];
        let targets = vec![vec![5, 2, 1], vec![1, 4, 0]];
        let (_, grads, _) = loss_backward(
            &m,
            &inputs,
            &targets,
            &state,
            &DropoutSpec::none(),
            Mode::Eval,
            None,
            &Objective::Softmax,
        )
        .unwrap();
        fd_all_tensors(
            &m,
            |p| {
                loss_forward(
                    p,
                    &inputs,
                    &targets,
                    &state,
                    &DropoutSpec::none(),
                    Mode::Eval,
                    None,
                    &Objective::Softmax,
                )
                .unwrap()
                .0
            },
            &grads,
        );
    }

    #[test]
    fn nce_model_gradients_match_fd() {
        let (m, state) = generic_model(17, ZMode::Learned);
        let inputs = vec![vec![0, 5, 2], vec![3, 1, 4]];
        let targets = vec![vec![5, 2, 1], vec![1, 4, 0]];
        let noise =
            NoiseDistribution::build(NoiseKind::Unigram { alpha: 1.0 }, &[6, 5, 4, 3, 2, 1]).unwrap();
        let samples = NoiseSamples::Shared(vec![2, 0, 4, 2]);
        let objective = Objective::Nce { noise: &noise, samples: &samples };
        let (_, grads, _) = loss_backward(
            &m,
            &inputs,
            &targets,
            &state,
            &DropoutSpec::none(),
            Mode::Eval,
            None,
            &objective,
        )
        .unwrap();
        fd_all_tensors(
            &m,
            |p| {
                loss_forward(
                    p,
                    &inputs,
                    &targets,
                    &state,
                    &DropoutSpec::none(),
                    Mode::Eval,
                    None,
                    &Objective::Nce { noise: &noise, samples: &samples },
                )
                .unwrap()
                .0
            },
            &grads,
        );
    }

    #[test]
    fn input_validation() {
        let m = tiny_model(19, ZMode::Constant);
        let state = StackState::zeros(&m.lstm, 1);
        let bad_id = loss_forward(
            &m,
            &[vec![99]],
            &[vec![0]],
            &state,
            &DropoutSpec::none(),
            Mode::Eval,
            None,
            &Objective::Softmax,
        );
        assert!(bad_id.is_err());
        let ragged = loss_forward(
            &m,
            &[vec![0, 1], vec![2]],
            &[vec![1, 2], vec![3]],
            &StackState::zeros(&m.lstm, 2),
            &DropoutSpec::none(),
            Mode::Eval,
            None,
            &Objective::Softmax,
        );
        assert!(ragged.is_err());
    }

    #[test]
    fn flatten_orders_step_major() {
        let flat = flatten_targets(&[vec![10, 11, 12], vec![20, 21, 22]]);
        assert_eq!(flat, vec![10, 20, 11, 21, 12, 22]);
    }
}
