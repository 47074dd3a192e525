//! LSTM cell and two-layer unrolled stack with manual forward/backward
//! passes (truncated BPTT) and inverted dropout on the non-recurrent
//! connections.
//!
//! The cell is the standard forget-gate LSTM, gate order `(i, f, g, o)`:
//!
//! ```text
//! i = sigma(Wx_i x + Wh_i h + b_i)      f = sigma(Wx_f x + Wh_f h + b_f)
//! g = tanh (Wx_g x + Wh_g h + b_g)      o = sigma(Wx_o x + Wh_o h + b_o)
//! c' = f .* c + i .* g                  h' = o .* tanh(c')
//! ```
//!
//! No peepholes, no forget-bias offset. Dropout masks the layer inputs and
//! the top-layer output only; the recurrent `h -> h` path is never masked.
//! Masks are redrawn per time step and scale survivors by `1/(1-p)` so the
//! eval path runs unscaled.

use crate::error::{Error, Result};
use crate::tensor::{Matrix, RngStream};

/// Parameters of one LSTM layer. Also used as the gradient container for
/// that layer (identical shapes).
///
/// `w_x` is `[4H x E_in]`, `w_h` is `[4H x H]`, `b` is `[4H]`, with the four
/// `H`-sized blocks in gate order `(i, f, g, o)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayerParams {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmLayerParams {
            w_x: Matrix::zeros(4 * hidden_size, input_size),
            w_h: Matrix::zeros(4 * hidden_size, hidden_size),
            b: vec![0.0; 4 * hidden_size],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_h.cols()
    }

    pub fn input_size(&self) -> usize {
        self.w_x.cols()
    }

    fn check_shapes(&self) -> Result<()> {
        let h = self.hidden_size();
        if self.w_x.rows() != 4 * h || self.w_h.rows() != 4 * h || self.b.len() != 4 * h {
            return Err(Error::shape(
                "lstm_layer",
                format!(
                    "w_x {:?}, w_h {:?}, b {} inconsistent with H={}",
                    self.w_x.shape(),
                    self.w_h.shape(),
                    self.b.len(),
                    h
                ),
            ));
        }
        Ok(())
    }
}

/// Hidden and cell state of one layer, batched: both `[B x H]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub h: Matrix,
    pub c: Matrix,
}

impl LayerState {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        LayerState {
            h: Matrix::zeros(batch, hidden),
            c: Matrix::zeros(batch, hidden),
        }
    }
}

/// Per-layer states for the whole stack.
#[derive(Clone, Debug, PartialEq)]
pub struct StackState {
    pub layers: Vec<LayerState>,
}

impl StackState {
    pub fn zeros(layer_params: &[LstmLayerParams], batch: usize) -> Self {
        StackState {
            layers: layer_params
                .iter()
                .map(|p| LayerState::zeros(batch, p.hidden_size()))
                .collect(),
        }
    }
}

/// Dropout rate for the non-recurrent connections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutSpec {
    rate: f64,
}

impl DropoutSpec {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        Ok(DropoutSpec { rate })
    }

    pub fn none() -> Self {
        DropoutSpec { rate: 0.0 }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }

    /// Inverted-dropout mask: entries are `0` with probability `p`, else
    /// `1/(1-p)`.
    pub fn draw_mask(&self, rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
        let keep_scale = 1.0 / (1.0 - self.rate);
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data_mut() {
            *v = if rng.next_f64() < self.rate { 0.0 } else { keep_scale };
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Everything the backward pass needs to replay one cell step.
#[derive(Clone, Debug)]
pub struct CellCache {
    x: Matrix,
    h_prev: Matrix,
    c_prev: Matrix,
    gate_i: Matrix,
    gate_f: Matrix,
    gate_g: Matrix,
    gate_o: Matrix,
    tanh_c_new: Matrix,
}

struct StepCache {
    /// One cache per layer, bottom to top. `CellCache.x` holds the
    /// post-dropout layer input.
    cells: Vec<CellCache>,
    /// Input masks per layer (None when dropout inactive).
    input_masks: Option<Vec<Matrix>>,
    /// Mask applied to the top-layer output.
    output_mask: Option<Matrix>,
}

/// Stored activations for `T` unrolled steps; consumed by [`stack_backward`].
pub struct UnrollCache {
    steps: Vec<StepCache>,
    batch: usize,
}

impl UnrollCache {
    pub fn unroll_len(&self) -> usize {
        self.steps.len()
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

fn mul_elem(y: &mut Matrix, m: &Matrix) {
    debug_assert_eq!(y.shape(), m.shape());
    for (a, b) in y.data_mut().iter_mut().zip(m.data()) {
        *a *= b;
    }
}

fn mul_elem_into(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    mul_elem(&mut out, b);
    out
}

/// One batched LSTM cell step.
///
/// `x` is `[B x E]`, the state matrices `[B x H]`. Returns the new state
/// (whose `h` is the step output) and the cache for the backward pass.
pub fn lstm_cell_forward(
    params: &LstmLayerParams,
    x: &Matrix,
    state: &LayerState,
) -> Result<(LayerState, CellCache)> {
    params.check_shapes()?;
    let h = params.hidden_size();
    let batch = x.rows();
    if x.cols() != params.input_size() || state.h.shape() != (batch, h) || state.c.shape() != (batch, h) {
        return Err(Error::shape(
            "lstm_cell_forward",
            format!(
                "x {:?}, h {:?}, c {:?} vs E={}, H={}",
                x.shape(),
                state.h.shape(),
                state.c.shape(),
                params.input_size(),
                h
            ),
        ));
    }

    // Pre-activations for all four gates at once: [B x 4H].
    let mut pre = x.matmul_nt(&params.w_x)?;
    let rec = state.h.matmul_nt(&params.w_h)?;
    pre.add_assign(&rec)?;
    for r in 0..batch {
        for (p, bias) in pre.row_mut(r).iter_mut().zip(&params.b) {
            *p += bias;
        }
    }

    let mut gate_i = Matrix::zeros(batch, h);
    let mut gate_f = Matrix::zeros(batch, h);
    let mut gate_g = Matrix::zeros(batch, h);
    let mut gate_o = Matrix::zeros(batch, h);
    let mut c_new = Matrix::zeros(batch, h);
    let mut tanh_c_new = Matrix::zeros(batch, h);
    let mut h_new = Matrix::zeros(batch, h);

    for r in 0..batch {
        let pre_row = pre.row(r);
        for j in 0..h {
            let i = sigmoid(pre_row[j]);
            let f = sigmoid(pre_row[h + j]);
            let g = pre_row[2 * h + j].tanh();
            let o = sigmoid(pre_row[3 * h + j]);
            let c = f * state.c.get(r, j) + i * g;
            let tc = c.tanh();
            gate_i.set(r, j, i);
            gate_f.set(r, j, f);
            gate_g.set(r, j, g);
            gate_o.set(r, j, o);
            c_new.set(r, j, c);
            tanh_c_new.set(r, j, tc);
            h_new.set(r, j, o * tc);
        }
    }

    let cache = CellCache {
        x: x.clone(),
        h_prev: state.h.clone(),
        c_prev: state.c.clone(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        tanh_c_new,
    };
    Ok((LayerState { h: h_new, c: c_new }, cache))
}

/// Reverse-mode step for one cell: given `dL/dh'` and `dL/dc'`, produces the
/// parameter gradients and the gradients flowing to `x`, `h`, `c`.
pub fn lstm_cell_backward(
    params: &LstmLayerParams,
    cache: &CellCache,
    dh: &Matrix,
    dc: &Matrix,
) -> Result<(LstmLayerParams, Matrix, Matrix, Matrix)> {
    let h = params.hidden_size();
    let batch = cache.x.rows();
    if dh.shape() != (batch, h) || dc.shape() != (batch, h) {
        return Err(Error::shape(
            "lstm_cell_backward",
            format!("dh {:?}, dc {:?} vs B={}, H={}", dh.shape(), dc.shape(), batch, h),
        ));
    }

    // Pre-activation gradients, gate order (i, f, g, o): [B x 4H].
    let mut dpre = Matrix::zeros(batch, 4 * h);
    let mut dc_prev = Matrix::zeros(batch, h);
    for r in 0..batch {
        for j in 0..h {
            let i = cache.gate_i.get(r, j);
            let f = cache.gate_f.get(r, j);
            let g = cache.gate_g.get(r, j);
            let o = cache.gate_o.get(r, j);
            let tc = cache.tanh_c_new.get(r, j);
            let dh_rj = dh.get(r, j);

            let d_o = dh_rj * tc;
            let dc_total = dc.get(r, j) + dh_rj * o * (1.0 - tc * tc);
            let d_i = dc_total * g;
            let d_f = dc_total * cache.c_prev.get(r, j);
            let d_g = dc_total * i;
            dc_prev.set(r, j, dc_total * f);

            let row = dpre.row_mut(r);
            row[j] = d_i * i * (1.0 - i);
            row[h + j] = d_f * f * (1.0 - f);
            row[2 * h + j] = d_g * (1.0 - g * g);
            row[3 * h + j] = d_o * o * (1.0 - o);
        }
    }

    let grads = LstmLayerParams {
        w_x: dpre.matmul_tn(&cache.x)?,
        w_h: dpre.matmul_tn(&cache.h_prev)?,
        b: dpre.col_sums(),
    };
    let dx = dpre.matmul(&params.w_x)?;
    let dh_prev = dpre.matmul(&params.w_h)?;
    Ok((grads, dx, dh_prev, dc_prev))
}

/// Unrolled forward pass over the whole stack.
///
/// `inputs` holds one `[B x E]` matrix per time step. The returned outputs
/// are the (possibly dropout-masked) top-layer hidden states per step, and
/// the final state carries `h, c` to the next batch. In train mode with an
/// active dropout rate an RNG stream is required; eval mode never draws.
pub fn stack_forward(
    layers: &[LstmLayerParams],
    inputs: &[Matrix],
    init_state: &StackState,
    dropout: &DropoutSpec,
    mode: Mode,
    mut rng: Option<&mut RngStream>,
) -> Result<(Vec<Matrix>, StackState, UnrollCache)> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("stack_forward needs T >= 1 steps".into()));
    }
    if layers.is_empty() {
        return Err(Error::InvalidArgument("stack_forward needs at least one layer".into()));
    }
    if init_state.layers.len() != layers.len() {
        return Err(Error::shape(
            "stack_forward",
            format!("{} layers vs {} states", layers.len(), init_state.layers.len()),
        ));
    }
    let batch = inputs[0].rows();
    let dropout_active = dropout.is_active() && mode == Mode::Train;
    if dropout_active && rng.is_none() {
        return Err(Error::InvalidArgument(
            "train-mode dropout needs an RNG stream".into(),
        ));
    }

    let mut state = init_state.clone();
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut steps = Vec::with_capacity(inputs.len());

    for x_t in inputs {
        if x_t.rows() != batch {
            return Err(Error::shape("stack_forward", "inconsistent batch size across steps".to_string()));
        }
        let mut cells = Vec::with_capacity(layers.len());
        let mut input_masks = if dropout_active { Some(Vec::with_capacity(layers.len())) } else { None };
        let mut layer_input = x_t.clone();

        for (l, params) in layers.iter().enumerate() {
            if let Some(masks) = input_masks.as_mut() {
                let rng = rng.as_deref_mut().expect("checked above");
                let mask = dropout.draw_mask(layer_input.rows(), layer_input.cols(), rng);
                mul_elem(&mut layer_input, &mask);
                masks.push(mask);
            }
            let (new_state, cache) = lstm_cell_forward(params, &layer_input, &state.layers[l])?;
            layer_input = new_state.h.clone();
            state.layers[l] = new_state;
            cells.push(cache);
        }

        let output_mask = if dropout_active {
            let rng = rng.as_deref_mut().expect("checked above");
            let mask = dropout.draw_mask(layer_input.rows(), layer_input.cols(), rng);
            mul_elem(&mut layer_input, &mask);
            Some(mask)
        } else {
            None
        };

        outputs.push(layer_input);
        steps.push(StepCache { cells, input_masks, output_mask });
    }

    Ok((outputs, state, UnrollCache { steps, batch }))
}

/// Reverse-mode pass over a cached unroll.
///
/// Gradients are truncated at the batch boundary: the incoming state is
/// treated as a constant, and its gradient is returned but never propagated
/// further back. Returns per-layer parameter gradients, per-step input
/// gradients, and the gradient w.r.t. the initial state.
pub fn stack_backward(
    layers: &[LstmLayerParams],
    cache: &UnrollCache,
    grad_outputs: &[Matrix],
) -> Result<(Vec<LstmLayerParams>, Vec<Matrix>, StackState)> {
    let t_len = cache.steps.len();
    if grad_outputs.len() != t_len {
        return Err(Error::shape(
            "stack_backward",
            format!("{} grad steps vs {} cached", grad_outputs.len(), t_len),
        ));
    }
    let n_layers = layers.len();
    let batch = cache.batch;
    let top_h = layers[n_layers - 1].hidden_size();

    let mut grads: Vec<LstmLayerParams> = layers
        .iter()
        .map(|p| LstmLayerParams::zeros(p.input_size(), p.hidden_size()))
        .collect();
    // dL/dh and dL/dc flowing backwards in time, per layer.
    let mut dh_carry: Vec<Matrix> = layers
        .iter()
        .map(|p| Matrix::zeros(batch, p.hidden_size()))
        .collect();
    let mut dc_carry = dh_carry.clone();
    let mut grad_inputs = vec![Matrix::zeros(0, 0); t_len];

    for t in (0..t_len).rev() {
        let step = &cache.steps[t];
        if grad_outputs[t].shape() != (batch, top_h) {
            return Err(Error::shape(
                "stack_backward",
                format!("grad_outputs[{t}] {:?} vs ({batch}, {top_h})", grad_outputs[t].shape()),
            ));
        }
        // Gradient arriving from the head at the top layer, through the
        // output mask when present.
        let mut d_from_above = match &step.output_mask {
            Some(mask) => mul_elem_into(&grad_outputs[t], mask),
            None => grad_outputs[t].clone(),
        };

        for l in (0..n_layers).rev() {
            let mut dh = dh_carry[l].clone();
            dh.add_assign(&d_from_above)?;
            let (g, dx, dh_prev, dc_prev) =
                lstm_cell_backward(&layers[l], &step.cells[l], &dh, &dc_carry[l])?;
            grads[l].w_x.add_assign(&g.w_x)?;
            grads[l].w_h.add_assign(&g.w_h)?;
            for (a, b) in grads[l].b.iter_mut().zip(&g.b) {
                *a += b;
            }
            dh_carry[l] = dh_prev;
            dc_carry[l] = dc_prev;
            // dx is w.r.t. the post-dropout input of layer l.
            d_from_above = match step.input_masks.as_ref() {
                Some(masks) => mul_elem_into(&dx, &masks[l]),
                None => dx,
            };
        }
        grad_inputs[t] = d_from_above;
    }

    let grad_init_state = StackState {
        layers: dh_carry
            .into_iter()
            .zip(dc_carry)
            .map(|(h, c)| LayerState { h, c })
            .collect(),
    };
    Ok((grads, grad_inputs, grad_init_state))
}
