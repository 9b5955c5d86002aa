use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{add_column_sums, add_row_bias, gemm, matmul, matmul_nt, matmul_tn};
use crate::error::{Error, Result};
use crate::fairness::QValues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// LSTM memory layer, then one ReLU feedforward layer.
    Recurrent,
    /// Two ReLU feedforward layers over the flattened history.
    Feedforward,
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recurrent" | "rnn" => Ok(Architecture::Recurrent),
            "feedforward" | "fnn" => Ok(Architecture::Feedforward),
            other => Err(Error::InvalidArgument(format!("unknown architecture {other:?}"))),
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::Recurrent => "recurrent",
            Architecture::Feedforward => "feedforward",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub architecture: Architecture,
    /// Width of one history entry.
    pub input_width: usize,
    /// Number of history entries per state.
    pub history_len: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl NetworkShape {
    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.history_len == 0 || self.hidden == 0 || self.outputs == 0 {
            return Err(Error::InvalidArgument(format!("degenerate network shape {self:?}")));
        }
        Ok(())
    }

    /// Values per state: `history_len · input_width`.
    pub fn state_len(&self) -> usize {
        self.history_len * self.input_width
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Where each weight matrix and bias lives in the flat parameter vector.
/// Weight matrices are stored `[fan_in][fan_out]`; LSTM gate blocks are
/// ordered input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    tensors: Vec<TensorSpec>,
    len: usize,
}

impl Layout {
    fn new(shape: &NetworkShape) -> Self {
        let (i, h, o) = (shape.input_width, shape.hidden, shape.outputs);
        let dims: Vec<(&'static str, usize, usize)> = match shape.architecture {
            Architecture::Recurrent => vec![
                ("lstm.w_input", i, 4 * h),
                ("lstm.w_hidden", h, 4 * h),
                ("lstm.bias", 1, 4 * h),
                ("dense.weight", h, h),
                ("dense.bias", 1, h),
                ("out.weight", h, o),
                ("out.bias", 1, o),
            ],
            Architecture::Feedforward => vec![
                ("dense1.weight", shape.state_len(), h),
                ("dense1.bias", 1, h),
                ("dense2.weight", h, h),
                ("dense2.bias", 1, h),
                ("out.weight", h, o),
                ("out.bias", 1, o),
            ],
        };
        let mut offset = 0;
        let tensors = dims
            .into_iter()
            .map(|(name, rows, cols)| {
                let t = TensorSpec {
                    name,
                    rows,
                    cols,
                    offset,
                };
                offset += rows * cols;
                t
            })
            .collect();
        Layout {
            tensors,
            len: offset,
        }
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn get(&self, name: &str) -> &TensorSpec {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("no tensor {name}"))
    }
}

/// A batch of states, `[sample][history entry][feature]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBatch {
    pub samples: usize,
    pub data: Vec<f64>,
}

/// Activations kept by [`QNetwork::forward_train`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    samples: usize,
    inputs: Vec<f64>,
    lstm: Option<LstmCache>,
    /// Input to each dense layer, in order (after ReLU where applicable).
    layer_inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl ForwardCache {
    /// Row-major `samples × outputs`.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

#[derive(Debug, Clone)]
struct LstmCache {
    /// Post-activation gates per step, `[step][sample][4h]`.
    gates: Vec<f64>,
    /// Cell states, `[step + 1][sample][h]` with step 0 all zeros.
    cells: Vec<f64>,
    /// Hidden states, same layout as `cells`.
    hiddens: Vec<f64>,
    /// `tanh` of cell states per step, `[step][sample][h]`.
    tanh_cells: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Q-network: parameters plus the architecture that interprets them.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    shape: NetworkShape,
    layout: Layout,
    params: Vec<f64>,
}

/// Initial LSTM forget-gate bias.
const FORGET_BIAS: f64 = 1.0;

impl QNetwork {
    /// All-zero parameters.
    pub fn zeros(shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        let layout = Layout::new(&shape);
        Ok(QNetwork {
            params: vec![0.0; layout.len()],
            layout,
            shape,
        })
    }

    /// Weights uniform in `±1/√fan_in`, biases zero except the LSTM forget
    /// gate, which starts at [`FORGET_BIAS`].
    pub fn init(shape: NetworkShape, rng: &mut impl Rng) -> Result<Self> {
        let mut net = QNetwork::zeros(shape)?;
        let lstm_fan_in = net.shape.input_width + net.shape.hidden;
        for t in net.layout.tensors.clone() {
            let fan_in = match t.name {
                "lstm.w_input" | "lstm.w_hidden" => lstm_fan_in,
                n if n.ends_with("weight") => t.rows,
                _ => continue,
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut net.params[t.range()] {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        if net.shape.architecture == Architecture::Recurrent {
            let h = net.shape.hidden;
            let bias = net.layout.get("lstm.bias").offset;
            net.params[bias + h..bias + 2 * h].fill(FORGET_BIAS);
        }
        Ok(net)
    }

    /// Rebuilds a network from a flat parameter vector in [`Layout`] order.
    pub fn from_parameters(shape: NetworkShape, params: Vec<f64>) -> Result<Self> {
        let mut net = QNetwork::zeros(shape)?;
        if params.len() != net.params.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", net.params.len()),
                got: params.len().to_string(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Parameters of one named tensor. Panics on an unknown name.
    pub fn tensor(&self, name: &str) -> &[f64] {
        &self.params[self.layout.get(name).range()]
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [f64] {
        let range = self.layout.get(name).range();
        &mut self.params[range]
    }

    /// Makes `self` an independent copy of `online`.
    pub fn sync_from(&mut self, online: &QNetwork) -> Result<()> {
        if self.shape != online.shape {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.shape),
                got: format!("{:?}", online.shape),
            });
        }
        self.params.copy_from_slice(&online.params);
        Ok(())
    }

    fn check_batch(&self, batch: &StateBatch) -> Result<()> {
        let expected = batch.samples * self.shape.state_len();
        if batch.samples == 0 || batch.data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{} samples x {} values", batch.samples, self.shape.state_len()),
                got: format!("{} values", batch.data.len()),
            });
        }
        Ok(())
    }

    /// Outputs for a batch, row-major `samples × outputs`. The recurrent
    /// memory starts from zero on every call.
    pub fn forward(&self, batch: &StateBatch) -> Result<Vec<f64>> {
        Ok(self.forward_train(batch)?.outputs)
    }

    /// Q-values of a single encoded state, reshaped to `nodes × actions`.
    pub fn q_values(&self, state: &[f64], nodes: usize) -> Result<QValues> {
        let out = self.forward(&StateBatch {
            samples: 1,
            data: state.to_vec(),
        })?;
        let actions = self.shape.outputs / nodes.max(1);
        QValues::from_vec(nodes, actions, out)
    }

    /// Forward pass that keeps the activations needed by [`QNetwork::backward`].
    pub fn forward_train(&self, batch: &StateBatch) -> Result<ForwardCache> {
        self.check_batch(batch)?;
        let b = batch.samples;
        let h = self.shape.hidden;
        let (lstm, first_input) = match self.shape.architecture {
            Architecture::Recurrent => {
                let cache = self.lstm_forward(&batch.data, b);
                let last = cache.hiddens[self.shape.history_len * b * h..].to_vec();
                (Some(cache), last)
            }
            Architecture::Feedforward => (None, batch.data.clone()),
        };

        let layers = self.dense_layers();
        let mut layer_inputs = Vec::with_capacity(layers.len());
        let mut x = first_input;
        for (idx, layer) in layers.iter().enumerate() {
            let w = self.layout.get(layer.weight);
            let bias = &self.params[self.layout.get(layer.bias).range()];
            let mut y = vec![0.0; b * w.cols];
            matmul(b, w.rows, w.cols, &x, &self.params[w.range()], 0.0, &mut y);
            add_row_bias(&mut y, bias);
            if idx + 1 < layers.len() {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            layer_inputs.push(std::mem::replace(&mut x, y));
        }
        Ok(ForwardCache {
            samples: b,
            inputs: batch.data.clone(),
            lstm,
            layer_inputs,
            outputs: x,
        })
    }

    /// Gradient of a loss with respect to every parameter, given the loss
    /// gradient with respect to the outputs (`samples × outputs`).
    pub fn backward(&self, cache: &ForwardCache, d_outputs: &[f64]) -> Result<Vec<f64>> {
        let b = cache.samples;
        if d_outputs.len() != b * self.shape.outputs {
            return Err(Error::ShapeMismatch {
                expected: format!("{} output gradients", b * self.shape.outputs),
                got: d_outputs.len().to_string(),
            });
        }
        if d_outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("output gradient"));
        }
        let mut grads = vec![0.0; self.params.len()];
        let layers = self.dense_layers();
        let mut delta = d_outputs.to_vec();
        for (idx, layer) in layers.iter().enumerate().rev() {
            let w = self.layout.get(layer.weight).clone();
            let bias = self.layout.get(layer.bias).clone();
            let input = &cache.layer_inputs[idx];
            matmul_tn(w.rows, b, w.cols, input, &delta, 1.0, &mut grads[w.range()]);
            add_column_sums(&mut grads[bias.range()], &delta);
            let needs_input_grad = idx > 0 || self.shape.architecture == Architecture::Recurrent;
            if !needs_input_grad {
                break;
            }
            let mut d_in = vec![0.0; b * w.rows];
            matmul_nt(b, w.cols, w.rows, &delta, &self.params[w.range()], 0.0, &mut d_in);
            if idx > 0 {
                // Input came out of a ReLU.
                for (d, x) in d_in.iter_mut().zip(input) {
                    if *x <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = d_in;
        }
        if let Some(lstm) = &cache.lstm {
            self.lstm_backward(lstm, &cache.inputs, b, &delta, &mut grads);
        }
        if grads.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(grads)
    }

    fn dense_layers(&self) -> &'static [DenseLayer] {
        match self.shape.architecture {
            Architecture::Recurrent => &[
                DenseLayer {
                    weight: "dense.weight",
                    bias: "dense.bias",
                },
                DenseLayer {
                    weight: "out.weight",
                    bias: "out.bias",
                },
            ],
            Architecture::Feedforward => &[
                DenseLayer {
                    weight: "dense1.weight",
                    bias: "dense1.bias",
                },
                DenseLayer {
                    weight: "dense2.weight",
                    bias: "dense2.bias",
                },
                DenseLayer {
                    weight: "out.weight",
                    bias: "out.bias",
                },
            ],
        }
    }

    fn lstm_forward(&self, inputs: &[f64], b: usize) -> LstmCache {
        let (steps, iw, h) = (self.shape.history_len, self.shape.input_width, self.shape.hidden);
        let g4 = 4 * h;
        let wx = &self.params[self.layout.get("lstm.w_input").range()];
        let wh = &self.params[self.layout.get("lstm.w_hidden").range()];
        let bias = &self.params[self.layout.get("lstm.bias").range()];

        let mut cache = LstmCache {
            gates: vec![0.0; steps * b * g4],
            cells: vec![0.0; (steps + 1) * b * h],
            hiddens: vec![0.0; (steps + 1) * b * h],
            tanh_cells: vec![0.0; steps * b * h],
        };
        let row_stride = steps * iw;
        for t in 0..steps {
            let z = &mut cache.gates[t * b * g4..(t + 1) * b * g4];
            for row in z.chunks_exact_mut(g4) {
                row.copy_from_slice(bias);
            }
            // x_t of every sample: rows strided by the full state length.
            gemm(b, iw, g4, &inputs[t * iw..], (row_stride, 1), wx, (g4, 1), 1.0, z, g4);
            let h_prev = &cache.hiddens[t * b * h..(t + 1) * b * h];
            matmul(b, h, g4, h_prev, wh, 1.0, z);

            let (prev, next) = cache.cells.split_at_mut((t + 1) * b * h);
            let c_prev = &prev[t * b * h..];
            let c_next = &mut next[..b * h];
            let h_next = &mut cache.hiddens[(t + 1) * b * h..(t + 2) * b * h];
            let tanh_c = &mut cache.tanh_cells[t * b * h..(t + 1) * b * h];
            for s in 0..b {
                let zr = &mut z[s * g4..(s + 1) * g4];
                for v in &mut zr[..2 * h] {
                    *v = sigmoid(*v);
                }
                for v in &mut zr[2 * h..3 * h] {
                    *v = v.tanh();
                }
                for v in &mut zr[3 * h..] {
                    *v = sigmoid(*v);
                }
                for j in 0..h {
                    let (ig, fg, cg, og) = (zr[j], zr[h + j], zr[2 * h + j], zr[3 * h + j]);
                    let c = fg * c_prev[s * h + j] + ig * cg;
                    let tc = c.tanh();
                    c_next[s * h + j] = c;
                    tanh_c[s * h + j] = tc;
                    h_next[s * h + j] = og * tc;
                }
            }
        }
        cache
    }

    fn lstm_backward(&self, cache: &LstmCache, inputs: &[f64], b: usize, d_last: &[f64], grads: &mut [f64]) {
        let (steps, iw, h) = (self.shape.history_len, self.shape.input_width, self.shape.hidden);
        let g4 = 4 * h;
        let wx_spec = self.layout.get("lstm.w_input").clone();
        let wh_spec = self.layout.get("lstm.w_hidden").clone();
        let bias_spec = self.layout.get("lstm.bias").clone();
        let wh = &self.params[wh_spec.range()];

        let mut dh = d_last.to_vec();
        let mut dc = vec![0.0; b * h];
        let mut dz = vec![0.0; b * g4];
        let row_stride = steps * iw;
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * b * g4..(t + 1) * b * g4];
            let c_prev = &cache.cells[t * b * h..(t + 1) * b * h];
            let tanh_c = &cache.tanh_cells[t * b * h..(t + 1) * b * h];
            for s in 0..b {
                let gr = &gates[s * g4..(s + 1) * g4];
                let dzr = &mut dz[s * g4..(s + 1) * g4];
                for j in 0..h {
                    let k = s * h + j;
                    let (ig, fg, cg, og) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                    let tc = tanh_c[k];
                    let d_o = dh[k] * tc;
                    let dcell = dc[k] + dh[k] * og * (1.0 - tc * tc);
                    dzr[j] = dcell * cg * ig * (1.0 - ig);
                    dzr[h + j] = dcell * c_prev[k] * fg * (1.0 - fg);
                    dzr[2 * h + j] = dcell * ig * (1.0 - cg * cg);
                    dzr[3 * h + j] = d_o * og * (1.0 - og);
                    dc[k] = dcell * fg;
                }
            }
            // dW_x += X_tᵀ·dZ with X_t rows strided through the batch.
            gemm(iw, b, g4, &inputs[t * iw..], (1, row_stride), &dz, (g4, 1), 1.0, &mut grads[wx_spec.range()], g4);
            let h_prev = &cache.hiddens[t * b * h..(t + 1) * b * h];
            matmul_tn(h, b, g4, h_prev, &dz, 1.0, &mut grads[wh_spec.range()]);
            add_column_sums(&mut grads[bias_spec.range()], &dz);
            if t > 0 {
                matmul_nt(b, g4, h, &dz, wh, 0.0, &mut dh);
            }
        }
    }
}

struct DenseLayer {
    weight: &'static str,
    bias: &'static str,
}
