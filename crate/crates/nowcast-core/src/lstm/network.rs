//! Stacked-LSTM forward pass and backpropagation through time.
//!
//! Gate equations per timestep and layer (sigmoid gates, tanh cell
//! candidate and output squashing):
//!
//! ```text
//! i_t = sigmoid(Wi x_t + Ui h_{t-1} + bi)
//! f_t = sigmoid(Wf x_t + Uf h_{t-1} + bf)
//! g_t = tanh  (Wg x_t + Ug h_{t-1} + bg)
//! o_t = sigmoid(Wo x_t + Uo h_{t-1} + bo)
//! c_t = f_t * c_{t-1} + i_t * g_t
//! h_t = o_t * tanh(c_t)
//! ```
//!
//! The scalar prediction is an affine readout of the top layer's final
//! hidden state. Windows are standardized inside the forward pass with the
//! frozen per-feature statistics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One gate: input weights, recurrent weights, bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Gate {
    /// `[hidden][input_dim]`
    pub w_x: Vec<Vec<f64>>,
    /// `[hidden][hidden]`
    pub w_h: Vec<Vec<f64>>,
    /// `[hidden]`
    pub b: Vec<f64>,
}

impl Gate {
    fn zeros(hidden: usize, input_dim: usize) -> Self {
        Gate {
            w_x: vec![vec![0.0; input_dim]; hidden],
            w_h: vec![vec![0.0; hidden]; hidden],
            b: vec![0.0; hidden],
        }
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        for row in &mut self.w_x {
            for v in row {
                f(v);
            }
        }
        for row in &mut self.w_h {
            for v in row {
                f(v);
            }
        }
        for v in &mut self.b {
            f(v);
        }
    }

    fn visit(&self, f: &mut impl FnMut(f64)) {
        for row in &self.w_x {
            for &v in row {
                f(v);
            }
        }
        for row in &self.w_h {
            for &v in row {
                f(v);
            }
        }
        for &v in &self.b {
            f(v);
        }
    }

    /// Pre-activation for one hidden unit.
    fn pre_activation(&self, unit: usize, x: &[f64], h_prev: &[f64]) -> f64 {
        let mut acc = self.b[unit];
        let wx = &self.w_x[unit];
        for (w, v) in wx.iter().zip(x.iter()) {
            acc += w * v;
        }
        let wh = &self.w_h[unit];
        for (w, v) in wh.iter().zip(h_prev.iter()) {
            acc += w * v;
        }
        acc
    }
}

/// The four gates of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Layer {
    pub input: Gate,
    pub forget: Gate,
    pub cell: Gate,
    pub output: Gate,
}

impl Layer {
    fn zeros(hidden: usize, input_dim: usize) -> Self {
        Layer {
            input: Gate::zeros(hidden, input_dim),
            forget: Gate::zeros(hidden, input_dim),
            cell: Gate::zeros(hidden, input_dim),
            output: Gate::zeros(hidden, input_dim),
        }
    }

    fn gates_mut(&mut self) -> [&mut Gate; 4] {
        [
            &mut self.input,
            &mut self.forget,
            &mut self.cell,
            &mut self.output,
        ]
    }

    fn gates(&self) -> [&Gate; 4] {
        [&self.input, &self.forget, &self.cell, &self.output]
    }
}

/// All trainable weights of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct WeightSet {
    pub layers: Vec<Layer>,
    pub readout_w: Vec<f64>,
    pub readout_b: f64,
}

impl WeightSet {
    pub fn zeros(n_features: usize, hidden: usize, n_layers: usize) -> Self {
        let layers = (0..n_layers)
            .map(|l| Layer::zeros(hidden, if l == 0 { n_features } else { hidden }))
            .collect();
        WeightSet {
            layers,
            readout_w: vec![0.0; hidden],
            readout_b: 0.0,
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        for layer in &mut self.layers {
            for gate in layer.gates_mut() {
                gate.visit_mut(f);
            }
        }
        for v in &mut self.readout_w {
            f(v);
        }
        f(&mut self.readout_b);
    }

    pub fn visit(&self, f: &mut impl FnMut(f64)) {
        for layer in &self.layers {
            for gate in layer.gates() {
                gate.visit(f);
            }
        }
        for &v in &self.readout_w {
            f(v);
        }
        f(self.readout_b);
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |v| out.push(v));
        out
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        let mut idx = 0;
        self.visit_mut(&mut |v| {
            *v = flat[idx];
            idx += 1;
        });
        debug_assert_eq!(idx, flat.len());
    }
}

/// Trained parameters of a single network: gate weights, readout, and the
/// frozen input standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParameters {
    pub(crate) weights: WeightSet,
    pub(crate) feature_mean: Vec<f64>,
    pub(crate) feature_sd: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct ForwardCache {
    /// `[layer][t][dim]` input to each layer (standardized features for
    /// layer 0, previous layer's hidden state above).
    inputs: Vec<Vec<Vec<f64>>>,
    h_prev: Vec<Vec<Vec<f64>>>,
    c_prev: Vec<Vec<Vec<f64>>>,
    i: Vec<Vec<Vec<f64>>>,
    f: Vec<Vec<Vec<f64>>>,
    g: Vec<Vec<Vec<f64>>>,
    o: Vec<Vec<Vec<f64>>>,
    tanh_c: Vec<Vec<Vec<f64>>>,
    h_last: Vec<f64>,
}

impl LstmParameters {
    /// Uniform(-k, k) initialization with `k = 1 / sqrt(hidden_size)`.
    pub fn init(
        n_features: usize,
        hidden: usize,
        n_layers: usize,
        rng: &mut impl Rng,
        feature_mean: Vec<f64>,
        feature_sd: Vec<f64>,
    ) -> Self {
        assert_eq!(feature_mean.len(), n_features);
        assert_eq!(feature_sd.len(), n_features);
        assert!(feature_sd.iter().all(|&s| s > 0.0));
        let k = 1.0 / (hidden as f64).sqrt();
        let mut weights = WeightSet::zeros(n_features, hidden, n_layers);
        weights.visit_mut(&mut |v| *v = rng.random_range(-k..k));
        LstmParameters {
            weights,
            feature_mean,
            feature_sd,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn hidden_size(&self) -> usize {
        self.weights.readout_w.len()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.layers.len()
    }

    fn standardize(&self, window: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n_features = self.n_features();
        let mut out = Vec::with_capacity(window.len());
        for row in window {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch(format!(
                    "window row has {} features, network expects {}",
                    row.len(),
                    n_features
                )));
            }
            out.push(
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| (v - self.feature_mean[j]) / self.feature_sd[j])
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Deterministic forward pass over a raw (unstandardized) window.
    pub fn forward(&self, window: &[Vec<f64>]) -> Result<f64> {
        self.forward_cached(window).map(|(pred, _)| pred)
    }

    pub(crate) fn forward_cached(&self, window: &[Vec<f64>]) -> Result<(f64, ForwardCache)> {
        if window.is_empty() {
            return Err(Error::DimensionMismatch("empty window".to_string()));
        }
        let x = self.standardize(window)?;
        let hidden = self.hidden_size();
        let n_layers = self.n_layers();
        let t_len = x.len();

        let mut cache = ForwardCache {
            inputs: vec![Vec::with_capacity(t_len); n_layers],
            h_prev: vec![Vec::with_capacity(t_len); n_layers],
            c_prev: vec![Vec::with_capacity(t_len); n_layers],
            i: vec![Vec::with_capacity(t_len); n_layers],
            f: vec![Vec::with_capacity(t_len); n_layers],
            g: vec![Vec::with_capacity(t_len); n_layers],
            o: vec![Vec::with_capacity(t_len); n_layers],
            tanh_c: vec![Vec::with_capacity(t_len); n_layers],
            h_last: vec![0.0; hidden],
        };

        let mut h = vec![vec![0.0; hidden]; n_layers];
        let mut c = vec![vec![0.0; hidden]; n_layers];

        for t in 0..t_len {
            let mut layer_input = x[t].clone();
            for (l, layer) in self.weights.layers.iter().enumerate() {
                // Snapshot the recurrent state: every unit of this timestep
                // must see the previous timestep's full h and c.
                let h_prev = h[l].clone();
                let c_prev = c[l].clone();
                cache.inputs[l].push(layer_input.clone());
                cache.h_prev[l].push(h_prev.clone());
                cache.c_prev[l].push(c_prev.clone());

                let mut i_t = vec![0.0; hidden];
                let mut f_t = vec![0.0; hidden];
                let mut g_t = vec![0.0; hidden];
                let mut o_t = vec![0.0; hidden];
                let mut tanh_c_t = vec![0.0; hidden];
                for u in 0..hidden {
                    i_t[u] = sigmoid(layer.input.pre_activation(u, &layer_input, &h_prev));
                    f_t[u] = sigmoid(layer.forget.pre_activation(u, &layer_input, &h_prev));
                    g_t[u] = layer.cell.pre_activation(u, &layer_input, &h_prev).tanh();
                    o_t[u] = sigmoid(layer.output.pre_activation(u, &layer_input, &h_prev));
                    let c_new = f_t[u] * c_prev[u] + i_t[u] * g_t[u];
                    tanh_c_t[u] = c_new.tanh();
                    c[l][u] = c_new;
                    h[l][u] = o_t[u] * tanh_c_t[u];
                }
                cache.i[l].push(i_t);
                cache.f[l].push(f_t);
                cache.g[l].push(g_t);
                cache.o[l].push(o_t);
                cache.tanh_c[l].push(tanh_c_t);

                layer_input = h[l].clone();
            }
        }

        cache.h_last = h[n_layers - 1].clone();
        let mut pred = self.weights.readout_b;
        for (w, v) in self.weights.readout_w.iter().zip(cache.h_last.iter()) {
            pred += w * v;
        }
        Ok((pred, cache))
    }

    /// Accumulate parameter gradients for `d loss / d prediction = dpred`
    /// into `grads` by backpropagation through time.
    pub(crate) fn backward(&self, cache: &ForwardCache, dpred: f64, grads: &mut WeightSet) {
        let hidden = self.hidden_size();
        let n_layers = self.n_layers();
        let t_len = cache.inputs[0].len();

        grads.readout_b += dpred;
        for u in 0..hidden {
            grads.readout_w[u] += dpred * cache.h_last[u];
        }

        // Gradient flowing into each layer's hidden output per timestep.
        // Top layer receives readout gradient at the final timestep only.
        let mut dh_above = vec![vec![0.0; hidden]; t_len];
        for u in 0..hidden {
            dh_above[t_len - 1][u] = dpred * self.weights.readout_w[u];
        }

        for l in (0..n_layers).rev() {
            let layer = &self.weights.layers[l];
            let glayer = &mut grads.layers[l];
            let input_dim = layer.input.w_x[0].len();

            let mut dh_next = vec![0.0; hidden];
            let mut dc_next = vec![0.0; hidden];
            let mut dx_per_t = vec![vec![0.0; input_dim]; t_len];

            for t in (0..t_len).rev() {
                let i_t = &cache.i[l][t];
                let f_t = &cache.f[l][t];
                let g_t = &cache.g[l][t];
                let o_t = &cache.o[l][t];
                let tanh_c = &cache.tanh_c[l][t];
                let c_prev = &cache.c_prev[l][t];
                let h_prev = &cache.h_prev[l][t];
                let x_t = &cache.inputs[l][t];

                let mut d_pre = [
                    vec![0.0; hidden], // input gate
                    vec![0.0; hidden], // forget gate
                    vec![0.0; hidden], // cell candidate
                    vec![0.0; hidden], // output gate
                ];
                for u in 0..hidden {
                    let dh = dh_above[t][u] + dh_next[u];
                    let dc = dh * o_t[u] * (1.0 - tanh_c[u] * tanh_c[u]) + dc_next[u];
                    d_pre[0][u] = dc * g_t[u] * i_t[u] * (1.0 - i_t[u]);
                    d_pre[1][u] = dc * c_prev[u] * f_t[u] * (1.0 - f_t[u]);
                    d_pre[2][u] = dc * i_t[u] * (1.0 - g_t[u] * g_t[u]);
                    d_pre[3][u] = dh * tanh_c[u] * o_t[u] * (1.0 - o_t[u]);
                    dc_next[u] = dc * f_t[u];
                }

                let gates = [&layer.input, &layer.forget, &layer.cell, &layer.output];
                {
                    let ggates = glayer.gates_mut();
                    for (gate_idx, ggate) in ggates.into_iter().enumerate() {
                        let d = &d_pre[gate_idx];
                        for u in 0..hidden {
                            let du = d[u];
                            if du == 0.0 {
                                continue;
                            }
                            let wrow = &mut ggate.w_x[u];
                            for (dst, &xv) in wrow.iter_mut().zip(x_t.iter()) {
                                *dst += du * xv;
                            }
                            let hrow = &mut ggate.w_h[u];
                            for (dst, &hv) in hrow.iter_mut().zip(h_prev.iter()) {
                                *dst += du * hv;
                            }
                            ggate.b[u] += du;
                        }
                    }
                }

                for k in 0..hidden {
                    let mut acc = 0.0;
                    for (gate_idx, gate) in gates.iter().enumerate() {
                        let d = &d_pre[gate_idx];
                        for u in 0..hidden {
                            acc += gate.w_h[u][k] * d[u];
                        }
                    }
                    dh_next[k] = acc;
                }

                let dx = &mut dx_per_t[t];
                for (gate_idx, gate) in gates.iter().enumerate() {
                    let d = &d_pre[gate_idx];
                    for u in 0..hidden {
                        let du = d[u];
                        if du == 0.0 {
                            continue;
                        }
                        for (dst, &w) in dx.iter_mut().zip(gate.w_x[u].iter()) {
                            *dst += w * du;
                        }
                    }
                }
            }

            if l > 0 {
                dh_above = dx_per_t;
            }
        }
    }
}

/// Flat copy of all trainable weights in the fixed traversal order
/// (layers, gates, input weights, recurrent weights, biases, readout).
pub fn flatten_weights(params: &LstmParameters) -> Vec<f64> {
    params.weights.flatten()
}

/// Overwrite all trainable weights from a flat vector produced by
/// [`flatten_weights`].
pub fn assign_weights(params: &mut LstmParameters, flat: &[f64]) {
    params.weights.assign_from_flat(flat);
}

/// Analytic gradient of the mean squared error over the given samples,
/// flattened in [`flatten_weights`] order. This is the quantity a central
/// finite-difference check verifies.
pub fn loss_gradient(
    params: &LstmParameters,
    windows: &[Vec<Vec<f64>>],
    targets: &[f64],
) -> Result<Vec<f64>> {
    if windows.len() != targets.len() || windows.is_empty() {
        return Err(Error::DimensionMismatch(
            "need equally many windows and targets".to_string(),
        ));
    }
    let mut grads = WeightSet::zeros(
        params.n_features(),
        params.hidden_size(),
        params.n_layers(),
    );
    for (window, &y) in windows.iter().zip(targets.iter()) {
        let (pred, cache) = params.forward_cached(window)?;
        let dpred = 2.0 * (pred - y) / windows.len() as f64;
        params.backward(&cache, dpred, &mut grads);
    }
    Ok(grads.flatten())
}
