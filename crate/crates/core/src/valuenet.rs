//! Residual Leaky-ReLU MLP that scores the three actions of a Bloch state,
//! with the value `V(s) = max_a Q(s, a)`, its exact parameter gradient, and
//! the eligibility-trace TD update used by the enhanced agent.
//!
//! Layer weights are row-major with shape `(out_dim, in_dim)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::NUM_ACTIONS;
use crate::error::{Error, Result};
use crate::quantum::{state_to_bloch, PureState};

/// Width of the state encoding fed to every network.
pub const FEATURE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
    pub leaky_slope: f64,
    /// Adds the first hidden activation onto the last one.
    pub residual: bool,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            input_dim: FEATURE_DIM,
            hidden_layers: vec![32, 32],
            output_dim: NUM_ACTIONS,
            leaky_slope: 0.01,
            residual: true,
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid("network input and output widths must be positive"));
        }
        if self.hidden_layers.iter().any(|&w| w == 0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::invalid("leaky_slope must be finite"));
        }
        if self.residual {
            match (self.hidden_layers.first(), self.hidden_layers.last()) {
                (Some(a), Some(b)) if self.hidden_layers.len() >= 2 && a == b => {}
                _ => {
                    return Err(Error::invalid(
                        "residual skip needs at least two hidden layers with equal end widths",
                    ))
                }
            }
        }
        Ok(())
    }
}

/// One affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }

    /// `Wᵀ d`.
    fn transpose_mul(&self, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, di) in self.weights.chunks_exact(self.cols).zip(d) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * di;
            }
        }
        out
    }

    fn same_shape(&self, other: &Layer) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

/// A list of per-layer tensors. Parameters, gradients and traces all use it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub layers: Vec<Layer>,
}

impl ParameterSet {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.rows, l.cols))
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &ParameterSet) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.same_shape(b))
    }

    fn check_shape(&self, other: &ParameterSet) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::invalid("parameter tensor shapes do not match"))
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    pub fn scale(&mut self, s: f64) {
        self.values_mut().for_each(|v| *v *= s);
    }

    /// `self += s · other`. Shapes must already match.
    pub fn add_scaled(&mut self, other: &ParameterSet, s: f64) {
        debug_assert!(self.same_shape(other));
        for (v, o) in self.values_mut().zip(other.values()) {
            *v += s * o;
        }
    }

    pub fn set_zero(&mut self) {
        self.values_mut().for_each(|v| *v = 0.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.values().map(f64::abs).fold(0.0, f64::max)
    }

    /// Reads the flat index `i` (weights then biases, layer by layer).
    pub fn get(&self, mut i: usize) -> Option<f64> {
        for l in &self.layers {
            if i < l.weights.len() {
                return Some(l.weights[i]);
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return Some(l.bias[i]);
            }
            i -= l.bias.len();
        }
        None
    }

    pub fn get_mut(&mut self, mut i: usize) -> Option<&mut f64> {
        for l in &mut self.layers {
            if i < l.weights.len() {
                return Some(&mut l.weights[i]);
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return Some(&mut l.bias[i]);
            }
            i -= l.bias.len();
        }
        None
    }
}

/// Gradient of a scalar with respect to every parameter.
pub type Gradient = ParameterSet;

/// Network weights plus the two architectural switches forward needs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParameters {
    pub leaky_slope: f64,
    pub residual: bool,
    pub tensors: ParameterSet,
}

impl NetworkParameters {
    /// All-zero parameters with the shapes implied by `spec`.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut dims = vec![spec.input_dim];
        dims.extend(&spec.hidden_layers);
        dims.push(spec.output_dim);
        let layers = dims.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect();
        Ok(Self {
            leaky_slope: spec.leaky_slope,
            residual: spec.residual,
            tensors: ParameterSet { layers },
        })
    }

    pub fn input_dim(&self) -> usize {
        self.tensors.layers.first().map_or(0, |l| l.cols)
    }

    pub fn output_dim(&self) -> usize {
        self.tensors.layers.last().map_or(0, |l| l.rows)
    }

    fn hidden_count(&self) -> usize {
        self.tensors.layers.len().saturating_sub(1)
    }

    fn skip_active(&self) -> bool {
        self.residual && self.hidden_count() >= 2
    }

    pub fn head_mut(&mut self) -> &mut Layer {
        self.tensors.layers.last_mut().expect("network has an output layer")
    }

    pub fn zero_trace(&self) -> EligibilityTrace {
        EligibilityTrace(self.tensors.zeros_like())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.is_finite()
    }
}

/// Per-parameter eligibility, shape-matched to a network.
#[derive(Debug, Clone, PartialEq)]
pub struct EligibilityTrace(pub ParameterSet);

impl EligibilityTrace {
    pub fn tensors(&self) -> &ParameterSet {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Network learning rate β.
    pub beta: f64,
    /// Trace decay λ.
    pub lambda: f64,
    /// Discount γ used in the network's TD error.
    pub gamma: f64,
    /// Multiplier applied to environment rewards before they enter the
    /// network's TD error. The network therefore estimates values in units
    /// of `reward_scale`.
    pub reward_scale: f64,
    /// Symmetric clip on the TD error δ, when set.
    pub td_clip: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            beta: 0.01,
            lambda: 0.8,
            gamma: 0.99,
            reward_scale: 1e-4,
            td_clip: Some(1.0),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("beta {} outside (0, 1)", self.beta)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::invalid(format!("lambda {} outside (0, 1)", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return Err(Error::invalid("reward_scale must be positive"));
        }
        if let Some(c) = self.td_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid("td_clip must be positive"));
            }
        }
        Ok(())
    }
}

/// Bloch vector `(sinθ cosφ, sinθ sinφ, cosθ)` of a normalized state.
pub fn features(s: &PureState) -> [f64; FEATURE_DIM] {
    // The expectation values ⟨σx⟩, ⟨σy⟩, ⟨σz⟩ give the same vector without
    // going through angles; state_to_bloch is kept for validation only.
    debug_assert!(state_to_bloch(s).is_ok());
    let [a, b] = s.amplitudes();
    let cross = a.conj() * b;
    [
        2.0 * cross.re,
        2.0 * cross.im,
        a.norm_sqr() - b.norm_sqr(),
    ]
}

/// Uniform `±1/√fan_in` weights from a seeded generator, zero biases.
pub fn init_network(spec: &NetworkSpec, seed: u64) -> Result<NetworkParameters> {
    let mut p = NetworkParameters::zeros(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut p.tensors.layers {
        let bound = 1.0 / (layer.cols as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.gen_range(-bound..bound);
        }
    }
    Ok(p)
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

fn leaky(z: f64, slope: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        slope * z
    }
}

fn leaky_grad(z: f64, slope: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        slope
    }
}

pub fn forward_cached(p: &NetworkParameters, x: &[f64]) -> ForwardCache {
    let layers = &p.tensors.layers;
    let hidden = p.hidden_count();
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(hidden);
    let mut current = x.to_vec();
    let mut first_hidden: Option<Vec<f64>> = None;
    for (i, layer) in layers[..hidden].iter().enumerate() {
        let z = layer.affine(&current);
        let mut h: Vec<f64> = z.iter().map(|&v| leaky(v, p.leaky_slope)).collect();
        if p.skip_active() {
            if i == 0 {
                first_hidden = Some(h.clone());
            } else if i == hidden - 1 {
                let skip = first_hidden.as_ref().expect("first hidden activation recorded");
                for (hv, s) in h.iter_mut().zip(skip) {
                    *hv += s;
                }
            }
        }
        inputs.push(current);
        pre.push(z);
        current = h;
    }
    let output = layers[hidden].affine(&current);
    inputs.push(current);
    ForwardCache {
        inputs,
        pre,
        output,
    }
}

/// Per-action scores for features `x`.
pub fn forward(p: &NetworkParameters, x: &[f64]) -> Vec<f64> {
    forward_cached(p, x).output
}

/// Reverse-mode gradient of `d_output · forward(p, x)` with respect to every
/// parameter.
pub fn backward(p: &NetworkParameters, cache: &ForwardCache, d_output: &[f64]) -> Gradient {
    let layers = &p.tensors.layers;
    let hidden = p.hidden_count();
    let mut grad = p.tensors.zeros_like();

    let mut delta = d_output.to_vec();
    let mut skip: Option<Vec<f64>> = None;
    for i in (0..=hidden).rev() {
        let layer = &layers[i];
        if i < hidden {
            // delta is d/d(activation of hidden layer i).
            if p.skip_active() && i == hidden - 1 {
                skip = Some(delta.clone());
            }
            for (d, &z) in delta.iter_mut().zip(&cache.pre[i]) {
                *d *= leaky_grad(z, p.leaky_slope);
            }
        }
        let input = &cache.inputs[i];
        let g = &mut grad.layers[i];
        for (r, &d) in delta.iter().enumerate() {
            g.bias[r] = d;
            let row = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
            for (gw, &xi) in row.iter_mut().zip(input) {
                *gw = d * xi;
            }
        }
        if i == 0 {
            break;
        }
        delta = layer.transpose_mul(&delta);
        if i == 1 {
            if let Some(s) = skip.take() {
                for (d, sv) in delta.iter_mut().zip(&s) {
                    *d += sv;
                }
            }
        }
    }
    grad
}

/// Index of the largest entry, ties resolved toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `V(x) = max_a Q(x, a)`.
pub fn v_value(p: &NetworkParameters, x: &[f64]) -> f64 {
    let out = forward(p, x);
    out[argmax(&out)]
}

/// `V(x)` and `∂V/∂w`. Only the argmax output contributes.
pub fn v_gradient(p: &NetworkParameters, x: &[f64]) -> (f64, Gradient) {
    let cache = forward_cached(p, x);
    let best = argmax(&cache.output);
    let mut d = vec![0.0; cache.output.len()];
    d[best] = 1.0;
    let value = cache.output[best];
    (value, backward(p, &cache, &d))
}

/// `e' = γλ e + g`.
pub fn trace_accumulate(
    e: &EligibilityTrace,
    g: &Gradient,
    gamma: f64,
    lambda: f64,
) -> Result<EligibilityTrace> {
    let mut out = e.clone();
    trace_accumulate_in_place(&mut out, g, gamma * lambda)?;
    Ok(out)
}

pub fn trace_accumulate_in_place(
    e: &mut EligibilityTrace,
    g: &Gradient,
    decay: f64,
) -> Result<()> {
    e.0.check_shape(g)?;
    e.0.scale(decay);
    e.0.add_scaled(g, 1.0);
    Ok(())
}

pub fn trace_reset(e: &EligibilityTrace) -> EligibilityTrace {
    EligibilityTrace(e.0.zeros_like())
}

/// TD error `r + γ v' − v`, after the optional clip.
pub fn td_error(r: f64, v_s: f64, v_s_next: f64, cfg: &LearnerConfig) -> Result<f64> {
    let delta = r + cfg.gamma * v_s_next - v_s;
    if !delta.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite TD error (r = {r}, V(s) = {v_s}, V(s') = {v_s_next})"
        )));
    }
    Ok(match cfg.td_clip {
        Some(c) => delta.clamp(-c, c),
        None => delta,
    })
}

/// `w' = w + β δ e`.
pub fn td_update(
    p: &NetworkParameters,
    e: &EligibilityTrace,
    r: f64,
    v_s: f64,
    v_s_next: f64,
    cfg: &LearnerConfig,
) -> Result<NetworkParameters> {
    let mut out = p.clone();
    td_update_in_place(&mut out, e, r, v_s, v_s_next, cfg)?;
    Ok(out)
}

/// In-place [`td_update`]; returns the TD error used.
pub fn td_update_in_place(
    p: &mut NetworkParameters,
    e: &EligibilityTrace,
    r: f64,
    v_s: f64,
    v_s_next: f64,
    cfg: &LearnerConfig,
) -> Result<f64> {
    p.tensors.check_shape(&e.0)?;
    let delta = td_error(r, v_s, v_s_next, cfg)?;
    if delta != 0.0 {
        p.tensors.add_scaled(&e.0, cfg.beta * delta);
    }
    Ok(delta)
}
