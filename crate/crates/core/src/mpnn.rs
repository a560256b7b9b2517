//! Message passing networks with normalized sum aggregation, defined the same
//! way on graphs and on step graphon-signals.
//!
//! Message functions are sums of simple tensors `sum_k xi_r^k(a) * xi_t^k(b)`
//! (elementwise product along the feature dimension) built from a closed
//! catalog of functions carrying analytic Lipschitz constants, formal biases,
//! and uniform bounds. The graph and graphon execution paths share one inner
//! loop, so applying a network to an induced graphon-signal and inducing the
//! output of the graph network produce bitwise-identical values.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutnorm::{kernel_cut_norm_exact_with_limit, signal_cut_norm};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::types::{
    induce, random_graphon, random_signal, GraphSignal, GraphonSignal, StepGraphon, StepSignal,
};

/// Functions available to message and update layers. The catalog is closed so
/// every instance carries certified Lipschitz data instead of estimates.
/// Activations compose after the affine map: `relu(Wx + b)`, `tanh(Wx + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogFunction {
    Constant { in_dim: usize, value: Vec<f64> },
    Identity { dim: usize },
    Affine { weight: Vec<Vec<f64>>, bias: Vec<f64> },
    ReluAffine { weight: Vec<Vec<f64>>, bias: Vec<f64> },
    TanhAffine { weight: Vec<Vec<f64>>, bias: Vec<f64> },
    TwoLayerMlp {
        w1: Vec<Vec<f64>>,
        b1: Vec<f64>,
        w2: Vec<Vec<f64>>,
        b2: Vec<f64>,
    },
}

fn check_matrix(weight: &[Vec<f64>], bias: &[f64], what: &str) -> Result<()> {
    if weight.is_empty() {
        return Err(Error::Invalid(format!("{what}: empty weight matrix")));
    }
    let cols = weight[0].len();
    if cols == 0 || weight.iter().any(|row| row.len() != cols) {
        return Err(Error::Invalid(format!("{what}: ragged weight matrix")));
    }
    if bias.len() != weight.len() {
        return Err(Error::Invalid(format!(
            "{what}: bias length {} does not match {} rows",
            bias.len(),
            weight.len()
        )));
    }
    let finite = weight.iter().flatten().chain(bias.iter()).all(|v| v.is_finite());
    if !finite {
        return Err(Error::Invalid(format!("{what}: non-finite parameter")));
    }
    Ok(())
}

/// Max absolute row sum: the operator norm induced by the infinity norm.
fn inf_operator_norm(weight: &[Vec<f64>]) -> f64 {
    weight
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn matvec(weight: &[Vec<f64>], bias: &[f64], x: &[f64]) -> Vec<f64> {
    weight
        .iter()
        .zip(bias)
        .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect()
}

impl CatalogFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { in_dim, value } => {
                if *in_dim == 0 || value.is_empty() {
                    return Err(Error::Invalid("constant: dims must be positive".into()));
                }
                if value.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Invalid("constant: non-finite value".into()));
                }
                Ok(())
            }
            Self::Identity { dim } => {
                if *dim == 0 {
                    return Err(Error::Invalid("identity: dim must be positive".into()));
                }
                Ok(())
            }
            Self::Affine { weight, bias } => check_matrix(weight, bias, "affine"),
            Self::ReluAffine { weight, bias } => check_matrix(weight, bias, "relu_affine"),
            Self::TanhAffine { weight, bias } => check_matrix(weight, bias, "tanh_affine"),
            Self::TwoLayerMlp { w1, b1, w2, b2 } => {
                check_matrix(w1, b1, "two_layer_mlp (first)")?;
                check_matrix(w2, b2, "two_layer_mlp (second)")?;
                if w2[0].len() != w1.len() {
                    return Err(Error::DimensionMismatch {
                        expected: w1.len(),
                        got: w2[0].len(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Self::Constant { in_dim, .. } => *in_dim,
            Self::Identity { dim } => *dim,
            Self::Affine { weight, .. }
            | Self::ReluAffine { weight, .. }
            | Self::TanhAffine { weight, .. } => weight[0].len(),
            Self::TwoLayerMlp { w1, .. } => w1[0].len(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Self::Constant { value, .. } => value.len(),
            Self::Identity { dim } => *dim,
            Self::Affine { weight, .. }
            | Self::ReluAffine { weight, .. }
            | Self::TanhAffine { weight, .. } => weight.len(),
            Self::TwoLayerMlp { w2, .. } => w2.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Constant { value, .. } => value.clone(),
            Self::Identity { .. } => x.to_vec(),
            Self::Affine { weight, bias } => matvec(weight, bias, x),
            Self::ReluAffine { weight, bias } => {
                matvec(weight, bias, x).into_iter().map(|v| v.max(0.0)).collect()
            }
            Self::TanhAffine { weight, bias } => {
                matvec(weight, bias, x).into_iter().map(f64::tanh).collect()
            }
            Self::TwoLayerMlp { w1, b1, w2, b2 } => {
                let hidden: Vec<f64> =
                    matvec(w1, b1, x).into_iter().map(|v| v.max(0.0)).collect();
                matvec(w2, b2, &hidden)
            }
        }
    }

    /// Analytic Lipschitz constant with respect to infinity norms.
    pub fn lip(&self) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::Identity { .. } => 1.0,
            Self::Affine { weight, .. }
            | Self::ReluAffine { weight, .. }
            | Self::TanhAffine { weight, .. } => inf_operator_norm(weight),
            Self::TwoLayerMlp { w1, w2, .. } => inf_operator_norm(w1) * inf_operator_norm(w2),
        }
    }

    /// Formal bias `|F(0)|` in the infinity norm.
    pub fn bias_at_zero(&self) -> f64 {
        self.eval(&vec![0.0; self.in_dim()])
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Uniform output bound, when the function has one.
    pub fn inf_bound(&self) -> Option<f64> {
        match self {
            Self::Constant { value, .. } => {
                Some(value.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            }
            Self::TanhAffine { .. } => Some(1.0),
            _ => None,
        }
    }

    /// True when every output coordinate is nonnegative for every input.
    pub fn nonneg(&self) -> bool {
        match self {
            Self::ReluAffine { .. } => true,
            Self::Constant { value, .. } => value.iter().all(|&v| v >= 0.0),
            _ => false,
        }
    }
}

/// One simple-tensor term of a message function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageTerm {
    pub receiver: CatalogFunction,
    pub transmitter: CatalogFunction,
}

/// Message function `Phi(a,b) = sum_k receiver_k(a) * transmitter_k(b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageFunctionSpec {
    pub terms: Vec<MessageTerm>,
}

impl MessageFunctionSpec {
    /// `Phi(a,b) = b`: constant-one receiver times identity transmitter.
    pub fn transmit_identity(dim: usize) -> Self {
        Self {
            terms: vec![MessageTerm {
                receiver: CatalogFunction::Constant {
                    in_dim: dim,
                    value: vec![1.0; dim],
                },
                transmitter: CatalogFunction::Identity { dim },
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Invalid("message function needs at least one term".into()));
        }
        let d = self.in_dim();
        let p = self.out_dim();
        for term in &self.terms {
            term.receiver.validate()?;
            term.transmitter.validate()?;
            for f in [&term.receiver, &term.transmitter] {
                if f.in_dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: f.in_dim(),
                    });
                }
                if f.out_dim() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: f.out_dim(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn simple_tensor_count(&self) -> usize {
        self.terms.len()
    }

    pub fn in_dim(&self) -> usize {
        self.terms[0].receiver.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.terms[0].receiver.out_dim()
    }

    /// All receivers and transmitters nonnegative-valued.
    pub fn nonneg(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.receiver.nonneg() && t.transmitter.nonneg())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let p = self.out_dim();
        let mut out = vec![0.0; p];
        for term in &self.terms {
            let r = term.receiver.eval(a);
            let t = term.transmitter.eval(b);
            for c in 0..p {
                out[c] += r[c] * t[c];
            }
        }
        out
    }
}

/// One network layer: a message function plus an optional pointwise update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpnnLayer {
    pub message: MessageFunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update: Option<CatalogFunction>,
}

impl MpnnLayer {
    pub fn out_dim(&self) -> usize {
        self.update
            .as_ref()
            .map_or(self.message.out_dim(), CatalogFunction::out_dim)
    }
}

/// A full network: layers applied in order, optionally followed by global
/// pooling. Networks only transform the signal; the graph or graphon passes
/// through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpnnSpec {
    pub layers: Vec<MpnnLayer>,
    #[serde(default)]
    pub readout: bool,
}

impl MpnnSpec {
    pub fn validate(&self) -> Result<()> {
        let mut dim: Option<usize> = None;
        for layer in &self.layers {
            layer.message.validate()?;
            let d = layer.message.in_dim();
            if let Some(prev) = dim {
                if prev != d {
                    return Err(Error::DimensionMismatch {
                        expected: prev,
                        got: d,
                    });
                }
            }
            if let Some(update) = &layer.update {
                update.validate()?;
                let expected = d + layer.message.out_dim();
                if update.in_dim() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        got: update.in_dim(),
                    });
                }
            }
            dim = Some(layer.out_dim());
        }
        Ok(())
    }

    pub fn in_dim(&self) -> Option<usize> {
        self.layers.first().map(|l| l.message.in_dim())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

/// Message kernel of a step signal: `Q[i][j] = Phi(f_i, f_j)`, an
/// `m x m x p` block tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKernel {
    pub resolution: usize,
    pub channels: usize,
    /// Row-major `(i, j, c)`.
    pub values: Vec<f64>,
}

impl BlockKernel {
    #[inline]
    pub fn value(&self, i: usize, j: usize, c: usize) -> f64 {
        self.values[(i * self.resolution + j) * self.channels + c]
    }
}

fn message_kernel_dense(
    phi: &MessageFunctionSpec,
    n: usize,
    feats: &[f64],
    d: usize,
) -> BlockKernel {
    let p = phi.out_dim();
    let receivers: Vec<Vec<Vec<f64>>> = phi
        .terms
        .iter()
        .map(|t| (0..n).map(|i| t.receiver.eval(&feats[i * d..(i + 1) * d])).collect())
        .collect();
    let transmitters: Vec<Vec<Vec<f64>>> = phi
        .terms
        .iter()
        .map(|t| (0..n).map(|j| t.transmitter.eval(&feats[j * d..(j + 1) * d])).collect())
        .collect();
    let mut values = vec![0.0; n * n * p];
    for i in 0..n {
        for j in 0..n {
            let base = (i * n + j) * p;
            for (r, t) in receivers.iter().zip(&transmitters) {
                for c in 0..p {
                    values[base + c] += r[i][c] * t[j][c];
                }
            }
        }
    }
    BlockKernel {
        resolution: n,
        channels: p,
        values,
    }
}

/// Message kernel `Q(i,j) = Phi(f(i), f(j))` of a step signal.
pub fn message_kernel(phi: &MessageFunctionSpec, f: &StepSignal) -> Result<BlockKernel> {
    phi.validate()?;
    if phi.in_dim() != f.channels() {
        return Err(Error::DimensionMismatch {
            expected: phi.in_dim(),
            got: f.channels(),
        });
    }
    Ok(message_kernel_dense(phi, f.resolution(), f.values(), f.channels()))
}

/// Shared aggregation core: `out[i][c] = (1/n) * sum_j edges[i][j] Q[i][j][c]`
/// with `j` ascending, then one scale. Both the graph and the graphon paths
/// call this, which is what makes them agree bitwise.
fn aggregate_dense(n: usize, edges: &[f64], q: &BlockKernel) -> Vec<f64> {
    let p = q.channels;
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for c in 0..p {
            let mut acc = 0.0;
            for j in 0..n {
                acc += edges[i * n + j] * q.value(i, j, c);
            }
            out[i * p + c] = acc / n as f64;
        }
    }
    out
}

/// Normalized aggregation of a message kernel against a graphon; the exact
/// integral for step functions.
pub fn aggregate_graphon(w: &StepGraphon, q: &BlockKernel) -> Result<StepSignal> {
    let m = w.resolution();
    if q.resolution != m {
        return Err(Error::ResolutionMismatch {
            left: m,
            right: q.resolution,
        });
    }
    let values = aggregate_dense(m, w.values(), q);
    signal_from_values(m, q.channels, values)
}

/// Normalized sum aggregation on a graph:
/// `(1/n) * sum_j a_ij Phi(f_i, f_j)` per node.
pub fn aggregate_graph(g: &GraphSignal, phi: &MessageFunctionSpec) -> Result<Vec<f64>> {
    phi.validate()?;
    if phi.in_dim() != g.channels() {
        return Err(Error::DimensionMismatch {
            expected: phi.in_dim(),
            got: g.channels(),
        });
    }
    let q = message_kernel_dense(phi, g.node_count(), g.features(), g.channels());
    Ok(aggregate_dense(g.node_count(), g.adjacency(), &q))
}

fn signal_from_values(m: usize, channels: usize, values: Vec<f64>) -> Result<StepSignal> {
    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bound = if max_abs > 0.0 { max_abs } else { 1.0 };
    StepSignal::from_values(m, channels, values, bound)
}

fn layer_features(
    n: usize,
    edges: &[f64],
    feats: &[f64],
    d: usize,
    layer: &MpnnLayer,
) -> (Vec<f64>, usize) {
    let q = message_kernel_dense(&layer.message, n, feats, d);
    let agg = aggregate_dense(n, edges, &q);
    let p = layer.message.out_dim();
    match &layer.update {
        None => (agg, p),
        Some(update) => {
            let s = update.out_dim();
            let mut out = vec![0.0; n * s];
            let mut joint = vec![0.0; d + p];
            for i in 0..n {
                joint[..d].copy_from_slice(&feats[i * d..(i + 1) * d]);
                joint[d..].copy_from_slice(&agg[i * p..(i + 1) * p]);
                out[i * s..(i + 1) * s].copy_from_slice(&update.eval(&joint));
            }
            (out, s)
        }
    }
}

fn forward_dense(
    spec: &MpnnSpec,
    n: usize,
    edges: &[f64],
    feats: &[f64],
    d: usize,
) -> Result<(Vec<f64>, usize)> {
    spec.validate()?;
    if let Some(expected) = spec.in_dim() {
        if expected != d {
            return Err(Error::DimensionMismatch { expected, got: d });
        }
    }
    let mut feats = feats.to_vec();
    let mut d = d;
    for layer in &spec.layers {
        let (next, nd) = layer_features(n, edges, &feats, d, layer);
        feats = next;
        d = nd;
    }
    Ok((feats, d))
}

/// Run the network on a graphon-signal; the graphon passes through unchanged.
pub fn forward_graphon(spec: &MpnnSpec, x: &GraphonSignal) -> Result<GraphonSignal> {
    let m = x.resolution();
    let (values, d) = forward_dense(
        spec,
        m,
        x.graphon().values(),
        x.signal().values(),
        x.signal().channels(),
    )?;
    let signal = if spec.layers.is_empty() {
        x.signal().clone()
    } else {
        signal_from_values(m, d, values)?
    };
    x.with_signal(signal)
}

/// Run the network on a graph-signal; the graph passes through unchanged.
pub fn forward_graph(spec: &MpnnSpec, g: &GraphSignal) -> Result<GraphSignal> {
    let n = g.node_count();
    let (values, d) = forward_dense(spec, n, g.adjacency(), g.features(), g.channels())?;
    if spec.layers.is_empty() {
        return Ok(g.clone());
    }
    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bound = if max_abs > 0.0 { max_abs } else { 1.0 };
    g.with_features(d, values, bound)
}

/// Max entrywise deviation between running the network on the induced
/// graphon-signal and inducing the network output of the graph.
pub fn verify_commutation(spec: &MpnnSpec, g: &GraphSignal) -> Result<f64> {
    let through_graphon = forward_graphon(spec, &induce(g))?;
    let through_graph = induce(&forward_graph(spec, g)?);
    let mut dev = 0.0f64;
    for (a, b) in through_graphon
        .graphon()
        .values()
        .iter()
        .zip(through_graph.graphon().values())
    {
        dev = dev.max((a - b).abs());
    }
    for (a, b) in through_graphon
        .signal()
        .values()
        .iter()
        .zip(through_graph.signal().values())
    {
        dev = dev.max((a - b).abs());
    }
    Ok(dev)
}

/// Global pooling: the mean signal vector over blocks.
pub fn readout_graphon(x: &GraphonSignal) -> Vec<f64> {
    readout_values(x.resolution(), x.signal().values(), x.signal().channels())
}

/// Global pooling: the mean feature vector over nodes.
pub fn readout_graph(g: &GraphSignal) -> Vec<f64> {
    readout_values(g.node_count(), g.features(), g.channels())
}

fn readout_values(n: usize, values: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for i in 0..n {
        for (c, slot) in out.iter_mut().enumerate() {
            *slot += values[i * d + c];
        }
    }
    for slot in &mut out {
        *slot /= n as f64;
    }
    out
}

/// The three hypothesis settings the Lipschitz calculators cover: bounded
/// message/update functions; merely Lipschitz ones; nonnegative message
/// functions with a Lipschitz product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LipschitzSetting {
    Bounded,
    Lipschitz,
    NonnegBounded,
}

impl LipschitzSetting {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::Bounded),
            2 => Ok(Self::Lipschitz),
            3 => Ok(Self::NonnegBounded),
            _ => Err(Error::Invalid(format!("setting must be 1, 2, or 3, got {i}"))),
        }
    }
}

/// Coefficients `(l_f, l_w)` with
/// `||Theta(W,f) - Theta(V,g)||_cut <= l_f ||f-g||_cut + l_w ||W-V||_cut`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzBound {
    pub l_f: f64,
    pub l_w: f64,
    /// Per-layer recurrence coefficients `(a_t, b_t)`.
    pub per_layer: Vec<(f64, f64)>,
    /// Signal bound entering each layer (settings 2 and 3).
    pub signal_bounds: Vec<f64>,
}

impl LipschitzBound {
    /// Combined constant for the single-coefficient statement.
    pub fn combined(&self) -> f64 {
        self.l_f.max(self.l_w)
    }

    /// Lipschitz constant of the pair map `(W,f) -> (W, Theta(W,f))` in the
    /// graphon-signal metric: the graphon passes through with constant 1.
    pub fn pair_lipschitz(&self) -> f64 {
        self.l_f.max(1.0 + self.l_w)
    }
}

/// Compute `(l_f, l_w)` for the requested setting by iterating the layer
/// recurrence `e_{t+1} = a_t e_t + b_t ||W - V||_cut` with the layer's actual
/// term count, Lipschitz constant, formal bias, and bound.
pub fn lipschitz_bound(spec: &MpnnSpec, setting: LipschitzSetting, r: f64) -> Result<LipschitzBound> {
    spec.validate()?;
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("signal bound {r} must be positive")));
    }
    let mut l_f = 1.0f64;
    let mut l_w = 0.0f64;
    let mut per_layer = Vec::with_capacity(spec.layers.len());
    let mut signal_bounds = Vec::with_capacity(spec.layers.len() + 1);
    let mut r_t = r;
    signal_bounds.push(r_t);
    for layer in &spec.layers {
        let k = layer.message.simple_tensor_count() as f64;
        let message_fns = layer
            .message
            .terms
            .iter()
            .flat_map(|t| [&t.receiver, &t.transmitter]);
        let all_fns = message_fns.clone().chain(layer.update.as_ref());
        let l = all_fns.clone().map(CatalogFunction::lip).fold(0.0, f64::max);
        let has_update = layer.update.is_some();
        let (a, b, next_r) = match setting {
            LipschitzSetting::Bounded => {
                let rho = all_fns
                    .clone()
                    .map(|f| {
                        f.inf_bound().ok_or_else(|| {
                            Error::MissingBoundData(
                                "setting 1 needs a uniform bound on every function".into(),
                            )
                        })
                    })
                    .try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b)))?;
                if has_update {
                    (4.0 * k * l * l * rho, 4.0 * k * rho * rho * l, rho)
                } else {
                    (4.0 * k * l * rho, 4.0 * k * rho * rho, rho)
                }
            }
            LipschitzSetting::Lipschitz => {
                let bias = all_fns
                    .clone()
                    .map(CatalogFunction::bias_at_zero)
                    .fold(0.0, f64::max);
                let agg_bound = k * (l * r_t + bias) * (l * r_t + bias);
                if has_update {
                    (
                        4.0 * k * (l.powi(3) * r_t + l * l * bias),
                        4.0 * k * l * (l * r_t + bias) * (l * r_t + bias),
                        bias + l * r_t.max(agg_bound),
                    )
                } else {
                    (
                        4.0 * k * (l * l * r_t + l * bias),
                        4.0 * k * (l * r_t + bias) * (l * r_t + bias),
                        agg_bound,
                    )
                }
            }
            LipschitzSetting::NonnegBounded => {
                if !layer.message.nonneg() {
                    return Err(Error::MissingBoundData(
                        "setting 3 needs nonnegative receiver and transmitter functions".into(),
                    ));
                }
                // Product Lipschitz constant of Phi: each simple tensor needs
                // the non-constant factor paired with a bounded one.
                let mut phi_lip = 0.0f64;
                for term in &layer.message.terms {
                    let side = |f: &CatalogFunction, other: &CatalogFunction| -> Result<f64> {
                        if f.lip() == 0.0 {
                            return Ok(0.0);
                        }
                        let other_bound = other.inf_bound().ok_or_else(|| {
                            Error::MissingBoundData(
                                "setting 3 needs each Lipschitz factor paired with a bounded one"
                                    .into(),
                            )
                        })?;
                        Ok(f.lip() * other_bound)
                    };
                    phi_lip += side(&term.receiver, &term.transmitter)?
                        + side(&term.transmitter, &term.receiver)?;
                }
                let zeros = vec![0.0; layer.message.in_dim()];
                let phi_bias = layer
                    .message
                    .eval(&zeros, &zeros)
                    .iter()
                    .fold(0.0f64, |a, v| a.max(v.abs()));
                let xi_bias = message_fns
                    .clone()
                    .map(CatalogFunction::bias_at_zero)
                    .fold(0.0, f64::max);
                let update_lip = layer.update.as_ref().map_or(0.0, CatalogFunction::lip);
                let update_bias = layer
                    .update
                    .as_ref()
                    .map_or(0.0, CatalogFunction::bias_at_zero);
                let l3 = phi_lip.max(l).max(update_lip);
                let b3 = phi_bias.max(xi_bias).max(update_bias);
                if has_update {
                    (
                        4.0 * k * (l3.powi(3) * r_t + l3 * l3 * b3),
                        k * (l3 * l3 * r_t + l3 * b3),
                        l3 * l3 * r_t + l3 * b3 + b3,
                    )
                } else {
                    (
                        4.0 * k * (l3 * l3 * r_t + l3 * b3),
                        k * (l3 * r_t + b3),
                        l3 * r_t + b3,
                    )
                }
            }
        };
        per_layer.push((a, b));
        l_f *= a;
        l_w = a * l_w + b;
        r_t = next_r;
        signal_bounds.push(r_t);
    }
    Ok(LipschitzBound {
        l_f,
        l_w,
        per_layer,
        signal_bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzVerifyReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest observed `lhs / rhs` over trials with positive rhs.
    pub max_ratio: f64,
    pub l_f: f64,
    pub l_w: f64,
}

/// Monte Carlo check of the Lipschitz inequality with exact cut norms at
/// resolutions up to 10 and signals bounded by 1.
pub fn verify_lipschitz(
    spec: &MpnnSpec,
    setting: LipschitzSetting,
    trials: usize,
    seed: u64,
) -> Result<LipschitzVerifyReport> {
    let r = 1.0;
    let bound = lipschitz_bound(spec, setting, r)?;
    let d = spec.in_dim().unwrap_or(1);
    let results: Vec<(f64, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, bool)> {
            let mut rng = substream(seed, trial as u64);
            let m = rng.gen_range(2..=10usize);
            let x = GraphonSignal::new(random_graphon(m, &mut rng), random_signal(m, d, r, &mut rng))?;
            let y = GraphonSignal::new(random_graphon(m, &mut rng), random_signal(m, d, r, &mut rng))?;
            let out_x = forward_graphon(spec, &x)?;
            let out_y = forward_graphon(spec, &y)?;
            let lhs = signal_cut_norm(&out_x.signal().sub(out_y.signal())?);
            let graphon_term =
                kernel_cut_norm_exact_with_limit(&x.graphon().sub(y.graphon())?, 10)?.value;
            let signal_term = signal_cut_norm(&x.signal().sub(y.signal())?);
            let rhs = bound.l_f * signal_term + bound.l_w * graphon_term;
            let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
            Ok((ratio, lhs > rhs + 1e-9))
        })
        .collect::<Result<_>>()?;
    let violations = results.iter().filter(|(_, v)| *v).count();
    let max_ratio = results.iter().fold(0.0f64, |a, (r, _)| a.max(*r));
    Ok(LipschitzVerifyReport {
        trials,
        violations,
        max_ratio,
        l_f: bound.l_f,
        l_w: bound.l_w,
    })
}

/// Random network from the catalog whose layers satisfy the given setting's
/// hypotheses; used by verification harnesses and tests.
pub fn random_spec(
    setting: LipschitzSetting,
    in_dim: usize,
    layers: usize,
    with_updates: bool,
    seed: u64,
) -> MpnnSpec {
    let mut rng = substream(seed, 0);
    let mut mk_matrix = |rows: usize, cols: usize, scale: f64| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(-scale..=scale)).collect())
            .collect()
    };
    let mut spec_layers = Vec::with_capacity(layers);
    let mut d = in_dim;
    for _ in 0..layers {
        let p = d; // keep widths fixed so chains stay simple
        let term = match setting {
            LipschitzSetting::Bounded => MessageTerm {
                receiver: CatalogFunction::TanhAffine {
                    weight: mk_matrix(p, d, 0.8),
                    bias: vec![0.1; p],
                },
                transmitter: CatalogFunction::TanhAffine {
                    weight: mk_matrix(p, d, 0.8),
                    bias: vec![-0.1; p],
                },
            },
            LipschitzSetting::Lipschitz => MessageTerm {
                receiver: CatalogFunction::Affine {
                    weight: mk_matrix(p, d, 0.7),
                    bias: vec![0.05; p],
                },
                transmitter: CatalogFunction::ReluAffine {
                    weight: mk_matrix(p, d, 0.7),
                    bias: vec![0.05; p],
                },
            },
            LipschitzSetting::NonnegBounded => MessageTerm {
                receiver: CatalogFunction::Constant {
                    in_dim: d,
                    value: vec![0.5; p],
                },
                transmitter: CatalogFunction::ReluAffine {
                    weight: mk_matrix(p, d, 0.7),
                    bias: vec![0.05; p],
                },
            },
        };
        let update = if with_updates {
            let weight = mk_matrix(d, d + p, 0.5);
            Some(match setting {
                LipschitzSetting::Bounded => CatalogFunction::TanhAffine {
                    weight,
                    bias: vec![0.0; d],
                },
                _ => CatalogFunction::Affine {
                    weight,
                    bias: vec![0.05; d],
                },
            })
        } else {
            None
        };
        spec_layers.push(MpnnLayer {
            message: MessageFunctionSpec { terms: vec![term] },
            update,
        });
        d = spec_layers.last().unwrap().out_dim();
    }
    MpnnSpec {
        layers: spec_layers,
        readout: true,
    }
}
