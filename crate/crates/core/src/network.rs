//! Tanh MLP backbone: initialization, forward evaluation on plain reals and
//! on [`DualTaylor`] inputs, and checkpoint serialization.
//!
//! Two evaluation paths exist for spatial duals:
//! * [`forward`] / [`forward_on_tape`] — generic over seed dimension, used by
//!   the 1-D diagnostics problems and as a reference implementation;
//! * [`BatchEval`] — a specialized 2-D path that evaluates and differentiates
//!   whole collocation batches, used by the trainer. The two are checked
//!   against each other in tests.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ad::{DualTaylor, Dual2};
use crate::tape::{Node, Tape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

/// Architecture of the fully connected backbone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
}

#[derive(Debug)]
pub enum NetworkError {
    InvalidSpec(String),
    Io(std::io::Error),
    BadCheckpoint(String),
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::InvalidSpec(m) => write!(f, "invalid MLP spec: {m}"),
            NetworkError::Io(e) => write!(f, "checkpoint I/O error: {e}"),
            NetworkError::BadCheckpoint(m) => write!(f, "malformed checkpoint: {m}"),
        }
    }
}

impl std::error::Error for NetworkError {}

impl From<std::io::Error> for NetworkError {
    fn from(e: std::io::Error) -> Self {
        NetworkError::Io(e)
    }
}

/// Offsets of one dense layer inside the flat parameter vector. Weights are
/// row-major `[fan_out][fan_in]`, followed by the bias block.
#[derive(Clone, Copy, Debug)]
pub struct LayerBlock {
    pub w_off: usize,
    pub b_off: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

/// Bijective map from layers onto index ranges of the flat vector.
#[derive(Clone, Debug)]
pub struct MlpLayout {
    pub layers: Vec<LayerBlock>,
    pub total: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, output_dim: usize, hidden_layers: usize, hidden_width: usize) -> Self {
        Self { input_dim, output_dim, hidden_layers, hidden_width, activation: Activation::Tanh }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NetworkError::InvalidSpec("zero input/output dim".into()));
        }
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(NetworkError::InvalidSpec("need at least one hidden layer and unit".into()));
        }
        Ok(())
    }

    /// Per-layer fan-in/fan-out sequence, input to output.
    fn dims(&self) -> Vec<(usize, usize)> {
        let mut d = Vec::with_capacity(self.hidden_layers + 1);
        let mut prev = self.input_dim;
        for _ in 0..self.hidden_layers {
            d.push((prev, self.hidden_width));
            prev = self.hidden_width;
        }
        d.push((prev, self.output_dim));
        d
    }

    pub fn layout(&self) -> MlpLayout {
        let mut layers = Vec::new();
        let mut off = 0;
        for (fan_in, fan_out) in self.dims() {
            let w_off = off;
            let b_off = off + fan_in * fan_out;
            off = b_off + fan_out;
            layers.push(LayerBlock { w_off, b_off, fan_in, fan_out });
        }
        MlpLayout { layers, total: off }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

/// Flat parameter vector together with its layer layout.
#[derive(Clone, Debug)]
pub struct ParamVector {
    pub data: Vec<f64>,
    pub layout: MlpLayout,
}

impl ParamVector {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layout = spec.layout();
        Self { data: vec![0.0; layout.total], layout }
    }

    pub fn from_data(spec: &MlpSpec, data: Vec<f64>) -> Result<Self, NetworkError> {
        let layout = spec.layout();
        if data.len() != layout.total {
            return Err(NetworkError::InvalidSpec(format!(
                "parameter count {} does not match spec ({})",
                data.len(),
                layout.total
            )));
        }
        Ok(Self { data, layout })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Glorot-uniform weights, zero biases, deterministic per seed.
pub fn init_params(spec: &MlpSpec, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamVector::zeros(spec);
    for block in params.layout.layers.clone() {
        let bound = (6.0 / (block.fan_in + block.fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        for w in &mut params.data[block.w_off..block.w_off + block.fan_in * block.fan_out] {
            *w = dist.sample(&mut rng);
        }
        // biases stay zero
    }
    params
}

/// Reference forward pass over dual-number inputs; output components carry
/// value, spatial gradient and spatial Hessian.
pub fn forward<const D: usize, const H: usize>(
    params: &ParamVector,
    spec: &MlpSpec,
    x: &[DualTaylor<D, H>],
) -> Vec<DualTaylor<D, H>> {
    assert_eq!(x.len(), spec.input_dim);
    let mut act: Vec<DualTaylor<D, H>> = x.to_vec();
    let n_layers = params.layout.layers.len();
    for (l, block) in params.layout.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(block.fan_out);
        for j in 0..block.fan_out {
            let mut z = DualTaylor::constant(params.data[block.b_off + j]);
            for (k, a) in act.iter().enumerate() {
                z = z + a.scale(params.data[block.w_off + j * block.fan_in + k]);
            }
            next.push(if l + 1 < n_layers { z.tanh() } else { z });
        }
        act = next;
    }
    act
}

/// Alias kept for example binaries.
pub fn seedless_plain(params: &ParamVector, spec: &MlpSpec, x: &[f64]) -> Vec<f64> {
    forward_plain(params, spec, x)
}

/// Value-only forward pass; agrees with [`forward`]`().value`.
pub fn forward_plain(params: &ParamVector, spec: &MlpSpec, x: &[f64]) -> Vec<f64> {
    let mut eval = PlainEval::new(spec);
    eval.eval(params, x).to_vec()
}

/// Reusable dual-number evaluator (no allocation per call).
pub struct DualEval<const D: usize, const H: usize> {
    spec: MlpSpec,
    a: Vec<DualTaylor<D, H>>,
    b: Vec<DualTaylor<D, H>>,
}

impl<const D: usize, const H: usize> DualEval<D, H> {
    pub fn new(spec: &MlpSpec) -> Self {
        let w = spec.hidden_width.max(spec.input_dim).max(spec.output_dim);
        let zero = DualTaylor::constant(0.0);
        Self { spec: *spec, a: vec![zero; w], b: vec![zero; w] }
    }

    pub fn eval(&mut self, params: &ParamVector, x: &[DualTaylor<D, H>]) -> &[DualTaylor<D, H>] {
        assert_eq!(x.len(), self.spec.input_dim);
        self.a[..x.len()].copy_from_slice(x);
        let n_layers = params.layout.layers.len();
        for (l, block) in params.layout.layers.iter().enumerate() {
            for j in 0..block.fan_out {
                let row = &params.data[block.w_off + j * block.fan_in..][..block.fan_in];
                let mut z = DualTaylor::constant(params.data[block.b_off + j]);
                for (k, w) in row.iter().enumerate() {
                    z = z + self.a[k].scale(*w);
                }
                self.b[j] = if l + 1 < n_layers { z.tanh() } else { z };
            }
            std::mem::swap(&mut self.a, &mut self.b);
        }
        &self.a[..self.spec.output_dim]
    }
}

/// Reusable value-only evaluator (no allocation per call).
pub struct PlainEval {
    spec: MlpSpec,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PlainEval {
    pub fn new(spec: &MlpSpec) -> Self {
        let w = spec.hidden_width.max(spec.input_dim).max(spec.output_dim);
        Self { spec: *spec, a: vec![0.0; w], b: vec![0.0; w] }
    }

    pub fn eval(&mut self, params: &ParamVector, x: &[f64]) -> &[f64] {
        assert_eq!(x.len(), self.spec.input_dim);
        self.a[..x.len()].copy_from_slice(x);
        let n_layers = params.layout.layers.len();
        for (l, block) in params.layout.layers.iter().enumerate() {
            let src = &self.a[..block.fan_in];
            for j in 0..block.fan_out {
                let row = &params.data[block.w_off + j * block.fan_in..][..block.fan_in];
                let z = params.data[block.b_off + j] + dot_tree(row, src);
                self.b[j] = if l + 1 < n_layers { crate::ad::tanh_f64(z) } else { z };
            }
            std::mem::swap(&mut self.a, &mut self.b);
        }
        &self.a[..self.spec.output_dim]
    }
}

/// Dot product with four independent accumulator chains (deterministic, and
/// free of the serial-add latency wall).
#[inline]
fn dot_tree(a: &[f64], b: &[f64]) -> f64 {
    let split = a.len() & !3;
    let mut acc = [0.0_f64; 4];
    for (qa, qb) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        for i in 0..4 {
            acc[i] += qa[i] * qb[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        s += x * y;
    }
    s
}

/// Record the MLP forward pass on a tape, returning output nodes. The tape's
/// parameter vector must follow this spec's layout.
pub fn forward_on_tape<const D: usize, const H: usize>(
    tape: &mut Tape<D, H>,
    layout: &MlpLayout,
    spec: &MlpSpec,
    x: &[DualTaylor<D, H>],
) -> Vec<Node> {
    assert_eq!(x.len(), spec.input_dim);
    let mut first = tape.input(x[0]);
    for &xi in &x[1..] {
        tape.input(xi);
    }
    let mut width = spec.input_dim;
    let n_layers = layout.layers.len();
    let mut outputs = Vec::new();
    for (l, block) in layout.layers.iter().enumerate() {
        let mut rows = Vec::with_capacity(block.fan_out);
        for j in 0..block.fan_out {
            rows.push(tape.affine_row(block.w_off + j * block.fan_in, block.b_off + j, first, width));
        }
        if l + 1 < n_layers {
            let mut acts = Vec::with_capacity(block.fan_out);
            for &r in &rows {
                acts.push(tape.tanh(r));
            }
            first = acts[0];
            width = block.fan_out;
        } else {
            outputs = rows;
        }
    }
    outputs
}

/// Lanes per node in the specialized 2-D batch path: value, d/dx, d/dy,
/// d²/dx², d²/dxdy, d²/dy², plus two zero padding lanes that keep each node
/// on two full 256-bit vectors.
pub const LANES: usize = 8;

/// Batched forward/backward evaluator for 2-D spatial duals.
///
/// `forward` retains pre- and post-activation duals for every point so that
/// `backward` can run a reverse sweep from per-output cotangent seeds and
/// accumulate loss gradients with respect to the parameters in a fixed,
/// deterministic point order.
pub struct BatchEval {
    spec: MlpSpec,
    n_points: usize,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    out: Vec<f64>,
    adj_a: Vec<f64>,
    adj_b: Vec<f64>,
    src_t: Vec<f64>,
    w_t: Vec<f64>,
}

impl BatchEval {
    pub fn new(spec: &MlpSpec, n_points: usize) -> Self {
        assert_eq!(spec.input_dim, 2, "batch path is specialized for 2-D problems");
        let w = spec.hidden_width;
        let max_wmat =
            spec.layout().layers.iter().map(|b| b.fan_in * b.fan_out).max().unwrap_or(0);
        Self {
            spec: *spec,
            n_points,
            input: vec![0.0; n_points * 2 * LANES],
            pre: (0..spec.hidden_layers).map(|_| vec![0.0; n_points * w * LANES]).collect(),
            post: (0..spec.hidden_layers).map(|_| vec![0.0; n_points * w * LANES]).collect(),
            out: vec![0.0; n_points * spec.output_dim * LANES],
            adj_a: vec![0.0; w * LANES],
            adj_b: vec![0.0; w * LANES],
            src_t: vec![0.0; w.max(2) * LANES],
            w_t: vec![0.0; max_wmat * (spec.hidden_layers + 1)],
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn forward(&mut self, params: &ParamVector, points: &[[f64; 2]]) {
        assert_eq!(points.len(), self.n_points);
        let w = self.spec.hidden_width;
        for (p, pt) in points.iter().enumerate() {
            let base = p * 2 * LANES;
            for k in 0..2 {
                let s = &mut self.input[base + k * LANES..base + (k + 1) * LANES];
                s.fill(0.0);
                s[0] = pt[k];
                s[1 + k] = 1.0;
            }
        }
        let layers = &params.layout.layers;
        for p in 0..self.n_points {
            for (l, block) in layers.iter().enumerate() {
                let fan_in = block.fan_in;
                let last = l == layers.len() - 1;
                let src_base = p * fan_in * LANES;
                let (prev_post, cur_post) = self.post.split_at_mut(l);
                let src: &[f64] = if l == 0 { &self.input } else { &prev_post[l - 1] };
                let src_pt = &src[src_base..src_base + fan_in * LANES];
                for j in 0..block.fan_out {
                    let mut acc = [0.0_f64; LANES];
                    acc[0] = params.data[block.b_off + j];
                    let row = &params.data[block.w_off + j * fan_in..][..fan_in];
                    for (wk, a) in row.iter().zip(src_pt.chunks_exact(LANES)) {
                        let a: &[f64; LANES] = a.try_into().unwrap();
                        for c in 0..LANES {
                            acc[c] += wk * a[c];
                        }
                    }
                    if last {
                        let dst = &mut self.out[(p * block.fan_out + j) * LANES..][..LANES];
                        dst.copy_from_slice(&acc);
                    } else {
                        let idx = (p * w + j) * LANES;
                        self.pre[l][idx..idx + LANES].copy_from_slice(&acc);
                        let dst = &mut cur_post[0][idx..idx + LANES];
                        tanh_lanes(&acc, dst);
                    }
                }
            }
        }
    }

    /// Output component `j` of point `p` as a dual.
    pub fn output(&self, p: usize, j: usize) -> Dual2 {
        let s = &self.out[(p * self.spec.output_dim + j) * LANES..][..LANES];
        Dual2 { value: s[0], grad: [s[1], s[2]], hess: [s[3], s[4], s[5]] }
    }

    /// Reverse sweep. `seeds` holds one cotangent lane-block per output
    /// component per point (same layout as the output buffer); parameter
    /// gradients are added into `grad`.
    pub fn backward(&mut self, params: &ParamVector, seeds: &[f64], grad: &mut [f64]) {
        assert_eq!(seeds.len(), self.out.len());
        assert_eq!(grad.len(), params.len());
        let w = self.spec.hidden_width;
        let layers = &params.layout.layers;
        let n_layers = layers.len();
        let max_wmat = layers.iter().map(|b| b.fan_in * b.fan_out).max().unwrap_or(0);
        // transposed weights once per sweep: w_t[k * fan_out + j] = w[j][k]
        for (l, block) in layers.iter().enumerate() {
            let dst = &mut self.w_t[l * max_wmat..][..block.fan_in * block.fan_out];
            let src = &params.data[block.w_off..][..block.fan_in * block.fan_out];
            for j in 0..block.fan_out {
                for k in 0..block.fan_in {
                    dst[k * block.fan_out + j] = src[j * block.fan_in + k];
                }
            }
        }
        for p in 0..self.n_points {
            // adjoint of the last hidden activation from the linear output layer
            let block = &layers[n_layers - 1];
            let cots = &seeds[p * block.fan_out * LANES..][..block.fan_out * LANES];
            let src = &self.post[n_layers - 2][p * w * LANES..][..block.fan_in * LANES];
            transpose_lanes(src, block.fan_in, &mut self.src_t);
            affine_backward_weights(cots, block, &self.src_t, grad);
            let wt = &self.w_t[(n_layers - 1) * max_wmat..][..block.fan_in * block.fan_out];
            affine_backward_adjoint(cots, block.fan_in, block.fan_out, wt, &mut self.adj_a);
            // hidden layers, last to first
            for l in (0..n_layers - 1).rev() {
                let block = &layers[l];
                // through tanh: adj on post -> adj on pre (in place in adj_a)
                for j in 0..block.fan_out {
                    let idx = (p * w + j) * LANES;
                    let z = &self.pre[l][idx..idx + LANES];
                    let t = self.post[l][idx];
                    let a = &mut self.adj_a[j * LANES..(j + 1) * LANES];
                    tanh_backward_lanes(a, z, t);
                }
                // through the affine map
                let src: &[f64] = if l == 0 {
                    &self.input[p * 2 * LANES..(p * 2 + 2) * LANES]
                } else {
                    &self.post[l - 1][p * w * LANES..][..block.fan_in * LANES]
                };
                transpose_lanes(src, block.fan_in, &mut self.src_t);
                let cots = &self.adj_a[..block.fan_out * LANES];
                affine_backward_weights(cots, block, &self.src_t, grad);
                if l > 0 {
                    let wt = &self.w_t[l * max_wmat..][..block.fan_in * block.fan_out];
                    affine_backward_adjoint(cots, block.fan_in, block.fan_out, wt, &mut self.adj_b);
                    std::mem::swap(&mut self.adj_a, &mut self.adj_b);
                }
            }
        }
    }
}

/// Lane-major transpose of one point's activations: `dst[c][k] = src[k][c]`.
#[inline]
fn transpose_lanes(src: &[f64], fan_in: usize, dst: &mut [f64]) {
    for (k, a) in src.chunks_exact(LANES).enumerate() {
        for c in 0..LANES {
            dst[c * fan_in + k] = a[c];
        }
    }
}

/// Weight and bias gradients of one affine layer from the rows' cotangents,
/// using lane-major activations: `dW[j][k] += sum_c cot_j[c] * src_t[c][k]`
/// as contiguous axpy passes (zero padding lanes are skipped).
#[inline]
fn affine_backward_weights(cots: &[f64], block: &LayerBlock, src_t: &[f64], grad: &mut [f64]) {
    let fan_in = block.fan_in;
    for j in 0..block.fan_out {
        let cot: &[f64; LANES] = cots[j * LANES..][..LANES].try_into().unwrap();
        grad[block.b_off + j] += cot[0];
        let grow = &mut grad[block.w_off + j * fan_in..][..fan_in];
        for c in 0..LANES {
            let s = cot[c];
            if s == 0.0 {
                continue;
            }
            let srcc = &src_t[c * fan_in..][..fan_in];
            for (g, a) in grow.iter_mut().zip(srcc) {
                *g += s * a;
            }
        }
    }
}

/// Adjoints of the previous activations from transposed weights:
/// `adj[k] = sum_j w_t[k][j] * cot_j`, accumulated in registers per `k`.
#[inline]
fn affine_backward_adjoint(
    cots: &[f64],
    fan_in: usize,
    fan_out: usize,
    w_t: &[f64],
    adj: &mut [f64],
) {
    for (k, dst) in adj.chunks_exact_mut(LANES).take(fan_in).enumerate() {
        let wrow = &w_t[k * fan_out..][..fan_out];
        let mut acc = [0.0_f64; LANES];
        for (wk, cot) in wrow.iter().zip(cots.chunks_exact(LANES)) {
            for c in 0..LANES {
                acc[c] += wk * cot[c];
            }
        }
        dst.copy_from_slice(&acc);
    }
}

/// tanh over the six lanes of one node.
#[inline]
fn tanh_lanes(z: &[f64; LANES], out: &mut [f64]) {
    let t = crate::ad::tanh_f64(z[0]);
    let f1 = 1.0 - t * t;
    let f2 = -2.0 * t * f1;
    out[0] = t;
    out[1] = f1 * z[1];
    out[2] = f1 * z[2];
    out[3] = f2 * z[1] * z[1] + f1 * z[3];
    out[4] = f2 * z[1] * z[2] + f1 * z[4];
    out[5] = f2 * z[2] * z[2] + f1 * z[5];
    out[6] = 0.0;
    out[7] = 0.0;
}

/// Cotangent pull-back through tanh on the six lanes (in place).
#[inline]
fn tanh_backward_lanes(adj: &mut [f64], z: &[f64], t: f64) {
    let f1 = 1.0 - t * t;
    let f2 = -2.0 * t * f1;
    let f3 = -2.0 * f1 * f1 - 2.0 * t * f2;
    let (wv, wg0, wg1, wh00, wh01, wh11) = (adj[0], adj[1], adj[2], adj[3], adj[4], adj[5]);
    let (g0, g1, h00, h01, h11) = (z[1], z[2], z[3], z[4], z[5]);
    adj[0] = wv * f1
        + f2 * (wg0 * g0 + wg1 * g1)
        + wh00 * (f3 * g0 * g0 + f2 * h00)
        + wh01 * (f3 * g0 * g1 + f2 * h01)
        + wh11 * (f3 * g1 * g1 + f2 * h11);
    adj[1] = wg0 * f1 + f2 * (2.0 * wh00 * g0 + wh01 * g1);
    adj[2] = wg1 * f1 + f2 * (wh01 * g0 + 2.0 * wh11 * g1);
    adj[3] = wh00 * f1;
    adj[4] = wh01 * f1;
    adj[5] = wh11 * f1;
}

const CKPT_MAGIC: &str = "mlp-checkpoint v1";

/// Write a checkpoint: one documented text header line, then the flat
/// parameter vector as little-endian f64.
pub fn save_checkpoint(path: &Path, spec: &MlpSpec, params: &ParamVector) -> Result<(), NetworkError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "{CKPT_MAGIC} input_dim={} output_dim={} hidden_layers={} hidden_width={} activation={} count={}",
        spec.input_dim, spec.output_dim, spec.hidden_layers, spec.hidden_width, spec.activation,
        params.len()
    )?;
    let mut bytes = Vec::with_capacity(params.len() * 8);
    for v in &params.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpSpec, ParamVector), NetworkError> {
    let mut f = std::fs::File::open(path)?;
    let mut all = Vec::new();
    f.read_to_end(&mut all)?;
    let nl = all
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| NetworkError::BadCheckpoint("missing header line".into()))?;
    let header = std::str::from_utf8(&all[..nl])
        .map_err(|_| NetworkError::BadCheckpoint("non-UTF8 header".into()))?;
    let mut fields = std::collections::BTreeMap::new();
    let magic_len = CKPT_MAGIC.len();
    if !header.starts_with(CKPT_MAGIC) {
        return Err(NetworkError::BadCheckpoint("bad magic".into()));
    }
    for kv in header[magic_len..].split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| NetworkError::BadCheckpoint(format!("bad field {kv}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<usize, NetworkError> {
        fields
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| NetworkError::BadCheckpoint(format!("missing field {k}")))
    };
    let spec = MlpSpec::new(get("input_dim")?, get("output_dim")?, get("hidden_layers")?, get("hidden_width")?);
    let count = get("count")?;
    if count != spec.param_count() {
        return Err(NetworkError::BadCheckpoint("count does not match spec".into()));
    }
    let payload = &all[nl + 1..];
    if payload.len() != count * 8 {
        return Err(NetworkError::BadCheckpoint(format!(
            "payload {} bytes, expected {}",
            payload.len(),
            count * 8
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = ParamVector::from_data(&spec, data)?;
    Ok((spec, params))
}
