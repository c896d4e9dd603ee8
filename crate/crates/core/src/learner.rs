//! A small trainable enhancer that maps radar spectra toward camera spectra.
//!
//! The model is a fixed three-layer convolutional stack (all kernels `3x3`,
//! zero-padded to preserve shape):
//!
//! ```text
//! 1 channel -> conv(8) -> ReLU -> conv(8) -> ReLU -> conv(1) -> softplus
//! ```
//!
//! Softplus keeps the output strictly positive, so an enhanced spectrum is
//! still a spectrum. Training is plain full-batch gradient descent on the
//! mean squared error against targets built by [`build_target`]: the
//! element-wise product of the (normalized) radar spectrum with the sharper
//! camera spectrum, i.e. "the radar spectrum, re-weighted by where the
//! camera says the energy really is".
//!
//! Everything is deterministic — initialization derives from an explicit
//! seed, batches are visited in order, and gradients accumulate in a fixed
//! order — so a (seed, data, epochs, lr) tuple always reproduces the same
//! model, bit for bit. Backpropagation is verified against central finite
//! differences by [`gradient_check`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::PixelGrid;
use crate::spectrum::Spectrum;

/// Hidden width of the two inner convolution layers.
const HIDDEN: usize = 8;
/// Convolution kernel side length.
const KSIZE: usize = 3;
/// Smallest spectrum the model accepts (one SSIM window, one padded kernel
/// comfortably inside).
const MIN_SIDE: usize = 8;

// ── Training pairs ──────────────────────────────────────────────────────────

/// One supervised example: a radar spectrum and its enhancement target.
///
/// Input and target always share a grid shape; [`build_target`] is the usual
/// way to make one.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    input: Spectrum,
    target: Spectrum,
}

impl TrainingPair {
    /// Pairs an input with a target, enforcing the shared-shape invariant.
    pub fn new(input: Spectrum, target: Spectrum) -> Result<Self> {
        if input.grid().rows() != target.grid().rows()
            || input.grid().cols() != target.grid().cols()
        {
            return Err(Error::Domain(format!(
                "input and target shapes differ: {}x{} vs {}x{}",
                input.grid().rows(),
                input.grid().cols(),
                target.grid().rows(),
                target.grid().cols()
            )));
        }
        Ok(Self { input, target })
    }

    pub fn input(&self) -> &Spectrum {
        &self.input
    }

    pub fn target(&self) -> &Spectrum {
        &self.target
    }
}

/// Builds the training target for a radar/camera spectrum pair: the
/// element-wise product `p_radar * p_cam`, with the camera spectrum first
/// resampled (bilinearly) onto the radar grid if the shapes differ.
///
/// The two spectra must cover the same angular window (within `1e-9`
/// degrees); the returned pair keeps the radar spectrum as input and
/// inherits its grids and segment count for the target.
pub fn build_target(p_radar: &Spectrum, p_cam: &Spectrum) -> Result<TrainingPair> {
    let windows_match = |a: &crate::angle::AngleGrid, b: &crate::angle::AngleGrid| {
        Float::abs(a.min_deg() - b.min_deg()) <= 1e-9 && Float::abs(a.max_deg() - b.max_deg()) <= 1e-9
    };
    if !windows_match(p_radar.phi(), p_cam.phi()) || !windows_match(p_radar.theta(), p_cam.theta()) {
        return Err(Error::Domain(format!(
            "angle windows differ: radar phi [{}, {}] theta [{}, {}] vs camera phi [{}, {}] theta [{}, {}]",
            p_radar.phi().min_deg(),
            p_radar.phi().max_deg(),
            p_radar.theta().min_deg(),
            p_radar.theta().max_deg(),
            p_cam.phi().min_deg(),
            p_cam.phi().max_deg(),
            p_cam.theta().min_deg(),
            p_cam.theta().max_deg(),
        )));
    }
    let radar_grid = p_radar.grid();
    let cam_grid = p_cam.grid().resample_bilinear(radar_grid.rows(), radar_grid.cols())?;
    let product: Vec<f64> = radar_grid
        .values()
        .iter()
        .zip(cam_grid.values())
        .map(|(r, c)| r * c)
        .collect();
    let target_grid = PixelGrid::new(radar_grid.rows(), radar_grid.cols(), product)?;
    let target = Spectrum::new(
        target_grid,
        p_radar.m_segments(),
        p_radar.phi().clone(),
        p_radar.theta().clone(),
    )?;
    TrainingPair::new(p_radar.clone(), target)
}

// ── Feature maps and convolutions ───────────────────────────────────────────

/// A `channels x h x w` activation volume.
#[derive(Debug, Clone)]
struct FeatureMap {
    ch: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    fn zeros(ch: usize, h: usize, w: usize) -> Self {
        Self { ch, h, w, data: vec![0.0; ch * h * w] }
    }

    fn from_grid(grid: &PixelGrid) -> Self {
        Self { ch: 1, h: grid.rows(), w: grid.cols(), data: grid.values().to_vec() }
    }

    #[inline]
    fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        debug_assert!(c < self.ch);
        self.data[(c * self.h + y) * self.w + x]
    }

    #[inline]
    fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f64 {
        debug_assert!(c < self.ch);
        &mut self.data[(c * self.h + y) * self.w + x]
    }
}

/// One zero-padded `3x3` convolution layer.
#[derive(Debug, Clone, PartialEq)]
struct Conv {
    in_ch: usize,
    out_ch: usize,
    /// `[out][in][ky][kx]`, row-major.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl Conv {
    #[inline]
    fn w(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weight[((o * self.in_ch + i) * KSIZE + ky) * KSIZE + kx]
    }

    fn forward(&self, input: &FeatureMap) -> FeatureMap {
        let (h, w) = (input.h, input.w);
        let mut out = FeatureMap::zeros(self.out_ch, h, w);
        for o in 0..self.out_ch {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = self.bias[o];
                    for i in 0..self.in_ch {
                        for ky in 0..KSIZE {
                            let sy = y as isize + ky as isize - 1;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..KSIZE {
                                let sx = x as isize + kx as isize - 1;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                acc += self.w(o, i, ky, kx) * input.at(i, sy as usize, sx as usize);
                            }
                        }
                    }
                    *out.at_mut(o, y, x) = acc;
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients (and optionally the input gradient)
    /// for upstream gradient `dz` at the layer's output.
    fn backward(
        &self,
        input: &FeatureMap,
        dz: &FeatureMap,
        dw: &mut [f64],
        db: &mut [f64],
        mut dx: Option<&mut FeatureMap>,
    ) {
        let (h, w) = (input.h, input.w);
        for o in 0..self.out_ch {
            for y in 0..h {
                for x in 0..w {
                    let g = dz.at(o, y, x);
                    if g == 0.0 {
                        continue;
                    }
                    db[o] += g;
                    for i in 0..self.in_ch {
                        for ky in 0..KSIZE {
                            let sy = y as isize + ky as isize - 1;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            for kx in 0..KSIZE {
                                let sx = x as isize + kx as isize - 1;
                                if sx < 0 || sx >= w as isize {
                                    continue;
                                }
                                let widx = ((o * self.in_ch + i) * KSIZE + ky) * KSIZE + kx;
                                dw[widx] += g * input.at(i, sy as usize, sx as usize);
                                if let Some(dxm) = dx.as_deref_mut() {
                                    *dxm.at_mut(i, sy as usize, sx as usize) +=
                                        g * self.weight[widx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

// ── Activations ─────────────────────────────────────────────────────────────

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Numerically stable `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        Float::exp(x)
    } else {
        Float::ln_1p(Float::exp(x))
    }
}

/// Derivative of softplus: the logistic sigmoid.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + Float::exp(-x))
    } else {
        let e = Float::exp(x);
        e / (1.0 + e)
    }
}

// ── The model ───────────────────────────────────────────────────────────────

/// The fixed-architecture spectrum enhancer.
///
/// Weights initialize uniformly in `±sqrt(1/fan_in)` from a ChaCha stream
/// seeded by `seed`; hidden biases draw from the same range (keeping
/// pre-activations off the exact ReLU kink even for pathological inputs)
/// while the output bias starts at zero. The draw order is fixed — layer by
/// layer, weights `[out][in][ky][kx]` then biases — so a seed fully
/// determines the model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancerModel {
    conv1: Conv,
    conv2: Conv,
    conv3: Conv,
    seed: u64,
}

/// Intermediate activations kept for backpropagation.
struct Trace {
    x0: FeatureMap,
    z1: FeatureMap,
    a1: FeatureMap,
    z2: FeatureMap,
    a2: FeatureMap,
    z3: FeatureMap,
    out: FeatureMap,
}

/// Flat per-parameter gradients, aligned with the model's parameter order.
struct Gradients {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
}

impl Gradients {
    fn zeros(model: &EnhancerModel) -> Self {
        Self {
            w1: vec![0.0; model.conv1.weight.len()],
            b1: vec![0.0; model.conv1.bias.len()],
            w2: vec![0.0; model.conv2.weight.len()],
            b2: vec![0.0; model.conv2.bias.len()],
            w3: vec![0.0; model.conv3.weight.len()],
            b3: vec![0.0; model.conv3.bias.len()],
        }
    }

    fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for part in [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3] {
            out.extend_from_slice(part);
        }
        out
    }
}

impl EnhancerModel {
    /// Builds a freshly initialized model from `seed`.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut conv = |in_ch: usize, out_ch: usize, zero_bias: bool| {
            let bound = Float::sqrt(1.0 / (in_ch * KSIZE * KSIZE) as f64);
            let weight = (0..out_ch * in_ch * KSIZE * KSIZE)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            let bias = (0..out_ch)
                .map(|_| if zero_bias { 0.0 } else { rng.random_range(-bound..bound) })
                .collect();
            Conv { in_ch, out_ch, weight, bias }
        };
        let conv1 = conv(1, HIDDEN, false);
        let conv2 = conv(HIDDEN, HIDDEN, false);
        let conv3 = conv(HIDDEN, 1, true);
        Self { conv1, conv2, conv3, seed }
    }

    /// The seed this model's initialization derived from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of trainable parameters.
    pub fn num_params(&self) -> usize {
        self.layers().iter().map(|c| c.weight.len() + c.bias.len()).sum()
    }

    fn layers(&self) -> [&Conv; 3] {
        [&self.conv1, &self.conv2, &self.conv3]
    }

    /// Reads parameter `idx` in the canonical flat order
    /// (`conv1.weight, conv1.bias, conv2.weight, ...`).
    ///
    /// # Panics
    /// Panics if `idx >= num_params()`.
    pub fn param(&self, idx: usize) -> f64 {
        let mut rest = idx;
        for c in self.layers() {
            if rest < c.weight.len() {
                return c.weight[rest];
            }
            rest -= c.weight.len();
            if rest < c.bias.len() {
                return c.bias[rest];
            }
            rest -= c.bias.len();
        }
        panic!("parameter index {idx} out of range");
    }

    /// Writes parameter `idx` in the canonical flat order.
    ///
    /// # Panics
    /// Panics if `idx >= num_params()`.
    pub fn set_param(&mut self, idx: usize, value: f64) {
        let mut rest = idx;
        for c in [&mut self.conv1, &mut self.conv2, &mut self.conv3] {
            if rest < c.weight.len() {
                c.weight[rest] = value;
                return;
            }
            rest -= c.weight.len();
            if rest < c.bias.len() {
                c.bias[rest] = value;
                return;
            }
            rest -= c.bias.len();
        }
        panic!("parameter index {idx} out of range");
    }

    /// Exports all parameters as `(name, shape, values)` tensors in the
    /// canonical order.
    pub fn export_tensors(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let named = [
            ("conv1", &self.conv1),
            ("conv2", &self.conv2),
            ("conv3", &self.conv3),
        ];
        let mut out = Vec::with_capacity(6);
        for (name, c) in named {
            out.push((
                format!("{name}.weight"),
                vec![c.out_ch, c.in_ch, KSIZE, KSIZE],
                c.weight.clone(),
            ));
            out.push((format!("{name}.bias"), vec![c.out_ch], c.bias.clone()));
        }
        out
    }

    /// Rebuilds a model from tensors previously produced by
    /// [`export_tensors`]. Names, shapes and order must match the
    /// architecture exactly; `seed` is recorded as the model's seed.
    pub fn import_tensors(seed: u64, tensors: &[(String, Vec<usize>, Vec<f64>)]) -> Result<Self> {
        let mut model = EnhancerModel::new(seed);
        let expected = model.export_tensors();
        if tensors.len() != expected.len() {
            return Err(Error::Domain(format!(
                "expected {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, shape, values), (want_name, want_shape, want_values)) in
            tensors.iter().zip(&expected)
        {
            if name != want_name || shape != want_shape {
                return Err(Error::Domain(format!(
                    "unexpected tensor {name} {shape:?}; wanted {want_name} {want_shape:?}"
                )));
            }
            if values.len() != want_values.len() {
                return Err(Error::Domain(format!(
                    "tensor {name} carries {} values for shape {shape:?}",
                    values.len()
                )));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("tensor {name} contains non-finite value {v}")));
            }
        }
        let assign = |c: &mut Conv, w: &[f64], b: &[f64]| {
            c.weight.copy_from_slice(w);
            c.bias.copy_from_slice(b);
        };
        assign(&mut model.conv1, &tensors[0].2, &tensors[1].2);
        assign(&mut model.conv2, &tensors[2].2, &tensors[3].2);
        assign(&mut model.conv3, &tensors[4].2, &tensors[5].2);
        Ok(model)
    }

    fn forward_trace(&self, input: &PixelGrid) -> Result<Trace> {
        if input.rows() < MIN_SIDE || input.cols() < MIN_SIDE {
            return Err(Error::Domain(format!(
                "enhancer needs at least {MIN_SIDE}x{MIN_SIDE} inputs, got {}x{}",
                input.rows(),
                input.cols()
            )));
        }
        let x0 = FeatureMap::from_grid(input);
        let z1 = self.conv1.forward(&x0);
        let a1 = FeatureMap { data: z1.data.iter().map(|&v| relu(v)).collect(), ..z1.clone() };
        let z2 = self.conv2.forward(&a1);
        let a2 = FeatureMap { data: z2.data.iter().map(|&v| relu(v)).collect(), ..z2.clone() };
        let z3 = self.conv3.forward(&a2);
        let out = FeatureMap { data: z3.data.iter().map(|&v| softplus(v)).collect(), ..z3.clone() };
        Ok(Trace { x0, z1, a1, z2, a2, z3, out })
    }

    /// Runs the enhancer on a raw grid. The output has the same shape and
    /// is strictly positive (softplus). Fails with [`Error::Domain`] on
    /// grids smaller than `8x8`.
    pub fn forward_grid(&self, input: &PixelGrid) -> Result<PixelGrid> {
        let trace = self.forward_trace(input)?;
        Ok(PixelGrid::new(input.rows(), input.cols(), trace.out.data)?)
    }

    /// Runs the enhancer on a spectrum, preserving its grids and segment
    /// count.
    pub fn forward(&self, input: &Spectrum) -> Result<Spectrum> {
        let grid = self.forward_grid(input.grid())?;
        Spectrum::new(grid, input.m_segments(), input.phi().clone(), input.theta().clone())
    }

    /// Per-pair loss and parameter gradients. The loss is the mean squared
    /// error over all cells; gradients accumulate into `grads`.
    fn backward_pair(&self, pair: &TrainingPair, grads: &mut Gradients) -> Result<f64> {
        let trace = self.forward_trace(pair.input().grid())?;
        let target = pair.target().grid().values();
        let n = trace.out.data.len() as f64;

        let mut loss = 0.0;
        let mut dz3 = FeatureMap::zeros(1, trace.out.h, trace.out.w);
        for (i, (&o, &t)) in trace.out.data.iter().zip(target).enumerate() {
            let diff = o - t;
            loss += diff * diff;
            // d(mse)/d(out) * d(softplus)/d(z3)
            dz3.data[i] = 2.0 * diff / n * sigmoid(trace.z3.data[i]);
        }
        loss /= n;

        let mut da2 = FeatureMap::zeros(HIDDEN, trace.out.h, trace.out.w);
        self.conv3.backward(&trace.a2, &dz3, &mut grads.w3, &mut grads.b3, Some(&mut da2));
        let mut dz2 = da2;
        for (g, &z) in dz2.data.iter_mut().zip(&trace.z2.data) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let mut da1 = FeatureMap::zeros(HIDDEN, trace.out.h, trace.out.w);
        self.conv2.backward(&trace.a1, &dz2, &mut grads.w2, &mut grads.b2, Some(&mut da1));
        let mut dz1 = da1;
        for (g, &z) in dz1.data.iter_mut().zip(&trace.z1.data) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        self.conv1.backward(&trace.x0, &dz1, &mut grads.w1, &mut grads.b1, None);
        Ok(loss)
    }

    fn apply_step(&mut self, grads: &Gradients, scale: f64) {
        let pairs: [(&mut Conv, (&Vec<f64>, &Vec<f64>)); 3] = [
            (&mut self.conv1, (&grads.w1, &grads.b1)),
            (&mut self.conv2, (&grads.w2, &grads.b2)),
            (&mut self.conv3, (&grads.w3, &grads.b3)),
        ];
        for (conv, (gw, gb)) in pairs {
            for (w, g) in conv.weight.iter_mut().zip(gw.iter()) {
                *w -= scale * g;
            }
            for (b, g) in conv.bias.iter_mut().zip(gb.iter()) {
                *b -= scale * g;
            }
        }
    }
}

// ── Training ────────────────────────────────────────────────────────────────

/// Mean loss of `model` over `data` (the quantity [`train`] minimizes).
pub fn mse_loss(model: &EnhancerModel, data: &[TrainingPair]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Domain("training set must not be empty".into()));
    }
    let mut total = 0.0;
    for pair in data {
        let trace = model.forward_trace(pair.input().grid())?;
        let target = pair.target().grid().values();
        let n = trace.out.data.len() as f64;
        let l: f64 = trace
            .out
            .data
            .iter()
            .zip(target)
            .map(|(&o, &t)| (o - t) * (o - t))
            .sum();
        total += l / n;
    }
    Ok(total / data.len() as f64)
}

/// Full-batch gradient descent for `epochs` steps at learning rate `lr`.
///
/// Per epoch: gradients of the mean per-pair loss accumulate over all pairs
/// (visited in order), the loss *before* the update is recorded, and one
/// descent step is taken. Returns the trained model and the loss curve
/// (one entry per epoch); `epochs == 0` returns the model unchanged with an
/// empty curve.
///
/// Fails with [`Error::Domain`] on an empty data set or a non-positive or
/// non-finite `lr`, and with [`Error::Divergence`] if the loss stops being
/// finite.
pub fn train(
    model: &EnhancerModel,
    data: &[TrainingPair],
    epochs: usize,
    lr: f64,
) -> Result<(EnhancerModel, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::Domain("training set must not be empty".into()));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Domain(format!("learning rate must be positive and finite, got {lr}")));
    }
    let mut model = model.clone();
    let mut curve = Vec::with_capacity(epochs);
    let inv_pairs = 1.0 / data.len() as f64;
    for epoch in 0..epochs {
        let mut grads = Gradients::zeros(&model);
        let mut loss = 0.0;
        for pair in data {
            loss += model.backward_pair(pair, &mut grads)?;
        }
        loss *= inv_pairs;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        curve.push(loss);
        model.apply_step(&grads, lr * inv_pairs);
    }
    Ok((model, curve))
}

/// Compares analytic gradients against central finite differences on one
/// training pair and returns the worst relative error.
///
/// Up to 64 parameters are compared, walked in a deterministic seed-derived
/// shuffle of the whole parameter vector. A probe is only trusted when the
/// forward passes at `theta + epsilon` and `theta - epsilon` agree on every
/// ReLU gate: a pre-activation that changes sign inside the probe interval
/// puts a kink between the two evaluations, the loss is not differentiable
/// there, and a central difference estimates nothing — such parameters are
/// passed over in favour of the next one in the shuffle. (Each
/// pre-activation is affine in any single parameter while the gates below
/// it hold, so matching endpoint gates guarantee the loss is smooth on the
/// whole interval.) For each compared parameter the relative error is
/// `|ga - gn| / max(|ga|, |gn|)`, taken as `0` when both magnitudes sit
/// below `1e-12`. `epsilon` is the finite difference step; values around
/// `1e-5` balance truncation against cancellation for `f64`.
pub fn gradient_check(model: &EnhancerModel, pair: &TrainingPair, epsilon: f64) -> f64 {
    let mut grads = Gradients::zeros(model);
    model
        .backward_pair(pair, &mut grads)
        .expect("gradient check requires a valid pair");
    let analytic = grads.flat();

    // Full Fisher-Yates shuffle over the index range, seeded from the model
    // so repeated checks walk the parameters in the same order.
    let total = model.num_params();
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0x6772_6164_6368_6b00);
    for i in (1..total).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }

    let trace_of =
        |m: &EnhancerModel| -> Trace { m.forward_trace(pair.input().grid()).expect("checked above") };
    let loss_of = |trace: &Trace| -> f64 {
        let target = pair.target().grid().values();
        let n = trace.out.data.len() as f64;
        trace
            .out
            .data
            .iter()
            .zip(target)
            .map(|(&o, &t)| (o - t) * (o - t))
            .sum::<f64>()
            / n
    };
    let gates_match = |a: &Trace, b: &Trace| -> bool {
        let same = |x: &FeatureMap, y: &FeatureMap| {
            x.data.iter().zip(&y.data).all(|(&p, &q)| (p > 0.0) == (q > 0.0))
        };
        same(&a.z1, &b.z1) && same(&a.z2, &b.z2)
    };

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for &i in &order {
        if compared == 64 {
            break;
        }
        let original = probe.param(i);
        probe.set_param(i, original + epsilon);
        let up = trace_of(&probe);
        probe.set_param(i, original - epsilon);
        let down = trace_of(&probe);
        probe.set_param(i, original);
        if !gates_match(&up, &down) {
            continue;
        }
        compared += 1;
        let numeric = (loss_of(&up) - loss_of(&down)) / (2.0 * epsilon);
        let ga = analytic[i];
        let denom = Float::max(Float::abs(ga), Float::abs(numeric));
        let rel = if denom < 1e-12 { 0.0 } else { Float::abs(ga - numeric) / denom };
        worst = Float::max(worst, rel);
    }
    worst
}

// ── Tests ───────────────────────────────────────────────────────────────────
