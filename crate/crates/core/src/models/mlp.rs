//! Fully connected networks with hand-written backpropagation.
//!
//! Parameters live in one flat [`ParamVector`]. For each layer, in order, the
//! weight matrix is stored row-major as `out × in`, followed by the `out`
//! biases. Hidden layers share one activation; the final layer may use
//! another.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ParamVector, Rng};

/// Upper bound on parameter count for the desk-scale models.
pub const MAX_PARAMS: usize = 10_000;

const CHECKPOINT_MAGIC: &[u8; 4] = b"FMTM";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`, given the activation `a = apply(z)`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Identity => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => Activation::Sigmoid,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Identity,
            _ => return Err(Error::Decode(format!("unknown activation code {c}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Softmax over the final activations, then cross-entropy against a class
    /// index or a (possibly soft) target distribution.
    CrossEntropy,
    /// Half squared error summed over outputs.
    Mse,
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// One supervised target.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Class(usize),
    Vector(&'a [f64]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Classes(Vec<usize>),
    Vectors(Vec<ParamVector>),
}

impl Targets {
    fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Vectors(v) => v.len(),
        }
    }
}

/// Inputs paired with targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    inputs: Vec<ParamVector>,
    targets: Targets,
}

impl Batch {
    pub fn new(inputs: Vec<ParamVector>, targets: Targets) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::param("batch must contain at least one input"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::param(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let d = inputs[0].dim();
        if let Some(bad) = inputs.iter().find(|x| x.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bad.dim(),
            });
        }
        Ok(Batch { inputs, targets })
    }

    pub fn classes(inputs: Vec<ParamVector>, labels: Vec<usize>) -> Result<Self> {
        Batch::new(inputs, Targets::Classes(labels))
    }

    pub fn vectors(inputs: Vec<ParamVector>, targets: Vec<ParamVector>) -> Result<Self> {
        Batch::new(inputs, Targets::Vectors(targets))
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[ParamVector] {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn target(&self, i: usize) -> Target<'_> {
        match &self.targets {
            Targets::Classes(c) => Target::Class(c[i]),
            Targets::Vectors(v) => Target::Vector(v[i].as_slice()),
        }
    }

    /// Class labels, if this batch is labelled by class.
    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Classes(c) => Some(c),
            Targets::Vectors(_) => None,
        }
    }

    /// The examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Batch> {
        let inputs = indices.iter().map(|&i| self.inputs[i].clone()).collect();
        let targets = match &self.targets {
            Targets::Classes(c) => Targets::Classes(indices.iter().map(|&i| c[i]).collect()),
            Targets::Vectors(v) => {
                Targets::Vectors(indices.iter().map(|&i| v[i].clone()).collect())
            }
        };
        Batch::new(inputs, targets)
    }

    pub fn example(&self, i: usize) -> Batch {
        self.subset(&[i]).expect("index in range")
    }

    /// Concatenates batches with the same target kind.
    pub fn concat(parts: &[Batch]) -> Result<Batch> {
        let mut inputs = Vec::new();
        let mut classes = Vec::new();
        let mut vectors = Vec::new();
        for p in parts {
            inputs.extend(p.inputs.iter().cloned());
            match &p.targets {
                Targets::Classes(c) => classes.extend_from_slice(c),
                Targets::Vectors(v) => vectors.extend(v.iter().cloned()),
            }
        }
        if !classes.is_empty() && !vectors.is_empty() {
            return Err(Error::param("cannot mix class and vector targets"));
        }
        if vectors.is_empty() {
            Batch::classes(inputs, classes)
        } else {
            Batch::vectors(inputs, vectors)
        }
    }
}

/// A small multilayer perceptron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr")]
pub struct TinyModel {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: ParamVector,
}

#[derive(Deserialize)]
struct ModelRepr {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: ParamVector,
}

impl TryFrom<ModelRepr> for TinyModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        TinyModel::from_params(r.sizes, r.hidden, r.output, r.params)
    }
}

struct Trace {
    zs: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

impl TinyModel {
    /// Number of parameters for the given layer sizes.
    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn check_sizes(sizes: &[usize]) -> Result<()> {
        if sizes.len() < 2 {
            return Err(Error::param(
                "a model needs at least an input and an output layer",
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::param("layer sizes must be positive"));
        }
        let n = Self::param_count(sizes);
        if n > MAX_PARAMS {
            return Err(Error::param(format!(
                "{n} parameters exceeds the {MAX_PARAMS} limit"
            )));
        }
        Ok(())
    }

    /// Random model with `act` on every layer, initialised uniformly in
    /// `[-1/√fan_in, 1/√fan_in]`.
    pub fn new(sizes: &[usize], act: Activation, rng: &mut Rng) -> Result<Self> {
        Self::check_sizes(sizes)?;
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            let r = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng.uniform(-r, r));
            }
        }
        Ok(TinyModel {
            sizes: sizes.to_vec(),
            hidden: act,
            output: act,
            params: ParamVector::from_vec(params),
        })
    }

    /// All-zero parameters.
    pub fn zeros(sizes: &[usize], act: Activation) -> Result<Self> {
        Self::check_sizes(sizes)?;
        Ok(TinyModel {
            sizes: sizes.to_vec(),
            hidden: act,
            output: act,
            params: ParamVector::zeros(Self::param_count(sizes))?,
        })
    }

    pub fn from_params(
        sizes: Vec<usize>,
        hidden: Activation,
        output: Activation,
        params: ParamVector,
    ) -> Result<Self> {
        Self::check_sizes(&sizes)?;
        let expected = Self::param_count(&sizes);
        if params.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: params.dim(),
            });
        }
        Ok(TinyModel {
            sizes,
            hidden,
            output,
            params,
        })
    }

    /// Replaces the final layer's activation.
    pub fn with_output(mut self, act: Activation) -> Self {
        self.output = act;
        self
    }

    /// Same architecture, new parameters.
    pub fn with_params(&self, params: ParamVector) -> Result<Self> {
        TinyModel::from_params(self.sizes.clone(), self.hidden, self.output, params)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.dim()
    }

    fn layer_act(&self, l: usize) -> Activation {
        if l + 2 == self.sizes.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let p = self.params.as_slice();
        let mut zs = Vec::with_capacity(self.sizes.len() - 1);
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.layer_act(l);
            let w = &p[off..off + n_in * n_out];
            let b = &p[off + n_in * n_out..off + n_in * n_out + n_out];
            let a_in = &acts[l];
            let mut z = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                z.push(row.iter().zip(a_in).map(|(wi, ai)| wi * ai).sum::<f64>() + b[o]);
            }
            let a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            zs.push(z);
            acts.push(a);
            off += n_in * n_out + n_out;
        }
        Trace { zs, acts }
    }

    /// Backpropagates `out_grad` (dL/d final activation), adding `scale` times
    /// the parameter gradient into `grad`. Returns dL/d input.
    fn backprop(&self, tr: &Trace, out_grad: Vec<f64>, grad: &mut [f64], scale: f64) -> Vec<f64> {
        let p = self.params.as_slice();
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut g = out_grad;
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.layer_act(l);
            let off = offsets[l];
            let delta: Vec<f64> = (0..n_out)
                .map(|o| g[o] * act.derivative(tr.zs[l][o], tr.acts[l + 1][o]))
                .collect();
            let a_in = &tr.acts[l];
            let mut g_prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = off + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += scale * d * a_in[i];
                    g_prev[i] += p[row + i] * d;
                }
                grad[off + n_in * n_out + o] += scale * d;
            }
            g = g_prev;
        }
        g
    }

    pub fn forward(&self, x: &ParamVector) -> Result<ParamVector> {
        self.check_input(x.as_slice())?;
        let mut tr = self.trace(x.as_slice());
        ParamVector::new(tr.acts.pop().unwrap())
    }

    /// Index of the largest output.
    pub fn predict(&self, x: &ParamVector) -> Result<usize> {
        let out = self.forward(x)?;
        Ok(argmax(out.as_slice()))
    }

    /// Fraction of inputs whose prediction equals the label.
    pub fn accuracy(&self, inputs: &[ParamVector], labels: &[usize]) -> Result<f64> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::param(
                "accuracy needs equally many inputs and labels",
            ));
        }
        let mut hits = 0usize;
        for (x, &y) in inputs.iter().zip(labels) {
            if self.predict(x)? == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / inputs.len() as f64)
    }

    fn check_target(&self, t: Target<'_>) -> Result<()> {
        match t {
            Target::Class(c) if c >= self.output_dim() => Err(Error::param(format!(
                "class {c} out of range for {} outputs",
                self.output_dim()
            ))),
            Target::Vector(v) if v.len() != self.output_dim() => Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                actual: v.len(),
            }),
            _ => Ok(()),
        }
    }

    fn loss_and_out_grad(a: &[f64], t: Target<'_>, loss: Loss) -> (f64, Vec<f64>) {
        match loss {
            Loss::Mse => {
                let mut l = 0.0;
                let g: Vec<f64> = (0..a.len())
                    .map(|k| {
                        let tk = match t {
                            Target::Class(c) => (k == c) as u8 as f64,
                            Target::Vector(v) => v[k],
                        };
                        let r = a[k] - tk;
                        l += 0.5 * r * r;
                        r
                    })
                    .collect();
                (l, g)
            }
            Loss::CrossEntropy => {
                let s = softmax(a);
                match t {
                    Target::Class(c) => {
                        let l = -s[c].max(f64::MIN_POSITIVE).ln();
                        let mut g = s;
                        g[c] -= 1.0;
                        (l, g)
                    }
                    Target::Vector(v) => {
                        let mass: f64 = v.iter().sum();
                        let l = -v
                            .iter()
                            .zip(&s)
                            .map(|(tk, sk)| tk * sk.max(f64::MIN_POSITIVE).ln())
                            .sum::<f64>();
                        let g = s.iter().zip(v).map(|(sk, tk)| sk * mass - tk).collect();
                        (l, g)
                    }
                }
            }
        }
    }

    /// Loss and parameter gradient for one example.
    pub fn example_gradient(
        &self,
        x: &ParamVector,
        t: Target<'_>,
        loss: Loss,
    ) -> Result<(f64, ParamVector)> {
        self.check_input(x.as_slice())?;
        self.check_target(t)?;
        let tr = self.trace(x.as_slice());
        let (l, og) = Self::loss_and_out_grad(tr.acts.last().unwrap(), t, loss);
        let mut grad = vec![0.0; self.num_params()];
        self.backprop(&tr, og, &mut grad, 1.0);
        Ok((l, ParamVector::new(grad)?))
    }

    /// Mean loss over the batch and its gradient.
    pub fn backward(&self, batch: &Batch, loss: Loss) -> Result<(f64, ParamVector)> {
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.num_params()];
        let mut total = 0.0;
        for (i, x) in batch.inputs().iter().enumerate() {
            self.check_input(x.as_slice())?;
            let t = batch.target(i);
            self.check_target(t)?;
            let tr = self.trace(x.as_slice());
            let (l, og) = Self::loss_and_out_grad(tr.acts.last().unwrap(), t, loss);
            total += l;
            self.backprop(&tr, og, &mut grad, 1.0);
        }
        // Sum first, scale once: matches summing per-example gradients.
        grad.iter_mut().for_each(|g| *g *= scale);
        let mean = total * scale;
        if !mean.is_finite() {
            return Err(Error::param("loss is not finite"));
        }
        Ok((mean, ParamVector::new(grad)?))
    }

    /// Mean loss without the gradient.
    pub fn loss(&self, batch: &Batch, loss: Loss) -> Result<f64> {
        let mut total = 0.0;
        for (i, x) in batch.inputs().iter().enumerate() {
            self.check_input(x.as_slice())?;
            let t = batch.target(i);
            self.check_target(t)?;
            let tr = self.trace(x.as_slice());
            total += Self::loss_and_out_grad(tr.acts.last().unwrap(), t, loss).0;
        }
        Ok(total / batch.len() as f64)
    }

    /// Gradient with respect to the input of `Σ_k out_grad[k] · output[k]`.
    pub fn input_gradient(&self, x: &ParamVector, out_grad: &[f64]) -> Result<ParamVector> {
        self.check_input(x.as_slice())?;
        if out_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                actual: out_grad.len(),
            });
        }
        let tr = self.trace(x.as_slice());
        let mut scratch = vec![0.0; self.num_params()];
        ParamVector::new(self.backprop(&tr, out_grad.to_vec(), &mut scratch, 0.0))
    }

    /// Parameter gradient of `Σ_k out_grad[k] · output[k]`.
    pub fn param_gradient(&self, x: &ParamVector, out_grad: &[f64]) -> Result<ParamVector> {
        self.check_input(x.as_slice())?;
        if out_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                actual: out_grad.len(),
            });
        }
        let tr = self.trace(x.as_slice());
        let mut grad = vec![0.0; self.num_params()];
        self.backprop(&tr, out_grad.to_vec(), &mut grad, 1.0);
        ParamVector::new(grad)
    }

    /// One gradient-descent step on the batch: `w ← w − η∇`.
    pub fn sgd_step(&self, batch: &Batch, eta: f64, loss: Loss) -> Result<TinyModel> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::param(format!(
                "learning rate must be >= 0, got {eta}"
            )));
        }
        let (_, g) = self.backward(batch, loss)?;
        self.with_params(self.params.axpy(-eta, &g)?)
    }

    /// Relative error `‖a − f‖ / max(‖a‖, ‖f‖)` between the backprop gradient
    /// `a` and central differences `f` with step `h`.
    pub fn gradient_check(&self, batch: &Batch, loss: Loss, h: f64) -> Result<f64> {
        let (_, analytic) = self.backward(batch, loss)?;
        let mut p = self.params.clone().into_vec();
        let mut diff = 0.0;
        let mut fd_norm = 0.0;
        for (i, a) in analytic.iter().enumerate() {
            let orig = p[i];
            p[i] = orig + h;
            let up = self
                .with_params(ParamVector::from_vec(p.clone()))?
                .loss(batch, loss)?;
            p[i] = orig - h;
            let down = self
                .with_params(ParamVector::from_vec(p.clone()))?
                .loss(batch, loss)?;
            p[i] = orig;
            let f = (up - down) / (2.0 * h);
            diff += (a - f) * (a - f);
            fd_norm += f * f;
        }
        let scale = analytic.norm_l2().max(fd_norm.sqrt());
        Ok(if scale == 0.0 {
            0.0
        } else {
            diff.sqrt() / scale
        })
    }

    /// Binary checkpoint: magic `FMTM`, `u32` version, hidden and output
    /// activation codes (`u8` each), `u32` layer count, the layer sizes as
    /// `u32`, then every parameter as `f64`. All little-endian.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + 4 * self.sizes.len() + 8 * self.num_params());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.hidden.code());
        out.push(self.output.code());
        out.extend_from_slice(&(self.sizes.len() as u32).to_le_bytes());
        for &s in &self.sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        for v in self.params.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<TinyModel> {
        let bad = |m: &str| Error::Decode(format!("checkpoint: {m}"));
        if bytes.len() < 14 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hidden = Activation::from_code(bytes[8])?;
        let output = Activation::from_code(bytes[9])?;
        let n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let sizes_end = 14 + 4 * n;
        if bytes.len() < sizes_end {
            return Err(bad("truncated layer sizes"));
        }
        let sizes: Vec<usize> = bytes[14..sizes_end]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let rest = &bytes[sizes_end..];
        if rest.len() % 8 != 0 {
            return Err(bad("parameter block is not a whole number of f64"));
        }
        let params = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        TinyModel::from_params(sizes, hidden, output, ParamVector::new(params)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TinyModel> {
        TinyModel::from_checkpoint_bytes(&std::fs::read(path)?)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    // Straight-line forward pass written independently of `trace`.
    fn reference_forward(m: &TinyModel, x: &[f64]) -> Vec<f64> {
        let p = m.params().as_slice();
        let s = m.sizes();
        let mut a = x.to_vec();
        let mut off = 0;
        for l in 0..s.len() - 1 {
            let act = if l == s.len() - 2 {
                m.output_activation()
            } else {
                m.hidden_activation()
            };
            let mut next = vec![0.0; s[l + 1]];
            for (o, out) in next.iter_mut().enumerate() {
                let mut z = p[off + s[l] * s[l + 1] + o];
                for i in 0..s[l] {
                    z += p[off + o * s[l] + i] * a[i];
                }
                *out = act.apply(z);
            }
            off += s[l] * s[l + 1] + s[l + 1];
            a = next;
        }
        a
    }

    #[test]
    fn zero_sigmoid_outputs_half() {
        let m = TinyModel::zeros(&[3, 4, 2], Activation::Sigmoid).unwrap();
        let y = m.forward(&pv(&[5.0, -2.0, 0.3])).unwrap();
        assert_eq!(y.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn single_identity_neuron() {
        let m = TinyModel::from_params(
            vec![1, 1],
            Activation::Identity,
            Activation::Identity,
            pv(&[2.0, 1.0]),
        )
        .unwrap();
        assert_eq!(m.forward(&pv(&[3.0])).unwrap().as_slice(), &[7.0]);
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = Rng::new(3);
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::Relu] {
            let m = TinyModel::new(&[5, 6, 4, 3], act, &mut rng)
                .unwrap()
                .with_output(Activation::Identity);
            for _ in 0..20 {
                let x = ParamVector::random_uniform(5, -2.0, 2.0, &mut rng).unwrap();
                let got = m.forward(&x).unwrap();
                let want = reference_forward(&m, x.as_slice());
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mse_fixed_point_has_zero_gradient() {
        let mut rng = Rng::new(4);
        let m = TinyModel::new(&[3, 5, 2], Activation::Tanh, &mut rng).unwrap();
        let x = pv(&[0.1, -0.4, 0.9]);
        let y = m.forward(&x).unwrap();
        let b = Batch::vectors(vec![x], vec![y]).unwrap();
        let (l, g) = m.backward(&b, Loss::Mse).unwrap();
        assert!(l <= 1e-24);
        assert!(g.norm_inf() <= 1e-12);
    }

    #[test]
    fn doubling_residual_doubles_gradient() {
        let mut rng = Rng::new(5);
        let m = TinyModel::new(&[2, 3, 2], Activation::Sigmoid, &mut rng).unwrap();
        let x = pv(&[0.3, 0.7]);
        let y = m.forward(&x).unwrap();
        let t1 = y.add(&pv(&[0.2, -0.1])).unwrap();
        let t2 = y.add(&pv(&[0.4, -0.2])).unwrap();
        let (_, g1) = m
            .backward(
                &Batch::vectors(vec![x.clone()], vec![t1]).unwrap(),
                Loss::Mse,
            )
            .unwrap();
        let (_, g2) = m
            .backward(&Batch::vectors(vec![x], vec![t2]).unwrap(), Loss::Mse)
            .unwrap();
        assert!(g2.max_abs_diff(&g1.scale(2.0).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn softmax_is_a_simplex() {
        let s = softmax(&[1000.0, -3.0, 2.5, 0.0]);
        assert!(s.iter().all(|&v| v >= 0.0));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eta_zero_is_identity() {
        let mut rng = Rng::new(6);
        let m = TinyModel::new(&[2, 3, 2], Activation::Sigmoid, &mut rng).unwrap();
        let b = Batch::classes(vec![pv(&[1.0, 0.0])], vec![1]).unwrap();
        assert_eq!(m.sgd_step(&b, 0.0, Loss::CrossEntropy).unwrap(), m);
    }

    #[test]
    fn linear_neuron_learns_slope_two() {
        let xs: Vec<ParamVector> = (-5..=5).map(|i| pv(&[i as f64 / 5.0])).collect();
        let ys: Vec<ParamVector> = xs.iter().map(|x| x.scale(2.0).unwrap()).collect();
        let b = Batch::vectors(xs, ys).unwrap();
        let mut m = TinyModel::zeros(&[1, 1], Activation::Identity).unwrap();
        for _ in 0..2000 {
            m = m.sgd_step(&b, 0.5, Loss::Mse).unwrap();
        }
        assert!((m.params().get(0) - 2.0).abs() < 1e-3);
        assert!(m.params().get(1).abs() < 1e-3);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = Rng::new(7);
        let m = TinyModel::new(&[4, 3, 2], Activation::Relu, &mut rng)
            .unwrap()
            .with_output(Activation::Identity);
        let bytes = m.to_checkpoint_bytes();
        assert_eq!(&bytes[..4], b"FMTM");
        assert_eq!(bytes.len(), 14 + 12 + 8 * m.num_params());
        assert_eq!(TinyModel::from_checkpoint_bytes(&bytes).unwrap(), m);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<TinyModel>(&json).unwrap(), m);
    }

    #[test]
    fn rejects_wrong_input_dim() {
        let m = TinyModel::zeros(&[3, 2], Activation::Sigmoid).unwrap();
        assert!(matches!(
            m.forward(&pv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let layouts: [&[usize]; 5] = [&[2, 1], &[2, 3, 1], &[4, 8, 3], &[3, 5, 4, 2], &[64, 7, 10]];
        let acts = [
            Activation::Sigmoid,
            Activation::Relu,
            Activation::Tanh,
            Activation::Identity,
        ];
        let mut rng = Rng::new(11);
        for sizes in layouts {
            for act in acts {
                for loss in [Loss::Mse, Loss::CrossEntropy] {
                    let m = TinyModel::new(sizes, act, &mut rng).unwrap();
                    let n_out = *sizes.last().unwrap();
                    let inputs: Vec<_> = (0..3)
                        .map(|_| {
                            ParamVector::random_uniform(sizes[0], -1.0, 1.0, &mut rng).unwrap()
                        })
                        .collect();
                    let batch = Batch::classes(inputs, vec![0, n_out - 1, n_out / 2]).unwrap();
                    let err = m.gradient_check(&batch, loss, 1e-5).unwrap();
                    assert!(err < 1e-4, "{sizes:?} {act:?} {loss:?}: {err}");
                }
            }
        }
    }

    #[test]
    fn xor_is_learned() {
        let data = crate::models::data::xor();
        let mut m = TinyModel::new(&[2, 8, 2], Activation::Sigmoid, &mut Rng::new(3))
            .unwrap()
            .with_output(Activation::Identity);
        let start = m.loss(&data, Loss::CrossEntropy).unwrap();
        for _ in 0..5000 {
            m = m.sgd_step(&data, 0.5, Loss::CrossEntropy).unwrap();
        }
        assert!(m.loss(&data, Loss::CrossEntropy).unwrap() < start / 10.0);
        assert_eq!(
            m.accuracy(data.inputs(), data.labels().unwrap()).unwrap(),
            1.0
        );
    }
}
