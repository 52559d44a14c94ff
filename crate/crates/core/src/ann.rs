//! Perceptron and one-hidden-layer MLP trained by sequential on-line
//! back-propagation.
//!
//! Every buffer the training loop touches is allocated once in the
//! constructor: the input copy, hidden activations, output, and the output
//! and hidden gradients. `forward`, `backprop` and `update` never allocate, so
//! the persistent footprint of a model is exactly what
//! [`AnnTopology::persistent_reals`] reports.
//!
//! Layout: weight matrices are row-major with shape `(fan_out, fan_in)`.
//! For a perceptron the first layer maps `p -> q` and there is no second
//! layer; for an MLP the first layer maps `p -> h` through the logistic
//! function and the second maps `h -> q` linearly.

use std::mem::size_of;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

/// Logistic function `1 / (1 + e^-z)`.
///
/// Evaluated in the branch that keeps the exponent non-positive so large
/// negative inputs underflow towards zero instead of overflowing.
pub fn logistic<T: Float>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Sizes of a perceptron (`hidden == 0`) or a one-hidden-layer MLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnnTopology {
    inputs: usize,
    hidden: usize,
    outputs: usize,
}

impl AnnTopology {
    pub fn new(inputs: usize, hidden: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidConfig(format!(
                "topology needs at least one input and one output (got p={inputs}, q={outputs})"
            )));
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
        })
    }

    pub fn perceptron(inputs: usize, outputs: usize) -> Result<Self> {
        Self::new(inputs, 0, outputs)
    }

    pub fn mlp(inputs: usize, hidden: usize, outputs: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidConfig("an MLP needs a non-empty hidden layer".into()));
        }
        Self::new(inputs, hidden, outputs)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn is_perceptron(&self) -> bool {
        self.hidden == 0
    }

    /// Number of reals the model keeps alive between calls.
    ///
    /// Perceptron: `W1 (p*q) + b1 (q) + input (p) + output (q) + output
    /// gradient (q)`, i.e. `p*q + p + 3q`.
    ///
    /// MLP: `W1 (p*h) + W2 (h*q) + b1 (h) + b2 (q) + input (p) + hidden (h)
    /// + output (q) + output gradient (q) + hidden gradient (h)`, i.e.
    /// `p*h + h*q + p + 3h + 3q`. For `p == q` this equals the compact form
    /// `p*h + h*q + 2p + 3h + 2q`.
    pub fn persistent_reals(&self) -> usize {
        let (p, h, q) = (self.inputs, self.hidden, self.outputs);
        if h == 0 {
            p * q + p + 3 * q
        } else {
            p * h + h * q + p + 3 * h + 3 * q
        }
    }

    fn first_layer_outputs(&self) -> usize {
        if self.is_perceptron() {
            self.outputs
        } else {
            self.hidden
        }
    }
}

/// Learning-rate schedule and weight decay of the update step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnSchedule {
    /// Initial learning rate.
    pub eta0: f64,
    /// Decay exponent: `eta = eta0 / (1 + alpha * eta0)^gamma`.
    pub gamma: f64,
    /// L2 weight-decay coefficient (weights only, not biases).
    pub epsilon: f64,
}

impl LearnSchedule {
    pub fn new(eta0: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        let s = Self {
            eta0,
            gamma,
            epsilon,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            return Err(Error::InvalidConfig(format!("eta0 must be > 0, got {}", self.eta0)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Learning rate after `updates` performed updates.
    pub fn learning_rate(&self, updates: u64) -> f64 {
        self.eta0 / (1.0 + updates as f64 * self.eta0).powf(self.gamma)
    }
}

/// Loss gradients with respect to every parameter, same layout as the
/// parameters themselves. Diagnostic only; the update step does not build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnModel<T = f32> {
    topology: AnnTopology,
    w1: Vec<T>,
    b1: Vec<T>,
    w2: Vec<T>,
    b2: Vec<T>,
    input: Vec<T>,
    hidden: Vec<T>,
    output: Vec<T>,
    delta_out: Vec<T>,
    delta_hidden: Vec<T>,
    updates: u64,
}

impl<T: Float> AnnModel<T> {
    /// Model with every weight and bias set to zero.
    pub fn zeros(topology: AnnTopology) -> Self {
        let (p, h, q) = (topology.inputs, topology.hidden, topology.outputs);
        let first = topology.first_layer_outputs();
        Self {
            topology,
            w1: vec![T::zero(); first * p],
            b1: vec![T::zero(); first],
            w2: vec![T::zero(); h * q],
            b2: vec![T::zero(); if h == 0 { 0 } else { q }],
            input: vec![T::zero(); p],
            hidden: vec![T::zero(); h],
            output: vec![T::zero(); q],
            delta_out: vec![T::zero(); q],
            delta_hidden: vec![T::zero(); h],
            updates: 0,
        }
    }

    /// Uniform initialisation in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for the
    /// weights and biases of each layer, drawn from a seeded ChaCha stream.
    pub fn seeded(topology: AnnTopology, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_rng(topology, &mut rng)
    }

    pub fn with_rng<R: Rng + ?Sized>(topology: AnnTopology, rng: &mut R) -> Self {
        let mut model = Self::zeros(topology);
        let fill = |buf: &mut [T], fan_in: usize, rng: &mut R| {
            let limit = 1.0 / (fan_in as f64).sqrt();
            for w in buf {
                *w = cast(rng.gen_range(-limit..=limit));
            }
        };
        let p = topology.inputs;
        fill(&mut model.w1, p, rng);
        fill(&mut model.b1, p, rng);
        if !topology.is_perceptron() {
            fill(&mut model.w2, topology.hidden, rng);
            fill(&mut model.b2, topology.hidden, rng);
        }
        model
    }

    pub fn topology(&self) -> AnnTopology {
        self.topology
    }

    /// Number of updates performed so far (the schedule's `alpha`).
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn w1(&self) -> &[T] {
        &self.w1
    }

    pub fn b1(&self) -> &[T] {
        &self.b1
    }

    /// Second-layer weights; empty for a perceptron.
    pub fn w2(&self) -> &[T] {
        &self.w2
    }

    /// Second-layer biases; empty for a perceptron.
    pub fn b2(&self) -> &[T] {
        &self.b2
    }

    pub fn hidden_activations(&self) -> &[T] {
        &self.hidden
    }

    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn delta_out(&self) -> &[T] {
        &self.delta_out
    }

    pub fn delta_hidden(&self) -> &[T] {
        &self.delta_hidden
    }

    /// Replaces all parameters. Slices must match the current layout.
    pub fn set_parameters(&mut self, w1: &[T], b1: &[T], w2: &[T], b2: &[T]) -> Result<()> {
        check_len("w1", self.w1.len(), w1.len())?;
        check_len("b1", self.b1.len(), b1.len())?;
        check_len("w2", self.w2.len(), w2.len())?;
        check_len("b2", self.b2.len(), b2.len())?;
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
        Ok(())
    }

    /// Iterates over every trainable parameter (W1, b1, W2, b2 order).
    pub fn parameters(&self) -> impl Iterator<Item = T> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
    }

    /// Reals actually held by the model buffers.
    pub fn memory_reals(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.input.len()
            + self.hidden.len()
            + self.output.len()
            + self.delta_out.len()
            + self.delta_hidden.len()
    }

    pub fn memory_bytes(&self) -> usize {
        self.memory_reals() * size_of::<T>()
    }

    /// Forward step. Keeps a copy of `x` and the hidden activations for the
    /// following `backprop`/`update`.
    pub fn forward(&mut self, x: &[T]) -> Result<&[T]> {
        check_len("input", self.topology.inputs, x.len())?;
        self.input.copy_from_slice(x);
        self.forward_loaded();
        Ok(&self.output)
    }

    /// Writable input buffer, for callers that fill it in place before
    /// [`AnnModel::forward_loaded`].
    pub fn input_mut(&mut self) -> &mut [T] {
        &mut self.input
    }

    /// Forward step on the current contents of the input buffer.
    pub fn forward_loaded(&mut self) -> &[T] {
        let p = self.topology.inputs;
        if self.topology.is_perceptron() {
            affine(&self.w1, &self.b1, &self.input, &mut self.output, p);
        } else {
            affine(&self.w1, &self.b1, &self.input, &mut self.hidden, p);
            for a in &mut self.hidden {
                *a = logistic(*a);
            }
            affine(
                &self.w2,
                &self.b2,
                &self.hidden,
                &mut self.output,
                self.topology.hidden,
            );
        }
        &self.output
    }

    /// Backprop step against `target`, using the output of the last forward
    /// call: `delta_out = y_hat - y` and, for the MLP,
    /// `delta_hidden = h * (1 - h) * (W2^T delta_out)`.
    pub fn backprop(&mut self, target: &[T]) -> Result<()> {
        check_len("target", self.topology.outputs, target.len())?;
        self.backprop_by(|z| target[z]);
        Ok(())
    }

    pub(crate) fn backprop_by(&mut self, target: impl Fn(usize) -> T) {
        for (z, (d, y_hat)) in self.delta_out.iter_mut().zip(&self.output).enumerate() {
            *d = *y_hat - target(z);
        }
        if self.topology.is_perceptron() {
            return;
        }
        let h = self.topology.hidden;
        for (j, dh) in self.delta_hidden.iter_mut().enumerate() {
            let back = self
                .delta_out
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (z, d)| acc + self.w2[z * h + j] * *d);
            let a = self.hidden[j];
            *dh = a * (T::one() - a) * back;
        }
    }

    /// Update step: `W -= eta * (delta (x) h_prev + epsilon * W)`,
    /// `b -= eta * delta`, then increments the update counter.
    pub fn update(&mut self, schedule: &LearnSchedule) -> Result<()> {
        let eta: T = cast(schedule.learning_rate(self.updates));
        let eps: T = cast(schedule.epsilon);
        let p = self.topology.inputs;
        let mut finite = true;
        if self.topology.is_perceptron() {
            finite &= descend(&mut self.w1, &mut self.b1, &self.delta_out, &self.input, p, eta, eps);
        } else {
            let h = self.topology.hidden;
            finite &= descend(&mut self.w2, &mut self.b2, &self.delta_out, &self.hidden, h, eta, eps);
            finite &= descend(&mut self.w1, &mut self.b1, &self.delta_hidden, &self.input, p, eta, eps);
        }
        self.updates += 1;
        if finite {
            Ok(())
        } else {
            Err(Error::ModelDiverged {
                updates: self.updates,
            })
        }
    }

    /// `forward`, `backprop` and `update` on one pair; returns the squared
    /// error loss measured before the update.
    pub fn train_step(&mut self, x: &[T], y: &[T], schedule: &LearnSchedule) -> Result<T> {
        self.forward(x)?;
        let loss = self.loss(y)?;
        self.backprop(y)?;
        self.update(schedule)?;
        Ok(loss)
    }

    /// `0.5 * ||y_hat - y||^2` for the output of the last forward call.
    pub fn loss(&self, target: &[T]) -> Result<T> {
        check_len("target", self.topology.outputs, target.len())?;
        let half: T = cast(0.5);
        Ok(self
            .output
            .iter()
            .zip(target)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
            * half)
    }

    /// Gradients of the squared-error loss (without the weight-decay term)
    /// from the deltas of the last backprop call.
    pub fn gradients(&self) -> Gradients<T> {
        let outer = |delta: &[T], prev: &[T]| -> Vec<T> {
            delta
                .iter()
                .flat_map(|d| prev.iter().map(move |a| *d * *a))
                .collect()
        };
        if self.topology.is_perceptron() {
            Gradients {
                w1: outer(&self.delta_out, &self.input),
                b1: self.delta_out.clone(),
                w2: Vec::new(),
                b2: Vec::new(),
            }
        } else {
            Gradients {
                w1: outer(&self.delta_hidden, &self.input),
                b1: self.delta_hidden.clone(),
                w2: outer(&self.delta_out, &self.hidden),
                b2: self.delta_out.clone(),
            }
        }
    }
}

fn cast<T: Float>(v: f64) -> T {
    T::from(v).expect("f64 is representable in every Float type")
}

fn affine<T: Float>(w: &[T], b: &[T], x: &[T], out: &mut [T], fan_in: usize) {
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * fan_in..(r + 1) * fan_in];
        *o = row
            .iter()
            .zip(x)
            .fold(b[r], |acc, (wi, xi)| acc + *wi * *xi);
    }
}

fn descend<T: Float>(
    w: &mut [T],
    b: &mut [T],
    delta: &[T],
    prev: &[T],
    fan_in: usize,
    eta: T,
    eps: T,
) -> bool {
    let mut finite = true;
    for (r, d) in delta.iter().enumerate() {
        let row = &mut w[r * fan_in..(r + 1) * fan_in];
        for (wi, a) in row.iter_mut().zip(prev) {
            *wi = *wi - eta * (*d * *a + eps * *wi);
            finite &= wi.is_finite();
        }
        b[r] = b[r] - eta * *d;
        finite &= b[r].is_finite();
    }
    finite
}
