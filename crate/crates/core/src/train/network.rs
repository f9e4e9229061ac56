//! The relaxed network: fixed random wiring plus one gate mixture per neuron.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::arch::ArchitectureSpec;
use crate::error::{Error, Result};
use crate::gate::{softmax_backward, GateWeights, MixtureCoefficients};
use crate::Scalar;

/// One layer of neurons. Neuron `i` reads `a[i]` and `b[i]` from the previous layer.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftLayer<T> {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub weights: Vec<GateWeights<T>>,
}

impl<T> SoftLayer<T> {
    pub fn width(&self) -> usize {
        self.a.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoftLgn<T> {
    pub spec: ArchitectureSpec,
    pub layers: Vec<SoftLayer<T>>,
    /// Groupsum temperature.
    pub tau: T,
}

/// Draws wiring for a layer of `width` neurons over `prev` inputs.
///
/// Both endpoint lists are built from stacked random permutations of the
/// previous layer, so every input is used about equally often. Pairs that
/// collide are repaired by swapping `b` endpoints.
pub(crate) fn draw_wiring(rng: &mut ChaCha8Rng, prev: usize, width: usize) -> (Vec<u32>, Vec<u32>) {
    let mut pool = Vec::with_capacity(2 * width + prev);
    let mut perm: Vec<u32> = (0..prev as u32).collect();
    while pool.len() < 2 * width {
        perm.shuffle(rng);
        pool.extend_from_slice(&perm);
    }
    pool.truncate(2 * width);
    let mut b = pool.split_off(width);
    let a = pool;
    for i in 0..width {
        if a[i] != b[i] {
            continue;
        }
        // try a few random partners first, then scan
        let mut fixed = false;
        for _ in 0..16 {
            let j = rng.random_range(0..width);
            if j != i && a[i] != b[j] && a[j] != b[i] {
                b.swap(i, j);
                fixed = true;
                break;
            }
        }
        if !fixed {
            if let Some(j) = (0..width).find(|&j| j != i && a[i] != b[j] && a[j] != b[i]) {
                b.swap(i, j);
            } else {
                // only possible for tiny layers; pick any other endpoint
                b[i] = (a[i] + 1) % prev as u32;
            }
        }
    }
    (a, b)
}

impl<T: Scalar> SoftLgn<T> {
    /// Builds a network with seeded random wiring and standard-normal logits.
    pub fn init(spec: &ArchitectureSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.wiring_seed);
        let mut prev = spec.input_bits;
        let mut layers = Vec::new();
        for width in spec.layer_widths() {
            let (a, b) = draw_wiring(&mut rng, prev, width);
            let weights = (0..width)
                .map(|_| {
                    let mut w = [T::zero(); 16];
                    for v in w.iter_mut() {
                        *v = T::of(rng.sample::<f64, _>(StandardNormal));
                    }
                    GateWeights(w)
                })
                .collect();
            layers.push(SoftLayer { a, b, weights });
            prev = width;
        }
        Ok(SoftLgn {
            tau: T::of(default_tau(spec)),
            spec: spec.clone(),
            layers,
        })
    }

    pub fn input_bits(&self) -> usize {
        self.spec.input_bits
    }

    pub fn class_count(&self) -> usize {
        self.spec.class_count
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width())
    }

    pub fn group_size(&self) -> usize {
        self.output_width() / self.class_count()
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.width()).sum()
    }

    /// Collapsed polynomial coefficients of every neuron, layer-major.
    pub fn coefficients(&self) -> Vec<MixtureCoefficients<T>> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .map(|w| MixtureCoefficients::from_probabilities(&w.softmax()))
            .collect()
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_bits() {
            return Err(Error::domain(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_bits()
            )));
        }
        if let Some(v) = input.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::domain(format!("input value {v} outside [0, 1]")));
        }
        Ok(())
    }

    /// Activations of the last layer.
    pub fn forward_activations(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let coef = self.coefficients();
        let mut ws = Workspace::new(self);
        ws.forward(self, &coef, input);
        Ok(ws.layer(self.layers.len()).to_vec())
    }

    /// Class logits: per-group sums of last-layer activations divided by `tau`.
    pub fn forward_soft(&self, input: &[T]) -> Result<Vec<T>> {
        let acts = self.forward_activations(input)?;
        Ok(group_logits(&acts, self.class_count(), self.tau))
    }

    /// Mean cross-entropy and its gradient w.r.t. every logit, computed in one
    /// pass over `samples`.
    pub fn loss_and_gradient(&self, samples: &[(&[T], usize)]) -> Result<(T, Vec<[T; 16]>)> {
        if samples.is_empty() {
            return Err(Error::domain("empty batch"));
        }
        for (x, y) in samples {
            self.check_input(x)?;
            if *y >= self.class_count() {
                return Err(Error::domain(format!("label {y} outside [0, {})", self.class_count())));
            }
        }
        let coef = self.coefficients();
        let mut ws = Workspace::new(self);
        let mut acc = vec![[T::zero(); 4]; self.neuron_count()];
        let mut loss = T::zero();
        for (x, y) in samples {
            loss += ws.forward_backward(self, &coef, x, *y, &mut acc);
        }
        let n = T::of(samples.len() as f64);
        let grads = self.logit_gradients(&acc, n);
        Ok((loss / n, grads))
    }

    /// Converts accumulated coefficient gradients into logit gradients, divided by `n`.
    pub(crate) fn logit_gradients(&self, acc: &[[T; 4]], n: T) -> Vec<[T; 16]> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .zip(acc)
            .map(|(w, g)| {
                let g = [g[0] / n, g[1] / n, g[2] / n, g[3] / n];
                softmax_backward(&w.softmax(), &MixtureCoefficients::probability_grad(g))
            })
            .collect()
    }

    pub fn weights_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().all(|w| w.is_finite()))
    }
}

/// `group_size / 16`: keeps logits in a range where cross-entropy neither
/// saturates nor vanishes.
pub fn default_tau(spec: &ArchitectureSpec) -> f64 {
    spec.group_size() as f64 / 16.0
}

pub(crate) fn group_logits<T: Scalar>(acts: &[T], classes: usize, tau: T) -> Vec<T> {
    let g = acts.len() / classes;
    acts.chunks_exact(g).map(|c| c.iter().copied().sum::<T>() / tau).collect()
}

/// Numerically stable `-log softmax(z)[y]` and `softmax(z)`.
pub(crate) fn cross_entropy<T: Scalar>(z: &[T], y: usize) -> (T, Vec<T>) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut p: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: T = p.iter().copied().sum();
    for v in p.iter_mut() {
        *v = *v / total;
    }
    let loss = -(z[y] - max - total.ln());
    (loss, p)
}

/// Scratch buffers for one sample at a time.
pub(crate) struct Workspace<T> {
    offsets: Vec<usize>,
    acts: Vec<T>,
    grads: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub(crate) fn new(net: &SoftLgn<T>) -> Self {
        let mut offsets = vec![0, net.input_bits()];
        for l in &net.layers {
            offsets.push(offsets.last().unwrap() + l.width());
        }
        let total = *offsets.last().unwrap();
        Workspace {
            offsets,
            acts: vec![T::zero(); total],
            grads: vec![T::zero(); total],
        }
    }

    /// Activations of layer `l`, where layer 0 is the input.
    pub(crate) fn layer(&self, l: usize) -> &[T] {
        &self.acts[self.offsets[l]..self.offsets[l + 1]]
    }

    pub(crate) fn forward(&mut self, net: &SoftLgn<T>, coef: &[MixtureCoefficients<T>], input: &[T]) {
        self.acts[..input.len()].copy_from_slice(input);
        let mut neuron = 0;
        for (l, layer) in net.layers.iter().enumerate() {
            let (prev, rest) = self.acts.split_at_mut(self.offsets[l + 1]);
            let prev = &prev[self.offsets[l]..];
            let out = &mut rest[..layer.width()];
            for i in 0..layer.width() {
                let x = prev[layer.a[i] as usize];
                let y = prev[layer.b[i] as usize];
                out[i] = coef[neuron + i].eval(x, y);
            }
            neuron += layer.width();
        }
    }

    /// Runs one sample forward and backward, adds its coefficient gradients to
    /// `acc` and returns its loss.
    pub(crate) fn forward_backward(
        &mut self,
        net: &SoftLgn<T>,
        coef: &[MixtureCoefficients<T>],
        input: &[T],
        label: usize,
        acc: &mut [[T; 4]],
    ) -> T {
        self.forward(net, coef, input);
        let depth = net.layers.len();
        let classes = net.class_count();
        let logits = group_logits(self.layer(depth), classes, net.tau);
        let (loss, mut p) = cross_entropy(&logits, label);
        p[label] -= T::one();

        let g_out = net.output_width() / classes;
        let base = self.offsets[depth];
        for (j, g) in self.grads[base..base + net.output_width()].iter_mut().enumerate() {
            *g = p[j / g_out] / net.tau;
        }
        let mut neuron_end = acc.len();
        for l in (0..depth).rev() {
            let layer = &net.layers[l];
            let w = layer.width();
            let start = neuron_end - w;
            let (lo, hi) = self.offsets.split_at(l + 1);
            let (prev_off, cur_off) = (lo[l], hi[0]);
            if l > 0 {
                self.grads[prev_off..cur_off].iter_mut().for_each(|g| *g = T::zero());
            }
            for i in 0..w {
                let g = self.grads[cur_off + i];
                let ia = prev_off + layer.a[i] as usize;
                let ib = prev_off + layer.b[i] as usize;
                let (x, y) = (self.acts[ia], self.acts[ib]);
                let k = coef[start + i].0;
                let cell = &mut acc[start + i];
                cell[0] += g;
                cell[1] += g * x;
                cell[2] += g * y;
                cell[3] += g * x * y;
                if l > 0 {
                    self.grads[ia] += g * (k[1] + k[3] * y);
                    self.grads[ib] += g * (k[2] + k[3] * x);
                }
            }
            neuron_end = start;
        }
        loss
    }

    /// Loss and logits for one sample without gradients.
    pub(crate) fn loss(&mut self, net: &SoftLgn<T>, coef: &[MixtureCoefficients<T>], input: &[T], label: usize) -> (T, Vec<T>) {
        self.forward(net, coef, input);
        let logits = group_logits(self.layer(net.layers.len()), net.class_count(), net.tau);
        (cross_entropy(&logits, label).0, logits)
    }
}
