//! Classifiers over flat parameter vectors.
//!
//! Softmax regression layout: `W` (C × F, row-major) then `b` (C).
//! One-hidden-layer perceptron layout: `W1` (H × F), `b1` (H), `W2` (C × H),
//! `b2` (C), with tanh hidden units.

use crate::error::{check_dim, Error, Result};
use crate::rng::Stream;
use crate::vector::ModelVector;

use super::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Softmax,
    Mlp { hidden: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub features: usize,
    pub classes: usize,
    pub kind: ModelKind,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Index of the largest entry; ties go to the lowest index.
fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    best
}

impl ModelShape {
    pub fn softmax(features: usize, classes: usize) -> Self {
        Self {
            features,
            classes,
            kind: ModelKind::Softmax,
        }
    }

    pub fn dim(&self) -> usize {
        let (f, c) = (self.features, self.classes);
        match self.kind {
            ModelKind::Softmax => f * c + c,
            ModelKind::Mlp { hidden: h } => h * f + h + c * h + c,
        }
    }

    /// Zero for softmax regression; scaled Gaussian weights and zero biases
    /// for the perceptron (symmetric zero init would never train).
    pub fn init(&self, stream: &mut Stream) -> ModelVector {
        match self.kind {
            ModelKind::Softmax => ModelVector::zeros(self.dim()),
            ModelKind::Mlp { hidden: h } => {
                let (f, c) = (self.features, self.classes);
                let mut p = ModelVector::zeros(self.dim());
                let s1 = 1.0 / (f as f64).sqrt();
                for v in p[..h * f].iter_mut() {
                    *v = s1 * stream.standard_normal();
                }
                let s2 = 1.0 / (h as f64).sqrt();
                let w2 = h * f + h;
                for v in p[w2..w2 + c * h].iter_mut() {
                    *v = s2 * stream.standard_normal();
                }
                p
            }
        }
    }

    fn check(&self, params: &ModelVector, data: &Dataset) -> Result<()> {
        check_dim("model parameters", self.dim(), params.dim())?;
        check_dim("dataset features", self.features, data.num_features())?;
        check_dim("dataset classes", self.classes, data.num_classes())
    }

    /// Class probabilities for one sample; also returns hidden activations
    /// for the perceptron.
    fn forward(&self, p: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (f, c) = (self.features, self.classes);
        match self.kind {
            ModelKind::Softmax => {
                let (w, b) = p.split_at(f * c);
                let mut z: Vec<f64> = (0..c)
                    .map(|k| b[k] + w[k * f..(k + 1) * f].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                softmax_in_place(&mut z);
                (z, Vec::new())
            }
            ModelKind::Mlp { hidden: h } => {
                let (w1, rest) = p.split_at(h * f);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                let a: Vec<f64> = (0..h)
                    .map(|j| (b1[j] + w1[j * f..(j + 1) * f].iter().zip(x).map(|(u, v)| u * v).sum::<f64>()).tanh())
                    .collect();
                let mut z: Vec<f64> = (0..c)
                    .map(|k| b2[k] + w2[k * h..(k + 1) * h].iter().zip(&a).map(|(u, v)| u * v).sum::<f64>())
                    .collect();
                softmax_in_place(&mut z);
                (z, a)
            }
        }
    }

    pub fn predict(&self, params: &[f64], x: &[f64]) -> usize {
        argmax(&self.forward(params, x).0)
    }

    /// Mean cross-entropy over `indices` of `data` and its exact gradient.
    pub fn loss_and_gradient(
        &self,
        params: &ModelVector,
        data: &Dataset,
        indices: &[usize],
    ) -> Result<(f64, ModelVector)> {
        self.check(params, data)?;
        if indices.is_empty() {
            return Err(Error::Usage("empty batch".into()));
        }
        let (f, c) = (self.features, self.classes);
        let mut grad = ModelVector::zeros(self.dim());
        let mut loss = 0.0;
        let scale = 1.0 / indices.len() as f64;
        for &i in indices {
            let x = data.sample(i);
            let y = data.label(i);
            let (mut prob, hidden) = self.forward(params, x);
            loss -= prob[y].max(f64::MIN_POSITIVE).ln();
            prob[y] -= 1.0;
            let delta = prob;
            match self.kind {
                ModelKind::Softmax => {
                    let (gw, gb) = grad.split_at_mut(f * c);
                    for k in 0..c {
                        let d = delta[k] * scale;
                        for (g, xv) in gw[k * f..(k + 1) * f].iter_mut().zip(x) {
                            *g += d * xv;
                        }
                        gb[k] += d;
                    }
                }
                ModelKind::Mlp { hidden: h } => {
                    let w2 = &params[h * f + h..h * f + h + c * h];
                    let (gw1, rest) = grad.split_at_mut(h * f);
                    let (gb1, rest) = rest.split_at_mut(h);
                    let (gw2, gb2) = rest.split_at_mut(c * h);
                    for k in 0..c {
                        let d = delta[k] * scale;
                        for (g, av) in gw2[k * h..(k + 1) * h].iter_mut().zip(&hidden) {
                            *g += d * av;
                        }
                        gb2[k] += d;
                    }
                    for j in 0..h {
                        let back: f64 = (0..c).map(|k| delta[k] * w2[k * h + j]).sum();
                        let dj = back * (1.0 - hidden[j] * hidden[j]) * scale;
                        for (g, xv) in gw1[j * f..(j + 1) * f].iter_mut().zip(x) {
                            *g += dj * xv;
                        }
                        gb1[j] += dj;
                    }
                }
            }
        }
        Ok((loss * scale, grad))
    }

    /// Mean cross-entropy over the whole dataset.
    pub fn loss(&self, params: &ModelVector, data: &Dataset) -> Result<f64> {
        self.check(params, data)?;
        if data.is_empty() {
            return Err(Error::Usage("empty dataset".into()));
        }
        let total: f64 = (0..data.len())
            .map(|i| -self.forward(params, data.sample(i)).0[data.label(i)].max(f64::MIN_POSITIVE).ln())
            .sum();
        Ok(total / data.len() as f64)
    }
}
