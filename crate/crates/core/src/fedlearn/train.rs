use crate::error::{check_dim, Error, Result};
use crate::rng::Stream;
use crate::vector::ModelVector;

use super::{Dataset, ModelShape};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainSpec {
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rounds: usize,
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.local_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("local_epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Mini-batch SGD from `global` on `data`; returns the model change
/// `local - global`.
///
/// Each epoch draws a fresh permutation from `stream`; a trailing partial
/// batch is dropped. A batch size at least the dataset size means full-batch
/// gradient descent.
pub fn local_update(
    shape: &ModelShape,
    global: &ModelVector,
    data: &Dataset,
    spec: &TrainSpec,
    stream: &mut Stream,
) -> Result<ModelVector> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::Usage("local update on an empty dataset".into()));
    }
    let batch = spec.batch_size.min(data.len());
    let mut params = global.clone();
    for _ in 0..spec.local_epochs {
        let perm = stream.permutation(data.len());
        for idx in perm.chunks_exact(batch) {
            let (_, grad) = shape.loss_and_gradient(&params, data, idx)?;
            for (p, g) in params.iter_mut().zip(grad.iter()) {
                *p -= spec.learning_rate * g;
            }
        }
    }
    params.sub(global)
}

pub fn global_update(global: &ModelVector, aggregated: &ModelVector) -> Result<ModelVector> {
    check_dim("aggregated update", global.dim(), aggregated.dim())?;
    global.add(aggregated)
}

/// Fraction of test samples whose argmax prediction is correct.
pub fn evaluate(shape: &ModelShape, model: &ModelVector, test: &Dataset) -> Result<f64> {
    check_dim("model parameters", shape.dim(), model.dim())?;
    check_dim("test features", shape.features, test.num_features())?;
    if test.is_empty() {
        return Err(Error::Usage("empty test set".into()));
    }
    let correct = (0..test.len())
        .filter(|&i| shape.predict(model, test.sample(i)) == test.label(i))
        .count();
    Ok(correct as f64 / test.len() as f64)
}
