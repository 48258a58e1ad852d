use crate::error::{check_dim, Error, Result};
use crate::rng::Stream;

/// Row-major feature matrix with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    num_features: usize,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, num_features: usize, num_classes: usize) -> Result<Self> {
        check_dim("feature matrix size", labels.len() * num_features, features.len())?;
        if num_features == 0 || num_classes == 0 {
            return Err(Error::Usage("dataset needs at least one feature and one class".into()));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Usage(format!("label {y} out of range for {num_classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            num_features,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.num_features);
        for &i in indices {
            features.extend_from_slice(self.sample(i));
        }
        Dataset {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_features: self.num_features,
            num_classes: self.num_classes,
        }
    }

    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or_else(|| Error::Usage("nothing to concatenate".into()))?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            check_dim("concatenated feature count", first.num_features, p.num_features)?;
            check_dim("concatenated class count", first.num_classes, p.num_classes)?;
            features.extend_from_slice(&p.features);
            labels.extend_from_slice(&p.labels);
        }
        Ok(Dataset {
            features,
            labels,
            num_features: first.num_features,
            num_classes: first.num_classes,
        })
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Gaussian-mixture classification task: class means lie on a sphere of
/// radius `separation`, samples add isotropic noise of std `noise_std`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub features: usize,
    pub separation: f64,
    pub noise_std: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            features: 20,
            separation: 2.0,
            noise_std: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.features == 0 {
            return Err(Error::Config("synthetic data needs >= 2 classes and >= 1 feature".into()));
        }
        if !(self.separation > 0.0) || !(self.noise_std >= 0.0) {
            return Err(Error::Config("synthetic separation must be > 0 and noise >= 0".into()));
        }
        Ok(())
    }

    fn means(&self, stream: &mut Stream) -> Vec<Vec<f64>> {
        (0..self.classes)
            .map(|_| {
                let v: Vec<f64> = (0..self.features).map(|_| stream.standard_normal()).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                v.into_iter().map(|x| x * self.separation / n).collect()
            })
            .collect()
    }

    fn draw(&self, means: &[Vec<f64>], n: usize, stream: &mut Stream) -> Dataset {
        let mut features = Vec::with_capacity(n * self.features);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % self.classes;
            labels.push(y);
            for &mu in &means[y] {
                features.push(mu + self.noise_std * stream.standard_normal());
            }
        }
        Dataset {
            features,
            labels,
            num_features: self.features,
            num_classes: self.classes,
        }
    }

    /// Train and test sets from the same mixture; labels cycle through the
    /// classes so both are balanced.
    pub fn generate(&self, train: usize, test: usize, stream: &mut Stream) -> Result<(Dataset, Dataset)> {
        self.validate()?;
        let means = self.means(&mut stream.substream("means", 0));
        let train_set = self.draw(&means, train, &mut stream.substream("train", 0));
        let test_set = self.draw(&means, test, &mut stream.substream("test", 0));
        Ok((train_set, test_set))
    }
}
