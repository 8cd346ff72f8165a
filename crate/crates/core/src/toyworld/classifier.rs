//! Proxy-label classifier: a small network over image features, trained with
//! binary cross-entropy. Stands in for the full-scale CNN assessor.
//!
//! Default features are the seven exact image metrics, which keeps the desk
//! classifier interpretable and fast; a raw-pixel mode is available behind
//! config. The trained classifier scores in [0, 1] and plugs into sweep
//! evaluation as a (non-differentiable-through-G) assessor.

use serde::{Deserialize, Serialize};

use super::proxy::{ProxyExample, ProxyLabel};
use super::ToyError;
use crate::autodiff::{sigmoid_scalar, Tape, Tensor};
use crate::direction::{Assessor, DirectionError};
use crate::metrics::{compute_all, Image};
use crate::optim::{OptimConfig, Optimizer};
use crate::rng::{normal_vec, stream, Stream};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeatureMode {
    /// The seven exact metrics; missing mask metrics impute 0.
    Metrics,
    /// Grayscale pixels of the nearest-resized image.
    RawPixels { side: usize },
}

impl FeatureMode {
    fn dim(&self) -> usize {
        match self {
            FeatureMode::Metrics => 7,
            FeatureMode::RawPixels { side } => side * side,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    /// Train fraction of the random split.
    pub split: f64,
    pub segment_threshold: f64,
    pub feature_mode: FeatureMode,
    pub optimizer: OptimConfig,
    /// Weight-init seed (the split seed is a separate argument).
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden: 16,
            epochs: 400,
            split: 0.8,
            segment_threshold: 0.5,
            feature_mode: FeatureMode::Metrics,
            optimizer: OptimConfig { lr: 2e-2, ..OptimConfig::default() },
            seed: 0,
        }
    }
}

/// Trained classifier: standardization stats plus a 2-layer network
/// (`in -> hidden`, tanh, `hidden -> 1`, sigmoid).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricFeatureClassifier {
    pub feature_mode: FeatureMode,
    pub segment_threshold: f64,
    pub hidden: usize,
    pub feat_mean: Vec<f64>,
    pub feat_std: Vec<f64>,
    /// w1 (hidden x in, row-major), b1, w2 (hidden), b2 (1).
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AccuracyReport {
    pub n_train: usize,
    pub n_val: usize,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub final_loss: f64,
    pub epochs: usize,
}

impl MetricFeatureClassifier {
    fn in_dim(&self) -> usize {
        self.feature_mode.dim()
    }

    pub fn n_params(in_dim: usize, hidden: usize) -> usize {
        hidden * in_dim + hidden + hidden + 1
    }

    /// Raw (unstandardized) feature vector for one image.
    pub fn features(mode: &FeatureMode, segment_threshold: f64, image: &Image) -> Vec<f64> {
        match mode {
            FeatureMode::Metrics => {
                let m = compute_all(image, segment_threshold);
                vec![
                    m.redness,
                    m.colorfulness,
                    m.brightness,
                    m.simplicity,
                    m.object_size,
                    m.centeredness.unwrap_or(0.0),
                    m.squareness.unwrap_or(0.0),
                ]
            }
            FeatureMode::RawPixels { side } => {
                let resized = image.resize_nearest(*side, *side);
                let mut out = Vec::with_capacity(side * side);
                for y in 0..*side {
                    for x in 0..*side {
                        out.push(resized.luminance(y, x));
                    }
                }
                out
            }
        }
    }

    fn standardized(&self, image: &Image) -> Vec<f64> {
        let raw = Self::features(&self.feature_mode, self.segment_threshold, image);
        raw.iter()
            .zip(self.feat_mean.iter().zip(&self.feat_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    fn logit(&self, features: &[f64]) -> f64 {
        let (di, dh) = (self.in_dim(), self.hidden);
        let w1 = &self.params[..dh * di];
        let b1 = &self.params[dh * di..dh * di + dh];
        let w2 = &self.params[dh * di + dh..dh * di + dh + dh];
        let b2 = self.params[dh * di + dh + dh];
        let mut logit = b2;
        for i in 0..dh {
            let mut acc = b1[i];
            for j in 0..di {
                acc += w1[i * di + j] * features[j];
            }
            logit += w2[i] * acc.tanh();
        }
        logit
    }

    /// Creative probability in [0, 1].
    pub fn predict(&self, image: &Image) -> f64 {
        sigmoid_scalar(self.logit(&self.standardized(image)))
    }
}

impl Assessor for MetricFeatureClassifier {
    fn name(&self) -> &str {
        "classifier"
    }

    fn score_image(&self, image: &Image) -> Result<f64, DirectionError> {
        Ok(self.predict(image))
    }
}

/// Trains the classifier on a labeled dataset with an 80/20 (configurable)
/// random split and reports validation accuracy.
pub fn train_assessor_classifier(
    dataset: &[ProxyExample],
    split_seed: u64,
    config: &ClassifierConfig,
) -> Result<(MetricFeatureClassifier, AccuracyReport), ToyError> {
    if dataset.len() < 8 {
        return Err(ToyError::DatasetTooSmall { min: 8, got: dataset.len() });
    }
    let n_creative = dataset.iter().filter(|e| e.label == ProxyLabel::Creative).count();
    if n_creative == 0 || n_creative == dataset.len() {
        return Err(ToyError::SingleClassDataset);
    }

    // Random split.
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut split_rng = stream(split_seed, Stream::Split);
    for i in (1..order.len()).rev() {
        let j = rand::Rng::random_range(&mut split_rng, 0..=i);
        order.swap(i, j);
    }
    let n_train = ((dataset.len() as f64) * config.split).round() as usize;
    let n_train = n_train.clamp(1, dataset.len() - 1);
    let (train_idx, val_idx) = order.split_at(n_train);

    // Features and standardization from the training set.
    let feats: Vec<Vec<f64>> = dataset
        .iter()
        .map(|e| {
            MetricFeatureClassifier::features(
                &config.feature_mode,
                config.segment_threshold,
                &e.image,
            )
        })
        .collect();
    let dim = config.feature_mode.dim();
    let mut mean = vec![0.0; dim];
    for &i in train_idx {
        for (m, v) in mean.iter_mut().zip(&feats[i]) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= train_idx.len() as f64;
    }
    let mut std = vec![0.0; dim];
    for &i in train_idx {
        for (s, (v, m)) in std.iter_mut().zip(feats[i].iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / train_idx.len() as f64).sqrt();
        if *s < 1e-9 {
            *s = 1.0;
        }
    }
    let standardize = |i: usize| -> Vec<f64> {
        feats[i]
            .iter()
            .zip(mean.iter().zip(&std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    };
    let target = |i: usize| -> f64 {
        if dataset[i].label == ProxyLabel::Creative {
            1.0
        } else {
            0.0
        }
    };

    // Identity-start init mirrors the direction nets: random first layer,
    // zero output layer.
    let mut init_rng = stream(config.seed, Stream::WeightInit);
    let dh = config.hidden;
    let mut params = vec![0.0; MetricFeatureClassifier::n_params(dim, dh)];
    let w1 = normal_vec(&mut init_rng, dh * dim);
    let scale = 1.0 / (dim as f64).sqrt();
    for (p, w) in params.iter_mut().zip(&w1) {
        *p = w * scale;
    }

    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| standardize(i)).collect();
    let train_t: Vec<f64> = train_idx.iter().map(|&i| target(i)).collect();

    let mut optimizer = Optimizer::new(&config.optimizer, params.len());
    let mut final_loss = f64::NAN;
    for _ in 0..config.epochs {
        let tape = Tape::new();
        let tracked = tape.leaf(&Tensor::from_vec(params.clone())?);
        let mut off = 0;
        let w1 = tracked.slice(off, dh * dim)?.reshape(vec![dh, dim])?;
        off += dh * dim;
        let b1 = tracked.slice(off, dh)?;
        off += dh;
        let w2 = tracked.slice(off, dh)?.reshape(vec![1, dh])?;
        off += dh;
        let b2 = tracked.slice(off, 1)?;

        let one = Tensor::scalar(1.0)?;
        let mut losses = Vec::with_capacity(train_x.len());
        for (x, t) in train_x.iter().zip(&train_t) {
            let x = Tensor::from_vec(x.clone())?;
            let h = w1.matmul(&x.reshape(vec![dim, 1])?)?.reshape(vec![dh])?.add(&b1)?.tanh()?;
            let logit = w2.matmul(&h.reshape(vec![dh, 1])?)?.reshape(vec![1])?.add(&b2)?;
            // Stable BCE from the logit: softplus(l) - t*l, with l clamped
            // far outside the data range.
            let lc = logit.clamp(-30.0, 30.0)?;
            let softplus = lc.exp()?.add(&one)?.ln()?;
            losses.push(softplus.sub(&lc.scale(*t)?)?);
        }
        let refs: Vec<&Tensor> = losses.iter().collect();
        let loss = Tensor::concat(&refs)?.mean()?;
        final_loss = loss.item()?;
        let grads = loss.backward()?;
        let grad = grads.wrt(&tracked)?;
        optimizer.step(&mut params, grad.data())?;
    }

    let classifier = MetricFeatureClassifier {
        feature_mode: config.feature_mode.clone(),
        segment_threshold: config.segment_threshold,
        hidden: dh,
        feat_mean: mean,
        feat_std: std,
        params,
    };

    let accuracy = |indices: &[usize]| -> f64 {
        let correct = indices
            .iter()
            .filter(|&&i| {
                let p = classifier.predict(&dataset[i].image);
                (p >= 0.5) == (dataset[i].label == ProxyLabel::Creative)
            })
            .count();
        correct as f64 / indices.len() as f64
    };

    let report = AccuracyReport {
        n_train: train_idx.len(),
        n_val: val_idx.len(),
        train_accuracy: accuracy(train_idx),
        val_accuracy: accuracy(val_idx),
        final_loss,
        epochs: config.epochs,
    };
    Ok((classifier, report))
}

/// Serializes a trained classifier as deterministic JSON (shortest
/// round-trip floats, bit-exact on reload).
pub fn save_classifier(
    path: &std::path::Path,
    classifier: &MetricFeatureClassifier,
) -> Result<(), std::io::Error> {
    let json = serde_json::to_string_pretty(classifier).expect("classifier serializes");
    std::fs::write(path, json + "\n")
}

pub fn load_classifier(
    path: &std::path::Path,
) -> Result<MetricFeatureClassifier, ToyError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ToyError::BadConfig(format!("classifier file: {e}")))?;
    serde_json::from_str(&text).map_err(|e| ToyError::BadConfig(format!("classifier json: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toyworld::synth_proxy_dataset;

    fn quick_config() -> ClassifierConfig {
        ClassifierConfig { epochs: 200, ..ClassifierConfig::default() }
    }

    #[test]
    fn separable_dataset_reaches_high_accuracy() {
        let data = synth_proxy_dataset(160, 0).unwrap();
        let (_, report) = train_assessor_classifier(&data, 0, &quick_config()).unwrap();
        assert!(report.val_accuracy >= 0.90, "val accuracy {}", report.val_accuracy);
    }

    #[test]
    fn shuffled_labels_sit_at_chance() {
        let mut data = synth_proxy_dataset(160, 2).unwrap();
        // Randomly permute the labels: keeps label counts, destroys the
        // image-label association.
        let mut labels: Vec<ProxyLabel> = data.iter().map(|e| e.label).collect();
        let mut rng = crate::rng::stream(5, crate::rng::Stream::Other(77));
        for i in (1..labels.len()).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            labels.swap(i, j);
        }
        for (e, label) in data.iter_mut().zip(labels) {
            e.label = label;
        }
        let (_, report) = train_assessor_classifier(&data, 2, &quick_config()).unwrap();
        assert!(
            (report.val_accuracy - 0.5).abs() <= 0.15,
            "shuffled-label accuracy {}",
            report.val_accuracy
        );
    }

    #[test]
    fn deterministic_given_seeds() {
        let data = synth_proxy_dataset(80, 3).unwrap();
        let (c1, r1) = train_assessor_classifier(&data, 5, &quick_config()).unwrap();
        let (c2, r2) = train_assessor_classifier(&data, 5, &quick_config()).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn single_class_dataset_is_rejected() {
        let mut data = synth_proxy_dataset(16, 4).unwrap();
        for e in data.iter_mut() {
            e.label = ProxyLabel::Creative;
        }
        assert!(matches!(
            train_assessor_classifier(&data, 0, &quick_config()),
            Err(ToyError::SingleClassDataset)
        ));
    }

    #[test]
    fn classifier_roundtrips_through_json() {
        let data = synth_proxy_dataset(40, 6).unwrap();
        let config = ClassifierConfig { epochs: 30, ..ClassifierConfig::default() };
        let (classifier, _) = train_assessor_classifier(&data, 1, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("classifier.json");
        save_classifier(&path, &classifier).unwrap();
        let back = load_classifier(&path).unwrap();
        assert_eq!(back, classifier);
        // Scores stay in [0, 1].
        let p = back.predict(&data[0].image);
        assert!((0.0..=1.0).contains(&p));
    }
}
