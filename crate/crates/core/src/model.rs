//! Ensemble member classifiers: one-hidden-layer MLPs for the benchmark
//! experiments and linear perceptrons for the 2D replication.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Hidden width used by every benchmark configuration.
pub const DEFAULT_HIDDEN: usize = 10;

/// Class decision plus the raw scores it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        Prediction {
            class_index: argmax(&scores),
            scores,
        }
    }
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub trait Classifier {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<Prediction>;

    /// Class decision only. Panics on a dimension mismatch, so callers that
    /// cannot guarantee shapes should use [`Classifier::predict`].
    fn predict_class(&self, x: &[f64]) -> usize {
        self.predict(x)
            .expect("feature vector length matches classifier")
            .class_index
    }
}

fn check_dims(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::usage(format!(
            "feature vector has length {}, classifier expects {expected}",
            x.len()
        )));
    }
    Ok(())
}

/// Hidden-layer nonlinearity. Both are bounded by 1 in magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    /// Logistic `1 / (1 + e^{-z})`.
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `h`.
    #[inline]
    pub fn derivative_from_output(self, h: f64) -> f64 {
        match self {
            Activation::Sigmoid => h * (1.0 - h),
            Activation::Tanh => 1.0 - h * h,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!(
                "unknown activation '{other}' (expected sigmoid or tanh)"
            ))),
        }
    }
}

/// `scores = w2 · act(w1 · x + b1) + b2`.
///
/// Weight matrices are stored row-major: `w1` is `hidden × n_features`,
/// `w2` is `n_classes × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    n_features: usize,
    hidden: usize,
    n_classes: usize,
    activation: Activation,
}

impl MlpClassifier {
    pub fn zeros(n_features: usize, n_classes: usize, hidden: usize) -> Self {
        MlpClassifier {
            w1: vec![0.0; hidden * n_features],
            b1: vec![0.0; hidden],
            w2: vec![0.0; n_classes * hidden],
            b2: vec![0.0; n_classes],
            n_features,
            hidden,
            n_classes,
            activation: Activation::default(),
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in serialization order: w1 (row-major), b1, w2 (row-major), b2.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.params().copied().collect()
    }

    pub fn from_flat(
        n_features: usize,
        n_classes: usize,
        hidden: usize,
        flat: &[f64],
    ) -> Result<Self> {
        let mut m = Self::zeros(n_features, n_classes, hidden);
        if flat.len() != m.n_params() {
            return Err(Error::usage(format!(
                "expected {} parameters, got {}",
                m.n_params(),
                flat.len()
            )));
        }
        m.params_mut().zip(flat).for_each(|(p, v)| *p = *v);
        Ok(m)
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    /// Hidden activations `act(w1 · x + b1)` written into `out`.
    pub(crate) fn hidden_into(&self, x: &[f64], out: &mut [f64]) {
        for (j, h) in out.iter_mut().enumerate() {
            let row = &self.w1[j * self.n_features..(j + 1) * self.n_features];
            let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b1[j];
            *h = self.activation.apply(z);
        }
    }

    pub(crate) fn scores_into(&self, hidden: &[f64], out: &mut [f64]) {
        for (k, s) in out.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            *s = row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>() + self.b2[k];
        }
    }

    /// Text dump: a comment line with the dimensions, then one parameter per
    /// line in [`MlpClassifier::params`] order.
    pub fn to_param_text(&self) -> String {
        let mut out = format!(
            "# mlp n_features={} hidden={} n_classes={} activation={}\n",
            self.n_features, self.hidden, self.n_classes, self.activation
        );
        for p in self.params() {
            writeln!(out, "{p:?}").unwrap();
        }
        out
    }

    pub fn from_param_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty parameter dump".into()))?;
        let mut dims = [None; 3];
        let mut activation = Activation::default();
        for token in header.trim_start_matches('#').split_whitespace().skip(1) {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("bad header token '{token}'")))?;
            if key == "activation" {
                activation = value.parse()?;
                continue;
            }
            let value: usize = value
                .parse()
                .map_err(|_| Error::Data(format!("bad dimension '{token}'")))?;
            match key {
                "n_features" => dims[0] = Some(value),
                "hidden" => dims[1] = Some(value),
                "n_classes" => dims[2] = Some(value),
                _ => return Err(Error::Data(format!("unknown header key '{key}'"))),
            }
        }
        let [Some(nf), Some(hidden), Some(nc)] = dims else {
            return Err(Error::Data(
                "parameter dump header is missing a dimension".into(),
            ));
        };
        let values = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|_| Error::DataRow {
                    file: "parameter dump".into(),
                    line: i + 2,
                    message: format!("invalid number '{l}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_flat(nf, nc, hidden, &values)?.with_activation(activation))
    }
}

impl Classifier for MlpClassifier {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dims(self.n_features, x)?;
        let mut h = vec![0.0; self.hidden];
        let mut scores = vec![0.0; self.n_classes];
        self.hidden_into(x, &mut h);
        self.scores_into(&h, &mut scores);
        Ok(Prediction::from_scores(scores))
    }
}

/// Draws every layer uniformly from `±1/√fan_in`, with the default activation.
pub fn init_mlp(
    n_features: usize,
    n_classes: usize,
    hidden: usize,
    seed: u64,
) -> Result<MlpClassifier> {
    if n_features == 0 || n_classes == 0 || hidden == 0 {
        return Err(Error::usage(format!(
            "MLP dimensions must be >= 1 (n_features={n_features}, n_classes={n_classes}, hidden={hidden})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MlpClassifier::zeros(n_features, n_classes, hidden);
    let b1 = 1.0 / (n_features as f64).sqrt();
    let b2 = 1.0 / (hidden as f64).sqrt();
    for p in m.w1.iter_mut().chain(m.b1.iter_mut()) {
        *p = rng.random_range(-b1..=b1);
    }
    for p in m.w2.iter_mut().chain(m.b2.iter_mut()) {
        *p = rng.random_range(-b2..=b2);
    }
    Ok(m)
}

/// Binary linear threshold unit: class 1 iff `w · x + b >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perceptron {
    pub w: Vec<f64>,
    pub b: f64,
}

impl Perceptron {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        Perceptron { w, b }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b
    }

    /// Signed output in `{-1, +1}`, with `sign(0) = +1`.
    pub fn signed_output(&self, x: &[f64]) -> f64 {
        if self.score(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl Classifier for Perceptron {
    fn n_features(&self) -> usize {
        self.w.len()
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dims(self.w.len(), x)?;
        let s = self.score(x);
        Ok(Prediction {
            class_index: usize::from(s >= 0.0),
            scores: vec![-s, s],
        })
    }

    fn predict_class(&self, x: &[f64]) -> usize {
        usize::from(self.score(x) >= 0.0)
    }
}

/// Weights and bias uniform in `[-1, 1]`.
pub fn init_perceptron(n_features: usize, seed: u64) -> Result<Perceptron> {
    if n_features == 0 {
        return Err(Error::usage("perceptron needs at least one feature"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = (0..n_features)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let b = rng.random_range(-1.0..=1.0);
    Ok(Perceptron { w, b })
}

/// Fraction of `indices` whose predicted class equals the label.
pub fn accuracy<C: Classifier + ?Sized>(
    classifier: &C,
    d: &Dataset,
    indices: &[usize],
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::usage("accuracy needs at least one sample index"));
    }
    if classifier.n_features() != d.n_features() {
        return Err(Error::usage(format!(
            "classifier expects {} features, dataset '{}' has {}",
            classifier.n_features(),
            d.name(),
            d.n_features()
        )));
    }
    let hits = indices
        .iter()
        .filter(|&&i| classifier.predict_class(d.row(i)) == d.label(i))
        .count();
    Ok(hits as f64 / indices.len() as f64)
}
