//! Minibatch SGD with momentum for MLP members, the classical perceptron rule
//! for the replication study, and whole-ensemble training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::model::{accuracy, Classifier, MlpClassifier, Perceptron};

/// Epoch counts swept by the trained benchmark experiments.
pub const DEFAULT_EPOCHS_LIST: [usize; 3] = [5, 10, 15];

/// Shuffle RNGs use their own ChaCha stream so they never replay the
/// initialization draws of a member sharing the same seed.
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 1.2,
            momentum: 0.9,
            batch_size: 10,
            epochs: 10,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_train_accuracy: f64,
    /// Mean per-sample cross-entropy over each epoch, as seen during the epoch.
    pub loss_trace: Vec<f64>,
    /// Training accuracy measured after each epoch.
    pub accuracy_trace: Vec<f64>,
}

/// Mean softmax cross-entropy of `m` over `batch`, with its gradient laid out
/// as another `MlpClassifier`.
pub fn loss_and_gradient(m: &MlpClassifier, d: &Dataset, batch: &[usize]) -> (f64, MlpClassifier) {
    let hidden = m.hidden();
    let nf = m.n_features();
    let nc = m.n_classes();
    let act = m.activation();
    let mut grad = MlpClassifier::zeros(nf, nc, hidden).with_activation(act);
    let mut h = vec![0.0; hidden];
    let mut scores = vec![0.0; nc];
    let mut dh = vec![0.0; hidden];
    let mut loss = 0.0;

    for &i in batch {
        let x = d.row(i);
        let y = d.label(i);
        m.hidden_into(x, &mut h);
        m.scores_into(&h, &mut scores);

        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - scores[y];

        dh.iter_mut().for_each(|v| *v = 0.0);
        for (k, &score) in scores.iter().enumerate() {
            let ds = (score - log_z).exp() - if k == y { 1.0 } else { 0.0 };
            grad.b2[k] += ds;
            let w_row = &m.w2[k * hidden..(k + 1) * hidden];
            let g_row = &mut grad.w2[k * hidden..(k + 1) * hidden];
            for j in 0..hidden {
                g_row[j] += ds * h[j];
                dh[j] += ds * w_row[j];
            }
        }
        for j in 0..hidden {
            let dz = dh[j] * act.derivative_from_output(h[j]);
            grad.b1[j] += dz;
            let g_row = &mut grad.w1[j * nf..(j + 1) * nf];
            for (g, xi) in g_row.iter_mut().zip(x) {
                *g += dz * xi;
            }
        }
    }

    let scale = 1.0 / batch.len() as f64;
    grad.params_mut().for_each(|g| *g *= scale);
    (loss * scale, grad)
}

/// Resumable SGD-with-momentum run over one member. Each call to
/// [`SgdRun::run_epoch`] advances one epoch, so a single run can be
/// snapshotted at several epoch counts.
#[derive(Debug, Clone)]
pub struct SgdRun<'a> {
    model: MlpClassifier,
    velocity: MlpClassifier,
    data: &'a Dataset,
    order: Vec<usize>,
    cfg: SgdConfig,
    rng: ChaCha8Rng,
    loss_trace: Vec<f64>,
    accuracy_trace: Vec<f64>,
}

impl<'a> SgdRun<'a> {
    pub fn new(
        model: MlpClassifier,
        data: &'a Dataset,
        train_indices: &[usize],
        cfg: SgdConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if train_indices.is_empty() {
            return Err(Error::usage("training needs at least one sample"));
        }
        if model.n_features() != data.n_features() || model.n_classes() != data.n_classes() {
            return Err(Error::usage(format!(
                "model shape {}→{} does not match dataset '{}' ({} features, {} classes)",
                model.n_features(),
                model.n_classes(),
                data.name(),
                data.n_features(),
                data.n_classes()
            )));
        }
        let velocity = MlpClassifier::zeros(model.n_features(), model.n_classes(), model.hidden())
            .with_activation(model.activation());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(SHUFFLE_STREAM);
        Ok(SgdRun {
            model,
            velocity,
            data,
            order: train_indices.to_vec(),
            cfg,
            rng,
            loss_trace: Vec::new(),
            accuracy_trace: Vec::new(),
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.loss_trace.len()
    }

    pub fn model(&self) -> &MlpClassifier {
        &self.model
    }

    pub fn run_epoch(&mut self) -> Result<()> {
        let epoch = self.epochs_done() + 1;
        self.order.shuffle(&mut self.rng);
        let mut total = 0.0;
        for batch in self.order.chunks(self.cfg.batch_size) {
            let (loss, grad) = loss_and_gradient(&self.model, self.data, batch);
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    message: format!("non-finite batch loss {loss}"),
                });
            }
            total += loss * batch.len() as f64;
            for ((v, p), g) in self
                .velocity
                .params_mut()
                .zip(self.model.params_mut())
                .zip(grad.params())
            {
                *v = self.cfg.momentum * *v - self.cfg.learning_rate * g;
                *p += *v;
            }
        }
        if !self.model.is_finite() {
            return Err(Error::Training {
                epoch,
                message: "parameters became non-finite".into(),
            });
        }
        self.loss_trace.push(total / self.order.len() as f64);
        self.accuracy_trace
            .push(accuracy(&self.model, self.data, &self.order)?);
        Ok(())
    }

    pub fn report(&self) -> TrainReport {
        TrainReport {
            final_train_accuracy: self.accuracy_trace.last().copied().unwrap_or(f64::NAN),
            loss_trace: self.loss_trace.clone(),
            accuracy_trace: self.accuracy_trace.clone(),
        }
    }

    pub fn into_model(self) -> MlpClassifier {
        self.model
    }
}

/// Trains `m` for `cfg.epochs` epochs of shuffled minibatch SGD with momentum
/// on mean softmax cross-entropy. The final short batch is kept.
pub fn train_mlp(
    m: MlpClassifier,
    d: &Dataset,
    train_indices: &[usize],
    cfg: &SgdConfig,
) -> Result<(MlpClassifier, TrainReport)> {
    let mut run = SgdRun::new(m, d, train_indices, *cfg)?;
    for _ in 0..cfg.epochs {
        run.run_epoch()?;
    }
    let report = run.report();
    Ok((run.into_model(), report))
}

/// Classical perceptron rule over shuffled epochs: each misclassified sample
/// with signed label `y ∈ {-1, +1}` moves `w += lr·y·x`, `b += lr·y`.
pub fn train_perceptron(
    p: Perceptron,
    d: &Dataset,
    train_indices: &[usize],
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<Perceptron> {
    if d.n_classes() != 2 {
        return Err(Error::usage(format!(
            "perceptron training needs a binary dataset, '{}' has {} classes",
            d.name(),
            d.n_classes()
        )));
    }
    if p.w.len() != d.n_features() {
        return Err(Error::usage(
            "perceptron width does not match dataset features",
        ));
    }
    let mut p = p;
    let mut order = train_indices.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SHUFFLE_STREAM);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = d.row(i);
            let target = if d.label(i) == 1 { 1.0 } else { -1.0 };
            if p.signed_output(x) != target {
                for (w, xi) in p.w.iter_mut().zip(x) {
                    *w += learning_rate * target * xi;
                }
                p.b += learning_rate * target;
            }
        }
    }
    Ok(p)
}

/// How independent per-member work is scheduled. Results never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `f` over `0..n` and gathers results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }
}

/// Training accuracy `a_θ` of every member.
pub fn ensemble_accuracies<C: Classifier + Sync>(
    members: &[C],
    d: &Dataset,
    indices: &[usize],
    exec: Execution,
) -> Result<Vec<f64>> {
    exec.map(members.len(), |i| accuracy(&members[i], d, indices))
        .into_iter()
        .collect()
}

/// Optionally trains every member (member `i` shuffles with seed
/// `cfg.seed + i`), then measures each member's accuracy on the training split.
pub fn train_ensemble(
    members: Vec<MlpClassifier>,
    d: &Dataset,
    split: &Split,
    cfg: Option<&SgdConfig>,
    exec: Execution,
) -> Result<(Vec<MlpClassifier>, Vec<f64>)> {
    if members.is_empty() {
        return Err(Error::usage("ensemble must have at least one member"));
    }
    let members = match cfg {
        None => members,
        Some(cfg) => {
            cfg.validate()?;
            exec.map(members.len(), |i| {
                let member_cfg = SgdConfig {
                    seed: cfg.seed.wrapping_add(i as u64),
                    ..*cfg
                };
                train_mlp(members[i].clone(), d, &split.train_indices, &member_cfg)
                    .map(|(m, _)| m)
                    .map_err(|e| Error::Member {
                        index: i,
                        source: Box::new(e),
                    })
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?
        }
    };
    let accuracies = ensemble_accuracies(&members, d, &split.train_indices, exec)?;
    Ok((members, accuracies))
}
