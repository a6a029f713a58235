//! Accuracy-weighted quantum ensemble.
//!
//! After post-selecting the ancilla on `|0⟩`, the classifier register holds
//! `Σ_θ √(a_θ / Σa) |θ⟩`. Loading each member's answer into the answer
//! register and measuring it gives the correct label with probability
//! `Σ_{θ hits} a_θ / Σ_θ a_θ`. This module computes that in closed form and,
//! independently, by simulating the registers as an explicit state vector.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Classifier;
use crate::train::Execution;

/// Validation samples count as correct when their hit probability reaches this.
pub const DEFAULT_THRESHOLD: f64 = 0.7;

/// Largest ensemble the dense oracle will simulate.
pub const ORACLE_MAX_MEMBERS: usize = 1024;

/// Ancilla outcome probabilities below this are rounding residue of a
/// rotation to exactly `|1⟩`, and count as impossible.
const MIN_OUTCOME_PROBABILITY: f64 = 1e-28;

/// Per-member accuracies and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWeights {
    accuracies: Vec<f64>,
    total: f64,
}

impl EnsembleWeights {
    pub fn len(&self) -> usize {
        self.accuracies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accuracies.is_empty()
    }

    pub fn accuracies(&self) -> &[f64] {
        &self.accuracies
    }

    /// `Σ_θ a_θ`, which equals the ancilla normalization factor times `|E|`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Amplitude of `|θ⟩` after post-selection.
    pub fn amplitude(&self, member: usize) -> f64 {
        self.probability(member).sqrt()
    }

    pub fn probability(&self, member: usize) -> f64 {
        self.accuracies[member] / self.total
    }

    pub fn post_selection_probability(&self) -> f64 {
        post_selection_probability(&self.accuracies)
    }

    /// Expected number of ensemble constructions until the ancilla reads 0.
    pub fn expected_attempts(&self) -> f64 {
        expected_attempts(&self.accuracies)
    }
}

pub fn build_weights(accuracies: &[f64]) -> Result<EnsembleWeights> {
    if accuracies.is_empty() {
        return Err(Error::usage("ensemble must have at least one member"));
    }
    if let Some((i, a)) = accuracies
        .iter()
        .enumerate()
        .find(|(_, a)| !(0.0..=1.0).contains(*a))
    {
        return Err(Error::usage(format!(
            "accuracy {a} of member {i} is outside [0, 1]"
        )));
    }
    let total: f64 = accuracies.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateEnsemble);
    }
    Ok(EnsembleWeights {
        accuracies: accuracies.to_vec(),
        total,
    })
}

/// Born probability that the answer register reads `label`.
pub fn hit_probability(w: &EnsembleWeights, predictions: &[usize], label: usize) -> Result<f64> {
    if predictions.len() != w.len() {
        return Err(Error::usage(format!(
            "{} predictions for an ensemble of {}",
            predictions.len(),
            w.len()
        )));
    }
    let hits: f64 = predictions
        .iter()
        .zip(&w.accuracies)
        .filter(|(&p, _)| p == label)
        .map(|(_, a)| a)
        .sum();
    Ok(hits / w.total)
}

/// Probability that the ancilla is measured in `|0⟩`: the mean accuracy.
pub fn post_selection_probability(accuracies: &[f64]) -> f64 {
    if accuracies.is_empty() {
        return 0.0;
    }
    accuracies.iter().sum::<f64>() / accuracies.len() as f64
}

/// `1 / post_selection_probability`; infinite when post-selection never succeeds.
pub fn expected_attempts(accuracies: &[f64]) -> f64 {
    let p = post_selection_probability(accuracies);
    if p > 0.0 {
        1.0 / p
    } else {
        f64::INFINITY
    }
}

/// Spread estimator used for the `stddev` field of an [`EvalReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdDev {
    #[default]
    Population,
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub pps_hit: Vec<f64>,
    pub mpps_hit: f64,
    pub stddev: f64,
    pub overall_accuracy: f64,
    pub threshold: f64,
    pub post_selection_probability: f64,
}

impl EvalReport {
    pub fn from_pps(
        pps_hit: Vec<f64>,
        threshold: f64,
        post_selection_probability: f64,
        spread: StdDev,
    ) -> Result<Self> {
        if pps_hit.is_empty() {
            return Err(Error::usage(
                "evaluation needs at least one validation sample",
            ));
        }
        let n = pps_hit.len() as f64;
        let mpps_hit = pps_hit.iter().sum::<f64>() / n;
        let ss: f64 = pps_hit.iter().map(|p| (p - mpps_hit).powi(2)).sum();
        let stddev = match spread {
            StdDev::Population => (ss / n).sqrt(),
            StdDev::Sample if pps_hit.len() > 1 => (ss / (n - 1.0)).sqrt(),
            StdDev::Sample => 0.0,
        };
        let correct = pps_hit.iter().filter(|&&p| p >= threshold).count();
        Ok(EvalReport {
            overall_accuracy: correct as f64 / n,
            pps_hit,
            mpps_hit,
            stddev,
            threshold,
            post_selection_probability,
        })
    }

    /// Per-sample rows followed by a summary line. `sample_ids` gives the
    /// dataset index for each entry of `pps_hit`.
    pub fn to_csv(&self, sample_ids: &[usize]) -> String {
        let mut out = String::from("sample_index,pps_hit\n");
        for (id, p) in sample_ids.iter().zip(&self.pps_hit) {
            writeln!(out, "{id},{p}").unwrap();
        }
        out.push_str(
            "# summary: mpps_hit,stddev,overall_accuracy,threshold,post_selection_probability\n",
        );
        writeln!(
            out,
            "# {},{},{},{},{}",
            self.mpps_hit,
            self.stddev,
            self.overall_accuracy,
            self.threshold,
            self.post_selection_probability
        )
        .unwrap();
        out
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "threshold must be in (0, 1], got {threshold}"
        )));
    }
    Ok(())
}

/// Evaluates an ensemble from a precomputed prediction matrix
/// (`predictions[member][sample]`, samples aligned with `val_indices`).
pub fn evaluate_predictions(
    w: &EnsembleWeights,
    predictions: &[Vec<usize>],
    d: &Dataset,
    val_indices: &[usize],
    threshold: f64,
    spread: StdDev,
) -> Result<EvalReport> {
    check_threshold(threshold)?;
    if predictions.len() < w.len() {
        return Err(Error::usage(
            "prediction matrix has fewer rows than ensemble members",
        ));
    }
    let mut column = vec![0; w.len()];
    let pps = val_indices
        .iter()
        .enumerate()
        .map(|(s, &i)| {
            for (c, row) in column.iter_mut().zip(predictions) {
                *c = row[s];
            }
            hit_probability(w, &column, d.label(i))
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_pps(pps, threshold, w.post_selection_probability(), spread)
}

/// Class each member assigns to each indexed sample: `out[member][sample]`.
pub fn prediction_matrix<C: Classifier + Sync>(
    members: &[C],
    d: &Dataset,
    indices: &[usize],
    exec: Execution,
) -> Vec<Vec<usize>> {
    exec.map(members.len(), |m| {
        indices
            .iter()
            .map(|&i| members[m].predict_class(d.row(i)))
            .collect()
    })
}

/// Hit probability for every validation sample, summarized.
pub fn evaluate<C: Classifier + Sync>(
    w: &EnsembleWeights,
    members: &[C],
    d: &Dataset,
    val_indices: &[usize],
    threshold: f64,
) -> Result<EvalReport> {
    check_threshold(threshold)?;
    if val_indices.is_empty() {
        return Err(Error::usage(
            "evaluation needs at least one validation sample",
        ));
    }
    if members.len() != w.len() {
        return Err(Error::usage(format!(
            "{} members but {} weights",
            members.len(),
            w.len()
        )));
    }
    if let Some(m) = members.iter().find(|m| m.n_features() != d.n_features()) {
        return Err(Error::usage(format!(
            "member expects {} features, dataset has {}",
            m.n_features(),
            d.n_features()
        )));
    }
    let predictions = prediction_matrix(members, d, val_indices, Execution::Sequential);
    evaluate_predictions(
        w,
        &predictions,
        d,
        val_indices,
        threshold,
        StdDev::Population,
    )
}

/// Dense real amplitudes over `|θ⟩ ⊗ |ancilla⟩ ⊗ |answer⟩`.
///
/// Index layout is `(θ · 2 + ancilla) · n_classes + answer`. All gates used
/// here are real, so amplitudes stay real.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<f64>,
    n_members: usize,
    n_classes: usize,
}

impl StateVector {
    /// `(1/√|E|) Σ_θ |θ⟩ ⊗ (|0⟩+|1⟩)/√2 ⊗ |0⟩`.
    pub fn uniform(n_members: usize, n_classes: usize) -> Result<Self> {
        if n_members == 0 || n_members > ORACLE_MAX_MEMBERS {
            return Err(Error::usage(format!(
                "state-vector simulation supports 1..={ORACLE_MAX_MEMBERS} members, got {n_members}"
            )));
        }
        if n_classes < 2 {
            return Err(Error::usage("answer register needs at least two classes"));
        }
        let mut amplitudes = vec![0.0; n_members * 2 * n_classes];
        let amp = 1.0 / ((2 * n_members) as f64).sqrt();
        for theta in 0..n_members {
            for anc in 0..2 {
                amplitudes[(theta * 2 + anc) * n_classes] = amp;
            }
        }
        Ok(StateVector {
            amplitudes,
            n_members,
            n_classes,
        })
    }

    fn index(&self, theta: usize, ancilla: usize, answer: usize) -> usize {
        (theta * 2 + ancilla) * self.n_classes + answer
    }

    pub fn amplitude(&self, theta: usize, ancilla: usize, answer: usize) -> f64 {
        self.amplitudes[self.index(theta, ancilla, answer)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// Rotates the ancilla of each `|θ⟩` branch so its `|0⟩` component has
    /// weight `a_θ`. Each branch starts at angle π/4 (equal superposition) and
    /// is turned by a θ-controlled real rotation to angle `acos(√a_θ)`.
    pub fn encode_accuracies(&mut self, accuracies: &[f64]) -> Result<()> {
        if accuracies.len() != self.n_members {
            return Err(Error::usage("one accuracy per classifier branch required"));
        }
        for (theta, &a) in accuracies.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::usage(format!("accuracy {a} outside [0, 1]")));
            }
            let target = a.sqrt().acos();
            let delta = target - std::f64::consts::FRAC_PI_4;
            self.rotate_ancilla(theta, delta);
        }
        Ok(())
    }

    /// `R(δ) = [[cos δ, −sin δ], [sin δ, cos δ]]` on the ancilla of branch θ.
    fn rotate_ancilla(&mut self, theta: usize, delta: f64) {
        let (s, c) = delta.sin_cos();
        for answer in 0..self.n_classes {
            let i0 = self.index(theta, 0, answer);
            let i1 = self.index(theta, 1, answer);
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            self.amplitudes[i0] = c * a0 - s * a1;
            self.amplitudes[i1] = s * a0 + c * a1;
        }
    }

    /// Probability of reading `outcome` on the ancilla.
    pub fn ancilla_probability(&self, outcome: usize) -> f64 {
        (0..self.n_members)
            .flat_map(|t| (0..self.n_classes).map(move |k| (t, k)))
            .map(|(t, k)| self.amplitude(t, outcome, k).powi(2))
            .sum()
    }

    /// Projects onto ancilla `outcome` and renormalizes by the square root of
    /// its probability. Returns that probability.
    pub fn post_select_ancilla(&mut self, outcome: usize) -> Result<f64> {
        let p = self.ancilla_probability(outcome);
        if p <= MIN_OUTCOME_PROBABILITY {
            return Err(Error::DegenerateEnsemble);
        }
        let scale = 1.0 / p.sqrt();
        for theta in 0..self.n_members {
            for anc in 0..2 {
                for k in 0..self.n_classes {
                    let i = self.index(theta, anc, k);
                    self.amplitudes[i] = if anc == outcome {
                        self.amplitudes[i] * scale
                    } else {
                        0.0
                    };
                }
            }
        }
        Ok(p)
    }

    /// Classifier operator: in branch θ adds `predictions[θ]` to the answer
    /// register modulo `n_classes`. This is a permutation, hence unitary, and
    /// maps `|0⟩` to `|ŷ_θ⟩`.
    pub fn apply_classifier(&mut self, predictions: &[usize]) -> Result<()> {
        if predictions.len() != self.n_members {
            return Err(Error::usage(
                "one prediction per classifier branch required",
            ));
        }
        let nc = self.n_classes;
        let mut next = vec![0.0; self.amplitudes.len()];
        for (theta, &y) in predictions.iter().enumerate() {
            if y >= nc {
                return Err(Error::usage(format!(
                    "prediction {y} outside answer register"
                )));
            }
            for anc in 0..2 {
                for k in 0..nc {
                    next[self.index(theta, anc, (k + y) % nc)] = self.amplitude(theta, anc, k);
                }
            }
        }
        self.amplitudes = next;
        Ok(())
    }

    /// Marginal Born distribution of the answer register.
    pub fn answer_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.n_classes];
        for theta in 0..self.n_members {
            for anc in 0..2 {
                for (k, p) in dist.iter_mut().enumerate() {
                    *p += self.amplitude(theta, anc, k).powi(2);
                }
            }
        }
        dist
    }
}

/// Result of simulating the full register pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub post_selection_probability: f64,
    pub hit_probabilities: Vec<f64>,
    /// Answer-register distribution per sample.
    pub answer_distributions: Vec<Vec<f64>>,
}

/// Builds the ensemble state explicitly, post-selects the ancilla on `|0⟩`,
/// then for each sample applies the classifier operator to a copy of the
/// post-selected state and reads the Born probability of `labels[s]`.
///
/// `predictions_per_sample[s][θ]` is member θ's answer on sample `s`.
pub fn statevector_oracle(
    accuracies: &[f64],
    predictions_per_sample: &[Vec<usize>],
    labels: &[usize],
) -> Result<OracleOutcome> {
    if predictions_per_sample.len() != labels.len() {
        return Err(Error::usage("one label per sample required"));
    }
    let n_classes = predictions_per_sample
        .iter()
        .flatten()
        .chain(labels)
        .max()
        .map_or(2, |m| (m + 1).max(2));

    let mut state = StateVector::uniform(accuracies.len(), n_classes)?;
    state.encode_accuracies(accuracies)?;
    let p0 = state.post_select_ancilla(0)?;

    let mut hit_probabilities = Vec::with_capacity(labels.len());
    let mut answer_distributions = Vec::with_capacity(labels.len());
    for (preds, &label) in predictions_per_sample.iter().zip(labels) {
        let mut sample_state = state.clone();
        sample_state.apply_classifier(preds)?;
        let dist = sample_state.answer_distribution();
        hit_probabilities.push(dist[label]);
        answer_distributions.push(dist);
    }
    Ok(OracleOutcome {
        post_selection_probability: p0,
        hit_probabilities,
        answer_distributions,
    })
}

/// Monte Carlo count of ensemble constructions: repeatedly measures the
/// ancilla until it reads 0, `trials` times, and returns the mean number of
/// attempts. Not used by any reported metric.
pub fn sample_construction_attempts(accuracies: &[f64], trials: usize, seed: u64) -> Result<f64> {
    let p0 = post_selection_probability(accuracies);
    if p0 <= 0.0 {
        return Err(Error::DegenerateEnsemble);
    }
    if trials == 0 {
        return Err(Error::usage("at least one trial required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0usize;
    for _ in 0..trials {
        loop {
            attempts += 1;
            if rng.random::<f64>() < p0 {
                break;
            }
        }
    }
    Ok(attempts as f64 / trials as f64)
}
