//! Experiment drivers behind the `qensemble` binary: benchmark sweeps, the
//! 1D/2D replications and the oracle equivalence check. Each driver has an
//! in-memory form used by tests and a form that writes its output files.

mod config;

pub use config::{ExperimentConfig, CONFIG_KEYS, DEFAULT_ENSEMBLE_SIZES};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{holdout_split, load_builtin, standardize, Blobs2dSpec, Dataset, Gaussian1dSpec};
use crate::error::{Error, Result};
use crate::model::{init_mlp, MlpClassifier};
use crate::qensemble::{
    build_weights, evaluate_predictions, hit_probability, prediction_matrix, statevector_oracle,
    EvalReport, ORACLE_MAX_MEMBERS,
};
use crate::replicate::{
    expectation_curve_1d, linspace, replicate_2d_experiment, Curve1d, GridSpec,
    Replication2dConfig, DEFAULT_BLOB_SAMPLES, DEFAULT_MEMBERS, DEFAULT_PERCEPTRON_EPOCHS,
    DEFAULT_PERCEPTRON_LR,
};
use crate::train::{ensemble_accuracies, Execution, SgdConfig, SgdRun, TrainReport};

/// Member seeds of consecutive repeats are this far apart, so no two repeats
/// share a member seed for any ensemble smaller than the stride.
pub const REPEAT_SEED_STRIDE: u64 = 1 << 32;

/// Oracle and closed form must agree to this absolute tolerance.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

pub const SUMMARY_HEADER: &str =
    "dataset,ensemble_size,epochs,repeat,mpps_hit,stddev,overall_accuracy,post_selection_probability,status";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Outcome of one `(ensemble size, epochs, repeat)` combination.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dataset: String,
    pub ensemble_size: usize,
    /// 0 for untrained runs.
    pub epochs: usize,
    pub repeat: usize,
    pub split_seed: u64,
    pub base_seed: u64,
    /// Failure message when a member needed by this combination diverged.
    pub outcome: std::result::Result<EvalReport, String>,
    pub val_indices: Vec<usize>,
    /// Wall-clock time of the repeat that produced this record.
    pub duration: Duration,
}

impl RunRecord {
    pub fn report(&self) -> Option<&EvalReport> {
        self.outcome.as_ref().ok()
    }

    fn summary_row(&self) -> String {
        match &self.outcome {
            Ok(r) => format!(
                "{},{},{},{},{},{},{},{},ok",
                self.dataset,
                self.ensemble_size,
                self.epochs,
                self.repeat,
                r.mpps_hit,
                r.stddev,
                r.overall_accuracy,
                r.post_selection_probability
            ),
            Err(msg) => format!(
                "{},{},{},{},NaN,NaN,NaN,NaN,{}",
                self.dataset,
                self.ensemble_size,
                self.epochs,
                self.repeat,
                csv_quote(msg)
            ),
        }
    }
}

/// Mean over repeats of one `(ensemble size, epochs)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub ensemble_size: usize,
    pub epochs: usize,
    pub repeats_ok: usize,
    pub repeats_failed: usize,
    pub mpps_hit_mean: f64,
    pub mpps_hit_spread: f64,
    pub stddev_mean: f64,
    pub overall_accuracy_mean: f64,
    pub overall_accuracy_spread: f64,
    pub post_selection_probability_mean: f64,
}

fn mean_and_spread(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    /// Per-repeat training logs (`member_index,epoch,mean_loss,train_accuracy`),
    /// filled when `training_log` is on.
    pub training_logs: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| r.outcome.is_err())
    }

    /// Deterministic summary: config header, column line, one row per record.
    pub fn summary_csv(&self) -> String {
        let mut out = self.config.as_comment_header();
        out.push_str(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.summary_row());
            out.push('\n');
        }
        out
    }

    pub fn cells(&self) -> Vec<CellSummary> {
        let mut cells = Vec::new();
        for &epochs in &self.config.epoch_stages() {
            for &size in &self.config.ensemble_sizes {
                let group: Vec<&RunRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.epochs == epochs && r.ensemble_size == size)
                    .collect();
                let ok: Vec<&EvalReport> = group.iter().filter_map(|r| r.report()).collect();
                let pick = |f: fn(&EvalReport) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
                let (mpps_hit_mean, mpps_hit_spread) = mean_and_spread(&pick(|r| r.mpps_hit));
                let (overall_accuracy_mean, overall_accuracy_spread) =
                    mean_and_spread(&pick(|r| r.overall_accuracy));
                cells.push(CellSummary {
                    ensemble_size: size,
                    epochs,
                    repeats_ok: ok.len(),
                    repeats_failed: group.len() - ok.len(),
                    mpps_hit_mean,
                    mpps_hit_spread,
                    stddev_mean: mean_and_spread(&pick(|r| r.stddev)).0,
                    overall_accuracy_mean,
                    overall_accuracy_spread,
                    post_selection_probability_mean: mean_and_spread(&pick(|r| {
                        r.post_selection_probability
                    }))
                    .0,
                });
            }
        }
        cells
    }

    /// Cell with the highest mean overall accuracy; earlier cells win ties.
    pub fn best_cell(&self) -> Option<CellSummary> {
        self.cells().into_iter().filter(|c| c.repeats_ok > 0).fold(
            None,
            |best: Option<CellSummary>, c| match best {
                Some(b) if b.overall_accuracy_mean >= c.overall_accuracy_mean => Some(b),
                _ => Some(c),
            },
        )
    }

    pub fn mean_summary_csv(&self) -> String {
        let mut out = self.config.as_comment_header();
        out.push_str(
            "dataset,ensemble_size,epochs,repeats_ok,repeats_failed,mpps_hit_mean,mpps_hit_spread,\
             stddev_mean,overall_accuracy_mean,overall_accuracy_spread,post_selection_probability_mean\n",
        );
        for c in self.cells() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.config.dataset,
                c.ensemble_size,
                c.epochs,
                c.repeats_ok,
                c.repeats_failed,
                c.mpps_hit_mean,
                c.mpps_hit_spread,
                c.stddev_mean,
                c.overall_accuracy_mean,
                c.overall_accuracy_spread,
                c.post_selection_probability_mean
            )
            .unwrap();
        }
        out
    }

    /// Writes `summary.csv`, `summary_mean.csv`, `pps/*.csv`, the optional
    /// `train_log/*.csv` and a `run_log.txt` with timings.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut emit = |rel: String, contents: &str| -> Result<()> {
            let path = out_dir.join(rel);
            write_file(&path, contents)?;
            written.push(path);
            Ok(())
        };
        emit("summary.csv".into(), &self.summary_csv())?;
        emit("summary_mean.csv".into(), &self.mean_summary_csv())?;
        for r in &self.records {
            if let Ok(report) = &r.outcome {
                let mut text = self.config.as_comment_header();
                writeln!(
                    text,
                    "# repeat = {}\n# repeat_split_seed = {}\n# repeat_base_seed = {}",
                    r.repeat, r.split_seed, r.base_seed
                )
                .unwrap();
                text.push_str(&report.to_csv(&r.val_indices));
                emit(
                    format!(
                        "pps/{}_E{}_ep{}_r{}.csv",
                        r.dataset, r.ensemble_size, r.epochs, r.repeat
                    ),
                    &text,
                )?;
            }
        }
        for (repeat, log) in &self.training_logs {
            let mut text = self.config.as_comment_header();
            text.push_str(log);
            emit(
                format!("train_log/{}_r{}.csv", self.config.dataset, repeat),
                &text,
            )?;
        }
        let mut timing = String::from("repeat,ensemble_size,epochs,seconds,status\n");
        for r in &self.records {
            writeln!(
                timing,
                "{},{},{},{:.3},{}",
                r.repeat,
                r.ensemble_size,
                r.epochs,
                r.duration.as_secs_f64(),
                if r.outcome.is_ok() { "ok" } else { "error" }
            )
            .unwrap();
        }
        emit("run_log.txt".into(), &timing)?;
        Ok(written)
    }
}

/// One member's parameters at each swept epoch count, up to a failure.
struct MemberTrajectory {
    snapshots: Vec<Option<MlpClassifier>>,
    failure: Option<String>,
    report: Option<TrainReport>,
}

fn train_member(
    cfg: &ExperimentConfig,
    data: &Dataset,
    train_indices: &[usize],
    stages: &[usize],
    seed: u64,
) -> Result<MemberTrajectory> {
    let model = init_mlp(data.n_features(), data.n_classes(), cfg.hidden, seed)?
        .with_activation(cfg.activation);
    if !cfg.trained {
        return Ok(MemberTrajectory {
            snapshots: vec![Some(model)],
            failure: None,
            report: None,
        });
    }
    let max_epochs = stages.iter().copied().max().unwrap_or(0);
    let sgd = SgdConfig {
        epochs: max_epochs,
        seed,
        ..cfg.sgd
    };
    let mut run = SgdRun::new(model, data, train_indices, sgd)?;
    let mut snapshots = vec![None; stages.len()];
    let mut failure = None;
    for epoch in 1..=max_epochs {
        if let Err(e) = run.run_epoch() {
            failure = Some(e.to_string());
            break;
        }
        for (slot, _) in snapshots
            .iter_mut()
            .zip(stages)
            .filter(|(_, &s)| s == epoch)
        {
            *slot = Some(run.model().clone());
        }
    }
    Ok(MemberTrajectory {
        snapshots,
        failure,
        report: Some(run.report()),
    })
}

fn run_repeat(
    cfg: &ExperimentConfig,
    raw: &Dataset,
    repeat: usize,
    exec: Execution,
) -> Result<(Vec<RunRecord>, Option<String>)> {
    let start = Instant::now();
    let split_seed = cfg.split_seed;
    let base_seed = cfg
        .base_seed
        .wrapping_add((repeat as u64).wrapping_mul(REPEAT_SEED_STRIDE));
    let split = holdout_split(raw, split_seed)?;
    let data = if cfg.standardize {
        standardize(raw, &split.train_indices)?
    } else {
        raw.clone()
    };
    let stages = cfg.epoch_stages();
    let max_size = cfg.ensemble_sizes.iter().copied().max().unwrap_or(0);

    let trajectories = exec
        .map(max_size, |i| {
            train_member(
                cfg,
                &data,
                &split.train_indices,
                &stages,
                base_seed.wrapping_add(i as u64),
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut pending = Vec::new();
    for (s, &epochs) in stages.iter().enumerate() {
        // members usable at this stage form a prefix ending at the first failure
        let usable: Vec<MlpClassifier> = trajectories
            .iter()
            .map_while(|t| t.snapshots[s].clone())
            .collect();
        let accuracies = ensemble_accuracies(&usable, &data, &split.train_indices, exec)?;
        let predictions = prediction_matrix(&usable, &data, &split.val_indices, exec);
        for &size in &cfg.ensemble_sizes {
            let outcome = if size <= usable.len() {
                build_weights(&accuracies[..size])
                    .and_then(|w| {
                        evaluate_predictions(
                            &w,
                            &predictions,
                            &data,
                            &split.val_indices,
                            cfg.threshold,
                            cfg.stddev,
                        )
                    })
                    .map_err(|e| e.to_string())
            } else {
                let index = usable.len();
                let why = trajectories[index]
                    .failure
                    .as_deref()
                    .unwrap_or("no snapshot");
                Err(format!("member {index}: {why}"))
            };
            pending.push((size, epochs, outcome));
        }
    }
    let duration = start.elapsed();
    let records = pending
        .into_iter()
        .map(|(ensemble_size, epochs, outcome)| RunRecord {
            dataset: raw.name().to_string(),
            ensemble_size,
            epochs,
            repeat,
            split_seed,
            base_seed,
            outcome,
            val_indices: split.val_indices.clone(),
            duration,
        })
        .collect();

    let log = cfg.training_log.then(|| {
        let mut log = String::from("member_index,epoch,mean_loss,train_accuracy\n");
        for (i, t) in trajectories.iter().enumerate() {
            if let Some(report) = &t.report {
                for (e, (loss, acc)) in report
                    .loss_trace
                    .iter()
                    .zip(&report.accuracy_trace)
                    .enumerate()
                {
                    writeln!(log, "{i},{},{loss},{acc}", e + 1).unwrap();
                }
            }
        }
        log
    });
    Ok((records, log))
}

/// Runs the whole sweep in memory. Every repeat uses the same `split_seed`
/// split; repeat `r` seeds member `i` with `base_seed + r·2³² + i`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let raw = load_builtin(cfg.dataset.name())?;
    let exec = if cfg.parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    let mut records = Vec::new();
    let mut training_logs = Vec::new();
    for repeat in 0..cfg.repeats {
        let (recs, log) = run_repeat(cfg, &raw, repeat, exec)?;
        records.extend(recs);
        if let Some(log) = log {
            training_logs.push((repeat, log));
        }
    }
    let stage_pos = |e: usize| cfg.epoch_stages().iter().position(|&s| s == e);
    let size_pos = |n: usize| cfg.ensemble_sizes.iter().position(|&s| s == n);
    records.sort_by_key(|r| (stage_pos(r.epochs), size_pos(r.ensemble_size), r.repeat));
    Ok(SweepResult {
        config: cfg.clone(),
        records,
        training_logs,
    })
}

/// [`run_sweep`] followed by writing all outputs into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepResult> {
    let result = run_sweep(cfg)?;
    result.write(out_dir)?;
    Ok(result)
}

/// Grid of x values used by the 1D replication.
pub fn default_1d_grid() -> Vec<f64> {
    linspace(-3.0, 3.0, 601)
}

/// Expectation curves for the symmetric and the `σ+ = 0.9` specs.
pub fn run_replication_1d(xs: &[f64]) -> Result<Vec<(&'static str, Gaussian1dSpec, Curve1d)>> {
    [
        (
            "gaussian_1d_symmetric",
            Gaussian1dSpec::symmetric(DEFAULT_BLOB_SAMPLES),
        ),
        (
            "gaussian_1d_shifted",
            Gaussian1dSpec::shifted(DEFAULT_BLOB_SAMPLES),
        ),
    ]
    .into_iter()
    .map(|(name, spec)| Ok((name, spec, expectation_curve_1d(&spec, xs)?)))
    .collect()
}

pub fn write_replication_1d(out_dir: &Path, xs: &[f64]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, spec, curve) in run_replication_1d(xs)? {
        let mut text = format!(
            "# mu_minus = {}\n# mu_plus = {}\n# sigma_minus = {}\n# sigma_plus = {}\n",
            spec.mu_minus, spec.mu_plus, spec.sigma_minus, spec.sigma_plus
        );
        text.push_str(&curve.to_csv());
        let path = out_dir.join("replication").join(format!("{name}.csv"));
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoDOptions {
    pub n_members: usize,
    pub n_per_class: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub grid: GridSpec,
}

impl Default for TwoDOptions {
    fn default() -> Self {
        TwoDOptions {
            n_members: DEFAULT_MEMBERS,
            n_per_class: DEFAULT_BLOB_SAMPLES,
            epochs: DEFAULT_PERCEPTRON_EPOCHS,
            learning_rate: DEFAULT_PERCEPTRON_LR,
            seed: 0,
            grid: GridSpec::default(),
        }
    }
}

/// Trained vs untrained comparison for one blob variant.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDComparison {
    pub variant: &'static str,
    /// Votes at `[center_minus, center_plus]`.
    pub untrained_center_votes: [f64; 2],
    pub trained_center_votes: [f64; 2],
    pub disagreement_fraction: f64,
}

/// Runs the balanced and the unbalanced (std 0.3) blob variants, trained and
/// untrained, writing each grid plus `disagreement.csv` when `out_dir` is set.
pub fn run_replication_2d(
    opts: &TwoDOptions,
    exec: Execution,
    out_dir: Option<&Path>,
) -> Result<Vec<TwoDComparison>> {
    let variants = [
        ("blobs_balanced", Blobs2dSpec::balanced(opts.n_per_class)),
        (
            "blobs_unbalanced",
            Blobs2dSpec::unbalanced(opts.n_per_class),
        ),
    ];
    let mut comparisons = Vec::new();
    for (variant, spec) in variants {
        let mut grids = Vec::new();
        let mut votes = Vec::new();
        for trained in [false, true] {
            let cfg = Replication2dConfig {
                spec,
                n_members: opts.n_members,
                trained,
                epochs: opts.epochs,
                learning_rate: opts.learning_rate,
                seed: opts.seed,
                grid: opts.grid,
            };
            let rep = replicate_2d_experiment(&cfg, exec)?;
            let grid = rep.grid(exec)?;
            votes.push([rep.vote(spec.center_minus)?, rep.vote(spec.center_plus)?]);
            if let Some(dir) = out_dir {
                let suffix = if trained { "trained" } else { "untrained" };
                let path = dir
                    .join("replication")
                    .join(format!("{variant}_{suffix}.csv"));
                write_file(&path, &grid.to_csv(&rep.metadata))?;
            }
            grids.push(grid);
        }
        comparisons.push(TwoDComparison {
            variant,
            untrained_center_votes: votes[0],
            trained_center_votes: votes[1],
            disagreement_fraction: grids[0].sign_disagreement(&grids[1])?,
        });
    }
    if let Some(dir) = out_dir {
        let mut text = format!(
            "# n_members = {}\n# n_per_class = {}\n# perceptron_epochs = {}\n# perceptron_learning_rate = {}\n# seed = {}\n",
            opts.n_members, opts.n_per_class, opts.epochs, opts.learning_rate, opts.seed
        );
        text.push_str("variant,untrained_vote_minus,untrained_vote_plus,trained_vote_minus,trained_vote_plus,disagreement_fraction\n");
        for c in &comparisons {
            writeln!(
                text,
                "{},{},{},{},{},{}",
                c.variant,
                c.untrained_center_votes[0],
                c.untrained_center_votes[1],
                c.trained_center_votes[0],
                c.trained_center_votes[1],
                c.disagreement_fraction
            )
            .unwrap();
        }
        write_file(&dir.join("replication").join("disagreement.csv"), &text)?;
    }
    Ok(comparisons)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_ensemble: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest `|closed form − state vector|` over all random samples.
    pub max_deviation: f64,
    /// Largest `|Σ_k P(answer = k) − 1|`.
    pub max_completeness_error: f64,
    /// Deviation on the fixed `a = [0.5, 1.0]`, member-0-correct instance.
    pub pinned_deviation: f64,
    pub passed: bool,
}

impl OracleReport {
    /// Writes `oracle_report.txt` into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("oracle_report.txt");
        write_file(&path, &self.to_text())?;
        Ok(path)
    }

    pub fn to_text(&self) -> String {
        format!(
            "max_ensemble = {}\ntrials = {}\nseed = {}\ntolerance = {:e}\nmax_deviation = {:e}\n\
             max_completeness_error = {:e}\npinned_deviation = {:e}\nresult = {}\n",
            self.max_ensemble,
            self.trials,
            self.seed,
            ORACLE_TOLERANCE,
            self.max_deviation,
            self.max_completeness_error,
            self.pinned_deviation,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Compares [`hit_probability`] against [`statevector_oracle`] on `trials`
/// random instances with up to `max_ensemble` members.
pub fn run_oracle_check(max_ensemble: usize, trials: usize, seed: u64) -> Result<OracleReport> {
    if max_ensemble == 0 || max_ensemble > ORACLE_MAX_MEMBERS {
        return Err(Error::usage(format!(
            "max_ensemble must be in 1..={ORACLE_MAX_MEMBERS}, got {max_ensemble}"
        )));
    }
    if trials == 0 {
        return Err(Error::usage("oracle check needs at least one trial"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deviation = 0.0f64;
    let mut max_completeness_error = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(1..=max_ensemble);
        let classes = rng.random_range(2..=3);
        let samples = rng.random_range(1..=3);
        let mut accuracies: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if accuracies.iter().all(|&a| a == 0.0) {
            accuracies[0] = 1.0;
        }
        let preds: Vec<Vec<usize>> = (0..samples)
            .map(|_| (0..n).map(|_| rng.random_range(0..classes)).collect())
            .collect();
        let labels: Vec<usize> = (0..samples).map(|_| rng.random_range(0..classes)).collect();

        let w = build_weights(&accuracies)?;
        let out = statevector_oracle(&accuracies, &preds, &labels)?;
        for (s, (p, &y)) in preds.iter().zip(&labels).enumerate() {
            let closed = hit_probability(&w, p, y)?;
            max_deviation = max_deviation.max((closed - out.hit_probabilities[s]).abs());
            let total: f64 = out.answer_distributions[s].iter().sum();
            max_completeness_error = max_completeness_error.max((total - 1.0).abs());
        }
        max_deviation = max_deviation
            .max((out.post_selection_probability - w.post_selection_probability()).abs());
    }

    let pinned = [0.5, 1.0];
    let pinned_oracle = statevector_oracle(&pinned, &[vec![1, 0]], &[1])?;
    let pinned_closed = hit_probability(&build_weights(&pinned)?, &[1, 0], 1)?;
    let pinned_deviation = (pinned_oracle.hit_probabilities[0] - pinned_closed).abs();

    let passed = max_deviation <= ORACLE_TOLERANCE
        && max_completeness_error <= ORACLE_TOLERANCE
        && pinned_deviation <= ORACLE_TOLERANCE;
    Ok(OracleReport {
        max_ensemble,
        trials,
        seed,
        max_deviation,
        max_completeness_error,
        pinned_deviation,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Builtin;

    fn small(trained: bool) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Builtin::Iris, trained);
        cfg.ensemble_sizes = vec![3, 5];
        cfg.epochs_list = vec![1, 2];
        cfg.repeats = 2;
        cfg
    }

    #[test]
    fn sweep_row_count() {
        let r = run_sweep(&small(true)).unwrap();
        assert_eq!(r.records.len(), 2 * 2 * 2);
        let r = run_sweep(&small(false)).unwrap();
        assert_eq!(r.records.len(), 2 * 2);
        assert!(r.records.iter().all(|rec| rec.epochs == 0));
        assert_eq!(
            r.summary_csv()
                .lines()
                .filter(|l| l.starts_with("iris,"))
                .count(),
            4
        );
    }

    #[test]
    fn repeats_use_distinct_seeds() {
        let r = run_sweep(&small(false)).unwrap();
        let a = &r.records[0];
        let b = &r.records[1];
        assert_eq!((a.repeat, b.repeat), (0, 1));
        assert_ne!(a.base_seed, b.base_seed);
        assert_eq!(a.split_seed, b.split_seed);
        assert_eq!(a.val_indices, b.val_indices);
        assert_ne!(a.report().unwrap().pps_hit, b.report().unwrap().pps_hit);
    }

    #[test]
    fn ensembles_are_prefixes_of_the_largest() {
        // size-3 ensemble equals evaluating the first three members directly
        let cfg = small(true);
        let r = run_sweep(&cfg).unwrap();
        let rec = r
            .records
            .iter()
            .find(|x| x.ensemble_size == 3 && x.epochs == 2 && x.repeat == 0)
            .unwrap();

        let raw = load_builtin("iris").unwrap();
        let split = holdout_split(&raw, 0).unwrap();
        let d = standardize(&raw, &split.train_indices).unwrap();
        let members: Vec<_> = (0..3)
            .map(|i| {
                let m = init_mlp(4, 3, 10, i).unwrap();
                let sgd = SgdConfig {
                    epochs: 2,
                    seed: i,
                    ..cfg.sgd
                };
                crate::train::train_mlp(m, &d, &split.train_indices, &sgd)
                    .unwrap()
                    .0
            })
            .collect();
        let acc =
            ensemble_accuracies(&members, &d, &split.train_indices, Execution::Sequential).unwrap();
        let w = build_weights(&acc).unwrap();
        let direct = crate::qensemble::evaluate(&w, &members, &d, &split.val_indices, 0.7).unwrap();
        assert_eq!(rec.report().unwrap(), &direct);
    }

    #[test]
    fn summary_is_independent_of_parallelism() {
        let mut cfg = small(true);
        cfg.parallel = false;
        let seq = run_sweep(&cfg).unwrap().summary_csv();
        cfg.parallel = true;
        let par = run_sweep(&cfg).unwrap().summary_csv();
        assert_eq!(seq, par);
    }

    #[test]
    fn divergence_becomes_a_flagged_row() {
        let mut cfg = small(true);
        cfg.sgd.learning_rate = 1e308;
        let r = run_sweep(&cfg).unwrap();
        assert!(r.has_errors());
        let csv = r.summary_csv();
        assert!(csv.contains("diverged"), "{csv}");
        assert_eq!(csv.lines().filter(|l| l.starts_with("iris,")).count(), 8);
    }

    #[test]
    fn written_outputs_embed_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(true);
        cfg.training_log = true;
        let r = run_experiment(&cfg, dir.path()).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary, r.summary_csv());
        let parsed = ExperimentConfig::parse_str(
            &summary
                .lines()
                .filter_map(|l| l.strip_prefix("# "))
                .collect::<Vec<_>>()
                .join("\n"),
            "summary",
        )
        .unwrap();
        assert_eq!(parsed, cfg);
        let pps = std::fs::read_to_string(dir.path().join("pps/iris_E5_ep2_r1.csv")).unwrap();
        assert!(pps.starts_with("# dataset = iris\n"));
        assert_eq!(pps.lines().filter(|l| !l.starts_with('#')).count(), 1 + 45);
        let log = std::fs::read_to_string(dir.path().join("train_log/iris_r0.csv")).unwrap();
        assert!(log.contains("member_index,epoch,mean_loss,train_accuracy"));
        assert_eq!(
            log.lines().filter(|l| !l.starts_with('#')).count(),
            1 + 5 * 2
        );
        assert!(dir.path().join("summary_mean.csv").exists());
    }

    #[test]
    fn best_cell_prefers_higher_mean() {
        let r = run_sweep(&small(true)).unwrap();
        let best = r.best_cell().unwrap();
        assert!(r
            .cells()
            .iter()
            .all(|c| c.overall_accuracy_mean <= best.overall_accuracy_mean));
    }

    #[test]
    fn oracle_check_bounds() {
        let report = run_oracle_check(16, 50, 1).unwrap();
        assert!(report.passed, "{}", report.to_text());
        let pinned = run_oracle_check(2, 1, 5).unwrap();
        assert!(pinned.pinned_deviation <= 1e-15);
        assert!(matches!(run_oracle_check(2048, 1, 0), Err(Error::Usage(_))));
    }

    #[test]
    fn replication_1d_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_replication_1d(dir.path(), &default_1d_grid()).unwrap();
        assert_eq!(files.len(), 2);
        let sym = std::fs::read_to_string(&files[0]).unwrap();
        assert!(sym.trim_end().ends_with("# crossings: 0"));
    }

    #[test]
    fn replication_2d_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let opts = TwoDOptions {
            n_members: 200,
            n_per_class: 40,
            grid: GridSpec {
                nx: 20,
                ny: 20,
                ..GridSpec::default()
            },
            ..TwoDOptions::default()
        };
        let cmp = run_replication_2d(&opts, Execution::Sequential, Some(dir.path())).unwrap();
        assert_eq!(cmp.len(), 2);
        for name in [
            "blobs_balanced_untrained",
            "blobs_balanced_trained",
            "blobs_unbalanced_untrained",
            "blobs_unbalanced_trained",
            "disagreement",
        ] {
            assert!(
                dir.path()
                    .join("replication")
                    .join(format!("{name}.csv"))
                    .exists(),
                "{name}"
            );
        }
    }
}
