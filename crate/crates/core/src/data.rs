//! Datasets: the vendored benchmark sets, synthetic Gaussian generators for
//! the replication studies, z-score standardization and seeded hold-out
//! splits.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Fraction of samples assigned to the training side of a hold-out split.
pub const TRAIN_FRACTION: f64 = 0.7;

const IRIS_CSV: &str = include_str!("../data/iris.csv");
const WINE_CSV: &str = include_str!("../data/wine.csv");
const BREAST_CANCER_CSV: &str = include_str!("../data/breast-cancer.csv");

/// The three benchmark datasets shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Iris,
    Wine,
    BreastCancer,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Iris, Builtin::Wine, Builtin::BreastCancer];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Iris => "iris",
            Builtin::Wine => "wine",
            Builtin::BreastCancer => "breast-cancer",
        }
    }

    fn csv(self) -> &'static str {
        match self {
            Builtin::Iris => IRIS_CSV,
            Builtin::Wine => WINE_CSV,
            Builtin::BreastCancer => BREAST_CANCER_CSV,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iris" => Ok(Builtin::Iris),
            "wine" => Ok(Builtin::Wine),
            "breast-cancer" | "breast_cancer" => Ok(Builtin::BreastCancer),
            other => Err(Error::Config(format!(
                "unknown dataset '{other}' (expected iris, wine or breast-cancer)"
            ))),
        }
    }
}

/// Row-major feature matrix with integer class labels in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// Builds a dataset from per-sample rows, checking every invariant.
    pub fn from_rows(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_features = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::Data(format!(
                    "row {i} has {} features, expected {n_features}",
                    row.len()
                )));
            }
            features.extend(row);
        }
        Self::from_flat(name, features, n_features, labels, n_classes)
    }

    pub fn from_flat(
        name: impl Into<String>,
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Data(format!(
                "n_classes must be >= 2, got {n_classes}"
            )));
        }
        if n_features == 0 && !labels.is_empty() {
            return Err(Error::Data("samples must have at least one feature".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Data(format!(
                "feature buffer of length {} does not hold {} rows of {n_features}",
                features.len(),
                labels.len()
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= n_classes) {
            return Err(Error::Data(format!(
                "label {y} of sample {i} is outside [0, {n_classes})"
            )));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            n_features,
            labels,
            n_classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features.max(1))
    }

    /// Values of feature `j` across all samples.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Number of samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Hold-out partition of sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Class-conditional 1D normal distributions. Class 0 is the negative class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1dSpec {
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub n_per_class: usize,
}

impl Gaussian1dSpec {
    /// `μ∓ = ∓1`, `σ± = 0.4`.
    pub fn symmetric(n_per_class: usize) -> Self {
        Gaussian1dSpec {
            mu_minus: -1.0,
            mu_plus: 1.0,
            sigma_minus: 0.4,
            sigma_plus: 0.4,
            n_per_class,
        }
    }

    /// The symmetric spec with the positive class widened to `σ+ = 0.9`.
    pub fn shifted(n_per_class: usize) -> Self {
        Gaussian1dSpec {
            sigma_plus: 0.9,
            ..Self::symmetric(n_per_class)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_minus > 0.0 && self.sigma_plus > 0.0) {
            return Err(Error::usage(
                "gaussian standard deviations must be positive",
            ));
        }
        if !(self.mu_minus.is_finite() && self.mu_plus.is_finite()) {
            return Err(Error::usage("gaussian means must be finite"));
        }
        Ok(())
    }
}

/// Two isotropic 2D Gaussian blobs. Class 0 sits at `center_minus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blobs2dSpec {
    pub center_minus: [f64; 2],
    pub center_plus: [f64; 2],
    pub std_minus: f64,
    pub std_plus: f64,
    pub n_per_class: usize,
}

impl Blobs2dSpec {
    /// Centers `[-1, 1]` / `[1, -1]` with standard deviation 0.5 for both classes.
    pub fn balanced(n_per_class: usize) -> Self {
        Blobs2dSpec {
            center_minus: [-1.0, 1.0],
            center_plus: [1.0, -1.0],
            std_minus: 0.5,
            std_plus: 0.5,
            n_per_class,
        }
    }

    /// Balanced blobs with the negative class tightened to std 0.3.
    pub fn unbalanced(n_per_class: usize) -> Self {
        Blobs2dSpec {
            std_minus: 0.3,
            ..Self::balanced(n_per_class)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std_minus > 0.0 && self.std_plus > 0.0) {
            return Err(Error::usage("blob standard deviations must be positive"));
        }
        Ok(())
    }
}

/// Loads one of the vendored benchmark datasets.
pub fn load_builtin(name: &str) -> Result<Dataset> {
    let which: Builtin = name.parse()?;
    parse_csv(which.name(), &format!("{}.csv", which.name()), which.csv())
}

/// Loads a dataset from a CSV file following the vendored format: one header
/// line, then `n_features` decimal values and an integer label per line.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    parse_csv(&name, &path.display().to_string(), &text)
}

fn parse_csv(name: &str, file: &str, text: &str) -> Result<Dataset> {
    let row_err = |line: usize, message: String| Error::DataRow {
        file: file.to_string(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| row_err(1, "empty file, expected a header line".into()))?;
    let n_columns = header.split(',').count();
    if n_columns < 2 {
        return Err(row_err(
            1,
            "header needs at least one feature and a label column".into(),
        ));
    }
    let n_features = n_columns - 1;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_columns {
            return Err(row_err(
                line_no,
                format!("expected {n_columns} fields, found {}", fields.len()),
            ));
        }
        for field in &fields[..n_features] {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| row_err(line_no, format!("invalid number '{field}'")))?;
            if !v.is_finite() {
                return Err(row_err(line_no, format!("non-finite value '{field}'")));
            }
            features.push(v);
        }
        let label_field = fields[n_features].trim();
        let label: usize = label_field
            .parse()
            .map_err(|_| row_err(line_no, format!("invalid label '{label_field}'")))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(row_err(1, "no samples after the header".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    Dataset::from_flat(name, features, n_features, labels, n_classes)
}

/// Z-scores every column using mean and population standard deviation taken
/// over `fit_indices` only. Zero-variance columns become 0.
pub fn standardize(d: &Dataset, fit_indices: &[usize]) -> Result<Dataset> {
    if fit_indices.is_empty() {
        return Err(Error::usage("standardize needs at least one fit index"));
    }
    if let Some(&bad) = fit_indices.iter().find(|&&i| i >= d.n_samples()) {
        return Err(Error::usage(format!(
            "fit index {bad} out of range for {} samples",
            d.n_samples()
        )));
    }
    let nf = d.n_features();
    let n = fit_indices.len() as f64;
    let mut mean = vec![0.0; nf];
    for &i in fit_indices {
        for (m, x) in mean.iter_mut().zip(d.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = vec![0.0; nf];
    for &i in fit_indices {
        for ((s, x), m) in std.iter_mut().zip(d.row(i)).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / n).sqrt());

    let features = d
        .rows()
        .flat_map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&std)
                .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { 0.0 })
                .collect::<Vec<_>>()
        })
        .collect();
    Dataset::from_flat(d.name(), features, nf, d.labels().to_vec(), d.n_classes())
}

/// Shuffles all indices with `seed` and cuts at `round(0.7 n)`.
pub fn holdout_split(d: &Dataset, seed: u64) -> Result<Split> {
    let n = d.n_samples();
    if n < 10 {
        return Err(Error::Data(format!(
            "hold-out split needs at least 10 samples, dataset '{}' has {n}",
            d.name()
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let val_indices = indices.split_off(n_train);
    Ok(Split {
        train_indices: indices,
        val_indices,
    })
}

/// Draws `n_per_class` points from each class-conditional normal; class 0
/// samples come first.
pub fn generate_gaussian_1d(spec: &Gaussian1dSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if spec.n_per_class == 0 {
        return Err(Error::usage("n_per_class must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * spec.n_per_class);
    let mut labels = Vec::with_capacity(2 * spec.n_per_class);
    for (label, mu, sigma) in [
        (0, spec.mu_minus, spec.sigma_minus),
        (1, spec.mu_plus, spec.sigma_plus),
    ] {
        let normal = Normal::new(mu, sigma).map_err(|e| Error::usage(e.to_string()))?;
        for _ in 0..spec.n_per_class {
            rows.push(vec![normal.sample(&mut rng)]);
            labels.push(label);
        }
    }
    Dataset::from_rows("gaussian-1d", rows, labels, 2)
}

/// Isotropic 2D blobs around each center; class 0 samples come first.
pub fn generate_blobs_2d(spec: &Blobs2dSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if spec.n_per_class == 0 {
        return Err(Error::usage("n_per_class must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * spec.n_per_class);
    let mut labels = Vec::with_capacity(2 * spec.n_per_class);
    for (label, center, std) in [
        (0, spec.center_minus, spec.std_minus),
        (1, spec.center_plus, spec.std_plus),
    ] {
        let noise = Normal::new(0.0, std).map_err(|e| Error::usage(e.to_string()))?;
        for _ in 0..spec.n_per_class {
            rows.push(vec![
                center[0] + noise.sample(&mut rng),
                center[1] + noise.sample(&mut rng),
            ]);
            labels.push(label);
        }
    }
    Dataset::from_rows("blobs-2d", rows, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn toy(col: &[f64]) -> Dataset {
        let rows = col.iter().map(|&v| vec![v]).collect();
        let labels = (0..col.len()).map(|i| i % 2).collect();
        Dataset::from_rows("toy", rows, labels, 2).unwrap()
    }

    #[test]
    fn builtin_shapes() {
        for (name, n, f, c) in [
            ("iris", 150, 4, 3),
            ("wine", 178, 13, 3),
            ("breast-cancer", 569, 30, 2),
        ] {
            let d = load_builtin(name).unwrap();
            assert_eq!(
                (d.n_samples(), d.n_features(), d.n_classes()),
                (n, f, c),
                "{name}"
            );
        }
    }

    #[test]
    fn unknown_builtin_is_config_error() {
        assert!(matches!(load_builtin("mnist"), Err(Error::Config(_))));
    }

    #[test]
    fn malformed_csv_names_file_and_line() {
        let err = parse_csv("bad", "bad.csv", "a,b,label\n1.0,2.0,0\n1.0,oops,1\n").unwrap_err();
        match err {
            Error::DataRow { file, line, .. } => {
                assert_eq!(file, "bad.csv");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_csv("bad", "bad.csv", "a,b,label\n1.0,0\n").unwrap_err();
        assert!(matches!(err, Error::DataRow { line: 2, .. }));
    }

    #[test]
    fn missing_csv_is_io_error() {
        let err = load_csv("/nonexistent/dir/data.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/data.csv"));
    }

    #[test]
    fn dataset_invariants_enforced() {
        assert!(Dataset::from_rows("x", vec![vec![1.0]], vec![0, 1], 2).is_err());
        assert!(Dataset::from_rows("x", vec![vec![1.0]], vec![2], 2).is_err());
        assert!(Dataset::from_rows("x", vec![vec![1.0]], vec![0], 1).is_err());
    }

    #[test]
    fn standardize_arithmetic_sequence() {
        let d = standardize(&toy(&[1.0, 2.0, 3.0]), &[0, 1, 2]).unwrap();
        let col = d.column(0);
        assert_abs_diff_eq!(col[0], -1.224744871391589, epsilon = 1e-9);
        assert_abs_diff_eq!(col[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(col[2], 1.224744871391589, epsilon = 1e-9);
    }

    #[test]
    fn standardize_constant_column_maps_to_zero() {
        let d = standardize(&toy(&[5.0, 5.0, 5.0]), &[0, 1, 2]).unwrap();
        assert_eq!(d.column(0), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_uses_fit_rows_only() {
        let d = toy(&[1.0, 2.0, 3.0, 10.0, 11.0]);
        let s = standardize(&d, &[0, 1, 2]).unwrap();
        let val_mean = (s.column(0)[3] + s.column(0)[4]) / 2.0;
        assert!(val_mean.abs() > 1.0);
        assert!(standardize(&d, &[]).is_err());
    }

    #[test]
    fn split_sizes_for_benchmarks() {
        for (name, train) in [("iris", 105), ("wine", 125), ("breast-cancer", 398)] {
            let d = load_builtin(name).unwrap();
            let s = holdout_split(&d, 3).unwrap();
            assert_eq!(s.train_indices.len(), train, "{name}");
            assert_eq!(s.train_indices.len() + s.val_indices.len(), d.n_samples());
        }
    }

    #[test]
    fn split_is_seeded() {
        let d = load_builtin("iris").unwrap();
        assert_eq!(holdout_split(&d, 7).unwrap(), holdout_split(&d, 7).unwrap());
        assert_ne!(holdout_split(&d, 1).unwrap(), holdout_split(&d, 2).unwrap());
    }

    #[test]
    fn split_rejects_tiny_datasets() {
        let d = toy(&[1.0; 9]);
        assert!(matches!(holdout_split(&d, 0), Err(Error::Data(_))));
    }

    #[test]
    fn gaussian_class_mean_within_three_sigma() {
        let d = generate_gaussian_1d(&Gaussian1dSpec::symmetric(1000), 11).unwrap();
        let class1: Vec<f64> = (0..d.n_samples())
            .filter(|&i| d.label(i) == 1)
            .map(|i| d.row(i)[0])
            .collect();
        let mean = class1.iter().sum::<f64>() / class1.len() as f64;
        assert!((mean - 1.0).abs() < 0.04, "mean {mean}");
    }

    #[test]
    fn gaussian_single_sample_per_class() {
        let d = generate_gaussian_1d(&Gaussian1dSpec::symmetric(1), 0).unwrap();
        assert_eq!(d.n_samples(), 2);
        assert_eq!(d.class_counts(), vec![1, 1]);
    }

    #[test]
    fn generators_reject_bad_specs() {
        let mut g = Gaussian1dSpec::symmetric(0);
        assert!(generate_gaussian_1d(&g, 0).is_err());
        g.n_per_class = 5;
        g.sigma_plus = 0.0;
        assert!(generate_gaussian_1d(&g, 0).is_err());
        assert!(generate_blobs_2d(&Blobs2dSpec::balanced(0), 0).is_err());
    }

    #[test]
    fn blob_center_and_spread() {
        let d = generate_blobs_2d(&Blobs2dSpec::balanced(1000), 5).unwrap();
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in (0..d.n_samples()).filter(|&i| d.label(i) == 1) {
            sx += d.row(i)[0];
            sy += d.row(i)[1];
        }
        assert!((sx / 1000.0 - 1.0).abs() < 0.05);
        assert!((sy / 1000.0 + 1.0).abs() < 0.05);

        let d = generate_blobs_2d(&Blobs2dSpec::unbalanced(1000), 5).unwrap();
        for axis in 0..2 {
            let xs: Vec<f64> = (0..1000).map(|i| d.row(i)[axis]).collect();
            let m = xs.iter().sum::<f64>() / 1000.0;
            let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 1000.0).sqrt();
            assert!((0.27..=0.33).contains(&sd), "axis {axis} sd {sd}");
        }
    }

    proptest! {
        #[test]
        fn split_partitions_indices(n in 10usize..300, seed in any::<u64>()) {
            let d = toy(&vec![0.0; n]);
            let s = holdout_split(&d, seed).unwrap();
            let mut all: Vec<usize> = s.train_indices.iter().chain(&s.val_indices).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.train_indices.len(), (0.7 * n as f64).round() as usize);
        }

        #[test]
        fn standardize_is_idempotent_on_fit_rows(
            col in proptest::collection::vec(-100.0f64..100.0, 3..40),
            cut in 2usize..40,
        ) {
            let d = toy(&col);
            let fit: Vec<usize> = (0..cut.min(col.len())).collect();
            let once = standardize(&d, &fit).unwrap();
            let twice = standardize(&once, &fit).unwrap();
            for &i in &fit {
                prop_assert!((once.row(i)[0] - twice.row(i)[0]).abs() <= 1e-9);
            }
        }

        #[test]
        fn generators_are_deterministic_and_balanced(seed in any::<u64>(), n in 1usize..50) {
            let g = Gaussian1dSpec::shifted(n);
            let a = generate_gaussian_1d(&g, seed).unwrap();
            prop_assert_eq!(&a, &generate_gaussian_1d(&g, seed).unwrap());
            prop_assert_eq!(a.class_counts(), vec![n, n]);
            let b = Blobs2dSpec::unbalanced(n);
            let a = generate_blobs_2d(&b, seed).unwrap();
            prop_assert_eq!(&a, &generate_blobs_2d(&b, seed).unwrap());
            prop_assert_eq!(a.class_counts(), vec![n, n]);
        }
    }
}
