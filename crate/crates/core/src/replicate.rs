//! Toy-problem decision regions: the 1D two-Gaussian expectation curve and
//! the 2D accuracy-weighted perceptron vote over a grid.

use std::fmt::Write as _;

use crate::data::{generate_blobs_2d, Blobs2dSpec, Gaussian1dSpec};
use crate::error::{Error, Result};
use crate::model::{init_perceptron, Perceptron};
use crate::train::{ensemble_accuracies, train_perceptron, Execution};

/// Members in the 2D replication ensemble.
pub const DEFAULT_MEMBERS: usize = 8000;
/// Samples drawn per class for the 2D blobs.
pub const DEFAULT_BLOB_SAMPLES: usize = 100;
pub const DEFAULT_PERCEPTRON_EPOCHS: usize = 20;
pub const DEFAULT_PERCEPTRON_LR: f64 = 1.0;

const BISECTION_TOL: f64 = 1e-9;

/// Normal density `N(x; μ, σ²)`.
pub fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    log_gaussian_pdf(x, mu, sigma).exp()
}

fn log_gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `(p₊ − p₋) / (p₊ + p₋)`, evaluated as `tanh((ln p₊ − ln p₋) / 2)` so it
/// stays finite where both densities underflow.
pub fn expectation_1d(spec: &Gaussian1dSpec, x: f64) -> f64 {
    let lp = log_gaussian_pdf(x, spec.mu_plus, spec.sigma_plus);
    let lm = log_gaussian_pdf(x, spec.mu_minus, spec.sigma_minus);
    (0.5 * (lp - lm)).tanh()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve1d {
    pub xs: Vec<f64>,
    pub expectation: Vec<f64>,
    pub boundary_crossings: Vec<f64>,
}

impl Curve1d {
    /// Crossing closest to `x = 0`, if any.
    pub fn nearest_crossing_to_zero(&self) -> Option<f64> {
        self.boundary_crossings
            .iter()
            .copied()
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,expectation\n");
        for (x, e) in self.xs.iter().zip(&self.expectation) {
            writeln!(out, "{x},{e}").unwrap();
        }
        let crossings: Vec<String> = self
            .boundary_crossings
            .iter()
            .map(|c| c.to_string())
            .collect();
        writeln!(out, "# crossings: {}", crossings.join(";")).unwrap();
        out
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn expectation_curve_1d(spec: &Gaussian1dSpec, xs: &[f64]) -> Result<Curve1d> {
    spec.validate()?;
    if xs.is_empty() {
        return Err(Error::usage(
            "expectation curve needs at least one grid point",
        ));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("grid points must be strictly increasing"));
    }
    let f = |x| expectation_1d(spec, x);
    let expectation: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut boundary_crossings = Vec::new();
    for i in 0..xs.len() {
        if expectation[i] == 0.0 {
            boundary_crossings.push(xs[i]);
        } else if i + 1 < xs.len() && expectation[i] * expectation[i + 1] < 0.0 {
            boundary_crossings.push(bisect(f, xs[i], xs[i + 1]));
        }
    }
    Ok(Curve1d {
        xs: xs.to_vec(),
        expectation,
        boundary_crossings,
    })
}

/// Inclusive bounds and cell counts for a 2D evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_range: (-3.0, 3.0),
            y_range: (-3.0, 3.0),
            nx: 200,
            ny: 200,
        }
    }
}

impl GridSpec {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_range.0, self.x_range.1, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y_range.0, self.y_range.1, self.ny)
    }
}

/// Ensemble vote per grid cell, stored row-major with `y` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2d {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl Grid2d {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }

    /// Fraction of cells where the two grids predict different classes.
    pub fn sign_disagreement(&self, other: &Grid2d) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::usage("grids have different layouts"));
        }
        let differ = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| (**a >= 0.0) != (**b >= 0.0))
            .count();
        Ok(differ as f64 / self.values.len() as f64)
    }

    pub fn to_csv(&self, header: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in header {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        let s = &self.spec;
        writeln!(
            out,
            "# x_range = {},{}\n# y_range = {},{}\n# resolution = {}x{}",
            s.x_range.0, s.x_range.1, s.y_range.0, s.y_range.1, s.nx, s.ny
        )
        .unwrap();
        out.push_str("x,y,value\n");
        let xs = s.xs();
        for (iy, y) in s.ys().iter().enumerate() {
            for (ix, x) in xs.iter().enumerate() {
                writeln!(out, "{x},{y},{}", self.value(ix, iy)).unwrap();
            }
        }
        out
    }
}

fn check_members(members: &[Perceptron], accuracies: &[f64]) -> Result<f64> {
    if members.is_empty() || members.len() != accuracies.len() {
        return Err(Error::usage(format!(
            "{} members but {} accuracies",
            members.len(),
            accuracies.len()
        )));
    }
    if members.iter().any(|m| m.w.len() != 2) {
        return Err(Error::usage("2D votes need two-feature perceptrons"));
    }
    let total: f64 = accuracies.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateEnsemble);
    }
    Ok(total)
}

/// `Σ_θ a_θ ŷ_θ(x) / Σ_θ a_θ` with `ŷ ∈ {−1, +1}`.
pub fn ensemble_vote(members: &[Perceptron], accuracies: &[f64], point: [f64; 2]) -> Result<f64> {
    let total = check_members(members, accuracies)?;
    Ok(weighted_vote(members, accuracies, total, &point))
}

fn weighted_vote(members: &[Perceptron], accuracies: &[f64], total: f64, x: &[f64]) -> f64 {
    members
        .iter()
        .zip(accuracies)
        .map(|(m, a)| a * m.signed_output(x))
        .sum::<f64>()
        / total
}

pub fn decision_grid_2d(
    members: &[Perceptron],
    accuracies: &[f64],
    grid: &GridSpec,
    exec: Execution,
) -> Result<Grid2d> {
    let total = check_members(members, accuracies)?;
    if grid.nx < 2 || grid.ny < 2 {
        return Err(Error::usage("grid resolution must be at least 2 per axis"));
    }
    let xs = grid.xs();
    let ys = grid.ys();
    let values = exec
        .map(grid.ny, |iy| {
            xs.iter()
                .map(|&x| weighted_vote(members, accuracies, total, &[x, ys[iy]]))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
    Ok(Grid2d {
        spec: *grid,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication2dConfig {
    pub spec: Blobs2dSpec,
    pub n_members: usize,
    pub trained: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub grid: GridSpec,
}

impl Replication2dConfig {
    pub fn new(spec: Blobs2dSpec, trained: bool, seed: u64) -> Self {
        Replication2dConfig {
            spec,
            n_members: DEFAULT_MEMBERS,
            trained,
            epochs: DEFAULT_PERCEPTRON_EPOCHS,
            learning_rate: DEFAULT_PERCEPTRON_LR,
            seed,
            grid: GridSpec::default(),
        }
    }

    pub fn metadata(&self) -> Vec<(String, String)> {
        let s = &self.spec;
        vec![
            (
                "center_minus".into(),
                format!("{},{}", s.center_minus[0], s.center_minus[1]),
            ),
            (
                "center_plus".into(),
                format!("{},{}", s.center_plus[0], s.center_plus[1]),
            ),
            ("std_minus".into(), s.std_minus.to_string()),
            ("std_plus".into(), s.std_plus.to_string()),
            ("n_per_class".into(), s.n_per_class.to_string()),
            ("n_members".into(), self.n_members.to_string()),
            ("trained".into(), self.trained.to_string()),
            ("perceptron_epochs".into(), self.epochs.to_string()),
            (
                "perceptron_learning_rate".into(),
                self.learning_rate.to_string(),
            ),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Replication2d {
    pub members: Vec<Perceptron>,
    pub accuracies: Vec<f64>,
    pub metadata: Vec<(String, String)>,
    grid_spec: GridSpec,
}

impl Replication2d {
    pub fn vote(&self, point: [f64; 2]) -> Result<f64> {
        ensemble_vote(&self.members, &self.accuracies, point)
    }

    pub fn grid(&self, exec: Execution) -> Result<Grid2d> {
        decision_grid_2d(&self.members, &self.accuracies, &self.grid_spec, exec)
    }
}

/// SplitMix64 finalizer, used to spread a run seed over member seeds.
fn mix(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates blobs from `seed`, builds `n_members` perceptrons (member `i`
/// seeded from the run seed and `i`), optionally trains each on the full
/// generated set, and weights them by their accuracy on it. Runs with equal
/// seeds share data and initial members, so trained and untrained runs pair up.
pub fn replicate_2d_experiment(
    cfg: &Replication2dConfig,
    exec: Execution,
) -> Result<Replication2d> {
    if cfg.n_members == 0 {
        return Err(Error::usage("replication needs at least one member"));
    }
    let data = generate_blobs_2d(&cfg.spec, cfg.seed)?;
    let all: Vec<usize> = (0..data.n_samples()).collect();
    let base = mix(cfg.seed);
    let members = exec
        .map(cfg.n_members, |i| {
            let seed = base.wrapping_add(i as u64);
            let p = init_perceptron(2, seed)?;
            if cfg.trained {
                train_perceptron(p, &data, &all, cfg.epochs, cfg.learning_rate, seed)
            } else {
                Ok(p)
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let accuracies = ensemble_accuracies(&members, &data, &all, exec)?;
    Ok(Replication2d {
        members,
        accuracies,
        metadata: cfg.metadata(),
        grid_spec: cfg.grid,
    })
}
