use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::data::Builtin;
use crate::error::{Error, Result};
use crate::model::{Activation, DEFAULT_HIDDEN};
use crate::qensemble::{StdDev, DEFAULT_THRESHOLD};
use crate::train::{SgdConfig, DEFAULT_EPOCHS_LIST};

pub const DEFAULT_ENSEMBLE_SIZES: [usize; 5] = [100, 200, 300, 400, 500];

/// Keys accepted in a config file, in the order they are written back out.
pub const CONFIG_KEYS: &[&str] = &[
    "dataset",
    "ensemble_sizes",
    "epochs_list",
    "trained",
    "learning_rate",
    "momentum",
    "batch_size",
    "threshold",
    "split_seed",
    "base_seed",
    "repeats",
    "standardize",
    "hidden",
    "activation",
    "stddev",
    "parallel",
    "training_log",
];

/// One benchmark sweep. Every field maps to one config-file key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Builtin,
    pub ensemble_sizes: Vec<usize>,
    pub epochs_list: Vec<usize>,
    pub trained: bool,
    /// `epochs` and `seed` are ignored; the sweep sets them per combination and member.
    pub sgd: SgdConfig,
    pub threshold: f64,
    pub split_seed: u64,
    pub base_seed: u64,
    pub repeats: usize,
    pub standardize: bool,
    pub hidden: usize,
    pub activation: Activation,
    pub stddev: StdDev,
    pub parallel: bool,
    pub training_log: bool,
}

impl ExperimentConfig {
    pub fn new(dataset: Builtin, trained: bool) -> Self {
        ExperimentConfig {
            dataset,
            ensemble_sizes: DEFAULT_ENSEMBLE_SIZES.to_vec(),
            epochs_list: DEFAULT_EPOCHS_LIST.to_vec(),
            trained,
            sgd: SgdConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            split_seed: 0,
            base_seed: 0,
            repeats: 5,
            standardize: true,
            hidden: DEFAULT_HIDDEN,
            activation: Activation::default(),
            stddev: StdDev::default(),
            parallel: true,
            training_log: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble_sizes.is_empty() || self.ensemble_sizes.contains(&0) {
            return Err(Error::Config(
                "ensemble_sizes must be a non-empty list of sizes >= 1".into(),
            ));
        }
        if self.trained && (self.epochs_list.is_empty() || self.epochs_list.contains(&0)) {
            return Err(Error::Config(
                "epochs_list must be a non-empty list of epochs >= 1".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be at least 1".into()));
        }
        SgdConfig {
            epochs: 1,
            ..self.sgd
        }
        .validate()
    }

    /// Epoch counts swept; a single 0 for untrained runs.
    pub fn epoch_stages(&self) -> Vec<usize> {
        if self.trained {
            self.epochs_list.clone()
        } else {
            vec![0]
        }
    }

    pub fn parse_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Parses `key = value` lines. `#` starts a comment; blank lines are
    /// skipped. `dataset` is required, every other key has a default.
    /// Unknown or repeated keys are errors.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let line_err = |line: usize, message: String| Error::ConfigLine {
            path: origin.to_string(),
            line,
            message,
        };
        let mut seen: Vec<&str> = Vec::new();
        let mut dataset = None;
        let mut cfg = ExperimentConfig::new(Builtin::Iris, true);

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                line_err(line_no, format!("expected 'key = value', found '{line}'"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = CONFIG_KEYS.iter().find(|k| **k == key) else {
                return Err(line_err(line_no, format!("unknown key '{key}'")));
            };
            if seen.contains(&known) {
                return Err(line_err(line_no, format!("key '{key}' given twice")));
            }
            seen.push(known);

            let bad = |e: String| line_err(line_no, format!("invalid value for '{key}': {e}"));
            match known {
                "dataset" => {
                    dataset = Some(value.parse::<Builtin>().map_err(|e| bad(e.to_string()))?)
                }
                "ensemble_sizes" => cfg.ensemble_sizes = parse_list(value).map_err(bad)?,
                "epochs_list" => cfg.epochs_list = parse_list(value).map_err(bad)?,
                "trained" => cfg.trained = parse_value(value).map_err(bad)?,
                "learning_rate" => cfg.sgd.learning_rate = parse_value(value).map_err(bad)?,
                "momentum" => cfg.sgd.momentum = parse_value(value).map_err(bad)?,
                "batch_size" => cfg.sgd.batch_size = parse_value(value).map_err(bad)?,
                "threshold" => cfg.threshold = parse_value(value).map_err(bad)?,
                "split_seed" => cfg.split_seed = parse_value(value).map_err(bad)?,
                "base_seed" => cfg.base_seed = parse_value(value).map_err(bad)?,
                "repeats" => cfg.repeats = parse_value(value).map_err(bad)?,
                "standardize" => cfg.standardize = parse_value(value).map_err(bad)?,
                "hidden" => cfg.hidden = parse_value(value).map_err(bad)?,
                "activation" => {
                    cfg.activation = value.parse().map_err(|e: Error| bad(e.to_string()))?
                }
                "stddev" => {
                    cfg.stddev = match value {
                        "population" => StdDev::Population,
                        "sample" => StdDev::Sample,
                        other => {
                            return Err(bad(format!("'{other}' (expected population or sample)")))
                        }
                    }
                }
                "parallel" => cfg.parallel = parse_value(value).map_err(bad)?,
                "training_log" => cfg.training_log = parse_value(value).map_err(bad)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        cfg.dataset =
            dataset.ok_or_else(|| line_err(0, "missing required key 'dataset'".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical `key = value` text; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// The config as `# key = value` lines for embedding in output files.
    /// `parallel` is left out so outputs do not depend on how they were run.
    pub fn as_comment_header(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries().into_iter().filter(|(k, _)| *k != "parallel") {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        out
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        vec![
            ("dataset", self.dataset.to_string()),
            ("ensemble_sizes", join(&self.ensemble_sizes)),
            ("epochs_list", join(&self.epochs_list)),
            ("trained", self.trained.to_string()),
            ("learning_rate", self.sgd.learning_rate.to_string()),
            ("momentum", self.sgd.momentum.to_string()),
            ("batch_size", self.sgd.batch_size.to_string()),
            ("threshold", self.threshold.to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("repeats", self.repeats.to_string()),
            ("standardize", self.standardize.to_string()),
            ("hidden", self.hidden.to_string()),
            ("activation", self.activation.to_string()),
            (
                "stddev",
                match self.stddev {
                    StdDev::Population => "population",
                    StdDev::Sample => "sample",
                }
                .to_string(),
            ),
            ("parallel", self.parallel.to_string()),
            ("training_log", self.training_log.to_string()),
        ]
    }
}

fn parse_value<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("'{value}' ({e})"))
}

fn parse_list(value: &str) -> Result<Vec<usize>, String> {
    value.split(',').map(|v| parse_value(v.trim())).collect()
}
