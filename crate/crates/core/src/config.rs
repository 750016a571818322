//! Plain-text run configuration: one `key=value` per line, `#` starts a
//! comment. Unknown keys are rejected; missing keys keep their defaults.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::orchestrator::{RunConfig, Strategy};

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("n_labeled", "600", "initial labeled set size"),
    ("n_unlabeled", "1000", "unlabeled pool size"),
    ("n_test", "400", "test set size"),
    ("t_steps", "10", "stochastic passes per sample"),
    ("dropout_p", "0.5", "dropout probability"),
    ("quota_no_detection", "10", "oracle queries among empty predictions"),
    ("quota_uncertain", "10", "oracle queries among the highest scores"),
    ("quota_random", "15", "oracle queries drawn at random"),
    ("pseudo_delta0", "8", "engine choice: initial pseudo-label score threshold"),
    ("pseudo_decay", "0.5", "engine choice: threshold decrement per iteration"),
    ("pseudo_floor", "4", "engine choice: lowest pseudo-label threshold"),
    ("iterations", "9", "active-learning iterations"),
    ("epochs", "2", "training epochs per iteration"),
    ("learning_rate", "0.1", "engine choice: SGD step size"),
    ("batch_size", "256", "engine choice: pixels per SGD batch"),
    ("max_pixels_per_image", "4096", "engine choice: pixel budget per image and epoch"),
    ("augment", "true", "flip augmentation"),
    ("train_dropout", "true", "engine choice: dropout during SGD"),
    ("warm_start", "true", "engine choice: continue from current weights"),
    ("threshold", "0.5", "engine choice: binarization threshold"),
    ("tau_d", "0.5", "engine choice: Dice boundary of the region table"),
    ("strategy", "ceal", "ceal or random"),
    ("log_timing", "false", "write wall-clock ms into the log"),
    ("seed", "42", "master seed"),
];

fn parse<T: FromStr>(key: &str, value: &str, lineno: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {lineno}: bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str, lineno: usize) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("line {lineno}: bad boolean {value:?} for {key}"))),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {lineno}: expected key=value, got {line:?}")))?;
        let (key, v) = (key.trim(), value.trim());
        match key {
            "n_labeled" => c.n_labeled = parse(key, v, lineno)?,
            "n_unlabeled" => c.n_unlabeled = parse(key, v, lineno)?,
            "n_test" => c.n_test = parse(key, v, lineno)?,
            "t_steps" => c.mc.t_steps = parse(key, v, lineno)?,
            "dropout_p" => c.mc.dropout_p = parse(key, v, lineno)?,
            "quota_no_detection" => c.quotas.n_no_detection = parse(key, v, lineno)?,
            "quota_uncertain" => c.quotas.n_most_uncertain = parse(key, v, lineno)?,
            "quota_random" => c.quotas.n_random = parse(key, v, lineno)?,
            "pseudo_delta0" => c.pseudo.delta0 = parse(key, v, lineno)?,
            "pseudo_decay" => c.pseudo.decay = parse(key, v, lineno)?,
            "pseudo_floor" => c.pseudo.floor = parse(key, v, lineno)?,
            "iterations" => c.iterations = parse(key, v, lineno)?,
            "epochs" => c.train.epochs = parse(key, v, lineno)?,
            "learning_rate" => c.train.learning_rate = parse(key, v, lineno)?,
            "batch_size" => c.train.batch_size = parse(key, v, lineno)?,
            "max_pixels_per_image" => c.train.max_pixels_per_image = parse(key, v, lineno)?,
            "augment" => c.train.augment = parse_bool(key, v, lineno)?,
            "train_dropout" => c.train.dropout = parse_bool(key, v, lineno)?,
            "warm_start" => c.warm_start = parse_bool(key, v, lineno)?,
            "threshold" => c.threshold = parse(key, v, lineno)?,
            "tau_d" => c.tau_d = parse(key, v, lineno)?,
            "strategy" => {
                c.strategy = match v {
                    "ceal" => Strategy::Ceal,
                    "random" => Strategy::Random,
                    _ => return Err(Error::Config(format!("line {lineno}: strategy must be ceal or random"))),
                }
            }
            "log_timing" => c.log_timing = parse_bool(key, v, lineno)?,
            "seed" => c.seed = parse(key, v, lineno)?,
            other => return Err(Error::Config(format!("line {lineno}: unknown key {other:?}"))),
        }
    }
    c.validate()?;
    Ok(c)
}

/// Serialises every key; `parse_config(config_to_text(c)) == c`.
pub fn config_to_text(c: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("n_labeled", c.n_labeled.to_string());
    kv("n_unlabeled", c.n_unlabeled.to_string());
    kv("n_test", c.n_test.to_string());
    kv("t_steps", c.mc.t_steps.to_string());
    kv("dropout_p", c.mc.dropout_p.to_string());
    kv("quota_no_detection", c.quotas.n_no_detection.to_string());
    kv("quota_uncertain", c.quotas.n_most_uncertain.to_string());
    kv("quota_random", c.quotas.n_random.to_string());
    kv("pseudo_delta0", c.pseudo.delta0.to_string());
    kv("pseudo_decay", c.pseudo.decay.to_string());
    kv("pseudo_floor", c.pseudo.floor.to_string());
    kv("iterations", c.iterations.to_string());
    kv("epochs", c.train.epochs.to_string());
    kv("learning_rate", c.train.learning_rate.to_string());
    kv("batch_size", c.train.batch_size.to_string());
    kv("max_pixels_per_image", c.train.max_pixels_per_image.to_string());
    kv("augment", c.train.augment.to_string());
    kv("train_dropout", c.train.dropout.to_string());
    kv("warm_start", c.warm_start.to_string());
    kv("threshold", c.threshold.to_string());
    kv("tau_d", c.tau_d.to_string());
    kv("strategy", c.strategy.as_str().to_string());
    kv("log_timing", c.log_timing.to_string());
    kv("seed", c.seed.to_string());
    s
}

/// Help text listing every key with its default.
pub fn keys_help() -> String {
    let mut s = String::from("config keys (key=value, # comments):\n");
    for (k, d, doc) in KEYS {
        let _ = writeln!(s, "  {k:<22} default {d:<6} {doc}");
    }
    s
}
