//! Experiment configuration: a plain-text `key = value` format with `#`
//! comments. Unknown and duplicate keys are errors, so a typo cannot
//! silently fall back to a default.
//!
//! Recognized keys and defaults:
//!
//! | key                | default  | meaning |
//! |--------------------|----------|---------|
//! | `dataset`          | `blobs3` | `blobs3` preset or a path to a dataset CSV |
//! | `seed`             | `0`      | master seed; every stream derives from it |
//! | `strategy`         | `gpg`    | classifier flavor: `static`, `lps` or `gpg` |
//! | `selection`        | `full`   | `full`, `random`, `entropy` or `margin` |
//! | `disable_udn`      | `false`  | replace the dynamic classifier by the static one |
//! | `disable_ius`      | `false`  | rank candidates by entropy instead of integrated uncertainty |
//! | `disable_cdc`      | `false`  | skip density pruning (no over-selection) |
//! | `lambda_dom`       | `7.5`    | weight of domain uncertainty in the acquisition score |
//! | `lambda_pre`       | `0.5`    | weight of predictive uncertainty in the acquisition score |
//! | `lambda_mar`       | `1.0`    | weight of the marginal-likelihood loss |
//! | `lambda_kl`        | `1.0`    | weight of the evidence regularizer |
//! | `kl_anneal_epochs` | `10`     | epochs over which the regularizer ramps to full strength |
//! | `lambda_u`         | `0.01`   | candidate over-selection growth factor |
//! | `tau`              | `1.0`    | exponent on round progress in the over-selection schedule |
//! | `batch_size`       | `64`     | SGD mini-batch size |
//! | `momentum`         | `0.9`    | SGD momentum |
//! | `weight_decay`     | `0.00005`| decoupled multiplicative weight decay |
//! | `learning_rate`    | `0.0004` | SGD learning rate |
//! | `budget_fraction`  | `0.05`   | labeling budget as a fraction of the target pool; 0 runs pure source-only adaptation |
//! | `rounds`           | `5`      | number of selection rounds |
//! | `epochs_per_round` | `30`     | training epochs before each selection and after the last |
//! | `pretrain_epochs`  | `10`     | source-only epochs used to build the frozen `lps` basis |
//! | `reinit_per_round` | `false`  | reset parameters to their initial state at each round |
//! | `knn_k`            | `10`     | neighbors used by the density filter |
//! | `hidden`           | `64`     | backbone hidden width |
//! | `d_f`              | `32`     | backbone feature dimension |
//! | `d_e`              | `16`     | encoder embedding dimension |
//! | `d_h`              | `32`     | weight-generator hidden dimension |

use crate::error::{Error, Result};
use crate::udn::ClassifierMode;
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    /// Integrated uncertainty ranking plus density pruning.
    Full,
    Random,
    Entropy,
    Margin,
}

impl SelectionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionMethod::Full => "full",
            SelectionMethod::Random => "random",
            SelectionMethod::Entropy => "entropy",
            SelectionMethod::Margin => "margin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SelectionMethod::Full),
            "random" => Ok(SelectionMethod::Random),
            "entropy" => Ok(SelectionMethod::Entropy),
            "margin" => Ok(SelectionMethod::Margin),
            other => Err(Error::Config(format!(
                "unknown selection {other:?}, expected full, random, entropy or margin"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub seed: u64,
    pub strategy: ClassifierMode,
    pub selection: SelectionMethod,
    pub disable_udn: bool,
    pub disable_ius: bool,
    pub disable_cdc: bool,
    pub lambda_dom: f64,
    pub lambda_pre: f64,
    pub lambda_mar: f64,
    pub lambda_kl: f64,
    pub kl_anneal_epochs: usize,
    pub lambda_u: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub budget_fraction: f64,
    pub rounds: usize,
    pub epochs_per_round: usize,
    pub pretrain_epochs: usize,
    pub reinit_per_round: bool,
    pub knn_k: usize,
    pub hidden: usize,
    pub d_f: usize,
    pub d_e: usize,
    pub d_h: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "blobs3".into(),
            seed: 0,
            strategy: ClassifierMode::Gpg,
            selection: SelectionMethod::Full,
            disable_udn: false,
            disable_ius: false,
            disable_cdc: false,
            lambda_dom: 7.5,
            lambda_pre: 0.5,
            lambda_mar: 1.0,
            lambda_kl: 1.0,
            kl_anneal_epochs: 10,
            lambda_u: 0.01,
            tau: 1.0,
            batch_size: 64,
            momentum: 0.9,
            weight_decay: 5e-5,
            learning_rate: 4e-4,
            budget_fraction: 0.05,
            rounds: 5,
            epochs_per_round: 30,
            pretrain_epochs: 10,
            reinit_per_round: false,
            knn_k: 10,
            hidden: 64,
            d_f: 32,
            d_e: 16,
            d_h: 32,
        }
    }
}

fn parse_as<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid value {value:?} for {key}"),
    })
}

fn parse_bool(value: &str, line: usize, key: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Parse {
            line,
            msg: format!("invalid value {value:?} for {key}, expected true or false"),
        }),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse { line, msg: format!("duplicate key {key:?}") });
            }
            cfg.apply(key, value, line)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Config(msg) => Error::Parse { line, msg },
            other => other,
        };
        match key {
            "dataset" => self.dataset = value.to_string(),
            "seed" => self.seed = parse_as(value, line, key)?,
            "strategy" => self.strategy = ClassifierMode::parse(value).map_err(as_config)?,
            "selection" => self.selection = SelectionMethod::parse(value).map_err(as_config)?,
            "disable_udn" => self.disable_udn = parse_bool(value, line, key)?,
            "disable_ius" => self.disable_ius = parse_bool(value, line, key)?,
            "disable_cdc" => self.disable_cdc = parse_bool(value, line, key)?,
            "lambda_dom" => self.lambda_dom = parse_as(value, line, key)?,
            "lambda_pre" => self.lambda_pre = parse_as(value, line, key)?,
            "lambda_mar" => self.lambda_mar = parse_as(value, line, key)?,
            "lambda_kl" => self.lambda_kl = parse_as(value, line, key)?,
            "kl_anneal_epochs" => self.kl_anneal_epochs = parse_as(value, line, key)?,
            "lambda_u" => self.lambda_u = parse_as(value, line, key)?,
            "tau" => self.tau = parse_as(value, line, key)?,
            "batch_size" => self.batch_size = parse_as(value, line, key)?,
            "momentum" => self.momentum = parse_as(value, line, key)?,
            "weight_decay" => self.weight_decay = parse_as(value, line, key)?,
            "learning_rate" => self.learning_rate = parse_as(value, line, key)?,
            "budget_fraction" => self.budget_fraction = parse_as(value, line, key)?,
            "rounds" => self.rounds = parse_as(value, line, key)?,
            "epochs_per_round" => self.epochs_per_round = parse_as(value, line, key)?,
            "pretrain_epochs" => self.pretrain_epochs = parse_as(value, line, key)?,
            "reinit_per_round" => self.reinit_per_round = parse_bool(value, line, key)?,
            "knn_k" => self.knn_k = parse_as(value, line, key)?,
            "hidden" => self.hidden = parse_as(value, line, key)?,
            "d_f" => self.d_f = parse_as(value, line, key)?,
            "d_e" => self.d_e = parse_as(value, line, key)?,
            "d_h" => self.d_h = parse_as(value, line, key)?,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown configuration key {other:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.budget_fraction >= 0.0 && self.budget_fraction <= 1.0) {
            bad.push(format!("budget_fraction must be in [0, 1], got {}", self.budget_fraction));
        }
        if self.rounds == 0 {
            bad.push("rounds must be >= 1".into());
        }
        for (name, v) in [
            ("lambda_dom", self.lambda_dom),
            ("lambda_pre", self.lambda_pre),
            ("lambda_mar", self.lambda_mar),
            ("lambda_kl", self.lambda_kl),
            ("lambda_u", self.lambda_u),
            ("weight_decay", self.weight_decay),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            bad.push(format!("tau must be finite and > 0, got {}", self.tau));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            bad.push(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            bad.push("batch_size must be >= 1".into());
        }
        if self.knn_k == 0 {
            bad.push("knn_k must be >= 1".into());
        }
        if self.hidden == 0 || self.d_f == 0 || self.d_e == 0 || self.d_h == 0 {
            bad.push("hidden, d_f, d_e and d_h must all be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.batch_size, 64);
        assert_eq!(cfg.momentum, 0.9);
        assert_eq!(cfg.weight_decay, 5e-5);
        assert_eq!(cfg.learning_rate, 4e-4);
        assert_eq!(cfg.budget_fraction, 0.05);
        assert_eq!(cfg.rounds, 5);
    }

    #[test]
    fn parse_overrides_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# experiment\nseed = 7\n  lambda_dom = 2.5 # acquisition\n\nselection = entropy\ndisable_cdc = true\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.lambda_dom, 2.5);
        assert_eq!(cfg.selection, SelectionMethod::Entropy);
        assert!(cfg.disable_cdc);
        assert_eq!(cfg.rounds, 5);
    }

    #[test]
    fn unknown_key_is_an_error_with_line() {
        let err = ExperimentConfig::parse("seed = 1\nlaerning_rate = 0.1\n").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("laerning_rate"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_malformed_lines_are_errors() {
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(ExperimentConfig::parse("just words\n").is_err());
        assert!(ExperimentConfig::parse("momentum = fast\n").is_err());
        assert!(ExperimentConfig::parse("disable_udn = yes\n").is_err());
        assert!(ExperimentConfig::parse("strategy = resnet\n").is_err());
    }

    #[test]
    fn validate_catches_out_of_range_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.budget_fraction = 1.5;
        cfg.momentum = 1.0;
        cfg.lambda_dom = -1.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("budget_fraction"));
        assert!(msg.contains("momentum"));
        assert!(msg.contains("lambda_dom"));
    }

    #[test]
    fn zero_budget_fraction_is_allowed() {
        let mut cfg = ExperimentConfig::default();
        cfg.budget_fraction = 0.0;
        cfg.validate().unwrap();
    }
}
