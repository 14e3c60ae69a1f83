//! Run configuration: `key = value` lines with `#` comments.
//!
//! Values start at their defaults, are overridden by a config file, then by
//! command-line flags. The effective configuration of a run is echoed in a
//! fixed key order so two runs can be compared with `diff`.

use std::path::{Path, PathBuf};

use snasa_core::baseline::LogRegConfig;
use snasa_core::classifier::DEFAULT_REFS_PER_CLASS;
use snasa_core::trainer::OptimizerKind;
use snasa_core::{ClassificationPolicy, LabelScheme, TrainConfig, VocabOptions};

use crate::formats::read_text;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub scheme: LabelScheme,
    pub vocab: VocabOptions,
    /// Unresolved so that a bare `threshold` picks up the final margin.
    pub policy: String,
    pub refs_per_class: usize,
    pub logreg: LogRegConfig,
    pub strip_emojis: bool,
    pub poor: Option<PathBuf>,
    pub rich: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            scheme: LabelScheme::ThreeClass,
            vocab: VocabOptions::default(),
            policy: "meansim".into(),
            refs_per_class: DEFAULT_REFS_PER_CLASS,
            logreg: LogRegConfig::default(),
            strip_emojis: false,
            poor: None,
            rich: None,
            test: None,
            pairs: None,
        }
    }
}

/// Every key, in echo order.
pub const KEYS: [&str; 27] = [
    "seed",
    "scheme",
    "lowercase",
    "min_count",
    "margin",
    "learning_rate",
    "epochs",
    "batch_size",
    "negatives_per_positive",
    "positives_per_sentence",
    "clip_norm",
    "optimizer",
    "momentum",
    "resample_pairs",
    "embed_dim",
    "hidden_dim",
    "output_dim",
    "policy",
    "refs_per_class",
    "lambda",
    "tol",
    "max_iters",
    "strip_emojis",
    "poor",
    "rich",
    "test",
    "pairs",
];

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid number"))
}

fn real(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{v}' is not finite"))
    }
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Sets one key. The error message does not name the key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let t = &mut self.train;
        match key {
            "seed" => t.seed = num(value)?,
            "scheme" => {
                self.scheme = LabelScheme::from_name(value)
                    .ok_or_else(|| format!("'{value}' is not three-class or four-class"))?
            }
            "lowercase" => self.vocab.lowercase = boolean(value)?,
            "min_count" => self.vocab.min_count = num(value)?,
            "margin" => t.margin = real(value)?,
            "learning_rate" => t.learning_rate = real(value)?,
            "epochs" => t.epochs = num(value)?,
            "batch_size" => t.batch_size = num(value)?,
            "negatives_per_positive" => t.negatives_per_positive = num(value)?,
            "positives_per_sentence" => t.positives_per_sentence = num(value)?,
            "clip_norm" => {
                t.clip_norm = if value.eq_ignore_ascii_case("none") { None } else { Some(real(value)?) }
            }
            "optimizer" => {
                t.optimizer = OptimizerKind::from_name(value)
                    .ok_or_else(|| format!("'{value}' is not sgd or momentum"))?
            }
            "momentum" => t.momentum = real(value)?,
            "resample_pairs" => t.resample_pairs = boolean(value)?,
            "embed_dim" => t.embed_dim = num(value)?,
            "hidden_dim" => t.hidden_dim = num(value)?,
            "output_dim" => t.output_dim = num(value)?,
            "policy" => {
                ClassificationPolicy::parse(value).map_err(|e| e.to_string())?;
                self.policy = value.to_string();
            }
            "refs_per_class" => self.refs_per_class = num(value)?,
            "lambda" => self.logreg.lambda = real(value)?,
            "tol" => self.logreg.tol = real(value)?,
            "max_iters" => self.logreg.max_iters = num(value)?,
            "strip_emojis" => self.strip_emojis = boolean(value)?,
            "poor" => self.poor = path(value),
            "rich" => self.rich = path(value),
            "test" => self.test = path(value),
            "pairs" => self.pairs = path(value),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Applies a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str, file: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(file, i + 1, format!("expected 'key = value', found '{line}'")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::parse(file, i + 1, format!("unknown key '{key}'")));
            }
            self.set(key, value)
                .map_err(|m| Error::parse(file, i + 1, format!("{key}: {m}")))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, file: &Path) -> Result<()> {
        self.apply_text(&read_text(file)?, file)
    }

    /// The classification policy, with a bare `threshold` cut at the margin.
    pub fn policy(&self) -> Result<ClassificationPolicy> {
        Ok(ClassificationPolicy::parse_with_margin(&self.policy, self.train.margin)?)
    }

    /// `key = value` lines for every settable key, in a fixed order.
    pub fn echo(&self) -> String {
        let t = &self.train;
        let clip = t.clip_norm.map(|c| c.to_string()).unwrap_or_else(|| "none".into());
        let policy = self.policy().map(|p| p.to_string()).unwrap_or_else(|_| self.policy.clone());
        let rows: [(&str, String); 27] = [
            ("seed", t.seed.to_string()),
            ("scheme", self.scheme.name().into()),
            ("lowercase", self.vocab.lowercase.to_string()),
            ("min_count", self.vocab.min_count.to_string()),
            ("margin", t.margin.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("epochs", t.epochs.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("negatives_per_positive", t.negatives_per_positive.to_string()),
            ("positives_per_sentence", t.positives_per_sentence.to_string()),
            ("clip_norm", clip),
            ("optimizer", t.optimizer.name().into()),
            ("momentum", t.momentum.to_string()),
            ("resample_pairs", t.resample_pairs.to_string()),
            ("embed_dim", t.embed_dim.to_string()),
            ("hidden_dim", t.hidden_dim.to_string()),
            ("output_dim", t.output_dim.to_string()),
            ("policy", policy),
            ("refs_per_class", self.refs_per_class.to_string()),
            ("lambda", self.logreg.lambda.to_string()),
            ("tol", self.logreg.tol.to_string()),
            ("max_iters", self.logreg.max_iters.to_string()),
            ("strip_emojis", self.strip_emojis.to_string()),
            ("poor", show(&self.poor)),
            ("rich", show(&self.rich)),
            ("test", show(&self.test)),
            ("pairs", show(&self.pairs)),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults_and_echo_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nepochs = 3 # trailing\nclip_norm = none\npolicy = threshold\nmargin=0.3\n", Path::new("c"))
            .unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.clip_norm, None);
        assert_eq!(c.policy().unwrap(), ClassificationPolicy::ThresholdCount(0.3));
        let mut back = RunConfig::default();
        back.apply_text(&c.echo(), Path::new("echo")).unwrap();
        assert_eq!(back.echo(), c.echo());
        assert_eq!(back.train, c.train);
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_line() {
        let mut c = RunConfig::default();
        let e = c.apply_text("epochs = 2\nepoch = 3\n", Path::new("c")).unwrap_err().to_string();
        assert!(e.contains("unknown key 'epoch'") && e.contains("line 2"), "{e}");
        assert!(c.apply_text("margin = lots\n", Path::new("c")).is_err());
        assert!(c.apply_text("just words\n", Path::new("c")).is_err());
        assert!(c.apply_text("threads = 2\n", Path::new("c")).is_err());
    }

    #[test]
    fn echo_lists_every_file_key_once() {
        let echo = RunConfig::default().echo();
        let keys: Vec<&str> = echo.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        assert_eq!(keys, KEYS);
    }
}
