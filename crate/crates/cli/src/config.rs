//! Flat `key = value` pipeline configuration.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use violation_embed::ingest::{ColumnMap, ViolationType};
use violation_embed::preprocess::{parse_lexicon, parse_word_list, PreprocessConfig, StageOrder};
use violation_embed::relation::QuartileScope;
use violation_embed::similarity::VectorSource;
use violation_embed::skipgram::{Objective, TrainingConfig, WindowMode};

use crate::CliError;

pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(key: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, default, help }
}

/// Every configuration key, in the order `--help` lists them.
pub const KEYS: &[KeySpec] = &[
    key("input.paths", "", "comma-separated compliance report files"),
    key("input.delimiter", ",", "field delimiter: a single character or `tab`"),
    key("input.date_format", "%Y-%m-%d", "inspection date format (strftime syntax)"),
    key("columns.record_id", "record_id", "header of the record id column"),
    key("columns.inspection_date", "inspection_date", "header of the inspection date column"),
    key("columns.violation_type", "violation_type", "header of the violation type column"),
    key("columns.violation_code", "violation_code", "header of the violation code column"),
    key(
        "columns.violation_description",
        "violation_description",
        "header of the violation description column",
    ),
    key("columns.inspection_comment", "inspection_comment", "header of the inspection comment column"),
    key("types.none", "None", "`|`-separated spellings of the no-violation type"),
    key("types.administrative", "Administrative", "`|`-separated spellings of the administrative type"),
    key(
        "types.ehs",
        "Environmental Health & Safety",
        "`|`-separated spellings of the environmental health & safety type",
    ),
    key("filter.type", "ehs", "violation type whose comments form the corpus: none, administrative or ehs"),
    key("filter.require_comment", "true", "drop records with a blank comment"),
    key("stats.top_codes", "5", "number of most frequent violation descriptions to report"),
    key("preprocess.stopwords", "bundled", "stopword file (one word per line) or `bundled`"),
    key("preprocess.lexicon", "bundled", "irregular-form lexicon (`form<TAB>lemma`) or `bundled`"),
    key(
        "preprocess.strip_chars",
        "ascii-punctuation",
        "characters deleted before tokenizing, or `ascii-punctuation`",
    ),
    key("preprocess.remove_stopwords", "true", "remove stopwords"),
    key("preprocess.lemmatize", "true", "lemmatize tokens"),
    key("preprocess.stem", "true", "Porter-stem tokens"),
    key("preprocess.order", "lemmatize-then-stem", "lemmatize-then-stem or stem-then-lemmatize"),
    key("preprocess.keep_numbers", "true", "keep tokens that contain digits"),
    key("vocab.min_count", "1", "minimum token count kept in the vocabulary"),
    key("train.dimension", "100", "embedding dimension"),
    key("train.window", "5", "maximum context window"),
    key("train.window_mode", "dynamic", "dynamic (per-position window in 1..=window) or fixed"),
    key("train.epochs", "5", "passes over the corpus"),
    key("train.learning_rate", "0.025", "initial SGD learning rate"),
    key("train.min_learning_rate", "0.0000025", "final learning rate of the linear decay"),
    key("train.objective", "negative-sampling", "negative-sampling or full-softmax"),
    key("train.negatives", "5", "noise samples per pair"),
    key("train.subsample", "0", "frequent-token subsampling threshold; 0 disables"),
    key("train.shuffle", "false", "shuffle document order every epoch"),
    key("train.log_interval", "100000", "progress log period in pairs; 0 disables"),
    key("analyze.model", "", "embedding file; default <output.dir>/model.vec"),
    key("analyze.vocab", "", "vocabulary dump; default <output.dir>/vocab.tsv"),
    key("analyze.catalog", "bundled", "keyword catalog file (`Category<TAB>keyword`) or `bundled`"),
    key("analyze.threshold", "30", "keywords must occur more often than this"),
    key("analyze.k", "3", "entries kept per relation list"),
    key("analyze.quartile_scope", "per-row", "per-row or global upper-quartile threshold"),
    key("analyze.vectors", "input", "input (hidden-layer weights) or mean (input and output averaged)"),
    key("analyze.top_words", "20", "number of most frequent words to list"),
    key("output.dir", "out", "directory receiving every artifact"),
    key("seed", "1", "seed for all randomness"),
];

/// Raw settings: defaults, then the config file, then flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Default for Settings {
    fn default() -> Self {
        Settings(KEYS.iter().map(|k| (k.key.to_string(), k.default.to_string())).collect())
    }
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|k| k.key == key)
}

impl Settings {
    /// Applies `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if !known(k) {
                return Err(CliError::Config(format!("{origin}:{}: unknown key `{k}`", i + 1)));
            }
            self.0.insert(k.to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !known(key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).expect("every key has a default")
    }

    /// Every key with its effective value, one `key = value` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{} = {}", k.key, self.get(k.key));
        }
        out
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.get(key);
        v.parse().map_err(|e| CliError::Config(format!("{key}: cannot parse `{v}`: {e}")))
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            v => Err(CliError::Config(format!("{key}: expected true or false, got `{v}`"))),
        }
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<T, CliError> {
        let v = self.get(key).trim().to_ascii_lowercase();
        options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|o| o.0).collect();
            CliError::Config(format!("{key}: `{v}` is not one of {}", names.join(", ")))
        })
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key).trim();
        (!v.is_empty() && v != "bundled").then(|| PathBuf::from(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stats,
    Train,
    Analyze,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Train => "train",
            Command::Analyze => "analyze",
            Command::Report => "report",
        }
    }

    fn needs_input(self) -> bool {
        matches!(self, Command::Stats | Command::Train | Command::Report)
    }

    fn needs_model(self) -> bool {
        matches!(self, Command::Analyze | Command::Report)
    }
}

/// Fully parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub settings: Settings,
    pub inputs: Vec<PathBuf>,
    pub columns: ColumnMap,
    pub filter_type: ViolationType,
    pub require_comment: bool,
    pub top_codes: usize,
    pub preprocess: PreprocessConfig,
    pub min_count: u64,
    pub training: TrainingConfig,
    pub model_path: PathBuf,
    pub output_matrix_path: PathBuf,
    pub vocab_path: PathBuf,
    /// `None` selects the bundled catalog.
    pub catalog: Option<PathBuf>,
    pub catalog_text: String,
    pub threshold: u64,
    pub k: usize,
    pub scope: QuartileScope,
    pub vectors: VectorSource,
    pub top_words: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// `model.vec` -> `model.out.vec`; other names get `.out` appended.
pub fn output_matrix_path_for(model: &Path) -> PathBuf {
    let name = model.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let out = match name.strip_suffix(".vec") {
        Some(stem) => format!("{stem}.out.vec"),
        None => format!("{name}.out"),
    };
    model.with_file_name(out)
}

fn read_resource(path: &Path, key: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{key}: cannot read `{}`: {e}", path.display())))
}

fn must_exist(path: &Path, key: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: file `{}` does not exist", path.display())))
    }
}

impl PipelineConfig {
    /// Parses every key and checks that the files `command` reads exist.
    pub fn resolve(settings: Settings, command: Command) -> Result<Self, CliError> {
        let s = &settings;
        let inputs: Vec<PathBuf> = s
            .get("input.paths")
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(PathBuf::from)
            .collect();
        if command.needs_input() {
            if inputs.is_empty() {
                return Err(CliError::Config("input.paths: no input files given".into()));
            }
            for p in &inputs {
                must_exist(p, "input.paths")?;
            }
        }

        let delimiter = match s.get("input.delimiter") {
            "tab" | "\\t" | "\t" => b'\t',
            d if d.len() == 1 => d.as_bytes()[0],
            d => {
                return Err(CliError::Config(format!(
                    "input.delimiter: expected one ASCII character or `tab`, got `{d}`"
                )))
            }
        };
        let mut type_aliases = Vec::new();
        for (k, ty) in [
            ("types.none", ViolationType::None),
            ("types.administrative", ViolationType::Administrative),
            ("types.ehs", ViolationType::EnvironmentalHealthSafety),
        ] {
            for alias in s.get(k).split('|').map(str::trim).filter(|a| !a.is_empty()) {
                type_aliases.push((alias.to_string(), ty));
            }
        }
        let columns = ColumnMap {
            record_id: s.get("columns.record_id").into(),
            inspection_date: s.get("columns.inspection_date").into(),
            violation_type: s.get("columns.violation_type").into(),
            violation_code: s.get("columns.violation_code").into(),
            violation_description: s.get("columns.violation_description").into(),
            inspection_comment: s.get("columns.inspection_comment").into(),
            type_aliases,
            delimiter,
            date_format: s.get("input.date_format").into(),
        };
        columns.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let filter_type = s.choice(
            "filter.type",
            &[
                ("none", ViolationType::None),
                ("administrative", ViolationType::Administrative),
                ("ehs", ViolationType::EnvironmentalHealthSafety),
            ],
        )?;

        let mut preprocess = PreprocessConfig::default();
        if let Some(p) = s.path("preprocess.stopwords") {
            preprocess.stopwords = parse_word_list(&read_resource(&p, "preprocess.stopwords")?)
                .map_err(|e| CliError::Config(format!("preprocess.stopwords: {e}")))?;
        }
        if let Some(p) = s.path("preprocess.lexicon") {
            preprocess.lemma_lexicon = parse_lexicon(&read_resource(&p, "preprocess.lexicon")?)
                .map_err(|e| CliError::Config(format!("preprocess.lexicon: {e}")))?;
        }
        let strip = s.get("preprocess.strip_chars");
        if strip != "ascii-punctuation" {
            preprocess.strip_chars = strip.chars().collect::<HashSet<char>>();
        }
        preprocess.remove_stopwords = s.flag("preprocess.remove_stopwords")?;
        preprocess.lemmatize = s.flag("preprocess.lemmatize")?;
        preprocess.stem = s.flag("preprocess.stem")?;
        preprocess.keep_numbers = s.flag("preprocess.keep_numbers")?;
        preprocess.order = s.choice(
            "preprocess.order",
            &[
                ("lemmatize-then-stem", StageOrder::LemmatizeThenStem),
                ("stem-then-lemmatize", StageOrder::StemThenLemmatize),
            ],
        )?;

        let min_count: u64 = s.parse("vocab.min_count")?;
        if min_count == 0 {
            return Err(CliError::Config("vocab.min_count: must be at least 1".into()));
        }
        let seed: u64 = s.parse("seed")?;
        let training = TrainingConfig {
            dimension: s.parse("train.dimension")?,
            window: s.parse("train.window")?,
            window_mode: s.choice(
                "train.window_mode",
                &[("dynamic", WindowMode::Dynamic), ("fixed", WindowMode::Fixed)],
            )?,
            epochs: s.parse("train.epochs")?,
            learning_rate: s.parse("train.learning_rate")?,
            min_learning_rate: s.parse("train.min_learning_rate")?,
            objective: s.choice(
                "train.objective",
                &[
                    ("negative-sampling", Objective::NegativeSampling),
                    ("full-softmax", Objective::FullSoftmax),
                ],
            )?,
            negatives: s.parse("train.negatives")?,
            subsample: s.parse("train.subsample")?,
            shuffle: s.flag("train.shuffle")?,
            seed,
            log_interval: s.parse("train.log_interval")?,
        };
        training.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let output_dir = PathBuf::from(s.get("output.dir"));
        if output_dir.as_os_str().is_empty() {
            return Err(CliError::Config("output.dir: must not be empty".into()));
        }
        let model_path = s.path("analyze.model").unwrap_or_else(|| output_dir.join(crate::artifacts::MODEL));
        let output_matrix_path = output_matrix_path_for(&model_path);
        let vocab_path = s.path("analyze.vocab").unwrap_or_else(|| output_dir.join(crate::artifacts::VOCAB));
        if command.needs_model() {
            must_exist(&model_path, "analyze.model")?;
            must_exist(&vocab_path, "analyze.vocab")?;
        }
        let catalog = s.path("analyze.catalog");
        let catalog_text = match &catalog {
            Some(p) if command.needs_model() => read_resource(p, "analyze.catalog")?,
            _ => violation_embed::catalog::default_catalog_text().to_string(),
        };

        let threshold: u64 = s.parse("analyze.threshold")?;
        let k: usize = s.parse("analyze.k")?;
        if k == 0 {
            return Err(CliError::Config("analyze.k: must be at least 1".into()));
        }
        let scope: QuartileScope = s.parse("analyze.quartile_scope")?;
        let vectors =
            s.choice("analyze.vectors", &[("input", VectorSource::Input), ("mean", VectorSource::Mean)])?;
        if command.needs_model() && vectors == VectorSource::Mean {
            must_exist(&output_matrix_path, "analyze.vectors=mean (output matrix)")?;
        }
        let top_words: usize = s.parse("analyze.top_words")?;
        let top_codes: usize = s.parse("stats.top_codes")?;

        Ok(PipelineConfig {
            inputs,
            columns,
            filter_type,
            require_comment: s.flag("filter.require_comment")?,
            top_codes,
            preprocess,
            min_count,
            training,
            model_path,
            output_matrix_path,
            vocab_path,
            catalog,
            catalog_text,
            threshold,
            k,
            scope,
            vectors,
            top_words,
            output_dir,
            seed,
            settings,
        })
    }
}
