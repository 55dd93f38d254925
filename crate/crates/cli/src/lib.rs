//! Batch driver: `stats`, `train`, `analyze` and `report` over compliance
//! report exports.

pub mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches};
use log::{info, warn};
use thiserror::Error;
use violation_embed::catalog::{load_keyword_catalog, CatalogLoad, Category};
use violation_embed::ingest::{
    compute_stats_with, filter_records, parse_report, ComplianceRecord, ViolationStats,
};
use violation_embed::preprocess::{normalize_token, preprocess, TokenStream};
use violation_embed::relation::{
    build_chains, find_category_violation, write_chains, RelationChain, PERCENTILE_METHOD,
};
use violation_embed::report::{render_report, ReportInputs};
use violation_embed::similarity::{pairwise_matrix_labeled, DroppedTerm, SimilarityMatrix, VectorSource};
use violation_embed::skipgram::{
    load_model, load_output_matrix, save_model, save_output_matrix, train, EmbeddingModel, TrainError,
};
use violation_embed::vocab::{build_vocabulary, top_frequent, VocabError, Vocabulary};

pub use config::{Command, PipelineConfig, Settings, KEYS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 usage/config, 2 data, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

/// File names written into `output.dir`.
pub mod artifacts {
    use super::Command;

    pub const STATS_TSV: &str = "stats.tsv";
    pub const STATS_JSON: &str = "stats.json";
    pub const ROW_ERRORS: &str = "row_errors.tsv";
    pub const MODEL: &str = "model.vec";
    pub const OUTPUT_MATRIX: &str = "model.out.vec";
    pub const VOCAB: &str = "vocab.tsv";
    pub const TRAIN_LOG: &str = "train_log.tsv";
    pub const RESOLVED_CONFIG: &str = "config.resolved";
    pub const TOP_WORDS: &str = "top_words.tsv";
    pub const KEYWORDS: &str = "keywords.tsv";
    pub const REJECTIONS: &str = "keyword_rejections.tsv";
    pub const CHAINS: &str = "chains.tsv";
    pub const REPORT: &str = "report.txt";

    /// (file stem, title, row category, column category)
    pub const MATRICES: [(&str, &str, super::Category, super::Category); 3] = [
        (
            "matrix_location_contaminant",
            "Location x Contaminant similarity",
            super::Category::Location,
            super::Category::Contaminant,
        ),
        (
            "matrix_contaminant_operation",
            "Contaminant x Operation similarity",
            super::Category::Contaminant,
            super::Category::Operation,
        ),
        (
            "matrix_location_operation",
            "Location x Operation similarity",
            super::Category::Location,
            super::Category::Operation,
        ),
    ];

    /// Every file `command` writes on success.
    pub fn declared(command: Command) -> Vec<String> {
        let stats = [STATS_TSV, STATS_JSON, ROW_ERRORS];
        let mut analyze: Vec<String> = [TOP_WORDS, KEYWORDS, REJECTIONS, CHAINS].map(String::from).to_vec();
        for (stem, ..) in MATRICES {
            analyze.push(format!("{stem}.tsv"));
            analyze.push(format!("{stem}.annotations.tsv"));
        }
        let v: Vec<String> = match command {
            Command::Stats => stats.map(String::from).to_vec(),
            Command::Train => {
                [MODEL, OUTPUT_MATRIX, VOCAB, TRAIN_LOG, RESOLVED_CONFIG].map(String::from).to_vec()
            }
            Command::Analyze => analyze,
            Command::Report => {
                let mut v = analyze;
                v.extend(stats.map(String::from));
                v.push(REPORT.into());
                v
            }
        };
        v
    }
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot write `{}`: {e}", path.display())))
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Data(format!("cannot write `{}`: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn prepare_output(cfg: &PipelineConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::Data(format!("cannot create output directory `{}`: {e}", cfg.output_dir.display()))
    })
}

struct Loaded {
    records: Vec<ComplianceRecord>,
    /// (file, line, message)
    row_errors: Vec<(PathBuf, u64, String)>,
}

fn load_records(cfg: &PipelineConfig) -> Result<Loaded, CliError> {
    let mut out = Loaded { records: Vec::new(), row_errors: Vec::new() };
    for path in &cfg.inputs {
        let file = File::open(path).map_err(|e| data_err(path, e))?;
        let parsed = parse_report(BufReader::new(file), &cfg.columns).map_err(|e| data_err(path, e))?;
        if !parsed.row_errors.is_empty() {
            warn!("{}: skipped {} malformed rows", path.display(), parsed.row_errors.len());
        }
        info!("{}: {} records", path.display(), parsed.records.len());
        out.records.extend(parsed.records);
        out.row_errors.extend(parsed.row_errors.into_iter().map(|e| (path.clone(), e.line, e.message)));
    }
    Ok(out)
}

fn write_stats(cfg: &PipelineConfig, loaded: &Loaded) -> Result<ViolationStats, CliError> {
    let stats = compute_stats_with(&loaded.records, cfg.top_codes);
    let dir = &cfg.output_dir;
    write_file(&dir.join(artifacts::STATS_TSV), |w| stats.write_delimited(w))?;
    write_file(&dir.join(artifacts::STATS_JSON), |w| writeln!(w, "{}", stats.to_json()))?;
    write_file(&dir.join(artifacts::ROW_ERRORS), |w| {
        writeln!(w, "file\tline\tmessage")?;
        for (p, line, msg) in &loaded.row_errors {
            writeln!(w, "{}\t{line}\t{}", p.display(), msg.replace(['\t', '\n'], " "))?;
        }
        Ok(())
    })?;
    Ok(stats)
}

/// Violation statistics of the input files.
pub fn cmd_stats(cfg: &PipelineConfig) -> Result<ViolationStats, CliError> {
    let loaded = load_records(cfg)?;
    prepare_output(cfg)?;
    write_stats(cfg, &loaded)
}

/// The preprocessed comments of the configured violation type.
pub fn build_corpus(cfg: &PipelineConfig, records: &[ComplianceRecord]) -> Vec<TokenStream> {
    filter_records(records, cfg.filter_type, cfg.require_comment)
        .iter()
        .map(|r| preprocess(&r.inspection_comment, &cfg.preprocess).with_source(r.record_id.clone()))
        .collect()
}

/// Preprocesses, builds the vocabulary and trains; writes the model files.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<EmbeddingModel, CliError> {
    let loaded = load_records(cfg)?;
    let corpus = build_corpus(cfg, &loaded.records);
    info!("{} documents selected", corpus.len());
    let vocab = build_vocabulary(&corpus, cfg.min_count).map_err(|e| match e {
        VocabError::EmptyCorpus | VocabError::EmptyVocabulary(_) => {
            CliError::Data(format!("empty corpus after filtering: {e}"))
        }
        other => CliError::Internal(other.to_string()),
    })?;
    info!("vocabulary: {} tokens", vocab.len());
    let (model, report) = train(&corpus, &vocab, &cfg.training).map_err(|e| match e {
        TrainError::EmptyCorpus => CliError::Data("empty corpus: no in-vocabulary tokens".into()),
        TrainError::InvalidConfig(m) => CliError::Config(m),
        e @ TrainError::NonFinite { .. } => CliError::Internal(e.to_string()),
    })?;

    prepare_output(cfg)?;
    let dir = &cfg.output_dir;
    let model_path = dir.join(artifacts::MODEL);
    write_file(&model_path, |w| save_model(&model, w).map_err(std::io::Error::other))?;
    write_file(&config::output_matrix_path_for(&model_path), |w| {
        save_output_matrix(&model, w).map_err(std::io::Error::other)
    })?;
    write_file(&dir.join(artifacts::VOCAB), |w| vocab.write_dump(w))?;
    write_file(&dir.join(artifacts::TRAIN_LOG), |w| {
        writeln!(w, "epoch\tpairs\tmean_loss")?;
        for (i, (p, l)) in report.pairs_per_epoch.iter().zip(&report.epoch_losses).enumerate() {
            writeln!(w, "{}\t{p}\t{l}", i + 1)?;
        }
        Ok(())
    })?;
    write_file(&dir.join(artifacts::RESOLVED_CONFIG), |w| w.write_all(cfg.settings.to_text().as_bytes()))?;
    Ok(model)
}

/// Everything `analyze` derives from a trained model.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub top_words: Vec<(String, u64)>,
    pub catalog: CatalogLoad,
    pub dropped: Vec<DroppedTerm>,
    /// (title, matrix) in [`artifacts::MATRICES`] order.
    pub matrices: Vec<(String, SimilarityMatrix)>,
    pub chains: Vec<RelationChain>,
    /// Distinct vocabulary tokens.
    pub unique_tokens: usize,
    /// Tokens in the preprocessed corpus, before `vocab.min_count`.
    pub corpus_tokens: u64,
}

fn load_trained(cfg: &PipelineConfig) -> Result<EmbeddingModel, CliError> {
    let open = |p: &Path| File::open(p).map(BufReader::new).map_err(|e| data_err(p, e));
    let mut model = load_model(open(&cfg.model_path)?).map_err(|e| data_err(&cfg.model_path, e))?;
    if cfg.vectors == VectorSource::Mean {
        let p = &cfg.output_matrix_path;
        load_output_matrix(&mut model, open(p)?).map_err(|e| data_err(p, e))?;
    }
    let vocab = Vocabulary::read_dump(open(&cfg.vocab_path)?).map_err(|e| data_err(&cfg.vocab_path, e))?;
    model.with_vocabulary(vocab).map_err(|e| {
        CliError::Data(format!("{} and {} disagree: {e}", cfg.model_path.display(), cfg.vocab_path.display()))
    })
}

fn write_keywords(dir: &Path, load: &CatalogLoad, dropped: &[DroppedTerm]) -> Result<(), CliError> {
    write_file(&dir.join(artifacts::KEYWORDS), |w| {
        writeln!(w, "category\tkeyword\ttoken\tfrequency")?;
        for cat in Category::ALL {
            for k in load.catalog.keywords(cat) {
                writeln!(w, "{cat}\t{}\t{}\t{}", k.label, k.token, k.frequency)?;
            }
        }
        Ok(())
    })?;
    write_file(&dir.join(artifacts::REJECTIONS), |w| {
        writeln!(w, "category\tkeyword\ttoken\treason")?;
        for r in &load.rejections {
            writeln!(w, "{}\t{}\t{}\t{}", r.category, r.label, r.token, r.reason)?;
        }
        for d in dropped {
            let cat = load.catalog.category_of_label(&d.label).map_or("-", Category::name);
            writeln!(w, "{cat}\t{}\t{}\tno usable vector", d.label, d.token)?;
        }
        Ok(())
    })
}

/// Keyword selection, similarity matrices and relation chains.
pub fn cmd_analyze(cfg: &PipelineConfig) -> Result<Analysis, CliError> {
    let model = load_trained(cfg)?;
    let catalog_name =
        cfg.catalog.as_ref().map_or_else(|| "bundled catalog".to_string(), |p| p.display().to_string());
    let load = load_keyword_catalog(&cfg.catalog_text, &model.vocab, cfg.threshold, |kw| {
        normalize_token(&kw.to_lowercase(), &cfg.preprocess)
    })
    .map_err(|e| CliError::Data(format!("{catalog_name}: {e}")))?;
    if !load.catalog.is_disjoint() {
        return Err(CliError::Internal("catalog categories overlap".into()));
    }
    prepare_output(cfg)?;
    let dir = &cfg.output_dir;

    if let Some(empty) = Category::ALL.into_iter().find(|c| load.catalog.keywords(*c).is_empty()) {
        write_keywords(dir, &load, &[])?;
        return Err(CliError::Data(format!(
            "empty category: no {empty} keyword passed the frequency threshold {} (see {})",
            cfg.threshold,
            dir.join(artifacts::REJECTIONS).display()
        )));
    }

    let mut dropped = Vec::new();
    let mut matrices = Vec::new();
    for (_, title, rows, cols) in artifacts::MATRICES {
        let r = pairwise_matrix_labeled(
            &model,
            &load.catalog.terms(rows),
            &load.catalog.terms(cols),
            cfg.vectors,
        )
        .map_err(|e| CliError::Data(format!("{title}: {e}")))?;
        for d in r.dropped {
            if !dropped.contains(&d) {
                dropped.push(d);
            }
        }
        matrices.push((title.to_string(), r.matrix));
    }
    let chains = build_chains(&matrices[0].1, &matrices[2].1, &matrices[1].1.transpose(), cfg.k, cfg.scope)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(label) = find_category_violation(&chains, &load.catalog) {
        return Err(CliError::Internal(format!("chain keyword `{label}` is outside its category")));
    }

    let top_words = top_frequent(&model.vocab, cfg.top_words);
    write_file(&dir.join(artifacts::TOP_WORDS), |w| {
        writeln!(w, "rank\ttoken\tfrequency")?;
        for (i, (t, c)) in top_words.iter().enumerate() {
            writeln!(w, "{}\t{t}\t{c}", i + 1)?;
        }
        Ok(())
    })?;
    write_keywords(dir, &load, &dropped)?;
    for ((stem, ..), (_, m)) in artifacts::MATRICES.iter().zip(&matrices) {
        write_file(&dir.join(format!("{stem}.tsv")), |w| m.write_tsv(w))?;
        write_file(&dir.join(format!("{stem}.annotations.tsv")), |w| m.write_annotations(w))?;
    }
    write_file(&dir.join(artifacts::CHAINS), |w| write_chains(&chains, w).map_err(std::io::Error::other))?;

    Ok(Analysis {
        top_words,
        catalog: load,
        dropped,
        matrices,
        chains,
        unique_tokens: model.vocab.len(),
        corpus_tokens: model.vocab.total_token_count(),
    })
}

/// Run parameters shown at the top of the report.
pub fn report_metadata(cfg: &PipelineConfig) -> Vec<(String, String)> {
    let catalog = cfg.catalog.as_ref().map_or_else(|| "bundled".to_string(), |p| p.display().to_string());
    let vectors = match cfg.vectors {
        VectorSource::Input => "input weights",
        VectorSource::Mean => "mean of input and output weights",
    };
    [
        ("model", cfg.model_path.display().to_string()),
        ("vectors", vectors.to_string()),
        ("catalog", catalog),
        ("frequency threshold", format!("> {}", cfg.threshold)),
        ("k", cfg.k.to_string()),
        ("quartile scope", cfg.scope.name().to_string()),
        ("percentile method", PERCENTILE_METHOD.to_string()),
        ("maximum tie-break", "lowest index".to_string()),
        ("seed", cfg.seed.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// `stats` and `analyze`, then the rendered report.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<String, CliError> {
    let stats = cmd_stats(cfg)?;
    let analysis = cmd_analyze(cfg)?;
    let mut metadata = report_metadata(cfg);
    metadata.push(("vocabulary size".into(), analysis.unique_tokens.to_string()));
    metadata.push(("corpus tokens".into(), analysis.corpus_tokens.to_string()));
    let text = render_report(&ReportInputs {
        metadata: &metadata,
        stats: Some(&stats),
        top_words: &analysis.top_words,
        catalog: Some(&analysis.catalog),
        matrices: &analysis.matrices,
        chains: &analysis.chains,
    });
    write_file(&cfg.output_dir.join(artifacts::REPORT), |w| w.write_all(text.as_bytes()))?;
    Ok(text)
}

fn key_listing() -> String {
    let width = KEYS.iter().map(|k| k.key.len()).max().unwrap_or(0);
    let mut s = String::from("Configuration keys (config file `key = value`, or `--key value`):\n");
    for k in KEYS {
        s.push_str(&format!("  {:<width$}  {} [default: {}]\n", k.key, k.help, k.default));
    }
    s
}

fn key_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("configuration file of `key = value` lines")];
    for k in KEYS {
        let mut arg = Arg::new(k.key)
            .long(k.key)
            .value_name("VALUE")
            .help(format!("{} [default: {}]", k.help, k.default));
        if k.key == "output.dir" {
            arg = arg.visible_alias("out");
        }
        args.push(arg);
    }
    args
}

pub fn cli() -> clap::Command {
    let sub =
        |name: &'static str, about: &'static str| clap::Command::new(name).about(about).args(key_args());
    clap::Command::new("violation-embed")
        .about("Word-embedding analysis of inspection comments in compliance reports")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help(key_listing())
        .subcommand(sub("stats", "Count violations by type and year and list the top descriptions"))
        .subcommand(sub("train", "Preprocess comments, build the vocabulary and train embeddings"))
        .subcommand(sub("analyze", "Select keywords, compute similarity matrices and relation chains"))
        .subcommand(sub("report", "Run stats and analyze, then render a plain-text report"))
}

fn settings_from(m: &ArgMatches) -> Result<Settings, CliError> {
    let mut settings = Settings::default();
    if let Some(path) = m.get_one::<String>("config") {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file `{path}`: {e}")))?;
        settings.apply_text(&text, path)?;
    }
    for k in KEYS {
        if let Some(v) = m.get_one::<String>(k.key) {
            settings.set(k.key, v)?;
        }
    }
    Ok(settings)
}

fn dispatch(command: Command, m: &ArgMatches) -> Result<(), CliError> {
    let cfg = PipelineConfig::resolve(settings_from(m)?, command)?;
    match command {
        Command::Stats => cmd_stats(&cfg).map(drop),
        Command::Train => cmd_train(&cfg).map(drop),
        Command::Analyze => cmd_analyze(&cfg).map(drop),
        Command::Report => cmd_report(&cfg).map(drop),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let command = match name {
        "stats" => Command::Stats,
        "train" => Command::Train,
        "analyze" => Command::Analyze,
        "report" => Command::Report,
        other => unreachable!("unknown subcommand {other}"),
    };
    match dispatch(command, sub) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("violation-embed {}: {e}", command.name());
            e.exit_code()
        }
    }
}
