//! `eager`: convert, split, embed, featurize, train, predict, run and
//! ranktest subcommands over OpenEA-style dataset directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use eager::attr_sim::{ProfileIndex, TokenMatcher};
use eager::classifiers::{train_classifier, ClassifierKind, MlpConfig, RandomForestConfig, TrainedModel};
use eager::dataset::{assemble_features, split_folds, FeatureMatrix, FeatureSpec, Variant};
use eager::embedding::{load_embeddings, PairMode, TransEConfig};
use eager::evaluation::{cd_diagram, prf, rank_report, Alpha, ScoreMatrix};
use eager::ingest::{
    load_graph, load_openea_dataset, parse_links, resolve_links, tabular_to_kg, write_folds, write_openea_dataset,
    TabularSchema, Table, ATTR_TRIPLES_1, ATTR_TRIPLES_2, ENT_LINKS, REL_TRIPLES_1, REL_TRIPLES_2,
};
use eager::kg::AlignmentRole;
use eager::pipeline::{fold_embeddings, fold_pairs, run_pipeline, RunConfig};
use eager::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn version_string() -> String {
    match env!("EAGER_GIT_DESCRIBE") {
        "" => VERSION.to_owned(),
        git => format!("{VERSION}+{git}"),
    }
}

#[derive(Parser)]
#[command(name = "eager", version, about = "Entity resolution across knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn two CSV tables and a link table into an OpenEA-style directory.
    Convert(ConvertArgs),
    /// Write five train/validation/test splits of the gold links.
    Split(SplitArgs),
    /// Train TransE on one fold and write the embedding file.
    Embed(EmbedArgs),
    /// Write labelled feature matrices for one fold.
    Featurize(FeaturizeArgs),
    /// Train a classifier on a feature matrix.
    Train(TrainArgs),
    /// Score a feature matrix with a trained model.
    Predict(PredictArgs),
    /// Run the five-fold experiment described by a config file.
    Run(RunArgs),
    /// Average ranks, Friedman test and critical-distance diagram.
    Ranktest(RanktestArgs),
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    kg1: PathBuf,
    /// Schema JSON of the first table.
    #[arg(long)]
    schema1: PathBuf,
    #[arg(long)]
    kg2: PathBuf,
    #[arg(long)]
    schema2: PathBuf,
    /// CSV whose first two columns hold matching ids of the two tables.
    #[arg(long)]
    links: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DatasetArg {
    /// OpenEA-style dataset directory.
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; defaults to the dataset directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    data: DatasetArg,
    /// Fold whose training links are fused (1-5).
    #[arg(long, default_value_t = 1)]
    fold: usize,
    /// TransE config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embedding file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[command(flatten)]
    data: DatasetArg,
    #[arg(long, default_value_t = 1)]
    fold: usize,
    /// A, E or A||E.
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    /// Embedding file, required unless the variant is A.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, value_parser = parse_pair_mode, default_value = "concat")]
    pair_mode: PairMode,
    #[arg(long, default_value_t = 1.0)]
    negative_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.csv, valid.csv and test.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training feature CSV.
    #[arg(long)]
    features: PathBuf,
    /// Validation feature CSV (MLP early stopping).
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long, value_parser = parse_classifier)]
    classifier: ClassifierKind,
    /// Classifier config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// CSV of scores and labels to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Run config JSON; relative paths in it are relative to its folder.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RanktestArgs {
    /// CSV with a dataset-name column followed by one column per method.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "0.05")]
    alpha: Alpha,
    #[arg(long)]
    out: PathBuf,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unknown variant {s:?}"))
}

fn parse_pair_mode(s: &str) -> std::result::Result<PairMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unknown pair mode {s:?}"))
}

fn parse_classifier(s: &str) -> std::result::Result<ClassifierKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unknown classifier {s:?}"))
}

fn read_text(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("cannot read {}", path.display()),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        context: format!("cannot write {}", path.display()),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        context: format!("cannot create {}", path.display()),
        source,
    })
}

fn read_json_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn fold_index(fold: usize) -> Result<usize> {
    if !(1..=5).contains(&fold) {
        return Err(Error::InvalidInput(format!("fold must be between 1 and 5, got {fold}")));
    }
    Ok(fold - 1)
}

fn read_features(path: &Path) -> Result<FeatureMatrix> {
    FeatureMatrix::read_csv(read_text(path)?.as_bytes())
}

fn convert(args: &ConvertArgs) -> Result<serde_json::Value> {
    let schema1 = TabularSchema::from_json(&read_text(&args.schema1)?)?;
    let schema2 = TabularSchema::from_json(&read_text(&args.schema2)?)?;
    let kg1 = tabular_to_kg(&Table::from_reader(read_text(&args.kg1)?.as_bytes())?, &schema1)?;
    let kg2 = tabular_to_kg(&Table::from_reader(read_text(&args.kg2)?.as_bytes())?, &schema2)?;
    let links = Table::from_reader(read_text(&args.links)?.as_bytes())?;
    if links.header.len() < 2 {
        return Err(Error::InvalidInput("link csv needs two id columns".into()));
    }
    let pairs: Vec<(String, String)> = links
        .rows
        .iter()
        .map(|r| {
            let cell = |i: usize| r.get(i).map(String::as_str).unwrap_or("");
            (schema1.entity_iri(cell(0)), schema2.entity_iri(cell(1)))
        })
        .collect();
    let gold = resolve_links(&pairs, &kg1, &kg2, AlignmentRole::Gold)?;
    write_openea_dataset(&args.out, &kg1, &kg2, &gold, None)?;
    Ok(serde_json::json!({
        "out": args.out,
        "kg1": kg1.stats(),
        "kg2": kg2.stats(),
        "links": gold.len(),
    }))
}

fn split(args: &SplitArgs) -> Result<serde_json::Value> {
    let dir = &args.data.dataset;
    for name in [REL_TRIPLES_1, REL_TRIPLES_2, ATTR_TRIPLES_1, ATTR_TRIPLES_2, ENT_LINKS] {
        if !dir.join(name).is_file() {
            return Err(Error::MissingFile(dir.join(name)));
        }
    }
    let kg1 = load_graph(&dir.join(REL_TRIPLES_1), &dir.join(ATTR_TRIPLES_1))?;
    let kg2 = load_graph(&dir.join(REL_TRIPLES_2), &dir.join(ATTR_TRIPLES_2))?;
    let gold = resolve_links(&parse_links(&dir.join(ENT_LINKS))?, &kg1, &kg2, AlignmentRole::Gold)?;
    let folds = split_folds(&gold, args.seed)?;
    let out = args.out.as_ref().unwrap_or(dir);
    write_folds(out, &folds, &kg1, &kg2)?;
    let sizes: Vec<_> = folds
        .iter()
        .map(|f| [f.train.len(), f.validation.len(), f.test.len()])
        .collect();
    Ok(serde_json::json!({ "out": out, "seed": args.seed, "folds": sizes }))
}

fn embed(args: &EmbedArgs) -> Result<serde_json::Value> {
    let index = fold_index(args.fold)?;
    let cfg: TransEConfig = read_json_config(args.config.as_deref())?;
    let bundle = load_openea_dataset(&args.data.dataset, args.seed)?;
    let (table, losses) = fold_embeddings(&bundle, index, &cfg, args.seed)?;
    table.write(&args.out, &bundle.kg1, &bundle.kg2)?;
    Ok(serde_json::json!({
        "out": args.out,
        "fold": args.fold,
        "dim": table.dim(),
        "loss_first": losses.first(),
        "loss_last": losses.last(),
    }))
}

fn featurize(args: &FeaturizeArgs) -> Result<serde_json::Value> {
    let index = fold_index(args.fold)?;
    if args.variant.uses_embeddings() && args.embeddings.is_none() {
        return Err(Error::Config("this variant needs --embeddings".into()));
    }
    let bundle = load_openea_dataset(&args.data.dataset, args.seed)?;
    let table = match (&args.embeddings, args.variant.uses_embeddings()) {
        (Some(path), true) => Some(load_embeddings(path, &bundle.kg1, &bundle.kg2)?),
        _ => None,
    };
    let profiles = ProfileIndex::build(&bundle.kg1, &bundle.kg2);
    let pairs = fold_pairs(&bundle, index, args.negative_ratio, args.seed)?;
    let spec = FeatureSpec {
        variant: args.variant,
        profiles: &profiles,
        embeddings: table.as_ref(),
        mode: args.pair_mode,
        matcher: TokenMatcher::default(),
    };
    create_dir(&args.out)?;
    let mut rows = serde_json::Map::new();
    for (name, set) in [("train", &pairs.train), ("valid", &pairs.validation), ("test", &pairs.test)] {
        let matrix = assemble_features(set, &spec)?;
        let mut buf = Vec::new();
        matrix.write_csv(&mut buf)?;
        write_text(&args.out.join(format!("{name}.csv")), &String::from_utf8_lossy(&buf))?;
        rows.insert(name.into(), matrix.len().into());
    }
    Ok(serde_json::json!({ "out": args.out, "fold": args.fold, "rows": rows }))
}

fn train(args: &TrainArgs) -> Result<serde_json::Value> {
    let x = read_features(&args.features)?;
    let validation = match &args.validation {
        Some(p) => read_features(p)?,
        None => FeatureMatrix::empty(None, x.feature_dim()),
    };
    let (mut rf, mut mlp) = (RandomForestConfig::default(), MlpConfig::default());
    match args.classifier {
        ClassifierKind::Rf => rf = read_json_config(args.config.as_deref())?,
        ClassifierKind::Mlp => mlp = read_json_config(args.config.as_deref())?,
    }
    if let Some(seed) = args.seed {
        rf.seed = seed;
        mlp.seed = seed;
    }
    let model = train_classifier(args.classifier, &x, &validation, &rf, &mlp)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    model.save(&args.out)?;
    let train_accuracy = {
        let p = model.predict(&x)?;
        p.labels.iter().zip(x.labels()).filter(|(a, b)| a == b).count() as f64 / x.len() as f64
    };
    Ok(serde_json::json!({
        "out": args.out,
        "kind": model.kind(),
        "feature_dim": model.feature_dim(),
        "train_accuracy": train_accuracy,
    }))
}

fn predict(args: &PredictArgs) -> Result<serde_json::Value> {
    let model = TrainedModel::load(&args.model)?;
    let x = read_features(&args.features)?;
    let p = model.predict(&x)?;
    let mut out = String::from("score,label,truth\n");
    for ((score, label), truth) in p.scores.iter().zip(&p.labels).zip(x.labels()) {
        out.push_str(&format!("{score},{},{}\n", u8::from(*label), u8::from(*truth)));
    }
    write_text(&args.out, &out)?;
    let metrics = if x.is_empty() { None } else { Some(prf(x.labels(), &p.labels)?) };
    Ok(serde_json::json!({ "out": args.out, "rows": x.len(), "metrics": metrics }))
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: String,
    config_hash: &'a str,
}

fn run(args: &RunArgs) -> Result<serde_json::Value> {
    let mut cfg = RunConfig::from_json(&read_text(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let base = args.config.parent().unwrap_or(Path::new(""));
    let mut resolved = cfg.clone();
    resolved.resolve_paths(base);
    let out = args
        .out
        .clone()
        .or(resolved.output_dir.take())
        .ok_or_else(|| Error::Config("no output directory: set output_dir or pass --out".into()))?;
    // Where results go is not part of the experiment.
    cfg.output_dir = None;
    let config_hash = sha256_hex(serde_json::to_string(&cfg)?.as_bytes());
    let (report, timings) = run_pipeline(&resolved)?;
    let provenance = Provenance {
        tool: "eager",
        version: version_string(),
        config_hash: &config_hash,
    };
    create_dir(&out)?;
    let metrics = serde_json::json!({
        "provenance": provenance,
        "config": cfg,
        "report": report,
    });
    write_text(&out.join("metrics.json"), &to_json(&metrics)?)?;
    let timings = serde_json::json!({ "provenance": provenance, "folds": timings });
    write_text(&out.join("timings.json"), &to_json(&timings)?)?;
    Ok(serde_json::json!({
        "out": out,
        "config_hash": config_hash,
        "aggregate": report.aggregate,
    }))
}

fn ranktest(args: &RanktestArgs) -> Result<serde_json::Value> {
    let matrix = ScoreMatrix::read_csv(read_text(&args.scores)?.as_bytes())?;
    let report = rank_report(&matrix, args.alpha)?;
    create_dir(&args.out)?;
    write_text(&args.out.join("rank_report.json"), &to_json(&report)?)?;
    cd_diagram(&report.avg_ranks, &report.methods, report.cd, &args.out.join("cd_diagram.svg"))?;
    Ok(serde_json::json!({
        "out": args.out,
        "avg_ranks": report.avg_ranks,
        "friedman_p": report.friedman_p,
        "cd": report.cd,
    }))
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("EAGER_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("EAGER_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))
}

fn dispatch(cli: &Cli) -> Result<serde_json::Value> {
    configure_threads()?;
    match &cli.command {
        Command::Convert(a) => convert(a),
        Command::Split(a) => split(a),
        Command::Embed(a) => embed(a),
        Command::Featurize(a) => featurize(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Run(a) => run(a),
        Command::Ranktest(a) => ranktest(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let body = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.to_string() }
            });
            eprintln!("{body}");
            ExitCode::from(if err.is_input_error() { 2 } else { 3 })
        }
    }
}
