use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use simulcorpus::aligner::{align_corpus, split_by_score, AlignLevel};
use simulcorpus::cleaning::{
    default_dialogue_rules, filter_dialogues, filter_raw_interpretations, load_rules,
};
use simulcorpus::corpus::{read_corpus, read_triples, write_corpus, write_triples, ReadMode};
use simulcorpus::metrics::{corpus_bleu, corpus_latency, BleuConfig, ReadWriteSchedule, Smoothing};
use simulcorpus::ngram_analysis::{ngram_report, FigureTable};
use simulcorpus::pipeline::{open_review_store, run_stages, PipelineConfig, Stage};
use simulcorpus::service::{export_testsets, serve, ApiState, ReviewStore, API_TOKEN_VAR};
use simulcorpus::similarity::{EmbeddingClient, HttpEmbeddingTransport, SimilarityProvider};
use simulcorpus::t2i::{
    apply_t2i_files, build_t2i_pairs, train_t2i, CorpusLabel, HttpMtTransport, Labeled, MtClient,
    PairMode, T2iInputs, TrainConfig,
};
use simulcorpus::waitk::{generator_from_spec, simulate_corpus, WaitKConfig};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "simulcorpus",
    version,
    about = "Interpretation corpus alignment, style transfer and simultaneous MT evaluation"
)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter dialogues with the cleaning rules.
    Clean(CleanArgs),
    /// Align transcript utterances to translation units.
    Align(AlignArgs),
    /// Train a translation-to-interpretation model.
    T2iTrain(TrainArgs),
    /// Rewrite translations into Pseudo-I with a trained model.
    T2iApply(ApplyArgs),
    /// Run a wait-k simulation.
    Simulate(SimulateArgs),
    /// BLEU and latency of a simulation.
    Score(ScoreArgs),
    /// Introduced-correct n-gram statistics.
    NgramReport(NgramArgs),
    /// Serve the review API.
    Serve(ServeArgs),
    /// Export reviewed triples as line-aligned test sets.
    Export(ExportArgs),
    /// Run the full pipeline.
    Run(RunArgs),
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// JSON rule list; the default rules when absent.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    raw_min_words: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    /// Cleaned dialogues (JSONL).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "super")]
    level: AlignLevel,
    /// `lexical` or `embedding`.
    #[arg(long, default_value = "lexical")]
    provider: String,
    /// Triples below this score go to `<out>.low_score.jsonl`.
    #[arg(long)]
    min_score: Option<f64>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "supervised")]
    mode: PairMode,
    /// Clean triples (supervised) or Raw interpretations, one per line
    /// (unsupervised).
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 5)]
    max_phrase_len: usize,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value = "en")]
    lang: String,
    #[arg(long, default_value = "de")]
    pivot: String,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Model directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Pre-tokenized sources, one per line.
    #[arg(long)]
    src: Option<PathBuf>,
    /// `echo`, `table:<map.tsv>` or `process:<program> [args..]`.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    max_target_factor: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    schedules: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    hyp: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    schedules: Option<PathBuf>,
    #[arg(long, default_value = "exp")]
    bleu_smoothing: Smoothing,
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args)]
struct NgramArgs {
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// `name=path`, repeatable.
    #[arg(long = "system")]
    systems: Vec<String>,
    #[arg(long, default_value_t = 4)]
    max_n: usize,
    /// Also write the figure CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Review store directory; the pipeline's store when absent.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    set: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Resume from this stage, reusing earlier artifacts.
    #[arg(long)]
    continue_from: Option<Stage>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn config(cli_config: &Option<PathBuf>, seed: Option<u64>) -> Result<PipelineConfig> {
    let path = cli_config
        .as_ref()
        .ok_or("no input files given and no --config to take them from")?;
    Ok(PipelineConfig::load(path)?.with_seed(seed))
}

fn run_one(cli: &Cli, stage: Stage) -> Result<()> {
    let cfg = config(&cli.config, cli.seed)?;
    let manifest = run_stages(&cfg, stage, stage)?;
    for record in manifest.stages.iter().filter(|r| r.stage == Some(stage)) {
        for path in record.outputs.keys() {
            println!("{}", cfg.paths.out.join(path).display());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Clean(args) => match &args.corpus {
            Some(corpus) => clean(args, corpus),
            None => run_one(&cli, Stage::Clean),
        },
        Command::Align(args) => match &args.input {
            Some(input) => align(args, input),
            None => run_one(&cli, Stage::Align),
        },
        Command::T2iTrain(args) => match &args.pairs {
            Some(pairs) => t2i_train(args, pairs),
            None => run_one(&cli, Stage::T2iTrain),
        },
        Command::T2iApply(args) => match (&args.model, &args.input, &args.out) {
            (Some(model), Some(input), Some(out)) => {
                let manifest = apply_t2i_files(model, input, out)?;
                println!("{}", serde_json::to_string_pretty(&manifest)?);
                Ok(())
            }
            (None, None, None) => run_one(&cli, Stage::T2iApply),
            _ => Err("t2i-apply needs --model, --in and --out together".into()),
        },
        Command::Simulate(args) => match &args.src {
            Some(src) => simulate(args, src),
            None => run_one(&cli, Stage::Simulate),
        },
        Command::Score(args) => match &args.hyp {
            Some(hyp) => score(args, hyp),
            None => {
                run_one(&cli, Stage::Score)?;
                let cfg = config(&cli.config, cli.seed)?;
                print!(
                    "{}",
                    fs::read_to_string(cfg.paths.out.join("score/report.json"))?
                );
                Ok(())
            }
        },
        Command::NgramReport(args) => match &args.gold {
            Some(gold) => ngram(args, gold),
            None => {
                run_one(&cli, Stage::NgramReport)?;
                let cfg = config(&cli.config, cli.seed)?;
                print!(
                    "{}",
                    fs::read_to_string(cfg.paths.out.join("ngram/table.txt"))?
                );
                Ok(())
            }
        },
        Command::Serve(args) => {
            let store = open_store(&cli, &args.store)?;
            let token = std::env::var(API_TOKEN_VAR).ok().filter(|t| !t.is_empty());
            if token.is_none() {
                log::warn!("{API_TOKEN_VAR} is not set; the API is unauthenticated");
            }
            let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse()?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(ApiState::new(store, token), addr))?;
            Ok(())
        }
        Command::Export(args) => {
            let store = open_store(&cli, &args.store)?;
            let export = store.export(&args.set);
            let files = export_testsets(&export, &args.out)?;
            println!(
                "exported {} triples ({} unannotated, {} rejected left out)",
                export.records.len(),
                export.excluded_unannotated,
                export.excluded_rejected
            );
            for p in [
                files.source,
                files.translation,
                files.interpretation_asr,
                files.interpretation,
                files.triples,
            ] {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Run(args) => {
            let cfg = config(&cli.config, cli.seed)?;
            let first = args.continue_from.unwrap_or(Stage::Clean);
            let manifest = run_stages(&cfg, first, Stage::NgramReport)?;
            println!(
                "{} stages recorded in {}",
                manifest.stages.len(),
                cfg.paths.out.join("manifest.json").display()
            );
            Ok(())
        }
    }
}

fn open_store(cli: &Cli, dir: &Option<PathBuf>) -> Result<ReviewStore> {
    match dir {
        Some(dir) => Ok(ReviewStore::open(dir)?),
        None => Ok(open_review_store(&config(&cli.config, cli.seed)?)?),
    }
}

fn clean(args: &CleanArgs, corpus: &Path) -> Result<()> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("clean"));
    let dialogues = read_corpus(corpus, ReadMode::Strict)?;
    let rules = match &args.rules {
        Some(path) => load_rules(path)?,
        None => default_dialogue_rules(),
    };
    let filtered = filter_dialogues(&dialogues, &rules)?;
    let raw = filter_raw_interpretations(&filtered.kept, args.raw_min_words);
    fs::create_dir_all(&out)?;
    write_corpus(out.join("dialogues.jsonl"), &filtered.kept)?;
    write_corpus(out.join("raw.jsonl"), &raw.kept)?;
    fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&filtered.report)? + "\n",
    )?;
    fs::write(
        out.join("raw_report.json"),
        serde_json::to_string_pretty(&raw.report)? + "\n",
    )?;
    println!("{}", filtered.report);
    Ok(())
}

fn align(args: &AlignArgs, input: &Path) -> Result<()> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("triples.jsonl"));
    let dialogues = read_corpus(input, ReadMode::Strict)?;
    let provider = match args.provider.as_str() {
        "lexical" => SimilarityProvider::LexicalTfIdf,
        "embedding" => {
            let mut client = EmbeddingClient::new(
                "external_embedding",
                Box::new(HttpEmbeddingTransport::from_env()?),
            );
            if let Some(dir) = &args.cache {
                client = client.with_cache_dir(dir);
            }
            SimilarityProvider::ExternalEmbedding(client)
        }
        other => return Err(format!("unknown provider {other:?}").into()),
    };
    let alignments = align_corpus(&dialogues, args.level, &provider)?;
    let flagged = alignments.iter().filter(|a| a.flag.is_some()).count();
    let triples: Vec<_> = alignments.into_iter().flat_map(|a| a.triples).collect();
    let (kept, low) = match args.min_score {
        Some(min) => split_by_score(triples, min),
        None => (triples, Vec::new()),
    };
    write_triples(&out, &kept)?;
    if args.min_score.is_some() {
        let side = out.with_extension("low_score.jsonl");
        write_triples(&side, &low)?;
        println!("{} low-score triples in {}", low.len(), side.display());
    }
    println!(
        "{} triples from {} dialogues ({flagged} skipped)",
        kept.len(),
        dialogues.len()
    );
    Ok(())
}

fn t2i_train(args: &TrainArgs, pairs_path: &Path) -> Result<()> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("model"));
    let pairs = match args.mode {
        PairMode::Supervised => {
            let triples = read_triples(pairs_path, ReadMode::Strict)?;
            build_t2i_pairs(
                args.mode,
                T2iInputs::Clean(&Labeled::new(CorpusLabel::Clean, triples)),
            )?
        }
        PairMode::Unsupervised => {
            let lines: Vec<String> = fs::read_to_string(pairs_path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(String::from)
                .collect();
            let mut client = MtClient::new("mt", Box::new(HttpMtTransport::from_env()?));
            if let Some(dir) = &args.cache {
                client = client.with_cache_dir(dir);
            }
            build_t2i_pairs(
                args.mode,
                T2iInputs::Raw {
                    interpretations: &Labeled::new(CorpusLabel::Raw, lines),
                    client: &client,
                    lang: &args.lang,
                    pivot: &args.pivot,
                },
            )?
        }
    };
    let cfg = TrainConfig {
        iterations: args.iterations,
        order: args.order,
        max_phrase_len: args.max_phrase_len,
        ..TrainConfig::default()
    };
    let bundle = train_t2i(&pairs, &cfg)?;
    let hash = bundle.save(&out)?;
    println!(
        "trained on {} pairs; model {} ({hash})",
        pairs.len(),
        out.display()
    );
    Ok(())
}

fn simulate(args: &SimulateArgs, src: &Path) -> Result<()> {
    let spec = args.gen.as_deref().ok_or("simulate needs --gen")?;
    let generator = generator_from_spec(spec)?;
    let sources: Vec<String> = fs::read_to_string(src)?.lines().map(String::from).collect();
    let config = WaitKConfig {
        k: args.k,
        max_target_factor: args.max_target_factor,
    };
    let sims = simulate_corpus(&sources, &config, generator.as_ref())?;
    let mut hyps = String::new();
    let mut schedules = String::new();
    for sim in &sims {
        hyps.push_str(&sim.text());
        hyps.push('\n');
        schedules.push_str(&serde_json::to_string(&sim.schedule)?);
        schedules.push('\n');
    }
    match &args.out {
        Some(path) => fs::write(path, hyps)?,
        None => print!("{hyps}"),
    }
    if let Some(path) = &args.schedules {
        fs::write(path, schedules)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ScoreOutput {
    bleu: f64,
    ap: Option<f64>,
    al: Option<f64>,
    n_sentences: usize,
}

fn score(args: &ScoreArgs, hyp: &Path) -> Result<()> {
    let reference = args.reference.as_ref().ok_or("score needs --ref")?;
    let hyps: Vec<String> = fs::read_to_string(hyp)?.lines().map(String::from).collect();
    let refs: Vec<String> = fs::read_to_string(reference)?
        .lines()
        .map(String::from)
        .collect();
    let bleu = BleuConfig {
        smoothing: args.bleu_smoothing,
        lowercase: args.lowercase,
        ..BleuConfig::default()
    };
    let score = corpus_bleu(&hyps, &refs, &bleu)?;
    let (ap, al) = match &args.schedules {
        Some(path) => {
            let schedules = fs::read_to_string(path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str::<ReadWriteSchedule>)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if schedules.len() != hyps.len() {
                return Err(format!(
                    "{} schedules for {} hypotheses",
                    schedules.len(),
                    hyps.len()
                )
                .into());
            }
            let lat = corpus_latency(&schedules);
            (Some(lat.ap), Some(lat.al))
        }
        None => (None, None),
    };
    let out = ScoreOutput {
        bleu: score.score,
        ap,
        al,
        n_sentences: hyps.len(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn ngram(args: &NgramArgs, gold: &Path) -> Result<()> {
    let read = |p: &Path| -> Result<Vec<String>> {
        Ok(fs::read_to_string(p)?.lines().map(String::from).collect())
    };
    let baseline = read(
        args.baseline
            .as_deref()
            .ok_or("ngram-report needs --baseline")?,
    )?;
    let systems = args
        .systems
        .iter()
        .map(|s| {
            let (name, path) = s
                .split_once('=')
                .ok_or_else(|| format!("--system {s:?} is not name=path"))?;
            Ok((name.to_string(), read(Path::new(path))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = ngram_report(&read(gold)?, &baseline, &systems, args.max_n)?;
    let figure = FigureTable::from_reports(&reports);
    if let Some(path) = &args.csv {
        fs::write(path, figure.to_csv())?;
    }
    print!("{}", figure.render());
    Ok(())
}
