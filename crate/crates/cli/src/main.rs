use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pog_core::harness::{write_outputs, Pipeline};
use pog_core::kg::{load_labels, load_triples};
use pog_core::{
    load_dataset, run_dataset, EntityId, EntityIndex, Embedder, HashingEmbedder, HttpBackend, HttpEmbedder, KgSource,
    KnowledgeGraph, LlmBackend, MockBackend, PogConfig, PromptLibrary, PruningStrategy, SparqlClient,
};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "pog", version, about = "Answer questions over a knowledge graph by guided path exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSONL dataset and write metrics.json and traces.jsonl.
    Run(Box<RunArgs>),
    /// Print the effective configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON file with configuration overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct Knobs {
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<PruningStrategy>,
    /// Maximum exploration depth.
    #[arg(long)]
    dmax: Option<usize>,
    #[arg(long)]
    w1: Option<usize>,
    #[arg(long)]
    w2: Option<usize>,
    #[arg(long)]
    wmax: Option<usize>,
    /// Render one sampled relation per clustered edge.
    #[arg(long)]
    pog_e: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip supernode clustering.
    #[arg(long)]
    no_cluster: bool,
    /// Skip topic-path graph reduction.
    #[arg(long)]
    no_reduce: bool,
}

#[derive(Args)]
struct RunArgs {
    /// JSONL dataset: {"id", "question", "answers", "topic_entities"?} per line.
    #[arg(long)]
    dataset: PathBuf,
    /// Local triple file, `head<TAB>relation<TAB>tail`.
    #[arg(long, conflicts_with = "sparql", required_unless_present = "sparql")]
    kg: Option<PathBuf>,
    /// Label file for --kg, `id<TAB>label`.
    #[arg(long, requires = "kg")]
    labels: Option<PathBuf>,
    /// SPARQL endpoint URL.
    #[arg(long)]
    sparql: Option<String>,
    /// `mock:SCRIPT.json` or `http:URL` for an OpenAI-style chat endpoint.
    #[arg(long)]
    llm: String,
    /// Model name sent to an HTTP backend.
    #[arg(long, default_value = "gpt-3.5-turbo")]
    model: String,
    /// `fallback` (hashing embedder) or `http:URL`.
    #[arg(long, default_value = "fallback")]
    embedder: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Questions answered concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Use the dataset's topic entities instead of linking.
    #[arg(long)]
    gold_topics: bool,
    /// Linking universe, `id<TAB>label` per line. Defaults to the --kg labels.
    #[arg(long)]
    entity_index: Option<PathBuf>,
    /// Directory of prompt overrides (`<purpose>.txt`, `<purpose>.fewshot.txt`).
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Write each question's subgraph as JSON into this directory.
    #[arg(long)]
    dump_subgraphs: Option<PathBuf>,
    /// JSON file with configuration overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

fn parse_strategy(s: &str) -> Result<PruningStrategy, String> {
    s.parse().map_err(|e: pog_core::Error| e.to_string())
}

fn load_config(path: Option<&PathBuf>, knobs: &Knobs) -> Result<PogConfig> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => PogConfig::default(),
    };
    if let Some(s) = knobs.strategy {
        config.strategy = s;
    }
    if let Some(d) = knobs.dmax {
        config.d_max = d;
    }
    if let Some(w) = knobs.w1 {
        config.widths.w1 = w;
    }
    if let Some(w) = knobs.w2 {
        config.widths.w2 = w;
    }
    if let Some(w) = knobs.wmax {
        config.widths.w_max = w;
    }
    if let Some(s) = knobs.seed {
        config.seed = s;
    }
    config.pog_e |= knobs.pog_e;
    config.cluster &= !knobs.no_cluster;
    config.reduce &= !knobs.no_reduce;
    config.validate()?;
    Ok(config)
}

fn llm_backend(spec: &str, model: &str) -> Result<Arc<dyn LlmBackend>> {
    if let Some(path) = spec.strip_prefix("mock:") {
        return Ok(Arc::new(MockBackend::from_file(path)?));
    }
    if let Some(url) = spec.strip_prefix("http:") {
        return Ok(Arc::new(HttpBackend::new(url, model)));
    }
    bail!("--llm must be mock:FILE or http:URL, got `{spec}`")
}

fn embedder(spec: &str) -> Result<Arc<dyn Embedder>> {
    if spec == "fallback" {
        return Ok(Arc::new(HashingEmbedder::default()));
    }
    if let Some(url) = spec.strip_prefix("http:") {
        return Ok(Arc::new(HttpEmbedder::new(url)));
    }
    bail!("--embedder must be fallback or http:URL, got `{spec}`")
}

fn run(args: RunArgs) -> Result<()> {
    let config = load_config(args.config.as_ref(), &args.knobs)?;
    let records = load_dataset(&args.dataset)?;
    let embedder = embedder(&args.embedder)?;

    let (source, local): (Arc<dyn KgSource>, Option<Arc<KnowledgeGraph>>) = match (&args.kg, &args.sparql) {
        (Some(path), _) => {
            let triples = load_triples(path)?;
            let labels = match &args.labels {
                Some(l) => load_labels(l)?,
                None => Default::default(),
            };
            let kg = Arc::new(KnowledgeGraph::new(triples, labels));
            (kg.clone(), Some(kg))
        }
        (None, Some(url)) => (Arc::new(SparqlClient::new(url.clone())), None),
        (None, None) => bail!("one of --kg or --sparql is required"),
    };

    let entity_index = if args.gold_topics {
        None
    } else if let Some(path) = &args.entity_index {
        let entries: Vec<(EntityId, String)> = load_labels(path)?
            .into_iter()
            .map(|(id, label)| (EntityId::new(id), label))
            .collect();
        Some(Arc::new(EntityIndex::build(entries, embedder.as_ref())?))
    } else if let Some(kg) = &local {
        Some(Arc::new(EntityIndex::from_graph(kg, embedder.as_ref())?))
    } else {
        bail!("linking against a SPARQL endpoint needs --entity-index or --gold-topics")
    };

    let prompts = match &args.prompts {
        Some(dir) => PromptLibrary::load_dir(dir)?,
        None => PromptLibrary::builtin(),
    };
    let pipeline = Pipeline {
        source,
        llm: llm_backend(&args.llm, &args.model)?,
        embedder,
        prompts,
        config,
        entity_index,
        use_gold_topics: args.gold_topics,
        dump_subgraphs: args.dump_subgraphs.clone(),
    };
    let (metrics, traces) = run_dataset(&records, &pipeline, args.parallel)?;
    write_outputs(&args.out, &metrics, &traces)?;
    println!(
        "questions {}  correct {}  failed {}  hits@1 {:.4}  avg llm calls {:.2}",
        metrics.total, metrics.correct, metrics.failed, metrics.hits_at_1, metrics.avg_llm_calls
    );
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Run(args) => run(*args),
        Command::Config(args) => {
            let config = load_config(args.config.as_ref(), &args.knobs)?;
            println!("{}", serde_json::to_string_pretty(&config)?);
            Ok(())
        }
    }
}
