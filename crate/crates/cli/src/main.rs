use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynkg::captioner::{
    read_checkpoint, train_with_log, write_checkpoint, CaptionModel, ModelDims, TrainConfig,
    Vocabulary, DEFAULT_MAX_LEN,
};
use dynkg::graph::{eav_tuples_to_json, ere_tuples_to_json, KnowledgeGraph};
use dynkg::metrics::{parse_results, report, EvalPair};
use dynkg::ontology::OntologyStore;
use dynkg::parser::{parse_sentence, Lexicon};
use dynkg::pipeline::{
    complete_graph, load_features, run, segment, Captioner, ClipResult, FixedCaptioner,
    PipelineConfig, Seq2SeqCaptioner, DEFAULT_STRIDE, DEFAULT_WINDOW,
};
use dynkg::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "dynkg", version, about = "Build dynamic knowledge graphs from video clip features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a captioner on a corpus directory containing `corpus.tsv`.
    Train(TrainArgs),
    /// Caption one feature file.
    Caption {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        features: PathBuf,
    },
    /// Extract E-R-E tuples from a sentence.
    Parse {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        sentence: String,
    },
    /// Look up the inherited E-A-V tuples of an entity.
    Query {
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        entity: String,
    },
    /// Build the knowledge graph for one clip and write `<clip>.json` and `<clip>.dot`.
    Complete(CompleteArgs),
    /// Cut a feature stream into fixed-length clips, one CSV per clip.
    Segment {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_STRIDE)]
        stride: usize,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Segment a stream and build a graph per clip, plus `manifest.json`.
    Run(RunArgs),
    /// Score a `clip<TAB>hypothesis<TAB>reference` results file.
    Eval {
        #[arg(long)]
        results: PathBuf,
    },
    /// Convert graph JSON to Graphviz DOT.
    ExportDot {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory holding `corpus.tsv` (`features_file<TAB>sentence` lines, paths relative to it).
    #[arg(long)]
    corpus: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Vocabulary file to write, built from the corpus sentences.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 32)]
    embed: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CompleteArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, required_unless_present = "caption")]
    checkpoint: Option<PathBuf>,
    #[arg(long, required_unless_present = "caption")]
    vocab: Option<PathBuf>,
    /// Use this sentence instead of running the captioner.
    #[arg(long)]
    caption: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values serialize")
}

fn load_model(args: &ModelArgs) -> Result<Seq2SeqCaptioner, Error> {
    let bytes = fs::read(&args.checkpoint).map_err(|source| Error::Io {
        path: args.checkpoint.clone(),
        source,
    })?;
    let model = read_checkpoint(bytes.as_slice())?;
    let vocab = Vocabulary::parse(&read(&args.vocab)?)?;
    Ok(Seq2SeqCaptioner::new(model, vocab)?)
}

fn train_command(args: &TrainArgs) -> Result<(), Error> {
    let index = args.corpus.join("corpus.tsv");
    let mut corpus = Vec::new();
    for (n, line) in read(&index)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (file, sentence) = line.split_once('\t').ok_or_else(|| {
            Error::InvalidInput(format!("{}:{}: expected `features_file<TAB>sentence`", index.display(), n + 1))
        })?;
        corpus.push((load_features(&args.corpus.join(file))?, sentence.trim().to_string()));
    }
    if corpus.is_empty() {
        return Err(Error::InvalidInput(format!("{} lists no clips", index.display())));
    }
    let vocab = Vocabulary::from_sentences(corpus.iter().map(|(_, s)| s.as_str()));
    let dims = ModelDims {
        vocab_size: vocab.len(),
        embed_size: args.embed,
        hidden_size: args.hidden,
        feature_size: corpus[0].0.dim(),
        max_len: args.max_len,
    };
    let model = CaptionModel::new(dims, args.seed)?;
    let config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        seed: args.seed,
        batch_size: args.batch_size,
    };
    let model = train_with_log(&model, &corpus, &vocab, &config, |epoch, loss| {
        eprintln!("epoch {} loss {loss:.6}", epoch + 1);
    })?;
    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes)?;
    write(&args.checkpoint, bytes)?;
    write(&args.vocab, vocab.to_text())?;
    Ok(())
}

fn result_json(r: &ClipResult) -> serde_json::Value {
    json!({
        "clip_id": r.clip_id,
        "caption": r.caption,
        "tuples": ere_tuples_to_json(&r.tuples),
        "diagnostics": r.diagnostics.iter().map(|d| d.code()).collect::<Vec<_>>(),
    })
}

fn complete_command(args: &CompleteArgs) -> Result<(), Error> {
    let captioner: Box<dyn Captioner> = match &args.caption {
        Some(text) => Box::new(FixedCaptioner(text.clone())),
        None => Box::new(load_model(&ModelArgs {
            checkpoint: args.checkpoint.clone().expect("required by clap"),
            vocab: args.vocab.clone().expect("required by clap"),
        })?),
    };
    let lexicon = Lexicon::parse(&read(&args.lexicon)?)?;
    let ontology = OntologyStore::load(&read(&args.ontology)?)?;
    let clip = load_features(&args.features)?;
    let result = complete_graph(&clip, captioner.as_ref(), &lexicon, &ontology)?;
    write(&args.output_dir.join(format!("{}.json", result.clip_id)), result.graph.to_json())?;
    write(&args.output_dir.join(format!("{}.dot", result.clip_id)), result.graph.to_dot())?;
    println!("{}", pretty(&result_json(&result)));
    Ok(())
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Train(args) => train_command(&args),
        Command::Caption { model, features } => {
            let captioner = load_model(&model)?;
            println!("{}", captioner.caption(&load_features(&features)?)?);
            Ok(())
        }
        Command::Parse { lexicon, sentence } => {
            let lexicon = Lexicon::parse(&read(&lexicon)?)?;
            let outcome = parse_sentence(&sentence, &lexicon);
            let diagnostics: Vec<String> = outcome.diagnostic.iter().map(ToString::to_string).collect();
            println!(
                "{}",
                pretty(&json!({ "tuples": ere_tuples_to_json(&outcome.tuples), "diagnostics": diagnostics }))
            );
            Ok(())
        }
        Command::Query { ontology, entity } => {
            let store = OntologyStore::load(&read(&ontology)?)?;
            let r = store.query(&entity);
            let diagnostics: Vec<String> = r.diagnostic.iter().map(ToString::to_string).collect();
            println!(
                "{}",
                pretty(&json!({
                    "entity": entity,
                    "class": r.class,
                    "tuples": eav_tuples_to_json(&r.tuples),
                    "diagnostics": diagnostics,
                }))
            );
            Ok(())
        }
        Command::Complete(args) => complete_command(&args),
        Command::Segment { features, window, stride, output_dir } => {
            let stream = load_features(&features)?;
            for clip in segment(&stream, window, stride)? {
                write(&output_dir.join(format!("{}.csv", clip.clip_id())), clip.to_csv())?;
                println!("{}", clip.clip_id());
            }
            Ok(())
        }
        Command::Run(args) => {
            let config = PipelineConfig {
                checkpoint: args.checkpoint,
                vocab: args.vocab,
                lexicon: args.lexicon,
                ontology: args.ontology,
                window: args.window,
                stride: args.stride,
                output_dir: args.output_dir,
                seed: args.seed,
            };
            let out = run(&config, &args.stream)?;
            for r in &out.results {
                println!("{}\t{}", r.clip_id, r.caption);
            }
            eprintln!("{} clip(s), manifest at {}", out.results.len(), out.manifest.display());
            Ok(())
        }
        Command::Eval { results } => {
            let pairs: Vec<EvalPair> = parse_results(&read(&results)?)?.into_iter().map(|(_, p)| p).collect();
            print!("{}", report(&pairs)?);
            Ok(())
        }
        Command::ExportDot { graph, output } => {
            let dot = KnowledgeGraph::from_json(&read(&graph)?)?.to_dot();
            match output {
                Some(path) => write(&path, dot),
                None => {
                    print!("{dot}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
