use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use ontomerge::conflict::{conflicts_tsv, detect_conflicts, resolve_with};
use ontomerge::eval::EvalMode;
use ontomerge::merge::MergeOptions;
use ontomerge::owl::{display_label, serialize_owl, ROOT};
use ontomerge::pipeline::{self, MergeSettings, PipelineError};
use ontomerge::relations::relation_matrix;
use ontomerge::webstats::{CorpusProvider, HitCountProvider, LiveConfig, LiveProvider, Recording, ReplayProvider};
use ontomerge::wordnet::load_knowledge_base;
use ontomerge::KnowledgeBase;

/// Merge two ontologies against a WordNet-format noun database.
#[derive(Parser, Debug)]
#[command(name = "ontomerge", version)]
struct Cli {
    #[command(flatten)]
    kb: KbArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct KbArgs {
    /// Directory holding index.noun and data.noun.
    #[arg(long, global = true)]
    wordnet: Option<PathBuf>,
    /// Enrichment overlay applied at load; repeatable, applied in order.
    #[arg(long = "overlay", global = true)]
    overlays: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProviderKind {
    Replay,
    Corpus,
    Live,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Strict,
    ExpertScoped,
}

impl From<Mode> for EvalMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strict => EvalMode::Strict,
            Mode::ExpertScoped => EvalMode::ExpertScoped,
        }
    }
}

#[derive(Args, Debug)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "replay")]
    provider: ProviderKind,
    /// Replay cache (`phrase<TAB>count`); also the write-through cache of the live provider.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Text corpus directory for the corpus provider.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Search endpoint for the live provider.
    #[arg(long)]
    endpoint: Option<String>,
    /// Environment variable holding the live provider's API key.
    #[arg(long, default_value = "ONTOMERGE_SEARCH_KEY")]
    key_env: String,
    /// JSON pointer to the estimated result count in live responses.
    #[arg(long, default_value = "/searchInformation/totalResults")]
    count_pointer: String,
    /// Pause between live queries, in milliseconds.
    #[arg(long, default_value_t = 1000)]
    delay_ms: u64,
    /// Query at most this many candidate hypernyms per missing concept.
    #[arg(long)]
    candidate_limit: Option<usize>,
    /// Also write every answered query to this file in replay format.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Emit owl:disjointWith for disjoint, otherwise unrelated classes.
    #[arg(long)]
    emit_disjoint: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report subclass edges that contradict the knowledge base.
    Check { ontology: PathBuf },
    /// Rebuild an ontology's hierarchy from the knowledge base.
    Resolve {
        ontology: PathBuf,
        /// Write resolved.owl here instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit_disjoint: bool,
    },
    /// Print the relation matrix between the concepts of two ontologies.
    Matrix { first: PathBuf, second: PathBuf },
    /// Resolve, merge, and place missing concepts by hit counts.
    Merge {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Plan knowledge-base enrichment for a merged ontology and write the overlay.
    Enrich {
        merged: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score a correspondence file against expert mappings.
    Eval {
        produced: PathBuf,
        expert: PathBuf,
        #[arg(long, value_enum, default_value = "expert-scoped")]
        eval_mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every step, writing all intermediate files.
    Pipeline {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Expert mappings to evaluate the correspondences against.
        #[arg(long)]
        expert: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "expert-scoped")]
        eval_mode: Mode,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Provider(String),
    Pipeline(PipelineError),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Pipeline(e)
    }
}

fn load_kb(args: &KbArgs) -> Result<KnowledgeBase, Failure> {
    let dir = args
        .wordnet
        .as_deref()
        .ok_or_else(|| Failure::Usage("--wordnet <dir> is required".into()))?;
    let kb = load_knowledge_base(dir, &args.overlays).map_err(PipelineError::from)?;
    for w in kb.warnings() {
        warn!("{w}");
    }
    Ok(kb)
}

fn provider(args: &ProviderArgs) -> Result<Box<dyn HitCountProvider>, Failure> {
    let need = |o: &Option<PathBuf>, flag: &str| {
        o.clone()
            .ok_or_else(|| Failure::Usage(format!("--provider {:?} needs {flag}", args.provider).to_lowercase()))
    };
    let p: Box<dyn HitCountProvider> = match args.provider {
        ProviderKind::Replay => Box::new(
            ReplayProvider::load(&need(&args.cache, "--cache")?).map_err(|e| Failure::Provider(e.to_string()))?,
        ),
        ProviderKind::Corpus => Box::new(
            CorpusProvider::load(&need(&args.corpus, "--corpus")?).map_err(|e| Failure::Provider(e.to_string()))?,
        ),
        ProviderKind::Live => {
            let endpoint = args
                .endpoint
                .clone()
                .ok_or_else(|| Failure::Usage("--provider live needs --endpoint".into()))?;
            Box::new(
                LiveProvider::new(LiveConfig {
                    endpoint,
                    key_env: args.key_env.clone(),
                    count_pointer: args.count_pointer.clone(),
                    delay: Duration::from_millis(args.delay_ms),
                    cache: need(&args.cache, "--cache")?,
                })
                .map_err(|e| Failure::Provider(e.to_string()))?,
            )
        }
    };
    Ok(p)
}

fn settings(args: &ProviderArgs) -> MergeSettings {
    MergeSettings {
        options: MergeOptions {
            emit_disjoint: args.emit_disjoint,
        },
        candidate_limit: args.candidate_limit,
    }
}

fn save_recording(rec: &Recording, path: &Option<PathBuf>) -> Result<(), Failure> {
    if let Some(p) = path {
        pipeline::write_file(p, &rec.to_cache_text())?;
    }
    Ok(())
}

fn warn_all(ws: &[String]) {
    for w in ws {
        warn!("{w}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { ontology } => {
            let kb = load_kb(&cli.kb)?;
            let o = pipeline::read_ontology(&ontology)?;
            print!("{}", conflicts_tsv(&detect_conflicts(&o, &kb)));
        }
        Command::Resolve {
            ontology,
            out,
            emit_disjoint,
        } => {
            let kb = load_kb(&cli.kb)?;
            let o = pipeline::read_ontology(&ontology)?;
            let r = resolve_with(&o, &kb, MergeOptions { emit_disjoint }).map_err(PipelineError::from)?;
            warn_all(&r.warnings);
            let text = serialize_owl(&r.ontology);
            match out {
                Some(dir) => pipeline::write_file(&dir.join("resolved.owl"), &text)?,
                None => print!("{text}"),
            }
        }
        Command::Matrix { first, second } => {
            let kb = load_kb(&cli.kb)?;
            let labels = |p: &Path| -> Result<Vec<String>, Failure> {
                let o = pipeline::read_ontology(p)?;
                Ok(o.concepts
                    .iter()
                    .filter(|c| c.raw() != ROOT)
                    .map(|c| display_label(c.raw()))
                    .collect())
            };
            print!("{}", relation_matrix(&labels(&first)?, &labels(&second)?, &kb).to_tsv());
        }
        Command::Merge {
            first,
            second,
            provider: pargs,
            out,
        } => {
            let kb = load_kb(&cli.kb)?;
            let a = pipeline::read_ontology(&first)?;
            let b = pipeline::read_ontology(&second)?;
            let p = provider(&pargs)?;
            let rec = Recording::new(p.as_ref());
            let run = pipeline::merge_step(&a, &b, &kb, &rec, settings(&pargs))?;
            save_recording(&rec, &pargs.record)?;
            warn_all(&run.warnings);
            pipeline::write_merge_outputs(&run, &out)?;
        }
        Command::Enrich { merged, out } => {
            let kb = load_kb(&cli.kb)?;
            let run = pipeline::enrich_file(&kb, &merged, &out)?;
            warn_all(&run.warnings);
        }
        Command::Eval {
            produced,
            expert,
            eval_mode,
            out,
        } => {
            let report = pipeline::eval_files(&produced, &expert, eval_mode.into())?;
            let text = report.to_text();
            if let Some(dir) = out {
                pipeline::write_file(&dir.join(pipeline::EVAL), &text)?;
            }
            print!("{text}");
        }
        Command::Pipeline {
            first,
            second,
            provider: pargs,
            out,
            expert,
            eval_mode,
        } => {
            let kb = load_kb(&cli.kb)?;
            let p = provider(&pargs)?;
            let rec = Recording::new(p.as_ref());
            let expert = expert.as_deref().map(|e| (e, EvalMode::from(eval_mode)));
            let run = pipeline::run_pipeline(&first, &second, &kb, &rec, settings(&pargs), &out, expert)?;
            save_recording(&rec, &pargs.record)?;
            warn_all(&run.merge.warnings);
            warn_all(&run.enrich.warnings);
            if let Some(report) = run.eval {
                print!("{}", report.to_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Provider(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
