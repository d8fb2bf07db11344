use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use genderalt::align::AlignmentHints;
use genderalt::bitext::{extract_bitext, record_seed, write_tsv};
use genderalt::corpus::{
    read_eval_pairs, read_jsonl, read_jsonl_from, toy_corpus, AnnotatedSource, EntityAnnotation, GTransRecord,
};
use genderalt::derive::{enumerate_alternatives, AlignmentMap};
use genderalt::group::group;
use genderalt::lattice::{collapse, collapse_consistent, NgramModel};
use genderalt::lexicon::{spanish_lexicon, InflectionLexicon};
use genderalt::metrics::{MetricsReport, StructureMatching};
use genderalt::pipeline::{
    AdapterAligner, AdapterDetector, AdapterTransformer, Aligner, Detector, EditorAdapterConfig, GoldAligner,
    GoldDetector, HeuristicAligner, LatticeScoring, LatticeTransformer, NounList, Pipeline, PromptPreset, RuleDetector,
    Transformer, DEFAULT_EXEMPLARS, DEFAULT_PRONOUN_WINDOW,
};
use genderalt::structure::{serialize, split, PlainTranslation, StructuredTranslation};
use genderalt_cli::http::transport_for;
use genderalt_cli::serve::{self, AppState};

/// Entity-level gendered translation alternatives.
#[derive(Parser)]
#[command(name = "genderalt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every alternative of each G-Trans record.
    Expand {
        /// G-Trans JSONL; stdin if omitted or "-".
        input: Option<PathBuf>,
        /// Attach punctuation instead of printing space-joined tokens.
        #[arg(long)]
        detok: bool,
    },
    /// Group tab-separated all-masculine/all-feminine pairs into structured translations.
    Group {
        /// Lines of "y_M<TAB>y_F"; stdin if omitted or "-".
        input: Option<PathBuf>,
        /// Inflection lexicon TSV (default: bundled Spanish lexicon).
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Write gender-tagged fine-tuning bi-text (tagged source TAB target).
    ExtractBitext {
        input: Option<PathBuf>,
        /// Mixed-gender assignments sampled per record, besides all-M and all-F.
        #[arg(long, default_value_t = 3)]
        max_extra: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run detect -> transform -> group -> align over sentence pairs.
    Augment(Box<AugmentArgs>),
    /// Compare hypothesis records against references.
    Evaluate {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        /// Match structures by position instead of as a multiset.
        #[arg(long)]
        positional: bool,
    },
    /// Replace each structure by the side a language model prefers.
    Collapse {
        input: Option<PathBuf>,
        /// Target-language text, one tokenized sentence per line, to train the scorer on.
        #[arg(long)]
        lm: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Choose one gender per entity instead of per structure.
        #[arg(long)]
        consistent: bool,
    },
    /// Serve the corpus over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// G-Trans JSONL (default: bundled toy corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorKind {
    Gold,
    Rules,
    Adapter,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformerKind {
    Lattice,
    Adapter,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlignerKind {
    Gold,
    Heuristic,
    Adapter,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Editor,
    Generator,
}

#[derive(clap::Args)]
struct AugmentArgs {
    /// JSONL lines {"src": [...], "yB": [...]}; gold stages also read "entities", "tgt", "align".
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rules")]
    detector: DetectorKind,
    #[arg(long, value_enum, default_value = "lattice")]
    transformer: TransformerKind,
    #[arg(long, value_enum, default_value = "heuristic")]
    aligner: AlignerKind,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Seed for sampling prompt exemplars.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Head-noun list for the rule detector.
    #[arg(long)]
    nouns: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PRONOUN_WINDOW)]
    window: usize,
    /// Source-word TAB target-phrase hints for the heuristic aligner.
    #[arg(long)]
    hints: Option<PathBuf>,
    /// Tagged bi-text TSV (from extract-bitext) to train an n-gram scorer for the lattice.
    #[arg(long)]
    lm: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    beam: usize,
    /// URL or command line of the detector adapter.
    #[arg(long)]
    detector_endpoint: Option<String>,
    #[arg(long)]
    transformer_endpoint: Option<String>,
    #[arg(long)]
    aligner_endpoint: Option<String>,
    /// Attach prompts built from this preset to transformer adapter requests.
    #[arg(long, value_enum)]
    prompt: Option<PresetArg>,
    /// G-Trans JSONL to sample prompt exemplars from (default: bundled toy corpus).
    #[arg(long)]
    prompt_exemplars: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EXEMPLARS)]
    exemplars: usize,
    /// Adapter request timeout in seconds (HTTP only).
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

/// A fatal error: bad input files or configuration.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

/// Exit status of a command that ran to completion.
enum Outcome {
    Ok,
    RecordErrors(usize),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GENDERALT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::RecordErrors(n)) => {
            eprintln!("{n} record(s) failed");
            ExitCode::from(1)
        }
        // downstream closed stdout early (`| head`); not our failure
        Err(Fatal(msg)) if msg.starts_with("Broken pipe") => ExitCode::SUCCESS,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome, Fatal> {
    match command {
        Command::Expand { input, detok } => expand(input.as_deref(), detok),
        Command::Group { input, lexicon } => group_pairs(input.as_deref(), lexicon.as_deref()),
        Command::ExtractBitext { input, max_extra, seed } => bitext(input.as_deref(), max_extra, seed),
        Command::Augment(args) => augment(*args),
        Command::Evaluate { reference, hyp, positional } => evaluate(&reference, &hyp, positional),
        Command::Collapse { input, lm, order, consistent } => {
            collapse_records(input.as_deref(), &lm, order, consistent)
        }
        Command::Serve { port, host, corpus, lexicon } => {
            serve_corpus(&host, port, corpus.as_deref(), lexicon.as_deref())
        }
    }
}

// ---------------------------------------------------------------------------
// Input helpers

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, Fatal> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => {
            let file = File::open(p).map_err(|e| Fatal(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufReader::new(file)))
        }
    }
}

fn read_records(path: Option<&Path>) -> Result<Vec<GTransRecord>, Fatal> {
    match path {
        Some(p) if p != Path::new("-") => Ok(read_jsonl(p)?),
        _ => Ok(read_jsonl_from(open_input(None)?)?),
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<InflectionLexicon, Fatal> {
    match path {
        Some(p) => Ok(InflectionLexicon::load(p)?),
        None => Ok(spanish_lexicon()),
    }
}

fn report(line: usize, err: impl std::fmt::Display) {
    eprintln!("record {line}: {err}");
}

fn finish(errors: usize) -> Outcome {
    if errors == 0 {
        Outcome::Ok
    } else {
        Outcome::RecordErrors(errors)
    }
}

// ---------------------------------------------------------------------------
// Commands

fn expand(input: Option<&Path>, detok: bool) -> Result<Outcome, Fatal> {
    let records = read_records(input)?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut errors = 0;
    for (id, rec) in records.iter().enumerate() {
        let alternatives = match enumerate_alternatives(&rec.target, &rec.alignments) {
            Ok(a) => a,
            Err(e) => {
                report(id + 1, e);
                errors += 1;
                continue;
            }
        };
        for (assignment, y) in alternatives {
            let names: Vec<String> = assignment
                .choice
                .iter()
                .map(|(&e, g)| format!("{}={}", rec.source.head_word(e).unwrap_or("?"), g.tag()))
                .collect();
            let names = if names.is_empty() { "-".to_owned() } else { names.join(" ") };
            let text = if detok { y.detokenized() } else { y.text() };
            writeln!(out, "{id}\t{names}\t{text}")?;
        }
    }
    out.flush()?;
    Ok(finish(errors))
}

fn group_pairs(input: Option<&Path>, lexicon: Option<&Path>) -> Result<Outcome, Fatal> {
    let lex = load_lexicon(lexicon)?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut errors = 0;
    for (idx, line) in open_input(input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let result = line.split_once('\t').ok_or_else(|| "expected y_M<TAB>y_F".to_owned()).and_then(|(m, f)| {
            let m = PlainTranslation::from_text(m).map_err(|e| e.to_string())?;
            let f = PlainTranslation::from_text(f).map_err(|e| e.to_string())?;
            group(&m, &f, &lex).map_err(|e| e.to_string())
        });
        match result {
            Ok(ys) => writeln!(out, "{}", serialize(&ys).tokens.join(" "))?,
            Err(e) => {
                report(idx + 1, e);
                errors += 1;
            }
        }
    }
    out.flush()?;
    Ok(finish(errors))
}

fn bitext(input: Option<&Path>, max_extra: usize, seed: u64) -> Result<Outcome, Fatal> {
    let records = read_records(input)?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut errors = 0;
    for (idx, rec) in records.iter().enumerate() {
        match extract_bitext(rec, max_extra, record_seed(seed, idx)) {
            Ok(rows) => write_tsv(&rows, &mut out)?,
            Err(e) => {
                report(idx + 1, e);
                errors += 1;
            }
        }
    }
    out.flush()?;
    Ok(finish(errors))
}

/// One line of `augment` input.
#[derive(Deserialize)]
struct AugmentInput {
    src: Vec<String>,
    #[serde(rename = "yB")]
    base: Option<Vec<String>>,
    entities: Option<Vec<EntityAnnotation>>,
    tgt: Option<StructuredTranslation>,
    align: Option<AlignmentMap>,
}

impl AugmentInput {
    fn base(&self) -> Result<PlainTranslation, String> {
        match (&self.base, &self.tgt) {
            (Some(b), _) => PlainTranslation::new(b.clone()).map_err(|e| e.to_string()),
            (None, Some(t)) => Ok(split(t).0),
            (None, None) => Err("line has neither \"yB\" nor \"tgt\"".into()),
        }
    }

    fn source(&self) -> Option<Result<AnnotatedSource, String>> {
        self.entities.as_ref().map(|e| AnnotatedSource::new(self.src.clone(), e.clone()))
    }

    fn gold(&self) -> Option<Result<GTransRecord, String>> {
        let (tgt, align) = (self.tgt.as_ref()?, self.align.as_ref()?);
        Some(self.source()?.and_then(|s| GTransRecord::new(s, tgt.clone(), align.clone())))
    }
}

fn train_tagged_lm(path: &Path) -> Result<NgramModel, Fatal> {
    let text = std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    let sentences: Vec<Vec<&str>> = text
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(src, tgt)| src.split_whitespace().chain(tgt.split_whitespace()).collect())
        .collect();
    Ok(NgramModel::train(&sentences, 3, 0.1)?)
}

fn augment(args: AugmentArgs) -> Result<Outcome, Fatal> {
    let lex = load_lexicon(args.lexicon.as_deref())?;
    let timeout = Duration::from_secs(args.timeout);
    let endpoint = |e: &Option<String>, flag: &str| {
        e.clone().ok_or_else(|| Fatal(format!("--{flag} is required with the adapter stage")))
    };

    let mut text = String::new();
    open_input(args.input.as_deref())?.read_to_string(&mut text)?;
    let mut errors = 0;
    let mut inputs: Vec<(usize, AugmentInput)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<AugmentInput>(line) {
            Ok(v) => inputs.push((idx + 1, v)),
            Err(e) => {
                report(idx + 1, e);
                errors += 1;
            }
        }
    }

    let detector: Box<dyn Detector> = match args.detector {
        DetectorKind::Gold => {
            let mut sources = Vec::new();
            for (line, inp) in &inputs {
                match inp.source() {
                    Some(Ok(s)) => sources.push(s),
                    Some(Err(e)) => report(*line, e),
                    None => {}
                }
            }
            Box::new(GoldDetector::new(&sources))
        }
        DetectorKind::Rules => {
            let nouns = match &args.nouns {
                Some(p) => NounList::load(p).map_err(Fatal)?,
                None => NounList::english(),
            };
            Box::new(RuleDetector::new(nouns, args.window))
        }
        DetectorKind::Adapter => Box::new(AdapterDetector {
            transport: transport_for(&endpoint(&args.detector_endpoint, "detector-endpoint")?, timeout)?,
        }),
    };

    let transformer: Box<dyn Transformer> = match args.transformer {
        TransformerKind::Lattice => {
            let scoring = match &args.lm {
                Some(p) => LatticeScoring::Ngram(train_tagged_lm(p)?),
                None => LatticeScoring::TagFollowing,
            };
            Box::new(LatticeTransformer { lexicon: lex.clone(), scoring, beam: args.beam })
        }
        TransformerKind::Adapter => {
            let url = endpoint(&args.transformer_endpoint, "transformer-endpoint")?;
            let prompt = match args.prompt {
                None => None,
                Some(preset) => {
                    let preset = match preset {
                        PresetArg::Editor => PromptPreset::Editor,
                        PresetArg::Generator => PromptPreset::Generator,
                    };
                    let pool = match &args.prompt_exemplars {
                        Some(p) => read_jsonl(p)?,
                        None => toy_corpus(),
                    };
                    Some(
                        EditorAdapterConfig::sampled(url.clone(), preset, &pool, args.exemplars, args.seed)
                            .map_err(Fatal)?,
                    )
                }
            };
            Box::new(AdapterTransformer { transport: transport_for(&url, timeout)?, prompt })
        }
    };

    let aligner: Box<dyn Aligner> = match args.aligner {
        AlignerKind::Gold => {
            let mut gold = Vec::new();
            for (line, inp) in &inputs {
                match inp.gold() {
                    Some(Ok(r)) => gold.push(r),
                    Some(Err(e)) => report(*line, e),
                    None => {}
                }
            }
            Box::new(GoldAligner::new(&gold))
        }
        AlignerKind::Heuristic => {
            let hints = match &args.hints {
                Some(p) => Some(AlignmentHints::parse_tsv(&std::fs::read_to_string(p)?).map_err(Fatal)?),
                None => None,
            };
            Box::new(HeuristicAligner { hints })
        }
        AlignerKind::Adapter => Box::new(AdapterAligner {
            transport: transport_for(&endpoint(&args.aligner_endpoint, "aligner-endpoint")?, timeout)?,
        }),
    };

    let pipeline = Pipeline { detector: &*detector, transformer: &*transformer, aligner: &*aligner, lexicon: &lex };
    let mut pairs = Vec::with_capacity(inputs.len());
    let mut lines = Vec::with_capacity(inputs.len());
    for (line, inp) in &inputs {
        match inp.base() {
            Ok(base) => {
                pairs.push((inp.src.clone(), base));
                lines.push(*line);
            }
            Err(e) => {
                report(*line, e);
                errors += 1;
            }
        }
    }
    let results = pipeline.augment_batch(&pairs, args.threads);
    let mut out = BufWriter::new(io::stdout().lock());
    for (line, result) in lines.into_iter().zip(results) {
        match result {
            Ok(aug) => writeln!(out, "{}", serde_json::to_string(&aug)?)?,
            Err(e) => {
                report(line, e);
                errors += 1;
            }
        }
    }
    out.flush()?;
    Ok(finish(errors))
}

fn evaluate(reference: &Path, hyp: &Path, positional: bool) -> Result<Outcome, Fatal> {
    let pairs = read_eval_pairs(reference, hyp)?;
    let mode = if positional { StructureMatching::Positional } else { StructureMatching::Multiset };
    let report = MetricsReport::compute(&pairs, mode)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprint!("{}", report.table());
    Ok(Outcome::Ok)
}

fn collapse_records(input: Option<&Path>, lm: &Path, order: usize, consistent: bool) -> Result<Outcome, Fatal> {
    let records = read_records(input)?;
    let text = std::fs::read_to_string(lm).map_err(|e| Fatal(format!("{}: {e}", lm.display())))?;
    let sentences: Vec<Vec<&str>> = text.lines().map(|l| l.split_whitespace().collect()).collect();
    let model = NgramModel::train(&sentences, order, 0.1)?;
    let scorer = model.conditioned::<&str>(&[]);
    let mut out = BufWriter::new(io::stdout().lock());
    let mut errors = 0;
    for (idx, rec) in records.iter().enumerate() {
        let y = if consistent {
            match collapse_consistent(&rec.target, &rec.alignments, &scorer) {
                Ok(y) => y,
                Err(e) => {
                    report(idx + 1, e);
                    errors += 1;
                    continue;
                }
            }
        } else {
            collapse(&rec.target, &scorer)
        };
        writeln!(out, "{}", y.text())?;
    }
    out.flush()?;
    Ok(finish(errors))
}

fn serve_corpus(host: &str, port: u16, corpus: Option<&Path>, lexicon: Option<&Path>) -> Result<Outcome, Fatal> {
    let records = match corpus {
        Some(p) => read_jsonl(p)?,
        None => toy_corpus(),
    };
    let state = Arc::new(AppState::new(records, load_lexicon(lexicon)?));
    let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|e| Fatal(format!("{host}:{port}: {e}")))?;
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(serve::run(addr, state))?;
    Ok(Outcome::Ok)
}
