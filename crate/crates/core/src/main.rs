use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wcparse::config::RunConfig;
use wcparse::corpus::{self, load_corpus, load_word_list, sentence_conll, CorpusSentence};
use wcparse::encoder::EncoderKind;
use wcparse::lattice::{Lattice, Lexicon};
use wcparse::model::Model;
use wcparse::{checkpoint, metrics, toy, train, Error, Result};

#[derive(Parser)]
#[command(name = "wcparse", version, about = "Joint Chinese word segmentation, POS tagging and dependency parsing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint plus a JSON training log.
    Train(TrainArgs),
    /// Parse raw text, one sentence per line.
    Parse(ParseArgs),
    /// Score predicted parses against gold parses.
    Evaluate(EvaluateArgs),
    /// Print the word-character lattice of each input line as JSON.
    LatticeDump(LatticeArgs),
    /// Write the bundled toy corpus and lexicon to a directory.
    GenToy {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Lexicon file, one word per line.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// JSON run configuration; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Training log path (default: checkpoint path + .log.json).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    encoder: Option<EncoderKind>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    mlp: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip malformed sentences with a warning instead of failing.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Input text (default: stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Emit one JSON object per line instead of the corpus format.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Training corpus; words absent from it count as out-of-vocabulary.
    #[arg(long, conflicts_with = "train_words")]
    train_vocab: Option<PathBuf>,
    /// Plain word list used instead of `--train-vocab`.
    #[arg(long)]
    train_words: Option<PathBuf>,
    /// JSON report path (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV of F1 by sentence length.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Input text (default: stdin).
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => run_train(a),
        Command::Parse(a) => run_parse(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::LatticeDump(a) => run_lattice_dump(a),
        Command::GenToy { out_dir } => run_gen_toy(&out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    match path {
        Some(p) => Lexicon::load(p),
        None => Ok(Lexicon::default()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn run_train(a: TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let enc = &mut cfg.model.encoder;
    if let Some(k) = a.encoder {
        enc.kind = k;
    }
    if let Some(v) = a.layers {
        enc.layers = v;
    }
    if let Some(v) = a.heads {
        enc.heads = v;
    }
    if let Some(v) = a.hidden {
        enc.hidden = v;
    }
    if let Some(v) = a.dropout {
        enc.dropout = v;
    }
    if let Some(v) = a.mlp {
        cfg.model.mlp = v;
    }
    if let Some(v) = a.epochs {
        cfg.train.max_epochs = v;
    }
    if let Some(v) = a.patience {
        cfg.train.patience = v;
    }
    if let Some(v) = a.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = a.seed {
        cfg.train.seed = v;
        cfg.model.seed = v;
    }
    cfg.validate()?;
    if cfg.model.encoder.uses_lexicon() && a.dict.is_none() {
        log::warn!("training the graph attention encoder without a lexicon");
    }

    let train_set = load_corpus(&a.corpus, a.lenient)?;
    let dev_set = load_corpus(&a.dev, a.lenient)?;
    let lexicon = load_lexicon(a.dict.as_deref())?;
    log::info!(
        "{} training and {} dev sentences, {} lexicon words",
        train_set.len(),
        dev_set.len(),
        lexicon.len()
    );
    let model = Model::for_corpus(cfg.model.clone(), &train_set)?;
    let outcome = train::train(model, &train_set, &dev_set, &lexicon, &cfg.train, Some(&a.out))?;
    checkpoint::save(&outcome.model, &a.out)?;
    let log_path = a.log.unwrap_or_else(|| train::log_path_for(&a.out));
    write_file(&log_path, &serde_json::to_string_pretty(&outcome.log)?)?;
    log::info!(
        "best dev dependency F1 {:.4} at epoch {}",
        outcome.log.best_dev_dep_f1,
        outcome.log.best_epoch
    );
    Ok(())
}

fn input_lines(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufReader::new(
            std::fs::File::open(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(std::io::BufReader::new(std::io::stdin())),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn run_parse(a: ParseArgs) -> Result<()> {
    let model = checkpoint::load(&a.model)?;
    if model.config.encoder.uses_lexicon() && a.dict.is_none() {
        return Err(Error::Config(
            "this model reads lexicon words; pass the training lexicon with --dict".into(),
        ));
    }
    let lexicon = load_lexicon(a.dict.as_deref())?;
    let out_name = a.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let mut out = output(a.output.as_deref())?;
    for (i, line) in input_lines(a.input.as_deref())?.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let chars: Vec<char> = line.trim().chars().collect();
        if chars.is_empty() {
            log::warn!("skipping empty line {}", i + 1);
            continue;
        }
        let parse = model.parse(&chars, &lexicon)?;
        let text = if a.json {
            serde_json::to_string(&parse)? + "\n"
        } else {
            sentence_conll(&parse) + "\n"
        };
        out.write_all(text.as_bytes()).map_err(|e| Error::io(&out_name, e))?;
    }
    out.flush().map_err(|e| Error::io(&out_name, e))
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let to_outputs = |s: Vec<CorpusSentence>| s.iter().map(CorpusSentence::to_parse_output).collect::<Vec<_>>();
    let pred = to_outputs(load_corpus(&a.pred, false)?);
    let gold = to_outputs(load_corpus(&a.gold, false)?);
    let vocab = match (&a.train_vocab, &a.train_words) {
        (Some(p), _) => Some(corpus::word_vocab(&load_corpus(p, false)?)),
        (None, Some(p)) => Some(load_word_list(p)?),
        (None, None) => None,
    };
    let report = metrics::evaluate(&pred, &gold, vocab.as_ref())?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &a.report {
        Some(p) => write_file(p, &json)?,
        None => print!("{json}"),
    }
    if let Some(p) = &a.plot_data {
        write_file(p, &metrics::length_bins_csv(&report.by_length))?;
    }
    Ok(())
}

fn run_lattice_dump(a: LatticeArgs) -> Result<()> {
    let lexicon = Lexicon::load(&a.dict)?;
    let mut out = output(None)?;
    for (i, line) in input_lines(a.input.as_deref())?.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let chars: Vec<char> = line.trim().chars().collect();
        if chars.is_empty() {
            log::warn!("skipping empty line {}", i + 1);
            continue;
        }
        let dump = Lattice::build(&chars, &lexicon)?.dump();
        writeln!(out, "{}", serde_json::to_string(&dump)?).map_err(|e| Error::io("<stdout>", e))?;
    }
    out.flush().map_err(|e| Error::io("<stdout>", e))
}

fn run_gen_toy(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (train_text, dev_text, lexicon) = toy::render(&toy::generate(toy::SEED));
    write_file(&dir.join("toy_train.conll"), &train_text)?;
    write_file(&dir.join("toy_dev.conll"), &dev_text)?;
    write_file(&dir.join("toy_lexicon.txt"), &lexicon)
}
