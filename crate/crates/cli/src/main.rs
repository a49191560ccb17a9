use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use odesa::encode::{iris_dataset, iris_stream, pattern_set, split_dataset, EventStream};
use odesa::harness::{self, ExperimentConfig};
use odesa::sim::trace::CsvTrace;
use odesa::trainer::Snapshot;
use odesa::Network;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "odesa", version, about = "Event-driven ODESA hardware simulator and experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dataset as an event-stream file, or a preset config.
    Gen(GenArgs),
    /// Train one run of an experiment and save the final snapshot.
    Train(TrainArgs),
    /// Evaluate a snapshot on an event stream with training disabled.
    Eval(EvalArgs),
    /// Train and evaluate every run of an experiment and summarize.
    Sweep(SweepArgs),
    /// Play a stream and write the per-tick signal trace as CSV.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Experiment1,
    Iris,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML).
    #[arg(short, long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment instead of a config file.
    #[arg(short, long, value_enum)]
    preset: Option<Preset>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, self.preset) {
            (Some(path), _) => {
                ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
            }
            (None, Some(p)) => Ok(preset(p)),
            (None, None) => bail!("pass --config FILE or --preset NAME"),
        }
    }
}

fn preset(p: Preset) -> ExperimentConfig {
    match p {
        Preset::Experiment1 => ExperimentConfig::experiment1(),
        Preset::Iris => ExperimentConfig::iris(),
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenWhat,
}

#[derive(Subcommand)]
enum GenWhat {
    /// The four sweep patterns, one presentation each per repeat.
    Patterns {
        #[arg(long, default_value_t = 8)]
        nu: u64,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 252)]
        gap: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Latency-coded Iris; with --split-seed, a train/test split.
    Iris {
        #[arg(long, default_value_t = 2040)]
        gap: u64,
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, default_value_t = 0.3)]
        train_fraction: f64,
        /// Output file (or train file when splitting).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Test file when splitting.
        #[arg(long, requires = "split_seed")]
        test_out: Option<PathBuf>,
    },
    /// A preset experiment config, as TOML.
    Config {
        #[arg(value_enum)]
        preset: Preset,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Which split or seed of the experiment to run.
    #[arg(long, default_value_t = 0)]
    run: u32,
    #[arg(long)]
    epochs: Option<u32>,
    /// Sample test accuracy every N epochs.
    #[arg(long)]
    eval_every: Option<u32>,
    /// Where to save the trained snapshot.
    #[arg(short, long)]
    snapshot: Option<PathBuf>,
    /// Per-epoch metrics CSV.
    #[arg(short, long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(short, long)]
    snapshot: PathBuf,
    /// Event-stream file; defaults to the experiment's test set for --run.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    run: u32,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    epochs: Option<u32>,
    /// Also train and evaluate the floating-point reference model.
    #[arg(long)]
    oracle: bool,
    /// Per-run results CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Event-stream file; defaults to the experiment's training set.
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Registers to start from; a fresh seeded network otherwise.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Keep the trainers running while tracing.
    #[arg(long)]
    train: bool,
    #[arg(long, default_value_t = 0)]
    run: u32,
    #[arg(short, long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Trace(a) => trace(a),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn read_stream(path: &Path) -> Result<EventStream> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(EventStream::from_text(&text)?)
}

fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Snapshot::from_text(&text)?)
}

fn gen(a: GenArgs) -> Result<()> {
    match a.what {
        GenWhat::Patterns { nu, jitter, repeats, gap, seed, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sets = (0..repeats)
                .map(|_| pattern_set(nu, jitter, gap, &mut rng))
                .collect::<odesa::Result<Vec<_>>>()?;
            let stream = EventStream::concat(&sets, odesa::encode::patterns::PATTERN_CHANNELS)?;
            write_out(out.as_deref(), &stream.to_text())
        }
        GenWhat::Iris { gap, split_seed, train_fraction, out, test_out } => {
            let samples = iris_dataset();
            match split_seed {
                None => write_out(out.as_deref(), &iris_stream(&samples, gap)?.to_text()),
                Some(seed) => {
                    let (train, test) = split_dataset(&samples, train_fraction, seed)?.streams(gap)?;
                    write_out(out.as_deref(), &train.to_text())?;
                    match test_out {
                        Some(p) => write_out(Some(&p), &test.to_text()),
                        None => Ok(()),
                    }
                }
            }
        }
        GenWhat::Config { preset: p, out } => write_out(out.as_deref(), &preset(p).to_toml()),
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if a.eval_every.is_some() {
        cfg.eval_every = a.eval_every;
    }
    let m = harness::run_experiment(&cfg, a.run)?;
    println!("{}", m.summary());
    if let Some(p) = &a.metrics {
        write_out(Some(p), &m.epochs_csv())?;
    }
    if let Some(p) = &a.snapshot {
        write_out(Some(p), &m.snapshot.to_text())?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let snap = read_snapshot(&a.snapshot)?;
    let stream = match &a.stream {
        Some(p) => read_stream(p)?,
        None => harness::datasets(&cfg, a.run)?.test,
    };
    let acc = harness::eval_snapshot(&cfg.network()?, &snap, &stream)?;
    println!("accuracy {acc:.4} over {} labeled samples", stream.num_labeled());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if a.oracle && cfg.oracle.is_none() {
        bail!("config has no [oracle] section");
    }
    let report = harness::sweep(&cfg, a.oracle)?;
    print!("{}", report.to_csv());
    print!("{}", report.summary());
    if let Some(p) = &a.csv {
        write_out(Some(p), &report.to_csv())?;
    }
    Ok(())
}

fn trace(a: TraceArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let stream = match &a.stream {
        Some(p) => read_stream(p)?,
        None => harness::datasets(&cfg, a.run)?.train,
    };
    let mut net = Network::new(&cfg.network()?, harness::run_seed(&cfg, a.run))?;
    if let Some(p) = &a.snapshot {
        net.restore(&read_snapshot(p)?)?;
    }
    net.set_training(a.train);
    let file = fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut sink = CsvTrace::new(BufWriter::new(file))?;
    let verdicts = net.play_traced(&stream, &mut sink)?;
    let acc = harness::accuracy(&verdicts, stream.num_labeled());
    println!("traced {} ticks to {}; accuracy {acc:.4}", net.now(), a.out.display());
    Ok(())
}
