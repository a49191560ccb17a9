//! Training, evaluation and sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DatasetSpec, ExperimentConfig};
use super::metrics::{accuracy, EpochMetrics, RunMetrics, SweepReport, SweepRow};
use crate::encode::{iris_dataset, pattern_set, split_dataset, EventStream};
use crate::error::Result;
use crate::network::{Network, NetworkConfig};
use crate::oracle;
use crate::trainer::Snapshot;

/// Streams for one run of an experiment.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: EventStream,
    pub test: EventStream,
    /// Perturbed copy of the test set (jittered patterns).
    pub robustness: Option<EventStream>,
}

/// Seed used for run `run` of a sweep.
pub fn run_seed(cfg: &ExperimentConfig, run: u32) -> u64 {
    cfg.seed.wrapping_add(run as u64)
}

pub fn datasets(cfg: &ExperimentConfig, run: u32) -> Result<Datasets> {
    let seed = run_seed(cfg, run);
    let gap = cfg.gap()?;
    match &cfg.dataset {
        DatasetSpec::Patterns { nu, jitter, eval_jitter, eval_repeats, .. } => {
            // streams draw from their own generator so the network init is independent
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_da7a);
            let train = pattern_set(*nu, *jitter, gap, &mut rng)?;
            let test = pattern_set(*nu, 0.0, gap, &mut rng)?;
            let robustness = if *eval_repeats > 0 {
                let sets = (0..*eval_repeats)
                    .map(|_| pattern_set(*nu, *eval_jitter, gap, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                Some(EventStream::concat(&sets, test.num_channels())?)
            } else {
                None
            };
            Ok(Datasets { train, test, robustness })
        }
        DatasetSpec::Iris { train_fraction, .. } => {
            let (train, test) = split_dataset(&iris_dataset(), *train_fraction, seed)?.streams(gap)?;
            Ok(Datasets { train, test, robustness: None })
        }
        DatasetSpec::Files { train, test } => Ok(Datasets {
            train: EventStream::from_text(&std::fs::read_to_string(train)?)?,
            test: EventStream::from_text(&std::fs::read_to_string(test)?)?,
            robustness: None,
        }),
    }
}

/// Accuracy of `net` on `stream` with training frozen, starting from aligned
/// clocks. Leaves weights, thresholds and the training flag as they were.
pub fn run_eval(net: &mut Network, stream: &EventStream) -> Result<f64> {
    let training = net.is_training();
    net.set_training(false);
    net.reset_dynamics();
    net.align_clocks();
    let verdicts = net.play(stream);
    net.reset_dynamics();
    net.set_training(training);
    Ok(accuracy(&verdicts?, stream.num_labeled()))
}

/// Evaluate a stored snapshot on `stream`.
pub fn eval_snapshot(cfg: &NetworkConfig, snap: &Snapshot, stream: &EventStream) -> Result<f64> {
    let mut net = Network::new(cfg, 0)?;
    net.restore(snap)?;
    run_eval(&mut net, stream)
}

/// Replay `train` for `epochs` passes with training on. When `test` is given
/// the test accuracy is sampled every `every` epochs and after the last one.
pub fn run_training(
    cfg: &NetworkConfig,
    seed: u64,
    train: &EventStream,
    epochs: u32,
    test: Option<(&EventStream, u32)>,
) -> Result<(Network, Vec<EpochMetrics>)> {
    let mut net = Network::new(cfg, seed)?;
    net.set_training(true);
    let mut history = Vec::with_capacity(epochs as usize);
    for epoch in 1..=epochs {
        let verdicts = net.play(train)?;
        let test_accuracy = match test {
            Some((stream, every)) if every > 0 && (epoch % every == 0 || epoch == epochs) => {
                Some(run_eval(&mut net, stream)?)
            }
            _ => None,
        };
        history.push(EpochMetrics {
            epoch,
            train_accuracy: accuracy(&verdicts, train.num_labeled()),
            test_accuracy,
        });
    }
    Ok((net, history))
}

/// Train and evaluate run `run` of an experiment on the integer model.
pub fn run_experiment(cfg: &ExperimentConfig, run: u32) -> Result<RunMetrics> {
    let data = datasets(cfg, run)?;
    run_on(cfg, run, &data)
}

fn run_on(cfg: &ExperimentConfig, run: u32, data: &Datasets) -> Result<RunMetrics> {
    let net_cfg = cfg.network()?;
    let seed = run_seed(cfg, run);
    let every = cfg.eval_every.map(|e| (&data.test, e));
    let (mut net, epochs) = run_training(&net_cfg, seed, &data.train, cfg.epochs, every)?;
    let test_accuracy = run_eval(&mut net, &data.test)?;
    let robustness_accuracy = data.robustness.as_ref().map(|r| run_eval(&mut net, r)).transpose()?;
    Ok(RunMetrics {
        run,
        seed,
        epochs,
        test_accuracy,
        robustness_accuracy,
        spikes: net.stats().spikes.clone(),
        dropped: net.stats().dropped.clone(),
        snapshot: net.snapshot(),
    })
}

/// Run every split or seed of the experiment, with the oracle alongside
/// when the config carries oracle settings and `with_oracle` is set.
pub fn sweep(cfg: &ExperimentConfig, with_oracle: bool) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(cfg.runs as usize);
    for run in 0..cfg.runs {
        let data = datasets(cfg, run)?;
        let m = run_on(cfg, run, &data)?;
        let oracle = match (&cfg.oracle, with_oracle) {
            (Some(spec), true) => Some(oracle::oracle_run(cfg, spec, run, &data.train, &data.test)?),
            _ => None,
        };
        rows.push(SweepRow {
            run,
            seed: m.seed,
            hardware: m.test_accuracy,
            robustness: m.robustness_accuracy,
            oracle,
        });
    }
    Ok(SweepReport { name: cfg.name.clone(), rows })
}
