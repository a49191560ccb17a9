//! Per-run metrics and sweep aggregation.

use std::fmt::Write;

use crate::trainer::{Classification, Snapshot};

/// Correct verdicts over labeled samples presented; a sample that produced no
/// verdict or no winner counts as wrong.
pub fn accuracy(verdicts: &[Classification], labeled: usize) -> f64 {
    if labeled == 0 {
        return 0.0;
    }
    verdicts.iter().filter(|c| c.is_correct()).count() as f64 / labeled as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: u32,
    /// Online accuracy while training on this epoch.
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub run: u32,
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    pub test_accuracy: f64,
    /// Accuracy on the perturbed test set, where the dataset defines one.
    pub robustness_accuracy: Option<f64>,
    pub spikes: Vec<u64>,
    pub dropped: Vec<u64>,
    pub snapshot: Snapshot,
}

impl RunMetrics {
    pub fn epochs_csv(&self) -> String {
        let mut s = String::from("epoch,train_accuracy,test_accuracy\n");
        for e in &self.epochs {
            let test = e.test_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            writeln!(s, "{},{:.6},{test}", e.epoch, e.train_accuracy).unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("run {} (seed {}): test accuracy {:.4}", self.run, self.seed, self.test_accuracy);
        if let Some(r) = self.robustness_accuracy {
            write!(s, ", perturbed {r:.4}").unwrap();
        }
        if let Some(e) = self.epochs.last() {
            write!(s, ", final train {:.4}", e.train_accuracy).unwrap();
        }
        let list = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join("/");
        write!(s, ", spikes {}, dropped {}", list(&self.spikes), list(&self.dropped)).unwrap();
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub run: u32,
    pub seed: u64,
    pub hardware: f64,
    pub robustness: Option<f64>,
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub name: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn hardware(&self) -> Stats {
        Stats::of(&self.rows.iter().map(|r| r.hardware).collect::<Vec<_>>())
    }

    pub fn oracle(&self) -> Option<Stats> {
        let v: Vec<f64> = self.rows.iter().filter_map(|r| r.oracle).collect();
        (!v.is_empty()).then(|| Stats::of(&v))
    }

    /// Runs that classified every test sample correctly.
    pub fn perfect_runs(&self) -> usize {
        self.rows.iter().filter(|r| r.hardware == 1.0).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("run,seed,hardware,robustness,oracle\n");
        let opt = |v: Option<f64>| v.map(|a| format!("{a:.6}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(s, "{},{},{:.6},{},{}", r.run, r.seed, r.hardware, opt(r.robustness), opt(r.oracle)).unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let line = |s: &mut String, name: &str, st: Stats| {
            writeln!(
                s,
                "{name:<9} mean {:.4}  std {:.4}  min {:.4}  max {:.4}  (n={})",
                st.mean, st.std, st.min, st.max, st.n
            )
            .unwrap()
        };
        writeln!(s, "{}: {} runs, {} at 100%", self.name, self.rows.len(), self.perfect_runs()).unwrap();
        line(&mut s, "hardware", self.hardware());
        if let Some(o) = self.oracle() {
            line(&mut s, "oracle", o);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_match_hand_computation() {
        let st = Stats::of(&[0.7, 0.8, 0.9]);
        assert!((st.mean - 0.8).abs() < 1e-12);
        assert!((st.std - 0.1).abs() < 1e-12);
        assert_eq!((st.min, st.max), (0.7, 0.9));
        assert_eq!(Stats::of(&[0.5]).std, 0.0);
    }

    #[test]
    fn missing_verdicts_count_as_errors() {
        let c = |label, predicted| Classification { label, predicted, at: 0 };
        let v = [c(0, Some(0)), c(1, None), c(2, Some(1))];
        assert!((accuracy(&v, 4) - 0.25).abs() < 1e-12);
        assert_eq!(accuracy(&[], 0), 0.0);
    }
}
