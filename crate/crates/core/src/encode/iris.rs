//! Latency-coded Iris data.
//!
//! Each of the four measurements becomes the time of a single spike on its
//! own channel inside a 0..=30 tick frame:
//!
//! ```text
//! t1 = ceil(3.8 * ((d1 - 1) / 2 + 4))
//! t2 = ceil(3.8 * ((d2 - 2) / 3 + 2.5))
//! t3 = ceil(3.8 * d3)
//! t4 = ceil(9 * (d4 + 0.5))
//! ```
//! Measurements are kept in millimetres so the ceilings are computed exactly
//! in integer arithmetic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::stream::{EventStream, SpikeEvent};
use crate::error::{Error, Result};

pub const IRIS_CHANNELS: usize = 4;
pub const IRIS_CLASSES: usize = 3;
pub const IRIS_FRAME_MAX: u64 = 30;

const IRIS_CSV: &str = include_str!("../../data/iris.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IrisSample {
    /// Sepal length, sepal width, petal length, petal width in millimetres.
    pub mm: [u32; 4],
    pub class: usize,
}

impl IrisSample {
    pub fn from_cm(cm: [f64; 4], class: usize) -> Self {
        Self { mm: cm.map(|v| (v * 10.0).round() as u32), class }
    }

    /// Encoded spike tick per channel.
    pub fn latencies(&self) -> [u64; 4] {
        let [d1, d2, d3, d4] = self.mm.map(|v| v as u64);
        [
            ceil_div(19 * (d1 + 70), 100),
            ceil_div(38 * (d2 + 55), 300),
            ceil_div(38 * d3, 100),
            ceil_div(9 * (d4 + 5), 10),
        ]
    }
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// The 150 canonical samples (Fisher, 1936), classes 0 = setosa,
/// 1 = versicolor, 2 = virginica.
pub fn iris_dataset() -> Vec<IrisSample> {
    parse_iris_csv(IRIS_CSV).expect("bundled iris.csv is well formed")
}

/// Parse `sepal_length,sepal_width,petal_length,petal_width,class` rows (cm).
pub fn parse_iris_csv(text: &str) -> Result<Vec<IrisSample>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("sepal") || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::parse(no + 1, "expected four measurements and a class"));
        }
        let mut mm = [0u32; 4];
        for (slot, field) in mm.iter_mut().zip(&f[..4]) {
            *slot = parse_mm(field).ok_or_else(|| Error::parse(no + 1, format!("bad measurement `{field}`")))?;
        }
        let class = f[4].parse().map_err(|_| Error::parse(no + 1, format!("bad class `{}`", f[4])))?;
        out.push(IrisSample { mm, class });
    }
    Ok(out)
}

/// `"5.1"` -> 51 without going through floating point.
fn parse_mm(s: &str) -> Option<u32> {
    let (whole, frac) = s.split_once('.').unwrap_or((s, "0"));
    if frac.len() != 1 {
        return None;
    }
    Some(whole.parse::<u32>().ok()? * 10 + frac.parse::<u32>().ok()?)
}

/// One sample as a 4-channel frame lasting `IRIS_FRAME_MAX + 1` ticks. The label
/// rides on the latest spike; on a tie, on the highest channel.
pub fn encode_iris(sample: &IrisSample) -> Result<EventStream> {
    let ticks = sample.latencies();
    if let Some((ch, &t)) = ticks.iter().enumerate().find(|(_, &t)| t > IRIS_FRAME_MAX) {
        return Err(Error::data(format!(
            "feature {} of sample {:?} encodes to tick {t}, outside [0, {IRIS_FRAME_MAX}]",
            ch + 1,
            sample.mm
        )));
    }
    let last = (0..IRIS_CHANNELS).max_by_key(|&c| (ticks[c], c)).unwrap();
    let events = (0..IRIS_CHANNELS)
        .map(|c| {
            if c == last {
                SpikeEvent::labeled(ticks[c], c, sample.class)
            } else {
                SpikeEvent::new(ticks[c], c)
            }
        })
        .collect();
    EventStream::new(events, IRIS_CHANNELS, IRIS_FRAME_MAX + 1)
}

/// Samples played back to back, each frame followed by `gap` silent ticks.
pub fn iris_stream(samples: &[IrisSample], gap: u64) -> Result<EventStream> {
    let mut out = EventStream::empty(IRIS_CHANNELS, 0);
    for s in samples {
        let mut frame = encode_iris(s)?;
        frame.pad(gap);
        out.append(&frame)?;
    }
    Ok(out)
}

/// A seeded random train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<IrisSample>,
    pub test: Vec<IrisSample>,
}

impl Split {
    pub fn streams(&self, gap: u64) -> Result<(EventStream, EventStream)> {
        Ok((iris_stream(&self.train, gap)?, iris_stream(&self.test, gap)?))
    }
}

/// Shuffle with `seed` and take `round(n * train_fraction)` samples for training.
pub fn split_dataset(samples: &[IrisSample], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::data(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (samples.len() as f64 * train_fraction).round() as usize;
    let (a, b) = order.split_at(n_train);
    Ok(Split {
        train: a.iter().map(|&i| samples[i]).collect(),
        test: b.iter().map(|&i| samples[i]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(cm: [f64; 4]) -> IrisSample {
        IrisSample::from_cm(cm, 0)
    }

    #[test]
    fn encodes_documented_values() {
        let t = sample([5.1, 3.5, 1.4, 0.2]).latencies();
        assert_eq!(t, [23, 12, 6, 7]);
    }

    #[test]
    fn exact_integer_boundaries() {
        // 3.8 * 5.0 = 19 exactly; float would give 18.999.. or 19.000..1
        assert_eq!(sample([5.0, 2.0, 5.0, 0.5]).latencies()[2], 19);
        assert_eq!(sample([5.0, 2.0, 5.0, 0.5]).latencies()[3], 9);
        assert_eq!(sample([5.0, 2.0, 5.0, 1.5]).latencies()[3], 18);
    }

    #[test]
    fn canonical_data_shape() {
        let data = iris_dataset();
        assert_eq!(data.len(), 150);
        for c in 0..3 {
            assert_eq!(data.iter().filter(|s| s.class == c).count(), 50);
        }
        // Fisher's values for samples 35 and 38 (the UCI copy differs)
        assert_eq!(data[34].mm, [49, 31, 15, 2]);
        assert_eq!(data[37].mm, [49, 36, 14, 1]);
    }

    #[test]
    fn all_samples_inside_frame() {
        for s in iris_dataset() {
            let frame = encode_iris(&s).unwrap();
            assert!(frame.events().iter().all(|e| e.tick <= IRIS_FRAME_MAX));
            assert_eq!(frame.num_labeled(), 1);
        }
    }

    #[test]
    fn out_of_frame_is_an_error() {
        assert!(matches!(encode_iris(&sample([5.0, 3.0, 9.0, 0.2])), Err(Error::Data(_))));
    }

    #[test]
    fn label_on_latest_spike_highest_channel_on_tie() {
        // petal length and width both encode to tick 27
        let s = IrisSample::from_cm([5.0, 3.0, 7.1, 2.5], 2);
        assert_eq!(s.latencies()[2], 27);
        assert_eq!(s.latencies()[3], 27);
        let f = encode_iris(&s).unwrap();
        let labeled: Vec<_> = f.events().iter().filter(|e| e.label.is_some()).collect();
        assert_eq!(labeled.len(), 1);
        assert_eq!(labeled[0].channel, 3);
    }

    #[test]
    fn encoding_is_monotone_per_feature() {
        for ch in 0..4 {
            let mut prev = 0;
            for mm in 1..=79 {
                let mut s = IrisSample { mm: [50, 30, 10, 2], class: 0 };
                s.mm[ch] = mm;
                let t = s.latencies()[ch];
                assert!(t >= prev);
                prev = t;
            }
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let data = iris_dataset();
        let a = split_dataset(&data, 0.3, 11).unwrap();
        assert_eq!((a.train.len(), a.test.len()), (45, 105));
        assert_eq!(a, split_dataset(&data, 0.3, 11).unwrap());
        assert_ne!(a, split_dataset(&data, 0.3, 12).unwrap());
        assert!(split_dataset(&data, 1.0, 1).is_err());
        assert!(split_dataset(&data, 0.0, 1).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        // every sample index lands on exactly one side
        let data: Vec<IrisSample> =
            (0..150).map(|i| IrisSample { mm: [i, 0, 0, 0], class: 0 }).collect();
        let s = split_dataset(&data, 0.3, 5).unwrap();
        let mut all: Vec<u32> = s.train.iter().chain(&s.test).map(|x| x.mm[0]).collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
    }
}
