//! Flat text snapshots of trained weights and thresholds.
//!
//! ```text
//! # odesa snapshot v1
//! kind,layer,neuron,synapse,value
//! weight,1,0,0,117
//! threshold,1,0,,40211
//! ```
//! Layers are 1-based, neurons and synapses 0-based.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sim::Layer;

const MAGIC: &str = "# odesa snapshot v1";
const HEADER: &str = "kind,layer,neuron,synapse,value";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSnapshot {
    pub weights: Vec<Vec<u32>>,
    pub thresholds: Vec<u64>,
}

impl LayerSnapshot {
    pub fn capture(layer: &Layer) -> Self {
        Self {
            weights: layer.neurons.iter().map(|n| n.weights().collect()).collect(),
            thresholds: layer.neurons.iter().map(|n| n.threshold).collect(),
        }
    }

    pub fn num_neurons(&self) -> usize {
        self.thresholds.len()
    }

    pub fn num_synapses(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Load into `layer`, checking shape and register widths.
    pub fn restore(&self, layer: &mut Layer) -> Result<()> {
        let p = layer.params();
        if self.num_neurons() != p.num_neurons || self.weights.iter().any(|w| w.len() != p.num_synapses) {
            return Err(Error::Dimension(format!(
                "snapshot layer is {}x{}, L{} is {}x{}",
                self.num_neurons(),
                self.num_synapses(),
                layer.index(),
                p.num_neurons,
                p.num_synapses
            )));
        }
        let (wmax, tmax) = (p.weight_max(), p.threshold_max());
        if self.weights.iter().flatten().any(|&w| w > wmax) || self.thresholds.iter().any(|&t| t > tmax) {
            return Err(Error::data(format!("snapshot value exceeds L{} register width", layer.index())));
        }
        for ((n, ws), &t) in layer.neurons.iter_mut().zip(&self.weights).zip(&self.thresholds) {
            for (syn, &w) in n.synapses.iter_mut().zip(ws) {
                syn.weight = w;
            }
            n.threshold = t;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Snapshot {
    pub layers: Vec<LayerSnapshot>,
}

impl Snapshot {
    pub fn capture<'a>(layers: impl IntoIterator<Item = &'a Layer>) -> Self {
        Self { layers: layers.into_iter().map(LayerSnapshot::capture).collect() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        s.push_str(HEADER);
        s.push('\n');
        for (li, layer) in self.layers.iter().enumerate() {
            for (ni, (ws, t)) in layer.weights.iter().zip(&layer.thresholds).enumerate() {
                for (si, w) in ws.iter().enumerate() {
                    let _ = writeln!(s, "weight,{},{ni},{si},{w}", li + 1);
                }
                let _ = writeln!(s, "threshold,{},{ni},,{t}", li + 1);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut weights: Vec<Vec<Vec<Option<u32>>>> = Vec::new();
        let mut thresholds: Vec<Vec<Option<u64>>> = Vec::new();

        fn slot<T: Clone>(v: &mut Vec<T>, i: usize, fill: T) -> &mut T {
            if v.len() <= i {
                v.resize(i + 1, fill);
            }
            &mut v[i]
        }

        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line == HEADER {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::parse(line_no, "expected kind,layer,neuron,synapse,value"));
            }
            let num = |i: usize| -> Result<usize> {
                fields[i].parse().map_err(|_| Error::parse(line_no, format!("bad index `{}`", fields[i])))
            };
            let layer = num(1)?;
            if layer == 0 {
                return Err(Error::parse(line_no, "layers are numbered from 1"));
            }
            let neuron = num(2)?;
            match fields[0] {
                "weight" => {
                    let syn = num(3)?;
                    let value = fields[4]
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad weight `{}`", fields[4])))?;
                    let l = slot(&mut weights, layer - 1, Vec::new());
                    let n = slot(l, neuron, Vec::new());
                    let cell = slot(n, syn, None);
                    if cell.replace(value).is_some() {
                        return Err(Error::parse(line_no, "duplicate weight entry"));
                    }
                }
                "threshold" => {
                    if !fields[3].is_empty() {
                        return Err(Error::parse(line_no, "threshold rows have an empty synapse field"));
                    }
                    let value = fields[4]
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad threshold `{}`", fields[4])))?;
                    let l = slot(&mut thresholds, layer - 1, Vec::new());
                    let cell = slot(l, neuron, None);
                    if cell.replace(value).is_some() {
                        return Err(Error::parse(line_no, "duplicate threshold entry"));
                    }
                }
                other => return Err(Error::parse(line_no, format!("unknown row kind `{other}`"))),
            }
        }

        if weights.len() != thresholds.len() {
            return Err(Error::data("snapshot layers without both weights and thresholds"));
        }
        let mut layers = Vec::with_capacity(weights.len());
        for (li, (ws, ts)) in weights.into_iter().zip(thresholds).enumerate() {
            let missing = || Error::data(format!("snapshot layer {} has gaps", li + 1));
            if ws.len() != ts.len() {
                return Err(missing());
            }
            let weights = ws
                .into_iter()
                .map(|n| n.into_iter().collect::<Option<Vec<u32>>>())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(missing)?;
            let width = weights.first().map_or(0, Vec::len);
            if width == 0 || weights.iter().any(|w| w.len() != width) {
                return Err(missing());
            }
            let thresholds = ts.into_iter().collect::<Option<Vec<u64>>>().ok_or_else(missing)?;
            layers.push(LayerSnapshot { weights, thresholds });
        }
        Ok(Self { layers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip_is_exact(
            shape in proptest::collection::vec((1usize..5, 1usize..9), 1..4),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let layers = shape
                .iter()
                .map(|&(n, s)| LayerSnapshot {
                    weights: (0..n).map(|_| (0..s).map(|_| rng.gen()).collect()).collect(),
                    thresholds: (0..n).map(|_| rng.gen()).collect(),
                })
                .collect();
            let snap = Snapshot { layers };
            prop_assert_eq!(Snapshot::from_text(&snap.to_text()).unwrap(), snap);
        }
    }

    #[test]
    fn rejects_gaps_and_garbage() {
        let text = "weight,1,0,0,3\nweight,1,0,2,3\nthreshold,1,0,,9\n";
        assert!(Snapshot::from_text(text).is_err());
        assert!(Snapshot::from_text("weight,1,0,0\n").is_err());
        assert!(Snapshot::from_text("bias,1,0,0,1\n").is_err());
        assert!(Snapshot::from_text("weight,0,0,0,1\nthreshold,0,0,,1\n").is_err());
        let dup = "weight,1,0,0,3\nweight,1,0,0,4\nthreshold,1,0,,9\n";
        assert!(Snapshot::from_text(dup).is_err());
    }
}
