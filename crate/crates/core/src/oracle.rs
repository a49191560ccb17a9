//! Floating-point reference model.
//!
//! Same layer structure and training control flow as the integer model, but
//! with exponential time surfaces, unit-norm weight vectors and thresholds in
//! `[0, 1]`. Events are processed one at a time with no pipeline latency: a
//! layer's spike is handed to the next layer at the same timestamp.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encode::EventStream;
use crate::error::{Error, Result};
use crate::harness::{accuracy, ExperimentConfig, OracleSpec};
use crate::network::Network;
use crate::topology::{parse_topology, Topology};
use crate::trainer::Classification;

/// Ties within this margin go to the lower index.
pub const TIE_EPSILON: f64 = 1e-12;
/// Slack allowed on the `[0, 1]` bound of the normalized dot product.
pub const DOT_EPSILON: f64 = 1e-9;

pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Winner among neurons whose score clears their threshold: highest score,
/// lowest index on ties.
pub fn float_wta(scores: &[f64], thresholds: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&s, &t)) in scores.iter().zip(thresholds).enumerate() {
        if s <= 0.0 || s < t {
            continue;
        }
        if best.map_or(true, |(_, b)| s > b + TIE_EPSILON) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

#[derive(Debug, Clone)]
pub struct FloatLayer {
    pub weights: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    /// Time-surface decay constant, in input ticks.
    pub tau: f64,
    pub eta_w: f64,
    pub eta_t: f64,
    pub delta_t: f64,
    last_input: Vec<Option<f64>>,
    /// Normalized time surface latched at each neuron's last win.
    ts: Vec<Vec<f64>>,
    /// Score latched at each neuron's last win.
    last_value: Vec<f64>,
    /// Time surface of the last attended event that found no winner.
    no_winner: Vec<bool>,
    last_spike: Vec<Option<f64>>,
}

impl FloatLayer {
    pub fn new<R: Rng>(neurons: usize, synapses: usize, tau: f64, rng: &mut R) -> Self {
        let weights = (0..neurons)
            .map(|_| {
                let mut w: Vec<f64> = (0..synapses).map(|_| rng.gen::<f64>()).collect();
                normalize(&mut w);
                w
            })
            .collect();
        Self {
            weights,
            thresholds: vec![0.0; neurons],
            tau,
            eta_w: 0.0,
            eta_t: 0.0,
            delta_t: 0.0,
            last_input: vec![None; synapses],
            ts: vec![vec![0.0; synapses]; neurons],
            last_value: vec![0.0; neurons],
            no_winner: vec![false; neurons],
            last_spike: vec![None; neurons],
        }
    }

    pub fn num_neurons(&self) -> usize {
        self.weights.len()
    }

    pub fn num_synapses(&self) -> usize {
        self.last_input.len()
    }

    /// Normalized time surface at `t` after an event on `channel`.
    fn surface(&mut self, t: f64, channel: usize) -> Vec<f64> {
        self.last_input[channel] = Some(t);
        let mut s: Vec<f64> = self
            .last_input
            .iter()
            .map(|l| l.map_or(0.0, |l| (-(t - l) / self.tau).exp()))
            .collect();
        normalize(&mut s);
        s
    }

    pub fn scores(&self, surface: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| dot(w, surface)).collect()
    }

    /// Winner for a given normalized time surface, without side effects.
    pub fn probe(&self, surface: &[f64]) -> Option<usize> {
        float_wta(&self.scores(surface), &self.thresholds)
    }

    /// `exp(-dt / tau_next)` since `neuron` last fired.
    fn activity(&self, neuron: usize, t: f64, tau_next: f64) -> f64 {
        self.last_spike[neuron].map_or(0.0, |l| (-(t - l) / tau_next).exp())
    }

    fn reward(&mut self, j: usize) {
        let (w, ts) = (&mut self.weights[j], &self.ts[j]);
        for (wi, &si) in w.iter_mut().zip(ts) {
            *wi += self.eta_w * (si - *wi);
        }
        normalize(w);
        self.thresholds[j] += self.eta_t * (self.last_value[j] - self.thresholds[j]);
    }

    fn punish(&mut self, j: usize) {
        self.thresholds[j] = (self.thresholds[j] - self.delta_t).max(0.0);
    }

    fn negative_update(&mut self, j: usize) {
        let (w, ts) = (&mut self.weights[j], &self.ts[j]);
        for (wi, &si) in w.iter_mut().zip(ts) {
            *wi = (*wi - self.eta_w * (si - *wi)).max(0.0);
        }
        normalize(w);
    }

    fn reset_dynamics(&mut self) {
        self.last_input.iter_mut().for_each(|l| *l = None);
        self.last_spike.iter_mut().for_each(|l| *l = None);
        self.no_winner.iter_mut().for_each(|n| *n = false);
    }
}

#[derive(Debug, Clone)]
pub struct FloatNetwork {
    pub topology: Topology,
    pub layers: Vec<FloatLayer>,
    pub activity_floor: f64,
    pub las_mask_after_gas_only: bool,
    training: bool,
    /// Start of the next played stream, in ticks.
    now: f64,
}

impl FloatNetwork {
    pub fn new(topology: Topology, spec: &OracleSpec, seed: u64) -> Result<Self> {
        let n = topology.num_layers();
        for (name, v) in [
            ("tau", &spec.tau),
            ("eta_w", &spec.eta_w),
            ("eta_t", &spec.eta_t),
            ("delta_t", &spec.delta_t),
            ("threshold_init", &spec.threshold_init),
        ] {
            if v.len() != n {
                return Err(Error::config(format!("oracle {name} needs {n} values, got {}", v.len())));
            }
        }
        if spec.tau.iter().any(|&t| t <= 0.0) {
            return Err(Error::config("oracle tau must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..n)
            .map(|i| {
                let mut l = FloatLayer::new(topology.layers[i], topology.fan_in(i), spec.tau[i], &mut rng);
                l.eta_w = spec.eta_w[i];
                l.eta_t = spec.eta_t[i];
                l.delta_t = spec.delta_t[i];
                l.thresholds.iter_mut().for_each(|t| *t = spec.threshold_init[i]);
                l
            })
            .collect();
        Ok(Self {
            topology,
            layers,
            activity_floor: spec.activity_floor,
            las_mask_after_gas_only: spec.las_mask_after_gas_only,
            training: true,
            now: 0.0,
        })
    }

    /// Float copy of an integer network: each weight vector normalized,
    /// thresholds at zero, time constants `taus`.
    pub fn from_integer(net: &Network, classes: usize, taus: &[f64]) -> Result<Self> {
        let layers = net.layers();
        if taus.len() != layers.len() {
            return Err(Error::config("one tau per layer required"));
        }
        let topology = Topology {
            inputs: net.num_inputs(),
            layers: layers.iter().map(|l| l.num_neurons()).collect(),
            classes,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layers = layers
            .iter()
            .zip(taus)
            .map(|(l, &tau)| {
                let mut fl = FloatLayer::new(l.num_neurons(), l.num_synapses(), tau, &mut rng);
                for (fw, n) in fl.weights.iter_mut().zip(&l.neurons) {
                    *fw = n.weights().map(f64::from).collect();
                    normalize(fw);
                }
                fl
            })
            .collect();
        Ok(Self { topology, layers, activity_floor: 0.0, las_mask_after_gas_only: false, training: false, now: 0.0 })
    }

    pub fn set_training(&mut self, on: bool) {
        self.training = on;
    }

    pub fn reset_dynamics(&mut self) {
        self.layers.iter_mut().for_each(FloatLayer::reset_dynamics);
    }

    /// Play a stream, returning the output layer's verdicts on labeled events.
    pub fn play(&mut self, stream: &EventStream) -> Result<Vec<Classification>> {
        if stream.num_channels() != self.topology.inputs {
            return Err(Error::Dimension(format!(
                "stream has {} channels, oracle expects {}",
                stream.num_channels(),
                self.topology.inputs
            )));
        }
        let mut verdicts = Vec::new();
        for e in stream.events() {
            let t = self.now + e.tick as f64;
            if let Some(c) = self.event(0, t, e.channel, e.label)? {
                verdicts.push(c);
            }
        }
        self.now += stream.duration() as f64;
        Ok(verdicts)
    }

    /// Feed one event to layer `i`; returns the verdict of the output layer
    /// if the event reaches it with a label.
    fn event(&mut self, i: usize, t: f64, channel: usize, label: Option<usize>) -> Result<Option<Classification>> {
        let last = i + 1 == self.layers.len();
        let train = self.training;
        let layer = &mut self.layers[i];
        let surface = layer.surface(t, channel);
        let scores = layer.scores(&surface);
        let winner = float_wta(&scores, &layer.thresholds);
        if let Some(w) = winner {
            layer.ts[w] = surface.clone();
            layer.last_value[w] = scores[w];
        }

        if last {
            let Some(label) = label else {
                if winner.is_some() && !self.las_mask_after_gas_only {
                    self.las(i, t);
                }
                return Ok(None);
            };
            let classes = self.topology.classes;
            if label >= classes {
                return Err(Error::data(format!("label {label} out of range for {classes} classes")));
            }
            let group_size = self.topology.group_size();
            let group = label * group_size..(label + 1) * group_size;
            let layer = &mut self.layers[i];
            if train {
                match winner {
                    Some(w) if group.contains(&w) => layer.reward(w),
                    Some(w) => {
                        layer.negative_update(w);
                        group.clone().for_each(|j| layer.punish(j));
                    }
                    None => group.clone().for_each(|j| layer.punish(j)),
                }
            }
            if winner.is_some() {
                self.las(i, t);
            }
            return Ok(Some(Classification { label, predicted: winner.map(|w| w / group_size), at: t as u64 }));
        }

        if train && label.is_some() {
            match winner {
                Some(w) => layer.reward(w),
                None => {
                    for j in 0..layer.num_neurons() {
                        layer.punish(j);
                        layer.no_winner[j] = true;
                    }
                }
            }
        }
        match winner {
            Some(w) => {
                self.layers[i].last_spike[w] = Some(t);
                self.event(i + 1, t, w, label)
            }
            None => Ok(None),
        }
    }

    /// LAS from layer `from` to the layer below.
    fn las(&mut self, from: usize, t: f64) {
        if from == 0 || !self.training {
            return;
        }
        let tau_next = self.layers[from].tau;
        let floor = self.activity_floor;
        let layer = &mut self.layers[from - 1];
        for j in 0..layer.num_neurons() {
            if layer.activity(j, t, tau_next) > floor {
                layer.reward(j);
            } else if layer.no_winner[j] {
                layer.punish(j);
            }
        }
        layer.no_winner.iter_mut().for_each(|n| *n = false);
    }
}

/// Train the oracle on `train` and return its accuracy on `test`.
pub fn oracle_run(
    cfg: &ExperimentConfig,
    spec: &OracleSpec,
    run: u32,
    train: &EventStream,
    test: &EventStream,
) -> Result<f64> {
    let topology = parse_topology(&cfg.topology)?;
    let mut net = FloatNetwork::new(topology, spec, crate::harness::run_seed(cfg, run))?;
    net.set_training(true);
    for _ in 0..spec.epochs.unwrap_or(cfg.epochs) {
        net.play(train)?;
    }
    net.set_training(false);
    net.reset_dynamics();
    let verdicts = net.play(test)?;
    Ok(accuracy(&verdicts, test.num_labeled()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Layer, LayerParams, Neuron, Synapse};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let mut v = v;
        normalize(&mut v);
        v
    }

    fn integer_winner(weights: &[Vec<u32>], channel: usize) -> Option<usize> {
        let params = LayerParams::new(weights.len(), weights[0].len(), 6, 8);
        let mut layer = Layer::new(0, params.clone()).unwrap();
        for (n, w) in layer.neurons.iter_mut().zip(weights) {
            let synapses = w.iter().map(|&w| Synapse::new(params.accumulator(), w)).collect();
            *n = Neuron::new(synapses, 0);
        }
        (0..8u64)
            .find_map(|now| {
                let incoming = if now == 0 { vec![channel] } else { vec![] };
                layer.tick(now, &incoming).unwrap().decision
            })
    }

    #[test]
    fn wta_prefers_lowest_index_on_ties() {
        assert_eq!(float_wta(&[0.5, 0.5, 0.2], &[0.0; 3]), Some(0));
        assert_eq!(float_wta(&[0.5, 0.6, 0.2], &[0.0, 0.7, 0.0]), Some(0));
        assert_eq!(float_wta(&[0.5, 0.6], &[0.9, 0.9]), None);
        assert_eq!(float_wta(&[0.0, 0.0], &[0.0, 0.0]), None);
    }

    #[test]
    fn surfaces_are_unit_norm_and_decay_exponentially() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = FloatLayer::new(1, 2, 10.0, &mut rng);
        l.surface(0.0, 0);
        let s = l.surface(10.0, 1);
        let ratio = s[0] / s[1];
        assert!((ratio - (-1.0f64).exp()).abs() < 1e-12);
        assert!((dot(&s, &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_event_argmax_matches_the_integer_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut compared = 0;
        for _ in 0..2000 {
            let (neurons, synapses) = (rng.gen_range(2..7), rng.gen_range(2..9));
            // equal-norm rows: each neuron holds a permutation of the same weights
            let base: Vec<u32> = (0..synapses).map(|_| rng.gen_range(0..256)).collect();
            let weights: Vec<Vec<u32>> = (0..neurons)
                .map(|_| {
                    let mut w = base.clone();
                    w.shuffle(&mut rng);
                    w
                })
                .collect();
            let channel = rng.gen_range(0..synapses);
            let mut float = FloatLayer::new(neurons, synapses, 10.0, &mut rng);
            float.weights = weights.iter().map(|w| unit(w.iter().map(|&x| x as f64).collect())).collect();
            let surface = float.surface(0.0, channel);
            if let (Some(a), Some(b)) = (integer_winner(&weights, channel), float.probe(&surface)) {
                assert_eq!(a, b, "weights {weights:?}, channel {channel}");
                compared += 1;
            }
        }
        assert!(compared > 1000);
    }

    #[test]
    fn updates_keep_weights_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut l = FloatLayer::new(3, 4, 5.0, &mut rng);
        l.eta_w = 0.3;
        l.delta_t = 0.5;
        for step in 0..200 {
            let s = l.surface(step as f64, step % 4);
            l.ts[step % 3] = s;
            match step % 3 {
                0 => l.reward(step % 3),
                1 => l.negative_update(step % 3),
                _ => l.punish(step % 3),
            }
            for w in &l.weights {
                assert!((dot(w, w) - 1.0).abs() < 1e-9);
                assert!(w.iter().all(|&x| x >= 0.0));
            }
            assert!(l.thresholds.iter().all(|&t| (0.0..=1.0).contains(&t)));
        }
    }

    #[test]
    fn learns_the_four_patterns() {
        let cfg = ExperimentConfig::experiment1();
        let spec = cfg.oracle.clone().unwrap();
        let data = crate::harness::datasets(&cfg, 0).unwrap();
        let acc = oracle_run(&cfg, &spec, 0, &data.train, &data.test).unwrap();
        assert_eq!(acc, 1.0);
    }

    proptest! {
        #[test]
        fn dot_of_unit_vectors_is_bounded(
            a in prop::collection::vec(0.0f64..1e6, 1..32),
            b in prop::collection::vec(0.0f64..1e6, 1..32),
        ) {
            let n = a.len().min(b.len());
            let (a, b) = (unit(a[..n].to_vec()), unit(b[..n].to_vec()));
            let d = dot(&a, &b);
            prop_assert!(d >= 0.0 && d <= 1.0 + DOT_EPSILON);
        }

        #[test]
        fn wta_winner_clears_its_threshold(
            scores in prop::collection::vec(0.0f64..1.0, 1..16),
            t in 0.0f64..1.0,
        ) {
            let thresholds = vec![t; scores.len()];
            match float_wta(&scores, &thresholds) {
                Some(w) => {
                    prop_assert!(scores[w] >= t && scores[w] > 0.0);
                    prop_assert!(scores.iter().all(|&s| s <= scores[w] + TIE_EPSILON));
                    prop_assert!(scores[..w].iter().all(|&s| s < t || s <= 0.0 || s + TIE_EPSILON < scores[w]));
                }
                None => prop_assert!(scores.iter().all(|&s| s < t || s <= 0.0)),
            }
        }
    }
}
