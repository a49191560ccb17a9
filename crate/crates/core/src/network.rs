//! Layers and trainers wired together under one global scheduler.
//!
//! Global time advances in input-layer ticks. On every global tick each layer
//! whose clock fires runs its datapath and then its trainer, in layer order.
//! Anything crossing a layer boundary (spikes, GAS, LAS) becomes visible to
//! the receiver strictly after the tick it was produced on.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::EventStream;
use crate::error::{Error, Result};
use crate::sim::trace::{Scope, TraceRecord, TraceSink};
use crate::sim::{Layer, LayerParams, TickReport};
use crate::topology::Topology;
use crate::trainer::{
    init_registers, Classification, GasPulse, LayerTrainer, Role, Snapshot, ThresholdInit,
    TrainerHyperparams, TrainerOutput,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub params: LayerParams,
    pub trainer: TrainerHyperparams,
    pub threshold_init: ThresholdInit,
    /// Upper bound of the initial weight draw; the full register when `None`.
    #[serde(default)]
    pub weight_init_max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub layers: Vec<LayerConfig>,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        if self.layers.len() != t.num_layers() {
            return Err(Error::config(format!(
                "{t} has {} layers but {} layer configs were given",
                t.num_layers(),
                self.layers.len()
            )));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let p = &l.params;
            if p.num_neurons != t.layers[i] || p.num_synapses != t.fan_in(i) {
                return Err(Error::Dimension(format!(
                    "L{} configured as {}x{}, topology {t} needs {}x{}",
                    i + 1,
                    p.num_neurons,
                    p.num_synapses,
                    t.layers[i],
                    t.fan_in(i)
                )));
            }
            p.validate()?;
            l.trainer.validate()?;
        }
        Ok(())
    }

    /// Silence needed after a sample for every trace to decay twice over.
    pub fn default_gap(&self) -> u64 {
        2 * self.layers.iter().map(|l| l.params.decay_time()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NetworkStats {
    pub spikes: Vec<u64>,
    pub dropped: Vec<u64>,
    pub ticks: u64,
}

/// Attention lines seen by each layer's trainer on the last simulated tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayerSignals {
    pub gas: bool,
    pub las: bool,
    pub is_winner: bool,
}

#[derive(Debug, Clone, Copy)]
struct Arrival {
    visible_at: u64,
    channel: usize,
    label: Option<usize>,
}

pub struct Network {
    layers: Vec<Layer>,
    trainers: Vec<LayerTrainer>,
    inboxes: Vec<VecDeque<Arrival>>,
    now: u64,
    stats: NetworkStats,
    classifications: Vec<Classification>,
    signals: Vec<LayerSignals>,
}

impl Network {
    /// Build and initialize: seeded uniform weights, thresholds per `threshold_init`.
    pub fn new(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = config.layers.len();
        let mut layers = Vec::with_capacity(n);
        let mut trainers = Vec::with_capacity(n);
        for (i, lc) in config.layers.iter().enumerate() {
            let mut layer = Layer::new(i + 1, lc.params.clone())?;
            init_registers(&mut layer, &mut rng, lc.threshold_init, lc.weight_init_max);
            let role = if i + 1 == n {
                Role::Output {
                    classes: config.topology.classes,
                    group_size: config.topology.group_size(),
                }
            } else {
                Role::Hidden
            };
            let downstream = config.layers.get(i + 1).map_or(&lc.params, |next| &next.params);
            let trainer = LayerTrainer::new(
                role,
                lc.trainer.clone(),
                &lc.params,
                downstream.accumulator(),
                downstream.clock,
            )?;
            layers.push(layer);
            trainers.push(trainer);
        }
        Ok(Self {
            inboxes: vec![VecDeque::new(); n],
            stats: NetworkStats { spikes: vec![0; n], dropped: vec![0; n], ticks: 0 },
            signals: vec![LayerSignals::default(); n],
            classifications: Vec::new(),
            now: 0,
            layers,
            trainers,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn trainers(&self) -> &[LayerTrainer] {
        &self.trainers
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn stats(&self) -> &NetworkStats {
        &self.stats
    }

    pub fn signals(&self) -> &[LayerSignals] {
        &self.signals
    }

    pub fn num_inputs(&self) -> usize {
        self.layers[0].num_synapses()
    }

    pub fn set_training(&mut self, on: bool) {
        self.trainers.iter_mut().for_each(|t| t.set_frozen(!on));
    }

    pub fn is_training(&self) -> bool {
        self.trainers.iter().all(|t| !t.is_frozen())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(&self.layers)
    }

    pub fn restore(&mut self, snap: &Snapshot) -> Result<()> {
        if snap.layers.len() != self.layers.len() {
            return Err(Error::Dimension(format!(
                "snapshot has {} layers, network has {}",
                snap.layers.len(),
                self.layers.len()
            )));
        }
        for (ls, layer) in snap.layers.iter().zip(&mut self.layers) {
            ls.restore(layer)?;
        }
        Ok(())
    }

    /// Clear traces, latches and in-flight events; keep weights and thresholds.
    pub fn reset_dynamics(&mut self) {
        self.layers.iter_mut().for_each(Layer::reset_dynamics);
        self.trainers.iter_mut().for_each(LayerTrainer::reset_dynamics);
        self.inboxes.iter_mut().for_each(VecDeque::clear);
    }

    /// Let the idle network run until every layer and activity clock is back
    /// at phase zero. Clocks run freely across streams, so a stream played
    /// after this meets the same alignment as on a freshly built network.
    pub fn align_clocks(&mut self) {
        debug_assert!(self.is_idle());
        let aligned = self.now.next_multiple_of(self.clock_period());
        self.fast_forward(self.now, aligned);
        self.stats.ticks += aligned - self.now;
        self.now = aligned;
    }

    fn is_idle(&self) -> bool {
        self.layers.iter().all(Layer::is_idle)
            && self.trainers.iter().all(LayerTrainer::is_idle)
            && self.inboxes.iter().all(VecDeque::is_empty)
    }

    /// Play `stream` starting at the current time, then run until every
    /// pipeline stage is idle. Returns the output-layer verdicts produced.
    pub fn play(&mut self, stream: &EventStream) -> Result<Vec<Classification>> {
        self.play_inner(stream, &mut NullSink, false)
    }

    /// As [`Network::play`], recording every layer tick into `sink`.
    pub fn play_traced(&mut self, stream: &EventStream, sink: &mut dyn TraceSink) -> Result<Vec<Classification>> {
        self.play_inner(stream, sink, true)
    }

    fn play_inner(
        &mut self,
        stream: &EventStream,
        sink: &mut dyn TraceSink,
        tracing: bool,
    ) -> Result<Vec<Classification>> {
        if stream.num_channels() != self.num_inputs() {
            return Err(Error::Dimension(format!(
                "stream has {} channels, L1 has {} synapses",
                stream.num_channels(),
                self.num_inputs()
            )));
        }
        self.classifications.clear();
        let base = self.now;
        let end = base + stream.duration();
        let events = stream.events();
        let mut next_event = 0;
        let mut t = base;
        while t < end || !self.is_idle() {
            while next_event < events.len() && base + events[next_event].tick == t {
                let e = events[next_event];
                self.inboxes[0].push_back(Arrival { visible_at: t, channel: e.channel, label: e.label });
                next_event += 1;
            }
            if !tracing && self.is_idle() {
                let target = events.get(next_event).map_or(end, |e| base + e.tick);
                if target > t {
                    self.fast_forward(t, target);
                    t = target;
                    continue;
                }
            }
            self.step(t, sink, tracing)?;
            t += 1;
        }
        self.stats.ticks += t - base;
        self.now = t;
        sink.flush()?;
        Ok(std::mem::take(&mut self.classifications))
    }

    /// Global ticks after which every layer and activity clock repeats.
    fn clock_period(&self) -> u64 {
        let gcd = |mut a: u64, mut b: u64| {
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a
        };
        let dividers = self.layers.iter().map(|l| l.clock()).chain(self.trainers.iter().map(|t| t.activity_clock()));
        dividers.fold(1, |p, c| {
            let d = c.divider() as u64;
            p / gcd(p, d) * d
        })
    }

    fn fast_forward(&mut self, from: u64, to: u64) {
        for layer in &mut self.layers {
            let n = layer.clock().ticks_in(from, to);
            layer.fast_forward(n);
        }
        for tr in &mut self.trainers {
            let n = tr.activity_clock().ticks_in(from, to);
            tr.fast_forward_activity(n);
        }
    }

    fn step(&mut self, now: u64, sink: &mut dyn TraceSink, tracing: bool) -> Result<()> {
        let n = self.layers.len();
        for s in &mut self.signals {
            *s = LayerSignals::default();
        }
        for i in 0..n {
            if !self.layers[i].clock().ticks_at(now) {
                continue;
            }
            let mut incoming = Vec::new();
            let mut label = None;
            while self.inboxes[i].front().is_some_and(|a| a.visible_at <= now) {
                let a = self.inboxes[i].pop_front().unwrap();
                incoming.push(a.channel);
                label = label.or(a.label);
            }
            let report = self.layers[i].tick(now, &incoming)?;
            if i == 0 && !report.accepted.is_empty() {
                if let Some(l) = label {
                    self.trainers[0].deliver_gas(GasPulse { visible_at: now, label: Some(l) });
                }
            }
            let out = self.trainers[i].on_layer_tick(now, &mut self.layers[i], &report)?;

            if let Some(g) = out.forward_gas {
                if i + 1 < n {
                    self.trainers[i + 1].deliver_gas(g);
                }
            }
            if let Some(c) = out.classification {
                self.classifications.push(c);
            }
            if let Some(e) = report.emitted {
                self.stats.spikes[i] += 1;
                if i + 1 < n {
                    self.inboxes[i + 1].push_back(Arrival { visible_at: now + 1, channel: e.neuron, label: None });
                }
                let masked = self.trainers[i].hyperparams().las_mask_after_gas_only && !out.emission_answers_gas;
                if i > 0 && !masked {
                    let delay = self.layers[i].clock().span(self.trainers[i].hyperparams().las_delay);
                    self.trainers[i - 1].deliver_las(now + delay.max(1));
                }
            }
            self.stats.dropped[i] += report.dropped as u64;
            self.signals[i] = LayerSignals {
                gas: out.gas_latched,
                las: out.las_evaluated,
                is_winner: report.emitted.is_some(),
            };
            if tracing {
                self.record(sink, now, i, &report, &out, label);
            }
        }
        for tr in &mut self.trainers {
            if tr.activity_clock().ticks_at(now) {
                tr.tick_activity(now);
            }
        }
        Ok(())
    }

    fn record(
        &self,
        sink: &mut dyn TraceSink,
        now: u64,
        i: usize,
        report: &TickReport,
        out: &TrainerOutput,
        label: Option<usize>,
    ) {
        let layer_no = i + 1;
        let mut put = |scope, signal: String, value: u64| {
            sink.record(TraceRecord { tick: now, layer: layer_no, scope, signal, value })
        };
        let layer = &self.layers[i];
        let trainer = &self.trainers[i];
        for (s, tr) in layer.traces().enumerate() {
            put(Scope::Internal, format!("s{s}.trace"), tr as u64);
        }
        for (j, neuron) in layer.neurons.iter().enumerate() {
            put(Scope::Internal, format!("n{j}.membrane"), neuron.membrane);
            put(Scope::Internal, format!("n{j}.threshold"), neuron.threshold);
            put(Scope::Internal, format!("n{j}.lv"), neuron.last_value);
            put(Scope::Internal, format!("n{j}.activity"), trainer.activity(j) as u64);
        }
        put(Scope::Internal, "is_event".into(), report.is_event as u64);
        put(Scope::Internal, "sync_busy".into(), layer.synchronizer_busy() as u64);
        put(Scope::Internal, "r_gas".into(), trainer.gas_latched() as u64);
        put(Scope::Internal, "r_is_winner".into(), trainer.winner_latched() as u64);
        if let Some(w) = report.decision {
            put(Scope::Internal, "decision".into(), w as u64);
        }
        for &c in &report.accepted {
            put(Scope::InterLayer, format!("in.c{c}"), 1);
        }
        if i == 0 && !report.accepted.is_empty() {
            if let Some(l) = label {
                put(Scope::InterLayer, "label".into(), l as u64);
            }
        }
        if let Some(e) = report.emitted {
            put(Scope::InterLayer, format!("spike.n{}", e.neuron), 1);
            put(Scope::InterLayer, "is_winner".into(), 1);
        }
        if out.gas_latched {
            put(Scope::InterLayer, "gas".into(), 1);
        }
        if out.las_evaluated {
            put(Scope::InterLayer, "las".into(), 1);
        }
    }
}

struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: TraceRecord) {}
}
