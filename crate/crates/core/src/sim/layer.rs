//! One ODESA layer: synchronizer, synapses, neurons, comparator and spike
//! generator, clocked by its own [`ClockDomain`].

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::accumulator::{full_scale, DecayMode, LeakyAccumulator, MAX_TRACE_WIDTH};
use super::clock::ClockDomain;
use super::neuron::{gate, membrane_width, Neuron, Synapse};
use crate::error::{Error, Result};

pub const DEFAULT_SYNC_CLEAR: u32 = 3;
pub const DEFAULT_SPIKE_WINDOW: u32 = 4;
pub const DEFAULT_OUTPUT_LATENCY: u32 = 3;
pub const MAX_WEIGHT_WIDTH: u8 = 16;
pub const MAX_THRESHOLD_WIDTH: u8 = 62;

/// Static description of a layer's datapath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub num_neurons: usize,
    pub num_synapses: usize,
    pub clock: ClockDomain,
    pub trace_width: u8,
    pub decay_constant: u32,
    pub decay_mode: DecayMode,
    pub weight_width: u8,
    pub threshold_width: u8,
    /// Domain ticks the synchronizer stays closed after accepting an event.
    pub sync_clear: u32,
    /// Domain ticks the spike generator accepts a comparator result after an event.
    pub spike_window: u32,
    /// Domain ticks from the comparator decision to the spike at the layer output.
    pub output_latency: u32,
    /// When the winner's LV and TS registers are captured.
    #[serde(default)]
    pub latch: LatchPoint,
    #[serde(default)]
    pub sync_scope: SyncScope,
}

/// What one synchronizer guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncScope {
    /// One synchronizer for the whole layer: while it is closed, events on
    /// every channel are dropped.
    #[default]
    Layer,
    /// One per synapse, cleared by that synapse's own accumulator; only a
    /// repeat on the same channel is dropped.
    Synapse,
}

/// Instant at which a win is latched into LV and TS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatchPoint {
    /// The comparator tick that picked the winner: LV is the gated membrane.
    #[default]
    Decision,
    /// The tick the spike leaves the layer (IS_WINNER): LV is the adder
    /// output and TS the traces on that tick.
    Emission,
}

impl LayerParams {
    /// Parameters with the datapath defaults and a threshold register of
    /// `2 * weight_width + 8` bits.
    pub fn new(num_neurons: usize, num_synapses: usize, trace_width: u8, weight_width: u8) -> Self {
        Self {
            num_neurons,
            num_synapses,
            clock: ClockDomain::default(),
            trace_width,
            decay_constant: full_scale(trace_width.clamp(1, MAX_TRACE_WIDTH)),
            decay_mode: DecayMode::Linear,
            weight_width,
            threshold_width: 2 * weight_width + 8,
            sync_clear: DEFAULT_SYNC_CLEAR,
            spike_window: DEFAULT_SPIKE_WINDOW,
            output_latency: DEFAULT_OUTPUT_LATENCY,
            latch: LatchPoint::Decision,
            sync_scope: SyncScope::Layer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_neurons == 0 || self.num_synapses == 0 {
            return Err(Error::config("a layer needs at least one neuron and one synapse"));
        }
        LeakyAccumulator::new(self.trace_width, self.decay_constant, self.decay_mode)?;
        if self.weight_width == 0 || self.weight_width > MAX_WEIGHT_WIDTH {
            return Err(Error::config(format!(
                "weight width {} outside 1..={MAX_WEIGHT_WIDTH}",
                self.weight_width
            )));
        }
        if self.threshold_width == 0 || self.threshold_width > MAX_THRESHOLD_WIDTH {
            return Err(Error::config(format!(
                "threshold width {} outside 1..={MAX_THRESHOLD_WIDTH}",
                self.threshold_width
            )));
        }
        if membrane_width(self.weight_width, self.trace_width, self.num_synapses) > 63 {
            return Err(Error::config("membrane adder would exceed 63 bits"));
        }
        if self.spike_window == 0 {
            return Err(Error::config("spike window must be at least one tick"));
        }
        Ok(())
    }

    pub fn weight_max(&self) -> u32 {
        full_scale(self.weight_width)
    }

    pub fn threshold_max(&self) -> u64 {
        (1u64 << self.threshold_width) - 1
    }

    pub fn trace_full_scale(&self) -> u32 {
        full_scale(self.trace_width)
    }

    /// Largest membrane the adder can produce.
    pub fn membrane_max(&self) -> u64 {
        self.num_synapses as u64 * self.weight_max() as u64 * self.trace_full_scale() as u64
    }

    pub fn accumulator(&self) -> LeakyAccumulator {
        LeakyAccumulator::new(self.trace_width, self.decay_constant, self.decay_mode)
            .expect("validated layer parameters")
    }

    /// Global ticks a lone trace needs to decay to zero.
    pub fn decay_time(&self) -> u64 {
        let ticks = match self.decay_mode {
            DecayMode::Linear => self.trace_full_scale() as u64,
            DecayMode::Exponential => self.trace_width as u64,
        };
        self.clock.span(1) * ticks
    }
}

/// Input synchronizer. Once it accepts an event it ignores new ones until the
/// accumulator's clear arrives `clear_after` domain ticks later.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synchronizer {
    clear_after: u32,
    countdown: u32,
}

impl Synchronizer {
    pub fn new(clear_after: u32) -> Self {
        Self { clear_after, countdown: 0 }
    }

    pub fn is_busy(&self) -> bool {
        self.countdown > 0
    }

    /// Returns `true` if the events of this tick are accepted.
    pub fn capture(&mut self, has_input: bool) -> bool {
        if !has_input || self.is_busy() {
            return false;
        }
        self.countdown = self.clear_after;
        true
    }

    pub fn end_tick(&mut self) {
        self.countdown = self.countdown.saturating_sub(1);
    }
}

/// Spike generator: lets a comparator result through only within
/// `window` domain ticks of an accepted input event, once per event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeGenerator {
    window: u32,
    remaining: u32,
}

impl SpikeGenerator {
    pub fn new(window: u32) -> Self {
        Self { window, remaining: 0 }
    }

    /// `IS_EVENT`.
    pub fn is_event(&self) -> bool {
        self.remaining > 0
    }

    pub fn arm(&mut self) {
        self.remaining = self.window;
    }

    pub fn disarm(&mut self) {
        self.remaining = 0;
    }

    pub fn end_tick(&mut self) {
        self.remaining = self.remaining.saturating_sub(1);
    }
}

/// Comparator with priority encoder: lowest index attaining the maximum, if
/// that maximum is positive and `IS_EVENT` is active.
pub fn wta_select(gated: &[u64], is_event: bool) -> Option<usize> {
    if !is_event {
        return None;
    }
    let mut best: Option<(usize, u64)> = None;
    for (i, &g) in gated.iter().enumerate() {
        if g > best.map_or(0, |(_, v)| v) {
            best = Some((i, g));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PendingSpike {
    neuron: usize,
    decided_at: u64,
    remaining: u32,
}

/// A spike leaving the layer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub neuron: usize,
    /// Global tick of the comparator decision that produced it.
    pub decided_at: u64,
}

/// Everything observable about one domain tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickReport {
    pub accepted: Vec<usize>,
    pub dropped: usize,
    pub is_event: bool,
    pub decision: Option<usize>,
    pub emitted: Option<Emission>,
}

#[derive(Debug, Clone)]
pub struct Layer {
    index: usize,
    params: LayerParams,
    pub neurons: Vec<Neuron>,
    synchronizers: Vec<Synchronizer>,
    spike_generator: SpikeGenerator,
    pending: VecDeque<PendingSpike>,
    spike_mask: Vec<bool>,
    gated: Vec<u64>,
    dropped_events: u64,
}

impl Layer {
    /// A layer with all registers zeroed. `index` is the 1-based level.
    pub fn new(index: usize, params: LayerParams) -> Result<Self> {
        params.validate()?;
        let acc = params.accumulator();
        let neurons = (0..params.num_neurons)
            .map(|_| {
                let syn = (0..params.num_synapses).map(|_| Synapse::new(acc.clone(), 0)).collect();
                Neuron::new(syn, 0)
            })
            .collect();
        Ok(Self {
            index,
            synchronizers: Self::synchronizers(&params),
            spike_generator: SpikeGenerator::new(params.spike_window),
            pending: VecDeque::new(),
            spike_mask: vec![false; params.num_synapses],
            gated: vec![0; params.num_neurons],
            dropped_events: 0,
            neurons,
            params,
        })
    }

    fn synchronizers(params: &LayerParams) -> Vec<Synchronizer> {
        let n = match params.sync_scope {
            SyncScope::Layer => 1,
            SyncScope::Synapse => params.num_synapses,
        };
        vec![Synchronizer::new(params.sync_clear); n]
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn params(&self) -> &LayerParams {
        &self.params
    }

    pub fn clock(&self) -> ClockDomain {
        self.params.clock
    }

    pub fn num_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn num_synapses(&self) -> usize {
        self.params.num_synapses
    }

    pub fn dropped_events(&self) -> u64 {
        self.dropped_events
    }

    /// Any synchronizer of the layer closed.
    pub fn synchronizer_busy(&self) -> bool {
        self.synchronizers.iter().any(Synchronizer::is_busy)
    }

    pub fn is_event(&self) -> bool {
        self.spike_generator.is_event()
    }

    /// Gated membranes computed on the last tick.
    pub fn gated(&self) -> &[u64] {
        &self.gated
    }

    /// Synapse traces; identical for every neuron since inputs are shared.
    pub fn traces(&self) -> impl Iterator<Item = u32> + '_ {
        self.neurons[0].traces()
    }

    /// Present this tick's input channels to the synchronizer.
    pub fn synchronizer_capture(&mut self, incoming: &[usize]) -> Result<Vec<usize>> {
        if let Some(&bad) = incoming.iter().find(|&&c| c >= self.params.num_synapses) {
            return Err(Error::config(format!(
                "channel {bad} out of range for layer L{} with {} synapses",
                self.index, self.params.num_synapses
            )));
        }
        let mut channels = incoming.to_vec();
        channels.sort_unstable();
        channels.dedup();
        let before = channels.len();
        match self.params.sync_scope {
            SyncScope::Layer => {
                if !self.synchronizers[0].capture(!channels.is_empty()) {
                    channels.clear();
                }
            }
            SyncScope::Synapse => channels.retain(|&c| self.synchronizers[c].capture(true)),
        }
        self.dropped_events += (before - channels.len()) as u64;
        Ok(channels)
    }

    /// Run one domain tick at global time `now`.
    pub fn tick(&mut self, now: u64, incoming: &[usize]) -> Result<TickReport> {
        let requested = {
            let mut c = incoming.to_vec();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        let accepted = self.synchronizer_capture(incoming)?;
        let dropped = requested - accepted.len();

        self.spike_mask.iter_mut().for_each(|m| *m = false);
        for &c in &accepted {
            self.spike_mask[c] = true;
        }
        for neuron in &mut self.neurons {
            for (syn, &spike) in neuron.synapses.iter_mut().zip(&self.spike_mask) {
                syn.accumulator.tick(spike);
            }
        }
        if !accepted.is_empty() {
            self.spike_generator.arm();
        }

        for (g, neuron) in self.gated.iter_mut().zip(&mut self.neurons) {
            neuron.membrane = neuron.compute_membrane();
            *g = gate(neuron.membrane, neuron.threshold);
        }

        let is_event = self.spike_generator.is_event();
        let decision = wta_select(&self.gated, is_event);
        if let Some(w) = decision {
            if self.params.latch == LatchPoint::Decision {
                self.neurons[w].last_value = self.gated[w];
            }
            self.spike_generator.disarm();
            self.pending.push_back(PendingSpike {
                neuron: w,
                decided_at: now,
                remaining: self.params.output_latency,
            });
        }

        let emitted = match self.pending.front() {
            Some(p) if p.remaining == 0 => {
                let p = self.pending.pop_front().unwrap();
                if self.params.latch == LatchPoint::Emission {
                    let n = &mut self.neurons[p.neuron];
                    n.last_value = n.membrane;
                }
                Some(Emission { neuron: p.neuron, decided_at: p.decided_at })
            }
            _ => None,
        };

        self.synchronizers.iter_mut().for_each(Synchronizer::end_tick);
        self.spike_generator.end_tick();
        for p in &mut self.pending {
            p.remaining = p.remaining.saturating_sub(1);
        }

        Ok(TickReport { accepted, dropped, is_event, decision, emitted })
    }

    /// True when nothing but trace decay can change the layer's state.
    pub fn is_idle(&self) -> bool {
        !self.synchronizer_busy() && !self.spike_generator.is_event() && self.pending.is_empty()
    }

    pub fn traces_zero(&self) -> bool {
        self.neurons.iter().all(|n| n.synapses.iter().all(|s| s.accumulator.is_zero()))
    }

    /// Skip `n` idle domain ticks. Only valid while [`Layer::is_idle`].
    pub fn fast_forward(&mut self, n: u64) {
        debug_assert!(self.is_idle());
        if n == 0 {
            return;
        }
        for neuron in &mut self.neurons {
            for syn in &mut neuron.synapses {
                syn.accumulator.decay_idle(n);
            }
            neuron.membrane = neuron.compute_membrane();
        }
        for (g, neuron) in self.gated.iter_mut().zip(&self.neurons) {
            *g = gate(neuron.membrane, neuron.threshold);
        }
    }

    /// Clear all dynamic state (traces, latches, pipeline) but keep weights and thresholds.
    pub fn reset_dynamics(&mut self) {
        for neuron in &mut self.neurons {
            for syn in &mut neuron.synapses {
                syn.accumulator.reset();
            }
            neuron.membrane = 0;
        }
        self.gated.iter_mut().for_each(|g| *g = 0);
        self.synchronizers = Self::synchronizers(&self.params);
        self.spike_generator = SpikeGenerator::new(self.params.spike_window);
        self.pending.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(neurons: usize, synapses: usize) -> Layer {
        let mut p = LayerParams::new(neurons, synapses, 6, 8);
        p.decay_constant = 63;
        Layer::new(1, p).unwrap()
    }

    #[test]
    fn synchronizer_accepts_when_idle() {
        let mut l = layer(2, 8);
        assert_eq!(l.synchronizer_capture(&[2]).unwrap(), vec![2]);
        assert!(l.synchronizer_busy());
    }

    #[test]
    fn synchronizer_drops_while_busy() {
        let mut l = layer(2, 8);
        l.tick(0, &[2]).unwrap();
        let r = l.tick(1, &[5]).unwrap();
        assert!(r.accepted.is_empty());
        assert_eq!(r.dropped, 1);
        l.tick(2, &[]).unwrap();
        // cleared three ticks after the accepted event
        assert_eq!(l.tick(3, &[5]).unwrap().accepted, vec![5]);
        assert_eq!(l.dropped_events(), 1);
    }

    #[test]
    fn synchronizer_empty_input() {
        let mut l = layer(2, 8);
        assert!(l.synchronizer_capture(&[]).unwrap().is_empty());
        assert!(!l.synchronizer_busy());
    }

    #[test]
    fn synchronizer_rejects_bad_channel() {
        let mut l = layer(2, 8);
        assert!(matches!(l.synchronizer_capture(&[8]), Err(Error::Config(_))));
    }

    #[test]
    fn co_arriving_channels_all_delivered() {
        let mut l = layer(1, 4);
        let r = l.tick(0, &[0, 3, 3, 1]).unwrap();
        assert_eq!(r.accepted, vec![0, 1, 3]);
        let traces: Vec<u32> = l.traces().collect();
        assert_eq!(traces, vec![63, 63, 0, 63]);
    }

    #[test]
    fn wta_lowest_index_on_tie() {
        assert_eq!(wta_select(&[9, 9, 5], true), Some(0));
        assert_eq!(wta_select(&[5, 9, 9], true), Some(1));
    }

    #[test]
    fn wta_none_when_nothing_crosses() {
        assert_eq!(wta_select(&[0, 0, 0], true), None);
    }

    #[test]
    fn wta_suppressed_without_event() {
        assert_eq!(wta_select(&[5, 9, 9], false), None);
    }

    #[test]
    fn silence_in_silence_out() {
        let mut l = layer(2, 8);
        for n in &mut l.neurons {
            n.synapses.iter_mut().for_each(|s| s.weight = 200);
        }
        for t in 0..500 {
            let r = l.tick(t, &[]).unwrap();
            assert!(r.decision.is_none() && r.emitted.is_none());
        }
    }

    #[test]
    fn zero_weights_never_fire() {
        let mut l = layer(2, 8);
        l.neurons.iter_mut().for_each(|n| n.threshold = 1);
        let mut fired = false;
        for t in 0..20 {
            let input: &[usize] = if t == 0 { &[3] } else { &[] };
            fired |= l.tick(t, input).unwrap().decision.is_some();
        }
        assert!(!fired);
    }

    #[test]
    fn winner_emitted_after_output_latency() {
        let mut l = layer(2, 2);
        l.neurons[1].synapses[0].weight = 10;
        l.neurons[1].threshold = 1;
        let r0 = l.tick(0, &[0]).unwrap();
        assert_eq!(r0.decision, Some(1));
        assert_eq!(l.neurons[1].last_value, 630);
        assert!(r0.emitted.is_none());
        assert!(l.tick(1, &[]).unwrap().emitted.is_none());
        assert!(l.tick(2, &[]).unwrap().emitted.is_none());
        let r3 = l.tick(3, &[]).unwrap();
        assert_eq!(r3.emitted, Some(Emission { neuron: 1, decided_at: 0 }));
        assert!(l.is_idle());
    }

    #[test]
    fn one_spike_per_event() {
        let mut l = layer(1, 1);
        l.neurons[0].synapses[0].weight = 1;
        l.neurons[0].threshold = 1;
        let decisions = (0..10)
            .filter(|&t| l.tick(t, if t == 0 { &[0] } else { &[] }).unwrap().decision.is_some())
            .count();
        assert_eq!(decisions, 1);
    }

    #[test]
    fn late_crossing_inside_window_still_fires() {
        let mut l = layer(1, 1);
        l.neurons[0].synapses[0].weight = 1;
        l.neurons[0].threshold = 100;
        assert!(l.tick(0, &[0]).unwrap().decision.is_none());
        l.neurons[0].threshold = 10;
        assert_eq!(l.tick(1, &[]).unwrap().decision, Some(0));
    }

    #[test]
    fn window_closes_after_four_ticks() {
        let mut l = layer(1, 1);
        l.neurons[0].synapses[0].weight = 1;
        l.neurons[0].threshold = 100;
        for t in 0..4 {
            assert!(l.tick(t, if t == 0 { &[0] } else { &[] }).unwrap().is_event);
        }
        l.neurons[0].threshold = 1;
        let r = l.tick(4, &[]).unwrap();
        assert!(!r.is_event);
        assert!(r.decision.is_none());
    }
}
