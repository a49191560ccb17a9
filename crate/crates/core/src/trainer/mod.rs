//! Per-layer on-line training modules.
//!
//! A trainer sees only its own layer's registers plus binary strobes: the
//! global attention signal (GAS, with the label at the output layer), the
//! local attention signal (LAS) from the next layer, and the layer's own
//! IS_EVENT / IS_WINNER lines.

mod rules;
mod snapshot;

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use rules::{
    adaptive_delta, move_towards, negative_weight, punish_threshold, reward_threshold,
    reward_weight, DeltaT, Rate,
};
pub use snapshot::{LayerSnapshot, Snapshot};

use crate::error::{Error, Result};
use crate::sim::{ClockDomain, LatchPoint, Layer, LayerParams, LeakyAccumulator, TickReport};

pub const DEFAULT_PASS_WINDOW: u32 = 3;
pub const DEFAULT_LAS_DELAY: u32 = 3;
pub const DEFAULT_TRACE_FLOOR_PERCENT: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerHyperparams {
    pub eta_w: Rate,
    pub eta_t: Rate,
    pub delta_t: DeltaT,
    /// Eligibility limit as a percentage of trace full scale.
    pub trace_floor_percent: u32,
    /// Output layer only: emit LAS only for spikes answering a GAS.
    pub las_mask_after_gas_only: bool,
    /// `dt_pass`: layer ticks between the GAS latch and the training evaluation.
    pub pass_window: u32,
    /// `dt_2`: layer ticks from this layer's spike to the LAS at the previous layer.
    pub las_delay: u32,
}

impl TrainerHyperparams {
    pub fn new(eta_w: Rate, eta_t: Rate, delta_t: DeltaT) -> Self {
        Self {
            eta_w,
            eta_t,
            delta_t,
            trace_floor_percent: DEFAULT_TRACE_FLOOR_PERCENT,
            las_mask_after_gas_only: false,
            pass_window: DEFAULT_PASS_WINDOW,
            las_delay: DEFAULT_LAS_DELAY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.eta_w.validate()?;
        self.eta_t.validate()?;
        if let DeltaT::Constant(0) = self.delta_t {
            return Err(Error::config("constant delta_t must be >= 1"));
        }
        if self.trace_floor_percent >= 100 {
            return Err(Error::config("trace floor must be below 100% of full scale"));
        }
        if self.pass_window == 0 {
            return Err(Error::config("pass window must be at least one tick"));
        }
        Ok(())
    }

    /// `floor(full_scale * percent / 100)`, at least 1.
    pub fn trace_floor(&self, full_scale: u32) -> u32 {
        ((full_scale as u64 * self.trace_floor_percent as u64 / 100) as u32).max(1)
    }
}

/// How thresholds are initialized before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdInit {
    /// `2^(threshold_width - 1)`.
    MidScale,
    /// Largest membrane the layer's adder can produce: every neuron starts closed.
    MembraneMax,
    Zero,
    Value(u64),
}

impl ThresholdInit {
    pub fn value_for(&self, params: &LayerParams) -> u64 {
        let v = match *self {
            ThresholdInit::MidScale => 1u64 << (params.threshold_width - 1),
            ThresholdInit::MembraneMax => params.membrane_max(),
            ThresholdInit::Zero => 0,
            ThresholdInit::Value(v) => v,
        };
        v.min(params.threshold_max())
    }
}

/// Uniform random weights over `0..=weight_max` (the full register when
/// `None`) and a common initial threshold.
pub fn init_registers<R: Rng>(layer: &mut Layer, rng: &mut R, threshold: ThresholdInit, weight_max: Option<u32>) {
    let full = layer.params().weight_max();
    let wmax = weight_max.map_or(full, |m| m.min(full));
    let t = threshold.value_for(layer.params());
    for neuron in &mut layer.neurons {
        for syn in &mut neuron.synapses {
            syn.weight = rng.gen_range(0..=wmax);
        }
        neuron.threshold = t;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Hidden,
    Output { classes: usize, group_size: usize },
}

/// GAS pulse on its way to a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GasPulse {
    /// First global tick on which the receiving layer may latch it.
    pub visible_at: u64,
    pub label: Option<usize>,
}

/// Output-layer verdict for one labeled event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub label: usize,
    /// Class of the winning neuron, if any neuron spiked.
    pub predicted: Option<usize>,
    pub at: u64,
}

impl Classification {
    pub fn is_correct(&self) -> bool {
        self.predicted == Some(self.label)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateCounts {
    pub rewards: u64,
    pub punishments: u64,
    pub negative_updates: u64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainerOutput {
    pub forward_gas: Option<GasPulse>,
    pub classification: Option<Classification>,
    /// A LAS was evaluated on this tick.
    pub las_evaluated: bool,
    /// GAS-driven rules were evaluated on this tick.
    pub gas_evaluated: bool,
    /// A GAS pulse was latched on this tick.
    pub gas_latched: bool,
    /// This tick's output spike answers the latched GAS.
    pub emission_answers_gas: bool,
}

#[derive(Debug, Clone)]
struct GasLatch {
    label: Option<usize>,
    latched_at: u64,
    countdown: u32,
    event_seen: bool,
    winner: Option<usize>,
    snapshot: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct LayerTrainer {
    role: Role,
    hp: TrainerHyperparams,
    weight_max: u32,
    threshold_max: u64,
    trace_floor: u32,
    /// `TS`: synapse traces latched at each neuron's last win.
    ts: Vec<Vec<u32>>,
    /// `NO_WINNER`: traces latched when an attended event produced no winner.
    no_winner: Vec<Vec<u32>>,
    activity: Vec<LeakyAccumulator>,
    activity_clock: ClockDomain,
    activity_floor: u32,
    activity_pending: Vec<Option<u64>>,
    gas_inbox: VecDeque<GasPulse>,
    las_inbox: VecDeque<u64>,
    gas: Option<GasLatch>,
    forward_delay: u64,
    frozen: bool,
    counts: UpdateCounts,
}

impl LayerTrainer {
    /// `activity` mirrors the downstream synapse that receives this layer's
    /// spikes (same counter and clock), kept locally as the eligibility trace
    /// consulted on LAS.
    pub fn new(
        role: Role,
        hp: TrainerHyperparams,
        params: &LayerParams,
        activity: LeakyAccumulator,
        activity_clock: ClockDomain,
    ) -> Result<Self> {
        hp.validate()?;
        if hp.pass_window < params.output_latency {
            return Err(Error::config(format!(
                "pass window {} shorter than output latency {}: the winner would never be observed",
                hp.pass_window, params.output_latency
            )));
        }
        if let Role::Output { classes, group_size } = role {
            if classes == 0 || group_size == 0 || classes * group_size != params.num_neurons {
                return Err(Error::config(format!(
                    "output layer has {} neurons, expected {classes} classes x {group_size}",
                    params.num_neurons
                )));
            }
        }
        let n = params.num_neurons;
        let s = params.num_synapses;
        Ok(Self {
            role,
            weight_max: params.weight_max(),
            threshold_max: params.threshold_max(),
            trace_floor: hp.trace_floor(params.decay_constant),
            activity_floor: hp.trace_floor(activity.decay_constant()),
            ts: vec![vec![0; s]; n],
            no_winner: vec![vec![0; s]; n],
            activity: vec![activity; n],
            activity_clock,
            activity_pending: vec![None; n],
            gas_inbox: VecDeque::new(),
            las_inbox: VecDeque::new(),
            gas: None,
            forward_delay: params.clock.span(params.output_latency),
            frozen: false,
            counts: UpdateCounts::default(),
            hp,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn hyperparams(&self) -> &TrainerHyperparams {
        &self.hp
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn counts(&self) -> UpdateCounts {
        self.counts
    }

    pub fn ts(&self, neuron: usize) -> &[u32] {
        &self.ts[neuron]
    }

    pub fn no_winner(&self, neuron: usize) -> &[u32] {
        &self.no_winner[neuron]
    }

    pub fn activity(&self, neuron: usize) -> u32 {
        self.activity[neuron].value()
    }

    pub fn activity_clock(&self) -> ClockDomain {
        self.activity_clock
    }

    /// `r_GAS`.
    pub fn gas_latched(&self) -> bool {
        self.gas.is_some()
    }

    /// `r_IS_WINNER`.
    pub fn winner_latched(&self) -> bool {
        self.gas.as_ref().is_some_and(|g| g.winner.is_some())
    }

    pub fn latched_label(&self) -> Option<usize> {
        self.gas.as_ref().and_then(|g| g.label)
    }

    /// Whether a spike decided at `decided_at` answers the latched GAS.
    pub fn answers_gas(&self, decided_at: u64) -> bool {
        self.gas.as_ref().is_some_and(|g| decided_at >= g.latched_at)
    }

    pub fn deliver_gas(&mut self, pulse: GasPulse) {
        self.gas_inbox.push_back(pulse);
    }

    pub fn deliver_las(&mut self, visible_at: u64) {
        self.las_inbox.push_back(visible_at);
    }

    /// Nothing pending that depends on the passage of time, other than
    /// activity-trace decay.
    pub fn is_idle(&self) -> bool {
        self.gas.is_none()
            && self.gas_inbox.is_empty()
            && self.las_inbox.is_empty()
            && self.activity_pending.iter().all(Option::is_none)
    }

    pub fn activity_zero(&self) -> bool {
        self.activity.iter().all(LeakyAccumulator::is_zero)
    }

    /// Advance the eligibility traces on an activity-clock tick.
    pub fn tick_activity(&mut self, now: u64) {
        for (acc, pending) in self.activity.iter_mut().zip(&mut self.activity_pending) {
            let spike = matches!(*pending, Some(t) if t < now);
            if spike {
                *pending = None;
            }
            acc.tick(spike);
        }
    }

    pub fn fast_forward_activity(&mut self, ticks: u64) {
        self.activity.iter_mut().for_each(|a| a.decay_idle(ticks));
    }

    pub fn reset_dynamics(&mut self) {
        self.activity.iter_mut().for_each(LeakyAccumulator::reset);
        self.activity_pending.iter_mut().for_each(|p| *p = None);
        self.gas_inbox.clear();
        self.las_inbox.clear();
        self.gas = None;
        self.no_winner.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0));
    }

    /// Run the trainer for one tick of its layer, after the layer itself has ticked.
    pub fn on_layer_tick(
        &mut self,
        now: u64,
        layer: &mut Layer,
        report: &TickReport,
    ) -> Result<TrainerOutput> {
        let mut out = TrainerOutput::default();

        let mut arrived = None;
        while self.gas_inbox.front().is_some_and(|p| p.visible_at <= now) {
            arrived = self.gas_inbox.pop_front();
        }
        if let Some(pulse) = arrived {
            if let (Role::Output { classes, .. }, Some(label)) = (self.role, pulse.label) {
                if label >= classes {
                    return Err(Error::data(format!(
                        "label {label} out of range for {classes} classes"
                    )));
                }
            }
            self.gas = Some(GasLatch {
                label: pulse.label,
                latched_at: now,
                countdown: self.hp.pass_window,
                event_seen: false,
                winner: None,
                snapshot: Vec::new(),
            });
            out.gas_latched = true;
            out.forward_gas =
                Some(GasPulse { visible_at: now + self.forward_delay + 1, label: pulse.label });
        }

        let latched = match layer.params().latch {
            LatchPoint::Decision => report.decision,
            LatchPoint::Emission => report.emitted.map(|e| e.neuron),
        };
        if let Some(j) = latched {
            for (ts, trace) in self.ts[j].iter_mut().zip(layer.neurons[j].traces()) {
                *ts = trace;
            }
        }
        if let Some(e) = report.emitted {
            self.activity_pending[e.neuron] = Some(now);
        }

        if let Some(g) = self.gas.as_mut() {
            if !report.accepted.is_empty() {
                g.event_seen = true;
                g.snapshot.clear();
                g.snapshot.extend(layer.traces());
            }
            if let Some(e) = report.emitted {
                if e.decided_at >= g.latched_at {
                    out.emission_answers_gas = true;
                    if g.winner.is_none() {
                        g.winner = Some(e.neuron);
                    }
                }
            }
            if g.latched_at < now {
                g.countdown -= 1;
            }
            if g.countdown == 0 {
                let g = self.gas.take().unwrap();
                out.gas_evaluated = true;
                out.classification = self.evaluate_gas(now, layer, &g);
            }
        }

        let mut las = false;
        while self.las_inbox.front().is_some_and(|&t| t <= now) {
            self.las_inbox.pop_front();
            las = true;
        }
        if las && self.role == Role::Hidden {
            self.evaluate_las(layer);
            out.las_evaluated = true;
        }
        Ok(out)
    }

    fn evaluate_gas(&mut self, now: u64, layer: &mut Layer, g: &GasLatch) -> Option<Classification> {
        match self.role {
            Role::Hidden => {
                if let Some(w) = g.winner {
                    self.reward(layer, w);
                } else if g.event_seen {
                    for j in 0..layer.num_neurons() {
                        self.punish(layer, j);
                        if !self.frozen {
                            self.no_winner[j].copy_from_slice(&g.snapshot);
                        }
                    }
                }
                None
            }
            Role::Output { group_size, .. } => {
                let label = g.label?;
                if !g.event_seen {
                    return None;
                }
                let group = label * group_size..(label + 1) * group_size;
                match g.winner {
                    Some(w) if group.contains(&w) => self.reward(layer, w),
                    Some(w) => {
                        self.negative_update(layer, w);
                        group.for_each(|j| self.punish(layer, j));
                    }
                    None => group.for_each(|j| self.punish(layer, j)),
                }
                Some(Classification { label, predicted: g.winner.map(|w| w / group_size), at: now })
            }
        }
    }

    fn evaluate_las(&mut self, layer: &mut Layer) {
        for j in 0..layer.num_neurons() {
            if self.activity[j].value() > self.activity_floor {
                self.reward(layer, j);
            } else if self.no_winner[j].iter().any(|&v| v > self.trace_floor) {
                self.punish(layer, j);
            }
        }
        self.no_winner.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x = 0));
    }

    /// Reward `neuron` towards its latched time surface and last value.
    pub fn reward(&mut self, layer: &mut Layer, neuron: usize) {
        if self.frozen {
            return;
        }
        self.counts.rewards += 1;
        let n = &mut layer.neurons[neuron];
        for (syn, &ts) in n.synapses.iter_mut().zip(&self.ts[neuron]) {
            syn.weight = reward_weight(syn.weight, ts, self.hp.eta_w, self.weight_max);
        }
        n.threshold = reward_threshold(n.threshold, n.last_value, self.hp.eta_t, self.threshold_max);
    }

    pub fn punish(&mut self, layer: &mut Layer, neuron: usize) {
        if self.frozen {
            return;
        }
        self.counts.punishments += 1;
        let n = &mut layer.neurons[neuron];
        n.threshold = punish_threshold(n.threshold, self.hp.delta_t);
    }

    pub fn negative_update(&mut self, layer: &mut Layer, neuron: usize) {
        if self.frozen {
            return;
        }
        self.counts.negative_updates += 1;
        let n = &mut layer.neurons[neuron];
        for (syn, &ts) in n.synapses.iter_mut().zip(&self.ts[neuron]) {
            syn.weight = negative_weight(syn.weight, ts, self.hp.eta_w, self.weight_max);
        }
    }
}
