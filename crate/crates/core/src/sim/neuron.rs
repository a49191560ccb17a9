//! Synapses and neurons.

use super::accumulator::LeakyAccumulator;

/// One synapse: a leaky accumulator feeding a weight multiplier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synapse {
    pub accumulator: LeakyAccumulator,
    /// `r_weight`.
    pub weight: u32,
}

impl Synapse {
    pub fn new(accumulator: LeakyAccumulator, weight: u32) -> Self {
        Self { accumulator, weight }
    }

    /// `TRACE` register.
    #[inline]
    pub fn trace(&self) -> u32 {
        self.accumulator.value()
    }

    #[inline]
    pub fn output(&self) -> u64 {
        self.weight as u64 * self.trace() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neuron {
    pub synapses: Vec<Synapse>,
    pub threshold: u64,
    /// `LAST_VALUE`: membrane latched on the neuron's last win.
    pub last_value: u64,
    /// Adder output of the current tick.
    pub membrane: u64,
}

impl Neuron {
    pub fn new(synapses: Vec<Synapse>, threshold: u64) -> Self {
        Self { synapses, threshold, last_value: 0, membrane: 0 }
    }

    pub fn num_synapses(&self) -> usize {
        self.synapses.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = u32> + '_ {
        self.synapses.iter().map(|s| s.weight)
    }

    pub fn traces(&self) -> impl Iterator<Item = u32> + '_ {
        self.synapses.iter().map(|s| s.trace())
    }

    /// Full-precision weighted sum of the synapse traces.
    #[inline]
    pub fn compute_membrane(&self) -> u64 {
        self.synapses.iter().map(Synapse::output).sum()
    }

    /// Membrane if it reaches the threshold, otherwise 0.
    #[inline]
    pub fn evaluate(&self) -> u64 {
        gate(self.compute_membrane(), self.threshold)
    }
}

#[inline]
pub fn gate(membrane: u64, threshold: u64) -> u64 {
    if membrane >= threshold {
        membrane
    } else {
        0
    }
}

/// Bits needed so that `n` products of `weight_width x trace_width` bits never overflow.
pub fn membrane_width(weight_width: u8, trace_width: u8, num_synapses: usize) -> u32 {
    let fan_in = usize::BITS - num_synapses.saturating_sub(1).leading_zeros();
    weight_width as u32 + trace_width as u32 + fan_in
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::accumulator::DecayMode;

    fn neuron(weights: &[u32], traces: &[u32], threshold: u64) -> Neuron {
        let synapses = weights
            .iter()
            .zip(traces)
            .map(|(&w, &t)| {
                let mut acc = LeakyAccumulator::new(8, t.max(1), DecayMode::Linear).unwrap();
                if t > 0 {
                    acc.tick(true);
                }
                Synapse::new(acc, w)
            })
            .collect();
        Neuron::new(synapses, threshold)
    }

    #[test]
    fn single_product_above_threshold() {
        assert_eq!(neuron(&[4], &[10], 30).evaluate(), 40);
    }

    #[test]
    fn below_threshold_gates_to_zero() {
        assert_eq!(neuron(&[4], &[10], 41).evaluate(), 0);
    }

    #[test]
    fn equal_to_threshold_fires() {
        assert_eq!(neuron(&[3, 5], &[2, 4], 26).evaluate(), 26);
        assert_eq!(neuron(&[3, 5], &[2, 4], 27).evaluate(), 0);
    }

    #[test]
    fn membrane_width_covers_worst_case() {
        assert_eq!(membrane_width(8, 6, 8), 17);
        assert_eq!(membrane_width(8, 8, 1), 16);
        assert_eq!(membrane_width(8, 8, 6), 19);
        let worst = 8u64 * 255 * 63;
        assert!(worst < 1 << membrane_width(8, 6, 8));
    }
}
