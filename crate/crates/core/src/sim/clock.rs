//! Clock domains derived from the input-layer clock.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A layer clock running at `1/divider` of the input-layer clock.
///
/// Global time is counted in input-layer ticks; a domain ticks on every global
/// tick `g` with `g % divider == phase`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockDomain {
    divider: u32,
    phase: u32,
}

impl ClockDomain {
    pub fn new(divider: u32, phase: u32) -> Result<Self> {
        if divider == 0 {
            return Err(Error::config("clock divider must be >= 1"));
        }
        if phase >= divider {
            return Err(Error::config(format!(
                "clock phase {phase} must be below divider {divider}"
            )));
        }
        Ok(Self { divider, phase })
    }

    pub fn with_divider(divider: u32) -> Result<Self> {
        Self::new(divider, 0)
    }

    pub fn divider(&self) -> u32 {
        self.divider
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    #[inline]
    pub fn ticks_at(&self, global: u64) -> bool {
        global % self.divider as u64 == self.phase as u64
    }

    /// First global tick `>= global` on which this domain ticks.
    pub fn next_tick_at_or_after(&self, global: u64) -> u64 {
        let d = self.divider as u64;
        let p = self.phase as u64;
        let base = global - global % d + p;
        if base >= global {
            base
        } else {
            base + d
        }
    }

    /// Number of domain ticks in the half-open global range `[from, to)`.
    pub fn ticks_in(&self, from: u64, to: u64) -> u64 {
        if to <= from {
            return 0;
        }
        let first = self.next_tick_at_or_after(from);
        if first >= to {
            0
        } else {
            (to - 1 - first) / self.divider as u64 + 1
        }
    }

    /// Length of `n` domain ticks measured in global ticks.
    pub fn span(&self, n: u32) -> u64 {
        n as u64 * self.divider as u64
    }
}

impl Default for ClockDomain {
    fn default() -> Self {
        Self { divider: 1, phase: 0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_divider() {
        assert!(ClockDomain::new(0, 0).is_err());
        assert!(ClockDomain::new(2, 2).is_err());
    }

    #[test]
    fn ticks_once_per_divider() {
        let clk = ClockDomain::new(4, 1).unwrap();
        let hits: Vec<u64> = (0..16).filter(|&g| clk.ticks_at(g)).collect();
        assert_eq!(hits, vec![1, 5, 9, 13]);
        for from in 0..20 {
            for to in from..40 {
                let brute = (from..to).filter(|&g| clk.ticks_at(g)).count() as u64;
                assert_eq!(clk.ticks_in(from, to), brute, "[{from},{to})");
            }
            let next = (from..).find(|&g| clk.ticks_at(g)).unwrap();
            assert_eq!(clk.next_tick_at_or_after(from), next);
        }
    }
}
