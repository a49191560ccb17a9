//! Leaky accumulator: the down-counter that produces a synapse's trace.
//!
//! On a spike the counter is reloaded with `value + C` (saturating at full
//! scale). Without a spike a linear accumulator counts down by one per domain
//! tick and an exponential one shifts right by one.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayMode {
    #[default]
    Linear,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakyAccumulator {
    width: u8,
    decay_constant: u32,
    mode: DecayMode,
    value: u32,
}

/// Largest supported counter width.
pub const MAX_TRACE_WIDTH: u8 = 16;

impl LeakyAccumulator {
    pub fn new(width: u8, decay_constant: u32, mode: DecayMode) -> Result<Self> {
        if width == 0 || width > MAX_TRACE_WIDTH {
            return Err(Error::config(format!(
                "accumulator width {width} outside 1..={MAX_TRACE_WIDTH}"
            )));
        }
        let full = full_scale(width);
        if decay_constant == 0 || decay_constant > full {
            return Err(Error::config(format!(
                "decay constant {decay_constant} outside 1..={full} for a {width}-bit counter"
            )));
        }
        Ok(Self { width, decay_constant, mode, value: 0 })
    }

    /// Exponential accumulator with `C = 2^tau - 1`.
    pub fn exponential(width: u8, tau: u8) -> Result<Self> {
        if tau == 0 || tau > width {
            return Err(Error::config(format!("tau {tau} outside 1..={width}")));
        }
        Self::new(width, (1u32 << tau) - 1, DecayMode::Exponential)
    }

    #[inline]
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn decay_constant(&self) -> u32 {
        self.decay_constant
    }

    pub fn mode(&self) -> DecayMode {
        self.mode
    }

    pub fn full_scale(&self) -> u32 {
        full_scale(self.width)
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Advance one domain tick.
    #[inline]
    pub fn tick(&mut self, spike: bool) -> u32 {
        self.value = if spike {
            (self.value + self.decay_constant).min(self.full_scale())
        } else {
            match self.mode {
                DecayMode::Linear => self.value.saturating_sub(1),
                DecayMode::Exponential => self.value >> 1,
            }
        };
        self.value
    }

    /// Advance `n` ticks with no input; identical to `n` calls of `tick(false)`.
    pub fn decay_idle(&mut self, n: u64) {
        self.value = match self.mode {
            DecayMode::Linear => self.value.saturating_sub(n.min(u32::MAX as u64) as u32),
            DecayMode::Exponential => {
                if n >= 32 {
                    0
                } else {
                    self.value >> n
                }
            }
        };
    }

    pub fn reset(&mut self) {
        self.value = 0;
    }
}

#[inline]
pub fn full_scale(width: u8) -> u32 {
    ((1u64 << width) - 1) as u32
}
