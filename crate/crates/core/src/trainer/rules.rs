//! Integer reward / punish arithmetic.
//!
//! Learning rates come in two forms: a negative power of two, applied as a
//! right shift of the difference, or a fixed integer step applied in the
//! direction of the difference. Every update saturates at the register bounds.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A learning rate `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Rate {
    /// `eta = 2^-k`.
    Shift(u8),
    /// Move by a fixed step towards the target.
    Step(u64),
}

impl Rate {
    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            Rate::Shift(k) if k == 0 || k > 62 => {
                Err(Error::config(format!("shift rate 2^-{k} must satisfy 0 < 2^-k < 1")))
            }
            Rate::Step(0) => Err(Error::config("fixed step must be >= 1")),
            _ => Ok(()),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Rate::Shift(k) => (-(k as f64)).exp2(),
            Rate::Step(s) => s as f64,
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Shift(k) => write!(f, "2^-{k}"),
            Rate::Step(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Rate {
    type Err = Error;

    /// Accepts `2^-k` for shift rates and a plain integer for fixed steps.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let rate = if let Some(exp) = s.strip_prefix("2^-") {
            Rate::Shift(exp.parse().map_err(|_| Error::config(format!("bad shift rate `{s}`")))?)
        } else {
            Rate::Step(s.parse().map_err(|_| Error::config(format!("bad learning rate `{s}`")))?)
        };
        rate.validate()?;
        Ok(rate)
    }
}

impl TryFrom<String> for Rate {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Rate> for String {
    fn from(r: Rate) -> String {
        r.to_string()
    }
}

/// Threshold decrement used by the punish process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DeltaT {
    Constant(u64),
    /// Magnitude-dependent step that keeps the threshold above zero.
    Adaptive,
}

impl DeltaT {
    pub fn step_for(&self, threshold: u64) -> u64 {
        match *self {
            DeltaT::Constant(d) => d,
            DeltaT::Adaptive => adaptive_delta(threshold),
        }
    }
}

impl fmt::Display for DeltaT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaT::Constant(d) => write!(f, "{d}"),
            DeltaT::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl FromStr for DeltaT {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "adaptive" => Ok(DeltaT::Adaptive),
            other => match other.parse::<u64>() {
                Ok(0) => Err(Error::config("constant delta_t must be >= 1")),
                Ok(d) => Ok(DeltaT::Constant(d)),
                Err(_) => Err(Error::config(format!("bad delta_t `{other}`"))),
            },
        }
    }
}

impl TryFrom<String> for DeltaT {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<DeltaT> for String {
    fn from(d: DeltaT) -> String {
        d.to_string()
    }
}

pub fn adaptive_delta(threshold: u64) -> u64 {
    if threshold > (1 << 16) - 1 {
        (1 << 10) - 1
    } else if threshold > (1 << 12) - 1 {
        (1 << 8) - 1
    } else if threshold > (1 << 8) - 1 {
        (1 << 4) - 1
    } else {
        1
    }
}

/// Magnitude of one move of `current` towards `target`.
fn step_towards(current: u64, target: u64, rate: Rate) -> u64 {
    let diff = current.abs_diff(target);
    if diff == 0 {
        return 0;
    }
    match rate {
        // a non-zero difference always moves by at least one
        Rate::Shift(k) => (diff >> k).max(1),
        Rate::Step(s) => s.min(diff),
    }
}

/// One reward move of a register towards `target`, clamped to `[0, max]`.
pub fn move_towards(current: u64, target: u64, rate: Rate, max: u64) -> u64 {
    let step = step_towards(current, target, rate);
    let next = match target.cmp(&current) {
        Ordering::Greater => current.saturating_add(step),
        Ordering::Less => current - step,
        Ordering::Equal => current,
    };
    next.min(max)
}

/// Weight reward: `w += eta * (ts - w)`.
pub fn reward_weight(weight: u32, ts: u32, rate: Rate, max: u32) -> u32 {
    move_towards(weight as u64, ts as u64, rate, max as u64) as u32
}

/// Threshold reward: `T += eta_T * (LV - T)`.
pub fn reward_threshold(threshold: u64, last_value: u64, rate: Rate, max: u64) -> u64 {
    move_towards(threshold, last_value, rate, max)
}

/// Negative weight update `w += eta * w - eta * ts`, saturating at 0 and `max`.
pub fn negative_weight(weight: u32, ts: u32, rate: Rate, max: u32) -> u32 {
    let w = weight as u64;
    let ts = ts as u64;
    let next = match rate {
        Rate::Shift(k) => (w + (w >> k)).saturating_sub(ts >> k),
        Rate::Step(s) => match ts.cmp(&w) {
            Ordering::Greater => w.saturating_sub(s),
            Ordering::Less => w + s,
            Ordering::Equal => w,
        },
    };
    next.min(max as u64) as u32
}

/// Punish: lower the threshold by `delta_t`, never below 1.
pub fn punish_threshold(threshold: u64, delta_t: DeltaT) -> u64 {
    threshold.saturating_sub(delta_t.step_for(threshold)).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_reward_moves_by_shifted_difference() {
        assert_eq!(reward_weight(100, 164, Rate::Shift(3), 255), 108);
        assert_eq!(reward_weight(164, 100, Rate::Shift(3), 255), 156);
    }

    #[test]
    fn shift_reward_never_stalls() {
        assert_eq!(reward_weight(100, 103, Rate::Shift(3), 255), 101);
        assert_eq!(reward_weight(103, 100, Rate::Shift(3), 255), 102);
    }

    #[test]
    fn fixed_step_reward() {
        assert_eq!(reward_weight(50, 200, Rate::Step(1), 255), 51);
        assert_eq!(reward_weight(50, 10, Rate::Step(1), 255), 49);
        assert_eq!(reward_weight(50, 200, Rate::Step(2), 255), 52);
        assert_eq!(reward_weight(50, 51, Rate::Step(2), 255), 51);
    }

    #[test]
    fn reward_fixed_point() {
        for rate in [Rate::Shift(3), Rate::Step(2)] {
            assert_eq!(reward_weight(77, 77, rate, 255), 77);
            assert_eq!(reward_threshold(900, 900, rate, 1 << 24), 900);
        }
    }

    #[test]
    fn threshold_reward_saturates() {
        assert_eq!(reward_threshold(250, 5000, Rate::Step(127), 300), 300);
        assert_eq!(reward_threshold(1000, 0, Rate::Step(127), 1 << 20), 873);
    }

    #[test]
    fn negative_update_shift() {
        assert_eq!(negative_weight(100, 164, Rate::Shift(3), 255), 92);
        assert_eq!(negative_weight(100, 100, Rate::Shift(3), 255), 100);
        assert_eq!(negative_weight(0, 255, Rate::Shift(3), 255), 0);
        assert_eq!(negative_weight(250, 0, Rate::Shift(2), 255), 255);
    }

    #[test]
    fn negative_update_fixed_step() {
        assert_eq!(negative_weight(50, 200, Rate::Step(2), 255), 48);
        assert_eq!(negative_weight(50, 10, Rate::Step(2), 255), 52);
        assert_eq!(negative_weight(1, 200, Rate::Step(2), 255), 0);
    }

    #[test]
    fn adaptive_punish_schedule() {
        assert_eq!(adaptive_delta(70_000), 1023);
        assert_eq!(punish_threshold(70_000, DeltaT::Adaptive), 68_977);
        assert_eq!(punish_threshold(100, DeltaT::Adaptive), 99);
        assert_eq!(punish_threshold(5000, DeltaT::Adaptive), 4745);
        assert_eq!(punish_threshold(300, DeltaT::Adaptive), 285);
        assert_eq!(punish_threshold(2, DeltaT::Adaptive), 1);
        assert_eq!(punish_threshold(1, DeltaT::Adaptive), 1);
    }

    #[test]
    fn adaptive_boundaries() {
        assert_eq!(adaptive_delta(65_535), 255);
        assert_eq!(adaptive_delta(65_536), 1023);
        assert_eq!(adaptive_delta(4095), 15);
        assert_eq!(adaptive_delta(4096), 255);
        assert_eq!(adaptive_delta(255), 1);
        assert_eq!(adaptive_delta(256), 15);
    }

    #[test]
    fn constant_punish() {
        assert_eq!(punish_threshold(1000, DeltaT::Constant(63)), 937);
        assert_eq!(punish_threshold(40, DeltaT::Constant(63)), 1);
    }

    #[test]
    fn parse_rates() {
        assert_eq!("2^-3".parse::<Rate>().unwrap(), Rate::Shift(3));
        assert_eq!("127".parse::<Rate>().unwrap(), Rate::Step(127));
        assert!("2^-0".parse::<Rate>().is_err());
        assert!("0".parse::<Rate>().is_err());
        assert_eq!("adaptive".parse::<DeltaT>().unwrap(), DeltaT::Adaptive);
        assert_eq!("63".parse::<DeltaT>().unwrap(), DeltaT::Constant(63));
        assert!("0".parse::<DeltaT>().is_err());
    }
}
