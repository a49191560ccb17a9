//! The four 16-spike, 8-channel sweep patterns.
//!
//! Each pattern is two 8-spike sweeps across the channels on a grid of
//! spacing `nu`: pattern 1 ascends twice, pattern 2 descends twice, pattern 3
//! ascends then descends and pattern 4 descends then ascends. The label
//! (`pattern - 1`) rides on the final spike.

use rand::Rng;

use super::stream::{EventStream, SpikeEvent};
use crate::error::{Error, Result};

pub const PATTERN_CHANNELS: usize = 8;
pub const NUM_PATTERNS: usize = 4;
const LAST_SLOT: usize = 16;

/// Grid slots (multiples of `nu`) of the two spikes on 1-based channel `i`.
pub fn pattern_slots(pattern: usize, i: usize) -> [usize; 2] {
    match pattern {
        1 => [i - 1, 8 + i],
        2 => [9 - i, 17 - i],
        3 => [i - 1, 17 - i],
        4 => [9 - i, 8 + i],
        _ => unreachable!("pattern checked by caller"),
    }
}

/// One presentation of `pattern` (1..=4). With `jitter > 0` every grid spacing
/// is independently scaled by a factor drawn uniformly from `[1 - jitter, 1 + jitter]`.
/// The stream ends one tick after its last spike.
pub fn gen_experiment1<R: Rng + ?Sized>(
    nu: u64,
    pattern: usize,
    jitter: f64,
    rng: &mut R,
) -> Result<EventStream> {
    if !(1..=NUM_PATTERNS).contains(&pattern) {
        return Err(Error::data(format!("pattern {pattern} outside 1..=4")));
    }
    if nu == 0 {
        return Err(Error::data("nu must be at least one tick"));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::data(format!("jitter fraction {jitter} outside [0, 1)")));
    }

    let mut slot_time = [0u64; LAST_SLOT + 1];
    let mut t = 0.0f64;
    for k in 1..=LAST_SLOT {
        let scale = if jitter > 0.0 { 1.0 + rng.gen_range(-jitter..=jitter) } else { 1.0 };
        t += nu as f64 * scale;
        slot_time[k] = if jitter > 0.0 { t.round() as u64 } else { k as u64 * nu };
    }

    let mut events = Vec::with_capacity(2 * PATTERN_CHANNELS);
    for i in 1..=PATTERN_CHANNELS {
        for slot in pattern_slots(pattern, i) {
            let mut ev = SpikeEvent::new(slot_time[slot], i - 1);
            if slot == LAST_SLOT {
                ev.label = Some(pattern - 1);
            }
            events.push(ev);
        }
    }
    let end = slot_time[LAST_SLOT] + 1;
    EventStream::new(events, PATTERN_CHANNELS, end)
}

/// All four patterns back to back, each followed by `gap` silent ticks.
pub fn pattern_set<R: Rng + ?Sized>(nu: u64, jitter: f64, gap: u64, rng: &mut R) -> Result<EventStream> {
    let mut out = EventStream::empty(PATTERN_CHANNELS, 0);
    for p in 1..=NUM_PATTERNS {
        let mut s = gen_experiment1(nu, p, jitter, rng)?;
        s.pad(gap);
        out.append(&s)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn spikes_on(s: &EventStream, ch: usize) -> Vec<u64> {
        s.events().iter().filter(|e| e.channel == ch).map(|e| e.tick).collect()
    }

    #[test]
    fn pattern_one_channel_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = gen_experiment1(8, 1, 0.0, &mut rng).unwrap();
        assert_eq!(spikes_on(&s, 0), vec![0, 72]);
        assert_eq!(s.events().len(), 16);
    }

    #[test]
    fn pattern_two_channel_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = gen_experiment1(8, 2, 0.0, &mut rng).unwrap();
        assert_eq!(spikes_on(&s, 0), vec![64, 128]);
    }

    #[test]
    fn zero_jitter_is_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for p in 1..=4 {
            let s = gen_experiment1(8, p, 0.0, &mut rng).unwrap();
            assert!(s.events().iter().all(|e| e.tick % 8 == 0));
        }
    }

    #[test]
    fn label_on_final_spike_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in 1..=4 {
            let s = gen_experiment1(8, p, 0.1, &mut rng).unwrap();
            let labeled: Vec<_> = s.events().iter().filter(|e| e.label.is_some()).collect();
            assert_eq!(labeled.len(), 1);
            assert_eq!(labeled[0].label, Some(p - 1));
            assert_eq!(labeled[0].tick, s.events().iter().map(|e| e.tick).max().unwrap());
            assert_eq!(labeled[0].tick + 1, s.duration());
        }
    }

    #[test]
    fn rejects_bad_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_experiment1(8, 0, 0.0, &mut rng).is_err());
        assert!(gen_experiment1(8, 5, 0.0, &mut rng).is_err());
        assert!(gen_experiment1(0, 1, 0.0, &mut rng).is_err());
    }

    #[test]
    fn patterns_pairwise_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for nu in 1..20 {
            let sets: Vec<BTreeSet<(u64, usize)>> = (1..=4)
                .map(|p| {
                    gen_experiment1(nu, p, 0.0, &mut rng)
                        .unwrap()
                        .events()
                        .iter()
                        .map(|e| (e.tick, e.channel))
                        .collect()
                })
                .collect();
            for a in 0..4 {
                for b in a + 1..4 {
                    assert_ne!(sets[a], sets[b], "nu={nu} patterns {} and {}", a + 1, b + 1);
                }
            }
        }
    }

    #[test]
    fn jitter_stays_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let s = gen_experiment1(8, 3, 0.1, &mut rng).unwrap();
            let mut ticks: Vec<u64> = s.events().iter().map(|e| e.tick).collect();
            ticks.sort_unstable();
            ticks.dedup();
            for w in ticks.windows(2) {
                // consecutive distinct slots are one or two spacings apart
                assert!(w[1] - w[0] >= 6 && w[1] - w[0] <= 19, "{ticks:?}");
            }
        }
    }
}
