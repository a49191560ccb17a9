//! Labeled spike event streams and their text file format.
//!
//! ```text
//! channels=8 duration=400
//! 0,0
//! 8,1
//! 128,7,0
//! ```
//! One `tick,channel[,label]` record per line, ticks in input-layer clock cycles.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub tick: u64,
    pub channel: usize,
    pub label: Option<usize>,
}

impl SpikeEvent {
    pub fn new(tick: u64, channel: usize) -> Self {
        Self { tick, channel, label: None }
    }

    pub fn labeled(tick: u64, channel: usize, label: usize) -> Self {
        Self { tick, channel, label: Some(label) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    events: Vec<SpikeEvent>,
    num_channels: usize,
    duration: u64,
}

impl EventStream {
    /// Events are sorted by tick (stable, so same-tick order is kept).
    pub fn new(mut events: Vec<SpikeEvent>, num_channels: usize, duration: u64) -> Result<Self> {
        if num_channels == 0 {
            return Err(Error::data("an event stream needs at least one channel"));
        }
        events.sort_by_key(|e| e.tick);
        if let Some(e) = events.iter().find(|e| e.channel >= num_channels) {
            return Err(Error::data(format!(
                "event at tick {} on channel {} but stream has {num_channels} channels",
                e.tick, e.channel
            )));
        }
        if let Some(e) = events.last() {
            if e.tick >= duration {
                return Err(Error::data(format!(
                    "event at tick {} lies beyond the stream duration {duration}",
                    e.tick
                )));
            }
        }
        Ok(Self { events, num_channels, duration })
    }

    pub fn empty(num_channels: usize, duration: u64) -> Self {
        Self { events: Vec::new(), num_channels, duration }
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.events.iter().filter_map(|e| e.label)
    }

    pub fn num_labeled(&self) -> usize {
        self.labels().count()
    }

    /// Largest label plus one.
    pub fn num_classes(&self) -> usize {
        self.labels().max().map_or(0, |m| m + 1)
    }

    /// Extend the stream with `ticks` of silence.
    pub fn pad(&mut self, ticks: u64) {
        self.duration += ticks;
    }

    /// Append `other` after this stream's duration.
    pub fn append(&mut self, other: &EventStream) -> Result<()> {
        if other.num_channels != self.num_channels {
            return Err(Error::Dimension(format!(
                "cannot append a {}-channel stream to a {}-channel stream",
                other.num_channels, self.num_channels
            )));
        }
        let offset = self.duration;
        self.events.extend(other.events.iter().map(|e| SpikeEvent { tick: e.tick + offset, ..*e }));
        self.duration += other.duration;
        Ok(())
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a EventStream>, num_channels: usize) -> Result<Self> {
        let mut out = EventStream::empty(num_channels, 0);
        for p in parts {
            out.append(p)?;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("channels={} duration={}\n", self.num_channels, self.duration);
        for e in &self.events {
            match e.label {
                Some(l) => writeln!(s, "{},{},{l}", e.tick, e.channel),
                None => writeln!(s, "{},{}", e.tick, e.channel),
            }
            .expect("writing to a String");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        });
        let (hno, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let mut channels = None;
        let mut duration = None;
        for field in header.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(hno + 1, format!("bad header field `{field}`")))?;
            let v: u64 = v.parse().map_err(|_| Error::parse(hno + 1, format!("bad value in `{field}`")))?;
            match k {
                "channels" => channels = Some(v as usize),
                "duration" => duration = Some(v),
                _ => return Err(Error::parse(hno + 1, format!("unknown header key `{k}`"))),
            }
        }
        let (channels, duration) = channels
            .zip(duration)
            .ok_or_else(|| Error::parse(hno + 1, "header needs channels=N duration=D"))?;

        let mut events = Vec::new();
        let mut last = 0;
        for (no, line) in lines {
            let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
            let int = |i: usize| -> Result<u64> {
                fields[i].parse().map_err(|_| Error::parse(no + 1, format!("bad number `{}`", fields[i])))
            };
            let ev = match fields.len() {
                2 => SpikeEvent::new(int(0)?, int(1)? as usize),
                3 => SpikeEvent::labeled(int(0)?, int(1)? as usize, int(2)? as usize),
                _ => return Err(Error::parse(no + 1, "expected tick,channel[,label]")),
            };
            if ev.tick < last {
                return Err(Error::parse(no + 1, "timestamps must be non-decreasing"));
            }
            last = ev.tick;
            events.push(ev);
        }
        Self::new(events, channels, duration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_format_round_trip() {
        let s = EventStream::new(
            vec![SpikeEvent::new(0, 0), SpikeEvent::new(8, 3), SpikeEvent::labeled(9, 1, 2)],
            4,
            20,
        )
        .unwrap();
        let text = s.to_text();
        assert!(text.starts_with("channels=4 duration=20\n0,0\n8,3\n9,1,2\n"));
        assert_eq!(EventStream::from_text(&text).unwrap(), s);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(EventStream::from_text("").is_err());
        assert!(EventStream::from_text("channels=2\n0,0\n").is_err());
        assert!(EventStream::from_text("channels=2 duration=5\n3,0\n1,0\n").is_err());
        assert!(EventStream::from_text("channels=2 duration=5\n3,2\n").is_err());
        assert!(EventStream::from_text("channels=2 duration=5\n5,0\n").is_err());
        assert!(EventStream::from_text("channels=2 duration=5\n1\n").is_err());
    }

    #[test]
    fn append_offsets_ticks() {
        let a = EventStream::new(vec![SpikeEvent::labeled(2, 0, 0)], 2, 10).unwrap();
        let b = EventStream::new(vec![SpikeEvent::labeled(3, 1, 1)], 2, 5).unwrap();
        let c = EventStream::concat([&a, &b], 2).unwrap();
        assert_eq!(c.duration(), 15);
        assert_eq!(c.events()[1], SpikeEvent::labeled(13, 1, 1));
        assert_eq!(c.num_classes(), 2);
    }
}
