//! Per-tick signal recording.

use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// Register or datapath value inside one layer and its trainer.
    Internal,
    /// A line crossing a layer boundary (or coming from the harness).
    InterLayer,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub tick: u64,
    /// 1-based layer number.
    pub layer: usize,
    pub scope: Scope,
    pub signal: String,
    pub value: u64,
}

pub trait TraceSink {
    fn record(&mut self, rec: TraceRecord);

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct MemoryTrace {
    pub records: Vec<TraceRecord>,
}

impl TraceSink for MemoryTrace {
    fn record(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }
}

/// Writes `global_tick,layer,signal_name,value` rows.
pub struct CsvTrace<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> CsvTrace<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "global_tick,layer,signal_name,value")?;
        Ok(Self { out, error: None })
    }

    pub fn into_inner(self) -> io::Result<W> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.out),
        }
    }
}

impl<W: Write> TraceSink for CsvTrace<W> {
    fn record(&mut self, rec: TraceRecord) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = writeln!(self.out, "{},L{},{},{}", rec.tick, rec.layer, rec.signal, rec.value) {
            self.error = Some(e);
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()
    }
}

/// Inter-layer traffic must be one bit wide, except input channels and labels
/// injected by the harness. Returns the offending records.
pub fn audit_binary_links(records: &[TraceRecord]) -> Vec<&TraceRecord> {
    records
        .iter()
        .filter(|r| r.scope == Scope::InterLayer && r.signal != "label" && r.value > 1)
        .collect()
}
