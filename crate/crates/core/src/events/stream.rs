use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn from_sign(p: i8) -> Option<Self> {
        match p {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// A single brightness-change event at pixel `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Seconds.
    pub t: f64,
    pub p: Polarity,
}

/// Time-ordered events from a `height x width` sensor over a closed span.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    height: usize,
    width: usize,
    span: (f64, f64),
}

impl EventStream {
    /// Validates coordinates, span membership and per-pixel time order.
    /// Events are sorted by timestamp (stable, so per-pixel order is kept).
    pub fn new(mut events: Vec<Event>, height: usize, width: usize, span: (f64, f64)) -> Result<Self> {
        let (t0, t1) = span;
        if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
            return Err(Error::invalid(format!("bad event span [{t0}, {t1}]")));
        }
        let mut last = vec![f64::NEG_INFINITY; height * width];
        for e in &events {
            if e.x as usize >= width || e.y as usize >= height {
                return Err(Error::invalid(format!(
                    "event at ({}, {}) outside {width}x{height} sensor",
                    e.x, e.y
                )));
            }
            if !(e.t >= t0 && e.t <= t1) {
                return Err(Error::invalid(format!(
                    "event time {} outside span [{t0}, {t1}]",
                    e.t
                )));
            }
            let slot = &mut last[e.y as usize * width + e.x as usize];
            if e.t < *slot {
                return Err(Error::invalid(format!(
                    "events at pixel ({}, {}) are not time ordered",
                    e.x, e.y
                )));
            }
            *slot = e.t;
        }
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(Self {
            events,
            height,
            width,
            span,
        })
    }

    pub fn empty(height: usize, width: usize, span: (f64, f64)) -> Result<Self> {
        Self::new(Vec::new(), height, width, span)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`.
    pub fn resolution(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    pub fn count(&self, polarity: Polarity) -> usize {
        self.events.iter().filter(|e| e.p == polarity).count()
    }

    /// Partitions the stream at `t`: events with `t_i <= t` go left (span
    /// `[t0, t]`), the rest go right (span `[t, t1]`).
    pub fn split_at(&self, t: f64) -> Result<(EventStream, EventStream)> {
        let (t0, t1) = self.span;
        if !(t >= t0 && t <= t1) {
            return Err(Error::invalid(format!(
                "split time {t} outside span [{t0}, {t1}]"
            )));
        }
        // Sorted by time, so the partition point is a binary search.
        let cut = self.events.partition_point(|e| e.t <= t);
        let left = EventStream {
            events: self.events[..cut].to_vec(),
            height: self.height,
            width: self.width,
            span: (t0, t),
        };
        let right = EventStream {
            events: self.events[cut..].to_vec(),
            height: self.height,
            width: self.width,
            span: (t, t1),
        };
        Ok((left, right))
    }
}

const MAGIC: &[u8; 4] = b"EVT1";
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 16;

/// Serializes events as `EVT1` little-endian records: a 16-byte header
/// (magic, width, height, count as `u32`) followed by `(u16 x, u16 y, f64 t,
/// i8 p, 3 pad bytes)` records. The span is not part of the format.
pub fn encode_events(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + stream.len() * RECORD_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(stream.width as u32).to_le_bytes());
    out.extend_from_slice(&(stream.height as u32).to_le_bytes());
    out.extend_from_slice(&(stream.len() as u32).to_le_bytes());
    for e in &stream.events {
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.extend_from_slice(&e.t.to_le_bytes());
        out.push(e.p.sign() as u8);
        out.extend_from_slice(&[0, 0, 0]);
    }
    out
}

pub fn decode_events(bytes: &[u8], span: (f64, f64), path: &Path) -> Result<EventStream> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::format(path, "missing EVT1 header"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (width, height, count) = (u32_at(4), u32_at(8), u32_at(12));
    if bytes.len() != HEADER_LEN + count * RECORD_LEN {
        return Err(Error::format(
            path,
            format!("expected {count} records, file has {} bytes", bytes.len()),
        ));
    }
    let mut events = Vec::with_capacity(count);
    for rec in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN) {
        let x = u16::from_le_bytes([rec[0], rec[1]]);
        let y = u16::from_le_bytes([rec[2], rec[3]]);
        let t = f64::from_le_bytes(rec[4..12].try_into().unwrap());
        let p = Polarity::from_sign(rec[12] as i8)
            .ok_or_else(|| Error::format(path, format!("bad polarity byte {}", rec[12])))?;
        events.push(Event { x, y, t, p });
    }
    EventStream::new(events, height, width, span)
}

pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    fs::write(path, encode_events(stream)).map_err(|e| Error::io(path, e))
}

pub fn read_events(path: &Path, span: (f64, f64)) -> Result<EventStream> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_events(&bytes, span, path)
}
