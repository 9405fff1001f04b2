//! Contention MAC building blocks: frames, the CSMA/CA contention-window
//! state, per-peer duplicate filtering, and the bounded transmit queue.
//!
//! The timing side (slot countdown, freezing on a busy channel, ACK
//! timeouts) is driven by the event loop in [`crate::world`]; this module
//! holds the state and the rules.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::net::DataPacket;
use crate::routing::DymoMsg;
use crate::types::NodeId;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacConfig {
    pub cw_min: u32,
    pub cw_max: u32,
    /// Retransmissions after the first attempt; a frame is transmitted at
    /// most `max_retries + 1` times.
    pub max_retries: u32,
    pub slot_s: f64,
    pub sifs_s: f64,
    /// Extra slots granted past SIFS + ACK airtime before declaring the
    /// acknowledgement lost.
    pub ack_extra_slots: u32,
    pub queue_cap: usize,
    /// Sequence numbers remembered per sender for duplicate filtering.
    pub dedup_window: usize,
    pub cca_threshold_dbm: f64,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            cw_min: 16,
            cw_max: 64,
            max_retries: 7,
            slot_s: 145e-6,
            sifs_s: 75e-6,
            ack_extra_slots: 2,
            queue_cap: 50,
            dedup_window: 16,
            // Sense range at least the usable data range, so carrier sense
            // actually covers the links frames are sent on.
            cca_threshold_dbm: -95.0,
        }
    }
}

impl MacConfig {
    /// How long a unicast sender waits for the acknowledgement, measured
    /// from the end of its data frame.
    pub fn ack_timeout_s(&self, ack_airtime_s: f64) -> f64 {
        self.sifs_s + ack_airtime_s + f64::from(self.ack_extra_slots) * self.slot_s
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.cw_min < 1 || self.cw_min > self.cw_max {
            return Err(format!(
                "contention window bounds invalid: cw_min={} cw_max={}",
                self.cw_min, self.cw_max
            ));
        }
        if self.slot_s <= 0.0 || self.sifs_s <= 0.0 {
            return Err("slot and SIFS durations must be positive".into());
        }
        if self.queue_cap < 1 || self.dedup_window < 1 {
            return Err("queue capacity and dedup window must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Data,
    Ack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacDst {
    Node(NodeId),
    Broadcast,
}

#[derive(Debug, Clone)]
pub enum MacPayload {
    Data(DataPacket),
    Routing(DymoMsg),
    /// Acknowledgements carry nothing.
    None,
}

#[derive(Debug, Clone)]
pub struct MacFrame {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: MacDst,
    /// Rolling per-(src, dst) sequence number.
    pub seq: u8,
    pub payload_bytes: u32,
    pub payload: MacPayload,
}

impl MacFrame {
    pub fn is_broadcast(&self) -> bool {
        self.dst == MacDst::Broadcast
    }
}

/// Contention window dynamics. The window doubles on every even-numbered
/// consecutive failure (capped at `cw_max`) and resets on success.
#[derive(Debug, Clone, Copy)]
pub struct CsmaState {
    pub cw: u32,
    pub retries: u32,
    pub fail_count: u32,
}

impl CsmaState {
    pub fn new(cfg: &MacConfig) -> Self {
        Self { cw: cfg.cw_min, retries: 0, fail_count: 0 }
    }

    pub fn on_failure(&mut self, cfg: &MacConfig) {
        self.fail_count += 1;
        self.retries += 1;
        if self.fail_count % 2 == 0 {
            self.cw = (self.cw * 2).min(cfg.cw_max);
        }
    }

    pub fn on_success(&mut self, cfg: &MacConfig) {
        self.cw = cfg.cw_min;
        self.retries = 0;
        self.fail_count = 0;
    }

    pub fn exhausted(&self, cfg: &MacConfig) -> bool {
        self.retries > cfg.max_retries
    }
}

/// Recently seen sequence numbers per sender. `accept` returns false for a
/// replay within the window.
#[derive(Debug, Default)]
pub struct DedupWindow {
    seen: BTreeMap<NodeId, VecDeque<u8>>,
}

impl DedupWindow {
    pub fn accept(&mut self, src: NodeId, seq: u8, window: usize) -> bool {
        let entry = self.seen.entry(src).or_default();
        if entry.contains(&seq) {
            return false;
        }
        entry.push_back(seq);
        while entry.len() > window {
            entry.pop_front();
        }
        true
    }
}

/// Bounded FIFO of frames awaiting transmission.
#[derive(Debug, Default)]
pub struct MacQueue {
    frames: VecDeque<MacFrame>,
}

impl MacQueue {
    /// Returns the rejected frame when the queue is full.
    pub fn push(&mut self, frame: MacFrame, cap: usize) -> Result<(), MacFrame> {
        if self.frames.len() >= cap {
            return Err(frame);
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn head(&self) -> Option<&MacFrame> {
        self.frames.front()
    }

    pub fn pop(&mut self) -> Option<MacFrame> {
        self.frames.pop_front()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_doubles_on_even_failures() {
        let cfg = MacConfig::default();
        let mut s = CsmaState::new(&cfg);
        let mut seen = Vec::new();
        for _ in 1..=4 {
            s.on_failure(&cfg);
            seen.push(s.cw);
        }
        assert_eq!(seen, vec![16, 32, 32, 64]);
        // Cap at cw_max.
        for _ in 0..10 {
            s.on_failure(&cfg);
        }
        assert_eq!(s.cw, 64);
    }

    #[test]
    fn success_resets_window_and_counters() {
        let cfg = MacConfig::default();
        let mut s = CsmaState::new(&cfg);
        s.on_failure(&cfg);
        s.on_failure(&cfg);
        assert_eq!(s.cw, 32);
        s.on_success(&cfg);
        assert_eq!((s.cw, s.retries, s.fail_count), (16, 0, 0));
    }

    #[test]
    fn retry_budget() {
        let cfg = MacConfig { max_retries: 2, ..MacConfig::default() };
        let mut s = CsmaState::new(&cfg);
        s.on_failure(&cfg);
        s.on_failure(&cfg);
        assert!(!s.exhausted(&cfg));
        s.on_failure(&cfg);
        assert!(s.exhausted(&cfg));
    }

    #[test]
    fn dedup_window_remembers_recent_sequences() {
        let mut w = DedupWindow::default();
        let src = NodeId(3);
        assert!(w.accept(src, 1, 16));
        assert!(w.accept(src, 2, 16));
        assert!(!w.accept(src, 1, 16), "replay must be rejected");
        // Distinct senders do not interact.
        assert!(w.accept(NodeId(4), 1, 16));
    }

    #[test]
    fn dedup_window_evicts_oldest() {
        let mut w = DedupWindow::default();
        let src = NodeId(0);
        for seq in 0..=16 {
            assert!(w.accept(src, seq, 16));
        }
        // Seq 0 has been evicted by the 17th insert and is fresh again.
        assert!(w.accept(src, 0, 16));
    }

    #[test]
    fn queue_rejects_beyond_capacity() {
        let mut q = MacQueue::default();
        let frame = MacFrame {
            kind: FrameKind::Data,
            src: NodeId(0),
            dst: MacDst::Broadcast,
            seq: 0,
            payload_bytes: 16,
            payload: MacPayload::None,
        };
        for _ in 0..50 {
            assert!(q.push(frame.clone(), 50).is_ok());
        }
        assert!(q.push(frame, 50).is_err());
        assert_eq!(q.len(), 50);
    }

    #[test]
    fn ack_timeout_composition() {
        let cfg = MacConfig::default();
        let t = cfg.ack_timeout_s(200e-6);
        assert!((t - (75e-6 + 200e-6 + 2.0 * 145e-6)).abs() < 1e-12);
    }
}
