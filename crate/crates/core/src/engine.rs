//! Discrete-event core: a clock and a priority queue of timestamped events.
//!
//! Events dequeue in `(time, seq)` order where `seq` is assigned at
//! scheduling time, so simultaneous events run in the order they were
//! scheduled and the processing order is a total order. The clock never
//! moves backwards; scheduling into the past is a fatal programming error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A scheduled simulator action. `kind` is the run-specific payload.
#[derive(Debug, Clone)]
pub struct Event<K> {
    /// Simulated seconds.
    pub time: f64,
    /// Scheduling sequence number, unique per run.
    pub seq: u64,
    pub kind: K,
}

struct HeapEntry<K>(Event<K>);

impl<K> PartialEq for HeapEntry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.0.time == other.0.time && self.0.seq == other.0.seq
    }
}
impl<K> Eq for HeapEntry<K> {}

impl<K> Ord for HeapEntry<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert to pop the earliest (time, seq).
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}
impl<K> PartialOrd for HeapEntry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event queue plus clock for one single-threaded simulation run.
pub struct EventQueue<K> {
    heap: BinaryHeap<HeapEntry<K>>,
    next_seq: u64,
    clock: f64,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new(), next_seq: 0, clock: 0.0 }
    }

    /// Current simulated time in seconds.
    pub fn now(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedule `kind` at absolute time `time` and return its sequence
    /// number. Panics if `time` precedes the clock or is not finite.
    pub fn schedule(&mut self, time: f64, kind: K) -> u64 {
        assert!(time.is_finite(), "event time must be finite, got {time}");
        assert!(
            time >= self.clock,
            "cannot schedule into the past: t={time} < clock={}",
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event { time, seq, kind }));
        seq
    }

    /// Pop the next event if it is due at or before `t_end`, advancing the
    /// clock to its timestamp.
    pub fn pop_until(&mut self, t_end: f64) -> Option<Event<K>> {
        match self.heap.peek() {
            Some(entry) if entry.0.time <= t_end => {
                let ev = self.heap.pop().unwrap().0;
                self.clock = ev.time;
                Some(ev)
            }
            _ => None,
        }
    }

    /// Advance the clock to `t_end` once all due events have been drained.
    pub fn finish(&mut self, t_end: f64) {
        assert!(t_end >= self.clock);
        self.clock = t_end;
    }

    /// Drain and process every event with `time <= t_end`, then leave the
    /// clock at exactly `t_end`. Returns the number of events processed.
    pub fn run_until<F: FnMut(&mut Self, Event<K>)>(&mut self, t_end: f64, mut handle: F) -> u64 {
        assert!(t_end >= self.clock);
        let mut processed = 0;
        while let Some(ev) = self.pop_until(t_end) {
            handle(self, ev);
            processed += 1;
        }
        self.finish(t_end);
        processed
    }
}
