//! Reactive route discovery with path accumulation.
//!
//! Route requests flood with every forwarder appending its address; the
//! first copy reaching the target wins and the reply walks the accumulated
//! path back in unicast, installing forward routes as it goes. Link
//! failures invalidate routes and notify exactly the upstream nodes that
//! recently sent data through them. Neighbors are probed on a fixed period
//! and declared lost after a silence timeout.
//!
//! The state machine is transport-agnostic: inputs are received messages
//! and MAC feedback, outputs are [`DymoAction`] values the caller turns
//! into frames and timers. That keeps it drivable both by the full radio
//! stack and by idealized test harnesses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::net::{DataPacket, DropCause};
use crate::types::NodeId;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingConfig {
    pub hello_period_s: f64,
    pub neighbor_timeout_s: f64,
    pub route_lifetime_s: f64,
    pub discovery_attempts: u32,
    pub discovery_retry_s: f64,
    /// Packets buffered per destination while discovery runs.
    pub discovery_buffer: usize,
    /// Below this remaining-energy fraction a node stops forwarding route
    /// requests (it still originates, replies, and forwards data).
    pub energy_gate_fraction: f64,
    /// How long (orig, seq) request ids stay in the duplicate cache.
    pub seen_cache_s: f64,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            hello_period_s: 3.0,
            neighbor_timeout_s: 9.0,
            route_lifetime_s: 10.0,
            discovery_attempts: 3,
            discovery_retry_s: 2.0,
            discovery_buffer: 10,
            energy_gate_fraction: 0.05,
            seen_cache_s: 30.0,
        }
    }
}

impl RoutingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hello_period_s <= 0.0 || self.neighbor_timeout_s <= 0.0 {
            return Err("hello period and neighbor timeout must be positive".into());
        }
        if self.route_lifetime_s <= 0.0 || self.discovery_retry_s <= 0.0 {
            return Err("route lifetime and discovery retry must be positive".into());
        }
        if self.discovery_attempts < 1 || self.discovery_buffer < 1 {
            return Err("discovery needs at least one attempt and one buffer slot".into());
        }
        if !(0.0..=1.0).contains(&self.energy_gate_fraction) {
            return Err("energy_gate_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Safety cap on MAC hops per data packet; forwarding stops beyond it.
/// The visited-path loop guard makes this a backstop, not a policy.
pub const MAX_DATA_HOPS: u32 = 32;

// Control message sizes on the wire (simulator model, bytes).
pub const ADDR_BYTES: u32 = 2;
pub const HELLO_BYTES: u32 = 2;
pub const RREQ_BASE_BYTES: u32 = 8;
pub const RREP_BASE_BYTES: u32 = 8;
pub const RERR_BASE_BYTES: u32 = 4;

/// Route request, flooded. `path` starts at the originator and gains one
/// address per forwarder, so `path.len() == hop_count + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rreq {
    pub orig: NodeId,
    pub target: NodeId,
    pub orig_seq: u16,
    pub path: Vec<NodeId>,
}

impl Rreq {
    pub fn hop_count(&self) -> u32 {
        (self.path.len() - 1) as u32
    }
}

/// Route reply, unicast hop by hop along the reversed accumulated path.
/// `path` is the full originator-to-target node list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rrep {
    pub orig: NodeId,
    pub target: NodeId,
    pub target_seq: u16,
    pub path: Vec<NodeId>,
}

/// Route error, sent only toward nodes that hold routes through the failed
/// link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rerr {
    pub unreachable: Vec<NodeId>,
    pub origin: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DymoMsg {
    Rreq(Rreq),
    Rrep(Rrep),
    Rerr(Rerr),
    Hello { from: NodeId },
}

impl DymoMsg {
    /// MAC payload size of the message in bytes.
    pub fn payload_bytes(&self) -> u32 {
        match self {
            DymoMsg::Rreq(r) => RREQ_BASE_BYTES + ADDR_BYTES * r.path.len() as u32,
            DymoMsg::Rrep(r) => RREP_BASE_BYTES + ADDR_BYTES * r.path.len() as u32,
            DymoMsg::Rerr(e) => RERR_BASE_BYTES + ADDR_BYTES * e.unreachable.len() as u32,
            DymoMsg::Hello { .. } => HELLO_BYTES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RouteEntry {
    pub next_hop: NodeId,
    /// Destination sequence number when learned from the destination
    /// itself (request or reply); None for path-inferred entries.
    pub seq_no: Option<u16>,
    pub hop_count: u32,
    pub expiry: f64,
    /// Upstream neighbors that recently sent data through this route.
    pub precursors: BTreeSet<NodeId>,
}

/// What the caller must do on behalf of the routing layer.
#[derive(Debug, Clone)]
pub enum DymoAction {
    Broadcast(DymoMsg),
    Unicast(NodeId, DymoMsg),
    ForwardData(NodeId, DataPacket),
    Deliver(DataPacket),
    Drop(DataPacket, DropCause),
    /// Re-check discovery `attempt` for `dest` at time `at`.
    ScheduleRetry { dest: NodeId, attempt: u32, at: f64 },
}

#[derive(Debug, Default)]
struct Pending {
    attempt: u32,
    buffered: VecDeque<DataPacket>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RoutingCounters {
    pub rreq_tx: u64,
    pub rreq_rx: u64,
    pub rrep_tx: u64,
    pub rrep_rx: u64,
    pub rerr_tx: u64,
    pub rerr_rx: u64,
    pub hello_tx: u64,
    pub discoveries: u64,
    pub discovery_failures: u64,
}

/// Sequence-number freshness with wraparound: is `a` newer than `b`?
pub fn seq_newer(a: u16, b: u16) -> bool {
    a != b && a.wrapping_sub(b) < 0x8000
}

pub struct DymoNode {
    pub id: NodeId,
    cfg: RoutingConfig,
    seq: u16,
    table: BTreeMap<NodeId, RouteEntry>,
    pending: BTreeMap<NodeId, Pending>,
    seen: BTreeMap<(NodeId, u16), f64>,
    neighbors: BTreeMap<NodeId, f64>,
    /// Set by the host when remaining energy falls under the gate.
    pub gated: bool,
    pub counters: RoutingCounters,
}

impl DymoNode {
    pub fn new(id: NodeId, cfg: RoutingConfig) -> Self {
        Self {
            id,
            cfg,
            seq: 0,
            table: BTreeMap::new(),
            pending: BTreeMap::new(),
            seen: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            gated: false,
            counters: RoutingCounters::default(),
        }
    }

    pub fn config(&self) -> &RoutingConfig {
        &self.cfg
    }

    fn fresh_seq(&mut self) -> u16 {
        self.seq = self.seq.wrapping_add(1);
        self.seq
    }

    /// Valid (unexpired) route to `dest`, if any.
    pub fn route_to(&self, dest: NodeId, now: f64) -> Option<&RouteEntry> {
        self.table.get(&dest).filter(|e| e.expiry > now)
    }

    pub fn routes(&self) -> &BTreeMap<NodeId, RouteEntry> {
        &self.table
    }

    pub fn neighbor_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Record that a frame from `from` was heard; keeps the neighbor alive.
    pub fn note_heard(&mut self, from: NodeId, now: f64) {
        self.neighbors.insert(from, now);
    }

    /// Originate or forward a data packet. No valid route buffers the
    /// packet and starts (or joins) a discovery.
    pub fn handle_data(
        &mut self,
        now: f64,
        from: Option<NodeId>,
        packet: DataPacket,
    ) -> Vec<DymoAction> {
        if packet.dest == self.id {
            return vec![DymoAction::Deliver(packet)];
        }
        if packet.hops >= MAX_DATA_HOPS {
            return vec![DymoAction::Drop(packet, DropCause::HopLimit)];
        }
        let dest = packet.dest;
        if let Some(entry) = self.table.get_mut(&dest) {
            if entry.expiry > now {
                // A next hop the packet already visited means the entry is
                // stale and would loop; discard it and rediscover.
                if packet.path.contains(&entry.next_hop) {
                    self.table.remove(&dest);
                } else {
                    entry.expiry = now + self.cfg.route_lifetime_s;
                    if let Some(upstream) = from {
                        entry.precursors.insert(upstream);
                    }
                    return vec![DymoAction::ForwardData(entry.next_hop, packet)];
                }
            }
        }
        self.buffer_and_discover(now, packet)
    }

    /// Entry point for locally originated traffic.
    pub fn send_data(&mut self, now: f64, packet: DataPacket) -> Vec<DymoAction> {
        debug_assert_ne!(packet.dest, self.id);
        self.handle_data(now, None, packet)
    }

    fn buffer_and_discover(&mut self, now: f64, packet: DataPacket) -> Vec<DymoAction> {
        let dest = packet.dest;
        let buffer_cap = self.cfg.discovery_buffer;
        let already_discovering = self.pending.contains_key(&dest);
        let pending = self.pending.entry(dest).or_default();
        let mut actions = Vec::new();
        pending.buffered.push_back(packet);
        if pending.buffered.len() > buffer_cap {
            let oldest = pending.buffered.pop_front().unwrap();
            actions.push(DymoAction::Drop(oldest, DropCause::BufferOverflow));
        }
        if !already_discovering {
            pending.attempt = 1;
            self.counters.discoveries += 1;
            actions.extend(self.emit_rreq(now, dest, 1));
        }
        actions
    }

    fn emit_rreq(&mut self, now: f64, dest: NodeId, attempt: u32) -> Vec<DymoAction> {
        let orig_seq = self.fresh_seq();
        self.seen.insert((self.id, orig_seq), now);
        self.counters.rreq_tx += 1;
        vec![
            DymoAction::Broadcast(DymoMsg::Rreq(Rreq {
                orig: self.id,
                target: dest,
                orig_seq,
                path: vec![self.id],
            })),
            DymoAction::ScheduleRetry { dest, attempt, at: now + self.cfg.discovery_retry_s },
        ]
    }

    /// Discovery retry timer. Stale timers (superseded attempts, finished
    /// discoveries) are ignored.
    pub fn on_discovery_timer(&mut self, now: f64, dest: NodeId, attempt: u32) -> Vec<DymoAction> {
        let Some(pending) = self.pending.get_mut(&dest) else {
            return Vec::new();
        };
        if pending.attempt != attempt {
            return Vec::new();
        }
        if attempt >= self.cfg.discovery_attempts {
            let pending = self.pending.remove(&dest).unwrap();
            self.counters.discovery_failures += 1;
            return pending
                .buffered
                .into_iter()
                .map(|p| DymoAction::Drop(p, DropCause::DiscoveryFailed))
                .collect();
        }
        pending.attempt = attempt + 1;
        self.emit_rreq(now, dest, attempt + 1)
    }

    /// Handle a received routing message. `from` is the MAC-level sender.
    pub fn handle_msg(&mut self, now: f64, from: NodeId, msg: DymoMsg) -> Vec<DymoAction> {
        self.note_heard(from, now);
        match msg {
            DymoMsg::Hello { .. } => Vec::new(),
            DymoMsg::Rreq(r) => self.handle_rreq(now, from, r),
            DymoMsg::Rrep(r) => self.handle_rrep(now, from, r),
            DymoMsg::Rerr(e) => self.handle_rerr(now, from, e),
        }
    }

    fn handle_rreq(&mut self, now: f64, from: NodeId, mut rreq: Rreq) -> Vec<DymoAction> {
        self.counters.rreq_rx += 1;
        self.seen.retain(|_, &mut t| now - t < self.cfg.seen_cache_s);
        if self.seen.contains_key(&(rreq.orig, rreq.orig_seq)) {
            return Vec::new();
        }
        self.seen.insert((rreq.orig, rreq.orig_seq), now);
        if rreq.path.contains(&self.id) {
            return Vec::new();
        }
        // Reverse routes to the originator and every node on the path, all
        // through the MAC sender, with hop counts from path position.
        let len = rreq.path.len();
        for (i, &node) in rreq.path.iter().enumerate() {
            let hops = (len - i) as u32;
            let seq = (i == 0).then_some(rreq.orig_seq);
            self.install_route(now, node, from, hops, seq);
        }
        let mut actions = self.flush_routable(now);
        if rreq.target == self.id {
            let target_seq = self.fresh_seq();
            let mut path = rreq.path.clone();
            path.push(self.id);
            let back = *rreq.path.last().unwrap();
            self.counters.rrep_tx += 1;
            actions.push(DymoAction::Unicast(
                back,
                DymoMsg::Rrep(Rrep { orig: rreq.orig, target: self.id, target_seq, path }),
            ));
        } else if !self.gated {
            rreq.path.push(self.id);
            self.counters.rreq_tx += 1;
            actions.push(DymoAction::Broadcast(DymoMsg::Rreq(rreq)));
        }
        actions
    }

    fn handle_rrep(&mut self, now: f64, from: NodeId, rrep: Rrep) -> Vec<DymoAction> {
        self.counters.rrep_rx += 1;
        let Some(my_idx) = rrep.path.iter().position(|&n| n == self.id) else {
            return Vec::new();
        };
        // Forward routes to the target and all downstream path nodes.
        for (j, &node) in rrep.path.iter().enumerate().skip(my_idx + 1) {
            let hops = (j - my_idx) as u32;
            let seq = (node == rrep.target).then_some(rrep.target_seq);
            self.install_route(now, node, from, hops, seq);
        }
        let mut actions = self.flush_routable(now);
        if self.id != rrep.orig && my_idx > 0 {
            let prev = rrep.path[my_idx - 1];
            self.counters.rrep_tx += 1;
            actions.push(DymoAction::Unicast(prev, DymoMsg::Rrep(rrep)));
        }
        actions
    }

    fn handle_rerr(&mut self, now: f64, from: NodeId, rerr: Rerr) -> Vec<DymoAction> {
        self.counters.rerr_rx += 1;
        let mut purged = Vec::new();
        for dest in &rerr.unreachable {
            if let Some(entry) = self.table.get(dest) {
                if entry.next_hop == from {
                    let entry = self.table.remove(dest).unwrap();
                    purged.push((*dest, entry.precursors));
                }
            }
        }
        let _ = now;
        self.notify_precursors(purged)
    }

    /// MAC retry exhaustion (or neighbor loss) toward `next_hop`: purge
    /// every route through it and tell exactly the upstreams that used them.
    pub fn on_link_failure(&mut self, now: f64, next_hop: NodeId) -> Vec<DymoAction> {
        let _ = now;
        let dead: Vec<NodeId> = self
            .table
            .iter()
            .filter(|(_, e)| e.next_hop == next_hop)
            .map(|(d, _)| *d)
            .collect();
        let mut purged = Vec::new();
        for dest in dead {
            let entry = self.table.remove(&dest).unwrap();
            purged.push((dest, entry.precursors));
        }
        self.notify_precursors(purged)
    }

    fn notify_precursors(&mut self, purged: Vec<(NodeId, BTreeSet<NodeId>)>) -> Vec<DymoAction> {
        let mut per_upstream: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (dest, precursors) in purged {
            for upstream in precursors {
                per_upstream.entry(upstream).or_default().push(dest);
            }
        }
        per_upstream
            .into_iter()
            .map(|(upstream, unreachable)| {
                self.counters.rerr_tx += 1;
                DymoAction::Unicast(
                    upstream,
                    DymoMsg::Rerr(Rerr { unreachable, origin: self.id }),
                )
            })
            .collect()
    }

    /// Periodic probe tick: broadcast a hello and purge neighbors that have
    /// been silent past the timeout, treating each loss as a link failure.
    pub fn on_probe_tick(&mut self, now: f64) -> Vec<DymoAction> {
        self.counters.hello_tx += 1;
        let mut actions = vec![DymoAction::Broadcast(DymoMsg::Hello { from: self.id })];
        let lost: Vec<NodeId> = self
            .neighbors
            .iter()
            .filter(|(_, &last)| now - last >= self.cfg.neighbor_timeout_s)
            .map(|(&n, _)| n)
            .collect();
        for n in lost {
            self.neighbors.remove(&n);
            actions.extend(self.on_link_failure(now, n));
        }
        actions
    }

    fn install_route(
        &mut self,
        now: f64,
        dest: NodeId,
        next_hop: NodeId,
        hop_count: u32,
        seq_no: Option<u16>,
    ) {
        if dest == self.id {
            return;
        }
        let expiry = now + self.cfg.route_lifetime_s;
        let replace = match self.table.get(&dest) {
            None => true,
            Some(e) if e.expiry <= now => true,
            Some(e) => match (seq_no, e.seq_no) {
                (Some(a), Some(b)) if a != b => seq_newer(a, b),
                (Some(_), None) => true,
                _ => hop_count < e.hop_count,
            },
        };
        if replace {
            let precursors = self
                .table
                .remove(&dest)
                .map(|e| e.precursors)
                .unwrap_or_default();
            self.table.insert(dest, RouteEntry { next_hop, seq_no, hop_count, expiry, precursors });
        } else if let Some(e) = self.table.get_mut(&dest) {
            if e.next_hop == next_hop {
                e.expiry = expiry;
                e.hop_count = hop_count;
                if seq_no.is_some() {
                    e.seq_no = seq_no;
                }
            }
        }
    }

    /// Flush any buffered packets whose destination became routable.
    fn flush_routable(&mut self, now: f64) -> Vec<DymoAction> {
        let ready: Vec<NodeId> = self
            .pending
            .keys()
            .filter(|d| self.table.get(d).is_some_and(|e| e.expiry > now))
            .copied()
            .collect();
        let mut actions = Vec::new();
        for dest in ready {
            let pending = self.pending.remove(&dest).unwrap();
            for packet in pending.buffered {
                let entry = self.table.get_mut(&dest).unwrap();
                entry.expiry = now + self.cfg.route_lifetime_s;
                actions.push(DymoAction::ForwardData(entry.next_hop, packet));
            }
        }
        actions
    }
}
