//! The simulation runtime: nodes, interfaces, channels, and the event loop
//! that drives traffic generation, CSMA/CA contention, frame reception
//! with SINR-based error trials, routing, mobility, and energy accounting.
//!
//! Backoff is event-driven rather than slot-polled: a contending interface
//! schedules its transmit instant directly and is frozen/resumed when
//! channel activity it can sense starts or ends, consuming whole idle
//! slots. Reception is decided at frame end from the worst-case SINR over
//! the frame's air interval, one Bernoulli trial per addressed receiver.

use std::collections::BTreeSet;
use std::io::Write;

use crate::engine::{Event, EventQueue};
use crate::mac::{
    CsmaState, DedupWindow, FrameKind, MacConfig, MacDst, MacFrame, MacPayload, MacQueue,
};
use crate::metrics::{Collector, NodeEnergy, RunCounters, RunSummary};
use crate::mobility::{MobilityConfig, MobilityState};
use crate::net::{
    self, DataPacket, IfaceRole, NodeRole, Role, Strategy, TrafficConfig,
};
use crate::phy::{
    self, airtime_s, dbm_to_mw, frame_bits, ChannelModel, ChannelParams, EnergyModel,
    FrequencyBand, LinkKind, Modulation, PhyConfig,
};
use crate::rng::{RandomStreams, StreamId, StreamPurpose};
use crate::routing::{DymoAction, DymoNode, RoutingConfig};
use crate::types::{ChannelId, IfaceId, NodeId, Point3};

#[derive(Debug, Clone)]
pub enum EventKind {
    AppGenerate { node: NodeId },
    InjectPacket { src: NodeId, dest: NodeId, payload_bytes: u32 },
    MobilityStep,
    TxStart { iface: IfaceId, epoch: u64 },
    TxEnd { iface: IfaceId, tx_id: u64 },
    SendAck { iface: IfaceId, to: NodeId, seq: u8 },
    AckTimeout { iface: IfaceId, epoch: u64 },
    HelloTick { node: NodeId },
    DiscoveryRetry { node: NodeId, dest: NodeId, attempt: u32 },
    /// Jittered hand-off of a flooded frame to the MAC.
    EnqueueFrame { iface: IfaceId, frame: MacFrame },
    /// Re-evaluate contenders when a virtual-carrier reservation lapses.
    ChannelNotify { channel: ChannelId },
}

impl EventKind {
    fn label(&self) -> &'static str {
        match self {
            EventKind::AppGenerate { .. } | EventKind::InjectPacket { .. } => "app-generate",
            EventKind::MobilityStep => "mobility-step",
            EventKind::TxStart { .. } => "frame-start",
            EventKind::TxEnd { .. } => "frame-end",
            EventKind::SendAck { .. }
            | EventKind::AckTimeout { .. }
            | EventKind::HelloTick { .. }
            | EventKind::DiscoveryRetry { .. }
            | EventKind::EnqueueFrame { .. }
            | EventKind::ChannelNotify { .. } => "timer",
        }
    }

    fn target(&self, ifaces: &[Iface]) -> String {
        match self {
            EventKind::AppGenerate { node }
            | EventKind::InjectPacket { src: node, .. }
            | EventKind::HelloTick { node }
            | EventKind::DiscoveryRetry { node, .. } => node.to_string(),
            EventKind::MobilityStep => "world".into(),
            EventKind::ChannelNotify { channel } => channel.to_string(),
            EventKind::TxStart { iface, .. }
            | EventKind::TxEnd { iface, .. }
            | EventKind::SendAck { iface, .. }
            | EventKind::AckTimeout { iface, .. }
            | EventKind::EnqueueFrame { iface, .. } => ifaces[iface.0 as usize].node.to_string(),
        }
    }
}

/// Where positions come from.
enum Positioner {
    Group(MobilityState),
    Static(Vec<Point3>),
}

impl Positioner {
    fn node_point(&self, node: NodeId, t: f64) -> Point3 {
        match self {
            Positioner::Group(m) => m.node_point(net::body_of(node), net::slot_of(node), t),
            Positioner::Static(p) => p[node.0 as usize],
        }
    }

    fn distance(&self, a: NodeId, b: NodeId, t: f64) -> f64 {
        self.node_point(a, t).distance(&self.node_point(b, t))
    }

    fn link_kind(&self, a: NodeId, b: NodeId) -> LinkKind {
        match self {
            Positioner::Group(_) if net::body_of(a) == net::body_of(b) => LinkKind::OnBody,
            _ => LinkKind::BodyToBody,
        }
    }
}

/// Default maximum random delay before a route request enters the MAC.
const FLOOD_JITTER_S: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
enum LinkState {
    Idle,
    /// Counting down backoff. `basis` is the instant counting (re)started;
    /// None while frozen by a busy channel.
    Contending { remaining: u32, basis: Option<f64> },
    Transmitting,
    AwaitAck,
}

struct Iface {
    node: NodeId,
    channel: ChannelId,
    queue: MacQueue,
    csma: CsmaState,
    link: LinkState,
    /// Bumped to invalidate in-flight TxStart/AckTimeout events.
    epoch: u64,
    dedup: DedupWindow,
    unicast_seq: std::collections::BTreeMap<NodeId, u8>,
    broadcast_seq: u8,
    tx_time_s: f64,
    rx_time_s: f64,
}

/// What a node does with packets above the MAC.
enum UpperLayer {
    /// Reactive routing on the interface given in `NodeCtx::dymo_iface`.
    Dymo,
    /// Clustered sensor: everything goes straight to this node.
    DirectTo(NodeId),
    /// Harness mode: single MAC hop to the packet's destination.
    DirectToDest,
}

struct NodeCtx {
    role: NodeRole,
    ifaces: Vec<IfaceId>,
    upper: UpperLayer,
    dymo: Option<DymoNode>,
    dymo_iface: IfaceId,
}

#[derive(Clone)]
struct Transmission {
    tx_id: u64,
    iface: IfaceId,
    src_node: NodeId,
    start: f64,
    end: f64,
    power_dbm: f64,
    frame: MacFrame,
}

struct Channel {
    members: Vec<IfaceId>,
    ledger: Vec<Transmission>,
}

/// Full parameter set for one body-to-body scenario run.
pub struct WbbnRunConfig {
    pub strategy: Strategy,
    pub band: FrequencyBand,
    pub modulation: Modulation,
    pub tx_power_dbm: f64,
    pub traffic: TrafficConfig,
    pub mobility: MobilityConfig,
    pub on_body: ChannelParams,
    pub body_to_body: ChannelParams,
    /// Ground-proximity penalty on body-to-body links, dB per decade of
    /// antenna-height product below `height_reference_m` squared. Low
    /// mounts (ankle, swinging wrist) lose range the way a two-ray ground
    /// bounce takes it; stomach-height links are unaffected.
    pub height_loss_db_per_decade: f64,
    pub height_reference_m: f64,
    pub mac: MacConfig,
    pub routing: RoutingConfig,
    pub energy: EnergyModel,
    pub duration_s: f64,
    pub seed: u64,
}

impl WbbnRunConfig {
    pub fn new(strategy: Strategy, band: FrequencyBand, modulation: Modulation) -> Self {
        Self {
            strategy,
            band,
            modulation,
            tx_power_dbm: 0.0,
            traffic: TrafficConfig { payload_bytes: 16, interval_s: 1.0 },
            mobility: MobilityConfig::default(),
            on_body: ChannelParams::default_on_body(),
            body_to_body: ChannelParams::default_body_to_body(band),
            height_loss_db_per_decade: 20.0,
            height_reference_m: 1.1,
            mac: MacConfig::default(),
            routing: RoutingConfig::default(),
            energy: EnergyModel::default(),
            duration_s: 60.0,
            seed: 1,
        }
    }
}

/// Flat harness topology: every node one interface on one shared channel.
pub struct CustomWorldConfig {
    pub positions: Vec<Point3>,
    pub band: FrequencyBand,
    pub modulation: Modulation,
    pub tx_power_dbm: f64,
    pub on_body: ChannelParams,
    pub body_to_body: ChannelParams,
    pub mac: MacConfig,
    pub routing: RoutingConfig,
    pub energy: EnergyModel,
    pub duration_s: f64,
    pub seed: u64,
    pub shadowing: bool,
    /// Run routing on every node; false leaves bare single-hop MACs.
    pub run_dymo: bool,
    /// Periodic neighbor probes (only meaningful with routing).
    pub hellos: bool,
}

impl CustomWorldConfig {
    pub fn new(positions: Vec<Point3>) -> Self {
        let band = FrequencyBand::Mhz2450;
        Self {
            positions,
            band,
            modulation: Modulation::Dqpsk,
            tx_power_dbm: 0.0,
            on_body: ChannelParams::default_on_body(),
            body_to_body: ChannelParams::default_body_to_body(band),
            mac: MacConfig::default(),
            routing: RoutingConfig::default(),
            energy: EnergyModel::default(),
            duration_s: 60.0,
            seed: 1,
            shadowing: false,
            run_dymo: true,
            hellos: true,
        }
    }
}

pub struct World {
    queue: EventQueue<EventKind>,
    streams: RandomStreams,
    positioner: Positioner,
    channel_model: ChannelModel,
    phy: PhyConfig,
    mac_cfg: MacConfig,
    energy_model: EnergyModel,
    nodes: Vec<NodeCtx>,
    ifaces: Vec<Iface>,
    channels: Vec<Channel>,
    leader: NodeId,
    traffic: Option<TrafficConfig>,
    duration_s: f64,
    mobility_step_s: f64,
    collector: Collector,
    counters: RunCounters,
    energy: Vec<NodeEnergy>,
    next_tx_id: u64,
    next_packet_id: u64,
    /// How long finished transmissions stay in the ledger for overlap
    /// queries; anything older can no longer intersect a live frame.
    prune_horizon_s: f64,
    /// Virtual carrier sense: after a sensed unicast data frame the medium
    /// is treated as reserved for its immediate acknowledgement.
    ack_guard_s: f64,
    blocked: BTreeSet<(NodeId, NodeId)>,
    ideal_links: bool,
    energy_gate_fraction: f64,
    flood_jitter_s: f64,
    height_loss_db_per_decade: f64,
    height_reference_m: f64,
    trace: Option<Box<dyn Write>>,
    trajectory: Option<Box<dyn Write>>,
}

impl World {
    // -----------------------------------------------------------------
    // Construction
    // -----------------------------------------------------------------

    pub fn wbbn(cfg: WbbnRunConfig) -> Result<Self, String> {
        cfg.mac.validate()?;
        cfg.routing.validate()?;
        cfg.energy.validate()?;
        cfg.on_body.validate()?;
        cfg.body_to_body.validate()?;
        cfg.traffic.validate()?;
        if cfg.duration_s <= 0.0 {
            return Err("duration must be positive".into());
        }
        let mobility = MobilityState::new(cfg.mobility.clone())?;
        let bodies = mobility.config().body_count();
        let plan = net::build_network(cfg.strategy, bodies)?;
        let phy = PhyConfig {
            band: cfg.band,
            modulation: cfg.modulation,
            data_rate_bps: phy::data_rate_bps(cfg.band, cfg.modulation),
            tx_power_dbm: cfg.tx_power_dbm,
        };
        let channel_count = plan.plan.channel_count();
        let mut world = Self::empty(
            Positioner::Group(mobility),
            ChannelModel::new(cfg.on_body, cfg.body_to_body),
            phy,
            cfg.mac,
            cfg.energy,
            channel_count,
            plan.leader,
            cfg.duration_s,
            cfg.seed,
        );
        world.traffic = Some(cfg.traffic);
        world.mobility_step_s = cfg.mobility.step_s;
        world.energy_gate_fraction = cfg.routing.energy_gate_fraction;
        world.height_loss_db_per_decade = cfg.height_loss_db_per_decade;
        world.height_reference_m = cfg.height_reference_m;

        for planned in &plan.nodes {
            let node = planned.node;
            let mut iface_ids = Vec::new();
            let mut dymo_iface = IfaceId(0);
            for pi in &planned.ifaces {
                let id = world.add_iface(node, pi.channel);
                if pi.role != IfaceRole::Intra || planned.ifaces.len() == 1 {
                    dymo_iface = id;
                }
                iface_ids.push(id);
            }
            let upper = if planned.runs_dymo {
                UpperLayer::Dymo
            } else {
                UpperLayer::DirectTo(planned.coordinator)
            };
            world.nodes.push(NodeCtx {
                role: planned.role,
                ifaces: iface_ids,
                upper,
                dymo: planned.runs_dymo.then(|| DymoNode::new(node, cfg.routing)),
                dymo_iface,
            });
            world.energy.push(NodeEnergy::default());
        }

        // Initial events: traffic (everyone but the sink), probes, mobility.
        let traffic = cfg.traffic;
        for planned in &plan.nodes {
            let node = planned.node;
            if node != plan.leader {
                let jitter = world.streams.uniform(
                    StreamId::new(StreamPurpose::Traffic, node.0),
                    0.0,
                    traffic.interval_s,
                );
                world.queue.schedule(jitter, EventKind::AppGenerate { node });
            }
            if planned.runs_dymo {
                let jitter = world.streams.uniform(
                    StreamId::new(StreamPurpose::Traffic, node.0),
                    0.0,
                    cfg.routing.hello_period_s,
                );
                world.queue.schedule(jitter, EventKind::HelloTick { node });
            }
        }
        world.queue.schedule(cfg.mobility.step_s, EventKind::MobilityStep);
        Ok(world)
    }

    pub fn custom(cfg: CustomWorldConfig) -> Result<Self, String> {
        cfg.mac.validate()?;
        cfg.routing.validate()?;
        cfg.energy.validate()?;
        if cfg.positions.is_empty() {
            return Err("custom world needs at least one node".into());
        }
        let phy = PhyConfig {
            band: cfg.band,
            modulation: cfg.modulation,
            data_rate_bps: phy::data_rate_bps(cfg.band, cfg.modulation),
            tx_power_dbm: cfg.tx_power_dbm,
        };
        let mut model = ChannelModel::new(cfg.on_body, cfg.body_to_body);
        model.shadowing_enabled = cfg.shadowing;
        let count = cfg.positions.len();
        let mut world = Self::empty(
            Positioner::Static(cfg.positions),
            model,
            phy,
            cfg.mac,
            cfg.energy,
            1,
            NodeId(0),
            cfg.duration_s,
            cfg.seed,
        );
        world.energy_gate_fraction = cfg.routing.energy_gate_fraction;
        for i in 0..count {
            let node = NodeId(i as u32);
            let iface = world.add_iface(node, ChannelId(0));
            let role = if i == 0 { Role::LeaderCoordinator } else { Role::Coordinator };
            world.nodes.push(NodeCtx {
                role: NodeRole { role, body: node.0, slot: 0 },
                ifaces: vec![iface],
                upper: if cfg.run_dymo { UpperLayer::Dymo } else { UpperLayer::DirectToDest },
                dymo: cfg.run_dymo.then(|| DymoNode::new(node, cfg.routing)),
                dymo_iface: iface,
            });
            world.energy.push(NodeEnergy::default());
            if cfg.run_dymo && cfg.hellos {
                let jitter = world.streams.uniform(
                    StreamId::new(StreamPurpose::Traffic, node.0),
                    0.0,
                    cfg.routing.hello_period_s,
                );
                world.queue.schedule(jitter, EventKind::HelloTick { node });
            }
        }
        Ok(world)
    }

    #[allow(clippy::too_many_arguments)]
    fn empty(
        positioner: Positioner,
        channel_model: ChannelModel,
        phy: PhyConfig,
        mac_cfg: MacConfig,
        energy_model: EnergyModel,
        channel_count: usize,
        leader: NodeId,
        duration_s: f64,
        seed: u64,
    ) -> Self {
        let max_air = airtime_s(1024 + 64, phy.data_rate_bps);
        Self {
            queue: EventQueue::new(),
            streams: RandomStreams::new(seed),
            positioner,
            channel_model,
            phy,
            mac_cfg,
            energy_model,
            nodes: Vec::new(),
            ifaces: Vec::new(),
            channels: (0..channel_count)
                .map(|_| Channel { members: Vec::new(), ledger: Vec::new() })
                .collect(),
            leader,
            traffic: None,
            duration_s,
            mobility_step_s: 0.0,
            collector: Collector::default(),
            counters: RunCounters::default(),
            energy: Vec::new(),
            next_tx_id: 0,
            next_packet_id: 0,
            prune_horizon_s: max_air + mac_cfg.ack_timeout_s(airtime_s(0, phy.data_rate_bps)),
            ack_guard_s: mac_cfg.sifs_s + airtime_s(0, phy.data_rate_bps),
            blocked: BTreeSet::new(),
            ideal_links: false,
            energy_gate_fraction: RoutingConfig::default().energy_gate_fraction,
            flood_jitter_s: FLOOD_JITTER_S,
            height_loss_db_per_decade: 0.0,
            height_reference_m: 1.1,
            trace: None,
            trajectory: None,
        }
    }

    /// Override the maximum route-request forwarding jitter.
    pub fn set_flood_jitter(&mut self, max_s: f64) {
        self.flood_jitter_s = max_s;
    }

    fn add_iface(&mut self, node: NodeId, channel: ChannelId) -> IfaceId {
        let id = IfaceId(self.ifaces.len() as u32);
        self.ifaces.push(Iface {
            node,
            channel,
            queue: MacQueue::default(),
            csma: CsmaState::new(&self.mac_cfg),
            link: LinkState::Idle,
            epoch: 0,
            dedup: DedupWindow::default(),
            unicast_seq: std::collections::BTreeMap::new(),
            broadcast_seq: 0,
            tx_time_s: 0.0,
            rx_time_s: 0.0,
        });
        self.channels[channel.0 as usize].members.push(id);
        id
    }

    // -----------------------------------------------------------------
    // Harness controls
    // -----------------------------------------------------------------

    /// Kill the directed link `from -> to`: frames still occupy the channel
    /// but never pass the reception trial at `to`.
    pub fn block_link(&mut self, from: NodeId, to: NodeId) {
        self.blocked.insert((from, to));
    }

    pub fn unblock_link(&mut self, from: NodeId, to: NodeId) {
        self.blocked.remove(&(from, to));
    }

    /// Every non-blocked reception succeeds (lossless links).
    pub fn set_ideal_links(&mut self, on: bool) {
        self.ideal_links = on;
    }

    /// Inject one application packet at time `at`.
    pub fn schedule_packet(&mut self, src: NodeId, dest: NodeId, payload_bytes: u32, at: f64) {
        self.queue.schedule(at, EventKind::InjectPacket { src, dest, payload_bytes });
    }

    pub fn set_trace(&mut self, sink: Box<dyn Write>) {
        self.trace = Some(sink);
    }

    pub fn set_trajectory(&mut self, sink: Box<dyn Write>) {
        self.trajectory = Some(sink);
        if let Some(w) = self.trajectory.as_mut() {
            let _ = writeln!(w, "t,body_id,node_slot,x,y,z");
        }
    }

    /// Override the remaining-energy fraction below which nodes stop
    /// forwarding route requests.
    pub fn set_energy_gate_fraction(&mut self, fraction: f64) {
        self.energy_gate_fraction = fraction;
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn collector(&self) -> &Collector {
        &self.collector
    }

    pub fn route_hops(&self, node: NodeId, dest: NodeId) -> Option<u32> {
        self.nodes[node.0 as usize]
            .dymo
            .as_ref()
            .and_then(|d| d.route_to(dest, self.queue.now()))
            .map(|e| e.hop_count)
    }

    pub fn counters(&self) -> RunCounters {
        let mut c = self.counters;
        for n in &self.nodes {
            if let Some(d) = &n.dymo {
                c.rreq_tx += d.counters.rreq_tx;
                c.rreq_rx += d.counters.rreq_rx;
                c.rrep_tx += d.counters.rrep_tx;
                c.rrep_rx += d.counters.rrep_rx;
                c.rerr_tx += d.counters.rerr_tx;
                c.rerr_rx += d.counters.rerr_rx;
                c.hello_tx += d.counters.hello_tx;
                c.discoveries += d.counters.discoveries;
                c.discovery_failures += d.counters.discovery_failures;
            }
        }
        c.zero_distance_warnings = self.channel_model.zero_distance_warnings;
        c
    }

    // -----------------------------------------------------------------
    // Run loop
    // -----------------------------------------------------------------

    /// Process every event up to `t_end`; returns the number processed.
    pub fn run_until(&mut self, t_end: f64) -> u64 {
        let mut processed = 0;
        while let Some(ev) = self.queue.pop_until(t_end) {
            if self.trace.is_some() {
                let line = format!(
                    "{:.9}\t{}\t{}\t{}",
                    ev.time,
                    ev.seq,
                    ev.kind.target(&self.ifaces),
                    ev.kind.label()
                );
                if let Some(w) = self.trace.as_mut() {
                    let _ = writeln!(w, "{line}");
                }
            }
            self.dispatch(ev);
            processed += 1;
        }
        self.queue.finish(t_end);
        processed
    }

    /// Run to the configured duration and aggregate the outcome.
    pub fn run(&mut self) -> RunSummary {
        self.run_until(self.duration_s);
        self.finalize()
    }

    pub fn finalize(&mut self) -> RunSummary {
        let end = self.queue.now();
        for iface in &self.ifaces {
            let idle_s = (end - iface.tx_time_s - iface.rx_time_s).max(0.0);
            self.energy[iface.node.0 as usize].idle_j +=
                phy::packet_energy_j(idle_s, self.energy_model.i_idle_ma);
        }
        let energy_pairs: Vec<(Role, NodeEnergy)> = self
            .nodes
            .iter()
            .zip(&self.energy)
            .map(|(n, e)| (n.role.role, *e))
            .collect();
        RunSummary::build(&self.collector, self.counters(), &energy_pairs)
    }

    fn dispatch(&mut self, ev: Event<EventKind>) {
        match ev.kind {
            EventKind::AppGenerate { node } => self.on_app_generate(node),
            EventKind::InjectPacket { src, dest, payload_bytes } => {
                self.generate_packet(src, dest, payload_bytes)
            }
            EventKind::MobilityStep => self.on_mobility_step(),
            EventKind::TxStart { iface, epoch } => self.on_tx_start(iface, epoch),
            EventKind::TxEnd { iface: _, tx_id } => self.on_tx_end(tx_id),
            EventKind::SendAck { iface, to, seq } => self.on_send_ack(iface, to, seq),
            EventKind::AckTimeout { iface, epoch } => self.on_ack_timeout(iface, epoch),
            EventKind::HelloTick { node } => self.on_hello_tick(node),
            EventKind::DiscoveryRetry { node, dest, attempt } => {
                self.on_discovery_retry(node, dest, attempt)
            }
            EventKind::EnqueueFrame { iface, frame } => self.enqueue(iface, frame),
            EventKind::ChannelNotify { channel } => self.notify_channel(channel),
        }
    }

    // -----------------------------------------------------------------
    // Application layer
    // -----------------------------------------------------------------

    fn on_app_generate(&mut self, node: NodeId) {
        let traffic = self.traffic.expect("CBR traffic not configured");
        self.generate_packet(node, self.leader, traffic.payload_bytes);
        let next = self.queue.now() + traffic.interval_s;
        if next < self.duration_s {
            self.queue.schedule(next, EventKind::AppGenerate { node });
        }
    }

    fn generate_packet(&mut self, src: NodeId, dest: NodeId, payload_bytes: u32) {
        let now = self.queue.now();
        let packet = DataPacket {
            id: self.next_packet_id,
            src,
            dest,
            payload_bytes,
            created_t: now,
            hops: 0,
            path: vec![src],
        };
        self.next_packet_id += 1;
        self.collector.on_generated(&packet);
        if dest == src {
            self.collector.on_delivered(now, &packet);
            return;
        }
        match &self.nodes[src.0 as usize].upper {
            UpperLayer::Dymo => {
                self.refresh_energy_gate(src);
                let actions =
                    self.nodes[src.0 as usize].dymo.as_mut().unwrap().send_data(now, packet);
                self.apply_dymo_actions(src, actions);
            }
            UpperLayer::DirectTo(coordinator) => {
                let to = *coordinator;
                let iface = self.nodes[src.0 as usize].ifaces[0];
                self.enqueue_data(iface, to, packet);
            }
            UpperLayer::DirectToDest => {
                let iface = self.nodes[src.0 as usize].ifaces[0];
                self.enqueue_data(iface, dest, packet);
            }
        }
    }

    fn on_mobility_step(&mut self) {
        if let Positioner::Group(m) = &mut self.positioner {
            m.advance(self.mobility_step_s, &mut self.streams);
            if let Some(w) = self.trajectory.as_mut() {
                let t = self.queue.now();
                for pose in m.poses() {
                    for slot in 0..crate::mobility::NODES_PER_BODY as u8 {
                        let p = crate::mobility::node_position(pose, slot, t);
                        let _ = writeln!(
                            w,
                            "{:.3},{},{},{:.4},{:.4},{:.4}",
                            t, pose.body_id, slot, p.x, p.y, p.z
                        );
                    }
                }
            }
        }
        let next = self.queue.now() + self.mobility_step_s;
        if self.mobility_step_s > 0.0 && next < self.duration_s {
            self.queue.schedule(next, EventKind::MobilityStep);
        }
    }

    fn on_hello_tick(&mut self, node: NodeId) {
        let now = self.queue.now();
        self.refresh_energy_gate(node);
        let actions = match self.nodes[node.0 as usize].dymo.as_mut() {
            Some(d) => d.on_probe_tick(now),
            None => return,
        };
        self.apply_dymo_actions(node, actions);
        let period = self.nodes[node.0 as usize]
            .dymo
            .as_ref()
            .map(|d| d.config().hello_period_s)
            .unwrap_or(3.0);
        let next = now + period;
        if next < self.duration_s {
            self.queue.schedule(next, EventKind::HelloTick { node });
        }
    }

    fn on_discovery_retry(&mut self, node: NodeId, dest: NodeId, attempt: u32) {
        let now = self.queue.now();
        let actions = match self.nodes[node.0 as usize].dymo.as_mut() {
            Some(d) => d.on_discovery_timer(now, dest, attempt),
            None => return,
        };
        self.apply_dymo_actions(node, actions);
    }

    // -----------------------------------------------------------------
    // Routing glue
    // -----------------------------------------------------------------

    fn refresh_energy_gate(&mut self, node: NodeId) {
        let gate = self.energy_gate_fraction;
        let remaining = self.remaining_energy_fraction(node);
        if let Some(d) = self.nodes[node.0 as usize].dymo.as_mut() {
            d.gated = remaining < gate;
        }
    }

    /// Remaining battery fraction right now, counting idle draw so far.
    pub fn remaining_energy_fraction(&self, node: NodeId) -> f64 {
        let now = self.queue.now();
        let acc = &self.energy[node.0 as usize];
        let mut consumed = acc.tx_j + acc.rx_j + acc.idle_j;
        for &iface_id in &self.nodes[node.0 as usize].ifaces {
            let iface = &self.ifaces[iface_id.0 as usize];
            let idle_s = (now - iface.tx_time_s - iface.rx_time_s).max(0.0);
            consumed += phy::packet_energy_j(idle_s, self.energy_model.i_idle_ma);
        }
        (1.0 - consumed / self.energy_model.battery_j).max(0.0)
    }

    fn apply_dymo_actions(&mut self, node: NodeId, actions: Vec<DymoAction>) {
        let now = self.queue.now();
        let iface = self.nodes[node.0 as usize].dymo_iface;
        for action in actions {
            match action {
                DymoAction::Broadcast(msg) => {
                    let jittered = matches!(msg, crate::routing::DymoMsg::Rreq(_));
                    let payload_bytes = msg.payload_bytes();
                    let seq = {
                        let f = &mut self.ifaces[iface.0 as usize];
                        f.broadcast_seq = f.broadcast_seq.wrapping_add(1);
                        f.broadcast_seq
                    };
                    let frame = MacFrame {
                        kind: FrameKind::Data,
                        src: node,
                        dst: MacDst::Broadcast,
                        seq,
                        payload_bytes,
                        payload: MacPayload::Routing(msg),
                    };
                    if jittered && self.flood_jitter_s > 0.0 {
                        // De-synchronize the flood: simultaneous rebroadcasts
                        // would otherwise pile into the same backoff window.
                        let jitter = self.streams.uniform(
                            StreamId::new(StreamPurpose::FloodJitter, node.0),
                            0.0,
                            self.flood_jitter_s,
                        );
                        self.queue.schedule(now + jitter, EventKind::EnqueueFrame { iface, frame });
                    } else {
                        self.enqueue(iface, frame);
                    }
                }
                DymoAction::Unicast(to, msg) => {
                    let payload_bytes = msg.payload_bytes();
                    let seq = self.next_unicast_seq(iface, to);
                    self.enqueue(
                        iface,
                        MacFrame {
                            kind: FrameKind::Data,
                            src: node,
                            dst: MacDst::Node(to),
                            seq,
                            payload_bytes,
                            payload: MacPayload::Routing(msg),
                        },
                    );
                }
                DymoAction::ForwardData(next_hop, packet) => {
                    self.enqueue_data(iface, next_hop, packet);
                }
                DymoAction::Deliver(packet) => {
                    self.collector.on_delivered(now, &packet);
                }
                DymoAction::Drop(packet, cause) => {
                    self.collector.on_dropped(&packet, cause);
                }
                DymoAction::ScheduleRetry { dest, attempt, at } => {
                    self.queue.schedule(at, EventKind::DiscoveryRetry { node, dest, attempt });
                }
            }
        }
    }

    // -----------------------------------------------------------------
    // MAC layer
    // -----------------------------------------------------------------

    fn next_unicast_seq(&mut self, iface: IfaceId, to: NodeId) -> u8 {
        let f = &mut self.ifaces[iface.0 as usize];
        let seq = f.unicast_seq.entry(to).or_insert(0);
        *seq = seq.wrapping_add(1);
        *seq
    }

    fn enqueue_data(&mut self, iface: IfaceId, to: NodeId, packet: DataPacket) {
        debug_assert_ne!(self.ifaces[iface.0 as usize].node, to);
        let seq = self.next_unicast_seq(iface, to);
        let frame = MacFrame {
            kind: FrameKind::Data,
            src: self.ifaces[iface.0 as usize].node,
            dst: MacDst::Node(to),
            seq,
            payload_bytes: packet.payload_bytes,
            payload: MacPayload::Data(packet),
        };
        self.enqueue(iface, frame);
    }

    fn enqueue(&mut self, iface: IfaceId, frame: MacFrame) {
        let cap = self.mac_cfg.queue_cap;
        let f = &mut self.ifaces[iface.0 as usize];
        match f.queue.push(frame, cap) {
            Ok(()) => {
                if f.link == LinkState::Idle {
                    self.start_contention(iface);
                }
            }
            Err(rejected) => {
                self.counters.mac_drops_queue += 1;
                if let MacPayload::Data(pkt) = rejected.payload {
                    self.collector.on_dropped(&pkt, net::DropCause::MacQueueFull);
                }
            }
        }
    }

    fn start_contention(&mut self, iface: IfaceId) {
        let cw = self.ifaces[iface.0 as usize].csma.cw;
        let slots =
            self.streams.uniform_u32(StreamId::new(StreamPurpose::Backoff, iface.0), 1, cw);
        self.ifaces[iface.0 as usize].link =
            LinkState::Contending { remaining: slots, basis: None };
        self.try_resume(iface);
    }

    /// If contending and the channel is clear, anchor the countdown now and
    /// schedule the transmit instant.
    fn try_resume(&mut self, iface: IfaceId) {
        let LinkState::Contending { remaining, basis: None } = self.ifaces[iface.0 as usize].link
        else {
            return;
        };
        if self.cca_busy(iface) {
            return;
        }
        let now = self.queue.now();
        let slot = self.mac_cfg.slot_s;
        let f = &mut self.ifaces[iface.0 as usize];
        f.link = LinkState::Contending { remaining, basis: Some(now) };
        f.epoch += 1;
        let epoch = f.epoch;
        let at = now + f64::from(remaining) * slot;
        self.queue.schedule(at, EventKind::TxStart { iface, epoch });
    }

    /// Stop the countdown, crediting whole elapsed idle slots.
    fn freeze(&mut self, iface: IfaceId) {
        let now = self.queue.now();
        let slot = self.mac_cfg.slot_s;
        let f = &mut self.ifaces[iface.0 as usize];
        if let LinkState::Contending { remaining, basis: Some(b) } = f.link {
            let consumed = (((now - b) / slot).floor() as u32).min(remaining);
            f.link = LinkState::Contending { remaining: remaining - consumed, basis: None };
            f.epoch += 1;
        }
    }

    /// Total link loss `tx -> rx` right now: log-distance pathloss with
    /// shadowing, plus the ground-proximity penalty on body-to-body links.
    fn link_loss_db(&mut self, tx: NodeId, rx: NodeId) -> f64 {
        let now = self.queue.now();
        let kind = self.positioner.link_kind(tx, rx);
        let a = self.positioner.node_point(tx, now);
        let b = self.positioner.node_point(rx, now);
        let mut pl =
            self.channel_model
                .pathloss_db(kind, tx, rx, a.distance(&b), now, &mut self.streams);
        if kind == LinkKind::BodyToBody && self.height_loss_db_per_decade > 0.0 {
            let product = a.z.max(0.05) * b.z.max(0.05);
            let reference = self.height_reference_m * self.height_reference_m;
            if product < reference {
                pl += self.height_loss_db_per_decade * (reference / product).log10();
            }
        }
        pl
    }

    /// Clear-channel assessment at `iface`: busy if any ongoing same-channel
    /// transmission (including its own) arrives above the CCA threshold.
    /// A sensed unicast data frame keeps the medium reserved through its
    /// acknowledgement window even after it ends.
    fn cca_busy(&mut self, iface: IfaceId) -> bool {
        let now = self.queue.now();
        let me = self.ifaces[iface.0 as usize].node;
        let channel = self.ifaces[iface.0 as usize].channel;
        let guard = self.ack_guard_s;
        let active: Vec<(IfaceId, NodeId, f64)> = self.channels[channel.0 as usize]
            .ledger
            .iter()
            .filter(|t| {
                let reserved_until = if t.frame.kind == FrameKind::Data && !t.frame.is_broadcast()
                {
                    t.end + guard
                } else {
                    t.end
                };
                reserved_until > now
            })
            .map(|t| (t.iface, t.src_node, t.power_dbm))
            .collect();
        for (tx_iface, src, power) in active {
            if tx_iface == iface {
                return true;
            }
            let pl = self.link_loss_db(src, me);
            if phy::received_power_dbm(power, pl) >= self.mac_cfg.cca_threshold_dbm {
                return true;
            }
        }
        false
    }

    fn on_tx_start(&mut self, iface: IfaceId, epoch: u64) {
        let f = &self.ifaces[iface.0 as usize];
        if f.epoch != epoch {
            return;
        }
        debug_assert!(matches!(f.link, LinkState::Contending { .. }));
        let frame = f.queue.head().expect("contending without a frame").clone();
        self.ifaces[iface.0 as usize].link = LinkState::Transmitting;
        self.counters.mac_data_tx += 1;
        if self.ifaces[iface.0 as usize].csma.retries > 0 {
            self.counters.mac_retransmissions += 1;
        }
        self.start_tx(iface, frame);
    }

    /// Put a frame on the air: ledger entry, energy, end event, and CCA
    /// freeze notifications to everyone who can hear it.
    fn start_tx(&mut self, iface: IfaceId, frame: MacFrame) {
        let now = self.queue.now();
        let air = airtime_s(frame.payload_bytes, self.phy.data_rate_bps);
        let tx_id = self.next_tx_id;
        self.next_tx_id += 1;
        let node = self.ifaces[iface.0 as usize].node;
        let channel = self.ifaces[iface.0 as usize].channel;
        self.ifaces[iface.0 as usize].tx_time_s += air;
        self.energy[node.0 as usize].tx_j += phy::packet_energy_j(air, self.energy_model.i_tx_ma);
        self.channels[channel.0 as usize].ledger.push(Transmission {
            tx_id,
            iface,
            src_node: node,
            start: now,
            end: now + air,
            power_dbm: self.phy.tx_power_dbm,
            frame,
        });
        self.queue.schedule(now + air, EventKind::TxEnd { iface, tx_id });
        self.notify_channel(channel);
    }

    /// Channel activity changed: freeze contenders that now sense energy
    /// and resume frozen ones that no longer do.
    fn notify_channel(&mut self, channel: ChannelId) {
        let members = self.channels[channel.0 as usize].members.clone();
        for m in members {
            match self.ifaces[m.0 as usize].link {
                LinkState::Contending { basis: Some(_), .. } => {
                    if self.cca_busy(m) {
                        self.freeze(m);
                    }
                }
                LinkState::Contending { basis: None, .. } => {
                    self.try_resume(m);
                }
                _ => {}
            }
        }
    }

    fn on_tx_end(&mut self, tx_id: u64) {
        let now = self.queue.now();
        let channel = self
            .channels
            .iter()
            .position(|ch| ch.ledger.iter().any(|t| t.tx_id == tx_id))
            .map(|c| ChannelId(c as u16))
            .expect("transmission not in any ledger");
        let tx = self.channels[channel.0 as usize]
            .ledger
            .iter()
            .find(|t| t.tx_id == tx_id)
            .unwrap()
            .clone();
        // Drop entries too old to overlap anything still on the air.
        let horizon = now - self.prune_horizon_s;
        self.channels[channel.0 as usize].ledger.retain(|t| t.end >= horizon);

        // Sender-side completion for queued frames (ACKs are fire-and-forget).
        if tx.frame.kind == FrameKind::Data
            && self.ifaces[tx.iface.0 as usize].link == LinkState::Transmitting
        {
            if tx.frame.is_broadcast() {
                self.complete_head_frame(tx.iface, None);
            } else {
                let f = &mut self.ifaces[tx.iface.0 as usize];
                f.link = LinkState::AwaitAck;
                f.epoch += 1;
                let epoch = f.epoch;
                let timeout = self.mac_cfg.ack_timeout_s(airtime_s(0, self.phy.data_rate_bps));
                self.queue
                    .schedule(now + timeout, EventKind::AckTimeout { iface: tx.iface, epoch });
            }
        }

        let members = self.channels[channel.0 as usize].members.clone();
        for m in members {
            if m != tx.iface {
                self.process_reception(m, &tx);
            }
        }
        self.notify_channel(channel);
        if tx.frame.kind == FrameKind::Data && !tx.frame.is_broadcast() {
            // Contenders frozen by this frame stay deferred through the
            // acknowledgement window; wake them when it lapses.
            self.queue
                .schedule(now + self.ack_guard_s, EventKind::ChannelNotify { channel });
        }
    }

    /// Pop the head frame after it finished (successfully or not).
    /// `acked`: Some(true) resets the window, Some(false) means dropped
    /// after retries, None is a broadcast (no feedback).
    fn complete_head_frame(&mut self, iface: IfaceId, acked: Option<bool>) {
        let mac_cfg = self.mac_cfg;
        let f = &mut self.ifaces[iface.0 as usize];
        let frame = f.queue.pop().expect("completing an empty queue");
        match acked {
            Some(true) => f.csma.on_success(&mac_cfg),
            Some(false) => {
                f.csma.on_success(&mac_cfg); // fresh window for the next frame
                self.counters.mac_drops_retry += 1;
            }
            None => {}
        }
        f.link = LinkState::Idle;

        if acked == Some(false) {
            let node = self.ifaces[iface.0 as usize].node;
            let MacFrame { dst, payload, .. } = frame;
            let MacDst::Node(next_hop) = dst else { unreachable!("broadcasts are never acked") };
            if let MacPayload::Data(pkt) = &payload {
                self.collector.on_dropped(pkt, net::DropCause::RetryExhausted);
            }
            // Tell routing the link died, whatever the frame carried.
            if self.nodes[node.0 as usize].dymo_iface == iface {
                if let Some(d) = self.nodes[node.0 as usize].dymo.as_mut() {
                    let actions = d.on_link_failure(self.queue.now(), next_hop);
                    self.apply_dymo_actions(node, actions);
                }
            }
        }

        if self.ifaces[iface.0 as usize].link == LinkState::Idle
            && !self.ifaces[iface.0 as usize].queue.is_empty()
        {
            self.start_contention(iface);
        }
    }

    fn on_ack_timeout(&mut self, iface: IfaceId, epoch: u64) {
        if self.ifaces[iface.0 as usize].epoch != epoch {
            return;
        }
        debug_assert_eq!(self.ifaces[iface.0 as usize].link, LinkState::AwaitAck);
        let mac_cfg = self.mac_cfg;
        let f = &mut self.ifaces[iface.0 as usize];
        f.csma.on_failure(&mac_cfg);
        f.epoch += 1;
        if f.csma.exhausted(&mac_cfg) {
            self.complete_head_frame(iface, Some(false));
        } else {
            self.start_contention(iface);
        }
    }

    fn on_send_ack(&mut self, iface: IfaceId, to: NodeId, seq: u8) {
        let now = self.queue.now();
        let channel = self.ifaces[iface.0 as usize].channel;
        let busy_with_own = self.channels[channel.0 as usize]
            .ledger
            .iter()
            .any(|t| t.iface == iface && t.end > now);
        if busy_with_own {
            self.counters.mac_acks_suppressed += 1;
            return;
        }
        self.counters.mac_ack_tx += 1;
        let src = self.ifaces[iface.0 as usize].node;
        self.start_tx(
            iface,
            MacFrame {
                kind: FrameKind::Ack,
                src,
                dst: MacDst::Node(to),
                seq,
                payload_bytes: 0,
                payload: MacPayload::None,
            },
        );
    }

    // -----------------------------------------------------------------
    // Reception
    // -----------------------------------------------------------------

    fn process_reception(&mut self, iface: IfaceId, tx: &Transmission) {
        let me = self.ifaces[iface.0 as usize].node;
        let relevant = match tx.frame.dst {
            MacDst::Broadcast => true,
            MacDst::Node(n) => n == me,
        };
        if !relevant || self.blocked.contains(&(tx.src_node, me)) {
            return;
        }
        // Half-duplex: any own transmission overlapping the frame kills it.
        let channel = self.ifaces[iface.0 as usize].channel;
        let overlapped_own_tx = self.channels[channel.0 as usize]
            .ledger
            .iter()
            .any(|g| g.iface == iface && g.start < tx.end && g.end > tx.start);
        if overlapped_own_tx {
            return;
        }
        if !self.ideal_links && !self.reception_trial(iface, tx) {
            return;
        }

        let air = tx.end - tx.start;
        self.ifaces[iface.0 as usize].rx_time_s += air;
        self.energy[me.0 as usize].rx_j += phy::packet_energy_j(air, self.energy_model.i_rx_ma);

        match tx.frame.kind {
            FrameKind::Ack => self.on_ack_received(iface, tx.frame.src, tx.frame.seq),
            FrameKind::Data => {
                if let MacDst::Node(_) = tx.frame.dst {
                    // Immediate acknowledgement, re-sent even for duplicates.
                    let now = self.queue.now();
                    self.queue.schedule(
                        now + self.mac_cfg.sifs_s,
                        EventKind::SendAck { iface, to: tx.frame.src, seq: tx.frame.seq },
                    );
                    let window = self.mac_cfg.dedup_window;
                    let fresh = self.ifaces[iface.0 as usize].dedup.accept(
                        tx.frame.src,
                        tx.frame.seq,
                        window,
                    );
                    if !fresh {
                        self.counters.mac_duplicates_rx += 1;
                        return;
                    }
                }
                self.deliver_up(iface, tx.frame.src, tx.frame.payload.clone());
            }
        }
    }

    /// Bernoulli reception trial from the worst-case SINR over the frame.
    fn reception_trial(&mut self, iface: IfaceId, tx: &Transmission) -> bool {
        let me = self.ifaces[iface.0 as usize].node;
        let kind = self.positioner.link_kind(tx.src_node, me);
        let pl = self.link_loss_db(tx.src_node, me);
        let prx = phy::received_power_dbm(tx.power_dbm, pl);
        let interference_mw = self.max_concurrent_interference_mw(iface, tx);
        let noise = self.channel_model.params(kind).noise_dbm();
        let budget = phy::LinkBudget::compute(prx, interference_mw, noise);
        let gamma = dbm_to_mw(budget.sinr_db); // dB -> linear ratio
        let p_err =
            phy::per(phy::ber(self.phy.modulation, gamma), frame_bits(tx.frame.payload_bytes));
        let u = self.streams.next_f64(StreamId::new(StreamPurpose::Reception, me.0));
        u >= p_err
    }

    /// Worst concurrent interference power (linear mW at the receiver) over
    /// the frame's air interval, from all overlapping same-channel
    /// transmissions, via a boundary sweep.
    fn max_concurrent_interference_mw(&mut self, iface: IfaceId, tx: &Transmission) -> f64 {
        let me = self.ifaces[iface.0 as usize].node;
        let channel = self.ifaces[iface.0 as usize].channel;
        let overlapping: Vec<(NodeId, f64, f64, f64)> = self.channels[channel.0 as usize]
            .ledger
            .iter()
            .filter(|g| {
                g.tx_id != tx.tx_id && g.iface != iface && g.start < tx.end && g.end > tx.start
            })
            .map(|g| (g.src_node, g.power_dbm, g.start.max(tx.start), g.end.min(tx.end)))
            .collect();
        if overlapping.is_empty() {
            return 0.0;
        }
        let mut edges: Vec<(f64, f64)> = Vec::with_capacity(overlapping.len() * 2);
        for (src, power, from, to) in overlapping {
            let pl = self.link_loss_db(src, me);
            let mw = dbm_to_mw(phy::received_power_dbm(power, pl));
            edges.push((from, mw));
            edges.push((to, -mw));
        }
        // Additions before removals at equal instants: worst case wins.
        edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut current = 0.0;
        let mut worst = 0.0f64;
        for (_, delta) in edges {
            current += delta;
            worst = worst.max(current);
        }
        worst
    }

    fn on_ack_received(&mut self, iface: IfaceId, from: NodeId, seq: u8) {
        let f = &self.ifaces[iface.0 as usize];
        if f.link != LinkState::AwaitAck {
            return;
        }
        let matches = f.queue.head().is_some_and(|h| h.dst == MacDst::Node(from) && h.seq == seq);
        if !matches {
            return;
        }
        self.counters.mac_ack_rx += 1;
        self.ifaces[iface.0 as usize].epoch += 1; // cancel the timeout
        let node = self.ifaces[iface.0 as usize].node;
        let now = self.queue.now();
        if self.nodes[node.0 as usize].dymo_iface == iface {
            if let Some(d) = self.nodes[node.0 as usize].dymo.as_mut() {
                d.note_heard(from, now);
            }
        }
        self.complete_head_frame(iface, Some(true));
    }

    fn deliver_up(&mut self, iface: IfaceId, from: NodeId, payload: MacPayload) {
        let now = self.queue.now();
        let node = self.ifaces[iface.0 as usize].node;
        match payload {
            MacPayload::Data(mut packet) => {
                packet.hops += 1;
                packet.path.push(node);
                if packet.dest == node {
                    self.collector.on_delivered(now, &packet);
                    return;
                }
                match &self.nodes[node.0 as usize].upper {
                    UpperLayer::Dymo => {
                        self.refresh_energy_gate(node);
                        // Traffic entering through a non-routing interface
                        // (the clustered star) counts as locally originated.
                        let upstream =
                            (self.nodes[node.0 as usize].dymo_iface == iface).then_some(from);
                        let actions = self.nodes[node.0 as usize]
                            .dymo
                            .as_mut()
                            .unwrap()
                            .handle_data(now, upstream, packet);
                        self.apply_dymo_actions(node, actions);
                    }
                    _ => {
                        debug_assert!(false, "non-routing node received forwarded data");
                    }
                }
            }
            MacPayload::Routing(msg) => {
                if self.nodes[node.0 as usize].dymo.is_none() {
                    return;
                }
                self.refresh_energy_gate(node);
                let actions =
                    self.nodes[node.0 as usize].dymo.as_mut().unwrap().handle_msg(now, from, msg);
                self.apply_dymo_actions(node, actions);
            }
            MacPayload::None => unreachable!("ACKs are handled before deliver_up"),
        }
    }
}
