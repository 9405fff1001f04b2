//! Shared test harnesses and independent numerical oracles.

use std::collections::{BTreeSet, VecDeque};

use wbbn_sim::engine::EventQueue;
use wbbn_sim::net::DataPacket;
use wbbn_sim::routing::{DymoAction, DymoMsg, DymoNode, RoutingConfig};
use wbbn_sim::types::NodeId;

// ---------------------------------------------------------------------------
// Ideal-link mesh: drives routing state machines over a graph with uniform
// per-hop delay and no losses. Under these conditions the first request
// copy to arrive anywhere travelled a shortest path, so installed hop
// counts must equal breadth-first distances.
// ---------------------------------------------------------------------------

pub const MESH_HOP_DELAY_S: f64 = 1e-3;

enum MeshEvent {
    Msg { to: u32, from: NodeId, msg: DymoMsg },
    Data { to: u32, from: NodeId, packet: DataPacket },
    Retry { node: u32, dest: NodeId, attempt: u32 },
}

pub struct IdealMesh {
    pub nodes: Vec<DymoNode>,
    adjacency: Vec<BTreeSet<u32>>,
    queue: EventQueue<MeshEvent>,
    pub delivered: Vec<DataPacket>,
    pub dropped: Vec<DataPacket>,
    next_packet: u64,
}

impl IdealMesh {
    pub fn new(adjacency: Vec<BTreeSet<u32>>) -> Self {
        let cfg = RoutingConfig::default();
        let nodes =
            (0..adjacency.len()).map(|i| DymoNode::new(NodeId(i as u32), cfg)).collect();
        Self {
            nodes,
            adjacency,
            queue: EventQueue::new(),
            delivered: Vec::new(),
            dropped: Vec::new(),
            next_packet: 0,
        }
    }

    pub fn send(&mut self, src: u32, dest: u32) {
        let now = self.queue.now();
        let packet = DataPacket {
            id: self.next_packet,
            src: NodeId(src),
            dest: NodeId(dest),
            payload_bytes: 16,
            created_t: now,
            hops: 0,
            path: vec![NodeId(src)],
        };
        self.next_packet += 1;
        let actions = self.nodes[src as usize].send_data(now, packet);
        self.apply(src, actions);
    }

    fn apply(&mut self, node: u32, actions: Vec<DymoAction>) {
        let now = self.queue.now();
        let at = now + MESH_HOP_DELAY_S;
        for action in actions {
            match action {
                DymoAction::Broadcast(msg) => {
                    let neighbors: Vec<u32> =
                        self.adjacency[node as usize].iter().copied().collect();
                    for v in neighbors {
                        self.queue.schedule(
                            at,
                            MeshEvent::Msg { to: v, from: NodeId(node), msg: msg.clone() },
                        );
                    }
                }
                DymoAction::Unicast(to, msg) => {
                    assert!(
                        self.adjacency[node as usize].contains(&to.0),
                        "unicast to non-neighbor {to} from n{node}"
                    );
                    self.queue.schedule(at, MeshEvent::Msg { to: to.0, from: NodeId(node), msg });
                }
                DymoAction::ForwardData(next, packet) => {
                    assert!(
                        self.adjacency[node as usize].contains(&next.0),
                        "forward to non-neighbor {next} from n{node}"
                    );
                    self.queue.schedule(
                        at,
                        MeshEvent::Data { to: next.0, from: NodeId(node), packet },
                    );
                }
                DymoAction::Deliver(packet) => self.delivered.push(packet),
                DymoAction::Drop(packet, _) => self.dropped.push(packet),
                DymoAction::ScheduleRetry { dest, attempt, at } => {
                    self.queue.schedule(at, MeshEvent::Retry { node, dest, attempt });
                }
            }
        }
    }

    pub fn run(&mut self, t_end: f64) {
        while let Some(ev) = self.queue.pop_until(t_end) {
            let now = ev.time;
            match ev.kind {
                MeshEvent::Msg { to, from, msg } => {
                    let actions = self.nodes[to as usize].handle_msg(now, from, msg);
                    self.apply(to, actions);
                }
                MeshEvent::Data { to, from, mut packet } => {
                    packet.hops += 1;
                    packet.path.push(NodeId(to));
                    let actions = self.nodes[to as usize].handle_data(now, Some(from), packet);
                    self.apply(to, actions);
                }
                MeshEvent::Retry { node, dest, attempt } => {
                    let actions = self.nodes[node as usize].on_discovery_timer(now, dest, attempt);
                    self.apply(node, actions);
                }
            }
        }
        self.queue.finish(t_end);
    }
}

/// Breadth-first hop distances from `src` over the adjacency.
pub fn bfs_distances(adjacency: &[BTreeSet<u32>], src: u32) -> Vec<Option<u32>> {
    let mut dist = vec![None; adjacency.len()];
    dist[src as usize] = Some(0);
    let mut frontier = VecDeque::from([src]);
    while let Some(u) = frontier.pop_front() {
        let d = dist[u as usize].unwrap();
        for &v in &adjacency[u as usize] {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d + 1);
                frontier.push_back(v);
            }
        }
    }
    dist
}

/// Small deterministic generator for test topologies.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Random connected undirected graph: a random spanning tree plus extra
/// random edges.
pub fn random_connected_graph(n: u32, extra_edges: u32, rng: &mut TestRng) -> Vec<BTreeSet<u32>> {
    let mut adjacency = vec![BTreeSet::new(); n as usize];
    let mut link = |adj: &mut Vec<BTreeSet<u32>>, a: u32, b: u32| {
        if a != b {
            adj[a as usize].insert(b);
            adj[b as usize].insert(a);
        }
    };
    for v in 1..n {
        let u = rng.below(u64::from(v)) as u32;
        link(&mut adjacency, u, v);
    }
    for _ in 0..extra_edges {
        let a = rng.below(u64::from(n)) as u32;
        let b = rng.below(u64::from(n)) as u32;
        link(&mut adjacency, a, b);
    }
    adjacency
}

// ---------------------------------------------------------------------------
// Differential-QPSK bit error rate by numerical quadrature, independent of
// the implementation's series evaluation. The Marcum Q function is
// integrated directly from its defining integral, with the Bessel function
// itself evaluated by quadrature of its integral representation.
// ---------------------------------------------------------------------------

/// I0(z) = (1/pi) * integral_0^pi exp(z cos x) dx, by trapezoid rule (the
/// integrand is smooth and even-periodic, so convergence is spectral).
fn bessel_i0_quadrature(z: f64) -> f64 {
    let n = 4096;
    let mut sum = 0.0;
    for k in 0..=n {
        let weight = if k == 0 || k == n { 0.5 } else { 1.0 };
        let theta = std::f64::consts::PI * k as f64 / n as f64;
        sum += weight * (z * theta.cos()).exp();
    }
    sum / n as f64
}

/// Q1(a, b) = integral_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx, by Simpson's
/// rule with panel doubling until the estimate stabilizes.
fn marcum_q1_quadrature(a: f64, b: f64) -> f64 {
    let upper = a.max(b) + 12.0;
    if upper <= b {
        return 0.0;
    }
    let integrand =
        |x: f64| x * (-(x * x + a * a) / 2.0).exp() * bessel_i0_quadrature(a * x);
    let simpson = |panels: usize| {
        let h = (upper - b) / panels as f64;
        let mut acc = integrand(b) + integrand(upper);
        for k in 1..panels {
            let x = b + h * k as f64;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(x);
        }
        acc * h / 3.0
    };
    let mut panels = 256;
    let mut previous = simpson(panels);
    loop {
        panels *= 2;
        let current = simpson(panels);
        if (current - previous).abs() < 1e-13 || panels >= 8192 {
            return current;
        }
        previous = current;
    }
}

pub fn dqpsk_ber_oracle(gamma: f64) -> f64 {
    let a = (2.0 * gamma * (1.0 - std::f64::consts::FRAC_1_SQRT_2)).sqrt();
    let b = (2.0 * gamma * (1.0 + std::f64::consts::FRAC_1_SQRT_2)).sqrt();
    let q = marcum_q1_quadrature(a, b);
    let term = 0.5 * bessel_i0_quadrature(a * b) * (-(a * a + b * b) / 2.0).exp();
    q - term
}
