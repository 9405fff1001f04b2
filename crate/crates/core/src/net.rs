//! Network assembly: which stack each node runs under the two dissemination
//! strategies, channel assignment, and the converge-cast traffic profile.

use serde::{Deserialize, Serialize};

use crate::mobility::NODES_PER_BODY;
use crate::types::{ChannelId, NodeId};

/// How data moves from sources to the team leader's coordinator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Per-body star on a private channel; coordinators mesh and route on a
    /// shared inter-body channel.
    Clustered,
    /// Every node on one shared channel, every node routes.
    Distributed,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Clustered => "clustered",
            Strategy::Distributed => "distributed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Sensor,
    Coordinator,
    LeaderCoordinator,
}

impl Role {
    pub fn is_coordinator(&self) -> bool {
        matches!(self, Role::Coordinator | Role::LeaderCoordinator)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NodeRole {
    pub role: Role,
    pub body: u32,
    pub slot: u8,
}

/// Application packet riding the stack from a source node to the sink.
#[derive(Debug, Clone)]
pub struct DataPacket {
    pub id: u64,
    pub src: NodeId,
    pub dest: NodeId,
    pub payload_bytes: u32,
    pub created_t: f64,
    /// MAC transmissions traversed so far; bumped at every reception.
    pub hops: u32,
    /// Nodes visited, starting with the source.
    pub path: Vec<NodeId>,
}

/// Why a packet copy died. Drops are terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropCause {
    /// MAC transmit queue was full.
    MacQueueFull,
    /// Unicast retry limit exhausted.
    RetryExhausted,
    /// Route discovery gave up after all attempts.
    DiscoveryFailed,
    /// Pushed out of a full route-discovery buffer.
    BufferOverflow,
    /// Exceeded the per-packet hop cap (loop backstop).
    HopLimit,
}

impl DropCause {
    pub fn label(&self) -> &'static str {
        match self {
            DropCause::MacQueueFull => "mac_queue_full",
            DropCause::RetryExhausted => "retry_exhausted",
            DropCause::DiscoveryFailed => "discovery_failed",
            DropCause::BufferOverflow => "buffer_overflow",
            DropCause::HopLimit => "hop_limit",
        }
    }
}

/// Constant-bit-rate application profile: every source emits one packet of
/// `payload_bytes` every `interval_s`, start times jittered per node.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    pub payload_bytes: u32,
    pub interval_s: f64,
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(16..=1024).contains(&self.payload_bytes) {
            return Err(format!(
                "payload_bytes must lie in [16, 1024], got {}",
                self.payload_bytes
            ));
        }
        if self.interval_s <= 0.0 {
            return Err(format!("interval_s must be positive, got {}", self.interval_s));
        }
        Ok(())
    }
}

/// Channel assignment for a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelPlan {
    Clustered { intra: Vec<ChannelId>, inter: ChannelId },
    Distributed { shared: ChannelId },
}

impl ChannelPlan {
    pub fn for_strategy(strategy: Strategy, bodies: u32) -> Self {
        match strategy {
            Strategy::Clustered => ChannelPlan::Clustered {
                intra: (0..bodies).map(|b| ChannelId(b as u16 + 1)).collect(),
                inter: ChannelId(0),
            },
            Strategy::Distributed => ChannelPlan::Distributed { shared: ChannelId(0) },
        }
    }

    pub fn channel_count(&self) -> usize {
        match self {
            ChannelPlan::Clustered { intra, .. } => intra.len() + 1,
            ChannelPlan::Distributed { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ChannelPlan::Clustered { intra, inter } = self {
            let mut seen = std::collections::BTreeSet::new();
            seen.insert(*inter);
            for c in intra {
                if !seen.insert(*c) {
                    return Err(format!(
                        "clustered channel plan reuses channel {c}; intra channels and the \
                         inter channel must all be distinct"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfaceRole {
    /// Body-private star channel (clustered).
    Intra,
    /// Coordinator mesh channel (clustered).
    Inter,
    /// Single shared channel (distributed).
    Shared,
}

#[derive(Debug, Clone, Copy)]
pub struct PlannedIface {
    pub channel: ChannelId,
    pub role: IfaceRole,
}

#[derive(Debug, Clone)]
pub struct PlannedNode {
    pub node: NodeId,
    pub role: NodeRole,
    pub ifaces: Vec<PlannedIface>,
    pub runs_dymo: bool,
    /// The node's own-body coordinator; clustered sensors address it
    /// directly.
    pub coordinator: NodeId,
}

/// Full per-node stack layout for one strategy over `bodies` bodies of five
/// nodes each. Body 0's coordinator (node 0) is the team leader's
/// coordinator and the global sink.
#[derive(Debug, Clone)]
pub struct NetworkPlan {
    pub strategy: Strategy,
    pub plan: ChannelPlan,
    pub nodes: Vec<PlannedNode>,
    pub leader: NodeId,
}

pub fn node_id(body: u32, slot: u8) -> NodeId {
    NodeId(body * NODES_PER_BODY + u32::from(slot))
}

pub fn body_of(node: NodeId) -> u32 {
    node.0 / NODES_PER_BODY
}

pub fn slot_of(node: NodeId) -> u8 {
    (node.0 % NODES_PER_BODY) as u8
}

pub fn build_network(strategy: Strategy, bodies: u32) -> Result<NetworkPlan, String> {
    if bodies < 1 {
        return Err("need at least one body".into());
    }
    let plan = ChannelPlan::for_strategy(strategy, bodies);
    plan.validate()?;
    let leader = node_id(0, 0);
    let mut nodes = Vec::with_capacity((bodies * NODES_PER_BODY) as usize);
    for body in 0..bodies {
        for slot in 0..NODES_PER_BODY as u8 {
            let node = node_id(body, slot);
            let role = if slot == 0 {
                if node == leader {
                    Role::LeaderCoordinator
                } else {
                    Role::Coordinator
                }
            } else {
                Role::Sensor
            };
            let (ifaces, runs_dymo) = match (&plan, role) {
                (ChannelPlan::Clustered { intra, inter }, r) if r.is_coordinator() => (
                    vec![
                        PlannedIface { channel: intra[body as usize], role: IfaceRole::Intra },
                        PlannedIface { channel: *inter, role: IfaceRole::Inter },
                    ],
                    true,
                ),
                (ChannelPlan::Clustered { intra, .. }, _) => (
                    vec![PlannedIface { channel: intra[body as usize], role: IfaceRole::Intra }],
                    false,
                ),
                (ChannelPlan::Distributed { shared }, _) => (
                    vec![PlannedIface { channel: *shared, role: IfaceRole::Shared }],
                    true,
                ),
            };
            nodes.push(PlannedNode {
                node,
                role: NodeRole { role, body, slot },
                ifaces,
                runs_dymo,
                coordinator: node_id(body, 0),
            });
        }
    }
    Ok(NetworkPlan { strategy, plan, nodes, leader })
}
