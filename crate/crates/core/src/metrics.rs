//! Per-packet delivery records and run-level aggregation: reception ratio,
//! end-to-end delay, hop statistics, per-node energy, and Student-t
//! confidence intervals across iterations.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::net::{DataPacket, DropCause, Role};
use crate::types::NodeId;

/// Everything recorded about one generated packet. Exactly one of
/// delivered / dropped / in-flight holds at run end.
#[derive(Debug, Clone)]
pub struct PacketRecord {
    pub id: u64,
    pub source: NodeId,
    pub created_t: f64,
    pub payload_bytes: u32,
    pub delivered_t: Option<f64>,
    pub hops: Option<u32>,
    pub drop_cause: Option<DropCause>,
    /// Node path of the delivered copy, source first.
    pub path: Vec<NodeId>,
}

impl PacketRecord {
    pub fn in_flight(&self) -> bool {
        self.delivered_t.is_none() && self.drop_cause.is_none()
    }
}

/// Collects packet facts while a run executes.
#[derive(Debug, Default)]
pub struct Collector {
    records: Vec<PacketRecord>,
    pub duplicates: u64,
}

impl Collector {
    /// Register a freshly generated packet; its id must be `records.len()`.
    pub fn on_generated(&mut self, packet: &DataPacket) {
        debug_assert_eq!(packet.id, self.records.len() as u64);
        self.records.push(PacketRecord {
            id: packet.id,
            source: packet.src,
            created_t: packet.created_t,
            payload_bytes: packet.payload_bytes,
            delivered_t: None,
            hops: None,
            drop_cause: None,
            path: Vec::new(),
        });
    }

    pub fn on_delivered(&mut self, now: f64, packet: &DataPacket) {
        let rec = &mut self.records[packet.id as usize];
        if rec.delivered_t.is_some() || rec.drop_cause.is_some() {
            // A duplicate copy survived the dedup window; count, don't double-book.
            self.duplicates += 1;
            return;
        }
        debug_assert!(now >= rec.created_t);
        rec.delivered_t = Some(now);
        rec.hops = Some(packet.hops);
        rec.path = packet.path.clone();
    }

    pub fn on_dropped(&mut self, packet: &DataPacket, cause: DropCause) {
        let rec = &mut self.records[packet.id as usize];
        if rec.delivered_t.is_some() || rec.drop_cause.is_some() {
            return;
        }
        rec.drop_cause = Some(cause);
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn generated(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn delivered(&self) -> u64 {
        self.records.iter().filter(|r| r.delivered_t.is_some()).count() as u64
    }

    pub fn dropped(&self) -> u64 {
        self.records.iter().filter(|r| r.drop_cause.is_some()).count() as u64
    }

    pub fn in_flight(&self) -> u64 {
        self.records.iter().filter(|r| r.in_flight()).count() as u64
    }
}

/// Delivered / generated at the sink. None when nothing was generated.
pub fn prr(records: &[PacketRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let delivered = records.iter().filter(|r| r.delivered_t.is_some()).count();
    Some(delivered as f64 / records.len() as f64)
}

/// Mean end-to-end delay over delivered packets only; None (undefined)
/// when nothing was delivered.
pub fn mean_delay_s(records: &[PacketRecord]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0u64;
    for r in records {
        if let Some(t) = r.delivered_t {
            sum += t - r.created_t;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Hop-count statistics over delivered packets, composable across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopStats {
    pub min: u32,
    pub max: u32,
    pub sum: u64,
    pub count: u64,
}

impl HopStats {
    pub fn avg(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }

    pub fn merge(&mut self, other: &HopStats) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        self.sum += other.sum;
        self.count += other.count;
    }
}

pub fn hop_stats(records: &[PacketRecord]) -> Option<HopStats> {
    let mut acc: Option<HopStats> = None;
    for r in records {
        if let Some(h) = r.hops {
            let s = acc.get_or_insert(HopStats { min: h, max: h, sum: 0, count: 0 });
            s.min = s.min.min(h);
            s.max = s.max.max(h);
            s.sum += u64::from(h);
            s.count += 1;
        }
    }
    acc
}

/// Sample mean with a 95% Student-t confidence half-width. The half-width
/// is undefined below two samples and exactly zero for constant samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStat {
    pub mean: f64,
    pub ci95_half_width: Option<f64>,
    pub n: usize,
}

pub fn ci95(samples: &[f64]) -> SummaryStat {
    assert!(!samples.is_empty(), "ci95 needs at least one sample");
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return SummaryStat { mean, ci95_half_width: None, n };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let half = if var == 0.0 {
        0.0
    } else {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("valid Student-t parameters")
            .inverse_cdf(0.975);
        t * var.sqrt() / (n as f64).sqrt()
    };
    SummaryStat { mean, ci95_half_width: Some(half), n }
}

/// Counters exported by the MAC and routing layers of one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunCounters {
    pub mac_data_tx: u64,
    pub mac_retransmissions: u64,
    pub mac_ack_tx: u64,
    pub mac_ack_rx: u64,
    pub mac_drops_queue: u64,
    pub mac_drops_retry: u64,
    pub mac_duplicates_rx: u64,
    pub mac_acks_suppressed: u64,
    pub rreq_tx: u64,
    pub rreq_rx: u64,
    pub rrep_tx: u64,
    pub rrep_rx: u64,
    pub rerr_tx: u64,
    pub rerr_rx: u64,
    pub hello_tx: u64,
    pub discoveries: u64,
    pub discovery_failures: u64,
    pub zero_distance_warnings: u64,
}

/// Per-node energy split by radio state, joules.
#[derive(Debug, Clone, Copy, Default)]
pub struct NodeEnergy {
    pub tx_j: f64,
    pub rx_j: f64,
    pub idle_j: f64,
}

impl NodeEnergy {
    pub fn total_j(&self) -> f64 {
        self.tx_j + self.rx_j + self.idle_j
    }
}

/// Aggregated outcome of a single run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub duplicates: u64,
    pub prr: f64,
    pub mean_delay_s: Option<f64>,
    pub hop_stats: Option<HopStats>,
    /// Mean per-node energy over the run, joules.
    pub energy_mean_j: f64,
    pub energy_sensor_mean_j: Option<f64>,
    pub energy_coordinator_mean_j: Option<f64>,
    pub energy_leader_j: Option<f64>,
    /// Network energy divided by delivered packets; None without deliveries.
    pub energy_per_delivered_j: Option<f64>,
    pub drops_by_cause: BTreeMap<DropCause, u64>,
    pub counters: RunCounters,
    /// Directed node-to-node edges of delivered paths, with packet counts.
    pub delivered_edges: BTreeMap<(NodeId, NodeId), u64>,
}

impl RunSummary {
    pub fn build(
        collector: &Collector,
        counters: RunCounters,
        energy: &[(Role, NodeEnergy)],
    ) -> Self {
        let records = collector.records();
        let generated = collector.generated();
        let delivered = collector.delivered();
        let dropped = collector.dropped();
        let in_flight = collector.in_flight();
        assert_eq!(
            generated,
            delivered + dropped + in_flight,
            "packet conservation violated"
        );

        let mut drops_by_cause = BTreeMap::new();
        for r in records {
            if let Some(c) = r.drop_cause {
                *drops_by_cause.entry(c).or_insert(0u64) += 1;
            }
        }

        let mut delivered_edges: BTreeMap<(NodeId, NodeId), u64> = BTreeMap::new();
        for r in records {
            if r.delivered_t.is_some() {
                for w in r.path.windows(2) {
                    *delivered_edges.entry((w[0], w[1])).or_insert(0) += 1;
                }
            }
        }

        let role_mean = |role: Role| {
            let xs: Vec<f64> = energy
                .iter()
                .filter(|(r, _)| *r == role)
                .map(|(_, e)| e.total_j())
                .collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let total_j: f64 = energy.iter().map(|(_, e)| e.total_j()).sum();
        let energy_mean_j =
            if energy.is_empty() { 0.0 } else { total_j / energy.len() as f64 };

        Self {
            generated,
            delivered,
            dropped,
            in_flight,
            duplicates: collector.duplicates,
            prr: prr(records).unwrap_or(0.0),
            mean_delay_s: mean_delay_s(records),
            hop_stats: hop_stats(records),
            energy_mean_j,
            energy_sensor_mean_j: role_mean(Role::Sensor),
            energy_coordinator_mean_j: role_mean(Role::Coordinator),
            energy_leader_j: role_mean(Role::LeaderCoordinator),
            energy_per_delivered_j: (delivered > 0).then(|| total_j / delivered as f64),
            drops_by_cause,
            counters,
            delivered_edges,
        }
    }
}
