//! Scenario configuration, experiment execution, and output emission.
//!
//! A scenario is one (strategy, frequency, modulation, payload, interval)
//! point run for a number of seeded iterations; a sweep is the Cartesian
//! product over configured axes. Results land in an output directory as
//! CSV files (per-run and aggregated), gnuplot-ready curve files per
//! frequency, an optional DOT topology per iteration, and an echo of the
//! effective configuration that reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ci95, HopStats, RunSummary};
use crate::mobility::MobilityConfig;
use crate::net::{Strategy, TrafficConfig};
use crate::phy::{ChannelParams, EnergyModel, FrequencyBand, Modulation};
use crate::routing::RoutingConfig;
use crate::world::{WbbnRunConfig, World};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, ScenarioError>;

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScenarioError::Config(msg.into()))
}

// ---------------------------------------------------------------------------
// Configuration document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBlock {
    #[serde(default = "ChannelParams::default_on_body")]
    pub on_body: ChannelParams,
    #[serde(default = "default_bb_900")]
    pub body_to_body_900: ChannelParams,
    #[serde(default = "default_bb_2450")]
    pub body_to_body_2450: ChannelParams,
    /// Ground-proximity penalty on body-to-body links (dB per decade of
    /// antenna-height product shortfall); 0 disables it.
    #[serde(default = "default_height_loss")]
    pub height_loss_db_per_decade: f64,
    #[serde(default = "default_height_reference")]
    pub height_reference_m: f64,
}

fn default_height_loss() -> f64 {
    20.0
}

fn default_height_reference() -> f64 {
    1.1
}

fn default_bb_900() -> ChannelParams {
    ChannelParams::default_body_to_body(FrequencyBand::Mhz900)
}

fn default_bb_2450() -> ChannelParams {
    ChannelParams::default_body_to_body(FrequencyBand::Mhz2450)
}

impl Default for ChannelBlock {
    fn default() -> Self {
        Self {
            on_body: ChannelParams::default_on_body(),
            body_to_body_900: default_bb_900(),
            body_to_body_2450: default_bb_2450(),
            height_loss_db_per_decade: default_height_loss(),
            height_reference_m: default_height_reference(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputFlags {
    /// Delivered-traffic topology graph per iteration (DOT format).
    pub dot: bool,
    /// Tab-separated event trace per iteration.
    pub event_trace: bool,
    /// Node trajectory CSV per iteration.
    pub trajectory: bool,
}

/// Axes of the experiment grid; used by `sweep`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub strategies: Vec<Strategy>,
    pub frequencies_mhz: Vec<FrequencyBand>,
    pub modulations: Vec<Modulation>,
    pub payloads_bytes: Vec<u32>,
    pub intervals_s: Vec<f64>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Clustered, Strategy::Distributed],
            frequencies_mhz: vec![FrequencyBand::Mhz900, FrequencyBand::Mhz2450],
            modulations: vec![Modulation::Dbpsk, Modulation::Dqpsk],
            payloads_bytes: vec![16, 32, 64, 128, 256, 512, 1024],
            intervals_s: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub strategy: Strategy,
    pub frequency_mhz: FrequencyBand,
    pub modulation: Modulation,
    pub payload_bytes: u32,
    pub interval_s: f64,
    pub sim_duration_s: f64,
    pub iterations: u32,
    pub seed: u64,
    pub tx_power_dbm: f64,
    pub topology: MobilityConfig,
    pub channel: ChannelBlock,
    pub mac: crate::mac::MacConfig,
    pub routing: RoutingConfig,
    pub energy: EnergyModel,
    pub output: OutputFlags,
    pub sweep: SweepAxes,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Clustered,
            frequency_mhz: FrequencyBand::Mhz2450,
            modulation: Modulation::Dqpsk,
            payload_bytes: 16,
            interval_s: 1.0,
            sim_duration_s: 60.0,
            iterations: 10,
            seed: 1,
            tx_power_dbm: 0.0,
            topology: MobilityConfig::default(),
            channel: ChannelBlock::default(),
            mac: crate::mac::MacConfig::default(),
            routing: RoutingConfig::default(),
            energy: EnergyModel::default(),
            output: OutputFlags::default(),
            sweep: SweepAxes::default(),
        }
    }
}

const ALLOWED_INTERVALS: [f64; 3] = [0.25, 0.5, 1.0];

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let traffic = TrafficConfig {
            payload_bytes: self.payload_bytes,
            interval_s: self.interval_s,
        };
        traffic.validate().or_else(cfg_err)?;
        if !ALLOWED_INTERVALS.contains(&self.interval_s) {
            return cfg_err(format!(
                "interval_s must be one of {ALLOWED_INTERVALS:?}, got {}",
                self.interval_s
            ));
        }
        if self.sim_duration_s <= 0.0 {
            return cfg_err("sim_duration_s must be positive");
        }
        if self.iterations < 1 {
            return cfg_err("iterations must be at least 1");
        }
        self.topology.validate().or_else(cfg_err)?;
        self.channel.on_body.validate().or_else(cfg_err)?;
        self.channel.body_to_body_900.validate().or_else(cfg_err)?;
        self.channel.body_to_body_2450.validate().or_else(cfg_err)?;
        self.mac.validate().or_else(cfg_err)?;
        self.routing.validate().or_else(cfg_err)?;
        self.energy.validate().or_else(cfg_err)?;
        for p in &self.sweep.payloads_bytes {
            if !(16..=1024).contains(p) {
                return cfg_err(format!("sweep payload {p} out of [16, 1024]"));
            }
        }
        for i in &self.sweep.intervals_s {
            if !ALLOWED_INTERVALS.contains(i) {
                return cfg_err(format!("sweep interval {i} not in {ALLOWED_INTERVALS:?}"));
            }
        }
        if self.sweep.strategies.is_empty()
            || self.sweep.frequencies_mhz.is_empty()
            || self.sweep.modulations.is_empty()
            || self.sweep.payloads_bytes.is_empty()
            || self.sweep.intervals_s.is_empty()
        {
            return cfg_err("sweep axes must be non-empty");
        }
        Ok(())
    }

    fn body_to_body(&self, band: FrequencyBand) -> ChannelParams {
        match band {
            FrequencyBand::Mhz900 => self.channel.body_to_body_900,
            FrequencyBand::Mhz2450 => self.channel.body_to_body_2450,
        }
    }

    /// Per-iteration world parameters for this point.
    pub fn run_config(&self, point: &SweepPoint, iteration: u32) -> WbbnRunConfig {
        WbbnRunConfig {
            strategy: point.strategy,
            band: point.band,
            modulation: point.modulation,
            tx_power_dbm: self.tx_power_dbm,
            traffic: TrafficConfig {
                payload_bytes: point.payload_bytes,
                interval_s: point.interval_s,
            },
            mobility: self.topology.clone(),
            on_body: self.channel.on_body,
            body_to_body: self.body_to_body(point.band),
            height_loss_db_per_decade: self.channel.height_loss_db_per_decade,
            height_reference_m: self.channel.height_reference_m,
            mac: self.mac,
            routing: self.routing,
            energy: self.energy,
            duration_s: self.sim_duration_s,
            seed: self.seed + u64::from(iteration),
        }
    }

    pub fn own_point(&self) -> SweepPoint {
        SweepPoint {
            strategy: self.strategy,
            band: self.frequency_mhz,
            modulation: self.modulation,
            payload_bytes: self.payload_bytes,
            interval_s: self.interval_s,
        }
    }

    pub fn grid(&self) -> Vec<SweepPoint> {
        let mut points = Vec::new();
        for &strategy in &self.sweep.strategies {
            for &band in &self.sweep.frequencies_mhz {
                for &modulation in &self.sweep.modulations {
                    for &payload_bytes in &self.sweep.payloads_bytes {
                        for &interval_s in &self.sweep.intervals_s {
                            points.push(SweepPoint {
                                strategy,
                                band,
                                modulation,
                                payload_bytes,
                                interval_s,
                            });
                        }
                    }
                }
            }
        }
        points
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| ScenarioError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub strategy: Strategy,
    pub band: FrequencyBand,
    pub modulation: Modulation,
    pub payload_bytes: u32,
    pub interval_s: f64,
}

pub struct PointResult {
    pub point: SweepPoint,
    pub runs: Vec<RunSummary>,
}

pub struct ScenarioOutputs {
    pub results: Vec<PointResult>,
    pub out_dir: PathBuf,
}

fn execute_iteration(
    cfg: &ScenarioConfig,
    point: &SweepPoint,
    iteration: u32,
    out_dir: &Path,
) -> Result<RunSummary> {
    let run_cfg = cfg.run_config(point, iteration);
    let mut world = World::wbbn(run_cfg).map_err(ScenarioError::Config)?;
    let mut trace_path = None;
    if cfg.output.event_trace {
        let path = out_dir.join(format!("events_{}_iter{iteration}.tsv", point_slug(point)));
        world.set_trace(Box::new(std::io::BufWriter::new(fs::File::create(&path)?)));
        trace_path = Some(path);
    }
    if cfg.output.trajectory {
        let path = out_dir.join(format!("trajectory_{}_iter{iteration}.csv", point_slug(point)));
        world.set_trajectory(Box::new(std::io::BufWriter::new(fs::File::create(&path)?)));
    }
    let summary = world.run();
    drop(world); // flush trace writers
    let _ = trace_path;
    if cfg.output.dot {
        let path = out_dir.join(format!("topology_{}_iter{iteration}.dot", point_slug(point)));
        write_atomic(&path, &dot_graph(&summary))?;
    }
    Ok(summary)
}

fn point_slug(p: &SweepPoint) -> String {
    format!(
        "{}_{}_{}_{}B_{}ms",
        p.strategy.label(),
        p.band.mhz(),
        p.modulation.label(),
        p.payload_bytes,
        (p.interval_s * 1000.0) as u32
    )
}

fn execute_points(
    cfg: &ScenarioConfig,
    points: &[SweepPoint],
    out_dir: &Path,
) -> Result<Vec<PointResult>> {
    fs::create_dir_all(out_dir)?;
    let jobs: Vec<(usize, u32)> = points
        .iter()
        .enumerate()
        .flat_map(|(pi, _)| (0..cfg.iterations).map(move |it| (pi, it)))
        .collect();
    let summaries: Vec<Result<RunSummary>> = jobs
        .par_iter()
        .map(|&(pi, it)| execute_iteration(cfg, &points[pi], it, out_dir))
        .collect();
    let mut results: Vec<PointResult> = points
        .iter()
        .map(|&point| PointResult { point, runs: Vec::new() })
        .collect();
    for ((pi, _), summary) in jobs.into_iter().zip(summaries) {
        results[pi].runs.push(summary?);
    }
    Ok(results)
}

/// Run one scenario point for the configured number of iterations and
/// write `runs.csv`, `aggregate.csv`, and `effective_config.json`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutputs> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    echo_config(cfg, out_dir)?;
    let points = vec![cfg.own_point()];
    let results = execute_points(cfg, &points, out_dir)?;
    write_atomic(&out_dir.join("runs.csv"), &runs_csv(cfg, &results))?;
    write_atomic(&out_dir.join("aggregate.csv"), &aggregate_csv(cfg, &results))?;
    Ok(ScenarioOutputs { results, out_dir: out_dir.to_path_buf() })
}

/// Run the full grid. Every point is validated before anything executes.
pub fn sweep(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioOutputs> {
    cfg.validate()?;
    let points = cfg.grid();
    for p in &points {
        let traffic =
            TrafficConfig { payload_bytes: p.payload_bytes, interval_s: p.interval_s };
        traffic.validate().or_else(cfg_err)?;
    }
    fs::create_dir_all(out_dir)?;
    echo_config(cfg, out_dir)?;
    let results = execute_points(cfg, &points, out_dir)?;
    write_atomic(&out_dir.join("runs.csv"), &runs_csv(cfg, &results))?;
    write_atomic(&out_dir.join("aggregate.csv"), &aggregate_csv(cfg, &results))?;
    write_atomic(&out_dir.join("hops_table.csv"), &hops_table_csv(&results))?;
    for band in &cfg.sweep.frequencies_mhz {
        let mhz = band.mhz();
        write_atomic(
            &out_dir.join(format!("fig4_prr_{mhz}.dat")),
            &figure_dat(&results, *band, FigureMetric::Prr),
        )?;
        write_atomic(
            &out_dir.join(format!("fig5_delay_ms_{mhz}.dat")),
            &figure_dat(&results, *band, FigureMetric::DelayMs),
        )?;
        write_atomic(
            &out_dir.join(format!("fig6_energy_mj_{mhz}.dat")),
            &figure_dat(&results, *band, FigureMetric::EnergyMj),
        )?;
    }
    Ok(ScenarioOutputs { results, out_dir: out_dir.to_path_buf() })
}

fn echo_config(cfg: &ScenarioConfig, out_dir: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| ScenarioError::Config(e.to_string()))?;
    write_atomic(&out_dir.join("effective_config.json"), &text)
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Write-to-temp then rename, so a failure never leaves a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_opt(value: Option<f64>, decimals: usize) -> String {
    match value {
        Some(v) => format!("{v:.decimals$}"),
        None => "NA".into(),
    }
}

pub const RUNS_CSV_HEADER: &str = "strategy,frequency_mhz,modulation,payload_bytes,interval_s,\
iteration,seed,generated,delivered,dropped,in_flight,duplicates,prr,mean_delay_ms,\
hop_min,hop_avg,hop_max,energy_mean_mj,energy_sensor_mj,energy_coordinator_mj,energy_leader_mj,\
energy_per_delivered_uj,mac_data_tx,mac_retransmissions,mac_ack_tx,mac_ack_rx,mac_drops_queue,\
mac_drops_retry,mac_duplicates_rx,mac_acks_suppressed,drops_mac_queue,drops_retry,\
drops_discovery,drops_buffer,rreq_tx,rreq_rx,rrep_tx,rrep_rx,rerr_tx,rerr_rx,hello_tx,\
discoveries,discovery_failures,zero_distance_warnings";

fn runs_csv(cfg: &ScenarioConfig, results: &[PointResult]) -> String {
    use crate::net::DropCause::*;
    let mut out = String::new();
    out.push_str(RUNS_CSV_HEADER);
    out.push('\n');
    for pr in results {
        let p = &pr.point;
        for (it, s) in pr.runs.iter().enumerate() {
            let drops = |c| s.drops_by_cause.get(&c).copied().unwrap_or(0);
            let c = &s.counters;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{:.4},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.strategy.label(),
                p.band.mhz(),
                p.modulation.label(),
                p.payload_bytes,
                p.interval_s,
                it,
                cfg.seed + it as u64,
                s.generated,
                s.delivered,
                s.dropped,
                s.in_flight,
                s.duplicates,
                s.prr,
                fmt_opt(s.mean_delay_s.map(|d| d * 1e3), 4),
                s.hop_stats.map(|h| h.min.to_string()).unwrap_or_else(|| "NA".into()),
                fmt_opt(s.hop_stats.map(|h| h.avg()), 4),
                s.hop_stats.map(|h| h.max.to_string()).unwrap_or_else(|| "NA".into()),
                s.energy_mean_j * 1e3,
                fmt_opt(s.energy_sensor_mean_j.map(|e| e * 1e3), 4),
                fmt_opt(s.energy_coordinator_mean_j.map(|e| e * 1e3), 4),
                fmt_opt(s.energy_leader_j.map(|e| e * 1e3), 4),
                fmt_opt(s.energy_per_delivered_j.map(|e| e * 1e6), 2),
                c.mac_data_tx,
                c.mac_retransmissions,
                c.mac_ack_tx,
                c.mac_ack_rx,
                c.mac_drops_queue,
                c.mac_drops_retry,
                c.mac_duplicates_rx,
                c.mac_acks_suppressed,
                drops(MacQueueFull),
                drops(RetryExhausted),
                drops(DiscoveryFailed),
                drops(BufferOverflow),
                c.rreq_tx,
                c.rreq_rx,
                c.rrep_tx,
                c.rrep_rx,
                c.rerr_tx,
                c.rerr_rx,
                c.hello_tx,
                c.discoveries,
                c.discovery_failures,
                c.zero_distance_warnings,
            );
        }
    }
    out
}

pub const AGGREGATE_CSV_HEADER: &str = "strategy,frequency_mhz,modulation,payload_bytes,\
interval_s,iterations,prr_mean,prr_ci95,delay_ms_mean,delay_ms_ci95,energy_mean_mj,\
energy_mj_ci95,energy_per_delivered_uj,hop_min,hop_avg,hop_max,generated,delivered";

fn aggregate_csv(_cfg: &ScenarioConfig, results: &[PointResult]) -> String {
    let mut out = String::new();
    out.push_str(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for pr in results {
        let p = &pr.point;
        let prr_stat = ci95(&pr.runs.iter().map(|s| s.prr).collect::<Vec<_>>());
        let delays: Vec<f64> =
            pr.runs.iter().filter_map(|s| s.mean_delay_s.map(|d| d * 1e3)).collect();
        let (delay_mean, delay_ci) = if delays.is_empty() {
            (None, None)
        } else {
            let st = ci95(&delays);
            (Some(st.mean), st.ci95_half_width)
        };
        let energy = ci95(&pr.runs.iter().map(|s| s.energy_mean_j * 1e3).collect::<Vec<_>>());
        let per_delivered: Vec<f64> =
            pr.runs.iter().filter_map(|s| s.energy_per_delivered_j.map(|e| e * 1e6)).collect();
        let pooled = pool_hops(&pr.runs);
        let generated: u64 = pr.runs.iter().map(|s| s.generated).sum();
        let delivered: u64 = pr.runs.iter().map(|s| s.delivered).sum();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{},{},{},{:.4},{},{},{},{},{},{},{}",
            p.strategy.label(),
            p.band.mhz(),
            p.modulation.label(),
            p.payload_bytes,
            p.interval_s,
            pr.runs.len(),
            prr_stat.mean,
            fmt_opt(prr_stat.ci95_half_width, 6),
            fmt_opt(delay_mean, 4),
            fmt_opt(delay_ci, 4),
            energy.mean,
            fmt_opt(energy.ci95_half_width, 4),
            fmt_opt(
                (!per_delivered.is_empty())
                    .then(|| per_delivered.iter().sum::<f64>() / per_delivered.len() as f64),
                2
            ),
            pooled.map(|h| h.min.to_string()).unwrap_or_else(|| "NA".into()),
            fmt_opt(pooled.map(|h| h.avg()), 4),
            pooled.map(|h| h.max.to_string()).unwrap_or_else(|| "NA".into()),
            generated,
            delivered,
        );
    }
    out
}

fn pool_hops(runs: &[RunSummary]) -> Option<HopStats> {
    let mut acc: Option<HopStats> = None;
    for s in runs {
        if let Some(h) = s.hop_stats {
            match &mut acc {
                Some(a) => a.merge(&h),
                None => acc = Some(h),
            }
        }
    }
    acc
}

/// Hop statistics pooled across all payloads and iterations, one row per
/// (strategy, frequency, modulation).
fn hops_table_csv(results: &[PointResult]) -> String {
    let mut pooled: BTreeMap<(String, u32, String), Option<HopStats>> = BTreeMap::new();
    for pr in results {
        let key = (
            pr.point.strategy.label().to_string(),
            pr.point.band.mhz(),
            pr.point.modulation.label().to_string(),
        );
        let entry = pooled.entry(key).or_insert(None);
        if let Some(h) = pool_hops(&pr.runs) {
            match entry {
                Some(a) => a.merge(&h),
                None => *entry = Some(h),
            }
        }
    }
    let mut out = String::from("strategy,frequency_mhz,modulation,hop_min,hop_avg,hop_max\n");
    for ((strategy, mhz, modulation), stats) in pooled {
        match stats {
            Some(h) => {
                let _ = writeln!(
                    out,
                    "{strategy},{mhz},{modulation},{},{:.4},{}",
                    h.min,
                    h.avg(),
                    h.max
                );
            }
            None => {
                let _ = writeln!(out, "{strategy},{mhz},{modulation},NA,NA,NA");
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
enum FigureMetric {
    Prr,
    DelayMs,
    EnergyMj,
}

/// Gnuplot-ready columns: payload on x, one mean/ci pair per
/// (strategy, modulation) curve. Missing values are NA.
fn figure_dat(results: &[PointResult], band: FrequencyBand, metric: FigureMetric) -> String {
    let curves = [
        (Strategy::Clustered, Modulation::Dbpsk),
        (Strategy::Clustered, Modulation::Dqpsk),
        (Strategy::Distributed, Modulation::Dbpsk),
        (Strategy::Distributed, Modulation::Dqpsk),
    ];
    let mut payloads: Vec<u32> = results
        .iter()
        .filter(|pr| pr.point.band == band)
        .map(|pr| pr.point.payload_bytes)
        .collect();
    payloads.sort_unstable();
    payloads.dedup();

    let mut out = String::from("# payload_bytes");
    for (s, m) in &curves {
        let _ = write!(out, " {}_{} {}_{}_ci", s.label(), m.label(), s.label(), m.label());
    }
    out.push('\n');
    for payload in payloads {
        let _ = write!(out, "{payload}");
        for (strategy, modulation) in &curves {
            let pr = results.iter().find(|pr| {
                pr.point.band == band
                    && pr.point.strategy == *strategy
                    && pr.point.modulation == *modulation
                    && pr.point.payload_bytes == payload
            });
            let (mean, ci) = match pr {
                None => (None, None),
                Some(pr) => {
                    let samples: Vec<f64> = pr
                        .runs
                        .iter()
                        .filter_map(|s| match metric {
                            FigureMetric::Prr => Some(s.prr),
                            FigureMetric::DelayMs => s.mean_delay_s.map(|d| d * 1e3),
                            FigureMetric::EnergyMj => Some(s.energy_mean_j * 1e3),
                        })
                        .collect();
                    if samples.is_empty() {
                        (None, None)
                    } else {
                        let st = ci95(&samples);
                        (Some(st.mean), st.ci95_half_width)
                    }
                }
            };
            let _ = write!(out, " {} {}", fmt_opt(mean, 6), fmt_opt(ci, 6));
        }
        out.push('\n');
    }
    out
}

/// Delivered-traffic graph: nodes that carried delivered packets, directed
/// edges labeled with their share of delivered traffic.
pub fn dot_graph(summary: &RunSummary) -> String {
    let mut out = String::from("digraph delivered_traffic {\n");
    let total: u64 = if summary.delivered == 0 { 1 } else { summary.delivered };
    let mut nodes: std::collections::BTreeSet<crate::types::NodeId> =
        std::collections::BTreeSet::new();
    for (a, b) in summary.delivered_edges.keys() {
        nodes.insert(*a);
        nodes.insert(*b);
    }
    for n in nodes {
        let _ = writeln!(out, "    \"{n}\";");
    }
    for ((a, b), count) in &summary.delivered_edges {
        let _ = writeln!(
            out,
            "    \"{a}\" -> \"{b}\" [label=\"{:.3}\"];",
            *count as f64 / total as f64
        );
    }
    out.push_str("}\n");
    out
}
