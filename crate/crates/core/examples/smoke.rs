use wbbn_sim::mac::MacConfig;
use wbbn_sim::net::Strategy;
use wbbn_sim::phy::{ChannelParams, FrequencyBand, Modulation};
use wbbn_sim::world::{WbbnRunConfig, World};

fn main() {
    for (name, band, payload) in [
        ("900-64B", FrequencyBand::Mhz900, 64u32),
        ("900-16B", FrequencyBand::Mhz900, 16),
        ("2450-64B", FrequencyBand::Mhz2450, 64),
    ] {
        let mut cfg = WbbnRunConfig::new(Strategy::Distributed, band, Modulation::Dqpsk);
        cfg.traffic.payload_bytes = payload;
        cfg.seed = 901;
        cfg.mac = MacConfig { cca_threshold_dbm: -98.0, ..MacConfig::default() };
        cfg.height_loss_db_per_decade = 20.0;
        cfg.body_to_body = ChannelParams {
            pl0_db: 48.4, d0_m: 1.0, exponent: 3.45, shadow_sigma_db: 3.0,
            shadow_coherence_s: 10.0, noise_figure_db: 10.0, bandwidth_hz: 1.0e6,
        };
        let mut w = World::wbbn(cfg).unwrap();
        w.set_flood_jitter(0.002);
        let s = w.run();
        let c = s.counters;
        println!("=== dist {} === prr={:.3} delay={:.1}ms", name, s.prr, s.mean_delay_s.unwrap_or(-1.0)*1e3);
        println!("  drops={:?} retx={} drr={} disc={} disc_fail={} rerr={} rreq_tx={}",
            s.drops_by_cause, c.mac_retransmissions, c.mac_drops_retry, c.discoveries,
            c.discovery_failures, c.rerr_tx, c.rreq_tx);
        let recs = w.collector().records();
        let mut delays: Vec<(f64, f64)> = recs.iter()
            .filter_map(|r| r.delivered_t.map(|t| (r.created_t, t - r.created_t))).collect();
        delays.sort_by(|a, b| a.1.total_cmp(&b.1));
        let n = delays.len();
        let q = |p: f64| delays[(p * (n-1) as f64) as usize].1 * 1e3;
        println!("  p50={:.1} p90={:.1} p99={:.1}ms", q(0.5), q(0.9), q(0.99));
        // steady state only (created after t=20)
        let late: Vec<f64> = recs.iter().filter(|r| r.created_t > 20.0)
            .filter_map(|r| r.delivered_t.map(|t| t - r.created_t)).collect();
        let mean_late = late.iter().sum::<f64>() / late.len() as f64;
        let gen_late = recs.iter().filter(|r| r.created_t > 20.0).count();
        let del_late = late.len();
        println!("  steady (t>20): prr={:.3} mean_delay={:.1}ms", del_late as f64/gen_late as f64, mean_late*1e3);
    }
}
