//! Radio-link chain: pathloss and shadowing, received power, SINR over
//! concurrent interferers, per-modulation bit error rate, packet error
//! rate, frame airtime, and per-packet energy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rng::{RandomStreams, StreamId, StreamPurpose};
use crate::types::NodeId;

/// Narrow-band operating frequency. Serialized as plain megahertz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum FrequencyBand {
    Mhz900,
    Mhz2450,
}

impl FrequencyBand {
    pub fn mhz(&self) -> u32 {
        match self {
            FrequencyBand::Mhz900 => 900,
            FrequencyBand::Mhz2450 => 2450,
        }
    }
}

impl TryFrom<u32> for FrequencyBand {
    type Error = String;
    fn try_from(mhz: u32) -> Result<Self, String> {
        match mhz {
            900 => Ok(FrequencyBand::Mhz900),
            2450 => Ok(FrequencyBand::Mhz2450),
            other => Err(format!("unsupported frequency {other} MHz (use 900 or 2450)")),
        }
    }
}

impl From<FrequencyBand> for u32 {
    fn from(b: FrequencyBand) -> u32 {
        b.mhz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Dbpsk,
    Dqpsk,
}

impl Modulation {
    pub fn label(&self) -> &'static str {
        match self {
            Modulation::Dbpsk => "dbpsk",
            Modulation::Dqpsk => "dqpsk",
        }
    }
}

/// Fixed (band, modulation) -> data rate mapping, in bits per second.
pub fn data_rate_bps(band: FrequencyBand, modulation: Modulation) -> f64 {
    match (band, modulation) {
        (FrequencyBand::Mhz900, Modulation::Dbpsk) => 101_200.0,
        (FrequencyBand::Mhz900, Modulation::Dqpsk) => 404_800.0,
        (FrequencyBand::Mhz2450, Modulation::Dbpsk) => 121_400.0,
        (FrequencyBand::Mhz2450, Modulation::Dqpsk) => 971_400.0,
    }
}

/// Physical-layer settings shared by every interface of a run.
#[derive(Debug, Clone, Copy)]
pub struct PhyConfig {
    pub band: FrequencyBand,
    pub modulation: Modulation,
    pub data_rate_bps: f64,
    pub tx_power_dbm: f64,
}

impl PhyConfig {
    pub fn new(band: FrequencyBand, modulation: Modulation) -> Self {
        Self { band, modulation, data_rate_bps: data_rate_bps(band, modulation), tx_power_dbm: 0.0 }
    }
}

// Narrow-band frame structure, single-rate: PLCP preamble + PHY header are
// sent at the payload rate, MAC header and FCS count toward the body.
pub const PREAMBLE_BITS: u64 = 90;
pub const PHY_HEADER_BITS: u64 = 31;
pub const MAC_HEADER_BYTES: u64 = 7;
pub const FCS_BYTES: u64 = 2;

/// Total bits on air for a MAC payload of `payload_bytes`.
pub fn frame_bits(payload_bytes: u32) -> u64 {
    PREAMBLE_BITS + PHY_HEADER_BITS + 8 * (MAC_HEADER_BYTES + u64::from(payload_bytes) + FCS_BYTES)
}

/// Frame duration in seconds.
pub fn airtime_s(payload_bytes: u32, data_rate_bps: f64) -> f64 {
    frame_bits(payload_bytes) as f64 / data_rate_bps
}

/// Which pathloss regime a link falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkKind {
    OnBody,
    BodyToBody,
}

/// Log-distance pathloss with lognormal shadowing, plus the receiver noise
/// parameters used to turn received power into SINR.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Pathloss at the reference distance, dB.
    pub pl0_db: f64,
    /// Reference distance, meters.
    pub d0_m: f64,
    pub exponent: f64,
    pub shadow_sigma_db: f64,
    /// Shadowing is piecewise-constant per directed link over this horizon.
    pub shadow_coherence_s: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
}

impl ChannelParams {
    pub fn default_on_body() -> Self {
        Self {
            pl0_db: 35.2,
            d0_m: 0.1,
            exponent: 3.35,
            shadow_sigma_db: 4.9,
            shadow_coherence_s: 10.0,
            noise_figure_db: 10.0,
            bandwidth_hz: 1.0e6,
        }
    }

    /// Body-to-body defaults calibrated for a usable range of roughly one
    /// group spacing: body blockage steepens the falloff well past the
    /// free-space exponent, and the two bands end up with similar reach.
    pub fn default_body_to_body(band: FrequencyBand) -> Self {
        let (pl0_db, exponent, shadow_sigma_db) = match band {
            FrequencyBand::Mhz900 => (48.4, 3.63, 3.0),
            FrequencyBand::Mhz2450 => (48.4, 3.63, 3.0),
        };
        Self {
            pl0_db,
            d0_m: 1.0,
            exponent,
            shadow_sigma_db,
            shadow_coherence_s: 10.0,
            noise_figure_db: 10.0,
            bandwidth_hz: 1.0e6,
        }
    }

    /// Thermal noise floor plus noise figure, dBm.
    pub fn noise_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.exponent <= 0.0 {
            return Err(format!("pathloss exponent must be > 0, got {}", self.exponent));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(format!("shadow sigma must be >= 0, got {}", self.shadow_sigma_db));
        }
        if self.d0_m <= 0.0 {
            return Err(format!("reference distance must be > 0, got {}", self.d0_m));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(format!("bandwidth must be > 0, got {}", self.bandwidth_hz));
        }
        Ok(())
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn received_power_dbm(tx_power_dbm: f64, pathloss_db: f64) -> f64 {
    tx_power_dbm - pathloss_db
}

/// SINR in dB: linear received power over linear noise plus the linear sum
/// of interferer powers.
pub fn sinr_db(prx_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64) -> f64 {
    let denom = dbm_to_mw(noise_dbm) + interferers_dbm.iter().map(|&i| dbm_to_mw(i)).sum::<f64>();
    mw_to_dbm(dbm_to_mw(prx_dbm) / denom)
}

/// Snapshot of one reception decision, mostly for tracing and tests.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub prx_dbm: f64,
    pub noise_dbm: f64,
    pub interference_mw: f64,
    pub sinr_db: f64,
}

impl LinkBudget {
    pub fn compute(prx_dbm: f64, interference_mw: f64, noise_dbm: f64) -> Self {
        let sinr_db = mw_to_dbm(dbm_to_mw(prx_dbm) / (dbm_to_mw(noise_dbm) + interference_mw));
        Self { prx_dbm, noise_dbm, interference_mw, sinr_db }
    }
}

// ---------------------------------------------------------------------------
// Bit and packet error rates
// ---------------------------------------------------------------------------

/// Exponentially scaled modified Bessel function `e^{-x} I_0(x)`, x >= 0,
/// by power series with the scale folded into every term.
fn bessel_i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let q = 0.25 * x * x;
    let mut term = (-x).exp();
    let mut sum = term;
    let mut k = 1u32;
    while k < 100_000 {
        let kf = f64::from(k);
        term *= q / (kf * kf);
        sum += term;
        if term < sum * 1e-18 && kf > 0.5 * x {
            break;
        }
        k += 1;
    }
    sum
}

/// First-order Marcum Q function via the noncentral chi-square series
/// `Q1(a,b) = sum_n Poisson(n; a^2/2) * P[Poisson(b^2/2) <= n]`.
fn marcum_q1(a: f64, b: f64) -> f64 {
    let u = 0.5 * a * a;
    let v = 0.5 * b * b;
    let mut poisson = (-u).exp();
    let mut inner_term = (-v).exp();
    let mut inner_cum = inner_term;
    let mut sum = poisson * inner_cum;
    let mut n = 1u32;
    // The inner cumulative is at most 1, so the truncation error is bounded
    // by the Poisson tail; stop once the term is negligible past its mode.
    while n < 100_000 {
        let nf = f64::from(n);
        poisson *= u / nf;
        inner_term *= v / nf;
        inner_cum += inner_term;
        sum += poisson * inner_cum;
        if poisson < 1e-18 && nf > u {
            break;
        }
        n += 1;
    }
    sum.clamp(0.0, 1.0)
}

/// Beyond this per-bit SNR the differential-QPSK error probability is below
/// 1e-100 and is reported as exactly zero.
const DQPSK_GAMMA_CUTOFF: f64 = 400.0;

/// Bit error probability for the given modulation at per-bit SNR `gamma`
/// (linear, not dB).
///
/// DBPSK: `0.5 * exp(-gamma)`.
/// DQPSK: `Q1(a, b) - 0.5 * I0(a*b) * exp(-(a^2 + b^2)/2)` with
/// `a = sqrt(2*gamma*(1 - 1/sqrt(2)))`, `b = sqrt(2*gamma*(1 + 1/sqrt(2)))`.
pub fn ber(modulation: Modulation, gamma: f64) -> f64 {
    assert!(gamma >= 0.0, "per-bit SNR must be non-negative, got {gamma}");
    match modulation {
        Modulation::Dbpsk => 0.5 * (-gamma).exp(),
        Modulation::Dqpsk => {
            if gamma > DQPSK_GAMMA_CUTOFF {
                return 0.0;
            }
            let a = (2.0 * gamma * (1.0 - std::f64::consts::FRAC_1_SQRT_2)).sqrt();
            let b = (2.0 * gamma * (1.0 + std::f64::consts::FRAC_1_SQRT_2)).sqrt();
            // I0(ab) e^{-(a^2+b^2)/2} = I0e(ab) e^{-(b-a)^2/2}
            let diff = b - a;
            let term = 0.5 * bessel_i0_scaled(a * b) * (-0.5 * diff * diff).exp();
            (marcum_q1(a, b) - term).max(0.0)
        }
    }
}

/// Packet error rate under independent bit errors across all frame bits.
pub fn per(ber: f64, bits: u64) -> f64 {
    assert!((0.0..=1.0).contains(&ber), "bit error rate out of range: {ber}");
    1.0 - (1.0 - ber).powi(bits as i32)
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

/// Supply voltage used by the per-packet energy rule.
pub const SUPPLY_VOLTS: f64 = 3.0;

/// Energy of one radio activity: `duration * 3 V * current`, with the
/// current given in milliamps. Returns joules.
pub fn packet_energy_j(duration_s: f64, current_ma: f64) -> f64 {
    assert!(duration_s >= 0.0 && current_ma >= 0.0);
    duration_s * SUPPLY_VOLTS * (current_ma / 1000.0)
}

/// Radio current draw per state (CC2420-style defaults) and the battery
/// budget used by the routing energy gate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    pub i_tx_ma: f64,
    pub i_rx_ma: f64,
    pub i_idle_ma: f64,
    pub battery_j: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self { i_tx_ma: 17.4, i_rx_ma: 18.8, i_idle_ma: 0.426, battery_j: 50.0 }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("i_tx_ma", self.i_tx_ma),
            ("i_rx_ma", self.i_rx_ma),
            ("i_idle_ma", self.i_idle_ma),
        ] {
            if v < 0.0 {
                return Err(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.battery_j <= 0.0 {
            return Err(format!("battery_j must be > 0, got {}", self.battery_j));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Channel model with per-link shadowing state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct ShadowSample {
    value_db: f64,
    until: f64,
}

/// Pathloss evaluator owning the shadowing process of every directed link.
pub struct ChannelModel {
    pub on_body: ChannelParams,
    pub body_to_body: ChannelParams,
    pub shadowing_enabled: bool,
    shadow: BTreeMap<(NodeId, NodeId), ShadowSample>,
    pub zero_distance_warnings: u64,
}

impl ChannelModel {
    pub fn new(on_body: ChannelParams, body_to_body: ChannelParams) -> Self {
        Self {
            on_body,
            body_to_body,
            shadowing_enabled: true,
            shadow: BTreeMap::new(),
            zero_distance_warnings: 0,
        }
    }

    pub fn params(&self, kind: LinkKind) -> &ChannelParams {
        match kind {
            LinkKind::OnBody => &self.on_body,
            LinkKind::BodyToBody => &self.body_to_body,
        }
    }

    /// Pathloss of the link `tx -> rx` at time `t`:
    /// `pl0 + 10*n*log10(d/d0) + S(t)` where `S` is a zero-mean normal
    /// process in dB, redrawn once per coherence interval per link.
    /// Shadowing is reciprocal: both directions of a pair share the sample.
    pub fn pathloss_db(
        &mut self,
        kind: LinkKind,
        tx: NodeId,
        rx: NodeId,
        distance_m: f64,
        t: f64,
        streams: &mut RandomStreams,
    ) -> f64 {
        let p = *self.params(kind);
        let d = if distance_m <= 0.0 {
            self.zero_distance_warnings += 1;
            p.d0_m / 10.0
        } else {
            distance_m
        };
        let mut pl = p.pl0_db + 10.0 * p.exponent * (d / p.d0_m).log10();
        if self.shadowing_enabled && p.shadow_sigma_db > 0.0 {
            let key = (tx.min(rx), tx.max(rx));
            let entry = self.shadow.get(&key).copied();
            let sample = match entry {
                Some(s) if t < s.until => s,
                _ => {
                    let value_db = streams.normal(
                        StreamId::new(StreamPurpose::Shadowing, key.0 .0),
                        0.0,
                        p.shadow_sigma_db,
                    );
                    let s = ShadowSample { value_db, until: t + p.shadow_coherence_s };
                    self.shadow.insert(key, s);
                    s
                }
            };
            pl += sample.value_db;
        }
        pl
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_table_is_exact() {
        assert_eq!(data_rate_bps(FrequencyBand::Mhz900, Modulation::Dbpsk), 101_200.0);
        assert_eq!(data_rate_bps(FrequencyBand::Mhz900, Modulation::Dqpsk), 404_800.0);
        assert_eq!(data_rate_bps(FrequencyBand::Mhz2450, Modulation::Dbpsk), 121_400.0);
        assert_eq!(data_rate_bps(FrequencyBand::Mhz2450, Modulation::Dqpsk), 971_400.0);
    }

    #[test]
    fn airtime_overhead_floor() {
        assert_eq!(frame_bits(0), 193);
        let rate = 971_400.0;
        assert_eq!(airtime_s(0, rate), 193.0 / rate);
    }

    #[test]
    fn airtime_known_points() {
        let t16 = airtime_s(16, 971_400.0);
        assert_eq!(frame_bits(16), 321);
        assert!((t16 - 321.0 / 971_400.0).abs() < 1e-15);
        assert!((t16 - 330.4e-6).abs() < 0.1e-6);

        let t256 = airtime_s(256, 101_200.0);
        assert_eq!(frame_bits(256), 2241);
        assert!((t256 - 22.14e-3).abs() < 0.01e-3);
    }

    #[test]
    fn airtime_is_affine_in_payload() {
        let rate = 404_800.0;
        let slope = 8.0 / rate;
        for p in [0u32, 1, 16, 255, 1024] {
            let dt = airtime_s(p + 1, rate) - airtime_s(p, rate);
            assert!((dt - slope).abs() < 1e-12);
        }
    }

    #[test]
    fn received_power_is_subtraction() {
        assert_eq!(received_power_dbm(0.0, 50.0), -50.0);
        assert_eq!(received_power_dbm(0.0, 0.0), 0.0);
        assert_eq!(received_power_dbm(0.0, 90.3), -90.3);
    }

    #[test]
    fn sinr_without_interference_is_snr() {
        let s = sinr_db(-60.0, &[], -104.0);
        assert!((s - 44.0).abs() < 1e-9);
    }

    #[test]
    fn sinr_equal_interferer_near_zero_db() {
        let s = sinr_db(-60.0, &[-60.0], -200.0);
        assert!(s.abs() < 1e-6, "got {s}");
    }

    #[test]
    fn sinr_matches_linear_domain_evaluation() {
        let expected = 10.0 * (1e-6_f64 / (1e-7 + 1e-10)).log10();
        let s = sinr_db(-60.0, &[-70.0], -100.0);
        assert!((s - expected).abs() < 1e-9);
        assert!((s - 9.9957).abs() < 1e-3, "got {s}");
    }

    #[test]
    fn sinr_decreases_when_interferer_added() {
        let mut ints = Vec::new();
        let mut last = sinr_db(-60.0, &ints, -104.0);
        for _ in 0..5 {
            ints.push(-75.0);
            let s = sinr_db(-60.0, &ints, -104.0);
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn dbpsk_ber_closed_form() {
        assert_eq!(ber(Modulation::Dbpsk, 0.0), 0.5);
        assert_eq!(ber(Modulation::Dbpsk, 10.0), 0.5 * (-10.0f64).exp());
        assert!((ber(Modulation::Dbpsk, 10.0) - 2.2700e-5).abs() < 1e-9);
    }

    #[test]
    fn dbpsk_ber_strictly_decreasing() {
        let mut last = ber(Modulation::Dbpsk, 0.0);
        for i in 1..=200 {
            let g = f64::from(i) * 0.25;
            let b = ber(Modulation::Dbpsk, g);
            assert!(b < last);
            last = b;
        }
        assert!(ber(Modulation::Dbpsk, 700.0) < 1e-300);
    }

    #[test]
    fn dqpsk_ber_at_zero_snr_is_half() {
        assert!((ber(Modulation::Dqpsk, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dqpsk_ber_matches_quadrature_oracle_values() {
        // Frozen from an independent quadrature evaluation of the Marcum Q
        // integral (see the acceptance suite for the live comparison).
        for (gamma, expected) in [
            (0.1, 4.358100559023074e-1),
            (1.0, 1.639075303995575e-1),
            (5.0, 8.648391267535928e-3),
            (10.0, 3.431845960346864e-4),
            (20.0, 7.140671496795362e-7),
        ] {
            let b = ber(Modulation::Dqpsk, gamma);
            assert!(
                (b - expected).abs() < 1e-12,
                "gamma {gamma}: {b:e} vs {expected:e}"
            );
        }
    }

    #[test]
    fn dqpsk_ber_decreasing_and_vanishing() {
        let mut last = ber(Modulation::Dqpsk, 0.0);
        for i in 1..=100 {
            let b = ber(Modulation::Dqpsk, f64::from(i) * 0.5);
            assert!(b <= last, "not monotone at gamma {}", f64::from(i) * 0.5);
            last = b;
        }
        assert!(ber(Modulation::Dqpsk, 100.0) < 1e-20);
        assert_eq!(ber(Modulation::Dqpsk, 1e6), 0.0);
    }

    #[test]
    fn per_boundaries_and_closed_form() {
        assert_eq!(per(0.0, 1000), 0.0);
        assert_eq!(per(1.0, 1), 1.0);
        assert_eq!(per(0.3, 0), 0.0);
        let p = per(1e-3, 1000);
        assert!((p - 0.63230).abs() < 1e-5, "got {p}");
    }

    #[test]
    fn per_monotone_in_ber_and_bits() {
        let bers = [0.0, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0];
        for w in bers.windows(2) {
            assert!(per(w[0], 500) <= per(w[1], 500));
        }
        for bits in [0u64, 1, 10, 100, 1000, 10_000] {
            assert!(per(1e-3, bits) <= per(1e-3, bits + 1));
        }
    }

    #[test]
    fn packet_energy_rule() {
        assert_eq!(packet_energy_j(0.0, 17.4), 0.0);
        let e = packet_energy_j(1e-3, 17.4);
        assert!((e - 52.2e-6).abs() < 1e-15 * 52.2e-6 + f64::EPSILON);
        let chained = packet_energy_j(airtime_s(16, 971_400.0), 17.4);
        assert!((chained - 17.25e-6).abs() < 0.01e-6, "got {chained}");
    }

    fn reference_params() -> ChannelParams {
        ChannelParams {
            pl0_db: 48.4,
            d0_m: 1.0,
            exponent: 3.11,
            shadow_sigma_db: 6.1,
            shadow_coherence_s: 0.5,
            noise_figure_db: 10.0,
            bandwidth_hz: 1.0e6,
        }
    }

    fn quiet_model() -> (ChannelModel, RandomStreams) {
        let mut m = ChannelModel::new(ChannelParams::default_on_body(), reference_params());
        m.shadowing_enabled = false;
        (m, RandomStreams::new(5))
    }

    #[test]
    fn pathloss_at_reference_distance() {
        let (mut m, mut s) = quiet_model();
        let pl =
            m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 1.0, 0.0, &mut s);
        assert!((pl - 48.4).abs() < 1e-12);
    }

    #[test]
    fn pathloss_decade_slope() {
        let (mut m, mut s) = quiet_model();
        let pl =
            m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 10.0, 0.0, &mut s);
        assert!((pl - (48.4 + 31.1)).abs() < 1e-9);
    }

    #[test]
    fn zero_distance_clamps_with_warning() {
        let (mut m, mut s) = quiet_model();
        let pl = m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 0.0, 0.0, &mut s);
        let expected =
            m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 0.1, 0.0, &mut s);
        assert_eq!(pl, expected);
        assert_eq!(m.zero_distance_warnings, 1);
    }

    #[test]
    fn shadowing_constant_within_coherence_and_zero_mean() {
        let mut m = ChannelModel::new(ChannelParams::default_on_body(), reference_params());
        let mut s = RandomStreams::new(11);
        let base = 48.4 + 31.1; // deterministic part at 10 m
        let a = m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 10.0, 0.0, &mut s);
        let b = m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 10.0, 0.49, &mut s);
        assert_eq!(a, b);

        let n = 10_000;
        let mut sum = 0.0;
        for i in 0..n {
            // Step past the coherence horizon so every query redraws.
            let t = (i as f64 + 1.0) * 0.5;
            let pl = m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 10.0, t, &mut s);
            sum += pl - base;
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 0.2, "shadowing mean {mean}");
    }

    #[test]
    fn shadowing_is_reciprocal_but_per_pair() {
        let mut m = ChannelModel::new(ChannelParams::default_on_body(), reference_params());
        let mut s = RandomStreams::new(13);
        let ab = m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(1), 10.0, 0.0, &mut s);
        let ba = m.pathloss_db(LinkKind::BodyToBody, NodeId(1), NodeId(0), 10.0, 0.0, &mut s);
        assert_eq!(ab, ba);
        let ac = m.pathloss_db(LinkKind::BodyToBody, NodeId(0), NodeId(2), 10.0, 0.0, &mut s);
        assert_ne!(ab, ac);
    }
}
