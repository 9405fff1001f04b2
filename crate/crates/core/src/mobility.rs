//! Body and group mobility.
//!
//! Twelve bodies move as four groups of three: each group center performs a
//! waypoint walk (biased toward the leader's group so the formation stays
//! loosely connected), member bodies hold a fixed offset from their center
//! plus bounded per-step jitter, and the five on-body nodes sit on a posture
//! template with periodic wrist/ankle articulation while walking or running.

use serde::{Deserialize, Serialize};

use crate::rng::{RandomStreams, StreamId, StreamPurpose};
use crate::types::Point3;

pub const NODES_PER_BODY: u32 = 5;

pub const SLOT_STOMACH: u8 = 0;
pub const SLOT_HEAD: u8 = 1;
pub const SLOT_SHOULDER: u8 = 2;
pub const SLOT_WRIST: u8 = 3;
pub const SLOT_ANKLE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Posture {
    Sitting,
    Standing,
    Walking,
    Running,
}

impl Posture {
    /// Group translation speed for the posture.
    pub fn speed_mps(&self) -> f64 {
        match self {
            Posture::Sitting | Posture::Standing => 0.0,
            Posture::Walking => 0.5,
            Posture::Running => 3.0,
        }
    }

    /// Gait cycle length driving limb articulation, if the posture has one.
    fn gait_period_s(&self) -> Option<f64> {
        match self {
            Posture::Walking => Some(1.2),
            Posture::Running => Some(0.6),
            _ => None,
        }
    }
}

/// One step of the cyclic posture schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosturePhase {
    pub posture: Posture,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    pub groups: u32,
    pub bodies_per_group: u32,
    /// Nearest-neighbor body spacing inside a group at t=0, meters.
    pub intra_spacing_m: f64,
    /// Adjacent group-center spacing at t=0, meters.
    pub inter_spacing_m: f64,
    /// Waypoints are drawn inside a square of this half-extent around the
    /// origin (50 gives a 100 m x 100 m field).
    pub field_half_extent_m: f64,
    /// Upper bound on body-to-center distance, checked at construction.
    pub group_radius_bound_m: f64,
    /// Mobility update period, seconds.
    pub step_s: f64,
    /// Per-component body jitter amplitude while the group is moving.
    pub body_jitter_m: f64,
    /// How tightly follower groups hold their formation slot behind group
    /// 0: they steer toward the slot plus a wander drawn from
    /// `+-(1 - leader_bias) * field_half_extent_m`.
    pub leader_bias: f64,
    pub schedule: Vec<PosturePhase>,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            groups: 4,
            bodies_per_group: 3,
            intra_spacing_m: 8.0,
            inter_spacing_m: 20.0,
            field_half_extent_m: 50.0,
            group_radius_bound_m: 6.0,
            step_s: 0.1,
            body_jitter_m: 0.5,
            leader_bias: 0.85,
            schedule: vec![
                PosturePhase { posture: Posture::Standing, duration_s: 10.0 },
                PosturePhase { posture: Posture::Walking, duration_s: 20.0 },
                PosturePhase { posture: Posture::Running, duration_s: 10.0 },
                PosturePhase { posture: Posture::Sitting, duration_s: 10.0 },
            ],
        }
    }
}

impl MobilityConfig {
    pub fn body_count(&self) -> u32 {
        self.groups * self.bodies_per_group
    }

    pub fn node_count(&self) -> u32 {
        self.body_count() * NODES_PER_BODY
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.groups < 1 || self.bodies_per_group < 1 {
            return Err("topology needs at least one group of one body".into());
        }
        if self.intra_spacing_m <= 0.0 || self.inter_spacing_m <= 0.0 {
            return Err("spacings must be positive".into());
        }
        if self.step_s <= 0.0 {
            return Err("mobility step must be positive".into());
        }
        if self.schedule.is_empty() || self.schedule.iter().any(|p| p.duration_s <= 0.0) {
            return Err("posture schedule must be non-empty with positive durations".into());
        }
        if !(0.0..=1.0).contains(&self.leader_bias) {
            return Err("leader_bias must lie in [0, 1]".into());
        }
        let reach = polygon_radius(self.bodies_per_group, self.intra_spacing_m)
            + self.body_jitter_m * std::f64::consts::SQRT_2;
        if reach > self.group_radius_bound_m {
            return Err(format!(
                "group members can reach {reach:.2} m from center, over the {} m bound",
                self.group_radius_bound_m
            ));
        }
        Ok(())
    }

    /// Posture in effect at absolute time `t` under the cyclic schedule.
    pub fn posture_at(&self, t: f64) -> Posture {
        let total: f64 = self.schedule.iter().map(|p| p.duration_s).sum();
        let mut phase = t.rem_euclid(total);
        for p in &self.schedule {
            if phase < p.duration_s {
                return p.posture;
            }
            phase -= p.duration_s;
        }
        self.schedule[0].posture
    }
}

/// Circumradius of a regular polygon with `n` vertices and the given side,
/// used to place group members at equal nearest-neighbor spacing.
fn polygon_radius(n: u32, side: f64) -> f64 {
    match n {
        1 => 0.0,
        2 => side / 2.0,
        n => side / (2.0 * (std::f64::consts::PI / f64::from(n)).sin()),
    }
}

fn member_offset(index: u32, n: u32, side: f64) -> Point3 {
    let r = polygon_radius(n, side);
    if n == 1 {
        return Point3::default();
    }
    let angle = std::f64::consts::TAU * f64::from(index) / f64::from(n);
    Point3::new(r * angle.cos(), r * angle.sin(), 0.0)
}

/// A body's placement at one instant: where it is, which way it faces, and
/// what it is doing. Node positions derive from this plus the template.
#[derive(Debug, Clone, Copy)]
pub struct BodyPose {
    pub body_id: u32,
    pub reference: Point3,
    pub heading: f64,
    pub posture: Posture,
}

/// Template offset of a node slot in the body frame (x fore, y lateral,
/// z up from the ground reference).
fn slot_offset(slot: u8) -> Point3 {
    match slot {
        SLOT_STOMACH => Point3::new(0.0, 0.0, 1.10),
        SLOT_HEAD => Point3::new(0.0, 0.0, 1.70),
        SLOT_SHOULDER => Point3::new(0.0, -0.20, 1.45),
        SLOT_WRIST => Point3::new(0.0, 0.0, 0.90),
        SLOT_ANKLE => Point3::new(0.0, 0.0, 0.10),
        _ => panic!("unknown node slot {slot}"),
    }
}

/// World position of one on-body node. Wrist and ankle get a sinusoidal
/// fore-aft swing while the posture has a gait.
pub fn node_position(pose: &BodyPose, slot: u8, t: f64) -> Point3 {
    let mut off = slot_offset(slot);
    if let Some(period) = pose.posture.gait_period_s() {
        let phase = (std::f64::consts::TAU * t / period).sin();
        match slot {
            SLOT_WRIST => off.x += 0.30 * phase,
            SLOT_ANKLE => off.x -= 0.35 * phase,
            _ => {}
        }
    }
    let (sin_h, cos_h) = pose.heading.sin_cos();
    Point3::new(
        pose.reference.x + off.x * cos_h - off.y * sin_h,
        pose.reference.y + off.x * sin_h + off.y * cos_h,
        pose.reference.z + off.z,
    )
}

/// Time-varying positions for every body of the group formation. Group 0
/// roams by random waypoint; the other groups march on their formation
/// slot relative to it, with a bounded personal wander.
pub struct MobilityState {
    cfg: MobilityConfig,
    t: f64,
    group_centers: Vec<Point3>,
    group_headings: Vec<f64>,
    waypoints: Vec<Point3>,
    /// Initial center offset of each group from group 0.
    formation_offsets: Vec<Point3>,
    /// Current wander of each follower group around its slot.
    wanders: Vec<Point3>,
    base_offsets: Vec<Point3>,
    jitters: Vec<Point3>,
    poses: Vec<BodyPose>,
}

impl MobilityState {
    pub fn new(cfg: MobilityConfig) -> Result<Self, String> {
        cfg.validate()?;
        let g = cfg.groups;
        let m = cfg.bodies_per_group;
        let mut group_centers = Vec::with_capacity(g as usize);
        for k in 0..g {
            let x = (f64::from(k) - f64::from(g - 1) / 2.0) * cfg.inter_spacing_m;
            group_centers.push(Point3::new(x, 0.0, 0.0));
        }
        let mut base_offsets = Vec::with_capacity((g * m) as usize);
        let mut poses = Vec::with_capacity((g * m) as usize);
        let posture = cfg.posture_at(0.0);
        for k in 0..g {
            for j in 0..m {
                let body_id = k * m + j;
                let off = member_offset(j, m, cfg.intra_spacing_m);
                base_offsets.push(off);
                poses.push(BodyPose {
                    body_id,
                    reference: group_centers[k as usize] + off,
                    heading: 0.0,
                    posture,
                });
            }
        }
        Ok(Self {
            waypoints: group_centers.clone(),
            group_headings: vec![0.0; g as usize],
            formation_offsets: group_centers.iter().map(|c| *c - group_centers[0]).collect(),
            wanders: vec![Point3::default(); g as usize],
            jitters: vec![Point3::default(); (g * m) as usize],
            cfg,
            t: 0.0,
            group_centers,
            base_offsets,
            poses,
        })
    }

    pub fn config(&self) -> &MobilityConfig {
        &self.cfg
    }

    pub fn poses(&self) -> &[BodyPose] {
        &self.poses
    }

    pub fn pose(&self, body: u32) -> &BodyPose {
        &self.poses[body as usize]
    }

    pub fn group_center(&self, group: u32) -> Point3 {
        self.group_centers[group as usize]
    }

    /// Position of node `slot` of `body` at time `t` (for articulation).
    pub fn node_point(&self, body: u32, slot: u8, t: f64) -> Point3 {
        node_position(&self.poses[body as usize], slot, t)
    }

    pub fn node_distance(&self, a: (u32, u8), b: (u32, u8), t: f64) -> f64 {
        self.node_point(a.0, a.1, t).distance(&self.node_point(b.0, b.1, t))
    }

    fn draw_in_square(&mut self, group: u32, half: f64, streams: &mut RandomStreams) -> Point3 {
        let id = StreamId::new(StreamPurpose::Waypoint, group);
        Point3::new(streams.uniform(id, -half, half), streams.uniform(id, -half, half), 0.0)
    }

    /// Where group `g` is heading right now. Group 0 walks to its random
    /// waypoint; followers steer for their formation slot plus wander.
    fn target_of(&mut self, group: u32, streams: &mut RandomStreams) -> Point3 {
        if group == 0 {
            let dist = self.waypoints[0].distance(&self.group_centers[0]);
            if dist < 1e-9 {
                self.waypoints[0] = self.draw_in_square(0, self.cfg.field_half_extent_m, streams);
            }
            return self.waypoints[0];
        }
        let slot = self.group_centers[0] + self.formation_offsets[group as usize];
        let target = slot + self.wanders[group as usize];
        if target.distance(&self.group_centers[group as usize]) < 1e-9 {
            let spread = (1.0 - self.cfg.leader_bias) * self.cfg.field_half_extent_m;
            self.wanders[group as usize] = self.draw_in_square(group, spread, streams);
        }
        slot + self.wanders[group as usize]
    }

    /// Advance the whole formation by `dt` seconds. Centers move toward
    /// their target at the posture speed in effect at the start of the
    /// step; bodies re-draw jitter only while moving.
    pub fn advance(&mut self, dt: f64, streams: &mut RandomStreams) {
        assert!(dt > 0.0);
        let posture = self.cfg.posture_at(self.t);
        self.t += dt;
        let speed = posture.speed_mps();
        for g in 0..self.cfg.groups {
            if speed > 0.0 {
                let target = self.target_of(g, streams);
                let to = target - self.group_centers[g as usize];
                let dist = (to.x * to.x + to.y * to.y).sqrt();
                if dist > 1e-9 {
                    let step = (speed * dt).min(dist);
                    let c = &mut self.group_centers[g as usize];
                    c.x += to.x / dist * step;
                    c.y += to.y / dist * step;
                    self.group_headings[g as usize] = to.y.atan2(to.x);
                }
            }
        }
        for (idx, pose) in self.poses.iter_mut().enumerate() {
            let g = pose.body_id / self.cfg.bodies_per_group;
            let jitter = if speed > 0.0 {
                let id = StreamId::new(StreamPurpose::Mobility, pose.body_id);
                let a = self.cfg.body_jitter_m;
                Point3::new(streams.uniform(id, -a, a), streams.uniform(id, -a, a), 0.0)
            } else {
                Point3::default()
            };
            self.jitters[idx] = jitter;
            pose.reference = self.group_centers[g as usize] + self.base_offsets[idx] + jitter;
            pose.heading = self.group_headings[g as usize];
            pose.posture = posture;
        }
    }
}
