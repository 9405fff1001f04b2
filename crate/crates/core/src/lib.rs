//! Packet-level discrete-event simulator for wireless body-to-body networks.
//!
//! The simulator compares two converge-cast dissemination architectures over
//! an 802.15.6-style narrow-band radio: a clustered design where every body
//! runs a private star around its coordinator and coordinators mesh on a
//! shared inter-body channel, and a distributed design where all nodes share
//! one channel and every node routes. The stack is CSMA/CA with immediate
//! acknowledgement at the MAC, a SINR-based link model (log-distance path
//! loss, lognormal shadowing, DBPSK/DQPSK bit error rates), and reactive
//! path-accumulating route discovery on top.
//!
//! Entry points: [`scenario::run_scenario`] and [`scenario::sweep`] drive
//! full experiments from a JSON configuration; [`world::World`] exposes the
//! underlying simulation for harnesses and tests.

pub mod engine;
pub mod mac;
pub mod metrics;
pub mod mobility;
pub mod net;
pub mod phy;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod types;
pub mod world;

pub use types::{ChannelId, IfaceId, NodeId, Point3};
