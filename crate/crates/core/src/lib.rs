//! Bubble roadmaps over signed configuration-distance fields for planar arms.
//!
//! The crate is organized bottom-up:
//!
//! * [`geom`] — planar n-link arms with capsule links, parametric obstacles,
//!   forward kinematics, and an exact collision detector (ground truth).
//! * [`oracle`] — grid-based signed configuration-distance oracle and
//!   training-dataset generation.
//! * [`net`] / [`train`] / [`validate`] — a small fully-connected regressor
//!   with analytic input gradients, its training loop, and sign-accuracy
//!   validation against the exact detector.
//! * [`field`] — a common distance-backend trait over the oracle and the
//!   learned nets, including the min-composition over obstacles.
//! * [`planner`] — the bubble roadmap: free balls as vertices, intersection
//!   and verified-line edges, A* queries, corridors, and a hybrid query mode
//!   backed by the exact detector.
//! * [`corridor`] — shortest path through a corridor of overlapping balls
//!   (projected first-order solver).
//! * [`baseline`] — PRM and PRM* reference planners on the same stack.
//! * [`bench`] / [`report`] — randomized benchmark harness and table/plot
//!   emission.

pub mod baseline;
pub mod bench;
pub mod corridor;
pub mod error;
pub mod field;
pub mod geom;
pub mod graph;
pub mod net;
pub mod oracle;
pub mod planner;
pub mod report;
pub mod scenario;
pub mod train;
pub mod validate;

pub use error::{Error, Result};
pub use geom::{Config, GeometryVector, RobotModel};
