//! Scenario files: one robot plus one obstacle set, serialized as JSON.
//!
//! Data and model files carry a hash of the robot they were generated for, so
//! a roadmap or dataset cannot silently be replayed against a different arm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{GeometryVector, RobotModel};

/// A robot in a world of obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub robot: RobotModel,
    pub obstacles: Vec<GeometryVector>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        for g in &self.obstacles {
            g.validate()?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        let scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| Error::CorruptFile(format!("{}: {e}", path.display())))?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// FNV-1a over the robot's defining parameters. Stable across runs and
/// platforms (feeds on canonical little-endian bytes).
pub fn robot_hash(model: &RobotModel) -> u64 {
    let mut h = Fnv1a::new();
    for &l in &model.link_lengths {
        h.write_f64(l);
    }
    h.write_f64(model.link_radius);
    h.write_f64(model.base_position[0]);
    h.write_f64(model.base_position[1]);
    for &[lo, hi] in &model.joint_limits {
        h.write_f64(lo);
        h.write_f64(hi);
    }
    h.write_f64(model.tool_radius.unwrap_or(0.0));
    h.finish()
}

/// FNV-1a over the robot and every obstacle. Roadmap files record this so a
/// roadmap is never replayed against a different scene.
pub fn scenario_hash(scenario: &Scenario) -> u64 {
    let mut h = Fnv1a(robot_hash(&scenario.robot));
    for g in &scenario.obstacles {
        h.write_f64(g.param_len() as f64);
        for &p in &g.params() {
            h.write_f64(p);
        }
    }
    h.finish()
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    fn write_f64(&mut self, x: f64) {
        for b in x.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
