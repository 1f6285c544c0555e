//! A common interface over signed configuration-distance backends.
//!
//! The planner only ever sees a [`DistanceField`]: per-obstacle component
//! distances and gradients, their min-composition, and a safety margin that
//! turns raw distances into conservative ball radii. Backends are the grid
//! oracle ([`OracleField`]), trained nets ([`NeuralField`]), and a
//! dimension-lifting wrapper ([`ConservativeLift`]) for conservative
//! lower-dimensional models driving a higher-dimensional robot.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geom::{self, Config, GeometryVector, RobotModel, D_MAX};
use crate::net::{input_row, MlpModel};
use crate::oracle::{signed_distance_with_witness, CollisionGrid, GridGeometry};

/// Signed configuration-distance backend with per-component access.
///
/// Component values are *raw* signed distances; [`clearance`](Self::clearance)
/// subtracts the margin and is what ball radii are built from.
pub trait DistanceField {
    /// Configuration dimension.
    fn dim(&self) -> usize;

    /// Number of distance components (obstacles, plus self-collision if any).
    fn num_components(&self) -> usize;

    /// Raw signed distance of component `i` at `q`.
    fn component_value(&self, i: usize, q: &Config) -> f64;

    /// Gradient of component `i` at `q` (zero where undefined).
    fn component_gradient(&self, i: usize, q: &Config) -> Config;

    /// Safety margin subtracted from the combined value for ball radii.
    fn margin(&self) -> f64;

    /// Combined distance: the smallest component value ([`D_MAX`] if there
    /// are no components).
    fn value(&self, q: &Config) -> f64 {
        let n = self.num_components();
        let mut best = D_MAX;
        for i in 0..n {
            best = best.min(self.component_value(i, q));
        }
        best
    }

    /// Margin-adjusted distance; positive clearance certifies a free ball.
    fn clearance(&self, q: &Config) -> f64 {
        self.value(q) - self.margin()
    }

    /// Combined value together with the gradient of the active (smallest)
    /// component.
    fn value_and_gradient(&self, q: &Config) -> (f64, Config) {
        let n = self.num_components();
        if n == 0 {
            return (D_MAX, Config::zeros(self.dim()));
        }
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for i in 0..n {
            let v = self.component_value(i, q);
            if v < best {
                best = v;
                arg = i;
            }
        }
        (best, self.component_gradient(arg, q))
    }
}

/// Margin equal to one lattice-cell diagonal of an `n`-per-dimension grid
/// over the robot's joint limits — the oracle's resolution-induced error
/// bound, and the default ball-safety margin for both backends.
pub fn lattice_margin(model: &RobotModel, grid_n: usize) -> f64 {
    model
        .joint_limits
        .iter()
        .map(|&[lo, hi]| ((hi - lo) / (grid_n - 1) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Grid-oracle backend
// ---------------------------------------------------------------------------

/// Exact-at-grid-resolution backend: one grid per obstacle, plus an optional
/// self-collision grid as the last component.
pub struct OracleField {
    model: RobotModel,
    grids: Vec<CollisionGrid>,
    margin: f64,
}

impl OracleField {
    /// Builds per-obstacle grids (and a self-collision grid when requested).
    /// The margin defaults to one lattice diagonal.
    pub fn build(
        model: &RobotModel,
        obstacles: &[GeometryVector],
        include_self: bool,
        grid_n: usize,
    ) -> Result<OracleField> {
        let mut grids = Vec::with_capacity(obstacles.len() + 1);
        for &g in obstacles {
            grids.push(CollisionGrid::build(model, GridGeometry::Obstacles(vec![g]), grid_n)?);
        }
        if include_self {
            grids.push(CollisionGrid::build(model, GridGeometry::SelfCollision, grid_n)?);
        }
        Ok(OracleField {
            model: model.clone(),
            grids,
            margin: lattice_margin(model, grid_n),
        })
    }

    pub fn with_margin(mut self, margin: f64) -> OracleField {
        self.margin = margin;
        self
    }

    pub fn robot(&self) -> &RobotModel {
        &self.model
    }
}

impl DistanceField for OracleField {
    fn dim(&self) -> usize {
        self.model.dof()
    }

    fn num_components(&self) -> usize {
        self.grids.len()
    }

    fn component_value(&self, i: usize, q: &Config) -> f64 {
        crate::oracle::signed_distance(&self.grids[i], &self.model, q)
    }

    fn component_gradient(&self, i: usize, q: &Config) -> Config {
        let (value, witness) = signed_distance_with_witness(&self.grids[i], &self.model, q);
        match witness {
            // ψ = sign·‖q−w‖, so ∇ψ = sign·(q−w)/‖q−w‖ away from the boundary.
            Some(w) => {
                let d = q.dist(&w);
                if d < 1e-12 {
                    Config::zeros(self.dim())
                } else {
                    (*q - w) * (value.signum() / d)
                }
            }
            None => Config::zeros(self.dim()),
        }
    }

    fn margin(&self) -> f64 {
        self.margin
    }
}

// ---------------------------------------------------------------------------
// Learned backend
// ---------------------------------------------------------------------------

/// Trained-net backend: an obstacle-conditioned net evaluated once per
/// obstacle, plus an optional self-collision net, combined by the min rule.
pub struct NeuralField {
    dof: usize,
    obstacle_net: Option<MlpModel>,
    self_net: Option<MlpModel>,
    obstacles: Vec<GeometryVector>,
    margin: f64,
}

impl NeuralField {
    pub fn new(
        dof: usize,
        obstacle_net: Option<MlpModel>,
        obstacles: Vec<GeometryVector>,
        self_net: Option<MlpModel>,
        margin: f64,
    ) -> Result<NeuralField> {
        if !obstacles.is_empty() {
            let net = obstacle_net
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("obstacles given but no obstacle net".into()))?;
            for g in &obstacles {
                if dof + g.param_len() != net.input_dim() {
                    return Err(Error::InvalidArgument(format!(
                        "obstacle with {} parameters does not fit net input width {}",
                        g.param_len(),
                        net.input_dim()
                    )));
                }
            }
        }
        if let Some(net) = &self_net {
            if net.input_dim() != dof {
                return Err(Error::InvalidArgument(format!(
                    "self net input width {} does not match dof {dof}",
                    net.input_dim()
                )));
            }
        }
        Ok(NeuralField { dof, obstacle_net, self_net, obstacles, margin })
    }

    fn self_component(&self) -> usize {
        self.obstacles.len()
    }

    /// All obstacle-component values in one batched pass.
    fn obstacle_values(&self, q: &Config) -> Vec<f64> {
        let net = match &self.obstacle_net {
            Some(n) => n,
            None => return Vec::new(),
        };
        let rows = self.obstacles.len();
        let mut x = Array2::zeros((rows, net.input_dim()));
        for (i, g) in self.obstacles.iter().enumerate() {
            let row = input_row(q, &g.params());
            for (j, &v) in row.iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        net.batch_forward(x.view()).to_vec()
    }
}

impl DistanceField for NeuralField {
    fn dim(&self) -> usize {
        self.dof
    }

    fn num_components(&self) -> usize {
        self.obstacles.len() + usize::from(self.self_net.is_some())
    }

    fn component_value(&self, i: usize, q: &Config) -> f64 {
        if i < self.obstacles.len() {
            let net = self.obstacle_net.as_ref().expect("validated in new");
            let row = input_row(q, &self.obstacles[i].params());
            net.forward(&row).expect("validated width")
        } else {
            self.self_net.as_ref().expect("component index").forward(q.as_slice()).unwrap()
        }
    }

    fn component_gradient(&self, i: usize, q: &Config) -> Config {
        if i < self.obstacles.len() {
            let net = self.obstacle_net.as_ref().expect("validated in new");
            let row = input_row(q, &self.obstacles[i].params());
            net.input_gradient(&row).expect("validated width")
        } else {
            self.self_net.as_ref().expect("component index").input_gradient(q.as_slice()).unwrap()
        }
    }

    fn margin(&self) -> f64 {
        self.margin
    }

    fn value(&self, q: &Config) -> f64 {
        let mut best = D_MAX;
        for v in self.obstacle_values(q) {
            best = best.min(v);
        }
        if self.self_net.is_some() {
            best = best.min(self.component_value(self.self_component(), q));
        }
        best
    }

    fn value_and_gradient(&self, q: &Config) -> (f64, Config) {
        if self.num_components() == 0 {
            return (D_MAX, Config::zeros(self.dof));
        }
        let values = self.obstacle_values(q);
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (i, &v) in values.iter().enumerate() {
            if v < best {
                best = v;
                arg = i;
            }
        }
        if self.self_net.is_some() {
            let v = self.component_value(self.self_component(), q);
            if v < best {
                best = v;
                arg = self.self_component();
            }
        }
        (best, self.component_gradient(arg, q))
    }
}

// ---------------------------------------------------------------------------
// Conservative dimension lift
// ---------------------------------------------------------------------------

/// Lifts a field over the first `inner.dim()` joints to a higher-dimensional
/// configuration space: extra joints are ignored (zero gradient). Sound when
/// the inner field's robot conservatively bounds everything the extra joints
/// can move (e.g. a tool disc over a distal link).
pub struct ConservativeLift<F> {
    inner: F,
    full_dim: usize,
}

impl<F: DistanceField> ConservativeLift<F> {
    pub fn new(inner: F, full_dim: usize) -> Result<ConservativeLift<F>> {
        if full_dim < inner.dim() {
            return Err(Error::InvalidArgument(format!(
                "cannot lift a {}-dof field to {full_dim} dof",
                inner.dim()
            )));
        }
        Ok(ConservativeLift { inner, full_dim })
    }

    fn truncate(&self, q: &Config) -> Config {
        Config::new(&q.as_slice()[..self.inner.dim()])
    }
}

impl<F: DistanceField> DistanceField for ConservativeLift<F> {
    fn dim(&self) -> usize {
        self.full_dim
    }

    fn num_components(&self) -> usize {
        self.inner.num_components()
    }

    fn component_value(&self, i: usize, q: &Config) -> f64 {
        self.inner.component_value(i, &self.truncate(q))
    }

    fn component_gradient(&self, i: usize, q: &Config) -> Config {
        let g = self.inner.component_gradient(i, &self.truncate(q));
        let mut v = [0.0; crate::geom::MAX_DOF];
        v[..g.dim()].copy_from_slice(g.as_slice());
        Config::new(&v[..self.full_dim])
    }

    fn margin(&self) -> f64 {
        self.inner.margin()
    }

    fn value(&self, q: &Config) -> f64 {
        self.inner.value(&self.truncate(q))
    }
}

// ---------------------------------------------------------------------------
// Exact detector bundle
// ---------------------------------------------------------------------------

/// The conventional detector over a concrete scene: used for hybrid queries,
/// path validation, and every ground-truth check.
#[derive(Clone, Copy)]
pub struct ExactChecker<'a> {
    pub model: &'a RobotModel,
    pub obstacles: &'a [GeometryVector],
}

impl<'a> ExactChecker<'a> {
    pub fn new(model: &'a RobotModel, obstacles: &'a [GeometryVector]) -> Self {
        ExactChecker { model, obstacles }
    }

    pub fn in_collision(&self, q: &Config) -> bool {
        geom::check_collision(self.model, q, self.obstacles)
    }

    /// Dense sweep of the segment `a`–`b` at the given step, endpoints
    /// included.
    pub fn segment_free(&self, a: &Config, b: &Config, step: f64) -> bool {
        let n = (a.dist(b) / step).ceil().max(1.0) as usize;
        (0..=n).all(|i| !self.in_collision(&a.lerp(b, i as f64 / n as f64)))
    }

    /// Sweeps every segment of a polyline.
    pub fn path_free(&self, polyline: &[Config], step: f64) -> bool {
        polyline.windows(2).all(|w| self.segment_free(&w[0], &w[1], step))
    }
}
