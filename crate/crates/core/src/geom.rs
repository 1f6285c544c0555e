//! Planar n-link arms, parametric workspace obstacles, forward kinematics,
//! and an exact collision detector.
//!
//! Links are capsules (segment + radius), so every robot/obstacle and
//! robot/robot test reduces to a closed-form primitive distance:
//! segment–point, segment–segment, or segment–box. The detector here is the
//! ground truth that every other layer (grid oracle, learned field, planners,
//! benchmark validation) is measured against.

use arrayvec::ArrayVec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported joint count.
pub const MAX_DOF: usize = 4;

/// Maximum capsules a model can produce (links plus an optional tool disc).
pub const MAX_CAPSULES: usize = MAX_DOF + 1;

/// Sentinel clearance for an empty obstacle set (min over an empty set).
pub const D_MAX: f64 = 1e6;

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

/// A joint-space configuration: up to [`MAX_DOF`] joint angles in radians.
///
/// Stored inline so planner loops never allocate. Arithmetic is componentwise
/// over the first `dim()` entries; unused slots stay zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Config {
    len: u8,
    v: [f64; MAX_DOF],
}

impl Config {
    /// Builds a configuration from a slice. Panics if the slice is empty or
    /// longer than [`MAX_DOF`].
    pub fn new(values: &[f64]) -> Self {
        assert!(
            !values.is_empty() && values.len() <= MAX_DOF,
            "configuration dimension {} outside 1..={}",
            values.len(),
            MAX_DOF
        );
        let mut v = [0.0; MAX_DOF];
        v[..values.len()].copy_from_slice(values);
        Config { len: values.len() as u8, v }
    }

    /// The all-zero configuration of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        Config::new(&[0.0; MAX_DOF][..dim])
    }

    pub fn dim(&self) -> usize {
        self.len as usize
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.len as usize]
    }

    pub fn dot(&self, other: &Config) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut s = 0.0;
        for i in 0..self.dim() {
            s += self.v[i] * other.v[i];
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean distance to `other` (the raw joint-angle 2-norm).
    pub fn dist(&self, other: &Config) -> f64 {
        (*self - *other).norm()
    }

    /// Unit vector in this direction, or zero if the norm underflows.
    pub fn normalized(&self) -> Config {
        let n = self.norm();
        if n < 1e-30 {
            Config::zeros(self.dim())
        } else {
            *self * (1.0 / n)
        }
    }

    /// Linear interpolation `self + t·(other − self)`.
    pub fn lerp(&self, other: &Config, t: f64) -> Config {
        *self + (*other - *self) * t
    }
}

impl std::ops::Index<usize> for Config {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl std::ops::IndexMut<usize> for Config {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let n = self.dim();
        &mut self.v[..n][i]
    }
}

impl std::ops::Add for Config {
    type Output = Config;
    fn add(self, rhs: Config) -> Config {
        debug_assert_eq!(self.len, rhs.len);
        let mut out = self;
        for i in 0..self.dim() {
            out.v[i] += rhs.v[i];
        }
        out
    }
}

impl std::ops::Sub for Config {
    type Output = Config;
    fn sub(self, rhs: Config) -> Config {
        debug_assert_eq!(self.len, rhs.len);
        let mut out = self;
        for i in 0..self.dim() {
            out.v[i] -= rhs.v[i];
        }
        out
    }
}

impl std::ops::Mul<f64> for Config {
    type Output = Config;
    fn mul(self, rhs: f64) -> Config {
        let mut out = self;
        for i in 0..self.dim() {
            out.v[i] *= rhs;
        }
        out
    }
}

impl std::fmt::Debug for Config {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Serialize for Config {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.as_slice())
    }
}

impl<'de> Deserialize<'de> for Config {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        if values.is_empty() || values.len() > MAX_DOF {
            return Err(serde::de::Error::custom(format!(
                "configuration dimension {} outside 1..={}",
                values.len(),
                MAX_DOF
            )));
        }
        Ok(Config::new(&values))
    }
}

// ---------------------------------------------------------------------------
// 2D primitive distances
// ---------------------------------------------------------------------------

fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: [f64; 2]) -> f64 {
    dot2(a, a).sqrt()
}

/// Distance from point `p` to the segment `a`–`b`.
pub fn seg_point_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    if len2 < 1e-30 {
        return norm2(sub2(p, a));
    }
    let t = (dot2(sub2(p, a), ab) / len2).clamp(0.0, 1.0);
    norm2(sub2(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Distance between segments `p1`–`q1` and `p2`–`q2` (0 when they cross).
pub fn seg_seg_distance(p1: [f64; 2], q1: [f64; 2], p2: [f64; 2], q2: [f64; 2]) -> f64 {
    // Closest points by clamped projection (Ericson, Real-Time Collision
    // Detection §5.1.9); degenerate segments fall back to point distances.
    let d1 = sub2(q1, p1);
    let d2 = sub2(q2, p2);
    let r = sub2(p1, p2);
    let a = dot2(d1, d1);
    let e = dot2(d2, d2);
    let f = dot2(d2, r);
    let (s, t);
    if a < 1e-30 && e < 1e-30 {
        return norm2(r);
    }
    if a < 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot2(d1, r);
        if e < 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot2(d1, d2);
            let denom = a * e - b * b;
            let s0 = if denom > 1e-30 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    let c1 = [p1[0] + s * d1[0], p1[1] + s * d1[1]];
    let c2 = [p2[0] + t * d2[0], p2[1] + t * d2[1]];
    norm2(sub2(c1, c2))
}

/// True if `p` lies inside or on the box centered at `c` with half-extents `h`.
pub fn point_in_aabb(p: [f64; 2], c: [f64; 2], h: [f64; 2]) -> bool {
    (p[0] - c[0]).abs() <= h[0] && (p[1] - c[1]).abs() <= h[1]
}

/// Distance from segment `a`–`b` to the box centered at `c` with half-extents
/// `h`; 0 when they touch or overlap.
pub fn seg_aabb_distance(a: [f64; 2], b: [f64; 2], c: [f64; 2], h: [f64; 2]) -> f64 {
    // A segment meeting the box either has an endpoint inside or crosses the
    // boundary, so checking one endpoint plus the four boundary edges is exact.
    if point_in_aabb(a, c, h) {
        return 0.0;
    }
    let corners = [
        [c[0] - h[0], c[1] - h[1]],
        [c[0] + h[0], c[1] - h[1]],
        [c[0] + h[0], c[1] + h[1]],
        [c[0] - h[0], c[1] + h[1]],
    ];
    let mut best = f64::INFINITY;
    for i in 0..4 {
        best = best.min(seg_seg_distance(a, b, corners[i], corners[(i + 1) % 4]));
    }
    best
}

// ---------------------------------------------------------------------------
// Obstacles
// ---------------------------------------------------------------------------

/// One parametric workspace obstacle.
///
/// The flattened parameter vector (`params`) is what the learned field is
/// conditioned on: `[cx, cy, r]` for circles, `[cx, cy, hx, hy]` for boxes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryVector {
    Circle { center: [f64; 2], radius: f64 },
    Aabb { center: [f64; 2], half_extents: [f64; 2] },
}

impl GeometryVector {
    /// Flattened obstacle parameters, in the order the nets consume them.
    pub fn params(&self) -> ArrayVec<f64, 4> {
        let mut out = ArrayVec::new();
        match *self {
            GeometryVector::Circle { center, radius } => {
                out.extend([center[0], center[1], radius]);
            }
            GeometryVector::Aabb { center, half_extents } => {
                out.extend([center[0], center[1], half_extents[0], half_extents[1]]);
            }
        }
        out
    }

    pub fn param_len(&self) -> usize {
        match self {
            GeometryVector::Circle { .. } => 3,
            GeometryVector::Aabb { .. } => 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GeometryVector::Circle { radius, .. } => radius > 0.0,
            GeometryVector::Aabb { half_extents, .. } => {
                half_extents[0] > 0.0 && half_extents[1] > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("obstacle size parameters must be positive".into()))
        }
    }

    /// Signed separation between this obstacle and a capsule (negative on
    /// penetration).
    pub fn distance_to_capsule(&self, cap: &Capsule) -> f64 {
        match *self {
            GeometryVector::Circle { center, radius } => {
                seg_point_distance(cap.a, cap.b, center) - radius - cap.radius
            }
            GeometryVector::Aabb { center, half_extents } => {
                seg_aabb_distance(cap.a, cap.b, center, half_extents) - cap.radius
            }
        }
    }
}

/// Obstacle family for random world/dataset generation: kind plus uniform
/// ranges for center coordinates and the size parameter (circle radius or box
/// half-extent, each axis drawn independently).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSampler {
    pub kind: ObstacleKind,
    pub center_lo: [f64; 2],
    pub center_hi: [f64; 2],
    pub size_lo: f64,
    pub size_hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Circle,
    Aabb,
}

impl ObstacleSampler {
    /// Number of obstacle parameters this family produces.
    pub fn param_len(&self) -> usize {
        match self.kind {
            ObstacleKind::Circle => 3,
            ObstacleKind::Aabb => 4,
        }
    }

    /// Draws one obstacle. The draw order (cx, cy, sizes) is fixed so seeded
    /// runs reproduce exactly.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> GeometryVector {
        let cx = rng.gen_range(self.center_lo[0]..=self.center_hi[0]);
        let cy = rng.gen_range(self.center_lo[1]..=self.center_hi[1]);
        match self.kind {
            ObstacleKind::Circle => GeometryVector::Circle {
                center: [cx, cy],
                radius: rng.gen_range(self.size_lo..=self.size_hi),
            },
            ObstacleKind::Aabb => GeometryVector::Aabb {
                center: [cx, cy],
                half_extents: [
                    rng.gen_range(self.size_lo..=self.size_hi),
                    rng.gen_range(self.size_lo..=self.size_hi),
                ],
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Robot model and kinematics
// ---------------------------------------------------------------------------

/// One thick link (or the tool disc): a segment with a radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub radius: f64,
}

/// A planar n-link arm with capsule links.
///
/// `tool_radius`, when set, adds a disc of that radius at the arm tip — used
/// to bound distal geometry conservatively (e.g. a wrist-mounted link that a
/// lower-dimensional model cannot articulate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub link_lengths: Vec<f64>,
    pub link_radius: f64,
    #[serde(default)]
    pub base_position: [f64; 2],
    pub joint_limits: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_radius: Option<f64>,
}

impl RobotModel {
    pub fn new(link_lengths: Vec<f64>, link_radius: f64, joint_limits: Vec<[f64; 2]>) -> Result<Self> {
        let model = RobotModel {
            link_lengths,
            link_radius,
            base_position: [0.0, 0.0],
            joint_limits,
            tool_radius: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.link_lengths.len();
        if d == 0 || d > MAX_DOF {
            return Err(Error::InvalidArgument(format!("dof {d} outside 1..={MAX_DOF}")));
        }
        if self.joint_limits.len() != d {
            return Err(Error::InvalidArgument(format!(
                "{} joint limits for {d} links",
                self.joint_limits.len()
            )));
        }
        if !self.link_lengths.iter().all(|&l| l > 0.0) || self.link_radius <= 0.0 {
            return Err(Error::InvalidArgument("link lengths and radius must be positive".into()));
        }
        if let Some(r) = self.tool_radius {
            if r <= 0.0 {
                return Err(Error::InvalidArgument("tool radius must be positive".into()));
            }
        }
        for &[lo, hi] in &self.joint_limits {
            if !(lo < hi) {
                return Err(Error::InvalidArgument(format!("joint limit [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    /// Capsules posed at `q`: one per link, plus the tool disc if configured.
    /// Capsule `i+1` starts exactly where capsule `i` ends.
    pub fn forward_kinematics(&self, q: &Config) -> Result<ArrayVec<Capsule, MAX_CAPSULES>> {
        if q.dim() != self.dof() {
            return Err(Error::InvalidArgument(format!(
                "configuration dimension {} does not match dof {}",
                q.dim(),
                self.dof()
            )));
        }
        Ok(self.capsules(q))
    }

    /// Infallible kinematics for internal hot paths; callers guarantee the
    /// dimension matches.
    pub(crate) fn capsules(&self, q: &Config) -> ArrayVec<Capsule, MAX_CAPSULES> {
        debug_assert_eq!(q.dim(), self.dof());
        let mut out = ArrayVec::new();
        let mut p = self.base_position;
        let mut angle = 0.0;
        for (i, &len) in self.link_lengths.iter().enumerate() {
            angle += q[i];
            let end = [p[0] + len * angle.cos(), p[1] + len * angle.sin()];
            out.push(Capsule { a: p, b: end, radius: self.link_radius });
            p = end;
        }
        if let Some(r) = self.tool_radius {
            out.push(Capsule { a: p, b: p, radius: r });
        }
        out
    }

    /// Tip position (end of the last link).
    pub fn tip(&self, q: &Config) -> [f64; 2] {
        let caps = self.capsules(q);
        caps[self.dof() - 1].b
    }

    /// Sum of link lengths plus thickness (a workspace bounding radius).
    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum::<f64>() + self.link_radius + self.tool_radius.unwrap_or(0.0)
    }

    /// Uniform configuration within the joint limits (fixed joint draw order).
    pub fn uniform_config<R: Rng>(&self, rng: &mut R) -> Config {
        let mut v = ArrayVec::<f64, MAX_DOF>::new();
        for &[lo, hi] in &self.joint_limits {
            v.push(rng.gen_range(lo..=hi));
        }
        Config::new(&v)
    }

    /// Componentwise clamp of `q` into the joint limits.
    pub fn clamp_config(&self, q: &Config) -> Config {
        let mut v = ArrayVec::<f64, MAX_DOF>::new();
        for (i, &[lo, hi]) in self.joint_limits.iter().enumerate() {
            v.push(q[i].clamp(lo, hi));
        }
        Config::new(&v)
    }

    /// Distance from `q` to the nearest joint-limit face (∞-free: min over
    /// per-joint slack). Balls are clipped to this so they stay inside the
    /// configuration-space box.
    pub fn limit_distance(&self, q: &Config) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &[lo, hi]) in self.joint_limits.iter().enumerate() {
            best = best.min(q[i] - lo).min(hi - q[i]);
        }
        best
    }

    /// Diagonal of the joint-limit box.
    pub fn config_box_diagonal(&self) -> f64 {
        self.joint_limits.iter().map(|&[lo, hi]| (hi - lo).powi(2)).sum::<f64>().sqrt()
    }
}

// ---------------------------------------------------------------------------
// Collision predicates
// ---------------------------------------------------------------------------

/// True if any posed capsule penetrates any obstacle. Touching (separation
/// exactly 0) counts as free, so this agrees with `workspace_distance < 0`.
pub fn obstacle_collision(model: &RobotModel, q: &Config, obs: &[GeometryVector]) -> bool {
    let caps = model.capsules(q);
    obs.iter().any(|g| caps.iter().any(|c| g.distance_to_capsule(c) < 0.0))
}

/// True if any pair of capsules with index gap ≥ 2 penetrate each other
/// (adjacent capsules always touch at the shared joint).
pub fn self_collision(model: &RobotModel, q: &Config) -> bool {
    let caps = model.capsules(q);
    for i in 0..caps.len() {
        for j in (i + 2)..caps.len() {
            let d = seg_seg_distance(caps[i].a, caps[i].b, caps[j].a, caps[j].b);
            if d - caps[i].radius - caps[j].radius < 0.0 {
                return true;
            }
        }
    }
    false
}

/// Full exact collision check: obstacle contact or self-collision.
pub fn check_collision(model: &RobotModel, q: &Config, obs: &[GeometryVector]) -> bool {
    obstacle_collision(model, q, obs) || self_collision(model, q)
}

/// Signed workspace clearance: min over (capsule, obstacle) pairs of the
/// separation distance, negative on penetration. Empty obstacle sets return
/// the [`D_MAX`] sentinel.
pub fn workspace_distance(model: &RobotModel, q: &Config, obs: &[GeometryVector]) -> f64 {
    let caps = model.capsules(q);
    let mut best = D_MAX;
    for g in obs {
        for c in &caps {
            best = best.min(g.distance_to_capsule(c));
        }
    }
    best
}
