//! Bubble roadmap construction and querying.
//!
//! A roadmap vertex is a ball in configuration space: a center paired with a
//! conservative free radius taken from a [`DistanceField`]. Two balls are
//! connected when they overlap, or when the straight segment between their
//! centers survives a bubble-marching sweep. Queries attach two extra balls
//! (start and goal), run A* over the combined graph, and return both a
//! center polyline and, when every hop is covered by balls, a corridor of
//! overlapping balls suitable for path optimization.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::{DistanceField, ExactChecker};
use crate::geom::{Config, D_MAX};
use crate::graph;

/// File format version for saved roadmaps.
const ROADMAP_VERSION: u32 = 1;

/// A free ball in configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Config,
    pub radius: f64,
}

/// How an edge was certified collision-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// The two balls overlap; any segment between points of the two balls
    /// that crosses the overlap region stays inside their union.
    Intersection,
    /// The center segment passed a bubble-marching sweep.
    VerifiedLine,
    /// The segment was partly validated by exact stepping (hybrid queries).
    HybridVerified,
}

/// An undirected roadmap edge between balls `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    /// Euclidean distance between the two centers.
    pub length: f64,
}

/// Tuning knobs for roadmap construction and queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Balls (and marching waypoints) below this clearance are unusable.
    pub r_min: f64,
    /// Gradient-growth step length as a fraction of the local field value.
    pub growth_step_frac: f64,
    /// Maximum gradient-growth steps per ball.
    pub growth_max_steps: usize,
    /// Bubble marching advances by this fraction of the local clearance.
    pub march_safety: f64,
    /// Lower bound on a marching step, so the sweep always terminates.
    pub march_min_step: f64,
    /// Obstacles farther than this factor times the median ball radius are
    /// left out of a ball's local polytope.
    pub far_threshold_factor: f64,
    /// Candidate neighbors considered when attaching a query configuration.
    pub num_neighbors: usize,
    /// Sampling gives up after `sample_cap_factor * requested` attempts.
    pub sample_cap_factor: usize,
    /// Exact-check step length used while a hybrid march is below `r_min`.
    pub hybrid_step: f64,
    /// Roadmap balls tried (nearest first) by a hybrid attachment.
    pub hybrid_candidates: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            r_min: 1e-3,
            growth_step_frac: 0.25,
            growth_max_steps: 15,
            march_safety: 0.9,
            march_min_step: 1e-4,
            far_threshold_factor: 5.0,
            num_neighbors: 10,
            sample_cap_factor: 200,
            hybrid_step: 1e-2,
            hybrid_candidates: 10,
        }
    }
}

/// A built roadmap: balls, certified edges, and adjacency.
#[derive(Debug, Clone)]
pub struct Roadmap {
    pub balls: Vec<Ball>,
    pub edges: Vec<Edge>,
    /// Which distance backend produced the balls (for provenance).
    pub backend: String,
    pub seed: u64,
    /// `adjacency[v]` lists `(neighbor, edge index)` pairs.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Roadmap {
    fn new(balls: Vec<Ball>, edges: Vec<Edge>, backend: String, seed: u64) -> Self {
        let mut map = Roadmap { balls, edges, backend, seed, adjacency: Vec::new() };
        map.rebuild_adjacency();
        map
    }

    fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.balls.len()];
        for (idx, e) in self.edges.iter().enumerate() {
            self.adjacency[e.a].push((e.b, idx));
            self.adjacency[e.b].push((e.a, idx));
        }
    }

    /// `(neighbor, edge index)` pairs for ball `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].iter().any(|&(n, _)| n == b)
    }

    /// Upper median of the ball radii; scales the far-obstacle threshold.
    pub fn median_radius(&self) -> f64 {
        if self.balls.is_empty() {
            return 0.0;
        }
        let mut radii: Vec<f64> = self.balls.iter().map(|b| b.radius).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).expect("radii are finite"));
        radii[radii.len() / 2]
    }
}

/// On-disk roadmap representation.
#[derive(Serialize, Deserialize)]
struct RoadmapFile {
    version: u32,
    backend: String,
    seed: u64,
    scenario_hash: u64,
    balls: Vec<Ball>,
    edges: Vec<Edge>,
}

/// Writes a roadmap as JSON, stamping the scenario hash so a later load can
/// refuse to pair it with a different scene.
pub fn save_roadmap(path: &Path, map: &Roadmap, scenario_hash: u64) -> Result<()> {
    let file = RoadmapFile {
        version: ROADMAP_VERSION,
        backend: map.backend.clone(),
        seed: map.seed,
        scenario_hash,
        balls: map.balls.clone(),
        edges: map.edges.clone(),
    };
    let writer = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(writer, &file)?;
    Ok(())
}

/// Reads a roadmap written by [`save_roadmap`]; returns it together with the
/// scenario hash recorded at save time.
pub fn load_roadmap(path: &Path) -> Result<(Roadmap, u64)> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let file: RoadmapFile = serde_json::from_reader(reader)
        .map_err(|e| Error::CorruptFile(format!("{}: {e}", path.display())))?;
    if file.version != ROADMAP_VERSION {
        return Err(Error::VersionMismatch { found: file.version, expected: ROADMAP_VERSION });
    }
    for (i, ball) in file.balls.iter().enumerate() {
        if !(ball.radius > 0.0) || !ball.radius.is_finite() {
            return Err(Error::CorruptFile(format!("ball {i} has radius {}", ball.radius)));
        }
    }
    for (i, e) in file.edges.iter().enumerate() {
        if e.a >= file.balls.len() || e.b >= file.balls.len() || e.a == e.b {
            return Err(Error::CorruptFile(format!("edge {i} references ({}, {})", e.a, e.b)));
        }
    }
    let map = Roadmap::new(file.balls, file.edges, file.backend, file.seed);
    Ok((map, file.scenario_hash))
}

/// A halfspace `normal . q <= bound` certified free near a ball center.
#[derive(Debug, Clone)]
pub struct Halfspace {
    pub normal: Config,
    pub bound: f64,
}

impl Halfspace {
    pub fn contains(&self, q: &Config) -> bool {
        self.normal.dot(q) <= self.bound
    }
}

/// Summary of a roadmap construction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildReport {
    pub requested: usize,
    pub placed: usize,
    pub sample_attempts: usize,
    pub intersection_edges: usize,
    pub verified_line_edges: usize,
    pub build_seconds: f64,
    pub warnings: Vec<String>,
}

/// Outcome label for a solved (or unsolved) query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Solved,
    /// Both endpoints attached to the roadmap but no path connects them.
    NoPath,
    /// An endpoint could not be attached (blocked or isolated).
    UnreachableQuery,
}

/// A chain of pairwise-overlapping balls guiding a path from start to goal.
///
/// Invariants checked at construction: the first ball contains the start,
/// the last contains the goal, and consecutive balls strictly overlap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corridor {
    pub balls: Vec<Ball>,
    pub start: Config,
    pub goal: Config,
}

impl Corridor {
    /// Start, interior ball centers, goal. The first and last corridor balls
    /// are centered on the endpoints, so their centers are skipped.
    pub fn center_polyline(&self) -> Vec<Config> {
        let mut pts = vec![self.start];
        let k = self.balls.len();
        if k > 2 {
            for ball in &self.balls[1..k - 1] {
                pts.push(ball.center);
            }
        }
        pts.push(self.goal);
        pts
    }

    /// Verifies the overlap/containment invariants; used by tests and by the
    /// optimizer's preconditions.
    pub fn validate(&self) -> Result<()> {
        let k = self.balls.len();
        if k == 0 {
            return Err(Error::InvalidArgument("corridor has no balls".into()));
        }
        let first = &self.balls[0];
        if self.start.dist(&first.center) > first.radius {
            return Err(Error::InvalidArgument("start outside first ball".into()));
        }
        let last = &self.balls[k - 1];
        if self.goal.dist(&last.center) > last.radius {
            return Err(Error::InvalidArgument("goal outside last ball".into()));
        }
        for i in 0..k.saturating_sub(1) {
            let a = &self.balls[i];
            let b = &self.balls[i + 1];
            if a.center.dist(&b.center) >= a.radius + b.radius - 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "corridor balls {i} and {} do not strictly overlap",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Where the milliseconds of a query went.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct QueryTiming {
    pub connect_seconds: f64,
    pub search_seconds: f64,
    pub extract_seconds: f64,
}

impl QueryTiming {
    pub fn total(&self) -> f64 {
        self.connect_seconds + self.search_seconds + self.extract_seconds
    }
}

/// Everything a query returns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Start, ball centers along the path, goal. Empty unless solved.
    pub polyline: Vec<Config>,
    /// Total polyline length (zero unless solved).
    pub length: f64,
    /// Present when every hop of the path is covered by overlapping balls;
    /// absent for hybrid paths, whose first or last hop is only verified
    /// pointwise.
    pub corridor: Option<Corridor>,
    pub used_hybrid: bool,
    pub timing: QueryTiming,
}

impl PlanResult {
    fn failed(status: PlanStatus, timing: QueryTiming) -> Self {
        PlanResult {
            status,
            polyline: Vec::new(),
            length: 0.0,
            corridor: None,
            used_hybrid: false,
            timing,
        }
    }
}

/// How a query endpoint got attached to the roadmap.
#[derive(Debug, Clone)]
pub struct Attachment {
    /// Free ball around the endpoint; absent when the endpoint sits below
    /// `r_min` clearance and was attached by exact marching instead.
    pub ball: Option<Ball>,
    /// `(ball index, certification, center distance)` per usable link.
    pub links: Vec<(usize, EdgeKind, f64)>,
}

/// Shortest distance from `q` to the boundary of the joint-limit box.
fn limit_distance(limits: &[[f64; 2]], q: &Config) -> f64 {
    let mut best = f64::INFINITY;
    for (i, lim) in limits.iter().enumerate() {
        best = best.min(q[i] - lim[0]).min(lim[1] - q[i]);
    }
    best
}

fn clamp_to_limits(limits: &[[f64; 2]], q: &Config) -> Config {
    let mut out = *q;
    for (i, lim) in limits.iter().enumerate() {
        out[i] = out[i].clamp(lim[0], lim[1]);
    }
    out
}

/// Largest ball radius usable at `q`: field clearance capped by the distance
/// to the joint-limit box, so no ball sticks out past the limits.
fn usable_radius(field: &dyn DistanceField, limits: &[[f64; 2]], q: &Config) -> f64 {
    field.clearance(q).min(limit_distance(limits, q))
}

/// Samples ball centers uniformly over the joint box, rejecting samples that
/// are too close to an obstacle or already covered by an accepted ball.
///
/// Returns the accepted balls and the total number of draws. Fails with
/// `SamplingFailed` if not a single ball was placed within the attempt cap;
/// a partial yield is returned with a warning recorded by the caller.
pub fn distribute_vertices(
    field: &dyn DistanceField,
    limits: &[[f64; 2]],
    requested: usize,
    params: &PlannerParams,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Ball>, usize)> {
    if requested == 0 {
        return Err(Error::InvalidArgument("requested zero roadmap vertices".into()));
    }
    let cap = params.sample_cap_factor.saturating_mul(requested);
    let mut balls: Vec<Ball> = Vec::with_capacity(requested);
    let mut attempts = 0;
    while balls.len() < requested && attempts < cap {
        attempts += 1;
        let mut q = Config::zeros(limits.len());
        for (i, lim) in limits.iter().enumerate() {
            q[i] = rng.gen_range(lim[0]..=lim[1]);
        }
        if balls.iter().any(|b| q.dist(&b.center) <= b.radius) {
            continue;
        }
        let r = usable_radius(field, limits, &q);
        if r <= params.r_min {
            continue;
        }
        balls.push(Ball { center: q, radius: r });
    }
    if balls.is_empty() {
        return Err(Error::SamplingFailed(format!(
            "no free ball found in {attempts} draws; scene may be fully blocked"
        )));
    }
    Ok((balls, attempts))
}

/// Pushes a ball's center along the distance gradient while the field value
/// strictly improves, re-reading the radius at each accepted center.
///
/// The result never has a smaller radius than the input: if growth only made
/// things worse (or the gradient vanished), the input ball is returned.
pub fn grow_ball(
    field: &dyn DistanceField,
    limits: &[[f64; 2]],
    ball: &Ball,
    params: &PlannerParams,
) -> Ball {
    let mut center = ball.center;
    let mut value = field.value(&center);
    let mut best_radius = usable_radius(field, limits, &center);
    for _ in 0..params.growth_max_steps {
        let (v, grad) = field.value_and_gradient(&center);
        let norm = grad.norm();
        if norm < 1e-9 || v <= 0.0 {
            break;
        }
        let step = params.growth_step_frac * v / norm;
        let candidate = clamp_to_limits(limits, &(center + grad * step));
        let cand_value = field.value(&candidate);
        let cand_radius = usable_radius(field, limits, &candidate);
        // Both the field value and the usable radius must improve: a step
        // that trades obstacle clearance for joint-limit proximity is not
        // progress.
        if cand_value > value + 1e-12 && cand_radius > best_radius + 1e-12 {
            center = candidate;
            value = cand_value;
            best_radius = cand_radius;
        } else {
            break;
        }
    }
    if best_radius <= ball.radius {
        return ball.clone();
    }
    Ball { center, radius: best_radius }
}

/// Builds the separating halfspaces around `c`, one per nearby obstacle.
///
/// Each halfspace pushes away from obstacle `i` along its negated distance
/// gradient, offset by the raw component value at `c`. Obstacles farther
/// than `far_threshold` are skipped, as are components whose gradient is too
/// small to orient a plane; the second return value counts those skips.
pub fn local_polytope(
    field: &dyn DistanceField,
    c: &Config,
    far_threshold: f64,
) -> (Vec<Halfspace>, usize) {
    let mut planes = Vec::new();
    let mut skipped = 0;
    for i in 0..field.num_components() {
        let value = field.component_value(i, c);
        if value >= far_threshold || value >= D_MAX / 2.0 {
            continue;
        }
        let grad = field.component_gradient(i, c);
        let norm = grad.norm();
        if norm < 1e-9 {
            skipped += 1;
            continue;
        }
        let normal = grad * (-1.0 / norm);
        planes.push(Halfspace { normal, bound: normal.dot(c) + value });
    }
    (planes, skipped)
}

/// Bubble-marches the segment from `a` to `b`: hops forward by a safety
/// fraction of the local clearance until one ball covers the rest.
///
/// Returns false as soon as a waypoint's clearance drops below `r_min`.
/// When `chain` is provided, the accepted waypoint balls are appended to it;
/// consecutive chain balls strictly overlap because each hop is strictly
/// shorter than the ball it starts from.
fn bubble_march(
    field: &dyn DistanceField,
    limits: &[[f64; 2]],
    a: &Config,
    b: &Config,
    params: &PlannerParams,
    mut chain: Option<&mut Vec<Ball>>,
) -> bool {
    let total = a.dist(b);
    if total < 1e-15 {
        let v = usable_radius(field, limits, a);
        if v <= 0.0 {
            return false;
        }
        if let Some(out) = chain.as_deref_mut() {
            out.push(Ball { center: *a, radius: v });
        }
        return true;
    }
    let dir = (*b - *a) * (1.0 / total);
    let mut t = 0.0;
    loop {
        let p = *a + dir * t;
        let v = usable_radius(field, limits, &p);
        let remaining = total - t;
        if v >= remaining {
            if let Some(out) = chain.as_deref_mut() {
                out.push(Ball { center: p, radius: v });
            }
            return true;
        }
        if v < params.r_min {
            return false;
        }
        if let Some(out) = chain.as_deref_mut() {
            out.push(Ball { center: p, radius: v });
        }
        t += (params.march_safety * v).max(params.march_min_step);
    }
}

/// True when the straight segment between `a` and `b` is certified free by
/// bubble marching.
pub fn check_edge(
    field: &dyn DistanceField,
    limits: &[[f64; 2]],
    a: &Config,
    b: &Config,
    params: &PlannerParams,
) -> bool {
    bubble_march(field, limits, a, b, params, None)
}

/// Connects a set of balls: overlap edges first, then verified straight
/// lines to polytope-compatible candidates that overlap missed.
pub fn build_edges(
    field: &dyn DistanceField,
    limits: &[[f64; 2]],
    balls: &[Ball],
    params: &PlannerParams,
) -> Vec<Edge> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut connected = vec![Vec::new(); balls.len()];
    let push = |edges: &mut Vec<Edge>, connected: &mut Vec<Vec<usize>>, a: usize, b: usize, kind: EdgeKind, length: f64| {
        edges.push(Edge { a, b, kind, length });
        connected[a].push(b);
        connected[b].push(a);
    };

    // Phase 1: overlapping balls.
    for i in 0..balls.len() {
        for j in (i + 1)..balls.len() {
            let d = balls[i].center.dist(&balls[j].center);
            if d <= balls[i].radius + balls[j].radius {
                push(&mut edges, &mut connected, i, j, EdgeKind::Intersection, d);
            }
        }
    }

    // Phase 2: straight lines into each ball's locally certified region.
    let median = {
        let mut radii: Vec<f64> = balls.iter().map(|b| b.radius).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).expect("radii are finite"));
        if radii.is_empty() {
            0.0
        } else {
            radii[radii.len() / 2]
        }
    };
    let far = params.far_threshold_factor * median;
    for i in 0..balls.len() {
        let (planes, _skipped) = local_polytope(field, &balls[i].center, far);
        for j in 0..balls.len() {
            if j == i || connected[i].contains(&j) {
                continue;
            }
            if !planes.iter().all(|h| h.contains(&balls[j].center)) {
                continue;
            }
            if check_edge(field, limits, &balls[i].center, &balls[j].center, params) {
                let d = balls[i].center.dist(&balls[j].center);
                push(&mut edges, &mut connected, i, j, EdgeKind::VerifiedLine, d);
            }
        }
    }
    edges
}

/// Attaches `q` to the roadmap: by ball overlap when possible, otherwise by
/// bubble-marched lines to the nearest centers. `None` means the endpoint is
/// effectively blocked (clearance at or below `r_min`) or isolated.
pub fn connect_query(
    field: &dyn DistanceField,
    roadmap: &Roadmap,
    limits: &[[f64; 2]],
    q: &Config,
    params: &PlannerParams,
) -> Option<Attachment> {
    let clearance = field.clearance(q);
    if clearance <= params.r_min {
        return None;
    }
    let radius = clearance.min(limit_distance(limits, q)).max(params.r_min * 0.5);
    let ball = Ball { center: *q, radius };

    let mut links = Vec::new();
    for (i, other) in roadmap.balls.iter().enumerate() {
        let d = q.dist(&other.center);
        if d <= ball.radius + other.radius {
            links.push((i, EdgeKind::Intersection, d));
        }
    }
    if links.is_empty() {
        // Fall back to bubble-marched lines toward the nearest centers.
        let mut order: Vec<(f64, usize)> = roadmap
            .balls
            .iter()
            .enumerate()
            .map(|(i, b)| (q.dist(&b.center), i))
            .collect();
        order.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
        for &(d, i) in order.iter().take(params.num_neighbors) {
            if check_edge(field, limits, q, &roadmap.balls[i].center, params) {
                links.push((i, EdgeKind::VerifiedLine, d));
            }
        }
    }
    if links.is_empty() {
        return None;
    }
    Some(Attachment { ball: Some(ball), links })
}

/// Attaches `q` even when the field undervalues it (negative or below
/// `r_min`), by stepping with the exact collision checker until the field
/// turns usable, then bubble marching the rest of the way.
///
/// Candidate roadmap balls are tried nearest first; the first success wins.
pub fn hybrid_connect(
    field: &dyn DistanceField,
    exact: &ExactChecker,
    roadmap: &Roadmap,
    limits: &[[f64; 2]],
    q: &Config,
    params: &PlannerParams,
) -> Option<Attachment> {
    if field.clearance(q) > params.r_min {
        return connect_query(field, roadmap, limits, q, params);
    }
    if exact.in_collision(q) {
        return None;
    }
    let mut order: Vec<(f64, usize)> = roadmap
        .balls
        .iter()
        .enumerate()
        .map(|(i, b)| (q.dist(&b.center), i))
        .collect();
    order.sort_by(|x, y| x.partial_cmp(y).expect("distances are finite"));
    for &(d, i) in order.iter().take(params.hybrid_candidates) {
        if hybrid_march(field, limits, exact, q, &roadmap.balls[i].center, params) {
            return Some(Attachment { ball: None, links: vec![(i, EdgeKind::HybridVerified, d)] });
        }
    }
    None
}

/// Marches from `q` toward `c` in fixed exact-checked steps while the field
/// stays at or below `r_min`; hands over to bubble marching as soon as the
/// field becomes trustworthy.
fn hybrid_march(
    field: &dyn DistanceField,
    limits: &[[f64; 2]],
    exact: &ExactChecker,
    q: &Config,
    c: &Config,
    params: &PlannerParams,
) -> bool {
    let total = q.dist(c);
    if total < 1e-15 {
        return !exact.in_collision(q);
    }
    let dir = (*c - *q) * (1.0 / total);
    let mut t = 0.0;
    while t < total {
        let p = *q + dir * t;
        if usable_radius(field, limits, &p) > params.r_min {
            return bubble_march(field, limits, &p, c, params, None);
        }
        if exact.in_collision(&p) {
            return false;
        }
        t += params.hybrid_step;
    }
    !exact.in_collision(c)
}

/// A planner bound to a distance field and a joint-limit box.
pub struct BubblePlanner<'f> {
    pub field: &'f dyn DistanceField,
    pub limits: Vec<[f64; 2]>,
    pub params: PlannerParams,
    pub roadmap: Roadmap,
    pub report: BuildReport,
}

impl<'f> BubblePlanner<'f> {
    /// Builds a roadmap from scratch: sample centers, grow each ball along
    /// the gradient, then certify edges.
    pub fn build(
        field: &'f dyn DistanceField,
        limits: &[[f64; 2]],
        num_vertices: usize,
        seed: u64,
        params: PlannerParams,
        backend: &str,
    ) -> Result<Self> {
        let start = Instant::now();
        if limits.len() != field.dim() {
            return Err(Error::InvalidArgument(format!(
                "field dimension {} does not match {} joint limits",
                field.dim(),
                limits.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut balls, attempts) = distribute_vertices(field, limits, num_vertices, &params, &mut rng)?;
        let mut warnings = Vec::new();
        if balls.len() < num_vertices {
            warnings.push(format!(
                "placed {} of {} requested balls in {} draws",
                balls.len(),
                num_vertices,
                attempts
            ));
        }
        for ball in balls.iter_mut() {
            *ball = grow_ball(field, limits, ball, &params);
        }
        let edges = build_edges(field, limits, &balls, &params);
        let intersection_edges = edges.iter().filter(|e| e.kind == EdgeKind::Intersection).count();
        let verified_line_edges = edges.len() - intersection_edges;
        let placed = balls.len();
        let roadmap = Roadmap::new(balls, edges, backend.to_string(), seed);
        let report = BuildReport {
            requested: num_vertices,
            placed,
            sample_attempts: attempts,
            intersection_edges,
            verified_line_edges,
            build_seconds: start.elapsed().as_secs_f64(),
            warnings,
        };
        Ok(BubblePlanner { field, limits: limits.to_vec(), params, roadmap, report })
    }

    /// Wraps an existing roadmap (e.g. loaded from disk).
    pub fn from_roadmap(
        field: &'f dyn DistanceField,
        limits: &[[f64; 2]],
        roadmap: Roadmap,
        params: PlannerParams,
    ) -> Result<Self> {
        if limits.len() != field.dim() {
            return Err(Error::InvalidArgument(format!(
                "field dimension {} does not match {} joint limits",
                field.dim(),
                limits.len()
            )));
        }
        let report = BuildReport {
            requested: roadmap.balls.len(),
            placed: roadmap.balls.len(),
            sample_attempts: 0,
            intersection_edges: roadmap
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Intersection)
                .count(),
            verified_line_edges: roadmap
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::VerifiedLine)
                .count(),
            build_seconds: 0.0,
            warnings: Vec::new(),
        };
        Ok(BubblePlanner { field, limits: limits.to_vec(), params, roadmap, report })
    }

    /// Answers a query with field-only attachments.
    pub fn solve(&self, start: &Config, goal: &Config) -> PlanResult {
        self.solve_inner(start, goal, None)
    }

    /// Answers a query, falling back to exact-checked marching for endpoints
    /// the field undervalues.
    pub fn solve_hybrid(&self, start: &Config, goal: &Config, exact: &ExactChecker) -> PlanResult {
        self.solve_inner(start, goal, Some(exact))
    }

    fn attach(&self, q: &Config, exact: Option<&ExactChecker>) -> Option<Attachment> {
        match exact {
            Some(checker) => {
                hybrid_connect(self.field, checker, &self.roadmap, &self.limits, q, &self.params)
            }
            None => connect_query(self.field, &self.roadmap, &self.limits, q, &self.params),
        }
    }

    fn solve_inner(&self, start: &Config, goal: &Config, exact: Option<&ExactChecker>) -> PlanResult {
        let mut timing = QueryTiming::default();
        let t0 = Instant::now();

        // Trivial case: both endpoints inside one roadmap ball.
        for ball in &self.roadmap.balls {
            if start.dist(&ball.center) <= ball.radius && goal.dist(&ball.center) <= ball.radius {
                timing.extract_seconds = t0.elapsed().as_secs_f64();
                return PlanResult {
                    status: PlanStatus::Solved,
                    polyline: vec![*start, *goal],
                    length: start.dist(goal),
                    corridor: Some(Corridor {
                        balls: vec![ball.clone()],
                        start: *start,
                        goal: *goal,
                    }),
                    used_hybrid: false,
                    timing,
                };
            }
        }

        let start_att = self.attach(start, exact);
        let goal_att = self.attach(goal, exact);
        timing.connect_seconds = t0.elapsed().as_secs_f64();
        let (start_att, goal_att) = match (start_att, goal_att) {
            (Some(s), Some(g)) => (s, g),
            _ => return PlanResult::failed(PlanStatus::UnreachableQuery, timing),
        };

        // Directly overlapping query balls admit the straight segment.
        if let (Some(sb), Some(gb)) = (&start_att.ball, &goal_att.ball) {
            let d = start.dist(goal);
            if d < sb.radius + gb.radius - 1e-12 {
                let te = Instant::now();
                let corridor = Corridor {
                    balls: vec![sb.clone(), gb.clone()],
                    start: *start,
                    goal: *goal,
                };
                timing.extract_seconds = te.elapsed().as_secs_f64();
                return PlanResult {
                    status: PlanStatus::Solved,
                    polyline: vec![*start, *goal],
                    length: d,
                    corridor: Some(corridor),
                    used_hybrid: false,
                    timing,
                };
            }
        }

        // Overlay graph: roadmap balls, then start (n) and goal (n + 1).
        let n = self.roadmap.balls.len();
        let t1 = Instant::now();
        let position = |u: usize| -> Config {
            if u < n {
                self.roadmap.balls[u].center
            } else if u == n {
                *start
            } else {
                *goal
            }
        };
        let neighbors = |u: usize, out: &mut Vec<(usize, f64)>| {
            if u == n {
                for &(i, _, d) in &start_att.links {
                    out.push((i, d));
                }
                return;
            }
            if u == n + 1 {
                for &(i, _, d) in &goal_att.links {
                    out.push((i, d));
                }
                return;
            }
            for &(v, e) in self.roadmap.neighbors(u) {
                out.push((v, self.roadmap.edges[e].length));
            }
            for &(i, _, d) in &start_att.links {
                if i == u {
                    out.push((n, d));
                }
            }
            for &(i, _, d) in &goal_att.links {
                if i == u {
                    out.push((n + 1, d));
                }
            }
        };
        let heuristic = |u: usize| position(u).dist(goal);
        let found = graph::astar(n + 2, n, n + 1, neighbors, heuristic);
        timing.search_seconds = t1.elapsed().as_secs_f64();
        let (_, path) = match found {
            Some(p) => p,
            None => return PlanResult::failed(PlanStatus::NoPath, timing),
        };

        let t2 = Instant::now();
        let mut polyline: Vec<Config> = Vec::with_capacity(path.len());
        for &u in &path {
            let p = position(u);
            if polyline.last().map_or(true, |prev: &Config| prev.dist(&p) > 1e-12) {
                polyline.push(p);
            }
        }
        let length: f64 = polyline.windows(2).map(|w| w[0].dist(&w[1])).sum();

        let hop_kind = |att: &Attachment, idx: usize| -> EdgeKind {
            att.links
                .iter()
                .find(|&&(i, _, _)| i == idx)
                .map(|&(_, k, _)| k)
                .unwrap_or(EdgeKind::VerifiedLine)
        };
        let mut used_hybrid = false;
        if path.len() >= 2 {
            if path[1] < n && hop_kind(&start_att, path[1]) == EdgeKind::HybridVerified {
                used_hybrid = true;
            }
            if path[path.len() - 2] < n
                && hop_kind(&goal_att, path[path.len() - 2]) == EdgeKind::HybridVerified
            {
                used_hybrid = true;
            }
        }

        let corridor = if used_hybrid {
            None
        } else {
            self.build_corridor(&path, start, goal, &start_att, &goal_att)
        };
        timing.extract_seconds = t2.elapsed().as_secs_f64();
        PlanResult {
            status: PlanStatus::Solved,
            polyline,
            length,
            corridor,
            used_hybrid,
            timing,
        }
    }

    /// Assembles the ball chain along `path`, bridging any consecutive pair
    /// that does not already strictly overlap with a bubble-marched chain.
    /// Returns `None` if a bridge cannot be certified.
    /// Greedily drops march-chain balls a later ball can stand in for: from
    /// each kept ball, jump to the farthest ball still overlapping it with a
    /// healthy margin. Marching records a ball roughly every 0.9 radii, so
    /// raw chains are far denser than the corridor needs; fewer, fatter
    /// lenses give the optimizer less work and more room.
    fn thin_chain(chain: &[Ball]) -> Vec<Ball> {
        let mut kept: Vec<Ball> = vec![chain[0].clone()];
        let mut i = 0;
        while i + 1 < chain.len() {
            let cur = &chain[i];
            let mut next = i + 1;
            for j in (i + 1..chain.len()).rev() {
                let margin = cur.radius + chain[j].radius - cur.center.dist(&chain[j].center);
                if margin >= 0.25 * cur.radius.min(chain[j].radius) {
                    next = j;
                    break;
                }
            }
            kept.push(chain[next].clone());
            i = next;
        }
        kept
    }

    fn build_corridor(
        &self,
        path: &[usize],
        start: &Config,
        goal: &Config,
        start_att: &Attachment,
        goal_att: &Attachment,
    ) -> Option<Corridor> {
        let n = self.roadmap.balls.len();
        let mut raw: Vec<Ball> = Vec::with_capacity(path.len());
        for &u in path {
            if u < n {
                raw.push(self.roadmap.balls[u].clone());
            } else if u == n {
                raw.push(start_att.ball.clone()?);
            } else {
                raw.push(goal_att.ball.clone()?);
            }
        }

        let mut balls: Vec<Ball> = Vec::with_capacity(raw.len());
        balls.push(raw[0].clone());
        for next in raw.iter().skip(1) {
            let prev = balls.last().expect("chain starts non-empty").clone();
            let overlap = prev.center.dist(&next.center) < prev.radius + next.radius - 1e-12;
            if !overlap {
                let mut bridge = Vec::new();
                if !bubble_march(self.field, &self.limits, &prev.center, &next.center, &self.params, Some(&mut bridge)) {
                    return None;
                }
                // The first bridge ball shares the previous center; drop it.
                for ball in Self::thin_chain(&bridge).into_iter().skip(1) {
                    balls.push(ball);
                }
            }
            balls.push(next.clone());
        }
        let corridor = Corridor { balls, start: *start, goal: *goal };
        corridor.validate().ok()?;
        Some(corridor)
    }
}
