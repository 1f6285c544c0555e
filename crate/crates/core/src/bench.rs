//! Randomized planner comparison: PBRM and PBRM* against PRM and PRM*.
//!
//! A benchmark run samples worlds (random obstacle sets with enough free
//! space), samples queries whose straight segment collides (so no planner
//! wins for free), and answers each query with all four planners. Results
//! split into a deterministic report — statuses, lengths, residuals,
//! validation — and a separate timing report, because wall-clock numbers
//! can never be bit-reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::baseline::{
    estimate_free_measure, prm_build, prm_query, prm_star_build, prm_star_gamma,
    prm_star_query_anytime, BaselineParams,
};
use crate::corridor::{centerline_path, optimize, CorridorTolerances};
use crate::error::{Error, Result};
use crate::field::{DistanceField, ExactChecker, NeuralField, OracleField};
use crate::geom::{Config, ObstacleKind, ObstacleSampler, RobotModel};
use crate::net::MlpModel;
use crate::planner::{BubblePlanner, PlanStatus, PlannerParams};
use crate::scenario::Scenario;

/// The four registered desk-scale systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    /// 2-DOF arm with circle obstacles.
    Sc3Analog,
    /// 3-DOF arm with circle obstacles.
    Sc4Analog,
    /// 3-DOF arm with box obstacles.
    MrAnalog,
    /// 4-DOF arm with circle obstacles.
    WdAnalog,
}

impl SystemId {
    pub const ALL: [SystemId; 4] =
        [SystemId::Sc3Analog, SystemId::Sc4Analog, SystemId::MrAnalog, SystemId::WdAnalog];

    pub fn as_str(&self) -> &'static str {
        match self {
            SystemId::Sc3Analog => "sc3-analog",
            SystemId::Sc4Analog => "sc4-analog",
            SystemId::MrAnalog => "mr-analog",
            SystemId::WdAnalog => "wd-analog",
        }
    }
}

impl std::str::FromStr for SystemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SystemId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown system '{s}'")))
    }
}

/// A registered robot-plus-obstacle-family combination.
#[derive(Debug, Clone)]
pub struct SystemDef {
    pub id: SystemId,
    pub model: RobotModel,
    pub sampler: ObstacleSampler,
    /// Obstacles per sampled world.
    pub num_obstacles: usize,
    /// Obstacle centers closer to the base than this are redrawn: an
    /// obstacle inside the first link's sweep blocks a full shoulder band
    /// and disconnects the configuration space almost every time.
    pub keepout_radius: f64,
    /// Oracle lattice resolution per configuration dimension.
    pub grid_n: usize,
    /// Whether the distance field carries a self-collision component
    /// (adjacent links can never touch, so 2-DOF arms skip it).
    pub include_self: bool,
}

/// Fixed registry of desk-scale systems.
pub fn system(id: SystemId) -> SystemDef {
    let circle = |lo: f64, hi: f64, span: f64| ObstacleSampler {
        kind: ObstacleKind::Circle,
        center_lo: [-span, -span],
        center_hi: [span, span],
        size_lo: lo,
        size_hi: hi,
    };
    match id {
        SystemId::Sc3Analog => SystemDef {
            id,
            model: RobotModel::new(vec![1.0, 0.8], 0.06, vec![[-3.1, 3.1]; 2])
                .expect("registry model is valid"),
            sampler: circle(0.15, 0.45, 2.0),
            num_obstacles: 10,
            keepout_radius: 1.55,
            grid_n: 192,
            include_self: false,
        },
        SystemId::Sc4Analog => SystemDef {
            id,
            model: RobotModel::new(vec![0.8, 0.7, 0.5], 0.06, vec![[-3.1, 3.1]; 3])
                .expect("registry model is valid"),
            sampler: circle(0.15, 0.35, 2.2),
            num_obstacles: 10,
            keepout_radius: 1.3,
            grid_n: 24,
            include_self: true,
        },
        SystemId::MrAnalog => SystemDef {
            id,
            model: RobotModel::new(vec![0.8, 0.7, 0.5], 0.06, vec![[-3.1, 3.1]; 3])
                .expect("registry model is valid"),
            sampler: ObstacleSampler {
                kind: ObstacleKind::Aabb,
                center_lo: [-2.2, -2.2],
                center_hi: [2.2, 2.2],
                size_lo: 0.1,
                size_hi: 0.3,
            },
            num_obstacles: 10,
            keepout_radius: 1.35,
            grid_n: 24,
            include_self: true,
        },
        SystemId::WdAnalog => SystemDef {
            id,
            model: RobotModel::new(vec![0.7, 0.6, 0.5, 0.4], 0.05, vec![[-3.1, 3.1]; 4])
                .expect("registry model is valid"),
            sampler: circle(0.15, 0.35, 2.4),
            num_obstacles: 10,
            keepout_radius: 1.15,
            grid_n: 12,
            include_self: true,
        },
    }
}

/// Which distance backend drives PBRM during the sweep.
#[derive(Debug, Clone)]
pub enum FieldBackend {
    /// Grid oracle built per world — sound up to its safety margin.
    Oracle,
    /// A trained network conditioned on each world's obstacle parameters,
    /// with an optional self-collision network.
    Neural { obstacle: MlpModel, self_net: Option<MlpModel> },
}

impl FieldBackend {
    fn name(&self) -> &'static str {
        match self {
            FieldBackend::Oracle => "oracle",
            FieldBackend::Neural { .. } => "nscdf",
        }
    }
}

/// Full sweep configuration. Defaults follow the randomized protocol:
/// 10 worlds of 10 obstacles, 10 queries each, 250 PBRM balls against 500
/// baseline samples, and a fixed PRM* densification budget standing in for
/// its one-second anytime loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub system: SystemId,
    pub num_worlds: usize,
    pub queries_per_world: usize,
    pub pbrm_vertices: usize,
    pub baseline_samples: usize,
    pub num_neighbors: usize,
    /// Samples PRM* may add per query while densifying.
    pub prm_star_budget: usize,
    pub prm_star_batch: usize,
    pub seed: u64,
    /// Worlds with a smaller Monte-Carlo free-space fraction are resampled.
    pub min_free_fraction: f64,
    pub measure_samples: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            system: SystemId::Sc3Analog,
            num_worlds: 10,
            queries_per_world: 10,
            pbrm_vertices: 250,
            baseline_samples: 500,
            num_neighbors: 10,
            prm_star_budget: 2000,
            prm_star_batch: 500,
            seed: 0,
            min_free_fraction: 0.05,
            measure_samples: 10_000,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_worlds", self.num_worlds),
            ("queries_per_world", self.queries_per_world),
            ("pbrm_vertices", self.pbrm_vertices),
            ("baseline_samples", self.baseline_samples),
            ("num_neighbors", self.num_neighbors),
            ("prm_star_batch", self.prm_star_batch),
            ("measure_samples", self.measure_samples),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.min_free_fraction > 0.0 && self.min_free_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "min_free_fraction {} outside (0, 1)",
                self.min_free_fraction
            )));
        }
        Ok(())
    }
}

/// The planners under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Pbrm,
    PbrmStar,
    Prm,
    PrmStar,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] =
        [PlannerKind::Pbrm, PlannerKind::PbrmStar, PlannerKind::Prm, PlannerKind::PrmStar];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::Pbrm => "pbrm",
            PlannerKind::PbrmStar => "pbrm_star",
            PlannerKind::Prm => "prm",
            PlannerKind::PrmStar => "prm_star",
        }
    }
}

/// One planner's answer to one query (deterministic fields only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub world: usize,
    pub query: usize,
    pub planner: PlannerKind,
    pub status: PlanStatus,
    pub length: Option<f64>,
    /// Corridor feasibility residual (PBRM* only).
    pub residual: Option<f64>,
    /// Whether the corridor optimizer stalled and the center polyline was
    /// used instead (PBRM* only).
    pub optimizer_stalled: bool,
    /// Exact-detector sweep of the returned polyline at 1e-3 (solved only).
    pub validated: Option<bool>,
}

/// One sampled world (deterministic fields only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldRecord {
    pub index: usize,
    /// Seed that regenerates the accepted scenario.
    pub world_seed: u64,
    /// Rejected draws before this world was accepted.
    pub resamples: usize,
    pub free_fraction: f64,
    pub pbrm_balls: usize,
    pub pbrm_edges: usize,
    pub prm_edges: usize,
    pub prm_star_edges: usize,
    /// Start/goal pairs, in query order.
    pub queries: Vec<(Config, Config)>,
}

/// Per-planner aggregates, recomputable from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: PlannerKind,
    pub attempted: usize,
    pub solved: usize,
    pub success_rate: f64,
    /// Mean over solved queries only.
    pub mean_length: Option<f64>,
    /// Fraction of solved paths failing exact validation.
    pub collision_rate: f64,
}

/// Everything deterministic about a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub system: SystemId,
    pub backend: String,
    pub config: BenchmarkConfig,
    pub worlds: Vec<WorldRecord>,
    pub records: Vec<QueryRecord>,
    pub summaries: Vec<PlannerSummary>,
    pub warnings: Vec<String>,
}

/// Wall-clock side of the sweep, reported separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRecord {
    pub world: usize,
    pub query: usize,
    pub planner: PlannerKind,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildTimingRecord {
    pub world: usize,
    pub planner: PlannerKind,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub builds: Vec<BuildTimingRecord>,
    pub queries: Vec<TimingRecord>,
}

impl TimingReport {
    /// Mean query seconds for one planner (over all attempts).
    pub fn mean_query_seconds(&self, planner: PlannerKind) -> Option<f64> {
        let times: Vec<f64> = self
            .queries
            .iter()
            .filter(|t| t.planner == planner)
            .map(|t| t.seconds)
            .collect();
        if times.is_empty() {
            None
        } else {
            Some(times.iter().sum::<f64>() / times.len() as f64)
        }
    }
}

/// splitmix64: cheap, well-mixed derivation of purpose-specific seeds from
/// one master seed.
fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const TAG_WORLD: u64 = 1;
const TAG_QUERY: u64 = 2;
const TAG_PBRM: u64 = 3;
const TAG_PRM: u64 = 4;
const TAG_PRM_STAR: u64 = 5;
const TAG_MEASURE: u64 = 6;
const TAG_DENSIFY: u64 = 7;

/// Draws one world from the system's obstacle family, redrawing obstacles
/// whose center falls inside the keepout disc around the base.
pub fn sample_world(def: &SystemDef, world_seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(world_seed);
    let mut obstacles = Vec::with_capacity(def.num_obstacles);
    while obstacles.len() < def.num_obstacles {
        let g = def.sampler.sample(&mut rng);
        let center = match g {
            crate::geom::GeometryVector::Circle { center, .. } => center,
            crate::geom::GeometryVector::Aabb { center, .. } => center,
        };
        if (center[0].powi(2) + center[1].powi(2)).sqrt() < def.keepout_radius {
            continue;
        }
        obstacles.push(g);
    }
    Scenario { robot: def.model.clone(), obstacles }
}

/// Draws a query pair: both endpoints collision-free, straight segment
/// between them colliding when swept at 1e-3. Fails once the retry budget
/// runs out (an empty world has no such pair at all).
pub fn sample_query(
    exact: &ExactChecker,
    limits: &[[f64; 2]],
    rng: &mut ChaCha8Rng,
    max_attempts: usize,
) -> Result<(Config, Config)> {
    let draw_free = |rng: &mut ChaCha8Rng| -> Option<Config> {
        for _ in 0..200 {
            let mut q = Config::zeros(limits.len());
            for (i, lim) in limits.iter().enumerate() {
                q[i] = rng.gen_range(lim[0]..=lim[1]);
            }
            if !exact.in_collision(&q) {
                return Some(q);
            }
        }
        None
    };
    for _ in 0..max_attempts {
        let Some(qs) = draw_free(rng) else {
            return Err(Error::SamplingFailed("free start sampling exhausted".into()));
        };
        let Some(qg) = draw_free(rng) else {
            return Err(Error::SamplingFailed("free goal sampling exhausted".into()));
        };
        if !exact.segment_free(&qs, &qg, 1e-3) {
            return Ok((qs, qg));
        }
    }
    Err(Error::SamplingFailed(format!(
        "no line-blocked query pair in {max_attempts} attempts"
    )))
}

struct PreparedWorld {
    record: WorldRecord,
    scenario: Scenario,
}

/// Samples worlds until one passes the free-measure check and yields a full
/// set of queries; records how many draws were burned.
fn prepare_world(
    def: &SystemDef,
    cfg: &BenchmarkConfig,
    world_index: usize,
) -> Result<PreparedWorld> {
    const MAX_WORLD_ATTEMPTS: u64 = 50;
    let box_volume: f64 =
        def.model.joint_limits.iter().map(|l| l[1] - l[0]).product();
    for attempt in 0..MAX_WORLD_ATTEMPTS {
        let world_seed =
            derive_seed(cfg.seed, TAG_WORLD, (world_index as u64) * MAX_WORLD_ATTEMPTS + attempt);
        let scenario = sample_world(def, world_seed);
        let exact = ExactChecker::new(&scenario.robot, &scenario.obstacles);
        let measure = estimate_free_measure(
            &exact,
            &scenario.robot.joint_limits,
            cfg.measure_samples,
            derive_seed(cfg.seed, TAG_MEASURE, world_seed),
        );
        let fraction = measure / box_volume;
        if fraction < cfg.min_free_fraction {
            continue;
        }
        let mut query_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TAG_QUERY, world_seed));
        let mut queries = Vec::with_capacity(cfg.queries_per_world);
        for _ in 0..cfg.queries_per_world {
            match sample_query(&exact, &scenario.robot.joint_limits, &mut query_rng, 2000) {
                Ok(pair) => queries.push(pair),
                Err(_) => break,
            }
        }
        if queries.len() < cfg.queries_per_world {
            continue;
        }
        return Ok(PreparedWorld {
            record: WorldRecord {
                index: world_index,
                world_seed,
                resamples: attempt as usize,
                free_fraction: fraction,
                pbrm_balls: 0,
                pbrm_edges: 0,
                prm_edges: 0,
                prm_star_edges: 0,
                queries,
            },
            scenario,
        });
    }
    Err(Error::SamplingFailed(format!(
        "world {world_index}: no viable world in {MAX_WORLD_ATTEMPTS} draws"
    )))
}

fn summarize(records: &[QueryRecord]) -> Vec<PlannerSummary> {
    PlannerKind::ALL
        .into_iter()
        .map(|planner| {
            let mine: Vec<&QueryRecord> =
                records.iter().filter(|r| r.planner == planner).collect();
            let solved: Vec<&&QueryRecord> =
                mine.iter().filter(|r| r.status == PlanStatus::Solved).collect();
            let mean_length = if solved.is_empty() {
                None
            } else {
                Some(
                    solved.iter().map(|r| r.length.expect("solved has length")).sum::<f64>()
                        / solved.len() as f64,
                )
            };
            let invalid = solved.iter().filter(|r| r.validated == Some(false)).count();
            PlannerSummary {
                planner,
                attempted: mine.len(),
                solved: solved.len(),
                success_rate: if mine.is_empty() {
                    0.0
                } else {
                    solved.len() as f64 / mine.len() as f64
                },
                mean_length,
                collision_rate: if solved.is_empty() {
                    0.0
                } else {
                    invalid as f64 / solved.len() as f64
                },
            }
        })
        .collect()
}

/// Runs the full sweep and returns the deterministic report alongside the
/// wall-clock timings.
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    backend: &FieldBackend,
) -> Result<(BenchmarkReport, TimingReport)> {
    cfg.validate()?;
    let def = system(cfg.system);
    let planner_params =
        PlannerParams { num_neighbors: cfg.num_neighbors, ..PlannerParams::default() };
    let baseline_params =
        BaselineParams { k_neighbors: cfg.num_neighbors, ..BaselineParams::default() };
    let corridor_tol = CorridorTolerances::default();

    let mut worlds = Vec::with_capacity(cfg.num_worlds);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut timing = TimingReport::default();

    for world_index in 0..cfg.num_worlds {
        let PreparedWorld { mut record, scenario } = prepare_world(&def, cfg, world_index)?;
        let exact = ExactChecker::new(&scenario.robot, &scenario.obstacles);
        let limits = scenario.robot.joint_limits.clone();

        // Build the distance field for this world.
        let oracle_field;
        let neural_field;
        let field: &dyn DistanceField = match backend {
            FieldBackend::Oracle => {
                oracle_field = OracleField::build(
                    &scenario.robot,
                    &scenario.obstacles,
                    def.include_self,
                    def.grid_n,
                )?;
                &oracle_field
            }
            FieldBackend::Neural { obstacle, self_net } => {
                neural_field = NeuralField::new(
                    scenario.robot.joint_limits.len(),
                    Some(obstacle.clone()),
                    scenario.obstacles.clone(),
                    self_net.clone(),
                    crate::field::lattice_margin(&scenario.robot, def.grid_n),
                )?;
                &neural_field
            }
        };

        // Roadmap builds, timed per planner.
        let t = Instant::now();
        let pbrm = BubblePlanner::build(
            field,
            &limits,
            cfg.pbrm_vertices,
            derive_seed(cfg.seed, TAG_PBRM, record.world_seed),
            planner_params.clone(),
            backend.name(),
        )?;
        timing.builds.push(BuildTimingRecord {
            world: world_index,
            planner: PlannerKind::Pbrm,
            seconds: t.elapsed().as_secs_f64(),
        });
        warnings.extend(
            pbrm.report.warnings.iter().map(|w| format!("world {world_index}: {w}")),
        );

        let t = Instant::now();
        let prm = prm_build(
            &exact,
            &limits,
            cfg.baseline_samples,
            derive_seed(cfg.seed, TAG_PRM, record.world_seed),
            &baseline_params,
        )?;
        timing.builds.push(BuildTimingRecord {
            world: world_index,
            planner: PlannerKind::Prm,
            seconds: t.elapsed().as_secs_f64(),
        });

        let mu_free = record.free_fraction
            * limits.iter().map(|l| l[1] - l[0]).product::<f64>();
        let gamma = prm_star_gamma(limits.len(), mu_free)?;
        let t = Instant::now();
        let prm_star = prm_star_build(
            &exact,
            &limits,
            cfg.baseline_samples,
            gamma,
            derive_seed(cfg.seed, TAG_PRM_STAR, record.world_seed),
            &baseline_params,
        )?;
        timing.builds.push(BuildTimingRecord {
            world: world_index,
            planner: PlannerKind::PrmStar,
            seconds: t.elapsed().as_secs_f64(),
        });

        record.pbrm_balls = pbrm.roadmap.balls.len();
        record.pbrm_edges = pbrm.roadmap.edges.len();
        record.prm_edges = prm.edges.len();
        record.prm_star_edges = prm_star.edges.len();

        for (query_index, (qs, qg)) in record.queries.iter().enumerate() {
            // PBRM, and PBRM* as the same search plus corridor shortening.
            let t = Instant::now();
            let res = pbrm.solve(qs, qg);
            let solve_seconds = t.elapsed().as_secs_f64();
            timing.queries.push(TimingRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::Pbrm,
                seconds: solve_seconds,
            });
            let validated = (res.status == PlanStatus::Solved)
                .then(|| exact.path_free(&res.polyline, 1e-3));
            records.push(QueryRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::Pbrm,
                status: res.status,
                length: (res.status == PlanStatus::Solved).then_some(res.length),
                residual: None,
                optimizer_stalled: false,
                validated,
            });

            let t = Instant::now();
            let star = match (&res.status, &res.corridor) {
                (PlanStatus::Solved, Some(corridor)) => match optimize(corridor, &corridor_tol) {
                    Ok(path) => Some((path, false)),
                    Err(Error::CorridorStalled { .. }) => {
                        Some((centerline_path(corridor), true))
                    }
                    Err(e) => return Err(e),
                },
                _ => None,
            };
            let optimize_seconds = t.elapsed().as_secs_f64();
            timing.queries.push(TimingRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::PbrmStar,
                seconds: solve_seconds + optimize_seconds,
            });
            match star {
                Some((path, stalled)) => {
                    let ok = exact.path_free(&path.waypoints, 1e-3);
                    records.push(QueryRecord {
                        world: world_index,
                        query: query_index,
                        planner: PlannerKind::PbrmStar,
                        status: PlanStatus::Solved,
                        length: Some(path.length),
                        residual: Some(path.residual),
                        optimizer_stalled: stalled,
                        validated: Some(ok),
                    });
                }
                // A solved path can (rarely) lose its corridor — a tangent
                // overlap that fails the strict validation. The star variant
                // then inherits the graph path unshortened.
                None if res.status == PlanStatus::Solved => {
                    let ok = exact.path_free(&res.polyline, 1e-3);
                    records.push(QueryRecord {
                        world: world_index,
                        query: query_index,
                        planner: PlannerKind::PbrmStar,
                        status: PlanStatus::Solved,
                        length: Some(res.length),
                        residual: None,
                        optimizer_stalled: false,
                        validated: Some(ok),
                    });
                }
                None => records.push(QueryRecord {
                    world: world_index,
                    query: query_index,
                    planner: PlannerKind::PbrmStar,
                    status: res.status,
                    length: None,
                    residual: None,
                    optimizer_stalled: false,
                    validated: None,
                }),
            }

            // PRM.
            let t = Instant::now();
            let res = prm_query(&prm, &exact, qs, qg, &baseline_params);
            timing.queries.push(TimingRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::Prm,
                seconds: t.elapsed().as_secs_f64(),
            });
            let validated = (res.status == PlanStatus::Solved)
                .then(|| exact.path_free(&res.polyline, 1e-3));
            records.push(QueryRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::Prm,
                status: res.status,
                length: (res.status == PlanStatus::Solved).then_some(res.length),
                residual: None,
                optimizer_stalled: false,
                validated,
            });

            // PRM*, densifying a per-query copy of its roadmap.
            let t = Instant::now();
            let mut overlay = prm_star.clone();
            let outcome = prm_star_query_anytime(
                &mut overlay,
                &exact,
                &limits,
                qs,
                qg,
                gamma,
                cfg.prm_star_budget,
                cfg.prm_star_batch,
                derive_seed(
                    cfg.seed,
                    TAG_DENSIFY,
                    record.world_seed ^ (query_index as u64),
                ),
                &baseline_params,
            )?;
            timing.queries.push(TimingRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::PrmStar,
                seconds: t.elapsed().as_secs_f64(),
            });
            let res = outcome.result;
            let validated = (res.status == PlanStatus::Solved)
                .then(|| exact.path_free(&res.polyline, 1e-3));
            records.push(QueryRecord {
                world: world_index,
                query: query_index,
                planner: PlannerKind::PrmStar,
                status: res.status,
                length: (res.status == PlanStatus::Solved).then_some(res.length),
                residual: None,
                optimizer_stalled: false,
                validated,
            });
        }

        worlds.push(record);
    }

    let summaries = summarize(&records);
    for s in &summaries {
        if s.planner == PlannerKind::Pbrm && s.success_rate < 0.9 {
            warnings.push(format!(
                "pbrm success rate {:.1}% below the 90-100% band",
                100.0 * s.success_rate
            ));
        }
    }
    let report = BenchmarkReport {
        system: cfg.system,
        backend: backend.name().to_string(),
        config: cfg.clone(),
        worlds,
        records,
        summaries,
        warnings,
    };
    Ok((report, timing))
}
