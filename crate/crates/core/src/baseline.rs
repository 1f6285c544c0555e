//! Classical sampling baselines: PRM and PRM*.
//!
//! Both planners sample free configurations with the exact collision
//! checker and certify edges by sweeping the segment at a fixed step. PRM
//! wires each node to a fixed number of nearest neighbors; PRM* uses the
//! shrinking connection radius `r(n) = gamma (ln n / n)^(1/d)` and can keep
//! densifying a roadmap after the first answer, trading time for path
//! quality. Queries attach the endpoints the same way and run A*; the final
//! polyline is re-validated at a finer step before being reported.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::field::ExactChecker;
use crate::geom::Config;
use crate::graph;
use crate::planner::{PlanResult, PlanStatus, QueryTiming};

/// Shared tuning for both baselines.
#[derive(Debug, Clone)]
pub struct BaselineParams {
    /// Nearest neighbors PRM tries to connect (also used for queries).
    pub k_neighbors: usize,
    /// Sweep step for edge certification.
    pub edge_step: f64,
    /// Finer sweep step for the final returned polyline.
    pub validation_step: f64,
    /// Sampling gives up after `sample_cap_factor * requested` draws.
    pub sample_cap_factor: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            k_neighbors: 10,
            edge_step: 1e-2,
            validation_step: 1e-3,
            sample_cap_factor: 200,
        }
    }
}

/// A sampled roadmap shared by PRM and PRM*.
#[derive(Debug, Clone)]
pub struct PrmRoadmap {
    pub nodes: Vec<Config>,
    /// `(a, b, length)` with `a < b`.
    pub edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    pub seed: u64,
}

impl PrmRoadmap {
    fn new(nodes: Vec<Config>, edges: Vec<(usize, usize, f64)>, seed: u64) -> Self {
        let mut map = PrmRoadmap { nodes, edges, adjacency: Vec::new(), seed };
        map.rebuild_adjacency();
        map
    }

    fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.nodes.len()];
        for &(a, b, w) in &self.edges {
            self.adjacency[a].push((b, w));
            self.adjacency[b].push((a, w));
        }
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }
}

/// Draws `count` collision-free configurations uniformly from the joint box.
fn sample_free_configs(
    exact: &ExactChecker,
    limits: &[[f64; 2]],
    count: usize,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Config>> {
    let mut nodes = Vec::with_capacity(count);
    let mut attempts = 0;
    while nodes.len() < count && attempts < cap {
        attempts += 1;
        let mut q = Config::zeros(limits.len());
        for (i, lim) in limits.iter().enumerate() {
            q[i] = rng.gen_range(lim[0]..=lim[1]);
        }
        if !exact.in_collision(&q) {
            nodes.push(q);
        }
    }
    if nodes.len() < count {
        return Err(Error::SamplingFailed(format!(
            "drew {} of {count} free samples in {attempts} attempts",
            nodes.len()
        )));
    }
    Ok(nodes)
}

/// Indices of the `k` nearest nodes to `q`, closest first (ties by index).
fn k_nearest(nodes: &[Config], q: &Config, k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = nodes
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(i, p)| (q.dist(p), i))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    order.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Builds a PRM: uniform free samples, each wired to its `k` nearest
/// neighbors when the connecting segment sweeps clean.
pub fn prm_build(
    exact: &ExactChecker,
    limits: &[[f64; 2]],
    num_samples: usize,
    seed: u64,
    params: &BaselineParams,
) -> Result<PrmRoadmap> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("requested zero roadmap samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = params.sample_cap_factor.saturating_mul(num_samples);
    let nodes = sample_free_configs(exact, limits, num_samples, cap, &mut rng)?;
    let mut edges = Vec::new();
    let mut seen = vec![Vec::new(); nodes.len()];
    for i in 0..nodes.len() {
        for j in k_nearest(&nodes, &nodes[i], params.k_neighbors, Some(i)) {
            let (a, b) = (i.min(j), i.max(j));
            if seen[a].contains(&b) {
                continue;
            }
            seen[a].push(b);
            if exact.segment_free(&nodes[i], &nodes[j], params.edge_step) {
                edges.push((a, b, nodes[a].dist(&nodes[b])));
            }
        }
    }
    Ok(PrmRoadmap::new(nodes, edges, seed))
}

/// Volume of the unit ball in `d` dimensions (configuration dimensions are
/// capped at four, so a table is enough).
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        4 => std::f64::consts::PI * std::f64::consts::PI / 2.0,
        _ => unreachable!("dimension {d} outside the supported range"),
    }
}

/// Monte-Carlo estimate of the free-space volume inside the joint box.
pub fn estimate_free_measure(
    exact: &ExactChecker,
    limits: &[[f64; 2]],
    num_samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free = 0usize;
    for _ in 0..num_samples {
        let mut q = Config::zeros(limits.len());
        for (i, lim) in limits.iter().enumerate() {
            q[i] = rng.gen_range(lim[0]..=lim[1]);
        }
        if !exact.in_collision(&q) {
            free += 1;
        }
    }
    let volume: f64 = limits.iter().map(|l| l[1] - l[0]).product();
    volume * free as f64 / num_samples as f64
}

/// Connection-radius scale: twice the asymptotic-optimality lower bound
/// `2 (1 + 1/d)^(1/d) (mu_free / zeta_d)^(1/d)`.
pub fn prm_star_gamma(d: usize, mu_free: f64) -> Result<f64> {
    if d == 0 || d > 4 {
        return Err(Error::InvalidArgument(format!("dimension {d} outside 1..=4")));
    }
    if !(mu_free > 0.0) {
        return Err(Error::InvalidArgument(format!("free measure {mu_free} must be positive")));
    }
    let inv_d = 1.0 / d as f64;
    let bound = 2.0 * (1.0 + inv_d).powf(inv_d) * (mu_free / unit_ball_volume(d)).powf(inv_d);
    Ok(2.0 * bound)
}

/// The shrinking PRM* connection radius `gamma (ln n / n)^(1/d)`.
pub fn prm_star_radius(n: usize, d: usize, gamma: f64) -> f64 {
    assert!(n >= 2, "radius needs at least two samples");
    gamma * ((n as f64).ln() / n as f64).powf(1.0 / d as f64)
}

/// Builds a PRM*: uniform free samples, all pairs within `r(n)` connected
/// when their segment sweeps clean.
pub fn prm_star_build(
    exact: &ExactChecker,
    limits: &[[f64; 2]],
    num_samples: usize,
    gamma: f64,
    seed: u64,
    params: &BaselineParams,
) -> Result<PrmRoadmap> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = params.sample_cap_factor.saturating_mul(num_samples);
    let nodes = sample_free_configs(exact, limits, num_samples, cap, &mut rng)?;
    let radius = prm_star_radius(nodes.len(), limits.len(), gamma);
    let mut edges = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let d = nodes[i].dist(&nodes[j]);
            if d <= radius && exact.segment_free(&nodes[i], &nodes[j], params.edge_step) {
                edges.push((i, j, d));
            }
        }
    }
    Ok(PrmRoadmap::new(nodes, edges, seed))
}

/// Answers a query over a built roadmap: attach both endpoints to their
/// nearest visible nodes, search with A*, and re-validate the winning
/// polyline at the finer validation step. An edge that fails re-validation
/// is dropped and the search repeats, a bounded number of times.
pub fn prm_query(
    map: &PrmRoadmap,
    exact: &ExactChecker,
    start: &Config,
    goal: &Config,
    params: &BaselineParams,
) -> PlanResult {
    let mut timing = QueryTiming::default();
    let t0 = Instant::now();
    if exact.in_collision(start) || exact.in_collision(goal) {
        timing.connect_seconds = t0.elapsed().as_secs_f64();
        return failed(PlanStatus::UnreachableQuery, timing);
    }
    let attach = |q: &Config| -> Vec<(usize, f64)> {
        k_nearest(&map.nodes, q, params.k_neighbors, None)
            .into_iter()
            .filter(|&i| exact.segment_free(q, &map.nodes[i], params.edge_step))
            .map(|i| (i, q.dist(&map.nodes[i])))
            .collect()
    };
    let start_links = attach(start);
    let goal_links = attach(goal);
    timing.connect_seconds = t0.elapsed().as_secs_f64();
    if start_links.is_empty() || goal_links.is_empty() {
        return failed(PlanStatus::UnreachableQuery, timing);
    }

    let n = map.nodes.len();
    let position = |u: usize| -> Config {
        if u < n {
            map.nodes[u]
        } else if u == n {
            *start
        } else {
            *goal
        }
    };
    // Edges struck out by re-validation, as overlay-node index pairs.
    let mut banned: Vec<(usize, usize)> = Vec::new();
    let t1 = Instant::now();
    for _ in 0..10 {
        let neighbors = |u: usize, out: &mut Vec<(usize, f64)>| {
            let mut push = |v: usize, w: f64| {
                let key = (u.min(v), u.max(v));
                if !banned.contains(&key) {
                    out.push((v, w));
                }
            };
            if u == n {
                for &(i, d) in &start_links {
                    push(i, d);
                }
            } else if u == n + 1 {
                for &(i, d) in &goal_links {
                    push(i, d);
                }
            } else {
                for &(v, w) in map.neighbors(u) {
                    push(v, w);
                }
                for &(i, d) in &start_links {
                    if i == u {
                        push(n, d);
                    }
                }
                for &(i, d) in &goal_links {
                    if i == u {
                        push(n + 1, d);
                    }
                }
            }
        };
        let heuristic = |u: usize| position(u).dist(goal);
        let Some((_, path)) = graph::astar(n + 2, n, n + 1, neighbors, heuristic) else {
            timing.search_seconds = t1.elapsed().as_secs_f64();
            return failed(PlanStatus::NoPath, timing);
        };
        // Re-validate each hop at the finer step; drop the first offender.
        let mut offender = None;
        for w in path.windows(2) {
            let (a, b) = (position(w[0]), position(w[1]));
            if !exact.segment_free(&a, &b, params.validation_step) {
                offender = Some((w[0].min(w[1]), w[0].max(w[1])));
                break;
            }
        }
        match offender {
            Some(pair) => banned.push(pair),
            None => {
                timing.search_seconds = t1.elapsed().as_secs_f64();
                let polyline: Vec<Config> = path.iter().map(|&u| position(u)).collect();
                let length = polyline.windows(2).map(|w| w[0].dist(&w[1])).sum();
                return PlanResult {
                    status: PlanStatus::Solved,
                    polyline,
                    length,
                    corridor: None,
                    used_hybrid: false,
                    timing,
                };
            }
        }
    }
    timing.search_seconds = t1.elapsed().as_secs_f64();
    failed(PlanStatus::NoPath, timing)
}

fn failed(status: PlanStatus, timing: QueryTiming) -> PlanResult {
    PlanResult {
        status,
        polyline: Vec::new(),
        length: 0.0,
        corridor: None,
        used_hybrid: false,
        timing,
    }
}

/// One anytime PRM* answer: the result for the roadmap as given, then after
/// each densification batch, keeping the best length seen.
#[derive(Debug, Clone)]
pub struct AnytimeOutcome {
    pub result: PlanResult,
    /// Best-so-far length after the initial answer and after each batch
    /// (`None` until the first solution appears). Non-increasing.
    pub checkpoints: Vec<Option<f64>>,
    /// Roadmap size when each checkpoint was taken.
    pub node_counts: Vec<usize>,
}

/// Densifies a PRM* roadmap by a fixed sample budget while re-answering one
/// query, recording a checkpoint after each batch.
///
/// Every added node is wired to the nodes within the radius for the grown
/// size, so the roadmap stays a faithful PRM* roadmap throughout. The
/// budget is a deterministic stand-in for a wall-clock anytime loop: the
/// same seed always yields the same roadmap and the same checkpoints.
pub fn prm_star_query_anytime(
    map: &mut PrmRoadmap,
    exact: &ExactChecker,
    limits: &[[f64; 2]],
    start: &Config,
    goal: &Config,
    gamma: f64,
    added_budget: usize,
    batch: usize,
    seed: u64,
    params: &BaselineParams,
) -> Result<AnytimeOutcome> {
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut best = prm_query(map, exact, start, goal, params);
    let mut best_len = match best.status {
        PlanStatus::Solved => Some(best.length),
        PlanStatus::UnreachableQuery => {
            // Densification cannot help a blocked endpoint.
            return Ok(AnytimeOutcome {
                checkpoints: vec![None],
                node_counts: vec![map.nodes.len()],
                result: best,
            });
        }
        PlanStatus::NoPath => None,
    };
    let mut checkpoints = vec![best_len];
    let mut node_counts = vec![map.nodes.len()];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = added_budget;
    while remaining > 0 {
        let take = batch.min(remaining);
        remaining -= take;
        let cap = params.sample_cap_factor.saturating_mul(take);
        let fresh = sample_free_configs(exact, limits, take, cap, &mut rng)?;
        for q in fresh {
            let idx = map.nodes.len();
            map.nodes.push(q);
            let radius = prm_star_radius(map.nodes.len(), limits.len(), gamma);
            for j in 0..idx {
                let d = map.nodes[idx].dist(&map.nodes[j]);
                if d <= radius && exact.segment_free(&map.nodes[idx], &map.nodes[j], params.edge_step)
                {
                    map.edges.push((j, idx, d));
                }
            }
        }
        map.rebuild_adjacency();
        let attempt = prm_query(map, exact, start, goal, params);
        if attempt.status == PlanStatus::Solved
            && best_len.map_or(true, |l| attempt.length < l)
        {
            best_len = Some(attempt.length);
            best = attempt;
        }
        checkpoints.push(best_len);
        node_counts.push(map.nodes.len());
    }
    Ok(AnytimeOutcome { result: best, checkpoints, node_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{GeometryVector, RobotModel};

    fn free_scene() -> (RobotModel, Vec<GeometryVector>) {
        let model =
            RobotModel::new(vec![1.0, 1.0], 0.05, vec![[-3.1, 3.1], [-3.1, 3.1]]).unwrap();
        (model, Vec::new())
    }

    /// A small circle above the base: the first link collides for a wide
    /// band of shoulder angles regardless of the elbow, so the free space
    /// splits into two components along the first joint.
    fn split_scene() -> (RobotModel, Vec<GeometryVector>) {
        let model =
            RobotModel::new(vec![1.0, 1.0], 0.05, vec![[-3.1, 3.1], [-3.1, 3.1]]).unwrap();
        let obstacles = vec![GeometryVector::Circle { center: [0.0, 0.3], radius: 0.2 }];
        (model, obstacles)
    }

    #[test]
    fn radius_formula_matches_hand_arithmetic() {
        // n = 500, d = 2, gamma = 2: r = 2 sqrt(ln 500 / 500).
        let r = prm_star_radius(500, 2, 2.0);
        let expected = 2.0 * (500.0_f64.ln() / 500.0).sqrt();
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.2229).abs() < 1e-4, "r = {r}");
    }

    #[test]
    fn gamma_doubles_the_lower_bound() {
        // d = 2 with mu_free = pi makes the measure ratio exactly one:
        // gamma* = 2 sqrt(1.5), and we return twice that.
        let gamma = prm_star_gamma(2, std::f64::consts::PI).unwrap();
        let expected = 2.0 * 2.0 * 1.5_f64.sqrt();
        assert!((gamma - expected).abs() < 1e-12, "gamma = {gamma}");
        assert!(prm_star_gamma(0, 1.0).is_err());
        assert!(prm_star_gamma(2, 0.0).is_err());
    }

    #[test]
    fn free_measure_of_an_empty_scene_is_the_box_volume() {
        let (model, obstacles) = free_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let measure = estimate_free_measure(&exact, &model.joint_limits, 2000, 7);
        let volume = 6.2 * 6.2;
        assert!((measure - volume).abs() < 1e-9, "measure = {measure}");
    }

    #[test]
    fn free_measure_shrinks_with_an_obstacle() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let measure = estimate_free_measure(&exact, &model.joint_limits, 10_000, 7);
        let volume = 6.2 * 6.2;
        assert!(measure < 0.9 * volume, "the blocked band must be visible: {measure}");
        assert!(measure > 0.3 * volume, "most of the space stays free: {measure}");
    }

    #[test]
    fn prm_nodes_and_edges_are_collision_free() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let map = prm_build(&exact, &model.joint_limits, 120, 3, &params).unwrap();
        assert_eq!(map.nodes.len(), 120);
        for q in &map.nodes {
            assert!(!exact.in_collision(q));
        }
        assert!(!map.edges.is_empty());
        for &(a, b, w) in &map.edges {
            assert!((map.nodes[a].dist(&map.nodes[b]) - w).abs() < 1e-12);
            assert!(exact.segment_free(&map.nodes[a], &map.nodes[b], 1e-2));
        }
    }

    #[test]
    fn prm_build_is_deterministic() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let a = prm_build(&exact, &model.joint_limits, 80, 11, &params).unwrap();
        let b = prm_build(&exact, &model.joint_limits, 80, 11, &params).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn prm_star_edges_respect_the_radius() {
        let (model, obstacles) = free_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let gamma = 2.0;
        let map = prm_star_build(&exact, &model.joint_limits, 150, gamma, 5, &params).unwrap();
        let radius = prm_star_radius(150, 2, gamma);
        for &(a, b, w) in &map.edges {
            assert!(w <= radius + 1e-12);
            assert!((map.nodes[a].dist(&map.nodes[b]) - w).abs() < 1e-12);
        }
        // In an empty scene every pair within the radius must be wired.
        for i in 0..map.nodes.len() {
            for j in (i + 1)..map.nodes.len() {
                if map.nodes[i].dist(&map.nodes[j]) <= radius {
                    assert!(
                        map.neighbors(i).iter().any(|&(v, _)| v == j),
                        "pair ({i}, {j}) within radius but unconnected"
                    );
                }
            }
        }
    }

    #[test]
    fn prm_solves_an_easy_query() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let map = prm_build(&exact, &model.joint_limits, 200, 9, &params).unwrap();
        // Both endpoints on the same side of the blocked shoulder band.
        let qs = Config::new(&[-2.5, 0.5]);
        let qg = Config::new(&[0.3, -1.5]);
        assert!(!exact.in_collision(&qs) && !exact.in_collision(&qg));
        let res = prm_query(&map, &exact, &qs, &qg, &params);
        assert_eq!(res.status, PlanStatus::Solved);
        assert!(res.length >= qs.dist(&qg) - 1e-9);
        assert_eq!(res.polyline.first(), Some(&qs));
        assert_eq!(res.polyline.last(), Some(&qg));
        assert!(exact.path_free(&res.polyline, 1e-3));
    }

    #[test]
    fn prm_reports_no_path_across_the_split() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let map = prm_build(&exact, &model.joint_limits, 200, 9, &params).unwrap();
        // Opposite sides of the blocked shoulder band.
        let qs = Config::new(&[0.0, 0.0]);
        let qg = Config::new(&[3.0, 0.0]);
        assert!(!exact.in_collision(&qs) && !exact.in_collision(&qg));
        let res = prm_query(&map, &exact, &qs, &qg, &params);
        assert_eq!(res.status, PlanStatus::NoPath);
    }

    #[test]
    fn blocked_endpoint_is_unreachable() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let map = prm_build(&exact, &model.joint_limits, 50, 2, &params).unwrap();
        let blocked = Config::new(&[std::f64::consts::FRAC_PI_2, 0.0]);
        assert!(exact.in_collision(&blocked));
        let res = prm_query(&map, &exact, &blocked, &Config::new(&[0.0, 0.0]), &params);
        assert_eq!(res.status, PlanStatus::UnreachableQuery);
    }

    #[test]
    fn densification_checkpoints_never_regress() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let gamma = 2.0;
        let mut map =
            prm_star_build(&exact, &model.joint_limits, 100, gamma, 21, &params).unwrap();
        let qs = Config::new(&[-2.5, 0.5]);
        let qg = Config::new(&[0.3, -1.5]);
        let out = prm_star_query_anytime(
            &mut map,
            &exact,
            &model.joint_limits,
            &qs,
            &qg,
            gamma,
            200,
            50,
            77,
            &params,
        )
        .unwrap();
        assert_eq!(out.result.status, PlanStatus::Solved);
        assert_eq!(out.checkpoints.len(), 5, "initial answer plus four batches");
        assert_eq!(out.node_counts.last(), Some(&300));
        let mut prev = f64::INFINITY;
        for c in out.checkpoints.iter().flatten() {
            assert!(*c <= prev + 1e-12, "checkpoint lengths must not regress");
            prev = *c;
        }
        assert!((out.result.length - prev).abs() < 1e-12);
        assert!(exact.path_free(&out.result.polyline, 1e-3));
    }

    #[test]
    fn densification_is_deterministic() {
        let (model, obstacles) = split_scene();
        let exact = ExactChecker::new(&model, &obstacles);
        let params = BaselineParams::default();
        let gamma = 2.0;
        let run = || {
            let mut map =
                prm_star_build(&exact, &model.joint_limits, 80, gamma, 13, &params).unwrap();
            prm_star_query_anytime(
                &mut map,
                &exact,
                &model.joint_limits,
                &Config::new(&[-2.0, 1.0]),
                &Config::new(&[0.5, -1.0]),
                gamma,
                120,
                40,
                99,
                &params,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.checkpoints, b.checkpoints);
        assert_eq!(a.node_counts, b.node_counts);
        assert_eq!(a.result.polyline, b.result.polyline);
    }
}
