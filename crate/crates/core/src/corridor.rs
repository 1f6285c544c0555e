//! Shortening a path inside a corridor of overlapping balls.
//!
//! A corridor with balls `B_1..B_k` admits any polyline whose waypoint `x_i`
//! lies in the lens `B_i ∩ B_{i+1}`: the segment before `x_i` then stays in
//! `B_i` and the segment after it in `B_{i+1}`, both convex and free. The
//! optimizer minimizes total length over those lens constraints with
//! Gauss-Seidel sweeps. Each single-waypoint subproblem is solved in closed
//! form when the chord between its neighbors crosses the lens; otherwise a
//! projected subgradient step with an Armijo backtracking line search moves
//! the waypoint, with an exact closed-form projection onto the lens.

use crate::error::{Error, Result};
use crate::geom::Config;
use crate::planner::{Ball, Corridor};

/// Convergence and feasibility tolerances for [`optimize`].
#[derive(Debug, Clone)]
pub struct CorridorTolerances {
    /// Maximum allowed lens violation of any returned waypoint.
    pub eps_feas: f64,
    /// Sweeps stop once one full pass shortens the path by less than this.
    pub eps_obj: f64,
    /// Hard cap on Gauss-Seidel sweeps.
    pub max_iters: usize,
}

impl Default for CorridorTolerances {
    fn default() -> Self {
        CorridorTolerances { eps_feas: 1e-6, eps_obj: 1e-8, max_iters: 5000 }
    }
}

/// A shortened polyline, still threaded through its corridor.
#[derive(Debug, Clone)]
pub struct OptimizedPath {
    /// Start, one waypoint per lens, goal.
    pub waypoints: Vec<Config>,
    pub length: f64,
    /// Largest lens violation over all waypoints (zero when feasible).
    pub residual: f64,
    /// Gauss-Seidel sweeps performed.
    pub iterations: usize,
}

fn polyline_length(points: &[Config]) -> f64 {
    points.windows(2).map(|w| w[0].dist(&w[1])).sum()
}

/// Parameter interval of segment `a + t (b - a)`, `t` in `[0, 1]`, inside the
/// ball `(c, r)`; `None` when the segment misses the ball.
fn segment_ball_interval(a: &Config, b: &Config, c: &Config, r: f64) -> Option<(f64, f64)> {
    let d = *b - *a;
    let m = *a - *c;
    let qa = d.dot(&d);
    let qc = m.dot(&m) - r * r;
    if qa < 1e-18 {
        // Degenerate segment: a point, inside or out.
        return if qc <= 0.0 { Some((0.0, 1.0)) } else { None };
    }
    let qb = 2.0 * m.dot(&d);
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    if t0 <= t1 {
        Some((t0, t1))
    } else {
        None
    }
}

fn project_ball(p: &Config, c: &Config, r: f64) -> Config {
    let d = p.dist(c);
    if d <= r {
        *p
    } else {
        *c + (*p - *c) * (r / d)
    }
}

/// How far `p` sticks out of the lens `b1 ∩ b2`.
fn lens_violation(p: &Config, b1: &Ball, b2: &Ball) -> f64 {
    (p.dist(&b1.center) - b1.radius)
        .max(p.dist(&b2.center) - b2.radius)
        .max(0.0)
}

/// Projects `p` onto the intersection of two overlapping balls.
///
/// Closed form from the KKT cases: the projection is `p` itself when
/// feasible, the projection onto one sphere when that lands inside the
/// other ball, and otherwise the nearest point of the sphere–sphere
/// intersection rim. Alternating-projection schemes converge too slowly on
/// thin lenses to honour the feasibility contract, so the rim case is
/// solved directly.
///
/// Fails with `InvalidArgument` when the balls do not overlap (the
/// intersection is empty, so no projection exists).
pub fn project_two_ball_intersection(p: &Config, b1: &Ball, b2: &Ball) -> Result<Config> {
    let d = b1.center.dist(&b2.center);
    if d > b1.radius + b2.radius {
        return Err(Error::InvalidArgument("balls do not overlap".into()));
    }
    let in1 = p.dist(&b1.center) <= b1.radius;
    let in2 = p.dist(&b2.center) <= b2.radius;
    if in1 && in2 {
        return Ok(*p);
    }
    if !in1 {
        let q = project_ball(p, &b1.center, b1.radius);
        if q.dist(&b2.center) <= b2.radius + 1e-12 {
            return Ok(q);
        }
    }
    if !in2 {
        let q = project_ball(p, &b2.center, b2.radius);
        if q.dist(&b1.center) <= b1.radius + 1e-12 {
            return Ok(q);
        }
    }
    // Both single-ball projections leave the other ball: the projection is
    // the nearest rim point. The rim is the sphere–sphere intersection — a
    // circle of radius `rho` centered at `o` in the hyperplane orthogonal
    // to the center axis `u`.
    let u = (b2.center - b1.center) * (1.0 / d);
    let h = (d * d + b1.radius * b1.radius - b2.radius * b2.radius) / (2.0 * d);
    let o = b1.center + u * h;
    let rho = (b1.radius * b1.radius - h * h).max(0.0).sqrt();
    let rel = *p - o;
    let w = rel - u * rel.dot(&u);
    let wn = w.norm();
    let dir = if wn > 1e-12 {
        w * (1.0 / wn)
    } else {
        // `p` sits on the center axis: every rim point is equally near.
        // Break the tie with the coordinate axis least aligned with `u`.
        let mut k = 0;
        for i in 1..p.dim() {
            if u[i].abs() < u[k].abs() {
                k = i;
            }
        }
        let mut e = Config::zeros(p.dim());
        e[k] = 1.0;
        let v = e - u * u[k];
        v * (1.0 / v.norm())
    };
    Ok(o + dir * rho)
}

/// Distance sum to the two fixed neighbors — the per-waypoint objective.
fn stretch(x: &Config, a: &Config, b: &Config) -> f64 {
    x.dist(a) + x.dist(b)
}

/// One coordinate update: minimizes `|x - a| + |x - b|` over the lens.
///
/// If the chord `[a, b]` crosses the lens, any crossing point is exactly
/// optimal (the objective degenerates to `|a - b|`); the midpoint of the
/// crossing interval is chosen to keep results deterministic. Otherwise a
/// few projected subgradient steps with Armijo backtracking run from the
/// current iterate; the update is kept only if it does not lengthen the
/// path, so sweeps are monotone.
fn update_waypoint(x: &Config, a: &Config, b: &Config, b1: &Ball, b2: &Ball) -> Config {
    let i1 = segment_ball_interval(a, b, &b1.center, b1.radius);
    let i2 = segment_ball_interval(a, b, &b2.center, b2.radius);
    if let (Some((lo1, hi1)), Some((lo2, hi2))) = (i1, i2) {
        let lo = lo1.max(lo2);
        let hi = hi1.min(hi2);
        if lo <= hi {
            let t = 0.5 * (lo + hi);
            return a.lerp(b, t);
        }
    }

    let mut cur = *x;
    let mut cur_f = stretch(&cur, a, b);
    for _ in 0..5 {
        let mut grad = Config::zeros(cur.dim());
        let da = cur.dist(a);
        if da > 1e-12 {
            grad = grad + (cur - *a) * (1.0 / da);
        }
        let db = cur.dist(b);
        if db > 1e-12 {
            grad = grad + (cur - *b) * (1.0 / db);
        }
        let gn2 = grad.dot(&grad);
        if gn2 < 1e-18 {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = cur - grad * step;
            let Ok(projected) = project_two_ball_intersection(&trial, b1, b2) else {
                break;
            };
            let f = stretch(&projected, a, b);
            if f <= cur_f - 1e-4 * step * gn2 {
                cur = projected;
                cur_f = f;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    cur
}

/// Feasible starting waypoints: the midpoint of each center chord's overlap
/// interval, which strict ball overlap guarantees to be nonempty.
fn initial_waypoints(balls: &[Ball]) -> Vec<Config> {
    let mut pts = Vec::with_capacity(balls.len().saturating_sub(1));
    for w in balls.windows(2) {
        let (b1, b2) = (&w[0], &w[1]);
        let d = b1.center.dist(&b2.center);
        if d < 1e-15 {
            pts.push(b1.center);
            continue;
        }
        let lo = (1.0 - b2.radius / d).max(0.0);
        let hi = (b1.radius / d).min(1.0);
        let t = 0.5 * (lo + hi);
        pts.push(b1.center.lerp(&b2.center, t));
    }
    pts
}

/// Shortens the corridor's path by cyclic single-waypoint minimization.
///
/// The result's polyline is collision-free by construction: waypoint `i`
/// lies in `B_i ∩ B_{i+1}`, so segment `i` stays inside the convex free
/// ball `B_i`. The total length never increases from one sweep to the next.
/// Returns `CorridorStalled` if the final waypoints violate their lenses by
/// more than `eps_feas` — callers then fall back to the corridor's center
/// polyline, which is free because consecutive balls strictly overlap.
pub fn optimize(corridor: &Corridor, tol: &CorridorTolerances) -> Result<OptimizedPath> {
    corridor.validate()?;
    if !(tol.eps_feas > 0.0) || !(tol.eps_obj > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let balls = &corridor.balls;
    let k = balls.len();
    if k == 1 {
        let waypoints = vec![corridor.start, corridor.goal];
        let length = polyline_length(&waypoints);
        return Ok(OptimizedPath { waypoints, length, residual: 0.0, iterations: 0 });
    }

    let mut xs = initial_waypoints(balls);
    let mut length = {
        let mut pts = vec![corridor.start];
        pts.extend_from_slice(&xs);
        pts.push(corridor.goal);
        polyline_length(&pts)
    };
    let mut iterations = 0;
    for _ in 0..tol.max_iters {
        iterations += 1;
        for i in 0..xs.len() {
            let prev = if i == 0 { corridor.start } else { xs[i - 1] };
            let next = if i + 1 == xs.len() { corridor.goal } else { xs[i + 1] };
            let updated = update_waypoint(&xs[i], &prev, &next, &balls[i], &balls[i + 1]);
            // A coordinate update may only shorten the two touched segments.
            let before = stretch(&xs[i], &prev, &next);
            let after = stretch(&updated, &prev, &next);
            if after <= before {
                xs[i] = updated;
            }
        }
        let mut pts = vec![corridor.start];
        pts.extend_from_slice(&xs);
        pts.push(corridor.goal);
        let new_length = polyline_length(&pts);
        debug_assert!(new_length <= length + 1e-9, "sweeps must be monotone");
        let improved = length - new_length;
        length = new_length;
        if improved < tol.eps_obj {
            break;
        }
    }

    let residual = xs
        .iter()
        .enumerate()
        .map(|(i, x)| lens_violation(x, &balls[i], &balls[i + 1]))
        .fold(0.0_f64, f64::max);
    if residual > tol.eps_feas {
        return Err(Error::CorridorStalled { residual, iterations });
    }
    let mut waypoints = vec![corridor.start];
    waypoints.extend(xs);
    waypoints.push(corridor.goal);
    Ok(OptimizedPath { waypoints, length, residual, iterations })
}

/// The corridor's center polyline as a ready-made fallback path.
///
/// Callers use this when [`optimize`] stalls. It is collision-free for
/// planner-produced corridors, whose first and last balls are centered on
/// the endpoints: every segment then runs center-to-center between strictly
/// overlapping balls and stays inside their union.
pub fn centerline_path(corridor: &Corridor) -> OptimizedPath {
    let waypoints = corridor.center_polyline();
    let length = polyline_length(&waypoints);
    OptimizedPath { waypoints, length, residual: 0.0, iterations: 0 }
}
