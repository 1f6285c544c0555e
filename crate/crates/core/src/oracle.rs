//! Grid-based signed configuration-distance oracle and dataset generation.
//!
//! The obstacle region for one geometry (or for self-collision) is gridded
//! over the joint-limit box; its boundary is approximated by the occupied
//! lattice cells that have at least one free face-neighbor. The signed
//! distance at an arbitrary configuration is then the Euclidean distance to
//! the nearest boundary lattice point, with the sign taken from the exact
//! detector at the query itself — never from a cell lookup — so the sign is
//! right even inside the one-cell boundary band.

use arrayvec::ArrayVec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{
    self, Config, GeometryVector, ObstacleSampler, RobotModel, D_MAX, MAX_DOF,
};

/// Upper bound on lattice cells (memory guard).
pub const MAX_GRID_CELLS: usize = 1 << 26;

/// What a grid represents: the obstacle region of a set of geometries, or the
/// robot's self-collision region (which needs no geometry vector).
#[derive(Clone, Debug, PartialEq)]
pub enum GridGeometry {
    Obstacles(Vec<GeometryVector>),
    SelfCollision,
}

/// Occupancy of the joint-limit box on an N-per-dimension lattice, plus the
/// extracted boundary configurations.
#[derive(Clone, Debug)]
pub struct CollisionGrid {
    pub n: usize,
    pub dof: usize,
    pub lower: Config,
    pub upper: Config,
    pub geometry: GridGeometry,
    pub occupancy: Vec<bool>,
    pub boundary: Vec<Config>,
}

impl CollisionGrid {
    /// Grids the joint-limit box and extracts the obstacle-region boundary.
    pub fn build(model: &RobotModel, geometry: GridGeometry, n: usize) -> Result<CollisionGrid> {
        if n < 8 {
            return Err(Error::InvalidArgument(format!("grid resolution {n} < 8")));
        }
        let dof = model.dof();
        let mut cells: usize = 1;
        for _ in 0..dof {
            cells = cells
                .checked_mul(n)
                .filter(|&c| c <= MAX_GRID_CELLS)
                .ok_or_else(|| {
                    Error::ResourceLimit(format!("{n}^{dof} lattice exceeds {MAX_GRID_CELLS} cells"))
                })?;
        }
        if let GridGeometry::Obstacles(obs) = &geometry {
            for g in obs {
                g.validate()?;
            }
        }

        let lower = Config::new(
            &model.joint_limits.iter().map(|l| l[0]).collect::<ArrayVec<f64, MAX_DOF>>(),
        );
        let upper = Config::new(
            &model.joint_limits.iter().map(|l| l[1]).collect::<ArrayVec<f64, MAX_DOF>>(),
        );

        let mut grid = CollisionGrid {
            n,
            dof,
            lower,
            upper,
            geometry,
            occupancy: Vec::with_capacity(cells),
            boundary: Vec::new(),
        };
        let mut coords = [0usize; MAX_DOF];
        for _ in 0..cells {
            let q = grid.lattice_config(&coords[..dof]);
            grid.occupancy.push(grid.colliding(model, &q));
            Self::advance(&mut coords[..dof], n);
        }

        // Boundary: occupied cells with a free face-neighbor, in flat order.
        let mut coords = [0usize; MAX_DOF];
        for flat in 0..cells {
            if grid.occupancy[flat] && grid.has_free_face_neighbor(flat, &coords[..dof]) {
                grid.boundary.push(grid.lattice_config(&coords[..dof]));
            }
            Self::advance(&mut coords[..dof], n);
        }
        Ok(grid)
    }

    /// Exact collision status of `q` for this grid's region.
    pub fn colliding(&self, model: &RobotModel, q: &Config) -> bool {
        match &self.geometry {
            GridGeometry::Obstacles(obs) => geom::obstacle_collision(model, q, obs),
            GridGeometry::SelfCollision => geom::self_collision(model, q),
        }
    }

    /// Lattice step along each dimension.
    pub fn cell_size(&self, dim: usize) -> f64 {
        (self.upper[dim] - self.lower[dim]) / (self.n - 1) as f64
    }

    /// Diagonal of one lattice cell — the resolution-induced error bound, and
    /// the default safety margin subtracted from ball radii downstream.
    pub fn cell_diagonal(&self) -> f64 {
        (0..self.dof).map(|d| self.cell_size(d).powi(2)).sum::<f64>().sqrt()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Configuration at integer lattice coordinates.
    pub fn lattice_config(&self, coords: &[usize]) -> Config {
        let mut v = ArrayVec::<f64, MAX_DOF>::new();
        for (d, &i) in coords.iter().enumerate() {
            v.push(self.lower[d] + i as f64 * self.cell_size(d));
        }
        Config::new(&v)
    }

    fn advance(coords: &mut [usize], n: usize) {
        // Mixed-radix increment, last dimension fastest (row-major flat order).
        for d in (0..coords.len()).rev() {
            coords[d] += 1;
            if coords[d] < n {
                return;
            }
            coords[d] = 0;
        }
    }

    fn has_free_face_neighbor(&self, flat: usize, coords: &[usize]) -> bool {
        let mut stride = 1usize;
        for d in (0..self.dof).rev() {
            if coords[d] > 0 && !self.occupancy[flat - stride] {
                return true;
            }
            if coords[d] + 1 < self.n && !self.occupancy[flat + stride] {
                return true;
            }
            stride *= self.n;
        }
        false
    }
}

/// Signed configuration distance at `q`: Euclidean distance to the nearest
/// boundary lattice point, negative iff the exact detector reports collision.
/// An empty boundary yields ±[`D_MAX`].
pub fn signed_distance(grid: &CollisionGrid, model: &RobotModel, q: &Config) -> f64 {
    signed_distance_with_witness(grid, model, q).0
}

/// As [`signed_distance`], also returning the nearest boundary configuration
/// (the gradient of the distance field points along `q − witness`).
pub fn signed_distance_with_witness(
    grid: &CollisionGrid,
    model: &RobotModel,
    q: &Config,
) -> (f64, Option<Config>) {
    let sign = if grid.colliding(model, q) { -1.0 } else { 1.0 };
    let mut best = f64::INFINITY;
    let mut witness = None;
    for b in &grid.boundary {
        let d = q.dist(b);
        if d < best {
            best = d;
            witness = Some(*b);
        }
    }
    match witness {
        Some(w) => (sign * best, Some(w)),
        None => (sign * D_MAX, None),
    }
}

/// Combined distance over per-obstacle values: the smallest one.
pub fn min_combine(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("min_combine over an empty list".into()));
    }
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

// ---------------------------------------------------------------------------
// Training datasets
// ---------------------------------------------------------------------------

/// One supervised sample: a configuration, the flattened obstacle parameters
/// (empty for self-collision data), and the signed distance target.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDistanceSample {
    pub q: Config,
    pub params: ArrayVec<f64, 4>,
    pub value: f64,
}

/// Dataset generation parameters.
#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub num_obstacles: usize,
    pub samples_per_obstacle: usize,
    pub grid_n: usize,
    pub seed: u64,
}

/// Regression targets are clamped to this range. Distances beyond π radians
/// of configuration clearance never influence planning (balls are clipped by
/// the joint limits well before that), and the uncapped far field — up to the
/// joint-box diagonal, or the ±d_max sentinel for out-of-reach obstacles —
/// dominates a mean-squared loss and starves the decision boundary, which is
/// where sign accuracy and recall are won.
pub fn target_cap(model: &RobotModel) -> f64 {
    model.config_box_diagonal().min(std::f64::consts::PI)
}

/// Samples `num_obstacles` random geometries, grids each one, and draws
/// uniform configurations with their signed distances (clamped to
/// [`target_cap`]).
///
/// Each obstacle gets its own seeded RNG stream, so the output is
/// deterministic and obstacle `i` is reproducible in isolation.
pub fn generate_dataset(
    model: &RobotModel,
    sampler: &ObstacleSampler,
    cfg: &DatasetConfig,
) -> Result<Vec<SignedDistanceSample>> {
    if cfg.num_obstacles == 0 || cfg.samples_per_obstacle == 0 {
        return Err(Error::InvalidArgument("dataset counts must be positive".into()));
    }
    let cap = target_cap(model);
    let mut out = Vec::with_capacity(cfg.num_obstacles * cfg.samples_per_obstacle);
    for i in 0..cfg.num_obstacles {
        let mut rng = obstacle_stream(cfg.seed, i);
        let g = sampler.sample(&mut rng);
        let grid = CollisionGrid::build(model, GridGeometry::Obstacles(vec![g]), cfg.grid_n)?;
        for _ in 0..cfg.samples_per_obstacle {
            let q = model.uniform_config(&mut rng);
            let value = signed_distance(&grid, model, &q).clamp(-cap, cap);
            out.push(SignedDistanceSample { q, params: g.params(), value });
        }
    }
    Ok(out)
}

/// Self-collision dataset: one shared grid (no geometry vector), uniform
/// configurations, empty parameter vectors.
pub fn generate_self_dataset(
    model: &RobotModel,
    num_samples: usize,
    grid_n: usize,
    seed: u64,
) -> Result<Vec<SignedDistanceSample>> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("dataset counts must be positive".into()));
    }
    let cap = target_cap(model);
    let grid = CollisionGrid::build(model, GridGeometry::SelfCollision, grid_n)?;
    let mut rng = obstacle_stream(seed, 0);
    let mut out = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        let q = model.uniform_config(&mut rng);
        let value = signed_distance(&grid, model, &q).clamp(-cap, cap);
        out.push(SignedDistanceSample { q, params: ArrayVec::new(), value });
    }
    Ok(out)
}

fn obstacle_stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

// ---------------------------------------------------------------------------
// Dataset file format
// ---------------------------------------------------------------------------

const DATASET_MAGIC: &[u8; 4] = b"SCDS";
const DATASET_VERSION: u32 = 1;

/// Provenance recorded in a dataset file header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetHeader {
    pub dof: u32,
    pub geom_dim: u32,
    pub grid_n: u32,
    pub seed: u64,
    pub robot_hash: u64,
}

/// Binary layout: magic, version, header fields, sample count, then rows of
/// little-endian f64 `(q₁..q_D, g₁..g_G, value)`.
pub fn write_dataset(
    path: &std::path::Path,
    header: &DatasetHeader,
    samples: &[SignedDistanceSample],
) -> Result<()> {
    let d = header.dof as usize;
    let g = header.geom_dim as usize;
    let mut buf =
        Vec::with_capacity(40 + samples.len() * (d + g + 1) * 8);
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    buf.extend_from_slice(&header.dof.to_le_bytes());
    buf.extend_from_slice(&header.geom_dim.to_le_bytes());
    buf.extend_from_slice(&header.grid_n.to_le_bytes());
    buf.extend_from_slice(&header.seed.to_le_bytes());
    buf.extend_from_slice(&header.robot_hash.to_le_bytes());
    buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        if s.q.dim() != d || s.params.len() != g {
            return Err(Error::InvalidArgument(
                "sample dimensions do not match the dataset header".into(),
            ));
        }
        for &x in s.q.as_slice() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for &x in &s.params {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        buf.extend_from_slice(&s.value.to_le_bytes());
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_dataset(path: &std::path::Path) -> Result<(DatasetHeader, Vec<SignedDistanceSample>)> {
    let bytes = std::fs::read(path)?;
    let corrupt = |what: &str| Error::CorruptFile(format!("{}: {what}", path.display()));
    if bytes.len() < 40 || &bytes[..4] != DATASET_MAGIC {
        return Err(corrupt("missing dataset header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: DATASET_VERSION });
    }
    let header = DatasetHeader {
        dof: u32_at(8),
        geom_dim: u32_at(12),
        grid_n: u32_at(16),
        seed: u64_at(20),
        robot_hash: u64_at(28),
    };
    let count = u64_at(36) as usize;
    let d = header.dof as usize;
    let g = header.geom_dim as usize;
    if d == 0 || d > MAX_DOF || g > 4 {
        return Err(corrupt("implausible dimensions"));
    }
    let row = (d + g + 1) * 8;
    if bytes.len() != 44 + count * row {
        return Err(corrupt("truncated or oversized payload"));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let mut samples = Vec::with_capacity(count);
    let mut off = 44;
    for _ in 0..count {
        let mut qv = ArrayVec::<f64, MAX_DOF>::new();
        for i in 0..d {
            qv.push(f64_at(off + i * 8));
        }
        let mut params = ArrayVec::<f64, 4>::new();
        for i in 0..g {
            params.push(f64_at(off + (d + i) * 8));
        }
        let value = f64_at(off + (d + g) * 8);
        samples.push(SignedDistanceSample { q: Config::new(&qv), params, value });
        off += row;
    }
    Ok((header, samples))
}
