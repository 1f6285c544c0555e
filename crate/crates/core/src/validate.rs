//! Sign-accuracy validation of a distance model against the exact detector.
//!
//! Each held-out geometry is gridded over the joint limits; a configuration
//! counts as predicted-colliding when the model's distance is negative.
//! Accuracy is measured over all lattice cells, recall over the truly
//! colliding ones, precision over the predicted-colliding ones.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Config, GeometryVector, RobotModel};
use crate::net::{input_row, MlpModel};
use crate::oracle::{CollisionGrid, GridGeometry};

/// Confusion counts and derived percentages for one geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeometryStats {
    pub geometry: GeometryVector,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Aggregate validation result over all geometries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub per_geometry: Vec<GeometryStats>,
}

/// Validates an arbitrary predictor (`(q, g) → signed distance`).
pub fn validate_with<F>(
    predict: F,
    robot: &RobotModel,
    geometries: &[GeometryVector],
    grid_n: usize,
) -> Result<ValidationReport>
where
    F: Fn(&Config, &GeometryVector) -> f64,
{
    if geometries.is_empty() {
        return Err(Error::InvalidArgument("no validation geometries".into()));
    }
    let mut per_geometry = Vec::with_capacity(geometries.len());
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for &g in geometries {
        // The grid's occupancy is exactly the ground-truth label set.
        let grid = CollisionGrid::build(robot, GridGeometry::Obstacles(vec![g]), grid_n)?;
        let (mut gtp, mut gfp, mut gtn, mut gfn) = (0u64, 0u64, 0u64, 0u64);
        let mut coords = [0usize; crate::geom::MAX_DOF];
        for flat in 0..grid.occupancy.len() {
            let q = grid.lattice_config(&coords[..grid.dof]);
            // Sign-bit test rather than `< 0.0`: the oracle yields an exact
            // −0.0 at occupied boundary lattice points.
            let predicted_hit = predict(&q, &g).is_sign_negative();
            match (grid.occupancy[flat], predicted_hit) {
                (true, true) => gtp += 1,
                (false, true) => gfp += 1,
                (false, false) => gtn += 1,
                (true, false) => gfn += 1,
            }
            advance(&mut coords[..grid.dof], grid.n);
        }
        tp += gtp;
        fp += gfp;
        tn += gtn;
        fn_ += gfn;
        per_geometry.push(stats_for(g, gtp, gfp, gtn, gfn));
    }
    let total = stats_for(geometries[0], tp, fp, tn, fn_);
    Ok(ValidationReport {
        tp,
        fp,
        tn,
        fn_,
        accuracy: total.accuracy,
        recall: total.recall,
        precision: total.precision,
        per_geometry,
    })
}

/// Validates a trained net (obstacle-conditioned input layout).
pub fn validate(
    model: &MlpModel,
    robot: &RobotModel,
    geometries: &[GeometryVector],
    grid_n: usize,
) -> Result<ValidationReport> {
    for g in geometries {
        if robot.dof() + g.param_len() != model.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "geometry parameters ({}) do not fit the model input width {}",
                g.param_len(),
                model.input_dim()
            )));
        }
    }
    validate_with(
        |q, g| {
            let row = input_row(q, &g.params());
            model.forward(&row).expect("validated width")
        },
        robot,
        geometries,
        grid_n,
    )
}

fn stats_for(geometry: GeometryVector, tp: u64, fp: u64, tn: u64, fn_: u64) -> GeometryStats {
    let pct = |num: u64, den: u64| {
        // Empty denominators (e.g. no predicted collisions) count as perfect:
        // there is nothing to be wrong about.
        if den == 0 {
            100.0
        } else {
            100.0 * num as f64 / den as f64
        }
    };
    GeometryStats {
        geometry,
        tp,
        fp,
        tn,
        fn_,
        accuracy: pct(tp + tn, tp + tn + fp + fn_),
        recall: pct(tp, tp + fn_),
        precision: pct(tp, tp + fp),
    }
}

fn advance(coords: &mut [usize], n: usize) {
    for d in (0..coords.len()).rev() {
        coords[d] += 1;
        if coords[d] < n {
            return;
        }
        coords[d] = 0;
    }
}

/// Batched net validation used by the CLI: same result as [`validate`], but
/// evaluates whole lattices per geometry in one pass.
pub fn validate_batched(
    model: &MlpModel,
    robot: &RobotModel,
    geometries: &[GeometryVector],
    grid_n: usize,
) -> Result<ValidationReport> {
    if geometries.is_empty() {
        return Err(Error::InvalidArgument("no validation geometries".into()));
    }
    let mut per_geometry = Vec::with_capacity(geometries.len());
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for &g in geometries {
        let grid = CollisionGrid::build(robot, GridGeometry::Obstacles(vec![g]), grid_n)?;
        let params = g.params();
        let d = robot.dof();
        let cells = grid.occupancy.len();
        let mut x = Array2::zeros((cells, model.input_dim()));
        let mut coords = [0usize; crate::geom::MAX_DOF];
        for flat in 0..cells {
            let q = grid.lattice_config(&coords[..d]);
            for (j, &v) in q.as_slice().iter().enumerate() {
                x[(flat, j)] = v;
            }
            for (j, &v) in params.iter().enumerate() {
                x[(flat, d + j)] = v;
            }
            advance(&mut coords[..d], grid.n);
        }
        let pred = model.batch_forward(x.view());
        let (mut gtp, mut gfp, mut gtn, mut gfn) = (0u64, 0u64, 0u64, 0u64);
        for flat in 0..cells {
            match (grid.occupancy[flat], pred[flat].is_sign_negative()) {
                (true, true) => gtp += 1,
                (false, true) => gfp += 1,
                (false, false) => gtn += 1,
                (true, false) => gfn += 1,
            }
        }
        tp += gtp;
        fp += gfp;
        tn += gtn;
        fn_ += gfn;
        per_geometry.push(stats_for(g, gtp, gfp, gtn, gfn));
    }
    let total = stats_for(geometries[0], tp, fp, tn, fn_);
    Ok(ValidationReport {
        tp,
        fp,
        tn,
        fn_,
        accuracy: total.accuracy,
        recall: total.recall,
        precision: total.precision,
        per_geometry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::signed_distance;

    fn two_link() -> RobotModel {
        RobotModel::new(vec![1.0, 0.8], 0.06, vec![[-3.1, 3.1], [-3.1, 3.1]]).unwrap()
    }

    #[test]
    fn oracle_as_model_is_perfect() {
        let robot = two_link();
        let geoms = [
            GeometryVector::Circle { center: [1.2, 0.2], radius: 0.35 },
            GeometryVector::Circle { center: [-0.8, 0.9], radius: 0.3 },
        ];
        // Predict with the grid oracle itself: signs must match everywhere
        // because both sides consult the same exact detector.
        let grids: Vec<_> = geoms
            .iter()
            .map(|&g| {
                CollisionGrid::build(&robot, GridGeometry::Obstacles(vec![g]), 24).unwrap()
            })
            .collect();
        let report = validate_with(
            |q, g| {
                let i = geoms.iter().position(|x| x == g).unwrap();
                signed_distance(&grids[i], &robot, q)
            },
            &robot,
            &geoms,
            24,
        )
        .unwrap();
        assert_eq!(report.accuracy, 100.0);
        assert_eq!(report.recall, 100.0);
        assert_eq!(report.fp, 0);
        assert_eq!(report.fn_, 0);
        assert_eq!(report.per_geometry.len(), 2);
    }

    #[test]
    fn counts_are_consistent_with_percentages() {
        let robot = two_link();
        let geoms = [GeometryVector::Circle { center: [1.0, 0.0], radius: 0.4 }];
        // A deliberately optimistic predictor: always free.
        let report = validate_with(|_, _| 1.0, &robot, &geoms, 16).unwrap();
        assert_eq!(report.tp + report.fp, 0);
        assert_eq!(report.precision, 100.0);
        assert!(report.recall < 100.0);
        let total = report.tp + report.tn + report.fp + report.fn_;
        assert_eq!(total, 16 * 16);
        let acc = 100.0 * (report.tp + report.tn) as f64 / total as f64;
        assert!((acc - report.accuracy).abs() < 1e-12);
    }

    #[test]
    fn batched_matches_scalar_path() {
        let robot = two_link();
        let geoms = [
            GeometryVector::Circle { center: [1.1, 0.4], radius: 0.3 },
            GeometryVector::Circle { center: [-1.0, -0.5], radius: 0.45 },
        ];
        let net = MlpModel::with_hidden(5, 16, 2, 11).unwrap();
        let a = validate(&net, &robot, &geoms, 16).unwrap();
        let b = validate_batched(&net, &robot, &geoms, 16).unwrap();
        assert_eq!(a.tp, b.tp);
        assert_eq!(a.fp, b.fp);
        assert_eq!(a.tn, b.tn);
        assert_eq!(a.fn_, b.fn_);
    }

    #[test]
    fn empty_geometry_list_is_rejected() {
        assert!(validate_with(|_, _| 1.0, &two_link(), &[], 16).is_err());
    }
}
