//! Joint estimation from part motion: robust rigid alignment of two
//! corresponded part point clouds (Umeyama inside RANSAC) followed by
//! geometric inference of the joint kind, axis, and displacement.

use crate::geometry::{PointCloud, Pose, Rotation, Vec3};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rotation magnitude below which a motion is not considered revolute:
/// one degree, in radians. Classification must stay correct for any
/// rotation of at least a degree.
pub const THETA_MIN: f64 = 0.017453292519943295;
/// Translation magnitude below which a motion is not considered prismatic.
pub const DISP_MIN: f64 = 0.005;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no consensus: best inlier count {0} < 3")]
    NoConsensus(usize),
    #[error("joint kind mismatch: {0} vs {1}")]
    KindMismatch(String, String),
}

/// Least-squares rigid transform between two corresponded clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidTransformEstimate {
    pub rotation: Rotation,
    pub translation: Vec3,
    pub inlier_mask: Vec<bool>,
    /// Root-mean-square residual over inliers only, meters.
    pub rmse: f64,
}

impl RigidTransformEstimate {
    pub fn as_pose(&self) -> Pose {
        Pose::new(self.rotation, self.translation)
    }

    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|b| **b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointMotionKind {
    Revolute,
    Prismatic,
    Stationary,
}

impl JointMotionKind {
    pub fn name(self) -> &'static str {
        match self {
            JointMotionKind::Revolute => "revolute",
            JointMotionKind::Prismatic => "prismatic",
            JointMotionKind::Stationary => "stationary",
        }
    }
}

/// Inferred joint parameters for an observed part motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    pub kind: JointMotionKind,
    /// Unit axis direction; (0,0,1) placeholder for stationary motions.
    pub axis_dir: Vec3,
    /// A point on the axis line; meaningful for revolute estimates only.
    pub axis_point: Vec3,
    /// Radians for revolute, meters for prismatic, 0 for stationary.
    pub displacement: f64,
}

impl JointEstimate {
    pub const STATIONARY: JointEstimate = JointEstimate {
        kind: JointMotionKind::Stationary,
        axis_dir: Vec3 { x: 0.0, y: 0.0, z: 1.0 },
        axis_point: Vec3::ZERO,
        displacement: 0.0,
    };

    /// Flips the axis direction (and the displacement sign with it) so the
    /// reported axis aligns with `reference_dir`. Keeps displacement signs
    /// comparable with a joint's configured opening direction.
    pub fn aligned_to(&self, reference_dir: Vec3) -> JointEstimate {
        if self.kind == JointMotionKind::Stationary || self.axis_dir.dot(reference_dir) >= 0.0 {
            self.clone()
        } else {
            JointEstimate {
                kind: self.kind,
                axis_dir: -self.axis_dir,
                axis_point: self.axis_point,
                displacement: -self.displacement,
            }
        }
    }
}

/// RANSAC configuration for robust alignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    pub iterations: usize,
    /// Residual below which a correspondence counts as an inlier, meters.
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams { iterations: 256, inlier_threshold: 0.005, seed: 0 }
    }
}

pub const RANSAC_MIN_SAMPLE: usize = 3;

fn to_na(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

fn from_na(v: Vector3<f64>) -> Vec3 {
    Vec3::new(v.x, v.y, v.z)
}

fn umeyama_subset(
    x0: &PointCloud,
    xt: &PointCloud,
    indices: &[usize],
) -> Result<(Rotation, Vec3), EstimationError> {
    let n = indices.len();
    if n < 3 {
        return Err(EstimationError::DegenerateInput(format!("{n} correspondences, need >= 3")));
    }
    let mut mu0 = Vector3::zeros();
    let mut mut_ = Vector3::zeros();
    for &i in indices {
        mu0 += to_na(x0.points[i]);
        mut_ += to_na(xt.points[i]);
    }
    mu0 /= n as f64;
    mut_ /= n as f64;

    // H = sum (xt_i - mu_t)(x0_i - mu_0)^T / n
    let mut h = Matrix3::zeros();
    for &i in indices {
        let a = to_na(xt.points[i]) - mut_;
        let b = to_na(x0.points[i]) - mu0;
        h += a * b.transpose();
    }
    h /= n as f64;

    let svd = h.svd(true, true);
    let sigma = svd.singular_values;
    if sigma[1] < 1e-12 * sigma[0].max(1e-300) || sigma[0] < 1e-15 {
        return Err(EstimationError::DegenerateInput(
            "rank-deficient covariance (collinear points)".into(),
        ));
    }
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant();
    let s = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let r = u * s * v_t;
    let t = mut_ - r * mu0;
    Ok((Rotation::from_matrix(&r), from_na(t)))
}

fn rmse_over(x0: &PointCloud, xt: &PointCloud, r: Rotation, t: Vec3, mask: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, keep) in mask.iter().enumerate() {
        if *keep {
            let d = r.apply(x0.points[i]) + t - xt.points[i];
            sum += d.dot(d);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Closed-form least-squares rigid alignment of two corresponded clouds,
/// scale fixed at 1. All points are treated as inliers.
pub fn umeyama_align(
    x0: &PointCloud,
    xt: &PointCloud,
) -> Result<RigidTransformEstimate, EstimationError> {
    if x0.len() != xt.len() {
        return Err(EstimationError::DegenerateInput(format!(
            "cloud sizes differ: {} vs {}",
            x0.len(),
            xt.len()
        )));
    }
    let indices: Vec<usize> = (0..x0.len()).collect();
    let (rotation, translation) = umeyama_subset(x0, xt, &indices)?;
    let inlier_mask = vec![true; x0.len()];
    let rmse = rmse_over(x0, xt, rotation, translation, &inlier_mask);
    Ok(RigidTransformEstimate { rotation, translation, inlier_mask, rmse })
}

/// Robust alignment: minimal-sample Umeyama hypotheses scored by inlier
/// count (ties broken by lower rmse), refit on the winning inlier set.
/// Deterministic for a fixed seed.
pub fn ransac_align(
    x0: &PointCloud,
    xt: &PointCloud,
    params: &RansacParams,
) -> Result<RigidTransformEstimate, EstimationError> {
    if x0.len() != xt.len() {
        return Err(EstimationError::DegenerateInput(format!(
            "cloud sizes differ: {} vs {}",
            x0.len(),
            xt.len()
        )));
    }
    let n = x0.len();
    if n < RANSAC_MIN_SAMPLE {
        return Err(EstimationError::DegenerateInput(format!("{n} correspondences, need >= 3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(usize, f64, Vec<bool>)> = None;
    for _ in 0..params.iterations.max(1) {
        // three distinct indices
        let mut sample = [0usize; 3];
        sample[0] = rng.gen_range(0..n);
        loop {
            sample[1] = rng.gen_range(0..n);
            if sample[1] != sample[0] {
                break;
            }
        }
        loop {
            sample[2] = rng.gen_range(0..n);
            if sample[2] != sample[0] && sample[2] != sample[1] {
                break;
            }
        }
        let Ok((r, t)) = umeyama_subset(x0, xt, &sample) else {
            continue;
        };
        let mut mask = vec![false; n];
        let mut count = 0usize;
        for (i, keep) in mask.iter_mut().enumerate() {
            let d = r.apply(x0.points[i]) + t - xt.points[i];
            if d.norm() < params.inlier_threshold {
                *keep = true;
                count += 1;
            }
        }
        let rmse = rmse_over(x0, xt, r, t, &mask);
        let better = match &best {
            None => true,
            Some((bc, br, _)) => count > *bc || (count == *bc && rmse < *br),
        };
        if better {
            best = Some((count, rmse, mask));
        }
    }
    let (count, _, mask) = best.ok_or(EstimationError::NoConsensus(0))?;
    if count < RANSAC_MIN_SAMPLE {
        return Err(EstimationError::NoConsensus(count));
    }
    let inliers: Vec<usize> = mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
    let (rotation, translation) = umeyama_subset(x0, xt, &inliers)?;
    let rmse = rmse_over(x0, xt, rotation, translation, &mask);
    Ok(RigidTransformEstimate { rotation, translation, inlier_mask: mask, rmse })
}

/// Infers joint kind, axis, and displacement from a rigid motion.
///
/// `reference` (the part centroid at frame 0) only selects which point on
/// the 1-D family of valid revolute pivots is reported.
pub fn infer_joint(est: &RigidTransformEstimate, reference: Vec3) -> JointEstimate {
    let (theta, axis) = est.rotation.angle_axis();
    let t = est.translation;
    if theta >= THETA_MIN {
        let axis_point = solve_pivot(est.rotation, t, axis, reference);
        JointEstimate {
            kind: JointMotionKind::Revolute,
            axis_dir: axis,
            axis_point,
            displacement: theta,
        }
    } else if t.norm() >= DISP_MIN {
        JointEstimate {
            kind: JointMotionKind::Prismatic,
            axis_dir: t.normalized(),
            axis_point: Vec3::ZERO,
            displacement: t.norm(),
        }
    } else {
        JointEstimate::STATIONARY
    }
}

/// Least-squares pivot of (I - R) c = t; the solution family is the axis
/// line, so the representative closest to `reference` is returned.
fn solve_pivot(r: Rotation, t: Vec3, axis: Vec3, reference: Vec3) -> Vec3 {
    let m = Matrix3::identity() - r.to_matrix();
    // minimum-norm least-squares solution via SVD pseudo-inverse
    let svd = m.svd(true, true);
    let c0 = svd.solve(&to_na(t), 1e-9).unwrap_or_else(|_| Vector3::zeros());
    let c0 = from_na(c0);
    // shift along the null space (the axis) toward the reference point
    c0 + axis * (reference - c0).dot(axis)
}

/// The two lines of the interactive-perception loop: robust alignment,
/// then geometric inference.
pub fn interactive_perception(
    x0: &PointCloud,
    xt: &PointCloud,
    params: &RansacParams,
    reference: Vec3,
) -> Result<JointEstimate, EstimationError> {
    let est = ransac_align(x0, xt, params)?;
    Ok(infer_joint(&est, reference))
}

/// Per-estimate error metrics against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseErrorReport {
    /// Geodesic rotation error, degrees.
    pub rotation_deg: f64,
    /// Translation error, meters.
    pub translation_m: f64,
    /// Axis direction angle error, degrees, sign-invariant.
    pub axis_deg: Option<f64>,
    /// Distance between axis lines, meters.
    pub axis_dist_m: Option<f64>,
    /// Displacement error in the joint's units.
    pub displacement: Option<f64>,
}

/// Errors between two rigid poses.
pub fn pose_errors(est: &Pose, truth: &Pose) -> PoseErrorReport {
    PoseErrorReport {
        rotation_deg: est.rotation.angle_to(truth.rotation).to_degrees(),
        translation_m: (est.translation - truth.translation).norm(),
        axis_deg: None,
        axis_dist_m: None,
        displacement: None,
    }
}

/// Errors between two joint estimates of the same kind.
pub fn joint_errors(
    est: &JointEstimate,
    truth: &JointEstimate,
) -> Result<PoseErrorReport, EstimationError> {
    if est.kind != truth.kind {
        return Err(EstimationError::KindMismatch(
            est.kind.name().into(),
            truth.kind.name().into(),
        ));
    }
    let axis_deg = if est.kind == JointMotionKind::Stationary {
        None
    } else {
        let c = est.axis_dir.dot(truth.axis_dir).abs().clamp(0.0, 1.0);
        Some(c.acos().to_degrees())
    };
    let axis_dist_m = if est.kind == JointMotionKind::Revolute {
        Some(line_distance(est.axis_point, est.axis_dir, truth.axis_point, truth.axis_dir))
    } else {
        None
    };
    let displacement = if est.kind == JointMotionKind::Stationary {
        None
    } else {
        // sign-invariant under the axis double cover
        let s_est = if est.axis_dir.dot(truth.axis_dir) < 0.0 {
            -est.displacement
        } else {
            est.displacement
        };
        Some((s_est - truth.displacement).abs())
    };
    Ok(PoseErrorReport {
        rotation_deg: 0.0,
        translation_m: 0.0,
        axis_deg,
        axis_dist_m,
        displacement,
    })
}

fn line_distance(p1: Vec3, d1: Vec3, p2: Vec3, d2: Vec3) -> f64 {
    let n = d1.cross(d2);
    let dp = p2 - p1;
    if n.norm() < 1e-9 {
        // parallel lines: point-to-line distance
        (dp - d1 * dp.dot(d1)).norm()
    } else {
        dp.dot(n).abs() / n.norm()
    }
}

/// Batch accuracy at the 5 degree / 5 cm and 10 degree / 10 cm thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub a5: f64,
    pub a10: f64,
}

pub fn accuracy(reports: &[PoseErrorReport]) -> AccuracyReport {
    if reports.is_empty() {
        return AccuracyReport { a5: 0.0, a10: 0.0 };
    }
    let n = reports.len() as f64;
    let a5 = reports
        .iter()
        .filter(|r| r.rotation_deg < 5.0 && r.translation_m < 0.05)
        .count() as f64
        / n;
    let a10 = reports
        .iter()
        .filter(|r| r.rotation_deg < 10.0 && r.translation_m < 0.10)
        .count() as f64
        / n;
    AccuracyReport { a5, a10 }
}
