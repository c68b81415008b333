//! Heuristic trajectory generation: turns (grasp site, joint, state
//! change) into a timed gripper waypoint sequence. Revolute actions trace
//! a circular arc about the joint axis; prismatic actions slide along it.

use crate::action_program::JointKind;
use crate::geometry::{Pose, Rotation, Vec3};
use crate::part_grounding::GAPartClass;
use crate::scene_model::{ArticulatedObject, JointSpec, Part, SceneError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of interpolation intervals per action unit; trajectories carry
/// `STEPS + 1` waypoints at times i / STEPS.
pub const STEPS: usize = 250;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("delta must be nonzero")]
    ZeroDelta,
    #[error("part {0:?} has no grasp site and no handle child")]
    NoGraspSite(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GripperCommand {
    Closed,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Normalized time in [0, 1].
    #[serde(rename = "t")]
    pub time: f64,
    pub pose: Pose,
    pub gripper: GripperCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    /// Joint state change realized at the final waypoint, joint units.
    pub delta_applied: f64,
    /// True when the requested delta was truncated at a joint limit.
    pub clamped: bool,
}

/// Picks the grasp pose for a part: a handle child's center if one
/// exists, else the grasp site farthest from the joint axis (maximizing
/// the moment arm). The gripper approach axis is the part-face outward
/// normal at the site; the closing axis aligns with the part's shortest
/// box dimension.
pub fn select_grasp(part: &Part, obj: &ArticulatedObject) -> Result<Pose, TrajectoryError> {
    // prefer a handle child
    let handle = obj.parts.iter().find(|p| {
        p.parent.as_deref() == Some(part.id.as_str())
            && matches!(
                p.gapart_class,
                GAPartClass::LineFixedHandle | GAPartClass::RoundFixedHandle | GAPartClass::HingeHandle
            )
    });
    let (site_world, surface_part) = if let Some(h) = handle {
        let motion = obj.part_motion(&h.id)?;
        (motion.apply(h.box_.center), h)
    } else {
        let sites = obj.grasp_sites_now(&part.id)?;
        if sites.is_empty() {
            return Err(TrajectoryError::NoGraspSite(part.id.clone()));
        }
        let site = match &part.joint {
            Some(j) => {
                let motion = obj.part_motion(&part.id)?;
                let axis_point = motion.apply(j.axis_point);
                let axis_dir = motion.rotation.apply(j.axis_dir);
                *sites
                    .iter()
                    .max_by(|a, b| {
                        let da = point_axis_distance(**a, axis_point, axis_dir);
                        let db = point_axis_distance(**b, axis_point, axis_dir);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap()
            }
            None => sites[0],
        };
        (site, part)
    };
    Ok(grasp_pose_at(site_world, surface_part, obj)?)
}

fn point_axis_distance(p: Vec3, axis_point: Vec3, axis_dir: Vec3) -> f64 {
    let d = p - axis_point;
    (d - axis_dir * d.dot(axis_dir)).norm()
}

fn grasp_pose_at(site_world: Vec3, part: &Part, obj: &ArticulatedObject) -> Result<Pose, SceneError> {
    let box_now = obj.part_box_now(&part.id)?;
    let frame = box_now.frame();
    let local = frame.inverse().apply(site_world);
    let h = box_now.half_extents;
    // outward normal of the nearest box face
    let ratios = [local.x / h.x, local.y / h.y, local.z / h.z];
    let (axis_idx, _) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap();
    let sign = if ratios[axis_idx] >= 0.0 { 1.0 } else { -1.0 };
    let mut normal_local = Vec3::ZERO;
    match axis_idx {
        0 => normal_local.x = sign,
        1 => normal_local.y = sign,
        _ => normal_local.z = sign,
    }
    // closing axis: shortest box dimension, orthogonal to the normal
    let dims = [(h.x, 0usize), (h.y, 1), (h.z, 2)];
    let mut close_idx = dims
        .iter()
        .filter(|(_, i)| *i != axis_idx)
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
        .1;
    if close_idx == axis_idx {
        close_idx = (axis_idx + 1) % 3;
    }
    let mut close_local = Vec3::ZERO;
    match close_idx {
        0 => close_local.x = 1.0,
        1 => close_local.y = 1.0,
        _ => close_local.z = 1.0,
    }
    let z = frame.rotation.apply(normal_local);
    let x = frame.rotation.apply(close_local);
    let y = z.cross(x);
    let m = nalgebra::Matrix3::from_columns(&[
        nalgebra::Vector3::new(x.x, x.y, x.z),
        nalgebra::Vector3::new(y.x, y.y, y.z),
        nalgebra::Vector3::new(z.x, z.y, z.z),
    ]);
    Ok(Pose::new(Rotation::from_matrix(&m), site_world))
}

/// Generates a 251-waypoint trajectory moving a grasped part's joint from
/// `current_state` by `delta` joint units (radians or meters). The delta
/// is truncated at the joint limits with a warning rather than failing.
pub fn generate_trajectory(
    grasp: Pose,
    joint: &JointSpec,
    current_state: f64,
    delta: f64,
) -> Result<Trajectory, TrajectoryError> {
    if delta == 0.0 {
        return Err(TrajectoryError::ZeroDelta);
    }
    let end = joint.clamp(current_state + delta);
    let applied = end - current_state;
    let clamped = (applied - delta).abs() > 1e-12;
    if clamped {
        log::warn!(
            "trajectory delta {delta} truncated to {applied} by joint limits {:?}",
            joint.limits
        );
    }
    let mut waypoints = Vec::with_capacity(STEPS + 1);
    for i in 0..=STEPS {
        let frac = i as f64 / STEPS as f64;
        let s = applied * frac;
        let motion = match joint.kind {
            JointKind::Revolute => {
                let r = Rotation::from_angle_axis(s, joint.axis_dir);
                Pose::new(r, joint.axis_point - r.apply(joint.axis_point))
            }
            JointKind::Prismatic => Pose::from_translation(joint.axis_dir * s),
        };
        waypoints.push(Waypoint {
            time: frac,
            pose: motion.compose(grasp),
            gripper: if i == STEPS { GripperCommand::Open } else { GripperCommand::Closed },
        });
    }
    Ok(Trajectory { waypoints, delta_applied: applied, clamped })
}

/// Converts an action delta in program units (degrees for revolute,
/// bounding-box fraction for prismatic) to joint units, applying the
/// joint's opening-direction sign.
pub fn delta_to_joint_units(delta: f64, joint: &JointSpec, part_extent_along_axis: f64) -> f64 {
    let magnitude = match joint.kind {
        JointKind::Revolute => delta.to_radians(),
        JointKind::Prismatic => delta * part_extent_along_axis,
    };
    magnitude * joint.open_sign
}

/// Full extent (2 x half extent) of a part's box along the joint axis,
/// measured in the box frame at zero state.
pub fn part_extent_along(part: &Part, axis_dir: Vec3) -> f64 {
    let local = part.box_.rotation.inverse().apply(axis_dir);
    let h = part.box_.half_extents;
    2.0 * (local.x.abs() * h.x + local.y.abs() * h.y + local.z.abs() * h.z)
}

/// Trajectory JSON encoding: a flat waypoint array.
pub fn trajectory_to_json(traj: &Trajectory) -> serde_json::Value {
    serde_json::Value::Array(
        traj.waypoints
            .iter()
            .map(|w| {
                serde_json::json!({
                    "t": w.time,
                    "position": w.pose.translation,
                    "rotation": w.pose.rotation,
                    "gripper": match w.gripper {
                        GripperCommand::Closed => "closed",
                        GripperCommand::Open => "open",
                    },
                })
            })
            .collect(),
    )
}
