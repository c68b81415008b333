//! Kinematic episode execution: a free-flying gripper, a grasp/constraint
//! model that projects commanded motion onto the held part's joint DOF,
//! and the 90%-of-motion-range success judgment.

use crate::geometry::{PointCloud, Pose, Vec3};
use crate::scene_model::{ArticulatedObject, SceneError};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("already holding part {0:?}")]
    AlreadyHolding(String),
    #[error("no part is held")]
    NotHolding,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub max_steps: usize,
    /// Contact radius for grasping (and button pressing), meters.
    pub grasp_radius: f64,
    /// Off-DOF displacement beyond which the grasp breaks, meters.
    pub slip_tolerance: f64,
    /// Fraction of the target motion range counted as success.
    pub success_fraction: f64,
    /// Trailing steps inspected for the stable-stop check.
    pub stability_window: usize,
    /// Maximum state spread over the window still counted as stable.
    pub stability_eps: f64,
    /// Observation settings for interactive perception hooks.
    pub obs_points: usize,
    pub obs_noise_sigma: f64,
    pub obs_outlier_frac: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_steps: 1000,
            grasp_radius: 0.03,
            slip_tolerance: 0.02,
            success_fraction: 0.9,
            stability_window: 10,
            stability_eps: 1e-4,
            obs_points: 500,
            obs_noise_sigma: 0.0,
            obs_outlier_frac: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    Latch,
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum StepOutcome {
    Ok,
    Blocked(BlockReason),
    Slipped,
    GraspFailed,
}

/// Per-step trajectory result: the outcome plus an optional
/// (initial, current) observation pair of the held part.
pub type TrajectoryStepResult = (StepOutcome, Option<(PointCloud, PointCloud)>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: usize,
    pub event: String,
    pub outcome: Option<StepOutcome>,
    pub states: BTreeMap<String, f64>,
}

/// Mutable state of one execution episode. Episodes clone the scene; no
/// shared mutation.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub object: ArticulatedObject,
    pub gripper: Pose,
    pub held_part: Option<String>,
    pub step: usize,
    pub effect_flags: BTreeSet<String>,
    pub event_log: Vec<EventRecord>,
    pub config: SimConfig,
    pub obs_seed: u64,
    initial_states: BTreeMap<String, f64>,
}

impl EpisodeState {
    pub fn new(object: ArticulatedObject, config: SimConfig, obs_seed: u64) -> Self {
        let mut initial_states = BTreeMap::new();
        for p in &object.parts {
            initial_states.insert(p.id.clone(), object.state(&p.id));
        }
        EpisodeState {
            object,
            gripper: Pose::IDENTITY,
            held_part: None,
            step: 0,
            effect_flags: BTreeSet::new(),
            event_log: Vec::new(),
            config,
            obs_seed,
            initial_states,
        }
    }

    pub fn initial_state(&self, part_id: &str) -> f64 {
        self.initial_states.get(part_id).copied().unwrap_or(0.0)
    }

    fn log(&mut self, event: &str, outcome: Option<StepOutcome>) {
        self.event_log.push(EventRecord {
            step: self.step,
            event: event.to_string(),
            outcome,
            states: self.object.states.clone(),
        });
    }

    /// Attempts to grasp (or press-contact) a part. Succeeds iff the
    /// gripper position is within `grasp_radius` of one of the part's
    /// grasp sites at its current pose.
    pub fn grasp(&mut self, part_id: &str) -> Result<StepOutcome, SimError> {
        if let Some(held) = &self.held_part {
            return Err(SimError::AlreadyHolding(held.clone()));
        }
        let sites = self.object.grasp_sites_now(part_id)?;
        let within = sites
            .iter()
            .any(|s| (*s - self.gripper.translation).norm() <= self.config.grasp_radius);
        if within {
            self.held_part = Some(part_id.to_string());
            self.log(&format!("grasp {part_id}"), Some(StepOutcome::Ok));
            Ok(StepOutcome::Ok)
        } else {
            self.log(&format!("grasp {part_id}"), Some(StepOutcome::GraspFailed));
            Ok(StepOutcome::GraspFailed)
        }
    }

    /// Opens the gripper. Spring-return joints snap back to zero state.
    pub fn release(&mut self) {
        if let Some(held) = self.held_part.take() {
            if let Ok(part) = self.object.actuated_part(&held) {
                let id = part.id.clone();
                if part.joint.as_ref().map(|j| j.spring_return).unwrap_or(false) {
                    self.object.set_state(&id, 0.0);
                    self.log(&format!("spring return {id}"), None);
                }
            }
            self.log(&format!("release {held}"), None);
        }
    }

    /// Advances one step toward a commanded gripper pose. The commanded
    /// displacement is projected onto the held part's joint DOF; the joint
    /// advances by the projected amount subject to limits and latches.
    pub fn step(&mut self, commanded: Pose) -> Result<StepOutcome, SimError> {
        let held = self.held_part.clone().ok_or(SimError::NotHolding)?;
        self.step += 1;
        let actuated = self.object.actuated_part(&held)?.clone();
        let motion_eps = 1e-12;

        let Some(joint) = actuated.joint.clone() else {
            // part fixed to the world: any commanded motion is absorbed
            let moved = (commanded.translation - self.gripper.translation).norm();
            let outcome = if moved > motion_eps {
                StepOutcome::Blocked(BlockReason::Limit)
            } else {
                StepOutcome::Ok
            };
            self.log("step", Some(outcome));
            return Ok(outcome);
        };

        // axis in world frame: ancestors' motion applied, own joint excluded
        let parent_motion = match &actuated.parent {
            Some(parent) => self.object.part_motion(parent)?,
            None => Pose::IDENTITY,
        };
        let axis_point = parent_motion.apply(joint.axis_point);
        let axis_dir = parent_motion.rotation.apply(joint.axis_dir);

        let p = self.gripper.translation;
        let q = commanded.translation;
        let advance = match joint.kind {
            crate::action_program::JointKind::Revolute => {
                let a = perp(p - axis_point, axis_dir);
                let b = perp(q - axis_point, axis_dir);
                if a.norm() < 1e-9 || b.norm() < 1e-9 {
                    0.0
                } else {
                    let cos = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
                    let sin = a.cross(b).dot(axis_dir) / (a.norm() * b.norm());
                    sin.atan2(cos)
                }
            }
            crate::action_program::JointKind::Prismatic => (q - p).dot(axis_dir),
        };

        let wants_motion = (q - p).norm() > motion_eps || advance.abs() > motion_eps;

        if self.object.is_latched(&actuated.id) {
            if wants_motion {
                self.log("step", Some(StepOutcome::Blocked(BlockReason::Latch)));
                return Ok(StepOutcome::Blocked(BlockReason::Latch));
            }
            self.log("step", Some(StepOutcome::Ok));
            return Ok(StepOutcome::Ok);
        }

        let s_old = self.object.state(&actuated.id);
        let s_new = joint.clamp(s_old + advance);
        let applied = s_new - s_old;
        if advance.abs() > motion_eps && applied.abs() < motion_eps {
            self.log("step", Some(StepOutcome::Blocked(BlockReason::Limit)));
            return Ok(StepOutcome::Blocked(BlockReason::Limit));
        }

        // follow the part: gripper pose tracks the joint motion
        let old_motion = self.object.part_motion(&held)?;
        self.object.set_state(&actuated.id, s_new);
        let new_motion = self.object.part_motion(&held)?;
        let followed = new_motion.compose(old_motion.inverse().compose(self.gripper));

        let residual = (commanded.translation - followed.translation).norm();
        if residual > self.config.slip_tolerance {
            // off-DOF pull: grasp breaks, the joint snaps back
            self.object.set_state(&actuated.id, s_old);
            self.held_part = None;
            self.gripper = commanded;
            self.log("step", Some(StepOutcome::Slipped));
            return Ok(StepOutcome::Slipped);
        }

        self.gripper = followed;
        for released in self.object.update_latches() {
            self.log(&format!("latch released {released}"), None);
        }
        for effect in self.object.active_effects() {
            if self.effect_flags.insert(effect.clone()) {
                self.log(&format!("effect {effect}"), None);
            }
        }
        self.log("step", Some(StepOutcome::Ok));
        Ok(StepOutcome::Ok)
    }

    /// Idles for `n` steps with no commanded motion; pads the event log so
    /// the stable-stop window reflects the final rest state.
    pub fn idle(&mut self, n: usize) {
        for _ in 0..n {
            self.step += 1;
            self.log("idle", Some(StepOutcome::Ok));
        }
    }

    fn observe_held(&self) -> Result<PointCloud, SimError> {
        let held = self.held_part.as_ref().ok_or(SimError::NotHolding)?;
        let actuated = self.object.actuated_part(held)?.id.clone();
        Ok(self.object.observe_part(
            &actuated,
            self.config.obs_points,
            self.config.obs_noise_sigma,
            self.config.obs_outlier_frac,
            self.obs_seed,
        )?)
    }

    /// Steps through a trajectory's waypoints. Every `observe_every` steps
    /// an (initial, current) cloud pair of the held part is emitted with
    /// index correspondence. Stops early when the grasp slips.
    pub fn run_trajectory(
        &mut self,
        traj: &Trajectory,
        observe_every: usize,
    ) -> Result<Vec<TrajectoryStepResult>, SimError> {
        assert!(observe_every >= 1);
        if self.held_part.is_none() {
            return Err(SimError::NotHolding);
        }
        let initial_cloud = self.observe_held()?;
        let mut out = Vec::new();
        for (i, w) in traj.waypoints.iter().enumerate().skip(1) {
            let outcome = self.step(w.pose)?;
            let obs = if i % observe_every == 0 {
                Some((initial_cloud.clone(), self.observe_held()?))
            } else {
                None
            };
            let slipped = outcome == StepOutcome::Slipped;
            out.push((outcome, if slipped { None } else { obs }));
            if slipped {
                break;
            }
        }
        Ok(out)
    }

    /// The benchmark success rule: the target part moved at least
    /// `success_fraction` of the target motion within `max_steps` steps and
    /// came to a stable stop at the end.
    pub fn check_success(&self, target_part: &str, delta_target: f64) -> Result<bool, SimError> {
        let part = self.object.actuated_part(target_part)?;
        let id = part.id.clone();
        let moved = (self.object.state(&id) - self.initial_state(&id)).abs();
        let enough = moved >= self.config.success_fraction * delta_target.abs();
        let in_time = self.step <= self.config.max_steps;
        let window = self.config.stability_window;
        let stable = if self.event_log.len() < 2 {
            true
        } else {
            let tail = &self.event_log[self.event_log.len().saturating_sub(window)..];
            let vals: Vec<f64> = tail.iter().map(|r| r.states.get(&id).copied().unwrap_or(0.0)).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo < self.config.stability_eps
        };
        Ok(enough && in_time && stable)
    }

    /// Serializes the event log as JSON Lines, one event per line.
    pub fn event_log_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.event_log {
            out.push_str(&serde_json::to_string(r).unwrap());
            out.push('\n');
        }
        out
    }
}

fn perp(v: Vec3, axis: Vec3) -> Vec3 {
    v - axis * v.dot(axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::joint_estimation::{interactive_perception, JointMotionKind, RansacParams};
    use crate::trajectory::{generate_trajectory, select_grasp};
    use approx::assert_abs_diff_eq;

    fn door_episode(fixture: &str) -> EpisodeState {
        let obj = fixtures::load(fixture).unwrap();
        EpisodeState::new(obj, SimConfig::default(), 7)
    }

    fn grasp_door(ep: &mut EpisodeState) -> Pose {
        let part = ep.object.part("door").unwrap().clone();
        let grasp = select_grasp(&part, &ep.object).unwrap();
        ep.gripper = grasp;
        assert_eq!(ep.grasp("door").unwrap(), StepOutcome::Ok);
        grasp
    }

    #[test]
    fn grasp_at_site_succeeds_and_away_fails() {
        let mut ep = door_episode("microwave.json");
        let sites = ep.object.grasp_sites_now("door").unwrap();
        ep.gripper = Pose::from_translation(sites[0]);
        assert_eq!(ep.grasp("door").unwrap(), StepOutcome::Ok);

        let mut ep2 = door_episode("microwave.json");
        ep2.gripper = Pose::from_translation(sites[0] + Vec3::new(0.05, 0.0, 0.0));
        assert_eq!(ep2.grasp("door").unwrap(), StepOutcome::GraspFailed);
        assert!(matches!(ep2.grasp("door"), Ok(StepOutcome::GraspFailed)));
    }

    #[test]
    fn double_grasp_is_an_error() {
        let mut ep = door_episode("microwave.json");
        grasp_door(&mut ep);
        assert!(matches!(ep.grasp("door"), Err(SimError::AlreadyHolding(_))));
    }

    #[test]
    fn unlatched_door_follows_trajectory() {
        let mut ep = door_episode("microwave.json");
        let grasp = grasp_door(&mut ep);
        let joint = ep.object.part("door").unwrap().joint.clone().unwrap();
        let traj = generate_trajectory(grasp, &joint, 0.0, 60f64.to_radians()).unwrap();
        let results = ep.run_trajectory(&traj, 50).unwrap();
        assert!(results.iter().all(|(o, _)| *o == StepOutcome::Ok));
        assert_abs_diff_eq!(ep.object.state("door"), 60f64.to_radians(), epsilon = 1e-9);
        assert_eq!(results.iter().filter(|(_, obs)| obs.is_some()).count(), 5);
    }

    #[test]
    fn latched_door_blocks_and_clouds_stay_identical() {
        let mut ep = door_episode("microwave_latched.json");
        let grasp = grasp_door(&mut ep);
        let joint = ep.object.part("door").unwrap().joint.clone().unwrap();
        let traj = generate_trajectory(grasp, &joint, 0.0, 60f64.to_radians()).unwrap();
        let results = ep.run_trajectory(&traj, 50).unwrap();
        assert!(results
            .iter()
            .all(|(o, _)| *o == StepOutcome::Blocked(BlockReason::Latch)));
        assert_eq!(ep.object.state("door"), 0.0);
        let (c0, ct) = results.iter().find_map(|(_, obs)| obs.clone()).unwrap();
        assert_eq!(c0, ct);
        let est = interactive_perception(&c0, &ct, &RansacParams::default(), c0.centroid()).unwrap();
        assert_eq!(est.kind, JointMotionKind::Stationary);
    }

    #[test]
    fn button_press_releases_latch() {
        let mut ep = door_episode("microwave_latched.json");
        let button = ep.object.part("button").unwrap().clone();
        let grasp = select_grasp(&button, &ep.object).unwrap();
        ep.gripper = grasp;
        assert_eq!(ep.grasp("button").unwrap(), StepOutcome::Ok);
        let joint = button.joint.clone().unwrap();
        let extent = crate::trajectory::part_extent_along(&button, joint.axis_dir);
        let delta = crate::trajectory::delta_to_joint_units(-0.5, &joint, extent);
        let traj = generate_trajectory(grasp, &joint, 0.0, delta).unwrap();
        ep.run_trajectory(&traj, 1000).unwrap();
        ep.release();
        assert!(!ep.object.is_latched("door"));
        // door jumped slightly open on release
        assert!(ep.object.state("door") > 0.0);
        // and can now be pulled
        let dgrasp = grasp_door(&mut ep);
        let djoint = ep.object.part("door").unwrap().joint.clone().unwrap();
        let s0 = ep.object.state("door");
        let traj = generate_trajectory(dgrasp, &djoint, s0, 60f64.to_radians()).unwrap();
        let results = ep.run_trajectory(&traj, 1000).unwrap();
        assert!(results.iter().all(|(o, _)| *o == StepOutcome::Ok));
        assert_abs_diff_eq!(ep.object.state("door"), s0 + 60f64.to_radians(), epsilon = 1e-9);
    }

    #[test]
    fn handle_grasp_moves_parent_door() {
        let mut ep = door_episode("microwave.json");
        let handle = ep.object.part("handle").unwrap().clone();
        let grasp = select_grasp(&handle, &ep.object).unwrap();
        ep.gripper = grasp;
        assert_eq!(ep.grasp("handle").unwrap(), StepOutcome::Ok);
        let joint = ep.object.part("door").unwrap().joint.clone().unwrap();
        let traj = generate_trajectory(grasp, &joint, 0.0, 30f64.to_radians()).unwrap();
        let results = ep.run_trajectory(&traj, 1000).unwrap();
        assert!(results.iter().all(|(o, _)| *o == StepOutcome::Ok));
        assert_abs_diff_eq!(ep.object.state("door"), 30f64.to_radians(), epsilon = 1e-9);
    }

    #[test]
    fn off_dof_pull_slips() {
        let mut ep = door_episode("microwave.json");
        let grasp = grasp_door(&mut ep);
        // yank straight along the hinge axis, well past slip tolerance
        let commanded = Pose::from_translation(grasp.translation + Vec3::new(0.0, 0.0, 0.1));
        let outcome = ep.step(commanded).unwrap();
        assert_eq!(outcome, StepOutcome::Slipped);
        assert!(ep.held_part.is_none());
        assert_eq!(ep.object.state("door"), 0.0);
    }

    #[test]
    fn step_without_grasp_is_an_error() {
        let mut ep = door_episode("microwave.json");
        assert!(matches!(ep.step(Pose::IDENTITY), Err(SimError::NotHolding)));
    }

    #[test]
    fn only_held_joint_state_changes() {
        let mut ep = door_episode("microwave_latched.json");
        let before: Vec<f64> = ["button"].iter().map(|id| ep.object.state(id)).collect();
        let grasp = grasp_door(&mut ep);
        let joint = ep.object.part("door").unwrap().joint.clone().unwrap();
        let traj = generate_trajectory(grasp, &joint, 0.0, 0.3).unwrap();
        ep.run_trajectory(&traj, 1000).unwrap();
        let after: Vec<f64> = ["button"].iter().map(|id| ep.object.state(id)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn reversed_trajectory_returns_to_start() {
        let mut ep = door_episode("microwave.json");
        let grasp = grasp_door(&mut ep);
        let joint = ep.object.part("door").unwrap().joint.clone().unwrap();
        let fwd = generate_trajectory(grasp, &joint, 0.0, 0.8).unwrap();
        ep.run_trajectory(&fwd, 1000).unwrap();
        let end_pose = ep.gripper;
        let back = generate_trajectory(end_pose, &joint, ep.object.state("door"), -0.8).unwrap();
        ep.run_trajectory(&back, 1000).unwrap();
        assert_abs_diff_eq!(ep.object.state("door"), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn identical_runs_produce_identical_logs() {
        let run = || {
            let mut ep = door_episode("microwave.json");
            let grasp = grasp_door(&mut ep);
            let joint = ep.object.part("door").unwrap().joint.clone().unwrap();
            let traj = generate_trajectory(grasp, &joint, 0.0, 0.5).unwrap();
            ep.run_trajectory(&traj, 50).unwrap();
            ep.event_log_jsonl()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn success_rule_boundaries() {
        // engineered episodes: target 60 degrees, moved 90% / 89% / 95%-late
        let target = 60f64.to_radians();
        let build = |moved_frac: f64, step: usize| {
            let obj = fixtures::load("microwave.json").unwrap();
            let mut ep = EpisodeState::new(obj, SimConfig::default(), 0);
            ep.object.set_state("door", moved_frac * target);
            ep.step = step;
            // stable tail
            for s in 0..12 {
                ep.step = step.saturating_sub(12 - s);
                ep.log("idle", Some(StepOutcome::Ok));
            }
            ep.step = step;
            ep
        };
        assert!(build(0.90, 300).check_success("door", target).unwrap());
        assert!(!build(0.89, 300).check_success("door", target).unwrap());
        assert!(!build(0.95, 1001).check_success("door", target).unwrap());
    }

    #[test]
    fn unstable_tail_fails_success() {
        let target = 1.0;
        let obj = fixtures::load("microwave.json").unwrap();
        let mut ep = EpisodeState::new(obj, SimConfig::default(), 0);
        for s in 0..12 {
            ep.step = 100 + s;
            ep.object.set_state("door", 0.95 * target + s as f64 * 0.01);
            ep.log("step", Some(StepOutcome::Ok));
        }
        assert!(!ep.check_success("door", target).unwrap());
    }
}
