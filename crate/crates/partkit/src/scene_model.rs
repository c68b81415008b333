//! Kinematic model of articulated objects: parts, joints, limits, latches,
//! effects, forward state evaluation, and point-cloud observation generation.

use crate::action_program::JointKind;
use crate::geometry::{sample_box_surface, OrientedBox, PointCloud, Pose, Rotation, Vec3};
use crate::part_grounding::GAPartClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("unknown part {0:?}")]
    UnknownPart(String),
}

/// One-DOF joint attached to a part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub kind: JointKind,
    /// Point on the axis line, object frame at zero state.
    pub axis_point: Vec3,
    /// Unit axis direction, object frame at zero state.
    pub axis_dir: Vec3,
    /// [lo, hi] in radians (revolute) or meters (prismatic), lo < hi.
    pub limits: [f64; 2],
    /// Direction of "distancing the part from the object": +1 or -1.
    pub open_sign: f64,
    /// Joint state returns to zero when the gripper releases the part
    /// (press-and-hold buttons and lids).
    #[serde(default)]
    pub spring_return: bool,
}

impl JointSpec {
    pub fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.limits[0], self.limits[1])
    }

    /// Rigid motion of this joint at state `s`, in the object frame.
    pub fn motion(&self, s: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => {
                let r = Rotation::from_angle_axis(s, self.axis_dir);
                // Trans(p) * Rot * Trans(-p)
                Pose::new(r, self.axis_point - r.apply(self.axis_point))
            }
            JointKind::Prismatic => Pose::from_translation(self.axis_dir * s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: String,
    /// Human-convention name, e.g. "door".
    pub semantic_name: String,
    pub gapart_class: GAPartClass,
    /// Bounding box in the object frame at zero state.
    pub box_: OrientedBox,
    /// None means the part is fixed to its parent.
    pub joint: Option<JointSpec>,
    pub parent: Option<String>,
    /// Grasp sites in the object frame at zero state.
    pub grasp_sites: Vec<Vec3>,
}

/// Locks one joint until another joint's state crosses a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatchRule {
    pub locked_joint: String,
    pub unlocking_joint: String,
    /// State value past which the lock releases; sign gives the crossing
    /// direction (negative threshold releases when state <= threshold).
    pub threshold: f64,
    /// State the locked joint jumps to on release.
    pub release_offset: f64,
}

impl LatchRule {
    pub fn crossed(&self, state: f64) -> bool {
        if self.threshold >= 0.0 {
            state >= self.threshold
        } else {
            state <= self.threshold
        }
    }
}

/// Sets a named flag once a joint's state crosses a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRule {
    pub trigger_joint: String,
    pub threshold: f64,
    pub effect: String,
}

impl EffectRule {
    pub fn crossed(&self, state: f64) -> bool {
        if self.threshold >= 0.0 {
            state >= self.threshold
        } else {
            state <= self.threshold
        }
    }
}

/// An articulated object: a forest of parts with joint states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulatedObject {
    pub name: String,
    pub parts: Vec<Part>,
    #[serde(default)]
    pub latches: Vec<LatchRule>,
    #[serde(default)]
    pub effects: Vec<EffectRule>,
    /// Current joint state per part id.
    pub states: BTreeMap<String, f64>,
    /// Latches already released (indices into `latches`).
    #[serde(default)]
    pub released_latches: BTreeSet<usize>,
}

impl ArticulatedObject {
    pub fn part(&self, id: &str) -> Result<&Part, SceneError> {
        self.parts
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| SceneError::UnknownPart(id.to_string()))
    }

    pub fn state(&self, id: &str) -> f64 {
        self.states.get(id).copied().unwrap_or(0.0)
    }

    pub fn set_state(&mut self, id: &str, s: f64) {
        self.states.insert(id.to_string(), s);
    }

    /// The part whose joint actually moves when `id` is actuated: the part
    /// itself if jointed, else the nearest jointed ancestor (fixed handles
    /// inherit the joint of their parent part).
    pub fn actuated_part<'a>(&'a self, id: &str) -> Result<&'a Part, SceneError> {
        let mut part = self.part(id)?;
        loop {
            if part.joint.is_some() {
                return Ok(part);
            }
            match &part.parent {
                Some(parent) => part = self.part(parent)?,
                None => return Ok(part),
            }
        }
    }

    /// True while `id`'s joint is held locked by an unreleased latch.
    pub fn is_latched(&self, id: &str) -> bool {
        self.latches.iter().enumerate().any(|(i, l)| {
            l.locked_joint == id && !self.released_latches.contains(&i)
        })
    }

    /// Releases any latch whose unlocking joint has crossed its threshold;
    /// returns the ids of joints that jumped to their release offset.
    pub fn update_latches(&mut self) -> Vec<String> {
        let mut released = Vec::new();
        for i in 0..self.latches.len() {
            if self.released_latches.contains(&i) {
                continue;
            }
            let l = self.latches[i].clone();
            if l.crossed(self.state(&l.unlocking_joint)) {
                self.released_latches.insert(i);
                let jump = if let Ok(part) = self.part(&l.locked_joint) {
                    part.joint.as_ref().map(|j| j.clamp(l.release_offset)).unwrap_or(l.release_offset)
                } else {
                    l.release_offset
                };
                self.set_state(&l.locked_joint, jump);
                released.push(l.locked_joint.clone());
            }
        }
        released
    }

    /// Names of effects whose trigger condition currently holds.
    pub fn active_effects(&self) -> Vec<String> {
        self.effects
            .iter()
            .filter(|e| e.crossed(self.state(&e.trigger_joint)))
            .map(|e| e.effect.clone())
            .collect()
    }

    /// Counts of each actionable part class.
    pub fn part_histogram(&self) -> BTreeMap<GAPartClass, usize> {
        let mut hist = BTreeMap::new();
        for p in &self.parts {
            *hist.entry(p.gapart_class).or_insert(0) += 1;
        }
        hist
    }

    /// World motion applied to a part by its own joint and all ancestors.
    pub fn part_motion(&self, id: &str) -> Result<Pose, SceneError> {
        let part = self.part(id)?;
        let own = match &part.joint {
            Some(j) => j.motion(self.state(id)),
            None => Pose::IDENTITY,
        };
        match &part.parent {
            Some(parent) => {
                if parent == id {
                    return Err(SceneError::InvariantViolation(format!("part {id:?} is its own parent")));
                }
                Ok(self.part_motion(parent)?.compose(own))
            }
            None => Ok(own),
        }
    }

    /// World pose of every part's box frame at the current states.
    pub fn forward_state(&self) -> Result<BTreeMap<String, Pose>, SceneError> {
        let mut out = BTreeMap::new();
        for p in &self.parts {
            let pose = self.part_motion(&p.id)?.compose(p.box_.frame());
            out.insert(p.id.clone(), pose);
        }
        Ok(out)
    }

    /// A part's box as placed at the current states.
    pub fn part_box_now(&self, id: &str) -> Result<OrientedBox, SceneError> {
        let part = self.part(id)?;
        let motion = self.part_motion(id)?;
        Ok(OrientedBox::new(
            motion.apply(part.box_.center),
            part.box_.half_extents,
            motion.rotation.compose(part.box_.rotation),
        ))
    }

    /// A part's grasp sites in world coordinates at the current states.
    pub fn grasp_sites_now(&self, id: &str) -> Result<Vec<Vec3>, SceneError> {
        let part = self.part(id)?;
        let motion = self.part_motion(id)?;
        Ok(part.grasp_sites.iter().map(|s| motion.apply(*s)).collect())
    }

    /// Axis-aligned bound of all part boxes at zero state, used as the
    /// outlier sampling volume for observations.
    fn scene_bound(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.parts {
            let r = p.box_.half_extents.norm();
            let c = p.box_.center;
            lo = Vec3::new(lo.x.min(c.x - r), lo.y.min(c.y - r), lo.z.min(c.z - r));
            hi = Vec3::new(hi.x.max(c.x + r), hi.y.max(c.y + r), hi.z.max(c.z + r));
        }
        if !lo.is_finite() || !hi.is_finite() {
            (Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0))
        } else {
            (lo, hi)
        }
    }

    /// Samples a point cloud on a part's surface at its current pose.
    ///
    /// The same `seed` produces identically indexed base points across
    /// calls at different states, so clouds taken at two states are
    /// index-corresponded. Gaussian noise of `noise_sigma` is added per
    /// point; `outlier_frac` of the indices are replaced by uniform samples
    /// in the scene bounding volume.
    pub fn observe_part(
        &self,
        id: &str,
        n: usize,
        noise_sigma: f64,
        outlier_frac: f64,
        seed: u64,
    ) -> Result<PointCloud, SceneError> {
        let part = self.part(id)?;
        assert!(n >= 3, "need at least 3 observation points");
        assert!((0.0..1.0).contains(&outlier_frac));
        let base = sample_box_surface(&part.box_, n, seed);
        let motion = self.part_motion(id)?;
        let mut cloud = base.transformed(motion);

        // noise and outliers come from a separate stream so the base
        // sampling stays state-independent
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5_5a5a_dead_beef);
        if noise_sigma > 0.0 {
            let normal = Normal::new(0.0, noise_sigma).unwrap();
            for p in cloud.points.iter_mut() {
                *p = *p
                    + Vec3::new(
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    );
            }
        }
        let n_out = (outlier_frac * n as f64).floor() as usize;
        if n_out > 0 {
            let (lo, hi) = self.scene_bound();
            // partial Fisher-Yates picks exactly n_out distinct indices
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..n_out {
                let j = rng.gen_range(i..n);
                idx.swap(i, j);
            }
            for &i in idx.iter().take(n_out) {
                cloud.points[i] = Vec3::new(
                    rng.gen_range(lo.x..hi.x),
                    rng.gen_range(lo.y..hi.y),
                    rng.gen_range(lo.z..hi.z),
                );
            }
        }
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let mut seen = BTreeSet::new();
        for p in &self.parts {
            if !seen.insert(p.id.clone()) {
                return Err(SceneError::InvariantViolation(format!("duplicate part id {:?}", p.id)));
            }
            let h = p.box_.half_extents;
            if !(h.x > 0.0 && h.y > 0.0 && h.z > 0.0) {
                return Err(SceneError::InvariantViolation(format!(
                    "part {:?}: half extents must be strictly positive",
                    p.id
                )));
            }
            if let Some(j) = &p.joint {
                if (j.axis_dir.norm() - 1.0).abs() > 1e-6 {
                    return Err(SceneError::InvariantViolation(format!(
                        "part {:?}: joint axis must be unit length",
                        p.id
                    )));
                }
                if j.limits[0] >= j.limits[1] {
                    return Err(SceneError::InvariantViolation(format!(
                        "part {:?}: joint limits lo >= hi",
                        p.id
                    )));
                }
                if j.open_sign != 1.0 && j.open_sign != -1.0 {
                    return Err(SceneError::InvariantViolation(format!(
                        "part {:?}: open_sign must be +1 or -1",
                        p.id
                    )));
                }
            }
        }
        // parent links resolve and form a forest
        for p in &self.parts {
            let mut hops = 0;
            let mut cur = p;
            while let Some(parent) = &cur.parent {
                cur = self.part(parent).map_err(|_| {
                    SceneError::InvariantViolation(format!(
                        "part {:?}: dangling parent {:?}",
                        p.id, parent
                    ))
                })?;
                hops += 1;
                if hops > self.parts.len() {
                    return Err(SceneError::InvariantViolation(format!(
                        "cycle in parent graph through part {:?}",
                        p.id
                    )));
                }
            }
        }
        for (id, s) in &self.states {
            let part = self.part(id).map_err(|_| {
                SceneError::InvariantViolation(format!("state for unknown part {id:?}"))
            })?;
            match &part.joint {
                Some(j) => {
                    if *s < j.limits[0] - 1e-12 || *s > j.limits[1] + 1e-12 {
                        return Err(SceneError::InvariantViolation(format!(
                            "part {id:?}: state {s} outside limits {:?}",
                            j.limits
                        )));
                    }
                }
                None => {
                    if *s != 0.0 {
                        return Err(SceneError::InvariantViolation(format!(
                            "part {id:?} is fixed but has nonzero state"
                        )));
                    }
                }
            }
        }
        for l in &self.latches {
            if l.locked_joint == l.unlocking_joint {
                return Err(SceneError::InvariantViolation(
                    "latch locks its own unlocking joint".into(),
                ));
            }
            self.part(&l.locked_joint).map_err(|_| {
                SceneError::InvariantViolation(format!("latch references missing part {:?}", l.locked_joint))
            })?;
            self.part(&l.unlocking_joint).map_err(|_| {
                SceneError::InvariantViolation(format!(
                    "latch references missing part {:?}",
                    l.unlocking_joint
                ))
            })?;
            if l.release_offset < 0.0 {
                return Err(SceneError::InvariantViolation("latch release_offset < 0".into()));
            }
        }
        for e in &self.effects {
            self.part(&e.trigger_joint).map_err(|_| {
                SceneError::InvariantViolation(format!(
                    "effect references missing part {:?}",
                    e.trigger_joint
                ))
            })?;
        }
        Ok(())
    }
}

/// Scene JSON document as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneDoc {
    name: String,
    parts: Vec<PartDoc>,
    #[serde(default)]
    latches: Vec<LatchRule>,
    #[serde(default)]
    effects: Vec<EffectRule>,
    #[serde(default)]
    initial_states: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PartDoc {
    id: String,
    semantic_name: String,
    gapart_class: GAPartClass,
    #[serde(rename = "box")]
    box_: OrientedBox,
    #[serde(default, deserialize_with = "deserialize_joint")]
    joint: Option<JointSpec>,
    #[serde(default)]
    parent: Option<String>,
    #[serde(default)]
    grasp_sites: Vec<Vec3>,
}

// accepts either a JointSpec object or the string "fixed"
fn deserialize_joint<'de, D>(d: D) -> Result<Option<JointSpec>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error;
    let value = serde_json::Value::deserialize(d)?;
    match value {
        serde_json::Value::Null => Ok(None),
        serde_json::Value::String(s) if s == "fixed" => Ok(None),
        other => serde_json::from_value(other).map(Some).map_err(D::Error::custom),
    }
}

/// Loads and validates a scene document.
pub fn load_scene(json: &str) -> Result<ArticulatedObject, SceneError> {
    let doc: SceneDoc = serde_json::from_str(json).map_err(|e| SceneError::Schema(e.to_string()))?;
    let obj = ArticulatedObject {
        name: doc.name,
        parts: doc
            .parts
            .into_iter()
            .map(|p| Part {
                id: p.id,
                semantic_name: p.semantic_name,
                gapart_class: p.gapart_class,
                box_: p.box_,
                joint: p.joint,
                parent: p.parent,
                grasp_sites: p.grasp_sites,
            })
            .collect(),
        latches: doc.latches,
        effects: doc.effects,
        states: doc.initial_states,
        released_latches: BTreeSet::new(),
    };
    obj.validate()?;
    Ok(obj)
}

pub fn load_scene_file(path: &std::path::Path) -> Result<ArticulatedObject, SceneError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SceneError::Schema(format!("{}: {e}", path.display())))?;
    load_scene(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::joint_estimation::{interactive_perception, JointMotionKind, RansacParams};
    use approx::assert_abs_diff_eq;

    fn door_scene() -> ArticulatedObject {
        // z hinge through the origin, door box centered at (0.5, 0, 0)
        ArticulatedObject {
            name: "door-test".into(),
            parts: vec![Part {
                id: "door".into(),
                semantic_name: "door".into(),
                gapart_class: GAPartClass::HingeDoor,
                box_: OrientedBox::new(
                    Vec3::new(0.5, 0.0, 0.0),
                    Vec3::new(0.45, 0.02, 0.3),
                    Rotation::IDENTITY,
                ),
                joint: Some(JointSpec {
                    kind: JointKind::Revolute,
                    axis_point: Vec3::ZERO,
                    axis_dir: Vec3::new(0.0, 0.0, 1.0),
                    limits: [0.0, std::f64::consts::FRAC_PI_2 * 2.0],
                    open_sign: 1.0,
                    spring_return: false,
                }),
                parent: None,
                grasp_sites: vec![Vec3::new(0.9, 0.0, 0.0)],
            }],
            latches: vec![],
            effects: vec![],
            states: BTreeMap::new(),
            released_latches: BTreeSet::new(),
        }
    }

    #[test]
    fn forward_state_zero_is_rest() {
        let obj = door_scene();
        let poses = obj.forward_state().unwrap();
        let p = poses["door"];
        assert!((p.translation - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
        assert!(p.rotation.angle_to(Rotation::IDENTITY) < 1e-12);
    }

    #[test]
    fn forward_state_door_90_degrees() {
        let mut obj = door_scene();
        obj.set_state("door", std::f64::consts::FRAC_PI_2);
        let poses = obj.forward_state().unwrap();
        let c = poses["door"].translation;
        assert_abs_diff_eq!(c.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.y, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn forward_state_drawer_translation() {
        let mut obj = door_scene();
        obj.parts[0].joint = Some(JointSpec {
            kind: JointKind::Prismatic,
            axis_point: Vec3::ZERO,
            axis_dir: Vec3::new(1.0, 0.0, 0.0),
            limits: [0.0, 0.5],
            open_sign: 1.0,
            spring_return: false,
        });
        obj.set_state("door", 0.3);
        let poses = obj.forward_state().unwrap();
        assert_abs_diff_eq!(poses["door"].translation.x, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn observe_is_rigidly_consistent_across_states() {
        let mut obj = door_scene();
        let c0 = obj.observe_part("door", 200, 0.0, 0.0, 11).unwrap();
        obj.set_state("door", 0.6);
        let c1 = obj.observe_part("door", 200, 0.0, 0.0, 11).unwrap();
        let motion = obj.part_motion("door").unwrap();
        for (a, b) in c0.points.iter().zip(&c1.points) {
            assert!((motion.apply(*a) - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn observe_noise_matches_sigma() {
        let obj = door_scene();
        let clean = obj.observe_part("door", 500, 0.0, 0.0, 3).unwrap();
        let noisy = obj.observe_part("door", 500, 0.001, 0.0, 3).unwrap();
        let mut dev = Vec::new();
        for (a, b) in clean.points.iter().zip(&noisy.points) {
            let d = *b - *a;
            dev.push(d.x);
            dev.push(d.y);
            dev.push(d.z);
        }
        let mean: f64 = dev.iter().sum::<f64>() / dev.len() as f64;
        let var: f64 = dev.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (dev.len() - 1) as f64;
        let std = var.sqrt();
        assert!((0.0008..=0.0012).contains(&std), "sample std {std}");
    }

    #[test]
    fn observe_outlier_count_is_exact() {
        let obj = door_scene();
        let clean = obj.observe_part("door", 200, 0.0, 0.0, 4).unwrap();
        let dirty = obj.observe_part("door", 200, 0.0, 0.3, 4).unwrap();
        let moved = clean
            .points
            .iter()
            .zip(&dirty.points)
            .filter(|(a, b)| (**a - **b).norm() > 1e-12)
            .count();
        assert_eq!(moved, 60);
        // determinism
        assert_eq!(dirty, obj.observe_part("door", 200, 0.0, 0.3, 4).unwrap());
    }

    #[test]
    fn cross_module_oracle_recovers_joint_spec() {
        // relative motion between two states feeds joint estimation, which
        // must recover the configured axis and state delta
        let mut obj = door_scene();
        let c0 = obj.observe_part("door", 500, 0.0, 0.0, 21).unwrap();
        obj.set_state("door", 30f64.to_radians());
        let ct = obj.observe_part("door", 500, 0.0, 0.0, 21).unwrap();
        let est = interactive_perception(&c0, &ct, &RansacParams::default(), c0.centroid()).unwrap();
        assert_eq!(est.kind, JointMotionKind::Revolute);
        let spec = obj.parts[0].joint.clone().unwrap();
        let aligned = est.aligned_to(spec.axis_dir);
        assert!(aligned.axis_dir.dot(spec.axis_dir) > 1.0 - 1e-6);
        assert_abs_diff_eq!(aligned.displacement, 30f64.to_radians(), epsilon = 1e-9);
        // axis line passes within 1e-6 of the configured axis point
        let dp = aligned.axis_point - spec.axis_point;
        let off_axis = dp - spec.axis_dir * dp.dot(spec.axis_dir);
        assert!(off_axis.norm() < 1e-6);
    }

    #[test]
    fn histogram_counts_classes() {
        let obj = fixtures::load("microwave_latched.json").unwrap();
        let hist = obj.part_histogram();
        assert_eq!(hist[&GAPartClass::HingeDoor], 1);
        assert_eq!(hist[&GAPartClass::LineFixedHandle], 1);
        assert_eq!(hist[&GAPartClass::SliderButton], 1);
    }

    #[test]
    fn microwave_latched_fixture_loads_locked() {
        let obj = fixtures::load("microwave_latched.json").unwrap();
        assert!(obj.is_latched("door"));
        assert_eq!(obj.state("door"), 0.0);
    }

    #[test]
    fn bad_limits_rejected() {
        let json = r#"{
            "name": "bad",
            "parts": [{
                "id": "d", "semantic_name": "door", "gapart_class": "hinge_door",
                "box": {"center": [0,0,0], "half_extents": [0.1,0.1,0.1], "rotation": [1,0,0,0]},
                "joint": {"kind": "revolute", "axis_point": [0,0,0], "axis_dir": [0,0,1],
                          "limits": [1.0, 1.0], "open_sign": 1.0}
            }]
        }"#;
        assert!(matches!(load_scene(json), Err(SceneError::InvariantViolation(_))));
    }

    #[test]
    fn dangling_latch_rejected() {
        let json = r#"{
            "name": "bad",
            "parts": [{
                "id": "d", "semantic_name": "door", "gapart_class": "hinge_door",
                "box": {"center": [0,0,0], "half_extents": [0.1,0.1,0.1], "rotation": [1,0,0,0]},
                "joint": "fixed"
            }],
            "latches": [{"locked_joint": "d", "unlocking_joint": "ghost", "threshold": 0.1, "release_offset": 0.0}]
        }"#;
        assert!(matches!(load_scene(json), Err(SceneError::InvariantViolation(_))));
    }

    #[test]
    fn malformed_json_is_schema_error() {
        assert!(matches!(load_scene("{"), Err(SceneError::Schema(_))));
    }
}
