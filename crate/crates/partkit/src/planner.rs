//! Scene description, the pluggable instruction-interpreter backend, and
//! the global-planner loop: execute strategies unit by unit, watch the
//! estimated part motion, and decide to continue, transition, halt and
//! replan, or declare success.

use crate::action_program::{parse_strategies, ProgramError, Strategy, StrategySet};
use crate::joint_estimation::{interactive_perception, JointMotionKind, RansacParams};
use crate::part_grounding::{knn_ground, FeatureStore, GAPartClass, GroundingError};
use crate::scene_model::{ArticulatedObject, Part, SceneError};
use crate::simulator::{EpisodeState, SimConfig, StepOutcome};
use crate::trajectory::{
    delta_to_joint_units, generate_trajectory, part_extent_along, select_grasp, TrajectoryError,
};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("backend produced unparseable strategies: {0}")]
    BackendFormat(#[from] ProgramError),
    #[error("no strategy matched the instruction: {0}")]
    NoRuleMatched(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("no strategies to execute")]
    NoStrategies,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Part-enhanced scene description fed to the interpreter backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub text: String,
    pub histogram: BTreeMap<GAPartClass, usize>,
    pub object_name: String,
}

/// Builds the template sentence listing actionable part counts, classes in
/// fixed enum order with hyphenated names.
pub fn build_scene_description(obj: &ArticulatedObject) -> SceneDescription {
    let histogram = obj.part_histogram();
    let mut pieces: Vec<String> = Vec::new();
    for class in GAPartClass::ALL {
        if let Some(n) = histogram.get(&class) {
            pieces.push(format!("{} {}", n, class.hyphenated()));
        }
    }
    let text = match pieces.len() {
        0 => "There are no actionable parts on the object.".to_string(),
        1 => format!("There are {} on the object.", pieces[0]),
        _ => {
            let last = pieces.pop().unwrap();
            format!("There are {} and {} on the object.", pieces.join(", "), last)
        }
    };
    SceneDescription { text, histogram, object_name: obj.name.clone() }
}

/// Instruction-interpreter contract: turns an instruction plus context
/// into strategy text in the action-program format.
pub trait InterpreterBackend {
    fn interpret_text(
        &self,
        instruction: &str,
        description: &str,
        manual: Option<&str>,
        failure_note: Option<&str>,
    ) -> Result<String, PlannerError>;
}

/// One entry of the mock rule table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRule {
    pub instruction_regex: String,
    #[serde(default)]
    pub requires_classes: Vec<GAPartClass>,
    #[serde(default)]
    pub failure_regex: Option<String>,
    pub strategies: String,
}

/// Deterministic table-driven stand-in for the LLM interpreter: the first
/// matching rule wins. Rules with a failure pattern only match replanning
/// queries; rules without one only match initial queries.
pub struct MockBackend {
    rules: Vec<(MockRule, Regex, Option<Regex>)>,
}

impl MockBackend {
    pub fn new(rules: Vec<MockRule>) -> Result<Self, PlannerError> {
        let mut compiled = Vec::new();
        for rule in rules {
            let instr = Regex::new(&rule.instruction_regex)
                .map_err(|e| PlannerError::Backend(format!("bad instruction regex: {e}")))?;
            let fail = match &rule.failure_regex {
                Some(f) => Some(
                    Regex::new(f)
                        .map_err(|e| PlannerError::Backend(format!("bad failure regex: {e}")))?,
                ),
                None => None,
            };
            compiled.push((rule, instr, fail));
        }
        Ok(MockBackend { rules: compiled })
    }

    pub fn from_json(json: &str) -> Result<Self, PlannerError> {
        let rules: Vec<MockRule> =
            serde_json::from_str(json).map_err(|e| PlannerError::Backend(e.to_string()))?;
        MockBackend::new(rules)
    }
}

impl InterpreterBackend for MockBackend {
    fn interpret_text(
        &self,
        instruction: &str,
        description: &str,
        _manual: Option<&str>,
        failure_note: Option<&str>,
    ) -> Result<String, PlannerError> {
        for (rule, instr_re, fail_re) in &self.rules {
            if !instr_re.is_match(instruction) {
                continue;
            }
            match (fail_re, failure_note) {
                (Some(re), Some(note)) if re.is_match(note) => {}
                (None, None) => {}
                _ => continue,
            }
            // every required class must appear in the scene description
            if !rule
                .requires_classes
                .iter()
                .all(|c| description.contains(c.hyphenated()))
            {
                continue;
            }
            return Ok(rule.strategies.clone());
        }
        Err(PlannerError::NoRuleMatched(instruction.to_string()))
    }
}

/// Client for an external text-generation endpoint speaking the
/// {"prompt": ...} -> {"text": ...} JSON contract. Disabled by default and
/// never required by any test.
pub struct HttpBackend {
    pub endpoint: String,
}

impl InterpreterBackend for HttpBackend {
    fn interpret_text(
        &self,
        instruction: &str,
        description: &str,
        manual: Option<&str>,
        failure_note: Option<&str>,
    ) -> Result<String, PlannerError> {
        let mut prompt = format!("Instruction: {instruction}\nScene description: {description}\n");
        if let Some(m) = manual {
            prompt.push_str(&format!("User manual: {m}\n"));
        }
        if let Some(f) = failure_note {
            prompt.push_str(&format!("Failure: {f}\n"));
        }
        let body = serde_json::json!({ "prompt": prompt });
        let resp: serde_json::Value = crate::http::post_json(&self.endpoint, &body)
            .map_err(PlannerError::Backend)?;
        resp["text"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| PlannerError::Backend("response missing \"text\" field".into()))
    }
}

/// Observation handed to the decision rule after each perception update.
/// All quantities are in the current unit's joint units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerObservation {
    /// Commanded joint-space change for the current unit.
    pub gripper_target: f64,
    /// Commanded fraction realized so far, in joint units.
    pub gripper_progress: f64,
    /// Target part state change for the current unit.
    pub part_target: f64,
    /// Part state change estimated by interactive perception.
    pub part_estimate: f64,
    pub unit_index: usize,
    pub unit_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Continue,
    TransitionToNextStep,
    HaltAndReplan,
    Success,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Remaining fraction of the part target counted as done (the 90%
    /// rule's complement).
    pub done_frac: f64,
    /// Commanded fraction before discrepancy checking starts.
    pub check_frac: f64,
    /// Minimum part-follow ratio against gripper progress.
    pub follow_frac: f64,
    /// Steps between interactive-perception updates.
    pub observe_every: usize,
    /// Neighbors used for KNN part grounding.
    pub knn_k: usize,
    /// Hard cap on strategies executed per task.
    pub max_strategies: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            done_frac: 0.1,
            check_frac: 0.2,
            follow_frac: 0.5,
            observe_every: 50,
            knn_k: 5,
            max_strategies: 16,
        }
    }
}

/// Rule-based four-way decision. Pure in (obs, cfg); all rules are
/// ratio-based so scaling every quantity by c > 0 leaves the decision
/// unchanged.
pub fn decide(obs: &PlannerObservation, cfg: &PlannerConfig) -> Decision {
    let final_unit = obs.unit_index + 1 == obs.unit_count;
    if (obs.part_estimate - obs.part_target).abs() <= cfg.done_frac * obs.part_target.abs() {
        return if final_unit { Decision::Success } else { Decision::TransitionToNextStep };
    }
    // normalize onto the commanded direction
    let gp = obs.gripper_progress * obs.gripper_target.signum();
    let pe = obs.part_estimate * obs.part_target.signum();
    if gp >= cfg.check_frac * obs.gripper_target.abs() && pe < cfg.follow_frac * gp {
        return Decision::HaltAndReplan;
    }
    Decision::Continue
}

/// Decision contract so a scripted policy can substitute for the rule set.
pub trait DecisionPolicy {
    fn decide(&self, obs: &PlannerObservation) -> Decision;
}

pub struct RuleDecisionPolicy(pub PlannerConfig);

impl DecisionPolicy for RuleDecisionPolicy {
    fn decide(&self, obs: &PlannerObservation) -> Decision {
        decide(obs, &self.0)
    }
}

/// Feature context enabling the KNN grounding fallback during part
/// resolution: a reference store plus one pooled feature per scene part.
#[derive(Debug, Clone)]
pub struct GroundingContext {
    pub store: FeatureStore,
    pub part_features: BTreeMap<String, Vec<f64>>,
}

impl GroundingContext {
    /// Synthetic context: class-conditioned Gaussian features for every
    /// part of the object, matching the store's generative model.
    pub fn synthetic(obj: &ArticulatedObject, dimension: usize, sigma: f64, seed: u64) -> Self {
        let store = crate::part_grounding::synthetic_store(dimension, 8, sigma, seed);
        let mut part_features = BTreeMap::new();
        for (i, p) in obj.parts.iter().enumerate() {
            part_features.insert(
                p.id.clone(),
                crate::part_grounding::synthetic_feature(
                    p.gapart_class,
                    dimension,
                    sigma,
                    seed ^ (0x51ed_0000 + i as u64),
                ),
            );
        }
        GroundingContext { store, part_features }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    /// Ground-truth verdict from the simulator's success rule.
    pub success: bool,
    pub strategies_tried: usize,
    pub backend_calls: usize,
    pub decisions: Vec<Decision>,
    pub failure_notes: Vec<String>,
    pub effect_flags: Vec<String>,
    pub final_states: BTreeMap<String, f64>,
    pub event_log_jsonl: String,
}

fn synonym_classes(name: &str) -> Vec<GAPartClass> {
    let n = name.to_ascii_lowercase();
    if n.contains("drawer") {
        vec![GAPartClass::SliderDrawer]
    } else if n.contains("door") {
        vec![GAPartClass::HingeDoor]
    } else if n.contains("button") {
        vec![GAPartClass::SliderButton]
    } else if n.contains("handle") {
        vec![
            GAPartClass::LineFixedHandle,
            GAPartClass::RoundFixedHandle,
            GAPartClass::HingeHandle,
        ]
    } else if n.contains("lid") {
        vec![GAPartClass::HingeLid, GAPartClass::SliderLid]
    } else if n.contains("knob") {
        vec![GAPartClass::HingeKnob]
    } else {
        Vec::new()
    }
}

/// Resolves an action unit's part name to a scene part: exact semantic
/// name match, then the class synonym table, then KNN grounding over
/// part features when a grounding context is available.
pub fn resolve_part<'a>(
    obj: &'a ArticulatedObject,
    name: &str,
    grounding: Option<&GroundingContext>,
    k: usize,
) -> Result<&'a Part, GroundingError> {
    let lower = name.to_ascii_lowercase();
    if let Some(p) = obj.parts.iter().find(|p| p.semantic_name.to_ascii_lowercase() == lower) {
        return Ok(p);
    }
    let classes = synonym_classes(name);
    if !classes.is_empty() {
        if let Some(p) = obj.parts.iter().find(|p| classes.contains(&p.gapart_class)) {
            return Ok(p);
        }
    }
    if let Some(ctx) = grounding {
        let wanted: Vec<GAPartClass> = if classes.is_empty() {
            // match the requested token against hyphenated class names
            GAPartClass::ALL
                .iter()
                .copied()
                .filter(|c| {
                    let h = c.hyphenated().replace('-', " ");
                    lower.contains(&h) || h.contains(&lower)
                })
                .collect()
        } else {
            classes
        };
        for p in &obj.parts {
            if let Some(feat) = ctx.part_features.get(&p.id) {
                let k = k.min(ctx.store.len()).max(1);
                if let Ok((label, _)) = knn_ground(&ctx.store, feat, k) {
                    if wanted.contains(&label) {
                        return Ok(p);
                    }
                }
            }
        }
    }
    Err(GroundingError::Parse(format!("no part matching {name:?}")))
}

fn failure_verb(class: GAPartClass, delta: f64) -> &'static str {
    match class {
        GAPartClass::SliderButton => "pressing",
        GAPartClass::SliderLid | GAPartClass::HingeLid if delta < 0.0 => "pressing",
        _ => {
            if delta >= 0.0 {
                "opening"
            } else {
                "closing"
            }
        }
    }
}

enum UnitRun {
    Done,
    /// Success declared on the final unit; carries the actuated part and
    /// the joint-space target the unit executed.
    SuccessDeclared { part_id: String, target: f64 },
    Failed(String),
}

struct PlanRun<'a> {
    episode: EpisodeState,
    grounding: Option<&'a GroundingContext>,
    cfg: &'a PlannerConfig,
    seed: u64,
    decisions: Vec<Decision>,
}

impl PlanRun<'_> {
    fn run_unit(
        &mut self,
        unit: &crate::action_program::ActionUnit,
        unit_index: usize,
        unit_count: usize,
    ) -> UnitRun {
        let fail = |name: &str, class: GAPartClass, delta: f64| {
            UnitRun::Failed(format!(
                "It fails when {} the {}",
                failure_verb(class, delta),
                name.to_ascii_lowercase()
            ))
        };

        let (part_id, part_name, part_class) = match resolve_part(
            &self.episode.object,
            &unit.part_name,
            self.grounding,
            self.cfg.knn_k,
        ) {
            Ok(p) => (p.id.clone(), p.semantic_name.clone(), p.gapart_class),
            Err(_) => {
                return UnitRun::Failed(format!(
                    "It fails because no part named {} was found",
                    unit.part_name.to_ascii_lowercase()
                ))
            }
        };
        let actuated = match self.episode.object.actuated_part(&part_id) {
            Ok(p) => p.clone(),
            Err(_) => return fail(&part_name, part_class, unit.delta),
        };
        let Some(joint) = actuated.joint.clone() else {
            return fail(&part_name, part_class, unit.delta);
        };

        let part = self.episode.object.part(&part_id).unwrap().clone();
        let grasp = match select_grasp(&part, &self.episode.object) {
            Ok(g) => g,
            Err(TrajectoryError::NoGraspSite(_)) => return fail(&part_name, part_class, unit.delta),
            Err(_) => return fail(&part_name, part_class, unit.delta),
        };
        self.episode.gripper = grasp;
        match self.episode.grasp(&part_id) {
            Ok(StepOutcome::Ok) => {}
            _ => return fail(&part_name, part_class, unit.delta),
        }

        let extent = part_extent_along(&actuated, joint.axis_dir);
        let delta_joint = delta_to_joint_units(unit.delta, &joint, extent);
        let current = self.episode.object.state(&actuated.id);
        let traj = match generate_trajectory(grasp, &joint, current, delta_joint) {
            Ok(t) => t,
            Err(_) => {
                self.episode.release();
                return fail(&part_name, part_class, unit.delta);
            }
        };
        if traj.delta_applied.abs() < 1e-12 {
            self.episode.release();
            return fail(&part_name, part_class, unit.delta);
        }
        let target = traj.delta_applied;

        // world axis for sign alignment of the estimate, fixed at unit start
        let parent_motion = match &actuated.parent {
            Some(parent) => self.episode.object.part_motion(parent).unwrap_or(crate::geometry::Pose::IDENTITY),
            None => crate::geometry::Pose::IDENTITY,
        };
        let world_axis = parent_motion.rotation.apply(joint.axis_dir);

        let initial_cloud = match self.episode.object.observe_part(
            &actuated.id,
            self.episode.config.obs_points,
            self.episode.config.obs_noise_sigma,
            self.episode.config.obs_outlier_frac,
            self.episode.obs_seed,
        ) {
            Ok(c) => c,
            Err(_) => {
                self.episode.release();
                return fail(&part_name, part_class, unit.delta);
            }
        };
        let reference = initial_cloud.centroid();
        let steps = traj.waypoints.len() - 1;

        for (i, w) in traj.waypoints.iter().enumerate().skip(1) {
            match self.episode.step(w.pose) {
                Ok(StepOutcome::Slipped) => {
                    return fail(&part_name, part_class, unit.delta);
                }
                Ok(_) => {}
                Err(_) => {
                    self.episode.release();
                    return fail(&part_name, part_class, unit.delta);
                }
            }
            if i % self.cfg.observe_every != 0 && i != steps {
                continue;
            }
            let current_cloud = match self.episode.object.observe_part(
                &actuated.id,
                self.episode.config.obs_points,
                self.episode.config.obs_noise_sigma,
                self.episode.config.obs_outlier_frac,
                self.episode.obs_seed,
            ) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let params = RansacParams { seed: self.seed ^ i as u64, ..Default::default() };
            let estimate =
                match interactive_perception(&initial_cloud, &current_cloud, &params, reference) {
                    Ok(e) => e,
                    Err(_) => continue,
                };
            let s_est = match estimate.kind {
                JointMotionKind::Stationary => 0.0,
                _ => {
                    let aligned = estimate.aligned_to(world_axis);
                    let expected_kind = match joint.kind {
                        crate::action_program::JointKind::Revolute => JointMotionKind::Revolute,
                        crate::action_program::JointKind::Prismatic => JointMotionKind::Prismatic,
                    };
                    if aligned.kind == expected_kind {
                        aligned.displacement
                    } else {
                        0.0
                    }
                }
            };
            let obs = PlannerObservation {
                gripper_target: target,
                gripper_progress: target * i as f64 / steps as f64,
                part_target: target,
                part_estimate: s_est,
                unit_index,
                unit_count,
            };
            let decision = decide(&obs, self.cfg);
            self.decisions.push(decision);
            match decision {
                Decision::Continue => {}
                Decision::TransitionToNextStep => {
                    self.episode.release();
                    return UnitRun::Done;
                }
                Decision::HaltAndReplan => {
                    self.episode.release();
                    return fail(&part_name, part_class, unit.delta);
                }
                Decision::Success => {
                    // ground truth is checked by the caller before release
                    return UnitRun::SuccessDeclared { part_id: actuated.id.clone(), target };
                }
            }
        }
        // trajectory exhausted without a terminal decision
        self.episode.release();
        fail(&part_name, part_class, unit.delta)
    }
}

/// The full perceive-decide-execute-feedback loop for one instruction.
#[allow(clippy::too_many_arguments)]
pub fn run_global_plan(
    obj: &ArticulatedObject,
    instruction: &str,
    manual: Option<&str>,
    backend: &dyn InterpreterBackend,
    grounding: Option<&GroundingContext>,
    cfg: &PlannerConfig,
    sim_cfg: &SimConfig,
    seed: u64,
) -> Result<TaskResult, PlannerError> {
    let description = build_scene_description(obj);
    let text = backend.interpret_text(instruction, &description.text, manual, None)?;
    let set: StrategySet = parse_strategies(&text)?;
    let mut backend_calls = 1usize;
    let mut queue: VecDeque<Strategy> = set.strategies.into();
    if queue.is_empty() {
        return Err(PlannerError::NoStrategies);
    }

    let mut run = PlanRun {
        episode: EpisodeState::new(obj.clone(), *sim_cfg, seed),
        grounding,
        cfg,
        seed,
        decisions: Vec::new(),
    };
    let mut tried: Vec<Vec<crate::action_program::ActionUnit>> = Vec::new();
    let mut failure_notes = Vec::new();
    let mut success = false;

    while let Some(strategy) = queue.pop_front() {
        if tried.contains(&strategy.steps) {
            continue;
        }
        if tried.len() >= cfg.max_strategies {
            break;
        }
        tried.push(strategy.steps.clone());

        let unit_count = strategy.steps.len();
        let mut failed_note: Option<String> = None;
        for (unit_index, unit) in strategy.steps.iter().enumerate() {
            match run.run_unit(unit, unit_index, unit_count) {
                UnitRun::Done => continue,
                UnitRun::SuccessDeclared { part_id, target } => {
                    // settle, then confirm with the ground-truth rule while
                    // still holding (spring-return joints reset on release)
                    run.episode.idle(run.episode.config.stability_window);
                    success = run.episode.check_success(&part_id, target).unwrap_or(false);
                    run.episode.release();
                    break;
                }
                UnitRun::Failed(note) => {
                    failed_note = Some(note);
                    break;
                }
            }
        }

        if success {
            break;
        }
        if let Some(note) = failed_note {
            failure_notes.push(note.clone());
            // one backend re-query per failed strategy; informed strategies
            // go to the front of the queue
            match backend.interpret_text(instruction, &description.text, manual, Some(&note)) {
                Ok(text) => {
                    backend_calls += 1;
                    match parse_strategies(&text) {
                        Ok(new_set) => {
                            for s in new_set.strategies.into_iter().rev() {
                                queue.push_front(s);
                            }
                        }
                        Err(e) => return Err(PlannerError::BackendFormat(e)),
                    }
                }
                Err(PlannerError::NoRuleMatched(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }

    Ok(TaskResult {
        success,
        strategies_tried: tried.len(),
        backend_calls,
        decisions: run.decisions,
        failure_notes,
        effect_flags: run.episode.effect_flags.iter().cloned().collect(),
        final_states: run.episode.object.states.clone(),
        event_log_jsonl: run.episode.event_log_jsonl(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn backend() -> MockBackend {
        MockBackend::from_json(fixtures::MOCK_RULES).unwrap()
    }

    #[test]
    fn scene_description_matches_template() {
        let mut obj = fixtures::load("microwave.json").unwrap();
        // histogram {HingeDoor: 4, LineFixedHandle: 4} per the template sentence
        obj.parts.retain(|p| p.gapart_class != GAPartClass::SliderButton);
        let mut parts = obj.parts.clone();
        for i in 0..3 {
            for p in &obj.parts {
                let mut q = p.clone();
                q.id = format!("{}_{i}", p.id);
                q.parent = None;
                parts.push(q);
            }
        }
        obj.parts = parts;
        let d = build_scene_description(&obj);
        assert_eq!(d.text, "There are 4 hinge-door and 4 line-fixed-handle on the object.");
    }

    #[test]
    fn scene_description_single_class() {
        let obj = fixtures::load("remote_a.json").unwrap();
        let d = build_scene_description(&obj);
        assert_eq!(d.text, "There are 1 slider-button on the object.");
    }

    #[test]
    fn scene_description_empty() {
        let mut obj = fixtures::load("remote_a.json").unwrap();
        obj.parts.clear();
        obj.effects.clear();
        obj.states.clear();
        let d = build_scene_description(&obj);
        assert_eq!(d.text, "There are no actionable parts on the object.");
    }

    #[test]
    fn decide_paper_discrepancy_example() {
        let obs = PlannerObservation {
            gripper_target: 60.0,
            gripper_progress: 60.0,
            part_target: 60.0,
            part_estimate: 15.0,
            unit_index: 0,
            unit_count: 1,
        };
        assert_eq!(decide(&obs, &PlannerConfig::default()), Decision::HaltAndReplan);
    }

    #[test]
    fn decide_success_within_done_band() {
        let obs = PlannerObservation {
            gripper_target: 90.0,
            gripper_progress: 90.0,
            part_target: 90.0,
            part_estimate: 82.0,
            unit_index: 0,
            unit_count: 1,
        };
        assert_eq!(decide(&obs, &PlannerConfig::default()), Decision::Success);
    }

    #[test]
    fn decide_transition_on_non_final_unit() {
        let obs = PlannerObservation {
            gripper_target: -0.04,
            gripper_progress: -0.04,
            part_target: -0.04,
            part_estimate: -0.039,
            unit_index: 0,
            unit_count: 2,
        };
        assert_eq!(decide(&obs, &PlannerConfig::default()), Decision::TransitionToNextStep);
    }

    #[test]
    fn decide_continue_below_check_fraction() {
        let obs = PlannerObservation {
            gripper_target: 60.0,
            gripper_progress: 3.0,
            part_target: 60.0,
            part_estimate: 2.9,
            unit_index: 0,
            unit_count: 1,
        };
        assert_eq!(decide(&obs, &PlannerConfig::default()), Decision::Continue);
    }

    #[test]
    fn decide_is_scale_invariant() {
        let base = PlannerObservation {
            gripper_target: 60.0,
            gripper_progress: 60.0,
            part_target: 60.0,
            part_estimate: 15.0,
            unit_index: 0,
            unit_count: 1,
        };
        for c in [0.001, 0.5, 1.0, 3.7, 1e6] {
            let scaled = PlannerObservation {
                gripper_target: base.gripper_target * c,
                gripper_progress: base.gripper_progress * c,
                part_target: base.part_target * c,
                part_estimate: base.part_estimate * c,
                ..base
            };
            assert_eq!(decide(&scaled, &PlannerConfig::default()), Decision::HaltAndReplan);
        }
    }

    #[test]
    fn mock_backend_reproduces_paper_strategy_table() {
        let rules = vec![MockRule {
            instruction_regex: "(?i)open the microwave".into(),
            requires_classes: vec![],
            failure_regex: None,
            strategies: "Strategy 1: 1 step: (1) (Door, revolute, +90)\n\
                         Strategy 2: 1 step: (1) (Handle, revolute, +90)\n\
                         Strategy 3: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)\n\
                         Strategy 4: 2 steps: (1) (Handle, revolute, +30) (2) (Door, revolute, +60)"
                .into(),
        }];
        let be = MockBackend::new(rules).unwrap();
        let text = be.interpret_text("Open the microwave.", "", None, None).unwrap();
        let set = parse_strategies(&text).unwrap();
        assert_eq!(set.strategies.len(), 4);
        assert_eq!(set.strategies[3].steps.len(), 2);
    }

    #[test]
    fn mock_backend_failure_rule_and_no_match() {
        let be = backend();
        let desc = build_scene_description(&fixtures::load("microwave_latched.json").unwrap());
        let replanned = be
            .interpret_text(
                "Open the microwave.",
                &desc.text,
                None,
                Some("It fails when opening the door"),
            )
            .unwrap();
        assert!(replanned.contains("New Strategy 1"));
        assert!(matches!(
            be.interpret_text("Dance for me.", &desc.text, None, None),
            Err(PlannerError::NoRuleMatched(_))
        ));
    }

    #[test]
    fn resolve_part_order() {
        let obj = fixtures::load("microwave.json").unwrap();
        // exact semantic match, case-insensitive
        assert_eq!(resolve_part(&obj, "Door", None, 5).unwrap().id, "door");
        // synonym table
        assert_eq!(resolve_part(&obj, "push-button", None, 5).unwrap().id, "button");
        // KNN fallback for a name with no synonym entry
        let ctx = GroundingContext::synthetic(&obj, 16, 0.05, 3);
        assert_eq!(resolve_part(&obj, "hinge door", Some(&ctx), 5).unwrap().id, "door");
        assert!(resolve_part(&obj, "windshield", Some(&ctx), 5).is_err());
    }

    #[test]
    fn unlatched_microwave_succeeds_without_replanning() {
        let obj = fixtures::load("microwave.json").unwrap();
        let result = run_global_plan(
            &obj,
            "Open the microwave.",
            None,
            &backend(),
            None,
            &PlannerConfig::default(),
            &SimConfig::default(),
            1,
        )
        .unwrap();
        assert!(result.success, "log:\n{}", result.event_log_jsonl);
        assert_eq!(result.strategies_tried, 1);
        assert_eq!(result.backend_calls, 1);
        assert!(!result.decisions.contains(&Decision::HaltAndReplan));
    }

    #[test]
    fn latched_microwave_replans_button_then_door() {
        let obj = fixtures::load("microwave_latched.json").unwrap();
        let result = run_global_plan(
            &obj,
            "Open the microwave.",
            None,
            &backend(),
            None,
            &PlannerConfig::default(),
            &SimConfig::default(),
            2,
        )
        .unwrap();
        assert!(result.success, "log:\n{}", result.event_log_jsonl);
        assert_eq!(result.strategies_tried, 2);
        assert_eq!(result.backend_calls, 2);
        assert!(result.decisions.contains(&Decision::HaltAndReplan));
        assert_eq!(result.failure_notes, vec!["It fails when opening the door".to_string()]);
    }

    #[test]
    fn blender_manual_turns_device_on() {
        let obj = fixtures::load("blender_a.json").unwrap();
        let result = run_global_plan(
            &obj,
            "Turn on the blender.",
            Some("Press the lid to start blending, and release to stop."),
            &backend(),
            None,
            &PlannerConfig::default(),
            &SimConfig::default(),
            3,
        )
        .unwrap();
        assert!(result.success, "log:\n{}", result.event_log_jsonl);
        assert!(result.effect_flags.contains(&"device_on".to_string()));
    }

    #[test]
    fn close_door_from_partial_opening() {
        let mut obj = fixtures::load("microwave.json").unwrap();
        obj.set_state("door", 0.8);
        let result = run_global_plan(
            &obj,
            "Close the door.",
            None,
            &backend(),
            None,
            &PlannerConfig::default(),
            &SimConfig::default(),
            4,
        )
        .unwrap();
        assert!(result.success, "log:\n{}", result.event_log_jsonl);
        assert!(result.final_states["door"].abs() < 1e-6);
    }
}
