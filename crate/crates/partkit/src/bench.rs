//! Benchmark harness: task specs, seeded trial execution through the
//! global planner, success-rate aggregation, and the joint-estimation
//! accuracy sweep over noise and outlier levels.

use crate::fixtures;
use crate::geometry::{sample_box_surface, OrientedBox, Pose, Rotation, Vec3};
use crate::joint_estimation::{
    accuracy, interactive_perception, joint_errors, pose_errors, ransac_align, JointEstimate,
    JointMotionKind, PoseErrorReport, RansacParams,
};
use crate::planner::{run_global_plan, InterpreterBackend, PlannerConfig, PlannerError};
use crate::scene_model::{load_scene, load_scene_file, ArticulatedObject, SceneError};
use crate::simulator::SimConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTarget {
    pub part: String,
    /// Optional explicit motion target in joint units; when absent the
    /// planner's applied delta is the reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u64,
    pub category: String,
    /// Path to a scene document; the `fixture:` prefix resolves against
    /// the bundled fixtures.
    pub scene_file: String,
    pub instruction_variants: Vec<String>,
    /// Uniform [lo, hi] initial-state range per part, joint units.
    #[serde(default)]
    pub init_state_sampler: BTreeMap<String, [f64; 2]>,
    pub target: TaskTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual: Option<String>,
    pub trials: usize,
}

pub fn load_task_specs(json: &str) -> Result<Vec<TaskSpec>, SceneError> {
    serde_json::from_str(json).map_err(|e| SceneError::Schema(e.to_string()))
}

pub fn resolve_scene(spec: &TaskSpec) -> Result<ArticulatedObject, SceneError> {
    match spec.scene_file.strip_prefix("fixture:") {
        Some(name) => {
            let text = fixtures::raw(name)
                .ok_or_else(|| SceneError::Schema(format!("unknown fixture {name:?}")))?;
            load_scene(text)
        }
        None => load_scene_file(std::path::Path::new(&spec.scene_file)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub task_id: u64,
    pub trial: usize,
    pub instruction: String,
    /// Sampled initial states, only for parts the task's sampler covers.
    pub init_states: BTreeMap<String, f64>,
    pub success: bool,
    pub strategies_tried: usize,
    pub backend_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub id: u64,
    pub category: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_strategies: f64,
    pub mean_backend_calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub tasks: Vec<TaskStats>,
    pub categories: Vec<CategoryStats>,
    pub overall_success_rate: f64,
    pub trial_records: Vec<TrialRecord>,
}

impl BenchReport {
    /// Fixed-width text rendering; byte-identical for identical inputs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "benchmark report (seed {})", self.seed).unwrap();
        writeln!(out, "{:<20} {:>6} {:>10} {:>8}", "category", "trials", "successes", "rate").unwrap();
        for c in &self.categories {
            writeln!(
                out,
                "{:<20} {:>6} {:>10} {:>7.1}%",
                c.category,
                c.trials,
                c.successes,
                100.0 * c.success_rate
            )
            .unwrap();
        }
        writeln!(out, "{:<20} {:>6} {:>10} {:>7.1}%", "overall",
            self.tasks.iter().map(|t| t.trials).sum::<usize>(),
            self.tasks.iter().map(|t| t.successes).sum::<usize>(),
            100.0 * self.overall_success_rate)
        .unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:<4} {:<20} {:>6} {:>8} {:>11} {:>14}",
            "task", "category", "trials", "rate", "strategies", "backend calls"
        )
        .unwrap();
        for t in &self.tasks {
            writeln!(
                out,
                "{:<4} {:<20} {:>6} {:>7.1}% {:>11.2} {:>14.2}",
                t.id,
                t.category,
                t.trials,
                100.0 * t.success_rate,
                t.mean_strategies,
                t.mean_backend_calls
            )
            .unwrap();
        }
        out
    }
}

fn trial_seed(seed: u64, task_id: u64, trial: usize) -> u64 {
    (seed ^ (task_id << 32) ^ trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs every task's trials through the global planner. Fully determined
/// by (specs, rules, seed): instruction choice and initial states come
/// from a per-trial seeded generator.
pub fn run_benchmark(
    specs: &[TaskSpec],
    backend: &dyn InterpreterBackend,
    planner_cfg: &PlannerConfig,
    sim_cfg: &SimConfig,
    seed: u64,
) -> Result<BenchReport, PlannerError> {
    let mut tasks = Vec::new();
    let mut records = Vec::new();
    let mut by_category: BTreeMap<String, (usize, usize)> = BTreeMap::new();

    for spec in specs {
        let base = resolve_scene(spec)?;
        let mut successes = 0usize;
        let mut strategies_sum = 0usize;
        let mut calls_sum = 0usize;
        for trial in 0..spec.trials {
            let ts = trial_seed(seed, spec.id, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let instruction =
                spec.instruction_variants[rng.gen_range(0..spec.instruction_variants.len())].clone();
            let mut obj = base.clone();
            let mut init_states = BTreeMap::new();
            for (part, [lo, hi]) in &spec.init_state_sampler {
                let s = if hi > lo { rng.gen_range(*lo..*hi) } else { *lo };
                obj.set_state(part, s);
                init_states.insert(part.clone(), s);
            }
            let result = run_global_plan(
                &obj,
                &instruction,
                spec.manual.as_deref(),
                backend,
                None,
                planner_cfg,
                sim_cfg,
                ts,
            )?;
            if result.success {
                successes += 1;
            }
            strategies_sum += result.strategies_tried;
            calls_sum += result.backend_calls;
            records.push(TrialRecord {
                task_id: spec.id,
                trial,
                instruction,
                init_states,
                success: result.success,
                strategies_tried: result.strategies_tried,
                backend_calls: result.backend_calls,
            });
        }
        let entry = by_category.entry(spec.category.clone()).or_insert((0, 0));
        entry.0 += spec.trials;
        entry.1 += successes;
        tasks.push(TaskStats {
            id: spec.id,
            category: spec.category.clone(),
            trials: spec.trials,
            successes,
            success_rate: successes as f64 / spec.trials.max(1) as f64,
            mean_strategies: strategies_sum as f64 / spec.trials.max(1) as f64,
            mean_backend_calls: calls_sum as f64 / spec.trials.max(1) as f64,
        });
    }

    let categories: Vec<CategoryStats> = by_category
        .into_iter()
        .map(|(category, (trials, successes))| CategoryStats {
            category,
            trials,
            successes,
            success_rate: successes as f64 / trials.max(1) as f64,
        })
        .collect();
    let total: usize = tasks.iter().map(|t| t.trials).sum();
    let won: usize = tasks.iter().map(|t| t.successes).sum();
    Ok(BenchReport {
        seed,
        tasks,
        categories,
        overall_success_rate: won as f64 / total.max(1) as f64,
        trial_records: records,
    })
}

/// One cell of the estimation accuracy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationCell {
    pub noise_sigma: f64,
    pub outlier_frac: f64,
    pub trials: usize,
    pub a5: f64,
    pub a10: f64,
    pub median_rotation_deg: f64,
    pub median_axis_deg: f64,
    pub median_pivot_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub seed: u64,
    pub cells: Vec<EstimationCell>,
}

impl EstimationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "estimation benchmark (seed {})", self.seed).unwrap();
        writeln!(
            out,
            "{:>8} {:>9} {:>7} {:>7} {:>10} {:>10} {:>10}",
            "sigma", "outliers", "A5", "A10", "rot(deg)", "axis(deg)", "pivot(m)"
        )
        .unwrap();
        for c in &self.cells {
            writeln!(
                out,
                "{:>8.4} {:>8.0}% {:>7.3} {:>7.3} {:>10.4} {:>10.4} {:>10.5}",
                c.noise_sigma,
                100.0 * c.outlier_frac,
                c.a5,
                c.a10,
                c.median_rotation_deg,
                c.median_axis_deg,
                c.median_pivot_m
            )
            .unwrap();
        }
        out
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Accuracy sweep: random revolute motions of a box-surface cloud,
/// corrupted per cell, estimated with RANSAC alignment + geometric
/// inference, scored against the constructed ground truth.
pub fn estimation_benchmark(
    n_trials: usize,
    noise_grid: &[f64],
    outlier_grid: &[f64],
    seed: u64,
) -> EstimationReport {
    let n_points = 500usize;
    let mut cells = Vec::new();
    for &sigma in noise_grid {
        for &frac in outlier_grid {
            let mut pose_reports: Vec<PoseErrorReport> = Vec::new();
            let mut axis_errs = Vec::new();
            let mut pivot_errs = Vec::new();
            for trial in 0..n_trials {
                let ts = trial_seed(seed, (sigma.to_bits() >> 12) ^ frac.to_bits(), trial);
                let mut rng = ChaCha8Rng::seed_from_u64(ts);

                let b = OrientedBox::new(
                    Vec3::ZERO,
                    Vec3::new(
                        rng.gen_range(0.1..0.4),
                        rng.gen_range(0.1..0.4),
                        rng.gen_range(0.02..0.1),
                    ),
                    Rotation::IDENTITY,
                );
                let cloud = sample_box_surface(&b, n_points, ts ^ 0x5eed);

                let axis = random_unit(&mut rng);
                let pivot = Vec3::new(
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                );
                let angle = rng.gen_range(10f64.to_radians()..90f64.to_radians());
                let r = Rotation::from_angle_axis(angle, axis);
                let truth = Pose::new(r, pivot - r.apply(pivot));
                let mut moved = cloud.transformed(truth);

                if sigma > 0.0 {
                    use rand_distr::{Distribution, Normal};
                    let normal = Normal::new(0.0, sigma).unwrap();
                    for p in moved.points.iter_mut() {
                        *p = *p
                            + Vec3::new(
                                normal.sample(&mut rng),
                                normal.sample(&mut rng),
                                normal.sample(&mut rng),
                            );
                    }
                }
                let n_out = (frac * n_points as f64).floor() as usize;
                if n_out > 0 {
                    let mut idx: Vec<usize> = (0..n_points).collect();
                    for i in 0..n_out {
                        let j = rng.gen_range(i..n_points);
                        idx.swap(i, j);
                    }
                    for &i in idx.iter().take(n_out) {
                        moved.points[i] = Vec3::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        );
                    }
                }

                let params = RansacParams { seed: ts ^ 0xabcd, ..Default::default() };
                let Ok(est) = ransac_align(&cloud, &moved, &params) else { continue };
                pose_reports.push(pose_errors(&est.as_pose(), &truth));

                let truth_joint = JointEstimate {
                    kind: JointMotionKind::Revolute,
                    axis_dir: axis,
                    axis_point: pivot,
                    displacement: angle,
                };
                if let Ok(j) = interactive_perception(&cloud, &moved, &params, cloud.centroid()) {
                    if let Ok(e) = joint_errors(&j, &truth_joint) {
                        if let Some(a) = e.axis_deg {
                            axis_errs.push(a);
                        }
                        if let Some(d) = e.axis_dist_m {
                            pivot_errs.push(d);
                        }
                    }
                }
            }
            let acc = accuracy(&pose_reports);
            cells.push(EstimationCell {
                noise_sigma: sigma,
                outlier_frac: frac,
                trials: n_trials,
                a5: acc.a5,
                a10: acc.a10,
                median_rotation_deg: median(pose_reports.iter().map(|r| r.rotation_deg).collect()),
                median_axis_deg: median(axis_errs),
                median_pivot_m: median(pivot_errs),
            });
        }
    }
    EstimationReport { seed, cells }
}
