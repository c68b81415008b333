//! Bundled benchmark fixtures: scene documents for the six object
//! categories (two structural variants each), the mock interpreter rule
//! table, and the default benchmark task list.

use crate::scene_model::{load_scene, ArticulatedObject, SceneError};

pub const SCENES: &[(&str, &str)] = &[
    ("microwave.json", include_str!("../fixtures/microwave.json")),
    ("microwave_latched.json", include_str!("../fixtures/microwave_latched.json")),
    ("storage_furniture_a.json", include_str!("../fixtures/storage_furniture_a.json")),
    ("storage_furniture_b.json", include_str!("../fixtures/storage_furniture_b.json")),
    ("cabinet_a.json", include_str!("../fixtures/cabinet_a.json")),
    ("cabinet_b.json", include_str!("../fixtures/cabinet_b.json")),
    ("kitchen_pot_a.json", include_str!("../fixtures/kitchen_pot_a.json")),
    ("kitchen_pot_b.json", include_str!("../fixtures/kitchen_pot_b.json")),
    ("remote_a.json", include_str!("../fixtures/remote_a.json")),
    ("remote_b.json", include_str!("../fixtures/remote_b.json")),
    ("blender_a.json", include_str!("../fixtures/blender_a.json")),
    ("blender_b.json", include_str!("../fixtures/blender_b.json")),
];

pub const MOCK_RULES: &str = include_str!("../fixtures/mock_rules.json");
pub const BENCH_SPECS: &str = include_str!("../fixtures/bench.json");

pub fn raw(name: &str) -> Option<&'static str> {
    SCENES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load(name: &str) -> Result<ArticulatedObject, SceneError> {
    let text = raw(name).ok_or_else(|| SceneError::Schema(format!("unknown fixture {name:?}")))?;
    load_scene(text)
}
