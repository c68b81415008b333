//! Grounding a semantic part to an actionable part class via max-pooled
//! features and KNN over a reference store.

use crate::action_program::JointKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_K: usize = 5;

/// Actionable part classes with a canonical interaction policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GAPartClass {
    HingeDoor,
    SliderDrawer,
    SliderButton,
    HingeHandle,
    LineFixedHandle,
    RoundFixedHandle,
    HingeLid,
    SliderLid,
    HingeKnob,
}

impl GAPartClass {
    pub const ALL: [GAPartClass; 9] = [
        GAPartClass::HingeDoor,
        GAPartClass::SliderDrawer,
        GAPartClass::SliderButton,
        GAPartClass::HingeHandle,
        GAPartClass::LineFixedHandle,
        GAPartClass::RoundFixedHandle,
        GAPartClass::HingeLid,
        GAPartClass::SliderLid,
        GAPartClass::HingeKnob,
    ];

    /// Hyphenated name used in scene-description templates.
    pub fn hyphenated(self) -> &'static str {
        match self {
            GAPartClass::HingeDoor => "hinge-door",
            GAPartClass::SliderDrawer => "slider-drawer",
            GAPartClass::SliderButton => "slider-button",
            GAPartClass::HingeHandle => "hinge-handle",
            GAPartClass::LineFixedHandle => "line-fixed-handle",
            GAPartClass::RoundFixedHandle => "round-fixed-handle",
            GAPartClass::HingeLid => "hinge-lid",
            GAPartClass::SliderLid => "slider-lid",
            GAPartClass::HingeKnob => "hinge-knob",
        }
    }

    /// The joint kind driven by this class; fixed handles inherit the
    /// joint of their parent part and report `None`.
    pub fn joint_kind(self) -> Option<JointKind> {
        match self {
            GAPartClass::HingeDoor
            | GAPartClass::HingeHandle
            | GAPartClass::HingeLid
            | GAPartClass::HingeKnob => Some(JointKind::Revolute),
            GAPartClass::SliderDrawer | GAPartClass::SliderButton | GAPartClass::SliderLid => {
                Some(JointKind::Prismatic)
            }
            GAPartClass::LineFixedHandle | GAPartClass::RoundFixedHandle => None,
        }
    }

    pub fn is_fixed_handle(self) -> bool {
        matches!(self, GAPartClass::LineFixedHandle | GAPartClass::RoundFixedHandle)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GroundingError {
    #[error("feature mask selects no cells")]
    EmptyMask,
    #[error("feature store is empty")]
    EmptyStore,
    #[error("dimension mismatch: store dimension {store}, query dimension {query}")]
    DimensionMismatch { store: usize, query: usize },
    #[error("k = {k} exceeds store size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("feature store parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub label: GAPartClass,
    pub vector: Vec<f64>,
}

/// Immutable store of labeled reference feature vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureStore {
    entries: Vec<FeatureEntry>,
}

impl FeatureStore {
    pub fn new(entries: Vec<FeatureEntry>) -> Result<Self, GroundingError> {
        if let Some(first) = entries.first() {
            let d = first.vector.len();
            for e in &entries {
                if e.vector.len() != d {
                    return Err(GroundingError::DimensionMismatch {
                        store: d,
                        query: e.vector.len(),
                    });
                }
            }
        }
        Ok(FeatureStore { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.entries.first().map(|e| e.vector.len())
    }

    pub fn entries(&self) -> &[FeatureEntry] {
        &self.entries
    }

    /// Loads a JSON Lines file: one {"label": ..., "vector": [...]} per line.
    pub fn from_jsonl(text: &str) -> Result<Self, GroundingError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let entry: FeatureEntry = serde_json::from_str(line)
                .map_err(|e| GroundingError::Parse(format!("line {}: {}", i + 1, e)))?;
            entries.push(entry);
        }
        FeatureStore::new(entries)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).unwrap());
            out.push('\n');
        }
        out
    }
}

/// A dense feature map over an image grid with a part mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major H x W x D.
    pub values: Vec<f64>,
    /// Row-major H x W.
    pub mask: Vec<bool>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>, mask: Vec<bool>) -> Self {
        assert_eq!(values.len(), width * height * channels);
        assert_eq!(mask.len(), width * height);
        FeatureMap { width, height, channels, values, mask }
    }
}

/// Channel-wise maximum over masked cells.
pub fn max_pool(map: &FeatureMap) -> Result<Vec<f64>, GroundingError> {
    let mut out = vec![f64::NEG_INFINITY; map.channels];
    let mut any = false;
    for cell in 0..map.width * map.height {
        if map.mask[cell] {
            any = true;
            let base = cell * map.channels;
            for (c, best) in out.iter_mut().enumerate() {
                *best = best.max(map.values[base + c]);
            }
        }
    }
    if !any {
        return Err(GroundingError::EmptyMask);
    }
    Ok(out)
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot / (na * nb)
}

/// KNN grounding by cosine distance: majority label among the k nearest
/// entries, ties broken by the single nearest neighbor's label.
pub fn knn_ground(
    store: &FeatureStore,
    query: &[f64],
    k: usize,
) -> Result<(GAPartClass, BTreeMap<GAPartClass, usize>), GroundingError> {
    if store.is_empty() {
        return Err(GroundingError::EmptyStore);
    }
    let d = store.dimension().unwrap();
    if query.len() != d {
        return Err(GroundingError::DimensionMismatch { store: d, query: query.len() });
    }
    if k == 0 || k > store.len() {
        return Err(GroundingError::KTooLarge { k, size: store.len() });
    }
    let mut scored: Vec<(f64, usize)> = store
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (cosine_distance(query, &e.vector), i))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let nearest_label = store.entries[scored[0].1].label;
    let mut votes: BTreeMap<GAPartClass, usize> = BTreeMap::new();
    for (_, idx) in scored.iter().take(k) {
        *votes.entry(store.entries[*idx].label).or_insert(0) += 1;
    }
    let max_votes = *votes.values().max().unwrap();
    let leaders: Vec<GAPartClass> =
        votes.iter().filter(|(_, v)| **v == max_votes).map(|(l, _)| *l).collect();
    let label = if leaders.len() == 1 { leaders[0] } else { nearest_label };
    Ok((label, votes))
}

/// Synthetic class-conditioned Gaussian features for test fixtures and the
/// simulator: one fixed mean direction per class plus isotropic noise.
pub fn synthetic_feature(class: GAPartClass, dimension: usize, sigma: f64, seed: u64) -> Vec<f64> {
    assert!(dimension >= GAPartClass::ALL.len());
    let idx = GAPartClass::ALL.iter().position(|c| *c == class).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9e3779b97f4a7c15));
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut v = vec![0.0; dimension];
    v[idx] = 1.0;
    for x in v.iter_mut() {
        *x += normal.sample(&mut rng);
    }
    v
}

/// A reference store with `per_class` synthetic entries per class.
pub fn synthetic_store(dimension: usize, per_class: usize, sigma: f64, seed: u64) -> FeatureStore {
    let mut entries = Vec::new();
    for class in GAPartClass::ALL {
        for j in 0..per_class {
            entries.push(FeatureEntry {
                label: class,
                vector: synthetic_feature(class, dimension, sigma, seed.wrapping_add(j as u64 * 131)),
            });
        }
    }
    FeatureStore::new(entries).unwrap()
}
