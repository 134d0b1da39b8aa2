//! Simulated assessor populations.
//!
//! Every caption in a plan gets an integer latent quality. Workers rate items
//! from that latent quality according to their model, and the ratings are
//! written in the ordinary assessment-store format so the real analytics
//! path runs unchanged.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{qc_decision, AssessmentRecord, QcConfig, WorkerStatus};
use crate::corpus::{Caption, CaptionSource, SystemRun};
use crate::degradation::{degrade_set, QcPair};
use crate::hitplan::{HitPlan, ItemRole, PlanIndex};
use crate::rng::{derive_seed, derive_seed_index, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkerModel {
    /// `clip(scale * q + bias + N(0, sigma))`.
    Diligent {
        sigma: f64,
        #[serde(default)]
        bias: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Uniform integers 0..=100, blind to quality.
    RandomUniform,
    Constant {
        value: u8,
    },
    /// `clip(100 - q + N(0, sigma))`.
    AdversarialInverted {
        #[serde(default)]
        sigma: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl WorkerModel {
    pub fn kind(&self) -> &'static str {
        match self {
            WorkerModel::Diligent { .. } => "diligent",
            WorkerModel::RandomUniform => "random-uniform",
            WorkerModel::Constant { .. } => "constant",
            WorkerModel::AdversarialInverted { .. } => "adversarial-inverted",
        }
    }

    pub fn rate(&self, quality: f64, rng: &mut SeededRng) -> u8 {
        let clip = |x: f64| x.round().clamp(0.0, 100.0) as u8;
        match *self {
            WorkerModel::Diligent { sigma, bias, scale } => {
                let noise = if sigma > 0.0 { rng.normal(0.0, sigma) } else { 0.0 };
                clip(scale * quality + bias + noise)
            }
            WorkerModel::RandomUniform => rng.below(101) as u8,
            WorkerModel::Constant { value } => value.min(100),
            WorkerModel::AdversarialInverted { sigma } => {
                let noise = if sigma > 0.0 { rng.normal(0.0, sigma) } else { 0.0 };
                clip(100.0 - quality + noise)
            }
        }
    }
}

/// `count` workers sharing a model. Diligent workers may get personal bias
/// and scale offsets drawn from `N(0, bias_sd)` and `N(0, scale_sd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerGroup {
    pub count: usize,
    pub model: WorkerModel,
    #[serde(default)]
    pub bias_sd: f64,
    #[serde(default)]
    pub scale_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWorker {
    pub worker_id: String,
    pub model: WorkerModel,
}

pub fn expand_population(groups: &[WorkerGroup], seed: u64) -> Vec<SimWorker> {
    let mut rng = SeededRng::new(derive_seed(seed, "population"));
    let mut workers = Vec::new();
    for group in groups {
        for _ in 0..group.count {
            let mut model = group.model.clone();
            if let WorkerModel::Diligent { bias, scale, .. } = &mut model {
                if group.bias_sd > 0.0 {
                    *bias += rng.normal(0.0, group.bias_sd);
                }
                if group.scale_sd > 0.0 {
                    *scale = (*scale + rng.normal(0.0, group.scale_sd)).max(0.05);
                }
            }
            workers.push(SimWorker {
                worker_id: format!("w{:04}-{}", workers.len() + 1, model.kind()),
                model,
            });
        }
    }
    workers
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemLatent {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSpec {
    #[serde(default)]
    pub systems: BTreeMap<String, SystemLatent>,
    #[serde(default = "default_system")]
    pub default_system: SystemLatent,
    #[serde(default = "default_good_mean")]
    pub qc_good_mean: f64,
    #[serde(default = "default_good_sd")]
    pub qc_good_sd: f64,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
}

fn default_system() -> SystemLatent {
    SystemLatent { mean: 60.0, sd: 15.0 }
}
fn default_good_mean() -> f64 {
    80.0
}
fn default_good_sd() -> f64 {
    10.0
}
fn default_penalty() -> f64 {
    30.0
}

impl Default for LatentSpec {
    fn default() -> Self {
        Self {
            systems: BTreeMap::new(),
            default_system: default_system(),
            qc_good_mean: default_good_mean(),
            qc_good_sd: default_good_sd(),
            penalty: default_penalty(),
        }
    }
}

impl LatentSpec {
    /// Good-caption quality, kept high enough that its degraded copy stays
    /// inside the scale.
    fn draw_good(&self, rng: &mut SeededRng) -> f64 {
        let lo = (self.penalty + 5.0).min(100.0);
        rng.normal(self.qc_good_mean, self.qc_good_sd).round().clamp(lo, 100.0)
    }
}

/// Integer latent quality per caption id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentQuality {
    pub quality: BTreeMap<String, f64>,
}

impl LatentQuality {
    /// Draws are keyed by caption id, so the same spec and seed give the
    /// same qualities for a caption regardless of plan layout.
    pub fn draw(plan: &HitPlan, spec: &LatentSpec, seed: u64) -> Self {
        let index = PlanIndex::new(plan);
        let mut quality = BTreeMap::new();
        for item in plan.items() {
            let mut rng = SeededRng::new(derive_seed(seed, &item.caption_id));
            match &item.role {
                ItemRole::System { run_id } => {
                    let s = spec.systems.get(run_id).copied().unwrap_or(spec.default_system);
                    quality
                        .entry(item.caption_id.clone())
                        .or_insert_with(|| rng.normal(s.mean, s.sd).round().clamp(0.0, 100.0));
                }
                ItemRole::QcGood => {
                    quality
                        .entry(item.caption_id.clone())
                        .or_insert_with(|| spec.draw_good(&mut rng));
                }
                ItemRole::QcBad { pair } => {
                    let good = index.get(pair).expect("pair inside plan");
                    let mut good_rng = SeededRng::new(derive_seed(seed, &good.caption_id));
                    let q = *quality
                        .entry(good.caption_id.clone())
                        .or_insert_with(|| spec.draw_good(&mut good_rng));
                    quality.insert(item.caption_id.clone(), q - spec.penalty);
                }
                ItemRole::Repeat { .. } => {}
            }
        }
        Self { quality }
    }

    pub fn get(&self, caption_id: &str) -> f64 {
        self.quality.get(caption_id).copied().unwrap_or(50.0)
    }
}

/// Answers every HIT `redundancy` times. Assignment `k` (rounds over the
/// whole plan, HITs in order within a round) goes to worker `k mod W` and
/// draws from its own generator derived from `(seed, k)`.
pub fn simulate_assessments(
    plan: &HitPlan,
    population: &[SimWorker],
    latent: &LatentQuality,
    redundancy: usize,
    seed: u64,
) -> Vec<AssessmentRecord> {
    if population.is_empty() {
        return Vec::new();
    }
    let hits = plan.hits.len();
    let assignments: Vec<usize> = (0..hits * redundancy).collect();
    let per_assignment: Vec<Vec<AssessmentRecord>> = assignments
        .par_iter()
        .map(|&k| {
            let hit = &plan.hits[k % hits];
            let worker = &population[k % population.len()];
            let mut rng = SeededRng::new(derive_seed_index(seed, k as u64));
            let base = 1_000_000 * k as u64;
            hit.items
                .iter()
                .enumerate()
                .map(|(pos, item)| AssessmentRecord {
                    worker_id: worker.worker_id.clone(),
                    item_id: item.item_id.clone(),
                    raw_score: worker.model.rate(latent.get(&item.caption_id), &mut rng),
                    timestamp: base + 1_000 * pos as u64,
                    session_id: Some(format!("sim-{k:05}")),
                })
                .collect()
        })
        .collect();
    per_assignment.into_iter().flatten().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub kind: String,
    pub trials: usize,
    pub passed: usize,
    pub pass_rate: f64,
}

/// Empirical QC pass rate per worker model. Each trial is a fresh worker
/// rating `pairs` freshly drawn good/degraded pairs.
pub fn qc_power_report(
    models: &[WorkerModel],
    pairs: usize,
    trials: usize,
    spec: &LatentSpec,
    config: &QcConfig,
    seed: u64,
) -> Vec<PowerRow> {
    models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let model_seed = derive_seed_index(seed, m as u64);
            let passed = (0..trials)
                .into_par_iter()
                .filter(|&t| {
                    let mut rng = SeededRng::new(derive_seed_index(model_seed, t as u64));
                    let scored: Vec<(f64, f64)> = (0..pairs)
                        .map(|_| {
                            let good = spec.draw_good(&mut rng);
                            let bad = good - spec.penalty;
                            let a = model.rate(good, &mut rng);
                            let b = model.rate(bad, &mut rng);
                            (f64::from(a), f64::from(b))
                        })
                        .collect();
                    qc_decision(&scored, config).0 == WorkerStatus::Passed
                })
                .count();
            PowerRow {
                kind: model.kind().to_string(),
                trials,
                passed,
                pass_rate: passed as f64 / trials.max(1) as f64,
            }
        })
        .collect()
}

/// Full simulation settings as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub redundancy: usize,
    #[serde(default)]
    pub latent: LatentSpec,
    pub population: Vec<WorkerGroup>,
}

fn one_usize() -> usize {
    1
}

impl SimConfig {
    /// Expands the population, draws latents and simulates one collection.
    pub fn run(&self, plan: &HitPlan) -> Vec<AssessmentRecord> {
        let workers = expand_population(&self.population, self.seed);
        let latent = LatentQuality::draw(plan, &self.latent, derive_seed(self.seed, "latent"));
        simulate_assessments(
            plan,
            &workers,
            &latent,
            self.redundancy,
            derive_seed(self.seed, "ratings"),
        )
    }
}

const SUBJECTS: &[&str] = &[
    "a man",
    "a woman",
    "a child",
    "two dogs",
    "a cat",
    "an old man",
    "a girl",
    "a boy",
    "a group of people",
    "a chef",
];
const VERBS: &[&str] = &[
    "is running",
    "is dancing",
    "plays",
    "is cooking",
    "jumps",
    "is singing",
    "walks",
    "is talking",
];
const PLACES: &[&str] = &[
    "on the beach",
    "in a kitchen",
    "on a stage",
    "in the park",
    "near a car",
    "in the snow",
    "on the street",
    "at home",
];
const EXTRAS: &[&str] = &[
    "",
    "with a ball",
    "while laughing",
    "in the rain",
    "with friends",
    "at night",
];

fn sentence(rng: &mut SeededRng) -> String {
    let mut parts = vec![
        *rng.choose(SUBJECTS).unwrap(),
        *rng.choose(VERBS).unwrap(),
        *rng.choose(PLACES).unwrap(),
    ];
    let extra = *rng.choose(EXTRAS).unwrap();
    if !extra.is_empty() {
        parts.push(extra);
    }
    parts.join(" ")
}

/// Synthetic evaluation material: `systems` runs covering `videos` videos,
/// one human reference set `A` and its degraded QC pairs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub runs: Vec<SystemRun>,
    pub references: Vec<Caption>,
    pub pairs: Vec<QcPair>,
}

pub fn synthetic_scenario(systems: usize, videos: usize, seed: u64) -> Scenario {
    let mut rng = SeededRng::new(derive_seed(seed, "scenario"));
    let video_ids: Vec<String> = (0..videos).map(|v| format!("vid{:04}", v + 1)).collect();
    let references: Vec<Caption> = video_ids
        .iter()
        .map(|v| Caption {
            caption_id: format!("human-A:{v}"),
            video_id: v.clone(),
            text: sentence(&mut rng),
            source: CaptionSource::Human("A".into()),
        })
        .collect();
    let runs = (0..systems)
        .map(|s| {
            let run_id = format!("sys{}", s + 1);
            SystemRun {
                group_id: run_id.clone(),
                captions: video_ids.iter().map(|v| (v.clone(), sentence(&mut rng))).collect(),
                run_id,
            }
        })
        .collect();
    let pairs = degrade_set(&references, derive_seed(seed, "degrade")).expect("synthetic references degrade");
    Scenario {
        runs,
        references,
        pairs,
    }
}

/// Worker id → model, for reports that group by kind.
pub fn kinds_by_worker(workers: &[SimWorker]) -> HashMap<String, &'static str> {
    workers.iter().map(|w| (w.worker_id.clone(), w.model.kind())).collect()
}
