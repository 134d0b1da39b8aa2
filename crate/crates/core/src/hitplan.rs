//! Assessment batches (HITs) with hidden quality-control items.
//!
//! Every HIT holds `hit_size` items: `qc_pairs` original/degraded pairs,
//! `repeats` exact repeats of system items already shown earlier in the same
//! HIT, and system items filling the rest. System items are shuffled across
//! all runs and dealt out in order, so every run caption is scheduled once.
//! The final HIT is topped up with extra repeats when the system items run
//! out, and is flagged as padded.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, SystemRun};
use crate::degradation::QcPair;
use crate::metrics::{tokenize, MetricError};
use crate::provenance::Provenance;
use crate::rng::{SeededRng, GENERATOR_ID};

#[derive(Debug, Error)]
pub enum HitPlanError {
    #[error("no system runs to schedule")]
    NoRuns,
    #[error("hit composition leaves no room for system items: size {hit_size}, {qc_pairs} pairs, {repeats} repeats")]
    NoSystemSlots {
        hit_size: usize,
        qc_pairs: usize,
        repeats: usize,
    },
    #[error("{needed} QC pairs per HIT requested but only {available} available")]
    NotEnoughPairs { needed: usize, available: usize },
    #[error(transparent)]
    Tokenize(#[from] MetricError),
    #[error("plan file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitConfig {
    pub hit_size: usize,
    pub qc_pairs: usize,
    pub repeats: usize,
    /// Minimum number of positions between an item and its repeat.
    pub min_repeat_gap: usize,
}

impl Default for HitConfig {
    fn default() -> Self {
        Self {
            hit_size: 100,
            qc_pairs: 10,
            repeats: 10,
            min_repeat_gap: 20,
        }
    }
}

impl HitConfig {
    pub fn system_slots(&self) -> usize {
        self.hit_size.saturating_sub(2 * self.qc_pairs + self.repeats)
    }
}

/// Hidden role of a display item. Never part of the worker-facing view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ItemRole {
    System {
        run_id: String,
    },
    QcGood,
    /// `pair` is the item id of the original caption in the same HIT.
    QcBad {
        pair: String,
    },
    /// `of` is the item id of the first showing.
    Repeat {
        of: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayItem {
    pub item_id: String,
    pub video_id: String,
    pub video_url: Option<String>,
    pub caption_id: String,
    pub text: String,
    pub role: ItemRole,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub system: usize,
    pub qc_good: usize,
    pub qc_bad: usize,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub hit_id: String,
    pub items: Vec<DisplayItem>,
    pub composition: Composition,
    /// Final HIT topped up with extra repeats.
    pub padded: bool,
    /// Repeats placed closer than the configured gap for lack of room.
    #[serde(default)]
    pub short_gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitPlan {
    pub seed: u64,
    pub generator: String,
    pub config: HitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub hits: Vec<Hit>,
}

/// What an assessor sees: no role, no caption id, no run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerItem {
    pub item_id: String,
    pub video_url: Option<String>,
    pub caption: String,
    pub position: usize,
    pub total: usize,
}

impl WorkerItem {
    pub fn from_item(item: &DisplayItem, position: usize, total: usize) -> Self {
        Self {
            item_id: item.item_id.clone(),
            video_url: item.video_url.clone(),
            caption: item.text.clone(),
            position,
            total,
        }
    }
}

fn normalize(text: &str) -> Result<String, MetricError> {
    Ok(tokenize(text)?.to_string())
}

#[derive(Clone)]
struct SystemEntry {
    run_id: String,
    video_id: String,
    caption_id: String,
    text: String,
}

#[derive(Clone)]
enum DraftRole {
    System(String),
    QcGood,
    QcBad(usize),
    Repeat(usize),
    ExternalRepeat(String),
}

#[derive(Clone)]
struct Draft {
    video_id: String,
    caption_id: String,
    text: String,
    role: DraftRole,
}

/// Builds the plan. Display text is normalized with [`tokenize`] for every
/// item so degraded captions cannot be spotted by casing or punctuation.
pub fn build_hits(
    runs: &[SystemRun],
    qc_pairs: &[QcPair],
    config: HitConfig,
    seed: u64,
) -> Result<HitPlan, HitPlanError> {
    if runs.is_empty() || runs.iter().all(|r| r.is_empty()) {
        return Err(HitPlanError::NoRuns);
    }
    let slots = config.system_slots();
    if slots == 0 {
        return Err(HitPlanError::NoSystemSlots {
            hit_size: config.hit_size,
            qc_pairs: config.qc_pairs,
            repeats: config.repeats,
        });
    }
    if qc_pairs.len() < config.qc_pairs {
        return Err(HitPlanError::NotEnoughPairs {
            needed: config.qc_pairs,
            available: qc_pairs.len(),
        });
    }
    let mut rng = SeededRng::new(seed);

    let mut entries = Vec::new();
    for run in runs {
        for (video, text) in &run.captions {
            entries.push(SystemEntry {
                run_id: run.run_id.clone(),
                video_id: video.clone(),
                caption_id: run.caption_id(video),
                text: normalize(text)?,
            });
        }
    }
    rng.shuffle(&mut entries);
    let run_order: Vec<String> = runs
        .iter()
        .map(|r| r.run_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut pairs: Vec<(Draft, Draft)> = qc_pairs
        .iter()
        .map(|p| {
            Ok((
                Draft {
                    video_id: p.origin.video_id.clone(),
                    caption_id: p.origin.caption_id.clone(),
                    text: normalize(&p.origin.text)?,
                    role: DraftRole::QcGood,
                },
                Draft {
                    video_id: p.degraded.video_id.clone(),
                    caption_id: p.degraded.caption_id.clone(),
                    text: normalize(&p.degraded.text)?,
                    role: DraftRole::QcBad(0),
                },
            ))
        })
        .collect::<Result<_, MetricError>>()?;
    rng.shuffle(&mut pairs);
    let mut pair_cursor = 0;

    let chunks: Vec<&[SystemEntry]> = entries.chunks(slots).collect();
    let mut first_showing: Vec<(String, SystemEntry)> = Vec::new();
    let mut hits = Vec::with_capacity(chunks.len());
    for (h, chunk) in chunks.iter().enumerate() {
        let hit_id = format!("h{:04}", h + 1);
        let mut drafts: Vec<Draft> = chunk
            .iter()
            .map(|e| Draft {
                video_id: e.video_id.clone(),
                caption_id: e.caption_id.clone(),
                text: e.text.clone(),
                role: DraftRole::System(e.run_id.clone()),
            })
            .collect();
        for _ in 0..config.qc_pairs {
            let (good, mut bad) = pairs[pair_cursor % pairs.len()].clone();
            pair_cursor += 1;
            bad.role = DraftRole::QcBad(drafts.len());
            drafts.push(good);
            drafts.push(bad);
        }
        let shortfall = slots - chunk.len();
        let padded = shortfall > 0;
        let mut in_hit_repeats = config.repeats;
        if padded {
            let here: BTreeSet<&str> = chunk.iter().map(|e| e.caption_id.as_str()).collect();
            let external = external_repeats(&first_showing, &here, &run_order, shortfall, &mut rng);
            in_hit_repeats += shortfall - external.len();
            for (item_id, entry) in external {
                drafts.push(Draft {
                    video_id: entry.video_id.clone(),
                    caption_id: entry.caption_id.clone(),
                    text: entry.text.clone(),
                    role: DraftRole::ExternalRepeat(item_id),
                });
            }
        }
        let mut order: Vec<usize> = (0..drafts.len()).collect();
        rng.shuffle(&mut order);
        let short_gaps = place_repeats(
            &mut drafts,
            &mut order,
            in_hit_repeats,
            h,
            &run_order,
            config.min_repeat_gap,
            &mut rng,
        );

        let mut position_of = vec![0; drafts.len()];
        for (pos, &d) in order.iter().enumerate() {
            position_of[d] = pos;
        }
        let item_id = |d: usize| format!("{hit_id}-{:03}", position_of[d] + 1);
        let mut composition = Composition::default();
        let items: Vec<DisplayItem> = order
            .iter()
            .map(|&d| {
                let draft = &drafts[d];
                let role = match &draft.role {
                    DraftRole::System(run_id) => {
                        composition.system += 1;
                        ItemRole::System { run_id: run_id.clone() }
                    }
                    DraftRole::QcGood => {
                        composition.qc_good += 1;
                        ItemRole::QcGood
                    }
                    DraftRole::QcBad(good) => {
                        composition.qc_bad += 1;
                        ItemRole::QcBad { pair: item_id(*good) }
                    }
                    DraftRole::Repeat(of) => {
                        composition.repeats += 1;
                        ItemRole::Repeat { of: item_id(*of) }
                    }
                    DraftRole::ExternalRepeat(of) => {
                        composition.repeats += 1;
                        ItemRole::Repeat { of: of.clone() }
                    }
                };
                DisplayItem {
                    item_id: item_id(d),
                    video_id: draft.video_id.clone(),
                    video_url: None,
                    caption_id: draft.caption_id.clone(),
                    text: draft.text.clone(),
                    role,
                }
            })
            .collect();
        for item in &items {
            if let ItemRole::System { run_id } = &item.role {
                let entry = SystemEntry {
                    run_id: run_id.clone(),
                    video_id: item.video_id.clone(),
                    caption_id: item.caption_id.clone(),
                    text: item.text.clone(),
                };
                first_showing.push((item.item_id.clone(), entry));
            }
        }
        hits.push(Hit {
            hit_id,
            items,
            composition,
            padded,
            short_gaps,
        });
    }
    Ok(HitPlan {
        seed,
        generator: GENERATOR_ID.to_string(),
        config,
        provenance: None,
        hits,
    })
}

/// Picks first showings from earlier HITs, round-robin across runs, for the
/// padded final HIT. Skips captions already in the HIT and never reuses an
/// item; returns fewer than `count` when earlier HITs run out.
fn external_repeats(
    shown: &[(String, SystemEntry)],
    here: &BTreeSet<&str>,
    run_order: &[String],
    count: usize,
    rng: &mut SeededRng,
) -> Vec<(String, SystemEntry)> {
    let mut by_run: BTreeMap<&str, Vec<&(String, SystemEntry)>> = BTreeMap::new();
    for entry in shown.iter().filter(|(_, e)| !here.contains(e.caption_id.as_str())) {
        by_run.entry(entry.1.run_id.as_str()).or_default().push(entry);
    }
    for pool in by_run.values_mut() {
        rng.shuffle(pool);
    }
    let mut picked = Vec::new();
    while picked.len() < count {
        let before = picked.len();
        for run in run_order {
            if picked.len() == count {
                break;
            }
            if let Some(entry) = by_run.get_mut(run.as_str()).and_then(|pool| pool.pop()) {
                picked.push(entry.clone());
            }
        }
        if picked.len() == before {
            break;
        }
    }
    picked
}

/// Inserts `count` repeats of system items into `order`, each at least `gap`
/// positions after its source when the HIT has room. Sources rotate across
/// runs starting from an offset that depends on the HIT index. Returns the
/// number of repeats that could not honor the gap.
fn place_repeats(
    drafts: &mut Vec<Draft>,
    order: &mut Vec<usize>,
    count: usize,
    hit_index: usize,
    run_order: &[String],
    gap: usize,
    rng: &mut SeededRng,
) -> usize {
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut short = 0;
    for r in 0..count {
        let preferred = &run_order[(hit_index * count.max(1) + r) % run_order.len()];
        let is_source = |d: usize, used: &BTreeSet<usize>, run_filter: bool| match &drafts[d].role {
            DraftRole::System(run) => !used.contains(&d) && (!run_filter || run == preferred),
            _ => false,
        };
        let fits = |pos: usize| order.len() >= pos + gap;
        let candidates = |run_filter: bool, reuse: bool| -> Vec<usize> {
            let empty = BTreeSet::new();
            let used_set = if reuse { &empty } else { &used };
            order
                .iter()
                .enumerate()
                .filter(|&(pos, &d)| fits(pos) && is_source(d, used_set, run_filter))
                .map(|(pos, _)| pos)
                .collect()
        };
        let mut pool = candidates(true, false);
        if pool.is_empty() {
            pool = candidates(false, false);
        }
        if pool.is_empty() {
            pool = candidates(false, true);
        }
        let (source_pos, insert_at) = match rng.choose(&pool) {
            Some(&pos) => (pos, rng.range_inclusive(pos + gap, order.len())),
            None => {
                let Some(pos) = order
                    .iter()
                    .position(|&d| matches!(drafts[d].role, DraftRole::System(_)))
                else {
                    break;
                };
                short += 1;
                (pos, order.len())
            }
        };
        let source = order[source_pos];
        used.insert(source);
        let mut copy = drafts[source].clone();
        copy.role = DraftRole::Repeat(source);
        drafts.push(copy);
        order.insert(insert_at, drafts.len() - 1);
    }
    short
}

impl HitPlan {
    pub fn items(&self) -> impl Iterator<Item = &DisplayItem> {
        self.hits.iter().flat_map(|h| &h.items)
    }

    /// Fills `video_url` from the corpus video table.
    pub fn attach_urls(&mut self, corpus: &Corpus) {
        for hit in &mut self.hits {
            for item in &mut hit.items {
                item.video_url = corpus.video(&item.video_id).and_then(|v| v.url.clone());
            }
        }
    }

    pub fn worker_view(&self, hit_index: usize) -> Vec<WorkerItem> {
        let items = &self.hits[hit_index].items;
        items
            .iter()
            .enumerate()
            .map(|(i, item)| WorkerItem::from_item(item, i + 1, items.len()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), HitPlanError> {
        std::fs::write(path, self.to_json()).map_err(|e| HitPlanError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, HitPlanError> {
        let io = |message: String| HitPlanError::Io {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| io(e.to_string()))
    }

    /// Batch file for external crowdsourcing platforms: one row per HIT with
    /// `item_K_id`, `item_K_url` and `item_K_caption` columns.
    pub fn to_mturk_csv(&self) -> String {
        let width = self.hits.iter().map(|h| h.items.len()).max().unwrap_or(0);
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["hit_id".to_string()];
        for k in 1..=width {
            header.extend([
                format!("item_{k}_id"),
                format!("item_{k}_url"),
                format!("item_{k}_caption"),
            ]);
        }
        writer.write_record(&header).expect("in-memory write");
        for hit in &self.hits {
            let mut row = vec![hit.hit_id.clone()];
            for k in 0..width {
                match hit.items.get(k) {
                    Some(item) => row.extend([
                        item.item_id.clone(),
                        item.video_url.clone().unwrap_or_default(),
                        item.text.clone(),
                    ]),
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn coverage(&self, runs: &[SystemRun]) -> Coverage {
        let index = PlanIndex::new(self);
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for run in runs {
            for video in run.captions.keys() {
                counts.insert((run.run_id.clone(), video.clone()), 0);
            }
        }
        for item in self.items() {
            if let Some(run) = index.system_of(&item.item_id) {
                *counts.entry((run.to_string(), item.video_id.clone())).or_default() += 1;
            }
        }
        let mut multiplicity = BTreeMap::new();
        let mut missing = Vec::new();
        for (key, n) in &counts {
            *multiplicity.entry(*n).or_default() += 1;
            if *n == 0 {
                missing.push(key.clone());
            }
        }
        Coverage {
            captions: counts.len(),
            missing,
            multiplicity,
        }
    }
}

/// Item lookup over a plan.
pub struct PlanIndex<'a> {
    items: HashMap<&'a str, &'a DisplayItem>,
}

impl<'a> PlanIndex<'a> {
    pub fn new(plan: &'a HitPlan) -> Self {
        Self {
            items: plan.items().map(|i| (i.item_id.as_str(), i)).collect(),
        }
    }

    pub fn get(&self, item_id: &str) -> Option<&'a DisplayItem> {
        self.items.get(item_id).copied()
    }

    /// System whose caption the item shows, following repeats.
    pub fn system_of(&self, item_id: &str) -> Option<&'a str> {
        let item = self.get(item_id)?;
        match &item.role {
            ItemRole::System { run_id } => Some(run_id),
            ItemRole::Repeat { of } => match &self.get(of)?.role {
                ItemRole::System { run_id } => Some(run_id),
                _ => None,
            },
            _ => None,
        }
    }
}

/// How often each run caption appears in the plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub captions: usize,
    pub missing: Vec<(String, String)>,
    /// Number of showings → number of captions shown that often.
    pub multiplicity: BTreeMap<usize, usize>,
}

/// Total cost of `num_hits` HITs including the platform fee fraction.
pub fn estimate_cost(num_hits: usize, rate_per_hit: f64, fee_fraction: f64) -> f64 {
    num_hits as f64 * rate_per_hit * (1.0 + fee_fraction)
}
