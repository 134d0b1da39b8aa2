//! Worker quality control and system scoring over an assessment store.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hitplan::{HitPlan, ItemRole, PlanIndex};
use crate::stats::{signed_rank, StatsError};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("record references unknown item `{0}`")]
    UnknownItem(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// One rating as stored: `worker \t item \t score \t timestamp_ms [\t session]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub worker_id: String,
    pub item_id: String,
    pub raw_score: u8,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
}

impl AssessmentRecord {
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{}\t{}\t{}\t{}",
            self.worker_id, self.item_id, self.raw_score, self.timestamp
        );
        if let Some(s) = &self.session_id {
            line.push('\t');
            line.push_str(s);
        }
        line.push('\n');
        line
    }

    pub fn parse_line(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&f.len()) {
            return Err(format!("expected 4 or 5 tab-separated fields, got {}", f.len()));
        }
        if f[0].is_empty() || f[1].is_empty() {
            return Err("empty worker or item id".into());
        }
        let score: u32 = f[2].parse().map_err(|_| format!("bad score `{}`", f[2]))?;
        if score > 100 {
            return Err(format!("score {score} outside 0..=100"));
        }
        let timestamp = f[3].parse().map_err(|_| format!("bad timestamp `{}`", f[3]))?;
        Ok(Self {
            worker_id: f[0].to_string(),
            item_id: f[1].to_string(),
            raw_score: score as u8,
            timestamp,
            session_id: f.get(4).filter(|s| !s.is_empty()).map(|s| s.to_string()),
        })
    }
}

pub fn parse_store(text: &str, origin: &str) -> Result<Vec<AssessmentRecord>, AnalyticsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            AssessmentRecord::parse_line(l.trim_end_matches('\r')).map_err(|message| AnalyticsError::Malformed {
                path: origin.to_string(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

pub fn load_store(path: &Path) -> Result<Vec<AssessmentRecord>, AnalyticsError> {
    let text = std::fs::read_to_string(path).map_err(|e| AnalyticsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_store(&text, &path.display().to_string())
}

pub fn write_store(records: &[AssessmentRecord]) -> String {
    records.iter().map(AssessmentRecord::to_line).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcConfig {
    pub alpha: f64,
    pub min_pairs: usize,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            min_pairs: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkerStatus {
    Passed,
    Failed,
    InsufficientData,
}

impl std::fmt::Display for WorkerStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WorkerStatus::Passed => "passed",
            WorkerStatus::Failed => "failed",
            WorkerStatus::InsufficientData => "insufficient-data",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerProfile {
    pub worker_id: String,
    pub n_assessments: usize,
    pub mean: f64,
    pub sd: f64,
    pub qc_pairs: usize,
    pub qc_p_value: Option<f64>,
    pub repeat_pairs: usize,
    pub repeat_p_value: Option<f64>,
    pub status: WorkerStatus,
}

impl WorkerProfile {
    /// Repeat ratings show no significant difference at `alpha`.
    pub fn repeat_consistent(&self, alpha: f64) -> Option<bool> {
        self.repeat_p_value.map(|p| p >= alpha)
    }
}

/// One-sided signed-rank gate on (good, bad) score pairs.
///
/// Fewer than `min_pairs` pairs is insufficient data. All-zero differences
/// fail with p = 1.
pub fn qc_decision(pairs: &[(f64, f64)], config: &QcConfig) -> (WorkerStatus, Option<f64>) {
    if pairs.len() < config.min_pairs {
        return (WorkerStatus::InsufficientData, None);
    }
    match signed_rank(pairs) {
        Ok(t) if t.p_greater < config.alpha => (WorkerStatus::Passed, Some(t.p_greater)),
        Ok(t) => (WorkerStatus::Failed, Some(t.p_greater)),
        Err(StatsError::Degenerate) => (WorkerStatus::Failed, Some(1.0)),
        Err(_) => (WorkerStatus::InsufficientData, None),
    }
}

/// Two-sided signed-rank p for (first showing, repeat) pairs; identical
/// scores throughout count as fully consistent.
pub fn repeat_consistency(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    match signed_rank(pairs) {
        Ok(t) => Some(t.p_two_sided),
        Err(StatsError::Degenerate) => Some(1.0),
        Err(_) => None,
    }
}

/// A rating as a real number. QC, standardization and scoring all work on
/// this form, so any positive affine rescaling of a worker can be analyzed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub worker_id: String,
    pub item_id: String,
    pub raw: f64,
}

impl From<&AssessmentRecord> for Rating {
    fn from(r: &AssessmentRecord) -> Self {
        Self {
            worker_id: r.worker_id.clone(),
            item_id: r.item_id.clone(),
            raw: f64::from(r.raw_score),
        }
    }
}

pub fn ratings(records: &[AssessmentRecord]) -> Vec<Rating> {
    records.iter().map(Rating::from).collect()
}

fn check_items(records: &[Rating], index: &PlanIndex<'_>) -> Result<(), AnalyticsError> {
    match records.iter().find(|r| index.get(&r.item_id).is_none()) {
        Some(r) => Err(AnalyticsError::UnknownItem(r.item_id.clone())),
        None => Ok(()),
    }
}

/// First score per item for one worker.
fn first_scores<'r>(records: &[&'r Rating]) -> HashMap<&'r str, f64> {
    let mut out = HashMap::new();
    for r in records {
        out.entry(r.item_id.as_str()).or_insert(r.raw);
    }
    out
}

/// Paired scores completed by one worker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkerPairs {
    /// (original, degraded)
    pub qc: Vec<(f64, f64)>,
    /// (first showing, repeat)
    pub repeats: Vec<(f64, f64)>,
}

pub fn worker_pairs(records: &[&Rating], index: &PlanIndex<'_>) -> WorkerPairs {
    let scores = first_scores(records);
    let mut qc = Vec::new();
    let mut repeats = Vec::new();
    let mut ids: Vec<&&str> = scores.keys().collect();
    ids.sort();
    for id in ids {
        let Some(item) = index.get(id) else { continue };
        match &item.role {
            ItemRole::QcBad { pair } => {
                if let Some(good) = scores.get(pair.as_str()) {
                    qc.push((*good, scores[*id]));
                }
            }
            ItemRole::Repeat { of } => {
                if let Some(first) = scores.get(of.as_str()) {
                    repeats.push((*first, scores[*id]));
                }
            }
            _ => {}
        }
    }
    WorkerPairs { qc, repeats }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn by_worker(records: &[Rating]) -> BTreeMap<&str, Vec<&Rating>> {
    let mut map: BTreeMap<&str, Vec<&Rating>> = BTreeMap::new();
    for r in records {
        map.entry(r.worker_id.as_str()).or_default().push(r);
    }
    map
}

pub fn worker_qc(worker_id: &str, records: &[&Rating], index: &PlanIndex<'_>, config: &QcConfig) -> WorkerProfile {
    let scores: Vec<f64> = records.iter().map(|r| r.raw).collect();
    let (mean, sd) = if scores.is_empty() {
        (0.0, 0.0)
    } else {
        mean_sd(&scores)
    };
    let WorkerPairs { qc, repeats } = worker_pairs(records, index);
    let (status, qc_p_value) = qc_decision(&qc, config);
    WorkerProfile {
        worker_id: worker_id.to_string(),
        n_assessments: records.len(),
        mean,
        sd,
        qc_pairs: qc.len(),
        qc_p_value,
        repeat_pairs: repeats.len(),
        repeat_p_value: repeat_consistency(&repeats),
        status,
    }
}

/// Profiles for every worker in the store, ordered by worker id.
pub fn worker_profiles(records: &[Rating], index: &PlanIndex<'_>, config: &QcConfig) -> Vec<WorkerProfile> {
    let grouped: Vec<(&str, Vec<&Rating>)> = by_worker(records).into_iter().collect();
    grouped
        .par_iter()
        .map(|(w, rs)| worker_qc(w, rs, index, config))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZRecord {
    pub worker_id: String,
    pub item_id: String,
    pub raw_score: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub records: Vec<ZRecord>,
    /// Passed workers whose scores have zero spread.
    pub excluded: Vec<String>,
}

/// Standardizes records of passed workers by each worker's own mean and
/// sample standard deviation over all their ratings.
pub fn standardize(records: &[Rating], profiles: &[WorkerProfile]) -> Standardized {
    let passed: HashMap<&str, &WorkerProfile> = profiles
        .iter()
        .filter(|p| p.status == WorkerStatus::Passed)
        .map(|p| (p.worker_id.as_str(), p))
        .collect();
    let mut out = Standardized::default();
    for (worker, rs) in by_worker(records) {
        if !passed.contains_key(worker) {
            continue;
        }
        let scores: Vec<f64> = rs.iter().map(|r| r.raw).collect();
        let (mean, sd) = mean_sd(&scores);
        if sd == 0.0 || !sd.is_finite() {
            log::warn!("worker {worker} has zero score spread and cannot be standardized; excluded");
            out.excluded.push(worker.to_string());
            continue;
        }
        out.records.extend(rs.iter().zip(&scores).map(|(r, &x)| ZRecord {
            worker_id: r.worker_id.clone(),
            item_id: r.item_id.clone(),
            raw_score: x,
            z: (x - mean) / sd,
        }));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemScore {
    pub system: String,
    pub raw_avg: f64,
    pub z_avg: f64,
    /// Distinct captions assessed.
    pub n: usize,
}

/// Per system, per caption: (mean raw, mean z) over all ratings of that caption.
fn caption_means<'a>(records: &[ZRecord], index: &PlanIndex<'a>) -> BTreeMap<&'a str, BTreeMap<&'a str, (f64, f64)>> {
    let mut sums: BTreeMap<&str, BTreeMap<&str, (f64, f64, usize)>> = BTreeMap::new();
    for r in records {
        let Some(system) = index.system_of(&r.item_id) else {
            continue;
        };
        let caption = index.get(&r.item_id).map(|i| i.caption_id.as_str()).unwrap_or_default();
        let e = sums.entry(system).or_default().entry(caption).or_insert((0.0, 0.0, 0));
        e.0 += r.raw_score;
        e.1 += r.z;
        e.2 += 1;
    }
    sums.into_iter()
        .map(|(s, caps)| {
            let means = caps
                .into_iter()
                .map(|(c, (raw, z, n))| (c, (raw / n as f64, z / n as f64)))
                .collect();
            (s, means)
        })
        .collect()
}

/// Two-stage means, per caption then per system, ordered by `z_avg`
/// descending. Systems in the plan with no assessed captions are omitted.
pub fn system_scores(records: &[ZRecord], plan: &HitPlan, index: &PlanIndex<'_>) -> Vec<SystemScore> {
    let means = caption_means(records, index);
    let mut scores: Vec<SystemScore> = means
        .iter()
        .map(|(system, caps)| {
            let n = caps.len();
            let (raw, z) = caps.values().fold((0.0, 0.0), |acc, m| (acc.0 + m.0, acc.1 + m.1));
            SystemScore {
                system: system.to_string(),
                raw_avg: raw / n as f64,
                z_avg: z / n as f64,
                n,
            }
        })
        .collect();
    for item in plan.items() {
        if let ItemRole::System { run_id } = &item.role {
            if !means.contains_key(run_id.as_str()) {
                log::warn!("system {run_id} has no assessed captions; omitted");
                break;
            }
        }
    }
    scores.sort_by(|a, b| b.z_avg.total_cmp(&a.z_avg).then_with(|| a.system.cmp(&b.system)));
    scores
}

/// Per-caption mean z for each system, for the significance matrix.
pub fn caption_samples(records: &[ZRecord], index: &PlanIndex<'_>) -> Vec<(String, Vec<f64>)> {
    caption_means(records, index)
        .into_iter()
        .map(|(s, caps)| (s.to_string(), caps.values().map(|m| m.1).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub profiles: Vec<WorkerProfile>,
    pub standardized: Standardized,
    pub scores: Vec<SystemScore>,
}

impl Analysis {
    pub fn status_counts(&self) -> BTreeMap<WorkerStatus, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.profiles {
            *counts.entry(p.status).or_default() += 1;
        }
        counts
    }
}

/// QC, standardization and scoring in one pass.
pub fn analyze(records: &[AssessmentRecord], plan: &HitPlan, config: &QcConfig) -> Result<Analysis, AnalyticsError> {
    analyze_ratings(&ratings(records), plan, config)
}

pub fn analyze_ratings(records: &[Rating], plan: &HitPlan, config: &QcConfig) -> Result<Analysis, AnalyticsError> {
    let index = PlanIndex::new(plan);
    check_items(records, &index)?;
    let profiles = worker_profiles(records, &index, config);
    let standardized = standardize(records, &profiles);
    let scores = system_scores(&standardized.records, plan, &index);
    Ok(Analysis {
        profiles,
        standardized,
        scores,
    })
}

fn opt(p: Option<f64>) -> String {
    p.map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into())
}

pub fn profiles_tsv(profiles: &[WorkerProfile]) -> String {
    let mut out = String::from("worker_id\tn\tmean\tsd\tqc_pairs\tqc_p\trepeat_pairs\trepeat_p\tstatus\n");
    for p in profiles {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}",
            p.worker_id,
            p.n_assessments,
            p.mean,
            p.sd,
            p.qc_pairs,
            opt(p.qc_p_value),
            p.repeat_pairs,
            opt(p.repeat_p_value),
            p.status
        );
    }
    out
}

pub fn scores_tsv(scores: &[SystemScore]) -> String {
    let mut out = String::from("system\traw_avg\tz_avg\tn\n");
    for s in scores {
        let _ = writeln!(out, "{}\t{:.4}\t{:.6}\t{}", s.system, s.raw_avg, s.z_avg, s.n);
    }
    out
}

/// Fixed-width leaderboard for terminals.
pub fn scores_table(scores: &[SystemScore]) -> String {
    let width = scores.iter().map(|s| s.system.len()).max().unwrap_or(6).max(6);
    let mut out = format!("{:width$}  {:>7}  {:>8}  {:>6}\n", "system", "raw %", "z", "n");
    for s in scores {
        let _ = writeln!(
            out,
            "{:width$}  {:>7.1}  {:>8.3}  {:>6}",
            s.system, s.raw_avg, s.z_avg, s.n
        );
    }
    out
}
