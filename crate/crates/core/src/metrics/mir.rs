use std::collections::BTreeMap;
use std::path::Path;

use super::MetricError;
use crate::corpus::{data_lines, RankingRun};

/// Mean over truth entries of `1 / rank` of the correct caption.
///
/// Reciprocals are accumulated per distinct rank, so uniform rankings give
/// exact results (all rank 10 yields exactly `0.1`).
pub fn mean_inverted_rank(run: &RankingRun, truth: &BTreeMap<String, String>) -> Result<f64, MetricError> {
    if truth.is_empty() {
        return Err(MetricError::EmptyTruth);
    }
    let mut by_rank: BTreeMap<usize, usize> = BTreeMap::new();
    for (video, correct) in truth {
        let list = run
            .rankings
            .get(video)
            .ok_or_else(|| MetricError::MissingVideo(video.clone()))?;
        let rank = list
            .iter()
            .position(|c| c == correct)
            .ok_or_else(|| MetricError::MissingTruth(video.clone(), correct.clone()))?
            + 1;
        *by_rank.entry(rank).or_insert(0) += 1;
    }
    let n = truth.len() as f64;
    Ok(by_rank
        .iter()
        .map(|(&rank, &count)| (count as f64 / n) / rank as f64)
        .sum())
}

/// `video_id \t caption_id` lines.
pub fn load_truth(path: &Path) -> Result<BTreeMap<String, String>, MetricError> {
    let text = std::fs::read_to_string(path).map_err(|e| MetricError::Io(format!("{}: {e}", path.display())))?;
    let mut truth = BTreeMap::new();
    for (line, l) in data_lines(&text) {
        let (video, caption) = l
            .split_once('\t')
            .ok_or_else(|| MetricError::Io(format!("{}:{line}: expected `video_id<TAB>caption_id`", path.display())))?;
        truth.insert(video.trim().to_string(), caption.trim().to_string());
    }
    Ok(truth)
}
