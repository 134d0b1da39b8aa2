//! Videos, human reference caption sets and system runs.
//!
//! All formats are UTF-8, tab-separated, one record per line; lines starting
//! with `#` and blank lines are ignored.
//!
//! * captions: `caption_id \t video_id \t set_label \t text` (an empty
//!   `caption_id` is replaced by `human-<set>:<video_id>`)
//! * videos: `video_id \t url` (url optional)
//! * description runs: `video_id \t caption_text`
//! * ranking runs: `video_id \t caption_id,caption_id,...`

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::tokenize;

pub const CAPTIONS_FILE: &str = "captions.tsv";
pub const VIDEOS_FILE: &str = "videos.tsv";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no captions in {0}")]
    NoCaptions(PathBuf),
    #[error("duplicate video id `{0}`")]
    DuplicateVideo(String),
    #[error("duplicate caption id `{0}`")]
    DuplicateCaption(String),
    #[error("caption `{caption_id}` references unknown video `{video_id}`")]
    DanglingVideo { caption_id: String, video_id: String },
    #[error("caption `{0}` has no word tokens")]
    EmptyCaption(String),
    #[error("run `{run_id}`: unknown video `{video_id}`")]
    UnknownVideo { run_id: String, video_id: String },
    #[error("run `{run_id}`: video `{video_id}` covered twice")]
    DuplicateCoverage { run_id: String, video_id: String },
    #[error("run `{run_id}`: empty caption text for video `{video_id}`")]
    EmptyRunCaption { run_id: String, video_id: String },
    #[error("run `{run_id}`, video `{video_id}`: {message}")]
    InvalidRanking {
        run_id: String,
        video_id: String,
        message: String,
    },
    #[error("unknown reference set `{0}`")]
    UnknownSet(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoRef {
    pub video_id: String,
    pub url: Option<String>,
}

/// Where a caption came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaptionSource {
    /// A human reference set, keyed by its label (`A`, `B`, ...).
    Human(String),
    System(String),
    /// Automatically degraded copy of the named caption.
    Degraded(String),
}

impl fmt::Display for CaptionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaptionSource::Human(label) => write!(f, "human-{label}"),
            CaptionSource::System(run) => write!(f, "system-{run}"),
            CaptionSource::Degraded(origin) => write!(f, "degraded-{origin}"),
        }
    }
}

impl FromStr for CaptionSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("human-") {
            Ok(CaptionSource::Human(rest.to_string()))
        } else if let Some(rest) = s.strip_prefix("system-") {
            Ok(CaptionSource::System(rest.to_string()))
        } else if let Some(rest) = s.strip_prefix("degraded-") {
            Ok(CaptionSource::Degraded(rest.to_string()))
        } else {
            Err(format!("unrecognized caption source `{s}`"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub caption_id: String,
    pub video_id: String,
    pub text: String,
    pub source: CaptionSource,
}

impl Caption {
    /// Reference-set label for human captions.
    pub fn set_label(&self) -> Option<&str> {
        match &self.source {
            CaptionSource::Human(label) => Some(label),
            _ => None,
        }
    }
}

/// Immutable, validated corpus of videos and human reference captions.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    videos: Vec<VideoRef>,
    video_index: HashMap<String, usize>,
    captions: Vec<Caption>,
    caption_index: HashMap<String, usize>,
}

impl Corpus {
    /// Validates and indexes the given parts: video ids unique, caption ids
    /// unique, every caption resolves to a video and has at least one token.
    pub fn from_parts(videos: Vec<VideoRef>, captions: Vec<Caption>) -> Result<Self, CorpusError> {
        let mut video_index = HashMap::with_capacity(videos.len());
        for (i, v) in videos.iter().enumerate() {
            if v.video_id.is_empty() {
                return Err(CorpusError::DuplicateVideo(String::new()));
            }
            if video_index.insert(v.video_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateVideo(v.video_id.clone()));
            }
        }
        let mut caption_index = HashMap::with_capacity(captions.len());
        for (i, c) in captions.iter().enumerate() {
            if caption_index.insert(c.caption_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateCaption(c.caption_id.clone()));
            }
            if !video_index.contains_key(&c.video_id) {
                return Err(CorpusError::DanglingVideo {
                    caption_id: c.caption_id.clone(),
                    video_id: c.video_id.clone(),
                });
            }
            if tokenize(&c.text).is_err() {
                return Err(CorpusError::EmptyCaption(c.caption_id.clone()));
            }
        }
        Ok(Self {
            videos,
            video_index,
            captions,
            caption_index,
        })
    }

    pub fn videos(&self) -> &[VideoRef] {
        &self.videos
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoRef> {
        self.video_index.get(video_id).map(|&i| &self.videos[i])
    }

    pub fn contains_video(&self, video_id: &str) -> bool {
        self.video_index.contains_key(video_id)
    }

    pub fn captions(&self) -> &[Caption] {
        &self.captions
    }

    pub fn caption(&self, caption_id: &str) -> Option<&Caption> {
        self.caption_index.get(caption_id).map(|&i| &self.captions[i])
    }

    /// Labels of the human reference sets present, sorted.
    pub fn reference_labels(&self) -> Vec<String> {
        self.captions
            .iter()
            .filter_map(Caption::set_label)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect()
    }

    pub fn reference_set(&self, label: &str) -> Result<Vec<&Caption>, CorpusError> {
        let set: Vec<&Caption> = self.captions.iter().filter(|c| c.set_label() == Some(label)).collect();
        if set.is_empty() {
            return Err(CorpusError::UnknownSet(label.to_string()));
        }
        Ok(set)
    }

    /// All human references for one video, in file order.
    pub fn references_for(&self, video_id: &str) -> Vec<&Caption> {
        self.captions
            .iter()
            .filter(|c| c.video_id == video_id && matches!(c.source, CaptionSource::Human(_)))
            .collect()
    }

    pub fn source_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for c in &self.captions {
            *counts.entry(c.source.to_string()).or_insert(0) += 1;
        }
        counts
    }

    /// Presents a human reference set as a system run (`human-<label>`), so it
    /// can be evaluated as a hidden system. The first caption per video wins.
    pub fn reference_as_run(&self, label: &str) -> Result<SystemRun, CorpusError> {
        let mut captions = BTreeMap::new();
        for c in self.reference_set(label)? {
            captions.entry(c.video_id.clone()).or_insert_with(|| c.text.clone());
        }
        let run_id = CaptionSource::Human(label.to_string()).to_string();
        Ok(SystemRun {
            group_id: run_id.clone(),
            run_id,
            captions,
        })
    }

    /// Writes the corpus as `captions.tsv` and `videos.tsv` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut videos = String::new();
        for v in &self.videos {
            videos.push_str(&format!("{}\t{}\n", v.video_id, v.url.as_deref().unwrap_or("")));
        }
        let vpath = dir.join(VIDEOS_FILE);
        fs::write(&vpath, videos).map_err(io_err(&vpath))?;
        let mut captions = String::new();
        for c in &self.captions {
            let label = c.set_label().unwrap_or("");
            captions.push_str(&format!("{}\t{}\t{}\t{}\n", c.caption_id, c.video_id, label, c.text));
        }
        let cpath = dir.join(CAPTIONS_FILE);
        fs::write(&cpath, captions).map_err(io_err(&cpath))
    }

    pub fn load_dir(dir: &Path) -> Result<Self, CorpusError> {
        load_corpus(&dir.join(CAPTIONS_FILE), &dir.join(VIDEOS_FILE))
    }
}

/// Data lines of a tab-separated file with their 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub(crate) fn read_text(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn load_videos(path: &Path) -> Result<Vec<VideoRef>, CorpusError> {
    let text = read_text(path)?;
    let mut videos = Vec::new();
    for (line, l) in data_lines(&text) {
        let mut fields = l.split('\t');
        let video_id = fields.next().unwrap_or("").trim();
        if video_id.is_empty() {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line,
                message: "missing video id".into(),
            });
        }
        let url = fields.next().map(str::trim).filter(|u| !u.is_empty());
        videos.push(VideoRef {
            video_id: video_id.to_string(),
            url: url.map(str::to_string),
        });
    }
    Ok(videos)
}

pub fn load_captions(path: &Path) -> Result<Vec<Caption>, CorpusError> {
    let text = read_text(path)?;
    let mut captions = Vec::new();
    for (line, l) in data_lines(&text) {
        let malformed = |message: &str| CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        };
        let fields: Vec<&str> = l.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(malformed("expected 4 tab-separated fields"));
        }
        let (id, video_id, label, text) = (fields[0].trim(), fields[1].trim(), fields[2].trim(), fields[3].trim());
        if video_id.is_empty() {
            return Err(malformed("missing video id"));
        }
        if label.is_empty() {
            return Err(malformed("missing set label"));
        }
        if text.is_empty() {
            return Err(malformed("empty caption text"));
        }
        let source = CaptionSource::Human(label.to_string());
        let caption_id = if id.is_empty() {
            format!("{source}:{video_id}")
        } else {
            id.to_string()
        };
        captions.push(Caption {
            caption_id,
            video_id: video_id.to_string(),
            text: text.to_string(),
            source,
        });
    }
    Ok(captions)
}

/// Loads and validates a corpus from a captions file and a videos file.
pub fn load_corpus(captions_path: &Path, videos_path: &Path) -> Result<Corpus, CorpusError> {
    let videos = load_videos(videos_path)?;
    let captions = load_captions(captions_path)?;
    if captions.is_empty() {
        return Err(CorpusError::NoCaptions(captions_path.to_path_buf()));
    }
    Corpus::from_parts(videos, captions)
}

/// One caption per covered video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemRun {
    pub run_id: String,
    pub group_id: String,
    pub captions: BTreeMap<String, String>,
}

impl SystemRun {
    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }

    /// Deterministic caption id for this run's caption of `video_id`.
    pub fn caption_id(&self, video_id: &str) -> String {
        format!("{}:{video_id}", self.run_id)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = String::new();
        for (video, text) in &self.captions {
            out.push_str(&format!("{video}\t{text}\n"));
        }
        fs::write(path, out).map_err(io_err(path))
    }
}

/// Ordered candidate caption ids per video, rank 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingRun {
    pub run_id: String,
    pub rankings: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Description,
    Ranking,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Run {
    Description(SystemRun),
    Ranking(RankingRun),
}

/// Run id is the file stem; group id is the part of the run id before the
/// first `_` (or the whole id).
fn run_ids(path: &Path) -> (String, String) {
    let run_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let group_id = run_id.split('_').next().unwrap_or(&run_id).to_string();
    (run_id, group_id)
}

pub fn load_run(path: &Path, kind: RunKind, corpus: &Corpus) -> Result<Run, CorpusError> {
    match kind {
        RunKind::Description => load_description_run(path, corpus).map(Run::Description),
        RunKind::Ranking => load_ranking_run(path, corpus).map(Run::Ranking),
    }
}

pub fn load_description_run(path: &Path, corpus: &Corpus) -> Result<SystemRun, CorpusError> {
    let (run_id, group_id) = run_ids(path);
    let text = read_text(path)?;
    let mut captions = BTreeMap::new();
    for (line, l) in data_lines(&text) {
        let Some((video_id, caption)) = l.split_once('\t') else {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line,
                message: "expected `video_id<TAB>caption`".into(),
            });
        };
        let video_id = video_id.trim();
        let caption = caption.trim();
        if !corpus.contains_video(video_id) {
            return Err(CorpusError::UnknownVideo {
                run_id,
                video_id: video_id.to_string(),
            });
        }
        if caption.is_empty() || tokenize(caption).is_err() {
            return Err(CorpusError::EmptyRunCaption {
                run_id,
                video_id: video_id.to_string(),
            });
        }
        if captions.insert(video_id.to_string(), caption.to_string()).is_some() {
            return Err(CorpusError::DuplicateCoverage {
                run_id,
                video_id: video_id.to_string(),
            });
        }
    }
    Ok(SystemRun {
        run_id,
        group_id,
        captions,
    })
}

/// Loads a ranking run. The candidate pool is the union of ids across all
/// lists; every list must be a duplicate-free permutation of that pool.
pub fn load_ranking_run(path: &Path, corpus: &Corpus) -> Result<RankingRun, CorpusError> {
    let (run_id, _) = run_ids(path);
    let text = read_text(path)?;
    let mut rankings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (line, l) in data_lines(&text) {
        let Some((video_id, list)) = l.split_once('\t') else {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line,
                message: "expected `video_id<TAB>id,id,...`".into(),
            });
        };
        let video_id = video_id.trim().to_string();
        if !corpus.contains_video(&video_id) {
            return Err(CorpusError::UnknownVideo { run_id, video_id });
        }
        let ids: Vec<String> = list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if rankings.contains_key(&video_id) {
            return Err(CorpusError::DuplicateCoverage { run_id, video_id });
        }
        rankings.insert(video_id, ids);
    }
    let run = RankingRun { run_id, rankings };
    validate_pool(&run)?;
    Ok(run)
}

fn validate_pool(run: &RankingRun) -> Result<(), CorpusError> {
    let pool: HashSet<&str> = run.rankings.values().flatten().map(String::as_str).collect();
    for (video_id, list) in &run.rankings {
        let invalid = |message: String| CorpusError::InvalidRanking {
            run_id: run.run_id.clone(),
            video_id: video_id.clone(),
            message,
        };
        let mut seen = HashSet::new();
        for id in list {
            if !seen.insert(id.as_str()) {
                return Err(invalid(format!("candidate `{id}` listed twice")));
            }
        }
        if seen.len() != pool.len() {
            let mut missing: Vec<&str> = pool.difference(&seen).copied().collect();
            missing.sort_unstable();
            return Err(invalid(format!("list omits candidates {missing:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    fn small(dir: &Path) -> Corpus {
        let v = write(dir, "v.tsv", "# videos\nv1\thttp://x/1.mp4\nv2\t\nv3\n");
        let c = write(
            dir,
            "c.tsv",
            "c1\tv1\tA\tA dog runs.\n\tv1\tB\ta puppy running\nc3\tv2\tA\ta cat sleeps\n\tv2\tB\tcat asleep\n",
        );
        load_corpus(&c, &v).unwrap()
    }

    #[test]
    fn loads_and_assigns_ids() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small(dir.path());
        assert_eq!(corpus.videos().len(), 3);
        assert_eq!(corpus.captions().len(), 4);
        assert!(corpus.caption("human-B:v1").is_some());
        assert_eq!(corpus.video("v1").unwrap().url.as_deref(), Some("http://x/1.mp4"));
        assert_eq!(corpus.video("v2").unwrap().url, None);
        assert_eq!(corpus.reference_labels(), ["A", "B"]);
        assert_eq!(corpus.source_counts()["human-A"], 2);
        assert_eq!(corpus.references_for("v1").len(), 2);
        assert!(matches!(corpus.reference_set("C"), Err(CorpusError::UnknownSet(_))));
    }

    #[test]
    fn empty_caption_file() {
        let dir = tempfile::tempdir().unwrap();
        let v = write(dir.path(), "v.tsv", "v1\n");
        let c = write(dir.path(), "c.tsv", "# nothing\n");
        assert!(matches!(load_corpus(&c, &v), Err(CorpusError::NoCaptions(_))));
    }

    #[test]
    fn dangling_video_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let v = write(dir.path(), "v.tsv", "v1\n");
        let c = write(dir.path(), "c.tsv", "c1\tv9\tA\ta dog\n");
        let err = load_corpus(&c, &v).unwrap_err();
        assert!(err.to_string().contains("v9"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let v = write(dir.path(), "v.tsv", "v1\n");
        let c = write(dir.path(), "c.tsv", "c1\tv1\tA\ta dog\nbroken line\n");
        match load_corpus(&c, &v) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_caption_id() {
        let dir = tempfile::tempdir().unwrap();
        let v = write(dir.path(), "v.tsv", "v1\n");
        let c = write(dir.path(), "c.tsv", "c1\tv1\tA\ta dog\nc1\tv1\tB\ta cat\n");
        assert!(matches!(load_corpus(&c, &v), Err(CorpusError::DuplicateCaption(_))));
    }

    #[test]
    fn punctuation_only_caption_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let v = write(dir.path(), "v.tsv", "v1\n");
        let c = write(dir.path(), "c.tsv", "c1\tv1\tA\t...\n");
        assert!(matches!(load_corpus(&c, &v), Err(CorpusError::EmptyCaption(_))));
    }

    #[test]
    fn save_and_reload_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small(dir.path());
        let store = dir.path().join("store");
        corpus.save(&store).unwrap();
        assert_eq!(Corpus::load_dir(&store).unwrap(), corpus);
    }

    #[test]
    fn description_run_validation() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small(dir.path());
        let ok = write(dir.path(), "team_run1.tsv", "v1\ta dog\nv2\ta cat\n");
        let run = load_description_run(&ok, &corpus).unwrap();
        assert_eq!(
            (run.run_id.as_str(), run.group_id.as_str(), run.len()),
            ("team_run1", "team", 2)
        );
        assert_eq!(run.caption_id("v1"), "team_run1:v1");

        let dup = write(dir.path(), "dup.tsv", "v1\ta dog\nv1\tanother\n");
        assert!(matches!(
            load_description_run(&dup, &corpus),
            Err(CorpusError::DuplicateCoverage { .. })
        ));
        let unknown = write(dir.path(), "unk.tsv", "v7\ta dog\n");
        assert!(matches!(
            load_description_run(&unknown, &corpus),
            Err(CorpusError::UnknownVideo { .. })
        ));
        let empty = write(dir.path(), "empty.tsv", "v1\t  \n");
        assert!(matches!(
            load_description_run(&empty, &corpus),
            Err(CorpusError::EmptyRunCaption { .. })
        ));
    }

    #[test]
    fn ranking_run_must_permute_pool() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small(dir.path());
        let ok = write(dir.path(), "r.tsv", "v1\tc1,c3\nv2\tc3,c1\n");
        match load_run(&ok, RunKind::Ranking, &corpus).unwrap() {
            Run::Ranking(r) => assert_eq!(r.rankings["v2"], ["c3", "c1"]),
            other => panic!("{other:?}"),
        }
        let omits = write(dir.path(), "r2.tsv", "v1\tc1,c3\nv2\tc3\n");
        assert!(matches!(
            load_ranking_run(&omits, &corpus),
            Err(CorpusError::InvalidRanking { .. })
        ));
        let repeated = write(dir.path(), "r3.tsv", "v1\tc1,c1\n");
        assert!(matches!(
            load_ranking_run(&repeated, &corpus),
            Err(CorpusError::InvalidRanking { .. })
        ));
    }

    #[test]
    fn reference_set_as_hidden_system() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small(dir.path());
        let run = corpus.reference_as_run("B").unwrap();
        assert_eq!(run.run_id, "human-B");
        assert_eq!(run.captions["v2"], "cat asleep");
    }

    #[test]
    fn source_display_round_trip() {
        for s in [
            CaptionSource::Human("A".into()),
            CaptionSource::System("r1".into()),
            CaptionSource::Degraded("c1".into()),
        ] {
            assert_eq!(s.to_string().parse::<CaptionSource>().unwrap(), s);
        }
    }
}
