//! Session bookkeeping and the durable rating store.
//!
//! All mutations go through one mutex, which also serializes appends to the
//! store. A rating is written and synced before the call returns. Sessions are
//! journaled to a sidecar file so that, together with the session column of
//! the store, a restarted collector resumes exactly where it stopped.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use capeval_core::analytics::{parse_store, AssessmentRecord};
use capeval_core::hitplan::{HitPlan, WorkerItem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub trait Clock: Send + Sync {
    /// Milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Settable clock for tests.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(ms: u64) -> Self {
        Self(AtomicU64::new(ms))
    }

    pub fn advance(&self, by: Duration) {
        self.0.fetch_add(by.as_millis() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("worker id must be nonempty")]
    EmptyWorker,
    #[error("no HIT capacity left; collection complete")]
    CollectionComplete,
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` expired after inactivity")]
    SessionExpired(String),
    #[error("session `{0}` is already complete")]
    SessionComplete(String),
    #[error("score {0} outside 0..=100")]
    ScoreOutOfRange(i64),
    #[error("item `{0}` is not part of this session's HIT")]
    UnknownItem(String),
    #[error("item `{item}` is not the current item (expected `{expected}`)")]
    NotCurrent { item: String, expected: String },
    #[error("item `{item}` already rated {stored}")]
    AlreadyRated { item: String, stored: u8 },
    #[error("storage failure: {0}")]
    Storage(String),
}

impl CollectError {
    pub fn code(&self) -> &'static str {
        match self {
            CollectError::EmptyWorker => "invalid_worker",
            CollectError::CollectionComplete => "collection_complete",
            CollectError::UnknownSession(_) => "unknown_session",
            CollectError::SessionExpired(_) => "session_expired",
            CollectError::SessionComplete(_) => "session_complete",
            CollectError::ScoreOutOfRange(_) => "score_out_of_range",
            CollectError::UnknownItem(_) => "unknown_item",
            CollectError::NotCurrent { .. } => "item_not_current",
            CollectError::AlreadyRated { .. } => "duplicate_rating",
            CollectError::Storage(_) => "storage_error",
        }
    }
}

fn storage(e: std::io::Error) -> CollectError {
    CollectError::Storage(e.to_string())
}

#[derive(Debug, Clone)]
pub struct CollectorConfig {
    pub plan_path: PathBuf,
    pub store_path: PathBuf,
    /// Defaults to the store path with a `.sessions` suffix.
    pub journal_path: Option<PathBuf>,
    pub session_timeout: Duration,
    /// Sessions per HIT.
    pub redundancy: usize,
}

impl CollectorConfig {
    pub fn new(plan_path: impl Into<PathBuf>, store_path: impl Into<PathBuf>) -> Self {
        Self {
            plan_path: plan_path.into(),
            store_path: store_path.into(),
            journal_path: None,
            session_timeout: Duration::from_secs(60 * 60),
            redundancy: 1,
        }
    }

    fn journal(&self) -> PathBuf {
        self.journal_path.clone().unwrap_or_else(|| {
            let mut p = self.store_path.clone().into_os_string();
            p.push(".sessions");
            PathBuf::from(p)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Active,
    Completed,
    Abandoned,
}

#[derive(Debug, Clone)]
struct Session {
    worker_id: String,
    hit: usize,
    scores: Vec<Option<u8>>,
    state: SessionState,
    last_activity: u64,
}

impl Session {
    fn cursor(&self) -> usize {
        self.scores
            .iter()
            .position(Option::is_none)
            .unwrap_or(self.scores.len())
    }

    fn answered(&self) -> usize {
        self.scores.iter().filter(|s| s.is_some()).count()
    }
}

/// Reply to a session start, a poll or a rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub worker_id: String,
    pub state: SessionState,
    pub answered: usize,
    pub total: usize,
    /// Next item to rate; absent once the HIT is complete.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<WorkerItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AbandonedSession {
    pub session_id: String,
    pub worker_id: String,
    pub hit_id: String,
    pub answered: usize,
}

/// Operator view; rebuilt after every change so reads never wait on writers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatusSnapshot {
    pub hits_total: usize,
    pub hits_complete: usize,
    pub redundancy: usize,
    pub ratings: usize,
    pub sessions_active: usize,
    pub sessions_completed: usize,
    pub sessions_abandoned: usize,
    pub per_worker: BTreeMap<String, usize>,
    /// Abandoned sessions with retained partial ratings.
    pub partial: Vec<AbandonedSession>,
}

struct State {
    sessions: BTreeMap<String, Session>,
    /// Per HIT: sessions that are active or completed.
    reserved: Vec<usize>,
    completed: Vec<usize>,
    per_worker: BTreeMap<String, usize>,
    ratings: usize,
    store: File,
    journal: File,
}

pub struct Collector {
    plan: HitPlan,
    positions: Vec<HashMap<String, usize>>,
    config: CollectorConfig,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
    snapshot: RwLock<Arc<StatusSnapshot>>,
}

fn open_append(path: &Path) -> Result<File, CollectError> {
    OpenOptions::new().create(true).append(true).open(path).map_err(storage)
}

fn read_or_empty(path: &Path) -> Result<String, CollectError> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
        Err(e) => Err(storage(e)),
    }
}

impl Collector {
    pub fn open(config: CollectorConfig, clock: Arc<dyn Clock>) -> Result<Self, CollectError> {
        let plan = HitPlan::load(&config.plan_path).map_err(|e| CollectError::Storage(e.to_string()))?;
        Self::with_plan(plan, config, clock)
    }

    /// Starts from `plan`, replaying any existing journal and store.
    pub fn with_plan(plan: HitPlan, config: CollectorConfig, clock: Arc<dyn Clock>) -> Result<Self, CollectError> {
        let positions: Vec<HashMap<String, usize>> = plan
            .hits
            .iter()
            .map(|h| {
                h.items
                    .iter()
                    .enumerate()
                    .map(|(i, it)| (it.item_id.clone(), i))
                    .collect()
            })
            .collect();
        let hit_index: HashMap<&str, usize> = plan
            .hits
            .iter()
            .enumerate()
            .map(|(i, h)| (h.hit_id.as_str(), i))
            .collect();

        let mut sessions = BTreeMap::new();
        for line in read_or_empty(&config.journal())?.lines() {
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["start", id, worker, hit, ts] => {
                    let Some(&h) = hit_index.get(hit) else { continue };
                    sessions.insert(
                        id.to_string(),
                        Session {
                            worker_id: worker.to_string(),
                            hit: h,
                            scores: vec![None; plan.hits[h].items.len()],
                            state: SessionState::Active,
                            last_activity: ts.parse().unwrap_or(0),
                        },
                    );
                }
                ["abandon", id, _] => {
                    if let Some(s) = sessions.get_mut(*id) {
                        s.state = SessionState::Abandoned;
                    }
                }
                _ => log::warn!("ignoring malformed journal line `{line}`"),
            }
        }

        let mut store_text = read_or_empty(&config.store_path)?;
        if !store_text.is_empty() && !store_text.ends_with('\n') {
            // A write interrupted mid-line; the rating was never acknowledged.
            let keep = store_text.rfind('\n').map_or(0, |i| i + 1);
            log::warn!("dropping torn tail of {}", config.store_path.display());
            store_text.truncate(keep);
            OpenOptions::new()
                .write(true)
                .open(&config.store_path)
                .and_then(|f| f.set_len(keep as u64))
                .map_err(storage)?;
        }
        let records = parse_store(&store_text, &config.store_path.display().to_string())
            .map_err(|e| CollectError::Storage(e.to_string()))?;
        let mut per_worker: BTreeMap<String, usize> = BTreeMap::new();
        for r in &records {
            *per_worker.entry(r.worker_id.clone()).or_default() += 1;
            let Some(session) = r.session_id.as_deref().and_then(|id| sessions.get_mut(id)) else {
                continue;
            };
            if let Some(&pos) = positions[session.hit].get(&r.item_id) {
                session.scores[pos].get_or_insert(r.raw_score);
                session.last_activity = session.last_activity.max(r.timestamp);
            }
        }
        let mut reserved = vec![0; plan.hits.len()];
        let mut completed = vec![0; plan.hits.len()];
        for s in sessions.values_mut() {
            if s.state == SessionState::Active && s.cursor() == s.scores.len() {
                s.state = SessionState::Completed;
            }
            match s.state {
                SessionState::Active => reserved[s.hit] += 1,
                SessionState::Completed => {
                    reserved[s.hit] += 1;
                    completed[s.hit] += 1;
                }
                SessionState::Abandoned => {}
            }
        }

        let state = State {
            sessions,
            reserved,
            completed,
            per_worker,
            ratings: records.len(),
            store: open_append(&config.store_path)?,
            journal: open_append(&config.journal())?,
        };
        let collector = Self {
            plan,
            positions,
            config,
            clock,
            state: Mutex::new(state),
            snapshot: RwLock::new(Arc::new(StatusSnapshot::default())),
        };
        {
            let mut st = collector.lock();
            collector.publish(&st);
            collector.expire(&mut st)?;
        }
        Ok(collector)
    }

    pub fn plan(&self) -> &HitPlan {
        &self.plan
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn view(&self, id: &str, s: &Session) -> SessionView {
        let hit = &self.plan.hits[s.hit];
        let cursor = s.cursor();
        SessionView {
            session_id: id.to_string(),
            worker_id: s.worker_id.clone(),
            state: s.state,
            answered: s.answered(),
            total: hit.items.len(),
            item: (s.state == SessionState::Active && cursor < hit.items.len())
                .then(|| WorkerItem::from_item(&hit.items[cursor], cursor + 1, hit.items.len())),
        }
    }

    fn publish(&self, st: &State) {
        let mut snap = StatusSnapshot {
            hits_total: self.plan.hits.len(),
            hits_complete: st.completed.iter().filter(|&&c| c >= self.config.redundancy).count(),
            redundancy: self.config.redundancy,
            ratings: st.ratings,
            per_worker: st.per_worker.clone(),
            ..StatusSnapshot::default()
        };
        for (id, s) in &st.sessions {
            match s.state {
                SessionState::Active => snap.sessions_active += 1,
                SessionState::Completed => snap.sessions_completed += 1,
                SessionState::Abandoned => {
                    snap.sessions_abandoned += 1;
                    if s.answered() > 0 {
                        snap.partial.push(AbandonedSession {
                            session_id: id.clone(),
                            worker_id: s.worker_id.clone(),
                            hit_id: self.plan.hits[s.hit].hit_id.clone(),
                            answered: s.answered(),
                        });
                    }
                }
            }
        }
        *self.snapshot.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(snap);
    }

    /// Releases the HITs of sessions idle past the timeout.
    fn expire(&self, st: &mut State) -> Result<(), CollectError> {
        let now = self.clock.now_ms();
        let timeout = self.config.session_timeout.as_millis() as u64;
        let stale: Vec<String> = st
            .sessions
            .iter()
            .filter(|(_, s)| s.state == SessionState::Active && now.saturating_sub(s.last_activity) > timeout)
            .map(|(id, _)| id.clone())
            .collect();
        if stale.is_empty() {
            return Ok(());
        }
        for id in &stale {
            writeln!(st.journal, "abandon\t{id}\t{now}").map_err(storage)?;
        }
        st.journal.sync_data().map_err(storage)?;
        for id in stale {
            let hit = {
                let s = st.sessions.get_mut(&id).expect("stale session exists");
                s.state = SessionState::Abandoned;
                s.hit
            };
            st.reserved[hit] -= 1;
            log::info!("session {id} abandoned; HIT {} released", self.plan.hits[hit].hit_id);
        }
        self.publish(st);
        Ok(())
    }

    /// Reserves the lowest-indexed HIT with spare capacity that this worker
    /// has not already taken.
    pub fn start_session(&self, worker_id: &str) -> Result<SessionView, CollectError> {
        let worker_id = worker_id.trim();
        if worker_id.is_empty() || worker_id.contains(['\t', '\n']) {
            return Err(CollectError::EmptyWorker);
        }
        let mut st = self.lock();
        self.expire(&mut st)?;
        let taken: Vec<usize> = st
            .sessions
            .values()
            .filter(|s| s.worker_id == worker_id && s.state != SessionState::Abandoned)
            .map(|s| s.hit)
            .collect();
        let hit = (0..self.plan.hits.len())
            .find(|&h| st.reserved[h] < self.config.redundancy && !taken.contains(&h))
            .ok_or(CollectError::CollectionComplete)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let now = self.clock.now_ms();
        writeln!(
            st.journal,
            "start\t{id}\t{worker_id}\t{}\t{now}",
            self.plan.hits[hit].hit_id
        )
        .map_err(storage)?;
        st.journal.sync_data().map_err(storage)?;
        st.reserved[hit] += 1;
        let session = Session {
            worker_id: worker_id.to_string(),
            hit,
            scores: vec![None; self.plan.hits[hit].items.len()],
            state: SessionState::Active,
            last_activity: now,
        };
        let view = self.view(&id, &session);
        st.sessions.insert(id, session);
        self.publish(&st);
        Ok(view)
    }

    pub fn next(&self, session_id: &str) -> Result<SessionView, CollectError> {
        let mut st = self.lock();
        self.expire(&mut st)?;
        let s = st
            .sessions
            .get(session_id)
            .ok_or_else(|| CollectError::UnknownSession(session_id.to_string()))?;
        if s.state == SessionState::Abandoned {
            return Err(CollectError::SessionExpired(session_id.to_string()));
        }
        Ok(self.view(session_id, s))
    }

    /// Records a rating durably and returns the session's next state.
    ///
    /// Resubmitting an already stored rating with the same score succeeds
    /// without writing; a different score is rejected.
    pub fn submit(&self, session_id: &str, item_id: &str, score: i64) -> Result<SessionView, CollectError> {
        let mut st = self.lock();
        self.expire(&mut st)?;
        let now = self.clock.now_ms();
        let s = st
            .sessions
            .get(session_id)
            .ok_or_else(|| CollectError::UnknownSession(session_id.to_string()))?;
        if s.state == SessionState::Abandoned {
            return Err(CollectError::SessionExpired(session_id.to_string()));
        }
        let pos = *self.positions[s.hit]
            .get(item_id)
            .ok_or_else(|| CollectError::UnknownItem(item_id.to_string()))?;
        if !(0..=100).contains(&score) {
            return Err(CollectError::ScoreOutOfRange(score));
        }
        let score = score as u8;
        if let Some(stored) = s.scores[pos] {
            return if stored == score {
                Ok(self.view(session_id, s))
            } else {
                Err(CollectError::AlreadyRated {
                    item: item_id.to_string(),
                    stored,
                })
            };
        }
        if s.state == SessionState::Completed {
            return Err(CollectError::SessionComplete(session_id.to_string()));
        }
        let cursor = s.cursor();
        if pos > cursor {
            return Err(CollectError::NotCurrent {
                item: item_id.to_string(),
                expected: self.plan.hits[s.hit].items[cursor].item_id.clone(),
            });
        }
        let record = AssessmentRecord {
            worker_id: s.worker_id.clone(),
            item_id: item_id.to_string(),
            raw_score: score,
            timestamp: now,
            session_id: Some(session_id.to_string()),
        };
        st.store.write_all(record.to_line().as_bytes()).map_err(storage)?;
        st.store.sync_data().map_err(storage)?;

        st.ratings += 1;
        *st.per_worker.entry(record.worker_id).or_default() += 1;
        let s = st.sessions.get_mut(session_id).expect("session checked above");
        s.scores[pos] = Some(score);
        s.last_activity = now;
        let done = s.cursor() == s.scores.len();
        if done {
            s.state = SessionState::Completed;
        }
        let hit = s.hit;
        let view = self.view(session_id, s);
        if done {
            st.completed[hit] += 1;
        }
        self.publish(&st);
        Ok(view)
    }

    /// Latest published snapshot; never takes the state lock.
    pub fn status(&self) -> Arc<StatusSnapshot> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Store contents as written so far.
    pub fn export(&self) -> Result<String, CollectError> {
        let _guard = self.lock();
        read_or_empty(&self.config.store_path)
    }
}
