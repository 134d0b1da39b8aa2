//! Evaluation toolkit for video captioning.
//!
//! Automatic metrics ([`metrics`]), caption degradation for crowd quality
//! control ([`degradation`]), HIT assembly ([`hitplan`]), worker QC and
//! z-standardized system scoring ([`analytics`]), significance testing and
//! meta-evaluation ([`stats`]) and simulated crowds ([`simcrowd`]).

pub mod analytics;
pub mod corpus;
pub mod degradation;
pub mod hitplan;
pub mod metrics;
pub mod provenance;
pub mod rng;
pub mod simcrowd;
pub mod stats;

pub use analytics::{AssessmentRecord, QcConfig, SystemScore, WorkerProfile, WorkerStatus};
pub use corpus::{Caption, CaptionSource, Corpus, CorpusError, RankingRun, SystemRun, VideoRef};
pub use degradation::{DegradedCaption, QcPair};
pub use hitplan::{DisplayItem, Hit, HitConfig, HitPlan, ItemRole, WorkerItem};
pub use metrics::{tokenize, MetricError, TokenSeq};
pub use provenance::Provenance;
pub use rng::{SeededRng, GENERATOR_ID};
pub use stats::{Method, StatsError, TestResult};
