//! Automatic caption metrics.
//!
//! All segment scorers are pure functions over [`TokenSeq`] values:
//!
//! | metric  | range    | notes                                              |
//! |---------|----------|----------------------------------------------------|
//! | BLEU    | `[0,1]`  | clipped 1..4-gram precision, add-one for n >= 2     |
//! | METEOR  | `[0,1]`  | exact, Porter-stem, synonym stages; fragmentation  |
//! | CIDEr   | `[0,10]` | tf-idf cosine per order, Gaussian length penalty    |
//! | STS     | `[0,1]`  | binary token-type cosine (lexical stand-in)        |
//! | MIR     | `(0,1]`  | mean of 1/rank of the correct caption              |

mod bleu;
mod cider;
mod cross;
mod lexicon;
mod meteor;
mod mir;
mod report;
mod sts;
mod tokenize;

pub use bleu::bleu_segment;
pub use cider::{cider_segment, NGramProfile, CIDER_MAX, CIDER_SIGMA};
pub use cross::{cross_reference_sts, CrossReferenceReport};
pub use lexicon::SynonymLexicon;
pub use meteor::{meteor_multi, meteor_segment, meteor_segment_with, MeteorParams};
pub use mir::{load_truth, mean_inverted_rank};
pub use report::{MetricReport, MetricScorer, RunSummary, SegmentScores};
pub use sts::{sts_lexical, LexicalSts, SimilarityBackend};
pub use tokenize::{ngram_counts, tokenize, TokenSeq};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("caption reduces to zero tokens: {0:?}")]
    EmptyCaption(String),
    #[error("no references supplied")]
    NoReferences,
    #[error("ranking for video `{0}` does not contain its correct caption `{1}`")]
    MissingTruth(String, String),
    #[error("run has no ranking for video `{0}`")]
    MissingVideo(String),
    #[error("no truth entries to score")]
    EmptyTruth,
    #[error("no video has captions in both sets `{0}` and `{1}`")]
    NoOverlap(String, String),
    #[error("{0}")]
    Io(String),
}
