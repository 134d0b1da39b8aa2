//! Quality-control captions made by phrase substitution.
//!
//! A human caption of `N` tokens has `k = words_replaced(N)` contiguous tokens
//! replaced by a contiguous `k`-token window taken from the human caption of a
//! different video. The replaced span avoids the first and last token whenever
//! `N >= k + 2`; shorter captions fall back to any span and are flagged as
//! relaxed.
//!
//! Random draws, in order: donor caption (uniform over eligible donors),
//! donor window start, origin span start.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{data_lines, read_text, Caption, CaptionSource, CorpusError};
use crate::metrics::{tokenize, MetricError, TokenSeq};
use crate::provenance::Provenance;
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error("no donor caption from another video with at least {needed} tokens for `{caption_id}`")]
    NoEligibleDonor { caption_id: String, needed: usize },
    #[error("nothing to degrade")]
    EmptySet,
    #[error(transparent)]
    Tokenize(#[from] MetricError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
}

/// Number of tokens replaced in a caption of `n` tokens.
pub fn words_replaced(n: usize) -> usize {
    match n {
        0 => 0,
        1 => 1,
        2..=5 => 2,
        6..=8 => 3,
        9..=15 => 4,
        16..=20 => 5,
        _ => n / 4,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegradedCaption {
    pub caption_id: String,
    pub origin_caption_id: String,
    pub donor_caption_id: String,
    pub video_id: String,
    pub span_start: usize,
    pub span_len: usize,
    /// Normalized tokens joined by single spaces.
    pub text: String,
    /// The interior-span constraint could not be met.
    pub relaxed: bool,
}

impl DegradedCaption {
    pub fn as_caption(&self) -> Caption {
        Caption {
            caption_id: self.caption_id.clone(),
            video_id: self.video_id.clone(),
            text: self.text.clone(),
            source: CaptionSource::Degraded(self.origin_caption_id.clone()),
        }
    }
}

/// An original human caption and its degraded counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcPair {
    pub origin: Caption,
    pub degraded: DegradedCaption,
}

struct Donor<'a> {
    caption: &'a Caption,
    tokens: TokenSeq,
}

fn tokenize_pool(pool: &[Caption]) -> Result<Vec<Donor<'_>>, DegradeError> {
    pool.iter()
        .map(|c| {
            Ok(Donor {
                caption: c,
                tokens: tokenize(&c.text)?,
            })
        })
        .collect()
}

/// Degrades one caption using a generator seeded with `seed`.
pub fn degrade(origin: &Caption, donor_pool: &[Caption], seed: u64) -> Result<DegradedCaption, DegradeError> {
    let donors = tokenize_pool(donor_pool)?;
    degrade_with(origin, &tokenize(&origin.text)?, &donors, &mut SeededRng::new(seed))
}

fn degrade_with(
    origin: &Caption,
    origin_tokens: &TokenSeq,
    donors: &[Donor<'_>],
    rng: &mut SeededRng,
) -> Result<DegradedCaption, DegradeError> {
    let n = origin_tokens.len();
    let k = words_replaced(n);
    let eligible: Vec<&Donor> = donors
        .iter()
        .filter(|d| d.caption.video_id != origin.video_id && d.tokens.len() >= k)
        .collect();
    let Some(donor) = rng.choose(&eligible) else {
        return Err(DegradeError::NoEligibleDonor {
            caption_id: origin.caption_id.clone(),
            needed: k,
        });
    };
    let window = rng.range_inclusive(0, donor.tokens.len() - k);
    let relaxed = n < k + 2;
    let span_start = if relaxed {
        rng.range_inclusive(0, n - k)
    } else {
        rng.range_inclusive(1, n - k - 1)
    };
    let mut tokens = origin_tokens.tokens().to_vec();
    tokens[span_start..span_start + k].clone_from_slice(&donor.tokens.tokens()[window..window + k]);
    Ok(DegradedCaption {
        caption_id: format!("degraded:{}", origin.caption_id),
        origin_caption_id: origin.caption_id.clone(),
        donor_caption_id: donor.caption.caption_id.clone(),
        video_id: origin.video_id.clone(),
        span_start,
        span_len: k,
        text: tokens.join(" "),
        relaxed,
    })
}

/// Degrades every caption of a reference set, drawing donors from the same
/// set. Each caption gets a sub-seed derived from `seed` and its caption id,
/// so results do not depend on processing order.
pub fn degrade_set(originals: &[Caption], seed: u64) -> Result<Vec<QcPair>, DegradeError> {
    if originals.is_empty() {
        return Err(DegradeError::EmptySet);
    }
    let donors = tokenize_pool(originals)?;
    originals
        .iter()
        .zip(&donors)
        .map(|(origin, own)| {
            let mut rng = SeededRng::new(derive_seed(seed, &origin.caption_id));
            let degraded = degrade_with(origin, &own.tokens, &donors, &mut rng)?;
            Ok(QcPair {
                origin: origin.clone(),
                degraded,
            })
        })
        .collect()
}

/// `caption_id \t origin_id \t donor_id \t span_start \t span_len \t text`,
/// preceded by the provenance header.
pub fn write_degraded(pairs: &[QcPair], provenance: &Provenance) -> String {
    let mut out = provenance.header_lines();
    out.push_str("# caption_id\torigin_id\tdonor_id\tspan_start\tspan_len\ttext\n");
    for p in pairs {
        let d = &p.degraded;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            d.caption_id, d.origin_caption_id, d.donor_caption_id, d.span_start, d.span_len, d.text
        ));
    }
    out
}

/// Reads a degraded-set file and re-pairs each record with its origin.
pub fn read_degraded(path: &Path, origins: &[&Caption]) -> Result<Vec<QcPair>, DegradeError> {
    let text = read_text(path)?;
    let mut pairs = Vec::new();
    for (line, l) in data_lines(&text) {
        let malformed = |message: String| DegradeError::Malformed {
            path: path.display().to_string(),
            line,
            message,
        };
        let f: Vec<&str> = l.splitn(6, '\t').collect();
        if f.len() != 6 {
            return Err(malformed("expected 6 tab-separated fields".into()));
        }
        let origin = origins
            .iter()
            .find(|c| c.caption_id == f[1])
            .ok_or_else(|| malformed(format!("unknown origin caption `{}`", f[1])))?;
        let span_start: usize = f[3].parse().map_err(|_| malformed("bad span_start".into()))?;
        let span_len: usize = f[4].parse().map_err(|_| malformed("bad span_len".into()))?;
        let n = tokenize(f[5])?.len();
        pairs.push(QcPair {
            origin: (*origin).clone(),
            degraded: DegradedCaption {
                caption_id: f[0].to_string(),
                origin_caption_id: f[1].to_string(),
                donor_caption_id: f[2].to_string(),
                video_id: origin.video_id.clone(),
                span_start,
                span_len,
                text: f[5].to_string(),
                relaxed: n < span_len + 2,
            },
        });
    }
    Ok(pairs)
}
