use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bleu_segment, cider_segment, meteor_multi, tokenize, LexicalSts, MeteorParams, MetricError, NGramProfile,
    SimilarityBackend, SynonymLexicon, TokenSeq,
};
use crate::corpus::{CaptionSource, Corpus, SystemRun};

pub const METRIC_NAMES: [&str; 4] = ["bleu", "meteor", "cider", "sts"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScores {
    pub run_id: String,
    pub video_id: String,
    pub bleu: f64,
    pub meteor: f64,
    pub cider: f64,
    pub sts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub segments: usize,
    pub bleu: f64,
    pub meteor: f64,
    pub cider: f64,
    pub sts: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub segments: Vec<SegmentScores>,
    pub summaries: Vec<RunSummary>,
    /// `(run_id, video_id)` pairs with no usable reference.
    pub skipped: Vec<(String, String)>,
}

impl MetricReport {
    /// metric name -> run id -> corpus-level mean.
    pub fn system_table(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for s in &self.summaries {
            for (name, value) in METRIC_NAMES.iter().zip([s.bleu, s.meteor, s.cider, s.sts]) {
                table
                    .entry(name.to_string())
                    .or_default()
                    .insert(s.run_id.clone(), value);
            }
        }
        table
    }

    /// Segment rows followed by a summary block whose rows carry `*` in the
    /// video column.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("run_id\tvideo_id\tbleu\tmeteor\tcider\tsts\n");
        for s in &self.segments {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                s.run_id, s.video_id, s.bleu, s.meteor, s.cider, s.sts
            ));
        }
        out.push_str("# summary: corpus-level means per run\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{}\t*\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                s.run_id, s.bleu, s.meteor, s.cider, s.sts
            ));
        }
        out
    }
}

/// Scores system runs against the corpus's human references.
///
/// The CIDEr idf table is built once from every human reference in the
/// corpus. A run named `human-<label>` is never scored against set `<label>`.
pub struct MetricScorer<'c> {
    corpus: &'c Corpus,
    idf: NGramProfile,
    references: HashMap<String, Vec<(String, TokenSeq)>>,
    lexicon: Option<SynonymLexicon>,
    meteor: MeteorParams,
    reference_sets: Option<Vec<String>>,
    sts: Box<dyn SimilarityBackend>,
}

impl<'c> MetricScorer<'c> {
    pub fn new(corpus: &'c Corpus) -> Result<Self, MetricError> {
        let mut references: HashMap<String, Vec<(String, TokenSeq)>> = HashMap::new();
        for c in corpus.captions() {
            if let CaptionSource::Human(label) = &c.source {
                references
                    .entry(c.video_id.clone())
                    .or_default()
                    .push((label.clone(), tokenize(&c.text)?));
            }
        }
        let idf = NGramProfile::from_documents(references.values().map(|refs| refs.iter().map(|(_, t)| t)));
        Ok(Self {
            corpus,
            idf,
            references,
            lexicon: None,
            meteor: MeteorParams::default(),
            reference_sets: None,
            sts: Box::new(LexicalSts::default()),
        })
    }

    pub fn with_lexicon(mut self, lexicon: SynonymLexicon) -> Self {
        self.sts = Box::new(LexicalSts {
            lexicon: Some(lexicon.clone()),
        });
        self.lexicon = Some(lexicon);
        self
    }

    pub fn with_meteor_params(mut self, params: MeteorParams) -> Self {
        self.meteor = params;
        self
    }

    /// Restricts references to the named sets.
    pub fn with_reference_sets(mut self, sets: Vec<String>) -> Self {
        self.reference_sets = Some(sets);
        self
    }

    pub fn with_similarity(mut self, backend: Box<dyn SimilarityBackend>) -> Self {
        self.sts = backend;
        self
    }

    pub fn idf(&self) -> &NGramProfile {
        &self.idf
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    fn refs_for(&self, run_id: &str, video_id: &str) -> Vec<TokenSeq> {
        self.references
            .get(video_id)
            .into_iter()
            .flatten()
            .filter(|(label, _)| self.reference_sets.as_ref().is_none_or(|sets| sets.contains(label)))
            .filter(|(label, _)| CaptionSource::Human(label.clone()).to_string() != run_id)
            .map(|(_, t)| t.clone())
            .collect()
    }

    pub fn score_segment(
        &self,
        run_id: &str,
        video_id: &str,
        text: &str,
    ) -> Result<Option<SegmentScores>, MetricError> {
        let refs = self.refs_for(run_id, video_id);
        if refs.is_empty() {
            return Ok(None);
        }
        let hyp = tokenize(text)?;
        let sts = refs.iter().map(|r| self.sts.similarity(&hyp, r)).sum::<f64>() / refs.len() as f64;
        Ok(Some(SegmentScores {
            run_id: run_id.to_string(),
            video_id: video_id.to_string(),
            bleu: bleu_segment(&hyp, &refs)?,
            meteor: meteor_multi(&hyp, &refs, self.lexicon.as_ref(), self.meteor),
            cider: cider_segment(&hyp, &refs, &self.idf)?,
            sts,
        }))
    }

    pub fn score_runs(&self, runs: &[SystemRun]) -> Result<MetricReport, MetricError> {
        let mut report = MetricReport::default();
        for run in runs {
            let scored: Vec<(String, Option<SegmentScores>)> = run
                .captions
                .par_iter()
                .map(|(video, text)| Ok((video.clone(), self.score_segment(&run.run_id, video, text)?)))
                .collect::<Result<_, MetricError>>()?;
            let mut segments = Vec::with_capacity(scored.len());
            for (video, s) in scored {
                match s {
                    Some(s) => segments.push(s),
                    None => {
                        log::warn!("run {}: no reference for video {video}; skipped", run.run_id);
                        report.skipped.push((run.run_id.clone(), video));
                    }
                }
            }
            if !segments.is_empty() {
                report.summaries.push(summarize(&run.run_id, &segments));
            }
            report.segments.extend(segments);
        }
        Ok(report)
    }
}

fn summarize(run_id: &str, segments: &[SegmentScores]) -> RunSummary {
    let n = segments.len() as f64;
    let mean = |f: fn(&SegmentScores) -> f64| segments.iter().map(f).sum::<f64>() / n;
    RunSummary {
        run_id: run_id.to_string(),
        segments: segments.len(),
        bleu: mean(|s| s.bleu),
        meteor: mean(|s| s.meteor),
        cider: mean(|s| s.cider),
        sts: mean(|s| s.sts),
    }
}
