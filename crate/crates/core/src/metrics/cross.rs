use serde::Serialize;

use super::{tokenize, MetricError, SimilarityBackend};
use crate::corpus::Corpus;

/// Agreement between two human reference sets, video by video.
#[derive(Debug, Clone, Serialize)]
pub struct CrossReferenceReport {
    pub set_a: String,
    pub set_b: String,
    pub backend: String,
    pub similarities: Vec<(String, f64)>,
    /// Videos lacking a caption in one of the sets.
    pub skipped: Vec<String>,
    pub median: f64,
    /// Counts over ten equal-width buckets of `[0, 1]`; 1.0 falls in the last.
    pub histogram: [usize; 10],
}

pub fn cross_reference_sts(
    corpus: &Corpus,
    set_a: &str,
    set_b: &str,
    backend: &dyn SimilarityBackend,
) -> Result<CrossReferenceReport, MetricError> {
    let mut similarities = Vec::new();
    let mut skipped = Vec::new();
    for video in corpus.videos() {
        let refs = corpus.references_for(&video.video_id);
        let a = refs.iter().find(|c| c.set_label() == Some(set_a));
        let b = refs.iter().find(|c| c.set_label() == Some(set_b));
        match (a, b) {
            (Some(a), Some(b)) => {
                let s = backend.similarity(&tokenize(&a.text)?, &tokenize(&b.text)?);
                similarities.push((video.video_id.clone(), s));
            }
            _ => {
                log::warn!(
                    "video {} lacks a caption in set {set_a} or {set_b}; skipped",
                    video.video_id
                );
                skipped.push(video.video_id.clone());
            }
        }
    }
    if similarities.is_empty() {
        return Err(MetricError::NoOverlap(set_a.to_string(), set_b.to_string()));
    }
    let mut values: Vec<f64> = similarities.iter().map(|(_, s)| *s).collect();
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    };
    let mut histogram = [0usize; 10];
    for v in &values {
        histogram[((v * 10.0).floor() as usize).min(9)] += 1;
    }
    Ok(CrossReferenceReport {
        set_a: set_a.to_string(),
        set_b: set_b.to_string(),
        backend: backend.name().to_string(),
        similarities,
        skipped,
        median,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Caption, CaptionSource, VideoRef};
    use crate::metrics::LexicalSts;

    fn corpus(rows: &[(&str, &str, &str)]) -> Corpus {
        let mut videos: Vec<VideoRef> = Vec::new();
        let mut captions = Vec::new();
        for (i, (v, set, text)) in rows.iter().enumerate() {
            if !videos.iter().any(|x| x.video_id == *v) {
                videos.push(VideoRef {
                    video_id: v.to_string(),
                    url: None,
                });
            }
            captions.push(Caption {
                caption_id: format!("c{i}"),
                video_id: v.to_string(),
                text: text.to_string(),
                source: CaptionSource::Human(set.to_string()),
            });
        }
        Corpus::from_parts(videos, captions).unwrap()
    }

    #[test]
    fn identical_sets() {
        let c = corpus(&[
            ("v1", "A", "a dog"),
            ("v1", "B", "a dog"),
            ("v2", "A", "a cat"),
            ("v2", "B", "a cat"),
        ]);
        let r = cross_reference_sts(&c, "A", "B", &LexicalSts::default()).unwrap();
        assert!(r.similarities.iter().all(|(_, s)| *s == 1.0));
        assert_eq!(r.median, 1.0);
        assert_eq!(r.histogram[9], 2);
    }

    #[test]
    fn one_identical_one_disjoint() {
        let c = corpus(&[
            ("v1", "A", "a dog"),
            ("v1", "B", "a dog"),
            ("v2", "A", "cats sleep"),
            ("v2", "B", "a dog runs"),
        ]);
        let r = cross_reference_sts(&c, "A", "B", &LexicalSts::default()).unwrap();
        let sims: Vec<f64> = r.similarities.iter().map(|(_, s)| *s).collect();
        assert_eq!(sims, [1.0, 0.0]);
        assert_eq!(r.median, 0.5);
        assert_eq!((r.histogram[0], r.histogram[9]), (1, 1));
    }

    #[test]
    fn missing_set_is_skipped() {
        let c = corpus(&[("v1", "A", "a dog"), ("v1", "B", "a dog"), ("v2", "A", "a cat")]);
        let r = cross_reference_sts(&c, "A", "B", &LexicalSts::default()).unwrap();
        assert_eq!(r.skipped, ["v2"]);
        assert_eq!(r.similarities.len(), 1);
        assert!(cross_reference_sts(&c, "A", "Z", &LexicalSts::default()).is_err());
    }
}
