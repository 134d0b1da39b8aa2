//! Replication, metric meta-evaluation and inter-system similarity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{pearson, williams, StatsError, TestResult};
use crate::analytics::SystemScore;
use crate::metrics::{tokenize, SimilarityBackend};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub r_raw: f64,
    pub r_z: f64,
    pub n: usize,
}

/// Correlates system scores from two independent collections.
pub fn replication_report(run1: &[SystemScore], run2: &[SystemScore]) -> Result<Replication, StatsError> {
    let a: BTreeMap<&str, &SystemScore> = run1.iter().map(|s| (s.system.as_str(), s)).collect();
    let b: BTreeMap<&str, &SystemScore> = run2.iter().map(|s| (s.system.as_str(), s)).collect();
    let ka: BTreeSet<&str> = a.keys().copied().collect();
    let kb: BTreeSet<&str> = b.keys().copied().collect();
    if ka != kb {
        return Err(StatsError::SystemMismatch {
            only_first: ka.difference(&kb).map(|s| s.to_string()).collect(),
            only_second: kb.difference(&ka).map(|s| s.to_string()).collect(),
        });
    }
    let raw1: Vec<f64> = ka.iter().map(|k| a[k].raw_avg).collect();
    let raw2: Vec<f64> = ka.iter().map(|k| b[k].raw_avg).collect();
    let z1: Vec<f64> = ka.iter().map(|k| a[k].z_avg).collect();
    let z2: Vec<f64> = ka.iter().map(|k| b[k].z_avg).collect();
    Ok(Replication {
        r_raw: pearson(&raw1, &raw2)?,
        r_z: pearson(&z1, &z2)?,
        n: ka.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub r: f64,
    pub n: usize,
}

/// Williams comparison of two metrics' correlation with human scores;
/// `better` is the metric with the higher correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilliamsComparison {
    pub better: String,
    pub worse: String,
    pub r12: f64,
    pub r13: f64,
    pub r23: f64,
    pub result: Option<TestResult>,
    /// Why the test could not be run (perfect correlations, inconsistent input).
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub metric: String,
    pub system: String,
    pub metric_score: f64,
    pub human_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEvalReport {
    pub systems: Vec<String>,
    pub correlations: Vec<MetricCorrelation>,
    pub williams: Vec<WilliamsComparison>,
    pub scatter: Vec<ScatterPoint>,
}

impl MetaEvalReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tr\tn\n");
        for c in &self.correlations {
            out.push_str(&format!("{}\t{:.6}\t{}\n", c.metric, c.r, c.n));
        }
        out.push_str("# williams: better\tworse\tr12\tr13\tr23\tt\tp_one_sided\n");
        for w in &self.williams {
            match (&w.result, &w.note) {
                (Some(t), _) => out.push_str(&format!(
                    "# {}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6e}\n",
                    w.better, w.worse, w.r12, w.r13, w.r23, t.statistic, t.p_greater
                )),
                (None, note) => out.push_str(&format!(
                    "# {}\t{}\t{:.6}\t{:.6}\t{:.6}\tNA\tNA\t{}\n",
                    w.better,
                    w.worse,
                    w.r12,
                    w.r13,
                    w.r23,
                    note.as_deref().unwrap_or("")
                )),
            }
        }
        out
    }

    pub fn scatter_tsv(&self) -> String {
        let mut out = String::from("metric\tsystem\tmetric_score\thuman_z\n");
        for p in &self.scatter {
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\n",
                p.metric, p.system, p.metric_score, p.human_z
            ));
        }
        out
    }
}

/// Correlates each metric's system scores with human z scores over the systems
/// covered by every input, then runs Williams tests for every metric pair.
pub fn metric_meta_eval(
    metrics: &BTreeMap<String, BTreeMap<String, f64>>,
    human: &[SystemScore],
) -> Result<MetaEvalReport, StatsError> {
    let human_z: BTreeMap<&str, f64> = human.iter().map(|s| (s.system.as_str(), s.z_avg)).collect();
    let systems: Vec<String> = human_z
        .keys()
        .filter(|s| metrics.values().all(|m| m.contains_key(**s)))
        .map(|s| s.to_string())
        .collect();
    if systems.len() < 4 {
        return Err(StatsError::InsufficientSample {
            needed: 4,
            got: systems.len(),
        });
    }
    let h: Vec<f64> = systems.iter().map(|s| human_z[s.as_str()]).collect();
    let columns: BTreeMap<&str, Vec<f64>> = metrics
        .iter()
        .map(|(name, m)| (name.as_str(), systems.iter().map(|s| m[s]).collect()))
        .collect();

    let mut correlations = Vec::new();
    let mut scatter = Vec::new();
    for (name, values) in &columns {
        correlations.push(MetricCorrelation {
            metric: name.to_string(),
            r: pearson(values, &h)?,
            n: systems.len(),
        });
        for (system, (v, z)) in systems.iter().zip(values.iter().zip(&h)) {
            scatter.push(ScatterPoint {
                metric: name.to_string(),
                system: system.clone(),
                metric_score: *v,
                human_z: *z,
            });
        }
    }

    let mut comparisons = Vec::new();
    for (i, a) in correlations.iter().enumerate() {
        for b in &correlations[i + 1..] {
            let (better, worse) = if a.r >= b.r { (a, b) } else { (b, a) };
            let r23 = pearson(&columns[better.metric.as_str()], &columns[worse.metric.as_str()])?;
            let (result, note) = match williams(better.r, worse.r, r23, systems.len()) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            comparisons.push(WilliamsComparison {
                better: better.metric.clone(),
                worse: worse.metric.clone(),
                r12: better.r,
                r13: worse.r,
                r23,
                result,
                note,
            });
        }
    }
    Ok(MetaEvalReport {
        systems,
        correlations,
        williams: comparisons,
        scatter,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterSystemReport {
    pub systems: Vec<String>,
    /// Mean pairwise similarity over the shared videos; 1 on the diagonal.
    pub matrix: Vec<Vec<f64>>,
    pub average_to_others: Vec<f64>,
    /// System indices, most similar to the others first.
    pub ranking: Vec<usize>,
    pub videos_used: usize,
    pub skipped: Vec<String>,
}

impl InterSystemReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("system\taverage_to_others");
        for s in &self.systems {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
        for &i in &self.ranking {
            out.push_str(&format!("{}\t{:.6}", self.systems[i], self.average_to_others[i]));
            for v in &self.matrix[i] {
                out.push_str(&format!("\t{v:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Average pairwise similarity among systems (human sets included as
/// systems) over videos every system covers.
pub fn inter_system_sts(
    systems: &[(String, BTreeMap<String, String>)],
    backend: &dyn SimilarityBackend,
) -> Result<InterSystemReport, StatsError> {
    let k = systems.len();
    if k < 2 {
        return Err(StatsError::InsufficientSample { needed: 2, got: k });
    }
    let videos: BTreeSet<&String> = systems.iter().flat_map(|(_, c)| c.keys()).collect();
    let mut sums = vec![vec![0.0; k]; k];
    let mut used = 0usize;
    let mut skipped = Vec::new();
    for video in videos {
        let texts: Option<Vec<&String>> = systems.iter().map(|(_, c)| c.get(video)).collect();
        let Some(texts) = texts else {
            log::warn!("video {video} not covered by every system; skipped");
            skipped.push(video.clone());
            continue;
        };
        let tokens = texts.iter().map(|t| tokenize(t)).collect::<Result<Vec<_>, _>>()?;
        for i in 0..k {
            for j in (i + 1)..k {
                let s = backend.similarity(&tokens[i], &tokens[j]);
                sums[i][j] += s;
                sums[j][i] += s;
            }
        }
        used += 1;
    }
    if used == 0 {
        return Err(StatsError::InsufficientSample { needed: 1, got: 0 });
    }
    let mut matrix = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                matrix[i][j] = sums[i][j] / used as f64;
            }
        }
    }
    let average_to_others: Vec<f64> = (0..k)
        .map(|i| (0..k).filter(|&j| j != i).map(|j| matrix[i][j]).sum::<f64>() / (k - 1) as f64)
        .collect();
    let mut ranking: Vec<usize> = (0..k).collect();
    ranking.sort_by(|&a, &b| average_to_others[b].total_cmp(&average_to_others[a]));
    Ok(InterSystemReport {
        systems: systems.iter().map(|(s, _)| s.clone()).collect(),
        matrix,
        average_to_others,
        ranking,
        videos_used: used,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{sts_lexical, LexicalSts};

    fn score(system: &str, raw: f64, z: f64) -> SystemScore {
        SystemScore {
            system: system.into(),
            raw_avg: raw,
            z_avg: z,
            n: 10,
        }
    }

    #[test]
    fn replication_of_identical_runs() {
        let run = vec![score("a", 80.0, 0.8), score("b", 60.0, 0.1), score("c", 40.0, -0.5)];
        let r = replication_report(&run, &run).unwrap();
        assert!((r.r_raw - 1.0).abs() < 1e-12 && (r.r_z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn replication_with_swapped_pair_matches_pearson() {
        let a = vec![
            score("s1", 88.0, 0.9),
            score("s2", 66.0, 0.3),
            score("s3", 49.0, -0.1),
            score("s4", 43.0, -0.3),
            score("s5", 41.0, -0.4),
        ];
        let mut b = a.clone();
        let (z3, z4) = (b[2].z_avg, b[3].z_avg);
        b[2].z_avg = z4;
        b[3].z_avg = z3;
        let r = replication_report(&a, &b).unwrap();
        let za: Vec<f64> = a.iter().map(|s| s.z_avg).collect();
        let zb: Vec<f64> = b.iter().map(|s| s.z_avg).collect();
        assert_eq!(r.r_z, pearson(&za, &zb).unwrap());
        assert!((r.r_raw - 1.0).abs() < 1e-12);
        assert!(r.r_z < 1.0);
    }

    #[test]
    fn replication_mismatch_lists_differences() {
        let a = vec![score("a", 1.0, 0.0), score("b", 2.0, 1.0)];
        let b = vec![score("a", 1.0, 0.0), score("c", 2.0, 1.0)];
        match replication_report(&a, &b) {
            Err(StatsError::SystemMismatch {
                only_first,
                only_second,
            }) => {
                assert_eq!(
                    (only_first, only_second),
                    (vec!["b".to_string()], vec!["c".to_string()])
                );
            }
            other => panic!("{other:?}"),
        }
    }

    fn human5() -> Vec<SystemScore> {
        [("h", 0.9), ("s1", 0.3), ("s2", -0.1), ("s3", -0.3), ("s4", -0.4)]
            .iter()
            .map(|(s, z)| score(s, 50.0 + 40.0 * z, *z))
            .collect()
    }

    #[test]
    fn meta_eval_perfect_and_negated_metrics() {
        let human = human5();
        let mut metrics = BTreeMap::new();
        metrics.insert(
            "linear".to_string(),
            human.iter().map(|s| (s.system.clone(), 3.0 * s.z_avg + 1.0)).collect(),
        );
        metrics.insert(
            "negated".to_string(),
            human.iter().map(|s| (s.system.clone(), -s.z_avg)).collect(),
        );
        let report = metric_meta_eval(&metrics, &human).unwrap();
        let r: BTreeMap<_, _> = report.correlations.iter().map(|c| (c.metric.as_str(), c.r)).collect();
        assert!((r["linear"] - 1.0).abs() < 1e-12);
        assert!((r["negated"] + 1.0).abs() < 1e-12);
        // |r| = 1 cannot enter the Williams test
        assert_eq!(report.williams.len(), 1);
        assert!(report.williams[0].result.is_none() && report.williams[0].note.is_some());
        assert_eq!(report.scatter.len(), 10);
    }

    #[test]
    fn meta_eval_williams_inputs_from_pairwise_correlations() {
        let human = human5();
        let m1 = [0.30, 0.25, 0.26, 0.20, 0.18];
        let m2 = [0.10, 0.30, 0.22, 0.25, 0.28];
        let mut metrics = BTreeMap::new();
        metrics.insert(
            "m1".to_string(),
            human.iter().zip(m1).map(|(s, v)| (s.system.clone(), v)).collect(),
        );
        metrics.insert(
            "m2".to_string(),
            human.iter().zip(m2).map(|(s, v)| (s.system.clone(), v)).collect(),
        );
        let report = metric_meta_eval(&metrics, &human).unwrap();
        let h: Vec<f64> = report
            .systems
            .iter()
            .map(|s| human.iter().find(|x| &x.system == s).unwrap().z_avg)
            .collect();
        let col = |m: &[f64]| -> Vec<f64> {
            report
                .systems
                .iter()
                .map(|s| m[human.iter().position(|x| &x.system == s).unwrap()])
                .collect()
        };
        let r1 = pearson(&col(&m1), &h).unwrap();
        let r2 = pearson(&col(&m2), &h).unwrap();
        let r12 = pearson(&col(&m1), &col(&m2)).unwrap();
        let w = &report.williams[0];
        assert_eq!((w.better.as_str(), w.r12, w.r13, w.r23), ("m1", r1, r2, r12));
        assert_eq!(w.result.unwrap(), williams(r1, r2, r12, 5).unwrap());
    }

    #[test]
    fn meta_eval_needs_four_systems() {
        let human: Vec<SystemScore> = human5().into_iter().take(3).collect();
        let mut metrics = BTreeMap::new();
        metrics.insert(
            "m".to_string(),
            human.iter().map(|s| (s.system.clone(), s.z_avg)).collect(),
        );
        assert!(matches!(
            metric_meta_eval(&metrics, &human),
            Err(StatsError::InsufficientSample { .. })
        ));
    }

    fn captions(rows: &[(&str, &str)]) -> BTreeMap<String, String> {
        rows.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect()
    }

    #[test]
    fn identical_systems_are_fully_similar() {
        let c = captions(&[("v1", "a dog runs"), ("v2", "a man cooks")]);
        let systems = vec![
            ("a".to_string(), c.clone()),
            ("b".to_string(), c.clone()),
            ("c".to_string(), c),
        ];
        let r = inter_system_sts(&systems, &LexicalSts::default()).unwrap();
        assert!(r.matrix.iter().flatten().all(|v| *v == 1.0));
        assert_eq!(r.videos_used, 2);
    }

    #[test]
    fn inter_system_matches_brute_force() {
        let systems = vec![
            (
                "s1".to_string(),
                captions(&[("v1", "a dog runs"), ("v2", "a man cooks food")]),
            ),
            (
                "s2".to_string(),
                captions(&[("v1", "a dog sleeps"), ("v2", "a woman cooks")]),
            ),
            (
                "s3".to_string(),
                captions(&[("v1", "cats play"), ("v2", "a man eats food"), ("v3", "extra")]),
            ),
        ];
        let r = inter_system_sts(&systems, &LexicalSts::default()).unwrap();
        assert_eq!(r.skipped, ["v3"]);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let mut expected = 0.0;
                for v in ["v1", "v2"] {
                    let a = tokenize(&systems[i].1[v]).unwrap();
                    let b = tokenize(&systems[j].1[v]).unwrap();
                    expected += sts_lexical(&a, &b, None);
                }
                assert!((r.matrix[i][j] - expected / 2.0).abs() < 1e-12);
            }
        }
        let avg0 = (r.matrix[0][1] + r.matrix[0][2]) / 2.0;
        assert!((r.average_to_others[0] - avg0).abs() < 1e-12);
        assert!(r.average_to_others[r.ranking[0]] >= r.average_to_others[r.ranking[2]]);
    }
}
