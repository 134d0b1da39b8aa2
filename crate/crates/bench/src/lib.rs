//! Shared inputs for the benchmarks.

use capeval_core::hitplan::{build_hits, HitConfig};
use capeval_core::metrics::{tokenize, TokenSeq};
use capeval_core::simcrowd::{synthetic_scenario, SimConfig, WorkerGroup, WorkerModel};
use capeval_core::{AssessmentRecord, HitPlan, SeededRng};

const WORDS: &[&str] = &[
    "a", "man", "woman", "dog", "is", "running", "on", "the", "beach", "cooking", "in", "kitchen", "two", "people",
    "dance", "stage", "red", "car", "drives", "down", "street", "child", "plays", "with", "ball",
];

/// `count` captions of 5 to 15 tokens.
pub fn captions(count: usize, seed: u64) -> Vec<TokenSeq> {
    let mut rng = SeededRng::new(seed);
    (0..count)
        .map(|_| {
            let len = rng.range_inclusive(5, 15);
            let words: Vec<&str> = (0..len).map(|_| WORDS[rng.below(WORDS.len())]).collect();
            tokenize(&words.join(" ")).expect("nonempty")
        })
        .collect()
}

/// A plan over `systems` runs of `videos` captions each.
pub fn plan(systems: usize, videos: usize) -> HitPlan {
    let scenario = synthetic_scenario(systems, videos, 1);
    build_hits(&scenario.runs, &scenario.pairs, HitConfig::default(), 2).expect("plan builds")
}

/// One simulated collection over `plan` by 40 diligent and 10 random workers.
pub fn collection(plan: &HitPlan, redundancy: usize) -> Vec<AssessmentRecord> {
    let sim = SimConfig {
        seed: 3,
        redundancy,
        latent: Default::default(),
        population: vec![
            WorkerGroup {
                count: 40,
                model: WorkerModel::Diligent {
                    sigma: 10.0,
                    bias: 0.0,
                    scale: 1.0,
                },
                bias_sd: 8.0,
                scale_sd: 0.15,
            },
            WorkerGroup {
                count: 10,
                model: WorkerModel::RandomUniform,
                bias_sd: 0.0,
                scale_sd: 0.0,
            },
        ],
    };
    sim.run(plan)
}
