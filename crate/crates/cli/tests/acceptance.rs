//! Acceptance checks, one PASS/FAIL line each. Exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use capeval_core::analytics::{analyze, analyze_ratings, caption_samples, ratings, QcConfig};
use capeval_core::degradation::degrade;
use capeval_core::hitplan::{build_hits, HitConfig, PlanIndex};
use capeval_core::metrics::{
    bleu_segment, cider_segment, mean_inverted_rank, meteor_segment, sts_lexical, tokenize, NGramProfile, TokenSeq,
};
use capeval_core::rng::SeededRng;
use capeval_core::simcrowd::{
    expand_population, qc_power_report, simulate_assessments, synthetic_scenario, LatentQuality, LatentSpec, SimConfig,
    SystemLatent, WorkerGroup, WorkerModel,
};
use capeval_core::stats::{ranksum_with, signed_rank, significance_matrix, williams, MethodChoice};
use capeval_core::{Caption, CaptionSource, Method, RankingRun, SystemScore};
use statrs::distribution::{ContinuousCDF, StudentsT};

type Check = fn() -> Result<String, String>;

fn main() {
    let checks: [(&str, Check); 10] = [
        ("degradation rule conformance", degradation_rule),
        ("qc gate size and power", qc_size_and_power),
        ("exact rank tests match enumeration", exact_tests),
        ("z pipeline affine invariance", affine_invariance),
        ("replication stability", replication),
        ("ranking recovery", ranking_recovery),
        ("metric sanity", metric_sanity),
        ("mean inverted rank bounds", mir_bounds),
        ("williams test", williams_test),
        ("end-to-end desk run", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        return Err(format!("took {took:?}, limit {limit:?}"));
    }
    Ok(())
}

fn human(id: &str, video: &str, text: &str) -> Caption {
    Caption {
        caption_id: id.into(),
        video_id: video.into(),
        text: text.into(),
        source: CaptionSource::Human("A".into()),
    }
}

fn degradation_rule() -> Result<String, String> {
    let table = |n: usize| match n {
        1 => 1,
        2..=5 => 2,
        6..=8 => 3,
        9..=15 => 4,
        16..=20 => 5,
        _ => n / 4,
    };
    let pool = [human(
        "donor",
        "v2",
        &(0..40).map(|i| format!("d{i}")).collect::<Vec<_>>().join(" "),
    )];
    let mut violations = Vec::new();
    for n in 1..=40 {
        let text = (0..n).map(|i| format!("o{i}")).collect::<Vec<_>>().join(" ");
        let origin = human("origin", "v1", &text);
        for seed in 0..100u64 {
            let d = degrade(&origin, &pool, seed).map_err(|e| e.to_string())?;
            let tokens: Vec<&str> = d.text.split(' ').collect();
            let replaced = tokens.iter().filter(|t| t.starts_with('d')).count();
            if replaced != table(n) || tokens.len() != n {
                violations.push((n, seed, replaced));
            }
        }
    }
    if violations.is_empty() {
        Ok("4000 degradations, 0 violations".into())
    } else {
        Err(format!("{} violations, first {:?}", violations.len(), violations[0]))
    }
}

fn qc_size_and_power() -> Result<String, String> {
    let start = Instant::now();
    let models = [
        WorkerModel::RandomUniform,
        WorkerModel::Diligent {
            sigma: 10.0,
            bias: 0.0,
            scale: 1.0,
        },
    ];
    let spec = LatentSpec {
        penalty: 30.0,
        ..LatentSpec::default()
    };
    let rows = qc_power_report(&models, 10, 1000, &spec, &QcConfig::default(), 20161);
    within(Duration::from_secs(120), start)?;
    let (random, diligent) = (rows[0].pass_rate, rows[1].pass_rate);
    let detail = format!("random-uniform {random:.3} (<= 0.07), diligent {diligent:.3} (>= 0.95)");
    if random <= 0.07 && diligent >= 0.95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn doubled_ranks(values: &[i64]) -> Vec<i64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| w < &v).count() as i64;
            let equal = values.iter().filter(|w| w == &v).count() as i64;
            2 * below + equal + 1
        })
        .collect()
}

fn brute_signed_rank(diffs: &[i64]) -> (f64, f64) {
    let nz: Vec<i64> = diffs.iter().copied().filter(|&d| d != 0).collect();
    let ranks = doubled_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let observed: i64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0).map(|(_, r)| r).sum();
    let total = 1u64 << nz.len();
    let (mut ge, mut le) = (0u64, 0u64);
    for mask in 0..total {
        let w: i64 = (0..nz.len()).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        ge += u64::from(w >= observed);
        le += u64::from(w <= observed);
    }
    (ge as f64 / total as f64, le as f64 / total as f64)
}

fn brute_ranksum(x: &[i64], y: &[i64]) -> (f64, f64) {
    let pooled: Vec<i64> = x.iter().chain(y).copied().collect();
    let ranks = doubled_ranks(&pooled);
    let observed: i64 = ranks[..x.len()].iter().sum();
    let n = pooled.len();
    let (mut ge, mut le, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != x.len() {
            continue;
        }
        let s: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        total += 1;
        ge += u64::from(s >= observed);
        le += u64::from(s <= observed);
    }
    (ge as f64 / total as f64, le as f64 / total as f64)
}

fn exact_tests() -> Result<String, String> {
    let mut rng = SeededRng::new(8);
    let mut worst = 0.0f64;
    let mut cases = 0;
    let draw = |rng: &mut SeededRng, len: usize, lo: i64, hi: i64| -> Vec<i64> {
        (0..len)
            .map(|_| lo + rng.below((hi - lo + 1) as usize) as i64)
            .collect()
    };
    for n in 1..=8 {
        for _ in 0..200 {
            let diffs = draw(&mut rng, n, -5, 5);
            if diffs.iter().all(|&d| d == 0) {
                continue;
            }
            let pairs: Vec<(f64, f64)> = diffs.iter().map(|&d| (d as f64, 0.0)).collect();
            let r = signed_rank(&pairs).map_err(|e| e.to_string())?;
            if r.method != Method::Exact {
                return Err(format!("signed-rank with {n} pairs not exact"));
            }
            let (ge, le) = brute_signed_rank(&diffs);
            worst = worst.max((r.p_greater - ge).abs()).max((r.p_less - le).abs());
            cases += 1;
        }
    }
    for m in 1..=8 {
        for n in 1..=8 {
            for _ in 0..6 {
                let x = draw(&mut rng, m, 0, 6);
                let y = draw(&mut rng, n, 0, 6);
                let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
                let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
                let auto = ranksum_with(&xf, &yf, MethodChoice::Auto).map_err(|e| e.to_string())?;
                let exact = ranksum_with(&xf, &yf, MethodChoice::Exact).map_err(|e| e.to_string())?;
                if m + n <= 12 && auto != exact {
                    return Err(format!("rank-sum {m}+{n} did not take the exact path"));
                }
                let (ge, le) = brute_ranksum(&x, &y);
                worst = worst.max((exact.p_greater - ge).abs()).max((exact.p_less - le).abs());
                cases += 1;
            }
        }
    }
    let ten: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64 + 0.5, 0.0)).collect();
    let p = signed_rank(&ten).map_err(|e| e.to_string())?.p_greater;
    let detail = format!("{cases} cases, max error {worst:.1e}; 10 positive pairs p = {p:e}");
    if worst <= 1e-12 && p == 2f64.powi(-10) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn diligent(count: usize) -> WorkerGroup {
    WorkerGroup {
        count,
        model: WorkerModel::Diligent {
            sigma: 10.0,
            bias: 0.0,
            scale: 1.0,
        },
        bias_sd: 8.0,
        scale_sd: 0.15,
    }
}

fn plain(count: usize, model: WorkerModel) -> WorkerGroup {
    WorkerGroup {
        count,
        model,
        bias_sd: 0.0,
        scale_sd: 0.0,
    }
}

fn latents(means: &[f64], sd: f64) -> LatentSpec {
    LatentSpec {
        systems: means
            .iter()
            .enumerate()
            .map(|(i, &mean)| (format!("sys{}", i + 1), SystemLatent { mean, sd }))
            .collect(),
        ..LatentSpec::default()
    }
}

fn order(scores: &[SystemScore]) -> Vec<String> {
    scores.iter().map(|s| s.system.clone()).collect()
}

fn affine_invariance() -> Result<String, String> {
    let scenario = synthetic_scenario(4, 140, 31);
    let plan = build_hits(&scenario.runs, &scenario.pairs, HitConfig::default(), 32).map_err(|e| e.to_string())?;
    let sim = SimConfig {
        seed: 33,
        redundancy: 2,
        latent: latents(&[80.0, 70.0, 60.0, 50.0], 12.0),
        population: vec![
            diligent(12),
            plain(3, WorkerModel::RandomUniform),
            plain(2, WorkerModel::Constant { value: 60 }),
        ],
    };
    let base = ratings(&sim.run(&plan));
    let config = QcConfig::default();
    let reference = analyze_ratings(&base, &plan, &config).map_err(|e| e.to_string())?;
    let workers: Vec<String> = reference.profiles.iter().map(|p| p.worker_id.clone()).collect();
    let transforms = [(0.5, 0.0), (2.0, -30.0), (0.01, 50.0), (37.0, 1000.0), (1.0, -500.0)];
    let mut worst = 0.0f64;
    let mut trials = 0;
    for worker in &workers {
        for &(a, b) in &transforms {
            let mut moved = base.clone();
            for r in moved.iter_mut().filter(|r| &r.worker_id == worker) {
                r.raw = a * r.raw + b;
            }
            let after = analyze_ratings(&moved, &plan, &config).map_err(|e| e.to_string())?;
            if order(&after.scores) != order(&reference.scores) {
                return Err(format!("ranking changed after rescaling {worker} by ({a}, {b})"));
            }
            for (x, y) in after.scores.iter().zip(&reference.scores) {
                worst = worst.max((x.z_avg - y.z_avg).abs());
            }
            trials += 1;
        }
    }
    let detail = format!("{trials} single-worker transforms, max z change {worst:.1e}");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn replication() -> Result<String, String> {
    let start = Instant::now();
    let scenario = synthetic_scenario(5, 100, 41);
    let captions: usize = scenario.runs.iter().map(|r| r.len()).sum();
    let plan = build_hits(&scenario.runs, &scenario.pairs, HitConfig::default(), 42).map_err(|e| e.to_string())?;
    let spec = latents(&[75.0, 68.0, 60.0, 52.0, 45.0], 12.0);
    let latent = LatentQuality::draw(&plan, &spec, 43);
    let redundancy = 60usize.div_ceil(plan.hits.len());
    let collect = |seed: u64| {
        let population = expand_population(&[diligent(60)], seed);
        let records = simulate_assessments(&plan, &population, &latent, redundancy, seed + 1);
        analyze(&records, &plan, &QcConfig::default()).map_err(|e| e.to_string())
    };
    let first = collect(100)?;
    let second = collect(200)?;
    within(Duration::from_secs(300), start)?;
    let by_system = |a: &[SystemScore]| {
        a.iter()
            .map(|s| (s.system.clone(), (s.raw_avg, s.z_avg)))
            .collect::<BTreeMap<_, _>>()
    };
    let (a, b) = (by_system(&first.scores), by_system(&second.scores));
    if a.len() != 5 || a.keys().ne(b.keys()) {
        return Err(format!("systems scored: {:?} vs {:?}", a.keys(), b.keys()));
    }
    let raw = pearson(
        &a.values().map(|v| v.0).collect::<Vec<_>>(),
        &b.values().map(|v| v.0).collect::<Vec<_>>(),
    );
    let z = pearson(
        &a.values().map(|v| v.1).collect::<Vec<_>>(),
        &b.values().map(|v| v.1).collect::<Vec<_>>(),
    );
    let detail = format!("{captions} captions, 60 workers x2 collections: r raw {raw:.4}, r z {z:.4}");
    if raw >= 0.99 && z >= 0.99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ranking_recovery() -> Result<String, String> {
    let means = [85.0, 70.0, 55.0, 40.0];
    let mut good = 0;
    let mut ties = 0;
    for trial in 0..100u64 {
        let scenario = synthetic_scenario(4, 140, 1000 + trial);
        let plan = build_hits(&scenario.runs, &scenario.pairs, HitConfig::default(), 2000 + trial)
            .map_err(|e| e.to_string())?;
        let sim = SimConfig {
            seed: 3000 + trial,
            redundancy: 2,
            latent: latents(&means, 10.0),
            population: vec![
                diligent(12),
                plain(3, WorkerModel::RandomUniform),
                plain(2, WorkerModel::Constant { value: 60 }),
            ],
        };
        let analysis = analyze(&sim.run(&plan), &plan, &QcConfig::default()).map_err(|e| e.to_string())?;
        let index = PlanIndex::new(&plan);
        let samples = caption_samples(&analysis.standardized.records, &index);
        let matrix = significance_matrix(&samples, 0.05).map_err(|e| e.to_string())?;
        // sysK has latent rank K, so a win must go to the lower-numbered system.
        let consistent = (0..matrix.systems.len())
            .all(|i| (0..matrix.systems.len()).all(|j| !matrix.win(i, j) || matrix.systems[i] < matrix.systems[j]));
        let tied = matrix.tied_pairs().len();
        ties += tied;
        if consistent && tied <= 1 {
            good += 1;
        }
    }
    let detail = format!("{good}/100 trials with a consistent order and at most one tie ({ties} tied pairs overall)");
    if good >= 90 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_caption(rng: &mut SeededRng, vocab: &[&str]) -> TokenSeq {
    let len = rng.range_inclusive(1, 20);
    let words: Vec<&str> = (0..len).map(|_| vocab[rng.below(vocab.len())]).collect();
    tokenize(&words.join(" ")).expect("nonempty")
}

fn metric_sanity() -> Result<String, String> {
    const VOCAB: &[&str] = &[
        "a", "man", "woman", "dog", "cat", "runs", "jumps", "on", "the", "grass", "beach", "red", "car", "drives",
        "is", "in", "kitchen", "cooks", "food", "two", "people", "dance", "stage", "ball",
    ];
    const OTHER: &[&str] = &[
        "xylophone",
        "quartz",
        "zephyr",
        "plinth",
        "vortex",
        "glyph",
        "nimbus",
        "fjord",
    ];
    let mut rng = SeededRng::new(1000);
    let captions: Vec<TokenSeq> = (0..1000).map(|_| random_caption(&mut rng, VOCAB)).collect();
    let idf = NGramProfile::from_documents(captions.iter().map(std::slice::from_ref));
    let mut worst = 0.0f64;
    for x in &captions {
        let m = x.len() as f64;
        let refs = std::slice::from_ref(x);
        let cider = cider_segment(x, refs, &idf).map_err(|e| e.to_string())?;
        // With every unigram matched in one chunk, only the fragmentation term remains.
        let meteor_ceiling = 1.0 - 0.5 / m.powi(3);
        for err in [
            bleu_segment(x, refs).map_err(|e| e.to_string())? - 1.0,
            meteor_segment(x, x, None) - meteor_ceiling,
            cider - 10.0,
            sts_lexical(x, x, None) - 1.0,
        ] {
            worst = worst.max(err.abs());
        }
        let y = random_caption(&mut rng, OTHER);
        let zeros = [
            bleu_segment(x, std::slice::from_ref(&y)).map_err(|e| e.to_string())?,
            meteor_segment(x, &y, None),
            cider_segment(x, std::slice::from_ref(&y), &idf).map_err(|e| e.to_string())?,
            sts_lexical(x, &y, None),
        ];
        if zeros.iter().any(|&v| v != 0.0) {
            return Err(format!("disjoint pair scored {zeros:?}"));
        }
    }
    let hyp = tokenize("a dog runs fast").unwrap();
    let reference = tokenize("a dog runs slowly").unwrap();
    let bleu = bleu_segment(&hyp, &[reference]).map_err(|e| e.to_string())?;
    // Clipped precisions 3/4, then add-one smoothed 3/4, 2/3, 1/2; no brevity penalty.
    let oracle = (0.75f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    let detail = format!("1000 captions, max identity error {worst:.1e}; BLEU example {bleu:.6} vs oracle {oracle:.6}");
    if worst <= 1e-9 && (bleu - oracle).abs() <= 1e-6 && (bleu - 0.658).abs() < 5e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mir_bounds() -> Result<String, String> {
    let build = |rank: usize| {
        let mut rankings = BTreeMap::new();
        let mut truth = BTreeMap::new();
        for v in 0..50 {
            let mut list: Vec<String> = (0..10).map(|c| format!("v{v}-c{c}")).collect();
            list.swap(0, rank - 1);
            truth.insert(format!("v{v}"), format!("v{v}-c0"));
            rankings.insert(format!("v{v}"), list);
        }
        (
            RankingRun {
                run_id: "run".into(),
                rankings,
            },
            truth,
        )
    };
    let (perfect, truth) = build(1);
    let (last, truth_last) = build(10);
    let best = mean_inverted_rank(&perfect, &truth).map_err(|e| e.to_string())?;
    let worst = mean_inverted_rank(&last, &truth_last).map_err(|e| e.to_string())?;
    let detail = format!("perfect {best}, all rank 10 {worst}");
    if best == 1.0 && worst == 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Williams' t for dependent correlations, written out directly.
fn williams_oracle(r12: f64, r13: f64, r23: f64, n: usize) -> (f64, f64) {
    let n = n as f64;
    let det = 1.0 - r12.powi(2) - r13.powi(2) - r23.powi(2) + 2.0 * r12 * r13 * r23;
    let rbar = (r12 + r13) / 2.0;
    let t = (r12 - r13) * ((n - 1.0) * (1.0 + r23)).sqrt()
        / (2.0 * ((n - 1.0) / (n - 3.0)) * det + rbar * rbar * (1.0 - r23).powi(3)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 3.0).unwrap();
    (t, 1.0 - dist.cdf(t))
}

fn williams_test() -> Result<String, String> {
    let tie = williams(0.6, 0.6, 0.3, 20).map_err(|e| e.to_string())?;
    if tie.statistic != 0.0 || tie.p_greater != 0.5 {
        return Err(format!("r12 = r13 gave t = {}, p = {}", tie.statistic, tie.p_greater));
    }
    let mut rng = SeededRng::new(50);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let r = |rng: &mut SeededRng| rng.unit() * 1.9 - 0.95;
        let (r12, r13, r23) = (r(&mut rng), r(&mut rng), r(&mut rng));
        let n = rng.range_inclusive(5, 200);
        let Ok(got) = williams(r12, r13, r23, n) else { continue };
        let (t, p) = williams_oracle(r12, r13, r23, n);
        worst = worst.max((got.statistic - t).abs()).max((got.p_greater - p).abs());
        tested += 1;
    }
    let detail = format!("tie gives t = 0, p = 0.5; 50 random tuples, max deviation from oracle {worst:.1e}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_capeval"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "capeval {}: {}",
            args[0],
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn end_to_end() -> Result<String, String> {
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let w = |name: &str| -> PathBuf { dir.path().join(name) };
    let s = |name: &str| -> String { sample.join(name).display().to_string() };
    let p = |name: &str| -> String { w(name).display().to_string() };
    let runs: Vec<String> = ["alpha_run1", "beta_run1", "gamma_run1"]
        .iter()
        .flat_map(|r| ["--run".to_string(), s(&format!("runs/{r}.tsv"))])
        .collect();
    let with_runs = |head: &[String]| -> Vec<String> { head.iter().cloned().chain(runs.iter().cloned()).collect() };
    let strs = |v: &[String]| -> Vec<String> { v.to_vec() };

    let start = Instant::now();
    let steps: Vec<Vec<String>> = vec![
        strs(&[
            "ingest".into(),
            "--captions".into(),
            s("captions.tsv"),
            "--videos".into(),
            s("videos.tsv"),
            "--out".into(),
            p("corpus"),
        ]),
        with_runs(&[
            "score-metrics".into(),
            "--corpus".into(),
            p("corpus"),
            "--include-reference".into(),
            "B".into(),
            "--refs".into(),
            "A".into(),
            "--lexicon".into(),
            s("synonyms.txt"),
            "--out".into(),
            p("metrics.tsv"),
        ]),
        strs(&[
            "degrade".into(),
            "--corpus".into(),
            p("corpus"),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            p("degraded.tsv"),
        ]),
        with_runs(&[
            "build-hits".into(),
            "--corpus".into(),
            p("corpus"),
            "--include-reference".into(),
            "B".into(),
            "--degraded".into(),
            p("degraded.tsv"),
            "--out".into(),
            p("plan.json"),
        ]),
        strs(&[
            "simulate".into(),
            "--plan".into(),
            p("plan.json"),
            "--config".into(),
            s("sim.toml"),
            "--out".into(),
            p("store.tsv"),
        ]),
        strs(&[
            "qc".into(),
            "--plan".into(),
            p("plan.json"),
            "--store".into(),
            p("store.tsv"),
            "--out".into(),
            p("workers.tsv"),
        ]),
        strs(&[
            "score-systems".into(),
            "--plan".into(),
            p("plan.json"),
            "--store".into(),
            p("store.tsv"),
            "--out".into(),
            p("leaderboard.tsv"),
        ]),
        strs(&[
            "sig-matrix".into(),
            "--plan".into(),
            p("plan.json"),
            "--store".into(),
            p("store.tsv"),
            "--out".into(),
            p("matrix.tsv"),
        ]),
        strs(&[
            "meta-eval".into(),
            "--metrics".into(),
            p("metrics.tsv"),
            "--scores".into(),
            p("leaderboard.tsv"),
            "--out".into(),
            p("meta.tsv"),
        ]),
    ];
    for step in &steps {
        run(&step.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    let took = start.elapsed();
    within(Duration::from_secs(60), start)?;
    let reports = ["workers.tsv", "leaderboard.tsv", "matrix.tsv", "meta.tsv"];
    for r in reports {
        let text = std::fs::read_to_string(w(r)).map_err(|e| format!("{r}: {e}"))?;
        let data = text.lines().filter(|l| !l.starts_with('#')).count();
        if !text.starts_with("# capeval") || data < 2 {
            return Err(format!("{r} is incomplete"));
        }
    }
    Ok(format!(
        "{} commands, reports {} emitted in {took:.2?}",
        steps.len(),
        reports.join(", ")
    ))
}
