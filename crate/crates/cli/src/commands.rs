use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use capeval_core::analytics::{
    analyze, caption_samples, load_store, profiles_tsv, scores_table, scores_tsv, write_store, Analysis,
};
use capeval_core::corpus::{load_corpus as load_corpus_files, load_ranking_run};
use capeval_core::degradation::{degrade_set, read_degraded, write_degraded};
use capeval_core::hitplan::{build_hits as plan_hits, estimate_cost, PlanIndex};
use capeval_core::metrics::{cross_reference_sts, load_truth, mean_inverted_rank, LexicalSts, MetricScorer};
use capeval_core::simcrowd::SimConfig;
use capeval_core::stats::{inter_system_sts, metric_meta_eval, replication_report, significance_matrix};
use capeval_core::{HitConfig, HitPlan, Provenance, QcConfig, WorkerStatus};
use capeval_server::{Collector, CollectorConfig, SystemClock};
use serde::Serialize;

use crate::artifacts::{
    load_corpus, load_lexicon, load_runs, read, read_metric_summaries, read_scores, write_artifact,
};
use crate::{
    BuildHitsArgs, DegradeArgs, IngestArgs, MetaEvalArgs, MirArgs, QcArgs, ReplicateArgs, ScoreMetricsArgs, ServeArgs,
    SigMatrixArgs, SimulateArgs, StsCrossArgs,
};

fn provenance<C: Serialize>(command: &str, config: &C, seeds: &[(&str, u64)]) -> Provenance {
    Provenance::new(command, config, seeds)
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let corpus = load_corpus_files(&args.captions, &args.videos).context("loading corpus")?;
    let runs = load_runs(&args.runs, &[], &corpus)?;
    corpus
        .save(&args.out)
        .with_context(|| format!("writing corpus to {}", args.out.display()))?;
    let prov = provenance("ingest", args, &[]);
    for name in ["captions.tsv", "videos.tsv"] {
        let path = args.out.join(name);
        let body = read(&path)?;
        write_artifact(&path, &prov, &body)?;
    }
    println!("videos\t{}", corpus.videos().len());
    for (source, n) in corpus.source_counts() {
        println!("{source}\t{n}");
    }
    for run in &runs {
        println!("run {}\t{} of {} videos", run.run_id, run.len(), corpus.videos().len());
    }
    Ok(())
}

pub fn score_metrics(args: &ScoreMetricsArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus.corpus)?;
    let runs = load_runs(&args.runs, &args.include_reference, &corpus)?;
    let mut scorer = MetricScorer::new(&corpus)?;
    if let Some(lexicon) = load_lexicon(args.lexicon.as_deref())? {
        scorer = scorer.with_lexicon(lexicon);
    }
    if !args.refs.is_empty() {
        scorer = scorer.with_reference_sets(args.refs.clone());
    }
    let report = scorer.score_runs(&runs)?;
    write_artifact(&args.out, &provenance("score-metrics", args, &[]), &report.to_tsv())?;
    println!(
        "{:<16} {:>6} {:>8} {:>8} {:>8} {:>8}",
        "run", "n", "bleu", "meteor", "cider", "sts"
    );
    for s in &report.summaries {
        println!(
            "{:<16} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            s.run_id, s.segments, s.bleu, s.meteor, s.cider, s.sts
        );
    }
    if !report.skipped.is_empty() {
        eprintln!("{} segments skipped for lack of references", report.skipped.len());
    }
    Ok(())
}

pub fn mir(args: &MirArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus.corpus)?;
    let truth = load_truth(&args.truth)?;
    let mut body = String::from("run_id\tmir\tvideos\n");
    for path in &args.runs {
        let run = load_ranking_run(path, &corpus).with_context(|| format!("loading ranking run {}", path.display()))?;
        let score = mean_inverted_rank(&run, &truth).with_context(|| format!("scoring {}", run.run_id))?;
        println!("{}\t{score:.4}", run.run_id);
        let _ = writeln!(body, "{}\t{score:.6}\t{}", run.run_id, run.rankings.len());
    }
    write_artifact(&args.out, &provenance("mir", args, &[]), &body)
}

pub fn degrade(args: &DegradeArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus.corpus)?;
    let originals: Vec<_> = corpus.reference_set(&args.set)?.into_iter().cloned().collect();
    let pairs = degrade_set(&originals, args.seed)?;
    let text = write_degraded(&pairs, &provenance("degrade", args, &[("seed", args.seed)]));
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;
    let relaxed = pairs.iter().filter(|p| p.degraded.relaxed).count();
    println!(
        "{} degraded captions from set {} ({relaxed} with relaxed span placement)",
        pairs.len(),
        args.set
    );
    Ok(())
}

pub fn build_hits(args: &BuildHitsArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus.corpus)?;
    let origins = corpus.reference_set(&args.set)?;
    let pairs = read_degraded(&args.degraded, &origins)?;
    let runs = load_runs(&args.runs, &args.include_reference, &corpus)?;
    let config = HitConfig {
        hit_size: args.hit_size,
        qc_pairs: args.pairs,
        repeats: args.repeats,
        min_repeat_gap: args.min_gap,
    };
    let mut plan = plan_hits(&runs, &pairs, config, args.seed)?;
    plan.attach_urls(&corpus);
    plan.provenance = Some(provenance("build-hits", args, &[("seed", args.seed)]));
    plan.save(&args.out)?;
    if let Some(csv) = &args.mturk_csv {
        fs::write(csv, plan.to_mturk_csv()).with_context(|| format!("writing {}", csv.display()))?;
    }

    let coverage = plan.coverage(&runs);
    let padded = plan.hits.iter().filter(|h| h.padded).count();
    let short: usize = plan.hits.iter().map(|h| h.short_gaps).sum();
    println!("hits\t{}", plan.hits.len());
    println!("system captions\t{}", coverage.captions);
    println!("padded hits\t{padded}");
    if short > 0 {
        eprintln!("warning: {short} repeats closer than {} items", args.min_gap);
    }
    ensure!(
        coverage.missing.is_empty(),
        "{} run captions missing from the plan",
        coverage.missing.len()
    );
    println!(
        "estimated cost\t{:.2} ({} hits at {:.2} plus {:.0}% fee)",
        estimate_cost(plan.hits.len(), args.rate, args.fee),
        plan.hits.len(),
        args.rate,
        args.fee * 100.0
    );
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let mut config = CollectorConfig::new(&args.plan, &args.store);
    config.redundancy = args.redundancy;
    config.session_timeout = Duration::from_secs(args.session_timeout * 60);
    ensure!(args.redundancy > 0, "--redundancy must be at least 1");
    let collector = Arc::new(Collector::open(config, Arc::new(SystemClock))?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!(
        "serving {} HITs on http://{} (store {})",
        collector.plan().hits.len(),
        args.listen,
        args.store.display()
    );
    runtime.block_on(capeval_server::serve(args.listen, collector, args.static_dir.clone()))?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let plan = load_plan(&args.plan)?;
    let text = read(&args.config)?;
    let mut sim: SimConfig = toml::from_str(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }
    if let Some(r) = args.redundancy {
        sim.redundancy = r;
    }
    ensure!(sim.redundancy > 0, "redundancy must be at least 1");
    ensure!(
        !sim.population.is_empty(),
        "{}: empty population",
        args.config.display()
    );
    let records = sim.run(&plan);
    let prov = provenance("simulate", &(&sim, &args.plan), &[("seed", sim.seed)]);
    write_artifact(&args.out, &prov, &write_store(&records))?;
    let workers: std::collections::BTreeSet<&str> = records.iter().map(|r| r.worker_id.as_str()).collect();
    println!("{} ratings from {} workers", records.len(), workers.len());
    Ok(())
}

fn load_plan(path: &Path) -> Result<HitPlan> {
    HitPlan::load(path).with_context(|| format!("loading plan {}", path.display()))
}

fn run_analysis(args: &QcArgs) -> Result<(HitPlan, Analysis)> {
    ensure!(args.alpha > 0.0 && args.alpha < 1.0, "--alpha must lie in (0, 1)");
    let plan = load_plan(&args.plan)?;
    let records = load_store(&args.store)?;
    ensure!(!records.is_empty(), "{}: no ratings", args.store.display());
    let config = QcConfig {
        alpha: args.alpha,
        min_pairs: args.min_pairs,
    };
    let analysis = analyze(&records, &plan, &config)?;
    Ok((plan, analysis))
}

pub fn qc(args: &QcArgs) -> Result<()> {
    let (plan, analysis) = run_analysis(args)?;
    write_artifact(
        &args.out,
        &provenance("qc", args, &[("plan", plan.seed)]),
        &profiles_tsv(&analysis.profiles),
    )?;
    for (status, n) in analysis.status_counts() {
        println!("{status}\t{n}");
    }
    for p in analysis.profiles.iter().filter(|p| p.status == WorkerStatus::Failed) {
        println!(
            "failed\t{}\tp={}",
            p.worker_id,
            p.qc_p_value.map_or("NA".into(), |v| format!("{v:.4}"))
        );
    }
    Ok(())
}

pub fn score_systems(args: &QcArgs) -> Result<()> {
    let (plan, analysis) = run_analysis(args)?;
    if analysis.scores.is_empty() {
        bail!("no system ratings from workers who passed quality control");
    }
    write_artifact(
        &args.out,
        &provenance("score-systems", args, &[("plan", plan.seed)]),
        &scores_tsv(&analysis.scores),
    )?;
    print!("{}", scores_table(&analysis.scores));
    if !analysis.standardized.excluded.is_empty() {
        eprintln!(
            "{} passed workers excluded for zero spread",
            analysis.standardized.excluded.len()
        );
    }
    Ok(())
}

pub fn sig_matrix(args: &SigMatrixArgs) -> Result<()> {
    ensure!(
        args.sig_alpha > 0.0 && args.sig_alpha < 1.0,
        "--sig-alpha must lie in (0, 1)"
    );
    let (plan, analysis) = run_analysis(&args.qc)?;
    let index = PlanIndex::new(&plan);
    let mut samples: BTreeMap<String, Vec<f64>> = caption_samples(&analysis.standardized.records, &index)
        .into_iter()
        .collect();
    // Best system first.
    let ordered: Vec<(String, Vec<f64>)> = analysis
        .scores
        .iter()
        .filter_map(|s| samples.remove(&s.system).map(|v| (s.system.clone(), v)))
        .collect();
    let matrix = significance_matrix(&ordered, args.sig_alpha)?;
    write_artifact(
        &args.qc.out,
        &provenance("sig-matrix", args, &[("plan", plan.seed)]),
        &matrix.to_tsv(),
    )?;
    print!("{}", matrix.render_grid());
    println!("tied pairs\t{}", matrix.tied_pairs().len());
    Ok(())
}

pub fn meta_eval(args: &MetaEvalArgs) -> Result<()> {
    let metrics = read_metric_summaries(&args.metrics)?;
    let human = read_scores(&args.scores)?;
    let report = metric_meta_eval(&metrics, &human)?;
    let prov = provenance("meta-eval", args, &[]);
    write_artifact(&args.out, &prov, &report.to_tsv())?;
    if let Some(path) = &args.scatter {
        write_artifact(path, &prov, &report.scatter_tsv())?;
    }
    println!("systems\t{}", report.systems.join(","));
    for c in &report.correlations {
        println!("{}\tr={:.4}", c.metric, c.r);
    }
    for w in &report.williams {
        match &w.result {
            Some(t) => println!("{} > {}\tp={:.4}", w.better, w.worse, t.p_greater),
            None => println!(
                "{} vs {}\tnot tested: {}",
                w.better,
                w.worse,
                w.note.as_deref().unwrap_or("")
            ),
        }
    }
    Ok(())
}

pub fn replicate(args: &ReplicateArgs) -> Result<()> {
    ensure!(args.scores.len() == 2, "--scores takes exactly two files");
    let first = read_scores(&args.scores[0])?;
    let second = read_scores(&args.scores[1])?;
    let rep = replication_report(&first, &second)?;
    let body = format!("r_raw\tr_z\tsystems\n{:.6}\t{:.6}\t{}\n", rep.r_raw, rep.r_z, rep.n);
    write_artifact(&args.out, &provenance("replicate-report", args, &[]), &body)?;
    println!("raw r = {:.4}\nz r = {:.4}\nsystems = {}", rep.r_raw, rep.r_z, rep.n);
    Ok(())
}

pub fn sts_cross(args: &StsCrossArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus.corpus)?;
    let backend = LexicalSts {
        lexicon: load_lexicon(args.lexicon.as_deref())?,
    };
    let report = cross_reference_sts(&corpus, &args.set_a, &args.set_b, &backend)?;
    let prov = provenance("sts-cross", args, &[]);
    let mut body = String::from("video_id\tsts\n");
    for (video, s) in &report.similarities {
        let _ = writeln!(body, "{video}\t{s:.6}");
    }
    let _ = writeln!(body, "# median\t{:.6}", report.median);
    let _ = writeln!(
        body,
        "# histogram\t{}",
        report.histogram.map(|c| c.to_string()).join(",")
    );
    write_artifact(&args.out, &prov, &body)?;
    println!(
        "{} vs {}: median {:.4} over {} videos ({} skipped)",
        args.set_a,
        args.set_b,
        report.median,
        report.similarities.len(),
        report.skipped.len()
    );

    if let Some(out) = &args.systems_out {
        let runs = load_runs(&args.runs, std::slice::from_ref(&args.set_a), &corpus)?;
        let systems: Vec<(String, BTreeMap<String, String>)> =
            runs.into_iter().map(|r| (r.run_id, r.captions)).collect();
        let inter = inter_system_sts(&systems, &backend)?;
        write_artifact(out, &prov, &inter.to_tsv())?;
        for &i in &inter.ranking {
            println!("{}\t{:.4}", inter.systems[i], inter.average_to_others[i]);
        }
    }
    Ok(())
}
