//! Reading and writing the tab-separated artifacts passed between commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use capeval_core::corpus::load_description_run;
use capeval_core::metrics::SynonymLexicon;
use capeval_core::{Corpus, Provenance, SystemRun, SystemScore};

/// Writes `body` under a provenance header, creating parent directories.
pub fn write_artifact(path: &Path, provenance: &Provenance, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = provenance.header_lines();
    text.push_str(body);
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn data_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
}

pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    Corpus::load_dir(dir).with_context(|| format!("loading corpus from {}", dir.display()))
}

pub fn load_lexicon(path: Option<&Path>) -> Result<Option<SynonymLexicon>> {
    path.map(|p| SynonymLexicon::load(p).with_context(|| format!("loading lexicon {}", p.display())))
        .transpose()
}

/// Description runs from files, followed by any reference sets presented as runs.
pub fn load_runs(paths: &[impl AsRef<Path>], references: &[String], corpus: &Corpus) -> Result<Vec<SystemRun>> {
    let mut runs = Vec::new();
    for p in paths {
        let p = p.as_ref();
        runs.push(load_description_run(p, corpus).with_context(|| format!("loading run {}", p.display()))?);
    }
    for label in references {
        runs.push(
            corpus
                .reference_as_run(label)
                .with_context(|| format!("reference set `{label}`"))?,
        );
    }
    let mut ids: Vec<&str> = runs.iter().map(|r| r.run_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        bail!("run id `{}` given twice", w[0]);
    }
    Ok(runs)
}

/// Parses the output of `score-systems`.
pub fn read_scores(path: &Path) -> Result<Vec<SystemScore>> {
    let text = read(path)?;
    let mut scores = Vec::new();
    for (line, f) in data_rows(&text) {
        if f[0] == "system" {
            continue;
        }
        let parsed = (|| {
            if f.len() != 4 {
                return None;
            }
            Some(SystemScore {
                system: f[0].to_string(),
                raw_avg: f[1].parse().ok()?,
                z_avg: f[2].parse().ok()?,
                n: f[3].parse().ok()?,
            })
        })();
        match parsed {
            Some(s) => scores.push(s),
            None => bail!(
                "{}:{line}: expected `system<TAB>raw_avg<TAB>z_avg<TAB>n`",
                path.display()
            ),
        }
    }
    if scores.is_empty() {
        bail!("{}: no system scores", path.display());
    }
    Ok(scores)
}

/// Per-run metric means (metric → run → value) from the output of
/// `score-metrics`.
pub fn read_metric_summaries(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let text = read(path)?;
    let mut names: Vec<String> = Vec::new();
    let mut table: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (line, f) in data_rows(&text) {
        if f[0] == "run_id" {
            names = f[2..].iter().map(|s| s.to_string()).collect();
            continue;
        }
        if f.get(1) != Some(&"*") {
            continue;
        }
        if names.is_empty() || f.len() != names.len() + 2 {
            bail!("{}:{line}: summary row does not match the header", path.display());
        }
        for (name, value) in names.iter().zip(&f[2..]) {
            let v: f64 = value
                .parse()
                .with_context(|| format!("{}:{line}: bad value `{value}`", path.display()))?;
            table.entry(name.clone()).or_default().insert(f[0].to_string(), v);
        }
    }
    if table.is_empty() {
        bail!("{}: no per-run summary rows", path.display());
    }
    Ok(table)
}
