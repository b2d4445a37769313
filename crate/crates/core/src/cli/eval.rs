//! Leave-one-out evaluation over a fixture corpus.

use super::fix::fix_triple;
use crate::dataflow::{annotate, AnnotatedAst, VulnSpec};
use crate::learn::{learn, parallel_map, LearnConfig};
use crate::perturb::{make_pairs, PairedExample};
use crate::strategy::Strategy;
use crate::syntax::parse;
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Fixed,
    NotFixed,
    Error(String),
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Fixed => f.write_str("fixed"),
            Outcome::NotFixed => f.write_str("not-fixed"),
            Outcome::Error(_) => f.write_str("error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureResult {
    pub name: String,
    pub outcome: Outcome,
    /// Pairs mined from the other fixtures.
    pub training_pairs: usize,
    pub strategies: usize,
    /// Distinct validated patched texts over the fixture's perturbed flows.
    pub unique_fixes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub spec: String,
    pub rows: Vec<FixtureResult>,
    pub total: usize,
    pub fixed: usize,
    pub success_rate: f64,
    pub mean_unique_fixes: f64,
}

/// For each fixture: learn from the pairs of all other fixtures, then fix
/// the fixture's own perturbed flows. A fixture counts as fixed when every
/// one of its flows gets a validated candidate confined to the edit region.
/// `seed` files only ever serve as training data.
pub fn eval_corpus(
    files: &[(String, String)],
    seed: &[(String, String)],
    spec: &VulnSpec,
    cfg: &LearnConfig,
    k: usize,
) -> EvalReport {
    let parsed: Vec<Result<Arc<AnnotatedAst>, String>> = files
        .iter()
        .chain(seed)
        .map(|(_, text)| {
            parse(text)
                .map(|d| Arc::new(annotate(&d, spec)))
                .map_err(|e| e.to_string())
        })
        .collect();
    let ok: Vec<usize> = (0..parsed.len()).filter(|&i| parsed[i].is_ok()).collect();
    let corpus: Vec<Arc<AnnotatedAst>> = ok.iter().map(|&i| parsed[i].clone().unwrap()).collect();
    let mut pairs = make_pairs(&corpus).pairs;
    for p in &mut pairs {
        p.origin = ok[p.origin];
    }
    let indices: Vec<usize> = (0..files.len()).collect();
    let rows = parallel_map(&indices, |&i| {
        let name = files[i].0.clone();
        if let Err(e) = &parsed[i] {
            return FixtureResult {
                name,
                outcome: Outcome::Error(e.clone()),
                training_pairs: 0,
                strategies: 0,
                unique_fixes: 0,
            };
        }
        let (held, train): (Vec<&PairedExample>, Vec<&PairedExample>) =
            pairs.iter().partition(|p| p.origin == i);
        let train: Vec<PairedExample> = train.into_iter().cloned().collect();
        let learned: Vec<Strategy> = learn(&train, cfg).into_iter().map(|l| l.strategy).collect();
        let mut texts = BTreeSet::new();
        let mut all = !held.is_empty();
        for p in &held {
            let cands = fix_triple(&p.edit.triple, &learned, spec, k, &name);
            all &= cands.iter().any(|c| c.validated && c.confined);
            texts.extend(
                cands
                    .into_iter()
                    .filter(|c| c.validated)
                    .map(|c| c.patched_source),
            );
        }
        FixtureResult {
            name,
            outcome: if held.is_empty() {
                Outcome::Error("no witnessed flow".into())
            } else if all {
                Outcome::Fixed
            } else {
                Outcome::NotFixed
            },
            training_pairs: train.len(),
            strategies: learned.len(),
            unique_fixes: texts.len().min(k),
        }
    });
    let total = rows.len();
    let fixed = rows.iter().filter(|r| r.outcome == Outcome::Fixed).count();
    let ratio = |n: usize| {
        if total == 0 {
            0.0
        } else {
            n as f64 / total as f64
        }
    };
    EvalReport {
        spec: spec.name.clone(),
        total,
        fixed,
        success_rate: ratio(fixed),
        mean_unique_fixes: ratio(rows.iter().map(|r| r.unique_fixes).sum()),
        rows,
    }
}
