//! Line-delimited report records and the evaluation table.

use super::eval::{EvalReport, Outcome};
use super::fix::FixCandidate;
use crate::syntax::{AstDoc, NodeId};
use std::fmt::Write;

/// A record: a tag followed by `key=value` fields. Values that are not
/// plain words are written as quoted strings with escapes.
pub struct Record {
    line: String,
}

fn plain(v: &str) -> bool {
    !v.is_empty()
        && v.chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./:+".contains(c))
}

impl Record {
    pub fn new(tag: &str) -> Self {
        Record { line: tag.into() }
    }

    pub fn field(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        let v = value.to_string();
        if plain(&v) {
            let _ = write!(self.line, " {key}={v}");
        } else {
            let _ = write!(self.line, " {key}={v:?}");
        }
        self
    }

    /// `<span>` and `<key>_text` fields for a node.
    pub fn node(self, key: &str, doc: &AstDoc, n: NodeId) -> Self {
        let span = doc
            .node(n)
            .span
            .map_or_else(|| "?".to_string(), |s| s.to_string());
        self.field(key, span)
            .field(&format!("{key}_text"), doc.value(n))
    }
}

impl std::fmt::Display for Record {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.line)
    }
}

pub fn candidate(file: &str, spec: &str, rank: usize, c: &FixCandidate) -> Record {
    Record::new("candidate")
        .field("file", file)
        .field("spec", spec)
        .field("rank", rank)
        .field("strategy", &c.strategy_id)
        .field("cost", c.cost)
        .field("validated", c.validated)
        .field("confined", c.confined)
}

/// Per-fixture records followed by a totals record.
pub fn eval_records(r: &EvalReport) -> Vec<Record> {
    let mut out: Vec<Record> = r
        .rows
        .iter()
        .map(|row| {
            let rec = Record::new("fixture")
                .field("spec", &r.spec)
                .field("name", &row.name)
                .field("outcome", &row.outcome)
                .field("training_pairs", row.training_pairs)
                .field("strategies", row.strategies)
                .field("unique_fixes", row.unique_fixes);
            match &row.outcome {
                Outcome::Error(e) => rec.field("error", e),
                _ => rec,
            }
        })
        .collect();
    out.push(
        Record::new("eval")
            .field("spec", &r.spec)
            .field("total", r.total)
            .field("fixed", r.fixed)
            .field("success_rate", format!("{:.4}", r.success_rate))
            .field("mean_unique_fixes", format!("{:.4}", r.mean_unique_fixes)),
    );
    out
}

/// Aligned text table of an evaluation.
pub fn eval_table(r: &EvalReport) -> String {
    let header = ["fixture", "outcome", "train", "strategies", "unique"];
    let rows: Vec<[String; 5]> = r
        .rows
        .iter()
        .map(|x| {
            [
                x.name.clone(),
                x.outcome.to_string(),
                x.training_pairs.to_string(),
                x.strategies.to_string(),
                x.unique_fixes.to_string(),
            ]
        })
        .collect();
    let mut w = header.map(str::len);
    for row in &rows {
        for (i, c) in row.iter().enumerate() {
            w[i] = w[i].max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: [&str; 5]| {
        let _ = writeln!(
            out,
            "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  {:>w4$}",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            cells[4],
            w0 = w[0],
            w1 = w[1],
            w2 = w[2],
            w3 = w[3],
            w4 = w[4]
        );
    };
    line(header);
    for row in &rows {
        line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    let _ = writeln!(
        out,
        "{}: {}/{} fixed, success rate {:.2}, mean unique fixes {:.2}",
        r.spec, r.fixed, r.total, r.success_rate, r.mean_unique_fixes
    );
    out
}
