//! Operator commands: scan, mine, learn, fix and eval.

pub mod eval;
pub mod fix;
pub mod report;

use crate::dataflow::{annotate, load_spec, AnnotatedAst, VulnSpec};
use crate::learn::{learn, LearnConfig};
use crate::perturb::make_pairs;
use crate::perturb::store::{pair_ids, read_pairs, write_pairs};
use crate::strategy::{parse_store, write_store, StoreRecord, Strategy};
use crate::syntax::parse;
use crate::witnessing::{find_vulnerabilities, find_witnesses};
use clap::{Args, Parser, Subcommand};
use report::Record;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Exit codes.
pub const CLEAN: i32 = 0;
pub const VULNERABLE: i32 = 1;
pub const UNFIXED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "flowmend",
    version,
    about = "Learn and apply taint-flow repairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LearnFlags {
    /// Depth bound of the reference search.
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    /// Pairs merged per group.
    #[arg(long, default_value_t = 64)]
    pub max_pairs: usize,
}

impl LearnFlags {
    fn config(&self) -> LearnConfig {
        LearnConfig {
            max_depth: self.max_depth,
            max_pairs: self.max_pairs,
            ..LearnConfig::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report vulnerable and witnessed flows.
    Scan {
        paths: Vec<PathBuf>,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Build paired examples from witnessed flows in a corpus.
    Mine {
        corpus: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a strategy store from mined pairs.
    Learn {
        pairs: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: LearnFlags,
    },
    /// Apply stored strategies to the flagged flows of a file.
    Fix {
        file: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Directory for patched files and diffs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leave-one-out evaluation over a corpus of safe fixtures.
    Eval {
        corpus: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Extra training files that are never held out.
        #[arg(long)]
        seed_corpus: Option<PathBuf>,
        /// Also write the text table here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: LearnFlags,
    },
}

/// A failure that stops a command.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Fatal(String);

fn fatal(e: impl std::fmt::Display) -> Fatal {
    Fatal(e.to_string())
}

/// `.js` files under `dir`, recursively, in path order.
pub fn js_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "js") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Relative path without extension, `/` replaced by `_`.
fn file_name(root: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(root).unwrap_or(p).with_extension("");
    rel.to_string_lossy().replace(['/', '\\'], "_")
}

fn read_corpus(dir: &Path) -> Result<Vec<(String, String)>, Fatal> {
    js_files(dir)
        .map_err(|e| fatal(format!("{}: {e}", dir.display())))?
        .into_iter()
        .map(|p| {
            std::fs::read_to_string(&p)
                .map(|t| (file_name(dir, &p), t))
                .map_err(|e| fatal(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn specs(path: &Path) -> Result<Vec<VulnSpec>, Fatal> {
    load_spec(path).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fatal> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| fatal(format!("{}: {e}", d.display())))?;
    }
    std::fs::write(path, text).map_err(|e| fatal(format!("{}: {e}", path.display())))
}

/// Run a command, writing records to `out`; returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, Fatal> {
    match cli.command {
        Command::Scan { paths, spec } => scan(&paths, &specs(&spec)?, out),
        Command::Mine {
            corpus,
            spec,
            out: dir,
        } => mine(&corpus, &specs(&spec)?, &dir, out),
        Command::Learn {
            pairs,
            spec,
            out: file,
            flags,
        } => learn_cmd(&pairs, &specs(&spec)?, &file, &flags.config(), out),
        Command::Fix {
            file,
            spec,
            store,
            k,
            out: dir,
        } => fix_cmd(&file, &specs(&spec)?, &store, k, dir.as_deref(), out),
        Command::Eval {
            corpus,
            spec,
            k,
            seed_corpus,
            out: table,
            flags,
        } => {
            let files = read_corpus(&corpus)?;
            let seed = match seed_corpus {
                Some(d) => read_corpus(&d)?,
                None => Vec::new(),
            };
            let mut text = String::new();
            for s in specs(&spec)? {
                let r = eval::eval_corpus(&files, &seed, &s, &flags.config(), k);
                for rec in report::eval_records(&r) {
                    emit(out, rec)?;
                }
                text.push_str(&report::eval_table(&r));
            }
            out.write_all(text.as_bytes()).map_err(fatal)?;
            if let Some(p) = table {
                write_file(&p, &text)?;
            }
            Ok(CLEAN)
        }
    }
}

fn emit(out: &mut dyn Write, r: Record) -> Result<(), Fatal> {
    writeln!(out, "{r}").map_err(fatal)
}

fn scan(paths: &[PathBuf], specs: &[VulnSpec], out: &mut dyn Write) -> Result<i32, Fatal> {
    let mut code = CLEAN;
    for path in paths {
        let file = path.display().to_string();
        let doc = match std::fs::read_to_string(path) {
            Err(e) => Err(e.to_string()),
            Ok(text) => parse(&text).map_err(|e| e.to_string()),
        };
        let doc = match doc {
            Ok(d) => d,
            Err(e) => {
                emit(
                    out,
                    Record::new("error")
                        .field("file", &file)
                        .field("message", e),
                )?;
                continue;
            }
        };
        for spec in specs {
            let aast = annotate(&doc, spec);
            for v in find_vulnerabilities(&aast).pairs {
                code = VULNERABLE;
                let r = Record::new("vulnerability")
                    .field("file", &file)
                    .field("spec", &spec.name);
                emit(
                    out,
                    r.node("source", &doc, v.source).node("sink", &doc, v.sink),
                )?;
            }
            for w in find_witnesses(&aast).triples {
                let r = Record::new("witness")
                    .field("file", &file)
                    .field("spec", &spec.name);
                let r = r
                    .node("source", &doc, w.source)
                    .node("witness", &doc, w.witness);
                emit(out, r.node("sink", &doc, w.sink))?;
            }
        }
    }
    Ok(code)
}

#[derive(Debug, Serialize)]
struct SkipEntry {
    file: String,
    source: String,
    sink: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    spec: String,
    files: usize,
    parse_errors: Vec<String>,
    witnessed: usize,
    pairs: Vec<String>,
    skipped: Vec<SkipEntry>,
}

fn mine(corpus: &Path, specs: &[VulnSpec], dir: &Path, out: &mut dyn Write) -> Result<i32, Fatal> {
    let files = read_corpus(corpus)?;
    for spec in specs {
        let mut names = Vec::new();
        let mut aasts: Vec<Arc<AnnotatedAst>> = Vec::new();
        let mut parse_errors = Vec::new();
        for (name, text) in &files {
            match parse(text) {
                Ok(d) => {
                    names.push(name.clone());
                    aasts.push(Arc::new(annotate(&d, spec)));
                }
                Err(e) => parse_errors.push(format!("{name}: {e}")),
            }
        }
        let mined = make_pairs(&aasts);
        write_pairs(dir, &spec.name, &mined.pairs, &names).map_err(fatal)?;
        let skipped: Vec<SkipEntry> = mined
            .skipped
            .iter()
            .map(|s| {
                let doc = &aasts[s.origin].doc;
                SkipEntry {
                    file: names[s.origin].clone(),
                    source: doc.value(s.source).to_string(),
                    sink: doc.value(s.sink).to_string(),
                    reason: s.reason.to_string(),
                }
            })
            .collect();
        let manifest = Manifest {
            spec: spec.name.clone(),
            files: files.len(),
            parse_errors,
            witnessed: mined.witnessed,
            pairs: pair_ids(&mined.pairs, &names),
            skipped,
        };
        let text = toml::to_string(&manifest).map_err(fatal)?;
        write_file(&dir.join(&spec.name).join("manifest.toml"), &text)?;
        for s in &manifest.skipped {
            let r = Record::new("skipped")
                .field("spec", &spec.name)
                .field("file", &s.file);
            emit(out, r.field("reason", &s.reason))?;
        }
        let r = Record::new("mined")
            .field("spec", &spec.name)
            .field("files", manifest.files)
            .field("witnessed", manifest.witnessed)
            .field("pairs", manifest.pairs.len())
            .field("skipped", manifest.skipped.len());
        emit(out, r)?;
    }
    Ok(CLEAN)
}

fn learn_cmd(
    pairs_dir: &Path,
    specs: &[VulnSpec],
    file: &Path,
    cfg: &LearnConfig,
    out: &mut dyn Write,
) -> Result<i32, Fatal> {
    let mut records = Vec::new();
    for spec in specs {
        let pairs = if pairs_dir.join(&spec.name).is_dir() {
            let (ok, bad) = read_pairs(pairs_dir, spec).map_err(fatal)?;
            for e in bad {
                emit(
                    out,
                    Record::new("warning").field("message", format!("dropped pair: {e}")),
                )?;
            }
            ok.into_iter().map(|(_, p)| p).collect()
        } else {
            Vec::new()
        };
        let learned = learn(&pairs, cfg);
        let mut r = Record::new("learned")
            .field("spec", &spec.name)
            .field("pairs", pairs.len())
            .field("strategies", learned.len());
        if let (Some(a), Some(b)) = (learned.first(), learned.last()) {
            r = r.field("cost_min", a.cost).field("cost_max", b.cost);
        }
        emit(out, r)?;
        records.extend(learned.into_iter().map(|l| StoreRecord {
            spec: spec.name.clone(),
            cost: l.cost,
            support: l.parents.len(),
            strategy: l.strategy,
        }));
    }
    write_file(file, &write_store(&records))?;
    Ok(CLEAN)
}

fn fix_cmd(
    file: &Path,
    specs: &[VulnSpec],
    store: &Path,
    k: usize,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Fatal> {
    let read =
        |p: &Path| std::fs::read_to_string(p).map_err(|e| fatal(format!("{}: {e}", p.display())));
    let records =
        parse_store(&read(store)?).map_err(|e| fatal(format!("{}: {e}", store.display())))?;
    let text = read(file)?;
    let doc = parse(&text).map_err(|e| fatal(format!("{}: {e}", file.display())))?;
    let name = file.display().to_string();
    let stem = file
        .file_stem()
        .map_or("out".into(), |s| s.to_string_lossy().into_owned());
    let mut flagged = 0;
    let mut fixed = 0;
    for spec in specs {
        let strategies: Vec<Strategy> = records
            .iter()
            .filter(|r| r.spec == spec.name)
            .map(|r| r.strategy.clone())
            .collect();
        let aast = Arc::new(annotate(&doc, spec));
        for t in fix::flagged_triples(&aast) {
            flagged += 1;
            let r = Record::new("flow")
                .field("file", &name)
                .field("spec", &spec.name);
            emit(
                out,
                r.node("source", &doc, t.source).node("sink", &doc, t.sink),
            )?;
            let cands = fix::fix_triple(&t, &strategies, spec, k, &name);
            let mut rank = 0;
            for c in cands.iter().filter(|c| c.validated) {
                rank += 1;
                fixed += 1;
                emit(out, report::candidate(&name, &spec.name, rank, c))?;
                out.write_all(c.diff.as_bytes()).map_err(fatal)?;
                if let Some(d) = dir {
                    let base = format!("{stem}.{}.fix{fixed}", spec.name);
                    write_file(&d.join(format!("{base}.js")), &c.patched_source)?;
                    write_file(&d.join(format!("{base}.diff")), &c.diff)?;
                }
            }
            if rank == 0 {
                let r = Record::new("unfixed")
                    .field("file", &name)
                    .field("spec", &spec.name);
                emit(
                    out,
                    r.field("tried", cands.len())
                        .field("reason", "no-applicable-strategy"),
                )?;
            }
        }
    }
    if flagged == 0 {
        emit(
            out,
            Record::new("unfixed")
                .field("file", &name)
                .field("reason", "no flagged flow"),
        )?;
    }
    Ok(if fixed > 0 { CLEAN } else { UNFIXED })
}
