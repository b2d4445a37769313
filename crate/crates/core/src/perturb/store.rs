//! On-disk paired dataset: `<root>/<spec>/<id>/{unsafe.js,safe.js,edit.meta}`.

use super::{Edit, EditType, PairedExample};
use crate::dataflow::{annotate, FlowTriple, VulnSpec};
use crate::syntax::{emit, emit_tree, emit_with_spans, parse, AstDoc, NodeId, NodeType, Tree};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProgForm {
    Statement,
    Expression,
}

/// Textual form of an [`Edit`]. Node locations are child-index paths from
/// the root of the unsafe program; line ranges are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditMeta {
    pub origin: usize,
    pub origin_name: String,
    pub edit_type: EditType,
    pub editloc: Vec<usize>,
    pub index: usize,
    pub form: ProgForm,
    pub editprog: String,
    pub source: Vec<usize>,
    pub sink: Vec<usize>,
    pub source_lines: [usize; 2],
    pub sink_lines: [usize; 2],
}

/// Source text for a fragment; expressions are written as a statement.
pub fn fragment_text(t: &Tree) -> (ProgForm, String) {
    let (form, stmt) = if t.kind.is_statement() {
        (ProgForm::Statement, t.clone())
    } else {
        (
            ProgForm::Expression,
            Tree::new(NodeType::Expr, "", vec![t.clone()]),
        )
    };
    let text = emit_tree(&stmt);
    (form, text.trim_end().to_string())
}

pub fn parse_fragment(form: ProgForm, text: &str) -> Result<Tree, String> {
    let doc = parse(text).map_err(|e| e.to_string())?;
    let stmts = doc.children(doc.root());
    if stmts.len() != 1 {
        return Err(format!("expected one statement, found {}", stmts.len()));
    }
    let node = match form {
        ProgForm::Statement => stmts[0],
        ProgForm::Expression if doc.kind(stmts[0]) == NodeType::Expr => doc.children(stmts[0])[0],
        ProgForm::Expression => return Err("expected an expression statement".into()),
    };
    Ok(doc.subtree(node).strip_spans())
}

pub fn meta_of(pair: &PairedExample, origin_name: &str) -> EditMeta {
    let doc = pair.edit.triple.doc();
    let (_, spans) = emit_with_spans(doc);
    let lines = |n: NodeId| [spans[n.index()].start, spans[n.index()].end];
    let (form, editprog) = fragment_text(&pair.edit.editprog);
    EditMeta {
        origin: pair.origin,
        origin_name: origin_name.to_string(),
        edit_type: pair.edit.edit_type,
        editloc: doc.path_from_root(pair.edit.editloc),
        index: pair.edit.index,
        form,
        editprog,
        source: doc.path_from_root(pair.edit.triple.source),
        sink: doc.path_from_root(pair.edit.triple.sink),
        source_lines: lines(pair.edit.triple.source),
        sink_lines: lines(pair.edit.triple.sink),
    }
}

fn write(path: PathBuf, text: &str) -> Result<(), StoreError> {
    fs::write(&path, text).map_err(|source| StoreError::Io { path, source })
}

fn read(path: PathBuf) -> Result<String, StoreError> {
    fs::read_to_string(&path).map_err(|source| StoreError::Io { path, source })
}

pub fn write_pair(dir: &Path, pair: &PairedExample, origin_name: &str) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(|source| StoreError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let meta = toml::to_string(&meta_of(pair, origin_name)).expect("meta serializes");
    write(dir.join("unsafe.js"), &emit(pair.edit.triple.doc()))?;
    write(dir.join("safe.js"), &emit(&pair.safe))?;
    write(dir.join("edit.meta"), &meta)
}

pub fn read_pair(dir: &Path, spec: &VulnSpec) -> Result<PairedExample, StoreError> {
    let meta_path = dir.join("edit.meta");
    let invalid = |path: &Path, message: String| StoreError::Invalid {
        path: path.to_path_buf(),
        message,
    };
    let meta: EditMeta = toml::from_str(&read(meta_path.clone())?)
        .map_err(|e| invalid(&meta_path, e.to_string()))?;
    let load = |name: &str| -> Result<AstDoc, StoreError> {
        let p = dir.join(name);
        parse(&read(p.clone())?).map_err(|e| invalid(&p, e.to_string()))
    };
    let unsafe_doc = load("unsafe.js")?;
    let safe = load("safe.js")?;
    let at = |path: &[usize], what: &str| {
        unsafe_doc
            .node_at_path(path)
            .ok_or_else(|| invalid(&meta_path, format!("{what} path {path:?} not in unsafe.js")))
    };
    let (editloc, source, sink) = (
        at(&meta.editloc, "editloc")?,
        at(&meta.source, "source")?,
        at(&meta.sink, "sink")?,
    );
    let editprog = parse_fragment(meta.form, &meta.editprog).map_err(|e| invalid(&meta_path, e))?;
    let unsafe_ast = Arc::new(annotate(&unsafe_doc, spec));
    let triple = FlowTriple::new(Arc::clone(&unsafe_ast), source, sink)
        .ok_or_else(|| invalid(&meta_path, "source does not reach sink".into()))?;
    Ok(PairedExample {
        origin: meta.origin,
        unsafe_ast,
        edit: Edit {
            edit_type: meta.edit_type,
            editloc,
            index: meta.index,
            editprog,
            triple,
        },
        safe,
    })
}

/// Pair directory names: `<origin>-<k>` with k counting pairs per origin.
pub fn pair_ids(pairs: &[PairedExample], names: &[String]) -> Vec<String> {
    let mut counts = std::collections::BTreeMap::<usize, usize>::new();
    pairs
        .iter()
        .map(|p| {
            let k = counts.entry(p.origin).or_default();
            *k += 1;
            format!("{}-{}", names[p.origin], k)
        })
        .collect()
}

/// Write all pairs under `<root>/<spec>/`, replacing previous contents.
pub fn write_pairs(
    root: &Path,
    spec: &str,
    pairs: &[PairedExample],
    names: &[String],
) -> Result<Vec<PathBuf>, StoreError> {
    let base = root.join(spec);
    if base.exists() {
        fs::remove_dir_all(&base).map_err(|source| StoreError::Io {
            path: base.clone(),
            source,
        })?;
    }
    let mut out = Vec::new();
    for (pair, id) in pairs.iter().zip(pair_ids(pairs, names)) {
        let dir = base.join(id);
        write_pair(&dir, pair, &names[pair.origin])?;
        out.push(dir);
    }
    Ok(out)
}

/// Pairs read back by `read_pairs`, and the entries that failed to load.
pub type ReadPairs = (Vec<(String, PairedExample)>, Vec<StoreError>);

/// Read every pair under `<root>/<spec>/`, sorted by directory name.
/// Unreadable or inconsistent entries are returned separately.
pub fn read_pairs(root: &Path, spec: &VulnSpec) -> Result<ReadPairs, StoreError> {
    let base = root.join(&spec.name);
    let entries = fs::read_dir(&base).map_err(|source| StoreError::Io {
        path: base.clone(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("edit.meta").is_file())
        .collect();
    dirs.sort();
    let (mut ok, mut bad) = (Vec::new(), Vec::new());
    for d in dirs {
        let id = d.file_name().unwrap().to_string_lossy().into_owned();
        match read_pair(&d, spec) {
            Ok(p) => ok.push((id, p)),
            Err(e) => bad.push(e),
        }
    }
    Ok((ok, bad))
}
