//! Witness removal: turn witnessing-safe flows into (unsafe, edit, safe)
//! training pairs.

use crate::dataflow::{annotate, AnnotatedAst, Annotation, FlowTriple};
use crate::syntax::{self, emit_tree, AstDoc, NodeId, NodeType, Tree};
use crate::witnessing::find_vulnerabilities;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub mod store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EditType {
    Insert,
    Replace,
}

impl fmt::Display for EditType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EditType::Insert => "Insert",
            EditType::Replace => "Replace",
        })
    }
}

/// Apply `prog` at child slot `index` of `loc`.
pub fn apply_edit(
    doc: &AstDoc,
    edit_type: EditType,
    loc: NodeId,
    index: usize,
    prog: Tree,
) -> syntax::Result<AstDoc> {
    match edit_type {
        EditType::Insert => doc.insert_child(loc, index, prog),
        EditType::Replace => doc.replace_child(loc, index, prog),
    }
}

/// One repair: put `editprog` at slot `index` of `editloc` in the unsafe
/// document of `triple`.
#[derive(Debug, Clone)]
pub struct Edit {
    pub edit_type: EditType,
    pub editloc: NodeId,
    pub index: usize,
    pub editprog: Tree,
    pub triple: FlowTriple,
}

impl Edit {
    pub fn apply(&self) -> syntax::Result<AstDoc> {
        apply_edit(
            self.triple.doc(),
            self.edit_type,
            self.editloc,
            self.index,
            self.editprog.clone(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct PairedExample {
    /// Index of the originating document in the mined corpus.
    pub origin: usize,
    pub unsafe_ast: Arc<AnnotatedAst>,
    pub edit: Edit,
    pub safe: AstDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    #[error("unsupported guard shape: {0}")]
    UnsupportedGuardShape(String),
    #[error("unsupported sanitizer shape: {0}")]
    UnsupportedSanitizerShape(String),
    #[error("triple has no {0} witness")]
    NoWitness(Annotation),
    #[error("unsafe side is not vulnerable for the flow")]
    NotVulnerable,
    #[error("safe side is still vulnerable for the flow")]
    SafeStillVulnerable,
    #[error("edit does not reproduce the safe program")]
    RoundTrip,
    #[error("flow endpoint removed with the witness")]
    EndpointRemoved,
    #[error("duplicate of an earlier pair")]
    Duplicate,
    #[error(transparent)]
    Syntax(#[from] syntax::SyntaxError),
}

/// How the unsafe document was cut out of the safe one, at `slot` of `loc`.
enum Cut {
    Delete,
    /// Child at `keep` (relative path under the slot) replaces the slot.
    Hoist(Vec<usize>),
}

struct Removal {
    loc: NodeId,
    slot: usize,
    cut: Cut,
    edit_type: EditType,
    editprog: Tree,
}

fn guard_shape(msg: &str) -> PerturbError {
    PerturbError::UnsupportedGuardShape(msg.to_string())
}

fn statement_slot(doc: &AstDoc, stmt: NodeId) -> Option<(NodeId, usize)> {
    let block = doc.parent(stmt)?;
    if !doc.kind(block).is_statement_list() {
        return None;
    }
    Some((block, doc.child_index(block, stmt).ok()?))
}

/// Strip return values so the captured edit does not carry codebase-specific
/// responses.
fn normalize_exits(t: &Tree) -> Tree {
    if t.kind == NodeType::ReturnStmt {
        return Tree::leaf(NodeType::ReturnStmt, t.token.clone());
    }
    let mut out = Tree::new(
        t.kind,
        t.token.clone(),
        t.children.iter().map(normalize_exits).collect(),
    );
    out.span = t.span;
    out
}

fn plan_guard(doc: &AstDoc, w: NodeId) -> Result<Removal, PerturbError> {
    let mut c = w;
    while let Some(p) = doc.parent(c) {
        if doc.kind(p) == NodeType::UnaryExpr && doc.token(p) == "!" {
            c = p;
        } else {
            break;
        }
    }
    let p = doc.parent(c).ok_or_else(|| guard_shape("guard at root"))?;
    let pch = doc.children(p);
    match doc.kind(p) {
        NodeType::IfStmt if pch[0] == c => {
            if pch.len() == 3 {
                return Err(guard_shape("if statement with else branch"));
            }
            let (block, slot) = statement_slot(doc, p)
                .ok_or_else(|| guard_shape("if statement outside a statement list"))?;
            let then = pch[1];
            if crate::dataflow::is_bare_exit(doc, then) {
                return Ok(Removal {
                    loc: block,
                    slot,
                    cut: Cut::Delete,
                    edit_type: EditType::Insert,
                    editprog: normalize_exits(&doc.subtree(p)),
                });
            }
            let body = doc.children(then);
            if body.len() != 1 {
                return Err(guard_shape("guarded branch is not a single statement"));
            }
            Ok(Removal {
                loc: block,
                slot,
                cut: Cut::Hoist(vec![1, 0]),
                edit_type: EditType::Replace,
                editprog: doc.subtree(p),
            })
        }
        NodeType::BinaryExpr if doc.token(p) == "&&" => {
            let keep = if pch[0] == c { 2 } else { 0 };
            let gp = doc
                .parent(p)
                .ok_or_else(|| guard_shape("conjunction at root"))?;
            let slot = doc.child_index(gp, p)?;
            Ok(Removal {
                loc: gp,
                slot,
                cut: Cut::Hoist(vec![keep]),
                edit_type: EditType::Replace,
                editprog: doc.subtree(p),
            })
        }
        k => Err(guard_shape(&format!("guard under {k}"))),
    }
}

fn plan_sanitizer(doc: &AstDoc, w: NodeId) -> Result<Removal, PerturbError> {
    let unsupported = |m: &str| PerturbError::UnsupportedSanitizerShape(m.to_string());
    if doc.kind(w) != NodeType::CallExpr {
        return Err(unsupported("sanitizer is not a call"));
    }
    let args = &doc.children(w)[1..];
    let p = doc
        .parent(w)
        .ok_or_else(|| unsupported("sanitizer at root"))?;
    if doc.kind(p) == NodeType::AssignExpr && doc.children(p)[1] == w {
        let lhs = doc.value(doc.children(p)[0]);
        let stmt = doc.parent(p).filter(|&s| doc.kind(s) == NodeType::Expr);
        if let Some((block, slot)) = stmt.and_then(|s| statement_slot(doc, s)) {
            if args.iter().any(|&a| doc.value(a) == lhs) {
                return Ok(Removal {
                    loc: block,
                    slot,
                    cut: Cut::Delete,
                    edit_type: EditType::Insert,
                    editprog: doc.subtree(stmt.unwrap()),
                });
            }
        }
    }
    if args.is_empty() {
        return Err(unsupported("sanitizer call without arguments"));
    }
    Ok(Removal {
        loc: p,
        slot: doc.child_index(p, w)?,
        cut: Cut::Hoist(vec![1]),
        edit_type: EditType::Replace,
        editprog: doc.subtree(w),
    })
}

fn cut(doc: &AstDoc, r: &Removal) -> syntax::Result<AstDoc> {
    match &r.cut {
        Cut::Delete => doc.delete_child(r.loc, r.slot),
        Cut::Hoist(keep) => {
            let mut t = doc.subtree(doc.children(r.loc)[r.slot]);
            for &i in keep {
                t = t.children.swap_remove(i);
            }
            doc.replace_child(r.loc, r.slot, t)
        }
    }
}

/// Where a node of the safe document ends up in the unsafe one.
fn map_path(path: &[usize], loc: &[usize], slot: usize, c: &Cut) -> Option<Vec<usize>> {
    if path.len() <= loc.len() || path[..loc.len()] != *loc {
        return Some(path.to_vec());
    }
    let j = path[loc.len()];
    let rest = &path[loc.len() + 1..];
    let mut out = loc.to_vec();
    match c {
        _ if j < slot => return Some(path.to_vec()),
        Cut::Delete if j > slot => out.push(j - 1),
        Cut::Hoist(_) if j > slot => return Some(path.to_vec()),
        Cut::Delete => return None,
        // The replaced slot itself maps to its replacement.
        Cut::Hoist(_) if rest.is_empty() => return Some(path.to_vec()),
        Cut::Hoist(keep) => {
            if !rest.starts_with(keep) {
                return None;
            }
            out.push(j);
            out.extend_from_slice(&rest[keep.len()..]);
            return Some(out);
        }
    }
    out.extend_from_slice(rest);
    Some(out)
}

fn build_pair(
    safe: &FlowTriple,
    plan: Removal,
    origin: usize,
) -> Result<PairedExample, PerturbError> {
    let doc = safe.doc();
    let unsafe_doc = cut(doc, &plan)?;
    let loc_path = doc.path_from_root(plan.loc);
    let locate = |n: NodeId| {
        map_path(&doc.path_from_root(n), &loc_path, plan.slot, &plan.cut)
            .and_then(|p| unsafe_doc.node_at_path(&p))
            .ok_or(PerturbError::EndpointRemoved)
    };
    let (source, sink) = (locate(safe.source)?, locate(safe.sink)?);
    let unsafe_ast = Arc::new(annotate(&unsafe_doc, &safe.aast.spec));
    if !find_vulnerabilities(&unsafe_ast).contains(source, sink) {
        return Err(PerturbError::NotVulnerable);
    }
    let triple = FlowTriple::new(Arc::clone(&unsafe_ast), source, sink)
        .ok_or(PerturbError::NotVulnerable)?;
    let edit = Edit {
        edit_type: plan.edit_type,
        editloc: unsafe_doc
            .node_at_path(&loc_path)
            .expect("edit location survives the cut"),
        index: plan.slot,
        editprog: plan.editprog.clone().strip_spans(),
        triple,
    };
    let repaired = edit.apply()?;
    if repaired.to_tree() != normalized_safe(doc, &plan) {
        return Err(PerturbError::RoundTrip);
    }
    let safe_ast = annotate(&repaired, &safe.aast.spec);
    let (s, t) = (
        repaired.node_at_path(&doc.path_from_root(safe.source)),
        repaired.node_at_path(&doc.path_from_root(safe.sink)),
    );
    if let (Some(s), Some(t)) = (s, t) {
        if find_vulnerabilities(&safe_ast).contains(s, t) {
            return Err(PerturbError::SafeStillVulnerable);
        }
    }
    Ok(PairedExample {
        origin,
        unsafe_ast,
        edit,
        safe: repaired,
    })
}

/// The safe document with the removed construct normalized in place.
fn normalized_safe(doc: &AstDoc, plan: &Removal) -> Tree {
    let mut t = doc.to_tree().strip_spans();
    let mut cur = &mut t;
    for i in doc.path_from_root(plan.loc) {
        cur = &mut cur.children[i];
    }
    if plan.edit_type == EditType::Insert {
        cur.children[plan.slot] = plan.editprog.clone().strip_spans();
    }
    t
}

pub fn remove_guard(safe: &FlowTriple) -> Result<PairedExample, PerturbError> {
    remove_guard_from(safe, 0)
}

pub fn remove_sanitizer(safe: &FlowTriple) -> Result<PairedExample, PerturbError> {
    remove_sanitizer_from(safe, 0)
}

fn remove_guard_from(safe: &FlowTriple, origin: usize) -> Result<PairedExample, PerturbError> {
    let w = safe
        .witness
        .filter(|&w| safe.aast.has(w, Annotation::Guard))
        .ok_or(PerturbError::NoWitness(Annotation::Guard))?;
    build_pair(safe, plan_guard(safe.doc(), w)?, origin)
}

fn remove_sanitizer_from(safe: &FlowTriple, origin: usize) -> Result<PairedExample, PerturbError> {
    let w = safe
        .witness
        .filter(|&w| safe.aast.has(w, Annotation::Sanitizer))
        .ok_or(PerturbError::NoWitness(Annotation::Sanitizer))?;
    build_pair(safe, plan_sanitizer(safe.doc(), w)?, origin)
}

#[derive(Debug, Clone)]
pub struct Skipped {
    pub origin: usize,
    pub source: NodeId,
    pub sink: NodeId,
    pub reason: PerturbError,
}

#[derive(Debug, Clone, Default)]
pub struct Mined {
    pub pairs: Vec<PairedExample>,
    pub skipped: Vec<Skipped>,
    /// Number of witnessed triples considered.
    pub witnessed: usize,
}

/// Remove the witness of every witnessed flow in the corpus. Pairs come out
/// in corpus order, then source, then sink.
pub fn make_pairs(corpus: &[Arc<AnnotatedAst>]) -> Mined {
    let mut out = Mined::default();
    let mut seen = BTreeSet::new();
    for (origin, aast) in corpus.iter().enumerate() {
        for t in crate::dataflow::slice(aast) {
            let Some(w) = t.witness else { continue };
            out.witnessed += 1;
            let r = if aast.has(w, Annotation::Guard) {
                remove_guard_from(&t, origin)
            } else {
                remove_sanitizer_from(&t, origin)
            };
            let r = r.and_then(|p| {
                let key = (
                    origin,
                    p.edit.triple.doc().path_from_root(p.edit.editloc),
                    p.edit.index,
                    emit_tree(&p.edit.editprog),
                );
                if seen.insert(key) {
                    Ok(p)
                } else {
                    Err(PerturbError::Duplicate)
                }
            });
            match r {
                Ok(p) => out.pairs.push(p),
                Err(reason) => out.skipped.push(Skipped {
                    origin,
                    source: t.source,
                    sink: t.sink,
                    reason,
                }),
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests;
