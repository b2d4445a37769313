use flowmend::dataflow::{annotate, load_spec, AnnotatedAst, VulnSpec};
use flowmend::perturb::{make_pairs, PairedExample};
use flowmend::syntax::parse;
use std::path::PathBuf;
use std::sync::Arc;

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn spec_path(name: &str) -> PathBuf {
    root().join(format!("specs/{name}.flowspec"))
}

pub fn spec(name: &str) -> VulnSpec {
    load_spec(spec_path(name)).unwrap().remove(0)
}

pub fn text(rel: &str) -> String {
    let p = root().join("fixtures").join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn aast(rel: &str, spec_name: &str) -> Arc<AnnotatedAst> {
    Arc::new(annotate(&parse(&text(rel)).unwrap(), &spec(spec_name)))
}

pub fn pairs(files: &[&str], spec_name: &str) -> Vec<PairedExample> {
    let corpus: Vec<_> = files.iter().map(|f| aast(f, spec_name)).collect();
    make_pairs(&corpus).pairs
}

/// `(stem, text)` of every fixture in a class directory, sorted by name.
pub fn class(dir: &str) -> Vec<(String, String)> {
    let mut names: Vec<String> = std::fs::read_dir(root().join("fixtures").join(dir))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".js"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            (
                n.trim_end_matches(".js").to_string(),
                text(&format!("{dir}/{n}")),
            )
        })
        .collect()
}
