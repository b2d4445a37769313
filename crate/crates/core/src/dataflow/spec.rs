//! Vulnerability-class configuration (`.flowspec` files, TOML).

use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SourcePattern {
    /// Parameter `index` of a function literal passed to a call of `registrar`.
    HandlerParam { registrar: String, index: usize },
    /// The result of calling `callee`.
    CallResult { callee: String },
    /// Any parameter with this name.
    NamedParam { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SinkPattern {
    /// A call whose callee is derived from a keyed lookup with a non-literal key.
    DynamicCall {
        #[serde(default)]
        lookup_methods: Vec<String>,
    },
    /// Argument `index` of a call to `callee`.
    CallArg { callee: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum GuardPattern {
    MethodCall { method: String },
    TypeofCheck { type_name: String },
    InOperator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VulnSpec {
    pub name: String,
    pub sources: Vec<SourcePattern>,
    pub sinks: Vec<SinkPattern>,
    #[serde(default)]
    pub sanitizers: Vec<String>,
    #[serde(default)]
    pub guards: Vec<GuardPattern>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default)]
    spec: Vec<VulnSpec>,
}

/// Match callee text against a pattern: exact text, or `*.m` for any
/// member call named `m`.
pub fn callee_matches(pattern: &str, callee: &str) -> bool {
    match pattern.strip_prefix("*.") {
        Some(method) => callee
            .rsplit_once('.')
            .is_some_and(|(_, last)| last == method),
        None => pattern == callee,
    }
}

pub fn parse_spec(text: &str) -> Result<Vec<VulnSpec>, SpecError> {
    let file: SpecFile = toml::from_str(text).map_err(|e| {
        let span = e
            .span()
            .map(|s| format!(" at byte {}", s.start))
            .unwrap_or_default();
        invalid("spec", format!("{}{}", e.message().trim(), span))
    })?;
    if file.spec.is_empty() {
        return Err(invalid("spec", "no [[spec]] entries"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, s) in file.spec.iter().enumerate() {
        let at = |field: &str| format!("spec[{i}].{field}");
        if s.name.trim().is_empty() {
            return Err(invalid(at("name"), "must be non-empty"));
        }
        if !seen.insert(s.name.clone()) {
            return Err(invalid(at("name"), format!("duplicate name `{}`", s.name)));
        }
        if s.sources.is_empty() {
            return Err(invalid(
                at("sources"),
                "at least one source pattern required",
            ));
        }
        if s.sinks.is_empty() {
            return Err(invalid(at("sinks"), "at least one sink pattern required"));
        }
        for (j, p) in s.sources.iter().enumerate() {
            let name = match p {
                SourcePattern::HandlerParam { registrar, .. } => registrar,
                SourcePattern::CallResult { callee } => callee,
                SourcePattern::NamedParam { name } => name,
            };
            if name.is_empty() {
                return Err(invalid(at(&format!("sources[{j}]")), "empty name"));
            }
        }
        for (j, p) in s.sinks.iter().enumerate() {
            if let SinkPattern::CallArg { callee, .. } = p {
                if callee.is_empty() {
                    return Err(invalid(at(&format!("sinks[{j}].callee")), "empty name"));
                }
            }
        }
        for (j, g) in s.guards.iter().enumerate() {
            let empty = match g {
                GuardPattern::MethodCall { method } => method.is_empty(),
                GuardPattern::TypeofCheck { type_name } => type_name.is_empty(),
                GuardPattern::InOperator => false,
            };
            if empty {
                return Err(invalid(at(&format!("guards[{j}]")), "empty name"));
            }
        }
        if let Some(j) = s.sanitizers.iter().position(String::is_empty) {
            return Err(invalid(at(&format!("sanitizers[{j}]")), "empty name"));
        }
    }
    Ok(file.spec)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<Vec<VulnSpec>, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text).map_err(|e| match e {
        SpecError::Invalid { path: p, message } => SpecError::Invalid {
            path: format!("{}: {p}", path.display()),
            message,
        },
        other => other,
    })
}
