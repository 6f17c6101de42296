//! Validation diagnostics with stable codes.

use std::fmt;

use serde::Serialize;

/// Stable diagnostic code. The textual form (`E001`, ...) is part of the
/// command-line contract and must not change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Code {
    /// Unknown component reference.
    E001,
    /// Duplicate id within a collection.
    E002,
    /// Practice with empty `requires`.
    E003,
    /// Context with empty `appropriate` set.
    E004,
    /// Context names a practice that does not exist.
    E005,
    /// Identifier is empty or contains characters outside `[A-Za-z0-9_.-]`.
    E006,
    /// Preference weight negative or not finite.
    E007,
    /// Duplicate `(emitter, disturbed)` rule.
    E008,
    /// Unknown field in a scenario document.
    E100,
    /// Missing `schema_version`.
    E101,
    /// Syntax or type error in a scenario document.
    E102,
    /// Unsupported `schema_version`.
    E103,
    /// Agent endowment names an unknown component.
    E110,
    /// Initial belief names an unknown context.
    E111,
    /// Duplicate agent id.
    E112,
    /// Agent placement missing, outside the grid, or given on a network.
    E113,
    /// Two agents placed in the same cell.
    E114,
    /// Grid with zero width, height or radius.
    E115,
    /// Network edge with unknown endpoint or self-loop.
    E116,
    /// Movement policy incompatible with the topology.
    E117,
    /// Epsilon outside `[0, 1]`.
    E118,
    /// Consensus threshold outside `(0, 1]` or window of zero.
    E119,
    /// Preference override for an unknown practice or with an invalid weight.
    E120,
    /// Generated population is inconsistent (no archetypes, or more agents than free cells).
    E121,
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One finding. `path` locates the offending item (`registry.practices[2].requires`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.code, self.message)
        } else {
            write!(f, "{} at {}: {}", self.code, self.path, self.message)
        }
    }
}

/// Collection of diagnostics. Valid iff empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn push(&mut self, d: Diagnostic) {
        self.diagnostics.push(d);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.diagnostics.extend(other.diagnostics);
    }

    pub fn codes(&self) -> Vec<Code> {
        self.diagnostics.iter().map(|d| d.code).collect()
    }

    pub fn into_result(self) -> Result<(), ValidationReport> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

impl From<Diagnostic> for ValidationReport {
    fn from(d: Diagnostic) -> Self {
        ValidationReport {
            diagnostics: vec![d],
        }
    }
}

/// `[A-Za-z0-9_.-]+`. Keeps ids safe inside the CSV discard-trace encoding.
pub fn is_valid_identifier(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}
