//! Scenario file format.
//!
//! A scenario file is line-oriented UTF-8 text made of sections. Each
//! section starts with a bracketed header and holds `key = value` entries;
//! blank lines and lines starting with `#` are ignored. `docs/scenario-format.md`
//! at the repository root carries the full grammar.
//!
//! ```text
//! [scenario]
//! name = example
//! param.turn_planned = 1
//!
//! [party truck]
//! role = other_driver
//!
//! [action change_lane]
//! label = move into the left lane
//!
//! [outcome hit_by_truck]
//! description = getting hit by large truck
//! magnitude = 5000
//! probability = 0.01%
//! party = truck
//! ```

pub(crate) mod expr;
mod parse;
mod serialize;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use parse::{parse, parse_document, parse_with_params, ParseOutput};
pub use serialize::serialize;
pub use validate::{validate, validate_with};

/// 1-based line and column into the parsed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub const START: SourceSpan = SourceSpan { line: 1, column: 1 };

    pub fn new(line: usize, column: usize) -> Self {
        Self {
            line: line.max(1),
            column: column.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticCode {
    SyntaxError,
    UnknownReference,
    ProbabilityOutOfRange,
    DuplicateId,
    InvalidValue,
    MissingField,
    EmptyActionSet,
    MultipleHoldCourse,
    GroupSumExceeded,
    UnitMismatch,
    UnknownAttribute,
    UnknownInjuryClass,
    UnusedParameter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn warning(code: DiagnosticCode, span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.span, self.message)
    }
}

/// Locations of scenario elements in the text they were parsed from.
///
/// Keys: `scenario`, `party:<id>`, `action:<id>`, `outcome:<action>/<id>`,
/// plus `.<field>` suffixes for individual entries, and `policy`,
/// `weighting`, `schedule`, `modifiers` with their own suffixes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceMap {
    spans: BTreeMap<String, SourceSpan>,
}

impl SourceMap {
    pub(crate) fn insert(&mut self, key: impl Into<String>, span: SourceSpan) {
        self.spans.entry(key.into()).or_insert(span);
    }

    pub fn get(&self, key: &str) -> Option<SourceSpan> {
        self.spans.get(key).copied()
    }

    /// Span of `key.field`, falling back to `key`, then the file start.
    pub fn locate(&self, key: &str, field: Option<&str>) -> SourceSpan {
        field
            .and_then(|f| self.get(&format!("{key}.{f}")))
            .or_else(|| self.get(key))
            .unwrap_or(SourceSpan::START)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}
