//! Line-oriented text notation for curricula.
//!
//! ```text
//! program "MSC-IS"
//! module 50 level junior compulsory year 1 first
//! module 60 level senior optional year 2
//! constraint hard 50 -> 60
//! constraint soft level:junior -> level:senior
//! choose 1 of {60}
//! rule max_per_year 2
//! rule thesis_after 2
//! ```
//!
//! One declaration per line, `#` starts a comment. Level endpoints expand to
//! every pair of modules carrying those levels. `rule thesis_after` may be
//! omitted, in which case it defaults to the completion-set size implied by
//! the compulsory modules and choice groups.

mod lexer;
mod parser;
mod writer;

use std::fmt;

use serde::Serialize;

use crate::curriculum::ValidationCode;

pub use parser::{parse_curriculum, parse_curriculum_with_warnings, Parsed};
pub use writer::serialize_curriculum;

/// Location of a diagnostic. Lines and columns are 1-based and count
/// characters; `length` may be zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        SourceSpan {
            line,
            column,
            length,
        }
    }

    pub(crate) fn start() -> Self {
        SourceSpan::new(1, 1, 0)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Every diagnostic the parser can emit.
///
/// | code | meaning |
/// |------|---------|
/// | `unknown-keyword` | line does not start with a known declaration keyword |
/// | `malformed-line` | tokens do not match the declaration's shape |
/// | `unterminated-string` | a `"` string runs to the end of the line |
/// | `invalid-number` | an integer field is not a nonnegative integer |
/// | `undefined-module` | a constraint or group names an undeclared module |
/// | `undefined-level` | a `level:` endpoint matches no module |
/// | `duplicate-declaration` | a module, `program` or `rule` is declared twice |
/// | `missing-program` | no `program` line |
/// | `missing-rule` | no `rule max_per_year` line |
///
/// plus every [`ValidationCode`] raised on the assembled curriculum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub enum ParseErrorCode {
    UnknownKeyword,
    MalformedLine,
    UnterminatedString,
    InvalidNumber,
    UndefinedModule,
    UndefinedLevel,
    DuplicateDeclaration,
    MissingProgram,
    MissingRule,
    Invalid(ValidationCode),
}

impl ParseErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorCode::UnknownKeyword => "unknown-keyword",
            ParseErrorCode::MalformedLine => "malformed-line",
            ParseErrorCode::UnterminatedString => "unterminated-string",
            ParseErrorCode::InvalidNumber => "invalid-number",
            ParseErrorCode::UndefinedModule => "undefined-module",
            ParseErrorCode::UndefinedLevel => "undefined-level",
            ParseErrorCode::DuplicateDeclaration => "duplicate-declaration",
            ParseErrorCode::MissingProgram => "missing-program",
            ParseErrorCode::MissingRule => "missing-rule",
            ParseErrorCode::Invalid(v) => v.as_str(),
        }
    }
}

impl From<ParseErrorCode> for String {
    fn from(code: ParseErrorCode) -> String {
        code.as_str().to_string()
    }
}

impl fmt::Display for ParseErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{span}: {code}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub code: ParseErrorCode,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, code: ParseErrorCode, message: impl Into<String>) -> Self {
        ParseError {
            span,
            code,
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    pub span: SourceSpan,
    pub message: String,
}
