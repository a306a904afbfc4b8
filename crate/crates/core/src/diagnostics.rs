use crate::location::SourceLocation;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A non-fatal finding produced by one of the analyzers. Diagnostics never
/// abort an analysis; they are collected into the report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: Option<SourceLocation>,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Diagnostic { location: None, code: code.to_string(), message: message.into() }
    }

    pub fn at(mut self, location: SourceLocation) -> Self {
        self.location = Some(location);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(loc) => write!(f, "{}: [{}] {}", loc, self.code, self.message),
            None => write!(f, "[{}] {}", self.code, self.message),
        }
    }
}

pub mod codes {
    pub const UNSUPPORTED_STATEMENT: &str = "unsupported-statement";
    pub const UNSUPPORTED_MEMBER: &str = "unsupported-member";
    pub const SYNTAX_ERROR: &str = "syntax-error";
    pub const AMBIGUOUS_CALL: &str = "ambiguous-call";
    pub const DUPLICATE_METHOD: &str = "duplicate-method";
    pub const LOWERING_DEGRADED: &str = "lowering-degraded";
    pub const TEMPLATE_ERROR: &str = "template-error";
    pub const UNSUPPORTED_TAG: &str = "unsupported-tag";
    pub const MALFORMED_MARKUP: &str = "malformed-markup";
    pub const DYNAMIC_URL: &str = "dynamic-url";
    pub const EXTERNAL_URL: &str = "external-url";
    pub const UNRESOLVED: &str = "unresolved-target";
    pub const DROPPED_EDGE: &str = "dropped-edge";
    pub const XML_ERROR: &str = "xml-error";
    pub const DUPLICATE_PATTERN: &str = "duplicate-url-pattern";
    pub const MAPPING_CONFLICT: &str = "mapping-conflict";
    pub const NON_LITERAL_ANNOTATION: &str = "non-literal-annotation";
    pub const MISSING_CLASS: &str = "missing-class";
    pub const UNBOUND_PREFIX: &str = "unbound-prefix";
    pub const UNKNOWN_TAG: &str = "unknown-tag";
    pub const UNKNOWN_ATTRIBUTE: &str = "unknown-attribute";
    pub const MISSING_REQUIRED_ATTRIBUTE: &str = "missing-required-attribute";
    pub const NOT_A_TAG_HANDLER: &str = "not-a-tag-handler";
    pub const DYNAMIC_LOOKUP: &str = "dynamic-lookup";
    pub const EL_UNPARSED: &str = "el-unparsed";
    pub const EL_UNBOUND: &str = "el-unbound";
    pub const EL_UNRESOLVED: &str = "el-unresolved-member";
    pub const IO_ERROR: &str = "io-error";
}
