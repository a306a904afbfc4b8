use serde::{Deserialize, Serialize};
use std::fmt;

/// A 1-based line/column pair. Columns count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub const START: Pos = Pos { line: 1, column: 1 };

    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A position inside a project file. `path` is project-relative and always
/// uses forward slashes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub path: String,
    pub line: u32,
    pub column: u32,
}

impl SourceLocation {
    pub fn new(path: impl AsRef<str>, line: u32, column: u32) -> Self {
        SourceLocation {
            path: normalize_path(path.as_ref()),
            line: line.max(1),
            column: column.max(1),
        }
    }

    pub fn at(path: impl AsRef<str>, pos: Pos) -> Self {
        Self::new(path, pos.line, pos.column)
    }

    pub fn file_start(path: impl AsRef<str>) -> Self {
        Self::new(path, 1, 1)
    }

    /// Location used by pseudo-entities that have no backing file.
    pub fn nowhere() -> Self {
        SourceLocation { path: String::new(), line: 1, column: 1 }
    }

    pub fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    pub fn is_valid(&self) -> bool {
        self.line >= 1
            && self.column >= 1
            && !self.path.contains('\\')
            && !self.path.split('/').any(|seg| seg == "..")
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.path, self.line, self.column)
    }
}

pub fn normalize_path(path: &str) -> String {
    let mut p = path.replace('\\', "/");
    while let Some(rest) = p.strip_prefix("./") {
        p = rest.to_string();
    }
    p
}

/// Maps byte offsets in a text to line/column positions.
pub struct LineIndex<'a> {
    text: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { text, starts }
    }

    pub fn pos(&self, offset: usize) -> Pos {
        let offset = offset.min(self.text.len());
        let line = match self.starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.starts[line];
        let column = self.text[start..offset].chars().count() + 1;
        Pos::new(line as u32 + 1, column as u32)
    }
}
