//! Lenient tag and attribute scanning shared by the template parser and the
//! tag extractor. Works on byte offsets into the original text.

/// One attribute as written. Offsets are byte offsets into the scanned text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAttr {
    pub name: String,
    pub value: String,
    pub name_offset: usize,
    /// Offset of the first character of the value (after the quote).
    pub value_offset: usize,
    /// Offset just past the closing quote, or past the value when unquoted.
    pub value_end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    /// `>` or `/>`
    Gt,
    /// `%>`
    PercentGt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagScan {
    pub attrs: Vec<RawAttr>,
    /// Offset just past the terminator.
    pub end: usize,
    pub self_closing: bool,
}

impl TagScan {
    pub fn attr(&self, name: &str) -> Option<&RawAttr> {
        self.attrs.iter().find(|a| a.name.eq_ignore_ascii_case(name))
    }
}

/// Scans attributes starting at `from` up to the terminator. Returns `None`
/// when the text ends first.
pub fn scan_attributes(text: &str, from: usize, term: Terminator) -> Option<TagScan> {
    let b = text.as_bytes();
    let mut i = from;
    let mut attrs = Vec::new();
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= b.len() {
            return None;
        }
        match term {
            Terminator::Gt if b[i] == b'>' => return Some(TagScan { attrs, end: i + 1, self_closing: false }),
            Terminator::Gt if b[i] == b'/' && b.get(i + 1) == Some(&b'>') => {
                return Some(TagScan { attrs, end: i + 2, self_closing: true })
            }
            Terminator::PercentGt if b[i] == b'%' && b.get(i + 1) == Some(&b'>') => {
                return Some(TagScan { attrs, end: i + 2, self_closing: false })
            }
            _ => {}
        }
        let name_start = i;
        while i < b.len() && !b[i].is_ascii_whitespace() && !matches!(b[i], b'=' | b'>' | b'/' | b'"' | b'\'') {
            if term == Terminator::PercentGt && b[i] == b'%' && b.get(i + 1) == Some(&b'>') {
                break;
            }
            i += 1;
        }
        if i == name_start {
            // stray character such as a lone '/' or a quote
            i += 1;
            continue;
        }
        let name = text[name_start..i].to_string();
        let mut j = i;
        while j < b.len() && b[j].is_ascii_whitespace() {
            j += 1;
        }
        if j < b.len() && b[j] == b'=' {
            j += 1;
            while j < b.len() && b[j].is_ascii_whitespace() {
                j += 1;
            }
            if j >= b.len() {
                return None;
            }
            if b[j] == b'"' || b[j] == b'\'' {
                let q = b[j];
                let start = j + 1;
                let mut k = start;
                while k < b.len() && b[k] != q {
                    if b[k] == b'<' && b.get(k + 1) == Some(&b'%') {
                        k = text[k..].find("%>").map(|p| k + p + 2)?;
                        continue;
                    }
                    k += 1;
                }
                if k >= b.len() {
                    return None;
                }
                attrs.push(RawAttr {
                    name,
                    value: text[start..k].to_string(),
                    name_offset: name_start,
                    value_offset: start,
                    value_end: k + 1,
                });
                i = k + 1;
            } else {
                let start = j;
                let mut k = j;
                while k < b.len() && !b[k].is_ascii_whitespace() && b[k] != b'>' {
                    k += 1;
                }
                attrs.push(RawAttr {
                    name,
                    value: text[start..k].to_string(),
                    name_offset: name_start,
                    value_offset: start,
                    value_end: k,
                });
                i = k;
            }
        } else {
            attrs.push(RawAttr { name, value: String::new(), name_offset: name_start, value_offset: i, value_end: i });
        }
    }
}

/// A start or end tag found in markup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkupTag {
    pub name: String,
    pub offset: usize,
    pub end: usize,
    pub closing: bool,
    pub scan: TagScan,
}

fn is_name_start(c: u8) -> bool {
    c.is_ascii_alphabetic()
}

fn is_name_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b':' | b'_' | b'.' | b'-')
}

/// Finds every well-formed start/end tag in `text`, skipping comments,
/// doctype and processing instructions. Unterminated tags are ignored.
pub fn find_tags(text: &str) -> Vec<MarkupTag> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(p) = text[i..].find('<') {
        let at = i + p;
        let rest = &text[at..];
        if rest.starts_with("<!--") {
            i = rest.find("-->").map(|e| at + e + 3).unwrap_or(b.len());
            continue;
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            i = rest.find('>').map(|e| at + e + 1).unwrap_or(b.len());
            continue;
        }
        let closing = rest.starts_with("</");
        let ns = at + if closing { 2 } else { 1 };
        if ns >= b.len() || !is_name_start(b[ns]) {
            i = at + 1;
            continue;
        }
        let mut ne = ns;
        while ne < b.len() && is_name_char(b[ne]) {
            ne += 1;
        }
        match scan_attributes(text, ne, Terminator::Gt) {
            Some(scan) => {
                out.push(MarkupTag { name: text[ns..ne].to_string(), offset: at, end: scan.end, closing, scan });
                i = out.last().map(|t| t.end).unwrap_or(at + 1);
            }
            None => i = at + 1,
        }
    }
    out
}
