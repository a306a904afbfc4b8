//! Segmentation of template pages into nodes.

use crate::location::{LineIndex, Pos, SourceLocation};
use crate::markup::{scan_attributes, Terminator};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Scriptlet,
    Declaration,
    Expression,
    UseBean,
    GetProperty,
    SetProperty,
    CustomTag,
    Directive,
    RawMarkup,
    /// `<%-- ... --%>`; produces no output.
    Comment,
}

impl NodeKind {
    pub fn is_code(self) -> bool {
        matches!(self, NodeKind::Scriptlet | NodeKind::Declaration | NodeKind::Expression)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TagForm {
    Open,
    Close,
    SelfClosing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeAttr {
    pub name: String,
    pub value: String,
    pub value_location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemplateNode {
    pub kind: NodeKind,
    /// Tag name (`jsp:useBean`, `prefix:tag`) or directive name (`page`);
    /// empty for code, markup and comments.
    pub name: String,
    pub form: TagForm,
    pub attributes: Vec<NodeAttr>,
    /// Trimmed code for code nodes, raw text for markup.
    pub body: String,
    /// Where `body` starts in the page.
    pub body_pos: Pos,
    pub location: SourceLocation,
    /// Byte span in the page text.
    pub start: usize,
    pub end: usize,
}

impl TemplateNode {
    pub fn attr(&self, name: &str) -> Option<&NodeAttr> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Prefix of a custom tag name.
    pub fn prefix(&self) -> Option<&str> {
        self.name.split_once(':').map(|(p, _)| p)
    }

    pub fn local_name(&self) -> &str {
        self.name.split_once(':').map(|(_, n)| n).unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemplatePage {
    pub path: String,
    /// Web-root-relative URL, e.g. `/index.jsp`.
    pub url: String,
    pub text: String,
    pub nodes: Vec<TemplateNode>,
}

impl TemplatePage {
    pub fn has_code(&self) -> bool {
        self.nodes.iter().any(|n| n.kind.is_code())
    }

    /// Taglib directives as (prefix, uri or tagdir).
    pub fn taglibs(&self) -> Vec<(String, String, SourceLocation)> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Directive && n.name == "taglib")
            .filter_map(|n| {
                let prefix = n.attr("prefix")?.value.clone();
                let uri = n.attr("uri").or_else(|| n.attr("tagdir"))?.value.clone();
                Some((prefix, uri, n.location.clone()))
            })
            .collect()
    }

    /// The page text with every code node, directive and comment replaced by
    /// one `fill` char followed by spaces. Newlines and per-line char counts
    /// are kept, so line/column positions match the original text.
    pub fn blanked_text(&self, fill: char) -> String {
        let mut out = String::with_capacity(self.text.len());
        let mut last = 0;
        for n in &self.nodes {
            if !matches!(n.kind, NodeKind::Scriptlet | NodeKind::Declaration | NodeKind::Expression | NodeKind::Directive | NodeKind::Comment) {
                continue;
            }
            out.push_str(&self.text[last..n.start]);
            let mut filled = false;
            for c in self.text[n.start..n.end].chars() {
                if c == '\n' {
                    out.push('\n');
                } else if !filled {
                    out.push(fill);
                    filled = true;
                } else {
                    out.push(' ');
                }
            }
            last = n.end;
        }
        out.push_str(&self.text[last..]);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("{0}: unterminated {1}")]
    UnterminatedConstruct(SourceLocation, String),
}

pub fn url_for_path(path: &str) -> String {
    format!("/{}", path.trim_start_matches('/'))
}

/// Segments a page. Everything not recognized as a scripting element,
/// directive, standard bean action or custom tag of a declared prefix is
/// `RawMarkup`.
pub fn parse_template(text: &str, path: &str) -> Result<TemplatePage, TemplateError> {
    let path = crate::location::normalize_path(path);
    let lines = LineIndex::new(text);
    let loc = |off: usize| SourceLocation::at(&path, lines.pos(off));
    let unterminated = |off: usize, what: &str| TemplateError::UnterminatedConstruct(loc(off), what.to_string());
    let mut nodes: Vec<TemplateNode> = Vec::new();
    let mut prefixes: Vec<String> = Vec::new();
    let mut raw_start = 0;
    let mut i = 0;

    let flush_raw = |nodes: &mut Vec<TemplateNode>, from: usize, to: usize| {
        if to > from {
            nodes.push(TemplateNode {
                kind: NodeKind::RawMarkup,
                name: String::new(),
                form: TagForm::SelfClosing,
                attributes: Vec::new(),
                body: text[from..to].to_string(),
                body_pos: lines.pos(from),
                location: SourceLocation::at(&path, lines.pos(from)),
                start: from,
                end: to,
            });
        }
    };
    let attrs_of = |scan: &crate::markup::TagScan| -> Vec<NodeAttr> {
        scan.attrs
            .iter()
            .map(|a| NodeAttr {
                name: a.name.clone(),
                value: a.value.clone(),
                value_location: SourceLocation::at(&path, lines.pos(a.value_offset)),
            })
            .collect()
    };

    while let Some(p) = text[i..].find('<') {
        let at = i + p;
        let rest = &text[at..];
        let node = if rest.starts_with("<%--") {
            let end = rest.find("--%>").map(|e| at + e + 4).ok_or_else(|| unterminated(at, "comment"))?;
            Some(code_node(text, &lines, &path, NodeKind::Comment, at, at + 4, end - 4, end))
        } else if let Some(after) = rest.strip_prefix("<%@") {
            let name_start = at + 3 + (after.len() - after.trim_start().len());
            let name_end = text[name_start..]
                .find(|c: char| c.is_whitespace() || c == '%')
                .map(|e| name_start + e)
                .unwrap_or(text.len());
            let scan = scan_attributes(text, name_end, Terminator::PercentGt).ok_or_else(|| unterminated(at, "directive"))?;
            let name = text[name_start..name_end].to_string();
            let attributes = attrs_of(&scan);
            if name == "taglib" {
                if let Some(pf) = attributes.iter().find(|a| a.name == "prefix") {
                    prefixes.push(pf.value.clone());
                }
            }
            Some(TemplateNode {
                kind: NodeKind::Directive,
                name,
                form: TagForm::SelfClosing,
                attributes,
                body: String::new(),
                body_pos: lines.pos(at),
                location: loc(at),
                start: at,
                end: scan.end,
            })
        } else if rest.starts_with("<%") {
            let (kind, skip) = if rest.starts_with("<%!") {
                (NodeKind::Declaration, 3)
            } else if rest.starts_with("<%=") {
                (NodeKind::Expression, 3)
            } else {
                (NodeKind::Scriptlet, 2)
            };
            let close = find_code_end(text, at + skip).ok_or_else(|| unterminated(at, "scripting element"))?;
            let mut body_end = close;
            // `<%! ... !%>` appears in some sources; tolerate the stray bang
            if kind == NodeKind::Declaration && text[..body_end].ends_with('!') {
                body_end -= 1;
            }
            Some(code_node(text, &lines, &path, kind, at, at + skip, body_end, close + 2))
        } else {
            let closing = rest.starts_with("</");
            let ns = at + if closing { 2 } else { 1 };
            let ne = text[ns..]
                .find(|c: char| !(c.is_alphanumeric() || matches!(c, ':' | '_' | '.' | '-')))
                .map(|e| ns + e)
                .unwrap_or(text.len());
            let name = &text[ns..ne];
            let kind = match name {
                "jsp:useBean" => Some(NodeKind::UseBean),
                "jsp:getProperty" => Some(NodeKind::GetProperty),
                "jsp:setProperty" => Some(NodeKind::SetProperty),
                _ => match name.split_once(':') {
                    Some((pf, local)) if !local.is_empty() && prefixes.iter().any(|p| p == pf) => {
                        Some(NodeKind::CustomTag)
                    }
                    _ => None,
                },
            };
            match kind {
                None => None,
                Some(kind) => {
                    let scan =
                        scan_attributes(text, ne, Terminator::Gt).ok_or_else(|| unterminated(at, &format!("<{name}>")))?;
                    let form = if closing {
                        TagForm::Close
                    } else if scan.self_closing {
                        TagForm::SelfClosing
                    } else {
                        TagForm::Open
                    };
                    Some(TemplateNode {
                        kind,
                        name: name.to_string(),
                        form,
                        attributes: attrs_of(&scan),
                        body: String::new(),
                        body_pos: lines.pos(at),
                        location: loc(at),
                        start: at,
                        end: scan.end,
                    })
                }
            }
        };
        match node {
            Some(n) => {
                flush_raw(&mut nodes, raw_start, at);
                i = n.end;
                raw_start = n.end;
                nodes.push(n);
            }
            None => i = at + 1,
        }
    }
    flush_raw(&mut nodes, raw_start, text.len());
    Ok(TemplatePage { url: url_for_path(&path), path, text: text.to_string(), nodes })
}

/// Finds the `%>` closing a scripting element, ignoring ones inside Java
/// string and char literals.
fn find_code_end(text: &str, from: usize) -> Option<usize> {
    let b = text.as_bytes();
    let mut i = from;
    while i + 1 < b.len() {
        match b[i] {
            q @ (b'"' | b'\'') => {
                let mut k = i + 1;
                while k < b.len() && b[k] != q && b[k] != b'\n' {
                    if b[k] == b'\\' {
                        k += 1;
                    }
                    k += 1;
                }
                i = k + 1;
            }
            b'%' if b[i + 1] == b'>' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn code_node(
    text: &str,
    lines: &LineIndex<'_>,
    path: &str,
    kind: NodeKind,
    start: usize,
    body_start: usize,
    body_end: usize,
    end: usize,
) -> TemplateNode {
    let raw = &text[body_start..body_end];
    let lead = raw.len() - raw.trim_start().len();
    TemplateNode {
        kind,
        name: String::new(),
        form: TagForm::SelfClosing,
        attributes: Vec::new(),
        body: raw.trim().to_string(),
        body_pos: lines.pos(body_start + lead),
        location: SourceLocation::at(path, lines.pos(start)),
        start,
        end,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Table of powers of two, one row per loop iteration.
    pub(crate) const POWERS_PAGE: &str = "<TABLE BORDER='2' ALIGN='center'>\n\
<TH>Exponent</TH><TH>2^Exponent</TH>\n\
<% for (int i=0; i<10; i++) { %>\n\
<TR><TD><%= i %></TD>\n\
<TD><%= Math.pow(2, i) %></TD>\n\
</TR>\n\
<% } %>\n\
</TABLE>\n";

    fn kinds(p: &TemplatePage) -> Vec<NodeKind> {
        p.nodes.iter().map(|n| n.kind).collect()
    }

    #[test]
    fn loop_page_segments() {
        use NodeKind::*;
        let p = parse_template(POWERS_PAGE, "web/powers.jsp").unwrap();
        assert_eq!(
            kinds(&p),
            [RawMarkup, Scriptlet, RawMarkup, Expression, RawMarkup, Expression, RawMarkup, Scriptlet, RawMarkup]
        );
        // ignoring the markup between them, code nodes follow the listed order
        let code: Vec<_> = p.nodes.iter().filter(|n| n.kind != RawMarkup).map(|n| n.body.as_str()).collect();
        assert_eq!(code, ["for (int i=0; i<10; i++) {", "i", "Math.pow(2, i)", "}"]);
        assert_eq!(p.nodes[1].body_pos, Pos::new(3, 4));
        assert_eq!(p.url, "/web/powers.jsp");
    }

    #[test]
    fn coverage_and_html_only() {
        let html = "<html><body><a href='x.jsp'>x</a></body></html>\n";
        let p = parse_template(html, "a.html").unwrap();
        assert_eq!(kinds(&p), [NodeKind::RawMarkup]);
        assert_eq!(p.nodes[0].body, html);
        let p = parse_template(POWERS_PAGE, "p.jsp").unwrap();
        let mut at = 0;
        for n in &p.nodes {
            assert_eq!(n.start, at);
            at = n.end;
        }
        assert_eq!(at, POWERS_PAGE.len());
    }

    #[test]
    fn declaration_body() {
        let p = parse_template("<%! int i=0; %>", "d.jsp").unwrap();
        assert_eq!(kinds(&p), [NodeKind::Declaration]);
        assert_eq!(p.nodes[0].body, "int i=0;");
        let p = parse_template("<%! int i=0; !%>", "d.jsp").unwrap();
        assert_eq!(p.nodes[0].body, "int i=0;");
    }

    #[test]
    fn unterminated_constructs() {
        assert!(matches!(parse_template("a <% x", "u.jsp"), Err(TemplateError::UnterminatedConstruct(..))));
        assert!(parse_template("<jsp:useBean id='x'", "u.jsp").is_err());
        // a stray '<' in markup is fine
        assert!(parse_template("a < b", "u.jsp").is_ok());
    }

    #[test]
    fn directives_actions_and_custom_tags() {
        let src = "<%@ taglib prefix=\"j2ee\" uri=\"/WEB-INF/tlds/taglib.tld\" %>\n\
                   <jsp:useBean id=\"b\" class=\"p.Bean\"/>\n\
                   <j2ee:prevForm action=\"cart\">x</j2ee:prevForm>\n\
                   <other:tag a=\"1\"/><jsp:include page=\"/a.jsp\"/>";
        let p = parse_template(src, "t.jsp").unwrap();
        let summary: Vec<_> = p
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::RawMarkup)
            .map(|n| (n.kind, n.name.as_str(), n.form))
            .collect();
        assert_eq!(
            summary,
            [
                (NodeKind::Directive, "taglib", TagForm::SelfClosing),
                (NodeKind::UseBean, "jsp:useBean", TagForm::SelfClosing),
                (NodeKind::CustomTag, "j2ee:prevForm", TagForm::Open),
                (NodeKind::CustomTag, "j2ee:prevForm", TagForm::Close),
            ]
        );
        let tag = &p.nodes.iter().find(|n| n.kind == NodeKind::CustomTag).unwrap();
        assert_eq!(tag.attr("action").unwrap().value, "cart");
        assert_eq!(tag.attr("action").unwrap().value_location, SourceLocation::new("t.jsp", 3, 24));
        assert_eq!(p.taglibs()[0].0, "j2ee");
    }

    #[test]
    fn percent_gt_inside_string_literal() {
        let p = parse_template("<% out.print(\"%>\"); %>tail", "s.jsp").unwrap();
        assert_eq!(p.nodes[0].body, "out.print(\"%>\");");
        assert_eq!(p.nodes[1].body, "tail");
    }

    #[test]
    fn blanking_keeps_positions() {
        let src = "<a href='<%= x %>'>\n<% if (y) { %>z<% } %>";
        let p = parse_template(src, "b.jsp").unwrap();
        let blank = p.blanked_text('\u{FFFC}');
        assert_eq!(blank.chars().count(), src.chars().count());
        assert_eq!(blank.matches('\u{FFFC}').count(), 3);
        assert!(!blank.contains("if"));
        assert_eq!(blank.matches('\n').count(), 1);
    }
}
