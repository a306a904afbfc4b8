//! Expression-language fragments in pages (`${bean.prop}`, `#{bean.m()}`)
//! and the count of dependency-bearing string literals.

use crate::config::UrlMappingTable;
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{Analyzer, DependencyGraph, EntityId, GraphError, Provenance, Relationship, RelationshipKind};
use crate::java::{collect_lookup_sites, collect_string_writes, ProjectIndex, SourceUnit, Ty, HOLE};
use crate::jsp::{capitalize_property, NodeKind, TemplatePage};
use crate::location::{LineIndex, Pos, SourceLocation};
use crate::markup::find_tags;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

const RESERVED: &[&str] = &[
    "and", "or", "not", "eq", "ne", "lt", "gt", "le", "ge", "true", "false", "null", "instanceof", "empty", "div", "mod",
];
const SCOPES: &[&str] = &["pageScope", "requestScope", "sessionScope", "applicationScope"];
const IMPLICIT: &[&str] = &["param", "paramValues", "header", "headerValues", "cookie", "initParam", "pageContext"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ElLiteral {
    /// Inner text as written (escapes kept) and the quote character.
    Str(String, char),
    Number(String),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Segment {
    Property(String),
    Call(String, Vec<ElLiteral>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ElBody {
    Chain { base: String, segments: Vec<Segment> },
    /// Outside the supported grammar: operators, indexing, nested calls.
    Unparsed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElExpression {
    pub raw: String,
    /// `$` or `#`.
    pub delimiter: char,
    pub body: ElBody,
}

impl fmt::Display for ElLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElLiteral::Str(s, q) => write!(f, "{q}{s}{q}"),
            ElLiteral::Number(n) => f.write_str(n),
            ElLiteral::Bool(b) => write!(f, "{b}"),
            ElLiteral::Null => f.write_str("null"),
        }
    }
}

impl fmt::Display for ElExpression {
    /// Renders the parse tree; unparsed expressions render as written.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ElBody::Chain { base, segments } = &self.body else { return f.write_str(&self.raw) };
        write!(f, "{}{{{base}", self.delimiter)?;
        for s in segments {
            match s {
                Segment::Property(p) => write!(f, ".{p}")?,
                Segment::Call(m, args) => {
                    write!(f, ".{m}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
            }
        }
        f.write_str("}")
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    text: &'a str,
    i: usize,
}

impl<'a> Cursor<'a> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.i;
        if !self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == b'_') {
            return None;
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            self.i += 1;
        }
        Some(self.text[start..self.i].to_string())
    }

    fn literal(&mut self) -> Option<ElLiteral> {
        match self.peek()? {
            q @ (b'\'' | b'"') => {
                let start = self.i + 1;
                let mut k = start;
                while k < self.s.len() && self.s[k] != q {
                    k += if self.s[k] == b'\\' { 2 } else { 1 };
                }
                if k >= self.s.len() {
                    return None;
                }
                self.i = k + 1;
                Some(ElLiteral::Str(self.text[start..k].to_string(), q as char))
            }
            c if c.is_ascii_digit() || c == b'-' => {
                let start = self.i;
                self.i += 1;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == b'.') {
                    self.i += 1;
                }
                let n = &self.text[start..self.i];
                (n != "-" && !n.ends_with('.')).then(|| ElLiteral::Number(n.to_string()))
            }
            _ => match self.ident()?.as_str() {
                "true" => Some(ElLiteral::Bool(true)),
                "false" => Some(ElLiteral::Bool(false)),
                "null" => Some(ElLiteral::Null),
                _ => None,
            },
        }
    }
}

fn parse_chain(inner: &str) -> Option<ElBody> {
    let mut c = Cursor { s: inner.as_bytes(), text: inner, i: 0 };
    c.ws();
    let base = c.ident()?;
    if RESERVED.contains(&base.as_str()) {
        return None;
    }
    let mut segments = Vec::new();
    loop {
        c.ws();
        if c.peek().is_none() {
            break;
        }
        if !c.eat(b'.') {
            return None;
        }
        c.ws();
        let name = c.ident()?;
        c.ws();
        if c.eat(b'(') {
            let mut args = Vec::new();
            c.ws();
            if !c.eat(b')') {
                loop {
                    c.ws();
                    args.push(c.literal()?);
                    c.ws();
                    if c.eat(b')') {
                        break;
                    }
                    if !c.eat(b',') {
                        return None;
                    }
                }
            }
            segments.push(Segment::Call(name, args));
        } else {
            segments.push(Segment::Property(name));
        }
    }
    Some(ElBody::Chain { base, segments })
}

/// Parses one `${...}` or `#{...}` expression. Never fails: text outside
/// the supported grammar yields [`ElBody::Unparsed`].
pub fn parse_el(text: &str) -> ElExpression {
    let t = text.trim();
    let delimiter = if t.starts_with('#') { '#' } else { '$' };
    let body = t
        .strip_prefix(['$', '#'])
        .and_then(|r| r.strip_prefix('{'))
        .and_then(|r| r.strip_suffix('}'))
        .and_then(parse_chain)
        .unwrap_or(ElBody::Unparsed);
    ElExpression { raw: text.to_string(), delimiter, body }
}

/// Byte spans of EL expressions in `text`. Quotes inside an expression are
/// honoured when looking for the closing brace; an unclosed expression runs
/// to the end of the text.
pub fn find_el_spans(text: &str) -> Vec<(usize, usize)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < b.len() {
        if (b[i] == b'$' || b[i] == b'#') && b[i + 1] == b'{' && (i == 0 || b[i - 1] != b'\\') {
            let start = i;
            let mut k = i + 2;
            let mut quote = None;
            while k < b.len() {
                match (quote, b[k]) {
                    (Some(q), c) if c == q => quote = None,
                    (Some(_), b'\\') => k += 1,
                    (None, q @ (b'\'' | b'"')) => quote = Some(q),
                    (None, b'}') => break,
                    _ => {}
                }
                k += 1;
            }
            let end = (k + 1).min(b.len());
            out.push((start, end));
            i = end;
        } else {
            i += 1;
        }
    }
    out
}

/// Bean names visible to EL on a page, mapped to project class names.
#[derive(Debug, Clone, Default)]
pub struct ElScope {
    beans: BTreeMap<String, String>,
}

impl ElScope {
    /// `jsp:useBean` declarations of the page over globally configured beans.
    pub fn for_page(page: &TemplatePage, index: &ProjectIndex, mapping: &UrlMappingTable) -> Self {
        let mut beans = BTreeMap::new();
        for n in page.nodes.iter().filter(|n| n.kind == NodeKind::UseBean) {
            let Some(id) = n.attr("id") else { continue };
            let class = n.attr("class").or_else(|| n.attr("type"));
            if let Some(c) = class.and_then(|c| index.class_by_binary_name(&c.value)) {
                beans.insert(id.value.clone(), c.qname.clone());
            }
        }
        let mut scope = ElScope { beans };
        scope.add_globals(index, mapping);
        scope
    }

    pub fn add_globals(&mut self, index: &ProjectIndex, mapping: &UrlMappingTable) {
        let names: Vec<String> = mapping.bean_names().map(str::to_string).collect();
        for name in names {
            if self.beans.contains_key(&name) {
                continue;
            }
            if let Some(c) = mapping.bean_class(&name).and_then(|c| index.class_by_binary_name(c)) {
                self.beans.insert(name, c.qname.clone());
            }
        }
    }

    pub fn bind(&mut self, name: &str, class: &str) {
        self.beans.insert(name.to_string(), class.to_string());
    }

    pub fn class_of(&self, name: &str) -> Option<&str> {
        self.beans.get(name).map(String::as_str)
    }
}

/// Emits `ElAccess` edges from `source` for each resolvable segment of the
/// chain: properties go to `get<Prop>` (or `is<Prop>`, then a field of that
/// name), calls to the named method with matching arity.
pub fn resolve_el(
    expr: &ElExpression,
    scope: &ElScope,
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
    source: &EntityId,
    location: &SourceLocation,
) -> Result<Vec<Diagnostic>, GraphError> {
    let diag = |code: &str, msg: String| vec![Diagnostic::new(code, msg).at(location.clone())];
    let ElBody::Chain { base, segments } = &expr.body else {
        return Ok(diag(codes::EL_UNPARSED, format!("expression {} is outside the supported subset", expr.raw.trim())));
    };
    let mut segs = segments.as_slice();
    let mut base = base.as_str();
    if SCOPES.contains(&base) {
        match segs.split_first() {
            Some((Segment::Property(p), rest)) => {
                base = p;
                segs = rest;
            }
            _ => return Ok(Vec::new()),
        }
    } else if IMPLICIT.contains(&base) {
        return Ok(Vec::new());
    }
    let Some(mut class) = scope.class_of(base).map(str::to_string) else {
        return Ok(diag(codes::EL_UNBOUND, format!("no bean named {base} in scope")));
    };
    for seg in segs {
        let ev = Provenance::new(Analyzer::LiteralEl, location.clone(), expr.raw.trim().to_string());
        let (target, next) = match seg {
            Segment::Property(p) => {
                let cap = capitalize_property(p);
                let getter = index
                    .find_method(&class, &format!("get{cap}"), 0)
                    .or_else(|| index.find_method(&class, &format!("is{cap}"), 0));
                match getter {
                    Some(m) => (m.id.clone(), index.return_type(m)),
                    None => match index.find_field(&class, p) {
                        Some(f) => (f.id.clone(), index.field_type(f)),
                        None => return Ok(diag(codes::EL_UNRESOLVED, format!("{class} has no property {p}"))),
                    },
                }
            }
            Segment::Call(m, args) => match index.find_method(&class, m, args.len()) {
                Some(mi) => (mi.id.clone(), index.return_type(mi)),
                None => {
                    return Ok(diag(codes::EL_UNRESOLVED, format!("{class} has no method {m}/{}", args.len())));
                }
            },
        };
        graph.add_relationship(Relationship::new(source.clone(), target, RelationshipKind::ElAccess, ev))?;
        match next {
            Ty::Project(q) => class = q,
            _ => break,
        }
    }
    Ok(Vec::new())
}

/// Parses and resolves every EL expression in the markup of a page.
/// Returns the number of expressions found.
pub fn analyze_page_el(
    page: &TemplatePage,
    page_id: &EntityId,
    scope: &ElScope,
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
) -> Result<(usize, Vec<Diagnostic>), GraphError> {
    let text = page.blanked_text(HOLE);
    let lines = LineIndex::new(&text);
    let spans = find_el_spans(&text);
    let mut diags = Vec::new();
    for &(s, e) in &spans {
        let expr = parse_el(&text[s..e]);
        let loc = SourceLocation::at(&page.path, lines.pos(s));
        diags.extend(resolve_el(&expr, scope, index, graph, page_id, &loc)?);
    }
    Ok((spans.len(), diags))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum LiteralKind {
    /// Quoted attribute value in page markup or a directive.
    TemplateAttribute,
    /// String literal argument of an output-stream write.
    WriteArgument,
    /// String literal argument of a naming-service lookup.
    LookupArgument,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LiteralSite {
    pub location: SourceLocation,
    pub kind: LiteralKind,
}

/// Quoted attribute values of every tag and directive on a page.
pub fn template_literals(page: &TemplatePage) -> Vec<LiteralSite> {
    let text = page.blanked_text(HOLE);
    let lines = LineIndex::new(&text);
    let b = text.as_bytes();
    let mut out: Vec<LiteralSite> = find_tags(&text)
        .iter()
        .flat_map(|t| t.scan.attrs.iter())
        .filter(|a| a.value_offset > 0 && matches!(b[a.value_offset - 1], b'"' | b'\''))
        .map(|a| LiteralSite {
            location: SourceLocation::at(&page.path, lines.pos(a.value_offset)),
            kind: LiteralKind::TemplateAttribute,
        })
        .collect();
    for n in page.nodes.iter().filter(|n| n.kind == NodeKind::Directive) {
        out.extend(
            n.attributes
                .iter()
                .map(|a| LiteralSite { location: a.value_location.clone(), kind: LiteralKind::TemplateAttribute }),
        );
    }
    out.sort();
    out.dedup();
    out
}

/// Literal write and lookup arguments of a unit. `keep` filters positions
/// in generated units (only code copied from the page counts).
pub fn java_literals(unit: &SourceUnit, keep: impl Fn(Pos) -> bool) -> Vec<LiteralSite> {
    let mut out = Vec::new();
    let mut push = |pos: Pos, kind| {
        if keep(pos) {
            if let Some(location) = unit.locate(pos) {
                out.push(LiteralSite { location, kind });
            }
        }
    };
    for site in collect_string_writes(&unit.unit) {
        for p in &site.pieces {
            push(p.pos, LiteralKind::WriteArgument);
        }
    }
    for site in collect_lookup_sites(&unit.unit) {
        if let Some((pos, _)) = site.literal_pos {
            push(pos, LiteralKind::LookupArgument);
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub total: usize,
    pub dependency_bearing: usize,
}

impl Ratio {
    fn add(&mut self, bearing: bool) {
        self.total += 1;
        self.dependency_bearing += usize::from(bearing);
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = if self.total == 0 { 0.0 } else { 100.0 * self.dependency_bearing as f64 / self.total as f64 };
        write!(f, "{pct:.1}% ({}/{})", self.dependency_bearing, self.total)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LiteralClassification {
    pub project: Ratio,
    pub by_kind: BTreeMap<LiteralKind, Ratio>,
    pub per_file: BTreeMap<String, Ratio>,
}

/// A literal is dependency-bearing when some relationship's evidence
/// points at its location.
pub fn classify_literals(sites: &[LiteralSite], graph: &DependencyGraph) -> LiteralClassification {
    let cited: BTreeSet<&SourceLocation> = graph
        .relationships()
        .filter(|r| r.kind != RelationshipKind::Contains)
        .map(|r| &r.evidence.location)
        .collect();
    let mut c = LiteralClassification::default();
    let unique: BTreeSet<&LiteralSite> = sites.iter().collect();
    for s in unique {
        let bearing = cited.contains(&s.location);
        c.project.add(bearing);
        c.by_kind.entry(s.kind).or_default().add(bearing);
        c.per_file.entry(s.location.path.clone()).or_default().add(bearing);
    }
    c
}
