//! Template pages to synthetic servlet classes.

use super::template::{NodeKind, TagForm, TemplateNode, TemplatePage};
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{DependencyGraph, Entity, EntityId, EntityKind, GraphError};
use crate::java::{parse_unit, LoweredOrigin, PositionMap, SourceUnit};
use crate::java::ast::OoCompilationUnit;
use crate::location::{Pos, SourceLocation};
use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

pub const JSP_BASE_CLASS: &str = "org.apache.jasper.runtime.HttpJspBase";

/// How a range of lowered lines relates to the template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    /// Code copied from the template starting at this position; the first
    /// lowered line starts at column 1.
    Verbatim(Pos),
    /// Generated from the template construct at this position.
    Fixed(Pos),
    /// Generated lifecycle code whose edges are produced elsewhere.
    Suppressed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OriginSegment {
    pub first_line: u32,
    pub last_line: u32,
    /// Index of the template node the lines came from.
    pub node: usize,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OriginMap {
    pub path: String,
    pub segments: Vec<OriginSegment>,
}

impl OriginMap {
    pub fn segment(&self, line: u32) -> Option<&OriginSegment> {
        self.segments.iter().find(|s| s.first_line <= line && line <= s.last_line)
    }
}

impl PositionMap for OriginMap {
    fn locate(&self, pos: Pos) -> Option<SourceLocation> {
        let seg = self.segment(pos.line)?;
        let at = match seg.origin {
            Origin::Suppressed => return None,
            Origin::Fixed(p) => p,
            Origin::Verbatim(start) if pos.line == seg.first_line => {
                Pos::new(start.line, start.column + pos.column - 1)
            }
            Origin::Verbatim(start) => Pos::new(start.line + (pos.line - seg.first_line), pos.column),
        };
        Some(SourceLocation::at(&self.path, at))
    }
}

#[derive(Debug, Clone)]
pub struct LoweredUnit {
    pub page_path: String,
    pub url: String,
    pub class_name: String,
    pub source: String,
    pub unit: OoCompilationUnit,
    pub origin: Arc<OriginMap>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoweringError {
    #[error("{0}: lowered page does not parse: {1}")]
    Unparseable(String, String),
}

/// Upper-cases the first character of a bean property name.
pub fn capitalize_property(property: &str) -> String {
    let mut chars = property.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Class name for the servlet generated from a page URL: `/index.jsp` gives
/// `index_jsp`, `/shop/list.jsp` gives `shop_list_jsp`. Underscores in the
/// path are doubled and other non-identifier characters are hex-escaped, so
/// distinct paths give distinct names.
pub fn synthetic_class_name(url: &str) -> String {
    let trimmed = url.trim_start_matches('/');
    let stem = trimmed
        .strip_suffix(".jspx")
        .or_else(|| trimmed.strip_suffix(".jsp"))
        .unwrap_or(trimmed);
    let mut out = String::new();
    for c in stem.chars() {
        match c {
            '/' => out.push('_'),
            '_' => out.push_str("__"),
            c if c.is_ascii_alphanumeric() => out.push(c),
            c => {
                let _ = write!(out, "${:x}$", c as u32);
            }
        }
    }
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '$');
    }
    out.push_str("_jsp");
    out
}

/// Java string literal for `s`, quotes included.
pub fn java_string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Request-time attribute expression `<%= e %>` inside an attribute value.
fn runtime_expr(value: &str) -> Option<&str> {
    let v = value.trim();
    v.strip_prefix("<%=")?.strip_suffix("%>").map(str::trim)
}

fn java_ident(s: &str) -> String {
    let mut out: String = s.chars().map(|c| if c.is_alphanumeric() || c == '_' || c == '$' { c } else { '_' }).collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

struct Emitter {
    text: String,
    line: u32,
    segments: Vec<OriginSegment>,
}

impl Emitter {
    fn raw_line(&mut self, s: &str) {
        self.text.push_str(s);
        self.text.push('\n');
        self.line += 1 + s.matches('\n').count() as u32;
    }

    fn mapped(&mut self, s: &str, node: usize, origin: Origin) {
        let first = self.line;
        self.raw_line(s);
        self.segments.push(OriginSegment { first_line: first, last_line: self.line - 1, node, origin });
    }
}

/// Lowers a page, degrading scripting elements that break the generated
/// unit to raw markup until it parses.
pub fn lower_page(page: &TemplatePage) -> Result<LoweredUnit, LoweringError> {
    let mut degraded = vec![false; page.nodes.len()];
    let mut diagnostics = Vec::new();
    loop {
        let (source, segments, gen_diags) = generate(page, &degraded);
        match parse_unit(&source, &page.path) {
            Ok(parsed) => {
                let origin = Arc::new(OriginMap { path: page.path.clone(), segments });
                diagnostics.extend(gen_diags);
                for mut d in parsed.diagnostics {
                    d.location = d.location.and_then(|l| origin.locate(l.pos()));
                    diagnostics.push(d);
                }
                return Ok(LoweredUnit {
                    page_path: page.path.clone(),
                    url: page.url.clone(),
                    class_name: synthetic_class_name(&page.url),
                    source,
                    unit: parsed.unit,
                    origin,
                    diagnostics,
                });
            }
            Err(err) => {
                let culprit = segments
                    .iter()
                    .find(|s| s.first_line <= err.pos.line && err.pos.line <= s.last_line)
                    .map(|s| s.node)
                    .filter(|&n| page.nodes[n].kind.is_code() && !degraded[n])
                    .or_else(|| (0..page.nodes.len()).rev().find(|&n| page.nodes[n].kind.is_code() && !degraded[n]));
                let Some(n) = culprit else {
                    return Err(LoweringError::Unparseable(page.path.clone(), err.message));
                };
                degraded[n] = true;
                diagnostics.push(
                    Diagnostic::new(
                        codes::LOWERING_DEGRADED,
                        format!("scripting element treated as markup: {}", err.message),
                    )
                    .at(page.nodes[n].location.clone()),
                );
            }
        }
    }
}

fn generate(page: &TemplatePage, degraded: &[bool]) -> (String, Vec<OriginSegment>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut em = Emitter { text: String::new(), line: 1, segments: Vec::new() };
    for n in page.nodes.iter().filter(|n| n.kind == NodeKind::Directive && n.name == "page") {
        if let Some(imports) = n.attr("import") {
            for imp in imports.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                em.raw_line(&format!("import {imp};"));
            }
        }
    }
    let class = synthetic_class_name(&page.url);
    em.raw_line(&format!("public class {class} extends {JSP_BASE_CLASS} {{"));
    for (k, n) in page.nodes.iter().enumerate() {
        if n.kind == NodeKind::Declaration && !degraded[k] {
            em.mapped(&n.body, k, Origin::Verbatim(n.body_pos));
        }
    }
    em.raw_line(
        "public void service(javax.servlet.http.HttpServletRequest request, \
         javax.servlet.http.HttpServletResponse response) throws java.io.IOException, javax.servlet.ServletException {",
    );
    for decl in [
        "javax.servlet.jsp.PageContext pageContext = null;",
        "javax.servlet.http.HttpSession session = null;",
        "javax.servlet.ServletContext application = null;",
        "javax.servlet.ServletConfig config = null;",
        "javax.servlet.jsp.JspWriter out = null;",
        "java.lang.Object page = this;",
    ] {
        em.raw_line(decl);
    }
    let mut open_tags: Vec<(String, String)> = Vec::new();
    let mut tag_counter = 0usize;
    for (k, n) in page.nodes.iter().enumerate() {
        let kind = if degraded[k] { NodeKind::RawMarkup } else { n.kind };
        match kind {
            NodeKind::RawMarkup => {
                let text = &page.text[n.start..n.end];
                em.mapped(&format!("out.write({});", java_string_literal(text)), k, Origin::Fixed(n.location.pos()));
            }
            NodeKind::Scriptlet => em.mapped(&n.body, k, Origin::Verbatim(n.body_pos)),
            NodeKind::Expression => {
                em.mapped("out.print(", k, Origin::Fixed(n.location.pos()));
                em.mapped(&n.body, k, Origin::Verbatim(n.body_pos));
                em.mapped(");", k, Origin::Fixed(n.location.pos()));
            }
            NodeKind::Declaration | NodeKind::Directive | NodeKind::Comment => {}
            NodeKind::UseBean => lower_use_bean(&mut em, k, n),
            NodeKind::GetProperty => {
                let (Some(name), Some(prop)) = (n.attr("name"), n.attr("property")) else {
                    diags.push(missing(n, "name and property"));
                    continue;
                };
                em.mapped(
                    &format!("out.print({}.get{}());", java_ident(&name.value), capitalize_property(&prop.value)),
                    k,
                    Origin::Fixed(prop.value_location.pos()),
                );
            }
            NodeKind::SetProperty => {
                let (Some(name), Some(prop)) = (n.attr("name"), n.attr("property")) else {
                    diags.push(missing(n, "name and property"));
                    continue;
                };
                if prop.value == "*" {
                    continue;
                }
                let arg = match (n.attr("value"), n.attr("param")) {
                    (Some(v), _) => match runtime_expr(&v.value) {
                        Some(e) => e.to_string(),
                        None => java_string_literal(&v.value),
                    },
                    (None, Some(p)) => format!("request.getParameter({})", java_string_literal(&p.value)),
                    (None, None) => format!("request.getParameter({})", java_string_literal(&prop.value)),
                };
                em.mapped(
                    &format!("{}.set{}({});", java_ident(&name.value), capitalize_property(&prop.value), arg),
                    k,
                    Origin::Fixed(prop.value_location.pos()),
                );
            }
            NodeKind::CustomTag => match n.form {
                TagForm::Open | TagForm::SelfClosing => {
                    tag_counter += 1;
                    let var = format!("_jspx_th_{}_{}", java_ident(&n.name.replace(':', "_")), tag_counter);
                    em.mapped(
                        &format!("javax.servlet.jsp.tagext.Tag {var} = null;"),
                        k,
                        Origin::Suppressed,
                    );
                    for a in &n.attributes {
                        let arg = match runtime_expr(&a.value) {
                            Some(e) => e.to_string(),
                            None => java_string_literal(&a.value),
                        };
                        em.mapped(
                            &format!("{var}.set{}({arg});", capitalize_property(&java_ident(&a.name))),
                            k,
                            Origin::Fixed(a.value_location.pos()),
                        );
                    }
                    em.mapped(&format!("{var}.doStartTag();"), k, Origin::Suppressed);
                    if n.form == TagForm::SelfClosing {
                        em.mapped(&format!("{var}.doEndTag();"), k, Origin::Suppressed);
                    } else {
                        open_tags.push((n.name.clone(), var));
                    }
                }
                TagForm::Close => match open_tags.iter().rposition(|(name, _)| *name == n.name) {
                    Some(pos) => {
                        let (_, var) = open_tags.remove(pos);
                        em.mapped(&format!("{var}.doEndTag();"), k, Origin::Suppressed);
                    }
                    None => diags.push(
                        Diagnostic::new(codes::MALFORMED_MARKUP, format!("closing </{}> without a start tag", n.name))
                            .at(n.location.clone()),
                    ),
                },
            },
        }
    }
    for (name, _) in open_tags {
        diags.push(
            Diagnostic::new(codes::MALFORMED_MARKUP, format!("<{name}> is never closed"))
                .at(SourceLocation::file_start(&page.path)),
        );
    }
    em.raw_line("}");
    em.raw_line("}");
    (em.text, em.segments, diags)
}

fn missing(n: &TemplateNode, what: &str) -> Diagnostic {
    Diagnostic::new(codes::MISSING_REQUIRED_ATTRIBUTE, format!("<{}> needs {what}", n.name)).at(n.location.clone())
}

fn lower_use_bean(em: &mut Emitter, k: usize, n: &TemplateNode) {
    if n.form == TagForm::Close {
        return;
    }
    let Some(id) = n.attr("id") else { return };
    let id = java_ident(&id.value);
    match (n.attr("class"), n.attr("type")) {
        (Some(class), ty) => {
            let decl_ty = ty.map(|t| t.value.as_str()).unwrap_or(&class.value);
            em.mapped(
                &format!("{decl_ty} {id} = new {}();", class.value),
                k,
                Origin::Fixed(class.value_location.pos()),
            );
        }
        (None, Some(ty)) => em.mapped(
            &format!("{0} {id} = ({0}) pageContext.getAttribute({1});", ty.value, java_string_literal(&id)),
            k,
            Origin::Fixed(ty.value_location.pos()),
        ),
        (None, None) => {}
    }
}

/// Adds the `ServerPage` entity and returns the unit to hand to the OO
/// extractor; its class becomes a synthetic child of the page and edges
/// found in it are attributed to the page.
pub fn register_page(graph: &mut DependencyGraph, lowered: &LoweredUnit) -> Result<(SourceUnit, EntityId), GraphError> {
    let page = add_page_entity(graph, EntityKind::ServerPage, &lowered.url, &lowered.page_path)?;
    let unit = SourceUnit {
        unit: lowered.unit.clone(),
        origin: Some(LoweredOrigin { page: page.clone(), map: lowered.origin.clone() }),
    };
    Ok((unit, page))
}

/// Adds (idempotently) the page entity for a template file.
pub fn add_page_entity(
    graph: &mut DependencyGraph,
    kind: EntityKind,
    url: &str,
    path: &str,
) -> Result<EntityId, GraphError> {
    graph.add_entity(Entity::new(kind, url, SourceLocation::file_start(path)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RelationshipKind;
    use crate::java::ast::*;
    use crate::java::{collect_string_writes, extract_oo_graph, ExternalsPolicy, ProjectIndex, HOLE};
    use crate::jsp::template::{parse_template, tests::POWERS_PAGE};

    #[test]
    fn class_names() {
        assert_eq!(synthetic_class_name("/index.jsp"), "index_jsp");
        assert_eq!(synthetic_class_name("/shop/list.jsp"), "shop_list_jsp");
        assert_ne!(synthetic_class_name("/shop_list.jsp"), synthetic_class_name("/shop/list.jsp"));
        assert_eq!(synthetic_class_name("/1-a.jsp"), "$1$2d$a_jsp");
    }

    #[test]
    fn loop_page_lowers_to_loop_with_writes() {
        let page = parse_template(POWERS_PAGE, "web/powers.jsp").unwrap();
        let lowered = lower_page(&page).unwrap();
        assert!(lowered.diagnostics.is_empty(), "{:?}", lowered.diagnostics);
        let service = &lowered.unit.classes[0].methods[0];
        assert_eq!(service.name, "service");
        let body = service.body.as_ref().unwrap();
        let loop_pos = body.iter().position(|s| matches!(s.kind, StmtKind::For { .. })).unwrap();
        let StmtKind::For { body: loop_body, .. } = &body[loop_pos].kind else { unreachable!() };
        let sites = collect_string_writes(&lowered.unit);
        let inside: Vec<_> = sites
            .iter()
            .filter(|s| loop_body.iter().any(|st| st.pos == s.call_pos))
            .map(|s| s.text.clone())
            .collect();
        assert!(inside.iter().any(|t| t.contains("<TD>")), "{inside:?}");
        let before: String = sites.iter().filter(|s| s.call_pos < body[loop_pos].pos).map(|s| s.text.as_str()).collect();
        assert!(before.contains("<TABLE BORDER='2' ALIGN='center'>"));
        assert!(!sites.iter().any(|s| s.text.contains(HOLE)));
    }

    #[test]
    fn origin_map_points_into_the_page() {
        let page = parse_template(POWERS_PAGE, "web/powers.jsp").unwrap();
        let lowered = lower_page(&page).unwrap();
        let line_of = |needle: &str| lowered.source.lines().position(|l| l.contains(needle)).unwrap() as u32 + 1;
        let l = line_of("Math.pow");
        let col = lowered.source.lines().nth(l as usize - 1).unwrap().find("Math").unwrap() as u32 + 1;
        assert_eq!(lowered.origin.locate(Pos::new(l, col)), Some(SourceLocation::new("web/powers.jsp", 5, 9)));
        // boilerplate has no origin
        assert_eq!(lowered.origin.locate(Pos::new(1, 1)), None);
    }

    #[test]
    fn script_free_page_round_trips_through_writes() {
        let text = "<html>\n<a href=\"x.jsp\">\"q\" \\ tab\t</a>\n</html>";
        let page = parse_template(text, "p.jsp").unwrap();
        let lowered = lower_page(&page).unwrap();
        let joined: String = collect_string_writes(&lowered.unit).iter().map(|s| s.text.as_str()).collect();
        assert_eq!(joined, text);
    }

    #[test]
    fn broken_scriptlet_degrades() {
        let page = parse_template("<p><% if (x) { %>a</p>", "bad.jsp").unwrap();
        let lowered = lower_page(&page).unwrap();
        assert!(lowered.diagnostics.iter().any(|d| d.code == codes::LOWERING_DEGRADED));
        assert_eq!(lowered.diagnostics[0].location, Some(SourceLocation::new("bad.jsp", 1, 4)));
        let joined: String = collect_string_writes(&lowered.unit).iter().map(|s| s.text.as_str()).collect();
        assert_eq!(joined, "<p><% if (x) { %>a</p>");
    }

    #[test]
    fn custom_tag_order_is_setters_start_end() {
        let page = parse_template(
            "<%@ taglib prefix=\"j\" uri=\"t\" %><j:t a=\"1\" b=\"2\">x</j:t>",
            "t.jsp",
        )
        .unwrap();
        let src = lower_page(&page).unwrap().source;
        let idx = |s: &str| src.find(s).unwrap();
        assert!(idx(".setA(") < idx(".setB("));
        assert!(idx(".setB(") < idx(".doStartTag()"));
        assert!(idx(".doStartTag()") < idx("out.write(\"x\")"));
        assert!(idx("out.write(\"x\")") < idx(".doEndTag()"));
    }

    fn page_graph(files: &[(&str, &str)], page: (&str, &str)) -> (DependencyGraph, EntityId) {
        let mut units: Vec<SourceUnit> =
            files.iter().map(|(p, s)| SourceUnit::plain(crate::java::parse_unit(s, p).unwrap().unit)).collect();
        let mut g = DependencyGraph::default();
        let mut tp = parse_template(page.1, page.0).unwrap();
        tp.url = "/index.jsp".into();
        let lowered = lower_page(&tp).unwrap();
        let (su, id) = register_page(&mut g, &lowered).unwrap();
        units.push(su);
        let index = ProjectIndex::build(&units);
        extract_oo_graph(&units, &index, &mut g, ExternalsPolicy::Ignore).unwrap();
        g.seal().unwrap();
        (g, id)
    }

    #[test]
    fn get_property_calls_bean_getter() {
        let bean = "package beans; public class User { private String firstName;\n\
                    public String getFirstName() { return firstName; }\n\
                    public void setFirstName(String f) { firstName = f; } }";
        let page = "<jsp:useBean id=\"myBeans\" class=\"beans.User\"/>\n\
                    <jsp:setProperty name=\"myBeans\" property=\"firstName\" value=\"Ann\"/>\n\
                    <jsp:getProperty name=\"myBeans\" property=\"firstName\"/>";
        let (g, pid) = page_graph(&[("src/beans/User.java", bean)], ("web/index.jsp", page));
        let getter = g.find_one(EntityKind::MethodUnit, "beans.User.getFirstName/0").unwrap();
        let setter = g.find_one(EntityKind::MethodUnit, "beans.User.setFirstName/1").unwrap();
        let class = g.find_one(EntityKind::ClassUnit, "beans.User").unwrap();
        assert!(g.has_relationship(&pid, &getter.id, RelationshipKind::Calls));
        assert!(g.has_relationship(&pid, &setter.id, RelationshipKind::Calls));
        assert!(g.has_relationship(&pid, &class.id, RelationshipKind::Instantiates));
        let call = g
            .relationships_of_kind(RelationshipKind::Calls)
            .find(|r| r.target == getter.id)
            .unwrap();
        assert_eq!(call.evidence.location, SourceLocation::new("web/index.jsp", 3, 43));
        assert_eq!(call.evidence.analyzer, crate::graph::Analyzer::JspLowering);
    }

    #[test]
    fn declarations_become_synthetic_members() {
        let (g, pid) = page_graph(&[], ("web/index.jsp", "<%! int i=0; %><p><%= i %></p>"));
        let field = g.find_one(EntityKind::FieldUnit, "index_jsp.i").unwrap();
        assert!(field.synthetic);
        let class = g.find_one(EntityKind::ClassUnit, "index_jsp").unwrap();
        assert!(class.synthetic);
        assert_eq!(class.parent.as_ref(), Some(&pid));
        assert!(g.has_relationship(&pid, &field.id, RelationshipKind::AccessesField));
    }

    #[test]
    fn html_only_page_has_no_outgoing_edges() {
        let (g, pid) = page_graph(&[], ("web/index.jsp", "<html><body>hi</body></html>"));
        let out: Vec<_> = g
            .relationships()
            .filter(|r| r.source == pid && r.kind != RelationshipKind::Contains)
            .collect();
        assert!(out.is_empty(), "{out:?}");
    }
}
