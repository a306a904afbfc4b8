//! Dependency-bearing tags in page markup and in markup written by servlets
//! and tag handlers, and their resolution to URL-addressed targets.

use crate::config::{Target, UrlMappingTable};
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{Analyzer, DependencyGraph, EntityId, GraphError, Provenance, Relationship, RelationshipKind};
use crate::java::{ProjectIndex, SourceUnit, StringWriteSite, HOLE};
use crate::jsp::{NodeKind, TemplatePage};
use crate::location::{LineIndex, SourceLocation};
use crate::markup::find_tags;
use crate::url::{is_external, normalize_url};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// `tag` is matched case-insensitively. Directive rows use `%@name`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRule {
    pub tag: String,
    pub attribute: String,
    pub kind: RelationshipKind,
}

impl TagRule {
    pub fn new(tag: &str, attribute: &str, kind: RelationshipKind) -> Self {
        TagRule { tag: tag.to_string(), attribute: attribute.to_string(), kind }
    }

    fn directive(&self) -> Option<&str> {
        self.tag.strip_prefix("%@").map(str::trim)
    }

    /// Rules that apply to markup written from Java code.
    fn applies_to_writes(&self) -> bool {
        matches!((self.tag.as_str(), self.attribute.as_str()), ("form", "action") | ("a", "href"))
    }
}

pub fn builtin_rules() -> Vec<TagRule> {
    use RelationshipKind::*;
    vec![
        TagRule::new("form", "action", ForwardsTo),
        TagRule::new("jsp:include", "page", Includes),
        TagRule::new("%@include", "file", Includes),
        TagRule::new("jsp:directive.include", "file", Includes),
        TagRule::new("jsp:forward", "page", ForwardsTo),
        TagRule::new("%@page", "errorPage", ErrorPage),
        TagRule::new("jsp:directive.page", "errorPage", ErrorPage),
        TagRule::new("a", "href", LinksTo),
        TagRule::new("c:redirect", "url", ForwardsTo),
        TagRule::new("c:url", "value", LinksTo),
    ]
}

#[derive(Debug, Error)]
pub enum RuleFileError {
    #[error("tag rule file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Merges rows from a JSON array of `{tag, attribute, kind}` into `rules`.
/// A row for an existing (tag, attribute) pair replaces its kind.
pub fn merge_rules(rules: &mut Vec<TagRule>, json: &str) -> Result<(), RuleFileError> {
    let extra: Vec<TagRule> = serde_json::from_str(json)?;
    for r in extra {
        match rules
            .iter_mut()
            .find(|x| x.tag.eq_ignore_ascii_case(&r.tag) && x.attribute.eq_ignore_ascii_case(&r.attribute))
        {
            Some(x) => x.kind = r.kind,
            None => rules.push(r),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagHit {
    pub rule: TagRule,
    /// Attribute value as written; may contain EL or a hole marker.
    pub value: String,
    /// Start of the attribute value, or of the Java literal holding it.
    pub location: SourceLocation,
    /// The page, or the method whose write produced the markup.
    pub container: EntityId,
    /// URL relative values resolve against.
    pub base_url: String,
    /// Class whose write site produced the hit.
    pub handler: Option<String>,
    /// `method` attribute of a form, kept as metadata.
    pub method: Option<String>,
    /// For each hole in `value`, the variable or property it reads.
    pub holes: Vec<Option<String>>,
}

impl TagHit {
    /// The value up to the query string; computed parameters do not make the
    /// target itself dynamic.
    fn path_part(&self) -> &str {
        self.value.split('?').next().unwrap_or_default()
    }

    pub fn is_el(&self) -> bool {
        let p = self.path_part();
        p.contains("${") || p.contains("#{")
    }

    /// Built at run time: a hole from string concatenation or an embedded
    /// scripting expression.
    pub fn is_dynamic(&self) -> bool {
        let p = self.path_part();
        p.contains(HOLE) || p.contains("<%")
    }
}

/// Calls `make(rule, value, value offset, form method)` for each rule match.
fn hit_from_tags(text: &str, rules: &[&TagRule], mut make: impl FnMut(&TagRule, String, usize, Option<String>)) {
    for tag in find_tags(text).into_iter().filter(|t| !t.closing) {
        for rule in rules.iter().filter(|r| r.tag.eq_ignore_ascii_case(&tag.name)) {
            let Some(a) = tag.scan.attr(&rule.attribute) else { continue };
            let method = tag.name.eq_ignore_ascii_case("form").then(|| tag.scan.attr("method").map(|m| m.value.clone())).flatten();
            make(rule, a.value.clone(), a.value_offset, method);
        }
    }
}

/// Offsets of `<name` openings for rule tags that did not scan as a tag.
fn malformed(text: &str, rules: &[&TagRule], found: &[usize]) -> Vec<usize> {
    let lower = text.to_ascii_lowercase();
    let mut out = Vec::new();
    for r in rules {
        let needle = format!("<{}", r.tag.to_ascii_lowercase());
        for (i, _) in lower.match_indices(&needle) {
            let next = lower.as_bytes().get(i + needle.len()).copied();
            let boundary = matches!(next, None | Some(b' ' | b'\t' | b'\r' | b'\n' | b'>' | b'/'));
            if boundary && !found.contains(&i) && !out.contains(&i) {
                out.push(i);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Scans markup text (a whole HTML page, or a template page with code
/// blanked out). Tag and attribute names match case-insensitively.
pub fn scan_markup(
    text: &str,
    path: &str,
    base_url: &str,
    container: &EntityId,
    rules: &[TagRule],
) -> (Vec<TagHit>, Vec<Diagnostic>) {
    let markup_rules: Vec<&TagRule> = rules.iter().filter(|r| r.directive().is_none()).collect();
    let lines = LineIndex::new(text);
    let mut hits = Vec::new();
    hit_from_tags(text, &markup_rules, |rule, value, off, method| {
            hits.push(TagHit {
                rule: rule.clone(),
                value,
                location: SourceLocation::at(path, lines.pos(off)),
                container: container.clone(),
                base_url: base_url.to_string(),
                handler: None,
                method,
                holes: Vec::new(),
            })
        });
    let found: Vec<usize> = find_tags(text).iter().map(|t| t.offset).collect();
    let diags = malformed(text, &markup_rules, &found)
        .into_iter()
        .map(|off| {
            Diagnostic::new(codes::MALFORMED_MARKUP, "unterminated tag skipped")
                .at(SourceLocation::at(path, lines.pos(off)))
        })
        .collect();
    (hits, diags)
}

/// Scans a template page: markup with code blanked out, plus directives.
pub fn scan_page(page: &TemplatePage, container: &EntityId, rules: &[TagRule]) -> (Vec<TagHit>, Vec<Diagnostic>) {
    let (mut hits, diags) = scan_markup(&page.blanked_text(HOLE), &page.path, &page.url, container, rules);
    for n in page.nodes.iter().filter(|n| n.kind == NodeKind::Directive) {
        for rule in rules.iter().filter(|r| r.directive().is_some_and(|d| d.eq_ignore_ascii_case(&n.name))) {
            if let Some(a) = n.attributes.iter().find(|a| a.name.eq_ignore_ascii_case(&rule.attribute)) {
                hits.push(TagHit {
                    rule: rule.clone(),
                    value: a.value.clone(),
                    location: a.value_location.clone(),
                    container: container.clone(),
                    base_url: page.url.clone(),
                    handler: None,
                    method: None,
                    holes: Vec::new(),
                });
            }
        }
    }
    hits.sort_by(|a, b| a.location.cmp(&b.location));
    (hits, diags)
}

/// Scans markup written by a hand-written unit. Only `<form action>` and
/// `<a href>` apply here. Hits are attributed to the writing method.
pub fn scan_write_sites(
    unit: &SourceUnit,
    sites: &[StringWriteSite],
    index: &ProjectIndex,
    rules: &[TagRule],
) -> Vec<TagHit> {
    let write_rules: Vec<&TagRule> = rules.iter().filter(|r| r.applies_to_writes()).collect();
    let mut hits = Vec::new();
    for site in sites {
        let Some(m) = index.class(&site.class).and_then(|c| c.methods.get(&(site.method.clone(), site.arity))) else {
            continue;
        };
        let at = |off: usize| {
            // the literal token holding the value
            // a value that starts with a hole is cited at the literal opening the attribute
            let piece = site.piece_at(off).or_else(|| site.pieces.iter().rev().find(|p| p.offset <= off));
            let pos = piece.map(|p| p.pos).unwrap_or(site.call_pos);
            unit.locate(pos).unwrap_or_else(|| SourceLocation::at(&unit.unit.path, pos))
        };
        hit_from_tags(&site.text, &write_rules, |rule, value, off, method| {
            let location = at(off);
            let before = site.text[..off].matches(HOLE).count();
            let n = value.matches(HOLE).count();
            let holes = site.holes.iter().skip(before).take(n).cloned().collect();
            hits.push(TagHit {
                rule: rule.clone(),
                value,
                location,
                container: m.id.clone(),
                base_url: "/".to_string(),
                handler: Some(site.class.clone()),
                method,
                holes,
            })
        });
    }
    hits
}

/// One use of a tag handler on a page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandlerUse {
    pub page: EntityId,
    pub url: String,
    /// Attribute values given at the use site.
    pub attributes: BTreeMap<String, String>,
}

/// Uses of each tag handler class, keyed by qualified class name.
pub type HandlerUsers = BTreeMap<String, Vec<HandlerUse>>;

#[derive(Debug, Default)]
pub struct Resolved {
    pub edges: usize,
    /// Hits whose value is an EL expression, left to the EL analyzer.
    pub deferred: Vec<TagHit>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Fills holes that read a tag attribute (`action`, `this.action`,
/// `getAction()`) with the value given at the use site.
fn substitute(hit: &TagHit, attributes: &BTreeMap<String, String>) -> String {
    let mut holes = hit.holes.iter();
    let mut out = String::with_capacity(hit.value.len());
    for c in hit.value.chars() {
        if c != HOLE {
            out.push(c);
            continue;
        }
        match holes.next().and_then(|h| h.as_ref()).and_then(|name| attributes.get(name)) {
            Some(v) => out.push_str(v),
            None => out.push(HOLE),
        }
    }
    out
}

/// Normalizes each hit and emits an edge of the rule's kind to the mapped
/// target. Hits from a tag handler's writes are attributed to every page
/// that uses the handler, with attribute-valued holes filled in per use;
/// other write hits stay with the writing method.
pub fn resolve_hits(
    hits: &[TagHit],
    mapping: &UrlMappingTable,
    users: &HandlerUsers,
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
) -> Result<Resolved, GraphError> {
    let mut out = Resolved::default();
    for hit in hits {
        let instances: Vec<TagHit> = match hit.handler.as_deref().and_then(|h| users.get(h)) {
            Some(uses) if !uses.is_empty() => uses
                .iter()
                .map(|u| TagHit {
                    value: substitute(hit, &u.attributes),
                    container: u.page.clone(),
                    base_url: u.url.clone(),
                    ..hit.clone()
                })
                .collect(),
            _ => {
                let base = hit
                    .handler
                    .as_deref()
                    .and_then(|h| index.class(h))
                    .and_then(|c| mapping.url_of(&c.id))
                    .unwrap_or(&hit.base_url);
                vec![TagHit { base_url: base.to_string(), ..hit.clone() }]
            }
        };
        for inst in instances {
            if inst.is_el() {
                out.deferred.push(inst);
                continue;
            }
            if inst.is_dynamic() {
                out.diagnostics.push(
                    Diagnostic::new(
                        codes::DYNAMIC_URL,
                        format!("{} {} is computed at run time", inst.rule.tag, inst.rule.attribute),
                    )
                    .at(inst.location.clone()),
                );
                continue;
            }
            let Some(url) = normalize_url(&inst.value, &inst.base_url) else {
                if is_external(&inst.value) {
                    out.diagnostics.push(
                        Diagnostic::new(codes::EXTERNAL_URL, format!("{} points outside the application", inst.value))
                            .at(inst.location.clone()),
                    );
                }
                continue;
            };
            let mut note = format!("<{} {}=\"{}\">", inst.rule.tag, inst.rule.attribute, inst.value);
            if let Some(m) = &inst.method {
                note.push_str(&format!(" method={m}"));
            }
            let ev = Provenance::new(Analyzer::TagExtractor, inst.location.clone(), note);
            let source = inst.container.clone();
            match mapping.lookup(&url).map(|m| &m.target) {
                Some(Target::Entity(id)) => {
                    graph.add_relationship(Relationship::new(source, id.clone(), inst.rule.kind, ev))?;
                }
                Some(Target::Missing(name)) => {
                    graph.add_unresolved_relationship(source, name, inst.rule.kind, ev)?;
                }
                None => {
                    out.diagnostics.push(
                        Diagnostic::new(codes::UNRESOLVED, format!("no page or servlet for {url}"))
                            .at(inst.location.clone()),
                    );
                    graph.add_unresolved_relationship(source, &url, inst.rule.kind, ev)?;
                }
            }
            out.edges += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EntityKind, UnresolvedPolicy};
    use crate::java::{collect_string_writes, parse_unit};
    use crate::jsp::parse_template;

    fn page_id(url: &str) -> EntityId {
        EntityId::derive(EntityKind::ServerPage, url, "p")
    }

    #[test]
    fn builtin_table_has_ten_rows() {
        let rules = builtin_rules();
        assert_eq!(rules.len(), 10);
        let mut pairs: Vec<_> = rules.iter().map(|r| (r.tag.as_str(), r.attribute.as_str())).collect();
        pairs.dedup();
        assert_eq!(pairs.len(), 10);
    }

    #[test]
    fn markup_examples() {
        let id = page_id("/index.jsp");
        let text = r#"<FORM name="prevForm" Action="cart" method="post"></FORM>
<a href="product.jsp?id=3">p</a> <a name="x">no href</a>
<jsp:include page='/header.jsp' flush="true"/>
<TABLE BORDER='2'></TABLE>"#;
        let (hits, diags) = scan_markup(text, "web/index.jsp", "/index.jsp", &id, &builtin_rules());
        assert!(diags.is_empty());
        let got: Vec<_> = hits.iter().map(|h| (h.rule.tag.as_str(), h.value.as_str())).collect();
        assert_eq!(got, [("form", "cart"), ("a", "product.jsp?id=3"), ("jsp:include", "/header.jsp")]);
        assert_eq!(hits[0].method.as_deref(), Some("post"));
        assert_eq!(hits[0].location, SourceLocation::new("web/index.jsp", 1, 31));
        assert_eq!(hits[1].location, SourceLocation::new("web/index.jsp", 2, 10));
    }

    #[test]
    fn directives_and_code_in_pages() {
        let src = "<%@ page errorPage=\"err.jsp\" %>\n<% String s = \"<a href='no.jsp'>\"; %>\n<a href=\"<%= s %>\">x</a> <a href=\"${next}\">n</a>\n<a href=\"v.jsp?id=<%= i %>\">v</a>";
        let page = parse_template(src, "web/x.jsp").unwrap();
        let (hits, _) = scan_page(&page, &page_id("/web/x.jsp"), &builtin_rules());
        let got: Vec<_> = hits.iter().map(|h| (h.rule.tag.as_str(), h.is_dynamic(), h.is_el())).collect();
        assert_eq!(got, [("%@page", false, false), ("a", true, false), ("a", false, true), ("a", false, false)]);
        assert_eq!(hits[0].value, "err.jsp");
        assert_eq!(hits[0].location, SourceLocation::new("web/x.jsp", 1, 21));
    }

    #[test]
    fn malformed_markup_is_reported() {
        let (hits, diags) = scan_markup("<a href=\"x.jsp\">ok</a> <a href=\"y.jsp", "h.html", "/h.html", &page_id("/h"), &builtin_rules());
        assert_eq!(hits.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].location, Some(SourceLocation::new("h.html", 1, 24)));
    }

    #[test]
    fn write_sites_only_form_and_anchor() {
        let src = r#"package t;
public class PrevFormTag extends TagSupport {
  public int doStartTag() throws JspException {
    JspWriter out = pageContext.getOut();
    out.print("<form name=\"prevForm\" action=\"cart\" method=\"GET\">");
    out.print("<jsp:include page=\"x.jsp\"/><TABLE BORDER='2'>");
    out.print("<a href='" + url + "'>");
    return SKIP_BODY;
  }
}"#;
        let unit = SourceUnit::plain(parse_unit(src, "src/t/PrevFormTag.java").unwrap().unit);
        let index = ProjectIndex::build(std::slice::from_ref(&unit));
        let sites = collect_string_writes(&unit.unit);
        let hits = scan_write_sites(&unit, &sites, &index, &builtin_rules());
        let got: Vec<_> = hits.iter().map(|h| (h.rule.tag.as_str(), h.value.as_str(), h.is_dynamic())).collect();
        assert_eq!(got, [("form", "cart", false), ("a", "\u{FFFC}", true)]);
        assert_eq!(hits[0].location, SourceLocation::new("src/t/PrevFormTag.java", 5, 15));
        assert_eq!(hits[0].handler.as_deref(), Some("t.PrevFormTag"));
        assert_eq!(hits[0].container, index.class("t.PrevFormTag").unwrap().methods[&("doStartTag".into(), 0)].id);
    }

    #[test]
    fn holes_filled_from_use_attributes() {
        let hit = TagHit {
            rule: TagRule::new("form", "action", RelationshipKind::ForwardsTo),
            value: format!("{HOLE}"),
            location: SourceLocation::new("T.java", 1, 1),
            container: page_id("/m"),
            base_url: "/".into(),
            handler: Some("T".into()),
            method: None,
            holes: vec![Some("action".into())],
        };
        let attrs = BTreeMap::from([("action".to_string(), "cart".to_string())]);
        assert_eq!(substitute(&hit, &attrs), "cart");
        assert_eq!(substitute(&hit, &BTreeMap::new()), HOLE.to_string());
    }

    #[test]
    fn rule_file_merges() {
        let mut rules = builtin_rules();
        merge_rules(&mut rules, r#"[{"tag":"iframe","attribute":"src","kind":"Includes"},{"tag":"A","attribute":"HREF","kind":"ForwardsTo"}]"#).unwrap();
        assert_eq!(rules.len(), 11);
        assert_eq!(rules.iter().find(|r| r.tag == "a").unwrap().kind, RelationshipKind::ForwardsTo);
        assert!(merge_rules(&mut rules, "{").is_err());
    }

    #[test]
    fn resolution_relative_and_reattributed() {
        use crate::config::{build_mapping, MappingParts};
        let list = page_id("/shop/list.jsp");
        let item = page_id("/shop/detail/item.jsp");
        let cart = page_id("/cart.jsp");
        let index = ProjectIndex::default();
        let mapping = build_mapping(
            MappingParts {
                pages: vec![
                    ("/shop/list.jsp".into(), list.clone()),
                    ("/shop/detail/item.jsp".into(), item.clone()),
                    ("/cart".into(), cart.clone()),
                ],
                ..Default::default()
            },
            &index,
        );
        let mut g = DependencyGraph::new(UnresolvedPolicy::Drop);
        let rule = |t: &str| builtin_rules().into_iter().find(|r| r.tag == t).unwrap();
        let hit = |tag: &str, value: &str, handler: Option<&str>| TagHit {
            rule: rule(tag),
            value: value.into(),
            location: SourceLocation::new("web/shop/list.jsp", 1, 1),
            container: list.clone(),
            base_url: "/shop/list.jsp".into(),
            handler: handler.map(str::to_string),
            method: None,
            holes: Vec::new(),
        };
        let mut users = HandlerUsers::new();
        users.insert(
            "t.PrevFormTag".into(),
            vec![HandlerUse { page: item.clone(), url: "/shop/detail/item.jsp".into(), attributes: BTreeMap::new() }],
        );
        let hits = vec![
            hit("a", "detail/item.jsp#top", None),
            hit("form", "/cart", Some("t.PrevFormTag")),
            hit("a", "${next}", None),
            hit("a", "http://example.com/", None),
            hit("a", "nowhere.jsp", None),
        ];
        let r = resolve_hits(&hits, &mapping, &users, &index, &mut g).unwrap();
        assert_eq!(r.deferred.len(), 1);
        assert!(g.has_relationship(&list, &item, RelationshipKind::LinksTo));
        assert!(g.has_relationship(&item, &cart, RelationshipKind::ForwardsTo));
        assert!(!g.has_relationship(&list, &cart, RelationshipKind::ForwardsTo));
        let codes: Vec<_> = r.diagnostics.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, [codes::EXTERNAL_URL, codes::UNRESOLVED]);
    }
}
