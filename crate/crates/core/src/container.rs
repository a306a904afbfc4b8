//! Dependencies created by the container at run time: lifecycle callbacks of
//! servlets, tag handlers and enterprise beans, attribute setters called for
//! custom tag uses, and naming-service lookups.

use crate::config::{TagSpec, Target, UrlMappingTable};
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{
    Analyzer, DependencyGraph, Entity, EntityId, EntityKind, GraphError, Provenance, Relationship, RelationshipKind,
};
use crate::java::ast::AnnotationUse;
use crate::java::index::method_entity_name;
use crate::java::{collect_lookup_sites, ProjectIndex, SourceUnit};
use crate::jsp::{capitalize_property, NodeKind, TagForm, TemplatePage};
use crate::location::SourceLocation;
use crate::tags::{HandlerUse, HandlerUsers};
use serde::Serialize;
use std::collections::BTreeMap;

pub const WEB_CONTAINER: &str = "WebContainer";
pub const EJB_CONTAINER: &str = "EjbContainer";

const SERVLET_BASES: &[&str] = &["HttpServlet", "GenericServlet", "Servlet", "HttpJspBase", "HttpJspPage", "JspPage"];
const TAG_BASES: &[&str] = &["Tag", "TagSupport", "BodyTagSupport", "BodyTag", "IterationTag"];
/// Standard tag libraries whose handlers live outside the project.
const STANDARD_TAGLIBS: &[&str] = &["http://java.sun.com/jsp/jstl/", "http://java.sun.com/jstl/", "jakarta.tags."];
const HTTP_METHODS: &[&str] = &["doGet", "doPost", "doPut", "doDelete", "doHead", "doOptions", "doTrace"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    Servlet,
    TagHandler,
    Ejb,
}

/// Callbacks the container invokes, in order. Tag setters come first and
/// are not listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LifecycleModel {
    pub kind: ComponentKind,
    pub callbacks: Vec<(&'static str, usize)>,
}

impl LifecycleModel {
    pub fn of(kind: ComponentKind) -> Self {
        let callbacks = match kind {
            ComponentKind::Servlet => vec![("init", 1), ("service", 2), ("destroy", 0)],
            ComponentKind::TagHandler => vec![("doStartTag", 0), ("doEndTag", 0)],
            ComponentKind::Ejb => vec![("ejbCreate", 0), ("ejbRemove", 0)],
        };
        LifecycleModel { kind, callbacks }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvidedAttribute {
    pub name: String,
    pub value: String,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagUse {
    pub page: EntityId,
    pub page_url: String,
    pub spec: TagSpec,
    pub attributes: Vec<ProvidedAttribute>,
    pub location: SourceLocation,
}

pub fn is_tag_handler(index: &ProjectIndex, q: &str) -> bool {
    index.ancestor_simple_names(q).iter().any(|n| TAG_BASES.contains(&n.as_str()))
}

fn has_annotation(anns: &[AnnotationUse], names: &[&str]) -> bool {
    anns.iter().any(|a| names.contains(&a.simple_name()))
}

/// Extends a servlet base class or carries the servlet annotation.
pub fn is_servlet(index: &ProjectIndex, q: &str) -> bool {
    let Some(c) = index.class(q) else { return false };
    has_annotation(&c.annotations, &["WebServlet"])
        || index.ancestor_simple_names(q).iter().any(|n| SERVLET_BASES.contains(&n.as_str()))
}

/// Custom tag uses whose prefix binds to a known tag library.
pub fn find_tag_uses(pages: &[(EntityId, &TemplatePage)], mapping: &UrlMappingTable) -> (Vec<TagUse>, Vec<Diagnostic>) {
    let mut uses = Vec::new();
    let mut diags = Vec::new();
    for (page_id, page) in pages {
        let prefixes: BTreeMap<String, String> = page.taglibs().into_iter().map(|(p, uri, _)| (p, uri)).collect();
        for n in page.nodes.iter().filter(|n| n.kind == NodeKind::CustomTag && n.form != TagForm::Close) {
            let prefix = n.prefix().unwrap_or_default();
            let uri = prefixes.get(prefix);
            if uri.is_some_and(|u| STANDARD_TAGLIBS.iter().any(|s| u.starts_with(s))) {
                continue;
            }
            let Some(lib) = uri.and_then(|uri| mapping.bind_taglib(uri, &page.url)) else {
                diags.push(
                    Diagnostic::new(codes::UNBOUND_PREFIX, format!("no tag library found for prefix {prefix} of <{}>", n.name))
                        .at(n.location.clone()),
                );
                continue;
            };
            let Some(spec) = lib.tag(n.local_name()) else {
                diags.push(
                    Diagnostic::new(codes::UNKNOWN_TAG, format!("{} declares no tag {}", lib.path, n.local_name()))
                        .at(n.location.clone()),
                );
                continue;
            };
            let mut attributes = Vec::new();
            for a in &n.attributes {
                if spec.attribute(&a.name).is_none() {
                    diags.push(
                        Diagnostic::new(codes::UNKNOWN_ATTRIBUTE, format!("<{}> has no attribute {}", n.name, a.name))
                            .at(a.value_location.clone()),
                    );
                    continue;
                }
                attributes.push(ProvidedAttribute {
                    name: a.name.clone(),
                    value: a.value.clone(),
                    location: a.value_location.clone(),
                });
            }
            for req in spec.attributes.iter().filter(|r| r.required) {
                if n.attr(&req.name).is_none() {
                    diags.push(
                        Diagnostic::new(
                            codes::MISSING_REQUIRED_ATTRIBUTE,
                            format!("<{}> lacks required attribute {}", n.name, req.name),
                        )
                        .at(n.location.clone()),
                    );
                }
            }
            uses.push(TagUse {
                page: page_id.clone(),
                page_url: page.url.clone(),
                spec: spec.clone(),
                attributes,
                location: n.location.clone(),
            });
        }
    }
    (uses, diags)
}

fn container_entity(graph: &mut DependencyGraph, name: &str) -> Result<EntityId, GraphError> {
    graph.add_entity(Entity::new(EntityKind::Container, name, SourceLocation::nowhere()))
}

/// Edge to `q.name/arity` when the project declares it (here or in a
/// project superclass), else to an unresolved target of that name.
fn callback_edge(
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
    source: &EntityId,
    q: &str,
    (name, arity): (&str, usize),
    kind: RelationshipKind,
    ev: Provenance,
) -> Result<(), GraphError> {
    match index.find_method(q, name, arity) {
        Some(m) => graph.add_relationship(Relationship::new(source.clone(), m.id.clone(), kind, ev)),
        None => graph.add_unresolved_relationship(source.clone(), &method_entity_name(q, name, arity), kind, ev).map(|_| ()),
    }
}

/// For each use: one `AttributeSetter` edge per provided attribute and
/// `LifecycleCallback` edges to `doStartTag` and `doEndTag`, all from the
/// page. Returns the uses grouped by handler class for write-site
/// attribution.
pub fn emit_tag_lifecycle_edges(
    uses: &[TagUse],
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
) -> Result<(HandlerUsers, Vec<Diagnostic>), GraphError> {
    let mut users = HandlerUsers::new();
    let mut diags = Vec::new();
    for u in uses {
        let q = match index.class_by_binary_name(&u.spec.handler) {
            Some(c) if !is_tag_handler(index, &c.qname) => {
                diags.push(
                    Diagnostic::new(codes::NOT_A_TAG_HANDLER, format!("{} does not implement a tag interface", c.qname))
                        .at(u.location.clone()),
                );
                continue;
            }
            Some(c) => c.qname.clone(),
            None => {
                diags.push(
                    Diagnostic::new(codes::MISSING_CLASS, format!("tag handler {} is not part of the project", u.spec.handler))
                        .at(u.location.clone()),
                );
                u.spec.handler.replace('$', ".")
            }
        };
        for a in &u.attributes {
            let setter = format!("set{}", capitalize_property(&a.name));
            let ev = Provenance::new(Analyzer::ContainerRules, a.location.clone(), format!("<{}> {}=\"{}\"", u.spec.name, a.name, a.value));
            callback_edge(index, graph, &u.page, &q, (&setter, 1), RelationshipKind::AttributeSetter, ev)?;
        }
        for cb in LifecycleModel::of(ComponentKind::TagHandler).callbacks {
            let ev = Provenance::new(Analyzer::ContainerRules, u.location.clone(), format!("<{}> {}", u.spec.name, cb.0));
            callback_edge(index, graph, &u.page, &q, cb, RelationshipKind::LifecycleCallback, ev)?;
        }
        users.entry(q).or_default().push(HandlerUse {
            page: u.page.clone(),
            url: u.page_url.clone(),
            attributes: u.attributes.iter().map(|a| (a.name.clone(), a.value.clone())).collect(),
        });
    }
    Ok((users, diags))
}

/// `LifecycleCallback` edges from the web container to servlet entry
/// points: `init` and `service` always, `destroy` and `doGet`-style
/// handlers when declared. A class generated from a page gets one edge to
/// the page itself.
pub fn emit_servlet_lifecycle_edges(
    units: &[SourceUnit],
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
) -> Result<usize, GraphError> {
    let mut servlets = Vec::new();
    let mut pages = Vec::new();
    for c in index.classes() {
        match &units[c.unit].origin {
            Some(o) => pages.push(o.page.clone()),
            None if is_servlet(index, &c.qname) => servlets.push(c.qname.clone()),
            None => {}
        }
    }
    if servlets.is_empty() && pages.is_empty() {
        return Ok(0);
    }
    let web = container_entity(graph, WEB_CONTAINER)?;
    let mut n = 0;
    for page in pages {
        let ev = Provenance::new(Analyzer::ContainerRules, SourceLocation::nowhere(), "page service");
        graph.add_relationship(Relationship::new(web.clone(), page, RelationshipKind::LifecycleCallback, ev))?;
        n += 1;
    }
    for q in servlets {
        let c = index.class(&q).expect("indexed");
        let loc = SourceLocation::at(&units[c.unit].unit.path, units[c.unit].unit.classes[c.decl].pos);
        let ev = |what: &str| Provenance::new(Analyzer::ContainerRules, loc.clone(), format!("servlet {what}"));
        let init = if index.find_method(&q, "init", 1).is_none() && index.find_method(&q, "init", 0).is_some() {
            ("init", 0)
        } else {
            ("init", 1)
        };
        let mut callbacks = vec![init, ("service", 2)];
        for opt in std::iter::once("destroy").chain(HTTP_METHODS.iter().copied()) {
            let arity = if opt == "destroy" { 0 } else { 2 };
            if index.find_method(&q, opt, arity).is_some() {
                callbacks.push((opt, arity));
            }
        }
        for cb in callbacks {
            callback_edge(index, graph, &web, &q, cb, RelationshipKind::LifecycleCallback, ev(cb.0))?;
            n += 1;
        }
    }
    Ok(n)
}

/// Creation and removal callbacks of beans known to the bean table:
/// `ejbCreate`/`ejbRemove` and methods annotated `@PostConstruct` or
/// `@PreDestroy`, when declared.
pub fn emit_ejb_lifecycle_edges(
    units: &[SourceUnit],
    index: &ProjectIndex,
    mapping: &UrlMappingTable,
    graph: &mut DependencyGraph,
) -> Result<usize, GraphError> {
    let mut targets = Vec::new();
    for (name, m) in mapping.ejbs() {
        let Target::Entity(id) = &m.target else { continue };
        let Some(c) = index.classes().find(|c| &c.id == id) else { continue };
        for info in c.methods.values() {
            let by_name = matches!(info.name.as_str(), "ejbCreate" | "ejbRemove");
            if by_name || has_annotation(&info.annotations, &["PostConstruct", "PreDestroy"]) {
                let loc = SourceLocation::at(&units[c.unit].unit.path, info.pos);
                targets.push((info.id.clone(), loc, format!("bean {name} {}", info.name)));
            }
        }
    }
    if targets.is_empty() {
        return Ok(0);
    }
    let ejb = container_entity(graph, EJB_CONTAINER)?;
    let n = targets.len();
    for (id, loc, note) in targets {
        let ev = Provenance::new(Analyzer::ContainerRules, loc, note);
        graph.add_relationship(Relationship::new(ejb.clone(), id, RelationshipKind::LifecycleCallback, ev))?;
    }
    Ok(n)
}

fn looks_like_jndi(name: &str) -> bool {
    name.starts_with("java:") || name.starts_with("ejb/")
}

/// `JndiLookup` edges from the method holding a literal `lookup(...)`
/// call to the bean class bound to that name.
pub fn emit_jndi_edges(
    units: &[SourceUnit],
    index: &ProjectIndex,
    mapping: &UrlMappingTable,
    graph: &mut DependencyGraph,
) -> Result<Vec<Diagnostic>, GraphError> {
    let mut diags = Vec::new();
    for su in units {
        for site in collect_lookup_sites(&su.unit) {
            let Some(m) = index.class(&site.class).and_then(|c| c.methods.get(&(site.method.clone(), site.arity))) else {
                continue;
            };
            let source = su.origin.as_ref().map(|o| o.page.clone()).unwrap_or_else(|| m.id.clone());
            let (Some(name), Some((pos, _))) = (&site.name, site.literal_pos) else {
                if let Some(loc) = su.locate(site.call_pos) {
                    diags.push(Diagnostic::new(codes::DYNAMIC_LOOKUP, "lookup name is computed at run time").at(loc));
                }
                continue;
            };
            let Some(loc) = su.locate(pos) else { continue };
            let ev = Provenance::new(Analyzer::ContainerRules, loc.clone(), format!("lookup(\"{name}\")"));
            match mapping.resolve_jndi(name).map(|t| &t.target) {
                Some(Target::Entity(id)) => {
                    graph.add_relationship(Relationship::new(source, id.clone(), RelationshipKind::JndiLookup, ev))?;
                }
                Some(Target::Missing(class)) => {
                    graph.add_unresolved_relationship(source, class, RelationshipKind::JndiLookup, ev)?;
                }
                None if looks_like_jndi(name) => {
                    diags.push(Diagnostic::new(codes::UNRESOLVED, format!("no bean bound to {name}")).at(loc));
                    graph.add_unresolved_relationship(source, name, RelationshipKind::JndiLookup, ev)?;
                }
                None => {}
            }
        }
    }
    Ok(diags)
}
