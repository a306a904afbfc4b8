//! XML descriptor readers: web.xml, tag library descriptors, ejb-jar.xml and
//! faces-config.xml. Only the elements that name classes, URLs or tags are read.

use super::ConfigError;
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{DependencyGraph, Entity, EntityId, EntityKind};
use crate::location::{LineIndex, SourceLocation};
use roxmltree::{Document, Node};
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributeSpec {
    pub name: String,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagSpec {
    pub name: String,
    /// Dotted (or binary) name of the handler class as written.
    pub handler: String,
    pub attributes: Vec<AttributeSpec>,
    /// The `TagDefinition` entity.
    pub entity: EntityId,
    pub location: SourceLocation,
}

impl TagSpec {
    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagLibrary {
    pub path: String,
    pub config: EntityId,
    pub uri: Option<String>,
    pub short_name: Option<String>,
    pub tags: Vec<TagSpec>,
    pub diagnostics: Vec<Diagnostic>,
}

impl TagLibrary {
    pub fn tag(&self, name: &str) -> Option<&TagSpec> {
        self.tags.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServletDecl {
    pub name: String,
    pub class: Option<String>,
    pub jsp_file: Option<String>,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlPatternDecl {
    pub pattern: String,
    pub servlet: String,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EjbRefDecl {
    pub name: String,
    pub link: Option<String>,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WebXml {
    pub path: String,
    pub config: EntityId,
    pub servlets: Vec<ServletDecl>,
    pub mappings: Vec<UrlPatternDecl>,
    pub welcome_files: Vec<String>,
    /// `<taglib>` entries as (taglib-uri, taglib-location).
    pub taglibs: Vec<(String, String)>,
    pub ejb_refs: Vec<EjbRefDecl>,
    pub diagnostics: Vec<Diagnostic>,
}

/// A name bound to a class: an enterprise bean or a managed bean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BeanDecl {
    pub name: String,
    pub class: String,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EjbJar {
    pub path: String,
    pub config: EntityId,
    pub beans: Vec<BeanDecl>,
    pub ejb_refs: Vec<EjbRefDecl>,
}

fn add_config_entity(graph: &mut DependencyGraph, path: &str) -> Result<EntityId, ConfigError> {
    Ok(graph.add_entity(Entity::new(EntityKind::ConfigFile, path, SourceLocation::file_start(path)))?)
}

fn parse_xml<'a>(text: &'a str, path: &str) -> Result<Option<Document<'a>>, ConfigError> {
    if text.trim().is_empty() {
        return Ok(None);
    }
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    Document::parse_with_options(text, opts)
        .map(Some)
        .map_err(|e| ConfigError::Xml { path: path.to_string(), message: e.to_string() })
}

fn elements<'a, 'i>(n: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    n.children().filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn text_of(n: Node) -> String {
    n.descendants().filter(|d| d.is_text()).filter_map(|d| d.text()).collect::<String>().trim().to_string()
}

/// Trimmed text of the first child element with one of `names`.
fn child_text(n: Node, names: &[&str]) -> Option<String> {
    names
        .iter()
        .find_map(|name| elements(n, name).next())
        .map(text_of)
        .filter(|s| !s.is_empty())
}

struct Locator<'a> {
    path: &'a str,
    lines: LineIndex<'a>,
}

impl<'a> Locator<'a> {
    fn new(path: &'a str, text: &'a str) -> Self {
        Locator { path, lines: LineIndex::new(text) }
    }

    fn at(&self, n: Node) -> SourceLocation {
        SourceLocation::at(self.path, self.lines.pos(n.range().start))
    }
}

/// Reads servlet declarations and mappings, welcome files, taglib
/// locations and EJB references. The `ConfigFile` entity is created even
/// when the file is empty or malformed.
pub fn parse_web_xml(text: &str, path: &str, graph: &mut DependencyGraph) -> Result<WebXml, ConfigError> {
    let config = add_config_entity(graph, path)?;
    let mut out = WebXml {
        path: path.to_string(),
        config,
        servlets: Vec::new(),
        mappings: Vec::new(),
        welcome_files: Vec::new(),
        taglibs: Vec::new(),
        ejb_refs: Vec::new(),
        diagnostics: Vec::new(),
    };
    let Some(doc) = parse_xml(text, path)? else { return Ok(out) };
    let loc = Locator::new(path, text);
    for n in doc.descendants().filter(Node::is_element) {
        match n.tag_name().name() {
            "servlet" => match child_text(n, &["servlet-name"]) {
                Some(name) => out.servlets.push(ServletDecl {
                    name,
                    class: child_text(n, &["servlet-class"]),
                    jsp_file: child_text(n, &["jsp-file"]),
                    location: loc.at(n),
                }),
                None => out
                    .diagnostics
                    .push(Diagnostic::new(codes::XML_ERROR, "servlet without servlet-name").at(loc.at(n))),
            },
            "servlet-mapping" => {
                let Some(servlet) = child_text(n, &["servlet-name"]) else {
                    out.diagnostics
                        .push(Diagnostic::new(codes::XML_ERROR, "servlet-mapping without servlet-name").at(loc.at(n)));
                    continue;
                };
                for p in elements(n, "url-pattern") {
                    let pattern = text_of(p);
                    if !pattern.is_empty() {
                        out.mappings.push(UrlPatternDecl { pattern, servlet: servlet.clone(), location: loc.at(p) });
                    }
                }
            }
            "welcome-file" => {
                let f = text_of(n);
                if !f.is_empty() {
                    out.welcome_files.push(f);
                }
            }
            "taglib" => {
                if let (Some(uri), Some(location)) =
                    (child_text(n, &["taglib-uri"]), child_text(n, &["taglib-location"]))
                {
                    out.taglibs.push((uri, location));
                }
            }
            "ejb-ref" | "ejb-local-ref" => {
                if let Some(name) = child_text(n, &["ejb-ref-name"]) {
                    out.ejb_refs.push(EjbRefDecl { name, link: child_text(n, &["ejb-link"]), location: loc.at(n) });
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Reads a tag library descriptor. Each `<tag>` becomes a `TagDefinition`
/// entity under the descriptor's `ConfigFile` entity.
pub fn parse_tld(text: &str, path: &str, graph: &mut DependencyGraph) -> Result<TagLibrary, ConfigError> {
    let config = add_config_entity(graph, path)?;
    let mut lib =
        TagLibrary { path: path.to_string(), config, uri: None, short_name: None, tags: Vec::new(), diagnostics: Vec::new() };
    let Some(doc) = parse_xml(text, path)? else { return Ok(lib) };
    let loc = Locator::new(path, text);
    let root = doc.root_element();
    lib.uri = child_text(root, &["uri"]);
    lib.short_name = child_text(root, &["short-name", "shortname"]);
    let mut seen = BTreeSet::new();
    for t in elements(root, "tag") {
        let (Some(name), Some(handler)) = (child_text(t, &["name"]), child_text(t, &["tag-class", "tagclass"])) else {
            lib.diagnostics.push(Diagnostic::new(codes::XML_ERROR, "tag without name or tag class").at(loc.at(t)));
            continue;
        };
        if !seen.insert(name.clone()) {
            lib.diagnostics
                .push(Diagnostic::new(codes::XML_ERROR, format!("tag {name} declared twice; first kept")).at(loc.at(t)));
            continue;
        }
        let mut attributes: Vec<AttributeSpec> = Vec::new();
        for a in elements(t, "attribute") {
            let Some(aname) = child_text(a, &["name"]) else { continue };
            if attributes.iter().any(|x| x.name == aname) {
                lib.diagnostics.push(
                    Diagnostic::new(codes::XML_ERROR, format!("attribute {aname} of tag {name} declared twice"))
                        .at(loc.at(a)),
                );
                continue;
            }
            let required = child_text(a, &["required"])
                .map(|r| r.eq_ignore_ascii_case("true") || r.eq_ignore_ascii_case("yes"))
                .unwrap_or(false);
            attributes.push(AttributeSpec { name: aname, required });
        }
        let location = loc.at(t);
        let entity = graph.add_entity(
            Entity::new(EntityKind::TagDefinition, name.clone(), location.clone()).with_parent(lib.config.clone()),
        )?;
        lib.tags.push(TagSpec { name, handler, attributes, entity, location });
    }
    Ok(lib)
}

/// Reads bean-name to class pairs and EJB references from ejb-jar.xml.
pub fn parse_ejb_jar(text: &str, path: &str, graph: &mut DependencyGraph) -> Result<EjbJar, ConfigError> {
    let config = add_config_entity(graph, path)?;
    let mut out = EjbJar { path: path.to_string(), config, beans: Vec::new(), ejb_refs: Vec::new() };
    let Some(doc) = parse_xml(text, path)? else { return Ok(out) };
    let loc = Locator::new(path, text);
    for n in doc.descendants().filter(Node::is_element) {
        match n.tag_name().name() {
            "session" | "entity" | "message-driven" => {
                if let (Some(name), Some(class)) = (child_text(n, &["ejb-name"]), child_text(n, &["ejb-class"])) {
                    out.beans.push(BeanDecl { name, class, location: loc.at(n) });
                }
            }
            "ejb-ref" | "ejb-local-ref" => {
                if let Some(name) = child_text(n, &["ejb-ref-name"]) {
                    out.ejb_refs.push(EjbRefDecl { name, link: child_text(n, &["ejb-link"]), location: loc.at(n) });
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Managed beans declared in faces-config.xml.
pub fn parse_faces_config(
    text: &str,
    path: &str,
    graph: &mut DependencyGraph,
) -> Result<(EntityId, Vec<BeanDecl>), ConfigError> {
    let config = add_config_entity(graph, path)?;
    let Some(doc) = parse_xml(text, path)? else { return Ok((config, Vec::new())) };
    let loc = Locator::new(path, text);
    let beans = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "managed-bean")
        .filter_map(|n| {
            Some(BeanDecl {
                name: child_text(n, &["managed-bean-name"])?,
                class: child_text(n, &["managed-bean-class"])?,
                location: loc.at(n),
            })
        })
        .collect();
    Ok((config, beans))
}
