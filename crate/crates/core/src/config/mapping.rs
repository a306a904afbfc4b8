//! The merged URL mapping table plus the name tables used for tag, bean and
//! naming-service resolution.

use super::{AnnotationFacts, BeanDecl, EjbJar, TagLibrary, WebXml};
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::EntityId;
use crate::java::ProjectIndex;
use crate::location::SourceLocation;
use crate::url::normalize_url;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Target {
    Entity(EntityId),
    /// Named in configuration but absent from the project.
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MappingSource {
    Descriptor,
    Annotation,
    /// Implicit: a page is reachable by its own path.
    Page,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MappedTarget {
    pub target: Target,
    /// Class name or page URL, for messages and reports.
    pub name: String,
    pub source: MappingSource,
    pub location: SourceLocation,
}

#[derive(Debug, Default)]
pub struct MappingParts {
    pub web_xml: Vec<WebXml>,
    pub ejb_jars: Vec<EjbJar>,
    pub taglibs: Vec<TagLibrary>,
    pub managed_beans: Vec<BeanDecl>,
    pub annotations: AnnotationFacts,
    /// Registered pages as (web URL, entity).
    pub pages: Vec<(String, EntityId)>,
}

#[derive(Debug, Default, Serialize)]
pub struct UrlMappingTable {
    exact: BTreeMap<String, MappedTarget>,
    /// Keyed by the pattern without the trailing `/*`; `""` is `/*`.
    prefix: BTreeMap<String, MappedTarget>,
    /// Keyed by the extension without `*.`.
    extension: BTreeMap<String, MappedTarget>,
    welcome_files: Vec<String>,
    pub taglibs: Vec<TagLibrary>,
    taglib_locations: BTreeMap<String, String>,
    ejbs: BTreeMap<String, MappedTarget>,
    ejb_refs: BTreeMap<String, String>,
    beans: BTreeMap<String, String>,
    servlet_classes: BTreeSet<String>,
    pub diagnostics: Vec<Diagnostic>,
}

enum Pattern {
    Exact(String),
    Prefix(String),
    Extension(String),
    Default,
}

fn classify(pattern: &str) -> Pattern {
    let p = pattern.trim();
    if p == "/" || p.is_empty() {
        return Pattern::Default;
    }
    if let Some(ext) = p.strip_prefix("*.") {
        return Pattern::Extension(ext.to_string());
    }
    let p = if p.starts_with('/') { p.to_string() } else { format!("/{p}") };
    match p.strip_suffix("/*") {
        Some(prefix) => Pattern::Prefix(prefix.to_string()),
        None => Pattern::Exact(p),
    }
}

fn class_target(index: &ProjectIndex, name: &str, location: &SourceLocation, diags: &mut Vec<Diagnostic>) -> (Target, String) {
    match index.class_by_binary_name(name) {
        Some(c) => (Target::Entity(c.id.clone()), c.qname.clone()),
        None => {
            diags.push(
                Diagnostic::new(codes::MISSING_CLASS, format!("class {name} is not part of the project"))
                    .at(location.clone()),
            );
            (Target::Missing(name.to_string()), name.to_string())
        }
    }
}

impl UrlMappingTable {
    fn slot(&mut self, pattern: &str) -> Option<&mut BTreeMap<String, MappedTarget>> {
        match classify(pattern) {
            Pattern::Exact(_) => Some(&mut self.exact),
            Pattern::Prefix(_) => Some(&mut self.prefix),
            Pattern::Extension(_) => Some(&mut self.extension),
            Pattern::Default => None,
        }
    }

    fn insert(&mut self, pattern: &str, mapped: MappedTarget) {
        let key = match classify(pattern) {
            Pattern::Exact(k) | Pattern::Prefix(k) | Pattern::Extension(k) => k,
            Pattern::Default => {
                self.diagnostics.push(
                    Diagnostic::new(codes::UNRESOLVED, format!("default-servlet pattern {pattern:?} ignored"))
                        .at(mapped.location.clone()),
                );
                return;
            }
        };
        let Some(slot) = self.slot(pattern) else { return };
        let Some(existing) = slot.get(&key) else {
            slot.insert(key, mapped);
            return;
        };
        // a page URL already claimed by a servlet mapping stays with the servlet
        if mapped.source == MappingSource::Page {
            return;
        }
        let code = if existing.source == mapped.source { codes::DUPLICATE_PATTERN } else { codes::MAPPING_CONFLICT };
        let msg = format!(
            "url pattern {pattern:?} claimed by {} and {}; keeping {}",
            existing.name, mapped.name, existing.name
        );
        self.diagnostics.push(Diagnostic::new(code, msg).at(mapped.location.clone()));
    }

    /// Resolves a normalized web URL: exact match, then the longest prefix
    /// pattern, then an extension pattern, then welcome files for directories.
    pub fn lookup(&self, url: &str) -> Option<&MappedTarget> {
        if let Some(m) = self.exact.get(url) {
            return Some(m);
        }
        let prefix = self
            .prefix
            .iter()
            .filter(|(p, _)| p.is_empty() || url == p.as_str() || url.starts_with(&format!("{p}/")))
            .max_by_key(|(p, _)| p.len())
            .map(|(_, m)| m);
        if prefix.is_some() {
            return prefix;
        }
        let last = url.rsplit('/').next().unwrap_or("");
        if let Some((_, ext)) = last.rsplit_once('.') {
            if let Some(m) = self.extension.get(ext) {
                return Some(m);
            }
            return None;
        }
        let dir = if url.ends_with('/') { url.to_string() } else { format!("{url}/") };
        self.welcome_files.iter().find_map(|w| self.exact.get(&format!("{dir}{w}")))
    }

    /// The entry registered for exactly this pattern as written in a descriptor.
    pub fn pattern(&self, pattern: &str) -> Option<&MappedTarget> {
        match classify(pattern) {
            Pattern::Exact(k) => self.exact.get(&k),
            Pattern::Prefix(k) => self.prefix.get(&k),
            Pattern::Extension(k) => self.extension.get(&k),
            Pattern::Default => None,
        }
    }

    /// First exact URL that maps to `id`, used as the base for relative
    /// references written by that component.
    pub fn url_of(&self, id: &EntityId) -> Option<&str> {
        self.exact.iter().find(|(_, m)| m.target == Target::Entity(id.clone())).map(|(k, _)| k.as_str())
    }

    /// Every pattern in precedence order: exact, prefix, extension.
    pub fn entries(&self) -> Vec<(String, &MappedTarget)> {
        let mut out: Vec<(String, &MappedTarget)> = self.exact.iter().map(|(k, v)| (k.clone(), v)).collect();
        out.extend(self.prefix.iter().map(|(k, v)| (format!("{k}/*"), v)));
        out.extend(self.extension.iter().map(|(k, v)| (format!("*.{k}"), v)));
        out
    }

    /// Finds the tag library a `taglib` directive refers to: by the
    /// descriptor's `<uri>`, then through web.xml `<taglib>` entries, then
    /// by treating the uri as a path to the descriptor.
    pub fn bind_taglib(&self, uri: &str, page_url: &str) -> Option<&TagLibrary> {
        let uri = uri.trim();
        if let Some(lib) = self.taglibs.iter().find(|l| l.uri.as_deref() == Some(uri)) {
            return Some(lib);
        }
        let by_path = |p: &str| {
            let p = normalize_url(p, page_url)?;
            let rel = p.trim_start_matches('/');
            if rel.is_empty() {
                return None;
            }
            self.taglibs.iter().find(|l| l.path == rel || l.path.ends_with(&format!("/{rel}")))
        };
        if let Some(loc) = self.taglib_locations.get(uri) {
            if let Some(lib) = by_path(loc) {
                return Some(lib);
            }
        }
        if crate::url::is_external(uri) {
            return None;
        }
        by_path(uri)
    }

    /// Resolves a naming-service name (`java:comp/env/ejb/Hello`, `ejb/Hello`
    /// or `Hello`) to a bean class through EJB references and bean names.
    pub fn resolve_jndi(&self, name: &str) -> Option<&MappedTarget> {
        let n = name.trim();
        let n = n.strip_prefix("java:comp/env/").unwrap_or(n);
        if let Some(link) = self.ejb_refs.get(n) {
            let link = link.rsplit('#').next().unwrap_or(link);
            if let Some(t) = self.ejbs.get(link) {
                return Some(t);
            }
        }
        let last = n.rsplit('/').next().unwrap_or(n);
        let last = last.split('!').next().unwrap_or(last);
        self.ejbs.get(n).or_else(|| self.ejbs.get(last))
    }

    pub fn ejbs(&self) -> impl Iterator<Item = (&String, &MappedTarget)> {
        self.ejbs.iter()
    }

    /// Class of a globally configured bean (managed beans and named beans).
    pub fn bean_class(&self, name: &str) -> Option<&str> {
        self.beans.get(name).map(String::as_str)
    }

    pub fn bean_names(&self) -> impl Iterator<Item = &str> {
        self.beans.keys().map(String::as_str)
    }

    /// Classes declared as servlets by a descriptor or annotation.
    pub fn is_declared_servlet(&self, qname: &str) -> bool {
        self.servlet_classes.contains(qname)
    }

    pub fn welcome_files(&self) -> &[String] {
        &self.welcome_files
    }
}

/// Merges descriptor, annotation and page facts. Descriptors are applied
/// first, so on a conflict the descriptor wins and the annotation is
/// reported. Pages are addressable by their own URL unless a servlet
/// mapping already claims it.
pub fn build_mapping(parts: MappingParts, index: &ProjectIndex) -> UrlMappingTable {
    let mut t = UrlMappingTable::default();
    let pages: BTreeMap<&str, &EntityId> = parts.pages.iter().map(|(u, id)| (u.as_str(), id)).collect();
    let mut diags = Vec::new();

    for w in &parts.web_xml {
        t.diagnostics.extend(w.diagnostics.iter().cloned());
        let mut servlets: BTreeMap<&str, (Target, String)> = BTreeMap::new();
        for s in &w.servlets {
            let resolved = if let Some(class) = &s.class {
                let r = class_target(index, class, &s.location, &mut diags);
                if let Target::Entity(_) = r.0 {
                    t.servlet_classes.insert(r.1.clone());
                }
                r
            } else if let Some(jsp) = &s.jsp_file {
                let url = normalize_url(jsp, "/").unwrap_or_else(|| jsp.clone());
                match pages.get(url.as_str()) {
                    Some(id) => (Target::Entity((*id).clone()), url),
                    None => {
                        diags.push(
                            Diagnostic::new(codes::UNRESOLVED, format!("jsp-file {jsp} of servlet {} not found", s.name))
                                .at(s.location.clone()),
                        );
                        (Target::Missing(url.clone()), url)
                    }
                }
            } else {
                continue;
            };
            servlets.entry(s.name.as_str()).or_insert(resolved);
        }
        for m in &w.mappings {
            let Some((target, name)) = servlets.get(m.servlet.as_str()) else {
                diags.push(
                    Diagnostic::new(codes::UNRESOLVED, format!("url pattern {} names undeclared servlet {}", m.pattern, m.servlet))
                        .at(m.location.clone()),
                );
                continue;
            };
            t.insert(
                &m.pattern,
                MappedTarget {
                    target: target.clone(),
                    name: name.clone(),
                    source: MappingSource::Descriptor,
                    location: m.location.clone(),
                },
            );
        }
        for f in &w.welcome_files {
            if !t.welcome_files.contains(f) {
                t.welcome_files.push(f.clone());
            }
        }
        for (uri, loc) in &w.taglibs {
            t.taglib_locations.entry(uri.clone()).or_insert_with(|| loc.clone());
        }
        for r in &w.ejb_refs {
            if let Some(link) = &r.link {
                t.ejb_refs.entry(r.name.clone()).or_insert_with(|| link.clone());
            }
        }
    }

    for s in &parts.annotations.servlets {
        let Some(c) = index.class(&s.class) else { continue };
        t.servlet_classes.insert(c.qname.clone());
        for p in &s.patterns {
            t.insert(
                p,
                MappedTarget {
                    target: Target::Entity(c.id.clone()),
                    name: c.qname.clone(),
                    source: MappingSource::Annotation,
                    location: s.location.clone(),
                },
            );
        }
    }

    for (url, id) in &parts.pages {
        t.insert(
            url,
            MappedTarget {
                target: Target::Entity(id.clone()),
                name: url.clone(),
                source: MappingSource::Page,
                location: SourceLocation::nowhere(),
            },
        );
    }

    for j in &parts.ejb_jars {
        for b in &j.beans {
            if t.ejbs.contains_key(&b.name) {
                continue;
            }
            let (target, name) = class_target(index, &b.class, &b.location, &mut diags);
            t.ejbs.insert(
                b.name.clone(),
                MappedTarget { target, name, source: MappingSource::Descriptor, location: b.location.clone() },
            );
        }
        for r in &j.ejb_refs {
            if let Some(link) = &r.link {
                t.ejb_refs.entry(r.name.clone()).or_insert_with(|| link.clone());
            }
        }
    }
    for b in &parts.annotations.ejbs {
        let Some(c) = index.class(&b.class) else { continue };
        t.ejbs.entry(b.name.clone()).or_insert_with(|| MappedTarget {
            target: Target::Entity(c.id.clone()),
            name: c.qname.clone(),
            source: MappingSource::Annotation,
            location: b.location.clone(),
        });
    }

    for b in &parts.managed_beans {
        t.beans.entry(b.name.clone()).or_insert_with(|| b.class.clone());
    }
    for b in &parts.annotations.managed_beans {
        t.beans.entry(b.name.clone()).or_insert_with(|| b.class.clone());
    }

    t.taglibs = parts.taglibs;
    for lib in &t.taglibs {
        t.diagnostics.extend(lib.diagnostics.iter().cloned());
    }
    t.diagnostics.extend(parts.annotations.diagnostics.iter().cloned());
    t.diagnostics.extend(diags);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::descriptors::tests::{PREVFORM_TLD, WEB_XML};
    use crate::config::{collect_annotations, parse_tld, parse_web_xml};
    use crate::graph::{DependencyGraph, EntityKind, UnresolvedPolicy};
    use crate::java::{parse_unit, SourceUnit};
    use proptest::prelude::*;

    fn page(url: &str) -> (String, EntityId) {
        (url.to_string(), EntityId::derive(EntityKind::ServerPage, url, &format!("web{url}")))
    }

    fn setup(extra_java: &[(&str, &str)]) -> (UrlMappingTable, ProjectIndex) {
        let mut srcs = vec![("src/shop/CartServlet.java", "package shop; public class CartServlet extends HttpServlet {}")];
        srcs.extend_from_slice(extra_java);
        let units: Vec<_> = srcs.iter().map(|(p, s)| SourceUnit::plain(parse_unit(s, p).unwrap().unit)).collect();
        let index = ProjectIndex::build(&units);
        let mut g = DependencyGraph::new(UnresolvedPolicy::Drop);
        let parts = MappingParts {
            web_xml: vec![parse_web_xml(WEB_XML, "web/WEB-INF/web.xml", &mut g).unwrap()],
            taglibs: vec![parse_tld(PREVFORM_TLD, "web/WEB-INF/tlds/petstore.tld", &mut g).unwrap()],
            annotations: collect_annotations(&units, &index),
            pages: vec![page("/index.jsp"), page("/cart.jsp"), page("/legacy.jsp"), page("/shop/index.jsp")],
            ..Default::default()
        };
        (build_mapping(parts, &index), index)
    }

    #[test]
    fn descriptor_rows_resolve_to_declared_class() {
        let (t, index) = setup(&[]);
        let cart = &index.class("shop.CartServlet").unwrap().id;
        for pat in ["/cart", "/shop/*"] {
            assert_eq!(t.pattern(pat).unwrap().target, Target::Entity(cart.clone()), "{pat}");
        }
        assert_eq!(t.lookup("/cart").unwrap().name, "shop.CartServlet");
        assert_eq!(t.lookup("/old").unwrap().name, "/legacy.jsp");
        assert!(t.is_declared_servlet("shop.CartServlet"));
        assert!(t.diagnostics.is_empty(), "{:?}", t.diagnostics);
    }

    #[test]
    fn precedence_exact_prefix_extension_welcome() {
        let (t, _) = setup(&[]);
        // exact page beats the wildcard it falls under
        assert_eq!(t.lookup("/shop/index.jsp").unwrap().name, "/shop/index.jsp");
        assert_eq!(t.lookup("/shop/cart").unwrap().name, "shop.CartServlet");
        assert_eq!(t.lookup("/cart.jsp").unwrap().name, "/cart.jsp");
        assert_eq!(t.lookup("/").unwrap().name, "/index.jsp");
        assert!(t.lookup("/missing.jsp").is_none());
    }

    #[test]
    fn descriptor_wins_over_annotation() {
        let (t, _) = setup(&[(
            "src/shop/Other.java",
            "package shop; @WebServlet({\"/cart\", \"/other\"}) public class Other extends HttpServlet {}",
        )]);
        assert_eq!(t.lookup("/cart").unwrap().name, "shop.CartServlet");
        assert_eq!(t.lookup("/other").unwrap().source, MappingSource::Annotation);
        assert_eq!(t.diagnostics.iter().filter(|d| d.code == codes::MAPPING_CONFLICT).count(), 1);
    }

    #[test]
    fn duplicate_descriptor_pattern_first_wins() {
        let xml = r#"<web-app>
<servlet><servlet-name>A</servlet-name><servlet-class>A</servlet-class></servlet>
<servlet><servlet-name>B</servlet-name><servlet-class>B</servlet-class></servlet>
<servlet-mapping><servlet-name>A</servlet-name><url-pattern>/x</url-pattern></servlet-mapping>
<servlet-mapping><servlet-name>B</servlet-name><url-pattern>/x</url-pattern></servlet-mapping>
</web-app>"#;
        let units: Vec<_> = [("A.java", "class A {}"), ("B.java", "class B {}")]
            .iter()
            .map(|(p, s)| SourceUnit::plain(parse_unit(s, p).unwrap().unit))
            .collect();
        let index = ProjectIndex::build(&units);
        let mut g = DependencyGraph::new(UnresolvedPolicy::Drop);
        let parts = MappingParts { web_xml: vec![parse_web_xml(xml, "web.xml", &mut g).unwrap()], ..Default::default() };
        let t = build_mapping(parts, &index);
        assert_eq!(t.lookup("/x").unwrap().name, "A");
        assert_eq!(t.diagnostics.iter().filter(|d| d.code == codes::DUPLICATE_PATTERN).count(), 1);
    }

    #[test]
    fn taglib_binding_and_jndi() {
        let (t, _) = setup(&[]);
        let by_uri = t.bind_taglib("http://java.sun.com/blueprints/petstore/taglib", "/index.jsp").unwrap();
        assert_eq!(by_uri.path, "web/WEB-INF/tlds/petstore.tld");
        assert_eq!(t.bind_taglib("/petstore", "/index.jsp").unwrap().path, by_uri.path);
        assert_eq!(t.bind_taglib("/WEB-INF/tlds/petstore.tld", "/a/b.jsp").unwrap().path, by_uri.path);
        assert_eq!(t.bind_taglib("../WEB-INF/tlds/petstore.tld", "/a/b.jsp").unwrap().path, by_uri.path);
        assert!(t.bind_taglib("http://example.com/other", "/index.jsp").is_none());
        assert!(t.resolve_jndi("java:comp/env/ejb/Hello").is_none());
    }

    // Reference matcher written independently of the table: scan every
    // pattern and rank by (kind, length).
    fn oracle(patterns: &[String], url: &str) -> Option<usize> {
        let mut best: Option<(u8, usize, usize)> = None;
        for (i, p) in patterns.iter().enumerate() {
            let rank = if let Some(ext) = p.strip_prefix("*.") {
                let last = url.rsplit('/').next().unwrap();
                (last.contains('.') && last.rsplit('.').next() == Some(ext)).then_some((1, 0))
            } else if let Some(pre) = p.strip_suffix("/*") {
                (url == pre || url.starts_with(&format!("{pre}/")) || pre.is_empty()).then_some((2, pre.len()))
            } else {
                (url == p).then_some((3, p.len()))
            };
            if let Some((k, len)) = rank {
                if best.map(|(bk, bl, _)| (k, len) > (bk, bl)).unwrap_or(true) {
                    best = Some((k, len, i));
                }
            }
        }
        best.map(|(_, _, i)| i)
    }

    proptest! {
        #[test]
        fn lookup_matches_precedence_oracle(
            raw in proptest::collection::btree_set("(/[ab]{1,2}){0,3}(/\\*|\\.x)?|\\*\\.(x|y)", 1..8),
            url in "(/[ab]{1,2}){1,4}(\\.x|\\.y)?",
        ) {
            let patterns: Vec<String> = raw.into_iter().filter(|p| p != "/" && !p.is_empty()).collect();
            let mut t = UrlMappingTable::default();
            for (i, p) in patterns.iter().enumerate() {
                t.insert(p, MappedTarget {
                    target: Target::Missing(i.to_string()),
                    name: i.to_string(),
                    source: MappingSource::Descriptor,
                    location: SourceLocation::nowhere(),
                });
            }
            let got = t.lookup(&url).map(|m| m.name.parse::<usize>().unwrap());
            prop_assert_eq!(got, oracle(&patterns, &url));
        }
    }
}
