//! Whole-project analysis: file discovery, the analyzer sequence and the
//! summary report.

use crate::config::{
    build_mapping, collect_annotations, parse_ejb_jar, parse_faces_config, parse_tld, parse_web_xml, ConfigError,
    MappingParts,
};
use crate::container::{
    emit_ejb_lifecycle_edges, emit_jndi_edges, emit_servlet_lifecycle_edges, emit_tag_lifecycle_edges, find_tag_uses,
};
use crate::diagnostics::{codes, Diagnostic};
use crate::el::{analyze_page_el, classify_literals, java_literals, template_literals, ElScope, LiteralClassification};
use crate::graph::{DependencyGraph, EntityId, EntityKind, GraphError, SealReport, UnresolvedPolicy};
use crate::java::{
    collect_string_writes, extract_oo_graph, parse_unit, ExternalsPolicy, ProjectIndex, SourceUnit,
};
use crate::jsp::{add_page_entity, lower_page, parse_template, register_page, LoweredUnit, Origin, OriginMap, TemplatePage};
use crate::location::{normalize_path, SourceLocation};
use crate::tags::{builtin_rules, merge_rules, resolve_hits, scan_page, scan_write_sites, RuleFileError};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Object-oriented sources and descriptor files only.
    Baseline,
    #[default]
    Full,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub root: PathBuf,
    /// Directory page URLs are relative to. Defaults to the directory holding
    /// `WEB-INF`, else the project root.
    pub web_root: Option<PathBuf>,
    pub mode: Mode,
    pub unresolved: UnresolvedPolicy,
    /// Extra tag rules (Json) merged over the built-in table.
    pub tag_rules: Option<PathBuf>,
    /// Where to write the generated source of each lowered page.
    pub dump_lowered: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        AnalysisConfig {
            root: root.into(),
            web_root: None,
            mode: Mode::Full,
            unresolved: UnresolvedPolicy::Drop,
            tag_rules: None,
            dump_lowered: None,
        }
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}: not a readable directory")]
    BadRoot(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Rules(#[from] RuleFileError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PageStats {
    pub pages: usize,
    /// Pages with at least one scriptlet, declaration or expression.
    pub multilanguage: usize,
}

impl PageStats {
    pub fn percent(&self) -> f64 {
        if self.pages == 0 {
            0.0
        } else {
            100.0 * self.multilanguage as f64 / self.pages as f64
        }
    }
}

impl fmt::Display for PageStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}% ({}/{})", self.percent(), self.multilanguage, self.pages)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub files: usize,
    pub entities: usize,
    pub relationships: usize,
    pub entities_by_kind: BTreeMap<String, usize>,
    pub relationships_by_kind: BTreeMap<String, usize>,
    pub pages: PageStats,
    pub multilanguage_percent: String,
    pub el_expressions: usize,
    pub literals: LiteralClassification,
    pub unresolved: usize,
    pub dropped: usize,
    pub diagnostics: Vec<Diagnostic>,
}

pub struct Analysis {
    pub graph: DependencyGraph,
    pub report: Report,
    pub lowered: Vec<LoweredUnit>,
}

enum FileKind {
    Java,
    Jsp,
    Html,
    WebXml,
    EjbJar,
    FacesConfig,
    Tld,
}

fn classify(rel: &str) -> Option<FileKind> {
    let name = rel.rsplit('/').next().unwrap_or(rel);
    let ext = name.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase()).unwrap_or_default();
    Some(match (name, ext.as_str()) {
        ("web.xml", _) => FileKind::WebXml,
        ("ejb-jar.xml", _) => FileKind::EjbJar,
        ("faces-config.xml", _) => FileKind::FacesConfig,
        (_, "java") => FileKind::Java,
        (_, "jsp" | "jspf") => FileKind::Jsp,
        (_, "html" | "htm") => FileKind::Html,
        (_, "tld") => FileKind::Tld,
        _ => return None,
    })
}

fn rel_path(root: &Path, p: &Path) -> String {
    normalize_path(&p.strip_prefix(root).unwrap_or(p).to_string_lossy())
}

fn find_web_root(root: &Path) -> PathBuf {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .find(|e| e.file_type().is_dir() && e.file_name() == "WEB-INF")
        .and_then(|e| e.path().parent().map(Path::to_path_buf))
        .unwrap_or_else(|| root.to_path_buf())
}

fn page_url(root: &Path, web_root: &Path, rel: &str) -> String {
    let abs = root.join(rel);
    match abs.strip_prefix(web_root) {
        Ok(r) => format!("/{}", normalize_path(&r.to_string_lossy())),
        Err(_) => format!("/{rel}"),
    }
}

struct Page {
    page: TemplatePage,
    html: bool,
}

/// Runs every analyzer enabled by `config.mode` over the project and seals
/// the graph. Unreadable or malformed files become diagnostics.
pub fn analyze(config: &AnalysisConfig) -> Result<Analysis, AnalysisError> {
    let root = &config.root;
    if !root.is_dir() {
        return Err(AnalysisError::BadRoot(root.clone()));
    }
    let web_root = config.web_root.clone().map(|w| if w.is_absolute() { w } else { root.join(w) });
    let web_root = web_root.unwrap_or_else(|| find_web_root(root));
    let mut rules = builtin_rules();
    if let Some(p) = &config.tag_rules {
        let text = std::fs::read_to_string(p).map_err(|source| AnalysisError::Io { path: p.clone(), source })?;
        merge_rules(&mut rules, &text)?;
    }
    let full = config.mode == Mode::Full;
    let mut diags = Vec::new();

    let mut files: Vec<(String, FileKind)> = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.')
    }) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                diags.push(Diagnostic::new(codes::IO_ERROR, e.to_string()));
                continue;
            }
        };
        if entry.file_type().is_file() {
            let rel = rel_path(root, entry.path());
            if let Some(k) = classify(&rel) {
                files.push((rel, k));
            }
        }
    }
    let texts: Vec<Result<String, Diagnostic>> = files
        .par_iter()
        .map(|(rel, _)| {
            std::fs::read_to_string(root.join(rel)).map_err(|e| {
                Diagnostic::new(codes::IO_ERROR, e.to_string()).at(SourceLocation::file_start(rel))
            })
        })
        .collect();
    let mut sources = Vec::new();
    for ((rel, kind), text) in files.into_iter().zip(texts) {
        match text {
            Ok(t) => sources.push((rel, kind, t)),
            Err(d) => diags.push(d),
        }
    }
    let file_count = sources.len();

    // parse code and templates
    let parsed: Vec<Result<Option<ParsedFile>, Diagnostic>> = sources
        .par_iter()
        .map(|(rel, kind, text)| match kind {
            FileKind::Java => parse_unit(text, rel)
                .map(|p| Some(ParsedFile::Java(SourceUnit::plain(p.unit), p.diagnostics)))
                .map_err(|e| Diagnostic::new(codes::SYNTAX_ERROR, e.message).at(SourceLocation::at(&e.path, e.pos))),
            FileKind::Jsp | FileKind::Html => parse_template(text, rel)
                .map(|mut page| {
                    page.url = page_url(root, &web_root, rel);
                    Some(ParsedFile::Page(Page { page, html: matches!(kind, FileKind::Html) }))
                })
                .map_err(|e| Diagnostic::new(codes::TEMPLATE_ERROR, e.to_string())),
            _ => Ok(None),
        })
        .collect();
    let mut units = Vec::new();
    let mut pages = Vec::new();
    for p in parsed {
        match p {
            Ok(Some(ParsedFile::Java(u, d))) => {
                units.push(u);
                diags.extend(d);
            }
            Ok(Some(ParsedFile::Page(p))) => pages.push(p),
            Ok(None) => {}
            Err(d) => diags.push(d),
        }
    }
    let stats = PageStats { pages: pages.len(), multilanguage: pages.iter().filter(|p| p.page.has_code()).count() };

    let lowered: Vec<Option<LoweredUnit>> = if full {
        pages
            .par_iter()
            .map(|p| if p.html { None } else { lower_page(&p.page).ok() })
            .collect()
    } else {
        Vec::new()
    };
    if let Some(dir) = &config.dump_lowered {
        std::fs::create_dir_all(dir).map_err(|source| AnalysisError::Io { path: dir.clone(), source })?;
        for l in lowered.iter().flatten() {
            let path = dir.join(format!("{}.java", l.class_name));
            std::fs::write(&path, &l.source).map_err(|source| AnalysisError::Io { path, source })?;
        }
    }

    let mut graph = DependencyGraph::new(config.unresolved);
    let mut rel_list: Vec<&str> = sources.iter().map(|(r, _, _)| r.as_str()).collect();
    rel_list.sort();
    graph.meta.project_root_hash = hex::encode(Sha256::digest(rel_list.join("\n").as_bytes()));

    // descriptors
    let mut parts = MappingParts::default();
    for (rel, kind, text) in &sources {
        let r: Result<(), ConfigError> = (|| {
            match kind {
                FileKind::WebXml => parts.web_xml.push(parse_web_xml(text, rel, &mut graph)?),
                FileKind::Tld => parts.taglibs.push(parse_tld(text, rel, &mut graph)?),
                FileKind::EjbJar => parts.ejb_jars.push(parse_ejb_jar(text, rel, &mut graph)?),
                FileKind::FacesConfig => parts.managed_beans.extend(parse_faces_config(text, rel, &mut graph)?.1),
                _ => {}
            }
            Ok(())
        })();
        match r {
            Ok(()) => {}
            Err(ConfigError::Graph(e)) => return Err(e.into()),
            Err(e) => diags.push(Diagnostic::new(codes::XML_ERROR, e.to_string()).at(SourceLocation::file_start(rel))),
        }
    }

    // pages and lowered units
    let mut page_ids: Vec<Option<EntityId>> = vec![None; pages.len()];
    let mut origins: Vec<Option<Arc<OriginMap>>> = vec![None; units.len()];
    if full {
        for (i, p) in pages.iter().enumerate() {
            let id = match &lowered[i] {
                Some(l) => {
                    let (su, id) = register_page(&mut graph, l)?;
                    diags.extend(l.diagnostics.iter().cloned());
                    units.push(su);
                    origins.push(Some(l.origin.clone()));
                    id
                }
                None => {
                    let kind = if p.html { EntityKind::HtmlPage } else { EntityKind::ServerPage };
                    if !p.html {
                        diags.push(
                            Diagnostic::new(codes::LOWERING_DEGRADED, "page could not be lowered; code ignored")
                                .at(SourceLocation::file_start(&p.page.path)),
                        );
                    }
                    add_page_entity(&mut graph, kind, &p.page.url, &p.page.path)?
                }
            };
            page_ids[i] = Some(id);
        }
    }

    let index = ProjectIndex::build(&units);
    diags.extend(extract_oo_graph(&units, &index, &mut graph, ExternalsPolicy::Ignore)?);

    let mut el_count = 0;
    if full {
        let annotations = collect_annotations(&units, &index);
        parts.annotations = annotations;
        parts.pages = pages
            .iter()
            .zip(&page_ids)
            .filter_map(|(p, id)| Some((p.page.url.clone(), id.clone()?)))
            .collect();
        let mapping = build_mapping(parts, &index);
        diags.extend(mapping.diagnostics.iter().cloned());
        diags.extend(mapping.taglibs.iter().flat_map(|t| t.diagnostics.iter().cloned()));

        // container rules
        let jsp_pages: Vec<(EntityId, &TemplatePage)> = pages
            .iter()
            .zip(&page_ids)
            .filter(|(p, _)| !p.html)
            .filter_map(|(p, id)| Some((id.clone()?, &p.page)))
            .collect();
        let (uses, d) = find_tag_uses(&jsp_pages, &mapping);
        diags.extend(d);
        let (users, d) = emit_tag_lifecycle_edges(&uses, &index, &mut graph)?;
        diags.extend(d);
        emit_servlet_lifecycle_edges(&units, &index, &mut graph)?;
        emit_ejb_lifecycle_edges(&units, &index, &mapping, &mut graph)?;
        diags.extend(emit_jndi_edges(&units, &index, &mapping, &mut graph)?);

        // tag extractor
        let mut hits = Vec::new();
        for (p, id) in pages.iter().zip(&page_ids) {
            let Some(id) = id else { continue };
            let (h, d) = scan_page(&p.page, id, &rules);
            hits.extend(h);
            diags.extend(d);
        }
        for su in units.iter().filter(|u| !u.is_synthetic()) {
            hits.extend(scan_write_sites(su, &collect_string_writes(&su.unit), &index, &rules));
        }
        let resolved = resolve_hits(&hits, &mapping, &users, &index, &mut graph)?;
        diags.extend(resolved.diagnostics);

        // expression language
        for (p, id) in pages.iter().zip(&page_ids) {
            let Some(id) = id else { continue };
            let scope = ElScope::for_page(&p.page, &index, &mapping);
            let (n, d) = analyze_page_el(&p.page, id, &scope, &index, &mut graph)?;
            el_count += n;
            diags.extend(d);
        }
    }

    let seal: SealReport = graph.seal()?;
    diags.extend(seal.diagnostics.iter().cloned());

    let mut literal_sites = Vec::new();
    for p in &pages {
        literal_sites.extend(template_literals(&p.page));
    }
    for (su, origin) in units.iter().zip(&origins) {
        // in lowered units only code copied from the page counts
        literal_sites.extend(java_literals(su, |pos| match origin {
            None => true,
            Some(map) => map.segment(pos.line).is_some_and(|s| matches!(s.origin, Origin::Verbatim(_))),
        }));
    }
    let literals = classify_literals(&literal_sites, &graph);

    diags.sort();
    diags.dedup();
    let mut entities_by_kind = BTreeMap::new();
    for e in graph.entities() {
        *entities_by_kind.entry(e.kind.as_str().to_string()).or_insert(0) += 1;
    }
    let mut relationships_by_kind = BTreeMap::new();
    for r in graph.relationships() {
        *relationships_by_kind.entry(r.kind.as_str().to_string()).or_insert(0) += 1;
    }
    let report = Report {
        mode: config.mode,
        files: file_count,
        entities: graph.entity_count(),
        relationships: graph.relationship_count(),
        entities_by_kind,
        relationships_by_kind,
        pages: stats,
        multilanguage_percent: stats.to_string(),
        el_expressions: el_count,
        literals,
        unresolved: seal.unresolved,
        dropped: seal.dropped.len(),
        diagnostics: diags,
    };
    Ok(Analysis { graph, report, lowered: lowered.into_iter().flatten().collect() })
}

enum ParsedFile {
    Java(SourceUnit, Vec<Diagnostic>),
    Page(Page),
}
