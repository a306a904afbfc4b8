use super::{DependencyGraph, Entity, GraphError, Relationship};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Dot,
    GraphMl,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub tool_version: String,
    pub project_root_hash: String,
}

/// The canonical on-disk form of a sealed graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub entities: Vec<Entity>,
    pub relationships: Vec<Relationship>,
    pub meta: GraphMeta,
}

pub fn serialize<W: Write>(graph: &DependencyGraph, format: OutputFormat, out: &mut W) -> Result<(), GraphError> {
    if !graph.is_sealed() {
        return Err(GraphError::NotSealed);
    }
    let text = match format {
        OutputFormat::Json => to_json(graph)?,
        OutputFormat::Dot => to_dot(graph),
        OutputFormat::GraphMl => to_graphml(graph),
    };
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn to_json(graph: &DependencyGraph) -> Result<String, GraphError> {
    if !graph.is_sealed() {
        return Err(GraphError::NotSealed);
    }
    let mut meta = graph.meta.clone();
    if meta.tool_version.is_empty() {
        meta.tool_version = TOOL_VERSION.to_string();
    }
    let doc = GraphDocument {
        entities: graph.entities().cloned().collect(),
        relationships: graph.relationships().cloned().collect(),
        meta,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| GraphError::Schema(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Parses a Json graph document into a sealed graph. Every relationship
/// endpoint must resolve.
pub fn from_json(text: &str) -> Result<DependencyGraph, GraphError> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| GraphError::Schema(e.to_string()))?;
    DependencyGraph::from_parts(doc.meta, doc.entities, doc.relationships)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn to_dot(graph: &DependencyGraph) -> String {
    let mut out = String::from("digraph dependencies {\n  node [shape=box];\n");
    for e in graph.entities() {
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\", kind=\"{}\"{}];",
            e.id,
            dot_escape(&e.name),
            e.kind.as_str(),
            if e.synthetic { ", style=dashed" } else { "" }
        );
    }
    for r in graph.relationships() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\", analyzer=\"{:?}\", at=\"{}\"];",
            r.source,
            r.target,
            r.kind,
            r.evidence.analyzer,
            dot_escape(&r.evidence.location.to_string())
        );
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn to_graphml(graph: &DependencyGraph) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
         \x20 <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n\
         \x20 <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n\
         \x20 <key id=\"synthetic\" for=\"node\" attr.name=\"synthetic\" attr.type=\"boolean\"/>\n\
         \x20 <key id=\"location\" for=\"node\" attr.name=\"location\" attr.type=\"string\"/>\n\
         \x20 <key id=\"rel\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n\
         \x20 <key id=\"analyzer\" for=\"edge\" attr.name=\"analyzer\" attr.type=\"string\"/>\n\
         \x20 <key id=\"evidence\" for=\"edge\" attr.name=\"evidence\" attr.type=\"string\"/>\n\
         \x20 <key id=\"note\" for=\"edge\" attr.name=\"note\" attr.type=\"string\"/>\n\
         \x20 <graph id=\"dependencies\" edgedefault=\"directed\">\n",
    );
    for e in graph.entities() {
        let _ = writeln!(
            out,
            "    <node id=\"{}\"><data key=\"name\">{}</data><data key=\"kind\">{}</data>\
             <data key=\"synthetic\">{}</data><data key=\"location\">{}</data></node>",
            e.id,
            xml_escape(&e.name),
            e.kind.as_str(),
            e.synthetic,
            xml_escape(&e.location.to_string())
        );
    }
    for (i, r) in graph.relationships().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{}\" source=\"{}\" target=\"{}\"><data key=\"rel\">{}</data>\
             <data key=\"analyzer\">{:?}</data><data key=\"evidence\">{}</data><data key=\"note\">{}</data></edge>",
            i,
            r.source,
            r.target,
            r.kind,
            r.evidence.analyzer,
            xml_escape(&r.evidence.location.to_string()),
            xml_escape(&r.evidence.note)
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Analyzer, EntityKind, Provenance, RelationshipKind};
    use crate::location::SourceLocation;

    fn sample() -> DependencyGraph {
        let mut g = DependencyGraph::default();
        let page = g
            .add_entity(Entity::new(EntityKind::ServerPage, "/index.jsp", SourceLocation::file_start("web/index.jsp")))
            .unwrap();
        let class = g
            .add_entity(Entity::new(EntityKind::ClassUnit, "a.B", SourceLocation::new("src/a/B.java", 3, 1)))
            .unwrap();
        let method = g
            .add_entity(
                Entity::new(EntityKind::MethodUnit, "a.B.doStartTag/0", SourceLocation::new("src/a/B.java", 5, 5))
                    .with_parent(class),
            )
            .unwrap();
        g.add_relationship(Relationship::new(
            page,
            method,
            RelationshipKind::LifecycleCallback,
            Provenance::new(Analyzer::ContainerRules, SourceLocation::new("web/index.jsp", 2, 1), "<x & \"y\">"),
        ))
        .unwrap();
        g.seal().unwrap();
        g
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let g = sample();
        let first = to_json(&g).unwrap();
        let back = from_json(&first).unwrap();
        assert_eq!(to_json(&back).unwrap(), first);
        assert_eq!(back.entity_count(), g.entity_count());
    }

    #[test]
    fn empty_graph_serializes() {
        let mut g = DependencyGraph::default();
        g.seal().unwrap();
        let text = to_json(&g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["entities"].as_array().unwrap().len(), 0);
        assert_eq!(v["relationships"].as_array().unwrap().len(), 0);
        assert!(v["meta"]["tool_version"].is_string());
    }

    #[test]
    fn unsealed_graph_is_refused() {
        let g = DependencyGraph::default();
        let mut buf = Vec::new();
        assert!(matches!(serialize(&g, OutputFormat::Json, &mut buf), Err(GraphError::NotSealed)));
    }

    #[test]
    fn dangling_document_is_rejected() {
        let text = r#"{"entities":[],"relationships":[{"source":"aa","target":"bb","kind":"Calls",
            "evidence":{"analyzer":"OoFrontend","location":{"path":"x","line":1,"column":1},"note":""}}],
            "meta":{"tool_version":"0","project_root_hash":""}}"#;
        assert!(matches!(from_json(text), Err(GraphError::Schema(_))));
    }

    #[test]
    fn dot_and_graphml_are_escaped() {
        let g = sample();
        let mut dot = Vec::new();
        serialize(&g, OutputFormat::Dot, &mut dot).unwrap();
        let dot = String::from_utf8(dot).unwrap();
        assert!(dot.starts_with("digraph dependencies {"));
        assert!(dot.contains("label=\"a.B.doStartTag/0\""));
        assert!(dot.contains("label=\"LifecycleCallback\""));
        let mut gml = Vec::new();
        serialize(&g, OutputFormat::GraphMl, &mut gml).unwrap();
        let gml = String::from_utf8(gml).unwrap();
        assert!(gml.contains("&lt;x &amp; &quot;y&quot;&gt;"));
        roxmltree::Document::parse(&gml).expect("graphml is well-formed xml");
    }
}
