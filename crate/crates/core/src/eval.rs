//! Scoring a graph against a hand-written list of expected dependencies.
//!
//! Truth files hold one edge per line, `source -> target [Kind]`, using
//! entity names as they appear in the graph. `#` starts a comment. Without a
//! kind the line matches an edge of any kind between the two entities.

use crate::graph::{DependencyGraph, EntityKind, RelationshipKind};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TruthEdge {
    pub source: String,
    pub target: String,
    pub kind: Option<RelationshipKind>,
}

impl fmt::Display for TruthEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source, self.target)?;
        if let Some(k) = self.kind {
            write!(f, " [{k}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub edges: Vec<TruthEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TruthError {
    #[error("line {line}: expected `source -> target [Kind]`")]
    Syntax { line: usize },
    #[error("line {line}: unknown relationship kind {kind}")]
    UnknownKind { line: usize, kind: String },
}

impl GroundTruth {
    pub fn parse(text: &str) -> Result<Self, TruthError> {
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (source, rest) = l.split_once("->").ok_or(TruthError::Syntax { line })?;
            let rest = rest.trim();
            let (target, kind) = match rest.strip_suffix(']').and_then(|r| r.rsplit_once('[')) {
                Some((t, k)) => {
                    let k = k.trim();
                    let kind =
                        RelationshipKind::parse(k).ok_or_else(|| TruthError::UnknownKind { line, kind: k.to_string() })?;
                    (t.trim(), Some(kind))
                }
                None => (rest, None),
            };
            let source = source.trim();
            if source.is_empty() || target.is_empty() || target.contains(char::is_whitespace) {
                return Err(TruthError::Syntax { line });
            }
            edges.push(TruthEdge { source: source.to_string(), target: target.to_string(), kind });
        }
        edges.sort();
        edges.dedup();
        Ok(GroundTruth { edges })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// `None` when the graph has no edges in scope.
    pub precision: Option<f64>,
    /// `None` when the truth is empty.
    pub recall: Option<f64>,
    pub matched: Vec<TruthEdge>,
    /// Graph edges no truth line accounts for.
    pub extra: Vec<TruthEdge>,
    /// Truth lines with no graph edge.
    pub missing: Vec<TruthEdge>,
    /// Truth names that are not entities of the graph.
    pub unknown_names: Vec<String>,
}

/// Edges scored by [`evaluate`]: every relationship except containment and
/// those issued by the container entities.
pub fn scored_edges(graph: &DependencyGraph) -> BTreeSet<TruthEdge> {
    let name = |id| graph.entity(id).map(|e| (e.kind, e.name.clone()));
    graph
        .relationships()
        .filter(|r| r.kind != RelationshipKind::Contains)
        .filter_map(|r| {
            let (sk, source) = name(&r.source)?;
            let (_, target) = name(&r.target)?;
            (sk != EntityKind::Container).then_some(TruthEdge { source, target, kind: Some(r.kind) })
        })
        .collect()
}

fn covers(t: &TruthEdge, g: &TruthEdge) -> bool {
    t.source == g.source && t.target == g.target && (t.kind.is_none() || t.kind == g.kind)
}

pub fn evaluate(graph: &DependencyGraph, truth: &GroundTruth) -> EvalReport {
    let edges = scored_edges(graph);
    let names: BTreeSet<&str> = graph.entities().map(|e| e.name.as_str()).collect();
    let mut matched = Vec::new();
    let mut missing = Vec::new();
    let mut unknown = BTreeSet::new();
    for t in &truth.edges {
        for n in [&t.source, &t.target] {
            if !names.contains(n.as_str()) {
                unknown.insert(n.clone());
            }
        }
        if edges.iter().any(|g| covers(t, g)) {
            matched.push(t.clone());
        } else {
            missing.push(t.clone());
        }
    }
    let extra: Vec<TruthEdge> = edges.iter().filter(|g| !truth.edges.iter().any(|t| covers(t, g))).cloned().collect();
    let covered = edges.len() - extra.len();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    EvalReport {
        precision: ratio(covered, edges.len()),
        recall: ratio(matched.len(), truth.edges.len()),
        matched,
        extra,
        missing,
        unknown_names: unknown.into_iter().collect(),
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}%", v * 100.0))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "precision  {}", pct(self.precision))?;
        writeln!(f, "recall     {}", pct(self.recall))?;
        writeln!(f, "matched    {}", self.matched.len())?;
        for (label, list) in [("extra", &self.extra), ("missing", &self.missing)] {
            writeln!(f, "{label:<10} {}", list.len())?;
            for e in list {
                writeln!(f, "  {e}")?;
            }
        }
        if !self.unknown_names.is_empty() {
            writeln!(f, "names not in graph:")?;
            for n in &self.unknown_names {
                writeln!(f, "  {n}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Analyzer, Entity, Provenance, Relationship, UnresolvedPolicy};
    use crate::location::SourceLocation;

    fn graph() -> DependencyGraph {
        let mut g = DependencyGraph::new(UnresolvedPolicy::Drop);
        let loc = SourceLocation::file_start("web/a.jsp");
        let a = g.add_entity(Entity::new(EntityKind::ServerPage, "/a.jsp", loc.clone())).unwrap();
        let b = g.add_entity(Entity::new(EntityKind::ServerPage, "/b.jsp", SourceLocation::file_start("web/b.jsp"))).unwrap();
        let w = g.add_entity(Entity::new(EntityKind::Container, "WebContainer", SourceLocation::nowhere())).unwrap();
        for (s, t, k, line) in [
            (&a, &b, RelationshipKind::Includes, 1),
            (&a, &b, RelationshipKind::LinksTo, 2),
            (&a, &b, RelationshipKind::LinksTo, 3),
            (&w, &a, RelationshipKind::LifecycleCallback, 1),
        ] {
            let ev = Provenance::new(Analyzer::TagExtractor, SourceLocation::new("web/a.jsp", line, 1), "");
            g.add_relationship(Relationship::new(s.clone(), t.clone(), k, ev)).unwrap();
        }
        g.seal().unwrap();
        g
    }

    #[test]
    fn parse_lines() {
        let t = GroundTruth::parse("# c\n\n/a.jsp -> /b.jsp [LinksTo]\n x.A.m/0 ->  x.B \n/a.jsp -> /b.jsp [linksto] # dup\n").unwrap();
        assert_eq!(t.edges.len(), 2);
        assert_eq!(t.edges[0].to_string(), "/a.jsp -> /b.jsp [LinksTo]");
        assert_eq!(t.edges[1].kind, None);
        assert_eq!(GroundTruth::parse("a b").unwrap_err(), TruthError::Syntax { line: 1 });
        assert!(matches!(GroundTruth::parse("a -> b [Nope]"), Err(TruthError::UnknownKind { .. })));
    }

    #[test]
    fn perfect_and_imperfect() {
        let g = graph();
        let t = GroundTruth::parse("/a.jsp -> /b.jsp [Includes]\n/a.jsp -> /b.jsp [LinksTo]").unwrap();
        let r = evaluate(&g, &t);
        assert_eq!((r.precision, r.recall), (Some(1.0), Some(1.0)));

        let t = GroundTruth::parse("/a.jsp -> /b.jsp\n/b.jsp -> /ghost.jsp [ForwardsTo]").unwrap();
        let r = evaluate(&g, &t);
        assert_eq!((r.precision, r.recall), (Some(1.0), Some(0.5)));
        assert_eq!(r.missing[0].target, "/ghost.jsp");
        assert_eq!(r.unknown_names, ["/ghost.jsp"]);

        let t = GroundTruth::parse("/a.jsp -> /b.jsp [LinksTo]").unwrap();
        let r = evaluate(&g, &t);
        assert_eq!(r.precision, Some(0.5));
        assert_eq!(r.extra.len(), 1);

        let r = evaluate(&g, &GroundTruth::default());
        assert_eq!((r.precision, r.recall), (Some(0.0), None));
        assert!(r.to_string().contains("recall     n/a"));
    }
}
