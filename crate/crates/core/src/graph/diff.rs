use super::{DependencyGraph, EntityId, GraphError, RelKey};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDelta<T> {
    pub only_in_a: Vec<T>,
    pub only_in_b: Vec<T>,
    pub common: usize,
    pub count_a: usize,
    pub count_b: usize,
}

impl<T: Ord + Clone> StoreDelta<T> {
    fn between(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Self {
        StoreDelta {
            only_in_a: a.difference(b).cloned().collect(),
            only_in_b: b.difference(a).cloned().collect(),
            common: a.intersection(b).count(),
            count_a: a.len(),
            count_b: b.len(),
        }
    }
}

impl<T> StoreDelta<T> {
    pub fn is_empty(&self) -> bool {
        self.only_in_a.is_empty() && self.only_in_b.is_empty()
    }

    /// Growth of store `b` relative to store `a`: `(|b| - |a|) / |a|`.
    /// When `a` is empty and `b` is not, every element of `b` is new and the
    /// ratio is 1.0.
    pub fn improvement(&self) -> f64 {
        improvement_ratio(self.count_a, self.count_b)
    }

    pub fn improvement_percent(&self) -> i64 {
        (self.improvement() * 100.0).round() as i64
    }
}

pub fn improvement_ratio(count_a: usize, count_b: usize) -> f64 {
    match (count_a, count_b) {
        (0, 0) => 0.0,
        (0, _) => 1.0,
        (a, b) => (b as f64 - a as f64) / a as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub entities: StoreDelta<EntityId>,
    pub relationships: StoreDelta<RelKey>,
}

impl GraphDelta {
    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relationships.is_empty()
    }

    /// True when `b` holds everything in `a` and at least one more element.
    pub fn b_strictly_contains_a(&self) -> bool {
        self.entities.only_in_a.is_empty()
            && self.relationships.only_in_a.is_empty()
            && (!self.entities.only_in_b.is_empty() || !self.relationships.only_in_b.is_empty())
    }
}

pub fn diff(a: &DependencyGraph, b: &DependencyGraph) -> Result<GraphDelta, GraphError> {
    if !a.is_sealed() || !b.is_sealed() {
        return Err(GraphError::NotSealed);
    }
    let ents = |g: &DependencyGraph| g.entities().map(|e| e.id.clone()).collect::<BTreeSet<_>>();
    let rels = |g: &DependencyGraph| g.relationships().map(|r| r.key()).collect::<BTreeSet<_>>();
    Ok(GraphDelta {
        entities: StoreDelta::between(&ents(a), &ents(b)),
        relationships: StoreDelta::between(&rels(a), &rels(b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Analyzer, Entity, EntityKind, Provenance, Relationship, RelationshipKind};
    use crate::location::SourceLocation;

    /// Builds a graph with `n_entities` classes and `n_edges` distinct Calls
    /// edges. Graphs built with larger counts are supersets of smaller ones.
    pub(crate) fn sized(n_entities: usize, n_edges: usize) -> DependencyGraph {
        let mut g = DependencyGraph::default();
        let ids: Vec<_> = (0..n_entities)
            .map(|i| {
                g.add_entity(Entity::new(EntityKind::ClassUnit, format!("C{i}"), SourceLocation::file_start("s.java")))
                    .unwrap()
            })
            .collect();
        for e in 0..n_edges {
            let loc = SourceLocation::new("s.java", e as u32 + 1, 1);
            g.add_relationship(Relationship::new(
                ids[e % 7].clone(),
                ids[(e % 11) + 7].clone(),
                RelationshipKind::Calls,
                Provenance::new(Analyzer::OoFrontend, loc, ""),
            ))
            .unwrap();
        }
        g.seal().unwrap();
        g
    }

    #[test]
    fn improvement_matches_reported_arithmetic() {
        assert_eq!((improvement_ratio(233, 329) * 100.0).round() as i64, 41);
        assert_eq!((improvement_ratio(2284, 2673) * 100.0).round() as i64, 17);
        assert_eq!((improvement_ratio(0, 11) * 100.0).round() as i64, 100);
        assert_eq!(improvement_ratio(5, 5), 0.0);
    }

    #[test]
    fn synthetic_graphs_reproduce_growth() {
        let a = sized(233, 2284);
        let b = sized(329, 2673);
        let d = diff(&a, &b).unwrap();
        assert_eq!((d.entities.count_a, d.entities.count_b), (233, 329));
        assert_eq!((d.relationships.count_a, d.relationships.count_b), (2284, 2673));
        assert_eq!(d.entities.improvement_percent(), 41);
        assert_eq!(d.relationships.improvement_percent(), 17);
        assert!(d.b_strictly_contains_a());
        assert_eq!(d.entities.only_in_b.len(), 96);
    }

    #[test]
    fn self_diff_is_empty() {
        let a = sized(20, 40);
        let d = diff(&a, &a).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.entities.improvement_percent(), 0);
        assert_eq!(d.relationships.improvement(), 0.0);
    }

    #[test]
    fn only_in_sets_are_antisymmetric() {
        let a = sized(20, 30);
        let b = sized(25, 50);
        let ab = diff(&a, &b).unwrap();
        let ba = diff(&b, &a).unwrap();
        assert_eq!(ab.entities.only_in_a, ba.entities.only_in_b);
        assert_eq!(ab.relationships.only_in_b, ba.relationships.only_in_a);
    }
}
