//! Language-independent dependency model.
//!
//! Every program element found by any analyzer (a class, a method, a server
//! page, a descriptor, a tag definition) becomes an [`Entity`]; every
//! dependency between two of them becomes a typed [`Relationship`] that
//! carries its [`Provenance`]. Containment is expressed through the entity
//! `parent` pointer and materialized as `Contains` edges when the graph is
//! sealed, so the containment structure is a forest by construction.
//!
//! Entity identities are content hashes of `(kind, qualified name, defining
//! path)`, which keeps them stable from one run to the next and makes graphs
//! produced by separate runs directly comparable with [`diff`].

mod diff;
mod export;

pub use diff::{diff, GraphDelta, StoreDelta};
pub use export::{from_json, serialize, to_json, GraphDocument, GraphMeta, OutputFormat};

use crate::diagnostics::{codes, Diagnostic};
use crate::location::SourceLocation;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("entity {id} already exists with different fields")]
    DuplicateDivergent { id: EntityId },
    #[error("parent {parent} of entity '{name}' is not in the graph")]
    ParentMissing { name: String, parent: EntityId },
    #[error("a {child:?} cannot be contained by a {parent:?}")]
    ParentKindMismatch { child: EntityKind, parent: EntityKind },
    #[error("containment is derived from entity parents; Contains edges cannot be added directly")]
    StructuralEdge,
    #[error("graph is sealed")]
    Sealed,
    #[error("graph is already sealed")]
    AlreadySealed,
    #[error("graph must be sealed before it can be serialized or compared")]
    NotSealed,
    #[error("invalid graph document: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Stable, content-derived entity identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn derive(kind: EntityKind, name: &str, defining_path: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(kind.as_str().as_bytes());
        hasher.update([0]);
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update(defining_path.as_bytes());
        let digest = hasher.finalize();
        EntityId(hex::encode(&digest[..10]))
    }

    /// Identity of the placeholder standing in for an unresolved target.
    pub fn unresolved(name: &str) -> Self {
        Self::derive(EntityKind::UnresolvedTarget, name, "")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Package,
    ClassUnit,
    MethodUnit,
    FieldUnit,
    ServerPage,
    ConfigFile,
    TagDefinition,
    HtmlPage,
    /// Runtime container pseudo-entity (web or EJB container).
    Container,
    /// Placeholder for a dependency target that could not be resolved.
    UnresolvedTarget,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Package => "Package",
            EntityKind::ClassUnit => "ClassUnit",
            EntityKind::MethodUnit => "MethodUnit",
            EntityKind::FieldUnit => "FieldUnit",
            EntityKind::ServerPage => "ServerPage",
            EntityKind::ConfigFile => "ConfigFile",
            EntityKind::TagDefinition => "TagDefinition",
            EntityKind::HtmlPage => "HtmlPage",
            EntityKind::Container => "Container",
            EntityKind::UnresolvedTarget => "UnresolvedTarget",
        }
    }

    /// Kinds whose identity does not depend on a defining file.
    fn is_project_wide(self) -> bool {
        matches!(self, EntityKind::Package | EntityKind::Container | EntityKind::UnresolvedTarget)
    }

    fn allows_parent(self, parent: EntityKind) -> bool {
        match self {
            EntityKind::MethodUnit | EntityKind::FieldUnit => parent == EntityKind::ClassUnit,
            EntityKind::TagDefinition => parent == EntityKind::ConfigFile,
            EntityKind::ClassUnit => matches!(
                parent,
                EntityKind::Package | EntityKind::ClassUnit | EntityKind::ServerPage
            ),
            EntityKind::Package => parent == EntityKind::Package,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
    pub parent: Option<EntityId>,
    pub location: SourceLocation,
    pub synthetic: bool,
}

impl Entity {
    pub fn new(kind: EntityKind, name: impl Into<String>, location: SourceLocation) -> Self {
        let name = name.into();
        let defining = if kind.is_project_wide() { "" } else { location.path.as_str() };
        Entity {
            id: EntityId::derive(kind, &name, defining),
            kind,
            name,
            parent: None,
            location,
            synthetic: false,
        }
    }

    pub fn with_parent(mut self, parent: EntityId) -> Self {
        self.parent = Some(parent);
        self
    }

    pub fn synthetic(mut self, synthetic: bool) -> Self {
        self.synthetic = synthetic;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationshipKind {
    Contains,
    Calls,
    Instantiates,
    Extends,
    Implements,
    AccessesField,
    Includes,
    ForwardsTo,
    LinksTo,
    ErrorPage,
    LifecycleCallback,
    AttributeSetter,
    ElAccess,
    JndiLookup,
}

impl RelationshipKind {
    pub const ALL: [RelationshipKind; 14] = [
        RelationshipKind::Contains,
        RelationshipKind::Calls,
        RelationshipKind::Instantiates,
        RelationshipKind::Extends,
        RelationshipKind::Implements,
        RelationshipKind::AccessesField,
        RelationshipKind::Includes,
        RelationshipKind::ForwardsTo,
        RelationshipKind::LinksTo,
        RelationshipKind::ErrorPage,
        RelationshipKind::LifecycleCallback,
        RelationshipKind::AttributeSetter,
        RelationshipKind::ElAccess,
        RelationshipKind::JndiLookup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationshipKind::Contains => "Contains",
            RelationshipKind::Calls => "Calls",
            RelationshipKind::Instantiates => "Instantiates",
            RelationshipKind::Extends => "Extends",
            RelationshipKind::Implements => "Implements",
            RelationshipKind::AccessesField => "AccessesField",
            RelationshipKind::Includes => "Includes",
            RelationshipKind::ForwardsTo => "ForwardsTo",
            RelationshipKind::LinksTo => "LinksTo",
            RelationshipKind::ErrorPage => "ErrorPage",
            RelationshipKind::LifecycleCallback => "LifecycleCallback",
            RelationshipKind::AttributeSetter => "AttributeSetter",
            RelationshipKind::ElAccess => "ElAccess",
            RelationshipKind::JndiLookup => "JndiLookup",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for RelationshipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Analyzer {
    OoFrontend,
    JspLowering,
    TagExtractor,
    ContainerRules,
    LiteralEl,
    ConfigLayer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub analyzer: Analyzer,
    pub location: SourceLocation,
    pub note: String,
}

impl Provenance {
    pub fn new(analyzer: Analyzer, location: SourceLocation, note: impl Into<String>) -> Self {
        Provenance { analyzer, location, note: note.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub source: EntityId,
    pub target: EntityId,
    pub kind: RelationshipKind,
    pub evidence: Provenance,
}

impl Relationship {
    pub fn new(source: EntityId, target: EntityId, kind: RelationshipKind, evidence: Provenance) -> Self {
        Relationship { source, target, kind, evidence }
    }

    pub fn key(&self) -> RelKey {
        RelKey {
            source: self.source.clone(),
            target: self.target.clone(),
            kind: self.kind,
            location: self.evidence.location.clone(),
        }
    }
}

/// Uniqueness key of a relationship. Its ordering is the serialization order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelKey {
    pub source: EntityId,
    pub target: EntityId,
    pub kind: RelationshipKind,
    pub location: SourceLocation,
}

/// What happens to a relationship whose target cannot be found at seal time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnresolvedPolicy {
    Drop,
    #[default]
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedEdge {
    pub source: EntityId,
    pub target: EntityId,
    pub kind: RelationshipKind,
    pub location: SourceLocation,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealReport {
    /// Relationships whose target was missing when the graph was sealed.
    pub unresolved: usize,
    /// Names of the placeholder entities created for them.
    pub placeholders: Vec<String>,
    pub dropped: Vec<DroppedEdge>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    entities: BTreeMap<EntityId, Entity>,
    relationships: BTreeMap<RelKey, Relationship>,
    by_name: BTreeMap<(EntityKind, String), BTreeSet<EntityId>>,
    pending_names: BTreeMap<EntityId, String>,
    rejected: Vec<Diagnostic>,
    policy: UnresolvedPolicy,
    sealed: bool,
    pub meta: GraphMeta,
}

impl DependencyGraph {
    pub fn new(policy: UnresolvedPolicy) -> Self {
        DependencyGraph { policy, ..Default::default() }
    }

    pub fn policy(&self) -> UnresolvedPolicy {
        self.policy
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn add_entity(&mut self, entity: Entity) -> Result<EntityId, GraphError> {
        if self.sealed {
            return Err(GraphError::Sealed);
        }
        if let Some(existing) = self.entities.get(&entity.id) {
            return if *existing == entity {
                Ok(entity.id)
            } else {
                Err(GraphError::DuplicateDivergent { id: entity.id })
            };
        }
        if let Some(parent_id) = &entity.parent {
            let parent = self.entities.get(parent_id).ok_or_else(|| GraphError::ParentMissing {
                name: entity.name.clone(),
                parent: parent_id.clone(),
            })?;
            if !entity.kind.allows_parent(parent.kind) {
                return Err(GraphError::ParentKindMismatch { child: entity.kind, parent: parent.kind });
            }
        }
        self.by_name
            .entry((entity.kind, entity.name.clone()))
            .or_default()
            .insert(entity.id.clone());
        let id = entity.id.clone();
        self.entities.insert(id.clone(), entity);
        Ok(id)
    }

    /// Records a relationship. Identical `(source, target, kind, location)`
    /// tuples collapse; the first emission wins. Endpoints are checked at
    /// seal time, not here.
    pub fn add_relationship(&mut self, rel: Relationship) -> Result<(), GraphError> {
        if self.sealed {
            return Err(GraphError::Sealed);
        }
        if rel.kind == RelationshipKind::Contains {
            self.rejected.push(
                Diagnostic::new(codes::DROPPED_EDGE, "explicit Contains edge ignored; containment follows entity parents")
                    .at(rel.evidence.location.clone()),
            );
            return Err(GraphError::StructuralEdge);
        }
        self.relationships.entry(rel.key()).or_insert(rel);
        Ok(())
    }

    /// Records a relationship to a target known only by name. Under the
    /// placeholder policy an `UnresolvedTarget` entity is created at seal
    /// time unless an entity with the same id appears first.
    pub fn add_unresolved_relationship(
        &mut self,
        source: EntityId,
        target_name: &str,
        kind: RelationshipKind,
        evidence: Provenance,
    ) -> Result<EntityId, GraphError> {
        let target = EntityId::unresolved(target_name);
        self.pending_names.entry(target.clone()).or_insert_with(|| target_name.to_string());
        self.add_relationship(Relationship::new(source, target.clone(), kind, evidence))?;
        Ok(target)
    }

    pub fn seal(&mut self) -> Result<SealReport, GraphError> {
        if self.sealed {
            return Err(GraphError::AlreadySealed);
        }
        let mut report = SealReport { diagnostics: std::mem::take(&mut self.rejected), ..Default::default() };

        let containment: Vec<Relationship> = self
            .entities
            .values()
            .filter_map(|e| {
                let parent = e.parent.clone()?;
                let analyzer = match e.kind {
                    EntityKind::ConfigFile | EntityKind::TagDefinition => Analyzer::ConfigLayer,
                    _ if e.synthetic => Analyzer::JspLowering,
                    _ => Analyzer::OoFrontend,
                };
                Some(Relationship::new(
                    parent,
                    e.id.clone(),
                    RelationshipKind::Contains,
                    Provenance::new(analyzer, e.location.clone(), "contains"),
                ))
            })
            .collect();
        for rel in containment {
            self.relationships.entry(rel.key()).or_insert(rel);
        }

        let keys: Vec<RelKey> = self.relationships.keys().cloned().collect();
        for key in keys {
            let source_ok = self.entities.contains_key(&key.source);
            let target_ok = self.entities.contains_key(&key.target);
            if source_ok && target_ok {
                continue;
            }
            if source_ok {
                report.unresolved += 1;
            }
            let pending = self.pending_names.get(&key.target).cloned();
            match (source_ok, self.policy, pending) {
                (true, UnresolvedPolicy::Placeholder, Some(name)) => {
                    let placeholder = Entity::new(EntityKind::UnresolvedTarget, &name, SourceLocation::nowhere());
                    debug_assert_eq!(placeholder.id, key.target);
                    report.placeholders.push(name.clone());
                    report.diagnostics.push(
                        Diagnostic::new(codes::UNRESOLVED, format!("unresolved {} target '{}'", key.kind, name))
                            .at(key.location.clone()),
                    );
                    self.by_name
                        .entry((EntityKind::UnresolvedTarget, name))
                        .or_default()
                        .insert(placeholder.id.clone());
                    self.entities.insert(placeholder.id.clone(), placeholder);
                }
                (source_ok, _, pending) => {
                    let reason = if !source_ok {
                        "source entity missing".to_string()
                    } else if let Some(name) = pending {
                        format!("unresolved target '{name}' dropped by policy")
                    } else {
                        "target entity missing".to_string()
                    };
                    report.diagnostics.push(
                        Diagnostic::new(codes::DROPPED_EDGE, format!("{} edge dropped: {reason}", key.kind))
                            .at(key.location.clone()),
                    );
                    report.dropped.push(DroppedEdge {
                        source: key.source.clone(),
                        target: key.target.clone(),
                        kind: key.kind,
                        location: key.location.clone(),
                        reason,
                    });
                    self.relationships.remove(&key);
                }
            }
        }
        report.placeholders.sort();
        report.placeholders.dedup();
        self.pending_names.clear();
        self.sealed = true;
        Ok(report)
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn contains_entity(&self, id: &EntityId) -> bool {
        self.entities.contains_key(id)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    /// Relationships in `(source, target, kind, location)` order.
    pub fn relationships(&self) -> impl Iterator<Item = &Relationship> {
        self.relationships.values()
    }

    pub fn relationships_of_kind(&self, kind: RelationshipKind) -> impl Iterator<Item = &Relationship> {
        self.relationships.values().filter(move |r| r.kind == kind)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relationship_count(&self) -> usize {
        self.relationships.len()
    }

    pub fn find(&self, kind: EntityKind, name: &str) -> impl Iterator<Item = &Entity> {
        self.by_name
            .get(&(kind, name.to_string()))
            .into_iter()
            .flatten()
            .filter_map(|id| self.entities.get(id))
    }

    pub fn find_one(&self, kind: EntityKind, name: &str) -> Option<&Entity> {
        self.find(kind, name).next()
    }

    pub fn find_by_name(&self, name: &str) -> Vec<&Entity> {
        self.entities.values().filter(|e| e.name == name).collect()
    }

    pub fn has_relationship(&self, source: &EntityId, target: &EntityId, kind: RelationshipKind) -> bool {
        self.relationships
            .values()
            .any(|r| &r.source == source && &r.target == target && r.kind == kind)
    }

    /// Checks the structural invariants of a sealed graph and returns a list
    /// of human-readable violations (empty when the graph is well formed).
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for e in self.entities.values() {
            let mut seen = BTreeSet::new();
            let mut cur = e;
            while let Some(parent) = &cur.parent {
                if !seen.insert(parent.clone()) || parent == &e.id {
                    problems.push(format!("containment cycle through {}", e.name));
                    break;
                }
                match self.entities.get(parent) {
                    Some(p) => cur = p,
                    None => {
                        problems.push(format!("{} has missing parent {}", e.name, parent));
                        break;
                    }
                }
            }
            if let Some(parent) = e.parent.as_ref().and_then(|p| self.entities.get(p)) {
                if !e.kind.allows_parent(parent.kind) {
                    problems.push(format!("{} ({:?}) under {:?}", e.name, e.kind, parent.kind));
                }
            }
        }
        let mut contains_into: BTreeMap<&EntityId, usize> = BTreeMap::new();
        for r in self.relationships.values() {
            if !self.entities.contains_key(&r.source) || !self.entities.contains_key(&r.target) {
                problems.push(format!("dangling {} edge {} -> {}", r.kind, r.source, r.target));
            }
            if r.kind == RelationshipKind::Contains {
                *contains_into.entry(&r.target).or_default() += 1;
            }
        }
        for (target, n) in contains_into {
            if n > 1 {
                problems.push(format!("{target} has {n} containers"));
            }
        }
        problems
    }

    pub(crate) fn from_parts(
        meta: GraphMeta,
        entities: Vec<Entity>,
        relationships: Vec<Relationship>,
    ) -> Result<Self, GraphError> {
        let mut graph = DependencyGraph { meta, ..Default::default() };
        for e in entities {
            if graph.entities.contains_key(&e.id) {
                return Err(GraphError::Schema(format!("duplicate entity id {}", e.id)));
            }
            graph.by_name.entry((e.kind, e.name.clone())).or_default().insert(e.id.clone());
            graph.entities.insert(e.id.clone(), e);
        }
        for r in relationships {
            if !graph.entities.contains_key(&r.source) || !graph.entities.contains_key(&r.target) {
                return Err(GraphError::Schema(format!("relationship endpoint missing: {} -> {}", r.source, r.target)));
            }
            if graph.relationships.insert(r.key(), r).is_some() {
                return Err(GraphError::Schema("duplicate relationship".into()));
            }
        }
        graph.sealed = true;
        Ok(graph)
    }
}

impl PartialEq for DependencyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.sealed == other.sealed
            && self.meta == other.meta
            && self.entities == other.entities
            && self.relationships == other.relationships
    }
}
