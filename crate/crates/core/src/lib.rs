pub mod config;
pub mod container;
pub mod diagnostics;
pub mod el;
pub mod eval;
pub mod graph;
pub mod java;
pub mod jsp;
pub mod location;
pub mod markup;
pub mod pipeline;
pub mod tags;
pub mod url;

pub use eval::{evaluate, EvalReport, GroundTruth};
pub use graph::{DependencyGraph, Entity, EntityId, EntityKind, Relationship, RelationshipKind, UnresolvedPolicy};
pub use pipeline::{analyze, Analysis, AnalysisConfig, AnalysisError, Mode, Report};
