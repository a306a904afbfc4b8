//! Project-wide symbol table built after all units are parsed.

use super::ast::*;
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{EntityId, EntityKind};
use crate::location::{Pos, SourceLocation};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

/// Maps positions in a generated unit back to the file it was generated from.
pub trait PositionMap: Send + Sync + fmt::Debug {
    /// `None` means the position has no template origin worth reporting.
    fn locate(&self, pos: Pos) -> Option<SourceLocation>;
}

/// Marks a unit as generated from a server page.
#[derive(Debug, Clone)]
pub struct LoweredOrigin {
    /// The `ServerPage` entity that owns the generated class.
    pub page: EntityId,
    pub map: Arc<dyn PositionMap>,
}

#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub unit: OoCompilationUnit,
    pub origin: Option<LoweredOrigin>,
}

impl SourceUnit {
    pub fn plain(unit: OoCompilationUnit) -> Self {
        SourceUnit { unit, origin: None }
    }

    pub fn is_synthetic(&self) -> bool {
        self.origin.is_some()
    }

    /// Evidence location for a position in this unit.
    pub fn locate(&self, pos: Pos) -> Option<SourceLocation> {
        match &self.origin {
            None => Some(SourceLocation::at(&self.unit.path, pos)),
            Some(o) => o.map.locate(pos),
        }
    }

    /// Location for an entity declared at `pos`; stays inside the unit's file
    /// so entity ids depend only on the unit path.
    pub(crate) fn entity_location(&self, pos: Pos) -> SourceLocation {
        match self.locate(pos) {
            Some(l) if l.path == self.unit.path => l,
            _ => SourceLocation::file_start(&self.unit.path),
        }
    }
}

/// Static type of an expression as far as the frontend can tell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Project(String),
    /// A type outside the project; the string is the name as written
    /// (empty when not even that is known).
    External(String),
    Unknown,
}

#[derive(Debug, Clone)]
pub struct MethodInfo {
    pub id: EntityId,
    pub name: String,
    pub arity: usize,
    pub class: String,
    pub return_type: Option<TypeRef>,
    pub annotations: Vec<AnnotationUse>,
    pub pos: Pos,
}

impl MethodInfo {
    pub fn key(&self) -> String {
        format!("{}.{}/{}", self.class, self.name, self.arity)
    }
}

#[derive(Debug, Clone)]
pub struct FieldInfo {
    pub id: EntityId,
    pub name: String,
    pub class: String,
    pub ty: TypeRef,
}

#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub id: EntityId,
    pub qname: String,
    pub unit: usize,
    pub decl: usize,
    pub kind: ClassKind,
    pub superclass: Option<TypeRef>,
    pub interfaces: Vec<TypeRef>,
    pub annotations: Vec<AnnotationUse>,
    pub methods: BTreeMap<(String, usize), MethodInfo>,
    pub fields: BTreeMap<String, FieldInfo>,
    pub synthetic: bool,
}

impl ClassInfo {
    pub fn simple_name(&self) -> &str {
        self.qname.rsplit('.').next().unwrap_or(&self.qname)
    }
}

#[derive(Debug, Default)]
pub struct ProjectIndex {
    classes: BTreeMap<String, ClassInfo>,
    units: Vec<(Option<String>, Vec<Import>, String)>,
    by_signature: BTreeMap<(String, usize), Vec<String>>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn method_entity_name(class: &str, name: &str, arity: usize) -> String {
    format!("{class}.{name}/{arity}")
}

impl ProjectIndex {
    pub fn build(units: &[SourceUnit]) -> Self {
        let mut index = ProjectIndex::default();
        for (ui, su) in units.iter().enumerate() {
            let u = &su.unit;
            index.units.push((u.package.clone(), u.imports.clone(), u.path.clone()));
            for (ci, c) in u.classes.iter().enumerate() {
                let qname = u.qualify(&c.name);
                if index.classes.contains_key(&qname) {
                    index.diagnostics.push(
                        Diagnostic::new(codes::DUPLICATE_METHOD, format!("class {qname} declared more than once"))
                            .at(SourceLocation::at(&u.path, c.pos)),
                    );
                    continue;
                }
                let mut info = ClassInfo {
                    id: EntityId::derive(EntityKind::ClassUnit, &qname, &u.path),
                    qname: qname.clone(),
                    unit: ui,
                    decl: ci,
                    kind: c.kind,
                    superclass: c.superclass.clone(),
                    interfaces: c.interfaces.clone(),
                    annotations: c.annotations.clone(),
                    methods: BTreeMap::new(),
                    fields: BTreeMap::new(),
                    synthetic: su.is_synthetic(),
                };
                for m in &c.methods {
                    let key = (m.name.clone(), m.arity);
                    if info.methods.contains_key(&key) {
                        index.diagnostics.push(
                            Diagnostic::new(
                                codes::DUPLICATE_METHOD,
                                format!(
                                    "overloads of {qname}.{} with arity {} share one method entity",
                                    m.name, m.arity
                                ),
                            )
                            .at(SourceLocation::at(&u.path, m.pos)),
                        );
                        continue;
                    }
                    let ename = method_entity_name(&qname, &m.name, m.arity);
                    info.methods.insert(
                        key,
                        MethodInfo {
                            id: EntityId::derive(EntityKind::MethodUnit, &ename, &u.path),
                            name: m.name.clone(),
                            arity: m.arity,
                            class: qname.clone(),
                            return_type: m.return_type.clone(),
                            annotations: m.annotations.clone(),
                            pos: m.pos,
                        },
                    );
                    if !su.is_synthetic() {
                        index.by_signature.entry((m.name.clone(), m.arity)).or_default().push(qname.clone());
                    }
                }
                for f in &c.fields {
                    let fname = format!("{qname}.{}", f.name);
                    info.fields.entry(f.name.clone()).or_insert(FieldInfo {
                        id: EntityId::derive(EntityKind::FieldUnit, &fname, &u.path),
                        name: f.name.clone(),
                        class: qname.clone(),
                        ty: f.ty.clone(),
                    });
                }
                index.classes.insert(qname, info);
            }
        }
        index
    }

    pub fn class(&self, qname: &str) -> Option<&ClassInfo> {
        self.classes.get(qname)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassInfo> {
        self.classes.values()
    }

    /// Looks up a class by the binary or canonical name used in descriptors
    /// (`a.b.Outer$Inner` or `a.b.Outer.Inner`).
    pub fn class_by_binary_name(&self, name: &str) -> Option<&ClassInfo> {
        let name = name.trim();
        self.classes.get(name).or_else(|| self.classes.get(&name.replace('$', ".")))
    }

    /// Resolves a type name as written inside class `ctx` of unit `unit`.
    pub fn resolve_type(&self, unit: usize, ctx: &str, ty: &TypeRef) -> Ty {
        if ty.dims > 0 || ty.is_primitive() {
            return Ty::External(ty.name.clone());
        }
        self.resolve_name(unit, ctx, &ty.name).unwrap_or_else(|| Ty::External(ty.name.clone()))
    }

    /// Like [`resolve_type`](Self::resolve_type) but `None` when the name is
    /// not a project class.
    pub fn resolve_name(&self, unit: usize, ctx: &str, name: &str) -> Option<Ty> {
        let (package, imports, _) = self.units.get(unit)?;
        let project = |q: String| self.classes.contains_key(&q).then_some(Ty::Project(q));
        if let Some((first, rest)) = name.split_once('.') {
            if let Some(t) = project(name.to_string()) {
                return Some(t);
            }
            if let Some(Ty::Project(q)) = self.resolve_name(unit, ctx, first) {
                return project(format!("{q}.{rest}"));
            }
            return None;
        }
        // enclosing classes, innermost first
        let mut scope = ctx.to_string();
        loop {
            if let Some(t) = project(format!("{scope}.{name}")) {
                return Some(t);
            }
            match scope.rsplit_once('.') {
                Some((outer, _)) => scope = outer.to_string(),
                None => break,
            }
        }
        if let Some(t) = project(name.to_string()) {
            return Some(t);
        }
        for imp in imports.iter().filter(|i| !i.wildcard && !i.is_static) {
            if imp.name.rsplit('.').next() == Some(name) {
                return project(imp.name.clone());
            }
        }
        if let Some(p) = package {
            if let Some(t) = project(format!("{p}.{name}")) {
                return Some(t);
            }
        }
        for imp in imports.iter().filter(|i| i.wildcard && !i.is_static) {
            if let Some(t) = project(format!("{}.{name}", imp.name)) {
                return Some(t);
            }
        }
        None
    }

    fn class_unit_ctx(&self, q: &str) -> Option<(usize, &str)> {
        self.classes.get(q).map(|c| (c.unit, c.qname.as_str()))
    }

    /// Resolved direct supertypes of a project class.
    pub fn supertypes(&self, q: &str) -> Vec<Ty> {
        let Some(c) = self.classes.get(q) else { return Vec::new() };
        c.superclass
            .iter()
            .chain(c.interfaces.iter())
            .map(|t| self.resolve_type(c.unit, &c.qname, t))
            .collect()
    }

    /// All transitive supertypes, breadth first, excluding `q` itself.
    pub fn ancestors(&self, q: &str) -> Vec<Ty> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::from([q.to_string()]);
        let mut queue = VecDeque::from([q.to_string()]);
        while let Some(cur) = queue.pop_front() {
            for t in self.supertypes(&cur) {
                if let Ty::Project(p) = &t {
                    if !seen.insert(p.clone()) {
                        continue;
                    }
                    queue.push_back(p.clone());
                }
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// Simple names of every ancestor, project or external.
    pub fn ancestor_simple_names(&self, q: &str) -> BTreeSet<String> {
        self.ancestors(q)
            .into_iter()
            .filter_map(|t| match t {
                Ty::Project(n) | Ty::External(n) => Some(n.rsplit('.').next().unwrap_or(&n).to_string()),
                Ty::Unknown => None,
            })
            .collect()
    }

    pub fn has_external_ancestor(&self, q: &str) -> bool {
        self.ancestors(q).iter().any(|t| matches!(t, Ty::External(_)))
    }

    fn hierarchy(&self, q: &str) -> Vec<String> {
        let mut out = vec![q.to_string()];
        out.extend(self.ancestors(q).into_iter().filter_map(|t| match t {
            Ty::Project(p) => Some(p),
            _ => None,
        }));
        out
    }

    /// Finds a method by name and arity in `q` or its project ancestors.
    pub fn find_method(&self, q: &str, name: &str, arity: usize) -> Option<&MethodInfo> {
        self.hierarchy(q)
            .iter()
            .find_map(|c| self.classes.get(c)?.methods.get(&(name.to_string(), arity)))
    }

    pub fn find_field(&self, q: &str, name: &str) -> Option<&FieldInfo> {
        self.hierarchy(q).iter().find_map(|c| self.classes.get(c)?.fields.get(name))
    }

    /// Non-generated classes declaring a method with this name and arity.
    pub fn classes_with_method(&self, name: &str, arity: usize) -> &[String] {
        self.by_signature.get(&(name.to_string(), arity)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Return type of a method resolved in its declaring class's context.
    pub fn return_type(&self, m: &MethodInfo) -> Ty {
        match (&m.return_type, self.class_unit_ctx(&m.class)) {
            (Some(rt), Some((unit, ctx))) => self.resolve_type(unit, ctx, rt),
            _ => Ty::Unknown,
        }
    }

    pub fn field_type(&self, f: &FieldInfo) -> Ty {
        match self.class_unit_ctx(&f.class) {
            Some((unit, ctx)) => self.resolve_type(unit, ctx, &f.ty),
            None => Ty::Unknown,
        }
    }
}
