//! Entities and intra-language edges from parsed units.

use super::ast::*;
use super::index::{method_entity_name, ClassInfo, ProjectIndex, SourceUnit, Ty};
use super::parser::dotted_name;
use crate::diagnostics::{codes, Diagnostic};
use crate::graph::{
    Analyzer, DependencyGraph, Entity, EntityId, EntityKind, GraphError, Provenance, Relationship, RelationshipKind,
};
use crate::location::{Pos, SourceLocation};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// What to do with calls into code outside the project.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalsPolicy {
    #[default]
    Ignore,
    Placeholder,
}

enum Edge {
    Known(Relationship),
    Unresolved { source: EntityId, name: String, kind: RelationshipKind, evidence: Provenance },
}

/// Adds package, class, method and field entities plus Extends, Implements,
/// Calls, Instantiates and AccessesField edges. Units with a lowered origin
/// must have their `ServerPage` entity in the graph already; edges found in
/// their bodies are attributed to that page.
pub fn extract_oo_graph(
    units: &[SourceUnit],
    index: &ProjectIndex,
    graph: &mut DependencyGraph,
    externals: ExternalsPolicy,
) -> Result<Vec<Diagnostic>, GraphError> {
    let mut diags = index.diagnostics.clone();
    add_entities(units, index, graph)?;
    let mut edges = Vec::new();
    for class in index.classes() {
        let su = &units[class.unit];
        let decl = &su.unit.classes[class.decl];
        class_edges(index, su, class, externals, &mut edges);
        let analyzer = if su.is_synthetic() { Analyzer::JspLowering } else { Analyzer::OoFrontend };
        for f in decl.fields.iter() {
            if let Some(init) = &f.init {
                let source = su.origin.as_ref().map(|o| o.page.clone()).unwrap_or_else(|| class.id.clone());
                let mut w = Walker::new(index, su, class, source, analyzer, externals);
                w.expr(init);
                edges.append(&mut w.edges);
                diags.append(&mut w.diags);
            }
        }
        for m in decl.methods.iter() {
            let Some(body) = &m.body else { continue };
            let Some(info) = class.methods.get(&(m.name.clone(), m.arity)) else { continue };
            let source = su.origin.as_ref().map(|o| o.page.clone()).unwrap_or_else(|| info.id.clone());
            let mut w = Walker::new(index, su, class, source, analyzer, externals);
            for p in &m.params {
                let t = index.resolve_type(class.unit, &class.qname, &p.ty);
                w.declare(&p.name, t);
            }
            w.stmts(body);
            edges.append(&mut w.edges);
            diags.append(&mut w.diags);
        }
    }
    for e in edges {
        match e {
            Edge::Known(r) => graph.add_relationship(r)?,
            Edge::Unresolved { source, name, kind, evidence } => {
                graph.add_unresolved_relationship(source, &name, kind, evidence)?;
            }
        }
    }
    Ok(diags)
}

fn add_entities(units: &[SourceUnit], index: &ProjectIndex, graph: &mut DependencyGraph) -> Result<(), GraphError> {
    for class in index.classes() {
        let su = &units[class.unit];
        let decl = &su.unit.classes[class.decl];
        let parent = match (&su.origin, class.qname.rsplit_once('.')) {
            (Some(origin), _) => Some(origin.page.clone()),
            (None, Some((outer, _))) if index.class(outer).is_some() => Some(index.class(outer).unwrap().id.clone()),
            (None, _) => su.unit.package.as_deref().map(|p| add_package(graph, p)).transpose()?,
        };
        let mut entity = Entity::new(EntityKind::ClassUnit, &class.qname, su.entity_location(decl.pos))
            .synthetic(su.is_synthetic());
        entity.parent = parent;
        if entity.parent.as_ref().is_some_and(|p| !graph.contains_entity(p)) {
            // outer class not added yet: classes are visited in name order, and an
            // outer name sorts before its nested names
            entity.parent = None;
        }
        let class_id = graph.add_entity(entity)?;
        for m in class.methods.values() {
            graph.add_entity(
                Entity::new(
                    EntityKind::MethodUnit,
                    method_entity_name(&class.qname, &m.name, m.arity),
                    su.entity_location(m.pos),
                )
                .with_parent(class_id.clone())
                .synthetic(su.is_synthetic()),
            )?;
        }
        for f in decl.fields.iter() {
            let Some(info) = class.fields.get(&f.name) else { continue };
            let e = Entity::new(EntityKind::FieldUnit, format!("{}.{}", class.qname, f.name), su.entity_location(f.pos))
                .with_parent(class_id.clone())
                .synthetic(su.is_synthetic());
            if e.id == info.id && !graph.contains_entity(&e.id) {
                graph.add_entity(e)?;
            }
        }
    }
    Ok(())
}

fn add_package(graph: &mut DependencyGraph, dotted: &str) -> Result<EntityId, GraphError> {
    let mut parent: Option<EntityId> = None;
    let mut name = String::new();
    for seg in dotted.split('.') {
        if !name.is_empty() {
            name.push('.');
        }
        name.push_str(seg);
        let mut e = Entity::new(EntityKind::Package, &name, SourceLocation::nowhere());
        e.parent = parent.clone();
        parent = Some(graph.add_entity(e)?);
    }
    Ok(parent.expect("package name is not empty"))
}

fn class_edges(
    index: &ProjectIndex,
    su: &SourceUnit,
    class: &ClassInfo,
    externals: ExternalsPolicy,
    out: &mut Vec<Edge>,
) {
    let decl = &su.unit.classes[class.decl];
    let Some(loc) = su.locate(decl.pos).or_else(|| Some(SourceLocation::file_start(&su.unit.path))) else {
        return;
    };
    let analyzer = if su.is_synthetic() { Analyzer::JspLowering } else { Analyzer::OoFrontend };
    let super_kind =
        |is_iface_list: bool| match (class.kind, is_iface_list) {
            (ClassKind::Interface, _) | (_, false) => RelationshipKind::Extends,
            _ => RelationshipKind::Implements,
        };
    let supers = decl.superclass.iter().map(|t| (t, false)).chain(decl.interfaces.iter().map(|t| (t, true)));
    for (t, iface) in supers {
        let kind = super_kind(iface);
        let evidence = Provenance::new(analyzer, loc.clone(), "");
        match index.resolve_type(class.unit, &class.qname, t) {
            Ty::Project(q) => {
                let target = index.class(&q).expect("resolved class exists").id.clone();
                out.push(Edge::Known(Relationship::new(class.id.clone(), target, kind, evidence)));
            }
            _ if externals == ExternalsPolicy::Placeholder => out.push(Edge::Unresolved {
                source: class.id.clone(),
                name: t.name.clone(),
                kind,
                evidence,
            }),
            _ => {}
        }
    }
}

struct Walker<'a> {
    index: &'a ProjectIndex,
    su: &'a SourceUnit,
    class: &'a ClassInfo,
    source: EntityId,
    analyzer: Analyzer,
    externals: ExternalsPolicy,
    scopes: Vec<HashMap<String, Ty>>,
    edges: Vec<Edge>,
    diags: Vec<Diagnostic>,
}

impl<'a> Walker<'a> {
    fn new(
        index: &'a ProjectIndex,
        su: &'a SourceUnit,
        class: &'a ClassInfo,
        source: EntityId,
        analyzer: Analyzer,
        externals: ExternalsPolicy,
    ) -> Self {
        Walker {
            index,
            su,
            class,
            source,
            analyzer,
            externals,
            scopes: vec![HashMap::new()],
            edges: Vec::new(),
            diags: Vec::new(),
        }
    }

    fn declare(&mut self, name: &str, ty: Ty) {
        self.scopes.last_mut().expect("scope").insert(name.to_string(), ty);
    }

    fn local(&self, name: &str) -> Option<&Ty> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn resolve(&self, t: &TypeRef) -> Ty {
        self.index.resolve_type(self.class.unit, &self.class.qname, t)
    }

    fn emit(&mut self, target: EntityId, kind: RelationshipKind, pos: Pos) {
        if let Some(loc) = self.su.locate(pos) {
            let evidence = Provenance::new(self.analyzer, loc, "");
            self.edges.push(Edge::Known(Relationship::new(self.source.clone(), target, kind, evidence)));
        }
    }

    fn emit_external(&mut self, name: String, kind: RelationshipKind, pos: Pos) {
        if self.externals != ExternalsPolicy::Placeholder {
            return;
        }
        if let Some(loc) = self.su.locate(pos) {
            let evidence = Provenance::new(self.analyzer, loc, "external");
            self.edges.push(Edge::Unresolved { source: self.source.clone(), name, kind, evidence });
        }
    }

    fn stmts(&mut self, stmts: &[Stmt]) {
        self.scopes.push(HashMap::new());
        for s in stmts {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::LocalVar { ty, name, init } => {
                let init_ty = init.as_ref().map(|e| self.expr(e));
                let t = if ty.name == "var" { init_ty.unwrap_or(Ty::Unknown) } else { self.resolve(ty) };
                self.declare(name, t);
            }
            StmtKind::For { init, cond, update, body } => {
                self.scopes.push(HashMap::new());
                for i in init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.expr(c);
                }
                for u in update {
                    self.expr(u);
                }
                self.stmts(body);
                self.scopes.pop();
            }
            StmtKind::ForEach { ty, name, iterable, body } => {
                self.expr(iterable);
                self.scopes.push(HashMap::new());
                let t = if ty.name == "var" { Ty::Unknown } else { self.resolve(ty) };
                self.declare(name, t);
                self.stmts(body);
                self.scopes.pop();
            }
            StmtKind::Try { resources, body, catches, finally } => {
                self.scopes.push(HashMap::new());
                for r in resources {
                    self.stmt(r);
                }
                self.stmts(body);
                self.scopes.pop();
                for c in catches {
                    self.scopes.push(HashMap::new());
                    let t = c.types.first().map(|t| self.resolve(t)).unwrap_or(Ty::Unknown);
                    self.declare(&c.name, t);
                    self.stmts(&c.body);
                    self.scopes.pop();
                }
                if let Some(f) = finally {
                    self.stmts(f);
                }
            }
            _ => {
                for e in s.own_exprs() {
                    self.expr(e);
                }
                for child in s.children() {
                    self.stmts(child);
                }
            }
        }
    }

    /// Type of a name used as a value or a qualifier.
    fn name_ty(&mut self, name: &str, pos: Pos) -> Ty {
        if let Some(t) = self.local(name) {
            return t.clone();
        }
        if let Some(f) = self.field_in_scope(name) {
            let (id, t) = (f.id.clone(), self.index.field_type(f));
            self.emit(id, RelationshipKind::AccessesField, pos);
            return t;
        }
        if let Some(t) = self.index.resolve_name(self.class.unit, &self.class.qname, name) {
            return t;
        }
        if name.starts_with(|c: char| c.is_uppercase()) || self.index.has_external_ancestor(&self.class.qname) {
            return Ty::External(name.to_string());
        }
        Ty::Unknown
    }

    /// Field visible by simple name: own hierarchy, then enclosing classes.
    fn field_in_scope(&self, name: &str) -> Option<&'a super::index::FieldInfo> {
        let mut scope = self.class.qname.clone();
        loop {
            if let Some(f) = self.index.find_field(&scope, name) {
                return Some(f);
            }
            match scope.rsplit_once('.') {
                Some((outer, _)) if self.index.class(outer).is_some() => scope = outer.to_string(),
                _ => return None,
            }
        }
    }

    fn method_in_scope(&self, name: &str, arity: usize) -> Option<&'a super::index::MethodInfo> {
        let mut scope = self.class.qname.clone();
        loop {
            if let Some(m) = self.index.find_method(&scope, name, arity) {
                return Some(m);
            }
            match scope.rsplit_once('.') {
                Some((outer, _)) if self.index.class(outer).is_some() => scope = outer.to_string(),
                _ => return None,
            }
        }
    }

    fn call_on(&mut self, recv: Ty, name: &str, arity: usize, pos: Pos) -> Ty {
        match recv {
            Ty::Project(q) => match self.index.find_method(&q, name, arity) {
                Some(m) => {
                    self.emit(m.id.clone(), RelationshipKind::Calls, pos);
                    self.index.return_type(m)
                }
                None => {
                    // inherited from an external supertype, or not declared at all
                    Ty::External(String::new())
                }
            },
            Ty::External(ext) => {
                if !ext.is_empty() {
                    self.emit_external(format!("{ext}.{name}/{arity}"), RelationshipKind::Calls, pos);
                }
                Ty::External(String::new())
            }
            Ty::Unknown => {
                let candidates = self.index.classes_with_method(name, arity).to_vec();
                match candidates.len() {
                    0 => Ty::Unknown,
                    n => {
                        if n > 1 {
                            let loc = self.su.locate(pos).unwrap_or_else(|| SourceLocation::file_start(&self.su.unit.path));
                            self.diags.push(
                                Diagnostic::new(
                                    codes::AMBIGUOUS_CALL,
                                    format!("call {name}/{arity} on an unknown receiver matches {n} classes"),
                                )
                                .at(loc),
                            );
                        }
                        let mut ret = Ty::Unknown;
                        for q in &candidates {
                            if let Some(m) = self.index.class(q).and_then(|c| c.methods.get(&(name.to_string(), arity))) {
                                self.emit(m.id.clone(), RelationshipKind::Calls, pos);
                                if n == 1 {
                                    ret = self.index.return_type(m);
                                }
                            }
                        }
                        ret
                    }
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> Ty {
        match &e.kind {
            ExprKind::Literal(Literal::Str(_)) => Ty::External("String".into()),
            ExprKind::Literal(_) | ExprKind::ClassLit(_) => Ty::External(String::new()),
            ExprKind::Name(n) => self.name_ty(n, e.pos),
            ExprKind::This => Ty::Project(self.class.qname.clone()),
            ExprKind::Super => match &self.class.superclass {
                Some(t) => self.resolve(t),
                None => Ty::External("Object".into()),
            },
            ExprKind::FieldAccess { target, name } => {
                if self.local_root(target).is_none() {
                    if let Some(dotted) = dotted_name(e) {
                        if let Some(t) = self.index.resolve_name(self.class.unit, &self.class.qname, &dotted) {
                            return t;
                        }
                    }
                }
                let recv = self.expr(target);
                match recv {
                    Ty::Project(q) => match self.index.find_field(&q, name) {
                        Some(f) => {
                            let (id, t) = (f.id.clone(), self.index.field_type(f));
                            self.emit(id, RelationshipKind::AccessesField, e.pos);
                            t
                        }
                        None => Ty::External(String::new()),
                    },
                    Ty::External(_) => Ty::External(String::new()),
                    Ty::Unknown => Ty::Unknown,
                }
            }
            ExprKind::Call { target, name, args } => {
                for a in args {
                    self.expr(a);
                }
                let arity = args.len();
                match target {
                    None if name == "this" || name == "super" => {
                        let owner = if name == "this" {
                            Ty::Project(self.class.qname.clone())
                        } else {
                            self.class.superclass.as_ref().map(|t| self.resolve(t)).unwrap_or(Ty::Unknown)
                        };
                        if let Ty::Project(q) = owner {
                            let simple = q.rsplit('.').next().unwrap_or(&q).to_string();
                            if let Some(m) =
                                self.index.class(&q).and_then(|c| c.methods.get(&(simple, arity)))
                            {
                                self.emit(m.id.clone(), RelationshipKind::Calls, e.pos);
                            }
                        }
                        Ty::External(String::new())
                    }
                    None => match self.method_in_scope(name, arity) {
                        Some(m) => {
                            self.emit(m.id.clone(), RelationshipKind::Calls, e.pos);
                            self.index.return_type(m)
                        }
                        None => Ty::External(String::new()),
                    },
                    Some(t) => {
                        let recv = self.expr(t);
                        self.call_on(recv, name, arity, e.pos)
                    }
                }
            }
            ExprKind::New { ty, args } => {
                for a in args {
                    self.expr(a);
                }
                let t = self.resolve(ty);
                match &t {
                    Ty::Project(q) => {
                        let id = self.index.class(q).expect("resolved class exists").id.clone();
                        self.emit(id, RelationshipKind::Instantiates, e.pos);
                    }
                    Ty::External(n) => self.emit_external(n.clone(), RelationshipKind::Instantiates, e.pos),
                    Ty::Unknown => {}
                }
                t
            }
            ExprKind::NewArray { dims, init, .. } => {
                for d in dims.iter().chain(init.iter().flatten()) {
                    self.expr(d);
                }
                Ty::External(String::new())
            }
            ExprKind::ArrayInit(items) => {
                for i in items {
                    self.expr(i);
                }
                Ty::External(String::new())
            }
            ExprKind::Index { target, index } => {
                self.expr(target);
                self.expr(index);
                Ty::Unknown
            }
            ExprKind::Unary { operand, .. } => self.expr(operand),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                let is_str = |t: &Ty| matches!(t, Ty::External(n) if n == "String");
                if *op == "+" && (is_str(&l) || is_str(&r)) {
                    Ty::External("String".into())
                } else {
                    Ty::External(String::new())
                }
            }
            ExprKind::Assign { target, value, .. } => {
                self.expr(value);
                self.expr(target)
            }
            ExprKind::Conditional { cond, then, otherwise } => {
                self.expr(cond);
                let t = self.expr(then);
                self.expr(otherwise);
                t
            }
            ExprKind::Cast { ty, expr } => {
                self.expr(expr);
                self.resolve(ty)
            }
            ExprKind::InstanceOf { expr, .. } => {
                self.expr(expr);
                Ty::External(String::new())
            }
        }
    }

    /// The root name of a field-access chain when it is a local or field.
    fn local_root(&self, e: &Expr) -> Option<()> {
        match &e.kind {
            ExprKind::Name(n) => (self.local(n).is_some() || self.field_in_scope(n).is_some()).then_some(()),
            ExprKind::FieldAccess { target, .. } => self.local_root(target),
            _ => Some(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_unit;

    fn graph_of(sources: &[(&str, &str)], externals: ExternalsPolicy) -> (DependencyGraph, Vec<Diagnostic>) {
        let units: Vec<_> =
            sources.iter().map(|(p, s)| SourceUnit::plain(parse_unit(s, p).unwrap().unit)).collect();
        let index = ProjectIndex::build(&units);
        let mut g = DependencyGraph::default();
        let d = extract_oo_graph(&units, &index, &mut g, externals).unwrap();
        g.seal().unwrap();
        (g, d)
    }

    fn edges(g: &DependencyGraph, kind: RelationshipKind) -> Vec<(String, String)> {
        let mut v: Vec<_> = g
            .relationships_of_kind(kind)
            .map(|r| (g.entity(&r.source).unwrap().name.clone(), g.entity(&r.target).unwrap().name.clone()))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    #[test]
    fn extends_within_project() {
        let (g, _) = graph_of(
            &[("src/p/A.java", "package p; public class A extends B {}"), ("src/p/B.java", "package p; public class B {}")],
            ExternalsPolicy::Ignore,
        );
        assert_eq!(edges(&g, RelationshipKind::Extends), [("p.A".to_string(), "p.B".to_string())]);
        assert!(g.find_one(EntityKind::Package, "p").is_some());
    }

    #[test]
    fn bean_instantiation_and_getter_call() {
        let (g, _) = graph_of(
            &[
                (
                    "src/package/BeansClass.java",
                    "package package; public class BeansClass { private String firstName;\n\
                     public String getFirstName() { return firstName; } }",
                ),
                (
                    "src/web/Page.java",
                    "package web; public class Page { public void service() {\n\
                     package.BeansClass bean = new package.BeansClass();\n\
                     String n = bean.getFirstName(); } }",
                ),
            ],
            ExternalsPolicy::Ignore,
        );
        assert_eq!(
            edges(&g, RelationshipKind::Instantiates),
            [("web.Page.service/0".to_string(), "package.BeansClass".to_string())]
        );
        assert_eq!(
            edges(&g, RelationshipKind::Calls),
            [("web.Page.service/0".to_string(), "package.BeansClass.getFirstName/0".to_string())]
        );
        assert_eq!(
            edges(&g, RelationshipKind::AccessesField),
            [("package.BeansClass.getFirstName/0".to_string(), "package.BeansClass.firstName".to_string())]
        );
    }

    #[test]
    fn unambiguous_calls_match_hand_oracle() {
        // every call is statically resolvable; the oracle was enumerated by hand
        let (g, d) = graph_of(
            &[
                (
                    "src/a/Repo.java",
                    "package a; public class Repo { public Item find(int id) { return new Item(); }\n\
                     public void save(Item i) { i.touch(); } }",
                ),
                ("src/a/Item.java", "package a; public class Item { int hits; void touch() { hits++; } }"),
                (
                    "src/a/Service.java",
                    "package a; public class Service extends Base { private Repo repo = new Repo();\n\
                     public void run() { Item it = repo.find(1); repo.save(it); helper(); this.helper(); } }",
                ),
                ("src/a/Base.java", "package a; public class Base { protected void helper() {} }"),
            ],
            ExternalsPolicy::Ignore,
        );
        assert!(d.is_empty(), "{d:?}");
        let pairs = |v: &[(&str, &str)]| v.iter().map(|(s, t)| (s.to_string(), t.to_string())).collect::<Vec<_>>();
        assert_eq!(
            edges(&g, RelationshipKind::Calls),
            pairs(&[
                ("a.Repo.save/1", "a.Item.touch/0"),
                ("a.Service.run/0", "a.Base.helper/0"),
                ("a.Service.run/0", "a.Repo.find/1"),
                ("a.Service.run/0", "a.Repo.save/1"),
            ])
        );
        assert_eq!(
            edges(&g, RelationshipKind::Instantiates),
            pairs(&[("a.Repo.find/1", "a.Item"), ("a.Service", "a.Repo")])
        );
        assert_eq!(edges(&g, RelationshipKind::AccessesField), pairs(&[("a.Item.touch/0", "a.Item.hits"), ("a.Service.run/0", "a.Service.repo")]));
    }

    #[test]
    fn external_calls_are_ignored_by_default() {
        let src = "public class P { void m() { double d = Math.pow(2, 3); } }";
        let (g, _) = graph_of(&[("P.java", src)], ExternalsPolicy::Ignore);
        assert_eq!(g.relationships_of_kind(RelationshipKind::Calls).count(), 0);
        assert_eq!(g.find(EntityKind::UnresolvedTarget, "Math.pow/2").count(), 0);
        let (g, _) = graph_of(&[("P.java", src)], ExternalsPolicy::Placeholder);
        assert_eq!(g.find(EntityKind::UnresolvedTarget, "Math.pow/2").count(), 1);
    }

    #[test]
    fn one_method_entity_per_declared_method() {
        let src = "public class C { C() {} void a() {} void b(int x) {} int c(int x, int y) { return 0; } }";
        let (g, _) = graph_of(&[("C.java", src)], ExternalsPolicy::Ignore);
        assert_eq!(g.entities().filter(|e| e.kind == EntityKind::MethodUnit).count(), 4);
        assert!(g.find_one(EntityKind::MethodUnit, "C.C/0").is_some());
    }

    #[test]
    fn ambiguous_unknown_receiver_links_every_candidate() {
        let (g, d) = graph_of(
            &[
                ("X.java", "public class X { public void go() {} }"),
                ("Y.java", "public class Y { public void go() {} }"),
                ("Z.java", "public class Z { void m(X[] xs) { xs[0].go(); } }"),
            ],
            ExternalsPolicy::Ignore,
        );
        let calls = edges(&g, RelationshipKind::Calls);
        assert_eq!(calls.len(), 2, "{calls:?}");
        assert_eq!(d.iter().filter(|d| d.code == codes::AMBIGUOUS_CALL).count(), 1);
    }
}
