use crate::location::Pos;
use std::collections::BTreeMap;

/// Reference to a type as written in source: dotted name without generic
/// arguments, plus array dimensions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TypeRef {
    pub name: String,
    pub dims: u32,
}

impl TypeRef {
    pub fn named(name: impl Into<String>) -> Self {
        TypeRef { name: name.into(), dims: 0 }
    }

    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }

    pub fn is_primitive(&self) -> bool {
        self.dims == 0 && PRIMITIVES.contains(&self.name.as_str())
    }
}

pub const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];

#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationValue {
    Str(String),
    List(Vec<String>),
    /// Anything that is not a string literal or an array of them.
    Other(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationUse {
    pub name: String,
    /// A single unnamed argument is stored under `value`.
    pub arguments: BTreeMap<String, AnnotationValue>,
    pub pos: Pos,
}

impl AnnotationUse {
    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Class,
    Interface,
    Enum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    /// Simple name; nested classes use `Outer.Inner`.
    pub name: String,
    pub kind: ClassKind,
    pub superclass: Option<TypeRef>,
    pub interfaces: Vec<TypeRef>,
    pub annotations: Vec<AnnotationUse>,
    pub methods: Vec<MethodDecl>,
    pub fields: Vec<FieldDecl>,
    pub is_public: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub arity: usize,
    pub params: Vec<Param>,
    /// `None` for constructors.
    pub return_type: Option<TypeRef>,
    pub annotations: Vec<AnnotationUse>,
    pub is_static: bool,
    /// `None` for abstract and interface methods.
    pub body: Option<Vec<Stmt>>,
    pub pos: Pos,
}

impl MethodDecl {
    pub fn is_constructor(&self) -> bool {
        self.return_type.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeRef,
    pub init: Option<Expr>,
    pub is_static: bool,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub name: String,
    pub is_static: bool,
    pub wildcard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OoCompilationUnit {
    pub path: String,
    pub package: Option<String>,
    pub imports: Vec<Import>,
    pub classes: Vec<ClassDecl>,
}

impl OoCompilationUnit {
    pub fn qualify(&self, class_name: &str) -> String {
        match &self.package {
            Some(p) if !p.is_empty() => format!("{p}.{class_name}"),
            _ => class_name.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatchClause {
    pub types: Vec<TypeRef>,
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    LocalVar { ty: TypeRef, name: String, init: Option<Expr> },
    Expr(Expr),
    If { cond: Expr, then: Vec<Stmt>, otherwise: Option<Vec<Stmt>> },
    While { cond: Expr, body: Vec<Stmt> },
    DoWhile { body: Vec<Stmt>, cond: Expr },
    For { init: Vec<Stmt>, cond: Option<Expr>, update: Vec<Expr>, body: Vec<Stmt> },
    ForEach { ty: TypeRef, name: String, iterable: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Throw(Expr),
    Block(Vec<Stmt>),
    Try { resources: Vec<Stmt>, body: Vec<Stmt>, catches: Vec<CatchClause>, finally: Option<Vec<Stmt>> },
    Switch { selector: Expr, body: Vec<Stmt> },
    /// `case`/`default` label inside a switch body.
    Case(Vec<Expr>),
    Break,
    Continue,
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Char(String),
    Number(String),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Name(String),
    This,
    Super,
    FieldAccess { target: Box<Expr>, name: String },
    Call { target: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    New { ty: TypeRef, args: Vec<Expr> },
    NewArray { ty: TypeRef, dims: Vec<Expr>, init: Option<Vec<Expr>> },
    ArrayInit(Vec<Expr>),
    Index { target: Box<Expr>, index: Box<Expr> },
    Unary { op: &'static str, operand: Box<Expr> },
    Binary { op: &'static str, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: &'static str, target: Box<Expr>, value: Box<Expr> },
    Conditional { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
    Cast { ty: TypeRef, expr: Box<Expr> },
    InstanceOf { expr: Box<Expr>, ty: TypeRef },
    ClassLit(TypeRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
    /// End of the expression's last token (used for literal spans).
    pub end: Pos,
}

impl Expr {
    pub fn as_str_literal(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Literal(Literal::Str(s)) => Some(s),
            _ => None,
        }
    }

    /// Visits this expression and every sub-expression, outermost first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::FieldAccess { target, .. } => target.walk(f),
            ExprKind::Call { target, args, .. } => {
                if let Some(t) = target {
                    t.walk(f);
                }
                args.iter().for_each(|a| a.walk(f));
            }
            ExprKind::New { args, .. } => args.iter().for_each(|a| a.walk(f)),
            ExprKind::NewArray { dims, init, .. } => {
                dims.iter().for_each(|a| a.walk(f));
                init.iter().flatten().for_each(|a| a.walk(f));
            }
            ExprKind::ArrayInit(items) => items.iter().for_each(|a| a.walk(f)),
            ExprKind::Index { target, index } => {
                target.walk(f);
                index.walk(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Assign { target, value, .. } => {
                target.walk(f);
                value.walk(f);
            }
            ExprKind::Conditional { cond, then, otherwise } => {
                cond.walk(f);
                then.walk(f);
                otherwise.walk(f);
            }
            ExprKind::Cast { expr, .. } | ExprKind::InstanceOf { expr, .. } => expr.walk(f),
            ExprKind::Literal(_) | ExprKind::Name(_) | ExprKind::This | ExprKind::Super | ExprKind::ClassLit(_) => {}
        }
    }
}

impl Stmt {
    /// Expressions directly owned by this statement (not by nested statements).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::LocalVar { init, .. } => init.iter().collect(),
            StmtKind::Expr(e) | StmtKind::Throw(e) => vec![e],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::DoWhile { cond, .. } => vec![cond],
            StmtKind::For { cond, update, .. } => cond.iter().chain(update.iter()).collect(),
            StmtKind::ForEach { iterable, .. } => vec![iterable],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Switch { selector, .. } => vec![selector],
            StmtKind::Case(labels) => labels.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Nested statement lists in source order.
    pub fn children(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::If { then, otherwise, .. } => {
                let mut v: Vec<&[Stmt]> = vec![then];
                if let Some(o) = otherwise {
                    v.push(o);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::ForEach { body, .. } => {
                vec![body]
            }
            StmtKind::For { init, body, .. } => vec![init, body],
            StmtKind::Block(b) | StmtKind::Switch { body: b, .. } => vec![b],
            StmtKind::Try { resources, body, catches, finally } => {
                let mut v: Vec<&[Stmt]> = vec![resources, body];
                v.extend(catches.iter().map(|c| c.body.as_slice()));
                if let Some(f) = finally {
                    v.push(f);
                }
                v
            }
            _ => Vec::new(),
        }
    }
}

/// Calls `f` on every statement in `stmts`, depth first in source order.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        for child in s.children() {
            walk_stmts(child, f);
        }
    }
}
