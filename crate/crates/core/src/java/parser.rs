//! Recursive-descent parser for the supported Java subset.
//!
//! Class and method structure (headers, braces) must be well formed; a
//! malformed structure is a [`SyntaxError`]. Inside method bodies the parser
//! recovers statement by statement: an unsupported construct (lambdas,
//! method references, anonymous classes, local classes, switch expressions)
//! skips the enclosing statement and records a diagnostic.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::diagnostics::{codes, Diagnostic};
use crate::location::{Pos, SourceLocation};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}:{pos}: {message}")]
pub struct SyntaxError {
    pub path: String,
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParsedUnit {
    pub unit: OoCompilationUnit,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse_unit(source: &str, path: &str) -> Result<ParsedUnit, SyntaxError> {
    let path = crate::location::normalize_path(path);
    let toks = tokenize(source).map_err(|e| SyntaxError { path: path.clone(), pos: e.pos, message: e.message })?;
    let mut p = Parser { toks, i: 0, path, diags: Vec::new(), nested: Vec::new() };
    let unit = p.compilation_unit()?;
    Ok(ParsedUnit { unit, diagnostics: p.diags })
}

#[derive(Debug)]
struct PErr {
    message: String,
    pos: Pos,
    unsupported: bool,
}

type PResult<T> = Result<T, PErr>;

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

const NOT_TYPES: &[&str] = &[
    "new", "return", "true", "false", "null", "this", "super", "instanceof", "if", "else", "for", "while", "do",
    "switch", "case", "try", "catch", "finally", "throw", "throws", "break", "continue", "class", "interface", "enum",
    "assert", "yield",
];

struct Parser {
    toks: Vec<Token>,
    i: usize,
    path: String,
    diags: Vec<Diagnostic>,
    nested: Vec<ClassDecl>,
}

impl Parser {
    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.i)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.i + k)
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_ident(&self, name: &str) -> bool {
        self.peek().is_some_and(|t| t.is_ident(name))
    }

    fn pos(&self) -> Pos {
        self.peek().map(|t| t.pos).or_else(|| self.toks.last().map(|t| t.end)).unwrap_or(Pos::START)
    }

    fn prev_end(&self) -> Pos {
        if self.i == 0 {
            Pos::START
        } else {
            self.toks[self.i - 1].end
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(PErr { message: message.into(), pos: self.pos(), unsupported: false })
    }

    fn unsupported<T>(&self, what: &str) -> PResult<T> {
        Err(PErr { message: format!("unsupported construct: {what}"), pos: self.pos(), unsupported: true })
    }

    fn syntax(&self, e: PErr) -> SyntaxError {
        SyntaxError { path: self.path.clone(), pos: e.pos, message: e.message }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, name: &str) -> bool {
        if self.at_ident(name) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(format!("expected '{op}'"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().and_then(|t| t.ident()) {
            Some(name) => {
                let name = name.to_string();
                self.i += 1;
                Ok(name)
            }
            None => self.err("expected identifier"),
        }
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.at_op(".") && self.peek_at(1).and_then(|t| t.ident()).is_some() {
            self.i += 1;
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    /// Index of the token closing the bracket opened at `open`.
    fn matching(&self, open: usize) -> Option<usize> {
        let (o, c) = match &self.toks.get(open)?.kind {
            TokenKind::Op("{") => ("{", "}"),
            TokenKind::Op("(") => ("(", ")"),
            TokenKind::Op("[") => ("[", "]"),
            _ => return None,
        };
        let mut depth = 0usize;
        for (k, t) in self.toks.iter().enumerate().skip(open) {
            if t.is_op(o) {
                depth += 1;
            } else if t.is_op(c) {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
        }
        None
    }

    /// Skips a balanced `<...>` type-argument list. Returns false (without
    /// moving) when the tokens cannot be type arguments.
    fn skip_type_args(&mut self) -> bool {
        if !self.at_op("<") {
            return false;
        }
        let start = self.i;
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            match &t.kind {
                TokenKind::Op("<") => depth += 1,
                TokenKind::Op(">") => {
                    depth -= 1;
                    if depth == 0 {
                        self.i += 1;
                        return true;
                    }
                }
                TokenKind::Op("." | "," | "?" | "&" | "[" | "]" | "@") | TokenKind::Ident(_) => {}
                _ => break,
            }
            self.i += 1;
        }
        self.i = start;
        false
    }

    fn parse_type(&mut self) -> PResult<TypeRef> {
        let first = match self.peek().and_then(|t| t.ident()) {
            Some(n) if !NOT_TYPES.contains(&n) => n.to_string(),
            _ => return self.err("expected type"),
        };
        self.i += 1;
        let mut name = first;
        self.skip_type_args();
        while self.at_op(".") && self.peek_at(1).and_then(|t| t.ident()).is_some_and(|n| !NOT_TYPES.contains(&n)) {
            self.i += 1;
            name.push('.');
            name.push_str(&self.ident()?);
            self.skip_type_args();
        }
        let mut dims = 0;
        while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
            self.i += 2;
            dims += 1;
        }
        if self.at_op("...") {
            self.i += 1;
            dims += 1;
        }
        Ok(TypeRef { name, dims })
    }

    fn skip_annotations_and_modifiers(&mut self) -> PResult<(Vec<AnnotationUse>, Vec<String>)> {
        let mut anns = Vec::new();
        let mut mods = Vec::new();
        loop {
            if self.at_op("@") && !self.peek_at(1).is_some_and(|t| t.is_ident("interface")) {
                anns.push(self.annotation()?);
            } else if let Some(m) = self.peek().and_then(|t| t.ident()).filter(|m| MODIFIERS.contains(m)) {
                // `default:` inside a switch is not a modifier, but members never see that
                mods.push(m.to_string());
                self.i += 1;
            } else if self.at_ident("non") && self.peek_at(1).is_some_and(|t| t.is_op("-")) {
                self.i += 3;
            } else {
                return Ok((anns, mods));
            }
        }
    }

    fn annotation(&mut self) -> PResult<AnnotationUse> {
        let pos = self.pos();
        self.expect_op("@")?;
        let name = self.qualified_name()?;
        let mut arguments = BTreeMap::new();
        if self.at_op("(") {
            let close = self.matching(self.i).ok_or_else(|| PErr {
                message: "unbalanced annotation arguments".into(),
                pos,
                unsupported: false,
            })?;
            self.i += 1;
            while self.i < close {
                let key = if self.peek().and_then(|t| t.ident()).is_some()
                    && self.peek_at(1).is_some_and(|t| t.is_op("="))
                {
                    let k = self.ident()?;
                    self.i += 1;
                    k
                } else {
                    "value".to_string()
                };
                let value = self.annotation_value(close);
                arguments.insert(key, value);
                if !self.eat_op(",") {
                    break;
                }
            }
            self.i = close + 1;
        }
        Ok(AnnotationUse { name, arguments, pos })
    }

    fn annotation_value(&mut self, close: usize) -> AnnotationValue {
        let start = self.i;
        // literal forms first
        if let Some(TokenKind::Str(s)) = self.peek().map(|t| &t.kind) {
            let s = s.clone();
            if self.peek_at(1).is_some_and(|t| t.is_op(",") || t.is_op(")")) {
                self.i += 1;
                return AnnotationValue::Str(s);
            }
        }
        if self.at_op("{") {
            if let Some(end) = self.matching(self.i) {
                let inner = &self.toks[self.i + 1..end];
                let all_str = inner.iter().enumerate().all(|(k, t)| {
                    if k % 2 == 0 {
                        matches!(t.kind, TokenKind::Str(_))
                    } else {
                        t.is_op(",")
                    }
                });
                if all_str {
                    let items = inner
                        .iter()
                        .filter_map(|t| match &t.kind {
                            TokenKind::Str(s) => Some(s.clone()),
                            _ => None,
                        })
                        .collect();
                    self.i = end + 1;
                    return AnnotationValue::List(items);
                }
            }
        }
        let mut depth = 0i32;
        while self.i < close {
            let t = &self.toks[self.i];
            if t.is_op("(") || t.is_op("{") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("}") || t.is_op("]") {
                depth -= 1;
            } else if t.is_op(",") && depth == 0 {
                break;
            }
            self.i += 1;
        }
        AnnotationValue::Other(token_text(&self.toks[start..self.i]))
    }

    // ---- declarations --------------------------------------------------

    fn compilation_unit(&mut self) -> Result<OoCompilationUnit, SyntaxError> {
        let mut unit =
            OoCompilationUnit { path: self.path.clone(), package: None, imports: Vec::new(), classes: Vec::new() };
        // annotations before `package` belong to the package; otherwise they
        // start the first type declaration
        let start = self.i;
        self.skip_annotations_and_modifiers().map_err(|e| self.syntax(e))?;
        if !self.at_ident("package") {
            self.i = start;
        }
        if self.eat_ident("package") {
            let name = self.qualified_name().map_err(|e| self.syntax(e))?;
            self.expect_op(";").map_err(|e| self.syntax(e))?;
            unit.package = Some(name);
        }
        while self.at_ident("import") {
            self.i += 1;
            let is_static = self.eat_ident("static");
            let name = self.qualified_name().map_err(|e| self.syntax(e))?;
            let wildcard = self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_op("*"));
            if wildcard {
                self.i += 2;
            }
            self.expect_op(";").map_err(|e| self.syntax(e))?;
            unit.imports.push(Import { name, is_static, wildcard });
        }
        while self.peek().is_some() {
            if self.eat_op(";") {
                continue;
            }
            let (anns, mods) = self.skip_annotations_and_modifiers().map_err(|e| self.syntax(e))?;
            let class = self.type_declaration(None, anns, &mods).map_err(|e| self.syntax(e))?;
            if let Some(class) = class {
                unit.classes.push(class);
                unit.classes.append(&mut self.nested);
            }
        }
        if unit.classes.is_empty() {
            return Err(SyntaxError { path: self.path.clone(), pos: self.pos(), message: "no class declaration".into() });
        }
        Ok(unit)
    }

    /// Parses `class|interface|enum|@interface Name ...{...}` at the cursor.
    /// Annotation type declarations are skipped and yield `None`.
    fn type_declaration(
        &mut self,
        outer: Option<&str>,
        annotations: Vec<AnnotationUse>,
        mods: &[String],
    ) -> PResult<Option<ClassDecl>> {
        let pos = self.pos();
        let kind = if self.eat_ident("class") {
            ClassKind::Class
        } else if self.eat_ident("interface") {
            ClassKind::Interface
        } else if self.eat_ident("enum") {
            ClassKind::Enum
        } else if self.at_op("@") && self.peek_at(1).is_some_and(|t| t.is_ident("interface")) {
            self.i += 2;
            self.ident()?;
            let close = self.matching(self.i).ok_or_else(|| PErr {
                message: "unbalanced annotation type body".into(),
                pos,
                unsupported: false,
            })?;
            self.i = close + 1;
            return Ok(None);
        } else if self.at_ident("record") {
            return self.unsupported("record declaration");
        } else {
            return self.err("expected class, interface or enum");
        };
        let simple = self.ident()?;
        let name = match outer {
            Some(o) => format!("{o}.{simple}"),
            None => simple.clone(),
        };
        self.skip_type_args();
        let mut superclass = None;
        let mut interfaces = Vec::new();
        loop {
            if self.eat_ident("extends") {
                let mut types = vec![self.parse_type()?];
                while self.eat_op(",") {
                    types.push(self.parse_type()?);
                }
                if kind == ClassKind::Interface {
                    interfaces.extend(types);
                } else {
                    superclass = types.into_iter().next();
                }
            } else if self.eat_ident("implements") {
                interfaces.push(self.parse_type()?);
                while self.eat_op(",") {
                    interfaces.push(self.parse_type()?);
                }
            } else if self.eat_ident("permits") {
                self.parse_type()?;
                while self.eat_op(",") {
                    self.parse_type()?;
                }
            } else {
                break;
            }
        }
        if !self.at_op("{") {
            return self.err("expected class body");
        }
        let close = self.matching(self.i).ok_or_else(|| PErr {
            message: format!("unbalanced braces in body of {name}"),
            pos,
            unsupported: false,
        })?;
        self.i += 1;
        let mut class = ClassDecl {
            name,
            kind,
            superclass,
            interfaces,
            annotations,
            methods: Vec::new(),
            fields: Vec::new(),
            is_public: mods.iter().any(|m| m == "public"),
            pos,
        };
        if kind == ClassKind::Enum {
            self.skip_enum_constants(close);
        }
        while self.i < close {
            self.member(&mut class, &simple, close)?;
        }
        self.i = close + 1;
        Ok(Some(class))
    }

    fn skip_enum_constants(&mut self, close: usize) {
        let mut depth = 0i32;
        while self.i < close {
            let t = &self.toks[self.i];
            if t.is_op("(") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("}") {
                depth -= 1;
            } else if t.is_op(";") && depth == 0 {
                self.i += 1;
                return;
            }
            self.i += 1;
        }
    }

    fn member(&mut self, class: &mut ClassDecl, simple: &str, close: usize) -> PResult<()> {
        if self.eat_op(";") {
            return Ok(());
        }
        let (anns, mods) = self.skip_annotations_and_modifiers()?;
        let is_static = mods.iter().any(|m| m == "static");
        if self.at_ident("class") || self.at_ident("interface") || self.at_ident("enum") || self.at_op("@") {
            let outer = class.name.clone();
            if let Some(inner) = self.type_declaration(Some(&outer), anns, &mods)? {
                self.nested.push(inner);
            }
            return Ok(());
        }
        if self.at_op("{") {
            let end = self.matching(self.i).ok_or_else(|| PErr {
                message: "unbalanced initializer block".into(),
                pos: self.pos(),
                unsupported: false,
            })?;
            self.i = end + 1;
            return Ok(());
        }
        self.skip_type_args();
        let pos = self.pos();
        // constructor
        if self.at_ident(simple) && self.peek_at(1).is_some_and(|t| t.is_op("(")) {
            self.i += 1;
            let mut method = self.method_rest(simple.to_string(), None, anns, is_static, pos)?;
            method.return_type = None;
            class.methods.push(method);
            return Ok(());
        }
        let ty = match self.parse_type() {
            Ok(t) => t,
            Err(e) => {
                self.diags.push(
                    Diagnostic::new(codes::UNSUPPORTED_MEMBER, format!("skipped class member: {}", e.message))
                        .at(SourceLocation::at(&self.path, e.pos)),
                );
                self.skip_member(close);
                return Ok(());
            }
        };
        let name_pos = self.pos();
        let name = self.ident()?;
        if self.at_op("(") {
            let method = self.method_rest(name, Some(ty), anns, is_static, name_pos)?;
            class.methods.push(method);
            return Ok(());
        }
        // field declarators
        let mut name = name;
        let mut fpos = name_pos;
        loop {
            let mut fty = ty.clone();
            while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
                self.i += 2;
                fty.dims += 1;
            }
            let init = if self.eat_op("=") {
                match self.expr() {
                    Ok(e) => Some(e),
                    Err(e) => {
                        self.diags.push(
                            Diagnostic::new(codes::UNSUPPORTED_MEMBER, format!("field initializer skipped: {}", e.message))
                                .at(SourceLocation::at(&self.path, e.pos)),
                        );
                        self.skip_to_field_end(close);
                        None
                    }
                }
            } else {
                None
            };
            class.fields.push(FieldDecl { name: name.clone(), ty: fty, init, is_static, pos: fpos });
            if self.eat_op(",") {
                fpos = self.pos();
                name = self.ident()?;
                continue;
            }
            self.expect_op(";")?;
            return Ok(());
        }
    }

    fn skip_to_field_end(&mut self, close: usize) {
        let mut depth = 0i32;
        while self.i < close {
            let t = &self.toks[self.i];
            if t.is_op("(") || t.is_op("{") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("}") || t.is_op("]") {
                depth -= 1;
            } else if (t.is_op(";") || t.is_op(",")) && depth == 0 {
                return;
            }
            self.i += 1;
        }
    }

    fn skip_member(&mut self, close: usize) {
        let mut depth = 0i32;
        while self.i < close {
            let t = &self.toks[self.i];
            if t.is_op("(") || t.is_op("{") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") {
                depth -= 1;
            } else if t.is_op("}") {
                depth -= 1;
                if depth == 0 {
                    self.i += 1;
                    return;
                }
            } else if t.is_op(";") && depth == 0 {
                self.i += 1;
                return;
            }
            self.i += 1;
        }
    }

    fn method_rest(
        &mut self,
        name: String,
        return_type: Option<TypeRef>,
        annotations: Vec<AnnotationUse>,
        is_static: bool,
        pos: Pos,
    ) -> PResult<MethodDecl> {
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.at_op(")") {
            self.skip_annotations_and_modifiers()?;
            let ty = self.parse_type()?;
            if self.at_ident("this") {
                // explicit receiver parameter
                self.i += 1;
            } else {
                let pname = self.ident()?;
                let mut ty = ty;
                while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
                    self.i += 2;
                    ty.dims += 1;
                }
                params.push(Param { ty, name: pname });
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
            self.i += 2;
        }
        if self.eat_ident("throws") {
            self.parse_type()?;
            while self.eat_op(",") {
                self.parse_type()?;
            }
        }
        let body = if self.at_op("{") {
            let open = self.i;
            let close = self.matching(open).ok_or_else(|| PErr {
                message: format!("unbalanced braces in method {name}"),
                pos,
                unsupported: false,
            })?;
            self.i = open + 1;
            let stmts = self.statements_until(close);
            self.i = close + 1;
            Some(stmts)
        } else {
            if self.eat_ident("default") {
                let mut depth = 0i32;
                while let Some(t) = self.peek() {
                    if t.is_op(";") && depth == 0 {
                        break;
                    }
                    if t.is_op("(") || t.is_op("{") {
                        depth += 1;
                    } else if t.is_op(")") || t.is_op("}") {
                        depth -= 1;
                    }
                    self.i += 1;
                }
            }
            self.expect_op(";")?;
            None
        };
        Ok(MethodDecl { arity: params.len(), name, params, return_type, annotations, is_static, body, pos })
    }

    // ---- statements ----------------------------------------------------

    /// Parses statements up to (not including) token index `close`,
    /// recovering from statement-level errors.
    fn statements_until(&mut self, close: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        while self.i < close {
            let start = self.i;
            match self.statement() {
                Ok(mut stmts) if self.i <= close => out.append(&mut stmts),
                Ok(_) => {
                    self.record_skip(start, Pos::START, "statement overran its block", false);
                    self.i = start;
                    self.skip_statement(close);
                }
                Err(e) => {
                    self.record_skip(start, e.pos, &e.message, e.unsupported);
                    self.i = start;
                    self.skip_statement(close);
                }
            }
            if self.i == start {
                self.i += 1;
            }
        }
        out
    }

    fn record_skip(&mut self, start: usize, pos: Pos, message: &str, unsupported: bool) {
        let at = if pos == Pos::START { self.toks[start].pos } else { pos };
        let code = if unsupported { codes::UNSUPPORTED_STATEMENT } else { codes::SYNTAX_ERROR };
        self.diags.push(
            Diagnostic::new(code, format!("statement skipped: {message}")).at(SourceLocation::at(&self.path, at)),
        );
    }

    fn skip_statement(&mut self, close: usize) {
        let mut depth = 0i32;
        while self.i < close {
            let t = &self.toks[self.i];
            if t.is_op("(") || t.is_op("[") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") || t.is_op("}") {
                if depth == 0 {
                    return;
                }
                depth -= 1;
                if t.is_op("}") && depth == 0 {
                    let next_continues = self
                        .toks
                        .get(self.i + 1)
                        .is_some_and(|n| n.is_op(")") || n.is_op(",") || n.is_op(";") || n.is_op("."));
                    if !next_continues {
                        self.i += 1;
                        return;
                    }
                }
            } else if t.is_op(";") && depth == 0 {
                self.i += 1;
                return;
            }
            self.i += 1;
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if !self.at_op("{") {
            return self.err("expected '{'");
        }
        let close = match self.matching(self.i) {
            Some(c) => c,
            None => return self.err("unbalanced block"),
        };
        self.i += 1;
        let stmts = self.statements_until(close);
        self.i = close + 1;
        Ok(stmts)
    }

    /// A statement used as the body of a control structure.
    fn body(&mut self) -> PResult<Vec<Stmt>> {
        if self.at_op("{") {
            self.block()
        } else {
            self.statement()
        }
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_op("(")?;
        let e = self.expr()?;
        self.expect_op(")")?;
        Ok(e)
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        let pos = self.pos();
        let one = |kind| Ok(vec![Stmt { kind, pos }]);
        let Some(tok) = self.peek() else {
            return self.err("unexpected end of input");
        };
        if tok.is_op("{") {
            let b = self.block()?;
            return one(StmtKind::Block(b));
        }
        if tok.is_op(";") {
            self.i += 1;
            return one(StmtKind::Empty);
        }
        if tok.is_op("@") {
            return self.local_var_decl(pos);
        }
        let word = tok.ident().map(str::to_string);
        match word.as_deref() {
            Some("if") => {
                self.i += 1;
                let cond = self.paren_expr()?;
                let then = self.body()?;
                let otherwise = if self.eat_ident("else") { Some(self.body()?) } else { None };
                one(StmtKind::If { cond, then, otherwise })
            }
            Some("while") => {
                self.i += 1;
                let cond = self.paren_expr()?;
                let body = self.body()?;
                one(StmtKind::While { cond, body })
            }
            Some("do") => {
                self.i += 1;
                let body = self.body()?;
                if !self.eat_ident("while") {
                    return self.err("expected 'while'");
                }
                let cond = self.paren_expr()?;
                self.expect_op(";")?;
                one(StmtKind::DoWhile { body, cond })
            }
            Some("for") => {
                self.i += 1;
                self.for_statement(pos)
            }
            Some("return") => {
                self.i += 1;
                let value = if self.at_op(";") { None } else { Some(self.expr()?) };
                self.expect_op(";")?;
                one(StmtKind::Return(value))
            }
            Some("throw") => {
                self.i += 1;
                let e = self.expr()?;
                self.expect_op(";")?;
                one(StmtKind::Throw(e))
            }
            Some(kw @ ("break" | "continue")) => {
                self.i += 1;
                if self.peek().and_then(|t| t.ident()).is_some() {
                    self.i += 1;
                }
                self.expect_op(";")?;
                one(if kw == "break" { StmtKind::Break } else { StmtKind::Continue })
            }
            Some("try") => {
                self.i += 1;
                self.try_statement(pos)
            }
            Some("switch") => {
                self.i += 1;
                let selector = self.paren_expr()?;
                let body = self.block()?;
                one(StmtKind::Switch { selector, body })
            }
            Some("case") => {
                self.i += 1;
                let mut labels = vec![self.conditional()?];
                while self.eat_op(",") {
                    labels.push(self.conditional()?);
                }
                if self.at_op("->") {
                    return self.unsupported("arrow case label");
                }
                self.expect_op(":")?;
                one(StmtKind::Case(labels))
            }
            Some("default") if self.peek_at(1).is_some_and(|t| t.is_op(":") || t.is_op("->")) => {
                self.i += 1;
                if self.at_op("->") {
                    return self.unsupported("arrow case label");
                }
                self.i += 1;
                one(StmtKind::Case(Vec::new()))
            }
            Some("synchronized") if self.peek_at(1).is_some_and(|t| t.is_op("(")) => {
                self.i += 1;
                self.paren_expr()?;
                let b = self.block()?;
                one(StmtKind::Block(b))
            }
            Some("assert") => {
                self.i += 1;
                let cond = self.expr()?;
                if self.eat_op(":") {
                    self.expr()?;
                }
                self.expect_op(";")?;
                one(StmtKind::Expr(cond))
            }
            Some("class" | "interface" | "enum" | "record") => self.unsupported("local type declaration"),
            Some("yield") if !self.peek_at(1).is_some_and(|t| t.is_op("=") || t.is_op("(") || t.is_op(".")) => {
                self.unsupported("yield")
            }
            Some("final") => self.local_var_decl(pos),
            Some(_) if self.peek_at(1).is_some_and(|t| t.is_op(":")) => {
                // labeled statement
                self.i += 2;
                self.statement()
            }
            _ => {
                if self.looks_like_declaration() {
                    self.local_var_decl(pos)
                } else {
                    let e = self.expr()?;
                    self.expect_op(";")?;
                    one(StmtKind::Expr(e))
                }
            }
        }
    }

    fn looks_like_declaration(&mut self) -> bool {
        let save = self.i;
        let ok = self.parse_type().is_ok()
            && self.peek().and_then(|t| t.ident()).is_some_and(|n| !NOT_TYPES.contains(&n))
            && self
                .peek_at(1)
                .is_some_and(|t| t.is_op("=") || t.is_op(";") || t.is_op(",") || t.is_op("[") || t.is_op(":"));
        self.i = save;
        ok
    }

    fn local_var_decl(&mut self, pos: Pos) -> PResult<Vec<Stmt>> {
        self.skip_annotations_and_modifiers()?;
        let decls = self.declarators()?;
        self.expect_op(";")?;
        Ok(decls.into_iter().map(|(ty, name, init)| Stmt { kind: StmtKind::LocalVar { ty, name, init }, pos }).collect())
    }

    fn declarators(&mut self) -> PResult<Vec<(TypeRef, String, Option<Expr>)>> {
        let ty = self.parse_type()?;
        let mut out = Vec::new();
        loop {
            let name = self.ident()?;
            let mut vty = ty.clone();
            while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
                self.i += 2;
                vty.dims += 1;
            }
            let init = if self.eat_op("=") { Some(self.expr()?) } else { None };
            out.push((vty, name, init));
            if !self.eat_op(",") {
                return Ok(out);
            }
        }
    }

    fn for_statement(&mut self, pos: Pos) -> PResult<Vec<Stmt>> {
        self.expect_op("(")?;
        // for-each
        let save = self.i;
        self.skip_annotations_and_modifiers()?;
        if let Ok(ty) = self.parse_type() {
            if let Some(name) = self.peek().and_then(|t| t.ident()).map(str::to_string) {
                if self.peek_at(1).is_some_and(|t| t.is_op(":")) {
                    self.i += 2;
                    let iterable = self.expr()?;
                    self.expect_op(")")?;
                    let body = self.body()?;
                    return Ok(vec![Stmt { kind: StmtKind::ForEach { ty, name, iterable, body }, pos }]);
                }
            }
        }
        self.i = save;
        let mut init = Vec::new();
        if !self.at_op(";") {
            let ipos = self.pos();
            if self.at_ident("final") || self.looks_like_declaration() {
                self.skip_annotations_and_modifiers()?;
                for (ty, name, value) in self.declarators()? {
                    init.push(Stmt { kind: StmtKind::LocalVar { ty, name, init: value }, pos: ipos });
                }
            } else {
                loop {
                    let e = self.expr()?;
                    init.push(Stmt { kind: StmtKind::Expr(e), pos: ipos });
                    if !self.eat_op(",") {
                        break;
                    }
                }
            }
        }
        self.expect_op(";")?;
        let cond = if self.at_op(";") { None } else { Some(self.expr()?) };
        self.expect_op(";")?;
        let mut update = Vec::new();
        if !self.at_op(")") {
            loop {
                update.push(self.expr()?);
                if !self.eat_op(",") {
                    break;
                }
            }
        }
        self.expect_op(")")?;
        let body = self.body()?;
        Ok(vec![Stmt { kind: StmtKind::For { init, cond, update, body }, pos }])
    }

    fn try_statement(&mut self, pos: Pos) -> PResult<Vec<Stmt>> {
        let mut resources = Vec::new();
        if self.eat_op("(") {
            while !self.at_op(")") {
                let rpos = self.pos();
                if self.at_ident("final") || self.looks_like_declaration() {
                    self.skip_annotations_and_modifiers()?;
                    let ty = self.parse_type()?;
                    let name = self.ident()?;
                    self.expect_op("=")?;
                    let init = Some(self.expr()?);
                    resources.push(Stmt { kind: StmtKind::LocalVar { ty, name, init }, pos: rpos });
                } else {
                    let e = self.expr()?;
                    resources.push(Stmt { kind: StmtKind::Expr(e), pos: rpos });
                }
                if !self.eat_op(";") {
                    break;
                }
            }
            self.expect_op(")")?;
        }
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat_ident("catch") {
            self.expect_op("(")?;
            self.skip_annotations_and_modifiers()?;
            let mut types = vec![self.parse_type()?];
            while self.eat_op("|") {
                types.push(self.parse_type()?);
            }
            let name = self.ident()?;
            self.expect_op(")")?;
            let body = self.block()?;
            catches.push(CatchClause { types, name, body });
        }
        let finally = if self.eat_ident("finally") { Some(self.block()?) } else { None };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return self.err("try without catch or finally");
        }
        Ok(vec![Stmt { kind: StmtKind::Try { resources, body, catches, finally }, pos }])
    }

    // ---- expressions ---------------------------------------------------

    fn mk(&self, kind: ExprKind, pos: Pos) -> Expr {
        Expr { kind, pos, end: self.prev_end() }
    }

    pub(super) fn expr(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let lhs = self.conditional()?;
        if self.at_op("->") {
            return self.unsupported("lambda expression");
        }
        const ASSIGN: &[&str] = &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];
        if let Some(op) = self.peek().and_then(|t| match t.kind {
            TokenKind::Op(o) if ASSIGN.contains(&o) => Some(o),
            _ => None,
        }) {
            self.i += 1;
            let value = self.expr()?;
            return Ok(self.mk(ExprKind::Assign { op, target: Box::new(lhs), value: Box::new(value) }, pos));
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let cond = self.binary(1)?;
        if self.eat_op("?") {
            let then = self.expr()?;
            self.expect_op(":")?;
            let otherwise = self.conditional()?;
            if self.at_op("->") {
                return self.unsupported("lambda expression");
            }
            return Ok(self.mk(
                ExprKind::Conditional { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) },
                pos,
            ));
        }
        Ok(cond)
    }

    /// Binary operator at the cursor: (operator, precedence, token count).
    fn binop(&self) -> Option<(&'static str, u8, usize)> {
        let t = self.peek()?;
        let adjacent = |k: usize| {
            let a = self.peek_at(k - 1)?;
            let b = self.peek_at(k)?;
            (b.is_op(">") && a.end == b.pos).then_some(())
        };
        Some(match &t.kind {
            TokenKind::Op(">") => {
                if adjacent(1).is_some() {
                    if adjacent(2).is_some() {
                        (">>>", 8, 3)
                    } else {
                        (">>", 8, 2)
                    }
                } else {
                    (">", 7, 1)
                }
            }
            TokenKind::Op(op) => {
                let prec = match *op {
                    "||" => 1,
                    "&&" => 2,
                    "|" => 3,
                    "^" => 4,
                    "&" => 5,
                    "==" | "!=" => 6,
                    "<" | "<=" | ">=" => 7,
                    "<<" => 8,
                    "+" | "-" => 9,
                    "*" | "/" | "%" => 10,
                    _ => return None,
                };
                (*op, prec, 1)
            }
            TokenKind::Ident(w) if w == "instanceof" => ("instanceof", 7, 1),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let pos = self.pos();
        let mut lhs = self.unary()?;
        while let Some((op, prec, n)) = self.binop() {
            if prec < min_prec {
                break;
            }
            self.i += n;
            if op == "instanceof" {
                self.eat_ident("final");
                let ty = self.parse_type()?;
                // pattern binding
                if self.peek().and_then(|t| t.ident()).is_some_and(|n| !NOT_TYPES.contains(&n)) {
                    self.i += 1;
                }
                lhs = self.mk(ExprKind::InstanceOf { expr: Box::new(lhs), ty }, pos);
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        for op in ["+", "-", "!", "~", "++", "--"] {
            if self.at_op(op) {
                self.i += 1;
                let operand = self.unary()?;
                let op: &'static str = match op {
                    "+" => "+",
                    "-" => "-",
                    "!" => "!",
                    "~" => "~",
                    "++" => "++",
                    _ => "--",
                };
                return Ok(self.mk(ExprKind::Unary { op, operand: Box::new(operand) }, pos));
            }
        }
        if self.at_op("(") {
            if self.matching(self.i).and_then(|c| self.toks.get(c + 1)).is_some_and(|t| t.is_op("->")) {
                return self.unsupported("lambda expression");
            }
            if let Some(cast) = self.try_cast(pos)? {
                return Ok(cast);
            }
        }
        let primary = self.primary()?;
        self.postfix(primary)
    }

    fn try_cast(&mut self, pos: Pos) -> PResult<Option<Expr>> {
        let save = self.i;
        self.i += 1;
        let ty = match self.parse_type() {
            Ok(t) => t,
            Err(_) => {
                self.i = save;
                return Ok(None);
            }
        };
        // intersection casts
        while self.eat_op("&") {
            if self.parse_type().is_err() {
                self.i = save;
                return Ok(None);
            }
        }
        if !self.eat_op(")") {
            self.i = save;
            return Ok(None);
        }
        let next_starts_operand = self.peek().is_some_and(|t| match &t.kind {
            TokenKind::Ident(w) => w != "instanceof",
            TokenKind::Str(_) | TokenKind::Char(_) | TokenKind::Number(_) => true,
            TokenKind::Op(o) => matches!(*o, "(" | "!" | "~"),
        });
        let prim_operand = ty.is_primitive() && self.peek().is_some_and(|t| t.is_op("-") || t.is_op("+"));
        if next_starts_operand || prim_operand {
            let operand = self.unary()?;
            return Ok(Some(self.mk(ExprKind::Cast { ty, expr: Box::new(operand) }, pos)));
        }
        self.i = save;
        Ok(None)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        while !self.at_op(")") {
            args.push(self.expr()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        match tok.kind {
            TokenKind::Str(s) => {
                self.i += 1;
                Ok(self.mk(ExprKind::Literal(Literal::Str(s)), pos))
            }
            TokenKind::Char(c) => {
                self.i += 1;
                Ok(self.mk(ExprKind::Literal(Literal::Char(c)), pos))
            }
            TokenKind::Number(n) => {
                self.i += 1;
                Ok(self.mk(ExprKind::Literal(Literal::Number(n)), pos))
            }
            TokenKind::Op("(") => {
                self.i += 1;
                let e = self.expr()?;
                self.expect_op(")")?;
                if self.at_op("->") {
                    return self.unsupported("lambda expression");
                }
                Ok(e)
            }
            TokenKind::Op("{") => {
                self.i += 1;
                let mut items = Vec::new();
                while !self.at_op("}") {
                    items.push(self.expr()?);
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                Ok(self.mk(ExprKind::ArrayInit(items), pos))
            }
            TokenKind::Ident(word) => {
                self.i += 1;
                match word.as_str() {
                    "true" => Ok(self.mk(ExprKind::Literal(Literal::Bool(true)), pos)),
                    "false" => Ok(self.mk(ExprKind::Literal(Literal::Bool(false)), pos)),
                    "null" => Ok(self.mk(ExprKind::Literal(Literal::Null), pos)),
                    "this" => {
                        if self.at_op("(") {
                            let args = self.args()?;
                            return Ok(self.mk(ExprKind::Call { target: None, name: "this".into(), args }, pos));
                        }
                        Ok(self.mk(ExprKind::This, pos))
                    }
                    "super" => {
                        if self.at_op("(") {
                            let args = self.args()?;
                            return Ok(self.mk(ExprKind::Call { target: None, name: "super".into(), args }, pos));
                        }
                        Ok(self.mk(ExprKind::Super, pos))
                    }
                    "new" => self.creator(pos),
                    "switch" => self.unsupported("switch expression"),
                    _ => {
                        if self.at_op("->") {
                            return self.unsupported("lambda expression");
                        }
                        if self.at_op("(") {
                            let args = self.args()?;
                            return Ok(self.mk(ExprKind::Call { target: None, name: word, args }, pos));
                        }
                        // array type class literal: String[].class
                        if self.at_op("[")
                            && self.peek_at(1).is_some_and(|t| t.is_op("]"))
                            && self.peek_at(2).is_some_and(|t| t.is_op("."))
                        {
                            let mut dims = 0;
                            while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
                                self.i += 2;
                                dims += 1;
                            }
                            self.expect_op(".")?;
                            if !self.eat_ident("class") {
                                return self.err("expected 'class'");
                            }
                            return Ok(self.mk(ExprKind::ClassLit(TypeRef { name: word, dims }), pos));
                        }
                        Ok(self.mk(ExprKind::Name(word), pos))
                    }
                }
            }
            TokenKind::Op(o) => self.err(format!("unexpected '{o}'")),
        }
    }

    fn creator(&mut self, pos: Pos) -> PResult<Expr> {
        self.skip_type_args();
        self.skip_annotations_and_modifiers()?;
        let mut name = self.ident()?;
        self.skip_type_args();
        while self.eat_op(".") {
            name.push('.');
            name.push_str(&self.ident()?);
            self.skip_type_args();
        }
        if self.at_op("[") {
            let mut dims = Vec::new();
            let mut ndims = 0;
            while self.eat_op("[") {
                ndims += 1;
                if !self.at_op("]") {
                    dims.push(self.expr()?);
                }
                self.expect_op("]")?;
            }
            let init = if self.at_op("{") {
                match self.primary()?.kind {
                    ExprKind::ArrayInit(items) => Some(items),
                    _ => None,
                }
            } else {
                None
            };
            return Ok(self.mk(ExprKind::NewArray { ty: TypeRef { name, dims: ndims }, dims, init }, pos));
        }
        let args = self.args()?;
        if self.at_op("{") {
            return self.unsupported("anonymous class body");
        }
        Ok(self.mk(ExprKind::New { ty: TypeRef::named(name), args }, pos))
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        let pos = e.pos;
        loop {
            if self.at_op(".") {
                self.i += 1;
                if self.at_op("<") {
                    self.skip_type_args();
                }
                if self.eat_ident("new") {
                    return self.unsupported("qualified inner class creation");
                }
                if self.eat_ident("class") {
                    let name = dotted_name(&e).ok_or_else(|| PErr {
                        message: "bad class literal".into(),
                        pos,
                        unsupported: false,
                    })?;
                    e = self.mk(ExprKind::ClassLit(TypeRef::named(name)), pos);
                    continue;
                }
                if self.eat_ident("this") {
                    e = self.mk(ExprKind::This, pos);
                    continue;
                }
                let name = self.ident()?;
                if self.at_op("(") {
                    let args = self.args()?;
                    e = self.mk(ExprKind::Call { target: Some(Box::new(e)), name, args }, pos);
                } else {
                    e = self.mk(ExprKind::FieldAccess { target: Box::new(e), name }, pos);
                }
            } else if self.at_op("[") {
                self.i += 1;
                let index = self.expr()?;
                self.expect_op("]")?;
                e = self.mk(ExprKind::Index { target: Box::new(e), index: Box::new(index) }, pos);
            } else if self.at_op("++") || self.at_op("--") {
                let op = if self.at_op("++") { "post++" } else { "post--" };
                self.i += 1;
                e = self.mk(ExprKind::Unary { op, operand: Box::new(e) }, pos);
            } else if self.at_op("::") {
                return self.unsupported("method reference");
            } else {
                return Ok(e);
            }
        }
    }
}

/// `a.b.c` for a chain of names and field accesses.
pub fn dotted_name(e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::Name(n) => Some(n.clone()),
        ExprKind::FieldAccess { target, name } => Some(format!("{}.{}", dotted_name(target)?, name)),
        _ => None,
    }
}

fn token_text(toks: &[Token]) -> String {
    toks.iter()
        .map(|t| match &t.kind {
            TokenKind::Ident(s) | TokenKind::Number(s) => s.clone(),
            TokenKind::Str(s) => format!("{s:?}"),
            TokenKind::Char(s) => format!("'{s}'"),
            TokenKind::Op(o) => o.to_string(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> ParsedUnit {
        parse_unit(src, "src/T.java").expect("parses")
    }

    fn body(src: &str) -> (Vec<Stmt>, Vec<Diagnostic>) {
        let p = parse(&format!("class T {{ void m() {{ {src} }} }}"));
        (p.unit.classes[0].methods[0].body.clone().unwrap(), p.diagnostics)
    }

    #[test]
    fn empty_file_has_no_class() {
        let err = parse_unit("", "A.java").unwrap_err();
        assert!(err.message.contains("no class"));
        assert!(parse_unit("package a.b;\nimport x.Y;\n", "A.java").is_err());
    }

    #[test]
    fn header_structure() {
        let p = parse(
            "package com.x;\nimport java.util.*;\nimport static a.B.c;\n\
             @WebServlet(urlPatterns = {\"/a\", \"/b\"}, name = \"N\")\n\
             public class A<T> extends B<T> implements C, D.E { }",
        );
        let u = &p.unit;
        assert_eq!(u.package.as_deref(), Some("com.x"));
        assert_eq!(u.imports.len(), 2);
        assert!(u.imports[0].wildcard && u.imports[1].is_static);
        let c = &u.classes[0];
        assert_eq!(c.name, "A");
        assert!(c.is_public);
        assert_eq!(c.superclass.as_ref().unwrap().name, "B");
        assert_eq!(c.interfaces.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(), ["C", "D.E"]);
        let ann = &c.annotations[0];
        assert_eq!(ann.arguments["urlPatterns"], AnnotationValue::List(vec!["/a".into(), "/b".into()]));
        assert_eq!(ann.arguments["name"], AnnotationValue::Str("N".into()));
    }

    #[test]
    fn members_and_overloads() {
        let p = parse(
            "class A { private int x = 1, y; static final String S = \"s\";\n\
             A() {} A(int a) { this(); }\n\
             public <T> T get(Class<T> c) { return null; }\n\
             abstract void f(String... xs);\n\
             class Inner { void g() {} } }",
        );
        let a = &p.unit.classes[0];
        assert_eq!(a.fields.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(), ["x", "y", "S"]);
        let names: Vec<_> = a.methods.iter().map(|m| (m.name.as_str(), m.arity)).collect();
        assert_eq!(names, [("A", 0), ("A", 1), ("get", 1), ("f", 1)]);
        assert!(a.methods[0].is_constructor());
        assert!(a.methods[3].body.is_none());
        assert_eq!(p.unit.classes[1].name, "A.Inner");
    }

    #[test]
    fn unbalanced_braces_are_fatal() {
        assert!(parse_unit("class A { void m() { if (x) { } }", "A.java").is_err());
    }

    #[test]
    fn lambda_statement_is_skipped_with_one_diagnostic() {
        // fixture: one lambda statement between two supported calls
        let (stmts, diags) = body("a(); Runnable r = () -> { go(); }; b();");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::UNSUPPORTED_STATEMENT);
        let calls: Vec<_> = stmts
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Expr(Expr { kind: ExprKind::Call { name, .. }, .. }) => Some(name.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(calls, ["a", "b"]);
    }

    #[test]
    fn anonymous_class_and_method_refs_are_skipped() {
        let (stmts, diags) =
            body("list.forEach(System.out::println); new Thread(new Runnable() { public void run() {} }).start(); ok();");
        assert_eq!(diags.len(), 2);
        assert_eq!(stmts.len(), 1);
    }

    #[test]
    fn declarations_versus_expressions() {
        let (stmts, diags) = body(
            "List<String> xs = new ArrayList<>(); int[] a = {1, 2}; x = y < z; i++; \
             Map.Entry<String, List<Integer>> e = null; final int k = (int) 2.5; String s = (String) o;",
        );
        assert!(diags.is_empty(), "{diags:?}");
        let kinds: Vec<_> = stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::LocalVar { ty, .. } => format!("decl {}", ty.name),
                StmtKind::Expr(_) => "expr".into(),
                other => format!("{other:?}"),
            })
            .collect();
        assert_eq!(
            kinds,
            ["decl List", "decl int", "expr", "expr", "decl Map.Entry", "decl int", "decl String"]
        );
    }

    #[test]
    fn control_flow_subset() {
        let (stmts, diags) = body(
            "for (int i=0; i<10; i++) { out.print(i); } \
             for (String s : xs) go(s); \
             while (x) { if (a) b(); else { c(); } } \
             try { d(); } catch (IOException | RuntimeException e) { e(); } finally { f(); } \
             switch (k) { case 1: g(); break; default: h(); } \
             do { i(); } while (false); \
             outer: for (;;) { break outer; } \
             return;",
        );
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(stmts.len(), 8);
        let mut calls = Vec::new();
        walk_stmts(&stmts, &mut |s| {
            for e in s.own_exprs() {
                e.walk(&mut |x| {
                    if let ExprKind::Call { name, .. } = &x.kind {
                        calls.push(name.clone());
                    }
                })
            }
        });
        assert_eq!(calls, ["print", "go", "b", "c", "d", "e", "f", "g", "h", "i"]);
    }

    #[test]
    fn shifts_and_generics_coexist() {
        let (stmts, diags) = body("int a = b >> 2; int c = d >>> 1; boolean t = x > y;");
        assert!(diags.is_empty(), "{diags:?}");
        let ops: Vec<_> = stmts
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::LocalVar { init: Some(Expr { kind: ExprKind::Binary { op, .. }, .. }), .. } => Some(*op),
                _ => None,
            })
            .collect();
        assert_eq!(ops, [">>", ">>>", ">"]);
    }

    #[test]
    fn string_concatenation_tree() {
        let (stmts, _) = body("out.print(\"<TD>\" + i + \"</TD>\");");
        let StmtKind::Expr(Expr { kind: ExprKind::Call { target, name, args }, .. }) = &stmts[0].kind else {
            panic!("call expected")
        };
        assert_eq!(name, "print");
        assert_eq!(dotted_name(target.as_ref().unwrap()).as_deref(), Some("out"));
        assert!(matches!(args[0].kind, ExprKind::Binary { op: "+", .. }));
    }
}
