//! Literal-bearing call sites: output-stream writes and naming lookups.

use super::ast::*;
use crate::location::Pos;
use serde::Serialize;
use std::collections::HashSet;

/// Stands in for a non-literal fragment of a written string.
pub const HOLE: char = '\u{FFFC}';

const WRITE_METHODS: &[&str] = &["print", "println", "write"];
const WRITER_TYPES: &[&str] = &["JspWriter", "PrintWriter", "Writer", "ServletOutputStream", "PrintStream"];
const WRITER_GETTERS: &[&str] = &["getWriter", "getOut", "getOutputStream"];

/// One string literal inside a write argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiteralPiece {
    /// Byte offset of the decoded literal inside [`StringWriteSite::text`].
    pub offset: usize,
    pub len: usize,
    /// Span of the literal token (quotes included).
    pub pos: Pos,
    pub end: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringWriteSite {
    /// Qualified name of the class containing the call.
    pub class: String,
    pub method: String,
    pub arity: usize,
    pub call_pos: Pos,
    /// Joined argument text; non-literal fragments are [`HOLE`].
    pub text: String,
    pub pieces: Vec<LiteralPiece>,
    /// One entry per [`HOLE`] in `text`: the variable, field or bean
    /// property the fragment reads, when it is that simple.
    pub holes: Vec<Option<String>>,
}

impl StringWriteSite {
    /// The literal piece whose decoded text covers byte `offset`.
    pub fn piece_at(&self, offset: usize) -> Option<&LiteralPiece> {
        self.pieces.iter().find(|p| offset >= p.offset && offset < p.offset + p.len.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LookupSite {
    pub class: String,
    pub method: String,
    pub arity: usize,
    pub call_pos: Pos,
    /// Literal argument, when the argument is a single string literal.
    pub name: Option<String>,
    pub literal_pos: Option<(Pos, Pos)>,
}

/// Every write call with at least one literal fragment, in source order.
pub fn collect_string_writes(unit: &OoCompilationUnit) -> Vec<StringWriteSite> {
    let mut out = Vec::new();
    for_each_call(unit, &mut |class, m, writers, call| {
        let ExprKind::Call { target: Some(target), name, args } = &call.kind else { return };
        if !WRITE_METHODS.contains(&name.as_str()) || args.is_empty() || !is_writer(target, writers) {
            return;
        }
        let mut site = StringWriteSite {
            class: unit.qualify(&class.name),
            method: m.name.clone(),
            arity: m.arity,
            call_pos: call.pos,
            text: String::new(),
            pieces: Vec::new(),
            holes: Vec::new(),
        };
        flatten(&args[0], &mut site);
        if !site.pieces.is_empty() {
            out.push(site);
        }
    });
    out
}

/// Calls to `lookup` with one argument (naming-service lookups).
pub fn collect_lookup_sites(unit: &OoCompilationUnit) -> Vec<LookupSite> {
    let mut out = Vec::new();
    for_each_call(unit, &mut |class, m, _, call| {
        let ExprKind::Call { target: Some(_), name, args } = &call.kind else { return };
        if name != "lookup" || args.len() != 1 {
            return;
        }
        let lit = args[0].as_str_literal().map(str::to_string);
        out.push(LookupSite {
            class: unit.qualify(&class.name),
            method: m.name.clone(),
            arity: m.arity,
            call_pos: call.pos,
            literal_pos: lit.as_ref().map(|_| (args[0].pos, args[0].end)),
            name: lit,
        });
    });
    out
}

fn is_writer(target: &Expr, writers: &HashSet<String>) -> bool {
    match &target.kind {
        ExprKind::Name(n) => n == "out" || writers.contains(n),
        ExprKind::Call { name, .. } => WRITER_GETTERS.contains(&name.as_str()),
        ExprKind::FieldAccess { target, name } => {
            matches!(&target.kind, ExprKind::This) && (name == "out" || writers.contains(name))
        }
        _ => false,
    }
}

fn flatten(e: &Expr, site: &mut StringWriteSite) {
    match &e.kind {
        ExprKind::Binary { op: "+", lhs, rhs } => {
            flatten(lhs, site);
            flatten(rhs, site);
        }
        ExprKind::Literal(Literal::Str(s)) => {
            site.pieces.push(LiteralPiece { offset: site.text.len(), len: s.len(), pos: e.pos, end: e.end });
            site.text.push_str(s);
        }
        _ => {
            if site.text.ends_with(HOLE) {
                if let Some(last) = site.holes.last_mut() {
                    *last = None;
                }
            } else {
                site.text.push(HOLE);
                site.holes.push(hole_name(e));
            }
        }
    }
}

fn hole_name(e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::Name(n) => Some(n.clone()),
        ExprKind::FieldAccess { target, name } if matches!(target.kind, ExprKind::This) => Some(name.clone()),
        ExprKind::Call { target, name, args } if args.is_empty() && target.as_ref().is_none_or(|t| matches!(t.kind, ExprKind::This)) => {
            let prop = name.strip_prefix("get").filter(|p| p.starts_with(|c: char| c.is_ascii_uppercase()))?;
            let mut c = prop.chars();
            c.next().map(|f| f.to_ascii_lowercase().to_string() + c.as_str())
        }
        _ => None,
    }
}

/// Visits every call expression in every method body, along with the names
/// of variables and fields declared with a writer type in scope of that method.
type CallVisitor<'a, 'u> = dyn FnMut(&'u ClassDecl, &'u MethodDecl, &HashSet<String>, &'u Expr) + 'a;

fn for_each_call<'u>(unit: &'u OoCompilationUnit, f: &mut CallVisitor<'_, 'u>) {
    let writer_type = |t: &TypeRef| t.dims == 0 && WRITER_TYPES.contains(&t.simple_name());
    for class in &unit.classes {
        let fields: HashSet<String> =
            class.fields.iter().filter(|fd| writer_type(&fd.ty)).map(|fd| fd.name.clone()).collect();
        for m in &class.methods {
            let Some(body) = &m.body else { continue };
            let mut writers = fields.clone();
            writers.extend(m.params.iter().filter(|p| writer_type(&p.ty)).map(|p| p.name.clone()));
            walk_stmts(body, &mut |s| {
                if let StmtKind::LocalVar { ty, name, .. } = &s.kind {
                    if writer_type(ty) {
                        writers.insert(name.clone());
                    }
                }
            });
            let mut calls = Vec::new();
            walk_stmts(body, &mut |s| {
                for e in s.own_exprs() {
                    e.walk(&mut |x| {
                        if matches!(x.kind, ExprKind::Call { .. }) {
                            calls.push(x);
                        }
                    });
                }
            });
            calls.sort_by_key(|c| c.pos);
            for c in calls {
                f(class, m, &writers, c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_unit;

    pub(crate) const POWERS_SERVLET: &str = r#"public class PowersOf2 extends HttpServlet {
  public void service(HttpServletRequest request, HttpServletResponse response) throws IOException {
    JspWriter out = pageContext.getOut();
    out.print("<TABLE BORDER='2' ALIGN='center'>");
    out.print("<TH>Exponent</TH><TH>2^Exponent</TH>");
    for (int i=0; i<10; i++){
      out.print("<TR><TD>" + i + "</TD>");
      out.print("<TD>" + Math.pow(2, i) + "</TD>");
      out.print("</TR>");
    }
    out.print("</TABLE>");
  }
}
"#;

    #[test]
    fn loop_servlet_structure() {
        let u = parse_unit(POWERS_SERVLET, "src/PowersOf2.java").unwrap().unit;
        let c = &u.classes[0];
        assert_eq!(c.name, "PowersOf2");
        assert_eq!(c.superclass.as_ref().unwrap().name, "HttpServlet");
        let body = c.methods.iter().find(|m| m.name == "service").unwrap().body.as_ref().unwrap();
        let mut writes = 0;
        let mut loops = 0;
        walk_stmts(body, &mut |s| match &s.kind {
            StmtKind::Expr(Expr { kind: ExprKind::Call { name, .. }, .. }) if name == "print" => writes += 1,
            StmtKind::For { .. } => loops += 1,
            _ => {}
        });
        assert_eq!((writes, loops), (6, 1));
    }

    #[test]
    fn loop_servlet_sites() {
        let u = parse_unit(POWERS_SERVLET, "src/PowersOf2.java").unwrap().unit;
        let sites = collect_string_writes(&u);
        let texts: Vec<_> = sites.iter().map(|s| s.text.as_str()).collect();
        let h = HOLE;
        assert_eq!(
            texts,
            [
                "<TABLE BORDER='2' ALIGN='center'>".to_string(),
                "<TH>Exponent</TH><TH>2^Exponent</TH>".to_string(),
                format!("<TR><TD>{h}</TD>"),
                format!("<TD>{h}</TD>"),
                "</TR>".to_string(),
                "</TABLE>".to_string(),
            ]
        );
        assert_eq!(sites[2].pieces.len(), 2);
        assert_eq!(sites[0].pieces[0].pos, Pos::new(4, 15));
    }

    #[test]
    fn writer_receivers_and_joined_literals() {
        let src = r#"class T {
  void a(PrintWriter pw) { pw.println("<a href=" + "\"x.jsp\">"); }
  void b() { response.getWriter().write("<form action='y'>"); System.out.println("<a href='no'>"); }
  void c() { other.print("<a href='no'>"); out.print(name); }
  void d() { }
}"#;
        let u = parse_unit(src, "T.java").unwrap().unit;
        let sites = collect_string_writes(&u);
        assert_eq!(sites.len(), 2);
        assert_eq!(sites[0].text, "<a href=\"x.jsp\">");
        assert_eq!(sites[0].pieces.len(), 2);
        assert!(sites[0].holes.is_empty());
        assert_eq!(sites[1].method, "b");
        assert!(!sites.iter().any(|s| s.method == "d"));
    }

    #[test]
    fn hole_names() {
        let src = r#"class H { String action; void m() {
  out.print("<form action=\"" + action + "\">" + this.action + getAction() + "|" + a.b + "|" + x + y);
} }"#;
        let u = parse_unit(src, "H.java").unwrap().unit;
        let s = &collect_string_writes(&u)[0];
        assert_eq!(s.text.matches(HOLE).count(), s.holes.len());
        assert_eq!(s.holes, [Some("action".to_string()), None, None, None]);
    }

    #[test]
    fn n_literal_writes_give_n_sites() {
        let n = 17;
        let body: String = (0..n).map(|k| format!("out.print(\"<p>{k}</p>\");\n")).collect();
        let src = format!("class W {{ void m() {{ if (x) {{ {body} }} }} }}");
        let u = parse_unit(&src, "W.java").unwrap().unit;
        assert_eq!(collect_string_writes(&u).len(), n);
    }

    #[test]
    fn lookup_sites() {
        let src = r#"class L { void m() throws Exception {
  Object a = ctx.lookup("java:comp/env/ejb/Cart");
  Object b = new InitialContext().lookup(name);
} }"#;
        let u = parse_unit(src, "L.java").unwrap().unit;
        let sites = collect_lookup_sites(&u);
        assert_eq!(sites.len(), 2);
        assert_eq!(sites[0].name.as_deref(), Some("java:comp/env/ejb/Cart"));
        assert!(sites[1].name.is_none());
    }
}
