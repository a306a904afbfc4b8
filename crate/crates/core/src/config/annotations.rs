//! Mapping facts carried by annotations on project classes.

use crate::diagnostics::{codes, Diagnostic};
use crate::java::ast::{AnnotationUse, AnnotationValue};
use crate::java::{ProjectIndex, SourceUnit};
use crate::location::SourceLocation;
use serde::Serialize;

const SERVLET: &[&str] = &["WebServlet"];
const EJB: &[&str] = &["Stateless", "Stateful", "Singleton", "MessageDriven"];
const MANAGED: &[&str] = &["ManagedBean", "Named"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotatedServlet {
    pub class: String,
    pub patterns: Vec<String>,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotatedBean {
    pub name: String,
    pub class: String,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnnotationFacts {
    pub servlets: Vec<AnnotatedServlet>,
    pub ejbs: Vec<AnnotatedBean>,
    pub managed_beans: Vec<AnnotatedBean>,
    pub diagnostics: Vec<Diagnostic>,
}

fn decapitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn string_arg(a: &AnnotationUse, keys: &[&str]) -> Result<Option<String>, String> {
    for k in keys {
        match a.arguments.get(*k) {
            Some(AnnotationValue::Str(s)) => return Ok(Some(s.clone())),
            Some(AnnotationValue::List(v)) if v.len() == 1 => return Ok(Some(v[0].clone())),
            Some(AnnotationValue::List(_)) | Some(AnnotationValue::Other(_)) => return Err(k.to_string()),
            None => {}
        }
    }
    Ok(None)
}

/// Scans class annotations of hand-written (not generated) units.
pub fn collect_annotations(units: &[SourceUnit], index: &ProjectIndex) -> AnnotationFacts {
    let mut facts = AnnotationFacts::default();
    for c in index.classes().filter(|c| !c.synthetic) {
        let path = &units[c.unit].unit.path;
        for a in &c.annotations {
            let name = a.simple_name();
            let location = SourceLocation::at(path, a.pos);
            let non_literal = |key: &str| {
                Diagnostic::new(
                    codes::NON_LITERAL_ANNOTATION,
                    format!("@{name}({key} = ...) on {} is not a string literal; skipped", c.qname),
                )
                .at(location.clone())
            };
            if SERVLET.contains(&name) {
                let mut patterns = Vec::new();
                for key in ["value", "urlPatterns"] {
                    match a.arguments.get(key) {
                        Some(AnnotationValue::Str(s)) => patterns.push(s.clone()),
                        Some(AnnotationValue::List(v)) => patterns.extend(v.iter().cloned()),
                        Some(AnnotationValue::Other(_)) => facts.diagnostics.push(non_literal(key)),
                        None => {}
                    }
                }
                facts.servlets.push(AnnotatedServlet { class: c.qname.clone(), patterns, location });
            } else if EJB.contains(&name) || MANAGED.contains(&name) {
                let keys: &[&str] = if name == "Named" { &["value"] } else { &["name", "value"] };
                let bean_name = match string_arg(a, keys) {
                    Ok(Some(n)) if !n.is_empty() => n,
                    Ok(_) if EJB.contains(&name) => c.simple_name().to_string(),
                    Ok(_) => decapitalize(c.simple_name()),
                    Err(key) => {
                        facts.diagnostics.push(non_literal(&key));
                        continue;
                    }
                };
                let bean = AnnotatedBean { name: bean_name, class: c.qname.clone(), location };
                if EJB.contains(&name) {
                    facts.ejbs.push(bean);
                } else {
                    facts.managed_beans.push(bean);
                }
            }
        }
    }
    facts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_unit;

    fn facts(srcs: &[(&str, &str)]) -> AnnotationFacts {
        let units: Vec<_> =
            srcs.iter().map(|(p, s)| SourceUnit::plain(parse_unit(s, p).unwrap().unit)).collect();
        let index = ProjectIndex::build(&units);
        collect_annotations(&units, &index)
    }

    #[test]
    fn servlet_patterns() {
        let f = facts(&[
            ("src/HelloServlet.java", "@WebServlet(\"/hello\") public class HelloServlet extends HttpServlet {}"),
            ("src/Multi.java", "@WebServlet(name = \"m\", urlPatterns = {\"/a\", \"/b/*\"}) class Multi {}"),
            ("src/Plain.java", "class Plain {}"),
            ("src/Bad.java", "@WebServlet(urlPatterns = PATHS) class Bad {}"),
        ]);
        let got: Vec<_> = f.servlets.iter().map(|s| (s.class.as_str(), s.patterns.clone())).collect();
        assert_eq!(
            got,
            [
                ("Bad", vec![]),
                ("HelloServlet", vec!["/hello".to_string()]),
                ("Multi", vec!["/a".to_string(), "/b/*".to_string()]),
            ]
        );
        assert_eq!(f.diagnostics.len(), 1);
        assert_eq!(f.diagnostics[0].code, codes::NON_LITERAL_ANNOTATION);
        assert_eq!(f.servlets[1].location, SourceLocation::new("src/HelloServlet.java", 1, 1));
    }

    #[test]
    fn bean_names() {
        let f = facts(&[(
            "src/B.java",
            "package ejb; @Stateless public class HelloBean {} @Stateful(name=\"Cart\") class CartImpl {} @Named class ShopBean {} @ManagedBean(name=\"u\") class User {}",
        )]);
        let ejbs: Vec<_> = f.ejbs.iter().map(|b| (b.name.as_str(), b.class.as_str())).collect();
        assert_eq!(ejbs, [("Cart", "ejb.CartImpl"), ("HelloBean", "ejb.HelloBean")]);
        let mb: Vec<_> = f.managed_beans.iter().map(|b| (b.name.as_str(), b.class.as_str())).collect();
        assert_eq!(mb, [("shopBean", "ejb.ShopBean"), ("u", "ejb.User")]);
    }
}
