use mlgraph_core::graph::to_json;
use mlgraph_core::pipeline::{analyze, AnalysisConfig, AnalysisError, Mode};
use mlgraph_core::{evaluate, DependencyGraph, EntityKind, GroundTruth, RelationshipKind};
use proptest::prelude::*;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(dir: &Path, mode: Mode) -> mlgraph_core::Analysis {
    analyze(&AnalysisConfig::new(dir).mode(mode)).unwrap()
}

fn truth(dir: &Path) -> GroundTruth {
    GroundTruth::parse(&fs::read_to_string(dir.join("truth.txt")).unwrap()).unwrap()
}

fn name(g: &DependencyGraph, id: &mlgraph_core::EntityId) -> String {
    g.entity(id).unwrap().name.clone()
}

/// (source, target, kind) of every edge except containment and container callbacks.
fn edges(g: &DependencyGraph) -> BTreeSet<(String, String, RelationshipKind)> {
    g.relationships()
        .filter(|r| r.kind != RelationshipKind::Contains)
        .filter(|r| g.entity(&r.source).unwrap().kind != EntityKind::Container)
        .map(|r| (name(g, &r.source), name(g, &r.target), r.kind))
        .collect()
}

const PREV_FORM: &str = "com.sun.j2ee.blueprints.petstore.taglib.list.PrevFormTag";

#[test]
fn motivating_example_edges() {
    let dir = fixtures().join("motivating");
    let a = run(&dir, Mode::Full);
    let g = &a.graph;
    let from_page: BTreeSet<_> = edges(g).into_iter().filter(|(s, _, _)| s == "/product.jsp").collect();
    let want: BTreeSet<_> = [
        (format!("{PREV_FORM}.setAction/1"), RelationshipKind::AttributeSetter),
        (format!("{PREV_FORM}.doStartTag/0"), RelationshipKind::LifecycleCallback),
        (format!("{PREV_FORM}.doEndTag/0"), RelationshipKind::LifecycleCallback),
        ("/cart.jsp".to_string(), RelationshipKind::ForwardsTo),
    ]
    .into_iter()
    .map(|(t, k)| ("/product.jsp".to_string(), t, k))
    .collect();
    assert_eq!(from_page, want);

    // the setter is cited at the attribute value, the forward at the written literal
    let setter = g.relationships_of_kind(RelationshipKind::AttributeSetter).next().unwrap();
    assert_eq!(setter.evidence.location.to_string(), "web/product.jsp:5:24");
    let fwd = g.relationships_of_kind(RelationshipKind::ForwardsTo).next().unwrap();
    assert_eq!(fwd.evidence.location.path, format!("src/{}.java", PREV_FORM.replace('.', "/")));
    assert_eq!(fwd.evidence.location.line, 23);

    // containment: handler methods under the class, generated class under its page
    let class = g.find_one(EntityKind::ClassUnit, PREV_FORM).unwrap();
    let method = g.find_one(EntityKind::MethodUnit, &format!("{PREV_FORM}.doEndTag/0")).unwrap();
    assert!(g.has_relationship(&class.id, &method.id, RelationshipKind::Contains));
    let page = g.find_one(EntityKind::ServerPage, "/product.jsp").unwrap();
    let synthetic = g.find_one(EntityKind::ClassUnit, "product_jsp").unwrap();
    assert!(synthetic.synthetic);
    assert!(g.has_relationship(&page.id, &synthetic.id, RelationshipKind::Contains));

    let r = evaluate(g, &truth(&dir));
    assert_eq!((r.precision, r.recall), (Some(1.0), Some(1.0)), "{r}");
    assert_eq!((a.report.literals.project.total, a.report.literals.project.dependency_bearing), (8, 2));
}

#[test]
fn each_syntactic_form_gives_one_edge() {
    let rows: Vec<_> = fs::read_dir(fixtures().join("forms")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(rows.len(), 10);
    for dir in rows {
        let g = run(&dir, Mode::Full).graph;
        let t = truth(&dir);
        assert_eq!(t.edges.len(), 1);
        let kind = t.edges[0].kind.unwrap();
        let got: Vec<_> = edges(&g).into_iter().collect();
        assert_eq!(got, [("/source.jsp".to_string(), "/target.jsp".to_string(), kind)], "{}", dir.display());
    }
}

#[test]
fn blog_metrics_and_truth() {
    let dir = fixtures().join("blog");
    let full = run(&dir, Mode::Full);
    assert_eq!(full.report.pages.pages, 11);
    assert_eq!(full.report.pages.multilanguage, 6);
    assert_eq!(full.report.multilanguage_percent, "54.5% (6/11)");
    assert!(full.report.diagnostics.is_empty(), "{:?}", full.report.diagnostics);
    let r = evaluate(&full.graph, &truth(&dir));
    assert_eq!((r.precision, r.recall), (Some(1.0), Some(1.0)), "{r}");

    let base = run(&dir, Mode::Baseline);
    let kinds: Vec<_> = base.graph.entities().map(|e| e.kind).collect();
    assert_eq!(kinds, [EntityKind::ConfigFile]);
    assert_eq!(base.graph.relationship_count(), 0);
}

#[test]
fn enterprise_container_services() {
    let dir = fixtures().join("enterprise");
    let a = run(&dir, Mode::Full);
    let g = &a.graph;
    let callbacks: BTreeSet<_> = g
        .relationships_of_kind(RelationshipKind::LifecycleCallback)
        .map(|r| (name(g, &r.source), name(g, &r.target)))
        .collect();
    for (s, t) in [
        ("WebContainer", "shop.CartServlet.init/0"),
        ("WebContainer", "shop.CartServlet.doGet/2"),
        ("WebContainer", "/checkout.jsp"),
        ("EjbContainer", "shop.CartBean.open/0"),
    ] {
        assert!(callbacks.contains(&(s.to_string(), t.to_string())), "{s} -> {t} in {callbacks:?}");
    }
    // service/2 is inherited from a class outside the project
    assert!(a.report.diagnostics.iter().any(|d| d.message.contains("shop.CartServlet.service/2")));
    let r = evaluate(g, &truth(&dir));
    assert_eq!((r.precision, r.recall), (Some(1.0), Some(1.0)), "{r}");
}

#[test]
fn placeholder_policy_keeps_inherited_callbacks() {
    let dir = fixtures().join("enterprise");
    let mut c = AnalysisConfig::new(&dir);
    c.unresolved = mlgraph_core::UnresolvedPolicy::Placeholder;
    let g = analyze(&c).unwrap().graph;
    let p = g.find_one(EntityKind::UnresolvedTarget, "shop.CartServlet.service/2").unwrap();
    assert!(g.relationships().any(|r| r.target == p.id && r.kind == RelationshipKind::LifecycleCallback));
    assert!(g.check_invariants().is_empty());
}

fn all_fixture_dirs() -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(fixtures()).unwrap() {
        let p = e.unwrap().path();
        if p.join("truth.txt").exists() || p.file_name().unwrap() == "powers" {
            out.push(p);
        } else {
            out.extend(fs::read_dir(&p).unwrap().map(|e| e.unwrap().path()));
        }
    }
    out.sort();
    out
}

fn assert_superset(dir: &Path) {
    let base = run(dir, Mode::Baseline).graph;
    let full = run(dir, Mode::Full).graph;
    let d = mlgraph_core::graph::diff(&base, &full).unwrap();
    assert!(d.entities.only_in_a.is_empty(), "{}", dir.display());
    assert!(d.relationships.only_in_a.is_empty(), "{}", dir.display());
    assert!(!d.entities.only_in_b.is_empty() || !d.relationships.only_in_b.is_empty(), "{}", dir.display());
}

#[test]
fn full_mode_strictly_contains_baseline_on_every_fixture() {
    let dirs = all_fixture_dirs();
    assert!(dirs.len() >= 14);
    for d in &dirs {
        assert_superset(d);
    }
}

#[test]
fn runs_are_deterministic_and_counts_match() {
    for dir in all_fixture_dirs() {
        let a = run(&dir, Mode::Full);
        let b = run(&dir, Mode::Full);
        assert_eq!(to_json(&a.graph).unwrap(), to_json(&b.graph).unwrap());
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
        assert_eq!(a.report.entities, a.graph.entity_count());
        assert_eq!(a.report.relationships, a.graph.relationship_count());
        assert_eq!(a.report.entities_by_kind.values().sum::<usize>(), a.graph.entity_count());
        assert!(a.graph.check_invariants().is_empty());
    }
}

#[test]
fn empty_directory_gives_empty_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(tmp.path(), Mode::Full);
    assert!(a.graph.is_sealed());
    assert_eq!((a.graph.entity_count(), a.graph.relationship_count()), (0, 0));
    assert_eq!(a.report.multilanguage_percent, "0.0% (0/0)");
}

#[test]
fn missing_root_is_an_error() {
    let err = analyze(&AnalysisConfig::new("/nonexistent/project")).err().unwrap();
    assert!(matches!(err, AnalysisError::BadRoot(_)));
}

#[test]
fn broken_files_become_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("Bad.java"), "class Bad { void m( }").unwrap();
    fs::write(tmp.path().join("bad.jsp"), "<p><% if (x) {").unwrap();
    fs::create_dir(tmp.path().join("WEB-INF")).unwrap();
    fs::write(tmp.path().join("WEB-INF/web.xml"), "<web-app><servlet>").unwrap();
    fs::write(tmp.path().join("ok.jsp"), "<a href=\"ok.jsp\">me</a>").unwrap();
    let a = run(tmp.path(), Mode::Full);
    let codes: BTreeSet<_> = a.report.diagnostics.iter().map(|d| d.code.as_str()).collect();
    assert!(codes.contains("syntax-error") && codes.contains("template-error") && codes.contains("xml-error"), "{codes:?}");
    assert!(a.graph.find_one(EntityKind::ServerPage, "/ok.jsp").is_some());
}

#[test]
fn options_web_root_rules_and_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let web = tmp.path().join("site");
    fs::create_dir(&web).unwrap();
    fs::write(web.join("a.jsp"), "<link href=\"b.jsp\"><% int i = 0; %>").unwrap();
    fs::write(web.join("b.jsp"), "b").unwrap();
    let rules = tmp.path().join("rules.json");
    fs::write(&rules, r#"[{"tag": "link", "attribute": "href", "kind": "Includes"}]"#).unwrap();
    let dump = tmp.path().join("lowered");
    let mut c = AnalysisConfig::new(tmp.path());
    c.web_root = Some("site".into());
    c.tag_rules = Some(rules);
    c.dump_lowered = Some(dump.clone());
    let g = analyze(&c).unwrap().graph;
    let got = edges(&g);
    assert!(got.contains(&("/a.jsp".into(), "/b.jsp".into(), RelationshipKind::Includes)), "{got:?}");
    assert!(dump.join("a_jsp.java").exists());

    c.tag_rules = Some(tmp.path().join("missing.json"));
    assert!(matches!(analyze(&c), Err(AnalysisError::Io { .. })));
}

fn page_strategy() -> impl Strategy<Value = Vec<String>> {
    let piece = prop_oneof![
        Just("<p>text</p>".to_string()),
        (0usize..4).prop_map(|i| format!("<a href=\"p{i}.jsp\">x</a>")),
        (0usize..4).prop_map(|i| format!("<jsp:include page=\"p{i}.jsp\" />")),
        (0usize..4).prop_map(|i| format!("<%@ include file=\"p{i}.jsp\" %>")),
        Just("<% int n = util.Helper.twice(2); %>".to_string()),
        Just("<%= new util.Helper().name %>".to_string()),
        Just("<jsp:useBean id=\"h\" class=\"util.Helper\" />${h.name}".to_string()),
        Just("<% if (x) { %>".to_string()),
    ];
    prop::collection::vec(prop::collection::vec(piece, 0..5).prop_map(|v| v.join("\n")), 1..4)
}

const HELPER: &str = "package util;\npublic class Helper {\n  public String name;\n  public static int twice(int x) { return x * 2; }\n  public String getName() { return name; }\n}\n";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_never_loses_baseline_facts(pages in page_strategy(), with_class in any::<bool>()) {
        let tmp = tempfile::tempdir().unwrap();
        if with_class {
            fs::create_dir_all(tmp.path().join("src/util")).unwrap();
            fs::write(tmp.path().join("src/util/Helper.java"), HELPER).unwrap();
        }
        for (i, p) in pages.iter().enumerate() {
            fs::write(tmp.path().join(format!("p{i}.jsp")), p).unwrap();
        }
        let base = run(tmp.path(), Mode::Baseline).graph;
        let full = run(tmp.path(), Mode::Full).graph;
        let d = mlgraph_core::graph::diff(&base, &full).unwrap();
        prop_assert!(d.entities.only_in_a.is_empty());
        prop_assert!(d.relationships.only_in_a.is_empty());
        prop_assert!(!d.entities.only_in_b.is_empty());
        prop_assert!(full.check_invariants().is_empty());
    }
}
