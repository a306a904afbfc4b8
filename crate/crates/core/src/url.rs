//! URL normalization for web-root-relative references.

/// True for `http://x`, `mailto:x`, `javascript:x` and protocol-relative `//x`.
pub fn is_external(raw: &str) -> bool {
    let raw = raw.trim();
    if raw.starts_with("//") {
        return true;
    }
    match raw.find(':') {
        Some(i) if i > 0 => {
            let scheme = &raw[..i];
            scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '.' | '-'))
                && !raw[..i].contains('/')
        }
        _ => false,
    }
}

/// Strips fragment, query and path parameters (`;jsessionid=...`).
pub fn strip_suffixes(raw: &str) -> &str {
    let raw = raw.trim();
    let cut = raw.find(['#', '?', ';']).unwrap_or(raw.len());
    &raw[..cut]
}

/// Resolves `raw` against the URL of the referring resource (`base`, e.g.
/// `/shop/list.jsp`) and returns a web-root-relative path starting with `/`.
/// `.` and `..` segments are collapsed; `..` never climbs above the root.
/// Returns `None` for external URLs and references with no path part.
pub fn normalize_url(raw: &str, base: &str) -> Option<String> {
    if is_external(raw) {
        return None;
    }
    let path = strip_suffixes(raw);
    if path.is_empty() {
        return None;
    }
    let joined = if path.starts_with('/') {
        path.to_string()
    } else {
        let dir = match base.rfind('/') {
            Some(i) => &base[..=i],
            None => "/",
        };
        format!("{dir}{path}")
    };
    let trailing = joined.ends_with('/') || joined.ends_with("/.") || joined.ends_with("/..");
    let mut segs: Vec<&str> = Vec::new();
    for seg in joined.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                segs.pop();
            }
            s => segs.push(s),
        }
    }
    let mut out = format!("/{}", segs.join("/"));
    if trailing && !segs.is_empty() {
        out.push('/');
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_url("detail/item.jsp", "/shop/list.jsp").as_deref(), Some("/shop/detail/item.jsp"));
        assert_eq!(normalize_url("product.jsp?id=3", "/index.jsp").as_deref(), Some("/product.jsp"));
        assert_eq!(normalize_url("../a.jsp#top", "/x/y/z.jsp").as_deref(), Some("/x/a.jsp"));
        assert_eq!(normalize_url("../../../a.jsp", "/x/z.jsp").as_deref(), Some("/a.jsp"));
        assert_eq!(normalize_url("cart;jsessionid=1", "/index.jsp").as_deref(), Some("/cart"));
        assert_eq!(normalize_url("/shop/", "/index.jsp").as_deref(), Some("/shop/"));
        assert_eq!(normalize_url("./", "/shop/a.jsp").as_deref(), Some("/shop/"));
        assert_eq!(normalize_url("#top", "/index.jsp"), None);
        assert_eq!(normalize_url("http://example.com/a.jsp", "/index.jsp"), None);
        assert_eq!(normalize_url("//cdn/x.js", "/index.jsp"), None);
        assert_eq!(normalize_url("mailto:a@b", "/index.jsp"), None);
    }

    proptest! {
        #[test]
        fn idempotent(raw in "[a-z./?#]{0,24}", base in "(/[a-z]{1,4}){0,3}/[a-z]{1,5}\\.jsp") {
            if let Some(n) = normalize_url(&raw, &base) {
                prop_assert_eq!(normalize_url(&n, &base), Some(n.clone()));
                prop_assert_eq!(normalize_url(&n, "/other/dir/p.jsp"), Some(n.clone()));
                prop_assert!(n.starts_with('/'));
                prop_assert!(!n.split('/').any(|s| s == ".." || s == "."));
            }
        }
    }
}
