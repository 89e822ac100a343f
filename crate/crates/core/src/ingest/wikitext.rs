//! Plain-text, image, link and footnote extraction from raw wikitext.
//!
//! This is not a renderer. Templates and tables are dropped without
//! expansion, and markup that does not parse (unbalanced braces, unterminated
//! tags) is left in place as literal text. Extraction never fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use super::url::{normalize_url, trim_url_tail};
use crate::model::{LanguageEdition, Multiset};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractedDoc {
    pub plain_text: String,
    pub images: BTreeSet<String>,
    pub wiki_links: BTreeSet<String>,
    /// Visible labels seen for each link target.
    pub link_labels: BTreeMap<String, BTreeSet<String>>,
    pub ext_links: BTreeSet<String>,
    pub ext_hosts: Multiset,
}

#[derive(Deserialize)]
struct NamespaceTable {
    image: BTreeMap<String, Vec<String>>,
    category: BTreeMap<String, Vec<String>>,
}

static NAMESPACES: LazyLock<NamespaceTable> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../resources/namespaces.json"))
        .expect("bundled namespace table is valid JSON")
});

/// Wikitext extractor configured with the namespace prefixes that mark
/// image and category links.
#[derive(Debug, Clone)]
pub struct Extractor {
    image_prefixes: BTreeSet<String>,
    category_prefixes: BTreeSet<String>,
}

impl Default for Extractor {
    /// Recognizes the prefixes of every bundled language.
    fn default() -> Self {
        let flatten = |m: &BTreeMap<String, Vec<String>>| {
            m.values().flatten().map(|p| p.to_lowercase()).collect::<BTreeSet<_>>()
        };
        Self {
            image_prefixes: flatten(&NAMESPACES.image),
            category_prefixes: flatten(&NAMESPACES.category),
        }
    }
}

impl Extractor {
    /// Prefixes for one language edition; English names are always accepted.
    pub fn for_language(lang: &LanguageEdition) -> Self {
        let pick = |m: &BTreeMap<String, Vec<String>>| {
            let mut set: BTreeSet<String> = BTreeSet::new();
            for key in [lang.as_str(), "en"] {
                if let Some(list) = m.get(key) {
                    set.extend(list.iter().map(|p| p.to_lowercase()));
                }
            }
            set
        };
        Self { image_prefixes: pick(&NAMESPACES.image), category_prefixes: pick(&NAMESPACES.category) }
    }

    pub fn with_prefixes<I, J, S, T>(images: I, categories: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        Self {
            image_prefixes: images.into_iter().map(|p| p.as_ref().to_lowercase()).collect(),
            category_prefixes: categories.into_iter().map(|p| p.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn extract(&self, wikitext: &str) -> ExtractedDoc {
        let mut doc = ExtractedDoc::default();
        let text = strip_comments(wikitext);
        let text = self.take_refs(&text, &mut doc);
        let text = self.take_galleries(&text, &mut doc);
        let text = strip_dropped_tags(&text);
        let text = strip_balanced(&text, "{{", "}}");
        let text = strip_tables(&text);
        let text = self.replace_links(&text, &mut doc);
        let text = replace_external_links(&text);
        doc.plain_text = finish_plain_text(&text);
        doc
    }

    fn take_refs(&self, text: &str, doc: &mut ExtractedDoc) -> String {
        static SELF_CLOSING: LazyLock<Regex> =
            LazyLock::new(|| Regex::new(r"(?is)<ref\b[^>]*/>|<references\b[^>]*/>").unwrap());
        static PAIRED: LazyLock<Regex> =
            LazyLock::new(|| Regex::new(r"(?is)<ref\b[^>]*>(.*?)</ref\s*>").unwrap());
        static URL: LazyLock<Regex> =
            LazyLock::new(|| Regex::new(r#"(?i)\b(?:https?|ftp)://[^\s<>\[\]{}|"]+"#).unwrap());

        let text = SELF_CLOSING.replace_all(text, "");
        PAIRED
            .replace_all(&text, |caps: &regex::Captures| {
                for m in URL.find_iter(&caps[1]) {
                    if let Some(n) = normalize_url(trim_url_tail(m.as_str())) {
                        doc.ext_hosts.add(n.host);
                        doc.ext_links.insert(n.url);
                    }
                }
                String::new()
            })
            .into_owned()
    }

    fn take_galleries(&self, text: &str, doc: &mut ExtractedDoc) -> String {
        static GALLERY: LazyLock<Regex> =
            LazyLock::new(|| Regex::new(r"(?is)<gallery\b[^>]*>(.*?)</gallery\s*>").unwrap());
        GALLERY
            .replace_all(text, |caps: &regex::Captures| {
                for line in caps[1].lines() {
                    let target = line.split('|').next().unwrap_or("").trim();
                    if target.is_empty() {
                        continue;
                    }
                    match target.split_once(':') {
                        Some((prefix, name)) if self.image_prefixes.contains(&prefix.trim().to_lowercase()) => {
                            push_image(doc, name);
                        }
                        // gallery lines may omit the namespace
                        _ => push_image(doc, target),
                    }
                }
                String::new()
            })
            .into_owned()
    }

    fn replace_links(&self, text: &str, doc: &mut ExtractedDoc) -> String {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while let Some(open) = rest.find("[[") {
            out.push_str(&rest[..open]);
            let after = &rest[open + 2..];
            match matching_close(after, "[[", "]]") {
                Some(close) => {
                    let inner = &after[..close];
                    out.push_str(&self.render_link(inner, doc));
                    rest = &after[close + 2..];
                }
                None => {
                    out.push_str("[[");
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out
    }

    fn render_link(&self, inner: &str, doc: &mut ExtractedDoc) -> String {
        let (target, label) = split_top_level_pipe(inner);
        let target_trim = target.trim();
        let (literal, target_trim) = match target_trim.strip_prefix(':') {
            Some(t) => (true, t.trim()),
            None => (false, target_trim),
        };
        if let Some((prefix, rest)) = target_trim.split_once(':') {
            let prefix_lc = prefix.trim().to_lowercase();
            if !literal && self.image_prefixes.contains(&prefix_lc) {
                push_image(doc, rest);
                return String::new();
            }
            if !literal && self.category_prefixes.contains(&prefix_lc) {
                return String::new();
            }
            if !literal && is_interwiki_prefix(prefix.trim()) {
                return String::new();
            }
        }
        let page = target_trim.split('#').next().unwrap_or("");
        let visible = match label {
            Some(label) => self.replace_links(label, doc),
            None => target_trim.to_owned(),
        };
        let canonical = canonical_title(page);
        if !canonical.is_empty() {
            let visible_trim = visible.trim();
            if !visible_trim.is_empty() {
                doc.link_labels
                    .entry(canonical.clone())
                    .or_default()
                    .insert(visible_trim.to_owned());
            }
            doc.wiki_links.insert(canonical);
        }
        visible
    }
}

/// Extracts with the default (all-language) namespace table.
pub fn extract_document(wikitext: &str) -> ExtractedDoc {
    Extractor::default().extract(wikitext)
}

fn push_image(doc: &mut ExtractedDoc, name: &str) {
    let name = canonical_title(name);
    if !name.is_empty() {
        doc.images.insert(name);
    }
}

fn is_interwiki_prefix(prefix: &str) -> bool {
    (2..=3).contains(&prefix.len()) && prefix.bytes().all(|b| b.is_ascii_lowercase())
}

/// MediaWiki title canonicalization: underscores as spaces, collapsed
/// whitespace, first letter uppercased.
pub fn canonical_title(raw: &str) -> String {
    let spaced = raw.replace('_', " ");
    let collapsed = spaced.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut chars = collapsed.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find("<!--") {
        match rest[open + 4..].find("-->") {
            Some(close) => {
                out.push_str(&rest[..open]);
                rest = &rest[open + 4 + close + 3..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

fn strip_dropped_tags(text: &str) -> String {
    static DROPPED: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r"(?is)<(math|score|syntaxhighlight|source|timeline|imagemap)\b[^>]*>.*?</(?:math|score|syntaxhighlight|source|timeline|imagemap)\s*>")
            .unwrap()
    });
    DROPPED.replace_all(text, "").into_owned()
}

/// Position of the `close` delimiter balancing an already-consumed `open`.
fn matching_close(s: &str, open: &str, close: &str) -> Option<usize> {
    let mut depth = 1usize;
    let mut i = 0;
    while i < s.len() {
        if s[i..].starts_with(open) {
            depth += 1;
            i += open.len();
        } else if s[i..].starts_with(close) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
            i += close.len();
        } else {
            i += s[i..].chars().next().map_or(1, char::len_utf8);
        }
    }
    None
}

fn strip_balanced(text: &str, open: &str, close: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(open) {
        out.push_str(&rest[..start]);
        let after = &rest[start + open.len()..];
        match matching_close(after, open, close) {
            Some(end) => rest = &after[end + close.len()..],
            None => {
                out.push_str(open);
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Drops `{| ... |}` tables (nesting allowed); an unterminated table is kept.
fn strip_tables(text: &str) -> String {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut keep = vec![true; lines.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let t = line.trim_start();
        if t.starts_with("{|") {
            stack.push(i);
        } else if t.starts_with("|}") {
            if let Some(start) = stack.pop() {
                if stack.is_empty() {
                    keep[start..=i].iter_mut().for_each(|k| *k = false);
                }
            }
        }
    }
    lines
        .iter()
        .zip(keep)
        .filter_map(|(l, k)| k.then_some(*l))
        .collect::<Vec<_>>()
        .join("\n")
}

fn split_top_level_pipe(inner: &str) -> (&str, Option<&str>) {
    let mut depth = 0usize;
    let bytes = inner.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i..].starts_with(b"[[") {
            depth += 1;
            i += 2;
        } else if bytes[i..].starts_with(b"]]") {
            depth = depth.saturating_sub(1);
            i += 2;
        } else if bytes[i] == b'|' && depth == 0 {
            return (&inner[..i], Some(&inner[i + 1..]));
        } else {
            i += 1;
        }
    }
    (inner, None)
}

fn replace_external_links(text: &str) -> String {
    static BRACKETED: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"(?i)\[(?:(?:https?|ftp):)?//[^\s\]]+(?:[ \t]+([^\]\n]*))?\]").unwrap());
    BRACKETED
        .replace_all(text, |caps: &regex::Captures| caps.get(1).map_or("", |m| m.as_str()).to_owned())
        .into_owned()
}

fn decode_entities(line: &str) -> String {
    line.replace("&nbsp;", " ")
        .replace("&ndash;", "–")
        .replace("&mdash;", "—")
        .replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

fn finish_plain_text(text: &str) -> String {
    static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</?[A-Za-z][^<>]*>").unwrap());
    static EMPHASIS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"'{2,}").unwrap());
    static MAGIC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"__[A-Z]+__").unwrap());
    static HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(=+)\s*(.*?)\s*(=+)$").unwrap());
    static LIST: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[*#:;]+\s*").unwrap());
    static SPACE_PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r" +([.,;:!?])").unwrap());

    let text = TAG.replace_all(text, " ");
    let text = EMPHASIS.replace_all(&text, "");
    let text = MAGIC.replace_all(&text, "");
    let mut lines = Vec::new();
    for raw in text.split('\n') {
        let mut line = raw.trim().to_owned();
        if line.starts_with("----") {
            continue;
        }
        if let Some(caps) = HEADING.captures(&line) {
            line = caps[2].to_owned();
        }
        line = LIST.replace(&line, "").into_owned();
        let line = decode_entities(&line);
        let line = line.split_whitespace().collect::<Vec<_>>().join(" ");
        let line = SPACE_PUNCT.replace_all(&line, "$1").into_owned();
        if !line.is_empty() {
            lines.push(line);
        }
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_example() {
        let doc = extract_document(
            "[[File:Codex.jpg|thumb]] Text about [[Berlin|the city]].<ref>http://example.com/a?x=1</ref>",
        );
        assert_eq!(doc.plain_text, "Text about the city.");
        assert_eq!(doc.images, BTreeSet::from(["Codex.jpg".to_owned()]));
        assert_eq!(doc.wiki_links, BTreeSet::from(["Berlin".to_owned()]));
        assert_eq!(doc.ext_links, BTreeSet::from(["http://example.com/a?x=1".to_owned()]));
        assert_eq!(doc.ext_hosts.count("example.com"), 1);
        assert_eq!(doc.ext_hosts.total(), 1);
        assert_eq!(doc.link_labels["Berlin"], BTreeSet::from(["the city".to_owned()]));
    }

    #[test]
    fn empty_input() {
        assert_eq!(extract_document(""), ExtractedDoc::default());
    }

    #[test]
    fn hosts_normalized_and_counted() {
        let doc = extract_document("<ref>https://WWW.Example.com/p</ref><ref>https://example.com/q</ref>");
        assert_eq!(doc.ext_hosts.count("example.com"), 2);
        assert_eq!(doc.ext_hosts.distinct(), 1);
        assert_eq!(doc.ext_links.len(), 2);
    }

    #[test]
    fn body_links_are_not_footnotes() {
        let doc = extract_document("See [http://example.org the site] and http://bare.org.");
        assert!(doc.ext_links.is_empty());
        assert_eq!(doc.plain_text, "See the site and http://bare.org.");
    }

    #[test]
    fn localized_image_prefixes() {
        let de = LanguageEdition::new("de").unwrap();
        let doc = Extractor::for_language(&de).extract("[[Datei:Codex aureus.jpg|mini|Bild]] [[Bild:X_y.png]] Text");
        assert_eq!(doc.images, BTreeSet::from(["Codex aureus.jpg".to_owned(), "X y.png".to_owned()]));
        assert_eq!(doc.plain_text, "Text");
        let pt = LanguageEdition::new("pt").unwrap();
        let doc = Extractor::for_language(&pt).extract("[[Ficheiro:A.jpg]][[Imagem:B.jpg]]");
        assert_eq!(doc.images.len(), 2);
    }

    #[test]
    fn templates_tables_comments_dropped() {
        let wt = "{{Infobox|name={{nested|x}}}}Intro<!-- hidden -->.\n{| class=\"wikitable\"\n|-\n| cell\n|}\nAfter.";
        assert_eq!(extract_document(wt).plain_text, "Intro.\nAfter.");
    }

    #[test]
    fn cite_template_inside_ref() {
        let doc = extract_document("Fact.<ref name=a>{{cite web|url=http://news.example.com/x|title=T}}</ref><ref name=a/>");
        assert_eq!(doc.ext_links, BTreeSet::from(["http://news.example.com/x".to_owned()]));
        assert_eq!(doc.plain_text, "Fact.");
    }

    #[test]
    fn headings_and_lists_kept_as_text() {
        let doc = extract_document("== History ==\n* First item\n'''Bold''' text");
        assert_eq!(doc.plain_text, "History\nFirst item\nBold text");
    }

    #[test]
    fn categories_and_interwiki_dropped() {
        let doc = extract_document("Body.[[Category:Manuscripts]][[de:Codex]]");
        assert_eq!(doc.plain_text, "Body.");
        assert!(doc.wiki_links.is_empty());
    }

    #[test]
    fn malformed_markup_degrades_to_text() {
        let doc = extract_document("Broken [[link and {{template <!-- open");
        assert_eq!(doc.plain_text, "Broken [[link and {{template <!-- open");
    }

    #[test]
    fn link_blend_and_anchor() {
        let doc = extract_document("Two [[bus]]es and [[Berlin#History|history]].");
        assert_eq!(doc.plain_text, "Two buses and history.");
        assert_eq!(doc.wiki_links, BTreeSet::from(["Bus".to_owned(), "Berlin".to_owned()]));
    }

    #[test]
    fn multibyte_link_targets() {
        let doc = extract_document("[[Arnulf von Kärnten]] und [[Außenminister der Vereinigten Staaten|Außenminister]].");
        assert_eq!(doc.plain_text, "Arnulf von Kärnten und Außenminister.");
        assert!(doc.wiki_links.contains("Arnulf von Kärnten"));
    }

    #[test]
    fn gallery_images() {
        let doc = extract_document("<gallery>\nFile:A.jpg|one\nB.png\n</gallery>Text");
        assert_eq!(doc.images, BTreeSet::from(["A.jpg".to_owned(), "B.png".to_owned()]));
    }

    proptest! {
        #[test]
        fn total_and_deterministic(s in "(\\PC|[\\[\\]{}|<>=']){0,200}") {
            let a = extract_document(&s);
            let b = extract_document(&s);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.ext_hosts.distinct() <= a.ext_hosts.total() as usize, true);
        }

        #[test]
        fn host_count_matches_ref_urls(hosts in proptest::collection::vec("[a-z]{1,8}", 0..6)) {
            let wt: String = hosts.iter().map(|h| format!("x<ref>http://h{h}.org/p</ref>")).collect();
            let doc = extract_document(&wt);
            prop_assert_eq!(doc.ext_hosts.total() as usize, hosts.len());
            for h in &hosts {
                let host = format!("h{h}.org");
                prop_assert!(doc.ext_links.iter().any(|u| u.contains(host.as_str())));
            }
        }
    }
}
