//! Entity annotation: explicit wiki links plus automatic annotations, all
//! mapped to canonical cross-language entity ids.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use percent_encoding::percent_decode_str;
use regex::Regex;
use serde_json::json;

use super::AnnotateError;
use crate::http::HttpTransport;
use crate::ingest::InterlanguageResolver;
use crate::model::LanguageEdition;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub surface: String,
    /// Article title in `title_lang`.
    pub title: String,
    pub title_lang: LanguageEdition,
}

pub trait EntityAnnotator: Send + Sync {
    fn annotate(&self, text: &str, lang: &LanguageEdition) -> Result<Vec<Annotation>, AnnotateError>;
}

/// Case-insensitive gazetteer matcher; at each position the longest
/// surface form wins and matches never overlap.
#[derive(Debug, Clone)]
pub struct GazetteerAnnotator {
    by_lang: BTreeMap<String, (Regex, BTreeMap<String, String>)>,
}

impl GazetteerAnnotator {
    pub fn new(gazetteer: &BTreeMap<String, BTreeMap<String, String>>) -> Self {
        let mut by_lang = BTreeMap::new();
        for (lang, entries) in gazetteer {
            if entries.is_empty() {
                continue;
            }
            let mut surfaces: Vec<&String> = entries.keys().collect();
            surfaces.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
            let alternation = surfaces.iter().map(|s| regex::escape(s)).collect::<Vec<_>>().join("|");
            let re = Regex::new(&format!(r"(?i)\b(?:{alternation})\b")).expect("escaped alternation compiles");
            let lookup = entries.iter().map(|(s, t)| (s.to_lowercase(), t.clone())).collect();
            by_lang.insert(lang.clone(), (re, lookup));
        }
        Self { by_lang }
    }
}

impl EntityAnnotator for GazetteerAnnotator {
    fn annotate(&self, text: &str, lang: &LanguageEdition) -> Result<Vec<Annotation>, AnnotateError> {
        let Some((re, lookup)) = self.by_lang.get(lang.as_str()) else { return Ok(Vec::new()) };
        Ok(re
            .find_iter(text)
            .filter_map(|m| {
                lookup.get(&m.as_str().to_lowercase()).map(|title| Annotation {
                    surface: m.as_str().to_owned(),
                    title: title.clone(),
                    title_lang: lang.clone(),
                })
            })
            .collect())
    }
}

/// Remote annotator: `POST {text, confidence}` →
/// `{annotations: [{surface, uri, offset}]}` with English resource URIs.
pub struct RemoteAnnotator {
    endpoint: String,
    confidence: f64,
    transport: Arc<dyn HttpTransport>,
}

impl RemoteAnnotator {
    pub const DEFAULT_CONFIDENCE: f64 = 0.5;

    pub fn new(endpoint: impl Into<String>, confidence: f64, transport: Arc<dyn HttpTransport>) -> Self {
        Self { endpoint: endpoint.into(), confidence, transport }
    }
}

/// `http://dbpedia.org/resource/Lawrence_Eagleburger` → `Lawrence Eagleburger`.
pub fn title_from_uri(uri: &str) -> Option<String> {
    let last = uri.trim_end_matches('/').rsplit('/').next()?;
    let decoded = percent_decode_str(last).decode_utf8().ok()?;
    let title = decoded.replace('_', " ").trim().to_owned();
    (!title.is_empty()).then_some(title)
}

impl EntityAnnotator for RemoteAnnotator {
    fn annotate(&self, text: &str, _lang: &LanguageEdition) -> Result<Vec<Annotation>, AnnotateError> {
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        let unavailable = |m: String| AnnotateError::AnnotatorUnavailable(m);
        let resp = self
            .transport
            .post_json(&self.endpoint, &json!({"text": text, "confidence": self.confidence}))
            .map_err(|e| unavailable(e.to_string()))?;
        if !resp.is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status)));
        }
        let body: serde_json::Value = serde_json::from_str(&resp.body).map_err(|e| unavailable(e.to_string()))?;
        let en = LanguageEdition::new("en").expect("valid");
        Ok(body["annotations"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|a| {
                let title = title_from_uri(a["uri"].as_str()?)?;
                Some(Annotation { surface: a["surface"].as_str().unwrap_or("").to_owned(), title, title_lang: en.clone() })
            })
            .collect())
    }
}

/// Case-insensitive, word-bounded phrase search.
pub(crate) fn contains_phrase(haystack: &str, needle: &str) -> bool {
    let hay = haystack.to_lowercase();
    let needle = needle.to_lowercase();
    if needle.is_empty() {
        return false;
    }
    let mut from = 0;
    while let Some(off) = hay[from..].find(&needle) {
        let start = from + off;
        let end = start + needle.len();
        let before_ok = hay[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = hay[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Canonical entity ids for one sentence: explicit link targets whose title
/// or visible label occurs in the sentence, united with automatic annotations.
pub fn annotate_entities(
    sentence: &str,
    lang: &LanguageEdition,
    explicit_links: &BTreeMap<String, BTreeSet<String>>,
    annotator: &dyn EntityAnnotator,
    resolver: &dyn InterlanguageResolver,
) -> Result<BTreeSet<String>, AnnotateError> {
    let annotations = annotator.annotate(sentence, lang)?;
    Ok(entity_ids(sentence, lang, explicit_links, &annotations, resolver))
}

/// Explicit link targets mentioned in the sentence, in the article's language.
pub(crate) fn mentioned_links<'a>(
    sentence: &'a str,
    explicit_links: &'a BTreeMap<String, BTreeSet<String>>,
) -> impl Iterator<Item = &'a String> {
    explicit_links
        .iter()
        .filter(move |(target, labels)| contains_phrase(sentence, target) || labels.iter().any(|l| contains_phrase(sentence, l)))
        .map(|(target, _)| target)
}

pub(crate) fn entity_ids(
    sentence: &str,
    lang: &LanguageEdition,
    explicit_links: &BTreeMap<String, BTreeSet<String>>,
    annotations: &[Annotation],
    resolver: &dyn InterlanguageResolver,
) -> BTreeSet<String> {
    let mut ids: BTreeSet<String> = mentioned_links(sentence, explicit_links).map(|t| resolver.canonical_id(lang, t)).collect();
    ids.extend(annotations.iter().map(|a| resolver.canonical_id(&a.title_lang, &a.title)));
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{CountingTransport, HttpResponse};
    use crate::ingest::{InterlanguageGroup, InterlanguageTable};

    fn lang(c: &str) -> LanguageEdition {
        LanguageEdition::new(c).unwrap()
    }

    fn gazetteer(entries: &[(&str, &str)]) -> GazetteerAnnotator {
        let table = entries.iter().map(|(s, t)| (s.to_string(), t.to_string())).collect();
        GazetteerAnnotator::new(&BTreeMap::from([("en".to_owned(), table)]))
    }

    fn ids(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn gazetteer_match() {
        let g = gazetteer(&[("berlin", "Berlin")]);
        let out = annotate_entities("Berlin is nice", &lang("en"), &BTreeMap::new(), &g, &InterlanguageTable::default()).unwrap();
        assert_eq!(out, ids(&["Berlin"]));
    }

    #[test]
    fn explicit_and_automatic_deduplicated() {
        let g = gazetteer(&[("berlin", "Berlin")]);
        let links = BTreeMap::from([("Berlin".to_owned(), BTreeSet::new())]);
        let out = annotate_entities("Berlin is nice", &lang("en"), &links, &g, &InterlanguageTable::default()).unwrap();
        assert_eq!(out, ids(&["Berlin"]));
    }

    #[test]
    fn no_matches() {
        let g = gazetteer(&[("berlin", "Berlin")]);
        let links = BTreeMap::from([("Paris".to_owned(), BTreeSet::from(["the capital".to_owned()]))]);
        let out = annotate_entities("Nothing here", &lang("en"), &links, &g, &InterlanguageTable::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn label_occurrence_counts_for_explicit_link() {
        let links = BTreeMap::from([("Berlin".to_owned(), BTreeSet::from(["the city".to_owned()]))]);
        let out = annotate_entities("Text about the city.", &lang("en"), &links, &gazetteer(&[]), &InterlanguageTable::default())
            .unwrap();
        assert_eq!(out, ids(&["Berlin"]));
    }

    #[test]
    fn longest_surface_first_and_word_bounded() {
        let g = gazetteer(&[("codex", "Codex"), ("codex aureus", "Codex Aureus"), ("st", "Street")]);
        let found = g.annotate("The Codex Aureus of Strasbourg", &lang("en")).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].title, "Codex Aureus");
    }

    #[test]
    fn canonicalized_through_interlanguage_table() {
        let mut table = InterlanguageTable::default();
        table.insert(
            InterlanguageGroup::new(BTreeMap::from([(lang("de"), "Karl der Kahle".to_owned()), (lang("en"), "Charles the Bald".to_owned())]))
                .unwrap(),
        );
        let g = GazetteerAnnotator::new(&BTreeMap::from([(
            "de".to_owned(),
            BTreeMap::from([("karl der kahle".to_owned(), "Karl der Kahle".to_owned())]),
        )]));
        let out = annotate_entities("Für Karl der Kahle geschrieben", &lang("de"), &BTreeMap::new(), &g, &table).unwrap();
        assert_eq!(out, ids(&["Charles the Bald"]));
    }

    #[test]
    fn remote_annotator_parses_uris() {
        let t = CountingTransport::new(|_, _, body| {
            assert_eq!(body.unwrap()["confidence"], 0.5);
            Ok(HttpResponse::ok(
                r#"{"annotations":[{"surface":"Eagleburger","uri":"http://dbpedia.org/resource/Lawrence_Eagleburger","offset":0}]}"#,
            ))
        });
        let remote = RemoteAnnotator::new("http://spot/annotate", RemoteAnnotator::DEFAULT_CONFIDENCE, Arc::new(t));
        let found = remote.annotate("Eagleburger war Minister", &lang("de")).unwrap();
        assert_eq!(found[0].title, "Lawrence Eagleburger");
        assert!(found[0].title_lang.is_english());
    }

    #[test]
    fn uri_titles() {
        assert_eq!(title_from_uri("http://dbpedia.org/resource/S%C3%A3o_Paulo").unwrap(), "São Paulo");
        assert!(title_from_uri("").is_none());
    }

    #[test]
    fn phrase_boundaries() {
        assert!(contains_phrase("In Berlin, today", "berlin"));
        assert!(!contains_phrase("Berliner", "Berlin"));
        assert!(contains_phrase("über Köln.", "KÖLN"));
    }
}
