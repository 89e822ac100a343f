//! MediaWiki Action API client (`action=query`, JSON, formatversion 2).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::Value;

use super::{sort_history, ContentSource, IngestError, InterlanguageGroup, SourceKind};
use crate::http::HttpTransport;
use crate::model::{rfc3339, ArticleRef, EditorId, LanguageEdition, RevisionMeta};

pub const WIKIPEDIA_API: &str = "https://{lang}.wikipedia.org/w/api.php";

/// Titles per `titles=` batch; the API limit for anonymous clients.
const TITLE_BATCH: usize = 50;

pub struct MediaWikiSource {
    endpoint_template: String,
    transport: Arc<dyn HttpTransport>,
}

impl MediaWikiSource {
    /// `endpoint_template` may contain `{lang}`, e.g. [`WIKIPEDIA_API`].
    pub fn new(endpoint_template: impl Into<String>, transport: Arc<dyn HttpTransport>) -> Self {
        Self { endpoint_template: endpoint_template.into(), transport }
    }

    fn endpoint(&self, lang: &LanguageEdition) -> String {
        self.endpoint_template.replace("{lang}", lang.as_str())
    }

    fn query(&self, lang: &LanguageEdition, params: &[(&str, &str)]) -> Result<Value, IngestError> {
        let mut query: Vec<(String, String)> = vec![
            ("action".into(), "query".into()),
            ("format".into(), "json".into()),
            ("formatversion".into(), "2".into()),
        ];
        query.extend(params.iter().map(|(k, v)| (k.to_string(), v.to_string())));
        let resp = self
            .transport
            .get(&self.endpoint(lang), &query)
            .map_err(|e| IngestError::SourceUnavailable(e.to_string()))?;
        if !resp.is_success() {
            return Err(IngestError::SourceUnavailable(format!("HTTP {}", resp.status)));
        }
        let value: Value = serde_json::from_str(&resp.body).map_err(|e| IngestError::Malformed(e.to_string()))?;
        if let Some(err) = value.get("error") {
            return Err(IngestError::SourceUnavailable(format!(
                "API error {}: {}",
                err["code"].as_str().unwrap_or("?"),
                err["info"].as_str().unwrap_or("")
            )));
        }
        Ok(value)
    }

    /// Follows `continue` blocks, collecting every response page.
    fn query_all(&self, lang: &LanguageEdition, params: &[(&str, &str)]) -> Result<Vec<Value>, IngestError> {
        let mut pages = Vec::new();
        let mut cont: BTreeMap<String, String> = BTreeMap::new();
        loop {
            let mut all: Vec<(&str, &str)> = params.to_vec();
            all.extend(cont.iter().map(|(k, v)| (k.as_str(), v.as_str())));
            let value = self.query(lang, &all)?;
            let next = value.get("continue").and_then(Value::as_object).map(|obj| {
                obj.iter()
                    .map(|(k, v)| (k.clone(), v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string())))
                    .collect::<BTreeMap<_, _>>()
            });
            pages.push(value);
            match next {
                Some(next) if next != cont => cont = next,
                _ => return Ok(pages),
            }
        }
    }
}

fn first_page<'a>(value: &'a Value, article: &ArticleRef) -> Result<&'a Value, IngestError> {
    let page = value["query"]["pages"]
        .as_array()
        .and_then(|p| p.first())
        .ok_or_else(|| IngestError::Malformed("response lacks query.pages".into()))?;
    if page.get("missing").is_some() || page.get("invalid").is_some() {
        return Err(IngestError::ArticleNotFound(article.clone()));
    }
    Ok(page)
}

fn parse_revision(rev: &Value) -> Result<RevisionMeta, IngestError> {
    let bad = |what: &str| IngestError::Malformed(format!("revision lacks {what}"));
    let revision_id = rev["revid"].as_u64().ok_or_else(|| bad("revid"))?;
    let timestamp = rfc3339::parse(rev["timestamp"].as_str().ok_or_else(|| bad("timestamp"))?)
        .map_err(|e| IngestError::Malformed(e.to_string()))?;
    let user = rev["user"].as_str().unwrap_or("(hidden)");
    let editor = if rev.get("anon").and_then(Value::as_bool).unwrap_or(false) {
        EditorId::anonymous(user)
    } else {
        EditorId::registered(user)
    };
    Ok(RevisionMeta { revision_id, timestamp, editor, size_bytes: rev["size"].as_u64().unwrap_or(0) })
}

fn group_from_links(lang: &LanguageEdition, title: &str, links: Option<&Value>) -> InterlanguageGroup {
    let mut members = BTreeMap::from([(lang.clone(), title.to_owned())]);
    for link in links.and_then(Value::as_array).into_iter().flatten() {
        let (Some(l), Some(t)) = (link["lang"].as_str(), link["title"].as_str()) else { continue };
        if let Ok(l) = LanguageEdition::new(l) {
            members.entry(l).or_insert_with(|| t.to_owned());
        }
    }
    InterlanguageGroup::new(members).expect("non-empty")
}

impl ContentSource for MediaWikiSource {
    fn kind(&self) -> SourceKind {
        SourceKind::Live
    }

    fn fetch_revisions(&self, article: &ArticleRef) -> Result<Vec<RevisionMeta>, IngestError> {
        let pages = self.query_all(
            &article.lang,
            &[
                ("prop", "revisions"),
                ("titles", &article.title),
                ("rvprop", "ids|timestamp|user|size"),
                ("rvlimit", "max"),
                ("rvdir", "newer"),
            ],
        )?;
        let mut history = Vec::new();
        for value in &pages {
            let page = first_page(value, article)?;
            for rev in page["revisions"].as_array().into_iter().flatten() {
                history.push(parse_revision(rev)?);
            }
        }
        sort_history(&mut history);
        Ok(history)
    }

    fn fetch_wikitext(&self, article: &ArticleRef, revision_id: u64) -> Result<String, IngestError> {
        let id = revision_id.to_string();
        let value = self.query(
            &article.lang,
            &[("prop", "revisions"), ("revids", &id), ("rvprop", "ids|content"), ("rvslots", "main")],
        )?;
        let not_found = || IngestError::RevisionNotFound { article: article.clone(), revision_id };
        if value["query"].get("badrevids").is_some() {
            return Err(not_found());
        }
        let page = first_page(&value, article)?;
        let rev = page["revisions"].as_array().and_then(|r| r.first()).ok_or_else(not_found)?;
        let slot = &rev["slots"]["main"];
        if slot.get("texthidden").is_some() {
            return Ok(String::new());
        }
        Ok(slot["content"].as_str().unwrap_or("").to_owned())
    }

    fn resolve_interlanguage(&self, article: &ArticleRef) -> Result<InterlanguageGroup, IngestError> {
        let pages = self.query_all(&article.lang, &[("prop", "langlinks"), ("titles", &article.title), ("lllimit", "max")])?;
        let mut links = Vec::new();
        for value in &pages {
            let page = first_page(value, article)?;
            links.extend(page["langlinks"].as_array().cloned().unwrap_or_default());
        }
        Ok(group_from_links(&article.lang, &article.title, Some(&Value::Array(links))))
    }

    fn resolve_titles(&self, lang: &LanguageEdition, titles: &[String]) -> Result<Vec<InterlanguageGroup>, IngestError> {
        let mut links: BTreeMap<String, Vec<Value>> = BTreeMap::new();
        for chunk in titles.chunks(TITLE_BATCH) {
            let joined = chunk.join("|");
            let pages = self.query_all(lang, &[("prop", "langlinks"), ("titles", &joined), ("lllimit", "max")])?;
            for value in &pages {
                // map normalized titles back to the requested spelling
                let mut renamed: BTreeMap<String, String> = BTreeMap::new();
                for n in value["query"]["normalized"].as_array().into_iter().flatten() {
                    if let (Some(from), Some(to)) = (n["from"].as_str(), n["to"].as_str()) {
                        renamed.insert(to.to_owned(), from.to_owned());
                    }
                }
                for page in value["query"]["pages"].as_array().into_iter().flatten() {
                    let Some(title) = page["title"].as_str() else { continue };
                    let requested = renamed.get(title).cloned().unwrap_or_else(|| title.to_owned());
                    let entry = links.entry(requested).or_default();
                    entry.extend(page["langlinks"].as_array().cloned().unwrap_or_default());
                }
            }
        }
        Ok(titles
            .iter()
            .map(|t| group_from_links(lang, t, links.get(t).map(|v| Value::Array(v.clone())).as_ref()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{CountingTransport, HttpResponse};
    use crate::ingest::extract_document;
    use serde_json::json;

    fn article() -> ArticleRef {
        ArticleRef::new(LanguageEdition::new("de").unwrap(), "Codex Aureus von St. Emmeram").unwrap()
    }

    fn param<'a>(q: &'a [(String, String)], key: &str) -> Option<&'a str> {
        q.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn fake_wiki() -> CountingTransport {
        CountingTransport::new(|url, q, _| {
            assert!(url.starts_with("https://de.wikipedia.org/"));
            let body = match (param(q, "prop"), param(q, "revids"), param(q, "rvcontinue")) {
                (Some("revisions"), Some("2"), _) => json!({"query": {"pages": [{"title": "T",
                    "revisions": [{"revid": 2, "slots": {"main": {"content": "Hallo [[Welt]]"}}}]}]}}),
                (Some("revisions"), Some(_), _) => json!({"query": {"badrevids": {"99": {"revid": 99}}}}),
                (Some("revisions"), None, None) => json!({"continue": {"rvcontinue": "x", "continue": "||"},
                    "query": {"pages": [{"title": "T", "revisions": [
                        {"revid": 3, "timestamp": "2009-01-02T00:00:00Z", "user": "1.2.3.4", "anon": true, "size": 5},
                        {"revid": 1, "timestamp": "2008-08-20T10:00:00Z", "user": "Alice", "size": 3}]}]}}),
                (Some("revisions"), None, Some("x")) => json!({"query": {"pages": [{"title": "T", "revisions": [
                        {"revid": 4, "timestamp": "2010-01-02T00:00:00Z", "user": "Bob", "size": 9}]}]}}),
                (Some("langlinks"), _, _) => json!({"query": {"pages": [{"title": "T",
                    "langlinks": [{"lang": "en", "title": "Codex Aureus of St. Emmeram"}]}]}}),
                _ => json!({"error": {"code": "badparams", "info": "?"}}),
            };
            Ok(HttpResponse::ok(body.to_string()))
        })
    }

    #[test]
    fn history_follows_continuation_and_sorts() {
        let t = fake_wiki();
        let src = MediaWikiSource::new(WIKIPEDIA_API, Arc::new(t.clone()));
        let revs = src.fetch_revisions(&article()).unwrap();
        assert_eq!(revs.iter().map(|r| r.revision_id).collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(revs[1].editor, EditorId::anonymous("1.2.3.4"));
        assert_eq!(revs[0].editor, EditorId::registered("Alice"));
        assert_eq!(t.requests(), 2);
    }

    #[test]
    fn wikitext_and_bad_revision() {
        let src = MediaWikiSource::new(WIKIPEDIA_API, Arc::new(fake_wiki()));
        assert_eq!(src.fetch_wikitext(&article(), 2).unwrap(), "Hallo [[Welt]]");
        assert!(matches!(src.fetch_wikitext(&article(), 99), Err(IngestError::RevisionNotFound { .. })));
    }

    #[test]
    fn langlinks_group() {
        let src = MediaWikiSource::new(WIKIPEDIA_API, Arc::new(fake_wiki()));
        let group = src.resolve_interlanguage(&article()).unwrap();
        assert_eq!(group.canonical, "Codex Aureus of St. Emmeram");
        assert_eq!(group.members.len(), 2);
    }

    #[test]
    fn missing_page() {
        let t = CountingTransport::new(|_, _, _| Ok(HttpResponse::ok(r#"{"query":{"pages":[{"title":"X","missing":true}]}}"#)));
        let src = MediaWikiSource::new(WIKIPEDIA_API, Arc::new(t));
        assert!(matches!(src.fetch_revisions(&article()), Err(IngestError::ArticleNotFound(_))));
    }

    #[test]
    fn transport_failure_is_unavailable() {
        let src = MediaWikiSource::new(WIKIPEDIA_API, Arc::new(CountingTransport::offline()));
        assert!(matches!(src.fetch_revisions(&article()), Err(IngestError::SourceUnavailable(_))));
    }

    #[test]
    fn live_and_fixture_extract_identically() {
        // the extractor only ever sees the wikitext string, whichever source produced it
        let src = MediaWikiSource::new(WIKIPEDIA_API, Arc::new(fake_wiki()));
        let live_text = src.fetch_wikitext(&article(), 2).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("de").join(crate::slug::slugify(&article().title));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("rev-2.wikitext"), &live_text).unwrap();
        let history = vec![RevisionMeta {
            revision_id: 2,
            timestamp: rfc3339::parse("2009-01-01T00:00:00Z").unwrap(),
            editor: EditorId::registered("A"),
            size_bytes: live_text.len() as u64,
        }];
        std::fs::write(dir.join("history.json"), serde_json::to_string(&history).unwrap()).unwrap();
        let fixture = crate::ingest::FixtureSource::open(tmp.path()).unwrap();
        let fixture_text = fixture.fetch_wikitext(&article(), 2).unwrap();
        assert_eq!(extract_document(&live_text), extract_document(&fixture_text));
    }
}
