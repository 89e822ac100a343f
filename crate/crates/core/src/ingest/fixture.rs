//! Offline content source backed by a fixture directory:
//!
//! ```text
//! <root>/<lang>/<title-slug>/history.json     list of RevisionMeta
//! <root>/<lang>/<title-slug>/rev-<id>.wikitext
//! <root>/<lang>/<title-slug>/langlinks.json   {lang: title}, own edition included
//! <root>/interlanguage.json                   optional extra link groups
//! ```

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use super::{sort_history, ContentSource, IngestError, InterlanguageGroup, SourceKind};
use crate::model::{ArticleRef, LanguageEdition, RevisionMeta};
use crate::slug::slugify;

type Node = (LanguageEdition, String);

#[derive(Debug, Clone)]
pub struct FixtureSource {
    root: PathBuf,
    /// Undirected interlanguage link graph over every fixture link table.
    links: BTreeMap<Node, Vec<Node>>,
}

impl FixtureSource {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        fs::read_dir(&root)
            .map_err(|e| IngestError::SourceUnavailable(format!("fixture path {}: {e}", root.display())))?;
        let mut source = Self { root, links: BTreeMap::new() };
        source.load_links()?;
        Ok(source)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn article_dir(&self, article: &ArticleRef) -> PathBuf {
        self.root.join(article.lang.as_str()).join(slugify(&article.title))
    }

    fn connect(&mut self, a: Node, b: Node) {
        if a == b {
            return;
        }
        self.links.entry(a.clone()).or_default().push(b.clone());
        self.links.entry(b).or_default().push(a);
    }

    fn connect_group(&mut self, group: &BTreeMap<String, String>) -> Result<(), IngestError> {
        let nodes: Vec<Node> = group
            .iter()
            .map(|(l, t)| Ok((LanguageEdition::new(l).map_err(malformed)?, t.clone())))
            .collect::<Result<_, IngestError>>()?;
        for pair in nodes.windows(2) {
            self.connect(pair[0].clone(), pair[1].clone());
        }
        Ok(())
    }

    fn load_links(&mut self) -> Result<(), IngestError> {
        let global = self.root.join("interlanguage.json");
        if global.exists() {
            let groups: Vec<BTreeMap<String, String>> = read_json(&global)?;
            for group in &groups {
                self.connect_group(group)?;
            }
        }
        let Ok(langs) = fs::read_dir(&self.root) else { return Ok(()) };
        let mut lang_dirs: Vec<PathBuf> = langs.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
        lang_dirs.sort();
        for lang_dir in lang_dirs {
            let Some(lang) = lang_dir.file_name().and_then(|n| n.to_str()).and_then(|n| LanguageEdition::new(n).ok())
            else {
                continue;
            };
            let mut articles: Vec<PathBuf> = fs::read_dir(&lang_dir)
                .map_err(|e| IngestError::SourceUnavailable(e.to_string()))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .collect();
            articles.sort();
            for dir in articles {
                let path = dir.join("langlinks.json");
                if !path.exists() {
                    continue;
                }
                let table: BTreeMap<String, String> = read_json(&path)?;
                let Some(own_title) = table.get(lang.as_str()) else {
                    log::warn!("{} lacks its own edition entry; reverse links unavailable", path.display());
                    continue;
                };
                let own = (lang.clone(), own_title.clone());
                for (l, t) in &table {
                    let other = (LanguageEdition::new(l).map_err(malformed)?, t.clone());
                    self.connect(own.clone(), other);
                }
            }
        }
        for neighbours in self.links.values_mut() {
            neighbours.sort();
            neighbours.dedup();
        }
        Ok(())
    }

    fn closure(&self, start: &Node) -> InterlanguageGroup {
        let mut members: BTreeMap<LanguageEdition, String> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut queue = VecDeque::from([start.clone()]);
        seen.insert(start.clone());
        while let Some(node) = queue.pop_front() {
            members.entry(node.0.clone()).or_insert_with(|| node.1.clone());
            for next in self.links.get(&node).into_iter().flatten() {
                if seen.insert(next.clone()) {
                    queue.push_back(next.clone());
                }
            }
        }
        InterlanguageGroup::new(members).expect("closure contains the start node")
    }

    fn history_path(&self, article: &ArticleRef) -> Result<PathBuf, IngestError> {
        let path = self.article_dir(article).join("history.json");
        if path.is_file() {
            Ok(path)
        } else {
            Err(IngestError::ArticleNotFound(article.clone()))
        }
    }
}

fn malformed(e: impl std::fmt::Display) -> IngestError {
    IngestError::Malformed(e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::SourceUnavailable(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| IngestError::Malformed(format!("{}: {e}", path.display())))
}

impl ContentSource for FixtureSource {
    fn kind(&self) -> SourceKind {
        SourceKind::Fixture
    }

    fn fetch_revisions(&self, article: &ArticleRef) -> Result<Vec<RevisionMeta>, IngestError> {
        let mut history: Vec<RevisionMeta> = read_json(&self.history_path(article)?)?;
        sort_history(&mut history);
        Ok(history)
    }

    fn fetch_wikitext(&self, article: &ArticleRef, revision_id: u64) -> Result<String, IngestError> {
        let history = self.fetch_revisions(article)?;
        if !history.iter().any(|r| r.revision_id == revision_id) {
            return Err(IngestError::RevisionNotFound { article: article.clone(), revision_id });
        }
        let path = self.article_dir(article).join(format!("rev-{revision_id}.wikitext"));
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => IngestError::Malformed(format!("{} listed in history but missing", path.display())),
            _ => IngestError::SourceUnavailable(format!("{}: {e}", path.display())),
        })
    }

    fn resolve_interlanguage(&self, article: &ArticleRef) -> Result<InterlanguageGroup, IngestError> {
        self.history_path(article)?;
        Ok(self.closure(&(article.lang.clone(), article.title.clone())))
    }

    fn resolve_titles(&self, lang: &LanguageEdition, titles: &[String]) -> Result<Vec<InterlanguageGroup>, IngestError> {
        Ok(titles.iter().map(|t| self.closure(&(lang.clone(), t.clone()))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EditorId;
    use chrono::{TimeZone, Utc};

    fn en(title: &str) -> ArticleRef {
        ArticleRef::new(LanguageEdition::new("en").unwrap(), title).unwrap()
    }

    fn de(title: &str) -> ArticleRef {
        ArticleRef::new(LanguageEdition::new("de").unwrap(), title).unwrap()
    }

    fn write_article(root: &Path, article: &ArticleRef, revs: &[(u64, u32, &str)], links: &[(&str, &str)]) {
        let dir = root.join(article.lang.as_str()).join(slugify(&article.title));
        fs::create_dir_all(&dir).unwrap();
        let history: Vec<RevisionMeta> = revs
            .iter()
            .map(|&(id, day, text)| {
                fs::write(dir.join(format!("rev-{id}.wikitext")), text).unwrap();
                RevisionMeta {
                    revision_id: id,
                    timestamp: Utc.with_ymd_and_hms(2010, 3, day, 0, 0, 0).unwrap(),
                    editor: EditorId::registered("ed"),
                    size_bytes: text.len() as u64,
                }
            })
            .collect();
        fs::write(dir.join("history.json"), serde_json::to_string(&history).unwrap()).unwrap();
        if !links.is_empty() {
            let table: BTreeMap<&str, &str> = links.iter().copied().collect();
            fs::write(dir.join("langlinks.json"), serde_json::to_string(&table).unwrap()).unwrap();
        }
    }

    #[test]
    fn revisions_sorted_even_if_listed_out_of_order() {
        let tmp = tempfile::tempdir().unwrap();
        write_article(tmp.path(), &en("A"), &[(3, 9, "c"), (1, 1, "a"), (2, 5, "b")], &[]);
        let src = FixtureSource::open(tmp.path()).unwrap();
        let revs = src.fetch_revisions(&en("A")).unwrap();
        assert_eq!(revs.iter().map(|r| r.revision_id).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(revs.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }

    #[test]
    fn unknown_article() {
        let tmp = tempfile::tempdir().unwrap();
        let src = FixtureSource::open(tmp.path()).unwrap();
        assert_eq!(src.fetch_revisions(&en("Nope")), Err(IngestError::ArticleNotFound(en("Nope"))));
    }

    #[test]
    fn wikitext_byte_exact_and_missing_revision() {
        let tmp = tempfile::tempdir().unwrap();
        write_article(tmp.path(), &en("A"), &[(1, 1, "x"), (2, 2, "Ünïcode  \n[[Link]]\n"), (3, 3, "")], &[]);
        let src = FixtureSource::open(tmp.path()).unwrap();
        assert_eq!(src.fetch_wikitext(&en("A"), 2).unwrap(), "Ünïcode  \n[[Link]]\n");
        assert_eq!(src.fetch_wikitext(&en("A"), 3).unwrap(), "");
        assert!(matches!(src.fetch_wikitext(&en("A"), 0), Err(IngestError::RevisionNotFound { revision_id: 0, .. })));
    }

    #[test]
    fn missing_root_is_unavailable() {
        assert!(matches!(FixtureSource::open("/definitely/not/here"), Err(IngestError::SourceUnavailable(_))));
    }

    #[test]
    fn singleton_group_without_links() {
        let tmp = tempfile::tempdir().unwrap();
        write_article(tmp.path(), &de("Einsam"), &[(1, 1, "x")], &[]);
        let src = FixtureSource::open(tmp.path()).unwrap();
        let group = src.resolve_interlanguage(&de("Einsam")).unwrap();
        assert_eq!(group.members.len(), 1);
        assert_eq!(group.canonical, "de:Einsam");
    }

    #[test]
    fn asymmetric_links_use_union_closure() {
        let tmp = tempfile::tempdir().unwrap();
        // en links to de, de links only to nl
        write_article(tmp.path(), &en("Star"), &[(1, 1, "x")], &[("en", "Star"), ("de", "Stern")]);
        write_article(tmp.path(), &de("Stern"), &[(1, 1, "x")], &[("de", "Stern"), ("nl", "Ster")]);
        let src = FixtureSource::open(tmp.path()).unwrap();
        let from_de = src.resolve_interlanguage(&de("Stern")).unwrap();
        let from_en = src.resolve_interlanguage(&en("Star")).unwrap();
        assert_eq!(from_de, from_en);
        assert_eq!(from_de.members.len(), 3);
        assert_eq!(from_de.canonical, "Star");
    }
}
