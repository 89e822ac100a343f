//! Acquisition of revision histories, wikitext and interlanguage links, and
//! extraction of text and metadata from wikitext.

mod fixture;
mod interlanguage;
mod live;
pub mod url;
pub mod wikitext;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArticleRef, EditorSet, LanguageEdition, RevisionMeta, Timestamp};

pub use fixture::FixtureSource;
pub use interlanguage::{InterlanguageResolver, InterlanguageTable};
pub use live::{MediaWikiSource, WIKIPEDIA_API};
pub use wikitext::{extract_document, ExtractedDoc, Extractor};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("article not found: {0}")]
    ArticleNotFound(ArticleRef),
    #[error("revision {revision_id} not found for {article}")]
    RevisionNotFound { article: ArticleRef, revision_id: u64 },
    #[error("content source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("malformed source data: {0}")]
    Malformed(String),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::ArticleNotFound(_) => "ArticleNotFound",
            Self::RevisionNotFound { .. } => "RevisionNotFound",
            Self::SourceUnavailable(_) => "SourceUnavailable",
            Self::Malformed(_) => "Malformed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Live,
    Fixture,
}

/// An interlanguage link group and its canonical entity id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterlanguageGroup {
    pub members: BTreeMap<LanguageEdition, String>,
    pub canonical: String,
}

impl InterlanguageGroup {
    pub fn new(members: BTreeMap<LanguageEdition, String>) -> Option<Self> {
        let canonical = crate::model::canonical_entity_id(&members)?;
        Some(Self { members, canonical })
    }

    pub fn singleton(article: &ArticleRef) -> Self {
        let members = BTreeMap::from([(article.lang.clone(), article.title.clone())]);
        Self::new(members).expect("non-empty group")
    }
}

/// Where revision data comes from. Implementations must be shareable across
/// concurrent fetches of the two articles of a pair.
pub trait ContentSource: Send + Sync {
    fn kind(&self) -> SourceKind;

    /// Full history, ascending by timestamp.
    fn fetch_revisions(&self, article: &ArticleRef) -> Result<Vec<RevisionMeta>, IngestError>;

    fn fetch_wikitext(&self, article: &ArticleRef, revision_id: u64) -> Result<String, IngestError>;

    fn resolve_interlanguage(&self, article: &ArticleRef) -> Result<InterlanguageGroup, IngestError>;

    /// Link groups for arbitrary titles of one edition, used to canonicalize
    /// entity annotations. Titles without links yield singleton groups.
    fn resolve_titles(&self, lang: &LanguageEdition, titles: &[String]) -> Result<Vec<InterlanguageGroup>, IngestError>;
}

/// Editors of every revision at or before `cutoff`, with edit counts.
pub fn collect_editors(history: &[RevisionMeta], cutoff: Timestamp) -> EditorSet {
    let mut editors = EditorSet::new();
    for rev in history.iter().take_while(|r| r.timestamp <= cutoff) {
        editors.record_edit(&rev.editor);
    }
    editors
}

pub(crate) fn sort_history(history: &mut [RevisionMeta]) {
    history.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.revision_id.cmp(&b.revision_id)));
}
