//! Composition of ingest and annotation into one validated snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::entities::entity_ids;
use super::{
    geolocate_editors, AnnotateError, DictionaryTranslator, EntityAnnotator, GazetteerAnnotator, GeoLocator,
    SentenceSplitter, StubTables, TableGeoLocator, TemporalExtractor, Translator,
};
use crate::ingest::{collect_editors, ContentSource, Extractor, IngestError, InterlanguageResolver, InterlanguageTable};
use crate::model::{validate_snapshot, ArticleRef, EditorId, LanguageEdition, RevisionMeta, Snapshot, SnapshotViolation};

/// Annotation capabilities shared by every snapshot build.
#[derive(Clone)]
pub struct Clients {
    pub translator: Arc<dyn Translator>,
    pub annotator: Arc<dyn EntityAnnotator>,
    pub geo: Arc<dyn GeoLocator>,
    pub splitter: SentenceSplitter,
    pub temporal: TemporalExtractor,
}

impl Clients {
    /// Offline clients backed entirely by the given tables.
    pub fn stubs(tables: &StubTables) -> Result<Self, AnnotateError> {
        Ok(Self {
            translator: Arc::new(DictionaryTranslator::new(tables.dictionary.clone(), tables.stopwords.clone())),
            annotator: Arc::new(GazetteerAnnotator::new(&tables.gazetteer)),
            geo: Arc::new(TableGeoLocator::new(&tables.geo)?),
            splitter: SentenceSplitter::new(tables.abbreviations.clone()),
            temporal: TemporalExtractor::new(&tables.temporal)?,
        })
    }

    pub fn bundled() -> Self {
        Self::stubs(&StubTables::bundled()).expect("bundled stub tables are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Fetch,
    Extract,
    Editors,
    Geolocate,
    Split,
    Features,
    Validate,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Fetch => "fetch",
            Stage::Extract => "extract",
            Stage::Editors => "editors",
            Stage::Geolocate => "geolocate",
            Stage::Split => "split",
            Stage::Features => "features",
            Stage::Validate => "validate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineErrorKind {
    Ingest(IngestError),
    Annotate(AnnotateError),
    Invalid(Vec<SnapshotViolation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}(stage={stage}): {}", self.code(), self.detail())]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: PipelineErrorKind,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: PipelineErrorKind) -> Self {
        Self { stage, kind }
    }

    pub fn code(&self) -> &'static str {
        match &self.kind {
            PipelineErrorKind::Ingest(e) => e.code(),
            PipelineErrorKind::Annotate(e) => e.code(),
            PipelineErrorKind::Invalid(_) => "InvalidSnapshot",
        }
    }

    fn detail(&self) -> String {
        match &self.kind {
            PipelineErrorKind::Ingest(e) => e.to_string(),
            PipelineErrorKind::Annotate(e) => e.to_string(),
            PipelineErrorKind::Invalid(v) => v.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(", "),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltSnapshot {
    pub snapshot: Snapshot,
    /// Stages in the order they ran.
    pub stages: Vec<Stage>,
    /// Anonymous editors without a resolvable country.
    pub unresolved: Vec<EditorId>,
}

/// Fetches the revision's wikitext and annotates it.
pub fn build_snapshot(
    article: &ArticleRef,
    revision: &RevisionMeta,
    history: &[RevisionMeta],
    source: &dyn ContentSource,
    clients: &Clients,
    resolver: &mut InterlanguageTable,
) -> Result<BuiltSnapshot, PipelineError> {
    let wikitext = source
        .fetch_wikitext(article, revision.revision_id)
        .map_err(|e| PipelineError::new(Stage::Fetch, PipelineErrorKind::Ingest(e)))?;
    let mut built = annotate_wikitext(article, revision, &wikitext, history, source, clients, resolver)?;
    built.stages.insert(0, Stage::Fetch);
    Ok(built)
}

/// Annotates already fetched wikitext. `resolver` caches interlanguage
/// groups across calls; titles it lacks are resolved through `source`.
pub fn annotate_wikitext(
    article: &ArticleRef,
    revision: &RevisionMeta,
    wikitext: &str,
    history: &[RevisionMeta],
    source: &dyn ContentSource,
    clients: &Clients,
    resolver: &mut InterlanguageTable,
) -> Result<BuiltSnapshot, PipelineError> {
    let lang = &article.lang;
    let annotate_err = |stage| move |e: AnnotateError| PipelineError::new(stage, PipelineErrorKind::Annotate(e));
    let mut stages = Vec::new();

    stages.push(Stage::Extract);
    let doc = Extractor::for_language(lang).extract(wikitext);

    stages.push(Stage::Editors);
    let editors = collect_editors(history, revision.timestamp);

    stages.push(Stage::Geolocate);
    let geo = geolocate_editors(&editors, clients.geo.as_ref()).map_err(annotate_err(Stage::Geolocate))?;

    stages.push(Stage::Split);
    let mut sentences = clients.splitter.split(&doc.plain_text, lang);

    stages.push(Stage::Features);
    let mut annotations = Vec::with_capacity(sentences.len());
    for s in &mut sentences {
        s.english_tokens = clients.translator.translate_tokens(&s.text, lang).map_err(annotate_err(Stage::Features))?;
        s.times = clients.temporal.extract(&s.text, lang);
        annotations.push(clients.annotator.annotate(&s.text, lang).map_err(annotate_err(Stage::Features))?);
    }

    let mut wanted: BTreeMap<LanguageEdition, BTreeSet<String>> = BTreeMap::new();
    wanted.entry(lang.clone()).or_default().extend(doc.wiki_links.iter().cloned());
    for a in annotations.iter().flatten() {
        wanted.entry(a.title_lang.clone()).or_default().insert(a.title.clone());
    }
    for (title_lang, titles) in wanted {
        let missing: Vec<String> = titles.into_iter().filter(|t| resolver.lookup(&title_lang, t).is_none()).collect();
        if missing.is_empty() {
            continue;
        }
        let groups = source
            .resolve_titles(&title_lang, &missing)
            .map_err(|e| PipelineError::new(Stage::Features, PipelineErrorKind::Ingest(e)))?;
        groups.into_iter().for_each(|g| resolver.insert(g));
    }

    let links = &doc.link_labels;
    let mut wiki_annotations: BTreeSet<String> = doc.wiki_links.iter().map(|t| resolver.canonical_id(lang, t)).collect();
    for (s, found) in sentences.iter_mut().zip(&annotations) {
        s.entities = entity_ids(&s.text, lang, links, found, &*resolver);
        wiki_annotations.extend(s.entities.iter().cloned());
    }

    let snapshot = Snapshot {
        article: article.clone(),
        revision_id: revision.revision_id,
        timestamp: revision.timestamp,
        text: doc.plain_text,
        sentences,
        images: doc.images,
        wiki_annotations,
        ext_links: doc.ext_links,
        ext_hosts: doc.ext_hosts,
        editors: geo.editors,
    };

    stages.push(Stage::Validate);
    let violations = validate_snapshot(&snapshot);
    if !violations.is_empty() {
        return Err(PipelineError::new(Stage::Validate, PipelineErrorKind::Invalid(violations)));
    }
    Ok(BuiltSnapshot { snapshot, stages, unresolved: geo.unresolved })
}
