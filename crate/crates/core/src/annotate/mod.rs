//! Per-snapshot annotation: sentence splitting, translation to English
//! tokens, entity annotation, temporal expressions and editor geolocation.

mod entities;
mod geo;
mod pipeline;
mod sentences;
mod stubs;
mod temporal;
mod translate;

use thiserror::Error;

pub use entities::{annotate_entities, title_from_uri, Annotation, EntityAnnotator, GazetteerAnnotator, RemoteAnnotator};
pub use geo::{geolocate_editors, GeoLocator, GeoOutcome, RemoteGeoLocator, TableGeoLocator};
pub use pipeline::{annotate_wikitext, build_snapshot, BuiltSnapshot, Clients, PipelineError, PipelineErrorKind, Stage};
pub use sentences::SentenceSplitter;
pub use stubs::{LanguagePatterns, PatternSpec, StubTables, TemporalKind};
pub use temporal::TemporalExtractor;
pub use translate::{tokenize, DictionaryTranslator, RemoteTranslator, Translator};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AnnotateError {
    #[error("translator unavailable: {0}")]
    TranslatorUnavailable(String),
    #[error("entity annotator unavailable: {0}")]
    AnnotatorUnavailable(String),
    #[error("geolocation unavailable: {0}")]
    GeoUnavailable(String),
    #[error("bad stub table: {0}")]
    BadStub(String),
}

impl AnnotateError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::TranslatorUnavailable(_) => "TranslatorUnavailable",
            Self::AnnotatorUnavailable(_) => "AnnotatorUnavailable",
            Self::GeoUnavailable(_) => "GeoUnavailable",
            Self::BadStub(_) => "BadStub",
        }
    }
}
