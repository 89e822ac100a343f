//! Translation of sentence text into English token multisets.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::json;

use super::AnnotateError;
use crate::http::HttpTransport;
use crate::model::{LanguageEdition, Multiset};

pub trait Translator: Send + Sync {
    /// Lowercased, punctuation-free, stopword-filtered English tokens.
    fn translate_tokens(&self, text: &str, lang: &LanguageEdition) -> Result<Multiset, AnnotateError>;
}

/// Splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

fn english_bag<'a>(tokens: impl Iterator<Item = &'a str>, stopwords: &BTreeSet<String>) -> Multiset {
    tokens
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Word-by-word dictionary lookup. English input passes through unchanged.
/// Unknown tokens survive only when capitalized or numeric (names and
/// numbers rarely need translating); other unknown words are dropped.
#[derive(Debug, Clone)]
pub struct DictionaryTranslator {
    dictionary: BTreeMap<String, BTreeMap<String, String>>,
    stopwords: BTreeSet<String>,
}

impl DictionaryTranslator {
    pub fn new(dictionary: BTreeMap<String, BTreeMap<String, String>>, stopwords: BTreeSet<String>) -> Self {
        Self { dictionary, stopwords }
    }
}

impl Translator for DictionaryTranslator {
    fn translate_tokens(&self, text: &str, lang: &LanguageEdition) -> Result<Multiset, AnnotateError> {
        if lang.is_english() {
            return Ok(english_bag(tokenize(text), &self.stopwords));
        }
        let empty = BTreeMap::new();
        let dict = self.dictionary.get(lang.as_str()).unwrap_or(&empty);
        let mut english: Vec<String> = Vec::new();
        for token in tokenize(text) {
            let lower = token.to_lowercase();
            if let Some(rendering) = dict.get(&lower) {
                english.extend(tokenize(rendering).map(str::to_owned));
            } else if token.chars().next().is_some_and(char::is_uppercase) || token.chars().all(|c| c.is_ascii_digit()) {
                english.push(lower);
            }
        }
        Ok(english_bag(english.iter().map(String::as_str), &self.stopwords))
    }
}

/// Remote machine translation: `POST {text, source_lang}` → `{english_text}`.
pub struct RemoteTranslator {
    endpoint: String,
    transport: Arc<dyn HttpTransport>,
    stopwords: BTreeSet<String>,
}

impl RemoteTranslator {
    pub fn new(endpoint: impl Into<String>, transport: Arc<dyn HttpTransport>, stopwords: BTreeSet<String>) -> Self {
        Self { endpoint: endpoint.into(), transport, stopwords }
    }
}

impl Translator for RemoteTranslator {
    fn translate_tokens(&self, text: &str, lang: &LanguageEdition) -> Result<Multiset, AnnotateError> {
        if lang.is_english() || text.trim().is_empty() {
            return Ok(english_bag(tokenize(text), &self.stopwords));
        }
        let unavailable = |m: String| AnnotateError::TranslatorUnavailable(m);
        let resp = self
            .transport
            .post_json(&self.endpoint, &json!({"text": text, "source_lang": lang.as_str()}))
            .map_err(|e| unavailable(e.to_string()))?;
        if !resp.is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status)));
        }
        let body: serde_json::Value = serde_json::from_str(&resp.body).map_err(|e| unavailable(e.to_string()))?;
        let english = body["english_text"]
            .as_str()
            .ok_or_else(|| unavailable("response lacks english_text".into()))?;
        Ok(english_bag(tokenize(english), &self.stopwords))
    }
}
