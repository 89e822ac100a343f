//! Shared domain types: articles, revisions, editors, annotated snapshots,
//! similarity configuration and reports.
//!
//! Every type here is an immutable value once built and serializes to the
//! canonical JSON form used by the store and the HTTP API.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Timestamp = DateTime<Utc>;

/// Tolerance for weight groups summing to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),
    #[error("invalid article title {0:?}")]
    InvalidTitle(String),
    #[error("invalid country code {0:?}")]
    InvalidCountry(String),
    #[error("duplicate editor {0}")]
    DuplicateEditor(EditorId),
}

/// RFC 3339 timestamps at second precision with a `Z` suffix.
pub mod rfc3339 {
    use super::Timestamp;
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(ts: &Timestamp) -> String {
        ts.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn parse(s: &str) -> Result<Timestamp, chrono::ParseError> {
        DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc))
    }

    pub fn serialize<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// A Wikipedia language edition, e.g. `en` or `de`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageEdition(String);

impl LanguageEdition {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        let ok = (2..=3).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase());
        if ok {
            Ok(Self(code.to_owned()))
        } else {
            Err(ModelError::InvalidLanguage(code.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_english(&self) -> bool {
        self.0 == "en"
    }
}

impl TryFrom<String> for LanguageEdition {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<LanguageEdition> for String {
    fn from(value: LanguageEdition) -> Self {
        value.0
    }
}

impl fmt::Display for LanguageEdition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawArticleRef")]
pub struct ArticleRef {
    pub lang: LanguageEdition,
    pub title: String,
}

#[derive(Deserialize)]
struct RawArticleRef {
    lang: LanguageEdition,
    title: String,
}

impl TryFrom<RawArticleRef> for ArticleRef {
    type Error = ModelError;
    fn try_from(raw: RawArticleRef) -> Result<Self, Self::Error> {
        Self::new(raw.lang, &raw.title)
    }
}

impl ArticleRef {
    pub fn new(lang: LanguageEdition, title: &str) -> Result<Self, ModelError> {
        if title.is_empty() || title.trim() != title {
            return Err(ModelError::InvalidTitle(title.to_owned()));
        }
        Ok(Self { lang, title: title.to_owned() })
    }

    /// Parses `lang:Title`.
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        let (lang, title) = spec
            .split_once(':')
            .ok_or_else(|| ModelError::InvalidTitle(spec.to_owned()))?;
        Self::new(LanguageEdition::new(lang.trim())?, title.trim())
    }
}

impl fmt::Display for ArticleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lang, self.title)
    }
}

/// ISO 3166-1 alpha-2 country code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        if code.len() == 2 && code.bytes().all(|b| b.is_ascii_alphabetic()) {
            Ok(Self(code.to_ascii_uppercase()))
        } else {
            Err(ModelError::InvalidCountry(code.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryCode {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<CountryCode> for String {
    fn from(value: CountryCode) -> Self {
        value.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Registered editors are identified by user name, anonymous ones by IP.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EditorId {
    Registered { name: String },
    Anonymous { ip: String },
}

impl EditorId {
    pub fn registered(name: impl Into<String>) -> Self {
        Self::Registered { name: name.into() }
    }

    pub fn anonymous(ip: impl Into<String>) -> Self {
        Self::Anonymous { ip: ip.into() }
    }

    pub fn is_anonymous(&self) -> bool {
        matches!(self, Self::Anonymous { .. })
    }

    pub fn ip(&self) -> Option<&str> {
        match self {
            Self::Anonymous { ip } => Some(ip),
            Self::Registered { .. } => None,
        }
    }
}

impl fmt::Display for EditorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Registered { name } => f.write_str(name),
            Self::Anonymous { ip } => f.write_str(ip),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionMeta {
    pub revision_id: u64,
    #[serde(with = "rfc3339")]
    pub timestamp: Timestamp,
    pub editor: EditorId,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Editor {
    pub id: EditorId,
    pub edit_count: u32,
    pub loc: Option<CountryCode>,
}

/// The contributing editors of one article snapshot, keyed by [`EditorId`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEditorSet", into = "RawEditorSet")]
pub struct EditorSet {
    editors: BTreeMap<EditorId, Editor>,
}

#[derive(Serialize, Deserialize)]
struct RawEditorSet {
    editors: Vec<Editor>,
}

impl TryFrom<RawEditorSet> for EditorSet {
    type Error = ModelError;
    fn try_from(raw: RawEditorSet) -> Result<Self, Self::Error> {
        let mut set = EditorSet::default();
        for editor in raw.editors {
            set.insert(editor)?;
        }
        Ok(set)
    }
}

impl From<EditorSet> for RawEditorSet {
    fn from(set: EditorSet) -> Self {
        RawEditorSet { editors: set.editors.into_values().collect() }
    }
}

impl EditorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, editor: Editor) -> Result<(), ModelError> {
        if self.editors.contains_key(&editor.id) {
            return Err(ModelError::DuplicateEditor(editor.id));
        }
        self.editors.insert(editor.id.clone(), editor);
        Ok(())
    }

    /// Counts one more edit by `id`, adding the editor if unseen.
    pub fn record_edit(&mut self, id: &EditorId) {
        self.editors
            .entry(id.clone())
            .and_modify(|e| e.edit_count += 1)
            .or_insert_with(|| Editor { id: id.clone(), edit_count: 1, loc: None });
    }

    pub fn set_location(&mut self, id: &EditorId, loc: Option<CountryCode>) {
        if let Some(editor) = self.editors.get_mut(id) {
            editor.loc = loc;
        }
    }

    pub fn len(&self) -> usize {
        self.editors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.editors.is_empty()
    }

    pub fn get(&self, id: &EditorId) -> Option<&Editor> {
        self.editors.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Editor> {
        self.editors.values()
    }

    pub fn ids(&self) -> BTreeSet<&EditorId> {
        self.editors.keys().collect()
    }

    /// Number of located editors per country; each editor counts once.
    pub fn location_counts(&self) -> BTreeMap<CountryCode, usize> {
        let mut counts = BTreeMap::new();
        for loc in self.editors.values().filter_map(|e| e.loc.as_ref()) {
            *counts.entry(loc.clone()).or_insert(0) += 1;
        }
        counts
    }
}

impl FromIterator<Editor> for EditorSet {
    fn from_iter<I: IntoIterator<Item = Editor>>(iter: I) -> Self {
        let mut set = Self::default();
        for editor in iter {
            set.editors.insert(editor.id.clone(), editor);
        }
        set
    }
}

/// A multiset of strings (token or host frequencies).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiset(BTreeMap<String, u32>);

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, item: impl Into<String>) {
        *self.0.entry(item.into()).or_insert(0) += 1;
    }

    pub fn add_count(&mut self, item: &str, count: u32) {
        if count > 0 {
            *self.0.entry(item.to_owned()).or_insert(0) += count;
        }
    }

    pub fn extend_from(&mut self, other: &Multiset) {
        for (item, count) in &other.0 {
            self.add_count(item, *count);
        }
    }

    pub fn count(&self, item: &str) -> u32 {
        self.0.get(item).copied().unwrap_or(0)
    }

    /// Number of occurrences, counting repeats.
    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn distinct(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> BTreeSet<&str> {
        self.0.keys().map(String::as_str).collect()
    }
}

impl<S: Into<String>> FromIterator<S> for Multiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut bag = Self::default();
        for item in iter {
            bag.add(item);
        }
        bag
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeExpression {
    pub start_day: NaiveDate,
    pub end_day: NaiveDate,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub index: usize,
    pub text: String,
    pub char_len: usize,
    /// Translated, lowercased, stopword-filtered tokens with frequencies.
    pub english_tokens: Multiset,
    pub entities: BTreeSet<String>,
    pub times: Vec<TimeExpression>,
}

impl SentenceRecord {
    pub fn bare(index: usize, text: &str) -> Self {
        Self {
            index,
            text: text.to_owned(),
            char_len: text.chars().count(),
            english_tokens: Multiset::new(),
            entities: BTreeSet::new(),
            times: Vec::new(),
        }
    }
}

/// One article's annotated state at a single revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub article: ArticleRef,
    pub revision_id: u64,
    #[serde(with = "rfc3339")]
    pub timestamp: Timestamp,
    pub text: String,
    pub sentences: Vec<SentenceRecord>,
    pub images: BTreeSet<String>,
    pub wiki_annotations: BTreeSet<String>,
    pub ext_links: BTreeSet<String>,
    pub ext_hosts: Multiset,
    pub editors: EditorSet,
}

impl Snapshot {
    pub fn text_chars(&self) -> usize {
        self.text.chars().count()
    }

    pub fn sentence_chars(&self) -> usize {
        self.sentences.iter().map(|s| s.char_len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Text,
    Meta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    TextLength,
    TextOverlap,
    PassageCoverage,
    Images,
    Annotations,
    ExtLinks,
    ExtHosts,
    Editors,
    EditorLocations,
}

impl Feature {
    pub const ALL: [Feature; 9] = [
        Feature::TextLength,
        Feature::TextOverlap,
        Feature::PassageCoverage,
        Feature::Images,
        Feature::Annotations,
        Feature::ExtLinks,
        Feature::ExtHosts,
        Feature::Editors,
        Feature::EditorLocations,
    ];

    pub fn group(self) -> FeatureGroup {
        match self {
            Feature::TextLength | Feature::TextOverlap | Feature::PassageCoverage => FeatureGroup::Text,
            _ => FeatureGroup::Meta,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::TextLength => "text_length",
            Feature::TextOverlap => "text_overlap",
            Feature::PassageCoverage => "passage_coverage",
            Feature::Images => "images",
            Feature::Annotations => "annotations",
            Feature::ExtLinks => "ext_links",
            Feature::ExtHosts => "ext_hosts",
            Feature::Editors => "editors",
            Feature::EditorLocations => "editor_locations",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextWeights {
    pub text_length: f64,
    pub text_overlap: f64,
    pub passage_coverage: f64,
}

impl Default for TextWeights {
    fn default() -> Self {
        Self { text_length: 1.0 / 3.0, text_overlap: 1.0 / 3.0, passage_coverage: 1.0 / 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaWeights {
    pub images: f64,
    pub annotations: f64,
    pub ext_links: f64,
    pub ext_hosts: f64,
    pub editors: f64,
    pub editor_locations: f64,
}

impl Default for MetaWeights {
    fn default() -> Self {
        Self {
            images: 0.25,
            annotations: 0.25,
            ext_links: 0.125,
            ext_hosts: 0.125,
            editors: 0.125,
            editor_locations: 0.125,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceFeatureWeights {
    pub cosine: f64,
    pub entities: f64,
    pub time: f64,
}

impl Default for SentenceFeatureWeights {
    fn default() -> Self {
        Self { cosine: 1.0 / 3.0, entities: 1.0 / 3.0, time: 1.0 / 3.0 }
    }
}

/// All tunable parameters of the similarity computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub text_weights: TextWeights,
    pub meta_weights: MetaWeights,
    pub alpha: f64,
    pub sentence_threshold: f64,
    pub merge_gap: usize,
    pub snapshot_count: usize,
    pub sentence_feature_weights: SentenceFeatureWeights,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            text_weights: TextWeights::default(),
            meta_weights: MetaWeights::default(),
            alpha: 0.5,
            sentence_threshold: 0.4,
            merge_gap: 2,
            snapshot_count: 8,
            sentence_feature_weights: SentenceFeatureWeights::default(),
        }
    }
}

impl SimilarityConfig {
    pub fn weight(&self, feature: Feature) -> f64 {
        let (t, m) = (&self.text_weights, &self.meta_weights);
        match feature {
            Feature::TextLength => t.text_length,
            Feature::TextOverlap => t.text_overlap,
            Feature::PassageCoverage => t.passage_coverage,
            Feature::Images => m.images,
            Feature::Annotations => m.annotations,
            Feature::ExtLinks => m.ext_links,
            Feature::ExtHosts => m.ext_hosts,
            Feature::Editors => m.editors,
            Feature::EditorLocations => m.editor_locations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightGroup {
    Text,
    Meta,
    SentenceFeatures,
}

impl fmt::Display for WeightGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightGroup::Text => "text",
            WeightGroup::Meta => "meta",
            WeightGroup::SentenceFeatures => "sentence_features",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigViolation {
    #[error("{group} weights sum to {sum}, expected 1")]
    WeightSumViolation { group: WeightGroup, sum: f64 },
    #[error("{field} is out of range")]
    RangeViolation { field: &'static str },
}

/// A [`SimilarityConfig`] that passed [`validate_config`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidatedConfig(SimilarityConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> SimilarityConfig {
        self.0
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = SimilarityConfig;
    fn deref(&self) -> &SimilarityConfig {
        &self.0
    }
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

pub fn validate_config(config: SimilarityConfig) -> Result<ValidatedConfig, Vec<ConfigViolation>> {
    let mut violations = Vec::new();
    let t = config.text_weights;
    let m = config.meta_weights;
    let s = config.sentence_feature_weights;
    let groups: [(WeightGroup, &[(&'static str, f64)]); 3] = [
        (
            WeightGroup::Text,
            &[
                ("text_weights.text_length", t.text_length),
                ("text_weights.text_overlap", t.text_overlap),
                ("text_weights.passage_coverage", t.passage_coverage),
            ],
        ),
        (
            WeightGroup::Meta,
            &[
                ("meta_weights.images", m.images),
                ("meta_weights.annotations", m.annotations),
                ("meta_weights.ext_links", m.ext_links),
                ("meta_weights.ext_hosts", m.ext_hosts),
                ("meta_weights.editors", m.editors),
                ("meta_weights.editor_locations", m.editor_locations),
            ],
        ),
        (
            WeightGroup::SentenceFeatures,
            &[
                ("sentence_feature_weights.cosine", s.cosine),
                ("sentence_feature_weights.entities", s.entities),
                ("sentence_feature_weights.time", s.time),
            ],
        ),
    ];
    for (group, weights) in groups {
        for &(field, w) in weights {
            if !unit_interval(w) {
                violations.push(ConfigViolation::RangeViolation { field });
            }
        }
        let sum: f64 = weights.iter().map(|&(_, w)| w).sum();
        let balanced = (sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE;
        if !balanced {
            violations.push(ConfigViolation::WeightSumViolation { group, sum });
        }
    }
    if !unit_interval(config.alpha) {
        violations.push(ConfigViolation::RangeViolation { field: "alpha" });
    }
    if !unit_interval(config.sentence_threshold) {
        violations.push(ConfigViolation::RangeViolation { field: "sentence_threshold" });
    }
    if config.snapshot_count < 2 {
        violations.push(ConfigViolation::RangeViolation { field: "snapshot_count" });
    }
    if violations.is_empty() {
        Ok(ValidatedConfig(config))
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotViolation {
    SentenceIndexContiguity,
    SentenceCharLen,
    SentenceCharsWithinText,
    EditCountPositive,
    LocationAnonymousOnly,
    TimeExpressionOrder,
}

impl SnapshotViolation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SentenceIndexContiguity => "sentence_index_contiguity",
            Self::SentenceCharLen => "sentence_char_len",
            Self::SentenceCharsWithinText => "sentence_chars_within_text",
            Self::EditCountPositive => "edit_count_positive",
            Self::LocationAnonymousOnly => "location_anonymous_only",
            Self::TimeExpressionOrder => "time_expression_order",
        }
    }
}

/// Checks snapshot invariants that the type system does not enforce.
/// Returns the violated invariants; an empty list means the snapshot is valid.
pub fn validate_snapshot(s: &Snapshot) -> Vec<SnapshotViolation> {
    let mut out = BTreeSet::new();
    if s.sentences.iter().enumerate().any(|(i, r)| r.index != i) {
        out.insert(SnapshotViolation::SentenceIndexContiguity);
    }
    if s.sentences.iter().any(|r| r.char_len != r.text.chars().count()) {
        out.insert(SnapshotViolation::SentenceCharLen);
    }
    if s.sentence_chars() > s.text_chars() {
        out.insert(SnapshotViolation::SentenceCharsWithinText);
    }
    for editor in s.editors.iter() {
        if editor.edit_count == 0 {
            out.insert(SnapshotViolation::EditCountPositive);
        }
        if editor.loc.is_some() && !editor.id.is_anonymous() {
            out.insert(SnapshotViolation::LocationAnonymousOnly);
        }
    }
    let bad_time = s
        .sentences
        .iter()
        .flat_map(|r| &r.times)
        .any(|t| t.start_day > t.end_day);
    if bad_time {
        out.insert(SnapshotViolation::TimeExpressionOrder);
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: Feature,
    pub value: f64,
    /// False when neither side carries any evidence for the feature.
    pub defined: bool,
}

/// Inclusive range of sentence indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn single(i: usize) -> Self {
        Self { start: i, end: i }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn covers(&self, other: &IndexRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn hull(&self, other: &IndexRange) -> IndexRange {
        IndexRange { start: self.start.min(other.start), end: self.end.max(other.end) }
    }

    /// Sentences strictly between the two ranges; zero when they touch or overlap.
    pub fn gap(&self, other: &IndexRange) -> usize {
        if self.end < other.start {
            other.start - self.end - 1
        } else if other.end < self.start {
            self.start - other.end - 1
        } else {
            0
        }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassagePair {
    pub range1: IndexRange,
    pub range2: IndexRange,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostRank {
    pub host: String,
    pub count1: u32,
    pub count2: u32,
    /// min(count1, count2); zero for one-sided hosts.
    pub overlap: u32,
    pub two_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    #[serde(with = "rfc3339")]
    pub pair_time: Timestamp,
    pub revision1: u64,
    pub revision2: u64,
    pub feature_scores: Vec<FeatureScore>,
    pub sim_text: f64,
    pub sim_meta: f64,
    pub sim: f64,
    pub text_defined: bool,
    pub meta_defined: bool,
    pub passage_pairs: Vec<PassagePair>,
    pub host_ranking: Vec<HostRank>,
}

impl SimilarityReport {
    pub fn score(&self, feature: Feature) -> Option<&FeatureScore> {
        self.feature_scores.iter().find(|s| s.feature == feature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    #[serde(with = "rfc3339")]
    pub time: Timestamp,
    pub revision1: u64,
    pub revision2: u64,
    pub sim: f64,
    pub sim_text: f64,
    pub sim_meta: f64,
    pub features: Vec<FeatureScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSeries {
    pub pair_id: String,
    pub points: Vec<TimelinePoint>,
    /// Edits per UTC calendar month, keyed `YYYY-MM`.
    pub edits1: BTreeMap<String, u32>,
    pub edits2: BTreeMap<String, u32>,
}

/// Canonical entity id for an interlanguage link group: the English title
/// when the group has an English member, otherwise `lang:title` of the
/// smallest (lang, title) member.
pub fn canonical_entity_id(members: &BTreeMap<LanguageEdition, String>) -> Option<String> {
    if let Some((_, title)) = members.iter().find(|(lang, _)| lang.is_english()) {
        return Some(title.clone());
    }
    members.iter().next().map(|(lang, title)| format!("{lang}:{title}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn lang(code: &str) -> LanguageEdition {
        LanguageEdition::new(code).unwrap()
    }

    #[test]
    fn language_codes() {
        assert!(LanguageEdition::new("en").is_ok());
        assert!(LanguageEdition::new("als").is_ok());
        assert!(LanguageEdition::new("").is_err());
        assert!(LanguageEdition::new("EN").is_err());
        assert!(LanguageEdition::new("e1").is_err());
        assert!(LanguageEdition::new("engl").is_err());
    }

    #[test]
    fn article_titles() {
        assert!(ArticleRef::new(lang("en"), "Berlin").is_ok());
        assert!(ArticleRef::new(lang("en"), "").is_err());
        assert!(ArticleRef::new(lang("en"), " Berlin").is_err());
        let parsed = ArticleRef::parse("de:Codex Aureus von St. Emmeram").unwrap();
        assert_eq!(parsed.lang.as_str(), "de");
        assert_eq!(parsed.title, "Codex Aureus von St. Emmeram");
        let bad: Result<ArticleRef, _> = serde_json::from_str(r#"{"lang":"en","title":""}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn default_config_is_valid_and_matches_tables() {
        let cfg = SimilarityConfig::default();
        assert_eq!(cfg.meta_weights.images, 0.25);
        assert_eq!(cfg.meta_weights.annotations, 0.25);
        assert_eq!(cfg.meta_weights.ext_links, 0.125);
        assert_eq!(cfg.text_weights.text_length, 1.0 / 3.0);
        assert_eq!(cfg.alpha, 0.5);
        assert!(validate_config(cfg).is_ok());
    }

    #[test]
    fn text_weight_sum_violation() {
        let mut cfg = SimilarityConfig::default();
        cfg.text_weights = TextWeights { text_length: 0.5, text_overlap: 0.5, passage_coverage: 0.5 };
        let errs = validate_config(cfg).unwrap_err();
        assert_eq!(errs, vec![ConfigViolation::WeightSumViolation { group: WeightGroup::Text, sum: 1.5 }]);
    }

    #[test]
    fn alpha_range_violation() {
        let cfg = SimilarityConfig { alpha: 1.2, ..Default::default() };
        let errs = validate_config(cfg).unwrap_err();
        assert_eq!(errs, vec![ConfigViolation::RangeViolation { field: "alpha" }]);
    }

    #[test]
    fn nan_and_small_n_rejected() {
        let cfg = SimilarityConfig { sentence_threshold: f64::NAN, snapshot_count: 1, ..Default::default() };
        let errs = validate_config(cfg).unwrap_err();
        assert!(errs.contains(&ConfigViolation::RangeViolation { field: "sentence_threshold" }));
        assert!(errs.contains(&ConfigViolation::RangeViolation { field: "snapshot_count" }));
    }

    #[test]
    fn partial_config_file_fills_defaults() {
        let cfg: SimilarityConfig = toml::from_str("alpha = 0.7\nmerge_gap = 3\n").unwrap();
        assert_eq!(cfg.alpha, 0.7);
        assert_eq!(cfg.merge_gap, 3);
        assert_eq!(cfg.meta_weights, MetaWeights::default());
        assert!(toml::from_str::<SimilarityConfig>("beta = 1\n").is_err());
    }

    fn snapshot() -> Snapshot {
        let mut editors = EditorSet::new();
        editors.record_edit(&EditorId::registered("alice"));
        editors.record_edit(&EditorId::anonymous("1.2.3.4"));
        editors.set_location(&EditorId::anonymous("1.2.3.4"), Some(CountryCode::new("US").unwrap()));
        Snapshot {
            article: ArticleRef::new(lang("en"), "Berlin").unwrap(),
            revision_id: 7,
            timestamp: Utc.with_ymd_and_hms(2010, 1, 2, 3, 4, 5).unwrap(),
            text: "One two. Three.".into(),
            sentences: vec![SentenceRecord::bare(0, "One two."), SentenceRecord::bare(1, "Three.")],
            images: BTreeSet::new(),
            wiki_annotations: BTreeSet::new(),
            ext_links: BTreeSet::new(),
            ext_hosts: Multiset::new(),
            editors,
        }
    }

    #[test]
    fn well_formed_snapshot_is_ok() {
        assert!(validate_snapshot(&snapshot()).is_empty());
    }

    #[test]
    fn duplicate_sentence_index_detected() {
        let mut s = snapshot();
        s.sentences[1].index = 0;
        assert_eq!(validate_snapshot(&s), vec![SnapshotViolation::SentenceIndexContiguity]);
    }

    #[test]
    fn empty_snapshot_is_ok() {
        let mut s = snapshot();
        s.text.clear();
        s.sentences.clear();
        assert!(validate_snapshot(&s).is_empty());
    }

    #[test]
    fn registered_editor_with_location_flagged() {
        let mut s = snapshot();
        s.editors.set_location(&EditorId::registered("alice"), Some(CountryCode::new("de").unwrap()));
        assert_eq!(validate_snapshot(&s), vec![SnapshotViolation::LocationAnonymousOnly]);
    }

    #[test]
    fn editor_set_rejects_duplicates_on_read() {
        let json = r#"{"editors":[{"id":{"kind":"registered","name":"a"},"edit_count":1,"loc":null},
                                  {"id":{"kind":"registered","name":"a"},"edit_count":2,"loc":null}]}"#;
        assert!(serde_json::from_str::<EditorSet>(json).is_err());
    }

    #[test]
    fn editor_id_wire_form() {
        let json = serde_json::to_string(&EditorId::anonymous("1.2.3.4")).unwrap();
        assert_eq!(json, r#"{"kind":"anonymous","ip":"1.2.3.4"}"#);
    }

    #[test]
    fn canonical_ids() {
        let mut members = BTreeMap::new();
        members.insert(lang("de"), "Codex Aureus von St. Emmeram".to_owned());
        assert_eq!(canonical_entity_id(&members).unwrap(), "de:Codex Aureus von St. Emmeram");
        members.insert(lang("en"), "Codex Aureus of St. Emmeram".to_owned());
        assert_eq!(canonical_entity_id(&members).unwrap(), "Codex Aureus of St. Emmeram");
        members.clear();
        members.insert(lang("pt"), "B".to_owned());
        members.insert(lang("nl"), "A".to_owned());
        assert_eq!(canonical_entity_id(&members).unwrap(), "nl:A");
    }

    #[test]
    fn index_range_gap() {
        let a = IndexRange::new(0, 1);
        assert_eq!(a.gap(&IndexRange::new(2, 3)), 0);
        assert_eq!(a.gap(&IndexRange::new(4, 4)), 2);
        assert_eq!(IndexRange::new(5, 6).gap(&a), 3);
        assert_eq!(a.gap(&IndexRange::new(1, 2)), 0);
    }
}
