//! Bundled lookup tables backing the offline annotation clients.
//!
//! Each table is a JSON file under `stubs/`; a directory passed to
//! [`StubTables::load_dir`] overrides the bundled copy file by file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::AnnotateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalKind {
    DayMonthYear,
    MonthYear,
    Year,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PatternSpec {
    pub kind: TemporalKind,
    /// Regex with `{MONTH}` placeholder and named groups `day`, `month`, `year`.
    pub regex: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LanguagePatterns {
    /// Twelve lists of month names, January first.
    pub months: Vec<Vec<String>>,
    /// Tried in order; earlier patterns win overlapping spans.
    pub patterns: Vec<PatternSpec>,
}

#[derive(Debug, Clone)]
pub struct StubTables {
    /// lang → source token → English rendering (possibly several words, or empty to drop).
    pub dictionary: BTreeMap<String, BTreeMap<String, String>>,
    /// lang → surface form → lang-local article title.
    pub gazetteer: BTreeMap<String, BTreeMap<String, String>>,
    /// CIDR prefix → ISO country code.
    pub geo: BTreeMap<String, String>,
    pub abbreviations: BTreeMap<String, BTreeSet<String>>,
    pub temporal: BTreeMap<String, LanguagePatterns>,
    pub stopwords: BTreeSet<String>,
}

const DICTIONARY: &str = include_str!("../../stubs/dictionary.json");
const GAZETTEER: &str = include_str!("../../stubs/gazetteer.json");
const GEO: &str = include_str!("../../stubs/geo.json");
const ABBREVIATIONS: &str = include_str!("../../stubs/abbreviations.json");
const TEMPORAL: &str = include_str!("../../stubs/temporal-patterns.json");
const STOPWORDS: &str = include_str!("../../stubs/stopwords-en.json");

fn parse<T: DeserializeOwned>(name: &str, text: &str) -> Result<T, AnnotateError> {
    serde_json::from_str(text).map_err(|e| AnnotateError::BadStub(format!("{name}: {e}")))
}

fn load<T: DeserializeOwned>(dir: Option<&Path>, name: &str, bundled: &str) -> Result<T, AnnotateError> {
    if let Some(path) = dir.map(|d| d.join(name)).filter(|p| p.is_file()) {
        let text = fs::read_to_string(&path).map_err(|e| AnnotateError::BadStub(format!("{}: {e}", path.display())))?;
        return parse(name, &text);
    }
    parse(name, bundled)
}

impl StubTables {
    pub fn bundled() -> Self {
        Self::load(None).expect("bundled stub tables are valid")
    }

    pub fn load_dir(dir: &Path) -> Result<Self, AnnotateError> {
        Self::load(Some(dir))
    }

    fn load(dir: Option<&Path>) -> Result<Self, AnnotateError> {
        let dictionary: BTreeMap<String, BTreeMap<String, String>> = load(dir, "dictionary.json", DICTIONARY)?;
        let dictionary = dictionary
            .into_iter()
            .map(|(lang, table)| (lang, table.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect()))
            .collect();
        let abbreviations: BTreeMap<String, Vec<String>> = load(dir, "abbreviations.json", ABBREVIATIONS)?;
        let abbreviations = abbreviations
            .into_iter()
            .map(|(lang, list)| (lang, list.into_iter().map(|a| a.trim_end_matches('.').to_lowercase()).collect()))
            .collect();
        let temporal: BTreeMap<String, LanguagePatterns> = load(dir, "temporal-patterns.json", TEMPORAL)?;
        for (lang, p) in &temporal {
            if p.months.len() != 12 {
                return Err(AnnotateError::BadStub(format!("temporal-patterns.json: {lang} needs 12 months")));
            }
        }
        let stopwords: Vec<String> = load(dir, "stopwords-en.json", STOPWORDS)?;
        Ok(Self {
            dictionary,
            gazetteer: load(dir, "gazetteer.json", GAZETTEER)?,
            geo: load(dir, "geo.json", GEO)?,
            abbreviations,
            temporal,
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_parse() {
        let t = StubTables::bundled();
        assert!(t.stopwords.contains("the"));
        assert!(t.abbreviations["en"].contains("dr"));
        for lang in ["en", "de", "nl", "pt"] {
            assert!(t.temporal.contains_key(lang), "{lang}");
        }
        assert!(!t.geo.is_empty());
    }

    #[test]
    fn directory_overrides_single_file() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("geo.json"), r#"{"10.0.0.0/8": "NL"}"#).unwrap();
        let t = StubTables::load_dir(tmp.path()).unwrap();
        assert_eq!(t.geo.len(), 1);
        assert!(t.stopwords.contains("the"));
    }

    #[test]
    fn broken_override_reported() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("dictionary.json"), "{").unwrap();
        assert!(matches!(StubTables::load_dir(tmp.path()), Err(AnnotateError::BadStub(_))));
    }
}
