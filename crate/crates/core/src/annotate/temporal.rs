//! Rule-based temporal expression extraction driven by a per-language
//! pattern table.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use regex::{Captures, Regex};

use super::stubs::{LanguagePatterns, TemporalKind};
use super::AnnotateError;
use crate::model::{LanguageEdition, TimeExpression};

#[derive(Debug, Clone)]
struct CompiledLanguage {
    months: BTreeMap<String, u32>,
    patterns: Vec<(TemporalKind, Regex)>,
}

#[derive(Debug, Clone, Default)]
pub struct TemporalExtractor {
    langs: BTreeMap<String, CompiledLanguage>,
}

impl TemporalExtractor {
    pub fn new(table: &BTreeMap<String, LanguagePatterns>) -> Result<Self, AnnotateError> {
        let mut langs = BTreeMap::new();
        for (lang, spec) in table {
            let mut months = BTreeMap::new();
            for (i, names) in spec.months.iter().enumerate() {
                for name in names {
                    months.insert(name.to_lowercase(), i as u32 + 1);
                }
            }
            let mut names: Vec<&String> = months.keys().collect();
            names.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
            let alternation = names.iter().map(|n| regex::escape(n)).collect::<Vec<_>>().join("|");
            let mut patterns = Vec::new();
            for p in &spec.patterns {
                let source = format!("(?i){}", p.regex.replace("{MONTH}", &alternation));
                let re = Regex::new(&source)
                    .map_err(|e| AnnotateError::BadStub(format!("temporal pattern for {lang}: {e}")))?;
                patterns.push((p.kind, re));
            }
            langs.insert(lang.clone(), CompiledLanguage { months, patterns });
        }
        Ok(Self { langs })
    }

    /// Non-overlapping expressions in text order; more specific patterns
    /// claim their spans first.
    pub fn extract(&self, text: &str, lang: &LanguageEdition) -> Vec<TimeExpression> {
        let Some(compiled) = self.langs.get(lang.as_str()) else { return Vec::new() };
        let mut claimed: Vec<(usize, usize, TimeExpression)> = Vec::new();
        for (kind, re) in &compiled.patterns {
            for caps in re.captures_iter(text) {
                let m = caps.get(0).expect("group 0");
                if claimed.iter().any(|(s, e, _)| m.start() < *e && *s < m.end()) {
                    continue;
                }
                if let Some((start_day, end_day)) = normalize(*kind, &caps, &compiled.months) {
                    let surface = m.as_str().trim().to_owned();
                    claimed.push((m.start(), m.end(), TimeExpression { start_day, end_day, surface }));
                }
            }
        }
        claimed.sort_by_key(|(s, _, _)| *s);
        claimed.into_iter().map(|(_, _, t)| t).collect()
    }
}

fn last_day_of_month(year: i32, month: u32) -> Option<NaiveDate> {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    NaiveDate::from_ymd_opt(ny, nm, 1)?.pred_opt()
}

fn normalize(kind: TemporalKind, caps: &Captures, months: &BTreeMap<String, u32>) -> Option<(NaiveDate, NaiveDate)> {
    let year: i32 = caps.name("year")?.as_str().parse().ok()?;
    let month = || months.get(&caps.name("month")?.as_str().to_lowercase()).copied();
    match kind {
        TemporalKind::Year => Some((NaiveDate::from_ymd_opt(year, 1, 1)?, NaiveDate::from_ymd_opt(year, 12, 31)?)),
        TemporalKind::MonthYear => {
            let m = month()?;
            let first = NaiveDate::from_ymd_opt(year, m, 1)?;
            Some((first, last_day_of_month(first.year(), m)?))
        }
        TemporalKind::DayMonthYear => {
            let day: u32 = caps.name("day")?.as_str().parse().ok()?;
            let d = NaiveDate::from_ymd_opt(year, month()?, day)?;
            Some((d, d))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extractor() -> TemporalExtractor {
        TemporalExtractor::new(&crate::annotate::StubTables::bundled().temporal).unwrap()
    }

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn ranges(text: &str, lang: &str) -> Vec<(NaiveDate, NaiveDate)> {
        extractor()
            .extract(text, &LanguageEdition::new(lang).unwrap())
            .into_iter()
            .map(|t| (t.start_day, t.end_day))
            .collect()
    }

    #[test]
    fn month_year() {
        let found = extractor().extract("created in October 2003", &LanguageEdition::new("en").unwrap());
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].start_day, found[0].end_day), (d(2003, 10, 1), d(2003, 10, 31)));
        assert_eq!(found[0].surface, "October 2003");
    }

    #[test]
    fn bare_year() {
        assert_eq!(ranges("2008", "en"), vec![(d(2008, 1, 1), d(2008, 12, 31))]);
    }

    #[test]
    fn nothing() {
        assert!(ranges("no dates here", "en").is_empty());
    }

    #[test]
    fn day_month_year_variants() {
        assert_eq!(ranges("on 3 October 1990", "en"), vec![(d(1990, 10, 3), d(1990, 10, 3))]);
        assert_eq!(ranges("on October 3, 1990", "en"), vec![(d(1990, 10, 3), d(1990, 10, 3))]);
        assert_eq!(ranges("am 3. Oktober 1990", "de"), vec![(d(1990, 10, 3), d(1990, 10, 3))]);
        assert_eq!(ranges("op 3 oktober 1990", "nl"), vec![(d(1990, 10, 3), d(1990, 10, 3))]);
        assert_eq!(ranges("em 3 de outubro de 1990", "pt"), vec![(d(1990, 10, 3), d(1990, 10, 3))]);
    }

    #[test]
    fn leap_february_and_invalid_dates() {
        assert_eq!(ranges("Februar 2008", "de"), vec![(d(2008, 2, 1), d(2008, 2, 29))]);
        // an impossible day falls back to the enclosing month
        assert_eq!(ranges("31 February 2009", "en"), vec![(d(2009, 2, 1), d(2009, 2, 28))]);
    }

    #[test]
    fn several_in_order() {
        let r = ranges("Between 1989 and December 1992.", "en");
        assert_eq!(r, vec![(d(1989, 1, 1), d(1989, 12, 31)), (d(1992, 12, 1), d(1992, 12, 31))]);
    }

    #[test]
    fn unknown_language_yields_nothing() {
        assert!(ranges("2008", "fr").is_empty());
    }
}
